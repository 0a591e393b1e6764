"""On-disk formats: raw float32 image stacks with JSON sidecars, emitter
CSVs, and canonical JSON helpers.

A stack lives in two files, <prefix>.raw (little-endian float32, row-major,
frames concatenated) and <prefix>.json holding
{"width": int, "height": int, "frames": int, "pixel_size_nm": float}.
Round-trips are byte-identical for canonical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import CodecError
from .grids import Image, ImageGrid
from .simulate import Emitter, EmitterList

EMITTER_CSV_HEADER = ["frame", "x_nm", "y_nm", "intensity"]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CodecError(f"cannot read JSON {path}: {exc}") from exc


def _stack_paths(prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    if prefix.suffix in (".raw", ".json"):
        prefix = prefix.with_suffix("")
    # append, don't with_suffix(): a dotted prefix like "run_v0.001" must
    # not lose its tail
    return (prefix.with_name(prefix.name + ".raw"),
            prefix.with_name(prefix.name + ".json"))


def write_stack(prefix: str | Path, frames: list[Image]) -> tuple[Path, Path]:
    if not frames:
        raise CodecError("cannot write an empty stack")
    grid = frames[0].grid
    for f in frames[1:]:
        if f.grid != grid:
            raise CodecError("stack frames are on different grids")
    raw_path, json_path = _stack_paths(prefix)
    data = np.stack([f.values for f in frames]).astype("<f4")
    raw_path.write_bytes(data.tobytes())
    write_json(json_path, {"width": grid.width, "height": grid.height,
                           "frames": len(frames),
                           "pixel_size_nm": grid.pixel_size})
    return raw_path, json_path


def read_stack(prefix: str | Path) -> list[Image]:
    raw_path, json_path = _stack_paths(prefix)
    meta = read_json(json_path)
    try:
        width, height = int(meta["width"]), int(meta["height"])
        n_frames = int(meta["frames"])
        pixel_size = float(meta["pixel_size_nm"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CodecError(f"malformed sidecar {json_path}: {exc}") from exc
    grid = ImageGrid(width, height, pixel_size)
    expected = 4 * width * height * n_frames
    try:
        blob = raw_path.read_bytes()
    except OSError as exc:
        raise CodecError(f"cannot read {raw_path}: {exc}") from exc
    if len(blob) != expected:
        raise CodecError(
            f"{raw_path}: expected {expected} bytes "
            f"({n_frames} x {height} x {width} float32), got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4").reshape(n_frames, height, width)
    if not np.all(np.isfinite(data)):
        raise CodecError(f"{raw_path} contains NaN or Inf pixel values")
    return [Image(grid, data[i].astype(np.float64)) for i in range(n_frames)]


def write_emitter_csv(path: str | Path, frames: list[EmitterList]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EMITTER_CSV_HEADER)
        for frame in frames:
            for em in frame.emitters:
                writer.writerow([frame.frame_id, repr(em.x), repr(em.y),
                                 repr(em.intensity)])


def read_emitter_csv(path: str | Path) -> list[EmitterList]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != EMITTER_CSV_HEADER:
                raise CodecError(
                    f"{path}: bad CSV header {header}, "
                    f"expected {EMITTER_CSV_HEADER}")
            by_frame: dict[int, list[Emitter]] = {}
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    fid = int(row[0])
                    em = Emitter(float(row[1]), float(row[2]), float(row[3]))
                except (IndexError, ValueError) as exc:
                    raise CodecError(f"{path}:{lineno}: bad row {row}") from exc
                by_frame.setdefault(fid, []).append(em)
    except OSError as exc:
        raise CodecError(f"cannot read {path}: {exc}") from exc
    return [EmitterList(fid, tuple(by_frame[fid])) for fid in sorted(by_frame)]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
