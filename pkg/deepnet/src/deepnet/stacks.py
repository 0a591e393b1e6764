"""Reader/writer for the shared on-disk stack format.

A stack is a pair of files: <prefix>.raw (little-endian float32, row-major,
frames concatenated) and <prefix>.json with
{"width": int, "height": int, "frames": int, "pixel_size_nm": float}.
This mirrors the localization toolkit's format so the two packages
interoperate purely through files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CodecError


def _paths(prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    if prefix.suffix in (".raw", ".json"):
        prefix = prefix.with_suffix("")
    # append, don't with_suffix(): a dotted prefix like "run_v0.001" must
    # not lose its tail
    return (prefix.with_name(prefix.name + ".raw"),
            prefix.with_name(prefix.name + ".json"))


def read_stack(prefix: str | Path) -> tuple[np.ndarray, float]:
    """Returns (frames, pixel_size_nm); frames has shape (n, height, width)."""
    raw_path, json_path = _paths(prefix)
    try:
        meta = json.loads(json_path.read_text())
        width, height = int(meta["width"]), int(meta["height"])
        n_frames = int(meta["frames"])
        pixel_size = float(meta["pixel_size_nm"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CodecError(f"cannot read sidecar {json_path}: {exc}") from exc
    try:
        blob = raw_path.read_bytes()
    except OSError as exc:
        raise CodecError(f"cannot read {raw_path}: {exc}") from exc
    expected = 4 * width * height * n_frames
    if len(blob) != expected:
        raise CodecError(f"{raw_path}: expected {expected} bytes, "
                         f"got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4").reshape(n_frames, height, width)
    if not np.all(np.isfinite(data)):
        raise CodecError(f"{raw_path} contains NaN or Inf pixel values")
    return data.astype(np.float64), pixel_size


def write_stack(prefix: str | Path, frames: np.ndarray,
                pixel_size_nm: float) -> None:
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise CodecError(f"frames must be (n, h, w), got {frames.shape}")
    if not np.all(np.isfinite(frames)):
        raise CodecError("refusing to write NaN or Inf pixel values")
    raw_path, json_path = _paths(prefix)
    raw_path.write_bytes(frames.astype("<f4").tobytes())
    n, h, w = frames.shape
    meta = {"frames": n, "height": h, "pixel_size_nm": pixel_size_nm,
            "width": w}
    json_path.write_text(
        json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")


def read_norms(path: str | Path) -> np.ndarray:
    """Column norms exported by the localization toolkit's psf-norms command:
    a JSON object with width/height and a row-major "norms" list."""
    try:
        obj = json.loads(Path(path).read_text())
        width, height = int(obj["width"]), int(obj["height"])
        norms = np.asarray(obj["norms"], dtype=np.float64)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CodecError(f"cannot read norms file {path}: {exc}") from exc
    if norms.size != width * height:
        raise CodecError(f"{path}: {norms.size} norms for a "
                         f"{width}x{height} grid")
    if np.any(norms < 0) or not np.all(np.isfinite(norms)):
        raise CodecError(f"{path}: norms must be finite and nonnegative")
    return norms.reshape(height, width)
