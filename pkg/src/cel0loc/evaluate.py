"""Emitter extraction, ground-truth matching, and localization metrics.

Matching is maximum-cardinality bipartite matching (augmenting paths in
fixed index order, so results are deterministic), with an edge whenever
the Euclidean distance is strictly below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .grids import Image
from .simulate import Emitter, EmitterList


@dataclass(frozen=True)
class MatchTolerance:
    """Match radius in HR pixels; standard values are 2, 4, and 6."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be nonnegative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def extract_emitters(x: Image, threshold_rel: float = 0.1,
                     min_distance: float = 1.0) -> EmitterList:
    """Detect emitters at 8-neighborhood local maxima above a relative
    threshold. A plateau (connected equal-valued maximum) yields a single
    emitter at its smallest (row, col). min_distance > 1 additionally
    suppresses peaks within that radius of a stronger peak."""
    if not 0 < threshold_rel < 1:
        raise ValidationError(
            f"threshold_rel must be in (0, 1), got {threshold_rel}")
    if min_distance < 1:
        raise ValidationError(
            f"min_distance must be >= 1, got {min_distance}")
    v = x.values
    peak = v.max(initial=0.0)
    if peak <= 0:
        return EmitterList(1, ())
    thr = threshold_rel * peak
    # pixels with no strictly greater 8-neighbor
    is_max = v >= ndimage.maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    mask = is_max & (v >= thr) & (v > 0)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    candidates = []  # (value, row, col)
    for lbl in range(1, n + 1):
        rows, cols = np.nonzero(labels == lbl)
        order = np.lexsort((cols, rows))
        r, c = int(rows[order[0]]), int(cols[order[0]])
        candidates.append((float(v[r, c]), r, c))
    # strongest first; ties resolved toward the smaller (row, col)
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
    kept: list[tuple[float, int, int]] = []
    for val, r, c in candidates:
        if min_distance > 1 and any(
                (r - kr) ** 2 + (c - kc) ** 2 < min_distance**2
                for _, kr, kc in kept):
            continue
        kept.append((val, r, c))
    kept.sort(key=lambda t: (t[1], t[2]))
    px = x.grid.pixel_size
    ems = tuple(Emitter((c + 0.5) * px, (r + 0.5) * px, val)
                for val, r, c in kept)
    return EmitterList(1, ems)


def _max_matching(adjacency: list[list[int]], n_right: int) -> int:
    """Maximum-cardinality bipartite matching via augmenting paths scanned
    in index order."""
    match_right = [-1] * n_right

    def augment(u: int, seen: list[bool]) -> bool:
        for w in adjacency[u]:
            if not seen[w]:
                seen[w] = True
                if match_right[w] < 0 or augment(match_right[w], seen):
                    match_right[w] = u
                    return True
        return False

    matched = 0
    for u in range(len(adjacency)):
        if augment(u, [False] * n_right):
            matched += 1
    return matched


def match_emitters(gt: EmitterList, est: EmitterList, tol: MatchTolerance,
                   pixel_size: float, hr_pixels: int | None = None
                   ) -> ConfusionCounts:
    """Confusion counts from optimal matching under the strict distance
    tolerance delta * pixel_size (nm). TN counts the HR pixels carrying
    neither a true nor a claimed molecule: hr_pixels - tp - fp - fn."""
    if not pixel_size > 0:
        raise ValidationError(f"pixel_size must be > 0, got {pixel_size}")
    radius = tol.delta * pixel_size
    adjacency = []
    for g in gt.emitters:
        row = [j for j, e in enumerate(est.emitters)
               if (g.x - e.x) ** 2 + (g.y - e.y) ** 2 < radius**2]
        adjacency.append(row)
    tp = _max_matching(adjacency, len(est.emitters))
    fp = len(est.emitters) - tp
    fn = len(gt.emitters) - tp
    tn = 0 if hr_pixels is None else max(hr_pixels - tp - fp - fn, 0)
    return ConfusionCounts(tp, fp, fn, tn)


def metrics(counts: ConfusionCounts) -> dict[str, float]:
    """Jaccard / sensitivity / specificity percentages. Empty denominators
    (no molecules at all, or no negatives) score as perfect agreement."""
    def pct(num: int, den: int) -> float:
        return 100.0 if den == 0 else 100.0 * num / den

    return {
        "jaccard": pct(counts.tp, counts.tp + counts.fp + counts.fn),
        "sensitivity": pct(counts.tp, counts.tp + counts.fn),
        "specificity": pct(counts.tn, counts.tn + counts.fp),
    }


@dataclass(frozen=True)
class MetricsReport:
    tolerances: tuple[float, ...]
    per_tolerance: dict       # delta -> {"counts": ..., "metrics": ...}
    per_frame: dict           # delta -> frame_id -> {"counts", "metrics"}

    def to_dict(self) -> dict:
        def counts_dict(c: ConfusionCounts) -> dict:
            return {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}

        return {
            "tolerances": list(self.tolerances),
            "per_tolerance": {
                str(d): {"counts": counts_dict(v["counts"]),
                         "metrics": v["metrics"]}
                for d, v in self.per_tolerance.items()},
            "per_frame": {
                str(d): {str(fid): {"counts": counts_dict(v["counts"]),
                                    "metrics": v["metrics"]}
                         for fid, v in frames.items()}
                for d, frames in self.per_frame.items()},
        }


def evaluate_stack(gt_frames: list[EmitterList], est_frames: list[EmitterList],
                   tolerances: tuple[float, ...], pixel_size: float,
                   hr_pixels: int, macro: bool = False) -> MetricsReport:
    """Score estimated frames against ground truth for each tolerance.

    Counts are summed across frames before computing ratios (micro
    averaging); macro=True averages per-frame metrics instead.
    """
    gt_by_id = {f.frame_id: f for f in gt_frames}
    est_by_id = {f.frame_id: f for f in est_frames}
    missing = sorted(set(gt_by_id) - set(est_by_id))
    if missing:
        raise ValidationError(f"estimate stack is missing frames {missing}")

    per_tolerance, per_frame = {}, {}
    for delta in tolerances:
        tol = MatchTolerance(delta)
        frames = {}
        total = ConfusionCounts(0, 0, 0, 0)
        for fid in sorted(gt_by_id):
            counts = match_emitters(gt_by_id[fid], est_by_id[fid], tol,
                                    pixel_size, hr_pixels=hr_pixels)
            frames[fid] = {"counts": counts, "metrics": metrics(counts)}
            total = total + counts
        if macro:
            keys = ("jaccard", "sensitivity", "specificity")
            agg = {k: float(np.mean([frames[f]["metrics"][k] for f in frames]))
                   for k in keys}
        else:
            agg = metrics(total)
        per_tolerance[delta] = {"counts": total, "metrics": agg}
        per_frame[delta] = frames
    return MetricsReport(tuple(tolerances), per_tolerance, per_frame)
