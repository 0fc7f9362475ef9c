"""CLEAR MOT scoring on point positions."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .detections import Position

MISS = "miss"
FALSE_POSITIVE = "fp"
SWITCH = "switch"
REINIT = "reinit"


@dataclass
class MotReport:
    gt_count: int = 0
    misses: int = 0
    false_positives: int = 0
    switches: int = 0
    reinitializations: int = 0
    matches: int = 0
    distance_sum: float = 0.0
    events: List[Tuple[int, str, Optional[Hashable], Optional[Hashable]]] = field(default_factory=list, repr=False)

    @property
    def errors(self) -> int:
        return self.misses + self.false_positives + self.switches + self.reinitializations

    @property
    def mota(self) -> float:
        if self.gt_count == 0:
            return math.nan
        return 1.0 - self.errors / self.gt_count

    @property
    def motp(self) -> float:
        return self.distance_sum / self.matches if self.matches else 0.0

    def summary(self) -> Dict[str, float]:
        return {
            "gt_count": self.gt_count,
            "misses": self.misses,
            "false_positives": self.false_positives,
            "switches": self.switches,
            "reinitializations": self.reinitializations,
            "mota": self.mota,
            "motp": self.motp,
        }


def _by_frame(tracks: Mapping[Hashable, Sequence[Tuple[int, Position]]]) -> Dict[int, Dict[Hashable, Position]]:
    frames: Dict[int, Dict[Hashable, Position]] = defaultdict(dict)
    for tid, points in tracks.items():
        for t, y in points:
            if tid in frames[t]:
                raise ValueError(f"track {tid!r} has two positions at frame {t}")
            frames[t][tid] = tuple(y)
    return frames


def _dist(a: Position, b: Position) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def evaluate(
    gt: Mapping[Hashable, Sequence[Tuple[int, Position]]],
    hyp: Mapping[Hashable, Sequence[Tuple[int, Position]]],
    match_radius: float,
    log_events: bool = False,
) -> MotReport:
    """Tally misses, false positives, switches and reinitialisations frame by frame.

    Correspondences from the previous frame are kept while they stay within
    ``match_radius``; the remaining objects are paired by a minimum total
    distance assignment. When a ground-truth target changes hypothesis, the
    change is a switch if the new hypothesis was last bound to another
    target, otherwise a reinitialisation.
    """
    if match_radius < 0:
        raise ValueError("match_radius must be >= 0")
    gt_frames = _by_frame(gt)
    hyp_frames = _by_frame(hyp)
    report = MotReport()
    mapping: Dict[Hashable, Hashable] = {}
    owner: Dict[Hashable, Hashable] = {}

    for t in sorted(set(gt_frames) | set(hyp_frames)):
        g_objs = gt_frames.get(t, {})
        h_objs = hyp_frames.get(t, {})
        report.gt_count += len(g_objs)
        matched: Dict[Hashable, Hashable] = {}
        used = set()
        for g_id in sorted(g_objs, key=repr):
            h_id = mapping.get(g_id)
            if h_id is None or h_id not in h_objs or h_id in used or owner.get(h_id) != g_id:
                continue
            d = _dist(g_objs[g_id], h_objs[h_id])
            if d <= match_radius:
                matched[g_id] = h_id
                used.add(h_id)

        free_g = [g for g in sorted(g_objs, key=repr) if g not in matched]
        free_h = [h for h in sorted(h_objs, key=repr) if h not in used]
        if free_g and free_h:
            cost = np.array([[_dist(g_objs[g], h_objs[h]) for h in free_h] for g in free_g])
            big = 1e6 * (1.0 + cost.max())
            gated = np.where(cost <= match_radius, cost, big)
            rows, cols = linear_sum_assignment(gated)
            for r, c in zip(rows, cols):
                if gated[r, c] >= big:
                    continue
                g_id, h_id = free_g[r], free_h[c]
                prev = mapping.get(g_id)
                if prev is not None and prev != h_id:
                    last_owner = owner.get(h_id)
                    if last_owner is not None and last_owner != g_id:
                        report.switches += 1
                        kind = SWITCH
                    else:
                        report.reinitializations += 1
                        kind = REINIT
                    if log_events:
                        report.events.append((t, kind, g_id, h_id))
                matched[g_id] = h_id
                used.add(h_id)

        for g_id, h_id in matched.items():
            mapping[g_id] = h_id
            owner[h_id] = g_id
            report.matches += 1
            report.distance_sum += _dist(g_objs[g_id], h_objs[h_id])
        missed = [g for g in g_objs if g not in matched]
        spurious = [h for h in h_objs if h not in used]
        report.misses += len(missed)
        report.false_positives += len(spurious)
        if log_events:
            report.events.extend((t, MISS, g, None) for g in sorted(missed, key=repr))
            report.events.extend((t, FALSE_POSITIVE, None, h) for h in sorted(spurious, key=repr))
    return report


def filter_short(tracks: Mapping[Hashable, Sequence[Tuple[int, Position]]], min_length: int) -> Dict:
    """Drop hypothesis tracks with fewer than ``min_length`` points."""
    return {k: list(v) for k, v in tracks.items() if len(v) >= min_length}
