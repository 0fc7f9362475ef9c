"""Successive shortest-paths baseline and an exhaustive partition oracle.

Both work on sequences where every track holds exactly one detection per
frame and links only consecutive frames.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .detections import Detection, toy_appearance_dissimilarity
from .paths import SimpleDag, dag_shortest_path

log = logging.getLogger(__name__)

MAX_ORACLE_DETECTIONS = 18

Dissimilarity = Callable[[float, float], float]


def _norm(a, b) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


@dataclass(frozen=True)
class BaselineCosts:
    """Consecutive-pair cost: position distance plus confidence-gated appearance.

    ``lam`` scales the dissimilarity so that it is commensurate with
    distances in world units.
    """

    w_fix: float = 10.0
    dissimilarity: Dissimilarity = toy_appearance_dissimilarity
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.w_fix < 0 or self.lam < 0:
            raise ValueError("w_fix and lam must be >= 0")

    def spatial(self, a: Detection, b: Detection) -> float:
        return _norm(b.y, a.y)

    def appearance(self, a: Detection, b: Detection) -> float:
        total = 0.0
        for fa, fb, ca, cb in zip(a.features, b.features, a.confidences, b.confidences):
            cc = ca * cb
            total += cc * self.lam * self.dissimilarity(fa, fb) + (1.0 - cc) * self.w_fix
        return total

    def total(self, a: Detection, b: Detection) -> float:
        return self.spatial(a, b) + self.appearance(a, b)


class ConsecutiveCost:
    """Track cost summing only links between temporally adjacent members."""

    def __init__(self, costs: BaselineCosts = BaselineCosts()) -> None:
        self.costs = costs

    def __call__(self, track: Sequence[Detection]) -> float:
        return sum(self.costs.total(a, b) for a, b in zip(track, track[1:]))


class PairwiseCost:
    """Track cost over every time-causal pair of members.

    Positions only enter through adjacent members (their relevance fades
    with time), while confident appearance disagreement is charged between
    all pairs, however far apart.
    """

    def __init__(self, appearance_weight: float = 100.0, dissimilarity: Dissimilarity = toy_appearance_dissimilarity) -> None:
        self.appearance_weight = appearance_weight
        self.dissimilarity = dissimilarity

    def __call__(self, track: Sequence[Detection]) -> float:
        total = sum(_norm(b.y, a.y) for a, b in zip(track, track[1:]))
        for a, b in itertools.combinations(track, 2):
            for fa, fb, ca, cb in zip(a.features, b.features, a.confidences, b.confidences):
                total += self.appearance_weight * ca * cb * self.dissimilarity(fa, fb)
        return total


@dataclass
class KspResult:
    tracks: List[List[Detection]]
    costs: List[float]
    shortfall: bool = False

    @property
    def cost(self) -> float:
        return sum(self.costs)


def ksp_track(frames: Sequence[Sequence[Detection]], k: int, costs: BaselineCosts = BaselineCosts()) -> KspResult:
    """Extract up to ``k`` first-to-last-frame paths, removing the nodes of each.

    Edges only join consecutive frames. This is the greedy node-deleting
    variant of k-shortest paths, not a min-cost flow with residual edges.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    frames = [list(f) for f in frames]
    if not frames:
        return KspResult([], [], shortfall=True)
    ids = {}
    nodes: List[Detection] = []
    for t, frame in enumerate(frames):
        for j, d in enumerate(frame):
            ids[(t, j)] = len(nodes)
            nodes.append(d)
    source, sink = -1, len(nodes)
    edges = [(source, ids[(0, j)], 0.0) for j in range(len(frames[0]))]
    for t in range(len(frames) - 1):
        for i, a in enumerate(frames[t]):
            for j, b in enumerate(frames[t + 1]):
                edges.append((ids[(t, i)], ids[(t + 1, j)], costs.total(a, b)))
    last = len(frames) - 1
    edges += [(ids[(last, j)], sink, 0.0) for j in range(len(frames[last]))]
    dag = SimpleDag(edges, nodes=[source, sink])

    removed: set = set()
    tracks, path_costs = [], []
    for _ in range(k):
        path = dag_shortest_path(dag, source, frozenset([sink]), lambda n: 0.0, frozenset(removed))
        if path is None:
            log.info("only %d of %d disjoint paths exist", len(tracks), k)
            return KspResult(tracks, path_costs, shortfall=True)
        inner = path.nodes[1:-1]
        removed.update(inner)
        tracks.append([nodes[n] for n in inner])
        path_costs.append(path.cost)
    return KspResult(tracks, path_costs)


@dataclass
class Partition:
    tracks: List[List[Detection]]
    cost: float


def brute_force_partition(
    frames: Sequence[Sequence[Detection]],
    k: int,
    cost_model: Callable[[Sequence[Detection]], float],
) -> Partition:
    """Exhaustively find the cheapest split into ``k`` one-detection-per-frame tracks."""
    frames = [list(f) for f in frames]
    total = sum(len(f) for f in frames)
    if total > MAX_ORACLE_DETECTIONS:
        raise ValueError(f"{total} detections exceed the enumeration bound of {MAX_ORACLE_DETECTIONS}")
    if any(len(f) != k for f in frames):
        raise ValueError(f"every frame must hold exactly {k} detections")
    if not frames:
        return Partition([[] for _ in range(k)], 0.0)

    best: Optional[Partition] = None
    perms = list(itertools.permutations(range(k)))
    for choice in itertools.product(perms, repeat=len(frames) - 1):
        tracks = [[frames[0][i]] for i in range(k)]
        for t, perm in enumerate(choice, start=1):
            for i in range(k):
                tracks[i].append(frames[t][perm[i]])
        cost = sum(cost_model(tr) for tr in tracks)
        if best is None or cost < best.cost - 1e-12:
            best = Partition(tracks, cost)
    return best


def partition_cost(tracks: Sequence[Sequence[Detection]], cost_model: Callable[[Sequence[Detection]], float]) -> float:
    return sum(cost_model(tr) for tr in tracks)
