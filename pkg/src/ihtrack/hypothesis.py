"""Key-node hypothesis testing: appearance overlay, best paths, two-stage validation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .detections import toy_appearance_dissimilarity
from .graph import GraphError, GraphView, Tracklet, TrackletGraph
from .paths import TOL, CompactDag, Path, PathQuery, diverging_alternatives, shared_prefix, shortest_paths

PerFeature = Union[float, Tuple[float, ...]]

# windows with at least this many nodes get their overlay computed in bulk
BULK_OVERLAY_MIN_NODES = 256

VALIDATED = "validated"
REJECTED = "rejected"


def _at(value: PerFeature, i: int) -> float:
    return value[i] if isinstance(value, tuple) else value


@dataclass(frozen=True)
class AppearanceParams:
    """Weights of the appearance overlay.

    ``lam`` and ``w_fix`` are either one value for every feature or a tuple
    with one entry per feature. ``metric`` is ``"l1"`` for plain feature
    values or ``"angular"`` for features expressed in degrees. With
    ``extremity > 0`` each tracklet is described by the appearance of its
    ``extremity`` detections facing the key-node instead of its whole mean.
    """

    lam: PerFeature = 1.0
    w_fix: PerFeature = 5.0
    c_min: float = 20.0
    c_max: float = 100.0
    metric: str = "l1"
    extremity: int = 0

    def __post_init__(self) -> None:
        if not self.c_min < self.c_max:
            raise ValueError("c_min must be < c_max")
        for name in ("lam", "w_fix"):
            value = getattr(self, name)
            values = value if isinstance(value, tuple) else (value,)
            if any(v < 0 for v in values):
                raise ValueError(f"{name} must be >= 0")
        if self.metric not in ("l1", "angular"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.extremity < 0:
            raise ValueError("extremity must be >= 0")


@dataclass(frozen=True)
class ValidationParams:
    """Ambiguity thresholds and window sizing for one hypothesis test.

    ``mode="always"`` skips both validation stages and accepts the best
    path as is. ``fixed_window`` replaces the adaptive ``kappa * |key|``
    window size with a constant number of frames.
    """

    k1: float = 5.0
    k2: float = 1.0 / 3.0
    kappa: float = 5.0
    mode: str = "conservative"
    fixed_window: Optional[float] = None
    truncate: bool = True

    def __post_init__(self) -> None:
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0 < self.k2 <= 1:
            raise ValueError("k2 must lie in (0, 1]")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.mode not in ("conservative", "always"):
            raise ValueError(f"unknown validation mode {self.mode!r}")
        if self.fixed_window is not None and self.fixed_window <= 0:
            raise ValueError("fixed_window must be > 0")


@dataclass(frozen=True)
class HypothesisResult:
    verdict: str
    path: Tuple[int, ...]
    best_cost: float
    second_cost: float
    window: Tuple[float, float]
    direction: int
    stage: str = ""

    @property
    def validated(self) -> bool:
        return self.verdict == VALIDATED

    def chain(self) -> Tuple[int, ...]:
        """Path nodes in increasing time order."""
        return self.path if self.direction > 0 else tuple(reversed(self.path))


def reliability(conf_mass: float, params: AppearanceParams) -> float:
    """Clamped linear ramp from accumulated confidence to [0, 1]."""
    if conf_mass <= params.c_min:
        return 0.0
    if conf_mass >= params.c_max:
        return 1.0
    return (conf_mass - params.c_min) / (params.c_max - params.c_min)


def _feature_distance(a: float, b: float, metric: str) -> float:
    if metric == "angular":
        return toy_appearance_dissimilarity(a, b)
    return abs(a - b)


def _appearance(tr: Tracklet, params: AppearanceParams, head: bool):
    if params.extremity:
        return tr.extremity_appearance(params.extremity, head)
    return tr.mean_features, tr.conf_mass


def dissimilarity_increment(
    key: Tracklet, v: Tracklet, params: AppearanceParams, direction: int = 1
) -> float:
    """Extra inner cost of ``v`` under the hypothesis that ``key`` defines the target look."""
    key_f, key_c = _appearance(key, params, head=direction < 0)
    v_f, v_c = _appearance(v, params, head=direction > 0)
    total = 0.0
    for i in range(len(key_f)):
        a = reliability(key_c[i], params) * reliability(v_c[i], params)
        total += a * _at(params.lam, i) * _feature_distance(key_f[i], v_f[i], params.metric)
        total += (1.0 - a) * _at(params.w_fix, i)
    return total


class AppearanceOverlay:
    """Per-query node hook returning D(v); zero on the key-node itself."""

    def __init__(self, graph: TrackletGraph, key: int, params: AppearanceParams, direction: int) -> None:
        self.graph = graph
        self.key = key
        self.params = params
        self.direction = direction
        key_f, key_c = _appearance(graph.nodes[key], params, head=direction < 0)
        self.key_f = key_f
        self.key_alpha = [reliability(c, params) for c in key_c]
        n = len(key_f)
        self._lam = [_at(params.lam, i) for i in range(n)]
        self._w_fix = [_at(params.w_fix, i) for i in range(n)]
        self._memo: dict = {}
        self.snapshot: Optional[_Snapshot] = None

    def __call__(self, n: int) -> float:
        value = self._memo.get(n)
        if value is None:
            value = self._memo[n] = self._compute(n)
        return value

    def bulk(self, dag: CompactDag) -> Optional[np.ndarray]:
        """D(v) of every node of ``dag`` at once, or ``None`` when only the per-node path applies.

        Uses the same operation order as the per-node computation, so the
        values are identical.
        """
        snap = self.snapshot
        if snap is None or self.params.metric != "l1" or len(dag) < BULK_OVERLAY_MIN_NODES:
            return None
        if dag is snap.dag:
            flip = False
        elif dag is snap.dag.reverse():
            flip = True
        else:
            return None
        p = self.params
        feats, mass = snap.appearance(p)
        total = np.zeros(len(dag))
        for i, ka in enumerate(self.key_alpha):
            if ka > 0:
                c = mass[i]
                a = np.where(c >= p.c_max, ka * 1.0, np.where(c > p.c_min, ka * ((c - p.c_min) / (p.c_max - p.c_min)), 0.0))
                total = total + np.where(a > 0, a * self._lam[i] * np.abs(self.key_f[i] - feats[i]), 0.0)
                total = total + (1.0 - a) * self._w_fix[i]
            else:
                total = total + (1.0 - 0.0) * self._w_fix[i]
        total[snap.dag.index[self.key]] = 0.0
        return total[::-1] if flip else total

    def _compute(self, n: int) -> float:
        if n == self.key:
            return 0.0
        p = self.params
        c_min, c_max = p.c_min, p.c_max
        angular = p.metric == "angular"
        v_f, v_c = _appearance(self.graph.nodes[n], p, head=self.direction > 0)
        total = 0.0
        for i, ka in enumerate(self.key_alpha):
            a = 0.0
            if ka > 0:
                c = v_c[i]
                if c >= c_max:
                    a = ka * 1.0
                elif c > c_min:
                    a = ka * ((c - c_min) / (c_max - c_min))
            if a > 0:
                fa, fb = self.key_f[i], v_f[i]
                d = toy_appearance_dissimilarity(fa, fb) if angular else abs(fa - fb)
                total += a * self._lam[i] * d
            total += (1.0 - a) * self._w_fix[i]
        return total


def frontier_sinks(view: GraphView, source: int, dag: Optional[CompactDag] = None) -> frozenset:
    """Nodes where a path may terminate: at the far end of the view or at a dead end.

    The far end is the latest observed end time inside the window for a
    forward view, the earliest start time for a reversed one. ``dag`` is
    an optional compacted copy of ``view`` used for the dead-end check.
    """
    return _path_ends(view, dag) - {source}


def _path_ends(view: GraphView, dag: Optional[CompactDag] = None) -> frozenset:
    dag = dag if dag is not None else CompactDag.from_view(view)
    onward, index = dag.has_successors(), dag.index
    nodes = view.graph.nodes
    members = view.nodes
    t1, t2 = view.window if view.window is not None else (-math.inf, math.inf)
    if view.reversed:
        frontier = max(t1, min(nodes[n].t_start for n in members))
        return frozenset(n for n in members if nodes[n].t_start <= frontier or not onward[index[n]])
    frontier = min(t2, max(nodes[n].t_end for n in members))
    return frozenset(n for n in members if nodes[n].t_end >= frontier or not onward[index[n]])


class _Snapshot:
    """Compacted window shared by every key-node whose test uses the same window.

    It stays valid for as long as no mutation touches the window.
    """

    __slots__ = ("graph", "window", "direction", "version", "view", "dag", "_ends", "_appearance")

    def __init__(self, g: TrackletGraph, window: Tuple[float, float], direction: int) -> None:
        self.graph, self.window, self.direction = g, window, direction
        self.version = g.version
        view = g.window(*window)
        self.view = view.reverse() if direction < 0 else view
        self.dag = CompactDag.from_view(self.view) if len(self.view) >= 2 else None
        self._ends: dict = {}
        self._appearance: dict = {}

    def valid_for(self, g: TrackletGraph, window: Tuple[float, float]) -> bool:
        if not (self.graph is g and self.window == window and g.unchanged_since(self.version, *window)):
            return False
        if self.version != g.version:
            # same members and edges; only the staleness stamp moves on
            self.version = g.version
            self.view = GraphView(g, self.view.nodes, self.view.reversed, self.view.window)
        return True

    def ends(self, reverse: bool) -> frozenset:
        """Admissible path ends of the window, before removing the source."""
        if reverse not in self._ends:
            view, dag = (self.view.reverse(), self.dag.reverse()) if reverse else (self.view, self.dag)
            self._ends[reverse] = _path_ends(view, dag)
        return self._ends[reverse]

    def appearance(self, params: AppearanceParams) -> Tuple[np.ndarray, np.ndarray]:
        """Per-feature (means, masses) arrays of the window nodes, in snapshot order."""
        key = (params.extremity, self.direction)
        if key not in self._appearance:
            nodes = self.graph.nodes
            pairs = [_appearance(nodes[n], params, head=self.direction > 0) for n in self.dag.ids]
            feats = np.array([f for f, _ in pairs], dtype=float).reshape(len(pairs), -1).T.copy()
            mass = np.array([c for _, c in pairs], dtype=float).reshape(len(pairs), -1).T.copy()
            self._appearance[key] = (feats, mass)
        return self._appearance[key]


def _snapshot(g: TrackletGraph, window: Tuple[float, float], direction: int, cache: Optional[dict]) -> _Snapshot:
    slot = ("window", direction)
    snap = cache.get(slot) if cache is not None else None
    if snap is None or not snap.valid_for(g, window):
        snap = _Snapshot(g, window, direction)
        if cache is not None:
            cache[slot] = snap
    return snap


def is_unambiguous(best: Path, second: Optional[Path], k1: float, k2: float, window_size: float) -> bool:
    if not best.cost < k1 * window_size:
        return False
    if second is None:
        return True
    if second.cost <= TOL:
        return False
    return best.cost / second.cost < k2


def window_for(tr: Tracklet, direction: int, vparams: ValidationParams) -> Tuple[float, float, float]:
    size = vparams.fixed_window if vparams.fixed_window is not None else vparams.kappa * len(tr)
    if direction > 0:
        return tr.t_end, tr.t_end + size, size
    return tr.t_start - size, tr.t_start, size


class _Probe:
    """Threshold-independent searches of one test, valid while its window is unchanged.

    The forward search runs at construction. The reverse check and the
    diverging alternatives only run when a decision needs them, and their
    results are kept, so repeated decisions at other thresholds are cheap.
    """

    __slots__ = ("graph", "key", "direction", "aparams", "version", "sizing", "window", "size",
                 "empty", "best", "second", "_ctx", "_reverse", "_diverging")

    def __init__(self, g: TrackletGraph, key: int, direction: int, vparams: ValidationParams,
                 aparams: AppearanceParams, cache: Optional[dict] = None) -> None:
        self.graph, self.key, self.direction, self.aparams = g, key, direction, aparams
        self.version = g.version
        self.sizing = (vparams.kappa, vparams.fixed_window)
        t1, t2, self.size = window_for(g.nodes[key], direction, vparams)
        self.window = (t1, t2)
        self._ctx = None
        self._reverse = None
        self._diverging = None
        ctx = self._context(cache)
        self.empty = ctx is None
        self.best = self.second = None
        if ctx is not None:
            res = shortest_paths(ctx[1], ctx[2])
            self.best, self.second = res.best, res.second_best

    def matches(self, g: TrackletGraph, vparams: ValidationParams, aparams: AppearanceParams) -> bool:
        if not (
            self.graph is g
            and self.sizing == (vparams.kappa, vparams.fixed_window)
            and self.aparams == aparams
            and g.unchanged_since(self.version, *self.window)
        ):
            return False
        self.version = g.version
        return True

    def _context(self, cache: Optional[dict] = None):
        if self._ctx is None:
            snap = _snapshot(self.graph, self.window, self.direction, cache)
            if snap.dag is None:
                return None
            overlay = AppearanceOverlay(self.graph, self.key, self.aparams, self.direction)
            overlay.snapshot = snap
            query = PathQuery(self.key, snap.ends(False) - {self.key}, overlay)
            self._ctx = (snap, snap.dag, query)
        return self._ctx

    def release(self) -> None:
        self._ctx = None

    def reverse(self, cache: Optional[dict] = None) -> Tuple[Optional[Path], Optional[Path]]:
        """Best and second-best paths from the best path's end back through the window."""
        if self._reverse is None:
            snap, dag, query = self._context(cache)
            end = self.best.end
            back_query = PathQuery(end, snap.ends(True) - {end}, query.cost_hook)
            res = shortest_paths(dag.reverse(), back_query)
            self._reverse = (res.best, res.second_best)
        return self._reverse

    def diverging(self, cache: Optional[dict] = None) -> Tuple[Tuple[int, float], ...]:
        """(length of the prefix shared with the best path, cost) of every diverging alternative."""
        if self._diverging is None:
            _, dag, query = self._context(cache)
            self._diverging = tuple(
                (len(shared_prefix(self.best.nodes, [alt.nodes])), alt.cost)
                for alt in diverging_alternatives(dag, query, self.best)
            )
        return self._diverging

    def decide(self, vparams: ValidationParams, cache: Optional[dict] = None) -> HypothesisResult:
        key, direction, window, size = self.key, self.direction, self.window, self.size

        def rejected(stage: str, best: float = math.inf, second: float = math.inf) -> HypothesisResult:
            return HypothesisResult(REJECTED, (key,), best, second, window, direction, stage)

        if self.empty:
            return rejected("empty")
        best, second = self.best, self.second
        if best is None:
            return rejected("no-path")
        second_cost = second.cost if second is not None else math.inf
        if vparams.mode == "always":
            return HypothesisResult(VALIDATED, best.nodes, best.cost, second_cost, window, direction, "always")

        if not is_unambiguous(best, second, vparams.k1, vparams.k2, size):
            return rejected("forward", best.cost, second_cost)

        back_best, back_second = self.reverse(cache)
        if back_best is None or back_best.end != key:
            return rejected("reverse-mismatch", best.cost, second_cost)
        if not is_unambiguous(back_best, back_second, vparams.k1, vparams.k2, size):
            return rejected("reverse", best.cost, second_cost)

        path: Sequence[int] = best.nodes
        if vparams.truncate:
            keep = len(path)
            for shared, cost in self.diverging(cache):
                if cost <= TOL or best.cost / cost >= vparams.k2:
                    keep = min(keep, shared)
            path = path[:keep]
            if len(path) < 2:
                return rejected("truncated", best.cost, second_cost)
        return HypothesisResult(VALIDATED, tuple(path), best.cost, second_cost, window, direction, "validated")


def hypothesis_test(
    g: TrackletGraph,
    key: int,
    direction: int,
    vparams: ValidationParams,
    aparams: AppearanceParams,
    cache: Optional[dict] = None,
) -> HypothesisResult:
    """Test whether the key-node's best path through its window is safe to aggregate.

    With a ``cache`` dict, the path searches of a (key, direction) pair are
    reused by later calls for as long as no node in the window changes;
    only the threshold checks are repeated.
    """
    if key not in g.nodes:
        raise GraphError(f"unknown key-node {key}")
    direction = 1 if direction > 0 else -1
    probe = cache.get((key, direction)) if cache is not None else None
    if probe is None or not probe.matches(g, vparams, aparams):
        probe = _Probe(g, key, direction, vparams, aparams, cache)
        if cache is not None:
            cache[(key, direction)] = probe
    try:
        return probe.decide(vparams, cache)
    finally:
        probe.release()
