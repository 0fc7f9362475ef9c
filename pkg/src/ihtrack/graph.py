"""Tracklet DAG: nodes, spatio-temporal edges, windowed/reversed views, merging."""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .detections import Detection, Position
from .paths import CompactDag

# views with at least this many nodes are compacted with numpy
COMPACT_ARRAY_MIN_NODES = 256


class GraphError(Exception):
    """Structural misuse of the tracklet graph (unknown node, broken chain)."""


class StaleViewError(GraphError):
    """A view was used after the graph it was cut from got mutated."""


@dataclass(frozen=True)
class GraphParams:
    tau_max: int = 120
    gamma: float = 3.0

    def __post_init__(self) -> None:
        if self.tau_max < 1:
            raise ValueError("tau_max must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")


def _velocity(a: Detection, b: Detection) -> Position:
    dt = b.t - a.t
    return tuple((yb - ya) / dt for ya, yb in zip(a.y, b.y))


def weighted_appearance(detections: Sequence[Detection]) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Confidence-weighted feature means and confidence masses of a chain.

    A feature whose total confidence is zero gets a mean of 0; its
    reliability is zero as well, so the value is never used.
    """
    if not detections:
        return (), ()
    n = detections[0].n_features
    means, masses = [], []
    for i in range(n):
        mass = 0.0
        acc = 0.0
        for d in detections:
            mass += d.confidences[i]
            acc += d.confidences[i] * d.features[i]
        masses.append(mass)
        means.append(acc / mass if mass > 0 else 0.0)
    return tuple(means), tuple(masses)


class Tracklet:
    """Time-ordered chain of detections used as one graph node."""

    __slots__ = (
        "detections",
        "mean_features",
        "conf_mass",
        "inner_cost",
        "start_velocity",
        "end_velocity",
        "t_start",
        "t_end",
        "__dict__",
    )

    def __init__(
        self,
        detections: Sequence[Detection],
        inner_cost: float = 0.0,
        mean_features: Optional[Tuple[float, ...]] = None,
        conf_mass: Optional[Tuple[float, ...]] = None,
    ) -> None:
        dets = tuple(detections)
        if not dets:
            raise GraphError("a tracklet needs at least one detection")
        for a, b in zip(dets, dets[1:]):
            if b.t <= a.t:
                raise GraphError(f"detection times not strictly increasing ({a.t} -> {b.t})")
        if inner_cost < 0:
            raise GraphError("inner cost must be nonnegative")
        self.detections = dets
        self.inner_cost = float(inner_cost)
        if mean_features is None or conf_mass is None:
            mean_features, conf_mass = weighted_appearance(dets)
        self.mean_features = mean_features
        self.conf_mass = conf_mass
        self.t_start = dets[0].t
        self.t_end = dets[-1].t
        if len(dets) == 1:
            zero = tuple(0.0 for _ in dets[0].y)
            self.start_velocity = zero
            self.end_velocity = zero
        else:
            self.start_velocity = _velocity(dets[0], dets[1])
            self.end_velocity = _velocity(dets[-2], dets[-1])

    @classmethod
    def merge(cls, parts: Sequence["Tracklet"], inner_cost: float) -> "Tracklet":
        """Concatenate time-ordered tracklets, combining appearance incrementally."""
        dets = tuple(d for p in parts for d in p.detections)
        n = len(parts[0].mean_features)
        means, masses = [], []
        for i in range(n):
            mass = sum(p.conf_mass[i] for p in parts)
            if mass > 0:
                means.append(sum(p.conf_mass[i] * p.mean_features[i] for p in parts) / mass)
            else:
                means.append(0.0)
            masses.append(mass)
        return cls(dets, inner_cost, tuple(means), tuple(masses))

    def __len__(self) -> int:
        return len(self.detections)

    def __repr__(self) -> str:
        return f"Tracklet(t={self.t_start}..{self.t_end}, n={len(self)}, cost={self.inner_cost:.3g})"

    @property
    def y_start(self) -> Position:
        return self.detections[0].y

    @property
    def y_end(self) -> Position:
        return self.detections[-1].y

    def extremity_appearance(self, n: int, head: bool) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """Weighted appearance of the first (head) or last ``n`` detections."""
        cache = self.__dict__.setdefault("_extremity", {})
        key = (n, head)
        if key not in cache:
            dets = self.detections[:n] if head else self.detections[-n:]
            cache[key] = weighted_appearance(dets)
        return cache[key]


def _csr(lo: np.ndarray, hi: np.ndarray, perm: Optional[np.ndarray] = None):
    """(row pointers, row of each entry, column of each entry) for rows ``[lo, hi)``."""
    counts = hi - lo
    ptr = np.zeros(len(lo) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    rows = np.repeat(np.arange(len(lo), dtype=np.int64), counts)
    cols = np.arange(ptr[-1], dtype=np.int64) - ptr[:-1][rows] + lo[rows]
    return ptr, rows, cols if perm is None else perm[cols]


def edge_weight(u: Tracklet, v: Tracklet, params: GraphParams) -> float:
    """Linking cost from the end of ``u`` to the start of ``v``; ``inf`` when unlinkable."""
    dt = v.t_start - u.t_end
    if dt <= 0 or dt > params.tau_max:
        return math.inf
    errs = [ys - ye - ve * dt for ys, ye, ve in zip(v.y_start, u.y_end, u.end_velocity)]
    g_sp = math.sqrt(sum(e * e for e in errs))
    return (1.0 + params.gamma * (dt - 1)) * g_sp


class GraphView:
    """Lightweight node subset of a graph, optionally with edges flipped.

    Views never copy adjacency. Any mutation of the parent graph makes the
    view stale.
    """

    __slots__ = ("graph", "nodes", "reversed", "window", "_version", "_order")

    def __init__(
        self,
        graph: "TrackletGraph",
        nodes: Iterable[int],
        reversed: bool = False,
        window: Optional[Tuple[float, float]] = None,
    ) -> None:
        self.graph = graph
        self.nodes = nodes if isinstance(nodes, frozenset) else frozenset(nodes)
        self.reversed = reversed
        self.window = window
        self._version = graph.version
        self._order: Optional[List[int]] = None

    def _check(self) -> None:
        if self._version != self.graph.version:
            raise StaleViewError("graph mutated after this view was created")

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, n: object) -> bool:
        return n in self.nodes

    def reverse(self) -> "GraphView":
        self._check()
        return GraphView(self.graph, self.nodes, not self.reversed, self.window)

    def without(self, removed: Iterable[int]) -> "GraphView":
        self._check()
        return GraphView(self.graph, self.nodes.difference(removed), self.reversed, self.window)

    def order(self) -> List[int]:
        """Topological order of the view (start time for forward, end time reversed)."""
        self._check()
        if self._order is None:
            nodes = self.graph.nodes
            if self.reversed:
                self._order = sorted(self.nodes, key=lambda n: (-nodes[n].t_end, n))
            else:
                self._order = sorted(self.nodes, key=lambda n: (nodes[n].t_start, n))
        return self._order

    def compact(self) -> CompactDag:
        """Index-based copy restricted to the members.

        Every pair of nodes whose time gap lies in ``(0, tau_max]`` is
        linked, so the in-view neighbours of a node are found by bisecting
        the members sorted by their facing extremity. Nodes sharing that
        extremity form one layer. Large views get array adjacency with
        weights recomputed in bulk by the same formula as the graph's.
        """
        self._check()
        ids = list(self.order())
        nodes = self.graph.nodes
        tau = self.graph.params.tau_max
        inner = [nodes[n].inner_cost for n in ids]
        if self.reversed:
            keys = [-nodes[n].t_end for n in ids]
        else:
            keys = [nodes[n].t_start for n in ids]
        layers = [i for i in range(len(keys)) if i == 0 or keys[i] != keys[i - 1]] + [len(keys)]
        if len(ids) >= COMPACT_ARRAY_MIN_NODES:
            out, inc = self._adjacency_arrays(ids)
            return CompactDag(ids, None, inner, layers, out=out, inc=inc)
        succ = []
        if self.reversed:
            adjacency = self.graph.pred
            for n in ids:
                t = nodes[n].t_start
                lo, hi = bisect_left(keys, 1 - t), bisect_right(keys, tau - t)
                adj = adjacency[n]
                succ.append([(j, adj[ids[j]]) for j in range(lo, hi)])
        else:
            adjacency = self.graph.succ
            for n in ids:
                t = nodes[n].t_end
                lo, hi = bisect_right(keys, t), bisect_right(keys, t + tau)
                adj = adjacency[n]
                succ.append([(j, adj[ids[j]]) for j in range(lo, hi)])
        return CompactDag(ids, succ, inner, layers)

    def _adjacency_arrays(self, ids: List[int]):
        """Out- and in-edge CSR arrays of the members in ``ids`` order."""
        nodes = [self.graph.nodes[n] for n in ids]
        params = self.graph.params
        tau = params.tau_max
        ts = np.array([tr.t_start for tr in nodes])
        te = np.array([tr.t_end for tr in nodes])
        y_start = np.array([tr.y_start for tr in nodes], dtype=float).T.copy()
        y_end = np.array([tr.y_end for tr in nodes], dtype=float).T.copy()
        v_end = np.array([tr.end_velocity for tr in nodes], dtype=float).T.copy()

        def weights(u: np.ndarray, v: np.ndarray) -> np.ndarray:
            # same operation order as edge_weight, so the values are identical
            dt = ts[v] - te[u]
            total = None
            for ys, ye, ve in zip(y_start, y_end, v_end):
                err = ys[v] - ye[u] - ve[u] * dt
                total = err * err if total is None else total + err * err
            return (1.0 + params.gamma * (dt - 1)) * np.sqrt(total)

        if self.reversed:
            # successors of n are the nodes ending 1..tau frames before it starts
            keys = -te
            other = np.argsort(ts, kind="stable")
            lo = np.searchsorted(keys, 1 - ts, "left")
            ptr, rows, cols = _csr(lo, np.searchsorted(keys, tau - ts, "right"))
            w = weights(cols, rows)
            in_lo, in_hi = np.searchsorted(ts[other], te + 1, "left"), np.searchsorted(ts[other], te + tau, "right")
        else:
            other = np.argsort(te, kind="stable")
            lo = np.searchsorted(ts, te, "right")
            ptr, rows, cols = _csr(lo, np.searchsorted(ts, te + tau, "right"))
            w = weights(rows, cols)
            in_lo, in_hi = np.searchsorted(te[other], ts - tau, "left"), np.searchsorted(te[other], ts - 1, "right")
        in_ptr, in_rows, in_cols = _csr(in_lo, in_hi, other)
        # an in-edge (from i into j) sits at offset j - lo[i] of row i
        in_w = w[ptr[in_cols] + in_rows - lo[in_cols]]
        return (ptr, cols, w), (in_ptr, in_cols, in_w)

    def out_edges(self, n: int) -> Mapping[int, float]:
        """Raw adjacency of ``n`` in view direction; callers filter by membership."""
        return self.graph.pred[n] if self.reversed else self.graph.succ[n]

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        self._check()
        for u in sorted(self.nodes):
            for v, w in self.out_edges(u).items():
                if v in self.nodes:
                    yield u, v, w

    def inner_cost(self, n: int) -> float:
        return self.graph.nodes[n].inner_cost

    def tracklet(self, n: int) -> Tracklet:
        return self.graph.nodes[n]


class TrackletGraph:
    """Mutable DAG of tracklets.

    The edge set always equals every finite-weight pair between current
    nodes, so merging and incrementing only need to (re)link the touched
    nodes.
    """

    def __init__(self, params: GraphParams = GraphParams()) -> None:
        self.params = params
        self.nodes: Dict[int, Tracklet] = {}
        self.succ: Dict[int, Dict[int, float]] = {}
        self.pred: Dict[int, Dict[int, float]] = {}
        self._starts: Dict[int, set] = defaultdict(set)
        self._ends: Dict[int, set] = defaultdict(set)
        self._next_id = 0
        self.version = 0
        # time span touched by the mutation that produced each version
        self._spans: List[Tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, n: object) -> bool:
        return n in self.nodes

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ.values())

    @property
    def last_frame(self) -> Optional[int]:
        return max(self._ends) if self._ends else None

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        for u in sorted(self.succ):
            for v in sorted(self.succ[u]):
                yield u, v, self.succ[u][v]

    def add_tracklet(self, tracklet: Tracklet) -> int:
        n = self._next_id
        self._next_id += 1
        self.nodes[n] = tracklet
        self.succ[n] = {}
        self.pred[n] = {}
        self._starts[tracklet.t_start].add(n)
        self._ends[tracklet.t_end].add(n)
        self._link(n)
        self.version += 1
        self._spans.append((tracklet.t_start, tracklet.t_end))
        return n

    def _link(self, n: int) -> None:
        tr = self.nodes[n]
        tau = self.params.tau_max
        for t in range(tr.t_start - tau, tr.t_start):
            for u in self._ends.get(t, ()):
                w = edge_weight(self.nodes[u], tr, self.params)
                self.succ[u][n] = w
                self.pred[n][u] = w
        for t in range(tr.t_end + 1, tr.t_end + tau + 1):
            for v in self._starts.get(t, ()):
                w = edge_weight(tr, self.nodes[v], self.params)
                self.succ[n][v] = w
                self.pred[v][n] = w

    def _remove(self, n: int) -> Tracklet:
        tr = self.nodes.pop(n)
        for v in self.succ.pop(n):
            del self.pred[v][n]
        for u in self.pred.pop(n):
            del self.succ[u][n]
        for index, t in ((self._starts, tr.t_start), (self._ends, tr.t_end)):
            bucket = index[t]
            bucket.discard(n)
            if not bucket:
                del index[t]
        return tr

    def unchanged_since(self, version: int, t1: float, t2: float) -> bool:
        """Whether the nodes with an extremity in ``[t1, t2]`` are the same as at ``version``.

        A merge only removes nodes lying inside the merged node's span, so
        it cannot affect a window that this span does not overlap.
        """
        spans = self._spans
        for i in range(version, self.version):
            a, b = spans[i]
            if a <= t2 and b >= t1:
                return False
        return True

    def view(self) -> GraphView:
        return GraphView(self, frozenset(self.nodes))

    def window(self, t1: float, t2: float) -> GraphView:
        """Nodes with at least one extremity inside ``[t1, t2]``."""
        if t2 < t1:
            raise ValueError(f"empty window [{t1}, {t2}]")
        members = set()
        lo, hi = math.ceil(t1), math.floor(t2)
        if hi - lo + 1 > len(self._starts) + len(self._ends):
            for n, tr in self.nodes.items():
                if lo <= tr.t_start <= hi or lo <= tr.t_end <= hi:
                    members.add(n)
        else:
            for t in range(lo, hi + 1):
                members.update(self._starts.get(t, ()))
                members.update(self._ends.get(t, ()))
        return GraphView(self, frozenset(members), window=(t1, t2))

    def simplify(self, path: Sequence[int]) -> int:
        """Replace a time-ordered chain of linked nodes with one merged node."""
        if len(path) < 2:
            raise GraphError("a merge needs at least two nodes")
        if len(set(path)) != len(path):
            raise GraphError("path visits a node twice")
        for n in path:
            if n not in self.nodes:
                raise GraphError(f"unknown node {n}")
        inner = 0.0
        for a, b in zip(path, path[1:]):
            w = self.succ[a].get(b)
            if w is None:
                raise GraphError(f"no edge {a} -> {b}")
            inner += w
        inner += sum(self.nodes[n].inner_cost for n in path)
        parts = [self._remove(n) for n in path]
        return self.add_tracklet(Tracklet.merge(parts, inner))

    def increment(self, detections: Sequence[Detection]) -> List[int]:
        """Append the detections of a new frame, linking them to recent nodes."""
        if not detections:
            return []
        t = detections[0].t
        if any(d.t != t for d in detections):
            raise GraphError("an increment must hold detections of a single frame")
        last = self.last_frame
        if last is not None and t <= last:
            raise GraphError(f"stale frame {t}: graph already extends to {last}")
        return [self.add_tracklet(Tracklet([d])) for d in detections]

    def topological_order(self) -> List[int]:
        """Kahn's algorithm; raises GraphError if a cycle is found."""
        indeg = {n: len(self.pred[n]) for n in self.nodes}
        heap = [n for n, k in indeg.items() if k == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = heapq.heappop(heap)
            order.append(n)
            for v in self.succ[n]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(heap, v)
        if len(order) != len(self.nodes):
            raise GraphError("graph has a cycle")
        return order

    def detection_multiset(self) -> Counter:
        return Counter((d.t, d.y) for tr in self.nodes.values() for d in tr.detections)

    def check_invariants(self) -> None:
        """Raise GraphError if acyclicity or the edge rule is violated."""
        self.topological_order()
        tau = self.params.tau_max
        for u, outs in self.succ.items():
            for v, w in outs.items():
                dt = self.nodes[v].t_start - self.nodes[u].t_end
                if not 0 < dt <= tau:
                    raise GraphError(f"edge {u}->{v} spans {dt} frames")
                if self.pred[v].get(u) != w:
                    raise GraphError(f"adjacency mismatch on {u}->{v}")
        for n in self.nodes:
            for u in self.pred[n]:
                if n not in self.succ[u]:
                    raise GraphError(f"adjacency mismatch on {u}->{n}")

    def trajectories(self) -> List[List[Detection]]:
        """Every node as one detection chain, ordered by start time."""
        order = sorted(self.nodes, key=lambda n: (self.nodes[n].t_start, n))
        return [list(self.nodes[n].detections) for n in order]


def build_graph(frames: Iterable[Sequence[Detection]], params: GraphParams = GraphParams()) -> TrackletGraph:
    """One single-detection node per detection, linked by every finite edge."""
    g = TrackletGraph(params)
    for frame in frames:
        for d in frame:
            g.add_tracklet(Tracklet([d]))
    return g


def increment(g: TrackletGraph, new_detections: Sequence[Detection]) -> TrackletGraph:
    g.increment(new_detections)
    return g
