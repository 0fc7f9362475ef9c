"""Shortest and node-disjoint second-shortest paths on DAG views.

Path cost is the sum of traversed edge weights plus, for every node except
the source, its inner cost and an optional per-query hook. The hook is how
a hypothesis overlays appearance costs without touching the graph.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import (
    Callable,
    Dict,
    Hashable,
    Iterable,
    List,
    Mapping,
    Optional,
    Protocol,
    Sequence,
    Tuple,
)

import numpy as np

TOL = 1e-12

Node = Hashable


class DagView(Protocol):
    nodes: frozenset

    def order(self) -> List[Node]: ...

    def out_edges(self, n: Node) -> Mapping[Node, float]: ...

    def inner_cost(self, n: Node) -> float: ...


@dataclass(frozen=True)
class Path:
    nodes: Tuple[Node, ...]
    cost: float

    @property
    def source(self) -> Node:
        return self.nodes[0]

    @property
    def end(self) -> Node:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class PathResult:
    best: Optional[Path]
    second_best: Optional[Path]


@dataclass(frozen=True)
class PathQuery:
    """Source, admissible end nodes and a per-query node cost overlay.

    By default the second-best path shares no node with the best one
    except the source. With ``share_sink`` only the interior of the best
    path is removed, so both paths may end at the same sink.
    """

    source: Node
    sinks: frozenset
    cost_hook: Optional[Callable[[Node], float]] = None
    share_sink: bool = False


class NodeCosts:
    """Memoised inner cost + hook per node, private to one query."""

    __slots__ = ("view", "hook", "cache")

    def __init__(self, view: DagView, hook: Optional[Callable[[Node], float]]) -> None:
        self.view = view
        self.hook = hook
        self.cache: Dict[Node, float] = {}

    def __call__(self, n: Node) -> float:
        c = self.cache.get(n)
        if c is None:
            c = self.view.inner_cost(n)
            if self.hook is not None:
                h = self.hook(n)
                if h < 0:
                    raise ValueError(f"negative hook value {h} on node {n!r}")
                c += h
            self.cache[n] = c
        return c


# Searches with at least this many edges run layer by layer in numpy when
# the snapshot knows its layers; smaller ones are faster as plain loops.
LAYERED_MIN_EDGES = 20000

Rows = List[List[Tuple[int, float]]]
Arrays = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _flip_rows(rows: Rows, k: int) -> Rows:
    return [[(k - 1 - j, w) for j, w in row] for row in reversed(rows)]


def _flip_arrays(arrays: Arrays, k: int) -> Arrays:
    ptr, idx, w = arrays
    return ptr[-1] - ptr[::-1], (k - 1 - idx)[::-1], w[::-1]


def _rows_to_arrays(rows: Rows) -> Arrays:
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum([len(r) for r in rows], out=ptr[1:])
    e = int(ptr[-1])
    idx = np.fromiter((j for r in rows for j, _ in r), dtype=np.int64, count=e)
    w = np.fromiter((x for r in rows for _, x in r), dtype=float, count=e)
    return ptr, idx, w


def _arrays_to_rows(arrays: Arrays) -> Rows:
    ptr, idx, w = (a.tolist() for a in arrays)
    return [list(zip(idx[a:b], w[a:b])) for a, b in zip(ptr, ptr[1:])]


def _transpose_rows(rows: Rows) -> Rows:
    out: Rows = [[] for _ in rows]
    for i, row in enumerate(rows):
        for j, w in row:
            out[j].append((i, w))
    return out


def _transpose_arrays(arrays: Arrays, k: int) -> Arrays:
    ptr, idx, w = arrays
    rows = np.repeat(np.arange(k, dtype=np.int64), np.diff(ptr))
    order = np.argsort(idx, kind="stable")
    tptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(idx, minlength=k), out=tptr[1:])
    return tptr, rows[order], w[order]


class _Layer:
    """In-edges of one layer, grouped by target, for the vectorised search."""

    __slots__ = ("lo", "hi", "dst", "starts", "seg", "src", "w", "rank", "dst_e")

    def __init__(self, lo, hi, dst, starts, seg, src, w, rank, dst_e) -> None:
        self.lo, self.hi, self.dst, self.starts, self.seg = lo, hi, dst, starts, seg
        self.src, self.w, self.rank, self.dst_e = src, w, rank, dst_e


class CompactDag:
    """Index-based snapshot of a view for repeated path queries.

    Nodes are numbered in topological order and ``ids[i]`` maps an index
    back to its node. Adjacency is stored as out- and in-lists or as CSR
    arrays, each derived on demand from whichever was supplied.

    ``layers`` optionally gives the first index of every run of nodes with
    no edge among them, followed by ``len(ids)``; every edge then points to
    a later layer. Large layered snapshots are searched a whole layer at a
    time with numpy, all others with plain loops. Both searches pick, for
    each node, the predecessor with the smallest id among those within
    ``TOL`` of the cheapest, so they return the same paths.
    """

    __slots__ = ("ids", "index", "inner", "nodes", "layers", "_succ", "_pred", "_out", "_inc",
                 "_rank", "_plan", "_flipped", "_costs")

    def __init__(
        self,
        ids: List[Node],
        succ: Optional[Rows] = None,
        inner: Sequence[float] = (),
        layers: Optional[Sequence[int]] = None,
        pred: Optional[Rows] = None,
        out: Optional[Arrays] = None,
        inc: Optional[Arrays] = None,
    ) -> None:
        if succ is None and pred is None and out is None and inc is None:
            raise ValueError("no adjacency given")
        self.ids = ids
        self.index = {n: i for i, n in enumerate(ids)}
        self.inner = list(inner)
        self.nodes = frozenset(ids)
        self.layers = layers
        self._succ, self._pred, self._out, self._inc = succ, pred, out, inc
        self._rank: Optional[np.ndarray] = None
        self._plan: Optional[List[_Layer]] = None
        self._flipped: Optional["CompactDag"] = None
        self._costs: Optional[tuple] = None

    @classmethod
    def from_view(cls, view: DagView) -> "CompactDag":
        if isinstance(view, CompactDag):
            return view
        if hasattr(view, "compact"):
            return view.compact()
        ids = list(view.order())
        index = {n: i for i, n in enumerate(ids)}
        succ = []
        for n in ids:
            row = []
            for m, w in view.out_edges(n).items():
                j = index.get(m)
                if j is not None:
                    row.append((j, w))
            succ.append(row)
        return cls(ids, succ, [view.inner_cost(n) for n in ids])

    # ------------------------------------------------------------ adjacency

    @property
    def succ(self) -> Rows:
        if self._succ is None:
            if self._out is not None:
                self._succ = _arrays_to_rows(self._out)
            elif self._pred is not None:
                self._succ = _transpose_rows(self._pred)
            else:
                self._succ = _arrays_to_rows(self.out)
        return self._succ

    @property
    def pred(self) -> Rows:
        if self._pred is None:
            if self._inc is not None:
                self._pred = _arrays_to_rows(self._inc)
            else:
                self._pred = _transpose_rows(self.succ)
        return self._pred

    @property
    def out(self) -> Arrays:
        if self._out is None:
            if self._succ is not None:
                self._out = _rows_to_arrays(self._succ)
            elif self._inc is not None:
                self._out = _transpose_arrays(self._inc, len(self.ids))
            else:
                self._out = _rows_to_arrays(self.succ)
        return self._out

    @property
    def inc(self) -> Arrays:
        if self._inc is None:
            if self._pred is not None:
                self._inc = _rows_to_arrays(self._pred)
            else:
                self._inc = _transpose_arrays(self.out, len(self.ids))
        return self._inc

    @property
    def n_edges(self) -> int:
        for arrays in (self._out, self._inc):
            if arrays is not None:
                return int(arrays[0][-1])
        rows = self._succ if self._succ is not None else self._pred
        return sum(map(len, rows))

    def row(self, i: int) -> List[Tuple[int, float]]:
        """Out-edges of index ``i`` as (index, weight) pairs."""
        if self._succ is None and self._out is not None:
            ptr, idx, w = self._out
            a, b = ptr[i], ptr[i + 1]
            return list(zip(idx[a:b].tolist(), w[a:b].tolist()))
        return self.succ[i]

    def has_successors(self) -> List[bool]:
        if self._succ is None and self._out is not None:
            return (np.diff(self._out[0]) > 0).tolist()
        return [bool(r) for r in self.succ]

    def __len__(self) -> int:
        return len(self.ids)

    def order(self) -> List[Node]:
        return self.ids

    def out_edges(self, n: Node) -> Mapping[Node, float]:
        ids = self.ids
        return {ids[j]: w for j, w in self.row(self.index[n])}

    def inner_cost(self, n: Node) -> float:
        return self.inner[self.index[n]]

    def reverse(self) -> "CompactDag":
        """Flip every edge; the reversed numbering stays topological."""
        if self._flipped is None:
            k = len(self.ids)
            flipped = CompactDag(
                self.ids[::-1],
                _flip_rows(self._pred, k) if self._pred is not None else None,
                self.inner[::-1],
                None if self.layers is None else [k - b for b in reversed(self.layers)],
                _flip_rows(self._succ, k) if self._succ is not None else None,
                _flip_arrays(self._inc, k) if self._inc is not None else None,
                _flip_arrays(self._out, k) if self._out is not None else None,
            )
            if self._rank is not None:
                flipped._rank = self._rank[::-1]
            flipped._flipped = self
            self._flipped = flipped
        return self._flipped

    def node_costs(self, hook: Optional[Callable[[Node], float]]) -> Sequence[float]:
        """Entering cost of every node: inner cost plus the hook, memoised per hook.

        A hook may offer ``bulk(dag)`` returning all its values as an array,
        or ``None`` to fall back to one call per node.
        """
        if hook is None:
            return list(self.inner)
        if self._costs is not None and self._costs[0] is hook:
            return self._costs[1]
        bulk = getattr(hook, "bulk", None)
        extra = bulk(self) if bulk is not None else None
        if extra is not None:
            out = np.asarray(self.inner, dtype=float) + extra
            out = out if self._layered() else out.tolist()
        else:
            out = []
            for n, c in zip(self.ids, self.inner):
                h = hook(n)
                if h < 0:
                    raise ValueError(f"negative hook value {h} on node {n!r}")
                out.append(c + h)
        self._costs = (hook, out)
        return out

    def sink_mask(self, sinks: Iterable[Node]) -> List[bool]:
        mask = [False] * len(self.ids)
        index = self.index
        for n in sinks:
            i = index.get(n)
            if i is not None:
                mask[i] = True
        return mask

    # -------------------------------------------------------------- searches

    def _layered(self) -> bool:
        return self.layers is not None and self.n_edges >= LAYERED_MIN_EDGES

    @property
    def rank(self) -> np.ndarray:
        """Position of every node in increasing id order, for tie-breaks."""
        if self._rank is None:
            order = sorted(range(len(self.ids)), key=self.ids.__getitem__)
            rank = np.empty(len(order), dtype=np.int64)
            rank[order] = np.arange(len(order))
            self._rank = rank
        return self._rank

    def _layer_plan(self) -> List[_Layer]:
        if self._plan is None:
            ptr, src, w = self.inc
            k = len(self.ids)
            rank = self.rank[src]
            dst_e = np.repeat(np.arange(k, dtype=np.int64), np.diff(ptr))
            plan = []
            for lo, hi in zip(self.layers, self.layers[1:]):
                e0, e1 = int(ptr[lo]), int(ptr[hi])
                if e0 == e1:
                    continue
                counts = np.diff(ptr[lo:hi + 1])
                nz = np.flatnonzero(counts)
                dst = lo + nz
                plan.append(_Layer(lo, hi, dst, ptr[dst] - e0, np.repeat(np.arange(len(nz)), counts[nz]),
                                   src[e0:e1], w[e0:e1], rank[e0:e1], dst_e[e0:e1]))
            self._plan = plan
        return self._plan

    def _pull_layers(self, val, back, costs, after, fixed=None, stop=-1, banned=None, backward=False):
        """Vectorised pull pass over the layers that start beyond index ``after``."""
        big = len(self.ids)
        stash = None
        for layer in self._layer_plan():
            if layer.lo <= after:
                continue
            src = layer.src
            if backward:
                nd = (layer.w + costs[src]) + val[src]
            else:
                nd = (val[src] + layer.w) + costs[layer.dst_e]
            if banned is not None and layer.lo <= banned[1] < layer.hi:
                nd[(layer.dst_e == banned[1]) & (src == banned[0])] = math.inf
            seg = layer.seg
            within = nd <= (np.minimum.reduceat(nd, layer.starts) + TOL)[seg]
            pos = within.nonzero()[0]
            if len(pos) != len(layer.dst):
                # some target has several candidates within TOL: keep the smallest id
                r = np.where(within, layer.rank, big)
                pos = (r == np.minimum.reduceat(r, layer.starts)[seg]).nonzero()[0]
            dst, new, arg = layer.dst, nd[pos], src[pos]
            if fixed is not None:
                keep = ~fixed[dst]
                dst, new, arg = dst[keep], new[keep], arg[keep]
            val[dst] = new
            back[dst] = arg
            if layer.lo <= stop < layer.hi and math.isfinite(val[stop]):
                stash = val[stop]
                val[stop] = math.inf
        if stash is not None:
            val[stop] = stash

    def shortest(
        self,
        source: int,
        sinks: Sequence[bool],
        costs: Sequence[float],
        excluded: Optional[Sequence[bool]] = None,
        stop: int = -1,
        banned: Optional[Tuple[int, int]] = None,
    ) -> Optional[Tuple[float, List[int]]]:
        """Cheapest path from ``source`` to a sink; returns (cost, indices) or ``None``.

        ``excluded`` nodes are never entered, ``stop`` may end a path but
        not continue one, and the ``banned`` (from, to) edge is ignored.
        """
        k = len(self.ids)
        if self._layered():
            dist = np.full(k, math.inf)
            back = np.full(k, -1, dtype=np.int64)
            dist[source] = 0.0
            fixed = np.asarray(excluded, dtype=bool) if excluded is not None else None
            self._pull_layers(dist, back, np.asarray(costs, dtype=float), source, fixed, stop, banned)
            cand = np.flatnonzero(np.asarray(sinks, dtype=bool)[source + 1:]) + source + 1
            d = dist[cand]
            if not len(cand) or not np.isfinite(d.min()):
                return None
            cand = cand[d <= d.min() + TOL]
            best = int(cand[np.argmin(self.rank[cand])])
            best_cost = float(dist[best])
            back = back.tolist()
        else:
            dist, back = self._pull_forward(source, costs, excluded, stop, banned)
            reached = [i for i in range(source + 1, k) if sinks[i] and dist[i] < math.inf]
            if not reached:
                return None
            m = min(dist[i] for i in reached) + TOL
            best = min((i for i in reached if dist[i] <= m), key=self.ids.__getitem__)
            best_cost = dist[best]
        path = [best]
        while path[-1] != source:
            path.append(back[path[-1]])
        path.reverse()
        return best_cost, path

    def _pull_forward(self, source, costs, excluded, stop, banned):
        ids, pred = self.ids, self.pred
        k = len(ids)
        inf = math.inf
        dist = [inf] * k
        back = [-1] * k
        dist[source] = 0.0
        stash = None
        for j in range(source + 1, k):
            row = pred[j]
            if not row or (excluded is not None and excluded[j]):
                continue
            c = costs[j]
            cands = [(dist[i] + w) + c for i, w in row]
            if banned is not None and j == banned[1]:
                cands = [inf if i == banned[0] else x for (i, _), x in zip(row, cands)]
            m = min(cands)
            if m == inf:
                continue
            dist[j], back[j] = _pick(row, cands, m, ids)
            if j == stop:
                stash, dist[j] = dist[j], inf
        if stash is not None:
            dist[stop] = stash
        return dist, back

    def cost_to_go(self, costs: Sequence[float], sinks: Sequence[bool], blocked: Sequence[bool]) -> Tuple[List[float], List[int]]:
        """Cheapest remaining cost from every node to a sink avoiding ``blocked`` nodes.

        Sinks end their path at no further cost. Returns the costs and the
        next index on each cheapest continuation (-1 at sinks).
        """
        k = len(self.ids)
        inf = math.inf
        if self._layered():
            blocked_arr = np.asarray(blocked, dtype=bool)
            sink_arr = np.asarray(sinks, dtype=bool) & ~blocked_arr
            togo = np.where(sink_arr, 0.0, inf)
            nxt = np.full(k, -1, dtype=np.int64)
            flipped = self.reverse()
            val, back = togo[::-1].copy(), nxt.copy()
            fixed = (sink_arr | blocked_arr)[::-1].copy()
            flipped._pull_layers(val, back, np.asarray(costs, dtype=float)[::-1].copy(), -1, fixed, backward=True)
            back = back[::-1]
            return val[::-1].tolist(), np.where(back >= 0, k - 1 - back, -1).tolist()
        ids, succ = self.ids, self.succ
        togo = [inf] * k
        nxt = [-1] * k
        for i in range(k - 1, -1, -1):
            if blocked[i]:
                continue
            if sinks[i]:
                togo[i] = 0.0
                continue
            row = succ[i]
            if not row:
                continue
            cands = [(w + costs[j]) + togo[j] for j, w in row]
            m = min(cands)
            if m < inf:
                togo[i], nxt[i] = _pick(row, cands, m, ids)
        return togo, nxt


def _pick(row, cands, m, ids):
    """(value, index) of the smallest-id candidate within ``TOL`` of ``m``."""
    bound = m + TOL
    arg, val = -1, m
    for (i, _), x in zip(row, cands):
        if x <= bound and (arg < 0 or ids[i] < ids[arg]):
            arg, val = i, x
    return val, arg


def _to_path(dag: CompactDag, found: Optional[Tuple[float, List[int]]]) -> Optional[Path]:
    if found is None:
        return None
    cost, idx = found
    ids = dag.ids
    return Path(tuple(ids[i] for i in idx), cost)


def dag_shortest_path(
    view: DagView,
    source: Node,
    sinks: frozenset,
    node_cost: Callable[[Node], float],
    excluded: frozenset = frozenset(),
) -> Optional[Path]:
    """Single pass in topological order; ``None`` when no sink is reachable.

    ``node_cost`` gives the full cost of entering a node. Among entries
    within ``TOL`` of the cheapest, the predecessor with the smallest id is
    kept, and likewise for the final sink.
    """
    dag = CompactDag.from_view(view)
    if source not in dag.index:
        raise KeyError(f"source {source!r} not in view")
    costs = [node_cost(n) for n in dag.ids]
    mask = dag.sink_mask(sinks)
    excl = dag.sink_mask(excluded) if excluded else None
    return _to_path(dag, dag.shortest(dag.index[source], mask, costs, excl))


def shortest_paths(view: DagView, query: PathQuery) -> PathResult:
    """Best path to any sink and the best path node-disjoint from it (see :class:`PathQuery`)."""
    dag = CompactDag.from_view(view)
    if query.source not in dag.index:
        raise KeyError(f"source {query.source!r} not in view")
    costs = dag.node_costs(query.cost_hook)
    sinks = dag.sink_mask(query.sinks)
    s = dag.index[query.source]
    found = dag.shortest(s, sinks, costs)
    if found is None:
        return PathResult(None, None)
    best_idx = found[1]
    excl = [False] * len(dag)
    for i in best_idx[1:-1] if query.share_sink else best_idx[1:]:
        excl[i] = True
    if query.share_sink:
        # the shared sink may only end a path, and a single-edge best path
        # has no interior to remove, so its edge goes instead
        end = best_idx[-1]
        banned = (s, end) if len(best_idx) == 2 else None
        second = dag.shortest(s, sinks, costs, excl, stop=end, banned=banned)
    else:
        second = dag.shortest(s, sinks, costs, excl)
    return PathResult(_to_path(dag, found), _to_path(dag, second))


def path_cost(view: DagView, nodes: Sequence[Node], hook: Optional[Callable[[Node], float]] = None) -> float:
    costs = NodeCosts(view, hook)
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        w = view.out_edges(a).get(b)
        if w is None or b not in view.nodes:
            raise KeyError(f"no edge {a!r} -> {b!r} in view")
        total += w + costs(b)
    return total


def diverging_alternatives(view: DagView, query: PathQuery, best: Path) -> List[Path]:
    """Cheapest paths that follow ``best`` for at least one hop, then leave it for good.

    One candidate per divergence node ``best.nodes[i]`` with ``i >= 1``.
    Computed with a single backward pass over the view minus ``best``.
    """
    dag = CompactDag.from_view(view)
    ids, index = dag.ids, dag.index
    costs = dag.node_costs(query.cost_hook)
    sinks = dag.sink_mask(query.sinks)
    on_best = dag.sink_mask(best.nodes)
    togo, nxt = dag.cost_to_go(costs, sinks, on_best)
    if isinstance(costs, np.ndarray):
        costs = costs.tolist()
    inf = math.inf

    alternatives = []
    prefix = 0.0
    path = [index[n] for n in best.nodes]
    for k in range(1, len(path) - 1):
        a, b = path[k - 1], path[k]
        prefix += _weight(dag.row(a), b) + costs[b]
        row = [(j, w) for j, w in dag.row(b) if not on_best[j] and togo[j] < inf]
        if not row:
            continue
        cands = [((prefix + w) + costs[j]) + togo[j] for j, w in row]
        choice_cost, choice = _pick(row, cands, min(cands), ids)
        tail = [choice]
        while nxt[tail[-1]] >= 0:
            tail.append(nxt[tail[-1]])
        alternatives.append(Path(best.nodes[: k + 1] + tuple(ids[j] for j in tail), choice_cost))
    return alternatives


def _weight(row: List[Tuple[int, float]], j: int) -> float:
    for m, w in row:
        if m == j:
            return w
    raise KeyError(j)


def shared_prefix(best: Sequence[Node], cheaper_overlapping: Iterable[Sequence[Node]]) -> List[Node]:
    """Longest source-anchored prefix of ``best`` shared by every given alternative."""
    keep = len(best)
    for alt in cheaper_overlapping:
        k = 0
        limit = min(len(alt), keep)
        while k < limit and alt[k] == best[k]:
            k += 1
        keep = k
    return list(best[:keep])


class SimpleDag:
    """Plain weighted DAG implementing the view protocol (tests, baselines)."""

    def __init__(
        self,
        edges: Iterable[Tuple[Node, Node, float]],
        inner_costs: Optional[Mapping[Node, float]] = None,
        nodes: Optional[Iterable[Node]] = None,
        _reversed: bool = False,
    ) -> None:
        self.succ: Dict[Node, Dict[Node, float]] = defaultdict(dict)
        self.pred: Dict[Node, Dict[Node, float]] = defaultdict(dict)
        all_nodes = set(nodes or ())
        for u, v, w in edges:
            if w < 0:
                raise ValueError("negative edge weight")
            self.succ[u][v] = w
            self.pred[v][u] = w
            all_nodes.update((u, v))
        self.nodes = frozenset(all_nodes)
        self.inner = dict(inner_costs or {})
        self.reversed = _reversed
        self._order: Optional[List[Node]] = None

    def out_edges(self, n: Node) -> Mapping[Node, float]:
        adj = self.pred if self.reversed else self.succ
        return adj.get(n, {})

    def inner_cost(self, n: Node) -> float:
        return self.inner.get(n, 0.0)

    def order(self) -> List[Node]:
        if self._order is None:
            indeg = {n: 0 for n in self.nodes}
            for n in self.nodes:
                for m in self.out_edges(n):
                    if m in indeg:
                        indeg[m] += 1
            heap = [n for n, k in indeg.items() if k == 0]
            heapq.heapify(heap)
            order = []
            while heap:
                n = heapq.heappop(heap)
                order.append(n)
                for m in self.out_edges(n):
                    if m in indeg:
                        indeg[m] -= 1
                        if indeg[m] == 0:
                            heapq.heappush(heap, m)
            if len(order) != len(self.nodes):
                raise ValueError("graph has a cycle")
            self._order = order
        return self._order

    def edges(self) -> List[Tuple[Node, Node, float]]:
        return [(u, v, w) for u in sorted(self.nodes) for v, w in sorted(self.out_edges(u).items())]

    def reverse(self) -> "SimpleDag":
        flipped = SimpleDag([], self.inner, self.nodes, not self.reversed)
        flipped.succ, flipped.pred = self.succ, self.pred
        return flipped

    def without(self, removed: Iterable[Node]) -> "SimpleDag":
        removed = set(removed)
        edges = [(u, v, w) for u, outs in self.succ.items() for v, w in outs.items() if u not in removed and v not in removed]
        view = SimpleDag(edges, self.inner, self.nodes - removed)
        return view.reverse() if self.reversed else view
