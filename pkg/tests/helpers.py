"""Builders and hypothesis strategies shared by the test modules."""

import itertools
import math

from hypothesis import strategies as st

from ihtrack.detections import Detection
from ihtrack.paths import SimpleDag


def det(t, *y, f=(), c=()):
    return Detection(t, tuple(float(v) for v in y), tuple(float(v) for v in f), tuple(float(v) for v in c))


@st.composite
def frame_sets(draw, max_frames=8, max_per_frame=3, n_features=1, dims=1):
    """Per-frame detection lists with small integer-ish coordinates."""
    n_frames = draw(st.integers(1, max_frames))
    coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
    frames = []
    for t in range(n_frames):
        k = draw(st.integers(0, max_per_frame))
        frame = []
        for _ in range(k):
            y = tuple(draw(coord) for _ in range(dims))
            f = tuple(draw(st.floats(0, 360)) for _ in range(n_features))
            c = tuple(draw(st.floats(0, 1)) for _ in range(n_features))
            frame.append(Detection(t, y, f, c))
        frames.append(frame)
    return frames


@st.composite
def random_dags(draw, max_nodes=9):
    """DAG on nodes 0..n-1 with edges only from lower to higher ids."""
    n = draw(st.integers(2, max_nodes))
    weight = st.floats(0, 10, allow_nan=False)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if draw(st.booleans()):
                edges.append((u, v, draw(weight)))
    inner = {v: draw(weight) for v in range(n)}
    hook = {v: draw(weight) for v in range(n)}
    return n, edges, inner, hook


def all_paths(dag: SimpleDag, source, sinks, excluded=frozenset()):
    """Every source-to-sink path, by depth-first enumeration."""
    out = []

    def walk(path):
        n = path[-1]
        if n in sinks and len(path) > 1:
            out.append(tuple(path))
        for m in dag.out_edges(n):
            if m not in excluded and m in dag.nodes:
                walk(path + [m])

    walk([source])
    return out


def enumerated_cost(dag, path, hook=None):
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += dag.out_edges(a)[b] + dag.inner_cost(b) + (hook(b) if hook else 0.0)
    return total


@st.composite
def layered_dags(draw, max_layers=6, max_width=4):
    """Index-level DAG in layers, with shuffled ids and small integer costs full of ties.

    Returns (ids, succ rows, inner costs, hook costs, layer starts).
    """
    widths = draw(st.lists(st.integers(1, max_width), min_size=2, max_size=max_layers))
    starts = [0]
    for w in widths:
        starts.append(starts[-1] + w)
    k = starts[-1]
    layer_of = [li for li, w in enumerate(widths) for _ in range(w)]
    ids = draw(st.permutations(range(k)))
    small = st.integers(0, 3).map(float)
    succ = []
    for i in range(k):
        row = []
        for j in range(starts[layer_of[i] + 1], k):
            if draw(st.booleans()):
                row.append((j, draw(small)))
        succ.append(row)
    inner = [draw(small) for _ in range(k)]
    hook = [draw(small) for _ in range(k)]
    return list(ids), succ, inner, hook, starts
