"""Outer iteration: scheduling, direction alternation, relaxation, merging."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .detections import Detection, Tracks
from .graph import GraphError, GraphParams, TrackletGraph, build_graph
from .hypothesis import AppearanceParams, ValidationParams, hypothesis_test, window_for

log = logging.getLogger(__name__)

POLICIES = ("longest-first", "random", "confidence-first", "recency")


@dataclass(frozen=True)
class RelaxSchedule:
    """Linear ramps of the two validation thresholds, one step per scan."""

    k1_start: float = 5.0
    k1_end: float = 30.0
    k1_iters: int = 50
    k2_start: float = 1.0 / 4.0
    k2_end: float = 1.0 / 1.1
    k2_iters: int = 20

    def __post_init__(self) -> None:
        if self.k1_start > self.k1_end or self.k2_start > self.k2_end:
            raise ValueError("ramps must be non-decreasing")
        if self.k1_iters < 1 or self.k2_iters < 1:
            raise ValueError("ramp lengths must be >= 1")

    @classmethod
    def fixed(cls, k1: float, k2: float) -> "RelaxSchedule":
        return cls(k1, k1, 1, k2, k2, 1)

    @property
    def start(self) -> Tuple[float, float]:
        return self.k1_start, self.k2_start

    @property
    def end(self) -> Tuple[float, float]:
        return self.k1_end, self.k2_end

    def at(self, scan: int) -> Tuple[float, float]:
        """Thresholds used by 1-based scan ``scan``."""
        done1 = min(scan - 1, self.k1_iters)
        done2 = min(scan - 1, self.k2_iters)
        k1 = self.k1_start + (self.k1_end - self.k1_start) * done1 / self.k1_iters
        k2 = self.k2_start + (self.k2_end - self.k2_start) * done2 / self.k2_iters
        return k1, k2


def relax(k1: float, k2: float, schedule: RelaxSchedule, scan_index: int) -> Tuple[float, float]:
    """Thresholds after ``scan_index`` completed scans.

    Each ramp moves by one linear step per scan and stays at its end value
    once its own iteration count is exhausted.
    """
    if scan_index < 1:
        raise ValueError("scan_index must be >= 1")
    step1 = (schedule.k1_end - schedule.k1_start) / schedule.k1_iters
    step2 = (schedule.k2_end - schedule.k2_start) / schedule.k2_iters
    k1 = schedule.k1_end if scan_index >= schedule.k1_iters else min(schedule.k1_end, k1 + step1)
    k2 = schedule.k2_end if scan_index >= schedule.k2_iters else min(schedule.k2_end, k2 + step2)
    return k1, k2


@dataclass(frozen=True)
class DriverConfig:
    max_iter: int = 60
    schedule: str = "auto"
    relax: RelaxSchedule = RelaxSchedule.fixed(5.0, 1.0 / 3.0)
    delta_slide: int = 200
    graph: GraphParams = GraphParams()
    appearance: AppearanceParams = AppearanceParams()
    validation: ValidationParams = ValidationParams()
    seed: int = 0
    incremental_horizon: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.delta_slide < 1:
            raise ValueError("delta_slide must be >= 1")
        if self.schedule != "auto" and self.schedule not in POLICIES:
            raise ValueError(f"unknown schedule policy {self.schedule!r}")

    def policy(self, incremental: bool) -> str:
        if self.schedule == "auto":
            return "recency" if incremental else "longest-first"
        return self.schedule

    @property
    def horizon(self) -> int:
        if self.incremental_horizon is not None:
            return self.incremental_horizon
        return 2 * self.delta_slide + self.graph.tau_max


def _priority(g: TrackletGraph, policy: str, now: Optional[int]) -> Callable[[int], tuple]:
    nodes = g.nodes
    if policy == "longest-first":
        return lambda n: (-len(nodes[n]), nodes[n].t_start, n)
    if policy == "recency":
        if now is None:
            raise ValueError("recency scheduling needs the current frame")
        return lambda n: (-len(nodes[n]) / max(1, now - nodes[n].t_end), nodes[n].t_start, n)
    if policy == "confidence-first":
        return lambda n: (-sum(nodes[n].conf_mass), nodes[n].t_start, n)
    raise ValueError(f"unknown schedule policy {policy!r}")


def schedule_order(
    g: TrackletGraph,
    pending: Iterable[int],
    policy: str,
    now: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[int]:
    """Full key-node order for one scan of ``pending``."""
    if policy == "random":
        if rng is None:
            raise ValueError("random scheduling needs an RNG")
        ids = sorted(pending)
        return [ids[i] for i in rng.permutation(len(ids))]
    return sorted(pending, key=_priority(g, policy, now))


def schedule(
    g: TrackletGraph,
    pending: Iterable[int],
    policy: str,
    now: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Next key-node among ``pending``."""
    pending = list(pending)
    if not pending:
        raise ValueError("nothing left to schedule")
    if policy == "random":
        if rng is None:
            raise ValueError("random scheduling needs an RNG")
        ids = sorted(pending)
        return ids[int(rng.integers(len(ids)))]
    return min(pending, key=_priority(g, policy, now))


@dataclass
class TrackingResult:
    trajectories: List[List[Detection]]
    graph: TrackletGraph
    scans: int = 0
    tests: int = 0
    validations: int = 0
    skipped_scans: int = 0

    def tracks(self) -> Tracks:
        return trajectories_to_tracks(self.trajectories)


def trajectories_to_tracks(trajectories: Sequence[Sequence[Detection]]) -> Tracks:
    return {i: [(d.t, d.y) for d in traj] for i, traj in enumerate(trajectories)}


def _scan(
    g: TrackletGraph,
    order: Sequence[int],
    direction: int,
    params_for: Callable[[int], ValidationParams],
    aparams: AppearanceParams,
    stats: TrackingResult,
    cache: dict,
) -> int:
    if len(cache) > 4 * len(g.nodes) + 64:
        for k in [k for k in cache if k[0] not in g.nodes]:
            del cache[k]
    pending = set(order)
    merged = 0
    for key in order:
        if key not in pending:
            continue
        pending.discard(key)
        res = hypothesis_test(g, key, direction, params_for(key), aparams, cache=cache)
        stats.tests += 1
        if res.validated:
            chain = res.chain()
            g.simplify(chain)
            pending.difference_update(chain)
            merged += 1
    stats.validations += merged
    return merged


def run_offline(frames: Sequence[Sequence[Detection]], cfg: DriverConfig = DriverConfig()) -> TrackingResult:
    """Aggregate a whole sequence into trajectories.

    Once both directions have completed a scan without any merge at the
    final thresholds, every later scan is provably a no-op and is skipped;
    the result is identical to running all ``max_iter`` scans.
    """
    g = build_graph(frames, cfg.graph)
    policy = cfg.policy(incremental=False)
    rng = np.random.default_rng(cfg.seed)
    stats = TrackingResult([], g)
    k1, k2 = cfg.relax.start
    direction = 1
    idle = 0
    cache: dict = {}
    for scan in range(1, cfg.max_iter + 1):
        vparams = replace(cfg.validation, k1=k1, k2=k2)
        order = schedule_order(g, g.nodes, policy, rng=rng)
        merged = _scan(g, order, direction, lambda _key: vparams, cfg.appearance, stats, cache)
        stats.scans += 1
        log.debug("scan %d dir %+d k1=%.3g k2=%.3g merged %d, %d nodes", scan, direction, k1, k2, merged, len(g))
        at_end = (k1, k2) == cfg.relax.end
        idle = idle + 1 if (merged == 0 and at_end) else 0
        if idle >= 2:
            stats.skipped_scans = cfg.max_iter - scan
            stats.scans = cfg.max_iter
            break
        k1, k2 = relax(k1, k2, cfg.relax, scan)
        direction = -direction
    stats.trajectories = g.trajectories()
    return stats


class IncrementalTracker:
    """Frame-by-frame tracker keeping a growing graph.

    Each pushed frame triggers one scan over the nodes ending within the
    horizon, scheduled by recency. Key-nodes whose observation window sits
    entirely before the sliding window are tested with the relaxed end of
    the schedule; all others with its conservative start.
    """

    def __init__(self, cfg: DriverConfig = DriverConfig()) -> None:
        self.cfg = cfg
        self.graph = TrackletGraph(cfg.graph)
        self.policy = cfg.policy(incremental=True)
        self.rng = np.random.default_rng(cfg.seed)
        self.stats = TrackingResult([], self.graph)
        self.now: Optional[int] = None
        self.direction = 1
        self._cache: dict = {}
        k1, k2 = cfg.relax.start
        self._conservative = replace(cfg.validation, k1=k1, k2=k2)
        k1, k2 = cfg.relax.end
        self._relaxed = replace(cfg.validation, k1=k1, k2=k2)

    def _params_for(self, key: int) -> ValidationParams:
        _, t2, _ = window_for(self.graph.nodes[key], self.direction, self.cfg.validation)
        if t2 < self.now - self.cfg.delta_slide:
            return self._relaxed
        return self._conservative

    def push(self, t: int, detections: Sequence[Detection]) -> None:
        if self.now is not None and t <= self.now:
            raise GraphError(f"frame {t} arrives after frame {self.now}")
        if any(d.t != t for d in detections):
            raise GraphError(f"detections pushed at frame {t} carry another frame index")
        self.graph.increment(detections)
        self.now = t
        horizon = t - self.cfg.horizon
        pending = [n for n, tr in self.graph.nodes.items() if tr.t_end >= horizon]
        order = schedule_order(self.graph, pending, self.policy, now=t, rng=self.rng)
        _scan(self.graph, order, self.direction, self._params_for, self.cfg.appearance, self.stats, self._cache)
        self.stats.scans += 1
        self.direction = -self.direction

    def finish(self) -> int:
        """Drain after the last frame, as if the clock ran past the sliding window.

        The nodes in the horizon get the scans an offline run would give
        them: thresholds follow the relaxation ramp one step per scan and
        directions alternate, stopping after two idle scans at the end of
        the ramp or after ``max_iter`` scans. Returns the number of scans.
        """
        if self.now is None:
            return 0
        horizon = self.now - self.cfg.horizon
        idle = 0
        scan = 0
        for scan in range(1, self.cfg.max_iter + 1):
            k1, k2 = self.cfg.relax.at(scan)
            vparams = replace(self.cfg.validation, k1=k1, k2=k2)
            pending = [n for n, tr in self.graph.nodes.items() if tr.t_end >= horizon]
            order = schedule_order(self.graph, pending, self.policy, now=self.now, rng=self.rng)
            merged = _scan(
                self.graph, order, self.direction, lambda _key: vparams, self.cfg.appearance, self.stats, self._cache
            )
            self.stats.scans += 1
            self.direction = -self.direction
            idle = idle + 1 if (merged == 0 and (k1, k2) == self.cfg.relax.end) else 0
            if idle >= 2:
                break
        return scan

    def snapshot(self) -> List[List[Detection]]:
        return self.graph.trajectories()

    def result(self) -> TrackingResult:
        self.stats.trajectories = self.snapshot()
        return self.stats


def run_incremental(
    frames: Sequence[Sequence[Detection]],
    cfg: DriverConfig = DriverConfig(),
    on_frame: Optional[Callable[[int, List[List[Detection]]], None]] = None,
    drain: bool = True,
) -> TrackingResult:
    """Feed ``frames[t]`` as frame ``t`` one after the other, then drain the tail."""
    tracker = IncrementalTracker(cfg)
    for t, dets in enumerate(frames):
        tracker.push(t, dets)
        if on_frame is not None:
            on_frame(t, tracker.snapshot())
    if drain:
        tracker.finish()
    return tracker.result()
