"""Benchmark runners: toy variants, synthetic runs and parameter sweeps."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baseline import ksp_track
from .config import PRESETS, ConfigError, Settings, with_overrides
from .detections import (
    LabeledSequence,
    SyntheticConfig,
    ToyConfig,
    Tracks,
    generate_synthetic,
    generate_toy,
)
from .driver import run_incremental, run_offline, trajectories_to_tracks
from .evaluation import MotReport, evaluate

TOY_VARIANTS = (
    "iht",
    "iht-blind",
    "ksp",
    "ksp-blind",
    "iht-random",
    "iht-confidence-first",
    "iht-always",
    "iht-random-always",
    "iht-confidence-always",
    "iht-incremental",
)

COMPONENTS = ("mota", "motp", "misses", "false_positives", "switches", "reinitializations")


def _variant_settings(variant: str, settings: Settings, seed: int) -> Tuple[str, Settings, bool]:
    """(algorithm, settings, blind) for one named variant."""
    if variant not in TOY_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    s = replace(settings, seed=seed)
    blind = variant.endswith("-blind")
    if variant.startswith("ksp"):
        return "ksp", s, blind
    if variant in ("iht-random", "iht-random-always"):
        s = replace(s, schedule="random")
    elif variant in ("iht-confidence-first", "iht-confidence-always"):
        s = replace(s, schedule="confidence-first")
    if variant.endswith("always"):
        s = replace(s, validation="always")
    algo = "iht-incremental" if variant == "iht-incremental" else "iht"
    return algo, s, blind


def track(seq: LabeledSequence, algo: str, settings: Settings, k: Optional[int] = None) -> Tracks:
    """Run one tracker on a labelled sequence and return point tracks."""
    if algo == "ksp":
        n_tracks = k if k is not None else len(seq.truth)
        return trajectories_to_tracks(ksp_track(seq.frames, n_tracks, settings.baseline_costs()).tracks)
    if algo == "iht":
        return run_offline(seq.frames, settings.driver_config()).tracks()
    if algo == "iht-incremental":
        return run_incremental(seq.frames, settings.driver_config()).tracks()
    raise ValueError(f"unknown algorithm {algo!r}")


def run_variant(seq: LabeledSequence, variant: str, settings: Settings, seed: int = 0) -> MotReport:
    algo, s, blind = _variant_settings(variant, settings, seed)
    data = seq.blind() if blind else seq
    return evaluate(seq.ground_truth(), track(data, algo, s), settings.match_radius)


@dataclass(frozen=True)
class Replication:
    """One isolated unit of sweep work."""

    dataset: str
    param: str
    value: float
    seed: int
    variants: Tuple[str, ...]
    settings: Settings
    synthetic: Optional[SyntheticConfig] = None


def make_sequence(dataset: str, seed: int, p: float = 0.5, synthetic: Optional[SyntheticConfig] = None) -> LabeledSequence:
    if dataset == "toy":
        return generate_toy(ToyConfig(p=p, seed=seed))
    if dataset == "synthetic":
        return generate_synthetic(replace(synthetic or SyntheticConfig(), seed=seed))
    raise ValueError(f"unknown dataset {dataset!r}")


def _run_replication(rep: Replication) -> Dict[str, Dict[str, float]]:
    settings, p = rep.settings, 0.5
    if rep.param == "p":
        p = rep.value
    elif rep.param:
        settings = with_overrides(settings, {rep.param: str(rep.value)})
    seq = make_sequence(rep.dataset, rep.seed, p, rep.synthetic)
    out = {}
    for variant in rep.variants:
        start = time.perf_counter()
        report = run_variant(seq, variant, settings, rep.seed)
        summary = report.summary()
        summary["seconds"] = time.perf_counter() - start
        out[variant] = summary
    return out


@dataclass
class SweepRow:
    param: str
    value: float
    variant: str
    reps: int
    mean: Dict[str, float]
    std: Dict[str, float]
    samples: List[Dict[str, float]]


def sweep(
    param: str,
    values: Sequence[float],
    reps: int,
    variants: Sequence[str] = ("iht",),
    settings: Optional[Settings] = None,
    dataset: str = "toy",
    synthetic: Optional[SyntheticConfig] = None,
    workers: int = 1,
    seed0: int = 0,
) -> List[SweepRow]:
    """Mean and standard deviation of every MOTA component per value and variant.

    Seeds ``seed0 .. seed0 + reps - 1`` are shared by all values and
    variants, so comparisons between them are paired.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if param != "p" and param not in Settings.__dataclass_fields__:
        raise ConfigError(f"unknown parameter {param!r}")
    if param == "p" and dataset != "toy":
        raise ConfigError("p only applies to the toy dataset")
    settings = settings or PRESETS[dataset]
    variants = tuple(variants)
    jobs = [
        Replication(dataset, param, float(v), seed0 + r, variants, settings, synthetic)
        for v in values
        for r in range(reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replication, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_replication(j) for j in jobs]

    rows = []
    for i, v in enumerate(values):
        chunk = results[i * reps:(i + 1) * reps]
        for variant in variants:
            samples = [r[variant] for r in chunk]
            mean, std = {}, {}
            for c in COMPONENTS + ("seconds",):
                arr = np.array([s[c] for s in samples], dtype=float)
                mean[c] = float(arr.mean())
                std[c] = float(arr.std())
            rows.append(SweepRow(param, float(v), variant, reps, mean, std, samples))
    return rows


def paired(rows: Sequence[SweepRow], value: float, variant: str, component: str = "mota") -> np.ndarray:
    """Per-seed samples of one component, in seed order."""
    for row in rows:
        if row.variant == variant and math.isclose(row.value, value):
            return np.array([s[component] for s in row.samples])
    raise KeyError((value, variant))
