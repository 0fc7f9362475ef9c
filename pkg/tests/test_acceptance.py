"""End-to-end acceptance checks, one test per criterion.

Every test records a one-line verdict that is printed as it runs and
repeated in the terminal summary, so ``pytest -v`` shows the full
scorecard at the end of the log.
"""

import io
import time
from fractions import Fraction
from dataclasses import replace

import numpy as np
import pytest

import micro
import test_properties
from acceptance_log import record
from ihtrack.baseline import ConsecutiveCost, PairwiseCost, brute_force_partition, ksp_track
from ihtrack.config import PRESETS
from ihtrack.detections import Detection, SyntheticConfig, ToyConfig, generate_synthetic, generate_toy
from ihtrack.driver import run_offline, trajectories_to_tracks
from ihtrack.evaluation import evaluate
from ihtrack.experiments import paired, sweep
from ihtrack.formats import dump_detections, read_detections

pytestmark = pytest.mark.slow

SEEDS = 100
P_RANGE = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
LARGE_P = (0.8, 0.9)
MAIN_VARIANTS = ("iht", "iht-blind", "ksp")
ABLATION_VARIANTS = ("iht-random", "iht-random-always", "iht-always", "iht-confidence-always")


def _fmt(values):
    return " ".join(f"{p:.1f}:{100 * v:+.1f}" for p, v in values)


@pytest.fixture(scope="module")
def toy_sweep():
    start = time.perf_counter()
    main = sweep("p", P_RANGE, SEEDS, MAIN_VARIANTS)
    seconds = time.perf_counter() - start
    ablation = sweep("p", P_RANGE, SEEDS, ABLATION_VARIANTS)
    zero = sweep("p", (0.0,), SEEDS, ("iht", "ksp"))
    return {"rows": main + ablation + zero, "seconds": seconds}


def _mean(rows, p, variant):
    return float(paired(rows, p, variant).mean())


def test_confidence_benefit_on_toy(toy_sweep):
    rows = toy_sweep["rows"]
    vs_blind = [(p, float(np.mean(paired(rows, p, "iht") - paired(rows, p, "iht-blind")))) for p in P_RANGE]
    vs_ksp = [(p, float(np.mean(paired(rows, p, "iht") - paired(rows, p, "ksp")))) for p in P_RANGE]
    fast = toy_sweep["seconds"] < 120.0
    ok = all(d > 0 for _, d in vs_blind) and all(d > 0 for _, d in vs_ksp) and fast
    record(
        1,
        ok,
        f"MOTA(iht)-MOTA(blind) [{_fmt(vs_blind)}]; MOTA(iht)-MOTA(ksp) [{_fmt(vs_ksp)}]; "
        f"{len(P_RANGE)}x{SEEDS} runs x3 variants in {toy_sweep['seconds']:.0f}s (budget 120s)",
    )
    assert ok


def test_validation_ablation(toy_sweep):
    rows = toy_sweep["rows"]
    vs_always = [(p, float(np.mean(paired(rows, p, "iht") - paired(rows, p, "iht-random-always")))) for p in P_RANGE]
    always_vs_ksp = [(p, _mean(rows, p, "iht-random-always") - _mean(rows, p, "ksp")) for p in P_RANGE]
    # informational: the same comparison for the other scheduling orders
    other = {
        v: [(p, _mean(rows, p, v) - _mean(rows, p, "ksp")) for p in LARGE_P]
        for v in ("iht-always", "iht-confidence-always")
    }
    ok = all(d > 0 for _, d in vs_always) and all(d < 0 for p, d in always_vs_ksp if p in LARGE_P)
    record(
        2,
        ok,
        f"MOTA(iht)-MOTA(random,always) [{_fmt(vs_always)}]; "
        f"MOTA(random,always)-MOTA(ksp) [{_fmt(always_vs_ksp)}], must be <0 at p>={LARGE_P[0]}; "
        + "; ".join(f"{v}-ksp [{_fmt(d)}]" for v, d in other.items()),
    )
    assert ok


def _exact_mean_mota(rows, p, variant):
    """Mean per-seed MOTA as an exact fraction, from the integer error counts."""
    errors = sum(paired(rows, p, variant, c) for c in ("misses", "false_positives", "switches", "reinitializations"))
    gt = paired(rows, p, variant, "gt_count")
    return sum((1 - Fraction(int(e), int(g)) for e, g in zip(errors, gt)), Fraction(0)) / len(gt)


def test_scheduling_insensitivity(toy_sweep):
    # the gap can land exactly on the 2-point boundary, so it is compared
    # in exact arithmetic rather than on float means
    rows = toy_sweep["rows"]
    gaps = [(p, _exact_mean_mota(rows, p, "iht") - _exact_mean_mota(rows, p, "iht-random")) for p in P_RANGE]
    ok = all(abs(d) <= Fraction(2, 100) for _, d in gaps)
    record(3, ok, f"MOTA(longest-first)-MOTA(random) [{_fmt((p, float(d)) for p, d in gaps)}], |gap| <= 2.0 points (exact)")
    assert ok


def test_low_noise_toy_ksp_matches_iht(toy_sweep):
    rows = toy_sweep["rows"]
    iht, ksp = _mean(rows, 0.0, "iht"), _mean(rows, 0.0, "ksp")
    ok = abs(iht - ksp) <= 0.03
    record("1b", ok, f"p=0: MOTA iht {100 * iht:.2f}, ksp {100 * ksp:.2f}, |gap| <= 3 points")
    assert ok


def test_crossing_micro_instance():
    fr = micro.frames()
    truth = micro.truth_partition(fr)
    gt = trajectories_to_tracks(truth)
    settings = PRESETS["toy"]
    iht = run_offline(fr, settings.driver_config()).trajectories
    ksp = ksp_track(fr, 2, settings.baseline_costs()).tracks
    oracle = brute_force_partition(fr, 2, PairwiseCost()).tracks
    iht_report = evaluate(gt, trajectories_to_tracks(iht), 0.05)
    ksp_report = evaluate(gt, trajectories_to_tracks(ksp), 0.05)
    ok = (
        len(iht) == 2
        and all(micro.color_pure(tr) for tr in iht)
        and iht_report.switches == 0
        and ksp_report.switches >= 1
        and micro.canonical(oracle) == micro.canonical(iht)
    )
    record(
        4,
        ok,
        f"iht: {len(iht)} colour-pure tracks, SW={iht_report.switches}; ksp SW={ksp_report.switches}; "
        f"pairwise oracle equals iht partition: {micro.canonical(oracle) == micro.canonical(iht)}",
    )
    assert ok


def _random_instance(rng):
    k, n_frames = int(rng.integers(1, 4)), int(rng.integers(1, 6))
    frames = []
    for t in range(n_frames):
        frames.append(
            [
                Detection(t, (float(rng.uniform(-30, 30)),), (float(rng.uniform(0, 360)),), (float(rng.choice([0.1, 0.8])),))
                for _ in range(k)
            ]
        )
    return frames, k


def test_oracle_bounds_ksp():
    rng = np.random.default_rng(2024)
    costs = PRESETS["toy"].baseline_costs()
    model = ConsecutiveCost(costs)
    violations, equal = 0, 0
    for _ in range(200):
        frames, k = _random_instance(rng)
        oracle = brute_force_partition(frames, k, model).cost
        greedy = ksp_track(frames, k, costs).cost
        violations += greedy < oracle - 1e-9
        equal += abs(greedy - oracle) <= 1e-9 * max(1.0, abs(oracle))
    ok = violations == 0
    record(5, ok, f"bound violated on {violations}/200; greedy optimal on {equal}/200 = {equal / 2:.0f}% (informational, target >= 70%)")
    assert ok


def test_relaxation_keeps_best_of_both():
    base = PRESETS["synthetic"]
    configs = {
        "relaxed": base,
        "most": replace(base, k1_end=base.k1_start, k2_end=base.k2_start, k1_iters=1, k2_iters=1),
        "least": replace(base, k1_start=base.k1_end, k2_start=base.k2_end, k1_iters=1, k2_iters=1),
    }
    totals = {name: [0, 0] for name in configs}
    per_seed = []
    for seed in range(5):
        seq = generate_synthetic(SyntheticConfig(seed=seed))
        line = []
        for name, s in configs.items():
            r = evaluate(seq.ground_truth(), run_offline(seq.frames, s.driver_config()).tracks(), s.match_radius)
            totals[name][0] += r.switches
            totals[name][1] += r.misses + r.reinitializations
            line.append(f"{name} SW={r.switches} MS+RE={r.misses + r.reinitializations}")
        per_seed.append(f"seed {seed}: " + ", ".join(line))
    for line in per_seed:
        print(line)
    ok = totals["relaxed"][0] <= totals["least"][0] and totals["relaxed"][1] <= totals["most"][1]
    record(
        6,
        ok,
        "summed over seeds 0-4: SW relaxed {} vs least-conservative {}; MS+RE relaxed {} vs most-conservative {}".format(
            totals["relaxed"][0], totals["least"][0], totals["relaxed"][1], totals["most"][1]
        ),
    )
    assert ok


def test_adaptive_window_speed():
    seq = generate_synthetic(SyntheticConfig(n_frames=1000, n_targets=10, seed=0))
    base = PRESETS["synthetic"]
    out = {}
    for name, s in (("adaptive", replace(base, kappa=5.0)), ("fixed", replace(base, window=500.0))):
        start = time.perf_counter()
        tracks = run_offline(seq.frames, s.driver_config()).tracks()
        seconds = time.perf_counter() - start
        out[name] = (seconds, evaluate(seq.ground_truth(), tracks, s.match_radius).mota)
    (ta, ma), (tf, mf) = out["adaptive"], out["fixed"]
    ok = ta <= tf and ma >= mf - 0.01
    record(7, ok, f"adaptive (kappa=5) {ta:.0f}s MOTA {100 * ma:.2f}; fixed window 500 {tf:.0f}s MOTA {100 * mf:.2f}")
    assert ok


def test_metric_self_consistency():
    toy = generate_toy(ToyConfig(p=0.5, seed=3))
    syn = generate_synthetic(SyntheticConfig(n_frames=100, seed=1))
    checks = []
    for seq in (toy, syn):
        r = evaluate(seq.ground_truth(), seq.ground_truth(), 10.0)
        checks.append(r.mota == 1.0 and r.motp == 0.0)
    line = {0: [(t, (float(t),)) for t in range(10)]}
    empty = evaluate(line, {}, 10.0)
    checks.append(empty.misses == 10 and empty.mota == 0.0)
    a = [(t, (float(t),)) for t in range(6)]
    b = [(t, (5.0 - t,)) for t in range(6)]
    swapped = evaluate({0: a, 1: b}, {"x": a[:3] + b[3:], "y": b[:3] + a[3:]}, 1.0)
    checks.append(swapped.switches >= 1)
    ok = all(checks)
    record(8, ok, f"evaluate(gt, gt) exact on toy and synthetic, empty-hypothesis and crossing-swap examples: {checks}")
    assert ok


def test_invariant_suite():
    properties = (
        test_properties.test_acyclic_after_every_mutation,
        test_properties.test_full_runs_conserve_detections_and_partition,
        test_properties.test_runs_are_deterministic,
        test_properties.test_merge_is_associative,
    )
    failed = []
    for prop in properties:
        try:
            prop()
        except Exception as exc:  # report every property before failing
            failed.append(f"{prop.__name__}: {type(exc).__name__}")
    ok = not failed
    record(9, ok, f"{len(properties)} properties x 1000 random instances" + (f"; failed {failed}" if failed else ""))
    assert ok


def test_external_datasets_not_shipped(tmp_path):
    # the real-footage benchmarks cannot be scored here; check that an
    # external detection dump in the documented format is accepted as input
    seq = generate_toy(ToyConfig(seed=0))
    buf = io.StringIO()
    dump_detections(seq.frames, buf)
    path = tmp_path / "external_dump.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    frames = read_detections(str(path))
    tracks = run_offline(frames, PRESETS["toy"].driver_config()).trajectories
    ok = sum(map(len, tracks)) == sum(map(len, seq.frames))
    record(
        10,
        ok,
        "real-footage benchmark scores need datasets that are not distributed; "
        "external detection dumps load and track" + ("" if ok else " FAILED"),
        status="NOT REPRODUCIBLE" if ok else "FAIL",
    )
    assert ok
