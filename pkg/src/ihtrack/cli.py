"""Command-line front end.

Every command writes a JSON run manifest next to its main output. The
manifest records the resolved settings, seeds and paths; ``replay`` reruns
a command from its manifest and reproduces the outputs byte for byte.

Exit codes: 0 success, 1 usage error, 2 input or format error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import platform
import sys
import time
from typing import Dict, List, Optional, Sequence

from . import __version__
from .baseline import ksp_track
from .config import PRESETS, ConfigError, Settings, load_settings
from .detections import SyntheticConfig, ToyConfig, generate_synthetic, generate_toy
from .driver import run_incremental, run_offline, trajectories_to_tracks
from .evaluation import evaluate
from .experiments import COMPONENTS, TOY_VARIANTS, sweep
from .formats import (
    FormatError,
    read_detections,
    read_ground_truth,
    read_trajectories,
    write_detections,
    write_events,
    write_graph,
    write_ground_truth,
    write_report,
    write_table,
    write_trajectories,
)
from .graph import GraphError

log = logging.getLogger("ihtrack")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


def _manifest_path(args: argparse.Namespace, output: str) -> str:
    return args.manifest or f"{output}.manifest.json"


def _write_manifest(path: str, manifest: Dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(command: str, args: Dict, settings: Optional[Settings], inputs: Dict, outputs: Dict,
              seconds: float, summary: Dict) -> Dict:
    return {
        "command": command,
        "arguments": args,
        "settings": settings.to_dict() if settings is not None else None,
        "seed": args["seed"] if args.get("seed") is not None else (settings.seed if settings else None),
        "inputs": inputs,
        "outputs": outputs,
        "wall_clock_seconds": seconds,
        "summary": summary,
        "version": __version__,
        "python": platform.python_version(),
    }


def _settings(args: argparse.Namespace) -> Settings:
    settings = load_settings(args.config, args.preset)
    if getattr(args, "seed", None) is not None:
        settings = dataclasses.replace(settings, seed=args.seed)
    return settings


# ---------------------------------------------------------------- commands
# Each command takes plain keyword arguments plus resolved settings so that
# replay can call it with exactly what the manifest recorded.


def run_generate_toy(output: str, truth: str, p: float, q: float, seed: int) -> Dict:
    try:
        cfg = ToyConfig(p=p, q=q, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seq = generate_toy(cfg)
    write_detections(output, seq.frames)
    write_ground_truth(truth, seq.truth)
    return {"detections": len(seq.detections), "frames": len(seq.frames), "targets": len(seq.truth)}


def run_generate_synthetic(output: str, truth: str, seed: int, frames: int, targets: int) -> Dict:
    try:
        cfg = SyntheticConfig(n_frames=frames, n_targets=targets, seed=seed)
        if frames < 1 or targets < 1:
            raise ValueError("frames and targets must be >= 1")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seq = generate_synthetic(cfg)
    write_detections(output, seq.frames)
    write_ground_truth(truth, seq.truth)
    return {"detections": len(seq.detections), "frames": len(seq.frames), "targets": len(seq.truth)}


def run_track(input: str, output: str, algo: str, mode: str, k: Optional[int], settings: Settings,
              graph_dump: Optional[str] = None) -> Dict:
    frames = read_detections(input)
    if algo == "ksp":
        if k is None or k < 1:
            raise UsageError("--algo ksp needs --k >= 1")
        result = ksp_track(frames, k, settings.baseline_costs())
        tracks = trajectories_to_tracks(result.tracks)
        summary = {"tracks": len(tracks), "cost": result.cost, "shortfall": result.shortfall}
    elif algo == "iht":
        runner = run_offline if mode == "offline" else run_incremental
        result = runner(frames, settings.driver_config())
        result.graph.check_invariants()
        tracks = result.tracks()
        summary = {"tracks": len(tracks), "scans": result.scans, "tests": result.tests,
                   "validations": result.validations}
        if graph_dump:
            write_graph(graph_dump, result.graph)
    else:
        raise UsageError(f"unknown algorithm {algo!r}")
    write_trajectories(output, tracks)
    return summary


def run_evaluate(gt: str, input: str, output: str, match_radius: float, events: Optional[str] = None) -> Dict:
    if match_radius < 0:
        raise UsageError("--match-radius must be >= 0")
    report = evaluate(read_ground_truth(gt), read_trajectories(input), match_radius, log_events=events is not None)
    write_report(output, report)
    if events:
        write_events(events, report.events)
    return report.summary()


def parse_sweep(spec: str) -> tuple:
    if "=" not in spec:
        raise UsageError("--sweep expects PARAM=v1,v2,...")
    name, raw = spec.split("=", 1)
    name = name.strip()
    try:
        values = [float(eval_fraction(v)) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad sweep values {raw!r}") from None
    if not values:
        raise UsageError("--sweep needs at least one value")
    if name != "p" and name not in Settings.__dataclass_fields__:
        raise UsageError(f"unknown parameter {name!r}")
    return name, values


def eval_fraction(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


SWEEP_STATS = COMPONENTS


def run_sweep(output: str, sweep_spec: str, reps: int, variants: Sequence[str], dataset: str, workers: int,
              seed: int, settings: Settings) -> Dict:
    param, values = parse_sweep(sweep_spec)
    if reps < 1 or workers < 1:
        raise UsageError("--reps and --workers must be >= 1")
    for v in variants:
        if v not in TOY_VARIANTS:
            raise UsageError(f"unknown variant {v!r}; choose from {', '.join(TOY_VARIANTS)}")
    if param == "p" and dataset != "toy":
        raise UsageError("p can only be swept on the toy dataset")
    try:
        rows = sweep(param, values, reps, variants, settings, dataset=dataset, workers=workers, seed0=seed)
    except (ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    header = ["param", "value", "variant", "reps"]
    for c in SWEEP_STATS:
        header += [f"{c}_mean", f"{c}_std"]
    table = []
    for r in rows:
        line = [r.param, r.value, r.variant, r.reps]
        for c in SWEEP_STATS:
            line += [r.mean[c], r.std[c]]
        table.append(line)
    write_table(output, header, table)
    return {"rows": len(rows), "param": param, "values": values}


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ihtrack", description="Multi-object tracking by iterative hypothesis testing.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, needs_settings=True):
        p.add_argument("--output", required=True, help="main output file")
        p.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json)")
        if needs_settings:
            p.add_argument("--config", help="INI file with an [iht] section")
            p.add_argument("--preset", default=None, choices=sorted(PRESETS), help="base settings")

    p = sub.add_parser("generate-toy", help="three-target toy benchmark")
    common(p, needs_settings=False)
    p.add_argument("--truth", help="ground-truth output (default: OUTPUT with .gt.csv)")
    p.add_argument("--p", type=float, default=0.5, help="reliable-to-noisy transition probability")
    p.add_argument("--q", type=float, default=0.5, help="noisy-to-reliable transition probability")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("generate-synthetic", help="2-D multi-target scenario with occlusions")
    common(p, needs_settings=False)
    p.add_argument("--truth", help="ground-truth output (default: OUTPUT with .gt.csv)")
    p.add_argument("--frames", type=int, default=SyntheticConfig.n_frames)
    p.add_argument("--targets", type=int, default=SyntheticConfig.n_targets)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("track", help="aggregate detections into trajectories")
    common(p)
    p.add_argument("--input", required=True, help="detection file")
    p.add_argument("--algo", default="iht", choices=("iht", "ksp"))
    p.add_argument("--mode", default="offline", choices=("offline", "incremental"))
    p.add_argument("--k", type=int, help="number of tracks for ksp")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    p.add_argument("--graph-dump", help="write PREFIX.nodes.csv and PREFIX.edges.csv of the final graph")

    p = sub.add_parser("evaluate", help="CLEAR MOT scores of trajectories against ground truth")
    common(p, needs_settings=False)
    p.add_argument("--input", required=True, help="trajectory file")
    p.add_argument("--gt", required=True, help="ground-truth file")
    p.add_argument("--match-radius", type=float, default=10.0)
    p.add_argument("--events", help="per-frame event log output")

    p = sub.add_parser("sweep", help="mean and spread of MOTA components over a parameter grid")
    common(p)
    p.add_argument("--sweep", required=True, dest="sweep_spec", metavar="PARAM=v1,v2,...")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dataset", default="toy", choices=("toy", "synthetic"))
    p.add_argument("--variants", default="iht,iht-blind,ksp,ksp-blind", help="comma-separated variant names")
    p.add_argument("--seed", type=int, default=0, help="first replication seed")

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest_file", metavar="MANIFEST")
    p.add_argument("--output-dir", help="write outputs into this directory instead of the recorded paths")
    return parser


def _truth_path(output: str, truth: Optional[str]) -> str:
    if truth:
        return truth
    stem = output[:-4] if output.endswith(".csv") else output
    return f"{stem}.gt.csv"


def _dispatch(command: str, a: Dict, settings: Optional[Settings]) -> tuple:
    """Run one command from its recorded arguments; returns (inputs, outputs, summary)."""
    if command == "generate-toy":
        summary = run_generate_toy(a["output"], a["truth"], a["p"], a["q"], a["seed"])
        return {}, {"detections": a["output"], "truth": a["truth"]}, summary
    if command == "generate-synthetic":
        summary = run_generate_synthetic(a["output"], a["truth"], a["seed"], a["frames"], a["targets"])
        return {}, {"detections": a["output"], "truth": a["truth"]}, summary
    if command == "track":
        summary = run_track(a["input"], a["output"], a["algo"], a["mode"], a["k"], settings, a.get("graph_dump"))
        outputs = {"trajectories": a["output"]}
        if a.get("graph_dump") and a["algo"] == "iht":
            outputs["graph"] = a["graph_dump"]
        return {"detections": a["input"]}, outputs, summary
    if command == "evaluate":
        summary = run_evaluate(a["gt"], a["input"], a["output"], a["match_radius"], a.get("events"))
        outputs = {"report": a["output"]}
        if a.get("events"):
            outputs["events"] = a["events"]
        return {"gt": a["gt"], "trajectories": a["input"]}, outputs, summary
    if command == "sweep":
        variants = [v.strip() for v in a["variants"].split(",") if v.strip()]
        summary = run_sweep(a["output"], a["sweep_spec"], a["reps"], variants, a["dataset"], a["workers"],
                            a["seed"], settings)
        return {}, {"table": a["output"]}, summary
    raise UsageError(f"unknown command {command!r}")


_PATH_KEYS = ("output", "truth", "events", "graph_dump")


def _replay(manifest_file: str, output_dir: Optional[str]) -> int:
    try:
        with open(manifest_file, encoding="utf-8") as fh:
            manifest = json.load(fh)
        command, a = manifest["command"], dict(manifest["arguments"])
    except (OSError, ValueError, KeyError) as exc:
        raise FormatError(f"cannot load manifest {manifest_file}: {exc}") from exc
    settings = None
    if manifest.get("settings") is not None:
        try:
            settings = Settings(**manifest["settings"])
        except TypeError as exc:
            raise FormatError(f"manifest settings do not match this version: {exc}") from exc
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        for key in _PATH_KEYS:
            if a.get(key):
                a[key] = os.path.join(output_dir, os.path.basename(a[key]))
    start = time.perf_counter()
    inputs, outputs, summary = _dispatch(command, a, settings)
    seconds = time.perf_counter() - start
    target = os.path.join(output_dir, os.path.basename(manifest_file)) if output_dir else manifest_file
    if os.path.abspath(target) != os.path.abspath(manifest_file):
        _write_manifest(target, _manifest(command, a, settings, inputs, outputs, seconds, summary))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _run(argv: Optional[Sequence[str]]) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "replay":
        return _replay(args.manifest_file, args.output_dir)

    a = {k: v for k, v in vars(args).items() if k not in ("command", "verbose", "manifest", "config", "preset")}
    settings = None
    if "config" in vars(args):
        if args.preset is None:
            args.preset = "toy" if args.command == "sweep" and args.dataset == "toy" else "reference"
        settings = _settings(args)
        a["config"], a["preset"] = args.config, args.preset
    if "truth" in a:
        a["truth"] = _truth_path(args.output, args.truth)
    start = time.perf_counter()
    inputs, outputs, summary = _dispatch(args.command, a, settings)
    seconds = time.perf_counter() - start
    manifest = _manifest(args.command, a, settings, inputs, outputs, seconds, summary)
    _write_manifest(_manifest_path(args, args.output), manifest)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return _run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GraphError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
