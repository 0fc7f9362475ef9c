"""Detections, appearance semantics and synthetic benchmark generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

Position = Tuple[float, ...]
# track id -> list of (frame, position), frames strictly increasing
Tracks = Dict[int, List[Tuple[int, Position]]]


@dataclass(frozen=True)
class Detection:
    """One candidate target at one frame.

    ``confidences[i] == 0`` marks feature ``i`` as missing.
    """

    t: int
    y: Position
    features: Tuple[float, ...] = ()
    confidences: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"negative frame index {self.t}")
        if len(self.features) != len(self.confidences):
            raise ValueError("features and confidences differ in length")
        for c in self.confidences:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"confidence {c} outside [0, 1]")

    @property
    def n_features(self) -> int:
        return len(self.features)

    def with_confidences(self, confidences: Sequence[float]) -> "Detection":
        return Detection(self.t, self.y, self.features, tuple(float(c) for c in confidences))


@dataclass
class LabeledSequence:
    """Per-frame detections with the ground-truth target label of each one.

    ``truth`` holds the true target positions, which may differ from the
    detected ones (position noise) and may contain frames where the target
    was not detected.
    """

    frames: List[List[Detection]]
    labels: List[List[int]]
    truth: Tracks = field(default_factory=dict)

    @property
    def detections(self) -> List[Detection]:
        return [d for frame in self.frames for d in frame]

    def ground_truth(self) -> Tracks:
        return {k: list(v) for k, v in self.truth.items()}

    def blind(self) -> "LabeledSequence":
        """Copy with every confidence forced to 1 (reliability prior ignored)."""
        frames = [[d.with_confidences([1.0] * d.n_features) for d in frame] for frame in self.frames]
        return LabeledSequence(frames, [list(l) for l in self.labels], self.ground_truth())


def toy_appearance_dissimilarity(f_i: float, f_j: float) -> float:
    """Angular dissimilarity in [0, 1] between two features given in degrees."""
    return 1.0 - abs(math.cos(math.pi * (f_j - f_i) / 180.0))


@dataclass(frozen=True)
class ToyConfig:
    p: float = 0.5
    q: float = 0.5
    mu: Tuple[float, float, float] = (0.0, 120.0, 240.0)
    sigma_low: float = 10.0
    sigma_high: float = 100.0
    conf_reliable: float = 0.8
    conf_unreliable: float = 0.1
    horizon: int = 11
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")
        if len(self.mu) != 3:
            raise ValueError("the toy benchmark has exactly 3 targets")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def toy_positions(k: int) -> Tuple[float, float, float]:
    return (
        50.0 * math.sin(2.0 * math.pi * k / 10.0),
        50.0 * math.cos(2.0 * math.pi * k / 10.0),
        -20.0 - 50.0 * math.sin(2.0 * math.pi * k / 8.0),
    )


def toy_states(cfg: ToyConfig, rng: np.random.Generator) -> List[int]:
    """Trace of the two-state appearance automaton, starting in state 1."""
    states = [1]
    for _ in range(1, cfg.horizon):
        u = rng.random()
        if states[-1] == 1:
            states.append(2 if u < cfg.p else 1)
        else:
            states.append(1 if u < cfg.q else 2)
    return states


def generate_toy(cfg: ToyConfig) -> LabeledSequence:
    """Three 1-D targets with automaton-driven appearance noise.

    Every target gets its own RNG substream, so a target's trace only
    depends on the seed and its index.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)]
    per_target = []
    for i, rng in enumerate(streams):
        states = toy_states(cfg, rng)
        feats = []
        for s in states:
            sigma = cfg.sigma_low if s == 1 else cfg.sigma_high
            feats.append(float(rng.normal(cfg.mu[i], sigma)))
        per_target.append((states, feats))

    frames: List[List[Detection]] = []
    labels: List[List[int]] = []
    truth: Tracks = {i: [] for i in range(3)}
    for k in range(cfg.horizon):
        ys = toy_positions(k)
        frame = []
        for i in range(3):
            states, feats = per_target[i]
            c = cfg.conf_reliable if states[k] == 1 else cfg.conf_unreliable
            frame.append(Detection(k, (ys[i],), (feats[k],), (c,)))
            truth[i].append((k, (ys[i],)))
        frames.append(frame)
        labels.append([0, 1, 2])
    return LabeledSequence(frames, labels, truth)


@dataclass(frozen=True)
class SyntheticConfig:
    """Longer 2-D scenario with occlusion-driven confidence dropouts.

    Targets wander in a square arena with smoothly varying velocity. Each
    carries one scalar appearance feature. Whenever another target comes
    within ``occlusion_radius`` the detection is flagged as occluded: its
    confidence collapses and its feature is drawn with a large spread.
    Outside occlusions a random fraction of frames also loses its feature.
    Occluded detections are also localised less precisely
    (``occluded_pos_noise`` instead of ``pos_noise``).
    """

    n_frames: int = 500
    n_targets: int = 8
    arena: float = 250.0
    speed: float = 2.0
    turn_noise: float = 0.15
    pos_noise: float = 0.5
    occluded_pos_noise: float = 6.0
    miss_prob: float = 0.02
    occlusion_radius: float = 15.0
    feature_spread: float = 200.0
    sigma_low: float = 5.0
    sigma_high: float = 80.0
    conf_reliable: float = 0.9
    conf_occluded: float = 0.05
    dropout_prob: float = 0.1
    seed: int = 0


def generate_synthetic(cfg: SyntheticConfig) -> LabeledSequence:
    root = np.random.SeedSequence(cfg.seed)
    motion_seq, feat_seq = root.spawn(2)
    motion = np.random.default_rng(motion_seq)
    target_rngs = [np.random.default_rng(s) for s in feat_seq.spawn(cfg.n_targets)]

    n = cfg.n_targets
    margin = 0.1 * cfg.arena
    pos = motion.uniform(margin, cfg.arena - margin, size=(n, 2))
    heading = motion.uniform(0.0, 2.0 * math.pi, size=n)
    means = np.linspace(0.0, cfg.feature_spread, n, endpoint=False)
    means = means[motion.permutation(n)]

    frames: List[List[Detection]] = []
    labels: List[List[int]] = []
    truth: Tracks = {i: [] for i in range(n)}
    for t in range(cfg.n_frames):
        if t > 0:
            heading = heading + motion.normal(0.0, cfg.turn_noise, size=n)
            step = cfg.speed * np.stack([np.cos(heading), np.sin(heading)], axis=1)
            pos = pos + step
            # reflect at the arena walls
            for axis in range(2):
                low = pos[:, axis] < 0.0
                high = pos[:, axis] > cfg.arena
                pos[low, axis] = -pos[low, axis]
                pos[high, axis] = 2.0 * cfg.arena - pos[high, axis]
                flip = low | high
                if axis == 0:
                    heading[flip] = math.pi - heading[flip]
                else:
                    heading[flip] = -heading[flip]
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        np.fill_diagonal(dist, np.inf)
        occluded = dist.min(axis=1) < cfg.occlusion_radius

        frame, frame_labels = [], []
        for i in range(n):
            rng = target_rngs[i]
            truth[i].append((t, (float(pos[i, 0]), float(pos[i, 1]))))
            noise = rng.normal(0.0, cfg.occluded_pos_noise if occluded[i] else cfg.pos_noise, size=2)
            missed = rng.random() < cfg.miss_prob
            dropout = rng.random() < cfg.dropout_prob
            if occluded[i] or dropout:
                f = rng.normal(means[i], cfg.sigma_high)
                c = cfg.conf_occluded
            else:
                f = rng.normal(means[i], cfg.sigma_low)
                c = cfg.conf_reliable
            if missed:
                continue
            y = (float(pos[i, 0] + noise[0]), float(pos[i, 1] + noise[1]))
            frame.append(Detection(t, y, (float(f),), (float(c),)))
            frame_labels.append(i)
        frames.append(frame)
        labels.append(frame_labels)
    return LabeledSequence(frames, labels, truth)


def group_by_frame(detections: Sequence[Detection]) -> List[List[Detection]]:
    """Bucket detections into a dense per-frame list starting at frame 0."""
    if not detections:
        return []
    last = max(d.t for d in detections)
    frames: List[List[Detection]] = [[] for _ in range(last + 1)]
    for d in detections:
        frames[d.t].append(d)
    return frames
