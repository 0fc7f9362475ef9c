"""Flat tracker settings: INI files, environment overrides and named presets.

Every tunable parameter lives in one ``[iht]`` section. Keys match the
field names of :class:`Settings`; any key can also be overridden with an
environment variable ``IHT_<KEY>`` (upper case).
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields, replace
from typing import Dict, Mapping, Optional

from .baseline import BaselineCosts
from .detections import toy_appearance_dissimilarity
from .driver import DriverConfig, RelaxSchedule
from .graph import GraphParams
from .hypothesis import AppearanceParams, ValidationParams

SECTION = "iht"
ENV_PREFIX = "IHT_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Settings:
    tau_max: int = 120
    gamma: float = 3.0
    kappa: float = 5.0
    c_min: float = 20.0
    c_max: float = 100.0
    k1_start: float = 5.0
    k1_end: float = 5.0
    k1_iters: int = 1
    k2_start: float = 1.0 / 3.0
    k2_end: float = 1.0 / 3.0
    k2_iters: int = 1
    lam: float = 1.0
    w_fix: float = 5.0
    metric: str = "l1"
    extremity: int = 0
    delta_slide: int = 200
    max_iter: int = 60
    schedule: str = "auto"
    seed: int = 0
    validation: str = "conservative"
    window: Optional[float] = None
    horizon: Optional[int] = None
    truncate: bool = True
    match_radius: float = 10.0

    def __post_init__(self) -> None:
        # building the typed blocks runs all of their checks
        try:
            self.driver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.match_radius < 0:
            raise ConfigError("match_radius must be >= 0")

    def driver_config(self) -> DriverConfig:
        return DriverConfig(
            max_iter=self.max_iter,
            schedule=self.schedule,
            relax=RelaxSchedule(
                self.k1_start, self.k1_end, self.k1_iters, self.k2_start, self.k2_end, self.k2_iters
            ),
            delta_slide=self.delta_slide,
            graph=GraphParams(tau_max=self.tau_max, gamma=self.gamma),
            appearance=AppearanceParams(
                lam=self.lam,
                w_fix=self.w_fix,
                c_min=self.c_min,
                c_max=self.c_max,
                metric=self.metric,
                extremity=self.extremity,
            ),
            validation=ValidationParams(
                k1=self.k1_start,
                k2=self.k2_start,
                kappa=self.kappa,
                mode=self.validation,
                fixed_window=self.window,
                truncate=self.truncate,
            ),
            seed=self.seed,
            incremental_horizon=self.horizon,
        )

    def baseline_costs(self) -> BaselineCosts:
        if self.metric == "angular":
            return BaselineCosts(w_fix=self.w_fix, dissimilarity=toy_appearance_dissimilarity, lam=self.lam)
        return BaselineCosts(w_fix=self.w_fix, dissimilarity=lambda a, b: abs(a - b), lam=self.lam)

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)


PRESETS: Dict[str, Settings] = {
    # working point used on real footage
    "reference": Settings(),
    # the same with progressive relaxation of both thresholds
    "relaxed": Settings(k1_end=30.0, k1_iters=50, k2_start=0.25, k2_end=1.0 / 1.1, k2_iters=20),
    # relaxed thresholds scaled to the default synthetic scenario
    "synthetic": Settings(
        tau_max=20,
        c_min=0.0,
        c_max=10.0,
        k1_end=30.0,
        k1_iters=50,
        k2_start=0.25,
        k2_end=1.0 / 1.1,
        k2_iters=20,
        lam=0.1,
        w_fix=1.0,
        match_radius=5.0,
    ),
    # synthetic angular-feature toy: consecutive-frame edges, raw confidences
    "toy": Settings(
        tau_max=1,
        c_min=0.0,
        c_max=1.0,
        k1_end=30.0,
        k1_iters=50,
        k2_start=0.25,
        k2_end=1.0 / 1.1,
        k2_iters=20,
        lam=200.0,
        w_fix=10.0,
        metric="angular",
    ),
}

FIELD_TYPES = {f.name: f.type for f in fields(Settings)}


def _parse(key: str, raw: str):
    kind = FIELD_TYPES[key]
    text = raw.strip()
    if "Optional" in str(kind):
        if text.lower() in ("", "none"):
            return None
        kind = kind.replace("Optional[", "").rstrip("]")
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            if "/" in text:
                num, den = text.split("/", 1)
                return float(num) / float(den)
            return float(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for {key}") from exc
    return text


def with_overrides(base: Settings, values: Mapping[str, str]) -> Settings:
    """Apply string-valued overrides, parsing each by its field type."""
    changes = {}
    for key, raw in values.items():
        name = key.strip().lower()
        if name not in FIELD_TYPES:
            raise ConfigError(f"unknown parameter {key!r}")
        changes[name] = raw if not isinstance(raw, str) else _parse(name, raw)
    return replace(base, **changes)


def env_overrides(environ: Mapping[str, str]) -> Dict[str, str]:
    return {
        k[len(ENV_PREFIX):].lower(): v
        for k, v in environ.items()
        if k.startswith(ENV_PREFIX) and k[len(ENV_PREFIX):].lower() in FIELD_TYPES
    }


def load_settings(
    path: Optional[str] = None,
    preset: str = "reference",
    environ: Optional[Mapping[str, str]] = None,
) -> Settings:
    """Preset, then file, then environment; later sources win."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    settings = PRESETS[preset]
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if parser.has_section(SECTION):
            items = dict(parser.items(SECTION))
            if "preset" in items:
                name = items.pop("preset")
                if name not in PRESETS:
                    raise ConfigError(f"unknown preset {name!r}")
                settings = PRESETS[name]
            settings = with_overrides(settings, items)
    environ = os.environ if environ is None else environ
    return with_overrides(settings, env_overrides(environ))


def dump_settings(settings: Settings) -> str:
    """INI text that loads back to ``settings``."""
    lines = [f"[{SECTION}]"]
    for key, value in settings.to_dict().items():
        lines.append(f"{key} = {'none' if value is None else repr(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"
