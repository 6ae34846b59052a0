"""Run configuration loaded from TOML with unit-suffixed keys."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from mmsc.correlations import NORMALIZATION_WINDOW_S, DriveParams
from mmsc.model import (
    BETA_DEFAULT,
    FSR_HZ,
    GAMMA_CS_D2,
    TWO_PI,
    EnsembleParams,
    ResonatorParams,
)
from mmsc.spectra import DEFAULT_POINTS, DEFAULT_SPAN_HZ


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class ResonatorBlock:
    fsr_hz: float = FSR_HZ
    kappa0_hz_over_2pi: float = 0.39e6
    kappa_ext_hz_over_2pi: float = 0.21e6
    loop: str = "closed"


@dataclass
class AtomsBlock:
    gamma_hz_over_2pi: float = GAMMA_CS_D2 / TWO_PI
    beta: float = BETA_DEFAULT
    od: Optional[float] = None
    n_atoms: Optional[float] = None
    delta_at_hz: float = 0.0


@dataclass
class SweepBlock:
    span_hz: float = DEFAULT_SPAN_HZ
    points: int = DEFAULT_POINTS


@dataclass
class DriveBlock:
    rabi_hz_over_2pi: float = 2 * GAMMA_CS_D2 / TWO_PI
    detuning_hz: float = 0.0


@dataclass
class G2Block:
    mu0_bounds: tuple = (0.0, 1.0)
    mu_bounds: tuple = (0.0, 1.0)
    tau_max_s: float = NORMALIZATION_WINDOW_S
    points: int = 10001


@dataclass
class RunConfig:
    resonator: ResonatorBlock = field(default_factory=ResonatorBlock)
    atoms: AtomsBlock = field(default_factory=AtomsBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    drive: DriveBlock = field(default_factory=DriveBlock)
    g2: G2Block = field(default_factory=G2Block)
    seed: int = 0

    def resonator_params(self) -> ResonatorParams:
        r = self.resonator
        return ResonatorParams.from_hz(
            r.fsr_hz, r.kappa0_hz_over_2pi, r.kappa_ext_hz_over_2pi, r.loop == "open"
        )

    @property
    def gamma(self) -> float:
        return TWO_PI * self.atoms.gamma_hz_over_2pi

    def ensemble_params(self) -> EnsembleParams:
        a = self.atoms
        delta = TWO_PI * a.delta_at_hz
        if a.n_atoms is not None:
            return EnsembleParams(self.gamma, a.beta, float(a.n_atoms), delta)
        return EnsembleParams.from_od(a.od or 0.0, self.gamma, a.beta, delta)

    def drive_params(self) -> DriveParams:
        d = self.drive
        return DriveParams(TWO_PI * d.rabi_hz_over_2pi, self.gamma, TWO_PI * d.detuning_hz)


_BLOCKS = {
    "resonator": ResonatorBlock,
    "atoms": AtomsBlock,
    "sweep": SweepBlock,
    "drive": DriveBlock,
    "g2": G2Block,
}


def _coerce(block, name, value, default):
    key = f"{block}.{name}"
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{key}: booleans are not accepted here")
    if isinstance(default, tuple):
        if not (isinstance(value, list) and len(value) == 2
                and all(isinstance(v, (int, float)) for v in value)):
            raise ConfigError(f"{key}: expected a two-element numeric list")
        lo, hi = float(value[0]), float(value[1])
        if lo > hi:
            raise ConfigError(f"{key}: lower bound exceeds upper bound")
        return (lo, hi)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string")
        return value
    if isinstance(default, int):
        if not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer")
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number")
    return float(value)


def _validate(cfg: RunConfig):
    r, a, s, g = cfg.resonator, cfg.atoms, cfg.sweep, cfg.g2
    if r.loop not in ("open", "closed"):
        raise ConfigError("resonator.loop: must be 'open' or 'closed'")
    if not r.fsr_hz > 0:
        raise ConfigError("resonator.fsr_hz: must be positive")
    for name in ("kappa0_hz_over_2pi", "kappa_ext_hz_over_2pi"):
        v = getattr(r, name)
        if not 0 <= v < r.fsr_hz:
            raise ConfigError(f"resonator.{name}: must lie in [0, fsr_hz)")
    if a.od is not None and a.n_atoms is not None:
        raise ConfigError("atoms.od / atoms.n_atoms: give exactly one of the two")
    if a.od is not None and a.od < 0:
        raise ConfigError("atoms.od: must be nonnegative")
    if a.n_atoms is not None and a.n_atoms < 0:
        raise ConfigError("atoms.n_atoms: must be nonnegative")
    if not a.gamma_hz_over_2pi > 0:
        raise ConfigError("atoms.gamma_hz_over_2pi: must be positive")
    if not 0 <= a.beta < 1:
        raise ConfigError("atoms.beta: must lie in [0, 1)")
    if not s.span_hz > 0:
        raise ConfigError("sweep.span_hz: must be positive")
    if s.points < 2:
        raise ConfigError("sweep.points: need at least 2")
    if cfg.drive.rabi_hz_over_2pi < 0:
        raise ConfigError("drive.rabi_hz_over_2pi: must be nonnegative")
    if not g.tau_max_s > 0:
        raise ConfigError("g2.tau_max_s: must be positive")
    if g.points < 2:
        raise ConfigError("g2.points: need at least 2")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")


def config_from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    for key, value in data.items():
        if key == "seed":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError("seed: expected an integer")
            cfg.seed = value
            continue
        if key not in _BLOCKS:
            raise ConfigError(f"{key}: unknown key")
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a table")
        block = getattr(cfg, key)
        known = {f.name: f for f in fields(block)}
        for name, v in value.items():
            if name not in known:
                raise ConfigError(f"{key}.{name}: unknown key")
            default = getattr(block, name)
            if default is None:
                default = 0.0
            setattr(block, name, _coerce(key, name, v, default))
    _validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    """Read a TOML run configuration. Missing keys take their defaults."""
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"seed": cfg.seed}
    for name in _BLOCKS:
        block = getattr(cfg, name)
        values = {f.name: getattr(block, f.name) for f in fields(block)}
        out[name] = {k: list(v) if isinstance(v, tuple) else v
                     for k, v in values.items() if v is not None}
    return out
