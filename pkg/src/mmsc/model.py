"""Closed-form transmission model of atoms coupled to a fiber-ring resonator.

Units: decay and coupling rates (``gamma``, ``kappa0``, ``kappa_ext``, ``g_N``)
and atomic detunings are angular (rad/s). The free spectral range and every
spectrum axis are cyclic frequencies in Hz.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from mmsc.errors import DomainError

TWO_PI = 2.0 * np.pi

# Reference values of the 30 m ring experiment.
FSR_HZ = 7.1e6
KAPPA0 = TWO_PI * 0.39e6
KAPPA_EXT = TWO_PI * 0.21e6
# Cs D2 dipole decay; the population decays at twice this rate.
GAMMA_CS_D2 = TWO_PI * 2.61e6
OD1_REFERENCE = 0.022
BETA_DEFAULT = OD1_REFERENCE / 4.0


@dataclass(frozen=True)
class ResonatorParams:
    """Fiber ring geometry and loss rates.

    ``loop_open`` selects the single-pass configuration in which the coupler
    transmission ``t1`` is taken to zero.
    """

    fsr: float = FSR_HZ
    kappa0: float = KAPPA0
    kappa_ext: float = KAPPA_EXT
    loop_open: bool = False

    def __post_init__(self):
        if not self.fsr > 0:
            raise DomainError(f"fsr must be positive, got {self.fsr}")
        if self.kappa0 < 0 or self.kappa_ext < 0:
            raise DomainError("loss rates must be nonnegative")
        for name in ("kappa0", "kappa_ext"):
            ratio = getattr(self, name) / (TWO_PI * self.fsr)
            if ratio >= 1:
                raise DomainError(f"{name}/(2 pi fsr) = {ratio:.3g} must be < 1")

    @classmethod
    def from_hz(cls, fsr_hz, kappa0_hz, kappa_ext_hz, loop_open=False):
        """Build from rates given as kappa/2pi in Hz."""
        return cls(fsr_hz, TWO_PI * kappa0_hz, TWO_PI * kappa_ext_hz, loop_open)

    @property
    def finesse(self) -> float:
        return finesse(self)


@dataclass(frozen=True)
class EnsembleParams:
    """Atomic side of the coupled system.

    ``n_atoms`` is real-valued so fits can move it continuously.
    """

    gamma: float = GAMMA_CS_D2
    beta: float = BETA_DEFAULT
    n_atoms: float = 0.0
    delta_at: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not 0 <= self.beta < 1:
            raise DomainError(f"beta must lie in [0, 1), got {self.beta}")
        if self.n_atoms < 0:
            raise DomainError(f"n_atoms must be nonnegative, got {self.n_atoms}")

    @property
    def od1(self) -> float:
        """On-resonance optical depth of one atom, -ln|t_at(0)|^2."""
        return single_atom_od(self.beta)

    @property
    def od(self) -> float:
        return self.n_atoms * self.od1

    @classmethod
    def from_od(cls, od, gamma=GAMMA_CS_D2, beta=BETA_DEFAULT, delta_at=0.0):
        if od < 0:
            raise DomainError(f"od must be nonnegative, got {od}")
        od1 = single_atom_od(beta)
        if od > 0 and od1 == 0:
            raise DomainError("beta = 0 cannot produce a nonzero optical depth")
        n = od / od1 if od > 0 else 0.0
        return cls(gamma, beta, n, delta_at)

    @classmethod
    def from_gn(cls, gn, fsr=FSR_HZ, gamma=GAMMA_CS_D2, beta=BETA_DEFAULT, delta_at=0.0):
        return cls.from_od(gn_to_od(gn, gamma, fsr), gamma, beta, delta_at)

    def with_od(self, od):
        return replace(self, n_atoms=od / self.od1 if od > 0 else 0.0)


@dataclass
class Spectrum:
    """Transmission sampled against probe detuning (Hz) from the central line."""

    freqs: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.freqs.ndim != 1 or self.freqs.shape != self.values.shape:
            raise ValueError("freqs and values must be 1-d arrays of equal length")
        if self.freqs.size > 1 and not np.all(np.diff(self.freqs) > 0):
            raise ValueError("freqs must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum values must be finite")

    def __len__(self):
        return self.freqs.size

    @property
    def step(self) -> float:
        return float(np.mean(np.diff(self.freqs))) if len(self) > 1 else 0.0

    @property
    def span(self) -> float:
        return float(self.freqs[-1] - self.freqs[0]) if len(self) else 0.0


def coupling_coefficients(res: ResonatorParams):
    """Round-trip and coupler amplitude coefficients ``(t_rt, t1, t2)``."""
    t_rt = np.sqrt(1.0 - res.kappa0 / (TWO_PI * res.fsr))
    t1 = np.sqrt(1.0 - res.kappa_ext / (TWO_PI * res.fsr))
    t2 = np.sqrt(1.0 - t1 * t1)
    return float(t_rt), float(t1), float(t2)


def single_atom_od(beta):
    return -2.0 * np.log((1.0 - beta) / (1.0 + beta))


def atom_transmission(delta, ens: EnsembleParams):
    """Complex field transmission past one atom at atom-light detuning ``delta``."""
    delta = np.asarray(delta, dtype=float)
    g, b = ens.gamma, ens.beta
    return (g - b * g - 1j * delta) / (g + b * g - 1j * delta)


def ensemble_transmission(delta, ens: EnsembleParams):
    """``t_at**N`` on the principal branch, continuous in N."""
    if ens.n_atoms == 0:
        return np.ones_like(np.asarray(delta, dtype=float), dtype=complex)
    return np.exp(ens.n_atoms * np.log(atom_transmission(delta, ens)))


def round_trip_amplitude(freq_hz, res: ResonatorParams, ens: EnsembleParams):
    """Field amplitude after one pass around the ring, ``e^{ikL} t_rt t_at^N``.

    The propagation phase runs as ``-2 pi f / fsr`` so that it shares its time
    convention with ``atom_transmission``; with the opposite sign the atomic
    dispersion would pull the neighbouring modes toward the atomic line.
    """
    f = np.asarray(freq_hz, dtype=float)
    t_rt, _, _ = coupling_coefficients(res)
    delta = ens.delta_at - TWO_PI * f
    return np.exp(-1j * TWO_PI * f / res.fsr) * t_rt * ensemble_transmission(delta, ens)


def ring_amplitude(freq_hz, res: ResonatorParams, ens: EnsembleParams):
    x = round_trip_amplitude(freq_hz, res, ens)
    if res.loop_open:
        return x
    _, t1, _ = coupling_coefficients(res)
    denom = x * t1 - 1.0
    if np.any(np.abs(denom) == 0):
        raise DomainError("lossless resonant ring: transmission denominator vanishes")
    return (x - t1) / denom


def ring_transmission(freq_hz, res: ResonatorParams, ens: EnsembleParams):
    """Power transmission past the ring at probe detuning ``freq_hz`` (Hz)."""
    return np.abs(ring_amplitude(freq_hz, res, ens)) ** 2


def od_to_gn(od, gamma=GAMMA_CS_D2, fsr=FSR_HZ):
    """Collective coupling g_N (rad/s) from single-pass optical depth.

    g_N**2 = 2 fsr gamma OD with fsr in Hz and gamma in rad/s, which is
    (g_N/2pi)**2 = fsr (gamma/2pi) OD / pi in cyclic units.
    """
    od = np.asarray(od, dtype=float)
    if np.any(od < 0):
        raise DomainError("od must be nonnegative")
    out = np.sqrt(2.0 * fsr * gamma * od)
    return float(out) if out.ndim == 0 else out


def gn_to_od(gn, gamma=GAMMA_CS_D2, fsr=FSR_HZ):
    gn = np.asarray(gn, dtype=float)
    out = gn * gn / (2.0 * fsr * gamma)
    return float(out) if out.ndim == 0 else out


def finesse(res: ResonatorParams) -> float:
    """FSR over the FWHM linewidth (kappa0 + kappa_ext)/pi."""
    return np.pi * res.fsr / (res.kappa0 + res.kappa_ext)


def cooperativity(od, finesse_value):
    """Collective cooperativity C_N = F OD / pi."""
    if finesse_value <= 0:
        raise DomainError("finesse must be positive")
    return finesse_value * np.asarray(od, dtype=float) / np.pi


def saturated_lorentzian(delta_hz, od0, gamma_fwhm_hz, sat):
    """Single-pass transmission exp(-od0 / (1 + sat + (2 delta/Gamma)^2))."""
    x = 2.0 * np.asarray(delta_hz, dtype=float) / gamma_fwhm_hz
    return np.exp(-od0 / (1.0 + sat + x * x))


def natural_fwhm_hz(gamma=GAMMA_CS_D2) -> float:
    """Absorption FWHM in Hz of a line with dipole decay ``gamma``."""
    return 2.0 * gamma / TWO_PI
