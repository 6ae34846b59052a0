"""Resonance-fluorescence correlations of driven two-level atoms.

A single affine generator in the Pauli basis propagates both density matrices
and the operators used by the quantum regression theorem. Operators are
written ``X = (c0 I + cx sx + cy sy + cz sz) / 2`` with basis order
``(|e>, |g>)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from mmsc.errors import DegenerateFitError, FitError, StepSizeError, WindowError
from mmsc.model import GAMMA_CS_D2
from mmsc.nls import FitProblem, FitResult, nls_minimize

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY)

GROUND = np.array([[0, 0], [0, 1]], dtype=complex)
EXCITED = np.array([[1, 0], [0, 0]], dtype=complex)

NORMALIZATION_WINDOW_S = 10e-6


@dataclass(frozen=True)
class DriveParams:
    """Resonant-by-default drive; ``detuning`` is laser minus atom, rad/s."""

    rabi: float
    gamma: float = GAMMA_CS_D2
    detuning: float = 0.0

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("rabi must be nonnegative")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class EnsembleG2Params:
    n_atoms: float
    mu0: float
    mu: float
    mu0_bounds: tuple = (0.0, 1.0)
    mu_bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name in ("mu0", "mu"):
            lo, hi = getattr(self, name + "_bounds")
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValueError(f"{name}_bounds must be a finite closed interval")
            if not lo <= getattr(self, name) <= hi:
                raise ValueError(f"{name}={getattr(self, name)} outside [{lo}, {hi}]")
        if self.n_atoms < 0:
            raise ValueError("n_atoms must be nonnegative")


@dataclass
class CorrelationTrace:
    taus: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values)
        if self.taus.ndim != 1 or self.taus.shape != self.values.shape:
            raise ValueError("taus and values must be 1-d arrays of equal length")
        if self.taus.size == 0 or self.taus[0] != 0:
            raise ValueError("taus must start at 0")
        if np.any(np.diff(self.taus) <= 0):
            raise ValueError("taus must be increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("correlation values must be finite")


def _lindblad(drive: DriveParams, x):
    h = -drive.detuning * (SIGMA_PLUS @ SIGMA_MINUS) + 0.5 * drive.rabi * (SIGMA_PLUS + SIGMA_MINUS)
    decay = 2.0 * drive.gamma
    jump = SIGMA_MINUS
    pop = jump.conj().T @ jump
    return (
        -1j * (h @ x - x @ h)
        + decay * (jump @ x @ jump.conj().T - 0.5 * (pop @ x + x @ pop))
    )


@lru_cache(maxsize=256)
def _generator_cached(rabi, gamma, detuning):
    drive = DriveParams(rabi, gamma, detuning)
    gen = np.zeros((4, 4))
    for j, basis in enumerate(PAULI):
        image = _lindblad(drive, basis)
        for k in range(3):
            gen[k, j] = 0.5 * np.trace(PAULI[k] @ image).real
    gen.setflags(write=False)
    return gen


def bloch_generator(drive: DriveParams) -> np.ndarray:
    """4x4 affine generator acting on ``(cx, cy, cz, c0)``; last row is zero."""
    return _generator_cached(float(drive.rabi), float(drive.gamma), float(drive.detuning))


def to_pauli(op) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    return np.array([np.trace(p @ op) for p in PAULI])


def from_pauli(c) -> np.ndarray:
    c = np.asarray(c)
    return 0.5 * np.einsum("...k,kij->...ij", c, np.array(PAULI))


def expectation(op, c):
    """``Tr(op X)`` for Pauli coordinates ``c`` of X (vectorized over rows)."""
    w = 0.5 * np.array([np.trace(op @ p) for p in PAULI])
    return np.asarray(c) @ w


def bloch_steady_state(drive: DriveParams):
    """Stationary excited population and coherence ``rho_eg = <e|rho|g>``."""
    w, g, d = drive.rabi, drive.gamma, drive.detuning
    denom = w * w + 2.0 * d * d + 2.0 * g * g
    return 0.5 * w * w / denom, w * (d - 1j * g) / denom


def steady_state_matrix(drive: DriveParams) -> np.ndarray:
    ree, reg = bloch_steady_state(drive)
    return np.array([[ree, reg], [np.conj(reg), 1 - ree]], dtype=complex)


def _check_grid(taus, drive):
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or taus[0] < 0 or np.any(np.diff(taus) <= 0):
        raise ValueError("tau grid must be nonnegative and increasing")
    steps = np.diff(np.concatenate([[0.0], taus]))
    limit = 0.1 / max(drive.gamma, drive.rabi, abs(drive.detuning))
    if steps.max() > limit * (1 + 1e-9):
        raise StepSizeError(f"grid step {steps.max():.3g} s exceeds guard {limit:.3g} s")
    return taus, steps


def _uniform_powers(prop, c, count, block=64):
    """``prop**k @ c`` for k = 1..count using blocked products."""
    powers = [np.eye(4, dtype=complex)]
    for _ in range(block - 1):
        powers.append(prop @ powers[-1])
    powers = np.array(powers)
    jump = prop @ powers[-1]
    heads = [c]
    for _ in range(count // block):
        heads.append(jump @ heads[-1])
    heads = np.array(heads).reshape(len(heads), 4, -1)
    # out[j, r] = prop**(j*block + r) @ c
    out = np.matmul(powers[None], heads[:, None])
    out = out.reshape((-1,) + c.shape)
    return out[1 : count + 1]


def evolve(c0, drive: DriveParams, taus):
    """Propagate Pauli coordinates (shape (4,) or (4, m)) onto ``taus``.

    Each step applies the exact exponential of the affine generator; equal
    steps share one propagator, and runs of equal steps are applied in
    vectorized blocks of its powers.
    """
    taus, steps = _check_grid(taus, drive)
    gen = bloch_generator(drive)
    c = np.array(c0, dtype=complex)
    out = np.empty((taus.size,) + c.shape, dtype=complex)
    cache = {}

    def propagator(dt):
        key = round(dt, 18)
        if key not in cache:
            cache[key] = expm(gen * dt)
        return cache[key]

    n = taus.size
    i = 0
    if steps[0] == 0:
        out[0] = c
        i = 1
    # boundaries between runs of equal steps (float jitter of linspace ignored)
    change = np.flatnonzero(np.abs(np.diff(steps[i:])) > 1e-9 * steps[i + 1 :]) + i + 1
    starts = np.concatenate([[i], change]).astype(int)
    ends = np.concatenate([change, [n]]).astype(int)
    for a, b in zip(starts, ends):
        if a >= n:
            break
        prop = propagator(steps[a])
        if b - a == 1:
            c = prop @ c
            out[a] = c
        else:
            out[a:b] = _uniform_powers(prop, c, b - a)
            c = out[b - 1]
    return out


def propagate_bloch(rho0, drive: DriveParams, taus):
    """Density-matrix trajectory sampled on ``taus`` (shape (len(taus), 2, 2))."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2) or not np.allclose(rho0, rho0.conj().T):
        raise ValueError("initial state must be a Hermitian 2x2 matrix")
    if abs(np.trace(rho0) - 1) > 1e-12 or np.linalg.eigvalsh(rho0).min() < -1e-12:
        raise ValueError("initial state must have unit trace and be positive")
    traj = evolve(to_pauli(rho0), drive, taus)
    return from_pauli(traj)


def _regression_coords(drive: DriveParams, taus):
    """Trajectories started from |g><g| and from sigma_minus rho_ss."""
    start = np.stack([to_pauli(GROUND), to_pauli(SIGMA_MINUS @ steady_state_matrix(drive))], axis=1)
    return evolve(start, drive, taus)


def _gammas(drive: DriveParams, taus):
    coords = _regression_coords(drive, taus)
    ree, _ = bloch_steady_state(drive)
    pe = expectation(EXCITED, coords[:, :, 0]).real
    g1 = expectation(SIGMA_PLUS, coords[:, :, 1])
    return ree * pe, g1


def gamma2(taus, drive: DriveParams) -> CorrelationTrace:
    """Single-atom intensity correlation ``<s+ s+(t) s-(t) s->``.

    Tends to ``rho_ee**2`` at long delay and vanishes at zero delay.
    """
    g2, _ = _gammas(drive, taus)
    return CorrelationTrace(taus, g2)


def gamma1(taus, drive: DriveParams) -> CorrelationTrace:
    """Single-atom field correlation ``<s+(t) s-(0)>`` in the stationary state."""
    _, g1 = _gammas(drive, taus)
    return CorrelationTrace(taus, g1)


def _ensemble_g2(g2, g1, n, mu0, mu):
    big = n * g2 + n * (n - 1) * (mu0 + mu * np.abs(g1) ** 2)
    if big[-1] == 0:
        raise ValueError("G2 vanishes at the normalization delay")
    return big / big[-1]


def g2_ensemble(taus, drive: DriveParams, ens: EnsembleG2Params,
                min_window=NORMALIZATION_WINDOW_S) -> CorrelationTrace:
    """Normalized intensity correlation of light scattered by N atoms.

    Combines ``N Gamma2 + N(N-1)(mu0 + mu |Gamma1|^2)`` and divides by its
    value at the largest delay, which must reach ``min_window``.
    """
    taus = np.asarray(taus, dtype=float)
    if taus[-1] < min_window * (1 - 1e-9):
        raise WindowError(f"delay grid ends at {taus[-1]:.3g} s, need {min_window:.3g} s")
    if ens.n_atoms <= 0:
        raise ValueError("g2 of an empty ensemble is undefined")
    g2, g1 = _gammas(drive, taus)
    return CorrelationTrace(taus, _ensemble_g2(g2, g1, ens.n_atoms, ens.mu0, ens.mu))


def delay_grid(tau_max=NORMALIZATION_WINDOW_S, step=1e-9):
    n = int(round(tau_max / step))
    return np.linspace(0.0, tau_max, n + 1)


def add_counting_noise(trace: CorrelationTrace, mean_counts, seed=None) -> CorrelationTrace:
    """Poisson coincidence noise at ``mean_counts`` per bin for g2 = 1."""
    rng = np.random.default_rng(seed)
    lam = np.clip(np.real(trace.values), 0, None) * mean_counts
    return CorrelationTrace(trace.taus.copy(), rng.poisson(lam) / mean_counts)


def _tail_mean(values, taus, fraction=0.1):
    tail = taus >= taus[-1] * (1 - fraction)
    return float(np.mean(values[tail]))


def _profile_n(g0, drive, mu0, mu, lo, hi):
    """Atom number reproducing a zero-delay value g0 at fixed drive and mu's."""
    ree, reg = bloch_steady_state(drive)
    a = mu0 + mu * ree * ree
    b = mu0 + mu * abs(reg) ** 4
    denom = a - g0 * b
    if denom <= 0:
        return hi
    return float(np.clip(1.0 + g0 * ree * ree / denom, lo, hi))


def _structure_check(taus, values, gamma):
    tail = taus >= taus[-1] * 0.9
    noise = np.std(values[tail])
    early = taus <= 3.0 / gamma
    dev = abs(np.mean(values[early]) - 1.0)
    if np.ptp(values) == 0 or dev <= 3.0 * noise / np.sqrt(max(early.sum(), 1)):
        raise DegenerateFitError("correlation data show no structure versus delay")


def fit_atom_number(
    data: CorrelationTrace,
    gamma=GAMMA_CS_D2,
    rabi_bounds=None,
    mu_bounds=(0.0, 1.0),
    mu0_bounds=(0.0, 1.0),
    n_bounds=(0.5, 1e4),
    rabi_start=None,
    interval_corners=True,
) -> FitResult:
    """Constrained fit of N, Rabi frequency, mu and mu0 to normalized g2 data.

    Only ``(N-1) mu`` and ``(N-1) mu0`` are fixed by the data, so the atom
    number is resolved by the mu intervals. The reported ``n_eff``
    uncertainty adds the statistical error at the best-fit mu's and half the
    spread of refits with (mu, mu0) pinned on the interval corners in
    quadrature.
    """
    taus = data.taus
    values = np.real(np.asarray(data.values, dtype=float))
    values = values / _tail_mean(values, taus)
    _structure_check(taus, values, gamma)

    if rabi_bounds is None:
        rabi_bounds = (0.05 * gamma, 20.0 * gamma)
    r_lo, r_hi = rabi_bounds
    # the propagator step guard caps the admissible drive
    r_hi = min(r_hi, 0.1 / np.max(np.diff(taus)))
    cache = {}

    def gammas(rabi):
        key = float(rabi)
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[key] = _gammas(DriveParams(key, gamma), taus)
        return cache[key]

    def model(n, rabi, mu, mu0):
        g2, g1 = gammas(rabi)
        return _ensemble_g2(g2, g1, n, mu0, mu)

    mu_mid = 0.5 * (mu_bounds[0] + mu_bounds[1])
    mu0_mid = 0.5 * (mu0_bounds[0] + mu0_bounds[1])
    g0 = float(np.mean(values[:3]))

    def profiled(rabi, mu=mu_mid, mu0=mu0_mid):
        n = _profile_n(g0, DriveParams(rabi, gamma), mu0, mu, *n_bounds)
        return n, float(np.sum((model(n, rabi, mu, mu0) - values) ** 2))

    if rabi_start is None:
        scan = np.geomspace(max(r_lo, 0.1 * gamma), r_hi, 40)
        rabi_start = scan[int(np.argmin([profiled(w)[1] for w in scan]))]
    n_start = profiled(rabi_start)[0]

    def solve(fixed_mu=None):
        if fixed_mu is None:
            names = ("n_atoms", "rabi", "mu", "mu0")
            x0 = [n_start, rabi_start, mu_mid, mu0_mid]
            lo = [n_bounds[0], r_lo, mu_bounds[0], mu0_bounds[0]]
            hi = [n_bounds[1], r_hi, mu_bounds[1], mu0_bounds[1]]

            def residual(p):
                return model(*p) - values
        else:
            mu, mu0 = fixed_mu
            names = ("n_atoms", "rabi")
            n0 = _profile_n(g0, DriveParams(best_rabi, gamma), mu0, mu, *n_bounds)
            x0 = [n0, best_rabi]
            lo, hi = [n_bounds[0], r_lo], [n_bounds[1], r_hi]

            def residual(p):
                return model(p[0], p[1], mu, mu0) - values

        scales = [max(abs(x0[0]), 1.0), gamma] + [
            max(b[1] - b[0], 1e-3) for b in (mu_bounds, mu0_bounds)
        ][: len(x0) - 2]
        x0 = np.clip(x0, lo, hi)
        return nls_minimize(FitProblem(residual, x0, lower=lo, upper=hi, names=names, x_scale=scales))

    out = solve()
    best_rabi = out.value("rabi")
    # statistical error with the geometric factors held at their estimates
    stat = solve((out.value("mu"), out.value("mu0")))
    n_hat, s_stat = out.value("n_atoms"), stat.error("n_atoms")

    spread = 0.0
    corner_values = []
    if interval_corners:
        for mu in mu_bounds:
            for mu0 in mu0_bounds:
                try:
                    corner_values.append(solve((mu, mu0)).value("n_atoms"))
                except FitError:  # a corner may be incompatible with the data
                    continue
        if corner_values:
            spread = 0.5 * (max(corner_values) - min(corner_values))
    out.derived["n_eff"] = (n_hat, float(np.hypot(s_stat, spread)))
    out.derived["n_eff_stat"] = (n_hat, s_stat)
    out.derived["rabi"] = (best_rabi, stat.error("rabi"))
    out.notes["corner_n"] = corner_values
    out.notes["interval_spread"] = spread
    return out
