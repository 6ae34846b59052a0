"""Bound-constrained damped Gauss-Newton (Levenberg-Marquardt) minimizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from mmsc.errors import FitError

CONVERGED_GRADIENT = "converged-gradient"
CONVERGED_STEP = "converged-step"
MAX_ITERS = "max-iters"

DAMPING_UP = 7.0
DAMPING_DOWN = 3.0
DAMPING_INIT = 1e-3
DAMPING_MAX = 1e12


@dataclass
class FitProblem:
    residual: Callable[[np.ndarray], np.ndarray]
    x0: Sequence[float]
    lower: Optional[Sequence[float]] = None
    upper: Optional[Sequence[float]] = None
    names: Optional[Sequence[str]] = None
    # typical magnitude per parameter; sets finite-difference steps and the
    # coordinates in which damping acts
    x_scale: Optional[Sequence[float]] = None
    gtol: float = 1e-10
    xtol: float = 1e-10
    max_iter: int = 200
    diff_step: float = 1e-6

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        n = self.x0.size
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if self.names is None:
            self.names = tuple(f"p{i}" for i in range(n))
        self.names = tuple(self.names)
        if self.x_scale is None:
            self.x_scale = np.where(self.x0 != 0, np.abs(self.x0), 1.0)
        self.x_scale = np.asarray(self.x_scale, dtype=float)
        if not (self.lower.shape == self.upper.shape == self.x_scale.shape == (n,)):
            raise ValueError("bounds and scales must match the parameter count")
        if len(self.names) != n:
            raise ValueError("one name per parameter")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        if np.any(self.x0 < self.lower) or np.any(self.x0 > self.upper):
            raise ValueError("initial parameters outside bounds")


@dataclass
class FitResult:
    names: tuple
    x: np.ndarray
    sigma: np.ndarray
    cost: float
    n_iter: int
    status: str
    cov: np.ndarray
    n_residuals: int
    active: np.ndarray
    cost_history: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status != MAX_ITERS

    @property
    def params(self) -> dict:
        return dict(zip(self.names, self.x.tolist()))

    def value(self, name):
        return float(self.x[self.names.index(name)])

    def error(self, name):
        return float(self.sigma[self.names.index(name)])

    @property
    def dof(self) -> int:
        return self.n_residuals - int(np.count_nonzero(~self.active))


def forward_jacobian(fun, x, f0=None, rel_step=1e-6, scale=None):
    """Forward-difference Jacobian with steps ``rel_step * max(|x|, scale)``."""
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    scale = np.ones_like(x) if scale is None else np.asarray(scale, float)
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), scale[j])
        xp = x.copy()
        xp[j] += h
        h = xp[j] - x[j]  # the representable step
        jac[:, j] = (fun(xp) - f0) / h
    return jac


def _checked(fun, x):
    r = np.asarray(fun(x), dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise FitError(f"non-finite residual at parameters {x!r}")
    return r


def _free_mask(z, g, zlo, zhi):
    # a parameter pinned on a bound leaves the step when descent pushes it out
    at_lo = (z <= zlo) & (g > 0)
    at_hi = (z >= zhi) & (g < 0)
    return ~(at_lo | at_hi)


def _gradient_measure(jac, r, free):
    rn = np.linalg.norm(r)
    if rn == 0 or not free.any():
        return 0.0
    jf = jac[:, free]
    cn = np.linalg.norm(jf, axis=0)
    cn[cn == 0] = 1.0
    return float(np.max(np.abs(jf.T @ r) / (cn * rn)))


def _covariance(jac, cost, free, m):
    n = jac.shape[1]
    cov = np.zeros((n, n))
    nf = int(free.sum())
    if nf == 0:
        return cov
    dof = m - nf
    s2 = cost / dof if dof > 0 else np.nan
    jf = jac[:, free]
    inv = np.linalg.pinv(jf.T @ jf)
    cov[np.ix_(free, free)] = inv * s2
    return cov


def nls_minimize(problem: FitProblem) -> FitResult:
    """Minimize ``sum(residual(x)**2)`` subject to box bounds.

    Each iteration first tries the undamped Gauss-Newton step and keeps it when
    the actual cost reduction is at least 3/4 of the linear-model prediction;
    otherwise the damping parameter is raised by 7 per rejection and lowered by
    3 per acceptance, starting from 1e-3 times the largest normal-matrix
    diagonal. Damping acts in coordinates scaled by ``x_scale``.
    """
    p = problem
    scale = p.x_scale
    zlo, zhi = p.lower / scale, p.upper / scale

    def fz(z):
        return _checked(p.residual, z * scale)

    z = p.x0 / scale
    r = fz(z)
    m = r.size
    if m < z.size:
        raise FitError("fewer residuals than parameters")
    cost = float(r @ r)
    history = [cost]
    lam = None
    status = MAX_ITERS
    it = 0
    jac = forward_jacobian(fz, z, r, p.diff_step)

    while it < p.max_iter:
        g = jac.T @ r
        free = _free_mask(z, g, zlo, zhi)
        if cost <= 1e-28 * history[0] or _gradient_measure(jac, r, free) <= p.gtol:
            status = CONVERGED_GRADIENT
            break
        jf = jac[:, free]
        a = jf.T @ jf
        gf = g[free]
        if lam is None:
            lam = DAMPING_INIT * float(np.max(np.diag(a))) if a.size else DAMPING_INIT
            lam = lam if lam > 0 else DAMPING_INIT
        it += 1

        def trial(damping):
            step = np.zeros_like(z)
            step[free] = np.linalg.solve(a + damping * np.eye(a.shape[0]), -gf)
            z_new = np.clip(z + step, zlo, zhi)
            d = z_new - z
            r_new = np.asarray(p.residual(z_new * scale), dtype=float).ravel()
            c_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            jd = jac @ d
            predicted = -(2.0 * (d @ g) + jd @ jd)
            return z_new, r_new, c_new, predicted, d

        accepted = False
        if a.size and np.linalg.cond(a) < 1e12:
            z_new, r_new, c_new, pred, d = trial(0.0)
            accepted = pred > 0 and (cost - c_new) >= 0.75 * pred

        while not accepted:
            try:
                z_new, r_new, c_new, pred, d = trial(lam)
            except np.linalg.LinAlgError:
                lam *= DAMPING_UP
                if lam > DAMPING_MAX:
                    raise FitError("damping exceeded 1e12 on a singular normal matrix")
                continue
            if c_new < cost:
                accepted = True
                lam /= DAMPING_DOWN
                break
            if np.linalg.norm(d) <= p.xtol * (np.linalg.norm(z) + p.xtol):
                break
            lam *= DAMPING_UP
            if lam > DAMPING_MAX:
                raise FitError("damping exceeded 1e12 without reducing the cost")

        if not accepted:
            status = CONVERGED_STEP
            break
        z, r, cost = z_new, r_new, c_new
        history.append(cost)
        jac = forward_jacobian(fz, z, r, p.diff_step)
        if np.linalg.norm(d) <= p.xtol * (np.linalg.norm(z) + p.xtol):
            status = CONVERGED_STEP
            break

    g = jac.T @ r
    free = _free_mask(z, g, zlo, zhi)
    # a bound-touching parameter whose gradient points inward is still free
    active = ~free
    cov_z = _covariance(jac, cost, free, m)
    cov = cov_z * np.outer(scale, scale)
    sigma = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult(
        names=p.names,
        x=z * scale,
        sigma=sigma,
        cost=cost,
        n_iter=it,
        status=status,
        cov=cov,
        n_residuals=m,
        active=active,
        cost_history=history,
    )
