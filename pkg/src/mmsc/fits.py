"""Spectrum fits: atom-resonator detuning, collective coupling, single-pass OD."""
from __future__ import annotations

import numpy as np

from mmsc.errors import DegenerateFitError, WindowError
from mmsc.model import (
    BETA_DEFAULT,
    FSR_HZ,
    GAMMA_CS_D2,
    TWO_PI,
    EnsembleParams,
    ResonatorParams,
    Spectrum,
    natural_fwhm_hz,
    od_to_gn,
    ring_transmission,
    saturated_lorentzian,
)
from mmsc.nls import FitProblem, FitResult, nls_minimize

DETUNING_SCALE = TWO_PI * 100e3


def _grid_start(cost, candidates):
    costs = [cost(c) for c in candidates]
    return candidates[int(np.argmin(costs))]


def fit_detuning(
    spec: Spectrum,
    res: ResonatorParams,
    gn,
    gamma=GAMMA_CS_D2,
    beta=BETA_DEFAULT,
    search=TWO_PI * 1e6,
    grid_points=41,
) -> FitResult:
    """Fit only the atom-resonator detuning with g_N held fixed.

    ``gn`` is the collective coupling in rad/s, typically obtained from an
    independently measured optical depth via ``od_to_gn``. A coarse scan over
    ``[-search, search]`` picks the starting point.
    """
    ens0 = EnsembleParams.from_gn(gn, res.fsr, gamma, beta)
    f, y = spec.freqs, spec.values

    def residual(p):
        ens = EnsembleParams(gamma, beta, ens0.n_atoms, p[0])
        return ring_transmission(f, res, ens) - y

    start = _grid_start(
        lambda d: float(np.sum(residual([d]) ** 2)), np.linspace(-search, search, grid_points)
    )
    problem = FitProblem(
        residual, [start], names=("delta_at",), x_scale=[DETUNING_SCALE]
    )
    out = nls_minimize(problem)
    out.derived["delta_at_hz"] = (out.value("delta_at") / TWO_PI, out.error("delta_at") / TWO_PI)
    out.notes["gn"] = float(gn)
    return out


def fit_coupling(
    spec: Spectrum,
    res: ResonatorParams,
    gamma=GAMMA_CS_D2,
    beta=BETA_DEFAULT,
    free_detuning=True,
    fit_scale=False,
    od_grid=None,
) -> FitResult:
    """Fit the ensemble optical depth and report the collective coupling.

    beta stays fixed and only the (continuous) atom number moves, since the
    two are not separately identifiable from one transmission spectrum. The
    detuning floats unless ``free_detuning`` is False; ``fit_scale`` adds an
    overall transmission factor.
    """
    f, y = spec.freqs, spec.values
    if spec.span < 2 * res.fsr:
        raise WindowError("coupling fit needs a span of at least three resonance orders")
    if np.ptp(y) < 1e-3:
        raise DegenerateFitError("flat spectrum: no resonances in span")

    names = ["od"]
    if free_detuning:
        names.append("delta_at")
    if fit_scale:
        names.append("scale")
    od1 = EnsembleParams(gamma, beta).od1

    def model(p):
        od = p[0]
        delta = p[1] if free_detuning else 0.0
        scale = p[-1] if fit_scale else 1.0
        ens = EnsembleParams(gamma, beta, max(od, 0.0) / od1, delta)
        return scale * ring_transmission(f, res, ens)

    def residual(p):
        return model(p) - y

    if od_grid is None:
        od_grid = np.concatenate([[0.0], np.geomspace(0.01, 60.0, 80)])

    def grid_cost(od):
        m = model([od] + ([0.0] if free_detuning else []) + ([1.0] if fit_scale else []))
        # the scale enters linearly, so it is profiled out of the coarse scan
        c = float(m @ y / (m @ m)) if fit_scale else 1.0
        return float(np.sum((c * m - y) ** 2)), c

    costs = [grid_cost(od) for od in od_grid]
    best = int(np.argmin([c for c, _ in costs]))
    od_start = float(od_grid[best])
    rest = ([0.0] if free_detuning else []) + ([costs[best][1]] if fit_scale else [])
    x0 = [od_start] + rest
    lower = [0.0] + ([-np.inf] if free_detuning else []) + ([0.0] if fit_scale else [])
    scales = [max(od_start, 0.1)] + ([DETUNING_SCALE] if free_detuning else []) + (
        [1.0] if fit_scale else []
    )
    out = nls_minimize(FitProblem(residual, x0, lower=lower, names=names, x_scale=scales))

    od, s_od = out.value("od"), out.error("od")
    gn = od_to_gn(od, gamma, res.fsr)
    s_gn = 0.5 * gn * s_od / od if od > 0 else od_to_gn(s_od, gamma, res.fsr)
    out.derived["gn"] = (gn, s_gn)
    out.derived["gn_hz"] = (gn / TWO_PI, s_gn / TWO_PI)
    if free_detuning:
        out.derived["delta_at_hz"] = (
            out.value("delta_at") / TWO_PI,
            out.error("delta_at") / TWO_PI,
        )
    out.notes["detuning_floated"] = bool(free_detuning)
    return out


def fit_gn_ladder(spectra, res: ResonatorParams, **kwargs):
    """Coupling fit for each spectrum of a ladder; returns the g_N/2pi values."""
    return [fit_coupling(s, res, **kwargs) for s in spectra]


def fit_od_single_pass(
    spec: Spectrum,
    gamma_fwhm_hz=None,
    free_width=False,
    fit_baseline=True,
    threshold=0.9,
) -> FitResult:
    """Saturated-Lorentzian fit of an open-loop spectrum.

    Peak depth and power broadening only constrain ``od0/(1+s)`` and
    ``Gamma*sqrt(1+s)``, so one of the three line parameters must be pinned.
    By default the width is held at ``gamma_fwhm_hz`` (natural Cs D2 width if
    None) and the saturation is fitted; with ``free_width`` the saturation is
    held at zero and the width is fitted instead. ``threshold`` is the
    transmission level, relative to the off-resonant baseline, that the data
    must dip below.
    """
    f, y = spec.freqs, spec.values
    base0 = float(np.percentile(y, 95))
    if base0 <= 0 or y.min() >= threshold * base0:
        raise WindowError(
            f"transmission never drops below {threshold:g} of the baseline: insufficient absorption"
        )
    width = natural_fwhm_hz() if gamma_fwhm_hz is None else float(gamma_fwhm_hz)

    # starting values from the absorption profile
    i0 = int(np.argmin(y))
    absorb = -np.log(np.clip(y / base0, 1e-12, None))
    od_est = float(min(absorb[i0], 30.0))
    center0 = float(f[i0])
    above = f[absorb > 0.5 * od_est]
    width_est = float(above[-1] - above[0]) if above.size > 1 else width
    if free_width:
        width = max(width_est, 2 * spec.step)

    names = ["od0", "gamma_fwhm_hz", "sat", "center_hz", "baseline"]
    free = {"od0": True, "gamma_fwhm_hz": free_width, "sat": not free_width,
            "center_hz": True, "baseline": fit_baseline}
    full0 = {"od0": od_est, "gamma_fwhm_hz": width, "sat": 0.0,
             "center_hz": center0, "baseline": base0 if fit_baseline else 1.0}
    if not free_width:
        # solve od0/(1+s) = od_est and width*sqrt(1+s) = width_est for s
        full0["sat"] = max((width_est / width) ** 2 - 1.0, 0.0) if width_est > width else 0.0
        full0["od0"] = od_est * (1.0 + full0["sat"])
    lo = {"od0": 0.0, "gamma_fwhm_hz": spec.step, "sat": 0.0, "center_hz": -np.inf, "baseline": 0.0}
    sc = {"od0": max(od_est, 0.01), "gamma_fwhm_hz": width, "sat": 1.0,
          "center_hz": width, "baseline": 1.0}
    fit_names = [n for n in names if free[n]]

    def unpack(p):
        vals = dict(full0)
        vals.update(zip(fit_names, p))
        return vals

    def residual(p):
        v = unpack(p)
        return v["baseline"] * saturated_lorentzian(
            f - v["center_hz"], v["od0"], v["gamma_fwhm_hz"], v["sat"]
        ) - y

    problem = FitProblem(
        residual,
        [full0[n] for n in fit_names],
        lower=[lo[n] for n in fit_names],
        names=fit_names,
        x_scale=[sc[n] for n in fit_names],
    )
    out = nls_minimize(problem)

    # report every line parameter, fixed ones with zero uncertainty
    vals = unpack(out.x)
    idx = {n: i for i, n in enumerate(fit_names)}
    sig = np.array([out.sigma[idx[n]] if n in idx else 0.0 for n in names])
    cov = np.zeros((len(names), len(names)))
    for a, na in enumerate(names):
        for b, nb in enumerate(names):
            if na in idx and nb in idx:
                cov[a, b] = out.cov[idx[na], idx[nb]]
    act = np.array([bool(out.active[idx[n]]) if n in idx else True for n in names])
    out.names = tuple(names)
    out.x = np.array([vals[n] for n in names])
    out.sigma = sig
    out.cov = cov
    out.active = act
    out.notes["fixed"] = [n for n in names if not free[n]]
    out.derived["od_on_resonance"] = (
        vals["od0"] / (1 + vals["sat"]),
        sig[0] / (1 + vals["sat"]),
    )
    return out


def gn_from_od_fit(result: FitResult, gamma=GAMMA_CS_D2, fsr=FSR_HZ):
    """Collective coupling (rad/s) and its error from a single-pass OD fit."""
    od, s = result.value("od0"), result.error("od0")
    gn = od_to_gn(od, gamma, fsr)
    return gn, 0.5 * gn * s / od if od > 0 else 0.0
