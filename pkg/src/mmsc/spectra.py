"""Spectrum synthesis, shot noise, dip extraction and trace recentering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from mmsc.errors import AmbiguousAlignmentError, NoClearMinimumError, WindowError
from mmsc.model import EnsembleParams, ResonatorParams, Spectrum, ring_transmission

DEFAULT_SPAN_HZ = 40e6
DEFAULT_POINTS = 4001


@dataclass(frozen=True)
class ModeShift:
    order: int
    shift: float  # Hz, positive away from the central line
    depth: float
    position: float  # Hz, absolute location of the refined minimum


@dataclass
class RecenterReport:
    offsets: np.ndarray
    rss_before: np.ndarray
    rss_after: np.ndarray


def frequency_grid(span_hz=DEFAULT_SPAN_HZ, points=DEFAULT_POINTS, center_hz=0.0):
    return center_hz + np.linspace(-span_hz / 2, span_hz / 2, points)


def synthesize(grid, res: ResonatorParams, ens: EnsembleParams, label=None) -> Spectrum:
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be finite and strictly increasing")
    meta = {
        "span_hz": float(grid[-1] - grid[0]),
        "step_hz": float(np.mean(np.diff(grid))) if grid.size > 1 else 0.0,
        "points": int(grid.size),
        "loop": "open" if res.loop_open else "closed",
        "with_atoms": bool(ens.n_atoms > 0 and ens.beta > 0),
        "fsr_hz": res.fsr,
        "od": ens.od,
        "n_atoms": ens.n_atoms,
        "delta_at_hz": ens.delta_at / (2 * np.pi),
    }
    if label:
        meta["label"] = label
    return Spectrum(grid, ring_transmission(grid, res, ens), meta)


def add_shot_noise(spec: Spectrum, mean_counts_per_bin, seed=None) -> Spectrum:
    """Replace each value by Poisson(T * counts) / counts.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if not mean_counts_per_bin > 0:
        raise ValueError("mean_counts_per_bin must be positive")
    rng = np.random.default_rng(seed)
    lam = np.clip(spec.values, 0, None) * mean_counts_per_bin
    noisy = rng.poisson(lam) / mean_counts_per_bin
    meta = dict(spec.meta, counts_per_bin=float(mean_counts_per_bin))
    return Spectrum(spec.freqs.copy(), noisy.astype(float), meta)


def _parabolic_vertex(x, y, i):
    """Refine a sampled minimum at index i with a 3-point parabola."""
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom <= 0:
        return x[i], y1
    h = x[i + 1] - x[i]
    p = 0.5 * (y0 - y2) / denom
    return x[i] + p * h, y1 - 0.25 * (y0 - y2) * p


def find_mode_shifts(spec: Spectrum, fsr, orders) -> list[ModeShift]:
    """Locate the transmission minimum for each resonance order.

    Order ``n`` is searched in ``[n fsr - fsr/2, n fsr + fsr/2]``.
    """
    out = []
    f, t = spec.freqs, spec.values
    for n in orders:
        lo, hi = n * fsr - fsr / 2, n * fsr + fsr / 2
        if f[0] > lo or f[-1] < hi:
            raise WindowError(f"order {n} window [{lo:.4g}, {hi:.4g}] Hz not covered")
        idx = np.flatnonzero((f >= lo) & (f <= hi))
        i = idx[np.argmin(t[idx])]
        if i == idx[0] or i == idx[-1]:
            raise NoClearMinimumError(f"order {n}: minimum on window edge")
        pos, depth = _parabolic_vertex(f, t, i)
        sign = 1.0 if n >= 0 else -1.0
        out.append(ModeShift(int(n), sign * (pos - n * fsr), float(depth), float(pos)))
    return out


def find_dips(spec: Spectrum, lo=-np.inf, hi=np.inf, prominence=1e-3):
    """Refined positions and depths of local minima inside ``(lo, hi)``."""
    idx, _ = find_peaks(-spec.values, prominence=prominence)
    dips = []
    for i in idx:
        if lo < spec.freqs[i] < hi and 0 < i < len(spec) - 1:
            dips.append(_parabolic_vertex(spec.freqs, spec.values, i))
    return dips


def shift_spectrum(spec: Spectrum, offset_hz) -> Spectrum:
    """Resample so that a feature at ``f0 + offset`` moves to ``f0``."""
    values = np.interp(spec.freqs + offset_hz, spec.freqs, spec.values)
    meta = dict(spec.meta, applied_offset_hz=float(offset_hz))
    return Spectrum(spec.freqs.copy(), values, meta)


def _alignment_cost(trace, reference, offset, step):
    """Mean squared misfit over the overlap, scaled to the full grid length."""
    f = reference.freqs
    src = f + offset
    keep = (src >= trace.freqs[0]) & (src <= trace.freqs[-1])
    if keep.sum() < 3:
        return np.inf
    moved = np.interp(src[keep], trace.freqs, trace.values)
    return float(np.mean((moved - reference.values[keep]) ** 2) * f.size)


def _integer_scan(trace, reference, kmax):
    t, r = trace.values, reference.values
    n = r.size
    ks = np.arange(-kmax, kmax + 1)
    costs = np.empty(ks.size)
    for j, k in enumerate(ks):
        if k >= 0:
            d = t[k:] - r[: n - k]
        else:
            d = t[: n + k] - r[-k:]
        costs[j] = np.mean(d * d) * n
    return ks, costs


def _golden(fun, a, b, tol):
    invphi = (np.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def align_offset(trace: Spectrum, reference: Spectrum, search_hz, rtol_ambiguity=1e-6):
    """Offset ``c`` such that ``trace(f + c)`` best matches ``reference(f)``.

    Returns ``(offset, cost_at_zero, cost_at_offset)``.
    """
    if len(trace) != len(reference) or not np.allclose(
        trace.freqs, reference.freqs, rtol=0, atol=1e-6 * abs(reference.step)
    ):
        raise WindowError("trace and reference must share the same grid")
    step = reference.step
    kmax = min(int(search_hz / step), len(reference) - 3)
    ks, costs = _integer_scan(trace, reference, kmax)
    best = int(np.argmin(costs))
    c_best = costs[best]

    # competing local minima at least two bins away from the winner
    interior = np.flatnonzero(
        (costs[1:-1] <= costs[:-2]) & (costs[1:-1] <= costs[2:])
    ) + 1
    for j in interior:
        if abs(j - best) > 2:
            scale = max(c_best, costs[j])
            if abs(costs[j] - c_best) <= rtol_ambiguity * scale:
                raise AmbiguousAlignmentError(
                    f"offsets {ks[best] * step:.6g} and {ks[j] * step:.6g} Hz fit equally well"
                )

    lo = ks[max(best - 1, 0)] * step
    hi = ks[min(best + 1, ks.size - 1)] * step
    x, fx = _golden(lambda c: _alignment_cost(trace, reference, c, step), lo, hi, 1e-4 * step)
    if fx > c_best:
        x, fx = ks[best] * step, c_best
    cost0 = costs[kmax]
    return float(x), float(cost0), float(fx)


def recenter(traces, reference: Spectrum, fsr=None, search_hz=None):
    """Rigidly align each trace to ``reference`` by least squares.

    The default search range is half a free spectral range; ``fsr`` defaults
    to the reference metadata. Returns ``(report, aligned_traces)``; the
    offsets in the report are meant to be re-applied with ``shift_spectrum``
    to the loaded-resonator trace taken with the same shot.
    """
    if search_hz is None:
        fsr = fsr or reference.meta.get("fsr_hz")
        if not fsr:
            raise ValueError("need fsr or search_hz to set the search range")
        search_hz = fsr / 2
    offsets, before, after, aligned = [], [], [], []
    for tr in traces:
        c, c0, c1 = align_offset(tr, reference, search_hz)
        offsets.append(c)
        before.append(c0)
        after.append(c1)
        aligned.append(shift_spectrum(tr, c))
    report = RecenterReport(np.array(offsets), np.array(before), np.array(after))
    return report, aligned
