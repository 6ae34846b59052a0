"""Ensemble g2 traces for three atom numbers and the atom numbers fitted back."""
import argparse
from pathlib import Path

import numpy as np

from mmsc import io
from mmsc.calibration import CalibrationRecord, od_per_atom
from mmsc.correlations import (
    DriveParams,
    EnsembleG2Params,
    add_counting_noise,
    delay_grid,
    fit_atom_number,
    g2_ensemble,
)
from mmsc.model import GAMMA_CS_D2

CASES = [(2.7, 0.06, 0.01), (4.3, 0.11, 0.02), (9.5, 0.20, 0.01)]  # N, OD, OD error


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/g2_atom_number")
    ap.add_argument("--counts", type=float, default=3000.0)
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    taus = delay_grid()
    drive = DriveParams(4 * GAMMA_CS_D2)
    mu0_b, mu_b = (0.019, 0.021), (0.285, 0.315)
    records, traces = [], []
    for i, (n, od, od_err) in enumerate(CASES):
        clean = g2_ensemble(taus, drive, EnsembleG2Params(n, 0.02, 0.3, mu0_b, mu_b))
        data = add_counting_noise(clean, args.counts, np.random.default_rng([args.seed, i]))
        io.write_g2(out / f"g2_n{n:g}.csv", data)
        fit = fit_atom_number(data, mu_bounds=mu_b, mu0_bounds=mu0_b)
        n_hat, s = fit.derived["n_eff"]
        print(f"N = {n:g}: fitted {n_hat:.2f} +/- {s:.2f}, g2(0) = {clean.values[0]:.3f}")
        records.append(CalibrationRecord(od, od_err, n_hat, s))
        traces.append(np.real(data.values))
    est = od_per_atom(records)
    print(f"OD per atom = {est.value:.4f} +/- {est.sigma:.4f}")
    keep = taus <= 0.5e-6
    io.write_svg(out / "g2.svg", taus[keep] * 1e9, [t[keep] for t in traces],
                 xlabel="delay (ns)", ylabel="g2", labels=[f"N={c[0]:g}" for c in CASES])


if __name__ == "__main__":
    main()
