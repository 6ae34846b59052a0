"""Single-pass OD fit and the closed-loop spectrum at the reference operating point.

Writes CSV and SVG files to the output directory and prints the fitted OD,
the coupling it implies and the positions of the central split minima.
"""
import argparse
from pathlib import Path

import numpy as np

from mmsc import io
from mmsc.fits import fit_od_single_pass, gn_from_od_fit
from mmsc.model import FSR_HZ, TWO_PI, EnsembleParams, ResonatorParams
from mmsc.spectra import add_shot_noise, find_dips, frequency_grid, synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/ring_spectra")
    ap.add_argument("--od", type=float, default=12.7)
    ap.add_argument("--delta-hz", type=float, default=150e3)
    ap.add_argument("--counts", type=float, default=2000.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    open_loop = ResonatorParams(loop_open=True)
    f = np.linspace(-30e6, 30e6, 6001)
    single = add_shot_noise(synthesize(f, open_loop, EnsembleParams.from_od(args.od)), args.counts, args.seed)
    fit = fit_od_single_pass(single)
    gn, gn_err = gn_from_od_fit(fit)
    print(f"single pass: OD0 = {fit.value('od0'):.3f} +/- {fit.error('od0'):.3f}, "
          f"g_N/2pi = {gn / TWO_PI / 1e6:.3f} +/- {gn_err / TWO_PI / 1e6:.3f} MHz")
    io.write_spectrum(out / "single_pass.csv", single)
    io.write_svg(out / "single_pass.svg", f / 1e6, single.values,
                 xlabel="detuning (MHz)", ylabel="transmission", title="open loop")

    res = ResonatorParams()
    grid = frequency_grid()
    empty = synthesize(grid, res, EnsembleParams())
    loaded = synthesize(grid, res, EnsembleParams.from_od(fit.value("od0"), delta_at=TWO_PI * args.delta_hz))
    io.write_spectrum(out / "ring_empty.csv", empty)
    io.write_spectrum(out / "ring_loaded.csv", loaded)
    io.write_svg(out / "ring.svg", grid / 1e6, [empty.values, loaded.values],
                 xlabel="detuning (MHz)", ylabel="transmission", labels=["empty", "with atoms"])
    for freq, value in find_dips(loaded, -FSR_HZ, FSR_HZ):
        print(f"central minimum at {freq / 1e6:+.3f} MHz, T = {value:.4f}")


if __name__ == "__main__":
    main()
