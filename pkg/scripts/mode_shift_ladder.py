"""Mode shifts of the four nearest resonances along a ladder of coupling strengths.

Synthesizes noisy spectra, fits g_N back from each, and writes the shifts of
the +-1st and +-2nd order minima against the fitted coupling.
"""
import argparse
from pathlib import Path

import numpy as np

from mmsc import io
from mmsc.fits import fit_gn_ladder
from mmsc.model import FSR_HZ, TWO_PI, EnsembleParams, ResonatorParams
from mmsc.spectra import add_shot_noise, find_mode_shifts, frequency_grid, synthesize

ORDERS = (-2, -1, 1, 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/mode_shift_ladder")
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--top", type=float, default=1.3, help="largest g_N in units of the FSR")
    ap.add_argument("--counts", type=float, default=2000.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    res = ResonatorParams()
    grid = frequency_grid()
    ladder = np.linspace(args.top / args.steps, args.top, args.steps) * FSR_HZ
    specs = [add_shot_noise(synthesize(grid, res, EnsembleParams.from_gn(TWO_PI * g, FSR_HZ)), args.counts, i)
             for i, g in enumerate(ladder)]
    fits = fit_gn_ladder(specs, res)
    gn_fit = np.array([r.derived["gn_hz"][0] for r in fits])

    cols = {"gn_true_hz": ladder, "gn_fit_hz": gn_fit}
    for order in ORDERS:
        cols[f"shift_{order:+d}_hz"] = np.array(
            [next(m.shift for m in find_mode_shifts(s, FSR_HZ, ORDERS) if m.order == order) for s in specs])
    table = io.ResultTable(cols, caption="mode shift vs fitted coupling")
    io.write_table_csv(out / "ladder.csv", table)
    io.write_svg(out / "ladder.svg", gn_fit / 1e6, [cols[f"shift_{o:+d}_hz"] / 1e6 for o in ORDERS],
                 xlabel="g_N/2pi (MHz)", ylabel="mode shift (MHz)", labels=[f"{o:+d}" for o in ORDERS])
    print(table.to_text())


if __name__ == "__main__":
    main()
