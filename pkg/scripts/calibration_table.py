"""Calibration summary from OD / atom-number records, with literature values alongside."""
import argparse

from mmsc import io
from mmsc.calibration import (
    LITERATURE,
    CalibrationRecord,
    atoms_from_od,
    cooperativity_variants,
    mmsc_threshold,
    od_per_atom,
    reference_records,
)
from mmsc.model import ResonatorParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--records", help="CSV with od,od_err,n_eff,n_err; defaults to the reference records")
    ap.add_argument("--out", help="optional JSON output")
    args = ap.parse_args()
    records = ([CalibrationRecord(*row) for row in io.read_records(args.records)]
               if args.records else reference_records())
    est = od_per_atom(records)
    c1 = cooperativity_variants(est.value, ResonatorParams())
    n_thr, s_thr = mmsc_threshold(est.value, od1_err=est.sigma)
    n_top, s_top = atoms_from_od(14.2, est.value, 0.0, est.sigma)
    lit = LITERATURE
    rows = [
        ("OD1 (weighted)", f"{est.value:.4f} +/- {est.sigma:.4f}", f"{lit['od1'][0]} +/- {lit['od1'][1]}"),
        ("OD1 (unweighted)", f"{est.unweighted:.4f} +/- {est.unweighted_sigma:.4f}", ""),
        ("C1, kappa0", f"{c1['kappa0']:.4f}", f"{lit['c1'][0]}"),
        ("C1, kappa0 + kappa_ext", f"{c1['kappa_total']:.4f}", ""),
        ("N_threshold", f"{n_thr:.0f} +/- {s_thr:.0f}", f"{lit['n_threshold'][0]:g} +/- {lit['n_threshold'][1]:g}"),
        ("N_eff at OD 14.2", f"{n_top:.0f} +/- {s_top:.0f}", ""),
    ]
    print(f"{'quantity':<26}{'computed':<22}literature")
    for name, ours, ref in rows:
        print(f"{name:<26}{ours:<22}{ref}")
    if args.out:
        io.write_json(args.out, {name: {"computed": ours, "literature": ref} for name, ours, ref in rows})


if __name__ == "__main__":
    main()
