import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsc.calibration import (
    LITERATURE,
    CalibrationRecord,
    atoms_from_od,
    cooperativity_variants,
    intrinsic_cooperativity,
    mmsc_threshold,
    od_per_atom,
    reference_records,
    threshold_od,
)
from mmsc.model import (
    FSR_HZ,
    GAMMA_CS_D2,
    KAPPA0,
    TWO_PI,
    ResonatorParams,
    cooperativity,
    od_to_gn,
)

RES = ResonatorParams()


def test_single_record():
    est = od_per_atom([CalibrationRecord(0.022, 0.0, 1.0, 0.0)])
    assert est.value == 0.022 and est.unweighted == 0.022


def test_three_records():
    est = od_per_atom(reference_records())
    assert est.value == pytest.approx(0.022, abs=0.003)
    np.testing.assert_allclose(est.ratios, [0.0222, 0.0256, 0.0211], atol=5e-5)
    assert est.unweighted == pytest.approx(np.mean([0.06 / 2.7, 0.11 / 4.3, 0.20 / 9.5]), rel=1e-14)
    assert 0 < est.sigma < est.unweighted_sigma


def test_homogeneity_in_od():
    base = od_per_atom(reference_records())
    scaled = od_per_atom([CalibrationRecord(3 * r.od, 3 * r.od_err, r.n_eff, r.n_err)
                          for r in reference_records()])
    assert scaled.value == pytest.approx(3 * base.value, rel=1e-13)


def test_record_validation():
    with pytest.raises(ValueError):
        od_per_atom([])
    with pytest.raises(ValueError):
        CalibrationRecord(0.0, 0.1, 1.0, 0.1)
    with pytest.raises(ValueError):
        CalibrationRecord(0.1, -0.1, 1.0, 0.1)


def test_atoms_from_od():
    assert atoms_from_od(0.022, 0.022)[0] == 1.0
    n, s = atoms_from_od(14.2, 0.022, 0.0, 0.005)
    assert n == pytest.approx(645, abs=1)
    assert s == pytest.approx(645 * 0.005 / 0.022, rel=1e-3)
    assert atoms_from_od(12.7, 0.022)[0] == pytest.approx(577.3, abs=0.1)
    with pytest.raises(ValueError):
        atoms_from_od(1.0, 0.0)


@given(st.floats(0, 1e4), st.floats(1e-4, 1.0))
def test_atoms_round_trip(n, od1):
    assert atoms_from_od(n * od1, od1)[0] == pytest.approx(n, rel=1e-12, abs=1e-12)


def test_threshold_values():
    n, _ = mmsc_threshold(0.022)
    assert n == pytest.approx(388.5, abs=0.5)
    assert threshold_od() == pytest.approx(8.546, abs=1e-3)
    assert mmsc_threshold(0.044)[0] == pytest.approx(n / 2, rel=1e-14)
    assert od_to_gn(n * 0.022) == pytest.approx(TWO_PI * FSR_HZ, rel=1e-9)
    with pytest.raises(ValueError):
        mmsc_threshold(0.0)


def test_literature_values_kept_apart():
    n, _ = mmsc_threshold(0.022)
    assert LITERATURE["n_threshold"] == (294.0, 34.0)
    assert abs(n - LITERATURE["n_threshold"][0]) > LITERATURE["n_threshold"][1]


def test_cooperativity_variants():
    assert intrinsic_cooperativity(0.0, KAPPA0) == 0.0
    c = cooperativity_variants(0.022, RES)
    assert c["kappa0"] == pytest.approx(0.064, abs=5e-4)
    assert c["kappa_total"] == pytest.approx(c["kappa0"] * 0.39 / 0.60, rel=1e-12)
    g1 = od_to_gn(0.022)
    assert c["kappa0"] == pytest.approx(g1**2 / (2 * KAPPA0 * GAMMA_CS_D2), rel=1e-14)


def test_collective_cooperativity_linear():
    f = RES.finesse
    assert cooperativity(250 * 0.022, f) / 250 == pytest.approx(cooperativity(0.022, f), rel=1e-14)


def test_uncertainty_against_monte_carlo():
    rng = np.random.default_rng(99)
    k = 10_000
    od1, s_od1 = 0.022, 0.001
    od, s_od = 14.2, 0.3
    n, s_n = atoms_from_od(od, od1, s_od, s_od1)
    draws = rng.normal(od, s_od, k) / rng.normal(od1, s_od1, k)
    assert s_n == pytest.approx(draws.std(), rel=0.1)

    t, s_t = mmsc_threshold(od1, od1_err=s_od1)
    draws = threshold_od() / rng.normal(od1, s_od1, k)
    assert s_t == pytest.approx(draws.std(), rel=0.1)

    recs = reference_records()
    est = od_per_atom(recs)
    w = np.array([1 / r.ratio_err**2 for r in recs])
    sims = []
    for _ in range(k):
        ratios = [rng.normal(r.od, r.od_err) / rng.normal(r.n_eff, r.n_err) for r in recs]
        sims.append(np.sum(w * ratios) / w.sum())
    assert est.sigma == pytest.approx(np.std(sims), rel=0.1)
