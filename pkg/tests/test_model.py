import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mmsc.errors import DomainError
from mmsc.model import (
    FSR_HZ,
    GAMMA_CS_D2,
    KAPPA0,
    KAPPA_EXT,
    TWO_PI,
    EnsembleParams,
    ResonatorParams,
    Spectrum,
    atom_transmission,
    cooperativity,
    coupling_coefficients,
    ensemble_transmission,
    finesse,
    gn_to_od,
    natural_fwhm_hz,
    od_to_gn,
    ring_amplitude,
    ring_transmission,
    saturated_lorentzian,
    single_atom_od,
)

RES = ResonatorParams()


def test_coefficients_lossless():
    t_rt, t1, t2 = coupling_coefficients(ResonatorParams(FSR_HZ, 0.0, 0.0))
    assert (t_rt, t1, t2) == (1.0, 1.0, 0.0)


def test_coefficients_reference_values():
    t_rt, t1, t2 = coupling_coefficients(RES)
    assert t_rt == pytest.approx(np.sqrt(1 - 0.39 / 7.1), rel=1e-14)
    assert t_rt == pytest.approx(0.9722, abs=1e-4)
    assert t1 == pytest.approx(0.9851, abs=1e-4)
    assert t1**2 + t2**2 == pytest.approx(1.0, abs=1e-15)


def test_critical_coupling_equal_coefficients():
    t_rt, t1, _ = coupling_coefficients(ResonatorParams(FSR_HZ, KAPPA0, KAPPA0))
    assert t1 == t_rt
    res = ResonatorParams(FSR_HZ, KAPPA0, KAPPA0)
    assert ring_transmission(np.array([0.0]), res, EnsembleParams())[0] < 1e-28


@pytest.mark.parametrize("kw", [dict(fsr=0.0), dict(kappa0=-1.0),
                                dict(kappa0=TWO_PI * FSR_HZ), dict(kappa_ext=TWO_PI * FSR_HZ * 1.5)])
def test_resonator_domain(kw):
    with pytest.raises(DomainError):
        ResonatorParams(**kw)


@pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(beta=1.0), dict(beta=-0.1), dict(n_atoms=-1)])
def test_ensemble_domain(kw):
    with pytest.raises(DomainError):
        EnsembleParams(**kw)


def test_decoupled_atom_is_transparent():
    d = np.linspace(-1e9, 1e9, 11)
    np.testing.assert_allclose(atom_transmission(d, EnsembleParams(beta=0.0)), 1.0, rtol=0, atol=1e-15)


def test_on_resonance_atom_real():
    t = atom_transmission(0.0, EnsembleParams(beta=0.2))
    assert t.imag == 0
    assert t.real == pytest.approx(0.8 / 1.2, rel=1e-15)


def test_single_atom_od_small_beta():
    od1 = -np.log(abs(atom_transmission(0.0, EnsembleParams(beta=0.0055))) ** 2)
    assert od1 == pytest.approx(0.022, rel=1e-4)
    # -ln|t|^2 = 4 artanh(beta) = 4 beta + (4/3) beta^3 + (4/5) beta^5 + ...
    b = 0.0055
    assert od1 == pytest.approx(4 * b + 4 / 3 * b**3 + 4 / 5 * b**5, rel=1e-13)


def test_ensemble_limits():
    d = np.linspace(-5e7, 5e7, 7)
    np.testing.assert_array_equal(ensemble_transmission(d, EnsembleParams(n_atoms=0.0)), 1.0)
    one = EnsembleParams(n_atoms=1.0, beta=0.01)
    np.testing.assert_allclose(ensemble_transmission(d, one), atom_transmission(d, one), rtol=1e-14)
    many = EnsembleParams(n_atoms=37.5, beta=0.01)
    assert abs(ensemble_transmission(0.0, many)) ** 2 == pytest.approx(np.exp(-many.od), rel=1e-12)


def test_od_close_to_four_beta_n():
    ens = EnsembleParams(beta=1e-3, n_atoms=500)
    assert ens.od == pytest.approx(4 * 1e-3 * 500, rel=1e-5)


def test_empty_ring_minimum():
    t = ring_transmission(np.array([0.0]), RES, EnsembleParams())[0]
    assert t == pytest.approx(0.0936, abs=5e-4)
    f = np.linspace(-1e5, 1e5, 2001)
    series = oracles.ring_series(f, FSR_HZ, KAPPA0, KAPPA_EXT)
    np.testing.assert_allclose(ring_transmission(f, RES, EnsembleParams()), series, atol=1e-12)


def test_open_loop_dense_window():
    res = ResonatorParams(loop_open=True)
    ens = EnsembleParams.from_od(12.7)
    core = np.linspace(-1e6, 1e6, 201)
    assert np.all(ring_transmission(core, res, ens) < np.exp(-10.0))
    wings = ring_transmission(np.array([-10e6, 10e6]), res, ens)
    # Lorentzian absorption exp(-0.81) at 10 MHz, further attenuated by t_rt^2;
    # finite beta bends the profile at the 1e-5 level
    lorentz = np.exp(-12.7 / (1 + (2 * 10e6 / natural_fwhm_hz()) ** 2))
    t_rt2 = 1 - 0.39 / 7.1
    np.testing.assert_allclose(wings, t_rt2 * lorentz, rtol=1e-4)
    exact = t_rt2 * np.abs(atom_transmission(TWO_PI * 10e6, ens)) ** (2 * ens.n_atoms)
    np.testing.assert_allclose(wings, exact, rtol=1e-12)


def test_degenerate_denominator():
    res = ResonatorParams(FSR_HZ, 0.0, KAPPA_EXT)
    # lossless ring with t1 X = 1 cannot occur for t1 < 1; force via no coupling loss
    lossless = ResonatorParams(FSR_HZ, 0.0, 0.0)
    with pytest.raises(DomainError):
        ring_amplitude(np.array([0.0]), lossless, EnsembleParams())
    assert np.isfinite(ring_transmission(np.array([0.0]), res, EnsembleParams())).all()


def test_od_gn_reference_points():
    assert od_to_gn(0.0) == 0.0
    assert od_to_gn(12.7) / TWO_PI == pytest.approx(8.655e6, rel=1e-3)
    assert od_to_gn(645 * 0.022) / TWO_PI == pytest.approx(9.149e6, rel=1e-3)
    # (g/2pi)^2 = fsr (gamma/2pi) OD / pi
    g_hz = np.sqrt(FSR_HZ * 2.61e6 * 3.3 / np.pi)
    assert od_to_gn(3.3) / TWO_PI == pytest.approx(g_hz, rel=1e-14)


@given(st.floats(0, 100))
def test_conversion_round_trip(x):
    assert gn_to_od(od_to_gn(x)) == pytest.approx(x, abs=1e-12, rel=1e-12)


def test_finesse_and_cooperativity():
    assert cooperativity(0.0, 5.0) == 0.0
    assert finesse(RES) == pytest.approx(7.1 / 1.2, rel=1e-12)
    assert finesse(RES) == pytest.approx(5.9, abs=0.05)
    assert cooperativity(12.7, 5.9) == pytest.approx(23.85, abs=0.01)


def test_finesse_against_measured_width():
    # The computed resonance is far narrower than fsr / finesse; the formula
    # value is what the package reports (see README notes on units).
    f = np.linspace(-1e6, 1e6, 40001)
    width = oracles.measured_fwhm(f, ring_transmission(f, RES, EnsembleParams()))
    assert width == pytest.approx((KAPPA0 + KAPPA_EXT) / TWO_PI**2, rel=0.05)
    assert FSR_HZ / width > 10 * finesse(RES)


def test_saturated_lorentzian_limits():
    assert saturated_lorentzian(1e15, 12.7, 5.22e6, 0.0) == pytest.approx(1.0)
    assert saturated_lorentzian(0.0, 3.0, 5.22e6, 0.0) == pytest.approx(np.exp(-3.0), rel=1e-15)
    t10 = saturated_lorentzian(np.array([-10e6, 10e6]), 12.7, 5.22e6, 0.0)
    np.testing.assert_allclose(-np.log(t10), 0.80, atol=0.015)
    assert natural_fwhm_hz() == pytest.approx(5.22e6)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([0, 0], [1, 1])
    with pytest.raises(ValueError):
        Spectrum([0, 1], [1, np.nan])
    with pytest.raises(ValueError):
        Spectrum([0, 1, 2], [1, 1])


# property tests ------------------------------------------------------------

resonators = st.builds(
    ResonatorParams.from_hz,
    st.floats(1e6, 5e7),
    st.floats(1e3, 5e5),
    st.floats(0.0, 5e5),
    st.booleans(),
)
ensembles = st.builds(
    EnsembleParams,
    st.floats(TWO_PI * 1e5, TWO_PI * 1e7),
    st.floats(0.0, 0.5),
    st.floats(0.0, 2000.0),
    st.floats(-TWO_PI * 5e6, TWO_PI * 5e6),
)


@settings(max_examples=200, deadline=None)
@given(resonators, ensembles, st.lists(st.floats(-1e8, 1e8), min_size=1, max_size=20))
def test_passivity(res, ens, freqs):
    t = ring_transmission(np.array(freqs), res, ens)
    assert np.all(t >= 0) and np.all(t <= 1 + 1e-12)


@settings(deadline=None)
@given(resonators, st.floats(-3e7, 3e7))
def test_empty_ring_periodic(res, f):
    a = ring_transmission(np.array([f]), res, EnsembleParams())
    b = ring_transmission(np.array([f + res.fsr]), res, EnsembleParams())
    assert abs(a[0] - b[0]) < 1e-12


@settings(deadline=None)
@given(resonators, st.floats(0, 2000), st.floats(0, 0.5))
def test_decoupling(res, n, beta):
    f = np.linspace(-2e7, 2e7, 101)
    empty = ring_transmission(f, res, EnsembleParams())
    np.testing.assert_array_equal(ring_transmission(f, res, EnsembleParams(beta=beta, n_atoms=0.0)), empty)
    # beta = 0 gives t_at = 1 up to one rounding of the complex division
    np.testing.assert_allclose(ring_transmission(f, res, EnsembleParams(beta=0.0, n_atoms=n)), empty,
                               rtol=0, atol=1e-12)


@settings(deadline=None)
@given(resonators, ensembles.map(lambda e: EnsembleParams(e.gamma, e.beta, e.n_atoms, 0.0)),
       st.floats(0, 5e7))
def test_symmetry_about_atomic_line(res, ens, d):
    t = ring_transmission(np.array([d, -d]), res, ens)
    assert abs(t[0] - t[1]) < 1e-12


@settings(deadline=None)
@given(ensembles.filter(lambda e: e.od < 300))
def test_open_loop_od_consistency(ens):
    res = ResonatorParams(FSR_HZ, 0.0, 0.0, loop_open=True)
    ens = EnsembleParams(ens.gamma, ens.beta, ens.n_atoms, 0.0)
    t = ring_transmission(np.array([0.0]), res, ens)[0]
    expected = -ens.n_atoms * np.log(abs(atom_transmission(0.0, ens)) ** 2)
    assert -np.log(t) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(resonators.filter(lambda r: not r.loop_open), ensembles, st.floats(-3e7, 3e7))
def test_series_matches_closed_form(res, ens, center):
    res = ResonatorParams(res.fsr, max(res.kappa0, TWO_PI * 1e5), res.kappa_ext)
    f = center + np.linspace(-res.fsr, res.fsr, 51)
    series = oracles.ring_series(f, res.fsr, res.kappa0, res.kappa_ext, ens.gamma, ens.beta,
                                 ens.n_atoms, ens.delta_at)
    assert np.max(np.abs(series - ring_transmission(f, res, ens))) < 1e-9
