import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mmsc.errors import FitError
from mmsc.nls import (
    CONVERGED_GRADIENT,
    CONVERGED_STEP,
    MAX_ITERS,
    FitProblem,
    forward_jacobian,
    nls_minimize,
)

X = np.linspace(0.0, 3.0, 25)


def test_linear_exact_in_one_iteration():
    y = 2.5 * X
    out = nls_minimize(FitProblem(lambda p: p[0] * X - y, [1.0], max_iter=1))
    assert out.n_iter == 1
    assert out.x[0] == pytest.approx(2.5, abs=1e-9)


def test_rosenbrock_from_offset_start():
    def res(p):
        return np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])

    out = nls_minimize(FitProblem(res, [-1.2, 1.0]))
    assert out.status in (CONVERGED_GRADIENT, CONVERGED_STEP)
    np.testing.assert_allclose(out.x, [1.0, 1.0], atol=1e-8)


def test_bound_active():
    # minimum of (x - 3)^2 lies above the upper bound 2
    out = nls_minimize(FitProblem(lambda p: np.array([p[0] - 3.0, 0.0]), [0.0], upper=[2.0]))
    assert out.x[0] == 2.0
    assert out.active[0]
    assert out.sigma[0] == 0.0


def test_lower_bound_active_two_parameters():
    def res(p):
        return np.array([p[0] + 1.0, p[1] - 0.5, 0.1 * (p[0] - p[1])])

    out = nls_minimize(FitProblem(res, [1.0, 1.0], lower=[0.0, -np.inf]))
    assert out.x[0] == 0.0 and out.active.tolist() == [True, False]
    assert out.x[1] == pytest.approx(0.5 / 1.01, rel=1e-8)


def test_nonfinite_initial_residual():
    with pytest.raises(FitError):
        nls_minimize(FitProblem(lambda p: np.array([np.nan, p[0]]), [1.0]))


def test_nonfinite_trial_points_are_rejected():
    # residual undefined for x < 0.5; the optimum sits at 1
    def res(p):
        return np.array([np.sqrt(p[0] - 0.5) - np.sqrt(0.5), 0.0]) if p[0] >= 0.5 else np.array([np.nan, 0.0])

    out = nls_minimize(FitProblem(res, [8.0]))
    assert out.x[0] == pytest.approx(1.0, abs=1e-7)


def test_problem_validation():
    with pytest.raises(ValueError):
        FitProblem(lambda p: p, [5.0], upper=[1.0])
    with pytest.raises(ValueError):
        FitProblem(lambda p: p, [0.0], lower=[1.0], upper=[0.0])
    with pytest.raises(FitError):
        nls_minimize(FitProblem(lambda p: np.array([p[0] + p[1]]), [0.0, 0.0]))


def test_max_iters_flag():
    out = nls_minimize(FitProblem(lambda p: np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]]),
                                  [-1.2, 1.0], max_iter=2))
    assert out.status == MAX_ITERS and not out.converged


def test_covariance_matches_linear_regression():
    rng = np.random.default_rng(0)
    y = 1.5 + 0.7 * X + rng.normal(0, 0.1, X.size)
    out = nls_minimize(FitProblem(lambda p: p[0] + p[1] * X - y, [0.0, 0.0]))
    a = np.column_stack([np.ones_like(X), X])
    coef, rss, *_ = np.linalg.lstsq(a, y, rcond=None)
    cov = np.linalg.inv(a.T @ a) * rss[0] / (X.size - 2)
    np.testing.assert_allclose(out.x, coef, rtol=1e-7)
    np.testing.assert_allclose(out.cov, cov, rtol=1e-5)
    assert out.dof == X.size - 2


def test_singular_normal_matrix_is_damped():
    # identical columns: the normal matrix is rank one
    out = nls_minimize(FitProblem(lambda p: (p[0] + p[1]) * X - 2 * X, [0.0, 0.0]))
    assert out.x.sum() == pytest.approx(2.0, abs=1e-8)


def test_params_and_accessors():
    out = nls_minimize(FitProblem(lambda p: p[0] * X - X, [3.0], names=["slope"]))
    assert out.params == {"slope": pytest.approx(1.0)}
    assert out.value("slope") == pytest.approx(1.0)
    assert out.error("slope") >= 0


def smooth_residual(p):
    return np.array([np.sin(p[0]) * p[1], np.exp(0.3 * p[0]) - p[1] ** 2, p[0] * p[1] ** 3])


@settings(deadline=None)
@given(st.floats(-2, 2), st.floats(0.5, 2))
def test_forward_vs_central_jacobian(a, b):
    x = np.array([a, b])
    scale = np.array([1.0, 1.0])
    fw = forward_jacobian(smooth_residual, x, rel_step=1e-6, scale=scale)
    ce = oracles.central_jacobian(smooth_residual, x, 1e-6 * np.maximum(np.abs(x), scale))
    assert np.max(np.abs(fw - ce)) / np.max(np.abs(ce)) < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.2, 2.0), st.floats(-1, 1))
def test_accepted_costs_nonincreasing(amp, rate, shift):
    t = np.linspace(0, 5, 60)
    y = amp * np.exp(-rate * t) + shift

    def res(p):
        return p[0] * np.exp(-p[1] * t) + p[2] - y

    out = nls_minimize(FitProblem(res, [1.0, 1.0, 0.0], lower=[0, 0, -np.inf]))
    assert np.all(np.diff(out.cost_history) <= 0)
    np.testing.assert_allclose(out.x, [amp, rate, shift], rtol=1e-6, atol=1e-8)
