import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oudw import ModelParams, SamplePath, cumulative_sigma, sufficient_stats
from oudw.asymptotics import l_hat_limit
from oudw.functionals import cumulative_trapezoid, trapezoid
from oudw.sde import simulate_exact_batch


def test_sigma_of_linear_path():
    path = SamplePath(0.5, np.array([0.0, 0.5, 1.0]), np.zeros(3))
    np.testing.assert_allclose(cumulative_sigma(path), [0.0, 0.125, 0.5])


def test_trapezoid_on_stacks():
    f = np.array([[0.0, 1.0, 2.0], [1.0, 1.0, 1.0]])
    np.testing.assert_allclose(trapezoid(f, 0.5), [1.0, 1.0])
    np.testing.assert_allclose(cumulative_trapezoid(f, 0.5)[:, -1], trapezoid(f, 0.5))


def test_zero_path():
    s = sufficient_stats(SamplePath(0.1, np.zeros(11), np.zeros(11)), -1.0)
    assert s.s_t == 0.0 and s.l_hat_T == 0.0
    np.testing.assert_allclose(s.rhs, [-0.5, 0.0])
    assert np.array_equal(s.gram, np.zeros((2, 2)))


def test_two_point_path():
    s = sufficient_stats(SamplePath(1.0, np.array([0.0, 1.0]), np.zeros(2)), 0.0)
    assert s.s_t == 0.5 and s.sigma_T == 0.5 and s.pi_T == 0.25
    np.testing.assert_allclose(s.gram, [[0.5, 0.25], [0.25, 0.125]])
    np.testing.assert_allclose(s.rhs, [0.0, 0.0])
    assert s.v_hat_T == 1.0 and s.l_hat_T == 0.5


def test_residuals_use_theta_hat():
    s = sufficient_stats(SamplePath(1.0, np.array([0.0, 1.0]), np.zeros(2)), -2.0)
    # V_hat = X + 2 Sigma = (0, 2)
    assert s.v_hat_T == 2.0 and s.l_hat_T == 2.0


def test_non_finite_theta_rejected():
    with pytest.raises(ValueError):
        sufficient_stats(SamplePath(1.0, np.array([0.0, 1.0]), np.zeros(2)), math.nan)


@pytest.fixture(scope="module")
def stable_paths():
    x, v = simulate_exact_batch(ModelParams(-2.0, -1.0), 200.0, 0.01, 101, range(300))
    return x, v


def test_mean_energy_matches_stationary_variance(stable_paths):
    # a single path scatters by about 6% at T = 200, so check the replicate mean
    x, _ = stable_paths
    ratio = trapezoid(x * x, 0.01) / 200.0 / (1.0 / 6.0)
    se = ratio.std(ddof=1) / math.sqrt(ratio.size)
    assert abs(ratio.mean() - 1.0) <= max(3 * se, 0.01)


def test_residual_energy_with_true_theta(stable_paths):
    x, _ = stable_paths
    l_hat = np.array([sufficient_stats(SamplePath(0.01, xi, np.zeros_like(xi)), -2.0).l_hat_T for xi in x])
    ratio = l_hat / 200.0
    se = ratio.std(ddof=1) / math.sqrt(ratio.size)
    assert abs(ratio.mean() - 0.5) <= 3 * se + 0.01


def test_residual_energy_with_estimated_theta(stable_paths):
    # V_hat is built from theta_hat -> theta + rho, so L_hat / T tends to 11/12
    # rather than the stationary variance 1/2 of V
    from oudw import estimate

    x, _ = stable_paths
    ratio = np.array([estimate(SamplePath(0.01, xi, np.zeros_like(xi))).stats.l_hat_T for xi in x]) / 200.0
    target = l_hat_limit(ModelParams(-2.0, -1.0))
    assert target == pytest.approx(11.0 / 12.0)
    # finite T and the O(h^2 T) trapezoid error of Sigma both push the mean up
    assert abs(ratio.mean() / target - 1.0) <= 0.03


def _coarsen(x, factor):
    return x[..., ::factor]


def test_sigma_refinement_is_first_order():
    # the trapezoid error of Sigma_T is a sum of independent O(h^{3/2}) terms,
    # so its size is h sqrt(T / 12) rather than O(h^2) on rough paths
    T, fine = 10.0, 0.0005
    x, _ = simulate_exact_batch(ModelParams(-2.0, -1.0), T, fine, 7, range(200))
    ref = trapezoid(x, fine)
    rms = {}
    for factor in (8, 4):
        h = fine * factor
        err = trapezoid(_coarsen(x, factor), h) - ref
        rms[h] = math.sqrt(np.mean(err**2))
        assert rms[h] == pytest.approx(math.sqrt(h**2 - fine**2) * math.sqrt(T / 12.0), rel=0.25)
    assert rms[0.004] / rms[0.002] == pytest.approx(2.0, rel=0.25)


def test_ito_by_parts_vs_grid_sum():
    # int Sigma dX by parts against the left-point grid sum; they differ by O(h)
    T = 10.0
    x, _ = simulate_exact_batch(ModelParams(-2.0, -1.0), T, 0.005, 9, range(200))
    rms = []
    for factor in (4, 2, 1):
        h = 0.005 * factor
        xc = _coarsen(x, factor)
        sigma = cumulative_trapezoid(xc, h)
        parts = sigma[:, -1] * xc[:, -1] - trapezoid(xc * xc, h)
        grid = np.sum(sigma[:, :-1] * np.diff(xc, axis=1), axis=1)
        rms.append(math.sqrt(np.mean((parts - grid) ** 2)))
    assert rms[0] / rms[1] == pytest.approx(2.0, rel=0.25)
    assert rms[1] / rms[2] == pytest.approx(2.0, rel=0.25)


@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-10, 10)), st.floats(1e-3, 1.0))
@settings(max_examples=100)
def test_gram_is_positive_semidefinite(x, step):
    x = x.copy()
    x[0] = 0.0
    s = sufficient_stats(SamplePath(step, x, np.zeros_like(x)), 0.0)
    a, b, d = s.gram[0, 0], s.gram[0, 1], s.gram[1, 1]
    assert a >= 0 and d >= 0
    assert b * b <= a * d * (1 + 1e-12) + 1e-300
