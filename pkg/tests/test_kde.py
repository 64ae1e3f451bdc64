import numpy as np
import pytest

from influencekit.exceptions import InsufficientDataError, InvalidArgumentError
from influencekit.kde import kde_eval, kde_fit, kde_loo_eval, normalization, smooth_influence
from influencekit.kernels import make_kernel
from influencekit.quadrature import integrate


def test_single_point_at_center():
    est = kde_fit([0.0], bandwidth=1.0)
    assert kde_eval(est, 0.0) == pytest.approx(0.75, abs=1e-14)


def test_far_point_contributes_nothing():
    est = kde_fit([0.0, 10.0], bandwidth=1.0)
    assert kde_eval(est, 0.0) == pytest.approx(0.375, abs=1e-14)


def test_standard_normal_at_origin():
    rng = np.random.default_rng(1234)
    z = rng.standard_normal(1000)
    est = kde_fit(z, bandwidth=0.3)
    # oracle: phi(0) = 1/sqrt(2 pi)
    assert kde_eval(est, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi), abs=0.05)


def test_loo_coincident_points():
    est = kde_fit([0.0, 0.0], bandwidth=1.0)
    assert kde_loo_eval(est, 0) == pytest.approx(0.75, abs=1e-14)


def test_loo_disjoint_supports():
    est = kde_fit([0.0, 10.0], bandwidth=1.0)
    assert kde_loo_eval(est, 0) == 0.0


def test_loo_hand_computed():
    # (1/2)[K(0.5) + K(-0.5)] = 0.75 * 0.75 = 0.5625
    est = kde_fit([0.0, 0.5, -0.5], bandwidth=1.0)
    assert kde_loo_eval(est, 0) == pytest.approx(0.5625, abs=1e-14)


def test_loo_requires_two_points():
    est = kde_fit([0.0], bandwidth=1.0)
    with pytest.raises(InsufficientDataError):
        kde_loo_eval(est, 0)


def test_loo_full_sample_identity():
    # n f_hat(z_i) = (n-1) f_loo(z_i) + h^{-r} K(0)
    rng = np.random.default_rng(5)
    z = rng.standard_normal(40)
    h = 0.4
    est = kde_fit(z, bandwidth=h, order=4)
    for i in (0, 7, 39):
        lhs = est.n * kde_eval(est, z[i])
        rhs = (est.n - 1) * kde_loo_eval(est, i) + est.kernel.at_zero / h
        assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("order", [2, 4])
def test_density_integrates_to_one(order):
    rng = np.random.default_rng(11)
    est = kde_fit(rng.standard_normal(60), bandwidth=0.5, order=order)
    assert normalization(est) == pytest.approx(1.0, abs=1e-8)


def test_density_integrates_to_one_2d():
    rng = np.random.default_rng(12)
    est = kde_fit(rng.standard_normal((25, 2)), bandwidth=0.8, kernel=make_kernel(2, 2))
    assert normalization(est) == pytest.approx(1.0, abs=1e-7)


def test_negative_bandwidth_rejected():
    with pytest.raises(InvalidArgumentError):
        kde_fit([0.0], bandwidth=-1.0)


# ---------------------------------------------------------------------------
# smooth_influence
# ---------------------------------------------------------------------------


def test_smoothing_preserves_constants():
    k = make_kernel(2, 1)
    for h, z in [(0.5, 0.0), (0.1, 3.0), (1.0, -2.0)]:
        val = smooth_influence(lambda x: np.full_like(x, 2.5), k, h, z)
        assert val == pytest.approx(2.5, abs=1e-10)


def test_smoothing_preserves_linear():
    k = make_kernel(2, 1)
    val = smooth_influence(lambda x: x, k, 0.3, 1.7)
    assert val == pytest.approx(1.7, abs=1e-10)


def test_smoothing_quadratic_closed_form():
    # int u^2 * 0.75 (1 - u^2) du = 0.2
    k = make_kernel(2, 1)
    assert smooth_influence(lambda x: x**2, k, 1.0, 0.0) == pytest.approx(0.2, abs=1e-10)


def test_smoothing_limit_ladder():
    k = make_kernel(2, 1)
    psi = lambda x: np.cos(2.0 * x)
    errors = [abs(smooth_influence(psi, k, h, 0.4) - np.cos(0.8)) for h in (0.5, 0.25, 0.1, 0.05)]
    assert all(e1 > e2 for e1, e2 in zip(errors, errors[1:]))


def test_smoothing_2d_product():
    k = make_kernel(2, 2)
    psi = lambda p: p[:, 0] ** 2 + 3.0 * p[:, 1]
    val = smooth_influence(psi, k, 1.0, np.array([0.0, 1.0]))
    assert val == pytest.approx(0.2 + 3.0, abs=1e-8)


def test_change_of_variables_identity():
    # int psi f_hat dz == (1/n) sum_i smooth_influence(psi, K, h, z_i)
    rng = np.random.default_rng(21)
    z = rng.standard_normal(30)
    h = 0.35
    est = kde_fit(z, bandwidth=h, order=2)
    psi = lambda x: x**2 + np.sin(x)
    lhs = integrate(
        lambda x: psi(x) * est.density(x),
        est.support[0][0],
        est.support[0][1],
        tol=1e-10,
        breakpoints=est.breakpoints[0],
    )
    rhs = np.mean([smooth_influence(psi, est.kernel, h, zi, tol=1e-11) for zi in z])
    assert lhs == pytest.approx(rhs, abs=1e-6)
