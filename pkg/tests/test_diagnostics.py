import numpy as np
import pytest

from influencekit.diagnostics import (
    RateConfig,
    decompose_remainder,
    kernel_bias,
    kernel_sto_equicontinuity,
    rate_check,
    series_bias_decompose,
    series_sto_equicontinuity,
)
from influencekit.distributions import (
    CondMean,
    KdeDensity,
    TrueDensity,
    gaussian_density,
    uniform_box_density,
    uniform_density,
)
from influencekit.exceptions import InvalidArgumentError, RankDeficiencyError
from influencekit.functionals import (
    IntegratedSquaredDensity,
    LinearFunctional,
    SurplusBound,
)
from influencekit.kde import kde_fit
from influencekit.kernels import make_kernel
from influencekit.quadrature import integrate
from influencekit.series import RieszRepresenter, SurplusWeight, build_basis, series_fit

BETA0_NORMAL = 1.0 / (2.0 * np.sqrt(np.pi))


def _phi(z):
    return np.exp(-0.5 * np.asarray(z, dtype=float) ** 2) / np.sqrt(2 * np.pi)


# ---------------------------------------------------------------------------
# kernel bias
# ---------------------------------------------------------------------------


def test_kernel_bias_odd_symmetry_zero():
    val = kernel_bias(lambda z: z, gaussian_density(), make_kernel(2, 1), 0.5)
    assert abs(val) < 1e-10


def test_kernel_bias_quadratic_closed_form():
    # rho(t) = 1 + t^2, so centered bias = h^2 * m2(K) = 0.25 * 0.2 = 0.05
    val = kernel_bias(lambda z: z**2, gaussian_density(), make_kernel(2, 1), 0.5)
    assert val == pytest.approx(0.05, abs=1e-9)


def test_kernel_bias_order4_kills_quadratic():
    val = kernel_bias(lambda z: z**2, gaussian_density(), make_kernel(4, 1), 0.5)
    assert abs(val) < 1e-9


def test_kernel_bias_integration_orders_agree():
    psi = lambda z: np.sin(1.3 * z) + z**2
    f0 = gaussian_density()
    k = make_kernel(2, 1)
    a = kernel_bias(psi, f0, k, 0.3, order="convolution")
    b = kernel_bias(psi, f0, k, 0.3, order="smoothed")
    assert a == pytest.approx(b, abs=1e-8)


def test_kernel_bias_matches_expected_smoothed_influence():
    # for mean-zero psi: bias = E[int psi(z + hu) K(u) du]
    f0 = gaussian_density()
    k = make_kernel(2, 1)
    h = 0.4
    raw = lambda z: z**2 + 0.5 * z
    center = integrate(lambda z: raw(z) * f0.pdf(z), -9, 9, tol=1e-12)
    psi = lambda z: raw(z) - center
    from influencekit.kde import smooth_influence

    expected = integrate(
        lambda zs: np.array([smooth_influence(psi, k, h, z, tol=1e-11) for z in np.atleast_1d(zs)])
        * f0.pdf(zs),
        -9, 9, tol=1e-10,
    )
    assert kernel_bias(psi, f0, k, h) == pytest.approx(expected, abs=1e-8)


def _triangle_density():
    return TrueDensity(
        lambda z: np.maximum(0.0, 1.0 - np.abs(np.asarray(z, dtype=float))),
        ((-1.0, 1.0),),
        name="triangle",
        breakpoints=((0.0,),),
    )


def test_kernel_bias_slope_reflects_colocated_kinks():
    # psi = relu has a first-derivative jump at 0, the triangle density a
    # first-derivative jump at 0: the convolution rho gains a |t|^3-type kink
    # at the origin, so the bias slope in h is 3 under a high-order kernel.
    f0 = _triangle_density()
    k = make_kernel(4, 1)
    psi = lambda z: np.maximum(np.asarray(z, dtype=float), 0.0)
    hs = np.array([0.4, 0.3, 0.2, 0.1])
    biases = [kernel_bias(psi, f0, k, h, psi_breakpoints=[0.0]) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(np.abs(biases)), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.3)


# ---------------------------------------------------------------------------
# kernel stochastic equicontinuity
# ---------------------------------------------------------------------------


def test_sto_constant_psi_is_zero():
    rng = np.random.default_rng(4)
    rep = kernel_sto_equicontinuity(
        rng.standard_normal(50), lambda z: np.full_like(np.asarray(z, dtype=float), 2.0),
        make_kernel(2, 1), 0.3, f0=gaussian_density(),
    )
    assert abs(rep.value) < 1e-10


def test_sto_smoothing_msq_shrinks_with_h():
    f0 = gaussian_density()
    psi = lambda z: 2.0 * (_phi(z) - BETA0_NORMAL)
    rng = np.random.default_rng(5)
    z = rng.standard_normal(40)
    msq = [
        kernel_sto_equicontinuity(z, psi, make_kernel(2, 1), h, f0=f0).smoothing_msq
        for h in (0.4, 0.2, 0.1, 0.05)
    ]
    assert all(a > b for a, b in zip(msq, msq[1:]))


def test_sto_monte_carlo_bound():
    f0 = gaussian_density()
    psi = lambda z: 2.0 * (_phi(z) - BETA0_NORMAL)
    rng = np.random.default_rng(6)
    rep = kernel_sto_equicontinuity(rng.standard_normal(500), psi, make_kernel(2, 1), 0.2, f0=f0)
    assert abs(rep.root_n_value) < 3.0 * np.sqrt(rep.smoothing_msq)
    assert not rep.estimated


def test_sto_estimated_flag_without_f0():
    rng = np.random.default_rng(7)
    psi = lambda z: np.asarray(z, dtype=float)
    rep = kernel_sto_equicontinuity(rng.standard_normal(30), psi, make_kernel(2, 1), 0.4)
    assert rep.estimated


# ---------------------------------------------------------------------------
# series bias decomposition
# ---------------------------------------------------------------------------


def test_series_bias_zero_when_d0_in_span():
    basis = build_basis("power", 1, [(0.0, 1.0)], num_terms=2)
    f0 = uniform_density()
    rng = np.random.default_rng(8)
    x = rng.uniform(0, 1, 60)
    rep = series_bias_decompose(
        lambda t: np.asarray(t, dtype=float).ravel() ** 2,
        lambda t: 1.0 + 2.0 * np.asarray(t, dtype=float).ravel(),
        basis, f0, x,
    )
    assert abs(rep.stochastic) < 1e-10
    assert abs(rep.deterministic) < 1e-10


def test_series_bias_zero_when_delta_in_span():
    basis = build_basis("power", 1, [(0.0, 1.0)], num_terms=2)
    f0 = uniform_density()
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 1, 60)
    rep = series_bias_decompose(
        lambda t: 0.5 - np.asarray(t, dtype=float).ravel(),
        lambda t: np.asarray(t, dtype=float).ravel() ** 3,
        basis, f0, x,
    )
    assert abs(rep.deterministic) < 1e-10
    assert rep.identity_defect < 1e-10


def test_series_bias_orthogonality_identity_cubic():
    # delta = x^2, d0 = x^3, basis (1, x) on U[0,1]: both routes agree
    basis = build_basis("power", 1, [(0.0, 1.0)], num_terms=2)
    f0 = uniform_density()
    rng = np.random.default_rng(10)
    x = rng.uniform(0, 1, 80)
    rep = series_bias_decompose(
        lambda t: np.asarray(t, dtype=float).ravel() ** 2,
        lambda t: np.asarray(t, dtype=float).ravel() ** 3,
        basis, f0, x,
    )
    assert rep.identity_defect < 1e-8
    assert rep.deterministic != 0.0
    # independent oracle for the deterministic part: population projections
    # gamma = (-0.2, 0.9), gamma_delta = (-1/6, 1), residual algebra in closed form
    det_oracle = -integrate(
        lambda t: (t**2 - (t - 1 / 6)) * (t**3 - (0.9 * t - 0.2)), 0, 1, tol=1e-12
    )
    assert rep.deterministic == pytest.approx(det_oracle, abs=1e-8)


def test_series_bias_2d_identity():
    basis = build_basis("power", 2, [(0.0, 1.0), (0.0, 1.0)], num_terms=3)
    f0 = uniform_box_density([(0.0, 1.0), (0.0, 1.0)])
    rng = np.random.default_rng(11)
    x = rng.uniform(0, 1, size=(100, 2))
    rep = series_bias_decompose(
        lambda p: p[:, 0] * p[:, 1],
        lambda p: p[:, 0] ** 2 + p[:, 1] ** 2,
        basis, f0, x,
    )
    assert rep.identity_defect < 1e-8


def test_series_bias_singular_moments():
    basis = build_basis("power", 1, [(0.0, 1.0)], num_terms=2)
    degenerate = TrueDensity(
        lambda z: np.where(np.abs(np.asarray(z, dtype=float).ravel() - 0.5) < 1e-6, 5e5, 0.0),
        ((0.0, 1.0),),
    )
    with pytest.raises(RankDeficiencyError):
        series_bias_decompose(
            lambda t: np.asarray(t).ravel(), lambda t: np.asarray(t).ravel() ** 2,
            basis, degenerate, np.full(30, 0.5),
        )


def test_series_sto_trivial_zeros():
    x = np.linspace(0, 1, 20)
    q = 1.0 + x
    d0 = lambda t: 1.0 + np.asarray(t, dtype=float).ravel()
    delta = lambda t: np.asarray(t, dtype=float).ravel()
    rep = series_sto_equicontinuity(x, q, delta, delta, d0)
    assert rep.value == 0.0
    rep2 = series_sto_equicontinuity(
        x, q, lambda t: delta(t) + 0.3, delta, d0, var_q=1.0
    )
    assert rep2.value == 0.0  # q - d0 vanishes (no noise)


def test_series_sto_monte_carlo_bound():
    rng = np.random.default_rng(12)
    n = 500
    x = rng.uniform(0, 1, size=(n, 2))
    sigma = 0.5
    q = 1 + x[:, 0] + x[:, 1] + rng.normal(0, sigma, n)
    basis = build_basis("power", 2, [(0, 1), (0, 1)], num_terms=9)
    est = series_fit(x, q, basis)
    w = SurplusWeight(p0=0.2, p1=0.8)
    rep_hat = RieszRepresenter(est, w)
    d0 = lambda p: 1 + p[:, 0] + p[:, 1]
    out = series_sto_equicontinuity(x, q, rep_hat, w, d0, var_q=sigma**2)
    assert abs(out.root_n_value) < 3.0 * np.sqrt(n * out.conditional_msq_bound)


# ---------------------------------------------------------------------------
# remainder decomposition
# ---------------------------------------------------------------------------


def test_remainder_linear_functional_r2_exactly_zero():
    rng = np.random.default_rng(13)
    z = rng.standard_normal(50)
    est = kde_fit(z, bandwidth=0.4)
    functional = LinearFunctional(lambda t: np.asarray(t, dtype=float), name="mean")
    psi = lambda t: np.asarray(t, dtype=float)
    rep = decompose_remainder(functional, KdeDensity(est), z, psi, f0=gaussian_density())
    assert rep.r2 == 0.0
    assert rep.r1 == pytest.approx(rep.r1_bias + rep.r1_sto, abs=1e-12)


def test_remainder_isd_r2_is_squared_l2_distance():
    rng = np.random.default_rng(14)
    z = rng.standard_normal(60)
    f0 = gaussian_density()
    est = kde_fit(z, bandwidth=0.45)
    f_hat = KdeDensity(est)
    functional = IntegratedSquaredDensity()
    psi = functional.influence_from(f0)
    rep = decompose_remainder(functional, f_hat, z, psi, f0=f0)
    direct = integrate(
        lambda t: (est.density(t) - f0.pdf(t)) ** 2,
        min(est.support[0][0], -9), max(est.support[0][1], 9),
        tol=1e-10, breakpoints=est.breakpoints[0],
    )
    assert rep.r2 >= 0
    assert rep.r2 == pytest.approx(direct, abs=1e-6)
    assert rep.norm_value == pytest.approx(np.sqrt(direct), abs=1e-6)
    assert rep.r1 == pytest.approx(rep.r1_bias + rep.r1_sto, abs=1e-12)
    assert rep.expectation_basis == "exact"


def test_remainder_at_true_density_is_empirical_part():
    rng = np.random.default_rng(15)
    z = rng.standard_normal(40)
    f0 = gaussian_density()
    functional = IntegratedSquaredDensity()
    psi = functional.influence_from(f0)
    rep = decompose_remainder(functional, f0, z, psi, f0=f0)
    assert rep.r1 == pytest.approx(-np.mean(psi(z)), abs=1e-8)
    assert abs(rep.r2) < 1e-8
    assert rep.kind == "fixed"


def test_remainder_series_parts_and_identity():
    rng = np.random.default_rng(16)
    n = 400
    x = rng.uniform(0, 1, size=(n, 2))
    q = 1 + x[:, 0] + x[:, 1] + rng.normal(0, 0.5, n)
    z = np.column_stack([q, x])
    basis = build_basis("power", 2, [(0, 1), (0, 1)], num_terms=6)
    est = series_fit(x, q, basis)
    marginal = uniform_box_density([(0, 1), (0, 1)])
    f_hat = CondMean(mean=est, marginal=marginal)
    w = SurplusWeight(p0=0.2, p1=0.8)
    functional = SurplusBound(w)
    d0 = lambda p: 1 + p[:, 0] + p[:, 1]
    truth = CondMean(mean=d0, marginal=marginal)
    psi = functional.influence_from(truth)
    rep = decompose_remainder(functional, f_hat, z, psi, d0=d0)
    assert rep.r2 == 0.0
    assert rep.kind == "series"
    assert rep.r1 == pytest.approx(rep.r1_bias + rep.r1_sto, abs=1e-12)
    # r1 recomputed from the plug-in identity beta_hat - beta0 - mean psi
    rep_hat = RieszRepresenter(est, w)
    beta_hat = float(np.mean(rep_hat(x) * q))
    assert rep.r1 == pytest.approx(beta_hat - 1.2 - np.mean(psi(z)), abs=1e-8)


def test_remainder_estimated_flag():
    rng = np.random.default_rng(17)
    z = rng.standard_normal(30)
    est = kde_fit(z, bandwidth=0.5)
    functional = IntegratedSquaredDensity()
    psi = lambda t: 2.0 * (_phi(t) - BETA0_NORMAL)
    rep = decompose_remainder(functional, KdeDensity(est), z, psi)
    assert rep.expectation_basis == "estimated"
    assert np.isnan(rep.r2)


# ---------------------------------------------------------------------------
# rate checker
# ---------------------------------------------------------------------------


def test_rate_kernel_f_optimal_passes():
    cfg = RateConfig(family="kernel", r=1, s_f=2, s_psi=2, h_exponent=1 / 5)
    report = rate_check(cfg)
    assert report.passed
    assert report.conditions[0].n_exponent == pytest.approx(0.5 - 4 / 5)


def test_rate_kernel_boundary_fails():
    # s_psi = r/2 makes sqrt(n) h^{s_f+s_psi} merely bounded, not -> 0
    cfg = RateConfig(family="kernel", r=1, s_f=2, s_psi=0.5, h_exponent=1 / 5)
    report = rate_check(cfg)
    assert not report.passed
    assert report.conditions[0].limit == "bounded"


def test_rate_power_surplus_passes():
    cfg = RateConfig(family="power", r=2, s_d=3, k_exponent=1 / 3)
    report = rate_check(cfg)
    assert report.passed
    bounded = [c for c in report.conditions if c.requirement == "bounded"][0]
    assert bounded.limit == "bounded"  # K^3/n bounded away from zero: boundary case


def test_rate_power_surplus_fails_when_k_too_slow():
    cfg = RateConfig(family="power", r=2, s_d=3, k_exponent=0.3)
    assert not rate_check(cfg).passed


def test_rate_spline_surplus_passes():
    cfg = RateConfig(family="spline", r=2, s_d=2, spline_order=2, k_exponent=0.5)
    assert rate_check(cfg).passed


def test_rate_spline_surplus_fails_when_k_too_slow():
    cfg = RateConfig(family="spline", r=2, s_d=2, spline_order=2, k_exponent=0.4)
    assert not rate_check(cfg).passed


def test_rate_power_smooth_delta_condition():
    cfg = RateConfig(family="power", r=1, s_d=4, s_delta=4, k_exponent=0.2)
    report = rate_check(cfg)
    names = [c.name for c in report.conditions]
    assert any("s_delta" in n for n in names)
    assert report.passed


def test_rate_config_validation():
    with pytest.raises(InvalidArgumentError):
        RateConfig(family="wavelet", r=1)
    with pytest.raises(InvalidArgumentError):
        RateConfig(family="kernel", r=1, s_f=2, s_psi=2, h_exponent=-0.2)
    with pytest.raises(InvalidArgumentError):
        RateConfig(family="spline", r=2, s_d=2, k_exponent=0.5)
