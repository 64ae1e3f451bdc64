import numpy as np
import pytest

from influencekit.exceptions import InvalidArgumentError, QuadratureError
from influencekit import quadrature as quad


def test_polynomial_exact():
    assert quad.integrate(lambda x: x**2, 0.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-13)


def test_gaussian_density_integrates_to_one():
    phi = lambda x: np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    assert quad.integrate(phi, -9.0, 9.0, tol=1e-12) == pytest.approx(1.0, abs=1e-12)


def test_kink_with_breakpoint():
    val = quad.integrate(np.abs, -1.0, 1.0, tol=1e-12, breakpoints=[0.0])
    assert val == pytest.approx(1.0, abs=1e-13)


def test_kink_without_breakpoint_still_converges():
    val = quad.integrate(np.abs, -1.0, 1.0, tol=1e-10)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_empty_interval_rejected():
    with pytest.raises(InvalidArgumentError):
        quad.integrate(np.abs, 1.0, 1.0)


def test_sharp_bump_adapts():
    # narrow kernel-style bump of unit mass
    h = 0.01
    f = lambda x: np.where(np.abs((x - 0.3) / h) <= 1, 0.75 * (1 - ((x - 0.3) / h) ** 2) / h, 0.0)
    val = quad.integrate(f, 0.0, 1.0, tol=1e-10, breakpoints=[0.3 - h, 0.3 + h])
    assert val == pytest.approx(1.0, abs=1e-10)


def test_union_panels_partition():
    p1 = np.array([[0.0, 0.5], [0.5, 1.0]])
    p2 = np.array([[0.0, 0.25], [0.25, 1.0]])
    u = quad.union_panels(p1, p2)
    assert np.allclose(u[:, 0], [0.0, 0.25, 0.5])
    assert np.allclose(u[:, 1], [0.25, 0.5, 1.0])


def test_grid_reuse_matches_direct():
    f = lambda x: np.sin(3 * x) + x**4
    panels = quad.adaptive_panels(f, 0.0, 2.0, tol=1e-11)
    grid = quad.grid_from_panels(panels, npts=16)
    direct = quad.integrate(f, 0.0, 2.0, tol=1e-11)
    assert grid.integrate(f(grid.nodes)) == pytest.approx(direct, abs=1e-10)


def test_box_bilinear_exact():
    f = lambda p: p[:, 0] + p[:, 1]
    val = quad.integrate_box(f, [(0.0, 1.0), (0.0, 1.0)])
    assert val == pytest.approx(1.0, abs=1e-12)


def test_box_gaussian():
    f = lambda p: np.exp(-0.5 * (p**2).sum(axis=1)) / (2 * np.pi)
    val = quad.integrate_box(f, [(-7.0, 7.0), (-7.0, 7.0)], tol=1e-9)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_box_axis_breakpoints():
    # indicator band along the first axis
    f = lambda p: np.where((p[:, 0] >= 0.2) & (p[:, 0] <= 0.8), 1.0, 0.0)
    val = quad.integrate_box(
        f, [(0.0, 1.0), (0.0, 1.0)], axis_breakpoints=[[0.2, 0.8], []], tol=1e-12
    )
    assert val == pytest.approx(0.6, abs=1e-12)


def test_box_nonconvergence_raises():
    rng = np.random.default_rng(0)

    def noisy(p):
        return rng.normal(size=p.shape[0])

    with pytest.raises(QuadratureError):
        quad.integrate_box(noisy, [(0.0, 1.0)], tol=1e-12, max_rounds=3)
