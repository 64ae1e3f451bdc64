"""Series bases, least-squares series regression, and the estimated Riesz
representer for weighted-average functionals.

Power bases use graded monomials (total degree, then first coordinate first);
spline bases are tensor products of clamped B-splines of order o on uniformly
spaced knots over the declared support. Everything downstream (the fitted
conditional-mean d_hat and the representer delta_hat) is expressed in the raw
basis so that sigma_hat = P'P/n; conditioning is handled inside the fit by
column scaling, which leaves the reported coefficients in the raw basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import (
    InvalidArgumentError,
    RankDeficiencyError,
    UnsupportedRepresentationError,
)
from .quadrature import box_grid

MIN_SCALED_EIGENVALUE = 1e-10


def _graded_exponents(dim: int, count: int) -> list[tuple[int, ...]]:
    """Multi-index exponents in graded order, first coordinate breaking ties."""
    out: list[tuple[int, ...]] = []
    degree = 0
    while len(out) < count:
        level = [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) == degree]
        level.sort(key=lambda e: tuple(-x for x in e))
        out.extend(level)
        degree += 1
    return out[:count]


def _clamped_knots(lo: float, hi: float, interior: int, order: int) -> np.ndarray:
    inner = np.linspace(lo, hi, interior + 2)[1:-1]
    return np.concatenate([np.full(order, lo), inner, np.full(order, hi)])


@dataclass(frozen=True)
class BasisSpec:
    """Evaluable series basis on a box support."""

    kind: str
    num_terms: int
    dim: int
    support: tuple[tuple[float, float], ...]
    spline_order: int | None = None
    knots: tuple[tuple[float, ...], ...] | None = None
    exponents: tuple[tuple[int, ...], ...] | None = None

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Basis matrix of shape (N, K) at points x of shape (N, dim)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[1] != self.dim:
            raise InvalidArgumentError(f"points have dim {x.shape[1]}, basis has dim {self.dim}")
        if self.kind == "power":
            cols = [np.prod(x**np.asarray(e, dtype=float), axis=1) for e in self.exponents]
            return np.column_stack(cols)
        # spline: tensor product of per-axis design matrices
        degree = self.spline_order - 1
        per_axis = []
        for c in range(self.dim):
            t = np.asarray(self.knots[c])
            xc = np.clip(x[:, c], t[0], t[-1])
            per_axis.append(BSpline.design_matrix(xc, t, degree, extrapolate=False).toarray())
        mat = per_axis[0]
        for c in range(1, self.dim):
            mat = (mat[:, :, None] * per_axis[c][:, None, :]).reshape(x.shape[0], -1)
        return mat

    @cached_property
    def axis_breakpoints(self) -> tuple[tuple[float, ...], ...]:
        """Interior kink locations (spline knots); empty for power bases."""
        if self.kind != "spline":
            return tuple(() for _ in range(self.dim))
        return tuple(tuple(float(v) for v in np.unique(k)[1:-1]) for k in self.knots)


def build_basis(
    kind: str,
    dim: int,
    support: Sequence[tuple[float, float]],
    *,
    num_terms: int | None = None,
    spline_order: int | None = None,
    interior_knots: int | Sequence[int] | None = None,
) -> BasisSpec:
    """Construct a power or tensor-product spline basis.

    For splines the number of terms per axis is interior_knots + spline_order;
    if num_terms is also given it must equal the product over axes.
    """
    support = tuple((float(a), float(b)) for a, b in support)
    if len(support) != dim:
        raise InvalidArgumentError(f"support has {len(support)} intervals for dim {dim}")
    for lo, hi in support:
        if not hi > lo:
            raise InvalidArgumentError(f"empty support interval [{lo}, {hi}]")
    if kind == "power":
        if num_terms is None or num_terms < 1:
            raise InvalidArgumentError("power basis requires num_terms >= 1")
        exps = tuple(_graded_exponents(dim, num_terms))
        return BasisSpec(kind, num_terms, dim, support, exponents=exps)
    if kind == "spline":
        if spline_order is None or spline_order < 1:
            raise InvalidArgumentError("spline basis requires spline_order >= 1")
        if interior_knots is None:
            raise InvalidArgumentError("spline basis requires interior knot counts")
        counts = (
            [int(interior_knots)] * dim
            if np.isscalar(interior_knots)
            else [int(c) for c in interior_knots]
        )
        if len(counts) != dim or any(c < 0 for c in counts):
            raise InvalidArgumentError("interior_knots must give a count >= 0 per axis")
        knots = tuple(
            tuple(_clamped_knots(lo, hi, m, spline_order))
            for (lo, hi), m in zip(support, counts)
        )
        total = 1
        for m in counts:
            total *= m + spline_order
        if num_terms is not None and num_terms != total:
            raise InvalidArgumentError(
                f"num_terms {num_terms} inconsistent with knots: basis has {total} terms"
            )
        return BasisSpec(kind, total, dim, support, spline_order=spline_order, knots=knots)
    raise InvalidArgumentError(f"unknown basis kind {kind!r}")


@dataclass(frozen=True)
class SeriesEstimate:
    """Least-squares series regression fit: d_hat(x) = p(x)' gamma_hat."""

    basis: BasisSpec
    gamma_hat: np.ndarray
    sigma_hat: np.ndarray
    n: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(x) @ self.gamma_hat

    def predict_at(self, x) -> float:
        return float(self.predict(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def series_fit(x: np.ndarray, q: np.ndarray, basis: BasisSpec) -> SeriesEstimate:
    """Least-squares projection of q on the basis; errors on singular designs.

    The normal-equation matrix is checked after symmetric diagonal scaling,
    per the eigenvalue condition the asymptotics require; no ridge fallback is
    applied, so a singular design surfaces as RankDeficiencyError.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    q = np.asarray(q, dtype=float).ravel()
    if x.shape[0] != q.shape[0]:
        raise InvalidArgumentError("x and q have different lengths")
    n = x.shape[0]
    p = basis.evaluate(x)
    sigma = p.T @ p / n
    scale = np.sqrt(np.maximum(np.diag(sigma), 1e-300))
    scaled = sigma / scale[:, None] / scale[None, :]
    min_eig = float(np.linalg.eigvalsh(scaled)[0])
    if min_eig < MIN_SCALED_EIGENVALUE:
        raise RankDeficiencyError(
            f"series design is numerically singular: smallest scaled eigenvalue "
            f"{min_eig:.3e} < {MIN_SCALED_EIGENVALUE:.0e}",
            min_eigenvalue=min_eig,
        )
    rhs = p.T @ q / n
    gamma_scaled = np.linalg.solve(scaled, rhs / scale)
    gamma = gamma_scaled / scale
    return SeriesEstimate(basis=basis, gamma_hat=gamma, sigma_hat=sigma, n=n)


def series_eval(est: SeriesEstimate, x) -> float:
    return est.predict_at(x)


@dataclass(frozen=True)
class SurplusWeight:
    """Band weight W(x) = w(y) 1(p0 <= p <= p1) e^{-b (p - p0)} on x = (p, y).

    The y weight w has support y_support; outside the price band or the y
    support the weight is zero. Convention: x[..., 0] is price, x[..., 1] is
    income.
    """

    p0: float
    p1: float
    b: float = 0.0
    w: Callable[[np.ndarray], np.ndarray] | None = None
    y_support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not self.p1 > self.p0:
            raise InvalidArgumentError(f"price band [{self.p0}, {self.p1}] is empty")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p, y = x[..., 0], x[..., 1]
        wy = np.ones_like(y) if self.w is None else np.asarray(self.w(y), dtype=float)
        in_band = (p >= self.p0) & (p <= self.p1)
        in_y = (y >= self.y_support[0]) & (y <= self.y_support[1])
        return np.where(in_band & in_y, wy * np.exp(-self.b * (p - self.p0)), 0.0)

    @property
    def box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.p0, self.p1), self.y_support)


def weight_moment(weight: SurplusWeight, basis: BasisSpec, *, tol: float = 1e-10) -> np.ndarray:
    """K-vector of integrals int W(x) p_k(x) dx over the weight's box."""
    if basis.dim != 2:
        raise UnsupportedRepresentationError("surplus weight moments need a 2-d basis")
    breaks = [
        tuple(basis.axis_breakpoints[0]),
        tuple(basis.axis_breakpoints[1]),
    ]
    grid = box_grid(weight.box, axis_breakpoints=breaks, npts=12, splits=2)
    values = weight(grid.nodes)[:, None] * basis.evaluate(grid.nodes)
    coarse = box_grid(weight.box, axis_breakpoints=breaks, npts=12, splits=1)
    vals_coarse = weight(coarse.nodes)[:, None] * basis.evaluate(coarse.nodes)
    fine = grid.weights @ values
    check = coarse.weights @ vals_coarse
    if np.max(np.abs(fine - check)) > max(tol, 1e-12) * max(1.0, np.max(np.abs(fine))):
        finer = box_grid(weight.box, axis_breakpoints=breaks, npts=12, splits=4)
        vals_finer = weight(finer.nodes)[:, None] * basis.evaluate(finer.nodes)
        fine = finer.weights @ vals_finer
    return fine


class RieszRepresenter:
    """delta_hat(x) = [int W p]' sigma_hat^{-1} p(x) for a fitted series."""

    def __init__(self, estimate: SeriesEstimate, weight: SurplusWeight, moments: np.ndarray | None = None):
        self.estimate = estimate
        self.weight = weight
        self.moments = weight_moment(weight, estimate.basis) if moments is None else moments
        self._coef = _solve_sigma(estimate, self.moments)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.estimate.basis.evaluate(x) @ self._coef

    def at(self, x) -> float:
        return float(self(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def _solve_sigma(est: SeriesEstimate, rhs: np.ndarray) -> np.ndarray:
    sigma = est.sigma_hat
    scale = np.sqrt(np.maximum(np.diag(sigma), 1e-300))
    scaled = sigma / scale[:, None] / scale[None, :]
    min_eig = float(np.linalg.eigvalsh(scaled)[0])
    if min_eig < MIN_SCALED_EIGENVALUE:
        raise RankDeficiencyError(
            f"sigma_hat is numerically singular: smallest scaled eigenvalue {min_eig:.3e}",
            min_eigenvalue=min_eig,
        )
    return np.linalg.solve(scaled, rhs / scale) / scale


def delta_hat_eval(est: SeriesEstimate, weight: SurplusWeight, x) -> float:
    """delta_hat at a single point x = (p, y)."""
    return RieszRepresenter(est, weight).at(x)


def surplus_plugin(est: SeriesEstimate, weight: SurplusWeight) -> float:
    """int W(x) d_hat(x) dx by quadrature over the weight box."""
    grid = box_grid(
        weight.box,
        axis_breakpoints=[est.basis.axis_breakpoints[0], est.basis.axis_breakpoints[1]],
        npts=12,
        splits=2,
    )
    return grid.integrate(weight(grid.nodes) * est.predict(grid.nodes))
