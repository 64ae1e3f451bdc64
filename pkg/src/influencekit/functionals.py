"""Target parameters beta(F) and their evaluation on distribution
representations, including along mixture paths toward a smooth deviation.

Two worked functionals are registered: the integrated squared density and the
weighted consumer-surplus bound, plus generic linear functionals. Path
evaluation freezes one quadrature grid per (base, deviation) pair and
evaluates every mixture weight t on it, so finite differences across t cancel
node-placement error exactly; this property is what makes the numerical
Gateaux derivative reliable at small step sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import CondMean, Deviation, KdeDensity, Mixture, TrueDensity
from .exceptions import (
    InsufficientDataError,
    InvalidArgumentError,
    UnsupportedRepresentationError,
)
from .kde import DensityEstimate
from .kernels import KernelSpec, make_kernel
from .quadrature import (
    adaptive_panels,
    box_grid,
    grid_from_panels,
    integrate,
    union_panels,
)
from .series import SurplusWeight

_DENSITY_REPS = (TrueDensity, KdeDensity, Mixture, Deviation)


def _require_density(rep) -> None:
    if not (hasattr(rep, "pdf") and hasattr(rep, "support")):
        raise UnsupportedRepresentationError(
            f"functional needs a density representation, got {type(rep).__name__}"
        )


def _union_support(base, dev: Deviation):
    return tuple(
        (min(b[0], d[0]), max(b[1], d[1])) for b, d in zip(base.support, dev.support)
    )


def _merged_breaks(base, dev: Deviation, axis: int) -> list[float]:
    return list(base.breakpoints[axis]) + list(dev.breakpoints[axis])


class Functional:
    """A named map beta(F) evaluable on distribution representations."""

    id: str = "functional"
    is_linear: bool = False

    def value(self, rep) -> float:
        raise NotImplementedError

    def path_values(self, base, dev: Deviation, ts: Sequence[float]) -> np.ndarray:
        """beta((1 - t) base + t dev) for each t, on one shared quadrature grid."""
        raise NotImplementedError


class IntegratedSquaredDensity(Functional):
    """beta(F) = int f(z)^2 dz on continuous distributions."""

    id = "isd"

    def __init__(self, tol: float = 1e-9):
        self.tol = tol

    def value(self, rep) -> float:
        if isinstance(rep, Mixture):
            return float(self.path_values(rep.base, rep.deviation, [rep.t])[0])
        _require_density(rep)
        bounds = rep.support
        if len(bounds) == 1:
            return integrate(
                lambda z: rep.pdf(z) ** 2,
                bounds[0][0],
                bounds[0][1],
                tol=self.tol,
                breakpoints=rep.breakpoints[0],
            )
        grid = box_grid(bounds, axis_breakpoints=rep.breakpoints, npts=10, splits=2)
        return grid.integrate(rep.pdf(grid.nodes) ** 2)

    def path_values(self, base, dev: Deviation, ts: Sequence[float]) -> np.ndarray:
        _require_density(base)
        if dev.discrete_idx:
            raise UnsupportedRepresentationError(
                "integrated squared density requires a fully continuous deviation"
            )
        bounds = _union_support(base, dev)
        ts = np.asarray(ts, dtype=float)
        if len(bounds) == 1:
            a, b = bounds[0]
            breaks = _merged_breaks(base, dev, 0)
            pan_base = adaptive_panels(
                lambda z: base.pdf(z) ** 2, a, b, tol=self.tol, breakpoints=breaks
            )
            pan_dev = adaptive_panels(
                lambda z: dev.pdf(z) ** 2, a, b, tol=self.tol, breakpoints=breaks
            )
            grid = grid_from_panels(union_panels(pan_base, pan_dev), npts=16)
            f0 = base.pdf(grid.nodes)
            g = dev.pdf(grid.nodes)
        else:
            axis_breaks = []
            for c in range(len(bounds)):
                extra = list(np.linspace(*dev.support[c], 5)) if dev.support[c][1] > dev.support[c][0] else []
                axis_breaks.append(_merged_breaks(base, dev, c) + extra)
            grid = box_grid(bounds, axis_breakpoints=axis_breaks, npts=10, splits=2)
            f0 = base.pdf(grid.nodes)
            g = dev.pdf(grid.nodes)
        return np.array([grid.integrate(((1 - t) * f0 + t * g) ** 2) for t in ts])

    def influence_from(self, rep) -> Callable[[np.ndarray], np.ndarray]:
        """Closed-form influence function psi(z) = 2 [f(z) - beta(F)]."""
        _require_density(rep)
        beta = self.value(rep)

        def psi(z):
            return 2.0 * (rep.pdf(z) - beta)

        return psi


class SurplusBound(Functional):
    """beta(F) = int W(x) E_F[q | x] dx for a band weight W on x = (p, y).

    Observations are z = (q, p, y); the representation is a CondMean. Mixture
    paths use a deviation that is a point mass in q times a kernel density in
    x, and mix the conditional mean accordingly.
    """

    id = "surplus"

    def __init__(self, weight: SurplusWeight, tol: float = 1e-9):
        self.weight = weight
        self.tol = tol

    def _cond_mean_rep(self, rep) -> CondMean:
        if isinstance(rep, CondMean):
            return rep
        raise UnsupportedRepresentationError(
            f"surplus bound needs a conditional-mean representation, got {type(rep).__name__}"
        )

    def _grid(self, base: CondMean, dev: Deviation | None):
        axis_breaks = [list(b) for b in base.x_breakpoints]
        if dev is not None:
            for c_axis, c_full in enumerate(dev.continuous_idx):
                lo, hi = dev.support[c_full]
                axis = c_full - 1  # z = (q, x); x axes shift down by one
                axis_breaks[axis].extend([lo, hi])
                axis_breaks[axis].extend(np.linspace(lo, hi, 9))
        return box_grid(self.weight.box, axis_breakpoints=axis_breaks, npts=10, splits=2)

    def value(self, rep) -> float:
        if isinstance(rep, Mixture):
            return float(self.path_values(rep.base, rep.deviation, [rep.t])[0])
        base = self._cond_mean_rep(rep)
        grid = self._grid(base, None)
        w = self.weight(grid.nodes)
        return grid.integrate(w * base.conditional_mean(grid.nodes))

    def _check_deviation(self, base: CondMean, dev: Deviation) -> None:
        expected = (False,) + (True,) * base.x_dim
        if dev.continuous_mask != expected:
            raise UnsupportedRepresentationError(
                "surplus path needs a deviation that is a point mass in q times "
                f"a kernel density in x (continuous_mask {expected})"
            )

    def path_values(self, base, dev: Deviation, ts: Sequence[float]) -> np.ndarray:
        base = self._cond_mean_rep(base)
        self._check_deviation(base, dev)
        q_dev = float(dev.location[0])
        grid = self._grid(base, dev)
        f0 = base.marginal.pdf(grid.nodes)
        if np.any(f0 <= 0):
            raise UnsupportedRepresentationError(
                "marginal density must be positive on the weight band"
            )
        d0 = base.conditional_mean(grid.nodes)
        g = dev.density_continuous(grid.nodes)
        w = self.weight(grid.nodes)
        out = []
        for t in np.asarray(ts, dtype=float):
            numer = (1 - t) * f0 * d0 + t * g * q_dev
            denom = (1 - t) * f0 + t * g
            out.append(grid.integrate(w * numer / denom))
        return np.array(out)

    def influence_from(self, rep) -> Callable[[np.ndarray], np.ndarray]:
        """Closed form psi(z) = delta(x) [q - d0(x)] with delta = W / f0."""
        base = self._cond_mean_rep(rep)
        beta_weight = self.weight

        def psi(z):
            z = np.atleast_2d(np.asarray(z, dtype=float))
            q, x = z[:, 0], z[:, 1:]
            f0 = base.marginal.pdf(x)
            delta = np.where(f0 > 0, beta_weight(x) / np.where(f0 > 0, f0, 1.0), 0.0)
            return delta * (q - base.conditional_mean(x))

        return psi


class LinearFunctional(Functional):
    """beta(F) = int zeta(z) F(dz) for a fixed integrand zeta."""

    is_linear = True

    def __init__(self, zeta: Callable[[np.ndarray], np.ndarray], name: str = "linear",
                 breakpoints: Sequence[float] = (), tol: float = 1e-9):
        self.zeta = zeta
        self.id = name
        self.breakpoints = tuple(breakpoints)
        self.tol = tol

    def value(self, rep) -> float:
        if isinstance(rep, Mixture):
            return float(self.path_values(rep.base, rep.deviation, [rep.t])[0])
        _require_density(rep)
        bounds = rep.support
        if len(bounds) == 1:
            return integrate(
                lambda z: self.zeta(z) * rep.pdf(z),
                bounds[0][0],
                bounds[0][1],
                tol=self.tol,
                breakpoints=list(rep.breakpoints[0]) + list(self.breakpoints),
            )
        grid = box_grid(bounds, axis_breakpoints=rep.breakpoints, npts=10, splits=2)
        return grid.integrate(self.zeta(grid.nodes) * rep.pdf(grid.nodes))

    def path_values(self, base, dev: Deviation, ts: Sequence[float]) -> np.ndarray:
        _require_density(base)
        if dev.discrete_idx:
            raise UnsupportedRepresentationError("linear path needs a continuous deviation")
        bounds = _union_support(base, dev)
        ts = np.asarray(ts, dtype=float)
        if len(bounds) == 1:
            a, b = bounds[0]
            breaks = _merged_breaks(base, dev, 0) + list(self.breakpoints)
            pan_base = adaptive_panels(
                lambda z: self.zeta(z) * base.pdf(z), a, b, tol=self.tol, breakpoints=breaks
            )
            pan_dev = adaptive_panels(
                lambda z: self.zeta(z) * dev.pdf(z), a, b, tol=self.tol, breakpoints=breaks
            )
            grid = grid_from_panels(union_panels(pan_base, pan_dev), npts=16)
            zeta = self.zeta(grid.nodes)
            base_part = grid.integrate(zeta * base.pdf(grid.nodes))
            dev_part = grid.integrate(zeta * dev.pdf(grid.nodes))
        else:
            axis_breaks = [
                _merged_breaks(base, dev, c)
                + (list(np.linspace(*dev.support[c], 5)) if dev.support[c][1] > dev.support[c][0] else [])
                for c in range(len(bounds))
            ]
            grid = box_grid(bounds, axis_breakpoints=axis_breaks, npts=10, splits=2)
            zeta = self.zeta(grid.nodes)
            base_part = grid.integrate(zeta * base.pdf(grid.nodes))
            dev_part = grid.integrate(zeta * dev.pdf(grid.nodes))
        return (1 - ts) * base_part + ts * dev_part


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

_ISD = IntegratedSquaredDensity()


def isd_value(rep) -> float:
    """Integrated squared density of a density representation."""
    return _ISD.value(rep)


def isd_loo_value(sample, h: float, kernel: KernelSpec | None = None, order: int = 2) -> float:
    """Leave-one-out estimator: (1/n) sum_i f_loo(z_i), expanded pairwise.

    Equals (1/(n (n-1) h^r)) sum_{i != j} K((z_i - z_j)/h) for symmetric K.
    """
    z = np.asarray(sample, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n, r = z.shape
    if n < 2:
        raise InsufficientDataError("leave-one-out estimator needs n >= 2")
    if kernel is None:
        kernel = make_kernel(order, r)
    if kernel.dim != r:
        raise InvalidArgumentError(f"kernel dim {kernel.dim} != data dim {r}")
    if not h > 0:
        raise InvalidArgumentError(f"bandwidth must be positive, got {h}")
    total = 0.0
    step = max(1, (1 << 21) // n)
    for start in range(0, n, step):
        block = z[start : start + step]
        u = (block[:, None, :] - z[None, :, :]) / h
        vals = kernel(u if r > 1 else u[..., 0])
        total += float(vals.sum())
    total -= n * kernel.at_zero  # remove i == j diagonal
    return total / (n * (n - 1) * h**r)


def surplus_value(rep, weight: SurplusWeight) -> float:
    """Consumer-surplus bound int W(x) E_F[q|x] dx on a CondMean representation."""
    return SurplusBound(weight).value(rep)


def mixture_eval(functional: Functional, base, dev: Deviation, t: float) -> float:
    """beta((1 - t) F0 + t G) along the smoothed-contamination path."""
    if not 0.0 <= t <= 1.0:
        raise InvalidArgumentError(f"mixture weight t must lie in [0, 1], got {t}")
    return float(functional.path_values(base, dev, [t])[0])


def default_surplus_weight() -> SurplusWeight:
    """The registry weight: unit y-weight, band [0.2, 0.8], no tilt."""
    return SurplusWeight(p0=0.2, p1=0.8, b=0.0, y_support=(0.0, 1.0))


def get_functional(functional_id: str) -> Functional:
    """Resolve a functional id; 'isd_loo' shares the ISD functional."""
    fid = functional_id.lower()
    if fid in ("isd", "isd_loo"):
        return IntegratedSquaredDensity()
    if fid == "surplus":
        return SurplusBound(default_surplus_weight())
    if fid == "mean":
        return LinearFunctional(lambda z: np.asarray(z, dtype=float).reshape(-1), name="mean")
    raise InvalidArgumentError(
        f"unknown functional {functional_id!r}; registered: isd, isd_loo, surplus, mean"
    )


FUNCTIONAL_IDS = ("isd", "isd_loo", "surplus", "mean")
