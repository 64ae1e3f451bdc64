"""Kernel density estimation, leave-one-out evaluation, and kernel smoothing.

The estimator is f_hat(z) = (1/(n h^r)) sum_i K((z - z_i)/h) with a bounded
product kernel, so f_hat is exactly zero outside the data range inflated by h
and piecewise polynomial between the per-coordinate breakpoints z_ic +- h.
Those breakpoints are exported so quadrature can place panel edges on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .exceptions import InsufficientDataError, InvalidArgumentError
from .kernels import KernelSpec, make_kernel
from .quadrature import box_grid, integrate
from . import quadrature

_CHUNK = 1 << 21  # cap on points x observations per broadcast block


def _as_sample(sample: np.ndarray) -> np.ndarray:
    z = np.asarray(sample, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2 or z.shape[0] < 1:
        raise InvalidArgumentError("sample must be a nonempty (n, r) array")
    return z


@dataclass(frozen=True)
class DensityEstimate:
    """Immutable fitted kernel density estimate."""

    sample: np.ndarray
    bandwidth: float
    kernel: KernelSpec

    def __post_init__(self):
        object.__setattr__(self, "sample", _as_sample(self.sample))
        if not self.bandwidth > 0:
            raise InvalidArgumentError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.kernel.dim != self.sample.shape[1]:
            raise InvalidArgumentError(
                f"kernel dim {self.kernel.dim} != data dim {self.sample.shape[1]}"
            )

    @property
    def n(self) -> int:
        return self.sample.shape[0]

    @property
    def dim(self) -> int:
        return self.sample.shape[1]

    def _kernel_sums(self, points: np.ndarray, skip: int | None = None) -> np.ndarray:
        """sum_i K((z - z_i)/h) at each point, optionally skipping one index."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.dim == 1 else pts[None, :]
        data = self.sample
        if skip is not None:
            data = np.delete(data, skip, axis=0)
        h = self.bandwidth
        out = np.empty(pts.shape[0])
        step = max(1, _CHUNK // max(1, data.shape[0]))
        for start in range(0, pts.shape[0], step):
            block = pts[start : start + step]
            u = (block[:, None, :] - data[None, :, :]) / h
            out[start : start + step] = self.kernel(u).sum(axis=1)
        return out

    def density(self, points: np.ndarray) -> np.ndarray:
        """f_hat at an (N, r) array (or (N,) when r == 1); returns (N,)."""
        return self._kernel_sums(points) / (self.n * self.bandwidth**self.dim)

    def density_at(self, z) -> float:
        return float(self.density(np.atleast_2d(np.asarray(z, dtype=float)))[0])

    def loo_density_at(self, i: int) -> float:
        """Leave-one-out density at observation i, divisor n - 1."""
        if self.n < 2:
            raise InsufficientDataError("leave-one-out evaluation needs n >= 2")
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"observation index {i} out of range")
        sums = self._kernel_sums(self.sample[i : i + 1], skip=i)
        return float(sums[0] / ((self.n - 1) * self.bandwidth**self.dim))

    @cached_property
    def support(self) -> tuple[tuple[float, float], ...]:
        lo = self.sample.min(axis=0) - self.bandwidth
        hi = self.sample.max(axis=0) + self.bandwidth
        return tuple((float(a), float(b)) for a, b in zip(lo, hi))

    @cached_property
    def breakpoints(self) -> tuple[np.ndarray, ...]:
        """Per-coordinate kink locations z_ic +- h of the piecewise polynomial."""
        out = []
        for c in range(self.dim):
            col = self.sample[:, c]
            out.append(np.unique(np.concatenate([col - self.bandwidth, col + self.bandwidth])))
        return tuple(out)


def kde_fit(sample, bandwidth: float, kernel: KernelSpec | None = None, order: int = 2) -> DensityEstimate:
    z = _as_sample(sample)
    if kernel is None:
        kernel = make_kernel(order, z.shape[1])
    return DensityEstimate(sample=z, bandwidth=float(bandwidth), kernel=kernel)


def kde_eval(est: DensityEstimate, z) -> float:
    return est.density_at(z)


def kde_loo_eval(est: DensityEstimate, i: int) -> float:
    return est.loo_density_at(i)


def normalization(est: DensityEstimate, tol: float = 1e-9) -> float:
    """int f_hat, computed by quadrature over the inflated data range."""
    if est.dim == 1:
        return integrate(
            lambda z: est.density(z),
            est.support[0][0],
            est.support[0][1],
            tol=tol,
            breakpoints=est.breakpoints[0],
        )
    grid = box_grid(est.support, axis_breakpoints=est.breakpoints, npts=8)
    return grid.integrate(est.density(grid.nodes))


def smooth_influence(
    psi: Callable[[np.ndarray], np.ndarray],
    kernel: KernelSpec,
    h: float,
    z,
    *,
    tol: float = 1e-9,
    psi_breakpoints: Sequence[float] = (),
) -> float:
    """Kernel smoothing of an influence-type function: int psi(z + h u) K(u) du.

    psi must be vectorized over an (N, r) array (or (N,) when r == 1).
    psi_breakpoints lists kink locations of psi in the z domain (first
    coordinate when r > 1); they are mapped into the u domain for panelling.
    """
    if not h > 0:
        raise InvalidArgumentError(f"bandwidth must be positive, got {h}")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    r = kernel.dim
    if z.shape != (r,):
        raise InvalidArgumentError(f"point has shape {z.shape}, expected ({r},)")
    if r == 1:
        u_breaks = [(b - z[0]) / h for b in psi_breakpoints]

        def integrand(u):
            return psi(z[0] + h * u) * kernel.eval1d(u)

        return integrate(integrand, -1.0, 1.0, tol=tol, breakpoints=u_breaks, npts=12)

    axis_breaks = [[(b - z[0]) / h for b in psi_breakpoints]] + [[] for _ in range(r - 1)]

    def integrand_nd(u):
        return psi(z[None, :] + h * u) * kernel(u)

    return quadrature.integrate_box(
        integrand_nd,
        [(-1.0, 1.0)] * r,
        tol=tol,
        axis_breakpoints=axis_breaks,
        npts=10,
    )
