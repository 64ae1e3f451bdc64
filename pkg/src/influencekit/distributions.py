"""Distribution representations that functionals are evaluated on.

Four variants: a closed-form density, a fitted kernel density, a
conditional-mean representation (regression function plus a marginal density
for the conditioning variables), and a two-point mixture of a base
representation with a smooth deviation. The deviation is a kernel density
centred at a point on its continuous coordinates times a point mass on its
discrete coordinates, so it concentrates at the point as its bandwidth
shrinks.

Every density-like representation exposes `pdf`, a per-axis `support` box and
per-axis quadrature `breakpoints`, which is all the functional evaluators
need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, UnsupportedRepresentationError
from .kde import DensityEstimate
from .kernels import KernelSpec, make_kernel
from .series import SeriesEstimate


@dataclass(frozen=True)
class TrueDensity:
    """Closed-form density on a declared box support."""

    pdf_fn: Callable[[np.ndarray], np.ndarray]
    support: tuple[tuple[float, float], ...]
    name: str = "density"
    breakpoints: tuple[tuple[float, ...], ...] = None  # type: ignore[assignment]
    scale_hint: tuple[float, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((float(a), float(b)) for a, b in self.support))
        if self.breakpoints is None:
            object.__setattr__(self, "breakpoints", tuple(() for _ in self.support))
        if self.scale_hint is None:
            object.__setattr__(self, "scale_hint", tuple(1.0 for _ in self.support))

    @property
    def dim(self) -> int:
        return len(self.support)

    def pdf(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.pdf_fn(points), dtype=float)


@dataclass(frozen=True)
class KdeDensity:
    """Fitted kernel density estimate used as a distribution representation."""

    estimate: DensityEstimate

    @property
    def dim(self) -> int:
        return self.estimate.dim

    @property
    def support(self) -> tuple[tuple[float, float], ...]:
        return self.estimate.support

    @property
    def breakpoints(self) -> tuple[np.ndarray, ...]:
        return self.estimate.breakpoints

    @property
    def scale_hint(self) -> tuple[float, ...]:
        return tuple(float(s) for s in self.estimate.sample.std(axis=0, ddof=1))

    def pdf(self, points: np.ndarray) -> np.ndarray:
        return self.estimate.density(points)


@dataclass(frozen=True)
class CondMean:
    """Conditional-mean representation: E[q | x] plus a marginal density of x.

    mean is either a closed-form function of x or a fitted SeriesEstimate.
    The observation layout is z = (q, x_1, ..., x_{r_x}).
    """

    mean: Callable[[np.ndarray], np.ndarray] | SeriesEstimate
    marginal: TrueDensity | KdeDensity
    name: str = "cond-mean"

    def conditional_mean(self, x: np.ndarray) -> np.ndarray:
        if isinstance(self.mean, SeriesEstimate):
            return self.mean.predict(x)
        return np.asarray(self.mean(x), dtype=float)

    @property
    def x_dim(self) -> int:
        return self.marginal.dim

    @property
    def dim(self) -> int:
        return self.marginal.dim + 1

    @property
    def x_support(self):
        return self.marginal.support

    @property
    def x_breakpoints(self):
        breaks = [list(b) for b in self.marginal.breakpoints]
        if isinstance(self.mean, SeriesEstimate):
            for c, extra in enumerate(self.mean.basis.axis_breakpoints):
                breaks[c].extend(extra)
        return tuple(tuple(b) for b in breaks)


@dataclass(frozen=True)
class Deviation:
    """Smoothed contamination G at a point: kernel density on the continuous
    coordinates, point mass on the discrete ones.

    bandwidth may be a scalar or a per-coordinate vector over the continuous
    coordinates. The kernel must be a probability density (order 2) for the
    deviation to define a distribution that can be mixed and sampled.
    """

    location: np.ndarray
    bandwidth: np.ndarray
    kernel: KernelSpec
    continuous_mask: tuple[bool, ...]

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.location, dtype=float))
        object.__setattr__(self, "location", loc)
        mask = tuple(bool(m) for m in self.continuous_mask)
        object.__setattr__(self, "continuous_mask", mask)
        if len(mask) != loc.shape[0]:
            raise InvalidArgumentError("continuous_mask length must match the point dimension")
        r_c = sum(mask)
        bw = np.atleast_1d(np.asarray(self.bandwidth, dtype=float))
        if bw.shape[0] == 1:
            bw = np.full(max(r_c, 1), float(bw[0]))
        if r_c and bw.shape[0] != r_c:
            raise InvalidArgumentError("bandwidth must be scalar or one value per continuous coordinate")
        if np.any(bw <= 0):
            raise InvalidArgumentError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", bw)
        if r_c and self.kernel.dim != r_c:
            raise InvalidArgumentError(
                f"kernel dim {self.kernel.dim} != number of continuous coordinates {r_c}"
            )

    @property
    def dim(self) -> int:
        return self.location.shape[0]

    @property
    def continuous_idx(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.continuous_mask) if m)

    @property
    def discrete_idx(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.continuous_mask) if not m)

    def density_continuous(self, x: np.ndarray) -> np.ndarray:
        """Kernel density over the continuous sub-vector; x is (N, r_c) or (N,)."""
        idx = self.continuous_idx
        if not idx:
            raise UnsupportedRepresentationError("deviation has no continuous coordinates")
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        loc = self.location[list(idx)]
        u = (x - loc[None, :]) / self.bandwidth[None, :]
        return self.kernel(u if len(idx) > 1 else u[:, 0]) / float(np.prod(self.bandwidth))

    def pdf(self, points: np.ndarray) -> np.ndarray:
        """Density on a fully continuous space (all coordinates continuous)."""
        if self.discrete_idx:
            raise UnsupportedRepresentationError(
                "deviation has point-mass coordinates; use density_continuous on the continuous block"
            )
        return self.density_continuous(points)

    @property
    def support(self) -> tuple[tuple[float, float], ...]:
        out = []
        k = 0
        for i, m in enumerate(self.continuous_mask):
            if m:
                h = self.bandwidth[k]
                out.append((float(self.location[i] - h), float(self.location[i] + h)))
                k += 1
            else:
                out.append((float(self.location[i]), float(self.location[i])))
        return tuple(out)

    @property
    def breakpoints(self) -> tuple[tuple[float, ...], ...]:
        return tuple((lo, hi) if hi > lo else () for lo, hi in self.support)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.tile(self.location, (size, 1))
        idx = self.continuous_idx
        if idx:
            u = self.kernel.sample(rng, size)
            out[:, list(idx)] += u * self.bandwidth[None, :]
        return out


def make_deviation(
    z,
    h,
    kernel: KernelSpec | None = None,
    continuous_mask: Sequence[bool] | None = None,
) -> Deviation:
    """Build the contamination G at z with bandwidth h.

    By default every coordinate is continuous and the kernel is the order-2
    density kernel of matching dimension.
    """
    loc = np.atleast_1d(np.asarray(z, dtype=float))
    if continuous_mask is None:
        continuous_mask = [True] * loc.shape[0]
    r_c = int(sum(bool(m) for m in continuous_mask))
    if kernel is None:
        kernel = make_kernel(2, max(r_c, 1))
    return Deviation(location=loc, bandwidth=h, kernel=kernel, continuous_mask=tuple(continuous_mask))


@dataclass(frozen=True)
class Mixture:
    """(1 - t) * base + t * deviation."""

    base: object
    deviation: Deviation
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise InvalidArgumentError(f"mixture weight t must lie in [0, 1], got {self.t}")

    @property
    def dim(self) -> int:
        return self.base.dim

    def pdf(self, points: np.ndarray) -> np.ndarray:
        return (1.0 - self.t) * self.base.pdf(points) + self.t * self.deviation.pdf(points)

    @property
    def support(self):
        base = self.base.support
        dev = self.deviation.support
        return tuple(
            (min(b[0], d[0]), max(b[1], d[1])) for b, d in zip(base, dev)
        )

    @property
    def breakpoints(self):
        out = []
        for c in range(self.dim):
            vals = list(self.base.breakpoints[c]) + list(self.deviation.breakpoints[c])
            out.append(tuple(sorted(vals)))
        return tuple(out)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw from the mixture; the base must expose a sampler."""
        take_dev = rng.random(size) < self.t
        n_dev = int(take_dev.sum())
        out = np.empty((size, self.dim))
        if size - n_dev:
            out[~take_dev] = np.atleast_2d(self.base.sample(rng, size - n_dev))
        if n_dev:
            out[take_dev] = self.deviation.sample(rng, n_dev)
        return out


def gaussian_density(mean: float = 0.0, sd: float = 1.0, half_width: float = 9.0) -> TrueDensity:
    """Standard closed-form normal density with truncated quadrature support."""

    def pdf(z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 2:
            z = z[:, 0]
        return np.exp(-0.5 * ((z - mean) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))

    lo, hi = mean - half_width * sd, mean + half_width * sd
    return TrueDensity(pdf, ((lo, hi),), name=f"normal({mean},{sd**2})", scale_hint=(sd,))


def uniform_density(lo: float = 0.0, hi: float = 1.0) -> TrueDensity:
    def pdf(z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 2:
            z = z[:, 0]
        return np.where((z >= lo) & (z <= hi), 1.0 / (hi - lo), 0.0)

    return TrueDensity(pdf, ((lo, hi),), name=f"uniform[{lo},{hi}]", scale_hint=(float(hi - lo) / 3.0,))


def uniform_box_density(bounds: Sequence[tuple[float, float]]) -> TrueDensity:
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    volume = float(np.prod([b - a for a, b in bounds]))

    def pdf(points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.ones(points.shape[0], dtype=bool)
        for c, (a, b) in enumerate(bounds):
            inside &= (points[:, c] >= a) & (points[:, c] <= b)
        return np.where(inside, 1.0 / volume, 0.0)

    return TrueDensity(pdf, bounds, name="uniform-box")
