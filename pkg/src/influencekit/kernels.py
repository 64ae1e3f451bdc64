"""Higher-order bounded-support product kernels.

The one-dimensional base kernel has the form K(u) = (1 - u^2) q(u^2) on
[-1, 1] with q a polynomial of degree (s - 2) / 2 chosen so that the kernel
integrates to one and its moments of orders 1..s-1 vanish. Odd moments vanish
by symmetry; the even-moment conditions give a small linear system that is
solved exactly over the rationals, so generated kernels satisfy the moment
conditions to machine precision. Multivariate kernels are products of
identical one-dimensional kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exceptions import InvalidArgumentError


def _solve_fraction_system(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination with exact rational arithmetic."""
    m = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if a[r][col] != 0), None)
        if pivot is None:
            raise InvalidArgumentError("singular kernel moment system")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1, 1) / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(m):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [vr - factor * vc for vr, vc in zip(a[r], a[col])]
    return [a[r][m] for r in range(m)]


@lru_cache(maxsize=32)
def _base_coeffs(order: int) -> tuple[Fraction, ...]:
    """Coefficients c_j of u^{2j} for the order-s base kernel, exact rationals.

    Solves sum_j a_j * I(k + j) = delta_{k0} for q(v) = sum a_j v^j, where
    I(p) = int_{-1}^{1} u^{2p} (1 - u^2) du = 4 / ((2p + 1)(2p + 3)), then
    expands (1 - v) q(v).
    """
    m = order // 2  # number of unknowns in q
    def moment(p: int) -> Fraction:
        return Fraction(4, (2 * p + 1) * (2 * p + 3))

    matrix = [[moment(k + j) for j in range(m)] for k in range(m)]
    rhs = [Fraction(1 if k == 0 else 0) for k in range(m)]
    a = _solve_fraction_system(matrix, rhs)
    # (1 - v) * q(v): c_j = a_j - a_{j-1}
    c = [a[0]] + [a[j] - a[j - 1] for j in range(1, m)] + [-a[m - 1]]
    return tuple(c)


@dataclass(frozen=True)
class KernelSpec:
    """A product kernel of even order on [-1, 1]^dim.

    coeffs are the coefficients of u^{2j} of the one-dimensional kernel, so
    K1(u) = sum_j coeffs[j] * u^{2j} for |u| <= 1 and 0 outside.
    """

    order: int
    dim: int
    coeffs: tuple[float, ...]

    def eval1d(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = u * u
        out = np.zeros_like(v)
        inside = v <= 1.0
        vi = v[inside]
        acc = np.zeros_like(vi)
        for c in reversed(self.coeffs):
            acc = acc * vi + c
        out[inside] = acc
        return out

    def __call__(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the product kernel at points of shape (..., dim).

        For dim == 1 a plain (...,) array of scalars is also accepted.
        """
        u = np.asarray(u, dtype=float)
        if self.dim == 1:
            if u.ndim >= 2 and u.shape[-1] == 1:
                u = u[..., 0]
            return self.eval1d(u)
        return np.prod(self.eval1d(u), axis=-1)

    @property
    def at_zero(self) -> float:
        return float(self.coeffs[0]) ** self.dim

    def moment(self, j: int) -> float:
        """Exact j-th moment of the one-dimensional kernel."""
        if j % 2 == 1:
            return 0.0
        total = Fraction(0)
        for m, c in enumerate(_exact_coeffs(self.order)):
            total += c * Fraction(2, j + 2 * m + 1)
        return float(total)

    def half_moment(self, j: int) -> float:
        """int_0^1 u^j K1(u) du, exact."""
        total = Fraction(0)
        for m, c in enumerate(_exact_coeffs(self.order)):
            total += c * Fraction(1, j + 2 * m + 1)
        return float(total)

    @property
    def is_density(self) -> bool:
        """True when the 1-d kernel is nonnegative (only the order-2 kernel is)."""
        u = np.linspace(0.0, 1.0, 2001)
        return bool(np.all(self.eval1d(u) >= -1e-12))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw from the kernel density by rejection; shape (size, dim).

        Only valid for kernels that are densities (order 2); higher-order
        kernels take negative values and cannot be sampled.
        """
        if not self.is_density:
            raise InvalidArgumentError(
                f"order-{self.order} kernel is not a probability density; "
                "use an order-2 kernel for deviations that must be sampled"
            )
        bound = float(self.coeffs[0])
        out = np.empty((size, self.dim))
        for c in range(self.dim):
            filled = 0
            while filled < size:
                need = size - filled
                u = rng.uniform(-1.0, 1.0, size=2 * need + 16)
                accept = rng.uniform(0.0, bound, size=u.shape[0]) <= self.eval1d(u)
                got = u[accept][:need]
                out[filled : filled + got.shape[0], c] = got
                filled += got.shape[0]
        return out


def _exact_coeffs(order: int) -> tuple[Fraction, ...]:
    return _base_coeffs(order)


def make_kernel(order: int, dim: int = 1) -> KernelSpec:
    """Construct the minimal polynomial kernel of the given even order.

    Raises InvalidArgumentError for odd or nonpositive orders or dim < 1.
    """
    if not isinstance(order, (int, np.integer)) or order <= 0 or order % 2 != 0:
        raise InvalidArgumentError(f"kernel order must be a positive even integer, got {order!r}")
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidArgumentError(f"kernel dim must be a positive integer, got {dim!r}")
    coeffs = tuple(float(c) for c in _base_coeffs(int(order)))
    return KernelSpec(order=int(order), dim=int(dim), coeffs=coeffs)
