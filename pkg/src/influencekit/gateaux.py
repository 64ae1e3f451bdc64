"""Numerical influence functions as limits of Gateaux derivatives.

The derivative of beta((1 - t) F0 + t G_z^h) at t = 0 is taken by a one-sided
second-order finite difference (t >= 0 is required for the mixture to remain a
distribution), with all three stencil evaluations computed on one shared
quadrature grid so node-placement error cancels in the difference. The
bandwidth of the deviation is then driven to zero along a ladder and the
h -> 0 limit extrapolated in powers of h^2 (symmetric kernels have no odd
terms).

The finite-difference step is shrunk proportionally to h^{r_c} (r_c = number
of smoothed coordinates): for nonlinear functionals the curvature of t ->
beta(t) grows like the concentration of the deviation, and this scaling keeps
the truncation error of the stencil uniformly small along the ladder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import CondMean, Deviation, make_deviation
from .exceptions import (
    InfluenceKitError,
    InvalidArgumentError,
    NumericFailureError,
    TableFailureError,
)
from .functionals import Functional
from .kernels import KernelSpec
from .workers import map_indexed

DEFAULT_H_LADDER = (0.4, 0.2, 0.1, 0.05)


@dataclass(frozen=True)
class DerivativeLadder:
    """Bandwidth ladder and finite-difference step for the limit computation."""

    h_values: tuple[float, ...] = DEFAULT_H_LADDER
    t_step: float = 1e-3
    extrapolation: str = "richardson"

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_values)
        object.__setattr__(self, "h_values", hs)
        if any(h <= 0 for h in hs):
            raise InvalidArgumentError("ladder bandwidths must be positive")
        if any(a <= b for a, b in zip(hs, hs[1:])):
            raise InvalidArgumentError("ladder bandwidths must be strictly decreasing")
        if not 0.0 < self.t_step < 0.5:
            raise InvalidArgumentError(f"t_step must lie in (0, 0.5), got {self.t_step}")
        if self.extrapolation not in ("richardson", "none"):
            raise InvalidArgumentError(f"unknown extrapolation {self.extrapolation!r}")


def path_derivative(functional: Functional, base, dev: Deviation, t_step: float = 1e-3) -> float:
    """d/dt beta((1 - t) F0 + t G)|_{t=0} by the one-sided stencil
    [-3 beta(0) + 4 beta(t) - beta(2t)] / (2t), exact for quadratic paths."""
    if not 0.0 < t_step < 0.5:
        raise InvalidArgumentError(f"t_step must lie in (0, 0.5), got {t_step}")
    r_c = len(dev.continuous_idx)
    h_eff = float(np.max(dev.bandwidth)) if r_c else 1.0
    t_eff = t_step * min(1.0, h_eff**r_c)
    try:
        values = functional.path_values(base, dev, [0.0, t_eff, 2.0 * t_eff])
    except InfluenceKitError:
        raise
    except Exception as exc:  # propagate evaluation failures with context
        raise NumericFailureError(f"path evaluation failed: {exc}") from exc
    return float((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * t_eff))


def _neville_at_zero(x: np.ndarray, y: np.ndarray) -> float:
    """Polynomial extrapolation of (x_i, y_i) to x = 0 (Neville's scheme)."""
    t = np.array(y, dtype=float)
    n = len(t)
    for level in range(1, n):
        for i in range(n - level):
            t[i] = (x[i + level] * t[i] - x[i] * t[i + 1]) / (x[i + level] - x[i])
    return float(t[0])


@dataclass
class InfluenceResult:
    """Extrapolated influence value at one point plus its ladder diagnostics."""

    value: float
    per_h: np.ndarray
    h_values: tuple[float, ...]
    converged: bool
    message: str = ""

    @property
    def last_level_gap(self) -> float:
        if len(self.per_h) < 2:
            return float("nan")
        return float(abs(self.per_h[-1] - self.per_h[-2]))


def _scale_vector(base, dim: int) -> np.ndarray:
    hint = getattr(base, "scale_hint", None)
    if hint is not None and len(hint) == dim:
        return np.asarray(hint, dtype=float)
    if isinstance(base, CondMean):
        return np.concatenate([[1.0], np.asarray(base.marginal.scale_hint, dtype=float)])
    return np.ones(dim)


def influence_at(
    functional: Functional,
    base,
    z,
    ladder: DerivativeLadder | None = None,
    continuous_mask: Sequence[bool] | None = None,
    kernel: KernelSpec | None = None,
) -> InfluenceResult:
    """psi(z) as the h -> 0 limit of the path derivative at the point z."""
    ladder = ladder or DerivativeLadder()
    if len(ladder.h_values) < 3:
        raise InvalidArgumentError("influence extrapolation needs a ladder of >= 3 levels")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    dim = z.shape[0]
    if continuous_mask is None:
        continuous_mask = [True] * dim
    scale = _scale_vector(base, dim)
    cont_scale = scale[[i for i, m in enumerate(continuous_mask) if m]]
    per_h = []
    for h in ladder.h_values:
        dev = make_deviation(z, h * cont_scale, kernel=kernel, continuous_mask=continuous_mask)
        per_h.append(path_derivative(functional, base, dev, ladder.t_step))
    per_h = np.asarray(per_h)
    if ladder.extrapolation == "richardson":
        value = _neville_at_zero(np.asarray(ladder.h_values) ** 2, per_h)
    else:
        value = float(per_h[-1])
    diffs = np.abs(np.diff(per_h))
    converged = True
    message = ""
    if np.all(diffs > 0) and len(diffs) >= 2 and diffs[-1] > 2.0 * diffs[-2]:
        converged = False
        message = (
            "no-limit: per-level differences grow along the ladder tail "
            f"({diffs[-2]:.3e} -> {diffs[-1]:.3e})"
        )
    return InfluenceResult(
        value=value,
        per_h=per_h,
        h_values=ladder.h_values,
        converged=converged,
        message=message,
    )


@dataclass
class InfluenceTable:
    """psi_hat at every observation plus variance and convergence diagnostics."""

    psi_values: np.ndarray
    mu_zh: np.ndarray
    h_values: tuple[float, ...]
    converged: np.ndarray
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.psi_values))

    @property
    def v_hat(self) -> float:
        """Centered sample variance of psi_hat."""
        return float(np.mean((self.psi_values - self.mean) ** 2))

    @property
    def second_moment(self) -> float:
        return float(np.mean(self.psi_values**2))


def influence_table(
    functional: Functional,
    base,
    sample,
    ladder: DerivativeLadder | None = None,
    continuous_mask: Sequence[bool] | None = None,
    kernel: KernelSpec | None = None,
    max_failure_share: float = 0.05,
) -> InfluenceTable:
    """Influence values at all sample points; fails if > max_failure_share do."""
    ladder = ladder or DerivativeLadder()
    z = np.asarray(sample, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n, levels = z.shape[0], len(ladder.h_values)

    def one(i: int):
        try:
            res = influence_at(
                functional, base, z[i], ladder=ladder,
                continuous_mask=continuous_mask, kernel=kernel,
            )
            return res, None
        except InfluenceKitError as exc:
            return None, f"{type(exc).__name__}: {exc}"

    results = map_indexed(one, list(range(n)))
    psi = np.full(n, np.nan)
    mu = np.full((n, levels), np.nan)
    conv = np.zeros(n, dtype=bool)
    failures: list[tuple[int, str]] = []
    for i, (res, err) in enumerate(results):
        if err is not None:
            failures.append((i, err))
            continue
        psi[i] = res.value
        mu[i] = res.per_h
        conv[i] = res.converged
    if len(failures) > max_failure_share * n:
        raise TableFailureError(
            f"influence table failed at {len(failures)}/{n} points "
            f"(> {max_failure_share:.0%}); first: {failures[0][1]}"
        )
    if failures:
        keep = np.isfinite(psi)
        psi, mu, conv = psi[keep], mu[keep], conv[keep]
    return InfluenceTable(
        psi_values=psi, mu_zh=mu, h_values=ladder.h_values, converged=conv, failures=failures
    )
