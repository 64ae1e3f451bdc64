"""Remainder decompositions and rate-condition checks for asymptotic linearity.

The first-order remainder R1(F_hat) = int psi dF_hat - mean_i psi(z_i) is
split into an expectation part (the smoothing bias of the plug-in, a
convolution bias for kernel estimates, a conditional-on-design series bias for
series estimates) and a stochastic-equicontinuity part. The second-order
remainder R2 is the linearization residual beta(F) - beta(F0) - int psi dF,
identically zero for linear functionals and for the series surplus plug-in.

Rate conditions are evaluated symbolically in exponents of n (with log
factors), never by numeric sampling: the assumptions are limit statements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import CondMean, KdeDensity, TrueDensity
from .exceptions import (
    InvalidArgumentError,
    RankDeficiencyError,
    UnsupportedRepresentationError,
)
from .functionals import Functional, SurplusBound
from .kde import smooth_influence
from .kernels import KernelSpec
from .quadrature import box_grid, gauss_legendre, integrate
from .series import BasisSpec, RieszRepresenter, SeriesEstimate

# ---------------------------------------------------------------------------
# kernel-case bias and stochastic equicontinuity
# ---------------------------------------------------------------------------


def kernel_bias(
    psi: Callable[[np.ndarray], np.ndarray],
    f0: TrueDensity,
    kernel: KernelSpec,
    h: float,
    *,
    order: str = "convolution",
    psi_breakpoints: Sequence[float] = (),
    tol: float = 1e-10,
) -> float:
    """Smoothing bias of the linear plug-in: int [rho(hu) - rho(0)] K(u) du
    with rho(t) = int psi(z + t) f0(z) dz.

    For mean-zero psi this equals E[int psi(z_i + hu) K(u) du]; the centering
    at rho(0) removes the mean for general psi. `order` selects the
    integration order: "convolution" computes rho first, "smoothed" integrates
    the kernel-smoothed psi against f0 (the two must agree, and do so to
    quadrature tolerance).
    """
    if f0.dim != 1 or kernel.dim != 1:
        raise UnsupportedRepresentationError("kernel_bias is implemented for one dimension")
    if not h > 0:
        raise InvalidArgumentError(f"bandwidth must be positive, got {h}")
    a, b = f0.support[0]
    f_breaks = list(f0.breakpoints[0])
    p_breaks = list(psi_breakpoints)

    if order == "convolution":

        def rho(t: float) -> float:
            shifted = [pb - t for pb in p_breaks]
            return integrate(
                lambda z: psi(z + t) * f0.pdf(z), a, b,
                tol=tol, breakpoints=f_breaks + shifted,
            )

        rho0 = rho(0.0)

        def outer(us: np.ndarray) -> np.ndarray:
            return np.array([(rho(h * u) - rho0) * kernel.eval1d(np.array([u]))[0] for u in np.atleast_1d(us)])

        # rho kinks where a psi kink meets an f0 kink: u = (pb - fb) / h
        kink_us = [0.0] + [
            (pb - fb) / h for pb in p_breaks for fb in f_breaks if abs(pb - fb) < h
        ]
        return integrate(outer, -1.0, 1.0, tol=tol, breakpoints=kink_us, npts=12)

    if order == "smoothed":
        mean_psi = integrate(lambda z: psi(z) * f0.pdf(z), a, b, tol=tol, breakpoints=f_breaks + p_breaks)

        def outer_z(zs: np.ndarray) -> np.ndarray:
            return np.array(
                [
                    smooth_influence(psi, kernel, h, z, tol=tol, psi_breakpoints=p_breaks)
                    for z in np.atleast_1d(zs)
                ]
            ) * f0.pdf(np.atleast_1d(zs))

        smeared = [pb + s * h for pb in p_breaks for s in (-1.0, 1.0)]
        return (
            integrate(outer_z, a, b, tol=tol, breakpoints=f_breaks + smeared, npts=12)
            - mean_psi
        )

    raise InvalidArgumentError(f"unknown integration order {order!r}")


def _smooth_at_points(
    psi: Callable[[np.ndarray], np.ndarray], kernel: KernelSpec, h: float, points: np.ndarray, npts: int = 64
) -> np.ndarray:
    """Vectorized int psi(z_i + hu) K(u) du over many points (smooth psi)."""
    u, w = gauss_legendre(npts)
    ku = kernel.eval1d(u)
    vals = psi(points[:, None] + h * u[None, :])
    return vals @ (w * ku)


@dataclass
class StoEquicontinuityReport:
    """The kernel stochastic-equicontinuity term and its variance bound."""

    value: float
    root_n_value: float
    smoothing_msq: float
    n: int
    estimated: bool = False


def kernel_sto_equicontinuity(
    sample,
    psi: Callable[[np.ndarray], np.ndarray],
    kernel: KernelSpec,
    h: float,
    f0: TrueDensity | None = None,
    *,
    tol: float = 1e-9,
) -> StoEquicontinuityReport:
    """(1/n) sum_i { psi(z_i, h) - E[psi(z_i, h)] - psi(z_i) } plus the bound
    E[{psi(z, h) - psi(z)}^2].

    With f0 unknown the expectation is replaced by the kernel-bias estimate
    under the fitted density and the report is flagged as estimated.
    """
    z = np.asarray(sample, dtype=float).ravel()
    n = z.shape[0]
    estimated = False
    if f0 is None:
        from .kde import kde_fit

        est = kde_fit(z, bandwidth=h, kernel=kernel)
        support = est.support
        f0 = TrueDensity(
            lambda pts: est.density(pts), support, name="estimated-density",
            breakpoints=tuple(tuple(b) for b in est.breakpoints),
        )
        estimated = True
    a, b = f0.support[0]
    mean_psi_pop = integrate(lambda t: psi(t) * f0.pdf(t), a, b, tol=tol, breakpoints=f0.breakpoints[0])
    e_psi_h = kernel_bias(psi, f0, kernel, h, tol=tol) + mean_psi_pop
    psi_h = _smooth_at_points(psi, kernel, h, z)
    value = float(np.mean(psi_h) - e_psi_h - np.mean(psi(z)) + mean_psi_pop)

    def gap_sq(zs: np.ndarray) -> np.ndarray:
        zs = np.atleast_1d(zs)
        return (_smooth_at_points(psi, kernel, h, zs) - psi(zs)) ** 2 * f0.pdf(zs)

    msq = integrate(gap_sq, a, b, tol=max(tol, 1e-9), breakpoints=f0.breakpoints[0])
    return StoEquicontinuityReport(
        value=value, root_n_value=float(np.sqrt(n) * value), smoothing_msq=float(msq),
        n=n, estimated=estimated,
    )


# ---------------------------------------------------------------------------
# series-case bias decomposition
# ---------------------------------------------------------------------------


def _population_moments(
    basis: BasisSpec, f0, fns: Sequence[Callable[[np.ndarray], np.ndarray]]
) -> tuple[np.ndarray, list[np.ndarray]]:
    """E[p p'] and E[p g(x)] for each g, by quadrature against f0."""
    grid = box_grid(
        basis.support,
        axis_breakpoints=[list(b) for b in basis.axis_breakpoints],
        npts=12,
        splits=2,
    )
    p = basis.evaluate(grid.nodes)
    w = grid.weights * f0.pdf(grid.nodes)
    sigma = p.T @ (p * w[:, None])
    vecs = [p.T @ (w * np.asarray(g(grid.nodes), dtype=float)) for g in fns]
    return sigma, vecs


@dataclass
class SeriesBiasReport:
    """Stochastic and deterministic parts of the series plug-in bias."""

    stochastic: float
    deterministic: float
    deterministic_alt: float
    identity_defect: float
    n: int


def series_bias_decompose(
    delta: Callable[[np.ndarray], np.ndarray],
    d0: Callable[[np.ndarray], np.ndarray],
    basis: BasisSpec,
    f0,
    sample_x,
) -> SeriesBiasReport:
    """Split (1/n) sum_i delta_hat(x_i) d0(x_i) - beta0 per the population
    projections of d0 and delta on the basis.

    The deterministic part E[delta {p' gamma - d0}] is also computed as
    -E[{delta - gamma_delta' p}{d0 - p' gamma}] (they agree by population
    orthogonality of the projection residual); the defect between the two is
    reported.
    """
    x = np.asarray(sample_x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    sigma, (e_pd0, e_pdelta) = _population_moments(basis, f0, [d0, delta])
    scale = np.sqrt(np.maximum(np.diag(sigma), 1e-300))
    scaled = sigma / scale[:, None] / scale[None, :]
    min_eig = float(np.linalg.eigvalsh(scaled)[0])
    if min_eig < 1e-10:
        raise RankDeficiencyError(
            f"population moment matrix is numerically singular (min scaled eigenvalue {min_eig:.3e})",
            min_eigenvalue=min_eig,
        )
    gamma = np.linalg.solve(scaled, e_pd0 / scale) / scale
    gamma_delta = np.linalg.solve(scaled, e_pdelta / scale) / scale

    p_sample = basis.evaluate(x)
    sigma_hat = p_sample.T @ p_sample / n
    resid = np.asarray(d0(x), dtype=float) - p_sample @ gamma
    score = p_sample.T @ resid / n
    scale_hat = np.sqrt(np.maximum(np.diag(sigma_hat), 1e-300))
    scaled_hat = sigma_hat / scale_hat[:, None] / scale_hat[None, :]
    min_eig_hat = float(np.linalg.eigvalsh(scaled_hat)[0])
    if min_eig_hat < 1e-10:
        raise RankDeficiencyError(
            f"sample moment matrix is numerically singular (min scaled eigenvalue {min_eig_hat:.3e})",
            min_eigenvalue=min_eig_hat,
        )
    stochastic = float(e_pdelta @ (np.linalg.solve(scaled_hat, score / scale_hat) / scale_hat))

    grid = box_grid(
        basis.support,
        axis_breakpoints=[list(b) for b in basis.axis_breakpoints],
        npts=12,
        splits=2,
    )
    w = grid.weights * f0.pdf(grid.nodes)
    p_grid = basis.evaluate(grid.nodes)
    delta_grid = np.asarray(delta(grid.nodes), dtype=float)
    d0_grid = np.asarray(d0(grid.nodes), dtype=float)
    approx_d0 = p_grid @ gamma
    approx_delta = p_grid @ gamma_delta
    deterministic = float(np.dot(w, delta_grid * (approx_d0 - d0_grid)))
    deterministic_alt = float(-np.dot(w, (delta_grid - approx_delta) * (d0_grid - approx_d0)))
    return SeriesBiasReport(
        stochastic=stochastic,
        deterministic=deterministic,
        deterministic_alt=deterministic_alt,
        identity_defect=abs(deterministic - deterministic_alt),
        n=n,
    )


@dataclass
class SeriesStoReport:
    value: float
    root_n_value: float
    conditional_msq_bound: float
    n: int


def series_sto_equicontinuity(
    x,
    q,
    delta_hat: Callable[[np.ndarray], np.ndarray],
    delta: Callable[[np.ndarray], np.ndarray],
    d0: Callable[[np.ndarray], np.ndarray],
    var_q: Callable[[np.ndarray], np.ndarray] | float = 1.0,
) -> SeriesStoReport:
    """(1/n) sum_i [delta_hat(x_i) - delta(x_i)] [q_i - d0(x_i)] and its
    conditional second-moment bound n^{-2} sum_i [delta_hat - delta]^2 Var(q|x)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    q = np.asarray(q, dtype=float).ravel()
    n = x.shape[0]
    gap = np.asarray(delta_hat(x), dtype=float) - np.asarray(delta(x), dtype=float)
    value = float(np.mean(gap * (q - np.asarray(d0(x), dtype=float))))
    v = var_q(x) if callable(var_q) else np.full(n, float(var_q))
    bound = float(np.sum(gap**2 * np.asarray(v, dtype=float)) / n**2)
    return SeriesStoReport(
        value=value, root_n_value=float(np.sqrt(n) * value), conditional_msq_bound=bound, n=n
    )


# ---------------------------------------------------------------------------
# remainder decomposition (Theorem-2 split)
# ---------------------------------------------------------------------------


@dataclass
class RemainderReport:
    """R1/R2 split for one fitted representation, with root-n scalings."""

    r1: float
    r1_bias: float
    r1_sto: float
    r2: float
    zeta: float
    norm_value: float
    n: int
    kind: str
    expectation_basis: str  # "exact" under a known DGP, "estimated" otherwise

    @property
    def root_n_r1(self) -> float:
        return float(np.sqrt(self.n) * self.r1)

    @property
    def root_n_r2(self) -> float:
        return float(np.sqrt(self.n) * self.r2)

    def as_dict(self) -> dict:
        return {
            "r1": self.r1,
            "r1_bias": self.r1_bias,
            "r1_sto": self.r1_sto,
            "r2": self.r2,
            "zeta": self.zeta,
            "norm_value": self.norm_value,
            "root_n_r1": self.root_n_r1,
            "root_n_r2": self.root_n_r2,
            "n": self.n,
            "kind": self.kind,
            "expectation_basis": self.expectation_basis,
        }


def _density_remainder(
    functional: Functional, f_hat, sample, psi, f0, zeta: float
) -> RemainderReport:
    z = np.asarray(sample, dtype=float).ravel()
    n = z.shape[0]
    a, b = f_hat.support[0]
    psi_mean_hat = integrate(
        lambda t: psi(t) * f_hat.pdf(t), a, b, tol=1e-10, breakpoints=f_hat.breakpoints[0]
    )
    r1 = psi_mean_hat - float(np.mean(psi(z)))
    if isinstance(f_hat, KdeDensity):
        kind = "kernel"
        if f0 is not None:
            expectation_basis = "exact"
            r1_bias = kernel_bias(psi, f0, f_hat.estimate.kernel, f_hat.estimate.bandwidth)
        else:
            expectation_basis = "estimated"
            proxy = TrueDensity(
                lambda pts: f_hat.pdf(pts), f_hat.support,
                breakpoints=tuple(tuple(bk) for bk in f_hat.breakpoints), name="fitted-density",
            )
            r1_bias = kernel_bias(psi, proxy, f_hat.estimate.kernel, f_hat.estimate.bandwidth)
    else:
        # fixed representation: the expectation of R1 is int psi dF_hat itself
        kind = "fixed"
        expectation_basis = "exact"
        r1_bias = psi_mean_hat
    r1_sto = r1 - r1_bias

    if functional.is_linear:
        r2 = 0.0
        norm_value = 0.0
    elif f0 is not None:
        beta_hat = functional.value(f_hat)
        beta_0 = functional.value(f0)
        r2 = beta_hat - beta_0 - psi_mean_hat
        lo = min(a, f0.support[0][0])
        hi = max(b, f0.support[0][1])
        norm_value = float(
            np.sqrt(
                max(
                    integrate(
                        lambda t: (f_hat.pdf(t) - f0.pdf(t)) ** 2, lo, hi,
                        tol=1e-10,
                        breakpoints=list(f_hat.breakpoints[0]) + list(f0.breakpoints[0]),
                    ),
                    0.0,
                )
            )
        )
    else:
        r2 = float("nan")
        norm_value = float("nan")
    return RemainderReport(
        r1=float(r1), r1_bias=float(r1_bias), r1_sto=float(r1_sto), r2=float(r2),
        zeta=zeta, norm_value=norm_value, n=n, kind=kind, expectation_basis=expectation_basis,
    )


def _series_remainder(
    functional: SurplusBound, f_hat: CondMean, sample, psi, d0, zeta: float
) -> RemainderReport:
    if not isinstance(f_hat.mean, SeriesEstimate):
        raise UnsupportedRepresentationError(
            "series remainder decomposition needs a fitted SeriesEstimate conditional mean"
        )
    z = np.atleast_2d(np.asarray(sample, dtype=float))
    n = z.shape[0]
    q, x = z[:, 0], z[:, 1:]
    weight = functional.weight
    rep_hat = RieszRepresenter(f_hat.mean, weight)
    delta_hat = rep_hat(x)
    psi_sample = np.asarray(psi(z), dtype=float)
    expectation_basis = "exact" if d0 is not None else "estimated"
    d0_fn = d0 if d0 is not None else (lambda pts: f_hat.mean.predict(pts))
    grid = box_grid(
        weight.box,
        axis_breakpoints=[list(b) for b in f_hat.x_breakpoints],
        npts=12,
        splits=2,
    )
    beta0 = grid.integrate(weight(grid.nodes) * np.asarray(d0_fn(grid.nodes), dtype=float))
    r1 = float(np.mean(delta_hat * q) - beta0 - np.mean(psi_sample))
    r1_bias = float(np.mean(delta_hat * np.asarray(d0_fn(x), dtype=float)) - beta0)
    f0x = f_hat.marginal.pdf(x)
    if np.any(f0x <= 0):
        raise UnsupportedRepresentationError("marginal density must be positive at the sample points")
    delta_true = weight(x) / f0x
    r1_sto = float(np.mean((delta_hat - delta_true) * (q - np.asarray(d0_fn(x), dtype=float))))
    return RemainderReport(
        r1=r1, r1_bias=r1_bias, r1_sto=r1_sto, r2=0.0, zeta=zeta, norm_value=0.0,
        n=n, kind="series", expectation_basis=expectation_basis,
    )


def decompose_remainder(
    functional: Functional,
    f_hat,
    sample,
    psi: Callable[[np.ndarray], np.ndarray],
    *,
    f0: TrueDensity | None = None,
    d0: Callable[[np.ndarray], np.ndarray] | None = None,
    zeta: float = 2.0,
) -> RemainderReport:
    """Split sqrt(n)(beta_hat - beta0) - sum psi/sqrt(n) into R1 and R2 parts.

    For density representations (kernel case) the expectation part of R1 is
    the convolution bias, exact when the true f0 is supplied and estimated
    (and flagged) otherwise. For a fitted series conditional mean the split
    conditions on the design points; R2 is identically zero there, and it is
    identically zero for linear functionals.
    """
    if isinstance(f_hat, CondMean):
        if not isinstance(functional, SurplusBound):
            raise UnsupportedRepresentationError(
                "conditional-mean remainder decomposition is defined for the surplus functional"
            )
        return _series_remainder(functional, f_hat, sample, psi, d0, zeta)
    if not hasattr(f_hat, "pdf"):
        raise UnsupportedRepresentationError(
            f"unsupported representation {type(f_hat).__name__}"
        )
    return _density_remainder(functional, f_hat, sample, psi, f0, zeta)


# ---------------------------------------------------------------------------
# rate-condition checker (symbolic in exponents of n)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Seq:
    """A sequence c * n^a * (ln n)^b, tracked by (a, b)."""

    n_exp: float
    log_exp: float = 0.0

    def __mul__(self, other: "_Seq") -> "_Seq":
        return _Seq(self.n_exp + other.n_exp, self.log_exp + other.log_exp)

    def sqrt(self) -> "_Seq":
        return _Seq(self.n_exp / 2.0, self.log_exp / 2.0)

    def power(self, k: float) -> "_Seq":
        return _Seq(self.n_exp * k, self.log_exp * k)

    @property
    def key(self) -> tuple[float, float]:
        return (self.n_exp, self.log_exp)

    @property
    def limit(self) -> str:
        if self.n_exp < 0 or (self.n_exp == 0 and self.log_exp < 0):
            return "zero"
        if self.n_exp == 0 and self.log_exp == 0:
            return "bounded"
        return "infinity"


def _dominant(*terms: _Seq) -> _Seq:
    return max(terms, key=lambda t: t.key)


@dataclass(frozen=True)
class RateConfig:
    """Smoothness orders, dimension, and the h(n) or K(n) rule to check.

    family is "kernel", "power", or "spline". For the kernel case h = c *
    n^{-h_exponent}; for series cases K = c * n^{k_exponent}. s_delta = None
    selects the band-weight (surplus) variant, where the representer is not
    smooth and the bias condition is sqrt(n) c_K bounded rather than
    sqrt(n) c_K c_K^delta -> 0.
    """

    family: str
    r: int
    s_f: float | None = None
    s_psi: float | None = None
    h_exponent: float | None = None
    s_d: float | None = None
    s_delta: float | None = None
    spline_order: int | None = None
    k_exponent: float | None = None
    zeta: float = 2.0

    def __post_init__(self):
        if self.family not in ("kernel", "power", "spline"):
            raise InvalidArgumentError(f"unknown rate family {self.family!r}")
        if self.r < 1:
            raise InvalidArgumentError("dimension r must be >= 1")
        if self.family == "kernel":
            if None in (self.s_f, self.s_psi, self.h_exponent):
                raise InvalidArgumentError("kernel rate check needs s_f, s_psi, h_exponent")
            if self.h_exponent <= 0:
                raise InvalidArgumentError("h must shrink: h_exponent > 0")
        else:
            if self.s_d is None or self.k_exponent is None:
                raise InvalidArgumentError("series rate check needs s_d and k_exponent")
            if self.k_exponent <= 0:
                raise InvalidArgumentError("K must grow: k_exponent > 0")
            if self.family == "spline" and (self.spline_order is None or self.spline_order < 1):
                raise InvalidArgumentError("spline rate check needs spline_order >= 1")


@dataclass
class ConditionResult:
    name: str
    n_exponent: float
    log_exponent: float
    limit: str
    requirement: str
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "n_exponent": self.n_exponent,
            "log_exponent": self.log_exponent,
            "limit": self.limit,
            "requirement": self.requirement,
            "passed": self.passed,
        }


@dataclass
class RateReport:
    conditions: list[ConditionResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "conditions": [c.as_dict() for c in self.conditions]}


def _condition(name: str, seq: _Seq, requirement: str) -> ConditionResult:
    limit = seq.limit
    if requirement == "zero":
        passed = limit == "zero"
    elif requirement == "bounded":
        passed = limit in ("zero", "bounded")
    else:
        raise InvalidArgumentError(f"unknown requirement {requirement!r}")
    return ConditionResult(
        name=name, n_exponent=seq.n_exp, log_exponent=seq.log_exp,
        limit=limit, requirement=requirement, passed=passed,
    )


def rate_check(config: RateConfig) -> RateReport:
    """Evaluate the displayed sufficiency conditions for the configured rule."""
    root_n = _Seq(0.5)
    if config.family == "kernel":
        h = _Seq(-config.h_exponent)
        seq = root_n * h.power(config.s_f + config.s_psi)
        return RateReport([
            _condition("sqrt(n) h^(s_f + s_psi) -> 0", seq, "zero"),
        ])

    k = _Seq(config.k_exponent)
    log_k = _Seq(0.0, 1.0)  # ln K grows like ln n for polynomial rules
    one = _Seq(0.0)
    conditions: list[ConditionResult] = []
    if config.family == "power":
        approx = k.power(-config.s_d / config.r)
        base = (k.power(2.0) * log_k * _Seq(-1.0)).sqrt()
        c1 = base * _dominant(one, k.power(1.5) * approx)
        conditions.append(
            _condition("sqrt(K^2 ln K / n) (1 + K^{3/2} K^{-s_d/r}) -> 0", c1, "zero")
        )
        conditions.append(
            _condition("K^{1 - s_d/r} -> 0", k.power(1.0 - config.s_d / config.r), "zero")
        )
        if config.s_delta is not None:
            c3 = root_n * k.power(-(config.s_d + config.s_delta) / config.r)
            conditions.append(_condition("sqrt(n) K^{-(s_d+s_delta)/r} -> 0", c3, "zero"))
        else:
            c3 = root_n * approx
            conditions.append(_condition("sqrt(n) K^{-s_d/r} bounded", c3, "bounded"))
        return RateReport(conditions)

    # splines of order o
    eff_d = min(config.s_d, float(config.spline_order))
    approx = k.power(-eff_d / config.r)
    base = (k * log_k * _Seq(-1.0)).sqrt()
    c1 = base * _dominant(one, k.power(0.5) * approx)
    conditions.append(
        _condition("sqrt(K ln K / n) (1 + sqrt(K) K^{-min(s_d,o)/r}) -> 0", c1, "zero")
    )
    if config.s_delta is not None:
        eff_delta = min(config.s_delta, float(config.spline_order))
        c2 = root_n * k.power(-(eff_d + eff_delta) / config.r)
        conditions.append(
            _condition("sqrt(n) K^{-(min(s_d,o)+min(s_delta,o))/r} -> 0", c2, "zero")
        )
    else:
        c2 = root_n * approx
        conditions.append(_condition("sqrt(n) K^{-min(s_d,o)/r} bounded", c2, "bounded"))
    return RateReport(conditions)
