"""Semiparametric GMM: quadratic-form minimization over moment models that may
depend on a nonparametric estimate, the sandwich influence function, the
moment-level stochastic-equicontinuity diagnostic, and the mean single-index
example with its leave-one-out kernel regression criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .distributions import TrueDensity
from .exceptions import (
    InvalidArgumentError,
    NumericFailureError,
    RankDeficiencyError,
    UnsupportedRepresentationError,
)
from .kernels import KernelSpec, make_kernel
from .quadrature import box_grid


@dataclass(frozen=True)
class MomentModel:
    """Moment vector m(z, beta, F) with E[m(z, beta0, F0)] = 0 at the truth.

    correction_phi is the influence function of mu(F) = E[m(z, beta0, F)];
    it is the correction term for nonparametric estimation of F and can be
    supplied in closed form or computed from the Gateaux engine applied to
    mu. mu evaluates E[m(z, beta, F)] under the true data distribution for a
    supplied representation F (available in test DGPs only).
    """

    id: str
    moment: Callable[[np.ndarray, np.ndarray, object], np.ndarray]
    dim_beta: int
    dim_moment: int
    uses_rep: bool = False
    correction_phi: Callable[[np.ndarray], np.ndarray] | None = None
    mu: Callable[[object, np.ndarray], np.ndarray] | None = None

    def moments(self, z: np.ndarray, beta: np.ndarray, rep=None) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        out = np.asarray(self.moment(z, beta, rep), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (z.shape[0], self.dim_moment):
            raise InvalidArgumentError(
                f"moment function returned shape {out.shape}, expected ({z.shape[0]}, {self.dim_moment})"
            )
        return out


@dataclass
class GmmEstimate:
    """Minimizer of the quadratic form plus the ingredients of Theorem-style
    sandwich inference."""

    beta_hat: np.ndarray
    w_hat: np.ndarray
    m_hat: np.ndarray
    m_jacobian: np.ndarray
    foc_norm: float
    n: int
    warnings: list[str] = field(default_factory=list)


def _jacobian(model: MomentModel, z: np.ndarray, beta: np.ndarray, rep) -> np.ndarray:
    """Central finite differences of the mean moment, step 1e-4 x scale."""
    p = beta.shape[0]
    jac = np.empty((model.dim_moment, p))
    for k in range(p):
        step = 1e-4 * max(1.0, abs(float(beta[k])))
        up, dn = beta.copy(), beta.copy()
        up[k] += step
        dn[k] -= step
        jac[:, k] = (
            model.moments(z, up, rep).mean(axis=0) - model.moments(z, dn, rep).mean(axis=0)
        ) / (2 * step)
    return jac


def gmm_fit(
    model: MomentModel,
    sample,
    rep=None,
    weighting: np.ndarray | None = None,
    *,
    box: Sequence[tuple[float, float]] | None = None,
    n_starts: int = 5,
    seed: int = 0,
) -> GmmEstimate:
    """Minimize mbar(beta)' W mbar(beta) over a box by multi-start Nelder-Mead.

    The criterion with a nonparametric plug-in can be noisy at small n, so
    several direct-search starts are used and the best kept. A solution within
    0.1% of the box edge triggers a boundary warning; a singular M'WM raises.
    """
    z = np.atleast_2d(np.asarray(sample, dtype=float))
    n = z.shape[0]
    p = model.dim_beta
    if box is None:
        box = [(-10.0, 10.0)] * p
    box = [(float(a), float(b)) for a, b in box]
    if len(box) != p:
        raise InvalidArgumentError(f"box has {len(box)} intervals for {p} parameters")
    w = np.eye(model.dim_moment) if weighting is None else np.asarray(weighting, dtype=float)
    eigs = np.linalg.eigvalsh((w + w.T) / 2)
    if eigs[0] < -1e-10:
        raise InvalidArgumentError("weighting matrix must be positive semidefinite")

    def objective(beta):
        mbar = model.moments(z, beta, rep).mean(axis=0)
        return float(mbar @ w @ mbar)

    rng = np.random.default_rng(seed)
    center = np.array([(a + b) / 2 for a, b in box])
    starts = [center] + [
        np.array([rng.uniform(a, b) for a, b in box]) for _ in range(max(0, n_starts - 1))
    ]
    best = None
    for start in starts:
        res = optimize.minimize(
            objective, start, method="Nelder-Mead",
            bounds=box, options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 4000},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise NumericFailureError("GMM minimization failed to produce a finite solution")
    beta_hat = np.asarray(best.x, dtype=float)
    warnings = []
    for k, (a, b) in enumerate(box):
        if min(beta_hat[k] - a, b - beta_hat[k]) < 1e-3 * (b - a):
            warnings.append(
                f"boundary solution: beta[{k}] = {beta_hat[k]:.6g} sits on the box [{a}, {b}]"
            )
    m_hat = model.moments(z, beta_hat, rep).mean(axis=0)
    jac = _jacobian(model, z, beta_hat, rep)
    foc = jac.T @ w @ m_hat
    return GmmEstimate(
        beta_hat=beta_hat, w_hat=w, m_hat=m_hat, m_jacobian=jac,
        foc_norm=float(np.linalg.norm(foc)), n=n, warnings=warnings,
    )


def _sandwich_map(m_jacobian: np.ndarray, w: np.ndarray) -> np.ndarray:
    mtwm = m_jacobian.T @ w @ m_jacobian
    cond = np.linalg.cond(mtwm)
    if not np.isfinite(cond) or cond > 1e12:
        raise RankDeficiencyError(f"M'WM is numerically singular (cond {cond:.3e})")
    return -np.linalg.solve(mtwm, m_jacobian.T @ w)


def gmm_influence(
    est: GmmEstimate,
    model: MomentModel,
    z,
    rep0=None,
    *,
    beta0: np.ndarray | None = None,
    phi: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """psi(z) = -(M'WM)^{-1} M'W [m(z, beta0, F0) + phi(z)], shape (n, p).

    phi defaults to the model's correction term (zero when the moments do not
    involve F). beta0 defaults to the fitted value.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    beta = est.beta_hat if beta0 is None else np.atleast_1d(np.asarray(beta0, dtype=float))
    core = model.moments(z, beta, rep0)
    phi_fn = phi if phi is not None else model.correction_phi
    if phi_fn is not None:
        phi_vals = np.asarray(phi_fn(z), dtype=float)
        if phi_vals.ndim == 1:
            phi_vals = phi_vals[:, None]
        core = core + phi_vals
    a_map = _sandwich_map(est.m_jacobian, est.w_hat)
    return core @ a_map.T


def sandwich_variance(psi: np.ndarray) -> np.ndarray:
    """V_hat = (1/n) sum psi psi', the second-moment sandwich estimate."""
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    if psi.shape[0] < psi.shape[1]:
        psi = psi.T
    return psi.T @ psi / psi.shape[0]


@dataclass
class R3Report:
    value: np.ndarray
    root_n_value: np.ndarray
    n: int


def r3_diagnostic(model: MomentModel, sample, rep_hat, rep0, beta0) -> R3Report:
    """R3(F_hat) = (1/n) sum { m(z_i, b0, F_hat) - m(z_i, b0, F0) - mu(F_hat) }.

    Requires a test DGP: mu must be evaluable under the true distribution.
    Moments that do not involve F give exactly zero.
    """
    z = np.atleast_2d(np.asarray(sample, dtype=float))
    beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))
    n = z.shape[0]
    if not model.uses_rep:
        value = np.zeros(model.dim_moment)
        return R3Report(value=value, root_n_value=value.copy(), n=n)
    if model.mu is None:
        raise UnsupportedRepresentationError(
            "r3 diagnostic needs the model's mu(F) evaluable under the test DGP"
        )
    gap = model.moments(z, beta0, rep_hat) - model.moments(z, beta0, rep0)
    mu_hat = np.atleast_1d(np.asarray(model.mu(rep_hat, beta0), dtype=float))
    value = gap.mean(axis=0) - mu_hat
    return R3Report(value=value, root_n_value=np.sqrt(n) * value, n=n)


# ---------------------------------------------------------------------------
# moment-model factories
# ---------------------------------------------------------------------------


def make_mean_model() -> MomentModel:
    """Just-identified method of moments for a scalar mean: m = z - beta."""

    def moment(z, beta, rep):
        return z[:, 0] - beta[0]

    return MomentModel(id="mean", moment=moment, dim_beta=1, dim_moment=1)


def make_mean_variance_model() -> MomentModel:
    """Overidentified example for an N(beta, 1) location: (z - b, z^2 - b^2 - 1)."""

    def moment(z, beta, rep):
        b = beta[0]
        return np.column_stack([z[:, 0] - b, z[:, 0] ** 2 - b * b - 1.0])

    return MomentModel(id="mean_variance", moment=moment, dim_beta=1, dim_moment=2)


def make_surplus_gmm_model(functional, correction_phi=None) -> MomentModel:
    """Surplus bound as just-identified GMM: m(z, beta, F) = beta(F) - beta.

    The moment has no direct z dependence; its correction term is the surplus
    influence function, supplied in closed form or via the Gateaux engine.
    """

    def moment(z, beta, rep):
        if rep is None:
            raise UnsupportedRepresentationError("surplus moment needs a conditional-mean representation")
        return np.full(z.shape[0], functional.value(rep) - beta[0])

    def mu(rep, beta0):
        return np.array([functional.value(rep) - beta0[0]])

    return MomentModel(
        id="surplus_gmm", moment=moment, dim_beta=1, dim_moment=1,
        uses_rep=True, correction_phi=correction_phi, mu=mu,
    )


# ---------------------------------------------------------------------------
# kernel regression on a scalar index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexRegression:
    """Nadaraya-Watson regression of targets on a scalar index, with the
    analytic derivative of the fitted function."""

    index: np.ndarray
    targets: np.ndarray
    bandwidth: float
    kernel: KernelSpec

    def _weights(self, v_eval: np.ndarray) -> np.ndarray:
        u = (np.asarray(v_eval, dtype=float)[:, None] - self.index[None, :]) / self.bandwidth
        return self.kernel.eval1d(u)

    def __call__(self, v_eval) -> np.ndarray:
        w = self._weights(np.atleast_1d(v_eval))
        denom = w.sum(axis=1)
        numer = w @ self.targets
        return np.where(denom > 0, numer / np.where(denom > 0, denom, 1.0), 0.0)

    def deriv(self, v_eval) -> np.ndarray:
        v_eval = np.atleast_1d(np.asarray(v_eval, dtype=float))
        h = self.bandwidth
        u = (v_eval[:, None] - self.index[None, :]) / h
        w = self.kernel.eval1d(u)
        dw = _kernel_deriv(self.kernel, u) / h
        denom = w.sum(axis=1)
        numer = w @ self.targets
        dnum = dw @ self.targets
        dden = dw.sum(axis=1)
        safe = denom > 0
        out = np.zeros_like(denom)
        out[safe] = (dnum[safe] * denom[safe] - numer[safe] * dden[safe]) / denom[safe] ** 2
        return out


def _kernel_deriv(kernel: KernelSpec, u: np.ndarray) -> np.ndarray:
    """d/du of the 1-d polynomial kernel, zero outside the support."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) <= 1.0
    ui = u[inside]
    acc = np.zeros_like(ui)
    for j in range(len(kernel.coeffs) - 1, 0, -1):
        acc = acc * (ui * ui) + 2 * j * kernel.coeffs[j]
    out[inside] = acc * ui
    return out


def _loo_nw(v: np.ndarray, y: np.ndarray, h: float, kernel: KernelSpec):
    """Leave-one-out NW fitted values and index-density estimates at the data."""
    u = (v[:, None] - v[None, :]) / h
    w = kernel.eval1d(u)
    np.fill_diagonal(w, 0.0)
    denom = w.sum(axis=1)
    fitted = np.where(denom > 0, (w @ y) / np.where(denom > 0, denom, 1.0), 0.0)
    n = v.shape[0]
    dens = denom / ((n - 1) * h)
    return fitted, dens, denom > 0


@dataclass
class SingleIndexFit:
    """theta_hat = (1, beta_hat'), criterion diagnostics, and the bandwidth."""

    beta_hat: np.ndarray
    criterion: float
    bandwidth: float
    trim_mask: np.ndarray
    warnings: list[str] = field(default_factory=list)

    @property
    def theta_hat(self) -> np.ndarray:
        return np.concatenate([[1.0], self.beta_hat])


def _index_bandwidth(v: np.ndarray, h_factor: float) -> float:
    n = v.shape[0]
    sd = float(np.std(v, ddof=1))
    return max(h_factor * sd * n ** (-1 / 5), 1e-8)


def single_index_criterion(
    beta: np.ndarray, y: np.ndarray, x: np.ndarray, *,
    h_factor: float = 1.0, trim_quantile: float = 0.01, kernel: KernelSpec | None = None,
) -> tuple[float, float, np.ndarray]:
    """Trimmed leave-one-out least squares for the index (1, beta')' x."""
    kernel = kernel or make_kernel(2, 1)
    theta = np.concatenate([[1.0], np.atleast_1d(beta)])
    v = x @ theta
    h = _index_bandwidth(v, h_factor)
    fitted, dens, valid = _loo_nw(v, y, h, kernel)
    cutoff = np.quantile(dens, trim_quantile)
    trim = (dens >= cutoff) & valid
    crit = float(np.sum(trim * (y - fitted) ** 2) / y.shape[0])
    return crit, h, trim


def single_index_fit(
    y,
    x,
    *,
    beta_box: Sequence[tuple[float, float]] | None = None,
    h_factor: float = 1.0,
    trim_quantile: float = 0.01,
    kernel: KernelSpec | None = None,
    rounds: int = 4,
    grid_points: int = 21,
    seed: int = 0,
) -> SingleIndexFit:
    """Fit the mean single-index model by nested grid search with refinement.

    The first regressor's coefficient is normalized to one; the remaining
    coefficients are found by minimizing the trimmed leave-one-out criterion.
    Scalar beta uses grid zooming; higher dimensions fall back to multi-start
    direct search over the box.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] < 2:
        raise InvalidArgumentError("single-index model needs at least two regressors")
    p = x.shape[1] - 1
    if beta_box is None:
        beta_box = [(-4.0, 4.0)] * p
    kernel = kernel or make_kernel(2, 1)

    def crit(beta_vec):
        return single_index_criterion(
            np.atleast_1d(beta_vec), y, x,
            h_factor=h_factor, trim_quantile=trim_quantile, kernel=kernel,
        )[0]

    warnings: list[str] = []
    if p == 1:
        lo, hi = beta_box[0]
        first_spread = None
        for _ in range(max(rounds, 1)):
            grid = np.linspace(lo, hi, grid_points)
            values = np.array([crit(b) for b in grid])
            if first_spread is None:
                first_spread = float(values.max() - values.min())
            k = int(np.argmin(values))
            step = grid[1] - grid[0]
            lo = max(beta_box[0][0], grid[k] - 2 * step)
            hi = min(beta_box[0][1], grid[k] + 2 * step)
        beta_hat = np.array([grid[k]])
        if first_spread < 1e-12 * max(1.0, float(values.max())):
            warnings.append("flat criterion: index direction not identified in this sample")
    else:
        rng = np.random.default_rng(seed)
        best = None
        starts = [np.array([(a + b) / 2 for a, b in beta_box])] + [
            np.array([rng.uniform(a, b) for a, b in beta_box]) for _ in range(4)
        ]
        for start in starts:
            res = optimize.minimize(
                crit, start, method="Nelder-Mead", bounds=beta_box,
                options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000},
            )
            if best is None or res.fun < best.fun:
                best = res
        beta_hat = np.asarray(best.x, dtype=float)
    value, h, trim = single_index_criterion(
        beta_hat, y, x, h_factor=h_factor, trim_quantile=trim_quantile, kernel=kernel
    )
    return SingleIndexFit(
        beta_hat=beta_hat, criterion=value, bandwidth=h, trim_mask=trim, warnings=warnings
    )


@dataclass
class FocReport:
    """Sample first-order condition at a candidate index coefficient."""

    residual: np.ndarray
    band: np.ndarray
    n: int

    @property
    def within_band(self) -> bool:
        return bool(np.all(np.abs(self.residual) <= self.band))


def single_index_foc_check(
    y, x, beta, *, h_factor: float = 1.0, trim_quantile: float = 0.01,
    kernel: KernelSpec | None = None,
) -> FocReport:
    """Sample analog of E{phi'(v)[x~ - E(x~|v)][y - E(y|v)]} at theta = (1, beta').

    The residual is compared against a 3 sd / sqrt(n) band per coordinate.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    kernel = kernel or make_kernel(2, 1)
    theta = np.concatenate([[1.0], np.atleast_1d(np.asarray(beta, dtype=float))])
    v = x @ theta
    n = v.shape[0]
    h = _index_bandwidth(v, h_factor)
    reg_y = IndexRegression(index=v, targets=y, bandwidth=h, kernel=kernel)
    fitted = reg_y(v)
    slope = reg_y.deriv(v)
    _, dens, valid = _loo_nw(v, y, h, kernel)
    trim = (dens >= np.quantile(dens, trim_quantile)) & valid
    resid = np.empty(x.shape[1] - 1)
    band = np.empty(x.shape[1] - 1)
    for c in range(1, x.shape[1]):
        reg_x = IndexRegression(index=v, targets=x[:, c], bandwidth=h, kernel=kernel)
        summand = trim * slope * (x[:, c] - reg_x(v)) * (y - fitted)
        resid[c - 1] = float(np.mean(summand))
        band[c - 1] = 3.0 * float(np.std(summand, ddof=1)) / np.sqrt(n)
    return FocReport(residual=resid, band=band, n=n)


def make_single_index_model(
    link: Callable[[np.ndarray], np.ndarray] | None = None,
    x_density: TrueDensity | None = None,
    n_regressors: int = 2,
) -> MomentModel:
    """Mean single-index moments m = d/dbeta [y - E_F(y | x' theta)]^2.

    The representation F is an IndexRegression fitted at the true index. When
    the true link and the x density are supplied (test DGPs), mu(F) integrates
    the conditional expectation of the moments over x by quadrature.
    """

    def moment(z, beta, rep: IndexRegression):
        if rep is None:
            raise UnsupportedRepresentationError("single-index moment needs a fitted IndexRegression")
        y, x = z[:, 0], z[:, 1:]
        theta = np.concatenate([[1.0], beta])
        v = x @ theta
        resid = y - rep(v)
        slope = rep.deriv(v)
        return -2.0 * resid[:, None] * slope[:, None] * x[:, 1:]

    mu = None
    if link is not None and x_density is not None:

        def mu(rep: IndexRegression, beta0):
            theta = np.concatenate([[1.0], np.atleast_1d(beta0)])
            grid = box_grid(x_density.support, axis_breakpoints=x_density.breakpoints, npts=12, splits=4)
            v = grid.nodes @ theta
            gap = link(v) - rep(v)
            slope = rep.deriv(v)
            w = grid.weights * x_density.pdf(grid.nodes)
            return np.array([
                float(np.dot(w, -2.0 * gap * slope * grid.nodes[:, c]))
                for c in range(1, grid.nodes.shape[1])
            ])

    return MomentModel(
        id="single_index", moment=moment,
        dim_beta=n_regressors - 1, dim_moment=n_regressors - 1,
        uses_rep=True, mu=mu,
    )
