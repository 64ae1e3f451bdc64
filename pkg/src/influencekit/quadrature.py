"""Adaptive Gauss-Legendre quadrature on panels, in one dimension and on boxes.

All integrands in this package are piecewise smooth with *known* kink
locations (kernel support edges, weight-band boundaries, spline knots), so the
panel decomposition is seeded with those breakpoints and refined by bisection
until a two-level Gauss-Legendre error estimate meets the tolerance.

The panel set is exposed separately from the integral value: path evaluations
in the Gateaux engine must evaluate a whole family of integrands on one shared
node set so that finite differences across the family cancel quadrature error
exactly. `Grid1D` / `GridND` capture a frozen node/weight set for that use.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, QuadratureError

DEFAULT_TOL = 1e-8
MOMENT_TOL = 1e-10


@lru_cache(maxsize=64)
def gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the npts-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def panel_nodes(panels: np.ndarray, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened nodes and weights for a GL rule applied to each panel.

    panels has shape (m, 2) with panels[:, 0] < panels[:, 1].
    """
    x, w = gauss_legendre(npts)
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _initial_edges(a: float, b: float, breakpoints: Iterable[float]) -> np.ndarray:
    pts = [a, b]
    for p in breakpoints:
        if a < p < b:
            pts.append(float(p))
    edges = np.unique(np.asarray(pts, dtype=float))
    # drop zero-width panels caused by duplicated breakpoints
    keep = np.concatenate([[True], np.diff(edges) > 1e-14 * max(1.0, abs(b - a))])
    return edges[keep]


def adaptive_panels(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = DEFAULT_TOL,
    breakpoints: Iterable[float] = (),
    npts: int = 10,
    max_panels: int = 20000,
) -> np.ndarray:
    """Panel decomposition of [a, b] adapted to f, as an (m, 2) array.

    A panel is accepted when |GL(panel) - GL(left half) - GL(right half)| is
    below its length-proportional share of tol. f must accept a 1-d array.
    """
    if not b > a:
        raise InvalidArgumentError(f"empty integration interval [{a}, {b}]")
    edges = _initial_edges(a, b, breakpoints)
    stack = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    accepted: list[tuple[float, float]] = []
    length = b - a
    while stack:
        lo, hi = stack.pop()
        mid = 0.5 * (lo + hi)
        panels = np.array([[lo, hi], [lo, mid], [mid, hi]])
        nodes, weights = panel_nodes(panels, npts)
        vals = np.asarray(f(nodes), dtype=float) * weights
        per_panel = vals.reshape(3, npts).sum(axis=1)
        err = abs(per_panel[0] - per_panel[1] - per_panel[2])
        share = tol * max((hi - lo) / length, 1e-3)
        if err <= share or (hi - lo) < 1e-13 * length:
            accepted.append((lo, hi))
        else:
            if len(accepted) + len(stack) + 2 > max_panels:
                raise QuadratureError(
                    f"adaptive quadrature exceeded {max_panels} panels on "
                    f"[{a}, {b}] (last error {err:.3e} vs share {share:.3e})"
                )
            stack.append((lo, mid))
            stack.append((mid, hi))
    accepted.sort()
    return np.asarray(accepted, dtype=float)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = DEFAULT_TOL,
    breakpoints: Iterable[float] = (),
    npts: int = 10,
) -> float:
    """Adaptive integral of a vectorized scalar function over [a, b]."""
    panels = adaptive_panels(f, a, b, tol=tol, breakpoints=breakpoints, npts=npts)
    nodes, weights = panel_nodes(panels, 2 * npts)
    return float(np.dot(np.asarray(f(nodes), dtype=float), weights))


@dataclass(frozen=True)
class Grid1D:
    """Frozen 1-d quadrature grid: shared nodes for families of integrands."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.weights))


def grid_from_panels(panels: np.ndarray, npts: int = 16) -> Grid1D:
    nodes, weights = panel_nodes(panels, npts)
    return Grid1D(nodes, weights)


def union_panels(*panel_sets: np.ndarray) -> np.ndarray:
    """Common refinement of panel partitions of the same interval."""
    edges = np.unique(np.concatenate([p.ravel() for p in panel_sets]))
    keep = np.concatenate([[True], np.diff(edges) > 1e-14 * max(1.0, edges[-1] - edges[0])])
    edges = edges[keep]
    return np.column_stack([edges[:-1], edges[1:]])


# ---------------------------------------------------------------------------
# Tensor-product boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridND:
    """Frozen tensor-product grid on a box; nodes has shape (N, r)."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.weights))


def _axis_edges(bounds, axis_breakpoints, splits: int) -> list[np.ndarray]:
    all_edges = []
    for c, (lo, hi) in enumerate(bounds):
        if not hi > lo:
            raise InvalidArgumentError(f"empty box along axis {c}: [{lo}, {hi}]")
        breaks = () if axis_breakpoints is None else axis_breakpoints[c]
        edges = _initial_edges(lo, hi, breaks)
        if splits > 1:
            refined = [
                np.linspace(edges[i], edges[i + 1], splits + 1)
                for i in range(len(edges) - 1)
            ]
            edges = np.unique(np.concatenate(refined))
        all_edges.append(edges)
    return all_edges


def box_grid(
    bounds: Sequence[tuple[float, float]],
    *,
    axis_breakpoints: Sequence[Iterable[float]] | None = None,
    npts: int = 10,
    splits: int = 1,
) -> GridND:
    """Tensor GL grid on a box, with per-axis panels split at breakpoints."""
    all_nodes = []
    all_weights = []
    for edges in _axis_edges(bounds, axis_breakpoints, splits):
        panels = np.column_stack([edges[:-1], edges[1:]])
        nodes, weights = panel_nodes(panels, npts)
        all_nodes.append(nodes)
        all_weights.append(weights)
    mesh = np.meshgrid(*all_nodes, indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    wmesh = np.meshgrid(*all_weights, indexing="ij")
    weights = np.ones(nodes.shape[0])
    for wm in wmesh:
        weights = weights * wm.ravel()
    return GridND(nodes, weights)


def integrate_box(
    f: Callable[[np.ndarray], np.ndarray],
    bounds: Sequence[tuple[float, float]],
    *,
    tol: float = DEFAULT_TOL,
    axis_breakpoints: Sequence[Iterable[float]] | None = None,
    npts: int = 8,
    max_rounds: int = 6,
) -> float:
    """Integral of f over a box; f takes an (N, r) array of points.

    Panels follow the declared per-axis breakpoints; each round doubles the
    per-axis panel count until two successive values agree within tol.
    """
    previous = None
    delta = np.inf
    splits = 1
    for _ in range(max_rounds):
        grid = box_grid(bounds, axis_breakpoints=axis_breakpoints, npts=npts, splits=splits)
        value = grid.integrate(f(grid.nodes))
        if previous is not None:
            delta = abs(value - previous)
            if delta <= tol:
                return value
        previous = value
        splits *= 2
    raise QuadratureError(
        f"box quadrature did not converge in {max_rounds} rounds (last delta "
        f"{delta:.3e} vs tol {tol:.1e})"
    )


def converged_box_grid(
    f: Callable[[np.ndarray], np.ndarray],
    bounds: Sequence[tuple[float, float]],
    *,
    tol: float = DEFAULT_TOL,
    axis_breakpoints: Sequence[Iterable[float]] | None = None,
    npts: int = 8,
    max_rounds: int = 6,
) -> GridND:
    """Like integrate_box, but returns the grid that achieved convergence.

    Used to freeze one node set for a whole family of related integrands.
    """
    previous = None
    splits = 1
    grid = box_grid(bounds, axis_breakpoints=axis_breakpoints, npts=npts, splits=splits)
    for _ in range(max_rounds):
        value = grid.integrate(f(grid.nodes))
        if previous is not None and abs(value - previous) <= tol:
            return grid
        previous = value
        splits *= 2
        grid = box_grid(bounds, axis_breakpoints=axis_breakpoints, npts=npts, splits=splits)
    raise QuadratureError(
        f"box quadrature did not converge in {max_rounds} rounds (tol {tol:.1e})"
    )
