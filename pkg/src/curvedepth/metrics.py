"""Pluggable (pseudo-)distances on curves and on 4D fields.

Four kinds are provided: plain Euclidean distance on sampled values
(``grid_l2_unweighted``, the default), the cell-width weighted Riemann
variant, the sup distance, and an intensity-based pseudo-distance that
compares the mean value over the nonzero support and therefore accepts
arguments living on different grids or domains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptySetError, GridMismatchError
from .fdata import Curve, CurveSet, Grid

GRID_L2 = "grid_l2_unweighted"
GRID_L2_RIEMANN = "grid_l2_riemann"
GRID_SUP = "grid_sup"
HYPERBOLIC = "hyperbolic"

_KINDS = (GRID_L2, GRID_L2_RIEMANN, GRID_SUP, HYPERBOLIC)

# CLI spellings -> kind names
KIND_ALIASES = {
    "l2": GRID_L2,
    "l2riemann": GRID_L2_RIEMANN,
    "sup": GRID_SUP,
    "hyperbolic": HYPERBOLIC,
}


@dataclass(frozen=True)
class MetricDescriptor:
    """Named distance; grid_* kinds require both arguments on one grid."""

    kind: str

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        if kind not in _KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "kind", kind)


L2 = MetricDescriptor(GRID_L2)
L2_RIEMANN = MetricDescriptor(GRID_L2_RIEMANN)
SUP = MetricDescriptor(GRID_SUP)
HYPER = MetricDescriptor(HYPERBOLIC)


@dataclass(frozen=True)
class IntensitySummary:
    """Discrete integral, measure of the nonzero support, and their ratio."""

    integral: float
    support_measure: float
    i_value: float


def intensity(x) -> IntensitySummary:
    """Mean value of a curve or 4D field over its nonzero support.

    The integral uses midpoint cell widths on the grid (unit voxels times the
    time cell width for 4D fields); support detection is exact ``value != 0``.
    An identically zero input has intensity 0 by convention.
    """
    if isinstance(x, Curve):
        vals = x.values
        measure = x.grid.cell_widths()
    elif hasattr(x, "time_grid") and hasattr(x, "values"):
        vals = np.asarray(x.values, dtype=np.float64)
        measure = np.broadcast_to(x.time_grid.cell_widths(), vals.shape)
    else:
        raise TypeError(f"cannot compute intensity of {type(x).__name__}")
    nz = vals != 0.0
    integral = float(np.sum(vals * measure))
    support = float(np.sum(measure, where=nz)) if np.any(nz) else 0.0
    i_value = integral / support if support > 0 else 0.0
    return IntensitySummary(integral=integral, support_measure=support, i_value=i_value)


def _require_same_grid(a: Curve, b: Curve) -> None:
    if not isinstance(a, Curve) or not isinstance(b, Curve):
        raise GridMismatchError("grid metrics require Curve arguments")
    if a.grid != b.grid:
        raise GridMismatchError("arguments live on different grids")


def distance(metric: MetricDescriptor, a, b) -> float:
    """Distance between two curves (or fields, for the hyperbolic kind)."""
    kind = metric.kind
    if kind == HYPERBOLIC:
        return abs(intensity(a).i_value - intensity(b).i_value)
    _require_same_grid(a, b)
    diff = a.values - b.values
    if kind == GRID_L2:
        return float(np.sqrt(np.sum(diff * diff)))
    if kind == GRID_L2_RIEMANN:
        w = a.grid.cell_widths()
        return float(np.sqrt(np.sum(w * diff * diff)))
    return float(np.max(np.abs(diff)))


def pairwise(metric: MetricDescriptor, grid: Grid, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Distance matrix between row blocks of curves on a common grid.

    Every entry is computed independently (no shared accumulators), so the
    result is bit-identical regardless of how callers split the rows.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = a if b is None else np.atleast_2d(np.asarray(b, dtype=np.float64))
    kind = metric.kind
    if kind == HYPERBOLIC:
        w = grid.cell_widths()
        ia = _row_intensities(a, w)
        ib = ia if b is a else _row_intensities(b, w)
        return np.abs(ia[:, None] - ib[None, :])
    if a.shape[1] != len(grid) or b.shape[1] != len(grid):
        raise GridMismatchError("row width does not match the grid")
    if kind == GRID_L2:
        return cdist(a, b, "euclidean")
    if kind == GRID_L2_RIEMANN:
        sw = np.sqrt(grid.cell_widths())
        return cdist(a * sw, b * sw, "euclidean")
    return cdist(a, b, "chebyshev")


def _row_intensities(rows: np.ndarray, widths: np.ndarray) -> np.ndarray:
    integrals = rows @ widths
    support = (rows != 0.0) @ widths
    out = np.zeros(rows.shape[0])
    np.divide(integrals, support, out=out, where=support > 0)
    return out


def _as_value_matrix(curves, metric: MetricDescriptor) -> tuple[np.ndarray, Grid]:
    if isinstance(curves, CurveSet):
        return curves.curves, curves.grid
    curves = list(curves)
    if not curves:
        raise EmptySetError("empty curve list")
    grid = curves[0].grid
    for c in curves[1:]:
        if metric.kind != HYPERBOLIC and c.grid != grid:
            raise GridMismatchError("curves live on different grids")
    if metric.kind == HYPERBOLIC and any(c.grid != grid for c in curves):
        # heterogeneous grids: fall back to per-pair computation upstream
        return None, None
    return np.array([c.values for c in curves]), grid


def hausdorff(metric: MetricDescriptor, set_a, set_b) -> float:
    """Hausdorff distance between two nonempty collections of curves.

    Empty collections are an error here; callers must handle emptiness
    explicitly rather than rely on a 0/infinity convention.
    """
    a_vals, a_grid = _as_value_matrix(set_a, metric)
    b_vals, b_grid = _as_value_matrix(set_b, metric)
    if a_vals is None or b_vals is None:
        # heterogeneous grids (hyperbolic only): brute force over pairs
        d = np.array([[distance(metric, x, y) for y in set_b] for x in set_a])
    else:
        if a_vals.shape[0] == 0 or b_vals.shape[0] == 0:
            raise EmptySetError("hausdorff requires nonempty sets")
        if metric.kind != HYPERBOLIC and a_grid != b_grid:
            raise GridMismatchError("sets live on different grids")
        d = pairwise(metric, a_grid, a_vals, b_vals)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class ShrinkTransform:
    """Multiply values by alpha on a proper subset of grid indices.

    Used to probe how depths react to shrinking the region where curves show
    little variability.
    """

    region: np.ndarray
    alpha: float

    def __post_init__(self):
        region = np.unique(np.asarray(self.region, dtype=np.intp))
        if region.size == 0:
            raise ValueError("shrink region must be nonempty")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        region.setflags(write=False)
        object.__setattr__(self, "region", region)

    def validate_for(self, grid: Grid) -> None:
        if self.region.min() < 0 or self.region.max() >= len(grid):
            raise ValueError("shrink region indices outside the grid")
        if self.region.size >= len(grid):
            raise ValueError("shrink region must be a proper subset of the grid")


def shrink(transform: ShrinkTransform, x: Curve) -> Curve:
    transform.validate_for(x.grid)
    vals = x.values.copy()
    vals[transform.region] *= transform.alpha
    return Curve(x.grid, vals)


def shrink_matrix(transform: ShrinkTransform, grid: Grid, rows: np.ndarray) -> np.ndarray:
    transform.validate_for(grid)
    out = np.asarray(rows, dtype=np.float64).copy()
    out[:, transform.region] *= transform.alpha
    return out
