"""Depth functions for curve collections.

The main entry points are the randomized center-based depth (`random_depth`)
and its exact-center counterpart (`metric_depth`), both of the form
1 / (1 + d(x, center) / d(ref, ref')).  Competitor depths used for
benchmarking are provided alongside: integrated depth with one-dimensional
halfspace or simplicial marginals, band and modified band depth over curve
pairs, and the projected halfspace depth with random directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fdata import Curve, CurveSet, substream
from .metrics import MetricDescriptor, pairwise
from .symmetry import SymmetrySolution


@dataclass(frozen=True)
class DepthParams:
    """Center solution plus the reference-pair rule for the denominator.

    vartheta None applies the default rule: the reference pair is the selected
    center and the center-set element farthest from it; see
    `resolve_reference_pair` for the fallbacks.  An explicit (index, index)
    pair overrides the rule.
    """

    center: SymmetrySolution
    vartheta: tuple[int, int] | None = None


@dataclass(frozen=True, eq=False)
class DepthResult:
    """Depth per query curve; deepest_index is the argmax, ties to lowest."""

    values: np.ndarray
    deepest_index: int
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class ProjectionSpec:
    """Number of random directions and the seed that generates them."""

    k: int
    seed: int
    direction_law: str = "gaussian_grid"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one projection")
        if self.direction_law != "gaussian_grid":
            raise ValueError(f"unknown direction law {self.direction_law!r}")


def _result(values: np.ndarray, method: str, params: dict) -> DepthResult:
    return DepthResult(
        values=values,
        deepest_index=int(np.argmax(values)),
        method=method,
        params=params,
    )


def _query_matrix(curve_set: CurveSet, query) -> np.ndarray:
    if query is None:
        return curve_set.curves
    if isinstance(query, CurveSet):
        if query.grid != curve_set.grid:
            raise ConfigurationError("query curves live on a different grid")
        return query.curves
    if isinstance(query, Curve):
        query = [query]
    if isinstance(query, (list, tuple)) and query and isinstance(query[0], Curve):
        for c in query:
            if c.grid != curve_set.grid:
                raise ConfigurationError("query curves live on a different grid")
        return np.array([c.values for c in query])
    arr = np.atleast_2d(np.asarray(query, dtype=np.float64))
    if arr.shape[1] != len(curve_set.grid):
        raise ConfigurationError("query width does not match the grid")
    return arr


def resolve_reference_pair(
    curve_set: CurveSet, metric: MetricDescriptor, center: SymmetrySolution
) -> tuple[int | None, float]:
    """Reference pair under the default rule.

    The anchor is the selected center.  Its partner is the center-set element
    farthest from it; when the center set is a singleton the partner falls
    back to the mass-sample curve farthest from the anchor (ties to the lowest
    row index).  Returns (partner index or None, separation).  A None partner
    means every available curve coincides with the anchor; callers then treat
    depth as 1 at zero distance and 0 elsewhere.
    """
    grid, vals = curve_set.grid, curve_set.curves
    anchor = center.selected
    for pool in (center.center_indices, np.sort(center.mass_indices)):
        d = pairwise(metric, grid, vals[[anchor]], vals[pool])[0]
        far = int(np.argmax(d))
        if d[far] > 0.0:
            return int(pool[far]), float(d[far])
    return None, 0.0


def _ratio_depth(dists: np.ndarray, denom: float | None) -> np.ndarray:
    if denom is None:
        return np.where(dists == 0.0, 1.0, 0.0)
    return 1.0 / (1.0 + dists / denom)


def random_depth(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    params: DepthParams,
    query=None,
) -> DepthResult:
    """Depth 1/(1 + d(x, selected center)/d(reference pair)).

    Takes value 1 exactly at zero distance from the selected center and
    decreases strictly with that distance.
    """
    center = params.center
    if center.metric_kind != metric.kind:
        raise ConfigurationError(
            f"center was computed with metric {center.metric_kind!r}, not {metric.kind!r}"
        )
    q = _query_matrix(curve_set, query)
    if params.vartheta is not None:
        v, vp = params.vartheta
        denom = pairwise(metric, curve_set.grid, curve_set.curves[[v]], curve_set.curves[[vp]])[0, 0]
        if denom == 0.0:
            raise ConfigurationError("reference pair has zero separation")
        ref = (int(v), int(vp))
    else:
        partner, denom = resolve_reference_pair(curve_set, metric, center)
        denom = denom if partner is not None else None
        ref = (partner, center.selected)
    dists = pairwise(metric, curve_set.grid, q, curve_set.curves[[center.selected]])[:, 0]
    values = _ratio_depth(dists, denom)
    return _result(values, "random", {
        "selected": int(center.selected), "reference_pair": ref,
        "n": center.n_used, "m": center.m_used, "seed": center.seed,
        "metric": metric.kind,
    })


def simple_random_depth(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    center: SymmetrySolution,
    query=None,
) -> DepthResult:
    """Depth 1/(1 + d(x, selected center)); no reference pair, hence not
    invariant under uniform rescaling of the data."""
    if center.metric_kind != metric.kind:
        raise ConfigurationError(
            f"center was computed with metric {center.metric_kind!r}, not {metric.kind!r}"
        )
    q = _query_matrix(curve_set, query)
    dists = pairwise(metric, curve_set.grid, q, curve_set.curves[[center.selected]])[:, 0]
    return _result(1.0 / (1.0 + dists), "simple", {
        "selected": int(center.selected),
        "n": center.n_used, "m": center.m_used, "seed": center.seed,
        "metric": metric.kind,
    })


def metric_depth(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    theta_indices,
    vartheta: tuple[int, int],
    query=None,
) -> DepthResult:
    """Depth 1/(1 + d(x, center set)/d(reference pair)) with the distance to
    the center set taken as the minimum over its elements."""
    theta = np.asarray(theta_indices, dtype=np.intp)
    if theta.size == 0:
        raise ValueError("theta_indices must be nonempty")
    v, vp = vartheta
    denom = pairwise(metric, curve_set.grid, curve_set.curves[[v]], curve_set.curves[[vp]])[0, 0]
    if denom == 0.0:
        raise ConfigurationError("reference pair has zero separation")
    q = _query_matrix(curve_set, query)
    dists = pairwise(metric, curve_set.grid, q, curve_set.curves[theta]).min(axis=1)
    return _result(1.0 / (1.0 + dists / denom), "metric", {
        "theta_indices": [int(i) for i in theta],
        "reference_pair": (int(v), int(vp)),
        "metric": metric.kind,
    })


def univariate_tukey(sample, x: float) -> float:
    """min of the closed lower and upper empirical tail masses at x."""
    s = np.asarray(sample, dtype=np.float64)
    if s.size == 0:
        raise ValueError("sample must be nonempty")
    left = np.count_nonzero(s <= x) / s.size
    right = np.count_nonzero(s >= x) / s.size
    return float(min(left, right))


def univariate_simplicial(sample, x: float) -> float:
    """Product of the closed lower and upper empirical tail masses at x."""
    s = np.asarray(sample, dtype=np.float64)
    if s.size == 0:
        raise ValueError("sample must be nonempty")
    left = np.count_nonzero(s <= x) / s.size
    right = np.count_nonzero(s >= x) / s.size
    return float(left * right)


def _tail_counts(curve_set: CurveSet, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed tail counts #{values <= q} and #{values >= q} per grid point."""
    vals = curve_set.curves
    n = vals.shape[0]
    cols = np.sort(vals, axis=0)
    left = np.empty(q.shape, dtype=np.int64)
    right = np.empty(q.shape, dtype=np.int64)
    for t in range(vals.shape[1]):
        left[:, t] = np.searchsorted(cols[:, t], q[:, t], side="right")
        right[:, t] = n - np.searchsorted(cols[:, t], q[:, t], side="left")
    return left, right


def integrated_depth(curve_set: CurveSet, flavor: str, query=None) -> DepthResult:
    """Quadrature over the grid of a one-dimensional depth of each marginal.

    flavor "tukey" uses the halfspace marginal depth, "simplicial" the product
    form.  The quadrature weights are normalized cell widths, which reduce to
    the plain mean on uniform grids.
    """
    if flavor not in ("tukey", "simplicial"):
        raise ValueError(f"unknown flavor {flavor!r}")
    q = _query_matrix(curve_set, query)
    n = curve_set.n_curves
    left, right = _tail_counts(curve_set, q)
    left, right = left / n, right / n
    pointwise = np.minimum(left, right) if flavor == "tukey" else left * right
    w = curve_set.grid.cell_widths()
    values = pointwise @ (w / w.sum())
    return _result(values, f"integrated_{flavor}", {"flavor": flavor})


def band_depth_j2(curve_set: CurveSet, query=None) -> DepthResult:
    """Fraction of sample-curve pairs whose pointwise envelope contains the
    whole query curve, boundaries included."""
    n = curve_set.n_curves
    if n < 2:
        raise ValueError("band depth needs at least two sample curves")
    q = _query_matrix(curve_set, query)
    vals = curve_set.curves
    total = n * (n - 1) / 2.0
    values = np.empty(q.shape[0])
    for i, row in enumerate(q):
        above = (vals > row).astype(np.float64)
        below = (vals < row).astype(np.float64)
        # pair {i,j} fails iff both sit strictly above (or below) somewhere
        fails = ((above @ above.T) > 0) | ((below @ below.T) > 0)
        values[i] = (total - np.triu(fails, 1).sum()) / total
    return _result(values, "band_j2", {})


def modified_band_depth_j2(curve_set: CurveSet, query=None) -> DepthResult:
    """Average over sample-curve pairs of the fraction of grid points at which
    the query lies inside the pair's envelope."""
    n = curve_set.n_curves
    if n < 2:
        raise ValueError("modified band depth needs at least two sample curves")
    q = _query_matrix(curve_set, query)
    left, right = _tail_counts(curve_set, q)
    strictly_below = n - right
    strictly_above = n - left
    total = n * (n - 1) / 2.0
    contains = total - _choose2(strictly_above) - _choose2(strictly_below)
    values = (contains / total).mean(axis=1)
    return _result(values, "modified_band_j2", {})


def _choose2(k: np.ndarray) -> np.ndarray:
    return k * (k - 1) / 2.0


def random_tukey_depth(
    curve_set: CurveSet, spec: ProjectionSpec, query=None
) -> DepthResult:
    """Minimum over random directions of the projected halfspace depth.

    Directions have iid standard normal coordinates on the grid, normalized to
    unit length; projections use the unweighted inner product of sampled
    values.  Deterministic for a fixed spec.
    """
    q = _query_matrix(curve_set, query)
    g = len(curve_set.grid)
    rng = substream(spec.seed, 0)
    dirs = rng.standard_normal((spec.k, g))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sample_proj = curve_set.curves @ dirs.T  # (N, k)
    query_proj = q @ dirs.T                  # (Q, k)
    n = curve_set.n_curves
    values = np.full(q.shape[0], np.inf)
    for j in range(spec.k):
        col = np.sort(sample_proj[:, j])
        left = np.searchsorted(col, query_proj[:, j], side="right") / n
        right = (n - np.searchsorted(col, query_proj[:, j], side="left")) / n
        values = np.minimum(values, np.minimum(left, right))
    return _result(values, "random_tukey", {"projections": spec.k, "seed": spec.seed})
