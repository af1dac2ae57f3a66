"""Core containers for discretized functional data.

A curve is a vector of samples on a shared, strictly increasing grid.  A
CurveSet is the empirical distribution putting mass 1/N on each of its rows.
All containers are immutable after construction; downstream computations are
pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError


def substream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator for (seed, key...): independent of thread
    scheduling, reproducible across runs."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered discretization points of the common domain."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("grid needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def cell_widths(self) -> np.ndarray:
        """Cell measure per grid point.

        Interior cells span between midpoints of neighbouring gaps; end cells
        mirror their inner half-gap outward, so a uniform grid with spacing h
        yields h for every cell.  A single-point grid gets a unit cell.
        """
        pts = self.points
        if pts.size == 1:
            return np.ones(1)
        mids = (pts[1:] + pts[:-1]) / 2.0
        edges = np.concatenate(([2.0 * pts[0] - mids[0]], mids, [2.0 * pts[-1] - mids[-1]]))
        return np.diff(edges)


@dataclass(frozen=True, eq=False)
class Curve:
    """One sampled function: values aligned with a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 1 or vals.size != len(self.grid):
            raise ValueError(
                f"curve has {vals.size} values for a grid of {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class CurveSet:
    """N curves over one grid; the empirical measure puts mass 1/N per row."""

    grid: Grid
    curves: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.curves, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("curve set needs an (N, G) matrix with N >= 1")
        if arr.shape[1] != len(self.grid):
            raise ValueError(
                f"curves have {arr.shape[1]} columns for a grid of {len(self.grid)} points"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("curve values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "curves", arr)

    @property
    def n_curves(self) -> int:
        return int(self.curves.shape[0])

    def curve(self, index: int) -> Curve:
        return Curve(self.grid, self.curves[index])

    def subset(self, indices) -> "CurveSet":
        return CurveSet(self.grid, self.curves[np.asarray(indices, dtype=np.intp)])


@dataclass(frozen=True)
class SubsampleSpec:
    """Sizes of the two index samples and the seed both are derived from."""

    n: int
    m: int
    seed: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("subsample sizes must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def validate_for(self, curve_set: CurveSet) -> None:
        if self.n > curve_set.n_curves or self.m > curve_set.n_curves:
            raise ValueError(
                f"subsample sizes (n={self.n}, m={self.m}) exceed set size "
                f"{curve_set.n_curves}"
            )


@dataclass(frozen=True)
class RngStream:
    """Counter-style stream id under one seed; same (seed, stream_id) always
    yields the same sequence regardless of thread count."""

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        return substream(self.seed, self.stream_id)


def draw_subsample(curve_set: CurveSet, count: int, stream: RngStream) -> np.ndarray:
    """Draw `count` distinct row indices uniformly without replacement."""
    n = curve_set.n_curves
    if count < 1:
        raise ValueError("subsample count must be positive")
    if count > n:
        raise ValueError(f"cannot draw {count} distinct indices from {n} curves")
    rng = stream.generator()
    return rng.choice(n, size=count, replace=False).astype(np.intp)


def write_curveset_csv(curve_set: CurveSet, path) -> None:
    """First line: grid points; each following line: one curve.  Floats are
    written with shortest round-trip formatting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(repr(float(p)) for p in curve_set.grid.points) + "\n")
        for row in curve_set.curves:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _parse_row(line: str, row_number: int) -> list[float]:
    out = []
    for col, tok in enumerate(line.split(","), start=1):
        tok = tok.strip()
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(
                f"row {row_number}, column {col}: not a number: {tok!r}"
            ) from None
    return out


def read_curveset_csv(path) -> CurveSet:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise ParseError(f"{path}: empty file")
    grid_vals = _parse_row(lines[0], 1)
    diffs = np.diff(grid_vals)
    if len(grid_vals) > 1 and not np.all(diffs > 0):
        col = int(np.argmax(diffs <= 0)) + 2
        raise ParseError(f"row 1, column {col}: grid not increasing")
    if not np.all(np.isfinite(grid_vals)):
        raise ParseError("row 1: grid points must be finite")
    width = len(grid_vals)
    rows = []
    for rno, line in enumerate(lines[1:], start=2):
        vals = _parse_row(line, rno)
        if len(vals) != width:
            raise ParseError(f"row {rno} has {len(vals)} values, expected {width}")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no curves after the grid header")
    return CurveSet(Grid(np.array(grid_vals)), np.array(rows))
