"""Centers of distance-symmetry over an empirical curve distribution.

A candidate curve z is certified against a probe curve x by the mass of the
far set {y : d(y,x) >= max(d(x,z), d(y,z))} under a reference sample.  A
center holds mass >= 1/2 for every probe.  The randomized search certifies
candidates only against an n-sample (mass) and an m-sample (probes), which is
what makes the method usable for very large N; a maximin relaxation
guarantees a nonempty answer with a reported slack delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fdata import CurveSet, RngStream, SubsampleSpec, draw_subsample
from .metrics import MetricDescriptor, hausdorff, pairwise

_CAND_BLOCK = 16
# cap on candidate-block boolean temporaries: cand * mass * probe entries
_WORK_CELLS = 1 << 24


@dataclass(frozen=True)
class HSetQuery:
    """Indices of the candidate center z and the probe x inside a CurveSet."""

    z_index: int
    x_index: int


@dataclass(frozen=True, eq=False)
class SymmetrySolution:
    """Certified (or maximin-relaxed) centers of an empirical distribution.

    delta is 0 exactly when the half-mass condition held for every probe;
    otherwise it is the smallest slack that makes some candidate admissible.
    The mass/probe index arrays record the samples actually used so that
    downstream parameter rules can be replayed deterministically.
    """

    center_indices: np.ndarray
    selected: int
    delta: float
    n_used: int
    m_used: int
    seed: int
    mass_indices: np.ndarray
    probe_indices: np.ndarray
    metric_kind: str

    def __post_init__(self):
        for name in ("center_indices", "mass_indices", "probe_indices"):
            arr = np.asarray(getattr(self, name), dtype=np.intp).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.center_indices.size == 0:
            raise ValueError("center_indices must be nonempty")
        if self.selected not in self.center_indices:
            raise ValueError("selected must be one of center_indices")


def hset_mass(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    z_index: int,
    x_index: int,
    sample_indices,
) -> float:
    """Fraction of sample curves y with d(y,x) >= max(d(x,z), d(y,z))."""
    sample = np.asarray(sample_indices, dtype=np.intp)
    if sample.size == 0:
        raise ValueError("sample_indices must be nonempty")
    grid, vals = curve_set.grid, curve_set.curves
    zx = pairwise(metric, grid, vals[[z_index, x_index]], vals[sample])
    d_yz, d_yx = zx[0], zx[1]
    d_xz = pairwise(metric, grid, vals[[x_index]], vals[[z_index]])[0, 0]
    return float(np.mean(d_yx >= np.maximum(d_xz, d_yz)))


def _minimax_masses(
    metric: MetricDescriptor,
    curve_set: CurveSet,
    candidates: np.ndarray,
    probes: np.ndarray,
    mass: np.ndarray,
    threshold: float,
) -> tuple[np.ndarray, float]:
    """Min-over-probes mass per candidate, with sound early dropping.

    A candidate is abandoned once its running minimum falls below both the
    threshold and the best exact minimum finished so far: its true minimum can
    only be lower, so it can affect neither the threshold set nor the maximum
    nor the maximum's tie set.  Recorded values for abandoned candidates are
    partial upper bounds, always strictly below the returned best.  The probe
    and candidate scan order is fixed, so results do not depend on scheduling.
    Returns (per-candidate minima, exact overall best minimum).
    """
    grid, vals = curve_set.grid, curve_set.curves
    n_mass, n_probe = mass.size, probes.size
    d_mass_probe = pairwise(metric, grid, vals[mass], vals[probes])
    probe_block = max(1, _WORK_CELLS // (_CAND_BLOCK * n_mass))
    minima = np.full(candidates.size, np.inf)
    best = -np.inf
    for c0 in range(0, candidates.size, _CAND_BLOCK):
        cand = candidates[c0 : c0 + _CAND_BLOCK]
        d_yz = pairwise(metric, grid, vals[mass], vals[cand])  # (n, cz)
        running = np.full(cand.size, np.inf)
        alive = np.ones(cand.size, dtype=bool)
        for p0 in range(0, n_probe, probe_block):
            live = np.flatnonzero(alive)
            if live.size == 0:
                break
            p1 = min(p0 + probe_block, n_probe)
            d_xz = pairwise(metric, grid, vals[probes[p0:p1]], vals[cand[live]])
            # cond[c, y, x] = d(y, x) >= max(d(x, z_c), d(y, z_c))
            thr = np.maximum(d_xz.T[:, None, :], d_yz[:, live].T[:, :, None])
            masses = np.mean(d_mass_probe[None, :, p0:p1] >= thr, axis=1)
            running[live] = np.minimum(running[live], masses.min(axis=1))
            alive[live] = ~((running[live] < threshold) & (running[live] < best))
        if np.any(alive):
            best = max(best, float(running[alive].max()))
        minima[c0 : c0 + _CAND_BLOCK] = running
    return minima, best


def theta_set(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    candidates,
    probes,
    mass_sample,
    threshold: float = 0.5,
) -> np.ndarray:
    """Candidates whose mass stays at or above the threshold for every probe.

    With all three index lists equal to the full set and threshold 1/2 this is
    the exact empirical center set; the result may be empty.
    """
    candidates = np.asarray(candidates, dtype=np.intp)
    probes = np.asarray(probes, dtype=np.intp)
    mass_sample = np.asarray(mass_sample, dtype=np.intp)
    if candidates.size == 0 or probes.size == 0 or mass_sample.size == 0:
        raise ValueError("index lists must be nonempty")
    minima, _ = _minimax_masses(metric, curve_set, candidates, probes, mass_sample, threshold)
    return np.sort(candidates[minima >= threshold])


def solve_center(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    mass_indices,
    probe_indices,
    candidate_indices,
    *,
    seed: int = 0,
    n_used: int | None = None,
    m_used: int | None = None,
) -> SymmetrySolution:
    """Center search over explicit samples, with the maximin relaxation.

    If no candidate passes the half-mass test against all probes, the
    candidates attaining the best minimal mass are returned with
    delta = 1/2 - best.  The selected representative minimizes the summed
    distance to the mass sample, ties going to the lowest row index.
    """
    mass = np.asarray(mass_indices, dtype=np.intp)
    probes = np.asarray(probe_indices, dtype=np.intp)
    cand = np.sort(np.asarray(candidate_indices, dtype=np.intp))
    if mass.size == 0 or probes.size == 0 or cand.size == 0:
        raise ValueError("index lists must be nonempty")
    minima, best = _minimax_masses(metric, curve_set, cand, probes, mass, 0.5)
    if best >= 0.5:
        centers = cand[minima >= 0.5]
        delta = 0.0
    else:
        centers = cand[minima == best]
        delta = 0.5 - best
    sums = pairwise(
        metric, curve_set.grid, curve_set.curves[centers], curve_set.curves[mass]
    ).sum(axis=1)
    selected = int(centers[int(np.argmin(sums))])
    return SymmetrySolution(
        center_indices=centers,
        selected=selected,
        delta=float(delta),
        n_used=int(mass.size if n_used is None else n_used),
        m_used=int(probes.size if m_used is None else m_used),
        seed=int(seed),
        mass_indices=mass,
        probe_indices=probes,
        metric_kind=metric.kind,
    )


def random_center(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    spec: SubsampleSpec,
    *,
    full_candidates: bool = False,
) -> SymmetrySolution:
    """Center search certified against random n- and m-subsamples.

    The two samples come from disjoint streams of spec.seed.  Candidates
    default to the union of the two samples; full_candidates scans every
    curve of the set instead (cost grows linearly with N).
    """
    spec.validate_for(curve_set)
    mass = draw_subsample(curve_set, spec.n, RngStream(spec.seed, 0))
    probes = draw_subsample(curve_set, spec.m, RngStream(spec.seed, 1))
    if full_candidates:
        cand = np.arange(curve_set.n_curves, dtype=np.intp)
    else:
        cand = np.unique(np.concatenate([mass, probes]))
    return solve_center(
        curve_set, metric, mass, probes, cand,
        seed=spec.seed, n_used=spec.n, m_used=spec.m,
    )


def convergence_probe(
    curve_set: CurveSet,
    metric: MetricDescriptor,
    spec1: SubsampleSpec,
    spec2: SubsampleSpec,
) -> float:
    """Hausdorff distance between the center sets of two independent runs."""
    sol1 = random_center(curve_set, metric, spec1)
    sol2 = random_center(curve_set, metric, spec2)
    return hausdorff(
        metric,
        curve_set.subset(sol1.center_indices),
        curve_set.subset(sol2.center_indices),
    )


def center_to_dict(sol: SymmetrySolution) -> dict:
    """Wire form used by the CLI: the documented fields only."""
    return {
        "selected": int(sol.selected),
        "center_indices": [int(i) for i in sol.center_indices],
        "delta": float(sol.delta),
        "n": int(sol.n_used),
        "m": int(sol.m_used),
        "seed": int(sol.seed),
    }
