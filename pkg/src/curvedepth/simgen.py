"""Synthetic curve family and the Monte Carlo benchmark harness.

The family x_k(t) = exp(-N t c / (k + N/c)), k = 1..N, is strictly ordered
pointwise in k, so its deepest members are the middle indices; optional
contamination adds white noise to a Bernoulli-selected subset of curves.
Two experiments are provided: convergence of the randomly certified deepest
curve toward the true deepest set, and the identification rate of the deepest
index across depth methods under noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import depths
from .fdata import Curve, CurveSet, Grid, substream
from .metrics import L2, MetricDescriptor
from .symmetry import solve_center

# largest sample size at which the harness certifies the center against the
# full set (exact empirical center); above it, 1000-point samples are used
EXACT_CENTER_LIMIT = 1001

METHOD_TOKENS = ("idt", "ids", "mbd", "band", "random", "rtukey:1", "rtukey:10")


def default_sim_grid() -> Grid:
    """99 equispaced points i/100 inside (0, 1)."""
    return Grid(np.arange(1, 100) / 100.0)


@dataclass(frozen=True)
class SimConfig:
    """Family size N, decay constant c, noise level sd, contamination rate."""

    N: int
    c: float
    sd: float = 0.0
    bernoulli_p: float = 1.0 / 3.0
    grid: Grid = field(default_factory=default_sim_grid)
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.sd < 0:
            raise ValueError("sd must be nonnegative")
        if not 0.0 <= self.bernoulli_p <= 1.0:
            raise ValueError("bernoulli_p must lie in [0, 1]")


def mean_curve_values(cfg: SimConfig, ks) -> np.ndarray:
    """Rows of the noiseless family for 1-based indices ks."""
    ks = np.atleast_1d(np.asarray(ks, dtype=np.float64))
    if np.any(ks < 1) or np.any(ks > cfg.N):
        raise ValueError(f"k out of range 1..{cfg.N}")
    t = cfg.grid.points
    return np.exp(-(cfg.N * cfg.c) * t[None, :] / (ks[:, None] + cfg.N / cfg.c))


def mean_curve(cfg: SimConfig, k: int) -> Curve:
    return Curve(cfg.grid, mean_curve_values(cfg, [k])[0])


def sample_curves(cfg: SimConfig) -> CurveSet:
    """All N curves with Bernoulli-gated white noise; sd=0 reproduces the
    noiseless family bit for bit."""
    means = mean_curve_values(cfg, np.arange(1, cfg.N + 1))
    hit = substream(cfg.seed, 0).random(cfg.N) < cfg.bernoulli_p
    noise = substream(cfg.seed, 1).standard_normal(means.shape) * cfg.sd
    return CurveSet(cfg.grid, means + hit[:, None] * noise)


def true_deepest_indices(N: int) -> np.ndarray:
    """1-based indices of the deepest family members: the two middle curves
    for even N, the single middle curve for odd N."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if N % 2 == 0:
        return np.array([N // 2, N // 2 + 1], dtype=np.int64)
    return np.array([(N + 1) // 2], dtype=np.int64)


@dataclass(frozen=True)
class ExperimentReport:
    """Flat rows (one statistic each) plus the reproducibility envelope."""

    rows: tuple
    seed: int
    reps: int

    COLUMNS = ("experiment", "N", "c", "sd", "n", "m", "method", "statistic",
               "value", "reps", "seed")

    def to_records(self) -> list[dict]:
        return [dict(r) for r in self.rows]


def _deepest_distance(cfg: SimConfig, n: int, m: int, rep_seed: int) -> float:
    """One replicate: certify a random center over fresh n/m samples of the
    noiseless family and return its distance to the true deepest set.

    Only the sampled curves are ever materialized, so N can be large.
    """
    rows_n = substream(rep_seed, 0).choice(cfg.N, size=n, replace=False)
    rows_m = substream(rep_seed, 1).choice(cfg.N, size=m, replace=False)
    ks = np.unique(np.concatenate([rows_n, rows_m])) + 1  # 1-based
    values = mean_curve_values(cfg, ks)
    local = CurveSet(cfg.grid, values)
    pos_n = np.searchsorted(ks, rows_n + 1)
    pos_m = np.searchsorted(ks, rows_m + 1)
    sol = solve_center(local, L2, pos_n, pos_m, np.arange(ks.size),
                       seed=rep_seed, n_used=n, m_used=m)
    chosen = values[sol.selected]
    true_vals = mean_curve_values(cfg, true_deepest_indices(cfg.N))
    return float(np.sqrt(((true_vals - chosen[None, :]) ** 2).sum(axis=1)).min())


def convergence_experiment(
    cfg: SimConfig,
    n_list,
    m_list,
    reps: int,
    seed: int,
    map_fn=map,
) -> ExperimentReport:
    """Mean/sd over replicates of the distance between the randomly certified
    deepest curve and the true deepest set, for each (n, m) cell.

    Requires the noiseless family (sd = 0).  Replicates use streams derived
    from (seed, replicate); map_fn may evaluate them in parallel since each
    replicate is seed-isolated and aggregation is by replicate index.
    """
    if cfg.sd != 0.0:
        raise ValueError("convergence experiment is defined for sd=0 only")
    if reps < 1:
        raise ValueError("reps must be positive")
    cells = [(int(n), int(m)) for n in n_list for m in m_list]
    for n, m in cells:
        if not (1 <= n <= cfg.N and 1 <= m <= cfg.N):
            raise ValueError(f"invalid subsample sizes (n={n}, m={m}) for N={cfg.N}")
    rep_seeds = [_child_seed(seed, rep) for rep in range(reps)]
    rows = []
    for n, m in cells:
        dists = np.fromiter(
            map_fn(lambda rs: _deepest_distance(cfg, n, m, rs), rep_seeds),
            dtype=np.float64, count=reps,
        )
        base = {"experiment": "convergence", "N": cfg.N, "c": cfg.c, "sd": 0.0,
                "n": n, "m": m, "method": "random", "reps": reps, "seed": seed}
        rows.append({**base, "statistic": "mean", "value": float(dists.mean())})
        rows.append({**base, "statistic": "sd", "value": float(dists.std(ddof=1)) if reps > 1 else 0.0})
    return ExperimentReport(rows=tuple(rows), seed=seed, reps=reps)


def _child_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key)).generate_state(2, np.uint64)
    return int(state[0] ^ state[1])


def _method_deepest(curve_set: CurveSet, token: str, seed: int) -> int:
    """0-based row of the deepest curve under one named method."""
    if token == "idt":
        return depths.integrated_depth(curve_set, "tukey").deepest_index
    if token == "ids":
        return depths.integrated_depth(curve_set, "simplicial").deepest_index
    if token == "mbd":
        return depths.modified_band_depth_j2(curve_set).deepest_index
    if token == "band":
        return depths.band_depth_j2(curve_set).deepest_index
    if token.startswith("rtukey:"):
        k = int(token.split(":", 1)[1])
        spec = depths.ProjectionSpec(k=k, seed=seed)
        return depths.random_tukey_depth(curve_set, spec).deepest_index
    if token == "random":
        n = curve_set.n_curves
        if n <= EXACT_CENTER_LIMIT:
            idx = np.arange(n, dtype=np.intp)
            sol = solve_center(curve_set, L2, idx, idx, idx, seed=seed,
                               n_used=n, m_used=n)
        else:
            rows_n = substream(seed, 0).choice(n, size=1000, replace=False)
            rows_m = substream(seed, 1).choice(n, size=1000, replace=False)
            cand = np.unique(np.concatenate([rows_n, rows_m]))
            sol = solve_center(curve_set, L2, rows_n, rows_m, cand, seed=seed,
                               n_used=1000, m_used=1000)
        params = depths.DepthParams(center=sol)
        return depths.random_depth(curve_set, L2, params).deepest_index
    raise ValueError(f"unknown method {token!r}; expected one of {METHOD_TOKENS}")


def identification_experiment(
    cfg_list,
    methods,
    reps: int,
    seed: int,
    map_fn=map,
) -> ExperimentReport:
    """Proportion of replicates in which each method's deepest index hits the
    true deepest set (either middle curve counts for even N)."""
    methods = list(methods)
    for token in methods:
        if token not in METHOD_TOKENS:
            raise ValueError(f"unknown method {token!r}; expected one of {METHOD_TOKENS}")
    if reps < 1:
        raise ValueError("reps must be positive")
    cfg_list = list(cfg_list)

    def run_rep(args) -> list[bool]:
        cfg_i, rep = args
        cfg = cfg_list[cfg_i]
        data = sample_curves(replace(cfg, seed=_child_seed(seed, cfg_i, rep)))
        truth = set(true_deepest_indices(cfg.N).tolist())
        out = []
        for meth_i, token in enumerate(methods):
            row = _method_deepest(data, token, _child_seed(seed, cfg_i, rep, meth_i))
            out.append((row + 1) in truth)
        return out

    rows = []
    for cfg_i, cfg in enumerate(cfg_list):
        hits = list(map_fn(run_rep, [(cfg_i, rep) for rep in range(reps)]))
        hit_matrix = np.array(hits, dtype=np.float64)  # (reps, methods)
        for meth_i, token in enumerate(methods):
            rows.append({
                "experiment": "identification", "N": cfg.N, "c": cfg.c,
                "sd": cfg.sd, "n": "", "m": "", "method": token,
                "statistic": "success_proportion",
                "value": float(hit_matrix[:, meth_i].mean()),
                "reps": reps, "seed": seed,
            })
    return ExperimentReport(rows=tuple(rows), seed=seed, reps=reps)
