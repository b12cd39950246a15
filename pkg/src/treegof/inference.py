"""Permutation and Monte-Carlo inference around the sup statistic."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SpaceMismatchError
from .mincut import SupSolver, scaled_statistic, sup_statistic
from .rngs import replicate_rng
from .space import (
    OccupancyVector,
    TreeSample,
    TreeSpace,
    WeightFunction,
    mean_occupancy,
)


@dataclass(frozen=True)
class TestConfig:
    theta: float = 0.35
    n_perm: int = 1000
    alphas: tuple[float, ...] = (0.01, 0.05, 0.1)
    seed: int = 0
    depth: int | None = None
    split: str = "half"  # "half" or "preserve" (keep original sample sizes)

    def __post_init__(self):
        if self.n_perm < 1:
            raise DataError("n_perm must be >= 1")
        if not 0 < self.theta < 1:
            raise DataError("theta must lie in (0, 1)")
        if self.split not in ("half", "preserve"):
            raise DataError("split must be 'half' or 'preserve'")
        for a in self.alphas:
            if not 0 < a < 1:
                raise DataError("alpha levels must lie in (0, 1)")


@dataclass
class TestReport:
    statistic: float
    scaled_statistic: float
    p_value: float
    rejects: dict[str, bool]
    quantiles: dict[str, float]
    n: int
    m: int
    theta: float
    depth: int
    n_perm: int
    seed: int
    elapsed_ms: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "scaled_statistic": self.scaled_statistic,
            "p_value": self.p_value,
            "rejects": self.rejects,
            "quantiles": self.quantiles,
            "n": self.n,
            "m": self.m,
            "theta": self.theta,
            "depth": self.depth,
            "n_perm": self.n_perm,
            "seed": self.seed,
            "elapsed_ms": self.elapsed_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _pruned_solver(space: TreeSpace, w: WeightFunction, support: np.ndarray) -> SupSolver:
    mask = support.copy()
    if not space.is_suffix_closed(mask):
        mask = space.suffix_closure(mask)
    return SupSolver(space, w, np.nonzero(mask)[0])


def sup_from_matrices(
    space: TreeSpace, w: WeightFunction, mat_a: np.ndarray, mat_b: np.ndarray
) -> float:
    """Sup statistic of two membership matrices, pruned to their support."""
    support = mat_a.any(axis=0) | mat_b.any(axis=0)
    solver = _pruned_solver(space, w, support)
    nodes = solver.nodes
    return solver.value(mat_a[:, nodes].mean(axis=0), mat_b[:, nodes].mean(axis=0))


def _empirical_quantiles(stats: np.ndarray, alphas) -> dict[str, float]:
    ordered = np.sort(stats)
    n = len(ordered)
    out = {}
    for a in alphas:
        rank = min(max(math.ceil((1.0 - a) * n), 1), n)
        out[f"{1.0 - a:.2f}"] = float(ordered[rank - 1])
    return out


def permutation_two_sample(a: TreeSample, b: TreeSample, cfg: TestConfig) -> TestReport:
    """Two-sample test: the pooled sample is permuted ``n_perm`` times and
    the statistic recomputed on the two halves of each permutation; the
    p-value is the add-one fraction of replicates at or above the observed
    statistic."""
    t0 = time.perf_counter()
    if len(a) == 0 or len(b) == 0:
        raise DataError("both samples must be nonempty")
    if a.space != b.space:
        raise SpaceMismatchError("samples live in different tree spaces")
    space = a.space
    w = WeightFunction(space, cfg.theta)
    n, m = len(a), len(b)
    pooled = np.concatenate([a.matrix, b.matrix]).astype(np.float64)
    support = pooled.any(axis=0)
    solver = _pruned_solver(space, w, support)
    nodes = solver.nodes
    pooled_w = pooled[:, nodes]
    w_obs = solver.value(pooled_w[:n].mean(axis=0), pooled_w[n:].mean(axis=0))
    total = n + m
    k = n if cfg.split == "preserve" else total // 2
    stats = np.empty(cfg.n_perm, dtype=np.float64)
    for rep in range(cfg.n_perm):
        rng = replicate_rng(cfg.seed, rep)
        idx = rng.permutation(total)
        stats[rep] = solver.value(
            pooled_w[idx[:k]].mean(axis=0), pooled_w[idx[k:]].mean(axis=0)
        )
    count = int(np.count_nonzero(stats >= w_obs - 1e-12))
    p_value = (1 + count) / (cfg.n_perm + 1)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return TestReport(
        statistic=float(w_obs),
        scaled_statistic=scaled_statistic(w_obs, n, m),
        p_value=p_value,
        rejects={f"{al:g}": p_value <= al for al in cfg.alphas},
        quantiles=_empirical_quantiles(stats, cfg.alphas),
        n=n,
        m=m,
        theta=cfg.theta,
        depth=space.L if cfg.depth is None else cfg.depth,
        n_perm=cfg.n_perm,
        seed=cfg.seed,
        elapsed_ms=elapsed,
    )


def one_sample_statistic(
    a: TreeSample, mu: OccupancyVector, cfg: TestConfig
) -> float:
    """Sup over trees of the gap between the sample mean distance and the
    model-expected distance with node marginals ``mu``."""
    if len(a) == 0:
        raise DataError("sample must be nonempty")
    if a.space != mu.space:
        raise SpaceMismatchError("sample and marginals live in different spaces")
    w = WeightFunction(a.space, cfg.theta)
    occ = mean_occupancy(a)
    W, _, _ = sup_statistic(occ, mu, w)
    return W


def one_sample_mc_pvalue(
    a: TreeSample,
    mu: OccupancyVector,
    sampler,
    cfg: TestConfig,
    draws: int = 500,
) -> tuple[float, float]:
    """Monte-Carlo p-value for the one-sample statistic: the null is
    re-sampled ``draws`` times from the hypothesized model."""
    w_obs = one_sample_statistic(a, mu, cfg)
    space = a.space
    w = WeightFunction(space, cfg.theta)
    n = len(a)
    mu_w = None
    count = 0
    for i in range(draws):
        rng = replicate_rng(cfg.seed, 2, i)
        mat = sampler.sample_matrix(n, rng)
        support = mat.any(axis=0) | mu.support()
        solver = _pruned_solver(space, w, support)
        nodes = solver.nodes
        stat = solver.value(mat[:, nodes].mean(axis=0), mu.values[nodes])
        if stat >= w_obs - 1e-12:
            count += 1
    return w_obs, (1 + count) / (draws + 1)


@dataclass
class QuantileTable:
    n: int
    alphas: tuple[float, ...]
    quantiles: dict[str, float]
    stats: np.ndarray = field(repr=False)

    def q(self, alpha: float) -> float:
        return self.quantiles[f"{1.0 - alpha:.2f}"]


def mc_quantile(
    sampler_pi,
    sampler_pi_prime,
    n: int,
    N: int,
    alphas,
    w: WeightFunction,
    seed: int = 0,
) -> QuantileTable:
    """Null quantiles by simulation: each iteration draws both size-n
    samples from the fair mixture of the two laws and records the
    statistic; quantiles are order statistics of the N recorded values."""
    if N < 1:
        raise DataError("N must be >= 1")
    space = sampler_pi.space
    if sampler_pi_prime.space != space:
        raise SpaceMismatchError("samplers live in different spaces")
    stats = np.empty(N, dtype=np.float64)
    for i in range(N):
        rng = replicate_rng(seed, 0, i)
        pick = rng.random(2 * n) < 0.5
        mat = np.empty((2 * n, space.node_count), dtype=bool)
        k = int(pick.sum())
        if k:
            mat[pick] = sampler_pi.sample_matrix(k, rng)
        if 2 * n - k:
            mat[~pick] = sampler_pi_prime.sample_matrix(2 * n - k, rng)
        stats[i] = sup_from_matrices(space, w, mat[:n], mat[n:])
    return QuantileTable(n, tuple(alphas), _empirical_quantiles(stats, alphas), stats)


def power_estimate(
    sampler_pi,
    sampler_pi_prime,
    n: int,
    N_power: int,
    quantiles: QuantileTable,
    w: WeightFunction,
    seed: int = 0,
) -> dict[float, float]:
    """Fraction of draws (sample 1 from the first law, sample 2 from the
    second) whose statistic exceeds the null quantile, per level."""
    if N_power < 1:
        raise DataError("N_power must be >= 1")
    space = sampler_pi.space
    if sampler_pi_prime.space != space:
        raise SpaceMismatchError("samplers live in different spaces")
    rejects = {a: 0 for a in quantiles.alphas}
    for i in range(N_power):
        rng = replicate_rng(seed, 1, i)
        mat_a = sampler_pi.sample_matrix(n, rng)
        mat_b = sampler_pi_prime.sample_matrix(n, rng)
        stat = sup_from_matrices(space, w, mat_a, mat_b)
        for a in quantiles.alphas:
            if stat > quantiles.q(a):
                rejects[a] += 1
    return {a: rejects[a] / N_power for a in quantiles.alphas}
