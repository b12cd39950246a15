"""Brute-force reference computations on desk-scale spaces.

Everything here exists to catch solver bugs: full enumerations of trees and
configurations, direct distance averaging, and literal cut-capacity sums.
Hard guards stop any attempt to run these beyond toy sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GuardError
from .mincut import FlowNetwork, LinearField
from .space import (
    Configuration,
    OccupancyVector,
    Tree,
    TreeSample,
    TreeSpace,
    WeightFunction,
    _check_shared_space,
    mean_distance,
)


@dataclass(frozen=True)
class EnumerationGuard:
    max_config_nodes: int = 20
    max_trees: int = 1000


DEFAULT_GUARD = EnumerationGuard()


def count_trees(space: TreeSpace) -> int:
    """Number of suffix-closed subsets: c(0)=2, c(d)=1+c(d-1)^m."""
    c = 2
    for _ in range(space.L):
        c = 1 + c**space.m
    return c


def enumerate_trees(space: TreeSpace, guard: EnumerationGuard = DEFAULT_GUARD) -> list[Tree]:
    """All suffix-closed subsets of the space, including the empty tree."""
    total = count_trees(space)
    if total > guard.max_trees:
        raise GuardError(f"space holds {total} trees, guard is {guard.max_trees}")

    def rooted(v: int) -> list[list[int]]:
        # node sets of subtrees rooted at (and containing) v
        if space.depth_of(v) == space.L:
            return [[v]]
        options: list[list[list[int]]] = []
        for a in range(space.m):
            sub = rooted(space.child(v, a))
            options.append([[]] + sub)
        out: list[list[int]] = []
        picks = [[]]
        for opts in options:
            picks = [acc + choice for acc in picks for choice in opts]
        for combo in picks:
            out.append([v] + combo)
        return out

    trees = [Tree(space, np.zeros(space.node_count, dtype=bool))]
    for nodes in rooted(0):
        mem = np.zeros(space.node_count, dtype=bool)
        mem[nodes] = True
        trees.append(Tree(space, mem))
    return trees


def brute_force_sup(
    occ_a_or_sample,
    occ_b_or_sample,
    w: WeightFunction,
    guard: EnumerationGuard = DEFAULT_GUARD,
) -> tuple[float, Tree]:
    """Exact sup of the absolute mean-distance difference by enumeration.

    Accepts either two tree samples (distances averaged directly, fully
    independent of any occupancy algebra) or two occupancy vectors.
    """
    a, b = occ_a_or_sample, occ_b_or_sample
    space = _check_shared_space(a, b, w)
    trees = enumerate_trees(space, guard)
    best, best_tree = -1.0, trees[0]
    if isinstance(a, TreeSample) and isinstance(b, TreeSample):
        for t in trees:
            val = abs(mean_distance(t, a, w) - mean_distance(t, b, w))
            if val > best:
                best, best_tree = val, t
    else:
        for t in trees:
            val = abs(_occ_mean_distance(t, a, w) - _occ_mean_distance(t, b, w))
            if val > best:
                best, best_tree = val, t
    return best, best_tree


def _occ_mean_distance(t: Tree, occ: OccupancyVector, w: WeightFunction) -> float:
    tm = t.membership.astype(np.float64)
    o = occ.values
    return float(np.sum(w.phi * (o - 2.0 * o * tm + tm)))


def brute_force_min_config(
    f: LinearField,
    beta: float,
    nodes: np.ndarray | None = None,
    guard: EnumerationGuard = DEFAULT_GUARD,
) -> tuple[Configuration, float]:
    """Exact minimum of coef.y + beta*orphans(y) over all 2^k configurations."""
    space = f.space
    if nodes is None:
        nodes = np.arange(space.node_count, dtype=np.int64)
    else:
        nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    k = len(nodes)
    if k > guard.max_config_nodes:
        raise GuardError(f"{k} nodes exceed the configuration guard {guard.max_config_nodes}")
    coef = f.coef[nodes]
    pos = np.full(space.node_count, -1, dtype=np.int64)
    pos[nodes] = np.arange(k)
    row_parent = np.full(k, -1, dtype=np.int64)
    nonroot = nodes != 0
    row_parent[nonroot] = pos[space.parents[nodes[nonroot]]]
    configs = (
        np.arange(1 << k, dtype=np.int64)[:, None] >> np.arange(k, dtype=np.int64)
    ) & 1
    configs = configs.astype(bool)
    values = configs @ coef
    child = row_parent >= 0
    if child.any():
        # a child of a node outside the working set is an orphan whenever present
        orphans = configs[:, child] & ~configs[:, row_parent[child]]
        values = values + beta * orphans.sum(axis=1)
    outside = ~child & (nodes != 0)
    if outside.any():
        values = values + beta * configs[:, outside].sum(axis=1)
    best = int(np.argmin(values))
    mem = np.zeros(space.node_count, dtype=bool)
    mem[nodes[configs[best]]] = True
    return Configuration(space, mem), float(values[best])


def random_tree_sample(space: TreeSpace, n: int, rng, density: float = 0.4) -> TreeSample:
    """n i.i.d. random trees: suffix closures of independent node draws."""
    trees = []
    for _ in range(n):
        mem = rng.random(space.node_count) < density
        trees.append(Tree(space, space.suffix_closure(mem)))
    return TreeSample(space, trees)


def equivalence_sweep(instances: int = 300, seed: int = 0, L: int = 3) -> dict:
    """Randomized agreement checks between the min-cut pipeline and the
    brute-force enumerations on small binary spaces.

    Per instance: the sup statistic must match full tree enumeration, the
    penalized minimizer must be suffix-closed and match the tree-restricted
    minimum, and cut-capacity differences must match Hamiltonian
    differences up to the shared constant.
    """
    from .mincut import (
        beta_for,
        build_network,
        linear_field,
        max_flow_min_cut,
        sup_statistic,
    )
    from .rngs import replicate_rng
    from .space import mean_occupancy

    space = TreeSpace.binary(L)
    trees = enumerate_trees(space)
    max_sup_gap = 0.0
    max_treemin_gap = 0.0
    max_affine_gap = 0.0
    closure_failures = 0
    for i in range(instances):
        rng = replicate_rng(seed, i)
        theta = float(rng.choice([0.35, 0.5]))
        w = WeightFunction(space, theta)
        n = int(rng.integers(1, 11))
        m = int(rng.integers(1, 11))
        a = random_tree_sample(space, n, rng)
        b = random_tree_sample(space, m, rng)
        occ_a, occ_b = mean_occupancy(a), mean_occupancy(b)
        w_fast, _, _ = sup_statistic(occ_a, occ_b, w)
        w_brute, _ = brute_force_sup(a, b, w)
        max_sup_gap = max(max_sup_gap, abs(w_fast - w_brute))
        fld = linear_field(occ_a, occ_b, w, 1)
        beta = beta_for(w)
        net = build_network(fld, beta)
        res = max_flow_min_cut(net)
        if not res.is_tree:
            closure_failures += 1
        tree_min = min(float(np.sum(fld.coef[t.membership])) for t in trees)
        max_treemin_gap = max(max_treemin_gap, abs(res.hamiltonian_value - tree_min))
        if i < 30:
            hvals, cvals = [], []
            for _ in range(20):
                y = Configuration(space, rng.random(space.node_count) < 0.5)
                from .mincut import penalty

                h = float(np.sum(fld.coef[y.membership])) + beta * penalty(y)
                hvals.append(h)
                cvals.append(cut_capacity(net, y))
            base_h, base_c = hvals[0], cvals[0]
            for h, c in zip(hvals[1:], cvals[1:]):
                max_affine_gap = max(max_affine_gap, abs((c - base_c) - (h - base_h)))
    ok = (
        max_sup_gap <= 1e-9
        and max_treemin_gap <= 1e-9
        and max_affine_gap <= 1e-9
        and closure_failures == 0
    )
    return {
        "instances": instances,
        "max_sup_gap": max_sup_gap,
        "max_treemin_gap": max_treemin_gap,
        "max_affine_gap": max_affine_gap,
        "closure_failures": closure_failures,
        "ok": ok,
    }


def cut_capacity(net: FlowNetwork, y: Configuration) -> float:
    """Literal capacity of the cut induced by a configuration.

    Sums every positive-capacity edge that leads from the source side
    (absent nodes plus the source) to the sink side (present nodes plus
    the sink).
    """
    rows = y.membership[net.nodes]
    total = float(net.source_cap[rows].sum())
    total += float(net.sink_cap[~rows].sum())
    child = net.row_parent >= 0
    orphan = rows & child & ~np.where(child, rows[net.row_parent], True)
    total += net.beta * int(orphan.sum())
    return total
