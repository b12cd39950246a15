"""Exact minimization of linear-plus-orphan-penalty objectives over trees.

The sup statistic over the tree space reduces to two minimizations of a
Hamiltonian ``H(y) = sum_v coef(v) y(v) + beta * orphans(y)`` over arbitrary
0/1 configurations; for ``beta`` above the total node weight every minimizer
is suffix-closed, and the minimization is solved exactly as a minimum s-t cut
on a small flow network (source feeds positive coefficients, negative
coefficients drain to the sink, parent->child edges carry capacity beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SolverError, SpaceMismatchError
from .space import (
    Configuration,
    OccupancyVector,
    Tree,
    TreeSpace,
    WeightFunction,
    _check_shared_space,
)

#: Residual capacities below this are treated as saturated.
RESIDUAL_EPS = 1e-12


# ---------------------------------------------------------------------------
# max-flow kernels
# ---------------------------------------------------------------------------

def _dinic_kernel(nv, s, t, ptr, adj, eto, cap, eps):
    """Shortest-augmenting-path max flow (BFS layering + blocking flow).

    Mutates ``cap`` into the residual capacities and returns the flow value.
    """
    level = np.empty(nv, np.int64)
    it = np.empty(nv, np.int64)
    queue = np.empty(nv, np.int64)
    path = np.empty(nv, np.int64)
    total = 0.0
    while True:
        for i in range(nv):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            for pi in range(ptr[u], ptr[u + 1]):
                e = adj[pi]
                v = eto[e]
                if cap[e] > eps and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            return total
        for i in range(nv):
            it[i] = ptr[i]
        u = s
        depth = 0
        while True:
            if u == t:
                f = 1e300
                for i in range(depth):
                    e = path[i]
                    if cap[e] < f:
                        f = cap[e]
                for i in range(depth):
                    e = path[i]
                    cap[e] -= f
                    cap[e ^ 1] += f
                total += f
                u = s
                depth = 0
                continue
            pi = it[u]
            found = np.int64(-1)
            while pi < ptr[u + 1]:
                e = adj[pi]
                if cap[e] > eps and level[eto[e]] == level[u] + 1:
                    found = e
                    break
                pi += 1
            it[u] = pi
            if found < 0:
                if u == s:
                    break
                level[u] = -1
                depth -= 1
                pe = path[depth]
                u = eto[pe ^ 1]
                it[u] += 1
            else:
                path[depth] = found
                depth += 1
                u = eto[found]


def _reachable_kernel(nv, s, ptr, adj, eto, cap, eps):
    """Nodes reachable from ``s`` through residual capacity > eps."""
    seen = np.zeros(nv, np.bool_)
    queue = np.empty(nv, np.int64)
    seen[s] = True
    queue[0] = s
    qh, qt = 0, 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for pi in range(ptr[u], ptr[u + 1]):
            e = adj[pi]
            v = eto[e]
            if cap[e] > eps and not seen[v]:
                seen[v] = True
                queue[qt] = v
                qt += 1
    return seen


try:  # compiled kernels when numba is present; plain Python otherwise
    from numba import njit

    _dinic_kernel = njit(cache=True)(_dinic_kernel)
    _reachable_kernel = njit(cache=True)(_reachable_kernel)
except ImportError:  # pragma: no cover
    pass


def _push_relabel(nv, s, t, ptr, adj, eto, cap, eps):
    """FIFO push-relabel max flow; reference backend for cross-checks."""
    height = [0] * nv
    height[s] = nv
    excess = [0.0] * nv
    for pi in range(ptr[s], ptr[s + 1]):
        e = adj[pi]
        if cap[e] > eps:
            f = cap[e]
            cap[e] = 0.0
            cap[e ^ 1] += f
            excess[eto[e]] += f
    from collections import deque

    queued = [False] * nv
    active = deque()
    for v in range(nv):
        if v not in (s, t) and excess[v] > eps:
            active.append(v)
            queued[v] = True
    cursor = [int(p) for p in ptr[:-1]]
    while active:
        u = active.popleft()
        queued[u] = False
        while excess[u] > eps:
            if cursor[u] >= ptr[u + 1]:
                min_h = None
                for pi in range(ptr[u], ptr[u + 1]):
                    e = adj[pi]
                    if cap[e] > eps:
                        h = height[eto[e]]
                        if min_h is None or h < min_h:
                            min_h = h
                if min_h is None:
                    break
                height[u] = min_h + 1
                cursor[u] = int(ptr[u])
                continue
            e = adj[cursor[u]]
            v = eto[e]
            if cap[e] > eps and height[u] == height[v] + 1:
                f = min(excess[u], cap[e])
                cap[e] -= f
                cap[e ^ 1] += f
                excess[u] -= f
                excess[v] += f
                if v not in (s, t) and not queued[v]:
                    active.append(v)
                    queued[v] = True
            else:
                cursor[u] += 1
    return excess[t]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearField:
    """Per-node linear coefficients of the objective over configurations."""

    space: TreeSpace
    coef: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=np.float64)
        if c.shape != (self.space.node_count,):
            raise DataError("coefficient length does not match node count")
        object.__setattr__(self, "coef", c)


def linear_field(
    occ_a: OccupancyVector,
    occ_b: OccupancyVector,
    w: WeightFunction,
    sign: int = 1,
) -> LinearField:
    """Weighted occupancy difference field: sign * phi * (occ_b - occ_a)."""
    space = _check_shared_space(occ_a, occ_b, w)
    if sign not in (1, -1):
        raise DataError("sign must be +1 or -1")
    return LinearField(space, sign * w.phi * (occ_b.values - occ_a.values))


def penalty(y: Configuration) -> int:
    """Number of orphan nodes: present nodes whose parent is absent."""
    space = y.space
    if space.node_count == 1:
        return 0
    mem = y.membership
    return int(np.count_nonzero(mem[1:] & ~mem[space.parents[1:]]))


def beta_for(w: WeightFunction, nodes: np.ndarray | None = None) -> float:
    """Penalty weight strictly above the total node weight of the working set."""
    if nodes is None:
        return w.phi_total + 1.0
    return float(w.phi[np.asarray(nodes, dtype=np.int64)].sum()) + 1.0


class FlowNetwork:
    """Source/sink-augmented capacity graph for one Hamiltonian instance.

    ``nodes`` is the (suffix-closed, index-sorted) working subset of the
    space; rows 0..k-1 of the network are those nodes, row k is the source
    and row k+1 the sink.
    """

    def __init__(self, field: LinearField, beta: float, nodes: np.ndarray | None = None):
        if beta < 0:
            raise DataError("beta must be nonnegative")
        space = field.space
        if nodes is None:
            nodes = np.arange(space.node_count, dtype=np.int64)
        else:
            nodes = np.asarray(nodes, dtype=np.int64)
            nodes = np.sort(nodes)
            mask = np.zeros(space.node_count, dtype=bool)
            mask[nodes] = True
            if not space.is_suffix_closed(mask):
                raise DataError("working node set must be suffix-closed")
        self.space = space
        self.field = field
        self.beta = float(beta)
        self.nodes = nodes
        k = len(nodes)
        coef = field.coef[nodes]
        self.coef_w = coef
        self.source_cap = np.maximum(coef, 0.0)
        self.sink_cap = np.maximum(-coef, 0.0)
        # parent row per working row; -1 for the root row
        pos = np.full(space.node_count, -1, dtype=np.int64)
        pos[nodes] = np.arange(k, dtype=np.int64)
        row_parent = np.full(k, -1, dtype=np.int64)
        nonroot = nodes != 0
        row_parent[nonroot] = pos[space.parents[nodes[nonroot]]]
        self.row_parent = row_parent
        self._build_edges()
        self.residual: np.ndarray | None = None
        self.flow_value: float | None = None

    def _build_edges(self):
        k = len(self.nodes)
        s, b = k, k + 1
        self.s, self.b = s, b
        src_rows = np.nonzero(self.source_cap > 0)[0]
        snk_rows = np.nonzero(self.sink_cap > 0)[0]
        child_rows = np.nonzero(self.row_parent >= 0)[0]
        us = np.concatenate(
            [
                np.full(len(src_rows), s, dtype=np.int64),
                snk_rows,
                self.row_parent[child_rows],
            ]
        )
        vs = np.concatenate(
            [src_rows, np.full(len(snk_rows), b, dtype=np.int64), child_rows]
        )
        caps = np.concatenate(
            [
                self.source_cap[src_rows],
                self.sink_cap[snk_rows],
                np.full(len(child_rows), self.beta, dtype=np.float64),
            ]
        )
        ne = len(us)
        eto = np.empty(2 * ne, dtype=np.int64)
        cap = np.zeros(2 * ne, dtype=np.float64)
        esrc = np.empty(2 * ne, dtype=np.int64)
        eto[0::2] = vs
        eto[1::2] = us
        esrc[0::2] = us
        esrc[1::2] = vs
        cap[0::2] = caps
        order = np.argsort(esrc, kind="stable").astype(np.int64)
        ptr = np.zeros(k + 3, dtype=np.int64)
        np.cumsum(np.bincount(esrc, minlength=k + 2), out=ptr[1:])
        self.eto = eto
        self.cap0 = cap
        self.adj = order
        self.ptr = ptr

    def dump_edges(self) -> str:
        """Debug dump: one 'u v capacity' line per positive-capacity edge,
        full-space node indices, source -1 and sink -2."""

        def name(row):
            if row == self.s:
                return -1
            if row == self.b:
                return -2
            return int(self.nodes[row])

        lines = []
        for e in range(0, len(self.eto), 2):
            if self.cap0[e] > 0:
                u = name(int(self.eto[e ^ 1]))
                v = name(int(self.eto[e]))
                lines.append(f"{u} {v} {self.cap0[e]!r}")
        return "\n".join(lines) + "\n"


@dataclass
class CutResult:
    minimizer: Configuration
    hamiltonian_value: float
    flow_value: float
    is_tree: bool


def build_network(
    f: LinearField, beta: float, nodes: np.ndarray | None = None
) -> FlowNetwork:
    return FlowNetwork(f, beta, nodes)


def _min_cut_rows(net: FlowNetwork, method: str = "bfs"):
    """Solve one network: returns (rows-in-minimizer bool array, flow value)."""
    nv = len(net.nodes) + 2
    cap = net.cap0.copy()
    if len(net.eto) == 0:
        net.residual = cap
        net.flow_value = 0.0
        return np.zeros(len(net.nodes), dtype=bool), 0.0
    if method == "bfs":
        flow = _dinic_kernel(nv, net.s, net.b, net.ptr, net.adj, net.eto, cap, RESIDUAL_EPS)
    elif method == "push_relabel":
        flow = _push_relabel(nv, net.s, net.b, net.ptr, net.adj, net.eto, cap, RESIDUAL_EPS)
    else:
        raise DataError(f"unknown max-flow method {method!r}")
    seen = np.asarray(
        _reachable_kernel(nv, net.s, net.ptr, net.adj, net.eto, cap, RESIDUAL_EPS)
    )
    net.residual = cap
    net.flow_value = float(flow)
    return ~seen[: len(net.nodes)], float(flow)


def max_flow_min_cut(net: FlowNetwork, method: str = "bfs") -> CutResult:
    """Exact max flow; the minimizer is the set of working nodes that are
    unreachable from the source in the final residual graph."""
    rows, flow = _min_cut_rows(net, method)
    value = float(net.coef_w[rows].sum())
    orphans = int(
        np.count_nonzero(rows & (net.row_parent >= 0) & ~_parent_state(rows, net))
    )
    value += net.beta * orphans
    # the flow must equal the capacity of the produced cut
    cut = float(net.source_cap[rows].sum() + net.sink_cap[~rows].sum()) + net.beta * orphans
    if abs(cut - flow) > 1e-9:
        raise SolverError(
            f"flow {flow!r} does not match cut capacity {cut!r}"
        )
    mem = np.zeros(net.space.node_count, dtype=bool)
    mem[net.nodes[rows]] = True
    minimizer = Configuration(net.space, mem)
    return CutResult(minimizer, value, flow, net.space.is_suffix_closed(mem))


def _parent_state(rows: np.ndarray, net: FlowNetwork) -> np.ndarray:
    state = np.zeros(len(rows), dtype=bool)
    has_parent = net.row_parent >= 0
    state[has_parent] = rows[net.row_parent[has_parent]]
    # root rows report True so they are never counted as orphans
    state[~has_parent] = True
    return state


def minimize_over_trees(
    f: LinearField,
    w: WeightFunction,
    nodes: np.ndarray | None = None,
    method: str = "bfs",
) -> tuple[Tree, float]:
    """Minimize the linear objective over all suffix-closed node sets."""
    beta = beta_for(w, nodes)
    net = build_network(f, beta, nodes)
    res = max_flow_min_cut(net, method)
    if not res.is_tree:
        raise SolverError("min-cut minimizer is not suffix-closed")
    tree = Tree(f.space, res.minimizer.membership)
    return tree, res.hamiltonian_value


def _working_nodes(occ_a: OccupancyVector, occ_b: OccupancyVector) -> np.ndarray:
    space = occ_a.space
    mask = occ_a.support() | occ_b.support()
    if not space.is_suffix_closed(mask):
        mask = space.suffix_closure(mask)
    return np.nonzero(mask)[0].astype(np.int64)


def sup_statistic(
    occ_a: OccupancyVector,
    occ_b: OccupancyVector,
    w: WeightFunction,
    prune: bool = True,
    method: str = "bfs",
) -> tuple[float, Tree, int]:
    """Supremum over trees of the absolute mean-distance difference.

    Returns ``(W, achiever, side)`` where ``side`` is +1 when the supremum is
    attained by making the difference as positive as possible and -1 for the
    negative side.  Nodes outside the joint occupancy support carry zero
    coefficient and are pruned away by default; this leaves the value
    unchanged.
    """
    space = _check_shared_space(occ_a, occ_b, w)
    delta = occ_a.values - occ_b.values
    const = float(np.sum(w.phi * delta))
    nodes = _working_nodes(occ_a, occ_b) if prune else None
    fld = LinearField(space, -w.phi * delta)
    t_min, l_min = minimize_over_trees(fld, w, nodes, method)
    neg = LinearField(space, w.phi * delta)
    t_max, neg_min = minimize_over_trees(neg, w, nodes, method)
    l_max = -neg_min
    w_neg = abs(const + 2.0 * l_min)
    w_pos = abs(const + 2.0 * l_max)
    if w_pos >= w_neg:
        return w_pos, t_max, 1
    return w_neg, t_min, -1


def scaled_statistic(W: float, n: int, m: int) -> float:
    """Sample-size scaling sqrt(n*m/(n+m)) applied to the raw statistic."""
    if n < 1 or m < 1:
        raise DataError("sample sizes must be >= 1")
    return float(np.sqrt(n * m / (n + m)) * W)


# ---------------------------------------------------------------------------
# fast path used by the permutation / Monte-Carlo loops
# ---------------------------------------------------------------------------

class SupSolver:
    """Reusable sup-statistic evaluator over a fixed pruned working set.

    Occupancy vectors passed to :meth:`value` are given in working
    coordinates (one entry per node of ``nodes``); occupancies outside the
    working set must be zero for both samples.
    """

    def __init__(self, space: TreeSpace, w: WeightFunction, nodes: np.ndarray):
        nodes = np.sort(np.asarray(nodes, dtype=np.int64))
        mask = np.zeros(space.node_count, dtype=bool)
        mask[nodes] = True
        if not space.is_suffix_closed(mask):
            raise DataError("working node set must be suffix-closed")
        self.space = space
        self.w = w
        self.nodes = nodes
        self.phi_w = w.phi[nodes]
        self.beta = float(self.phi_w.sum()) + 1.0
        k = len(nodes)
        pos = np.full(space.node_count, -1, dtype=np.int64)
        pos[nodes] = np.arange(k, dtype=np.int64)
        row_parent = np.full(k, -1, dtype=np.int64)
        nonroot = nodes != 0
        row_parent[nonroot] = pos[space.parents[nodes[nonroot]]]
        self.row_parent = row_parent
        self._child_rows = np.nonzero(row_parent >= 0)[0].astype(np.int64)
        self._parent_of_child = row_parent[self._child_rows]

    def _min_value(self, coef_w: np.ndarray) -> float:
        k = len(self.nodes)
        if k == 0:
            return 0.0
        s, b = k, k + 1
        src_rows = np.nonzero(coef_w > 0)[0]
        snk_rows = np.nonzero(coef_w < 0)[0]
        us = np.concatenate(
            [np.full(len(src_rows), s, dtype=np.int64), snk_rows, self._parent_of_child]
        )
        vs = np.concatenate(
            [src_rows, np.full(len(snk_rows), b, dtype=np.int64), self._child_rows]
        )
        caps = np.concatenate(
            [
                coef_w[src_rows],
                -coef_w[snk_rows],
                np.full(len(self._child_rows), self.beta, dtype=np.float64),
            ]
        )
        ne = len(us)
        if ne == 0:
            return 0.0
        eto = np.empty(2 * ne, dtype=np.int64)
        cap = np.zeros(2 * ne, dtype=np.float64)
        esrc = np.empty(2 * ne, dtype=np.int64)
        eto[0::2] = vs
        eto[1::2] = us
        esrc[0::2] = us
        esrc[1::2] = vs
        cap[0::2] = caps
        adj = np.argsort(esrc, kind="stable").astype(np.int64)
        ptr = np.zeros(k + 3, dtype=np.int64)
        np.cumsum(np.bincount(esrc, minlength=k + 2), out=ptr[1:])
        _dinic_kernel(k + 2, s, b, ptr, adj, eto, cap, RESIDUAL_EPS)
        seen = np.asarray(_reachable_kernel(k + 2, s, ptr, adj, eto, cap, RESIDUAL_EPS))
        rows = ~seen[:k]
        return float(coef_w[rows].sum())

    def value(self, occ_a_w: np.ndarray, occ_b_w: np.ndarray) -> float:
        """W for two working-coordinate occupancy vectors."""
        delta = self.phi_w * (occ_a_w - occ_b_w)
        const = float(delta.sum())
        l_min = self._min_value(-delta)
        l_max = -self._min_value(delta)
        return max(abs(const + 2.0 * l_min), abs(const + 2.0 * l_max))
