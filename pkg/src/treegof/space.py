"""Label space, tree membership, node weights and sample statistics.

The working universe is the truncated full m-ary tree: every string of at
most ``L`` symbols over a fixed token alphabet.  Nodes are indexed densely,
ordered by depth and then lexicographically in token order, with the root
(the empty string) at index 0.  The parent of a node is obtained by dropping
the *first* (oldest) symbol of its label, so a parent label is a suffix of
each of its children's labels.
"""

from __future__ import annotations

from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, SpaceMismatchError, SuffixClosureError

#: Hard bound on dense membership vectors; larger spaces must be pruned first.
MAX_DENSE_NODES = 1 << 22


class TreeSpace:
    """The set of all labels of length <= L over ``tokens``.

    Parameters
    ----------
    tokens : sequence of str
        The m >= 2 distinct symbols, in the order that defines the
        lexicographic node ordering.
    L : int
        Maximal label length (depth of the truncated space).
    """

    def __init__(self, tokens: Sequence[str], L: int):
        tokens = tuple(str(t) for t in tokens)
        if len(tokens) < 2:
            raise DataError("alphabet must contain at least 2 tokens")
        if len(set(tokens)) != len(tokens):
            raise DataError("alphabet tokens must be distinct")
        if any(not t for t in tokens):
            raise DataError("alphabet tokens must be nonempty strings")
        if L < 0:
            raise DataError("max depth L must be >= 0")
        m = len(tokens)
        count = sum(m**j for j in range(L + 1))
        if count > MAX_DENSE_NODES:
            raise DataError(
                f"space has {count} nodes, beyond the dense bound {MAX_DENSE_NODES}"
            )
        self.tokens = tokens
        self.L = int(L)
        self.m = m
        self.node_count = count
        # offsets[j] = index of the first node at depth j
        self.offsets = np.concatenate(
            ([0], np.cumsum([m**j for j in range(L + 1)]))
        ).astype(np.int64)
        self._token_index = {t: i for i, t in enumerate(tokens)}
        self._single_char = all(len(t) == 1 for t in tokens)

    # -- identity ---------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, TreeSpace)
            and self.tokens == other.tokens
            and self.L == other.L
        )

    def __hash__(self):
        return hash((self.tokens, self.L))

    def __repr__(self):
        return f"TreeSpace(tokens={self.tokens!r}, L={self.L})"

    @classmethod
    def binary(cls, L: int) -> "TreeSpace":
        return cls(("1", "2"), L)

    # -- per-node arrays --------------------------------------------------

    @cached_property
    def depths(self) -> np.ndarray:
        """Label length per node index."""
        d = np.empty(self.node_count, dtype=np.int64)
        for j in range(self.L + 1):
            d[self.offsets[j] : self.offsets[j + 1]] = j
        d.setflags(write=False)
        return d

    @cached_property
    def parents(self) -> np.ndarray:
        """Parent index per node; -1 for the root."""
        m = self.m
        p = np.empty(self.node_count, dtype=np.int64)
        p[0] = -1
        for j in range(1, self.L + 1):
            ranks = np.arange(m**j, dtype=np.int64)
            p[self.offsets[j] : self.offsets[j + 1]] = (
                self.offsets[j - 1] + ranks % m ** (j - 1)
            )
        p.setflags(write=False)
        return p

    # -- node codec -------------------------------------------------------

    def tokenize(self, label: str) -> tuple[str, ...]:
        """Split a textual label into tokens (root is the empty string)."""
        if label == "":
            return ()
        if self._single_char:
            parts = tuple(label)
        else:
            parts = tuple(label.split(","))
        for t in parts:
            if t not in self._token_index:
                raise DataError(f"unknown symbol {t!r} in label {label!r}")
        return parts

    def index(self, label) -> int:
        """Index of a label given as a string or a sequence of tokens."""
        parts = self.tokenize(label) if isinstance(label, str) else tuple(label)
        j = len(parts)
        if j > self.L:
            raise DataError(f"label of length {j} exceeds max depth {self.L}")
        rank = 0
        for t in parts:
            try:
                rank = rank * self.m + self._token_index[t]
            except KeyError:
                raise DataError(f"unknown symbol {t!r}") from None
        return int(self.offsets[j] + rank)

    def label(self, v: int) -> str:
        """Textual label of node index ``v``."""
        if not 0 <= v < self.node_count:
            raise DataError(f"node index {v} out of range")
        j = int(np.searchsorted(self.offsets, v, side="right")) - 1
        rank = v - int(self.offsets[j])
        digits = []
        for _ in range(j):
            digits.append(rank % self.m)
            rank //= self.m
        parts = [self.tokens[d] for d in reversed(digits)]
        return ("" if self._single_char else ",").join(parts)

    def depth_of(self, v: int) -> int:
        return int(self.depths[v])

    def parent_of(self, v: int) -> int:
        """Index of the drop-first-symbol parent; error on the root."""
        if v == 0:
            raise DataError("the root has no parent")
        return int(self.parents[v])

    def child(self, v: int, a: int) -> int:
        """Index of the child of ``v`` obtained by prepending token ``a``."""
        j = self.depth_of(v)
        if j >= self.L:
            raise DataError("node at max depth has no children in the space")
        if not 0 <= a < self.m:
            raise DataError(f"token index {a} out of range")
        rank = v - int(self.offsets[j])
        return int(self.offsets[j + 1] + a * self.m**j + rank)

    # -- membership helpers ----------------------------------------------

    def is_suffix_closed(self, membership: np.ndarray) -> bool:
        if self.node_count == 1:
            return True
        mem = membership
        return not bool(np.any(mem[1:] & ~mem[self.parents[1:]]))

    def suffix_closure(self, membership: np.ndarray) -> np.ndarray:
        """Smallest suffix-closed superset of a membership vector."""
        mem = membership.copy()
        for j in range(self.L, 0, -1):
            lo, hi = self.offsets[j], self.offsets[j + 1]
            np.logical_or.at(mem, self.parents[lo:hi], mem[lo:hi])
        return mem


def _as_membership(space: TreeSpace, membership) -> np.ndarray:
    mem = np.asarray(membership, dtype=bool)
    if mem.shape != (space.node_count,):
        raise DataError(
            f"membership length {mem.shape} does not match node count "
            f"{space.node_count}"
        )
    return mem


class Configuration:
    """An arbitrary subset of the label space (no closure requirement)."""

    def __init__(self, space: TreeSpace, membership):
        self.space = space
        mem = _as_membership(space, membership).copy()
        mem.setflags(write=False)
        self.membership = mem

    @classmethod
    def from_labels(cls, space: TreeSpace, labels: Iterable[str]):
        mem = np.zeros(space.node_count, dtype=bool)
        for lab in labels:
            v = space.index(lab)
            if mem[v]:
                raise DataError(f"duplicate node {lab!r}")
            mem[v] = True
        return cls(space, mem)

    def node_indices(self) -> np.ndarray:
        return np.nonzero(self.membership)[0]

    def labels(self) -> list[str]:
        return [self.space.label(int(v)) for v in self.node_indices()]

    def size(self) -> int:
        return int(self.membership.sum())

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.space == other.space
            and bool(np.array_equal(self.membership, other.membership))
        )

    def __hash__(self):
        return hash((self.space, self.membership.tobytes()))

    def __repr__(self):
        names = ", ".join(repr(l) for l in self.labels())
        return f"{type(self).__name__}({{{names}}})"


class Tree(Configuration):
    """A suffix-closed configuration: every node's parent is also present."""

    def __init__(self, space: TreeSpace, membership):
        super().__init__(space, membership)
        if not space.is_suffix_closed(self.membership):
            raise SuffixClosureError("node set is not suffix-closed")


def is_tree(y: Configuration) -> bool:
    """True iff the configuration is suffix-closed (the empty set counts)."""
    return y.space.is_suffix_closed(y.membership)


class WeightFunction:
    """Geometric node weights: weight theta**depth, theta in (0, 1)."""

    def __init__(self, space: TreeSpace, theta: float):
        if not 0.0 < theta < 1.0:
            raise DataError("theta must lie strictly between 0 and 1")
        self.space = space
        self.theta = float(theta)

    @cached_property
    def phi(self) -> np.ndarray:
        w = self.theta ** self.space.depths.astype(np.float64)
        w.setflags(write=False)
        return w

    @property
    def phi_total(self) -> float:
        """Closed form of the total weight: sum over depths of m^j theta^j."""
        x = self.space.m * self.theta
        return float(sum(x**j for j in range(self.space.L + 1)))


class TreeSample:
    """An ordered list of trees over a common space."""

    def __init__(self, space: TreeSpace, trees: Sequence[Tree]):
        for t in trees:
            if t.space != space:
                raise SpaceMismatchError("sample trees must share one space")
        self.space = space
        self.trees = list(trees)

    def __len__(self):
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense (n, node_count) boolean membership matrix."""
        if not self.trees:
            return np.zeros((0, self.space.node_count), dtype=bool)
        mat = np.stack([t.membership for t in self.trees])
        mat.setflags(write=False)
        return mat

    @classmethod
    def from_matrix(cls, space: TreeSpace, matrix: np.ndarray) -> "TreeSample":
        return cls(space, [Tree(space, row) for row in np.asarray(matrix, bool)])


class OccupancyVector:
    """Per-node occupation probabilities in [0, 1]."""

    def __init__(self, space: TreeSpace, values):
        vals = np.asarray(values, dtype=np.float64).copy()
        if vals.shape != (space.node_count,):
            raise DataError("occupancy length does not match node count")
        if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
            raise DataError("occupancy values must lie in [0, 1]")
        np.clip(vals, 0.0, 1.0, out=vals)
        vals.setflags(write=False)
        self.space = space
        self.values = vals

    def support(self) -> np.ndarray:
        return self.values > 0.0


def mean_occupancy(sample: TreeSample) -> OccupancyVector:
    """Fraction of sample trees containing each node."""
    if len(sample) == 0:
        raise DataError("mean occupancy of an empty sample is undefined")
    return OccupancyVector(sample.space, sample.matrix.mean(axis=0))


def _check_shared_space(*objs):
    s0 = objs[0].space
    for o in objs[1:]:
        if o.space != s0:
            raise SpaceMismatchError("objects live in different tree spaces")
    return s0


def distance(t: Configuration, u: Configuration, w: WeightFunction) -> float:
    """Weighted size of the symmetric difference of two node sets."""
    _check_shared_space(t, u, w)
    return float(w.phi[t.membership ^ u.membership].sum())


def mean_distance(t: Tree, sample: TreeSample, w: WeightFunction) -> float:
    """Average distance from ``t`` to the trees of a sample.

    Evaluated through the sample occupancy vector; identical (to rounding)
    to averaging ``distance(t, t_i, w)`` directly.
    """
    if len(sample) == 0:
        raise DataError("mean distance to an empty sample is undefined")
    _check_shared_space(t, sample, w)
    occ = sample.matrix.mean(axis=0)
    tm = t.membership.astype(np.float64)
    return float(np.sum(w.phi * (occ - 2.0 * occ * tm + tm)))
