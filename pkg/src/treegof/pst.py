"""Context-tree estimation from symbol sequences.

A node (a candidate context, written oldest symbol first) enters the
estimated tree when its empirical next-symbol law differs from that of its
drop-first-symbol parent by a log-ratio of at least log(r) for some symbol;
the result is closed under suffixes so that it is a valid tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DataError, UndefinedContextError
from .space import Tree, TreeSpace


@dataclass(frozen=True)
class PstParams:
    L: int
    r: float
    n_min: int = 1

    def __post_init__(self):
        if self.L < 1:
            raise DataError("max depth L must be >= 1")
        if not self.r > 1.0:
            raise DataError("threshold r must be > 1")
        if self.n_min < 1:
            raise DataError("n_min must be >= 1")


class SequenceCorpus:
    """One or more symbol sequences over a shared alphabet."""

    def __init__(self, tokens, sequences):
        self.tokens = tuple(str(t) for t in tokens)
        if len(self.tokens) < 2 or len(set(self.tokens)) != len(self.tokens):
            raise DataError("alphabet must contain >= 2 distinct tokens")
        self._index = {t: i for i, t in enumerate(self.tokens)}
        single = all(len(t) == 1 for t in self.tokens)
        encoded = []
        for seq in sequences:
            if isinstance(seq, str):
                parts = tuple(seq) if single else tuple(s for s in seq.split(",") if s)
            else:
                parts = tuple(seq)
            try:
                encoded.append(
                    np.array([self._index[p] for p in parts], dtype=np.int64)
                )
            except KeyError as e:
                raise DataError(f"symbol {e.args[0]!r} not in the alphabet") from None
        self.sequences = encoded

    @property
    def m(self) -> int:
        return len(self.tokens)

    @property
    def total_length(self) -> int:
        return sum(len(s) for s in self.sequences)

    def tokenize(self, label: str) -> tuple[int, ...]:
        single = all(len(t) == 1 for t in self.tokens)
        parts = tuple(label) if single else tuple(s for s in label.split(",") if s)
        try:
            return tuple(self._index[p] for p in parts)
        except KeyError as e:
            raise DataError(f"symbol {e.args[0]!r} not in the alphabet") from None


class CountTable:
    """Window counts per length: table[j][rank] is the number of positions
    where the length-j window with that rank occurs (windows never span two
    sequences)."""

    def __init__(self, m: int, tables: list[np.ndarray], tokens):
        self.m = m
        self.tables = tables  # tables[j] has m**j entries; tables[0] = [total]
        self.tokens = tuple(tokens)
        self.maxlen = len(tables) - 1

    def count(self, label) -> int:
        digits = self._digits(label)
        j = len(digits)
        if j > self.maxlen:
            raise DataError(f"no counts recorded for windows of length {j}")
        rank = 0
        for d in digits:
            rank = rank * self.m + d
        return int(self.tables[j][rank])

    def _digits(self, label) -> tuple[int, ...]:
        if isinstance(label, str):
            single = all(len(t) == 1 for t in self.tokens)
            parts = tuple(label) if single else tuple(s for s in label.split(",") if s)
            idx = {t: i for i, t in enumerate(self.tokens)}
            try:
                return tuple(idx[p] for p in parts)
            except KeyError as e:
                raise DataError(f"symbol {e.args[0]!r} not in the alphabet") from None
        return tuple(int(d) for d in label)


def count_windows(corpus: SequenceCorpus, maxlen: int) -> CountTable:
    """Sliding-window counts for every window length up to ``maxlen``."""
    if maxlen < 1:
        raise DataError("maxlen must be >= 1")
    m = corpus.m
    tables = [np.array([corpus.total_length], dtype=np.int64)]
    for j in range(1, maxlen + 1):
        counts = np.zeros(m**j, dtype=np.int64)
        weights = m ** np.arange(j - 1, -1, -1, dtype=np.int64)
        for seq in corpus.sequences:
            if len(seq) < j:
                continue
            codes = np.lib.stride_tricks.sliding_window_view(seq, j) @ weights
            counts += np.bincount(codes, minlength=m**j)
        tables.append(counts)
    return CountTable(m, tables, corpus.tokens)


def transition_estimate(tbl: CountTable, ctx, a) -> float:
    """Empirical probability that symbol ``a`` follows window ``ctx``."""
    digits = tbl._digits(ctx)
    j = len(digits)
    if j + 1 > tbl.maxlen:
        raise DataError("count table is too shallow for this context")
    rank = 0
    for d in digits:
        rank = rank * tbl.m + d
    if isinstance(a, int):
        sym = a
    else:
        digits_a = tbl._digits(a)
        if len(digits_a) != 1:
            raise DataError("expected a single symbol")
        sym = digits_a[0]
    if not 0 <= sym < tbl.m:
        raise DataError(f"symbol index {sym} out of range")
    row = tbl.tables[j + 1][rank * tbl.m : (rank + 1) * tbl.m]
    denom = int(row.sum())
    if denom == 0:
        raise UndefinedContextError(f"context {ctx!r} never occurs with a successor")
    return float(row[sym]) / denom


def estimate_context_tree(corpus: SequenceCorpus, params: PstParams) -> Tree:
    """Estimated context tree of the corpus.

    A depth-j candidate needs at least ``n_min`` occurrences and some symbol
    whose empirical successor probability differs from the parent context's
    by a factor of at least ``r`` (a probability that is zero on exactly one
    side counts as an infinite ratio).  Suffixes of retained nodes are added
    to close the tree; the root is always present.
    """
    if corpus.total_length == 0:
        raise DataError("cannot estimate a context tree from an empty corpus")
    m = corpus.m
    L = params.L
    space = TreeSpace(corpus.tokens, L)
    tbl = count_windows(corpus, L + 1)
    log_r = np.log(params.r)
    mem = np.zeros(space.node_count, dtype=bool)
    mem[0] = True

    # successor matrices per depth; row rank -> distribution over symbols
    probs: list[np.ndarray | None] = []
    denoms: list[np.ndarray] = []
    for j in range(L + 1):
        mat = tbl.tables[j + 1].reshape(m**j, m).astype(np.float64)
        den = mat.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = mat / den[:, None]
        probs.append(p)
        denoms.append(den)

    for j in range(1, L + 1):
        counts = tbl.tables[j]
        ranks = np.arange(m**j, dtype=np.int64)
        parent_rank = ranks % m ** (j - 1)
        child_p = probs[j]
        parent_p = probs[j - 1][parent_rank]
        valid = (counts >= params.n_min) & (denoms[j] > 0) & (denoms[j - 1][parent_rank] > 0)
        cp = child_p
        pp = parent_p
        both_zero = (cp == 0) & (pp == 0)
        one_zero = (cp == 0) ^ (pp == 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.abs(np.log(cp) - np.log(pp))
        ratio = np.where(both_zero, 0.0, ratio)
        ratio = np.where(one_zero, np.inf, ratio)
        met = np.any(ratio >= log_r, axis=1)
        include = valid & met
        mem[space.offsets[j] + ranks[include]] = True

    mem = space.suffix_closure(mem)
    return Tree(space, mem)
