"""Generative models: memory-bounded chain simulation, branching-process
tree samplers, their analytic node marginals, and the reconstruction of a
tree law from marginals under a shift-Markov structure."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, GuardError
from .rngs import as_rng
from .space import (
    OccupancyVector,
    Tree,
    TreeSpace,
    WeightFunction,
    _check_shared_space,
)

# ---------------------------------------------------------------------------
# variable-memory chain simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VlmcSpec:
    """A variable-memory chain: per-context next-symbol distributions.

    ``contexts`` maps a context label (the most recent symbols, oldest
    first, in the same drop-first-symbol convention as tree nodes) to a
    distribution over the alphabet.  Histories matching no context fall
    back to ``default``; if ``default`` is None the contexts must cover
    every possible history.
    """

    tokens: tuple[str, ...]
    contexts: dict[str, tuple[float, ...]]
    default: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.tokens) < 2:
            raise DataError("alphabet must contain at least 2 tokens")
        for ctx, dist in self.contexts.items():
            _check_dist(dist, len(self.tokens), f"context {ctx!r}")
        if self.default is not None:
            _check_dist(self.default, len(self.tokens), "default distribution")
        if self.default is None and not self._covers_all():
            raise DataError("contexts do not cover all histories and no default given")

    def max_context_len(self) -> int:
        return max((len(_tokenize(self.tokens, c)) for c in self.contexts), default=0)

    def _covers_all(self) -> bool:
        L = self.max_context_len()
        if L == 0:
            return False
        suffixes = {_tokenize(self.tokens, c) for c in self.contexts}
        for hist in itertools.product(range(len(self.tokens)), repeat=L):
            labels = [tuple(self.tokens[i] for i in hist[k:]) for k in range(L)]
            if not any(tuple(lab) in suffixes for lab in labels):
                return False
        return True


def _tokenize(tokens, label: str):
    if label == "":
        return ()
    if all(len(t) == 1 for t in tokens):
        parts = tuple(label)
    else:
        parts = tuple(label.split(","))
    if any(p not in tokens for p in parts):
        raise DataError(f"unknown symbol in context {label!r}")
    return parts


def _check_dist(dist, m, what):
    d = np.asarray(dist, dtype=np.float64)
    if d.shape != (m,):
        raise DataError(f"{what}: distribution must have {m} entries")
    if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-9:
        raise DataError(f"{what}: probabilities must be nonnegative and sum to 1")


def simulate_vlmc(
    spec: VlmcSpec, length: int, seed=None, burn_in: int = 1000
) -> str:
    """Simulate ``length`` symbols from the chain.

    The initial history is i.i.d. uniform over the alphabet, followed by a
    burn-in whose output is discarded, as a stationarity approximation.
    """
    if length < 1:
        raise DataError("length must be >= 1")
    rng = as_rng(seed)
    m = len(spec.tokens)
    order = spec.max_context_len()
    ctx_by_digits = {
        _digits(spec.tokens, c): np.cumsum(np.asarray(d, np.float64))
        for c, d in spec.contexts.items()
    }
    default = (
        None if spec.default is None else np.cumsum(np.asarray(spec.default, np.float64))
    )
    cache: dict[tuple, np.ndarray] = {}

    def dist_for(hist: tuple) -> np.ndarray:
        # longest matching context: drop oldest symbols one at a time
        got = cache.get(hist)
        if got is not None:
            return got
        best = None
        for k in range(len(hist) + 1):
            cand = ctx_by_digits.get(hist[k:])
            if cand is not None:
                best = cand
                break
        if best is None:
            if default is None:
                raise DataError("history matches no context and no default given")
            best = default
        cache[hist] = best
        return best

    hist = tuple(int(x) for x in rng.integers(0, m, size=max(order, 1)))
    total = burn_in + length
    us = rng.random(total)
    out = np.empty(total, dtype=np.int64)
    for i in range(total):
        cdf = dist_for(hist)
        sym = int(np.searchsorted(cdf, us[i], side="right"))
        if sym >= m:
            sym = m - 1
        out[i] = sym
        hist = (hist + (sym,))[-order:] if order else ()
    sep = "" if all(len(t) == 1 for t in spec.tokens) else ","
    return sep.join(spec.tokens[s] for s in out[burn_in:])


def _digits(tokens, label: str) -> tuple:
    idx = {t: i for i, t in enumerate(tokens)}
    return tuple(idx[p] for p in _tokenize(tokens, label))


def depth3_binary_chain(alpha: float) -> VlmcSpec:
    """Binary chain whose next symbol depends on up to three past symbols:
    histories ending 111 or 122 emit "1" with probability alpha, histories
    ending 211 or 222 with probability 1 - alpha, all others 1/2."""
    if not 0 < alpha < 1:
        raise DataError("alpha must lie in (0, 1)")
    a = float(alpha)
    return VlmcSpec(
        tokens=("1", "2"),
        contexts={
            "111": (a, 1 - a),
            "122": (a, 1 - a),
            "211": (1 - a, a),
            "222": (1 - a, a),
        },
        default=(0.5, 0.5),
    )


# ---------------------------------------------------------------------------
# branching-process tree samplers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GwSpec:
    """Slot-based branching tree law on the truncated space.

    variant "binomial": each of the m child slots of a present node is
    independently filled with probability p (root present with probability
    ``root_prob``, default 1).
    variant "mixture": each present node first draws a regime (p1 with
    probability q, else p2), then an offspring count ~ Binomial(m, regime);
    the children fill the lowest slots first.
    variant "pseudo": slots filled with probability p and the root itself
    present with probability p unless ``root_prob`` overrides it.
    """

    variant: str
    p: float | None = None
    q: float | None = None
    p1: float | None = None
    p2: float | None = None
    m: int = 2
    L: int = 8
    root_prob: float | None = None

    def __post_init__(self):
        if self.variant not in ("binomial", "mixture", "pseudo"):
            raise DataError(f"unknown model variant {self.variant!r}")
        if self.variant == "mixture":
            for name in ("q", "p1", "p2"):
                v = getattr(self, name)
                if v is None or not 0 <= v <= 1:
                    raise DataError(f"mixture model needs {name} in [0, 1]")
        else:
            if self.p is None or not 0 <= self.p <= 1:
                raise DataError(f"{self.variant} model needs p in [0, 1]")
        rp = self.resolved_root_prob()
        if not 0 <= rp <= 1:
            raise DataError("root_prob must lie in [0, 1]")

    def resolved_root_prob(self) -> float:
        if self.root_prob is not None:
            return float(self.root_prob)
        return float(self.p) if self.variant == "pseudo" else 1.0

    def space(self, tokens=None) -> TreeSpace:
        if tokens is None:
            tokens = tuple(str(i + 1) for i in range(self.m))
        return TreeSpace(tokens, self.L)

    def describe(self) -> str:
        if self.variant == "mixture":
            return f"mixture(q={self.q},p1={self.p1},p2={self.p2})"
        return f"{self.variant}(p={self.p})"


def sample_gw_matrix(
    spec: GwSpec, count: int, seed=None, space: TreeSpace | None = None
) -> np.ndarray:
    """Dense (count, node_count) membership matrix of i.i.d. sampled trees."""
    rng = as_rng(seed)
    if space is None:
        space = spec.space()
    if space.m != spec.m or space.L != spec.L:
        raise DataError("space shape does not match the model spec")
    m, L = space.m, space.L
    mem = np.zeros((count, space.node_count), dtype=bool)
    mem[:, 0] = rng.random(count) < spec.resolved_root_prob()
    for j in range(L):
        lo, hi = int(space.offsets[j]), int(space.offsets[j + 1])
        width = hi - lo
        parents = mem[:, lo:hi]
        if spec.variant == "mixture":
            regime = np.where(
                rng.random((count, width)) < spec.q, spec.p1, spec.p2
            )
            counts = rng.binomial(m, regime)
            slots = np.arange(m)[None, :, None]
            children = (counts[:, None, :] > slots) & parents[:, None, :]
        else:
            draws = rng.random((count, m, width)) < float(spec.p)
            children = draws & parents[:, None, :]
        mem[:, hi : hi + m * width] = children.reshape(count, m * width)
    return mem


def sample_gw_tree(spec: GwSpec, seed=None, space: TreeSpace | None = None) -> Tree:
    if space is None:
        space = spec.space()
    return Tree(space, sample_gw_matrix(spec, 1, seed, space)[0])


class GwSampler:
    """Adapter exposing a model as the matrix sampler used by inference."""

    def __init__(self, spec: GwSpec, space: TreeSpace | None = None):
        self.spec = spec
        self.space = space if space is not None else spec.space()

    def sample_matrix(self, n: int, rng) -> np.ndarray:
        return sample_gw_matrix(self.spec, n, rng, self.space)

    def describe(self) -> str:
        return self.spec.describe()


# ---------------------------------------------------------------------------
# analytic node marginals
# ---------------------------------------------------------------------------

def gw_marginals(spec: GwSpec, space: TreeSpace | None = None) -> OccupancyVector:
    """Exact per-node presence probability of the slot samplers."""
    if space is None:
        space = spec.space()
    if spec.variant == "mixture":
        pmf = spec.q * _binomial_pmf(space.m, spec.p1) + (1 - spec.q) * _binomial_pmf(
            space.m, spec.p2
        )
        tail = np.cumsum(pmf[::-1])[::-1]
        vals = _eldest_slot_marginals(tail, space, spec.resolved_root_prob())
        return OccupancyVector(space, vals)
    depths = space.depths.astype(np.float64)
    vals = spec.resolved_root_prob() * float(spec.p) ** depths
    return OccupancyVector(space, vals)


def _binomial_pmf(m: int, p: float) -> np.ndarray:
    ks = np.arange(m + 1)
    return np.array(
        [math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in ks]
    )


def _eldest_slot_marginals(tail: np.ndarray, space: TreeSpace, root_prob: float) -> np.ndarray:
    """Node presence probabilities when children fill the lowest slots first:
    slot a of a present node is occupied iff the offspring count is > a, so
    each label symbol contributes a tail probability factor."""
    vals = np.empty(space.node_count, dtype=np.float64)
    vals[0] = root_prob
    for j in range(space.L):
        lo, hi = int(space.offsets[j]), int(space.offsets[j + 1])
        width = hi - lo
        base = vals[lo:hi]
        for a in range(space.m):
            block = hi + a * width
            vals[block : block + width] = tail[a + 1] * base
    return vals


def pseudo_gw_marginals(p: float, space: TreeSpace) -> OccupancyVector:
    """Marginals p^(depth+1): root present with probability p, each slot
    of a present node filled independently with probability p."""
    if not 0 < p < 1:
        raise DataError("p must lie strictly between 0 and 1")
    return OccupancyVector(space, p ** (space.depths.astype(np.float64) + 1.0))


def classical_gw_marginals(probs, space: TreeSpace) -> OccupancyVector:
    """Marginals of the classical branching process with offspring counts
    distributed by ``probs`` (p_0..p_m) and children filling the lowest
    slots first; the root is always present."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (space.m + 1,):
        raise DataError("need m+1 offspring probabilities")
    if p[0] <= 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DataError("offspring probabilities must sum to 1 with p0 > 0")
    tail = np.cumsum(p[::-1])[::-1]  # tail[a] = p_a + ... + p_m
    return OccupancyVector(space, _eldest_slot_marginals(tail, space, 1.0))


def expected_distance(t: Tree, mu: OccupancyVector, w: WeightFunction) -> float:
    """Model-expected distance from ``t`` to a random tree with marginals mu."""
    _check_shared_space(t, mu, w)
    tm = t.membership.astype(np.float64)
    return float(np.sum(w.phi * mu.values * (1.0 - 2.0 * tm)) + np.sum(w.phi * tm))


# ---------------------------------------------------------------------------
# tree shifts and law reconstruction from marginals
# ---------------------------------------------------------------------------

class TreeShift:
    """A map sending each non-root node to its father or an adjacent elder
    brother, with iterates reaching the root."""

    def __init__(self, space: TreeSpace, variant: str):
        if variant not in ("father", "eldest-brother"):
            raise DataError(f"unknown tree-shift variant {variant!r}")
        self.space = space
        self.variant = variant
        f = np.empty(space.node_count, dtype=np.int64)
        f[0] = -1
        if variant == "father":
            f[1:] = space.parents[1:]
        else:
            # eldest child points at the father; younger brothers chain up
            for j in range(1, space.L + 1):
                lo, hi = int(space.offsets[j]), int(space.offsets[j + 1])
                width_prev = int(space.offsets[j] - space.offsets[j - 1])
                ranks = np.arange(hi - lo, dtype=np.int64)
                first_digit = ranks // (space.m ** (j - 1))
                eldest = first_digit == 0
                f[lo:hi][eldest] = space.parents[lo:hi][eldest]
                f[lo:hi][~eldest] = lo + (ranks[~eldest] - space.m ** (j - 1))
        self.map = f

    def __call__(self, v: int) -> int:
        if v == 0:
            raise DataError("the root has no shift image")
        return int(self.map[v])

    def preimages(self, v: int) -> list[int]:
        return [int(x) for x in np.nonzero(self.map == v)[0]]


def father_shift(space: TreeSpace) -> TreeShift:
    return TreeShift(space, "father")


def eldest_brother_shift(space: TreeSpace) -> TreeShift:
    return TreeShift(space, "eldest-brother")


def markov_conditional(mu: OccupancyVector, f: TreeShift, w: int) -> float:
    """Conditional presence probability mu(w)/mu(f(w)) along the shift."""
    if mu.space != f.space:
        raise DataError("shift and marginals live in different spaces")
    if mu.values[w] == 0.0:
        return 0.0
    parent = f(w)
    denom = float(mu.values[parent])
    if denom == 0.0:
        raise DataError("zero shift-parent marginal with a present child")
    ratio = float(mu.values[w]) / denom
    if ratio > 1.0 + 1e-12:
        raise DataError(f"marginal ratio {ratio} exceeds 1")
    return min(ratio, 1.0)


def _trees_up_to(space: TreeSpace, max_nodes: int, limit: int = 200000) -> list[frozenset]:
    """All suffix-closed node sets with at most ``max_nodes`` nodes, grown
    by frontier additions from the root."""
    seen = {frozenset()}
    if max_nodes < 1:
        return sorted(seen, key=lambda s: (len(s), sorted(s)))
    frontier = [frozenset([0])]
    seen.add(frozenset([0]))
    while frontier:
        nxt = []
        for t in frontier:
            if len(t) == max_nodes:
                continue
            for v in t:
                j = space.depth_of(v)
                if j == space.L:
                    continue
                for a in range(space.m):
                    c = space.child(v, a)
                    if c in t:
                        continue
                    grown = t | {c}
                    if grown not in seen:
                        seen.add(grown)
                        nxt.append(grown)
                        if len(seen) > limit:
                            raise GuardError("tree enumeration grew beyond the limit")
        frontier = nxt
    return sorted(seen, key=lambda s: (len(s), sorted(s)))


def reconstruct_distribution(
    mu: OccupancyVector, f: TreeShift, max_nodes: int
) -> dict[Tree, float]:
    """Tree-law probabilities implied by node marginals under the
    shift-Markov structure.

    Given presence along the shift, each node is present independently with
    the conditional ratio mu(v)/mu(f(v)); a node whose shift-image is absent
    is absent.  The probability of observing exactly ``t`` is then the chain
    product of ratios over the nodes of ``t`` times the product of
    complements over its shift-frontier.  Sets that are not closed under the
    shift have probability zero.
    """
    space = mu.space
    if f.space != space:
        raise DataError("shift and marginals live in different spaces")
    ratios = np.zeros(space.node_count, dtype=np.float64)
    for v in range(1, space.node_count):
        ratios[v] = markov_conditional(mu, f, v)
    out: dict[Tree, float] = {}
    for nodes in _trees_up_to(space, max_nodes):
        mem = np.zeros(space.node_count, dtype=bool)
        mem[list(nodes)] = True
        tree = Tree(space, mem)
        if not nodes:
            out[tree] = 1.0 - float(mu.values[0])
            continue
        if any(v != 0 and f(v) not in nodes for v in nodes):
            out[tree] = 0.0
            continue
        prob = float(mu.values[0])
        for v in nodes:
            if v != 0:
                prob *= ratios[v]
        for v in range(1, space.node_count):
            if v not in nodes and f(v) in nodes:
                prob *= 1.0 - ratios[v]
        out[tree] = prob
    return out


# ---------------------------------------------------------------------------
# finite tree laws and the non-identifiability example
# ---------------------------------------------------------------------------

def model_from_dict(d: dict):
    """Build a model spec from its JSON form.

    Branching models: ``{"model": "binomial", "p": 0.5, "L": 8}`` (also
    "pseudo" and "mixture" with q/p1/p2, optional "m" and "root_prob").
    Chains: ``{"model": "vlmc", "tokens": [...], "contexts":
    [{"ctx": "111", "dist": [0.8, 0.2]}, ...], "default": [0.5, 0.5]}``,
    or the shortcut ``{"model": "vlmc", "alpha": 0.8}`` for the built-in
    depth-3 binary chain.
    """
    if not isinstance(d, dict) or "model" not in d:
        raise DataError("model spec must be an object with a 'model' field")
    kind = d["model"]
    if kind in ("binomial", "pseudo", "mixture"):
        kwargs = {k: d[k] for k in ("p", "q", "p1", "p2", "m", "L", "root_prob") if k in d}
        return GwSpec(variant=kind, **kwargs)
    if kind == "vlmc":
        if "alpha" in d and "contexts" not in d:
            return depth3_binary_chain(float(d["alpha"]))
        tokens = tuple(d.get("tokens", ("1", "2")))
        contexts = {c["ctx"]: tuple(c["dist"]) for c in d.get("contexts", [])}
        default = tuple(d["default"]) if d.get("default") is not None else None
        return VlmcSpec(tokens=tokens, contexts=contexts, default=default)
    raise DataError(f"unknown model kind {kind!r}")


def law_marginals(law: dict[Tree, float]) -> OccupancyVector:
    space = next(iter(law)).space
    vals = np.zeros(space.node_count, dtype=np.float64)
    for t, p in law.items():
        vals += p * t.membership
    return OccupancyVector(space, vals)


def law_mean_distance(law: dict[Tree, float], t: Tree, w: WeightFunction) -> float:
    from .space import distance

    return float(sum(p * distance(u, t, w) for u, p in law.items()))


def non_identifiability_pair() -> tuple[dict[Tree, float], dict[Tree, float]]:
    """Two distinct binary depth-1 tree laws with identical node marginals,
    hence identical expected distances to every tree."""
    space = TreeSpace.binary(1)

    def tr(*labels):
        return Tree.from_labels(space, labels)

    empty, root = tr(), tr("")
    left, right, full = tr("", "1"), tr("", "2"), tr("", "1", "2")
    pi = {empty: 0.5, root: 0.125, left: 0.125, right: 0.125, full: 0.125}
    pi_prime = {empty: 0.5, root: 0.25, left: 0.0, right: 0.0, full: 0.25}
    return pi, pi_prime
