"""Chain simulation, branching samplers, marginals and law reconstruction."""

import numpy as np
import pytest

import treegof as tg
from treegof.errors import DataError
from treegof.genmodels import model_from_dict
from treegof.oracle import enumerate_trees


class TestVlmc:
    def test_depth3_chain_transition_frequencies(self):
        spec = tg.depth3_binary_chain(0.8)
        seq = tg.simulate_vlmc(spec, 200000, seed=1)
        x = np.frombuffer(seq.encode(), dtype=np.uint8) - ord("0")
        # empirical P(next=1 | last three = 111) should be close to alpha
        for ctx, expect in (((1, 1, 1), 0.8), ((2, 2, 2), 0.2), ((1, 2, 1), 0.5)):
            hits = (
                (x[:-3] == ctx[0]) & (x[1:-2] == ctx[1]) & (x[2:-1] == ctx[2])
            )
            nxt = x[3:][hits]
            freq = np.mean(nxt == 1)
            se = np.sqrt(expect * (1 - expect) / len(nxt))
            assert abs(freq - expect) < 4 * se + 1e-9

    def test_deterministic_given_seed(self):
        spec = tg.depth3_binary_chain(0.6)
        assert tg.simulate_vlmc(spec, 500, seed=3) == tg.simulate_vlmc(spec, 500, seed=3)
        assert tg.simulate_vlmc(spec, 500, seed=3) != tg.simulate_vlmc(spec, 500, seed=4)

    def test_uncovered_context_needs_default(self):
        with pytest.raises(DataError):
            tg.VlmcSpec(tokens=("1", "2"), contexts={"11": (0.5, 0.5)}, default=None)

    def test_full_cover_without_default(self):
        spec = tg.VlmcSpec(
            tokens=("1", "2"),
            contexts={"1": (0.9, 0.1), "2": (0.2, 0.8)},
            default=None,
        )
        seq = tg.simulate_vlmc(spec, 1000, seed=0)
        assert set(seq) <= {"1", "2"}


class TestGwSamplers:
    def test_p_zero_and_one(self):
        sp = tg.TreeSpace.binary(3)
        ones = tg.sample_gw_matrix(tg.GwSpec("binomial", p=1.0, L=3), 5, seed=0)
        assert ones.all()
        zeros = tg.sample_gw_matrix(tg.GwSpec("binomial", p=0.0, L=3), 5, seed=0)
        assert zeros[:, 1:].sum() == 0 and zeros[:, 0].all()

    def test_rows_are_trees(self):
        for spec in (
            tg.GwSpec("binomial", p=0.6, L=4),
            tg.GwSpec("pseudo", p=0.5, L=4),
            tg.GwSpec("mixture", q=0.3, p1=0.8, p2=0.2, L=4),
        ):
            mat = tg.sample_gw_matrix(spec, 50, seed=9)
            sp = spec.space()
            for row in mat:
                assert sp.is_suffix_closed(row)

    def test_binomial_marginals_monte_carlo(self):
        spec = tg.GwSpec("binomial", p=0.6, L=3)
        sp = spec.space()
        mat = tg.sample_gw_matrix(spec, 40000, seed=13)
        mu = tg.gw_marginals(spec)
        emp = mat.mean(axis=0)
        se = np.sqrt(mu.values * (1 - mu.values) / 40000)
        assert np.all(np.abs(emp - mu.values) <= 4 * se + 1e-9)

    def test_mixture_marginals_monte_carlo(self):
        spec = tg.GwSpec("mixture", q=0.5, p1=0.9, p2=0.3, L=3)
        mat = tg.sample_gw_matrix(spec, 40000, seed=14)
        mu = tg.gw_marginals(spec)
        emp = mat.mean(axis=0)
        se = np.sqrt(mu.values * (1 - mu.values) / 40000) + 1e-9
        assert np.all(np.abs(emp - mu.values) <= 4.5 * se)

    def test_mixture_marginals_frozen(self):
        # depth-1 nodes carry the mixed Binomial(2, .) count tails:
        # P(N>=1) = 1 - [q(1-p1)^2 + (1-q)(1-p2)^2], P(N>=2) = q p1^2 + (1-q) p2^2
        spec = tg.GwSpec("mixture", q=0.5, p1=0.45, p2=0.5, L=2)
        sp = spec.space()
        mu = tg.gw_marginals(spec)
        assert mu.values[0] == 1.0
        assert mu.values[sp.index("1")] == pytest.approx(0.72375)
        assert mu.values[sp.index("2")] == pytest.approx(0.22625)
        assert mu.values[sp.index("12")] == pytest.approx(0.22625 * 0.72375)

    def test_pseudo_marginals(self):
        sp = tg.TreeSpace.binary(1)
        mu = tg.pseudo_gw_marginals(0.5, sp)
        assert np.allclose(mu.values, [0.5, 0.25, 0.25])
        sp3 = tg.TreeSpace.binary(3)
        mu3 = tg.pseudo_gw_marginals(0.5, sp3)
        assert mu3.values[sp3.index("11")] == pytest.approx(0.125)
        spec = tg.GwSpec("pseudo", p=0.5, L=3)
        assert np.allclose(tg.gw_marginals(spec).values, mu3.values)

    def test_classical_marginals_frozen(self):
        sp = tg.TreeSpace.binary(2)
        mu = tg.classical_gw_marginals([0.25, 0.5, 0.25], sp)
        assert mu.values[0] == 1.0
        assert mu.values[sp.index("1")] == pytest.approx(0.75)
        assert mu.values[sp.index("2")] == pytest.approx(0.25)

    def test_classical_marginals_vs_direct_enumeration(self):
        # direct two-level expansion: P(node) from the offspring law with
        # eldest-first slot filling
        sp = tg.TreeSpace.binary(2)
        probs = np.array([0.2, 0.5, 0.3])
        mu = tg.classical_gw_marginals(probs, sp)
        p1 = probs[1] + probs[2]  # at least one child
        p2 = probs[2]  # at least two children
        assert mu.values[sp.index("1")] == pytest.approx(p1)
        assert mu.values[sp.index("2")] == pytest.approx(p2)
        assert mu.values[sp.index("11")] == pytest.approx(p1 * p1)
        assert mu.values[sp.index("12")] == pytest.approx(p2 * p1)
        assert mu.values[sp.index("21")] == pytest.approx(p1 * p2)
        assert mu.values[sp.index("22")] == pytest.approx(p2 * p2)


class TestExpectedDistance:
    def test_matches_monte_carlo(self):
        spec = tg.GwSpec("binomial", p=0.55, L=3)
        sp = spec.space()
        w = tg.WeightFunction(sp, 0.35)
        mu = tg.gw_marginals(spec)
        t = tg.Tree.from_labels(sp, ["", "1", "11"])
        mat = tg.sample_gw_matrix(spec, 30000, seed=21)
        dists = [
            tg.distance(t, tg.Tree(sp, row), w) for row in mat[:2000]
        ]
        sample_mean = np.mean(dists)
        exact = tg.expected_distance(t, mu, w)
        assert abs(exact - sample_mean) < 4 * np.std(dists) / np.sqrt(len(dists))

    def test_law_mean_distance_agrees(self):
        from treegof.genmodels import law_marginals, law_mean_distance

        pi, _ = tg.non_identifiability_pair()
        sp = next(iter(pi)).space
        w = tg.WeightFunction(sp, 0.5)
        mu = law_marginals(pi)
        for t in enumerate_trees(sp):
            assert tg.expected_distance(t, mu, w) == pytest.approx(
                law_mean_distance(pi, t, w), abs=1e-12
            )


class TestShifts:
    def test_father_shift(self):
        sp = tg.TreeSpace.binary(2)
        f = tg.father_shift(sp)
        assert f(sp.index("12")) == sp.index("2")
        assert f(sp.index("1")) == 0

    def test_eldest_brother_shift(self):
        sp = tg.TreeSpace.binary(2)
        f = tg.eldest_brother_shift(sp)
        # eldest child drops to the father, younger brothers step down one
        assert f(sp.index("1")) == sp.index("")
        assert f(sp.index("2")) == sp.index("1")
        assert f(sp.index("12")) == sp.index("2")
        assert f(sp.index("22")) == sp.index("12")

    def test_iterates_reach_root(self):
        for variant in ("father", "eldest-brother"):
            sp = tg.TreeSpace.binary(3)
            f = tg.TreeShift(sp, variant)
            for v in range(1, sp.node_count):
                u, steps = v, 0
                while u != 0:
                    u = f(u)
                    steps += 1
                    assert steps <= sp.node_count

    def test_markov_conditional_frozen(self):
        sp = tg.TreeSpace.binary(2)
        mu = tg.classical_gw_marginals([0.25, 0.5, 0.25], sp)
        f = tg.eldest_brother_shift(sp)
        assert tg.markov_conditional(mu, f, sp.index("2")) == pytest.approx(1 / 3)


class TestReconstruction:
    def test_frozen_depth1_values(self):
        sp = tg.TreeSpace.binary(1)
        mu = tg.pseudo_gw_marginals(0.5, sp)
        law = tg.reconstruct_distribution(mu, tg.father_shift(sp), 3)
        by_labels = {tuple(t.labels()): p for t, p in law.items()}
        assert by_labels[()] == pytest.approx(0.5)
        assert by_labels[("",)] == pytest.approx(0.125)
        assert by_labels[("", "1")] == pytest.approx(0.125)
        assert by_labels[("", "1", "2")] == pytest.approx(0.125)

    def test_probabilities_sum_to_one(self):
        sp = tg.TreeSpace.binary(1)
        mu = tg.pseudo_gw_marginals(0.4, sp)
        law = tg.reconstruct_distribution(mu, tg.father_shift(sp), sp.node_count)
        assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)

    def test_matches_pseudo_sampler_frequencies(self):
        spec = tg.GwSpec("pseudo", p=0.5, L=2)
        sp = spec.space()
        mu = tg.gw_marginals(spec)
        law = tg.reconstruct_distribution(mu, tg.father_shift(sp), sp.node_count)
        n = 200000
        mat = tg.sample_gw_matrix(spec, n, seed=33)
        keys, counts = np.unique(mat, axis=0, return_counts=True)
        freq = {k.tobytes(): c / n for k, c in zip(keys, counts)}
        for t, p in law.items():
            if p < 1e-4:
                continue
            emp = freq.get(t.membership.tobytes(), 0.0)
            se = np.sqrt(p * (1 - p) / n)
            assert abs(emp - p) <= 4 * se + 1e-9

    def test_non_shift_closed_sets_have_zero_mass(self):
        sp = tg.TreeSpace.binary(1)
        mu = tg.pseudo_gw_marginals(0.5, sp)
        f = tg.eldest_brother_shift(sp)
        law = tg.reconstruct_distribution(mu, f, sp.node_count)
        # {root, "2"} is not closed under the elder-brother map
        bad = tg.Tree.from_labels(sp, ["", "2"])
        assert law[bad] == 0.0


class TestNonIdentifiability:
    def test_identical_marginals_and_distances(self):
        from treegof.genmodels import law_marginals, law_mean_distance

        pi, pi_prime = tg.non_identifiability_pair()
        sp = next(iter(pi)).space
        w = tg.WeightFunction(sp, 0.5)
        assert sum(pi.values()) == pytest.approx(1.0)
        assert sum(pi_prime.values()) == pytest.approx(1.0)
        assert np.allclose(law_marginals(pi).values, law_marginals(pi_prime).values)
        for t in enumerate_trees(sp):
            assert law_mean_distance(pi, t, w) == pytest.approx(
                law_mean_distance(pi_prime, t, w), abs=1e-12
            )
        # yet the laws differ
        diff = any(
            abs(pi[t] - pi_prime.get(t, 0.0)) > 1e-9 for t in pi
        )
        assert diff


class TestModelSpecs:
    def test_roundtrip_branching(self):
        spec = model_from_dict({"model": "binomial", "p": 0.5, "L": 8})
        assert isinstance(spec, tg.GwSpec) and spec.p == 0.5 and spec.L == 8

    def test_vlmc_shortcut(self):
        spec = model_from_dict({"model": "vlmc", "alpha": 0.8})
        assert isinstance(spec, tg.VlmcSpec)
        assert spec.contexts["111"] == pytest.approx((0.8, 0.2))

    def test_unknown_kind(self):
        with pytest.raises(DataError):
            model_from_dict({"model": "nope"})
