"""Label space, codec, distances and file round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import treegof as tg
from treegof.errors import DataError, SuffixClosureError


def random_tree(space, rng, density=0.4):
    return tg.Tree(space, space.suffix_closure(rng.random(space.node_count) < density))


class TestCodec:
    def test_node_count_binary(self):
        assert tg.TreeSpace.binary(2).node_count == 7
        assert tg.TreeSpace.binary(3).node_count == 15
        assert tg.TreeSpace.binary(8).node_count == 511

    def test_root_is_index_zero(self):
        sp = tg.TreeSpace.binary(3)
        assert sp.index("") == 0
        assert sp.label(0) == ""

    def test_depth_then_lex_order(self):
        sp = tg.TreeSpace.binary(2)
        labels = [sp.label(v) for v in range(sp.node_count)]
        assert labels == ["", "1", "2", "11", "12", "21", "22"]

    def test_example_index(self):
        assert tg.TreeSpace.binary(2).index("12") == 4

    def test_label_index_roundtrip(self):
        sp = tg.TreeSpace(("a", "b", "c"), 3)
        for v in range(sp.node_count):
            assert sp.index(sp.label(v)) == v

    def test_parent_drops_first_symbol(self):
        sp = tg.TreeSpace.binary(3)
        for v in range(1, sp.node_count):
            lab = sp.label(v)
            assert sp.label(sp.parent_of(v)) == lab[1:]

    def test_parent_index_below_child(self):
        sp = tg.TreeSpace(("x", "y", "z"), 4)
        assert np.all(sp.parents[1:] < np.arange(1, sp.node_count))

    def test_child_inverts_parent(self):
        sp = tg.TreeSpace.binary(3)
        for v in range(sp.offsets[3]):
            for a in range(2):
                assert sp.parent_of(sp.child(v, a)) == v

    def test_multichar_tokens_use_commas(self):
        sp = tg.TreeSpace(("aa", "bb"), 2)
        v = sp.index("aa,bb")
        assert sp.label(v) == "aa,bb"

    def test_bad_inputs(self):
        sp = tg.TreeSpace.binary(2)
        with pytest.raises(DataError):
            sp.index("3")
        with pytest.raises(DataError):
            sp.index("111")
        with pytest.raises(DataError):
            tg.TreeSpace(("1",), 2)
        with pytest.raises(DataError):
            tg.TreeSpace(("1", "1"), 2)


class TestMembership:
    def test_tree_rejects_orphan(self):
        sp = tg.TreeSpace.binary(2)
        mem = np.zeros(sp.node_count, dtype=bool)
        mem[sp.index("11")] = True
        with pytest.raises(SuffixClosureError):
            tg.Tree(sp, mem)
        assert not tg.is_tree(tg.Configuration(sp, mem))

    def test_suffix_closure_adds_ancestors(self):
        sp = tg.TreeSpace.binary(3)
        mem = np.zeros(sp.node_count, dtype=bool)
        mem[sp.index("121")] = True
        closed = sp.suffix_closure(mem)
        got = {sp.label(v) for v in np.nonzero(closed)[0]}
        assert got == {"", "1", "21", "121"}

    def test_empty_tree_is_valid(self):
        sp = tg.TreeSpace.binary(2)
        t = tg.Tree(sp, np.zeros(sp.node_count, dtype=bool))
        assert t.size() == 0 and tg.is_tree(t)

    def test_from_labels_duplicate(self):
        sp = tg.TreeSpace.binary(2)
        with pytest.raises(DataError):
            tg.Tree.from_labels(sp, ["", "1", "1"])


class TestWeights:
    def test_phi_is_theta_pow_depth(self):
        sp = tg.TreeSpace.binary(3)
        w = tg.WeightFunction(sp, 0.35)
        assert np.allclose(w.phi, 0.35 ** sp.depths)

    def test_phi_total_matches_sum(self):
        for m, L, theta in [(2, 3, 0.35), (3, 2, 0.5), (2, 8, 0.49)]:
            sp = tg.TreeSpace(tuple(str(i) for i in range(m)), L)
            w = tg.WeightFunction(sp, theta)
            assert w.phi_total == pytest.approx(float(w.phi.sum()), abs=1e-12)

    def test_theta_range(self):
        sp = tg.TreeSpace.binary(2)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(DataError):
                tg.WeightFunction(sp, bad)


class TestDistance:
    def test_example_distance(self):
        sp = tg.TreeSpace.binary(2)
        w = tg.WeightFunction(sp, 0.5)
        t = tg.Tree.from_labels(sp, ["", "1", "2", "11"])
        u = tg.Tree.from_labels(sp, ["", "2"])
        assert tg.distance(t, u, w) == pytest.approx(0.75, abs=1e-12)

    def test_mean_distance_matches_direct_average(self):
        rng = np.random.default_rng(5)
        sp = tg.TreeSpace.binary(3)
        w = tg.WeightFunction(sp, 0.35)
        for _ in range(100):
            t = random_tree(sp, rng)
            sample = tg.TreeSample(sp, [random_tree(sp, rng) for _ in range(7)])
            direct = np.mean([tg.distance(t, u, w) for u in sample])
            assert tg.mean_distance(t, sample, w) == pytest.approx(direct, abs=1e-12)

    def test_mean_occupancy(self):
        sp = tg.TreeSpace.binary(1)
        a = tg.TreeSample(
            sp,
            [
                tg.Tree.from_labels(sp, ["", "1"]),
                tg.Tree.from_labels(sp, ["", "2"]),
            ],
        )
        occ = tg.mean_occupancy(a)
        assert np.allclose(occ.values, [1.0, 0.5, 0.5])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**15 - 1), st.integers(0, 2**15 - 1), st.integers(0, 2**15 - 1))
    def test_metric_axioms(self, x, y, z):
        sp = tg.TreeSpace.binary(3)
        w = tg.WeightFunction(sp, 0.35)

        def tree(bits):
            mem = (bits >> np.arange(sp.node_count)) & 1
            return tg.Tree(sp, sp.suffix_closure(mem.astype(bool)))

        t, u, v = tree(x), tree(y), tree(z)
        assert tg.distance(t, t, w) == 0.0
        assert tg.distance(t, u, w) == tg.distance(u, t, w)
        assert tg.distance(t, v, w) <= tg.distance(t, u, w) + tg.distance(u, v, w) + 1e-12
        if not np.array_equal(t.membership, u.membership):
            assert tg.distance(t, u, w) > 0.0


class TestFileFormats:
    def test_roundtrip(self):
        rng = np.random.default_rng(11)
        sp = tg.TreeSpace.binary(3)
        sample = tg.TreeSample(sp, [random_tree(sp, rng) for _ in range(12)])
        text = tg.serialize_tree_lines(sample)
        back = tg.parse_tree_lines(text)
        assert back.space == sp
        assert np.array_equal(back.matrix, sample.matrix)

    def test_orphan_rejected_then_closed(self):
        sp = tg.TreeSpace.binary(2)
        text = '{"nodes": ["11"]}'
        with pytest.raises(DataError):
            tg.parse_tree_lines(text, space=sp)
        sample = tg.parse_tree_lines(text, space=sp, on_violation="close")
        assert sample.trees[0].labels() == ["", "1", "11"]

    def test_header_declares_space(self):
        text = '{"space": {"m": 2, "L": 1}}\n{"nodes": ["", "2"]}\n'
        sample = tg.parse_tree_lines(text)
        assert sample.space == tg.TreeSpace.binary(1)

    def test_missing_space_is_error(self):
        with pytest.raises(DataError):
            tg.parse_tree_lines('{"nodes": []}')

    def test_bad_json_reports_line(self):
        sp = tg.TreeSpace.binary(1)
        with pytest.raises(DataError, match="line 2"):
            tg.parse_tree_lines('{"nodes": []}\nnot json\n', space=sp)

    def test_read_sequences_skips_headers(self):
        seqs = tg.read_sequences(">rec1\nACD\n\n>rec2\nWY\n")
        assert seqs == ["ACD", "WY"]
