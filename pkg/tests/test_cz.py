import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from carleson_lab.cz import (admissible_flags, convexity_violations, cz_decompose, cz_partition, dichotomy_violations,
                             dyadic_exponent, minimal_tiles, modulate, partition_labels, refine_partition,
                             shadow_intervals, shadow_violations, support_excess, tree_projection, tree_shadows)
from carleson_lab.dyadic import DyadicInterval, GridFunction, dyadic_averages, stopping_masks
from carleson_lab.generate import generate_f, generate_N
from carleson_lab.mass import mass_decompose
from carleson_lab.tiles import Tile, TileFamily, TileSet


def tuples(S):
    return sorted((P.k, P.j, P.m) for P in S)


class TestExponent:
    @pytest.mark.parametrize("x, e", [(1.0, -1), (3.0, 1), (0.3, -2), (0.25, -3), (2.0 ** -40, -41)])
    def test_values(self, x, e):
        assert dyadic_exponent(x) == e

    @given(st.floats(1e-300, 1e300))
    def test_bracket(self, x):
        e = dyadic_exponent(x)
        assert 2.0 ** e < x <= 2.0 ** (e + 1)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            dyadic_exponent(0.0)


class TestDecompose:
    def test_constant_function(self):
        fam = TileFamily(6, 1, 4)
        cz = cz_decompose(fam.all(), GridFunction(6, np.ones(64)))
        assert cz.alphas == [1]
        assert len(cz.tiles[1]) == fam.size

    def test_quarter_indicator(self):
        fam = TileFamily(3, 1, 2)
        f = GridFunction.indicator(3, [DyadicInterval(2, 0)])
        cz = cz_decompose(fam.all(), f)
        assert cz.alphas == [1, 2, 3]
        assert np.all(cz.tiles[1].k == 2) and len(cz.tiles[1]) == 8
        assert np.all(cz.tiles[2].k == 1) and len(cz.tiles[2]) == 8
        assert len(cz.tiles[3]) == 0
        assert cz.stopping[1] == [DyadicInterval(2, 0)]

    def test_zero_function_rejected(self):
        with pytest.raises(ValueError):
            cz_decompose(TileFamily(6, 1, 3).all(), GridFunction.zeros(6))

    @pytest.mark.parametrize("seed", range(6))
    def test_properties_on_random_instances(self, seed):
        K = 9
        fam = TileFamily(K, 3, 6)
        f = generate_f("random_step:32,6" if seed % 2 else "levels:2=0.05,4=0.01,6=0.002", K, seed)
        dec = mass_decompose(fam, generate_N("random_piecewise:16", K, seed))
        Mf = oracles.maximal_function(f.values)
        for n in dec.nonempty_levels():
            P_n = dec.levels[n]
            cz = cz_decompose(P_n, f)
            owners = np.zeros(fam.size, dtype=int)
            for a in cz.alphas:
                owners[cz.tiles[a].ids] += 1
            assert np.array_equal(owners > 0, P_n.mask()) and owners.max() <= 1
            assert convexity_violations(P_n, cz) == 0
            for a in cz.alphas:
                assert support_excess(cz, a) == 0.0
                assert dichotomy_violations(cz, a) == 0
                assert shadow_violations(cz, a) == 0
                allowed = oracles.dilated_cells(oracles.cell_runs(Mf > 2.0 ** -a), 100, 1 << K)
                for P in cz.tiles[a]:
                    assert allowed[P.time.cells(K)].all()

    def test_membership_matches_definition(self):
        K = 8
        fam = TileFamily(K, 2, 5)
        f = generate_f("random_step:16,4", K, 3)
        cz = cz_decompose(fam.all(), f)
        avgs = dyadic_averages(f)
        alpha_of = cz.alpha_of()
        for i in range(0, fam.size, 13):
            P = fam.tile(i)
            first = None
            for a in cz.alphas:
                Js = oracles.stopping_intervals(f.values, 2.0 ** -a)
                for s, j in Js:
                    if P.k < s:
                        continue
                    # 51 J at J's scale: indices within cyclic distance 25
                    idx = P.j >> (P.k - s)
                    dist = min((idx - j) % (1 << s), (j - idx) % (1 << s))
                    if dist <= 25:
                        first = a
                        break
                if first is not None:
                    break
            assert alpha_of[i] == first
        assert len(avgs) == K + 1

    def test_admissible_flags_grow_with_scale(self):
        f = generate_f("indicator:0.01", 10, 0)
        masks = stopping_masks(dyadic_averages(f), 0.5)
        flags = admissible_flags(masks, 8)
        for s in range(1, 9):
            assert np.all(flags[s] >= np.repeat(flags[s - 1], 2))

    def test_json(self):
        fam = TileFamily(6, 1, 3)
        cz = cz_decompose(fam.all(), generate_f("indicator:0.25", 6, 0))
        js = cz.to_json()
        assert set(js) == {"N", "M", "tiles", "stopping"}


class TestShadowsAndPartitions:
    def test_shadow_count_and_gaps(self):
        P = Tile(4, 5, 0)
        sh = shadow_intervals(P)
        assert len(sh) == 14
        assert {(I.index - 5) % 16 for I in sh} == set(range(2, 9)) | {16 - r for r in range(2, 9)}

    def test_partition_example(self):
        cells = cz_partition([DyadicInterval(3, 4)])
        assert cells == [DyadicInterval(1, 0), DyadicInterval(3, 4), DyadicInterval(3, 5), DyadicInterval(2, 3)]

    def test_empty_partition(self):
        assert cz_partition([]) == [DyadicInterval(0, 0)]

    @given(st.lists(st.tuples(st.integers(1, 6)).flatmap(
        lambda s: st.tuples(st.just(s[0]), st.integers(0, 2 ** s[0] - 1))), max_size=10))
    def test_partition_properties(self, pairs):
        members = [DyadicInterval(s, i) for s, i in pairs]
        cells = cz_partition(members)
        partition_labels(cells, 7)  # raises unless an exact cover
        for J in cells:
            assert not any(J.contains(I) and J != I for I in members)
            if J.scale:
                parent = J.parent()
                assert any(parent.contains(I) and parent != I for I in members)

    def test_labels_reject_gaps_and_overlaps(self):
        with pytest.raises(ValueError):
            partition_labels([DyadicInterval(1, 0)], 3)
        with pytest.raises(ValueError):
            partition_labels([DyadicInterval(0, 0), DyadicInterval(1, 0)], 3)

    def test_refine(self):
        f = GridFunction.indicator(4, [DyadicInterval(3, 0)])
        avgs = dyadic_averages(f)
        cells, splits = refine_partition([DyadicInterval(0, 0)], avgs, 0.1)
        partition_labels(cells, 4)
        assert splits == 4
        assert all(avgs[I.scale][I.index] < 0.1 or I.scale == 4 for I in cells)
        assert refine_partition([DyadicInterval(0, 0)], avgs, 0.5) == ([DyadicInterval(0, 0)], 0)

    def test_minimal_tiles(self):
        fam = TileFamily(6, 1, 4)
        S = TileSet.from_tiles(fam, [Tile(1, 0, 3), Tile(2, 0, 1), Tile(3, 0, 0), Tile(3, 7, 0)])
        assert tuples(minimal_tiles(S)) == [(3, 0, 0), (3, 7, 0)]
        sh = tree_shadows(S)
        assert len(sh) == len(set(sh)) and len(sh) <= 28


class TestProjection:
    def test_example(self):
        f = GridFunction.indicator(2, [DyadicInterval(2, 0)])
        got = tree_projection(f, None, 0, [DyadicInterval(1, 0), DyadicInterval(1, 1)])
        assert got.values.real.tolist() == [0.5, 0.5, 0.0, 0.0]

    def test_needs_tree_or_partition(self):
        with pytest.raises(ValueError):
            tree_projection(GridFunction.zeros(3), None, 0)

    @settings(max_examples=30)
    @given(st.integers(0, 2 ** 16), st.integers(0, 255))
    def test_projection_preserves_cell_integrals(self, seed, omega):
        K = 8
        f = GridFunction(K, np.random.default_rng(seed).standard_normal(1 << K))
        cells = cz_partition([DyadicInterval(5, seed % 32), DyadicInterval(7, seed % 128)])
        proj = tree_projection(f, None, omega, cells).values
        g = modulate(f, omega)
        for J in cells:
            sl = J.cells(K)
            assert abs(proj[sl].sum() - g[sl].sum()) <= 1e-9
            assert np.ptp(proj[sl].real) <= 1e-12 and np.ptp(proj[sl].imag) <= 1e-12

    def test_modulate(self):
        f = GridFunction(3, np.ones(8))
        assert np.allclose(modulate(f, 2), np.exp(2j * np.pi * 2 * np.arange(8) / 8))
