import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from carleson_lab.cz import shadow_intervals
from carleson_lab.dyadic import GridFunction
from carleson_lab.kernel import (KernelConfig, TileOperator, apply_scale, apply_tile, apply_tileset,
                                 apply_tileset_adjoint, eta_profile, psi, scale_adjoint, scale_apply,
                                 scale_offsets, truncated_kernel)
from carleson_lab.tiles import LinearizingFunction, Tile, TileFamily, TileSet


def random_instance(K, seed, complex_f=True):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(1 << K)
    if complex_f:
        f = f + 1j * rng.standard_normal(1 << K)
    return GridFunction(K, f), LinearizingFunction(K, rng.integers(0, 1 << K, 1 << K))


class TestProfile:
    def test_values(self):
        assert eta_profile(3.0) == 1.0
        assert eta_profile(8.0) == 0.0
        assert eta_profile(6.0) == pytest.approx(0.5, abs=1e-15)

    def test_monotone_between_plateaus(self):
        y = np.linspace(4, 8, 401)
        assert np.all(np.diff(eta_profile(y)) <= 0)

    @given(st.floats(0, 20))
    def test_matches_oracle(self, y):
        assert eta_profile(y) == pytest.approx(oracles.eta(y), abs=1e-15)


class TestPsi:
    def test_values(self):
        assert psi(3.0) == pytest.approx(1 / 6)
        assert psi(1.0) == 0.0
        assert psi(-3.0) == pytest.approx(-1 / 6)

    @given(st.floats(-2, 2), st.integers(0, 8))
    def test_odd_and_supported(self, y, k):
        assert psi(-y, k) == -psi(y, k)
        a = abs(y) * 2.0 ** k
        if a <= 2 or a >= 8:
            assert psi(y, k) == 0.0

    @given(st.floats(-1, 1).filter(lambda y: y != 0), st.integers(0, 8))
    def test_matches_oracle(self, y, k):
        assert psi(y, k) == pytest.approx(oracles.psi(y, k), rel=1e-12, abs=1e-12)

    def test_scaling(self):
        y = np.linspace(0.01, 0.9, 50)
        assert np.allclose(psi(y, 3), 8 * psi(8 * y, 0))


class TestTruncatedKernel:
    @pytest.mark.parametrize("y, want", [(0.25, 4.0), (1 / 16, 16.0), (-0.125, -8.0)])
    def test_hilbert_region(self, y, want):
        assert truncated_kernel(y, KernelConfig(30, 0, 25)) == pytest.approx(want, rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            truncated_kernel(0.0, KernelConfig(8))

    def test_vanishes_near_origin(self):
        cfg = KernelConfig(10, 3, 7)
        assert truncated_kernel(2.0 ** -10, cfg) == 0.0


class TestScaleOperator:
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_coarse_scales_vanish(self, k):
        f, N = random_instance(6, 0)
        assert not np.any(scale_apply(f.values, N.values, 6, k))

    def test_delta_response(self):
        K, k = 8, 4
        delta = GridFunction(K, np.eye(1, 1 << K, 0)[0])
        out = apply_scale(delta, np.zeros(1 << K, dtype=int), k, KernelConfig(K)).values
        x = np.arange(1 << K)
        y = np.where(x > (1 << K) // 2, x - (1 << K), x) / (1 << K)
        assert np.allclose(out, 2.0 ** -K * psi(y, k), rtol=0, atol=1e-15)

    def test_offsets_avoid_origin(self):
        d, w = scale_offsets(10, 4)
        assert np.all(np.abs(d) > 2 * 2 ** 6) and np.all(np.abs(d) < 8 * 2 ** 6)
        assert np.all(w != 0)

    @pytest.mark.parametrize("K, k", [(6, 3), (7, 4), (8, 3)])
    def test_matches_dense_oracle(self, K, k):
        f, N = random_instance(K, K + k)
        A = oracles.scale_matrix(K, k, N.values)
        assert np.max(np.abs(scale_apply(f.values, N.values, K, k) - A @ f.values)) <= 1e-12

    def test_sparse_path_equals_dense_path(self):
        K = 9
        _, N = random_instance(K, 1)
        v = np.zeros(1 << K, dtype=complex)
        v[[3, 100, 511]] = [1.0, -2.5j, 0.75]
        fast = scale_apply(v, N.values, K, 4)
        slow = scale_apply(v, N.values, K, 4, points=np.arange(1 << K))
        assert np.array_equal(fast, slow)

    def test_adjoint_matches_dense(self):
        K, k = 7, 3
        g, N = random_instance(K, 5)
        A = oracles.scale_matrix(K, k, N.values)
        assert np.max(np.abs(scale_adjoint(g.values, N.values, K, k) - A.conj().T @ g.values)) <= 1e-12

    def test_scale_outside_config(self):
        f, N = random_instance(8, 0)
        with pytest.raises(ValueError):
            apply_scale(f, N, 6, KernelConfig(8))


class TestTileOperators:
    def test_tiles_of_one_scale_sum_to_scale_operator(self):
        K, k = 8, 4
        f, N = random_instance(K, 2)
        fam = TileFamily(K, k, k)
        total = sum(apply_tile(f, N, P).values for P in fam.all())
        assert np.max(np.abs(total - apply_scale(f, N, k).values)) <= 1e-12

    def test_full_family_is_truncated_operator(self):
        K = 8
        f, N = random_instance(K, 3)
        fam = TileFamily(K, 3, 5)
        op = TileOperator(fam, N)
        want = sum(apply_scale(f, N, k).values for k in fam.scales)
        assert np.max(np.abs(op.full(op.responses(f)) - want)) <= 1e-12
        assert np.max(np.abs(apply_tileset(f, N, fam.all()).values - want)) <= 1e-12

    def test_tile_output_lives_on_e_set(self):
        K = 8
        f, N = random_instance(K, 4)
        P = Tile(4, 3, 5)
        out = apply_tile(f, N, P).values
        inside = np.zeros(1 << K, dtype=bool)
        inside[oracles.e_cells((4, 3, 5), N.values)] = True
        assert not np.any(out[~inside])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_tileset_matches_dense_oracle(self, seed):
        K = 6
        f, N = random_instance(K, seed)
        fam = TileFamily(K, 3, 3)
        rng = np.random.default_rng(seed)
        S = TileSet.from_mask(fam, rng.random(fam.size) < 0.4)
        members = {(P.k, P.j, P.m) for P in S}
        A = oracles.tile_matrix(K, fam.scales, N.values, members)
        assert np.max(np.abs(apply_tileset(f, N, S).values - A @ f.values)) <= 1e-12

    def test_labels_partition_the_operator(self):
        K = 8
        f, N = random_instance(K, 6)
        fam = TileFamily(K, 3, 5)
        op = TileOperator(fam, N)
        labels = np.random.default_rng(0).integers(0, 3, fam.size)
        resp = op.responses(f)
        rows = op.apply_labels(labels, 3, resp)
        for lab in range(3):
            S = TileSet.from_mask(fam, labels == lab)
            assert np.max(np.abs(rows[lab] - op.apply(S, resp))) <= 1e-12
        lab, x, vals = op.label_values(labels, resp)
        dense = np.zeros_like(rows)
        dense[lab, x] = vals
        assert np.max(np.abs(dense - rows)) <= 1e-12

    def test_adjoint_support_in_shadow(self):
        K = 10
        g, N = random_instance(K, 7)
        fam = TileFamily(K, 3, 7)
        for P in [Tile(3, 0, 5), Tile(5, 17, 2), Tile(7, 127, 0)]:
            S = TileSet.from_tiles(fam, [P])
            out = apply_tileset_adjoint(g, N, S).values
            allowed = np.zeros(1 << K, dtype=bool)
            for I in shadow_intervals(P):
                allowed[I.cells(K)] = True
            assert len(shadow_intervals(P)) == 14
            assert not np.any(out[~allowed])

    def test_adjoint_pairing(self):
        K = 7
        f, N = random_instance(K, 8)
        g, _ = random_instance(K, 9)
        fam = TileFamily(K, 3, 4)
        S = TileSet.from_mask(fam, np.arange(fam.size) % 3 == 0)
        lhs = oracles.pairing(apply_tileset(f, N, S).values, g.values)
        rhs = oracles.pairing(f.values, apply_tileset_adjoint(g, N, S).values)
        assert abs(lhs - rhs) <= 1e-12

    def test_empty_set_is_zero(self):
        f, N = random_instance(6, 0)
        assert apply_tileset(f, N, TileSet(TileFamily(6, 3, 3))).is_zero()

    def test_tile_scale_outside_kernel(self):
        f, N = random_instance(8, 0)
        with pytest.raises(ValueError):
            apply_tile(f, N, Tile(1, 0, 0))
