import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carleson_lab.dyadic import GridFunction
from carleson_lab.spaces import (PROFILES, l_log2_levels, level_pieces, orlicz_modular, orlicz_norm, profile,
                                 qa_upper, soria_norm, soria_norms)

TWO_LEVEL = GridFunction(2, [2.0, 1.0, 0.0, 0.0])


def phi1(s):
    return s * (1 + max(0.0, math.log(1 / s)))


class TestProfiles:
    @pytest.mark.parametrize("name", sorted(PROFILES))
    def test_zero_at_zero_and_monotone(self, name):
        phi = profile(name)
        assert phi(0.0) == 0.0
        t = np.concatenate([np.linspace(0, 2, 201), np.geomspace(2, 1e8, 200)])
        assert np.all(np.diff(phi(t)) >= 0)

    def test_logloglog_stays_nonnegative(self):
        assert np.all(profile("logloglog")(np.linspace(0, 10, 101)) >= 0)

    def test_soria_profile(self):
        assert profile("soria_phi1")(0.25) == pytest.approx(phi1(0.25))
        assert profile("soria_phi1")(3.0) == 3.0

    def test_unknown(self):
        with pytest.raises(ValueError):
            profile("cosh")


class TestOrlicz:
    def test_constant(self):
        assert orlicz_modular(GridFunction(4, np.ones(16))) == pytest.approx(math.log(2))
        assert orlicz_norm(GridFunction(4, np.ones(16))) == pytest.approx(math.log(2))

    def test_zero(self):
        assert orlicz_modular(GridFunction.zeros(3)) == 0.0

    def test_two_level_fixture(self):
        want = 0.25 * (2 * math.log(3) + math.log(2))
        assert orlicz_modular(TWO_LEVEL) == pytest.approx(want, rel=1e-14)
        want_ll = 0.25 * (2 * math.log(3) * math.log(math.log(math.e + 2)) + math.log(2) * math.log(math.log(math.e + 1)))
        assert orlicz_modular(TWO_LEVEL, "loglog") == pytest.approx(want_ll, rel=1e-14)

    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=32, max_size=32), st.randoms())
    def test_rearrangement_invariance(self, vals, rnd):
        f = GridFunction(5, vals)
        perm = list(vals)
        rnd.shuffle(perm)
        g = GridFunction(5, perm)
        assert orlicz_norm(f) == pytest.approx(orlicz_norm(g), rel=1e-12, abs=1e-300)
        assert orlicz_norm(f) == pytest.approx(orlicz_modular(f), rel=1e-12, abs=1e-300)


class TestSoria:
    @pytest.mark.parametrize("cells", [1, 3, 8, 16])
    def test_indicator(self, cells):
        f = GridFunction(4, [1.0] * cells + [0.0] * (16 - cells))
        assert soria_norm(f) == pytest.approx(phi1(cells / 16), rel=1e-14)

    def test_two_level(self):
        norm, starred = soria_norms(TWO_LEVEL)
        a, b = phi1(0.5), phi1(0.25)
        assert norm == pytest.approx(a + b, rel=1e-14)
        want = a * (1 + math.log(norm / a)) + b * (1 + math.log(norm / b))
        assert starred == pytest.approx(want, rel=1e-14)

    def test_scaling(self):
        assert soria_norm(TWO_LEVEL * 2) == pytest.approx(2 * soria_norm(TWO_LEVEL), rel=1e-14)

    def test_zero(self):
        assert soria_norm(GridFunction.zeros(3)) == 0.0
        with pytest.raises(ValueError):
            soria_norms(GridFunction.zeros(3))

    @given(st.lists(st.floats(0, 1e3, allow_nan=False), min_size=16, max_size=16).filter(any))
    def test_matches_distinct_value_integration(self, vals):
        # lambda_f is constant between consecutive distinct values of |f|
        a = np.abs(vals)
        levels = np.unique(np.append(a, 0.0))
        pieces = [(hi - lo, phi1(np.count_nonzero(a > lo) / 16)) for lo, hi in zip(levels, levels[1:])]
        norm = sum(w * v for w, v in pieces)
        starred = sum(w * v * (1 + math.log(norm / v)) for w, v in pieces)
        got = soria_norms(GridFunction(4, vals))
        assert got[0] == pytest.approx(norm, rel=1e-12)
        assert got[1] == pytest.approx(starred, rel=1e-12)


class TestQA:
    @pytest.mark.parametrize("cells", [1, 4, 11])
    def test_single_indicator(self, cells):
        E = cells / 16
        f = GridFunction(4, [1.0] * cells + [0.0] * (16 - cells))
        assert qa_upper(f, math.inf, "single") == pytest.approx(E * math.log(math.e / E), rel=1e-14)

    def test_zero(self):
        assert qa_upper(GridFunction.zeros(3)) == 0.0

    def test_two_level_strategies(self):
        single = 0.75 * math.log(math.e * 2 / 0.75)
        levels = 0.5 * math.log(4 * math.e) + (1 + math.log(2)) * 0.25 * math.log(4 * math.e)
        assert qa_upper(TWO_LEVEL, math.inf, "single") == pytest.approx(single, rel=1e-14)
        assert qa_upper(TWO_LEVEL, math.inf, "levels") == pytest.approx(levels, rel=1e-14)
        assert qa_upper(TWO_LEVEL) == pytest.approx(min(single, levels), rel=1e-14)

    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=16, max_size=16), st.sampled_from([2.0, 4.0, math.inf]))
    def test_best_is_minimum(self, vals, p):
        f = GridFunction(4, vals)
        assert qa_upper(f, p) == min(qa_upper(f, p, s) for s in ("levels", "single"))

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            qa_upper(TWO_LEVEL, 1.0)
        with pytest.raises(ValueError):
            qa_upper(TWO_LEVEL, 2.0, "greedy")


class TestLevels:
    def test_pieces_partition(self):
        f = GridFunction(3, [0.5, 3.0, 2.0, 0.0, -1.5, 7.9, 8.0, 1.0])
        pieces = level_pieces(f)
        assert np.array_equal(sum(pieces), f.values)
        assert len(pieces) == 5  # levels -1, 0, 1, 2, 3

    def test_l_log2(self):
        f = GridFunction(2, [1.0, 0.0, 0.0, 0.0])
        assert l_log2_levels(f) == pytest.approx(0.25 * math.log(4 * math.e) ** 2)
        assert l_log2_levels(GridFunction.zeros(2)) == 0.0
