import numpy as np
import pytest

from carleson_lab.dyadic import GridFunction
from carleson_lab.generate import (generate, generate_f, generate_G, generate_N, parse_spec, suite_specs)
from carleson_lab.spaces import orlicz_modular
from carleson_lab.tiles import LinearizingFunction

F_SPECS = ["zero", "constant:2", "indicator:0.125", "levels:1=0.25,3=0.05", "orlicz_extremal:loglog",
           "random_step:16,4"]
N_SPECS = ["constant:5", "chirp", "random_piecewise:8", "random"]


@pytest.mark.parametrize("spec", F_SPECS)
def test_f_is_deterministic(spec):
    a, b = generate_f(spec, 8, 3), generate_f(spec, 8, 3)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("spec", N_SPECS)
def test_N_is_deterministic_and_in_range(spec):
    a, b = generate_N(spec, 8, 3), generate_N(spec, 8, 3)
    assert np.array_equal(a.values, b.values)
    assert a.values.min() >= 0 and a.values.max() < 256


def test_seeds_differ():
    assert not np.array_equal(generate_N("random", 8, 1).values, generate_N("random", 8, 2).values)


def test_indicator_measure():
    f = generate_f("indicator:0.125", 10)
    assert f.values.real.sum() / f.n == 0.125
    assert set(np.unique(f.values.real)) == {0.0, 1.0}


def test_levels_reproduce_measures():
    f = generate_f("levels:2=0.05,4=0.01,6=0.002", 10, 4)
    a = f.abs()
    assert np.count_nonzero(a == 4) == round(0.05 * 1024)
    assert np.count_nonzero(a == 16) == round(0.01 * 1024)
    assert np.count_nonzero(a == 64) == 2


def test_chirp():
    assert generate_N("chirp", 3).values.tolist() == list(range(8))


def test_piecewise_blocks():
    N = generate_N("random_piecewise:4", 6, 0).values
    assert all(len(set(N[i * 16:(i + 1) * 16])) == 1 for i in range(4))


def test_orlicz_extremal_equidistributes_modular():
    f = generate_f("orlicz_extremal:log", 12, 0)
    a = f.abs()
    shares = [orlicz_modular(GridFunction(12, np.where(a == v, a, 0))) for v in np.unique(a[a > 0])]
    assert max(shares) / min(shares) < 1.5
    assert np.count_nonzero(a) / a.size == pytest.approx(0.5, abs=0.01)


def test_random_step_is_piecewise_constant():
    f = generate_f("random_step:32,6", 10, 1).values.real
    blocks = f.reshape(32, -1)
    assert np.all(blocks == blocks[:, :1])
    nz = np.abs(f[f != 0])
    assert np.all(np.log2(nz) == np.round(np.log2(nz)))


def test_dispatch():
    assert isinstance(generate("chirp", None, 0, 4), LinearizingFunction)
    assert isinstance(generate("N.constant", [3], 0, 4), LinearizingFunction)
    assert isinstance(generate("constant", [3], 0, 4), GridFunction)
    assert isinstance(generate("levels", "1=0.5", 0, 4), GridFunction)


def test_parse_spec():
    assert parse_spec("levels: 1=0.5, 2=0.25") == ("levels", ["1=0.5", "2=0.25"])
    assert parse_spec("chirp") == ("chirp", [])


@pytest.mark.parametrize("bad", ["nonsense", "indicator:0", "indicator:1.5", "random_step:7", "levels",
                                 "levels:1=0.8,2=0.8"])
def test_bad_f_specs(bad):
    with pytest.raises(ValueError):
        generate_f(bad, 6)


@pytest.mark.parametrize("bad", ["nonsense", "random_piecewise:3"])
def test_bad_N_specs(bad):
    with pytest.raises(ValueError):
        generate_N(bad, 6)


def test_G():
    assert generate_G("torus", 6).all()
    half = generate_G("random_half", 8, 2)
    assert half.sum() == 128
    assert np.array_equal(half, generate_G("random_half", 8, 2))
    with pytest.raises(ValueError):
        generate_G("disc", 6)


def test_suite_covers_every_shape():
    specs = [suite_specs(s) for s in range(20)]
    assert len({f.split(":")[0] for f, _, _ in specs}) == 4
    assert len({N for _, N, _ in specs}) == 4
    assert {G for _, _, G in specs} == {"torus", "random_half"}
    assert specs == [suite_specs(s) for s in range(20)]
