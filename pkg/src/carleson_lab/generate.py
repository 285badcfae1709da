"""Seeded test inputs: grid functions ``f`` and linearizing functions ``N``.

Specs are short strings such as ``indicator:0.25``, ``levels:3=0.01,5=0.002``,
``random_step:32,6``, ``chirp`` or ``random_piecewise:16``.
"""

from __future__ import annotations

import math

import numpy as np

from .dyadic import GridFunction
from .spaces import profile
from .tiles import LinearizingFunction

F_KINDS = ("zero", "constant", "indicator", "levels", "orlicz_extremal", "random_step")
N_KINDS = ("constant", "chirp", "random_piecewise", "random")


def parse_spec(text: str) -> tuple[str, list[str]]:
    kind, _, rest = text.partition(":")
    args = [a for a in rest.split(",") if a] if rest else []
    return kind.strip(), [a.strip() for a in args]


def _cells(measure: float, K: int) -> int:
    if not 0 < measure <= 1:
        raise ValueError(f"measure must lie in (0, 1], got {measure}")
    return max(1, min(1 << K, round(measure * (1 << K))))


def _placement(rng: np.random.Generator, counts: list[int], n: int) -> list[np.ndarray]:
    if sum(counts) > n:
        raise ValueError("requested level sets do not fit on the grid")
    perm = rng.permutation(n)
    out, pos = [], 0
    for c in counts:
        out.append(perm[pos:pos + c])
        pos += c
    return out


def generate_f(spec: str, K: int, seed: int = 0) -> GridFunction:
    kind, args = parse_spec(spec)
    n = 1 << K
    rng = np.random.default_rng(seed)
    if kind == "zero":
        return GridFunction.zeros(K)
    if kind == "constant":
        return GridFunction(K, np.full(n, float(args[0]) if args else 1.0))
    if kind == "indicator":
        # E = [0, |E|) rounded to whole cells
        vals = np.zeros(n)
        vals[:_cells(float(args[0]) if args else 0.25, K)] = 1.0
        return GridFunction(K, vals)
    if kind == "levels":
        if not args:
            raise ValueError("levels needs entries l=measure")
        pairs = [a.split("=") for a in args]
        levels = [int(l) for l, _ in pairs]
        counts = [_cells(float(m), K) for _, m in pairs]
        vals = np.zeros(n)
        for l, idx in zip(levels, _placement(rng, counts, n)):
            vals[idx] = math.ldexp(1.0, l)
        return GridFunction(K, vals)
    if kind == "orlicz_extremal":
        phi = profile(args[0] if args else "log")
        top = int(args[1]) if len(args) > 1 else max(1, K // 2)
        levels = list(range(1, top + 1))
        # equal modular per level: |Q_l| 2**l phi(2**l) constant, total measure 1/2
        w = np.array([1.0 / (math.ldexp(1.0, l) * phi(math.ldexp(1.0, l))) for l in levels])
        counts = [max(1, int(c)) for c in np.floor(w / w.sum() * 0.5 * n)]
        vals = np.zeros(n)
        for l, idx in zip(levels, _placement(rng, counts, n)):
            vals[idx] = math.ldexp(1.0, l)
        return GridFunction(K, vals)
    if kind == "random_step":
        cells = int(args[0]) if args else 32
        top = int(args[1]) if len(args) > 1 else 6
        if cells < 1 or n % cells:
            raise ValueError("cells must divide 2**K")
        heights = np.ldexp(1.0, rng.integers(0, top + 1, cells)) * rng.choice([-1.0, 1.0], cells)
        heights[rng.random(cells) < 0.25] = 0.0
        if not heights.any():
            heights[0] = 1.0
        return GridFunction(K, np.repeat(heights, n // cells))
    raise ValueError(f"unknown f kind {kind!r}; choose from {F_KINDS}")


def generate_N(spec: str, K: int, seed: int = 0) -> LinearizingFunction:
    kind, args = parse_spec(spec)
    n = 1 << K
    rng = np.random.default_rng(seed)
    if kind == "constant":
        return LinearizingFunction(K, np.full(n, int(args[0]) % n if args else 0))
    if kind == "chirp":
        return LinearizingFunction(K, np.arange(n))
    if kind == "random_piecewise":
        blocks = int(args[0]) if args else 16
        if blocks < 1 or n % blocks:
            raise ValueError("blocks must divide 2**K")
        return LinearizingFunction(K, np.repeat(rng.integers(0, n, blocks), n // blocks))
    if kind == "random":
        return LinearizingFunction(K, rng.integers(0, n, n))
    raise ValueError(f"unknown N kind {kind!r}; choose from {N_KINDS}")


def generate(kind: str, params: str | list | None, seed: int, K: int):
    """Dispatch on ``kind``: f kinds give a :class:`GridFunction`, N kinds a :class:`LinearizingFunction`.

    ``constant`` is ambiguous; prefix with ``f.`` or ``N.`` to choose.
    """
    if isinstance(params, (list, tuple)):
        params = ",".join(str(p) for p in params)
    target, _, name = kind.rpartition(".")
    spec = name if not params else f"{name}:{params}"
    if target == "N" or (not target and name in N_KINDS and name != "constant"):
        return generate_N(spec, K, seed)
    return generate_f(spec, K, seed)


SUITE_F = ("random_step:32,6", "indicator:{m}", "levels:2=0.05,4=0.01,6=0.002", "orlicz_extremal:log")
SUITE_N = ("random_piecewise:16", "chirp", "random_piecewise:64", "random")


def suite_specs(seed: int) -> tuple[str, str, str]:
    """``(f spec, N spec, G spec)`` for suite member ``seed``."""
    rng = np.random.default_rng(10_000 + seed)
    f = SUITE_F[seed % len(SUITE_F)].format(m=float(2.0 ** -int(rng.integers(1, 6))))
    N = SUITE_N[(seed + seed // len(SUITE_F)) % len(SUITE_N)]
    G = "torus" if seed % 2 == 0 else "random_half"
    return f, N, G


def generate_G(spec: str, K: int, seed: int = 0) -> np.ndarray:
    """Cell mask of a test set ``G``."""
    n = 1 << K
    if spec == "torus":
        return np.ones(n, dtype=bool)
    if spec == "random_half":
        rng = np.random.default_rng(seed + 7)
        pieces = min(n, 32)
        chosen = rng.permutation(pieces)[:pieces // 2]
        mask = np.zeros(pieces, dtype=bool)
        mask[chosen] = True
        return np.repeat(mask, n // pieces)
    raise ValueError(f"unknown G spec {spec!r}")
