"""Dyadic grids on the torus [0, 1), grid functions and elementary norms.

Every function lives on the uniform grid of ``2**K`` cells and is treated as a
step function constant on cells, so integrals and averages are exact cell sums.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval ``[index * 2**-scale, (index + 1) * 2**-scale)``."""

    scale: int
    index: int

    def __post_init__(self):
        if self.scale < 0 or not 0 <= self.index < (1 << self.scale):
            raise ValueError(f"invalid dyadic interval ({self.scale}, {self.index})")

    @property
    def length(self) -> float:
        return math.ldexp(1.0, -self.scale)

    @property
    def left(self) -> float:
        return math.ldexp(self.index, -self.scale)

    @property
    def right(self) -> float:
        return math.ldexp(self.index + 1, -self.scale)

    @property
    def center(self) -> float:
        return math.ldexp(2 * self.index + 1, -self.scale - 1)

    def parent(self) -> DyadicInterval:
        if self.scale == 0:
            raise ValueError("[0, 1) has no parent")
        return DyadicInterval(self.scale - 1, self.index >> 1)

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (DyadicInterval(self.scale + 1, 2 * self.index),
                DyadicInterval(self.scale + 1, 2 * self.index + 1))

    def ancestor(self, scale: int) -> DyadicInterval:
        if scale > self.scale:
            raise ValueError("ancestor must be at a coarser scale")
        return DyadicInterval(scale, self.index >> (self.scale - scale))

    def contains(self, other: DyadicInterval) -> bool:
        return (other.scale >= self.scale
                and other.index >> (other.scale - self.scale) == self.index)

    def intersects(self, other: DyadicInterval) -> bool:
        return self.contains(other) or other.contains(self)

    def cells(self, K: int) -> slice:
        """Grid cells of resolution ``K`` covered by this interval."""
        if self.scale > K:
            raise ValueError("interval finer than the grid")
        w = 1 << (K - self.scale)
        return slice(self.index * w, (self.index + 1) * w)

    def to_json(self) -> dict:
        return {"k": self.scale, "j": self.index}


class TorusSet:
    """Finite union of half-open intervals reduced mod 1.

    Stored canonically as sorted, disjoint, non-adjacent intervals inside
    ``[0, 1)``.
    """

    __slots__ = ("_intervals",)

    def __init__(self, intervals: Iterable[tuple[float, float]] = ()):
        pieces = []
        for a, b in intervals:
            if b <= a:
                continue
            if b - a >= 1.0:
                pieces = [(0.0, 1.0)]
                break
            a0 = a % 1.0
            b0 = a0 + (b - a)
            if b0 > 1.0:
                pieces.append((a0, 1.0))
                pieces.append((0.0, b0 - 1.0))
            else:
                pieces.append((a0, b0))
        pieces.sort()
        merged: list[tuple[float, float]] = []
        for a, b in pieces:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self._intervals = tuple(merged)

    @classmethod
    def full(cls) -> TorusSet:
        return cls([(0.0, 1.0)])

    @classmethod
    def from_dyadic(cls, intervals: Iterable[DyadicInterval]) -> TorusSet:
        return cls((I.left, I.right) for I in intervals)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> TorusSet:
        """Union of the grid cells flagged in ``mask`` (length a power of two)."""
        mask = np.asarray(mask, dtype=bool)
        n = mask.size
        padded = np.concatenate(([False], mask, [False])).astype(np.int8)
        edges = np.flatnonzero(np.diff(padded))
        return cls((s / n, e / n) for s, e in zip(edges[::2], edges[1::2]))

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self._intervals

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self._intervals))

    def is_empty(self) -> bool:
        return not self._intervals

    def is_full(self) -> bool:
        return self._intervals == ((0.0, 1.0),)

    def components(self) -> list[tuple[float, float]]:
        """Connected components on the torus; one crossing 0 is returned as ``(a, b)`` with ``b > 1``."""
        comps = list(self._intervals)
        if len(comps) >= 2 and comps[0][0] == 0.0 and comps[-1][1] == 1.0:
            first = comps.pop(0)
            last = comps.pop()
            comps.append((last[0], 1.0 + first[1]))
        return comps

    def union(self, other: TorusSet) -> TorusSet:
        return TorusSet(self._intervals + other._intervals)

    def to_mask(self, K: int) -> np.ndarray:
        """Cells of resolution ``K`` entirely contained in the set."""
        n = 1 << K
        mask = np.zeros(n, dtype=bool)
        for a, b in self._intervals:
            lo = math.ceil(a * n)
            hi = math.floor(b * n)
            if hi > lo:
                mask[lo:hi] = True
        return mask

    def contains_interval(self, a: float, b: float) -> bool:
        return any(x <= a and b <= y for x, y in self._intervals)

    def __eq__(self, other):
        return isinstance(other, TorusSet) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        body = ", ".join(f"[{a:g}, {b:g})" for a, b in self._intervals)
        return f"TorusSet({body})"

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in self._intervals]


def dilate_set(S: TorusSet | DyadicInterval, b: float) -> TorusSet:
    """Concentric dilation by ``b`` of every component, reduced mod 1 and merged."""
    if b <= 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(S, DyadicInterval):
        comps = [(S.left, S.right)]
    else:
        comps = S.components()
    out = []
    for lo, hi in comps:
        c = 0.5 * (lo + hi)
        half = 0.5 * b * (hi - lo)
        out.append((c - half, c + half))
    return TorusSet(out)


def dilate_dyadic_union(intervals: Iterable[DyadicInterval], b: float) -> TorusSet:
    """``b`` times each listed interval separately, then the union."""
    out = TorusSet()
    for I in intervals:
        out = out.union(dilate_set(I, b))
    return out


class GridFunction:
    """Complex values on the ``2**K`` points ``x_m = m * 2**-K`` of the torus."""

    __slots__ = ("K", "values")

    def __init__(self, K: int, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != (1 << K,):
            raise ValueError(f"expected {1 << K} values, got shape {values.shape}")
        values.setflags(write=False)
        self.K = int(K)
        self.values = values

    @classmethod
    def zeros(cls, K: int) -> GridFunction:
        return cls(K, np.zeros(1 << K))

    @classmethod
    def indicator(cls, K: int, intervals: Iterable[DyadicInterval] | TorusSet) -> GridFunction:
        if not isinstance(intervals, TorusSet):
            intervals = TorusSet.from_dyadic(intervals)
        return cls(K, intervals.to_mask(K).astype(float))

    @property
    def n(self) -> int:
        return 1 << self.K

    @property
    def h(self) -> float:
        return math.ldexp(1.0, -self.K)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def integral(self) -> complex:
        return complex(self.values.sum() * self.h)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.K, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.K, self.values - other.values)

    def __mul__(self, c) -> GridFunction:
        return GridFunction(self.K, self.values * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"GridFunction(K={self.K})"

    # --- serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> GridFunction:
        rows = list(csv.DictReader(io.StringIO(text)))
        n = len(rows)
        K = n.bit_length() - 1
        if n == 0 or 1 << K != n:
            raise ValueError("row count must be a power of two")
        vals = np.zeros(n, dtype=complex)
        for r in rows:
            vals[int(r["index"])] = complex(float(r["re"]), float(r["im"]))
        return cls(K, vals)

    def to_json(self) -> dict:
        return {"K": self.K,
                "values": [[float(v.real), float(v.imag)] for v in self.values]}

    @classmethod
    def from_json(cls, obj: dict) -> GridFunction:
        vals = np.array([complex(re, im) for re, im in obj["values"]])
        return cls(int(obj["K"]), vals)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix == ".csv":
            path.write_text(self.to_csv())
        else:
            path.write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> GridFunction:
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".csv":
            return cls.from_csv(text)
        return cls.from_json(json.loads(text))


def _as_values(f) -> np.ndarray:
    return f.values if isinstance(f, GridFunction) else np.asarray(f)


def dyadic_averages(f: GridFunction) -> list[np.ndarray]:
    """Averages of ``|f|`` over every dyadic interval, indexed ``[scale][index]``.

    Built by pairwise summation from the finest scale up so that every
    consumer (maximal function, stopping intervals, checks) sees identical
    floating point values.
    """
    sums = [None] * (f.K + 1)
    sums[f.K] = f.abs()
    for s in range(f.K - 1, -1, -1):
        sums[s] = sums[s + 1].reshape(-1, 2).sum(axis=1)
    return [np.ldexp(sums[s], -(f.K - s)) for s in range(f.K + 1)]


def dyadic_maximal(f: GridFunction) -> GridFunction:
    """Dyadic Hardy-Littlewood maximal function."""
    avgs = dyadic_averages(f)
    out = avgs[f.K].copy()
    for s in range(f.K):
        np.maximum(out, np.repeat(avgs[s], 1 << (f.K - s)), out=out)
    return GridFunction(f.K, out)


def stopping_masks(avgs: Sequence[np.ndarray], threshold: float) -> list[np.ndarray]:
    """Per-scale flags of the maximal dyadic intervals whose average exceeds ``threshold``."""
    masks = []
    covered = np.zeros(1, dtype=bool)
    for s, a in enumerate(avgs):
        if s:
            covered = np.repeat(covered, 2)
        sel = (a > threshold) & ~covered
        masks.append(sel)
        covered = covered | sel
    return masks


def stopping_intervals(f: GridFunction, alpha: int) -> list[DyadicInterval]:
    """Maximal dyadic ``J`` with average of ``|f|`` over ``J`` strictly above ``2**-alpha``."""
    masks = stopping_masks(dyadic_averages(f), math.ldexp(1.0, -alpha))
    return [DyadicInterval(s, int(i)) for s, m in enumerate(masks) for i in np.flatnonzero(m)]


def intervals_mask(intervals: Iterable[DyadicInterval], K: int) -> np.ndarray:
    mask = np.zeros(1 << K, dtype=bool)
    for I in intervals:
        mask[I.cells(K)] = True
    return mask


def maximal_dyadic_cover(mask: np.ndarray) -> list[DyadicInterval]:
    """Decompose a grid set into its maximal dyadic intervals."""
    mask = np.asarray(mask, dtype=bool)
    K = mask.size.bit_length() - 1
    full = [mask]
    for s in range(K - 1, -1, -1):
        full.append(full[-1].reshape(-1, 2).all(axis=1))
    full.reverse()
    out = []
    covered = np.zeros(1, dtype=bool)
    for s in range(K + 1):
        if s:
            covered = np.repeat(covered, 2)
        sel = full[s] & ~covered
        out.extend(DyadicInterval(s, int(i)) for i in np.flatnonzero(sel))
        covered |= sel
    return out


def distribution_function(f: GridFunction, t: float) -> float:
    """Grid measure of ``{|f| > t}``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(np.count_nonzero(f.abs() > t)) * f.h


def decreasing_rearrangement(f: GridFunction) -> GridFunction:
    return GridFunction(f.K, np.sort(f.abs())[::-1])


def weak_quasinorm(f) -> float:
    """``sup_t t * |{|f| > t}|``, i.e. ``max_j (j / n) * f*_j``."""
    v = np.abs(_as_values(f))
    if not v.size:
        return 0.0
    s = np.sort(v)[::-1]
    j = np.arange(1, s.size + 1)
    return float(np.max(j * s) / s.size)


def lp_norm(f, p: float) -> float:
    if p <= 0:
        raise ValueError("p must be positive")
    v = np.abs(_as_values(f))
    top = float(v.max(initial=0.0))
    if math.isinf(p) or top == 0.0:
        return top
    # scale by the maximum so tiny or huge values neither underflow nor overflow
    return top * float((np.sum((v / top) ** p) / v.size) ** (1.0 / p))
