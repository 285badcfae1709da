"""Tiles, tile families, E-sets, the tile order, mass, and tree/forest predicates.

A tile ``(k, j, m)`` has time interval ``[j 2**-k, (j+1) 2**-k)`` and frequency
interval ``[m 2**k, (m+1) 2**k)``.  A :class:`TileFamily` enumerates every tile
with time scale in ``k_min..k_max`` and frequency inside ``[0, 2**K)``; tiles
are identified by integer ids ordered by ``(k, j, m)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .dyadic import DyadicInterval, GridFunction, TorusSet

DEFAULT_N_MASS = 10


@dataclass(frozen=True, order=True)
class Tile:
    k: int
    j: int
    m: int

    @property
    def time(self) -> DyadicInterval:
        return DyadicInterval(self.k, self.j)

    @property
    def freq(self) -> tuple[int, int]:
        w = 1 << self.k
        return self.m * w, (self.m + 1) * w

    @property
    def freq_center(self) -> float:
        return (self.m + 0.5) * (1 << self.k)

    @property
    def freq_length(self) -> int:
        return 1 << self.k

    def to_json(self) -> dict:
        return {"k": self.k, "j": self.j, "m": self.m}

    @classmethod
    def from_json(cls, obj: dict) -> Tile:
        return cls(int(obj["k"]), int(obj["j"]), int(obj["m"]))


class LinearizingFunction:
    """Integer frequencies ``N(x_m)`` in ``[0, 2**K)``."""

    __slots__ = ("K", "values")

    def __init__(self, K: int, values):
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (1 << K,):
            raise ValueError(f"expected {1 << K} values, got shape {values.shape}")
        if values.size and (values.min() < 0 or values.max() >= 1 << K):
            raise ValueError("frequencies must lie in [0, 2**K)")
        values.setflags(write=False)
        self.K = int(K)
        self.values = values

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "freq"])
        for i, v in enumerate(self.values.tolist()):
            w.writerow([i, v])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> LinearizingFunction:
        rows = list(csv.DictReader(io.StringIO(text)))
        n = len(rows)
        K = n.bit_length() - 1
        if n == 0 or 1 << K != n:
            raise ValueError("row count must be a power of two")
        vals = np.zeros(n, dtype=np.int64)
        for r in rows:
            vals[int(r["index"])] = int(r["freq"])
        return cls(K, vals)

    def __repr__(self):
        return f"LinearizingFunction(K={self.K})"


class TileFamily:
    """All tiles with time scale in ``k_min..k_max`` at grid resolution ``K``."""

    def __init__(self, K: int, k_min: int, k_max: int):
        if not 0 <= k_min <= k_max <= K:
            raise ValueError(f"need 0 <= k_min <= k_max <= K, got {k_min}, {k_max}, {K}")
        self.K, self.k_min, self.k_max = K, k_min, k_max
        n = 1 << K
        self.size = (k_max - k_min + 1) * n
        ks, js, ms = [], [], []
        for k in self.scales:
            per = 1 << (K - k)
            ids = np.arange(n)
            ks.append(np.full(n, k))
            js.append(ids // per)
            ms.append(ids % per)
        self.tk = np.concatenate(ks).astype(np.int64)
        self.tj = np.concatenate(js).astype(np.int64)
        self.tm = np.concatenate(ms).astype(np.int64)
        for a in (self.tk, self.tj, self.tm):
            a.setflags(write=False)

    @property
    def scales(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def offset(self, k: int) -> int:
        return (k - self.k_min) << self.K

    def scale_slice(self, k: int) -> slice:
        o = self.offset(k)
        return slice(o, o + (1 << self.K))

    def id_of(self, P: Tile) -> int:
        if P.k not in self.scales or not 0 <= P.j < 1 << P.k or not 0 <= P.m < 1 << (self.K - P.k):
            raise KeyError(P)
        return self.offset(P.k) + (P.j << (self.K - P.k)) + P.m

    def tile(self, i: int) -> Tile:
        return Tile(int(self.tk[i]), int(self.tj[i]), int(self.tm[i]))

    def all(self) -> TileSet:
        return TileSet(self, np.arange(self.size))

    def __eq__(self, other):
        return (isinstance(other, TileFamily)
                and (self.K, self.k_min, self.k_max) == (other.K, other.k_min, other.k_max))

    def __hash__(self):
        return hash((self.K, self.k_min, self.k_max))

    def __repr__(self):
        return f"TileFamily(K={self.K}, scales={self.k_min}..{self.k_max})"


class TileSet:
    """A set of tiles from one family, iterated in ``(k, j, m)`` order."""

    __slots__ = ("family", "ids")

    def __init__(self, family: TileFamily, ids=()):
        ids = np.unique(np.asarray(ids, dtype=np.int64))
        ids.setflags(write=False)
        self.family = family
        self.ids = ids

    @classmethod
    def from_tiles(cls, family: TileFamily, tiles: Iterable[Tile]) -> TileSet:
        return cls(family, [family.id_of(P) for P in tiles])

    @classmethod
    def from_mask(cls, family: TileFamily, mask: np.ndarray) -> TileSet:
        return cls(family, np.flatnonzero(mask))

    def __len__(self):
        return int(self.ids.size)

    def __iter__(self):
        f = self.family
        for i in self.ids.tolist():
            yield f.tile(i)

    def __contains__(self, P: Tile) -> bool:
        try:
            i = self.family.id_of(P)
        except KeyError:
            return False
        pos = np.searchsorted(self.ids, i)
        return bool(pos < self.ids.size and self.ids[pos] == i)

    def __eq__(self, other):
        return (isinstance(other, TileSet) and self.family == other.family
                and np.array_equal(self.ids, other.ids))

    def __repr__(self):
        return f"TileSet({len(self)} tiles of {self.family})"

    @property
    def k(self) -> np.ndarray:
        return self.family.tk[self.ids]

    @property
    def j(self) -> np.ndarray:
        return self.family.tj[self.ids]

    @property
    def m(self) -> np.ndarray:
        return self.family.tm[self.ids]

    def mask(self) -> np.ndarray:
        out = np.zeros(self.family.size, dtype=bool)
        out[self.ids] = True
        return out

    def union(self, other: TileSet) -> TileSet:
        return TileSet(self.family, np.concatenate([self.ids, other.ids]))

    def difference(self, other: TileSet) -> TileSet:
        return TileSet(self.family, np.setdiff1d(self.ids, other.ids, assume_unique=True))

    def to_json(self) -> list[dict]:
        return [P.to_json() for P in self]


def build_tile_family(K: int, scale_range: tuple[int, int] | range) -> TileSet:
    """Every tile with time scale in ``scale_range`` and frequency inside ``[0, 2**K)``."""
    if isinstance(scale_range, range):
        lo, hi = scale_range.start, scale_range.stop - 1
    else:
        lo, hi = scale_range
    return TileFamily(K, lo, hi).all()


# --- E-sets --------------------------------------------------------------------


def e_mask(P: Tile, N: LinearizingFunction) -> np.ndarray:
    K = N.K
    mask = np.zeros(1 << K, dtype=bool)
    cells = P.time.cells(K)
    mask[cells] = (N.values[cells] >> P.k) == P.m
    return mask


def e_set(P: Tile, N: LinearizingFunction) -> TorusSet:
    """``E(P) = {x in I_P : N(x) in omega_P}`` as an exact grid set."""
    return TorusSet.from_mask(e_mask(P, N))


class ECache:
    """Per-family data that depends only on ``N``: cell-to-tile maps and densities."""

    def __init__(self, family: TileFamily, N: LinearizingFunction):
        if N.K != family.K:
            raise ValueError("resolution mismatch between family and N")
        self.family, self.N = family, N
        K = family.K
        cells = np.arange(1 << K)
        self.tile_of_cell = {}
        counts = np.zeros(family.size, dtype=np.int64)
        for k in family.scales:
            ids = family.offset(k) + ((cells >> (K - k)) << (K - k)) + (N.values >> k)
            ids.setflags(write=False)
            self.tile_of_cell[k] = ids
            counts += np.bincount(ids, minlength=family.size)
        self.e_count = counts
        self.density = counts / np.exp2(K - family.tk)

    def e_measure(self, ids) -> np.ndarray:
        return self.e_count[ids] * math.ldexp(1.0, -self.family.K)


# --- order and dilations -------------------------------------------------------


def tile_leq(P1: Tile, P2: Tile) -> bool:
    """``I_1`` inside ``I_2`` and ``omega_1`` containing ``omega_2``."""
    return (P2.time.contains(P1.time) and P1.k >= P2.k
            and P2.m >> (P1.k - P2.k) == P1.m)


def tile_lt(P1: Tile, P2: Tile) -> bool:
    return tile_leq(P1, P2) and P1.k > P2.k


def tile_dilate(P: Tile, a: float) -> tuple[tuple[float, float], DyadicInterval]:
    """``aP``: concentric dilate of the frequency interval, time interval unchanged."""
    if a <= 0:
        raise ValueError("dilation factor must be positive")
    c, half = P.freq_center, 0.5 * a * P.freq_length
    return (c - half, c + half), P.time


def dilated_leq(P: Tile, a: float, Q: Tile, b: float) -> bool:
    """``aP <= bQ`` read literally: ``I_P`` inside ``I_Q`` and ``b omega_Q`` inside ``a omega_P``."""
    (lo, hi), I = tile_dilate(P, a)
    (qlo, qhi), J = tile_dilate(Q, b)
    return J.contains(I) and lo <= qlo and qhi <= hi


def tree_leq(P: Tile, top: Tile, a: float = 2.0, b: float = 10.0) -> bool:
    """Tree admission ``aP <= b top``: ``I_P`` inside ``I_top`` and ``a omega_P`` meets ``b omega_top``.

    Reduces to ``P <= top`` frequency-wise whenever ``omega_P`` contains
    ``omega_top``, and admits same-time neighbours of the top.
    """
    if not top.time.contains(P.time):
        return False
    gap = abs(P.freq_center - top.freq_center)
    return gap < 0.5 * (a * P.freq_length + b * top.freq_length)


def _tree_leq_arrays(k, j, m, tk, tj, tm, a=2.0, b=10.0):
    """Vectorized :func:`tree_leq` with broadcasting."""
    d = np.maximum(k - tk, 0)
    inside = (k >= tk) & ((j >> d) == tj)
    c = (m + 0.5) * np.exp2(k)
    ct = (tm + 0.5) * np.exp2(tk)
    near = np.abs(c - ct) < 0.5 * (a * np.exp2(k) + b * np.exp2(tk))
    return inside & near


def decay_factor(P: Tile, Q: Tile, N_mass: int = DEFAULT_N_MASS) -> float:
    """``(1 + |I_Q| dist(10 omega_P, 10 omega_Q))**-N_mass``."""
    if not Q.time.contains(P.time):
        raise ValueError("decay factor needs I_P inside I_Q")
    gap = max(0.0, abs(P.freq_center - Q.freq_center) - 5.0 * (P.freq_length + Q.freq_length))
    return (1.0 + Q.time.length * gap) ** (-N_mass)


def mass(P: Tile, pool: Iterable[Tile], region: TorusSet, N: LinearizingFunction,
         N_mass: int = DEFAULT_N_MASS) -> float:
    """Mass of ``P`` relative to ``pool`` and ``region``, evaluated tile by tile."""
    if not region.contains_interval(P.time.left, P.time.right):
        raise ValueError("I_P must lie inside the region")
    best = 0.0
    for Q in pool:
        I = Q.time
        if not I.contains(P.time) or not region.contains_interval(I.left, I.right):
            continue
        dens = e_set(Q, N).measure / I.length
        if dens:
            best = max(best, dens * decay_factor(P, Q, N_mass))
    return best


@lru_cache(maxsize=64)
def _decay_matrix(K: int, k: int, kp: int, N_mass: int) -> np.ndarray:
    c = (np.arange(1 << (K - k)) + 0.5) * float(1 << k)
    cp = (np.arange(1 << (K - kp)) + 0.5) * float(1 << kp)
    gap = np.maximum(np.abs(c[:, None] - cp[None, :]) - 5.0 * ((1 << k) + (1 << kp)), 0.0)
    W = (1.0 + gap * math.ldexp(1.0, -kp)) ** (-N_mass)
    W.setflags(write=False)
    return W


def mass_table(ecache: ECache, pool_mask: np.ndarray, region_mask: np.ndarray,
               N_mass: int = DEFAULT_N_MASS, chunk: int = 1 << 22) -> np.ndarray:
    """Mass of every family tile relative to a pool (tile mask) and a region (cell mask).

    Tiles whose time interval is not inside the region get ``nan``.  Same
    quantity as :func:`mass`; the sup over ancestors is taken scale by scale
    against a cached decay matrix.
    """
    fam = ecache.family
    K = fam.K
    out = np.full(fam.size, np.nan)
    inside = {}
    for k in fam.scales:
        inside[k] = np.asarray(region_mask, dtype=bool).reshape(1 << k, -1).all(axis=1)
    dens = {}
    for kp in fam.scales:
        sl = fam.scale_slice(kp)
        d = np.where(pool_mask[sl], ecache.density[sl], 0.0).reshape(1 << kp, -1)
        dens[kp] = d * inside[kp][:, None]
    for k in fam.scales:
        best = np.zeros((1 << k, 1 << (K - k)))
        for kp in range(fam.k_min, k + 1):
            D = dens[kp]
            if not D.any():
                continue
            W = _decay_matrix(K, k, kp, N_mass)
            rows = max(1, chunk // W.size)
            part = np.empty((D.shape[0], W.shape[0]))
            for r0 in range(0, D.shape[0], rows):
                blk = D[r0:r0 + rows]
                part[r0:r0 + rows] = (blk[:, None, :] * W[None, :, :]).max(axis=2)
            np.maximum(best, np.repeat(part, 1 << (k - kp), axis=0), out=best)
        vals = best.reshape(-1)
        cell_ok = np.repeat(inside[k], 1 << (K - k))
        out[fam.scale_slice(k)] = np.where(cell_ok, vals, np.nan)
    return out


# --- counting functions and BMO_C ------------------------------------------------


def counting_function(tops: Iterable[DyadicInterval], K: int) -> GridFunction:
    """``sum_I chi_I`` on the grid (multiplicity counted)."""
    diff = np.zeros((1 << K) + 1)
    for I in tops:
        c = I.cells(K)
        diff[c.start] += 1
        diff[c.stop] -= 1
    return GridFunction(K, np.cumsum(diff[:-1]))


def counting_array(k: np.ndarray, j: np.ndarray, K: int) -> np.ndarray:
    """Vectorized counting function for intervals given as scale/index arrays."""
    k = np.asarray(k, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    w = np.left_shift(1, K - k)
    diff = np.zeros((1 << K) + 1, dtype=np.int64)
    np.add.at(diff, j * w, 1)
    np.add.at(diff, (j + 1) * w, -1)
    return np.cumsum(diff[:-1])


def bmo_c_norm(intervals: Iterable[DyadicInterval]) -> float:
    """``sup_J sum_{I inside J} |I| / |J|`` over dyadic ``J``."""
    ks, js = [], []
    for I in intervals:
        ks.append(I.scale)
        js.append(I.index)
    if not ks:
        return 0.0
    return bmo_c_norm_arrays(np.array(ks), np.array(js))


def bmo_c_norm_arrays(k: np.ndarray, j: np.ndarray) -> float:
    if k.size == 0:
        return 0.0
    top = int(k.max())
    own = [np.zeros(1 << s) for s in range(top + 1)]
    for s in range(top + 1):
        sel = k == s
        if sel.any():
            np.add.at(own[s], j[sel], math.ldexp(1.0, -s))
    acc = own[top]
    best = float((acc * math.ldexp(1.0, top)).max())
    for s in range(top - 1, -1, -1):
        acc = own[s] + acc.reshape(-1, 2).sum(axis=1)
        best = max(best, float((acc * math.ldexp(1.0, s)).max()))
    return best


# --- tree and forest predicates --------------------------------------------------


@dataclass
class Verdict:
    ok: bool
    violation: str | None = None

    def __bool__(self):
        return self.ok


def _arrays(S: TileSet | Iterable[Tile]):
    if isinstance(S, TileSet):
        return S.k, S.j, S.m
    tiles = list(S)
    return (np.array([P.k for P in tiles], dtype=np.int64),
            np.array([P.j for P in tiles], dtype=np.int64),
            np.array([P.m for P in tiles], dtype=np.int64))


def _leq_arrays(k1, j1, m1, k2, j2, m2):
    """``P1 <= P2`` elementwise (broadcasting)."""
    d = k1 - k2
    ds = np.maximum(d, 0)
    return (d >= 0) & ((j1 >> ds) == j2) & ((m2 >> ds) == m1)


def is_tree(S: TileSet, top: Tile, ambient: TileSet | None = None) -> Verdict:
    """Check the three tree conditions for ``S`` with top ``top``.

    Conditions 2 and 3 quantify over ``ambient`` (defaults to ``S``), the
    family from which the tree was carved.
    """
    k, j, m = _arrays(S)
    tk, tj, tm = top.k, top.j, top.m
    ok1 = _tree_leq_arrays(k, j, m, tk, tj, tm)
    if not ok1.all():
        bad = int(np.flatnonzero(~ok1)[0])
        return Verdict(False, f"condition 1: tile {(int(k[bad]), int(j[bad]), int(m[bad]))} not 2P<=10P0")
    if ambient is None or len(S) == 0:
        return Verdict(True)
    in_S = np.isin(ambient.ids, S.ids)
    ak, aj, am = ambient.k[~in_S], ambient.j[~in_S], ambient.m[~in_S]
    if ak.size == 0:
        return Verdict(True)
    # condition 2: same time interval as a member and 2P' <= P0
    member_times = set(zip(k.tolist(), j.tolist()))
    same_time = np.array([(a, b) in member_times for a, b in zip(ak.tolist(), aj.tolist())])
    near_top = _tree_leq_arrays(ak, aj, am, tk, tj, tm, a=2.0, b=1.0)
    viol2 = same_time & near_top
    if viol2.any():
        bad = int(np.flatnonzero(viol2)[0])
        return Verdict(False, f"condition 2: missing {(int(ak[bad]), int(aj[bad]), int(am[bad]))}")
    # condition 3: convexity
    above = _leq_arrays(k[None, :], j[None, :], m[None, :], ak[:, None], aj[:, None], am[:, None]).any(axis=1)
    below = _leq_arrays(ak[:, None], aj[:, None], am[:, None], k[None, :], j[None, :], m[None, :]).any(axis=1)
    viol3 = above & below
    if viol3.any():
        bad = int(np.flatnonzero(viol3)[0])
        return Verdict(False, f"condition 3: missing {(int(ak[bad]), int(aj[bad]), int(am[bad]))}")
    return Verdict(True)


def is_sparse_tree(S: TileSet, C: float, top: Tile | None = None,
                   ambient: TileSet | None = None) -> Verdict:
    if len(S) == 0:
        return Verdict(True)
    if top is not None:
        v = is_tree(S, top, ambient)
        if not v:
            return v
    k, j, _ = _arrays(S)
    length = np.exp2(-k.astype(float))
    d = k[None, :] - k[:, None]
    inside = (d >= 0) & ((j[None, :] >> np.maximum(d, 0)) == j[:, None])
    packed = (inside * length[None, :]).sum(axis=1)
    bad = packed > C * length
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return Verdict(False, f"packing {packed[i] / length[i]:g} > {C} below {(int(k[i]), int(j[i]))}")
    return Verdict(True)


Tree = tuple[TileSet, Tile]


def is_linf_forest(trees: Sequence[Tree], n: int, c_forest: float = 4.0) -> Verdict:
    """Separated trees whose top counting function is at most ``c_forest * 2**n``."""
    if not trees:
        return Verdict(True)
    K = trees[0][0].family.K
    tk = np.array([t.k for _, t in trees])
    tj = np.array([t.j for _, t in trees])
    tm = np.array([t.m for _, t in trees])
    for idx, (S, _) in enumerate(trees):
        k, j, m = _arrays(S)
        hit = _tree_leq_arrays(k[:, None], j[:, None], m[:, None], tk[None, :], tj[None, :], tm[None, :])
        hit[:, idx] = False
        if hit.any():
            r, c = np.argwhere(hit)[0]
            return Verdict(False, f"separation: tile {(int(k[r]), int(j[r]), int(m[r]))} of tree {idx} "
                                  f"has 2P <= 10 top of tree {int(c)}")
    count = counting_array(tk, tj, K)
    bound = c_forest * 2.0 ** n
    if count.max() > bound:
        return Verdict(False, f"counting function {int(count.max())} > {bound:g}")
    return Verdict(True)


def is_bmo_forest(groups: Sequence[Sequence[Tree]], n: int, c_forest: float = 4.0) -> Verdict:
    """Each group an L-infinity forest; tiles in group ``k`` that meet tiles in an
    earlier group ``j`` are at least ``2**(k-j)`` times shorter."""
    if not groups:
        return Verdict(True)
    for g, trees in enumerate(groups):
        v = is_linf_forest(trees, n, c_forest)
        if not v:
            return Verdict(False, f"group {g}: {v.violation}")
    K = next((S.family.K for trees in groups for S, _ in trees), None)
    if K is None:
        return Verdict(True)
    profiles = []
    for trees in groups:
        ks = np.concatenate([S.k for S, _ in trees]) if trees else np.zeros(0, np.int64)
        js = np.concatenate([S.j for S, _ in trees]) if trees else np.zeros(0, np.int64)
        profiles.append(scale_profile(ks, js, K))
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            if not groups_separated(profiles[a], profiles[b], b - a):
                return Verdict(False, f"groups {a} and {b} overlap without 2^{a - b} scale gap")
    return Verdict(True)


def scale_profile(k: np.ndarray, j: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Per cell, the coarsest and finest scale among intervals covering it (``K+1`` / ``-1`` if none)."""
    n = 1 << K
    coarsest = np.full(n, K + 1, dtype=np.int64)
    finest = np.full(n, -1, dtype=np.int64)
    for s in np.unique(k).tolist():
        cover = np.zeros(1 << s, dtype=bool)
        cover[j[k == s]] = True
        cells = np.repeat(cover, 1 << (K - s))
        coarsest[cells] = np.minimum(coarsest[cells], s)
        finest[cells] = np.maximum(finest[cells], s)
    return coarsest, finest


def groups_separated(early, late, gap: int) -> bool:
    """Every later interval meeting an earlier one is at least ``gap`` scales finer."""
    _, fine_early = early
    coarse_late, fine_late = late
    overlap = (fine_early >= 0) & (fine_late >= 0)
    return bool(np.all(coarse_late[overlap] >= fine_early[overlap] + gap))
