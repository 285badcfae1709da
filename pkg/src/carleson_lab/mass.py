"""Mass decomposition of a tile family into levels ``P_n`` and tree/forest extraction.

Level ``n`` works on the residual pool ``R_n`` (tiles not yet assigned).  Layers
``A^0 = [0,1) ⊇ A^1 ⊇ ...`` are built from maximal dense tiles and the
John-Nirenberg cut of their counting function; a tile joins ``P_n`` when its
mass relative to ``(R_n, A^{k(P)})`` lies in ``[2**-n, 2**-n+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import DyadicInterval, GridFunction, TorusSet, maximal_dyadic_cover
from .tiles import (DEFAULT_N_MASS, ECache, LinearizingFunction, Tile, TileFamily, TileSet, Tree,
                    bmo_c_norm_arrays, counting_array, groups_separated, mass_table, scale_profile)

DEFAULT_C = 4.0
DEFAULT_C_FOREST = 4.0


@dataclass
class MassLayer:
    n: int
    k: int
    region: TorusSet
    tops: TileSet
    bmo: float
    exceptional: TorusSet

    @property
    def intervals(self) -> list[DyadicInterval]:
        return [P.time for P in self.tops]

    def counting(self) -> GridFunction:
        K = self.tops.family.K
        return GridFunction(K, counting_array(self.tops.k, self.tops.j, K))

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "region": self.region.to_json(),
                "tops": [[int(a), int(b), int(c)] for a, b, c in zip(self.tops.k, self.tops.j, self.tops.m)],
                "bmo": self.bmo, "exceptional": self.exceptional.to_json()}


@dataclass
class MassDecomposition:
    family: TileFamily
    levels: dict[int, TileSet]
    layers: dict[int, list[MassLayer]]
    discard: TileSet
    leak: TileSet
    masses: np.ndarray = field(repr=False)
    c: float = DEFAULT_C
    N_mass: int = DEFAULT_N_MASS

    @property
    def unassigned(self) -> TileSet:
        """``P_infinity``: every tile that never entered a mass window."""
        return self.discard.union(self.leak)

    def level_of(self) -> np.ndarray:
        """Level per family tile, ``-1`` for unassigned."""
        out = np.full(self.family.size, -1, dtype=np.int64)
        for n, S in self.levels.items():
            out[S.ids] = n
        return out

    def nonempty_levels(self) -> list[int]:
        return [n for n, S in sorted(self.levels.items()) if len(S)]

    def to_json(self) -> dict:
        def arr(S):
            return [[int(a), int(b), int(c)] for a, b, c in zip(S.k, S.j, S.m)]
        return {
            "K": self.family.K, "k_min": self.family.k_min, "k_max": self.family.k_max,
            "c": self.c, "N_mass": self.N_mass,
            "levels": {str(n): arr(S) for n, S in sorted(self.levels.items())},
            "layers": {str(n): [L.to_json() for L in ls] for n, ls in sorted(self.layers.items())},
            "discard": arr(self.discard), "leak": arr(self.leak),
        }


def _inside_mask(family: TileFamily, region_mask: np.ndarray) -> np.ndarray:
    """Per tile: is ``I_P`` inside the cell set ``region_mask``."""
    out = np.zeros(family.size, dtype=bool)
    for k in family.scales:
        ok = region_mask.reshape(1 << k, -1).all(axis=1)
        out[family.scale_slice(k)] = np.repeat(ok, 1 << (family.K - k))
    return out


def maximal_mask(family: TileFamily, cand: np.ndarray) -> np.ndarray:
    """Candidates not strictly below another candidate in the tile order."""
    K = family.K
    grids = {k: cand[family.scale_slice(k)].reshape(1 << k, 1 << (K - k)) for k in family.scales}
    out = cand.copy()
    for k in family.scales:
        if not grids[k].any():
            continue
        dominated = np.zeros((1 << k, 1 << (K - k)), dtype=bool)
        for k2 in range(family.k_min, k):
            G = grids[k2]
            if not G.any():
                continue
            d = k - k2
            # tile (k, j, m) <= (k2, j >> d, m2) iff m2 >> d == m
            hit = G.reshape(1 << k2, 1 << (K - k), 1 << d).any(axis=2)
            dominated |= np.repeat(hit, 1 << d, axis=0)
        out[family.scale_slice(k)] &= ~dominated.reshape(-1)
    return out


def select_maximal_dense(pool: TileSet, n: int, N: LinearizingFunction,
                         ecache: ECache | None = None, region: np.ndarray | None = None) -> TileSet:
    """Tiles of ``pool`` with density at least ``2**-n``, maximal among such.

    ``region`` (a cell mask) optionally restricts to tiles with ``I_P`` inside it.
    """
    fam = pool.family
    ecache = ecache or ECache(fam, N)
    cand = pool.mask() & (ecache.density >= math.ldexp(1.0, -n))
    if region is not None:
        cand &= _inside_mask(fam, region)
    return TileSet.from_mask(fam, maximal_mask(fam, cand))


def exceptional_set(intervals: Sequence[DyadicInterval], c: float, K: int) -> TorusSet:
    """``{counting > c * BMO_C}`` as a union of maximal dyadic intervals."""
    if c <= 0:
        raise ValueError("c must be positive")
    intervals = list(intervals)
    if not intervals:
        return TorusSet()
    k = np.array([I.scale for I in intervals], dtype=np.int64)
    j = np.array([I.index for I in intervals], dtype=np.int64)
    return _exceptional(k, j, c, K)[0]


def _exceptional(k, j, c, K):
    bmo = bmo_c_norm_arrays(k, j)
    mask = counting_array(k, j, K) > c * bmo
    return TorusSet.from_dyadic(maximal_dyadic_cover(mask)), mask, bmo


def layer_iteration(pool: TileSet, n: int, N: LinearizingFunction, c: float = DEFAULT_C,
                    ecache: ECache | None = None) -> list[MassLayer]:
    """Layers ``A_n^0 ⊇ A_n^1 ⊇ ...`` for the residual pool at level ``n``."""
    fam = pool.family
    K = fam.K
    ecache = ecache or ECache(fam, N)
    pool_mask = pool.mask()
    dense = pool_mask & (ecache.density >= math.ldexp(1.0, -n))
    region = np.ones(1 << K, dtype=bool)
    layers = []
    k = 0
    while True:
        cand = dense & _inside_mask(fam, region)
        tops = TileSet.from_mask(fam, maximal_mask(fam, cand))
        if len(tops):
            exc_set, exc_mask, bmo = _exceptional(tops.k, tops.j, c, K)
        else:
            exc_set, exc_mask, bmo = TorusSet(), np.zeros(1 << K, dtype=bool), 0.0
        layers.append(MassLayer(n, k, TorusSet.from_mask(region), tops, bmo, exc_set))
        if not len(tops) or not exc_mask.any():
            return layers
        region = exc_mask
        k += 1


def _layer_of_tile(fam: TileFamily, layers: Sequence[MassLayer]) -> np.ndarray:
    """Largest layer index ``k`` with ``I_P`` inside ``A^k``."""
    out = np.zeros(fam.size, dtype=np.int64)
    for L in layers[1:]:
        out[_inside_mask(fam, L.region.to_mask(fam.K))] = L.k
    return out


def _level_masses(pool_mask, layers, ecache, N_mass):
    fam = ecache.family
    kP = _layer_of_tile(fam, layers)
    masses = np.full(fam.size, np.nan)
    for L in layers:
        sel = pool_mask & (kP == L.k)
        if sel.any():
            table = mass_table(ecache, pool_mask, L.region.to_mask(fam.K), N_mass)
            masses[sel] = table[sel]
    return masses


def assign_level(pool: TileSet, n: int, layers: Sequence[MassLayer], N: LinearizingFunction,
                 ecache: ECache | None = None, N_mass: int = DEFAULT_N_MASS) -> TileSet:
    """Pool tiles whose mass relative to ``(pool, A_n^{k(P)})`` lies in ``[2**-n, 2**-n+1)``."""
    fam = pool.family
    ecache = ecache or ECache(fam, N)
    masses = _level_masses(pool.mask(), layers, ecache, N_mass)
    return TileSet.from_mask(fam, _in_window(masses, n))


def _in_window(masses: np.ndarray, n: int) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return (masses >= math.ldexp(1.0, -n)) & (masses < math.ldexp(1.0, 1 - n))


def mass_decompose(family: TileFamily | TileSet, N: LinearizingFunction, c: float = DEFAULT_C,
                   n_max: int | None = None, N_mass: int = DEFAULT_N_MASS) -> MassDecomposition:
    """Partition the family into levels ``P_0 .. P_{n_max}`` and the unassigned rest.

    Unassigned tiles with empty E-set go to ``discard``; any others (never
    observed to fall in a window) go to ``leak`` so the partition stays exact.
    """
    fam = family.family if isinstance(family, TileSet) else family
    if n_max is None:
        n_max = fam.K + 1
    if n_max < fam.K:
        raise ValueError("n_max must be at least K")
    ecache = ECache(fam, N)
    residual = np.ones(fam.size, dtype=bool)
    if isinstance(family, TileSet):
        residual[:] = False
        residual[family.ids] = True
    levels, layers = {}, {}
    masses = np.full(fam.size, np.nan)
    for n in range(n_max + 1):
        pool = TileSet.from_mask(fam, residual)
        ls = layer_iteration(pool, n, N, c, ecache)
        m = _level_masses(residual, ls, ecache, N_mass)
        hit = residual & _in_window(m, n)
        masses[hit] = m[hit]
        levels[n] = TileSet.from_mask(fam, hit)
        layers[n] = ls
        residual &= ~hit
    empty = ecache.e_count == 0
    discard = TileSet.from_mask(fam, residual & empty)
    leak = TileSet.from_mask(fam, residual & ~empty)
    dec = MassDecomposition(fam, levels, layers, discard, leak, masses, c, N_mass)
    _check_partition(dec, family)
    return dec


def _check_partition(dec: MassDecomposition, family) -> None:
    parts = [S.ids for S in dec.levels.values()] + [dec.discard.ids, dec.leak.ids]
    allids = np.concatenate(parts)
    expected = family.ids if isinstance(family, TileSet) else np.arange(dec.family.size)
    if allids.size != expected.size or not np.array_equal(np.sort(allids), expected):
        raise RuntimeError("mass decomposition is not a partition of the input family")


# --- trees and forests -----------------------------------------------------------


def _near_block(family: TileFamily, top: Tile) -> np.ndarray:
    """Ids of all family tiles ``P`` with ``2P <= 10 top``, one contiguous frequency run per time index."""
    K = family.K
    ct = top.freq_center
    out = []
    for k in range(top.k, family.k_max + 1):
        d = k - top.k
        w = 1 << k
        reach = w + 5 * (1 << top.k)  # |c - ct| < (2|w| + 10|w_top|) / 2
        lo = max(0, math.floor((ct - reach) / w - 0.5))
        hi = min((1 << (K - k)) - 1, math.ceil((ct + reach) / w - 0.5))
        m = np.arange(lo, hi + 1)
        m = m[np.abs((m + 0.5) * w - ct) < reach]
        if m.size == 0:
            continue
        js = np.arange(top.j << d, (top.j + 1) << d)
        out.append((family.offset(k) + (js[:, None] << (K - k)) + m[None, :]).reshape(-1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def _tree_labels(family: TileFamily, member: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Greedy maximal trees over the tiles in ``member``; returns labels and top ids."""
    labels = np.full(family.size, -1, dtype=np.int64)
    free = member.copy()
    tops = []
    for top in np.flatnonzero(member).tolist():  # ids are sorted by (k, j, m)
        if not free[top]:
            continue
        ids = _near_block(family, family.tile(top))
        ids = ids[free[ids]]
        labels[ids] = len(tops)
        free[ids] = False
        tops.append(top)
    return labels, tops


def extract_maximal_trees(S: TileSet) -> list[Tree]:
    """Greedy decomposition of ``S`` into disjoint maximal trees, coarsest tops first."""
    fam = S.family
    labels, tops = _tree_labels(fam, S.mask())
    if not tops:
        return []
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    start = np.searchsorted(sorted_labels, np.arange(len(tops)))
    stop = np.searchsorted(sorted_labels, np.arange(len(tops)), side="right")
    return [(TileSet(fam, order[a:b]), fam.tile(t)) for a, b, t in zip(start, stop, tops)]


def forest_decompose(P_n: TileSet, n: int, c_forest: float = DEFAULT_C_FOREST,
                     trees: list[Tree] | None = None) -> list[list[list[Tree]]]:
    """Split ``P_n`` into BMO forests, each a sequence of L-infinity forests.

    Trees are packed first-fit into groups that keep the top counting function
    at most ``c_forest * 2**n`` and stay mutually separated; groups are then
    chained so later groups sit at least their index gap finer wherever they
    meet earlier ones.
    """
    if trees is None:
        trees = extract_maximal_trees(P_n)
    if not trees:
        return []
    fam = P_n.family
    K = fam.K
    bound = c_forest * 2.0 ** n
    # Trees arrive in extraction order, so no tile of a later tree can sit
    # below an earlier top (it would have been absorbed); only the converse
    # direction needs checking.
    groups: list[tuple[list[Tree], np.ndarray, np.ndarray]] = []
    for S, top in trees:
        lo, hi = top.j << (K - top.k), (top.j + 1) << (K - top.k)
        block = _near_block(fam, top)
        for members, count, member_mask in groups:
            if count[lo:hi].max() + 1 > bound or member_mask[block].any():
                continue
            members.append((S, top))
            count[lo:hi] += 1
            member_mask[S.ids] = True
            break
        else:
            count = np.zeros(1 << K, dtype=np.int64)
            count[lo:hi] += 1
            if count.max() > bound:
                raise RuntimeError("a single tree exceeds the counting bound")
            member_mask = np.zeros(fam.size, dtype=bool)
            member_mask[S.ids] = True
            groups.append(([(S, top)], count, member_mask))

    profiles = [scale_profile(fam.tk[mm], fam.tj[mm], K) for _, _, mm in groups]
    order = sorted(range(len(groups)), key=lambda i: (int(profiles[i][0].min()), i))
    forests: list[list[int]] = []
    for gi in order:
        for chain in forests:
            pos = len(chain)
            if all(groups_separated(profiles[chain[a]], profiles[gi], pos - a) for a in range(pos)):
                chain.append(gi)
                break
        else:
            forests.append([gi])
    return [[groups[gi][0] for gi in chain] for chain in forests]
