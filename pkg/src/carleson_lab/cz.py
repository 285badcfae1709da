"""The f-dependent split ``P_n = ⊔_alpha P_n^alpha`` and the per-tree CZ machinery.

A tile joins ``P_n^alpha`` at the first ``alpha`` for which some stopping interval
``J`` (maximal dyadic with average of ``|f|`` above ``2**-alpha``) satisfies
``|I_P| <= |J|`` and ``I_P ∩ 51 J ≠ ∅``.  For dyadic ``I_P`` no longer than ``J``
the second condition says the ancestor of ``I_P`` at the scale of ``J`` lies within
25 positions of ``J`` (cyclically).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import (DyadicInterval, GridFunction, TorusSet, dilate_set, dyadic_averages,
                     stopping_masks)
from .kernel import _roots
from .tiles import Tile, TileFamily, TileSet

log = logging.getLogger(__name__)

NEIGHBOUR_REACH = 25  # 51 J = J together with 25 copies on each side
SHADOW_OFFSETS = tuple(range(-8, -1)) + tuple(range(2, 9))
CZ_EXPONENT = 10


def dyadic_exponent(x: float) -> int:
    """The integer ``e`` with ``2**e < x <= 2**(e+1)``."""
    if not x > 0:
        raise ValueError("need a positive value")
    mant, e = math.frexp(x)
    return e - 2 if mant == 0.5 else e - 1


@dataclass
class CZDecomposition:
    family: TileFamily
    N_exp: int
    M_exp: int
    tiles: dict[int, TileSet]
    stopping: dict[int, list[DyadicInterval]]
    avgs: list[np.ndarray] = field(repr=False)

    @property
    def alphas(self) -> list[int]:
        return list(range(-self.N_exp, -self.M_exp + 1))

    def alpha_of(self) -> np.ndarray:
        """``alpha`` per family tile; tiles outside ``P_n`` get a sentinel below every alpha."""
        out = np.full(self.family.size, np.iinfo(np.int64).min, dtype=np.int64)
        for a, S in self.tiles.items():
            out[S.ids] = a
        return out

    def support(self, alpha: int) -> TorusSet:
        S = self.tiles.get(alpha)
        if S is None or not len(S):
            return TorusSet()
        K = self.family.K
        mask = np.zeros(1 << K, dtype=bool)
        for k, j in set(zip(S.k.tolist(), S.j.tolist())):
            w = 1 << (K - k)
            mask[j * w:(j + 1) * w] = True
        return TorusSet.from_mask(mask)

    def level_set(self, alpha: int) -> TorusSet:
        """``{Mf > 2**-alpha}``."""
        return TorusSet.from_dyadic(self.stopping[alpha])

    def to_json(self) -> dict:
        return {
            "N": self.N_exp, "M": self.M_exp,
            "tiles": {str(a): [[int(x), int(y), int(z)] for x, y, z in zip(S.k, S.j, S.m)]
                      for a, S in sorted(self.tiles.items())},
            "stopping": {str(a): [[I.scale, I.index] for I in Js] for a, Js in sorted(self.stopping.items())},
        }


def _near_flags(stop_mask: np.ndarray) -> np.ndarray:
    """Indices at one scale whose cyclic distance to a flagged index is at most 25."""
    size = stop_mask.size
    if not stop_mask.any():
        return np.zeros(size, dtype=bool)
    if size <= 2 * NEIGHBOUR_REACH + 1:
        return np.ones(size, dtype=bool)
    out = np.zeros(size, dtype=bool)
    for r in range(-NEIGHBOUR_REACH, NEIGHBOUR_REACH + 1):
        out |= np.roll(stop_mask, r)
    return out


def admissible_flags(masks: list[np.ndarray], k_max: int) -> list[np.ndarray]:
    """Per scale ``k``: dyadic ``I`` at scale ``k`` meeting ``51 J`` for some flagged ``J`` with ``|I| <= |J|``."""
    out = []
    acc = np.zeros(1, dtype=bool)
    for s in range(k_max + 1):
        if s:
            acc = np.repeat(acc, 2)
        acc = acc | _near_flags(masks[s])
        out.append(acc)
    return out


def _tile_flags(family: TileFamily, flags: list[np.ndarray]) -> np.ndarray:
    out = np.zeros(family.size, dtype=bool)
    for k in family.scales:
        out[family.scale_slice(k)] = np.repeat(flags[k], 1 << (family.K - k))
    return out


def cz_decompose(P_n: TileSet, f: GridFunction, avgs: list[np.ndarray] | None = None) -> CZDecomposition:
    """Split ``P_n`` by the stopping intervals of ``f``, coarsest threshold first."""
    if f.is_zero():
        raise ValueError("the CZ decomposition needs a nonzero function")
    fam = P_n.family
    avgs = avgs if avgs is not None else dyadic_averages(f)
    N_exp = dyadic_exponent(float(avgs[-1].max()))
    M_exp = dyadic_exponent(float(avgs[0][0]))
    residual = P_n.mask()
    tiles, stopping = {}, {}
    for alpha in range(-N_exp, -M_exp + 1):
        masks = stopping_masks(avgs, math.ldexp(1.0, -alpha))
        stopping[alpha] = [DyadicInterval(s, int(i)) for s, m in enumerate(masks) for i in np.flatnonzero(m)]
        hit = residual & _tile_flags(fam, admissible_flags(masks, fam.k_max))
        tiles[alpha] = TileSet.from_mask(fam, hit)
        residual &= ~hit
    if residual.any():
        raise RuntimeError("CZ decomposition left tiles unassigned")
    return CZDecomposition(fam, N_exp, M_exp, tiles, stopping, avgs)


# --- checks on a decomposition ------------------------------------------------------


def support_excess(cz: CZDecomposition, alpha: int) -> float:
    """Measure of ``∪ I_P`` (over ``P_n^alpha``) lying outside ``100 {Mf > 2**-alpha}``."""
    K = cz.family.K
    supp = cz.support(alpha).to_mask(K)
    if not supp.any():
        return 0.0
    allowed = dilate_set(cz.level_set(alpha), 100.0).to_mask(K)
    return float(np.count_nonzero(supp & ~allowed)) * math.ldexp(1.0, -K)


def dichotomy_violations(cz: CZDecomposition, alpha: int) -> int:
    """Tiles of ``P_n^alpha`` that already qualified for some ``J`` in ``J_{alpha-1}``."""
    S = cz.tiles.get(alpha)
    if S is None or not len(S):
        return 0
    masks = stopping_masks(cz.avgs, math.ldexp(1.0, -(alpha - 1)))
    flags = _tile_flags(cz.family, admissible_flags(masks, cz.family.k_max))
    return int(np.count_nonzero(flags[S.ids]))


def shadow_violations(cz: CZDecomposition, alpha: int, exponent: int = CZ_EXPONENT) -> int:
    """Shadow pieces of ``P_n^alpha`` tiles whose average of ``|f|`` reaches ``2**(exponent-alpha)``."""
    S = cz.tiles.get(alpha)
    if S is None or not len(S):
        return 0
    bound = math.ldexp(1.0, exponent - alpha)
    bad = 0
    k, j = S.k, S.j
    for s in np.unique(k).tolist():
        js = np.unique(j[k == s])
        a = cz.avgs[s]
        for r in SHADOW_OFFSETS:
            bad += int(np.count_nonzero(a[(js + r) % (1 << s)] >= bound))
    return bad


def convexity_violations(P_n: TileSet, cz: CZDecomposition) -> int:
    """Tiles ``P2 ∈ P_n`` strictly between two tiles of one ``P_n^alpha`` but outside it (exhaustive)."""
    k, j, m = P_n.k, P_n.j, P_n.m
    d = k[:, None] - k[None, :]
    ds = np.maximum(d, 0)
    below = (d > 0) & ((j[:, None] >> ds) == j[None, :]) & ((m[None, :] >> ds) == m[:, None])  # row < col
    alpha = cz.alpha_of()[P_n.ids]
    bad = 0
    for a in np.unique(alpha).tolist():
        mem = alpha == a
        has_lower = below[mem, :].any(axis=0)
        has_upper = below[:, mem].any(axis=1)
        bad += int(np.count_nonzero(has_lower & has_upper & ~mem))
    return bad


# --- per-tree CZ partition and projection ---------------------------------------------


def shadow_intervals(P: Tile) -> list[DyadicInterval]:
    """The 14 intervals of length ``|I_P|`` flanking ``I_P`` at gaps ``3/2 |I_P|`` to ``17/2 |I_P|``."""
    size = 1 << P.k
    return [DyadicInterval(P.k, (P.j + r) % size) for r in SHADOW_OFFSETS]


def minimal_tiles(S: TileSet) -> TileSet:
    """Tiles of ``S`` with no other tile of ``S`` strictly below them."""
    fam = S.family
    K = fam.K
    member = S.mask()
    grids = {k: member[fam.scale_slice(k)].reshape(1 << k, 1 << (K - k)) for k in fam.scales}
    out = member.copy()
    for k in fam.scales:
        if not grids[k].any():
            continue
        has_child = np.zeros((1 << k, 1 << (K - k)), dtype=bool)
        for k2 in range(k + 1, fam.k_max + 1):
            G = grids[k2]
            if not G.any():
                continue
            d = k2 - k
            # Q = (k2, j2, m2) < P = (k, j, m) iff j2 >> d == j and m >> d == m2
            hit = G.reshape(1 << k, 1 << d, -1).any(axis=1)
            has_child |= np.repeat(hit, 1 << d, axis=1)
        out[fam.scale_slice(k)] &= ~has_child.reshape(-1)
    return TileSet.from_mask(fam, out)


def tree_shadows(S: TileSet) -> list[DyadicInterval]:
    seen = set()
    out = []
    for P in minimal_tiles(S):
        for I in shadow_intervals(P):
            if I not in seen:
                seen.add(I)
                out.append(I)
    return sorted(out)


def cz_partition(members, K: int | None = None) -> list[DyadicInterval]:
    """Maximal dyadic intervals that strictly contain no member; a partition of ``[0, 1)``."""
    members = list(members)
    if not members:
        return [DyadicInterval(0, 0)]
    top = max(I.scale for I in members)
    bad = [np.zeros(1 << s, dtype=bool) for s in range(top + 1)]
    for s in range(1, top + 1):
        idx = np.array([I.index for I in members if I.scale == s], dtype=np.int64)
        if idx.size:
            for t in range(s):
                bad[t][idx >> (s - t)] = True
    out = []
    for s in range(top + 1):
        if s == 0:
            keep = ~bad[0]
        else:
            keep = ~bad[s] & np.repeat(bad[s - 1], 2)
        out.extend(DyadicInterval(s, int(i)) for i in np.flatnonzero(keep))
    return sorted(out, key=lambda I: (I.left, I.scale))


def refine_partition(partition, avgs: list[np.ndarray], bound: float) -> tuple[list[DyadicInterval], int]:
    """Split cells whose ``|f|`` average reaches ``bound`` until it drops below or cells are single grid points.

    Returns the refined partition and the number of splits performed.
    """
    K = len(avgs) - 1
    stack = list(partition)
    out, splits = [], 0
    while stack:
        I = stack.pop()
        if avgs[I.scale][I.index] >= bound and I.scale < K:
            splits += 1
            stack.extend(I.children())
        else:
            out.append(I)
    if splits:
        log.info("CZ partition refined %d times for bound %g", splits, bound)
    return sorted(out, key=lambda I: (I.left, I.scale)), splits


def partition_labels(partition, K: int) -> np.ndarray:
    """Cell index -> position in ``partition``; raises unless the cells are covered exactly once."""
    labels = np.full(1 << K, -1, dtype=np.int64)
    for pos, I in enumerate(partition):
        sl = I.cells(K)
        if (labels[sl] >= 0).any():
            raise ValueError("partition cells overlap")
        labels[sl] = pos
    if (labels < 0).any():
        raise ValueError("partition does not cover the torus")
    return labels


def modulate(f: GridFunction, omega: int) -> np.ndarray:
    """Values of ``f(x) e^{2 pi i omega x}`` on the grid."""
    n = f.n
    return f.values * _roots(f.K)[(omega * np.arange(n)) % n]


def tree_projection(f: GridFunction, tree: TileSet | None, omega: int,
                    partition: list[DyadicInterval] | None = None) -> GridFunction:
    """``sum_J avg_J(f e^{2 pi i omega .}) chi_J`` over the cells of ``partition``.

    Without an explicit partition the stopping-time partition of the tree's
    minimal-tile shadows is used.
    """
    K = f.K
    if partition is None:
        if tree is None:
            raise ValueError("need a tree or a partition")
        partition = cz_partition(tree_shadows(tree))
    labels = partition_labels(partition, K)
    g = modulate(f, omega)
    count = np.bincount(labels, minlength=len(partition))
    re = np.bincount(labels, g.real, minlength=len(partition)) / count
    im = np.bincount(labels, g.imag, minlength=len(partition)) / count
    return GridFunction(K, (re + 1j * im)[labels])
