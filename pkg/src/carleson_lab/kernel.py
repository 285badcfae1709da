"""Smooth odd kernel pieces and the scale operators ``T_k``.

``psi_k(y) = 2**k psi(2**k y)`` with ``psi(y) = (eta(|y|) - eta(2|y|)) / y`` so that
``sum_{k=a}^{b} psi_k(y) = (eta(2**a |y|) - eta(2**(b+1) |y|)) / y``.
The discrete operator is the truncated sum over ``k_min..k_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dyadic import GridFunction
from .tiles import ECache, LinearizingFunction, Tile, TileFamily, TileSet, e_mask


@dataclass(frozen=True)
class KernelConfig:
    K: int
    k_min: int = 3
    k_max: int | None = None

    def __post_init__(self):
        if self.k_max is None:
            object.__setattr__(self, "k_max", self.K - 3)
        if not 0 <= self.k_min <= self.k_max <= self.K:
            raise ValueError(
                f"need 0 <= k_min <= k_max <= K, got k_min={self.k_min}, "
                f"k_max={self.k_max}, K={self.K}")

    @property
    def scales(self) -> range:
        return range(self.k_min, self.k_max + 1)


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smoothstep(t):
    a = _g(t)
    return a / (a + _g(1.0 - t))


def eta_profile(y):
    """Even cutoff: 1 for ``|y| <= 4``, 0 for ``|y| >= 8``, smooth and strictly decreasing in ``|y|`` between."""
    y = np.abs(np.asarray(y, dtype=float))
    out = _smoothstep((8.0 - y) / 4.0)
    return float(out) if out.ndim == 0 else out


def psi(y, k: int = 0):
    """``psi_k(y)``; odd, supported in ``2 * 2**-k < |y| < 8 * 2**-k``."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y) * math.ldexp(1.0, k)
    num = _smoothstep((8.0 - a) / 4.0) - _smoothstep((8.0 - 2.0 * a) / 4.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y != 0, num / np.where(y != 0, y, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def truncated_kernel(y, cfg: KernelConfig):
    """``sum_{k=k_min}^{k_max} psi_k(y)``, cross-checked against the telescoped form."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr == 0):
        raise ValueError("truncated kernel is undefined at y = 0")
    total = np.zeros_like(y_arr)
    for k in cfg.scales:
        total = total + psi(y_arr, k)
    a = np.abs(y_arr)
    closed = (eta_profile(a * math.ldexp(1.0, cfg.k_min))
              - eta_profile(a * math.ldexp(1.0, cfg.k_max + 1))) / y_arr
    if not np.all(np.abs(total - closed) <= 1e-12):
        raise AssertionError("partial sum disagrees with telescoped closed form")
    return float(closed) if closed.ndim == 0 else closed


# --- discrete scale operators ---------------------------------------------------


@lru_cache(maxsize=None)
def _roots(K: int) -> np.ndarray:
    n = 1 << K
    r = np.exp(2j * np.pi * np.arange(n) / n)
    r.setflags(write=False)
    return r


@lru_cache(maxsize=None)
def scale_offsets(K: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid offsets ``d`` with ``y = d 2**-K`` in ``(-1/2, 1/2]`` where ``psi_k(y) != 0``, and the weights."""
    n = 1 << K
    d = np.arange(-(n // 2) + 1, n // 2 + 1)
    w = psi(d / n, k) if n > 1 else np.zeros(1)
    keep = np.flatnonzero(w != 0)
    d, w = d[keep], np.asarray(w)[keep]
    d.setflags(write=False)
    w.setflags(write=False)
    return d, w


def scale_apply(values: np.ndarray, phase: np.ndarray, K: int, k: int,
                points: np.ndarray | None = None) -> np.ndarray:
    """``2**-K sum_y e^{2 pi i phase(x) y} psi_k(y) f(x - y)`` at the requested output points.

    ``phase`` holds integer frequencies per grid point. Offsets are summed in a
    fixed order so results do not depend on how outputs are batched.
    """
    n = 1 << K
    roots = _roots(K)
    offs, weights = scale_offsets(K, k)
    if points is None:
        support = np.flatnonzero(values)
        if 4 * support.size <= n:
            return _scale_apply_sparse(values, support, phase, K, offs, weights)
    idx = np.arange(n) if points is None else np.asarray(points)
    ph = np.asarray(phase, dtype=np.int64)[idx]
    out = np.zeros(idx.size, dtype=complex)
    for d, w in zip(offs.tolist(), weights.tolist()):
        out += w * roots[(ph * d) % n] * values[(idx - d) % n]
    return out * math.ldexp(1.0, -K)


def _scale_apply_sparse(values, support, phase, K, offs, weights):
    # same per-point summation order as the dense loop, touching only x - d in the support
    n = 1 << K
    roots = _roots(K)
    ph = np.asarray(phase, dtype=np.int64)
    src = values[support]
    out = np.zeros(n, dtype=complex)
    for d, w in zip(offs.tolist(), weights.tolist()):
        x = (support + d) % n
        out[x] += w * roots[(ph[x] * d) % n] * src
    return out * math.ldexp(1.0, -K)


def scale_adjoint(values: np.ndarray, phase: np.ndarray, K: int, k: int,
                  weight_mask: np.ndarray | None = None) -> np.ndarray:
    """Conjugate transpose of ``scale_apply`` (optionally preceded by a 0/1 output mask)."""
    n = 1 << K
    idx = np.arange(n)
    g = values if weight_mask is None else np.where(weight_mask, values, 0)
    ph = np.asarray(phase, dtype=np.int64)
    conj_roots = np.conj(_roots(K))
    out = np.zeros(n, dtype=complex)
    offs, weights = scale_offsets(K, k)
    for d, w in zip(offs.tolist(), weights.tolist()):
        # x' = x - d receives conj(A[x, x']) g(x)
        contrib = w * conj_roots[(ph * d) % n] * g
        out += np.roll(contrib, -d)
    return out * math.ldexp(1.0, -K)


def apply_scale(f: GridFunction, N, k: int, cfg: KernelConfig | None = None) -> GridFunction:
    """``T_k f`` for the linearizing function ``N``."""
    cfg = cfg or KernelConfig(f.K)
    if k not in cfg.scales:
        raise ValueError(f"scale {k} outside kernel range {cfg.k_min}..{cfg.k_max}")
    return GridFunction(f.K, scale_apply(f.values, _freqs(N), f.K, k))


def _freqs(N) -> np.ndarray:
    return np.asarray(getattr(N, "values", N), dtype=np.int64)


# --- tile operators ----------------------------------------------------------------


def _kernel_for(family: TileFamily, cfg: KernelConfig | None) -> KernelConfig:
    cfg = cfg or KernelConfig(family.K, family.k_min, family.k_max)
    if family.k_min < cfg.k_min or family.k_max > cfg.k_max:
        raise ValueError("tile scales fall outside the kernel range")
    return cfg


class TileOperator:
    """Applies ``T^S`` for many tile sets ``S`` of one family under a fixed ``N``.

    ``responses(f)`` computes every ``T_k f`` once; since each grid point lies
    in exactly one ``E(P)`` per scale, ``T^S f`` is then a masked sum of those.
    """

    def __init__(self, family: TileFamily, N: LinearizingFunction,
                 cfg: KernelConfig | None = None, ecache: ECache | None = None):
        self.family = family
        self.N = N
        self.cfg = _kernel_for(family, cfg)
        self.ecache = ecache or ECache(family, N)

    @property
    def K(self) -> int:
        return self.family.K

    def responses(self, f: GridFunction, phase: np.ndarray | None = None) -> dict[int, np.ndarray]:
        phase = self.N.values if phase is None else phase
        return {k: scale_apply(f.values, phase, self.K, k) for k in self.family.scales}

    def apply(self, S: TileSet, responses: dict[int, np.ndarray]) -> np.ndarray:
        member = S.mask()
        out = np.zeros(1 << self.K, dtype=complex)
        for k in self.family.scales:
            out += np.where(member[self.ecache.tile_of_cell[k]], responses[k], 0)
        return out

    def full(self, responses: dict[int, np.ndarray]) -> np.ndarray:
        out = np.zeros(1 << self.K, dtype=complex)
        for k in self.family.scales:
            out += responses[k]
        return out

    def apply_labels(self, labels: np.ndarray, n_labels: int,
                     responses: dict[int, np.ndarray], cells: np.ndarray | None = None) -> np.ndarray:
        """Rows ``T^{S_l} f`` for the partition ``S_l = {labels == l}`` (``-1`` = unlabelled)."""
        n = 1 << self.K
        keys, re, im = [], [], []
        for k in self.family.scales:
            lab = labels[self.ecache.tile_of_cell[k]]
            sel = lab >= 0
            if cells is not None:
                sel &= cells
            x = np.flatnonzero(sel)
            keys.append(lab[x] * n + x)
            v = responses[k][x]
            re.append(v.real)
            im.append(v.imag)
        keys = np.concatenate(keys)
        size = n_labels * n
        out = (np.bincount(keys, np.concatenate(re), minlength=size)
               + 1j * np.bincount(keys, np.concatenate(im), minlength=size))
        return out.reshape(n_labels, n)

    def label_values(self, labels: np.ndarray, responses: dict[int, np.ndarray]
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse form of :meth:`apply_labels`: ``(label, x, value)`` for every touched pair."""
        n = 1 << self.K
        keys, vals = [], []
        for k in self.family.scales:
            lab = labels[self.ecache.tile_of_cell[k]]
            x = np.flatnonzero(lab >= 0)
            keys.append(lab[x] * n + x)
            vals.append(responses[k][x])
        keys = np.concatenate(keys)
        vals = np.concatenate(vals)
        uniq, inv = np.unique(keys, return_inverse=True)
        out = (np.bincount(inv, vals.real, minlength=uniq.size)
               + 1j * np.bincount(inv, vals.imag, minlength=uniq.size))
        return uniq // n, uniq % n, out

    def adjoint(self, S: TileSet, g: GridFunction) -> np.ndarray:
        member = S.mask()
        out = np.zeros(1 << self.K, dtype=complex)
        for k in self.family.scales:
            mask = member[self.ecache.tile_of_cell[k]]
            if mask.any():
                out += scale_adjoint(g.values, self.N.values, self.K, k, weight_mask=mask)
        return out


def apply_tile(f: GridFunction, N: LinearizingFunction, P: Tile,
               cfg: KernelConfig | None = None) -> GridFunction:
    """``T_P f = (T_k f) chi_{E(P)}`` with ``k`` the time scale of ``P``."""
    cfg = cfg or KernelConfig(f.K)
    if P.k not in cfg.scales:
        raise ValueError(f"tile scale {P.k} outside kernel range")
    mask = e_mask(P, N)
    if not mask.any():
        return GridFunction.zeros(f.K)
    return GridFunction(f.K, np.where(mask, scale_apply(f.values, N.values, f.K, P.k), 0))


def apply_tileset(f: GridFunction, N: LinearizingFunction, S: TileSet,
                  cfg: KernelConfig | None = None) -> GridFunction:
    """``T^S f = sum_{P in S} T_P f``."""
    if len(S) == 0:
        return GridFunction.zeros(f.K)
    op = TileOperator(S.family, N, cfg)
    scales = np.unique(S.k).tolist()
    resp = {k: (scale_apply(f.values, N.values, f.K, k) if k in scales else np.zeros(f.n, complex))
            for k in S.family.scales}
    return GridFunction(f.K, op.apply(S, resp))


def apply_tileset_adjoint(g: GridFunction, N: LinearizingFunction, S: TileSet,
                          cfg: KernelConfig | None = None) -> GridFunction:
    """Conjugate transpose of ``f -> T^S f`` for the pairing ``<u, v> = 2**-K sum u conj(v)``."""
    if len(S) == 0:
        return GridFunction.zeros(g.K)
    return GridFunction(g.K, TileOperator(S.family, N, cfg).adjoint(S, g))
