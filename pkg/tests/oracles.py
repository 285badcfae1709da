"""Slow reference implementations written from the definitions.

Nothing here imports the package internals beyond plain data containers, so
each test compares two independent routes to the same quantity.
"""

from __future__ import annotations

import math

import numpy as np


# --- kernel --------------------------------------------------------------------


def _bump(t: float) -> float:
    return math.exp(-1.0 / t) if t > 0 else 0.0


def eta(y: float) -> float:
    """Cutoff equal to 1 on [0, 4] and 0 beyond 8, smooth in between."""
    t = (8.0 - abs(y)) / 4.0
    a, b = _bump(t), _bump(1.0 - t)
    return a / (a + b)


def psi(y: float, k: int) -> float:
    if y == 0:
        return 0.0
    s = abs(y) * 2.0 ** k
    return (eta(s) - eta(2.0 * s)) / y


def centered(d: int, n: int) -> int:
    """Representative of ``d mod n`` in ``(-n/2, n/2]``."""
    d %= n
    return d - n if d > n // 2 else d


def scale_matrix(K: int, k: int, N: np.ndarray) -> np.ndarray:
    """Dense matrix of ``f -> 2**-K sum_d psi_k(d/n) e(N(x) d / n) f(x - d)``."""
    n = 1 << K
    w = np.array([psi(centered(d, n) / n, k) for d in range(n)])
    x = np.arange(n)
    d = (x[:, None] - x[None, :]) % n
    dc = np.where(d > n // 2, d - n, d)
    phase = np.exp(2j * np.pi * ((np.asarray(N)[:, None] * dc) % n) / n)
    return w[d] * phase / n


def tile_matrix(K: int, scales, N: np.ndarray, members: set[tuple[int, int, int]]) -> np.ndarray:
    """Dense matrix of ``T^S``: row ``x`` of scale ``k`` survives when its tile is in ``S``."""
    n = 1 << K
    A = np.zeros((n, n), dtype=complex)
    x = np.arange(n)
    for k in scales:
        keep = np.array([(k, int(xx) >> (K - k), int(N[xx]) >> k) in members for xx in x])
        if keep.any():
            A[keep] += scale_matrix(K, k, N)[keep]
    return A


def pairing(u: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.sum(u * np.conj(v))) / u.size


# --- dyadic structure ----------------------------------------------------------


def maximal_function(values: np.ndarray) -> np.ndarray:
    """Max over dyadic intervals containing each cell of the average of ``|f|``."""
    a = np.abs(np.asarray(values))
    n = a.size
    K = n.bit_length() - 1
    out = np.zeros(n)
    for s in range(K + 1):
        L = n >> s
        for j in range(1 << s):
            avg = a[j * L:(j + 1) * L].mean()
            out[j * L:(j + 1) * L] = np.maximum(out[j * L:(j + 1) * L], avg)
    return out


def stopping_intervals(values: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximal dyadic ``(scale, index)`` whose average of ``|f|`` exceeds ``threshold``."""
    a = np.abs(np.asarray(values))
    n = a.size
    K = n.bit_length() - 1
    found: list[tuple[int, int]] = []
    for s in range(K + 1):
        L = n >> s
        for j in range(1 << s):
            if any((j >> (s - s0)) == j0 for s0, j0 in found if s0 <= s):
                continue
            if a[j * L:(j + 1) * L].mean() > threshold:
                found.append((s, j))
    return sorted(found)


def dilated_cells(components: list[tuple[int, int]], factor: int, n: int) -> np.ndarray:
    """Cells lying wholly inside the union of concentric ``factor``-dilates of cell runs.

    A run ``[a, b)`` (cell indices, ``b > a``, may exceed ``n`` when wrapping)
    dilates to ``[(a+b)/2 - factor (b-a)/2, (a+b)/2 + factor (b-a)/2)``.
    Arithmetic is in half cells so everything stays integral.
    """
    out = np.zeros(n, dtype=bool)
    for a, b in components:
        if factor * (b - a) >= n:
            out[:] = True
            continue
        lo2 = (a + b) - factor * (b - a)   # twice the left end
        hi2 = (a + b) + factor * (b - a)
        first = -(-lo2 // 2)                # first cell whose left end is >= lo
        last = hi2 // 2                     # cells end at or before hi
        for c in range(first, last):
            out[c % n] = True
    return out


def cell_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal circular runs of ``True`` as ``(start, stop)`` with ``stop`` possibly past ``n``."""
    mask = np.asarray(mask, dtype=bool)
    n = mask.size
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    start = int(np.flatnonzero(~mask)[0])  # rotate so the scan starts at a gap
    runs, cur = [], None
    for i in range(start, start + n + 1):
        on = mask[i % n]
        if on and cur is None:
            cur = i
        elif not on and cur is not None:
            runs.append((cur, i))
            cur = None
    return runs


# --- tiles and mass -----------------------------------------------------------


def e_cells(P: tuple[int, int, int], N: np.ndarray) -> list[int]:
    k, j, m = P
    n = len(N)
    L = n >> k
    return [x for x in range(j * L, (j + 1) * L) if m * 2 ** k <= N[x] < (m + 1) * 2 ** k]


def precedes(P: tuple[int, int, int], Q: tuple[int, int, int]) -> bool:
    """``P <= Q``: ``I_P`` inside ``I_Q`` and ``omega_Q`` inside ``omega_P``."""
    kp, jp, mp = P
    kq, jq, mq = Q
    if kp < kq:
        return False
    return (jp >> (kp - kq)) == jq and (mq >> (kp - kq)) == mp


def brute_mass(P, pool, region: np.ndarray, N: np.ndarray, N_mass: int) -> float:
    """Sup over pool tiles ``Q`` with ``I_P ⊆ I_Q ⊆ region`` of density times frequency decay."""
    n = len(N)
    kp, _, mp = P
    cp, lp = (mp + 0.5) * 2.0 ** kp, 2.0 ** kp
    best = 0.0
    for Q in pool:
        kq, jq, mq = Q
        if kq > kp or (P[1] >> (kp - kq)) != jq:
            continue
        L = n >> kq
        if not region[jq * L:(jq + 1) * L].all():
            continue
        dens = len(e_cells(Q, N)) / L
        if dens == 0:
            continue
        cq, lq = (mq + 0.5) * 2.0 ** kq, 2.0 ** kq
        gap = max(0.0, abs(cp - cq) - 5 * lp - 5 * lq)
        best = max(best, dens * (1.0 + 2.0 ** -kq * gap) ** -N_mass)
    return best
