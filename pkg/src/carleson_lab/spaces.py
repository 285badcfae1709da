"""Norms of the rearrangement-invariant spaces between ``L log L`` and ``L^1``.

All functions act on step functions over the ``2**K`` grid, so every integral
is an exact finite sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dyadic import GridFunction, lp_norm

E_E = math.exp(math.e)  # smallest offset keeping log log log nonnegative


@dataclass(frozen=True)
class PhiProfile:
    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.func(t)
        return float(out) if out.ndim == 0 else out


def _log(t):
    return np.log1p(t)


def _loglog(t):
    return np.log1p(t) * np.log(np.log(math.e + t))


def _logloglog(t):
    return np.log1p(t) * np.log(np.log(np.log(E_E + t)))


def _soria(s):
    with np.errstate(divide="ignore"):
        extra = np.where(s > 0, np.maximum(0.0, -np.log(np.where(s > 0, s, 1.0))), 0.0)
    return s * (1.0 + extra)


PROFILES = {
    "log": PhiProfile("log", _log),
    "loglog": PhiProfile("loglog", _loglog),
    "logloglog": PhiProfile("logloglog", _logloglog),
    "soria_phi1": PhiProfile("soria_phi1", _soria),
}


def profile(name: str | PhiProfile) -> PhiProfile:
    if isinstance(name, PhiProfile):
        return name
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def orlicz_modular(f: GridFunction, phi: str | PhiProfile = "log") -> float:
    """``∫ |f| φ(|f|)``."""
    phi = profile(phi)
    a = f.abs()
    return float(np.sum(a * phi(a)) * f.h)


def orlicz_norm(f: GridFunction, phi: str | PhiProfile = "log") -> float:
    """``∫ f*(t) φ(f*(t)) dt`` over the decreasing rearrangement."""
    phi = profile(phi)
    a = np.sort(f.abs())[::-1]
    return float(np.sum(a * phi(a)) * f.h)


def _distribution_steps(f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """Heights ``a_i - a_{i+1}`` and the level ``λ = i h`` on each step of ``t -> λ_f(t)``."""
    a = np.sort(f.abs())[::-1]
    widths = a - np.append(a[1:], 0.0)
    lam = np.arange(1, a.size + 1) * f.h
    return widths, lam


def soria_norms(f: GridFunction, phi: str | PhiProfile = "soria_phi1") -> tuple[float, float]:
    """``(∫ φ(λ_f(t)) dt, ∫ φ(λ_f)(1 + log(‖f‖_φ / φ(λ_f))) dt)``."""
    phi = profile(phi)
    widths, lam = _distribution_steps(f)
    vals = phi(lam)
    norm = float(np.sum(widths * vals))
    if norm == 0.0:
        raise ValueError("the starred norm is undefined for the zero function")
    use = widths > 0
    starred = float(np.sum(widths[use] * vals[use] * (1.0 + np.log(norm / vals[use]))))
    return norm, starred


def soria_norm(f: GridFunction, phi: str | PhiProfile = "soria_phi1") -> float:
    phi = profile(phi)
    widths, lam = _distribution_steps(f)
    return float(np.sum(widths * phi(lam)))


def _qa_sum(pieces: list[np.ndarray], p: float, h: float) -> float:
    total = 0.0
    norms = []
    for v in pieces:
        n1 = float(np.sum(np.abs(v)) * h)
        if n1 > 0:
            norms.append((n1, lp_norm(v, p)))
    norms.sort(key=lambda t: -t[0])
    for j, (n1, np_) in enumerate(norms, start=1):
        total += (1.0 + math.log(j)) * n1 * math.log(math.e * np_ / n1)
    return total


def level_pieces(f: GridFunction) -> list[np.ndarray]:
    """``f χ_{Q_l}`` with ``Q_l = {|f| ∈ [2**l, 2**(l+1))}``, one per nonempty ``l``."""
    a = f.abs()
    nz = a > 0
    if not nz.any():
        return []
    lev = np.full(a.size, np.iinfo(np.int64).min, dtype=np.int64)
    lev[nz] = np.frexp(a[nz])[1] - 1
    return [np.where(lev == l, f.values, 0) for l in np.unique(lev[nz]).tolist()]


QA_STRATEGIES = ("levels", "single")


def qa_upper(f: GridFunction, p: float = math.inf, strategy: str = "best") -> float:
    """Value of the ``QA_p`` functional on one explicit decomposition of ``f``.

    ``levels`` splits ``f`` along the dyadic level sets of ``|f|``; ``single``
    keeps ``f`` whole; ``best`` returns the smaller of the two.  Each is an
    upper bound for the quasinorm, which is an infimum over all decompositions.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if strategy == "best":
        return min(qa_upper(f, p, s) for s in QA_STRATEGIES)
    if strategy == "levels":
        return _qa_sum(level_pieces(f), p, f.h)
    if strategy == "single":
        return _qa_sum([f.values], p, f.h)
    raise ValueError(f"unknown strategy {strategy!r}")


def l_log2_levels(f: GridFunction) -> float:
    """``sum_l 2**l |Q_l| log(e / |Q_l|)**2`` over the dyadic level sets of ``|f|``."""
    a = f.abs()
    nz = a > 0
    if not nz.any():
        return 0.0
    lev = np.frexp(a[nz])[1] - 1
    total = 0.0
    for l in np.unique(lev).tolist():
        q = np.count_nonzero(lev == l) * f.h
        total += math.ldexp(q, l) * math.log(math.e / q) ** 2
    return total
