"""Measured ratios for the decomposition invariants and the boundedness inequalities.

Every check becomes a :class:`CheckRecord` ``lhs / rhs`` compared against a
pass constant.  Exact containments use ``rhs = 0`` and constant ``0`` (so they
pass only when the violating measure or count is zero); experiments without
a claimed bound use constant ``inf``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .cz import (CZ_EXPONENT, CZDecomposition, convexity_violations, cz_decompose, cz_partition,
                 dichotomy_violations, modulate, refine_partition, shadow_violations, support_excess,
                 tree_projection, tree_shadows)
from .dyadic import GridFunction, dyadic_averages, dyadic_maximal, lp_norm, weak_quasinorm
from .generate import generate_f, generate_N
from .kernel import TileOperator, _roots, scale_adjoint, scale_apply
from .mass import MassDecomposition, extract_maximal_trees, forest_decompose
from .spaces import l_log2_levels, orlicz_norm, qa_upper, soria_norms
from .tiles import LinearizingFunction, Tile, TileFamily, TileSet, Tree, is_bmo_forest

EXACT = 1e-12


# --- records ---------------------------------------------------------------------------


@dataclass
class CheckRecord:
    name: str
    lhs: float
    rhs: float
    constant: float
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs, self.rhs, self.constant = float(self.lhs), float(self.rhs), float(self.constant)

    @property
    def ratio(self) -> float:
        if self.lhs == 0:
            return 0.0
        if self.rhs == 0:
            return math.inf
        return self.lhs / self.rhs

    @property
    def passed(self) -> bool:
        return bool(self.ratio <= self.constant)

    @property
    def family(self) -> str:
        return self.name

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
                "ratio": _num(self.ratio), "constant": _num(self.constant),
                "pass": self.passed, "context": _plain(self.context)}


def _plain(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _num(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


@dataclass
class VerificationReport:
    meta: dict
    checks: list[CheckRecord]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        out: dict[str, float] = {}
        for c in self.checks:
            out[c.name] = max(out.get(c.name, 0.0), c.ratio)
        return out

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"meta": self.meta, "checks": [c.to_json() for c in self.checks],
                "summary": {k: _num(v) for k, v in sorted(self.summary().items())},
                "passed": self.passed}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "lhs", "rhs", "ratio", "constant", "pass", "context"])
        for c in self.checks:
            row = c.to_json()
            w.writerow([row["name"], row["lhs"], row["rhs"], row["ratio"], row["constant"],
                        int(row["pass"]), json.dumps(row["context"], sort_keys=True)])
        return buf.getvalue()


def load_constants(overrides: dict | None = None) -> dict[str, float]:
    """Pass constants from the packaged defaults, optionally overridden."""
    text = resources.files(__package__).joinpath("defaults.json").read_text()
    raw = json.loads(text)["constants"]
    out = {k: float(v) for k, v in raw.items()}
    for k, v in (overrides or {}).items():
        out[k] = float(v)
    return out


class _Constants:
    def __init__(self, constants: dict | None):
        self.table = load_constants() if constants is None else dict(constants)

    def __call__(self, name: str) -> float:
        return self.table.get(name, math.inf)


# --- shared workspace ------------------------------------------------------------------


class Workspace:
    """Everything derived once from ``(f, N, decompositions)`` and shared by the checks."""

    def __init__(self, f: GridFunction, N: LinearizingFunction, massdec: MassDecomposition,
                 czdecs: dict[int, CZDecomposition] | None = None):
        self.f, self.N, self.massdec = f, N, massdec
        self.family = massdec.family
        self.K = self.family.K
        self.h = math.ldexp(1.0, -self.K)
        self.op = TileOperator(self.family, N)
        self.resp = self.op.responses(f)
        self.Tf = self.op.full(self.resp)
        self.avgs = dyadic_averages(f)
        if czdecs is None:
            czdecs = {} if f.is_zero() else {
                n: cz_decompose(S, f, self.avgs) for n, S in massdec.levels.items() if len(S)}
        self.czdecs = czdecs
        self._pairs = None
        self._trees = {}

    @property
    def levels(self) -> list[int]:
        return self.massdec.nonempty_levels()

    def level_rows(self) -> dict[int, np.ndarray]:
        lab = self.massdec.level_of()
        rows = self.op.apply_labels(np.where(lab >= 0, lab, -1), self.family.K + 64, self.resp)
        return {n: rows[n] for n in self.levels}

    def pair_rows(self) -> dict[tuple[int, int], np.ndarray]:
        """``T^{P_n^alpha} f`` for every nonempty ``(n, alpha)``."""
        if self._pairs is None:
            keys = [(n, a) for n in sorted(self.czdecs) for a, S in sorted(self.czdecs[n].tiles.items()) if len(S)]
            labels = np.full(self.family.size, -1, dtype=np.int64)
            for i, (n, a) in enumerate(keys):
                labels[self.czdecs[n].tiles[a].ids] = i
            rows = self.op.apply_labels(labels, len(keys), self.resp) if keys else np.zeros((0, 1 << self.K))
            self._pairs = {key: rows[i] for i, key in enumerate(keys)}
        return self._pairs

    def trees(self, n: int, alpha: int) -> list[Tree]:
        key = (n, alpha)
        if key not in self._trees:
            self._trees[key] = extract_maximal_trees(self.czdecs[n].tiles[alpha])
        return self._trees[key]

    def tree_stats(self, trees: Sequence[Tree], weight: np.ndarray | None = None):
        """Per tree: ``∫ w |T^p f|``, ``|E(p)|`` and ``|E(p) ∩ {w > 0}|``."""
        labels = np.full(self.family.size, -1, dtype=np.int64)
        for i, (S, _) in enumerate(trees):
            labels[S.ids] = i
        lab, x, val = self.op.label_values(labels, self.resp)
        w = np.ones(1 << self.K) if weight is None else weight.astype(float)
        l1 = np.bincount(lab, np.abs(val) * w[x], minlength=len(trees)) * self.h
        e_all = np.bincount(lab, minlength=len(trees)) * self.h
        e_w = np.bincount(lab, (w[x] > 0).astype(float), minlength=len(trees)) * self.h
        return l1, e_all, e_w


def _l1(v: np.ndarray, h: float, weight: np.ndarray | None = None) -> float:
    a = np.abs(v)
    if weight is not None:
        a = a * weight
    return float(a.sum() * h)


# --- Theorem a and the structural CZ checks ---------------------------------------------


def verify_theorem_a(f: GridFunction, N: LinearizingFunction, massdec: MassDecomposition,
                     czdecs: dict[int, CZDecomposition] | None = None, constants: dict | None = None,
                     ws: Workspace | None = None) -> list[CheckRecord]:
    ws = ws or Workspace(f, N, massdec, czdecs)
    C = _Constants(constants)
    out = []
    llogl = orlicz_norm(f, "log")
    rows = ws.pair_rows()
    for n in ws.levels:
        cz = ws.czdecs.get(n)
        total = 0.0
        if cz is not None:
            for a in cz.alphas:
                S = cz.tiles[a]
                ctx = {"n": n, "alpha": a}
                out.append(CheckRecord("a.support", support_excess(cz, a), 0.0, C("a.support"), ctx))
                out.append(CheckRecord("cz.dichotomy", dichotomy_violations(cz, a), 0.0, C("cz.dichotomy"), ctx))
                out.append(CheckRecord("cz.shadow", shadow_violations(cz, a), 0.0, C("cz.shadow"), ctx))
                if not len(S):
                    continue
                lhs = _l1(rows[(n, a)], ws.h)
                total += lhs
                level = cz.level_set(a).measure
                out.append(CheckRecord("a.main", lhs, math.ldexp(level, -a), C("a.main"), ctx))
            parts = sum(len(S) for S in cz.tiles.values())
            missing = abs(parts - len(massdec.levels[n]))
            out.append(CheckRecord("cz.partition", missing, 0.0, C("cz.partition"), {"n": n}))
        out.append(CheckRecord("a.llogl", total, llogl, C("a.llogl"), {"n": n}))
    return out


def verify_consistency(ws: Workspace, constants: dict | None = None, seed: int = 0) -> list[CheckRecord]:
    """Operator partition over ``(n, alpha)`` plus ``P_inf`` and a duality spot check per level."""
    C = _Constants(constants)
    total = np.zeros(1 << ws.K, dtype=complex)
    if ws.czdecs:
        for row in ws.pair_rows().values():
            total += row
    else:
        for row in ws.level_rows().values():
            total += row
    total += ws.op.apply(ws.massdec.unassigned, ws.resp)
    err = float(np.abs(total - ws.Tf).max())
    out = [CheckRecord("consistency.partition", err, 1.0, C("consistency.partition"))]
    rng = np.random.default_rng(seed)
    Q = GridFunction(ws.K, (rng.random(1 << ws.K) < 0.5).astype(float))
    g = GridFunction(ws.K, rng.normal(size=1 << ws.K) + 1j * rng.normal(size=1 << ws.K))
    respQ = ws.op.responses(Q)
    for n in ws.levels:
        S = ws.massdec.levels[n]
        lhs = np.sum(ws.op.apply(S, respQ) * np.conj(g.values)) * ws.h
        rhs = np.sum(Q.values * np.conj(ws.op.adjoint(S, g))) * ws.h
        out.append(CheckRecord("consistency.duality", float(abs(lhs - rhs)), 1.0,
                               C("consistency.duality"), {"n": n}))
    return out


def verify_mass(massdec: MassDecomposition, constants: dict | None = None) -> list[CheckRecord]:
    """Window soundness, layer decay and counting-function bounds of the mass decomposition."""
    C = _Constants(constants)
    out = []
    m = massdec.masses
    for n, S in sorted(massdec.levels.items()):
        if not len(S):
            continue
        vals = m[S.ids]
        bad = int(np.count_nonzero(~((vals >= 2.0 ** -n) & (vals < 2.0 ** (1 - n)))))
        out.append(CheckRecord("mass.window", bad, 0.0, C("mass.window"), {"n": n}))
    for n, layers in sorted(massdec.layers.items()):
        if not any(len(L.tops) for L in layers):
            continue
        worst = 0.0
        for i, Li in enumerate(layers):
            for Lk in layers[i + 1:]:
                if Li.region.measure > 0:
                    worst = max(worst, Lk.region.measure / (2.0 ** -(Lk.k - Li.k) * Li.region.measure))
        out.append(CheckRecord("mass.layer_decay", worst, 1.0, C("mass.layer_decay"), {"n": n}))
        bmo = max(L.bmo for L in layers)
        out.append(CheckRecord("mass.bmo", bmo, 2.0 ** n, C("mass.bmo"), {"n": n}))
        linf = 0.0
        K = massdec.family.K
        for L in layers:
            if not len(L.tops):
                continue
            count = L.counting().values.real
            keep = L.region.to_mask(K) & ~L.exceptional.to_mask(K)
            if keep.any():
                linf = max(linf, float(count[keep].max()))
        out.append(CheckRecord("mass.linf", linf, massdec.c * 2.0 ** n, C("mass.linf"), {"n": n}))
    out.append(CheckRecord("mass.discard_empty", len(massdec.leak), 0.0, C("mass.discard_empty")))
    return out


def verify_forests(massdec: MassDecomposition, c_forest: float = 4.0, constants: dict | None = None,
                   forests: dict[int, list] | None = None, check_predicates: bool = True
                   ) -> tuple[list[CheckRecord], dict[int, list]]:
    """Forest count per level and the BMO-forest predicate on each forest."""
    C = _Constants(constants)
    out = []
    forests = dict(forests or {})
    for n in massdec.nonempty_levels():
        if n not in forests:
            forests[n] = forest_decompose(massdec.levels[n], n, c_forest)
        fs = forests[n]
        out.append(CheckRecord("forest.count", len(fs), 1.0, C("forest.count"), {"n": n}))
        if check_predicates:
            bad = sum(0 if is_bmo_forest(F, n, c_forest) else 1 for F in fs)
            out.append(CheckRecord("forest.valid", bad, 0.0, C("forest.valid"), {"n": n}))
    return out, forests


# --- tree estimates ----------------------------------------------------------------------


def _worst(records: list[CheckRecord]) -> CheckRecord | None:
    return max(records, key=lambda r: (r.ratio, -r.context.get("tree", 0))) if records else None


def input_window(top: Tile, K: int, reach: int = 8) -> np.ndarray:
    """Cells of the concentric ``(2 reach + 1)``-fold dilate of ``I_top``: every input a tree operator reads."""
    n = 1 << K
    length = 1 << (K - top.k)
    if (2 * reach + 1) * length >= n:
        return np.arange(n)
    start = top.j * length - reach * length
    return (start + np.arange((2 * reach + 1) * length)) % n


def tree_split(ws: Workspace, tree: Tree, n: int, alpha: int) -> dict:
    """Mean-zero split of ``T^p f`` at the tree frequency, measured on one tree."""
    S, top = tree
    K, h = ws.K, ws.h
    omega = top.m << top.k
    bound = math.ldexp(1.0, CZ_EXPONENT - alpha)
    partition, splits = refine_partition(cz_partition(tree_shadows(S)), ws.avgs, bound)
    failing = sum(1 for I in partition if ws.avgs[I.scale][I.index] >= bound)
    g = modulate(ws.f, -omega)
    L = tree_projection(ws.f, S, -omega, partition).values
    labels = np.zeros(1 << K, dtype=np.int64)
    for pos, I in enumerate(partition):
        labels[I.cells(K)] = pos
    resid = g - L
    meanzero = float(np.max(np.abs(np.bincount(labels, resid.real) + 1j * np.bincount(labels, resid.imag)))) * h
    member = S.mask()
    phase = ws.N.values - omega
    u1 = np.zeros(1 << K, dtype=complex)
    u2 = np.zeros(1 << K, dtype=complex)
    direct = np.zeros(1 << K, dtype=complex)
    for k in np.unique(S.k).tolist():
        pts = np.flatnonzero(member[ws.op.ecache.tile_of_cell[k]])
        u1[pts] += scale_apply(resid, phase, K, k, pts)
        u2[pts] += scale_apply(L, phase, K, k, pts)
        direct[pts] += ws.resp[k][pts]
    carrier = _roots(K)[(omega * np.arange(1 << K)) % (1 << K)]
    split_err = float(np.abs(carrier * (u1 + u2) - direct).max())
    cells = top.time.cells(K)
    window = np.zeros(1 << K, dtype=bool)
    window[input_window(top, K)] = True
    # the projection reads f on every partition cell meeting the window
    window = np.isin(labels, np.unique(labels[window]))
    f_local = _l1(ws.f.values, h, window)
    return {"split": split_err, "meanzero": meanzero, "t1": _l1(u1, h), "t2": _l1(u2, h),
            "f_local": f_local, "linf": float(np.abs(L[cells]).max()), "bound": bound,
            "refinements": splits, "cz_failing": failing, "omega": omega}


def verify_tree_estimates(ws: Workspace, constants: dict | None = None, split_trees: int = 16) -> list[CheckRecord]:
    """Per ``(n, alpha)``: the worst tree for the size and Carleson ratios, and the mean-zero
    split on the largest trees (up to ``split_trees`` in total)."""
    C = _Constants(constants)
    out = []
    sample = []
    for n in sorted(ws.czdecs):
        for a in ws.czdecs[n].alphas:
            if not len(ws.czdecs[n].tiles[a]):
                continue
            trees = ws.trees(n, a)
            l1, e_all, _ = ws.tree_stats(trees)
            size, carl = [], []
            for i, (S, top) in enumerate(trees):
                Ip = top.time.length
                ctx = {"n": n, "alpha": a, "tree": i, "trees": len(trees)}
                size.append(CheckRecord("tree.size", l1[i], 2.0 ** -n * 2.0 ** -a * Ip, C("tree.size"), ctx))
                carl.append(CheckRecord("tree.carleson", e_all[i], 2.0 ** -n * Ip, C("tree.carleson"), ctx))
            out += [_worst(size), _worst(carl)]
            big = max(range(len(trees)), key=lambda i: (len(trees[i][0]), -i))
            sample.append((len(trees[big][0]), n, a, big))
    sample.sort(key=lambda t: (-t[0], t[1], t[2]))
    for _, n, a, i in sorted(sample[:split_trees], key=lambda t: (t[1], t[2])):
        S, top = ws.trees(n, a)[i]
        r = tree_split(ws, (S, top), n, a)
        ctx = {"n": n, "alpha": a, "tree": i, "omega": r["omega"]}
        Ip = top.time.length
        out.append(CheckRecord("tree.split", r["split"], 1.0, C("tree.split"), ctx))
        out.append(CheckRecord("tree.meanzero", r["meanzero"], 1.0, C("tree.meanzero"), ctx))
        out.append(CheckRecord("tree.t1", r["t1"], 2.0 ** -n * r["f_local"], C("tree.t1"), ctx))
        out.append(CheckRecord("tree.t2", r["t2"], 2.0 ** -n * 2.0 ** -a * Ip, C("tree.t2"), ctx))
        out.append(CheckRecord("tree.linfproj", r["linf"], r["bound"], C("tree.linfproj"), ctx))
        out.append(CheckRecord("tree.cz", r["cz_failing"], 0.0, C("tree.cz"), ctx))
        out.append(CheckRecord("tree.cz_refinements", r["refinements"], 1.0, C("tree.cz_refinements"), ctx))
    return out


# --- Theorem b ------------------------------------------------------------------------------


def mann_kendall(x: Sequence[float]) -> float:
    """Mann-Kendall ``Z`` statistic (normal approximation, tie-corrected); 0 for fewer than 3 points."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        return 0.0
    diff = np.sign(x[None, :] - x[:, None])
    s = float(np.triu(diff, 1).sum())
    _, counts = np.unique(x, return_counts=True)
    var = (n * (n - 1) * (2 * n + 5) - np.sum(counts * (counts - 1) * (2 * counts + 5))) / 18.0
    if var <= 0 or s == 0:
        return 0.0
    return (s - 1) / math.sqrt(var) if s > 0 else (s + 1) / math.sqrt(var)


MK_CRITICAL = 1.6448536269514722  # one-sided 5% normal quantile


def good_subset(f: GridFunction, G: np.ndarray, C_G: float) -> np.ndarray:
    """``G' = {x in G : Mf(x) <= C_G ||f||_1 / |G|}`` as a cell mask."""
    G = np.asarray(G, dtype=bool)
    measure = G.mean()
    if measure == 0:
        raise ValueError("G must have positive measure")
    lam = C_G * float(f.abs().mean()) / measure
    return G & (dyadic_maximal(f).values.real <= lam)


def verify_theorem_b(ws: Workspace, G: np.ndarray, C_G: float = 8.0, constants: dict | None = None
                     ) -> list[CheckRecord]:
    C = _Constants(constants)
    G = np.asarray(G, dtype=bool)
    Gp = good_subset(ws.f, G, C_G)
    h = ws.h
    g_meas, gp_meas = G.sum() * h, Gp.sum() * h
    # |G'| > |G|/2 on the grid is |G'| >= |G|/2 + 2**-K
    out = [CheckRecord("b.gprime", g_meas / 2 + h, gp_meas, C("b.gprime"), {"C_G": C_G})]
    f1 = float(ws.f.abs().mean())
    w = Gp.astype(float)
    ratios = []
    for n, row in ws.level_rows().items():
        lhs = _l1(row, h, w)
        rec = CheckRecord("b.lweak1", lhs, f1, C("b.lweak1"), {"n": n})
        out.append(rec)
        ratios.append(rec.ratio)
    out.append(CheckRecord("b.trend", max(mann_kendall(ratios), 0.0), 1.0, C("b.trend"),
                           {"ratios": [_num(r) for r in ratios]}))
    if f1 == 0:
        return out
    lam = C_G * f1 / g_meas
    for (n, a), row in ws.pair_rows().items():
        k = round(a + math.log2(lam))
        out.append(CheckRecord("b.kdecay", _l1(row, h, w), 2.0 ** (-k / 2) * f1, C("b.kdecay"),
                               {"n": n, "alpha": a, "k": k}))
        trees = ws.trees(n, a)
        l1, _, e_g = ws.tree_stats(trees, Gp)
        recs = []
        for i, (S, top) in enumerate(trees):
            rhs = 2.0 ** -a * math.sqrt(e_g[i]) * 2.0 ** (-n / 2) * math.sqrt(top.time.length)
            recs.append(CheckRecord("b.essential", l1[i], rhs, C("b.essential"),
                                    {"n": n, "alpha": a, "tree": i, "trees": len(trees)}))
        out.append(_worst(recs))
    return out


# --- Theorems c and d ---------------------------------------------------------------------


def verify_theorem_c(ws: Workspace, ps: Iterable[float] = (2.0,), constants: dict | None = None
                     ) -> list[CheckRecord]:
    C = _Constants(constants)
    out = []
    f2 = lp_norm(ws.f, 2.0)
    pts = []
    for n, row in ws.level_rows().items():
        for p in ps:
            out.append(CheckRecord("c.lp", lp_norm(row, p), lp_norm(ws.f, p), C("c.lp"), {"n": n, "p": p}))
        l2 = lp_norm(row, 2.0)
        out.append(CheckRecord("c.l2", l2, max(n, 1) ** 2 * 2.0 ** (-n / 2) * f2, C("c.l2"), {"n": n}))
        if l2 > 0:
            pts.append((n, math.log2(l2)))
    if len(pts) >= 2:
        xs, ys = np.array(pts).T
        slope = float(np.polyfit(xs, ys, 1)[0])
        out.append(CheckRecord("c.slope", 2.0 ** slope, 1.0, C("c.slope"), {"slope": slope, "levels": len(pts)}))
    else:
        out.append(CheckRecord("c.slope", 0.0, 1.0, C("c.slope"), {"degenerate": True, "levels": len(pts)}))
    return out


def interpolation_record(Tf: np.ndarray, f: GridFunction, p: float, name: str, constant: float,
                         context: dict | None = None) -> CheckRecord:
    f1 = float(f.abs().mean())
    if f1 == 0:
        raise ValueError("needs a nonzero function")
    rhs = f1 * math.log(math.e * lp_norm(f, p) / f1)
    return CheckRecord(name, weak_quasinorm(Tf), rhs, constant, context or {"p": p})


def verify_theorem_d(ws: Workspace, p: float = 2.0, constants: dict | None = None) -> CheckRecord:
    C = _Constants(constants)
    return interpolation_record(ws.Tf, ws.f, p, "d.interp", C("d.interp"))


# --- corollaries ---------------------------------------------------------------------------


COROLLARY_F = ("levels:1=0.25,3=0.05", "levels:2=0.1,5=0.005", "random_step:16,4", "orlicz_extremal:loglog")
COROLLARY_N = ("constant:0", "chirp", "random_piecewise:16")


def _parallel_map(func, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def corollary3_sweep(family: TileFamily, Ns: Sequence[LinearizingFunction], exponents: Sequence[int],
                     workers: int = 1) -> dict[int, list[float]]:
    """``||T chi_E||_{1,inf} / (|E| log(e/|E|))`` for ``E = [0, 2**-e)``, one value per ``N``."""
    K = family.K

    def one(N):
        op = TileOperator(family, N)
        vals = []
        for e in exponents:
            chi = np.zeros(1 << K)
            chi[: 1 << (K - e)] = 1.0
            Tf = op.full(op.responses(GridFunction(K, chi)))
            E = math.ldexp(1.0, -e)
            vals.append(weak_quasinorm(Tf) / (E * math.log(math.e / E)))
        return vals

    per_N = _parallel_map(one, Ns, workers)
    return {e: [vals[i] for vals in per_N] for i, e in enumerate(exponents)}


def verify_corollaries(family: TileFamily, seed: int = 0, constants: dict | None = None,
                       N_specs: Sequence[str] = COROLLARY_N, f_specs: Sequence[str] = COROLLARY_F,
                       exponents: Sequence[int] | None = None, workers: int = 1) -> list[CheckRecord]:
    """Indicator sweep plus the ``L^p``, ``L(log L)^2`` and weak-type ratios on a fixed test battery."""
    C = _Constants(constants)
    K = family.K
    if exponents is None:
        exponents = range(2, K - 1)
    exponents = list(exponents)
    Ns = [generate_N(s, K, seed) for s in N_specs]
    out = []
    sweep = corollary3_sweep(family, Ns, exponents, workers)
    per_e = []
    for e in exponents:
        E = math.ldexp(1.0, -e)
        for spec, r in zip(N_specs, sweep[e]):
            out.append(CheckRecord("cor3.log", r * E * math.log(math.e / E), E * math.log(math.e / E),
                                   C("cor3.log"), {"E": E, "N": spec}))
        per_e.append(max(sweep[e]))
    if per_e and min(per_e) > 0:
        out.append(CheckRecord("cor3.spread", max(per_e), min(per_e), C("cor3.spread"),
                               {"max_per_E": [_num(v) for v in per_e]}))
    fs = [(s, generate_f(s, K, seed)) for s in f_specs]

    def battery(item):
        nspec, N = item
        op = TileOperator(family, N)
        recs = []
        for fspec, f in fs:
            Tf = op.full(op.responses(f))
            ctx = {"N": nspec, "f": fspec}
            for p in (1.5, 2.0, 4.0):
                recs.append(CheckRecord("cor1.lp", lp_norm(Tf, p), lp_norm(f, p), C("cor1.lp"), dict(ctx, p=p)))
            recs.append(CheckRecord("cor2.llog2", lp_norm(Tf, 1.0), l_log2_levels(f), C("cor2.llog2"), ctx))
            weak = weak_quasinorm(Tf)
            recs.append(CheckRecord("cor4.sjolin", weak, orlicz_norm(f, "loglog"), C("cor4.sjolin"), ctx))
            recs.append(CheckRecord("cor5.qa", weak, qa_upper(f, math.inf), C("cor5.qa"), ctx))
            recs.append(CheckRecord("cor6.soria", weak, soria_norms(f)[1], C("cor6.soria"), ctx))
            recs.append(CheckRecord("cor7.antonov", weak, orlicz_norm(f, "logloglog"), C("cor7.antonov"), ctx))
        return recs

    for recs in _parallel_map(battery, zip(N_specs, Ns), workers):
        out += recs
    return out


# --- Sjolin split ----------------------------------------------------------------------------


def sjolin_modular(f: GridFunction) -> float:
    """``∫ |f| log+|f| log+ log+ |f|``."""
    a = f.abs()
    with np.errstate(divide="ignore"):
        l1 = np.where(a > 1, np.log(np.where(a > 1, a, 1.0)), 0.0)
        l2 = np.where(l1 > 1, np.log(np.where(l1 > 1, l1, 1.0)), 0.0)
    return float(np.sum(a * l1 * l2) * f.h)


SJOLIN_MIN_LEVEL = 3  # the split works on the level sets Q_l with l >= 3


def large_part(f: GridFunction) -> GridFunction:
    """``f`` restricted to ``{|f| >= 2**SJOLIN_MIN_LEVEL}``."""
    return GridFunction(f.K, np.where(f.abs() >= 2.0 ** SJOLIN_MIN_LEVEL, f.values, 0))


def verify_sjolin_split(f: GridFunction, N: LinearizingFunction, massdec: MassDecomposition,
                        c: float = 1024.0, constants: dict | None = None) -> list[CheckRecord]:
    """Excise ``A = ∪_l S_l`` and compare ``|A|`` and ``||Tf||_{L^1(A^c)}`` with powers of the modular.

    Runs on the large part of ``f``; values below ``2**SJOLIN_MIN_LEVEL`` are
    bounded and handled by the ``L^2`` estimate instead.
    """
    C = _Constants(constants)
    f = large_part(f)
    nu = sjolin_modular(f)
    if f.is_zero():
        return [CheckRecord("sjolin.measure", 0.0, 0.0, C("sjolin.measure"), {"vacuous": True}),
                CheckRecord("sjolin.l1", 0.0, 0.0, C("sjolin.l1"), {"vacuous": True})]
    if nu >= 1:
        raise ValueError(f"hypothesis violated: modular {nu:g} is not below 1")
    K = f.K
    gamma = c * nu ** (2.0 / 3.0)
    a = f.abs()
    nz = a > 0
    lev = np.full(a.size, -1, dtype=np.int64)
    lev[nz] = np.frexp(a[nz])[1] - 1
    excised = np.zeros(1 << K, dtype=bool)
    for l in np.unique(lev[nz]).tolist():
        chi = GridFunction(K, (lev == l).astype(float))
        avgs = dyadic_averages(chi)
        for n in massdec.nonempty_levels():
            cz = cz_decompose(massdec.levels[n], chi, avgs)
            for alpha, S in cz.tiles.items():
                if len(S) and 2.0 ** -alpha >= gamma * 2.0 ** -l:
                    excised |= cz.support(alpha).to_mask(K)
    op = TileOperator(massdec.family, N)
    Tf = op.full(op.responses(f))
    h = math.ldexp(1.0, -K)
    ctx = {"modular": nu, "gamma": gamma, "c": c}
    return [CheckRecord("sjolin.measure", float(excised.sum() * h), nu ** (1 / 3), C("sjolin.measure"), ctx),
            CheckRecord("sjolin.l1", _l1(Tf, h, (~excised).astype(float)), nu ** 0.5, C("sjolin.l1"), ctx)]


# --- open question ----------------------------------------------------------------------------


def probe_open_question(ws: Workspace, constants: dict | None = None) -> list[CheckRecord]:
    """``||T^{P^alpha} f||_1 / ||f||_1`` with ``P^alpha = ∪_n P_n^alpha``; no bound is claimed."""
    C = _Constants(constants)
    f1 = float(ws.f.abs().mean())
    by_alpha: dict[int, np.ndarray] = {}
    for (n, a), row in ws.pair_rows().items():
        by_alpha[a] = by_alpha.get(a, 0) + row
    out = []
    best = 0.0
    for a in sorted(by_alpha):
        rec = CheckRecord("oq.alpha", _l1(by_alpha[a], ws.h), f1, C("oq.alpha"), {"alpha": a})
        best = max(best, rec.ratio)
        out.append(rec)
    out.append(CheckRecord("oq.max", best * f1, f1, C("oq.max")))
    return out


def verify_convexity(massdec: MassDecomposition, czdecs: dict[int, CZDecomposition],
                     constants: dict | None = None) -> list[CheckRecord]:
    C = _Constants(constants)
    return [CheckRecord("cz.convexity", convexity_violations(massdec.levels[n], cz), 0.0,
                        C("cz.convexity"), {"n": n}) for n, cz in sorted(czdecs.items())]
