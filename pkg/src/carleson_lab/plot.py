"""Deterministic SVG renderings: tile diagrams, counting functions and decay charts.

Every function returns the SVG document as a string built from fixed-precision
numbers, so equal inputs give byte-identical output.
"""

from __future__ import annotations

import math
from html import escape
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cz import CZDecomposition
from .mass import MassDecomposition, MassLayer
from .tiles import Tile

WIDTH, HEIGHT = 640, 400
MARGIN = 48
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
UNASSIGNED = "#dddddd"


def _f(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".") if math.isfinite(x) else "0"


def _doc(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, f"<title>{escape(title)}</title>",
                      f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
                      *body, "</svg>"]) + "\n"


def _axes(xlabel: str, ylabel: str, xticks: Sequence[tuple[float, str]] = (),
          yticks: Sequence[tuple[float, str]] = ()) -> list[str]:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN
    out = [f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
           f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
           f'<text x="14" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {(y0 + y1) // 2})">{escape(ylabel)}</text>']
    for px, label in xticks:
        out.append(f'<text x="{_f(px)}" y="{y0 + 16}" text-anchor="middle" font-size="10">{escape(label)}</text>')
    for py, label in yticks:
        out.append(f'<text x="{x0 - 6}" y="{_f(py + 3)}" text-anchor="end" font-size="10">{escape(label)}</text>')
    return out


def _legend(entries: Sequence[tuple[str, str]]) -> list[str]:
    out = []
    for i, (label, color) in enumerate(entries):
        y = MARGIN + 14 * i
        out.append(f'<rect x="{WIDTH - MARGIN + 6}" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{WIDTH - MARGIN + 20}" y="{y + 9}" font-size="10">{escape(label)}</text>')
    return out


def color_for(value, values: Sequence) -> str:
    """Palette color of ``value`` by its rank among the sorted distinct ``values``."""
    order = sorted(set(values))
    return PALETTE[order.index(value) % len(PALETTE)]


def tile_rect(P: Tile, K: int) -> tuple[float, float, float, float]:
    """``(x, y, width, height)`` of ``P`` in plot coordinates: time to the right, frequency up."""
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    t0 = P.j * 2.0 ** -P.k
    w0, w1 = P.m * 2.0 ** P.k / 2 ** K, (P.m + 1) * 2.0 ** P.k / 2 ** K
    return (MARGIN + t0 * pw, MARGIN + (1.0 - w1) * ph, 2.0 ** -P.k * pw, (w1 - w0) * ph)


def tiles_svg(tiles: Iterable[tuple[Tile, object]], K: int, title: str = "tiles",
              label: str = "n") -> str:
    """Rectangles ``I x omega`` colored by the attached label (``None`` draws grey)."""
    tiles = list(tiles)
    labels = [v for _, v in tiles if v is not None]
    body = _axes("time", "frequency / 2^K", [(MARGIN, "0"), (WIDTH - MARGIN, "1")],
                 [(HEIGHT - MARGIN, "0"), (MARGIN, "1")])
    for P, v in tiles:
        x, y, w, h = tile_rect(P, K)
        fill = UNASSIGNED if v is None else color_for(v, labels)
        body.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                    f'fill="{fill}" stroke="black" stroke-width="0.2"/>')
    body += _legend([(f"{label}={v}", color_for(v, labels)) for v in sorted(set(labels))])
    return _doc(body, title)


def decomposition_tiles(massdec: MassDecomposition, czdecs: Mapping[int, CZDecomposition] | None = None,
                        color_by: str = "n") -> list[tuple[Tile, object]]:
    """Assigned tiles with their level ``n`` (or CZ exponent ``alpha``)."""
    out = []
    fam = massdec.family
    for n, S in sorted(massdec.levels.items()):
        if not len(S):
            continue
        if color_by == "alpha":
            cz = (czdecs or {}).get(n)
            if cz is None:
                continue
            for a in cz.alphas:
                out += [(fam.tile(int(i)), a) for i in cz.tiles[a].ids]
        elif color_by == "n":
            out += [(fam.tile(int(i)), n) for i in S.ids]
        else:
            raise ValueError("color_by must be 'n' or 'alpha'")
    return out


def steps_svg(series: Mapping[str, np.ndarray], title: str, ylabel: str) -> str:
    """Step functions on the grid ``[0, 1)``; one colored polyline per series."""
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    top = max([float(np.max(v)) for v in series.values() if len(v)] + [1.0])
    body = _axes("x", ylabel, [(MARGIN, "0"), (WIDTH - MARGIN, "1")],
                 [(HEIGHT - MARGIN, "0"), (MARGIN, _f(top))])
    names = list(series)
    for i, name in enumerate(names):
        v = np.asarray(series[name], dtype=float)
        n = v.size
        pts = []
        for c, val in enumerate(v.tolist()):
            y = MARGIN + (1.0 - val / top) * ph
            pts.append(f"{_f(MARGIN + c / n * pw)},{_f(y)}")
            pts.append(f"{_f(MARGIN + (c + 1) / n * pw)},{_f(y)}")
        body.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" points="{" ".join(pts)}"/>')
    body += _legend([(name, PALETTE[i % len(PALETTE)]) for i, name in enumerate(names)])
    return _doc(body, title)


def counting_svg(layers: Sequence[MassLayer], title: str = "counting functions") -> str:
    series = {f"n={L.n} k={L.k}": L.counting().values.real for L in layers if len(L.tops)}
    return steps_svg(series, title, "tops covering x")


def decay_series(report: dict, names: Sequence[str] = ("b.lweak1", "c.l2", "c.lp")) -> dict[str, list[tuple[int, float]]]:
    """``name -> [(n, max ratio)]`` from a report dictionary."""
    out: dict[str, dict[int, float]] = {}
    for c in report.get("checks", []):
        n = c.get("context", {}).get("n")
        if c["name"] not in names or n is None or isinstance(c["ratio"], str):
            continue
        row = out.setdefault(c["name"], {})
        row[n] = max(row.get(n, 0.0), float(c["ratio"]))
    return {k: sorted(v.items()) for k, v in sorted(out.items())}


def decay_svg(series: Mapping[str, Sequence[tuple[int, float]]], title: str = "ratio against n") -> str:
    """Log-scale chart of ratios against the level ``n``."""
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    pts_all = [(n, r) for s in series.values() for n, r in s if r > 0]
    if pts_all:
        n_lo, n_hi = min(p[0] for p in pts_all), max(p[0] for p in pts_all)
        l_lo = math.floor(min(math.log2(p[1]) for p in pts_all))
        l_hi = math.ceil(max(math.log2(p[1]) for p in pts_all))
    else:
        n_lo, n_hi, l_lo, l_hi = 0, 1, 0, 1
    n_hi = max(n_hi, n_lo + 1)
    l_hi = max(l_hi, l_lo + 1)

    def xy(n, r):
        return (MARGIN + (n - n_lo) / (n_hi - n_lo) * pw,
                MARGIN + (1.0 - (math.log2(r) - l_lo) / (l_hi - l_lo)) * ph)

    body = _axes("n", "ratio (log2 scale)",
                 [(xy(n, 2.0 ** l_lo)[0], str(n)) for n in range(n_lo, n_hi + 1)],
                 [(HEIGHT - MARGIN, f"2^{l_lo}"), (MARGIN, f"2^{l_hi}")])
    names = list(series)
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        pts = [xy(n, r) for n, r in series[name] if r > 0]
        if pts:
            body.append(f'<polyline fill="none" stroke="{color}" '
                        f'points="{" ".join(f"{_f(x)},{_f(y)}" for x, y in pts)}"/>')
        body += [f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="{color}"/>' for x, y in pts]
    body += _legend([(name, PALETTE[i % len(PALETTE)]) for i, name in enumerate(names)])
    return _doc(body, title)
