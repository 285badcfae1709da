"""Command-line entry point.

Commands: ``generate``, ``decompose``, ``verify``, ``plot`` and ``all``.
Exit codes: 0 when every check passes, 1 on a check failure, 2 on a bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .pipeline import (CHECK_GROUPS, ConfigError, Decomposition, Instance, RunConfig, build_instance,
                       decompose, run_pipeline, write_report)
from .plot import counting_svg, decay_series, decay_svg, decomposition_tiles, tiles_svg
from .verify import VerificationReport

log = logging.getLogger("carleson_lab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# flag -> RunConfig field
OVERRIDES = {"K": "K", "seed": "seed", "f": "f", "N": "N", "G": "G", "k_min": "k_min", "k_max": "k_max",
             "c": "c", "c_forest": "c_forest", "C_G": "C_G", "n_max": "n_max", "N_mass": "N_mass",
             "workers": "workers", "out": "out"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its entries")
    p.add_argument("--K", type=int, help="grid exponent (2**K cells, at most 16)")
    p.add_argument("--seed", type=int)
    p.add_argument("--f", help="f generator spec, e.g. indicator:0.25 or random_step:32,6")
    p.add_argument("--N", help="N generator spec, e.g. chirp or random_piecewise:16")
    p.add_argument("--G", help="test set for the weak-type checks: torus or random_half")
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--c", type=float, help="John-Nirenberg cut constant of the layers")
    p.add_argument("--c-forest", dest="c_forest", type=float)
    p.add_argument("--C-G", dest="C_G", type=float, help="maximal-function cut defining G'")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--N-mass", dest="N_mass", type=int)
    p.add_argument("--check", action="append",
                   help=f"check groups: all or any of {', '.join(CHECK_GROUPS)} (repeat or comma-separate)")
    p.add_argument("--constant", action="append", default=[], metavar="NAME=VALUE",
                   help="override one pass constant")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carleson-lab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in [("generate", "write the instance f, N and G"),
                       ("decompose", "write the mass, CZ and forest decompositions"),
                       ("verify", "run the checks and write report.json and report.csv"),
                       ("plot", "write tiles.svg, counting.svg and decay.svg"),
                       ("all", "verify and plot")]:
        _common(sub.add_parser(name, help=text, description=text))
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        base = RunConfig.load(args.config).to_json()
    for flag, name in OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            base[name] = val
    if args.check:
        base["checks"] = [c.strip() for arg in args.check for c in arg.split(",") if c.strip()]
    if args.constant:
        consts = dict(base.get("constants", {}))
        for item in args.constant:
            name, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--constant expects NAME=VALUE, got {item!r}")
            try:
                consts[name.strip()] = float(value)
            except ValueError:
                raise ConfigError(f"--constant {name}: {value!r} is not a number") from None
        base["constants"] = consts
    return RunConfig.from_json(base)


def cmd_generate(cfg: RunConfig) -> int:
    inst = build_instance(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    fs, Ns, Gs = inst.specs
    doc = {"K": cfg.K, "seed": cfg.seed, "f_spec": fs, "N_spec": Ns, "G_spec": Gs,
           "f": inst.f.to_json(), "N": inst.N.values.tolist(), "G": inst.G.astype(int).tolist()}
    (out / "instance.json").write_text(json.dumps(doc, sort_keys=True) + "\n")
    log.info("wrote %s", out / "instance.json")
    return EXIT_OK


def cmd_decompose(cfg: RunConfig) -> int:
    inst = build_instance(cfg)
    dec = decompose(inst)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"mass": dec.massdec.to_json(),
           "cz": {str(n): cz.to_json() for n, cz in sorted(dec.czdecs.items())},
           "forests": {str(n): [[[[t.k, t.j, t.m] for _, t in group] for group in forest] for forest in fs]
                       for n, fs in sorted(dec.forests.items())}}
    (out / "decomposition.json").write_text(json.dumps(doc, sort_keys=True) + "\n")
    levels = {n: len(S) for n, S in sorted(dec.massdec.levels.items()) if len(S)}
    log.info("levels %s, unassigned %d; wrote %s", levels, len(dec.massdec.unassigned), out / "decomposition.json")
    return EXIT_OK


def _verify(cfg: RunConfig) -> tuple[VerificationReport, Instance, Decomposition]:
    report, inst, dec = run_pipeline(cfg)
    js, _ = write_report(report, cfg.out)
    for c in report.failures():
        log.warning("FAIL %s ratio=%g constant=%g %s", c.name, c.ratio, c.constant, c.context)
    log.info("%d checks, %d failed; wrote %s", len(report.checks), len(report.failures()), js)
    return report, inst, dec


def _plots(cfg: RunConfig, report: dict, dec: Decomposition) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cfg.K
    (out / "tiles.svg").write_text(tiles_svg(decomposition_tiles(dec.massdec), K, "tiles by level", "n"))
    (out / "tiles_alpha.svg").write_text(
        tiles_svg(decomposition_tiles(dec.massdec, dec.czdecs, "alpha"), K, "tiles by alpha", "alpha"))
    layers = [L for n in dec.massdec.nonempty_levels() for L in dec.massdec.layers[n]]
    (out / "counting.svg").write_text(counting_svg(layers))
    (out / "decay.svg").write_text(decay_svg(decay_series(report)))
    log.info("wrote plots to %s", out)


def cmd_verify(cfg: RunConfig) -> int:
    report, _, _ = _verify(cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_plot(cfg: RunConfig) -> int:
    inst = build_instance(cfg)
    dec = decompose(inst)
    path = Path(cfg.out) / "report.json"
    report = json.loads(path.read_text()) if path.exists() else {}
    _plots(cfg, report, dec)
    return EXIT_OK


def cmd_all(cfg: RunConfig) -> int:
    report, _, dec = _verify(cfg)
    _plots(cfg, report.to_json(), dec)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"generate": cmd_generate, "decompose": cmd_decompose, "verify": cmd_verify,
            "plot": cmd_plot, "all": cmd_all}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
