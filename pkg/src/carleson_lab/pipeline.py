"""Run configuration and the end-to-end decomposition and verification pipeline."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cz import CZDecomposition, cz_decompose
from .dyadic import GridFunction, dyadic_averages
from .generate import generate_f, generate_G, generate_N, suite_specs
from .mass import DEFAULT_C, DEFAULT_C_FOREST, MassDecomposition, forest_decompose, mass_decompose
from .tiles import DEFAULT_N_MASS, LinearizingFunction, TileFamily
from . import verify as V

MAX_K = 16
CHECK_GROUPS = ("a", "b", "c", "d", "corollaries", "oq")
SJOLIN_FIXTURE = "levels:3=0.004,5=0.001"


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    K: int = 10
    k_min: int = 3
    k_max: int | None = None
    N_mass: int = DEFAULT_N_MASS
    c: float = DEFAULT_C
    c_forest: float = DEFAULT_C_FOREST
    C_G: float = 8.0
    n_max: int | None = None
    seed: int = 0
    f: str | None = None
    N: str | None = None
    G: str | None = None
    out: str = "out"
    constants: dict = field(default_factory=dict)
    checks: list[str] = field(default_factory=lambda: ["all"])
    workers: int = 1
    sjolin_c: float = 1024.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.K, int) or self.K < 6:
            raise ConfigError(f"K must be an integer of at least 6, got {self.K!r}")
        if self.K > MAX_K:
            raise ConfigError(f"K={self.K} exceeds the guard K <= {MAX_K}")
        k_max = self.K - 3 if self.k_max is None else self.k_max
        if not 3 <= self.k_min <= k_max <= self.K - 3:
            raise ConfigError(f"need 3 <= k_min <= k_max <= K-3, got k_min={self.k_min}, "
                              f"k_max={k_max}, K={self.K}")
        if self.n_max is not None and self.n_max < self.K:
            raise ConfigError("n_max must be at least K")
        if self.c <= 0 or self.c_forest <= 0 or self.C_G <= 0:
            raise ConfigError("c, c_forest and C_G must be positive")
        if self.N_mass < 1:
            raise ConfigError("N_mass must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        unknown = set(self.checks) - set(CHECK_GROUPS) - {"all"}
        if unknown:
            raise ConfigError(f"unknown check groups {sorted(unknown)}; choose from all, {', '.join(CHECK_GROUPS)}")

    @property
    def scale_max(self) -> int:
        return self.K - 3 if self.k_max is None else self.k_max

    @property
    def groups(self) -> set[str]:
        return set(CHECK_GROUPS) if "all" in self.checks else set(self.checks)

    def specs(self) -> tuple[str, str, str]:
        """``(f, N, G)`` with the suite member ``seed`` filling any unset spec."""
        f, N, G = suite_specs(self.seed)
        return self.f or f, self.N or N, self.G or G

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_json(obj)


@dataclass
class Instance:
    config: RunConfig
    family: TileFamily
    f: GridFunction
    N: LinearizingFunction
    G: np.ndarray
    specs: tuple[str, str, str]


@dataclass
class Decomposition:
    massdec: MassDecomposition
    czdecs: dict[int, CZDecomposition]
    forests: dict[int, list]


def build_instance(config: RunConfig) -> Instance:
    fs, Ns, Gs = config.specs()
    K, seed = config.K, config.seed
    try:
        f = generate_f(fs, K, seed)
        N = generate_N(Ns, K, seed)
        G = generate_G(Gs, K, seed)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad generator spec: {exc}") from None
    return Instance(config, TileFamily(K, config.k_min, config.scale_max), f, N, G, (fs, Ns, Gs))


def decompose(inst: Instance) -> Decomposition:
    cfg = inst.config
    massdec = mass_decompose(inst.family, inst.N, cfg.c, cfg.n_max, cfg.N_mass)
    czdecs = {}
    if not inst.f.is_zero():
        avgs = dyadic_averages(inst.f)
        czdecs = {n: cz_decompose(massdec.levels[n], inst.f, avgs) for n in massdec.nonempty_levels()}
    forests = {n: forest_decompose(massdec.levels[n], n, cfg.c_forest) for n in massdec.nonempty_levels()}
    return Decomposition(massdec, czdecs, forests)


def _meta(inst: Instance, dec: Decomposition) -> dict:
    cfg = inst.config
    fs, Ns, Gs = inst.specs
    md = dec.massdec
    return {
        "K": cfg.K, "k_min": cfg.k_min, "k_max": cfg.scale_max, "seed": cfg.seed,
        "f": fs, "N": Ns, "G": Gs, "c": cfg.c, "c_forest": cfg.c_forest, "C_G": cfg.C_G,
        "N_mass": cfg.N_mass, "n_max": md.family.K + 1 if cfg.n_max is None else cfg.n_max,
        "checks": sorted(cfg.groups),
        "tiles": md.family.size,
        "levels": {str(n): len(S) for n, S in sorted(md.levels.items()) if len(S)},
        "discard": len(md.discard), "leak": len(md.leak),
        "forests": {str(n): len(fs_) for n, fs_ in sorted(dec.forests.items())},
        "alphas": {str(n): [a for a in cz.alphas if len(cz.tiles[a])] for n, cz in sorted(dec.czdecs.items())},
    }


def sjolin_records(inst: Instance, dec: Decomposition, constants: dict) -> list[V.CheckRecord]:
    """Sjolin split on the instance ``f`` when it meets the hypothesis, else on a fixed small fixture."""
    f = inst.f
    source = "instance"
    big = V.large_part(f)
    if big.is_zero() or V.sjolin_modular(big) >= 1:
        f = generate_f(SJOLIN_FIXTURE, inst.config.K, inst.config.seed)
        source = SJOLIN_FIXTURE
    recs = V.verify_sjolin_split(f, inst.N, dec.massdec, inst.config.sjolin_c, constants)
    for r in recs:
        r.context["source"] = source
    return recs


def run_checks(inst: Instance, dec: Decomposition, constants: dict | None = None) -> list[V.CheckRecord]:
    cfg = inst.config
    constants = V.load_constants(cfg.constants) if constants is None else constants
    groups = cfg.groups
    md = dec.massdec
    ws = V.Workspace(inst.f, inst.N, md, dec.czdecs)
    recs: list[V.CheckRecord] = []
    if "a" in groups:
        recs += V.verify_consistency(ws, constants, cfg.seed)
        recs += V.verify_mass(md, constants)
        recs += V.verify_forests(md, cfg.c_forest, constants, dec.forests)[0]
        recs += V.verify_theorem_a(inst.f, inst.N, md, dec.czdecs, constants, ws)
        recs += V.verify_convexity(md, dec.czdecs, constants)
        recs += V.verify_tree_estimates(ws, constants)
    if "b" in groups:
        recs += V.verify_theorem_b(ws, inst.G, cfg.C_G, constants)
    if "c" in groups:
        recs += V.verify_theorem_c(ws, constants=constants)
    if "d" in groups and not inst.f.is_zero():
        recs.append(V.verify_theorem_d(ws, constants=constants))
    if "corollaries" in groups:
        recs += V.verify_corollaries(inst.family, cfg.seed, constants, workers=cfg.workers)
        recs += sjolin_records(inst, dec, constants)
    if "oq" in groups:
        recs += V.probe_open_question(ws, constants)
    return recs


def run_pipeline(config: RunConfig) -> tuple[V.VerificationReport, Instance, Decomposition]:
    """Generate, decompose and verify; returns the report with its inputs and decompositions."""
    inst = build_instance(config)
    dec = decompose(inst)
    checks = run_checks(inst, dec)
    return V.VerificationReport(_meta(inst, dec), checks), inst, dec


def write_report(report: V.VerificationReport, out: str | Path) -> tuple[Path, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    js, cs = out / "report.json", out / "report.csv"
    js.write_text(report.dumps())
    cs.write_text(report.to_csv())
    return js, cs
