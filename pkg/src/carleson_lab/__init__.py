"""Dyadic time-frequency model of the Carleson operator: tile decompositions and measured estimates."""

from .cz import CZDecomposition, cz_decompose
from .dyadic import DyadicInterval, GridFunction, TorusSet
from .generate import generate, generate_f, generate_G, generate_N
from .kernel import KernelConfig, TileOperator, apply_tile, apply_tileset, apply_tileset_adjoint
from .mass import MassDecomposition, extract_maximal_trees, forest_decompose, mass_decompose
from .pipeline import ConfigError, RunConfig, run_pipeline
from .spaces import orlicz_modular, orlicz_norm, qa_upper, soria_norms
from .tiles import LinearizingFunction, Tile, TileFamily, TileSet, build_tile_family
from .verify import CheckRecord, VerificationReport

__all__ = [
    "CZDecomposition", "CheckRecord", "ConfigError", "DyadicInterval", "GridFunction", "KernelConfig",
    "LinearizingFunction", "MassDecomposition", "RunConfig", "Tile", "TileFamily", "TileOperator",
    "TileSet", "TorusSet", "VerificationReport", "apply_tile", "apply_tileset", "apply_tileset_adjoint",
    "build_tile_family", "cz_decompose", "extract_maximal_trees", "forest_decompose", "generate",
    "generate_G", "generate_N", "generate_f", "mass_decompose", "orlicz_modular", "orlicz_norm",
    "qa_upper", "run_pipeline", "soria_norms",
]
