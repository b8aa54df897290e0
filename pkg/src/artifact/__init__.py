"""Constructive smooth approximation of Lipschitz functions, with numerical checks of every bound."""

from .approx_core import Approximant, approx_bounded_core, approx_unit, covering_partition, rescale
from .lasrylions import GridFunction, LasryParams, hilbert_pipeline, lasry_lions
from .preiss import preiss_norm, preiss_norm_complex
from .space import SpaceConfig, eval_Q, separating_function
from .suppart import build_partition, phi_matrix
from .tube import TubeMapConfig, glue_bounded, tube_G, tube_H

__all__ = [
    "Approximant",
    "GridFunction",
    "LasryParams",
    "SpaceConfig",
    "TubeMapConfig",
    "approx_bounded_core",
    "approx_unit",
    "build_partition",
    "covering_partition",
    "eval_Q",
    "glue_bounded",
    "hilbert_pipeline",
    "lasry_lions",
    "phi_matrix",
    "preiss_norm",
    "preiss_norm_complex",
    "rescale",
    "separating_function",
    "tube_G",
    "tube_H",
]

__version__ = "0.1.0"
