"""Controller-vs-stopper game: closed-form solvers, VI verifier, Monte Carlo engine."""

from .model import GameModel, quadratic_model, kink_model
from .generator import (
    Piece,
    Generator,
    RegionSet,
    eval_u,
    eval_du,
    eval_u_array,
    second_derivative,
    build_v,
    extract_regions,
)

__all__ = [
    "GameModel",
    "quadratic_model",
    "kink_model",
    "Piece",
    "Generator",
    "RegionSet",
    "eval_u",
    "eval_du",
    "eval_u_array",
    "second_derivative",
    "build_v",
    "extract_regions",
]
