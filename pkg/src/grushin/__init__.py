"""Spectral pseudo-multipliers of the Grushin operator on finite grids.

Submodules: ``hermite`` (Hermite functions and ladders), ``symbols``
(symbol classes, seminorms, dyadic pieces), ``geometry`` (control distance,
balls, partitions), ``discretization`` and ``operators`` (fiberwise spectral
calculus), ``norms``, ``cotlar``, ``plancherel`` and ``identities``
(numerical estimate checks), ``suite``, ``config``, ``reports`` and ``cli``.
"""

__version__ = "0.1.0"

from .discretization import Discretization, GridFunction, SpectralField, backward, forward, load_field, save_field
from .estimators import PseudoMultiplier
from .operators import CompiledOperator, apply_grushin_pseudo, apply_hermite_pseudo, apply_joint_pseudo, apply_pseudo
from .symbols import SymbolClassParams, SymbolFn, make_symbol, seminorm, symbol_from_expr

__all__ = [
    "__version__",
    "CompiledOperator",
    "Discretization",
    "GridFunction",
    "PseudoMultiplier",
    "SpectralField",
    "SymbolClassParams",
    "SymbolFn",
    "apply_grushin_pseudo",
    "apply_hermite_pseudo",
    "apply_joint_pseudo",
    "apply_pseudo",
    "backward",
    "forward",
    "load_field",
    "make_symbol",
    "save_field",
    "seminorm",
    "symbol_from_expr",
]
