"""Copula dependence properties and stochastic comparisons of X with X+Z."""

from .copulas import Copula, make_copula
from .joint import JointModel, sum_distribution
from .marginals import Marginal, make_marginal
from .propositions import PROPOSITIONS, HarnessConfig, TheoremReport, verify

__all__ = [
    "Copula",
    "make_copula",
    "Marginal",
    "make_marginal",
    "JointModel",
    "sum_distribution",
    "PROPOSITIONS",
    "HarnessConfig",
    "TheoremReport",
    "verify",
]
__version__ = "0.1.0"
