"""Simulation and exact computation for single-edge strategies on the D-ary tree.

Each of n trials shows D i.i.d. labels; a strategy keeps one.  The package
computes the laws of chosen values, Levy-Prokhorov distances, grid entropy
through its Gibbs dual, and exhaustive path statistics.
"""

__version__ = "0.1.0"

from .errors import ContractError, DomainError, SizeError  # noqa: E402

__all__ = ["__version__", "ContractError", "DomainError", "SizeError"]
