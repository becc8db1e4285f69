"""Symbolic-numeric toolkit for Lie symmetries of Pauli-Schrodinger equations.

The public entry points live in the submodules:

* ``expr``, ``pauli``, ``parsing``: scalar and 2x2 matrix expressions
* ``diffop``, ``generators``: differential operators and the standard generators
* ``detsys``: symmetry verification
* ``finder``: symmetry algebra of a given potential
* ``liealg``: structure constants, invariants, labels
* ``equiv``: equivalence transformations
* ``corpus``: the tabulated classification as data
"""
from __future__ import annotations

from .detsys import VerifyConfig, verify_operator
from .diffop import DiffOp, commutator, schrodinger_operator
from .parsing import parse, parse_generator, parse_pauli, read_potential

__version__ = "0.1.0"

__all__ = [
    "DiffOp",
    "VerifyConfig",
    "commutator",
    "parse",
    "parse_generator",
    "parse_pauli",
    "read_potential",
    "schrodinger_operator",
    "verify_operator",
]
