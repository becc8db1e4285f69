"""Symmetries of the free two-component equation and of two radial potentials.

Run with ``python3 demos/free_particle.py``.  The finder builds a candidate
basis from the geometric generators, solves the linear symmetry condition
numerically and reports what survives; the classifier then names the algebra.
"""
from __future__ import annotations

from spsym.finder import FindConfig, contains, find_symmetries
from spsym.generators import make_basis_generator
from spsym.liealg import classify, fingerprint, structure_constants
from spsym.parsing import parse_pauli

cfg = FindConfig(seed=1)

print("V = 0")
free = find_symmetries(0, cfg)
print(f"  dimension {free.dimension} from {len(free.candidates)} candidates")
for i in range(free.dimension):
    print("   ", free.describe(i))

# Rotations and the conformal triple P0, D, A are the two semisimple pieces.
for names in (("L1", "L2", "L3"), ("P0", "D", "A")):
    sc = structure_constants([make_basis_generator(n) for n in names])
    fp = fingerprint(sc)
    print(f"  span{names}: {classify(sc).label}, Killing signature {fp.killing_signature}")

# A 1/r^2 term keeps the conformal and rotational parts but kills translations and boosts.
print("\nV = 1.7/r^2")
inv = find_symmetries(parse_pauli("1.7/r^2"), cfg)
print(f"  dimension {inv.dimension}")
for name in ("D", "A", "L3", "P1", "G1"):
    print(f"  contains {name}: {contains(inv, make_basis_generator(name))}")

# An oscillator along one axis trades D and A for the oscillating pair along x3.
print("\nV = x3^2 / 2")
osc = find_symmetries(parse_pauli("0.5*x3^2"), cfg)
print(f"  dimension {osc.dimension}")
for name, args in (("B3+", (1,)), ("Bh3+", (1,)), ("G3", ()), ("G1", ())):
    print(f"  contains {name}{args or ''}: {contains(osc, make_basis_generator(name, args))}")
