"""How a Pauli-matrix term changes the symmetry of an otherwise scalar problem.

Run with ``python3 demos/spin_coupling.py``.
"""
from __future__ import annotations

from spsym import corpus
from spsym.detsys import VerifyConfig, verify_operator
from spsym.finder import FindConfig, containment_residual, find_symmetries
from spsym.generators import make_basis_generator
from spsym.parsing import parse_generator, parse_pauli

# Table 3 Item 1: N(x1, x2) + F(x1, x2) M(n, x3) + n kappa x3.  M mixes the spin along x3,
# so plain translations in x3 must be compensated by a spin rotation.
row = corpus.find_row(corpus.load(), 3, 1)
for n in (1.0, 0.0):
    params = row.base_params()
    params.update(n=n)
    V, table, _ = row.build(params)
    alg = find_symmetries(V, FindConfig(), params=table)
    screw = parse_generator("P3 + s3 + kappa*t", table) if n else make_basis_generator("P3").op
    boost = containment_residual(alg, make_basis_generator("G3"))
    print(f"n = {n:g}: dimension {alg.dimension}, "
          f"x3 translation residual {containment_residual(alg, screw):.1e}, G3 residual {boost:.2e}")

# A constant field lambda*s3 is removed by a time-dependent spin phase, which shows up as
# transverse spin generators rotating at twice the field strength.
lam = 0.8
V = parse_pauli(f"{lam}*s3")
cfg = VerifyConfig(seed=3)
for freq in (2 * lam, lam):
    Q = parse_pauli(f"s1*cos({freq}*t) + s2*sin({freq}*t)")
    rep = verify_operator(V, Q, cfg)
    print(f"s1 cos({freq:g}t) + s2 sin({freq:g}t): pass={rep.passed}, commutator residual "
          f"{rep.residuals['commutator']:.1e}")
