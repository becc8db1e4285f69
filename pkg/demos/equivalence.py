"""Point transformations that connect free motion to oscillators, free fall and constant fields.

Run with ``python3 demos/equivalence.py``.  Each map transports the equation
operator, reads off the induced potential and checks it at random points;
symmetry generators are carried along and re-verified on the image.
"""
from __future__ import annotations

from spsym.detsys import verify_operator
from spsym.equiv import TransformSpec, apply_transform, conjugate_generator
from spsym.generators import schrodinger_basis

specs = [TransformSpec("et1", omega=1.0), TransformSpec("et2", omega=1.0),
         TransformSpec("et3", kappa=(0, 0, 1)), TransformSpec("et01", mu=0.5, nu=0.3)]
for spec in specs:
    res = apply_transform(0, spec)
    print(f"{spec.kind}: V = 0  ->  components {res.canonical}, verified {res.verified}")
    carried = [verify_operator(res.potential, conjugate_generator(g.op, spec), structured=False).passed
               for g in schrodinger_basis()]
    print(f"    free generators still symmetries after the map: {sum(carried)}/{len(carried)}")

# The printed normalization only reproduces the canonical operator at unit frequency.
for norm in ("printed", "scaled"):
    res = apply_transform(0, TransformSpec("et1", omega=2.0, normalization=norm))
    print(f"et1 at omega = 2 ({norm}): verified {res.verified}, components {res.canonical}")
