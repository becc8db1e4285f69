"""Symmetry condition [Q, L] = alpha L and its determining equations.

For ``Q = xi0 d_t + xi^a d_a + (1/2) div(xi) + i eta`` and
``L = i d_t + (1/2) Laplacian - V`` the coefficients of ``[L, Q] + alpha L``
split into

======  =====================================================================
eq8     d_a xi0 = 0   (alpha = -d_t xi0 by construction)
eq9     d_b xi^a + d_a xi^b - (2/3) delta_ab div(xi) = 0
eq10    div(xi) + (3/2) alpha = 0
eq11    d_t xi^a + d_a eta0 - (i/2)(Lap xi^a + d_a div xi) = 0
eq13    d_a eta^b = 0
eq12    xi^a d_a V = alpha V + d_t eta - i[eta, V] - (i/2) d_t div xi
        - (1/4) Lap div xi - (i/2) Lap eta
eq14    scalar part of eq12
eq15    vector part of eq12: ... + 2 eps_bcd eta^c V^d ...
======  =====================================================================
"""
from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .diffop import DiffOp, StructuredForm, as_diffop, commutator, schrodinger_operator, structured_form
from .expr import (
    I_UNIT,
    SPATIAL,
    T,
    VARIABLES,
    X,
    Expr,
    ExprError,
    ParamTable,
    add,
    as_expr,
    diff,
    laplacian,
    mul,
)
from .pauli import PAULI_MATRICES, MatExpr, as_mat, mat_comm
from .sampling import (
    PlaceholderInstantiation,
    PointSample,
    RandomPolynomial,
    SamplingFault,
    draw_valid,
)

EQUATIONS = ("eq8", "eq9", "eq10", "eq11", "eq12", "eq13", "eq14", "eq15")


@dataclass(frozen=True)
class SymmetryCandidate:
    """Structured first-order generator (xi0, xi^a, eta); alpha is derived."""

    xi0: Expr
    xi: tuple[Expr, Expr, Expr]
    eta: MatExpr
    theta: tuple[tuple[float, ...], ...] | None = None
    nu: tuple[Expr, Expr, Expr] | None = None
    f: Expr | None = None

    @classmethod
    def from_operator(cls, op: DiffOp) -> "SymmetryCandidate":
        sf = structured_form(op)
        return cls(sf.xi0, sf.xi, sf.eta)

    @classmethod
    def from_structure(cls, xi0: Expr, theta, nu, f, eta_vector=(0, 0, 0)) -> "SymmetryCandidate":
        """xi^a = -(alpha/2) x_a + theta_ab x_b + nu_a, eta0 = (alpha'/4) x^2 - nu_a' x_a + f."""
        xi0 = as_expr(xi0)
        alpha = mul(-1, diff(xi0, "t"))
        nu = tuple(as_expr(v) for v in nu)
        xi = []
        for a in range(3):
            terms = [mul(as_expr(-0.5), alpha, X[a]), nu[a]]
            terms += [mul(as_expr(theta[a][b]), X[b]) for b in range(3) if theta[a][b]]
            xi.append(add(*terms))
        x2 = add(*(X[a] ** 2 for a in range(3)))
        eta0 = add(mul(as_expr(0.25), diff(alpha, "t"), x2),
                   *(mul(-1, diff(nu[a], "t"), X[a]) for a in range(3)), as_expr(f))
        eta = MatExpr((eta0,) + tuple(as_expr(e) for e in eta_vector))
        return cls(xi0, tuple(xi), eta, tuple(tuple(r) for r in theta), nu, as_expr(f))

    @property
    def alpha(self) -> Expr:
        return mul(-1, diff(self.xi0, "t"))

    def structured(self) -> StructuredForm:
        return StructuredForm(self.xi0, self.xi, self.eta)

    def to_operator(self) -> DiffOp:
        return self.structured().to_diffop()


@dataclass
class VerifyConfig:
    samples: int = 20
    seed: int = 42
    tol: float = 1e-9
    retries: int = 3
    test_functions: int = 3
    degree: int = 3
    params: Mapping[str, float | None] = field(default_factory=dict)


@dataclass
class VerificationReport:
    passed: bool
    residuals: dict[str, float]
    seed: int
    samples: int
    scale: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"pass": self.passed, "residuals": dict(self.residuals), "seed": self.seed,
                "samples": self.samples}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def _numeric_params(params) -> dict[str, complex]:
    if isinstance(params, ParamTable):
        return params.numeric()
    return {k: complex(v) for k, v in (params or {}).items() if v is not None}


def _as_operator(Q) -> DiffOp:
    if isinstance(Q, SymmetryCandidate):
        return Q.to_operator()
    if hasattr(Q, "op"):
        return Q.op
    return as_diffop(Q)


def symmetry_defect(V, Q) -> tuple[DiffOp, DiffOp, DiffOp]:
    """(C, [Q, L], alpha L) with C = [Q, L] - alpha L."""
    C, QL, aL, _ = _defect_parts(V, Q)
    return C, QL, aL


def _defect_parts(V, Q):
    op = _as_operator(Q)
    L = schrodinger_operator(V)
    alpha = mul(-1, diff(op.ct().scalar_part, "t"))
    products = (op.compose(L), L.compose(op))
    QL = products[0] - products[1]
    aL = L.scale(alpha)
    return QL - aL, QL, aL, products


@lru_cache(maxsize=64)
def random_test_function(seed: int, degree: int = 3) -> tuple[Expr, Expr]:
    """Two-component polynomial spinor in (t, x1, x2, x3) with complex coefficients."""
    rng = np.random.default_rng([seed, 7])
    comps = []
    for _ in range(2):
        re_ = RandomPolynomial.draw(4, degree, rng)
        im_ = RandomPolynomial.draw(4, degree, rng)
        args = (T,) + X
        comps.append(add(re_.as_expr((0, 0, 0, 0), args),
                         mul(I_UNIT, im_.as_expr((0, 0, 0, 0), args))))
    return comps[0], comps[1]


def _rel(resid: np.ndarray, scale: float) -> float:
    if resid.size == 0:
        return 0.0
    if np.any(~np.isfinite(resid)):
        return float("inf")
    worst = float(np.max(np.abs(resid)))
    if worst == 0.0:
        return 0.0
    return worst / max(scale, 1e-300)


def _sample_for(exprs: Sequence[Expr], cfg: VerifyConfig, sample: PointSample | None) -> PointSample:
    if sample is not None:
        return sample
    return draw_valid(exprs, n=cfg.samples, seed=cfg.seed, params=_numeric_params(cfg.params),
                      degree=cfg.degree, retries=cfg.retries)


def _spinor_derivatives(psi, keys, s: PointSample) -> np.ndarray:
    """Values of d^k psi for every multi-index k; shape (K, 2, N)."""
    out = np.empty((len(keys), 2, len(s)), dtype=complex)
    for i, k in enumerate(keys):
        for j, comp in enumerate(psi):
            for v, n in zip(VARIABLES, k):
                for _ in range(n):
                    comp = diff(comp, v)
            out[i, j] = s.eval(comp)
    return out


def _act(coeffs: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """sum_k coeff_k . d^k psi with coeffs (K, 4, N) in Pauli components."""
    mats = np.einsum("kcn,cij->knij", coeffs, PAULI_MATRICES)
    return np.einsum("knij,kjn->in", mats, dpsi)


def _all_exprs(V: MatExpr, op: DiffOp) -> list[Expr]:
    out = list(as_mat(V).c)
    for c in op.coeffs.values():
        out.extend(c.c)
    return out


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------
def verify_operator(V, Q, cfg: VerifyConfig | None = None, sample: PointSample | None = None,
                    structured: bool = True) -> VerificationReport:
    """Test [Q, L] = alpha L by randomized evaluation of every coefficient.

    The residual defect is also applied to random polynomial spinors as an
    end-to-end cross-check, and (for first-order Q with scalar derivative
    coefficients) split into the determining equations.
    """
    cfg = cfg or VerifyConfig()
    V = as_mat(V)
    op = _as_operator(Q)
    C, QL, aL, (QoL, LoQ) = _defect_parts(V, op)
    s = _sample_for(_all_exprs(V, op) + _all_exprs(MatExpr.zero(), C), cfg, sample)
    keys = sorted(set(C.coeffs) | set(QoL.coeffs) | set(LoQ.coeffs) | set(aL.coeffs))
    # the defect is a cancellation between Q L, L Q and alpha L; measure it against their size
    parts = [D.evaluate(s, keys) for D in (C, QoL, LoQ, aL)]
    finite = np.concatenate([p.ravel() for p in parts[1:]])
    finite = finite[np.isfinite(finite)]
    scale = float(np.max(np.abs(finite))) if finite.size else 0.0
    residuals: dict[str, float] = {"commutator": _rel(parts[0], scale)}

    action = 0.0
    for j in range(cfg.test_functions):
        psi = random_test_function(cfg.seed * 1000 + j, cfg.degree)
        dpsi = _spinor_derivatives(psi, keys, s)
        vals, *sizes = (_act(c, dpsi) for c in parts)
        sc = max(float(np.max(np.abs(v[np.isfinite(v)]), initial=0.0)) for v in sizes)
        action = max(action, _rel(vals, sc))
    residuals["action"] = action

    detail = {}
    if structured:
        try:
            cand = SymmetryCandidate.from_operator(op)
        except ExprError as exc:
            detail["structured"] = str(exc)
        else:
            residuals.update(residuals_structured(V, cand, cfg, sample=s))
    passed = all(r < cfg.tol for r in residuals.values())
    return VerificationReport(passed, residuals, cfg.seed, len(s), scale, detail)


def structured_terms(V: MatExpr, Q: SymmetryCandidate) -> dict[str, list[tuple[int, list]]]:
    """Each determining equation as (component, [terms]) groups; residual = sum of terms."""
    V = as_mat(V)
    xi0, xi, eta = Q.xi0, Q.xi, Q.eta
    alpha = Q.alpha
    div = add(*(diff(x, v) for x, v in zip(xi, SPATIAL)))
    out: dict[str, list] = {k: [] for k in EQUATIONS}
    for v in SPATIAL:
        out["eq8"].append([diff(xi0, v)])
    for a in range(3):
        for b in range(a, 3):
            terms = [diff(xi[a], SPATIAL[b]), diff(xi[b], SPATIAL[a])]
            if a == b:
                terms.append(mul(as_expr(-2) / 3, div))
            out["eq9"].append(terms)
    out["eq10"].append([div, mul(as_expr(1.5), alpha)])
    half_i = mul(as_expr(0.5), I_UNIT)
    for a, v in enumerate(SPATIAL):
        out["eq11"].append([diff(xi[a], "t"), diff(eta.c[0], v),
                            mul(-1, half_i, laplacian(xi[a])),
                            mul(-1, half_i, diff(div, v))])
        for b in (1, 2, 3):
            out["eq13"].append([diff(eta.c[b], v)])
    # zeroth order: lhs - rhs, componentwise
    # transport terms kept apart so that their cancellation is measured term by term
    lhs = [[mul(xi[a], diff(V.c[k], v)) for a, v in enumerate(SPATIAL)] + [mul(xi0, diff(V.c[k], "t"))]
           for k in range(4)]
    comm = mat_comm(eta, V)
    for k in range(4):
        terms = lhs[k] + [mul(-1, alpha, V.c[k]), mul(-1, diff(eta.c[k], "t")),
                          mul(I_UNIT, comm.c[k]), mul(half_i, laplacian(eta.c[k]))]
        if k == 0:
            terms += [mul(half_i, diff(div, "t")), mul(as_expr(0.25), laplacian(div))]
        key = "eq14" if k == 0 else "eq15"
        out[key].append(terms)
        out["eq12"].append(terms)
    return out


def residuals_structured(V, Q, cfg: VerifyConfig | None = None,
                         sample: PointSample | None = None) -> dict[str, float]:
    """Relative residual of each determining equation separately."""
    cfg = cfg or VerifyConfig()
    if not isinstance(Q, SymmetryCandidate):
        Q = SymmetryCandidate.from_operator(_as_operator(Q))
    groups = structured_terms(as_mat(V), Q)
    flat = [t for g in groups.values() for terms in g for t in terms]
    s = _sample_for(flat + list(as_mat(V).c), cfg, sample)
    evaluated = {name: [np.stack([s.eval(t) for t in terms]) for terms in g] for name, g in groups.items()}
    finite = [np.max(np.abs(v)) for g in evaluated.values() for v in g if np.all(np.isfinite(v))]
    # groups that should cancel exactly are judged against the size of the whole system
    floor = 1e-12 * max(finite, default=0.0)
    out = {}
    for name, g in evaluated.items():
        worst = 0.0
        for vals in g:
            if np.any(~np.isfinite(vals)):
                worst = float("inf")
                break
            scale = max(float(np.max(np.abs(vals), initial=0.0)), floor)
            worst = max(worst, _rel(vals.sum(axis=0), scale))
        out[name] = worst
    return out


# ---------------------------------------------------------------------------
# differential consequences of the scalar potential
# ---------------------------------------------------------------------------
@dataclass
class FrequencyReport:
    hessian: str  # "isotropic" | "per-axis" | "non-constant"
    mu: float | None  # isotropic value, V_bc = -mu delta_bc
    axis_mu: dict[int, float]  # axes with constant decoupled second derivative
    dilation_mu: float | None  # alpha'' = mu alpha for conformal-type generators
    vector_norm: float | None  # |(V1, V2, V3)| when the vector part is constant
    profiles: list[tuple[str, float]]

    def to_json(self) -> dict:
        return {"hessian": self.hessian, "mu": self.mu,
                "axis_mu": {str(k): v for k, v in self.axis_mu.items()},
                "dilation_mu": self.dilation_mu, "vector_norm": self.vector_norm,
                "profiles": [list(p) for p in self.profiles]}


def profile_class(mu: float, tol: float = 1e-9) -> tuple[str, float]:
    """alpha'' = mu alpha: trigonometric (mu<0), hyperbolic (mu>0) or linear."""
    if abs(mu) <= tol:
        return ("linear", 0.0)
    if mu < 0:
        return ("trigonometric", float(np.sqrt(-mu)))
    return ("hyperbolic", float(np.sqrt(mu)))


def _constant(vals: np.ndarray, tol: float) -> tuple[bool, float]:
    vals = np.asarray(vals)
    if vals.size == 0 or np.any(~np.isfinite(vals)):
        return False, float("nan")
    ref = complex(np.mean(vals))
    ok = bool(np.max(np.abs(vals - ref)) <= tol * (1 + abs(ref))) and abs(ref.imag) <= tol * (1 + abs(ref))
    return ok, float(ref.real)


def check_consequences(V, params=None, n: int = 10, seed: int = 0, tol: float = 1e-9,
                       placeholders: PlaceholderInstantiation | None = None) -> FrequencyReport:
    """Classify the scalar Hessian and the admissible time profiles."""
    V = as_mat(V)
    V0 = V.c[0]
    hess = [[diff(diff(V0, a), b) for b in SPATIAL] for a in SPATIAL]
    grad = [diff(V0, a) for a in SPATIAL]
    exprs = [h for row in hess for h in row] + list(V.c)
    try:
        s = draw_valid(exprs, n=n, seed=seed, params=_numeric_params(params), placeholders=placeholders)
    except SamplingFault:
        return FrequencyReport("non-constant", None, {}, None, None, [("constant", 0.0)])
    H = np.array([[s.eval(h) for h in row] for row in hess])  # (3, 3, n)
    axis_mu: dict[int, float] = {}
    for a in range(3):
        off_ok = all(np.max(np.abs(H[a, b])) <= tol for b in range(3) if b != a)
        ok, val = _constant(H[a, a], tol)
        if off_ok and ok:
            axis_mu[a + 1] = -val
    hessian = "non-constant"
    mu = None
    if len(axis_mu) == 3:
        vals = list(axis_mu.values())
        if max(vals) - min(vals) <= tol * (1 + max(abs(v) for v in vals)):
            hessian, mu = "isotropic", vals[0]
        else:
            hessian = "per-axis"
    elif axis_mu:
        hessian = "per-axis"

    # dilation profile: alpha (3 V_c + x_b V_cb) + alpha'' x_c = 0
    dil_vals = []
    for c in range(3):
        num = 3 * s.eval(grad[c]) + sum(s.x[:, b] * H[c, b] for b in range(3))
        dil_vals.append(num / s.x[:, c])
    ok, K = _constant(np.concatenate(dil_vals), tol)
    dilation_mu = -K if ok else None

    vector_norm = None
    vec = np.array([s.eval(V.c[k]) for k in (1, 2, 3)])
    if np.all(np.isfinite(vec)):
        okv = all(_constant(vec[k], tol)[0] for k in range(3))
        if okv:
            vector_norm = float(np.linalg.norm(np.real(vec[:, 0])))

    profiles = {("constant", 0.0)}
    for m in list(axis_mu.values()) + ([dilation_mu] if dilation_mu is not None else []):
        profiles.add(profile_class(m))
    return FrequencyReport(hessian, mu, axis_mu, dilation_mu, vector_norm, sorted(profiles))


__all__ = [
    "EQUATIONS",
    "FrequencyReport",
    "SymmetryCandidate",
    "VerificationReport",
    "VerifyConfig",
    "check_consequences",
    "profile_class",
    "random_test_function",
    "residuals_structured",
    "symmetry_defect",
    "verify_operator",
]
