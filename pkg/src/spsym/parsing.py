"""Tokenizer and Pratt parser shared by the scalar, Pauli and generator grammars.

Text is parsed once into a small AST; an interpreter then lowers it into
:class:`~spsym.expr.Expr`, :class:`~spsym.pauli.MatExpr` or a generator
operator, depending on which entry point was used.  Values are lifted
along scalar -> matrix -> operator as operands demand.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .expr import (
    I_UNIT,
    RESERVED_PARAMS,
    SPATIAL,
    VARIABLES,
    Const,
    Expr,
    ExprError,
    GaussRational,
    ParamTable,
    as_expr,
    atan2,
    const,
    func,
    ln,
    mul,
    param,
    phi_expr,
    placeholder,
    power,
    r_expr,
    rt_expr,
    sqrt,
    theta_expr,
    var,
)
from .pauli import MatExpr, as_mat, expand_F, expand_M, expand_N


class ParseError(ExprError):
    """Syntax or name error, carrying the character offset where it occurred."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")

    def caret(self) -> str:
        if self.text is None or self.pos is None:
            return str(self)
        return f"{self.text}\n{' ' * self.pos}^ {self}"


# ---------------------------------------------------------------------------
# tokens
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Token:
    kind: str  # NUM, ID, OP, EOF
    text: str
    pos: int


_NUM = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?")
_ID = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
# generator names that carry a trailing +/- family sign, e.g. B3+(w), Ah-(w)
_SIGNED = re.compile(r"(B|Bh|Bt)[123]|A|Ah|At")


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUM.match(text, i)
        if m and (ch.isdigit() or ch == "."):
            out.append(Token("NUM", m.group(0), i))
            i = m.end()
            continue
        m = _ID.match(text, i)
        if m:
            word = m.group(0)
            end = m.end()
            if (_SIGNED.fullmatch(word) and end + 1 < n and text[end] in "+-"
                    and text[end + 1] == "("):
                word += text[end]
                end += 1
            out.append(Token("ID", word, i))
            i = end
            continue
        if ch in "+-*/^(),[]":
            out.append(Token("OP", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    out.append(Token("EOF", "", n))
    return out


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Num:
    value: Fraction
    pos: int


@dataclass(frozen=True)
class Name:
    name: str
    pos: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    pos: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: int


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: int


_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "OP":
            got = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, got {got!r}", self.tok.pos, self.text)
        return self.advance()

    def parse(self):
        if self.tok.kind == "EOF":
            raise ParseError("empty expression", 0, self.text)
        node = self.expr(0)
        if self.tok.kind != "EOF":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, self.text)
        return node

    def expr(self, min_bp: int):
        left = self.prefix()
        while True:
            t = self.tok
            if t.kind == "OP" and t.text in _BINDING:
                bp = _BINDING[t.text]
            elif t.kind in ("NUM", "ID") or (t.kind == "OP" and t.text == "("):
                bp = _BINDING["*"]  # implicit multiplication: 2x1, 2(x1+1)
                if bp <= min_bp:
                    break
                right = self.expr(bp)
                left = BinOp("*", left, right, t.pos)
                continue
            else:
                break
            if bp <= min_bp:
                break
            self.advance()
            # ^ is right associative; unary minus binds looser than ^
            right = self.expr(bp - 1 if t.text == "^" else bp)
            left = BinOp(t.text, left, right, t.pos)
        return left

    def prefix(self):
        t = self.advance()
        if t.kind == "NUM":
            return Num(Fraction(t.text), t.pos)
        if t.kind == "ID":
            if self.tok.kind == "OP" and self.tok.text == "(":
                self.advance()
                args = []
                if not (self.tok.kind == "OP" and self.tok.text == ")"):
                    args.append(self.expr(0))
                    while self.tok.kind == "OP" and self.tok.text == ",":
                        self.advance()
                        args.append(self.expr(0))
                self.expect(")")
                return Call(t.text, tuple(args), t.pos)
            return Name(t.text, t.pos)
        if t.kind == "OP" and t.text == "(":
            node = self.expr(0)
            self.expect(")")
            return node
        if t.kind == "OP" and t.text == "-":
            return Neg(self.expr(25), t.pos)
        if t.kind == "OP" and t.text == "+":
            return self.expr(25)
        what = t.text or "end of input"
        raise ParseError(f"unexpected {what!r}", t.pos, self.text)


def parse_ast(text: str):
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# interpretation
# ---------------------------------------------------------------------------
_FUNCS = ("sin", "cos", "sinh", "cosh", "exp", "ln", "atan")
_SHORTHAND: dict[str, Callable[[], Expr]] = {
    "r": r_expr, "rt": rt_expr, "phi": phi_expr, "theta": theta_expr,
}
# macro name -> (placeholder names, builder)
_MATRIX_MACROS = {
    "N": (("G", "Gt"), expand_N),
    "F": (("Phi", "Phit"), expand_F),
}


@dataclass
class Scope:
    """Names visible to the interpreter."""

    params: ParamTable = field(default_factory=ParamTable)
    placeholders: dict[str, int] = field(default_factory=dict)
    pauli: bool = False
    generators: bool = False
    auto_declare: bool = True  # N(...) / F(...) macros declare their placeholders


def _lift_binary(op: str, a, b, pos: int, text: str):
    from .diffop import DiffOp, as_diffop  # local: diffop imports this module's users

    if isinstance(a, DiffOp) or isinstance(b, DiffOp):
        if op == "/":
            if not isinstance(b, Expr):
                raise ParseError("can only divide an operator by a scalar", pos, text)
            return as_diffop(a).scale(power(b, -1))
        a, b = as_diffop(a), as_diffop(b)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a.compose(b)
        raise ParseError(f"operator {op!r} not supported for generators", pos, text)
    if isinstance(a, MatExpr) or isinstance(b, MatExpr):
        if op == "/":
            if isinstance(b, MatExpr):
                raise ParseError("cannot divide by a matrix", pos, text)
            return a * power(b, -1)
        a, b = as_mat(a), as_mat(b)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        raise ParseError(f"operator {op!r} not supported for matrices", pos, text)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    raise AssertionError(op)


def _constant_value(e: Expr) -> Fraction | None:
    if isinstance(e, Const) and e.value.is_real():
        return e.value.re
    return None


class Interpreter:
    def __init__(self, scope: Scope, text: str):
        self.scope = scope
        self.text = text

    def err(self, message: str, pos: int):
        return ParseError(message, pos, self.text)

    def run(self, node):
        method = getattr(self, "_" + type(node).__name__)
        return method(node)

    def scalar(self, node) -> Expr:
        v = self.run(node)
        if not isinstance(v, Expr):
            raise self.err("expected a scalar expression", getattr(node, "pos", 0))
        return v

    def _Num(self, node: Num):
        return const(node.value)

    def _Neg(self, node: Neg):
        v = self.run(node.operand)
        return -v

    def _BinOp(self, node: BinOp):
        if node.op == "^":
            base = self.run(node.left)
            expo = self.scalar(node.right)
            if not isinstance(base, Expr):
                k = _constant_value(expo)
                if k is None or k.denominator != 1 or k < 0:
                    raise self.err("matrix/operator powers need a non-negative integer", node.pos)
                out = base
                for _ in range(int(k) - 1):
                    out = out * base
                return out if k else as_mat(1)
            k = _constant_value(expo)
            if k is not None:
                return power(base, k)
            if isinstance(expo, Const):
                raise self.err("complex exponents are not supported", node.pos)
            # non-constant exponent: a^b = exp(b ln a)
            return func("exp", mul(expo, ln(base)))
        a = self.run(node.left)
        b = self.run(node.right)
        return _lift_binary(node.op, a, b, node.pos, self.text)

    def _Name(self, node: Name):
        name = node.name
        s = self.scope
        if name in VARIABLES:
            return var(name)
        if name in _SHORTHAND:
            return _SHORTHAND[name]()
        if name == "i":
            return I_UNIT
        if s.pauli and re.fullmatch(r"s[0-3]", name):
            return MatExpr.sigma(int(name[1]))
        if s.generators:
            from .generators import GeneratorError, make_basis_generator

            try:
                return make_basis_generator(name, (), s.params).op
            except GeneratorError:
                pass
        if name in s.params:
            return param(name)
        if name in s.placeholders:
            raise self.err(f"placeholder {name!r} needs arguments", node.pos)
        raise self.err(f"unknown identifier {name!r}", node.pos)

    def _Call(self, node: Call):
        name, pos = node.name, node.pos
        s = self.scope
        if name in _FUNCS or name == "sqrt":
            if len(node.args) != 1:
                raise self.err(f"{name} takes one argument", pos)
            arg = self.scalar(node.args[0])
            return sqrt(arg) if name == "sqrt" else func(name, arg)
        if name == "atan2":
            if len(node.args) != 2:
                raise self.err("atan2 takes two arguments", pos)
            return atan2(self.scalar(node.args[0]), self.scalar(node.args[1]))
        if name in s.placeholders:
            arity = s.placeholders[name]
            if len(node.args) != arity:
                raise self.err(f"placeholder {name!r} declared with arity {arity}, "
                               f"applied to {len(node.args)} arguments", pos)
            return placeholder(name, tuple(self.scalar(a) for a in node.args))
        if s.pauli and name == "M":
            if len(node.args) != 2:
                raise self.err("M(n, u) takes two arguments", pos)
            return expand_M(self.scalar(node.args[0]), self.scalar(node.args[1]))
        if s.pauli and name in _MATRIX_MACROS:
            names, build = _MATRIX_MACROS[name]
            args = tuple(self.scalar(a) for a in node.args)
            if not args:
                raise self.err(f"{name}(...) needs arguments", pos)
            for ph in names:
                have = s.placeholders.get(ph)
                if have is None and s.auto_declare:
                    s.placeholders[ph] = len(args)
                elif have != len(args):
                    raise self.err(f"{name}(...) needs placeholder {ph}/{len(args)}", pos)
            return build(placeholder(names[0], args), placeholder(names[1], args))
        if s.generators:
            from .generators import GeneratorError, make_basis_generator

            args = tuple(self.scalar(a) for a in node.args)
            try:
                return make_basis_generator(name, args, s.params).op
            except GeneratorError as exc:
                raise self.err(str(exc), pos) from None
        raise self.err(f"unknown function {name!r}", pos)


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------
def _scope(params, placeholders, **kw) -> Scope:
    table = params if isinstance(params, ParamTable) else ParamTable(params or {})
    return Scope(table, dict(placeholders or {}), **kw)


def parse(text: str, params: ParamTable | Mapping | None = None,
          placeholders: Mapping[str, int] | None = None) -> Expr:
    """Parse a scalar expression."""
    scope = _scope(params, placeholders)
    return Interpreter(scope, text).scalar(parse_ast(text))


def parse_pauli(text: str, params: ParamTable | Mapping | None = None,
                placeholders: Mapping[str, int] | None = None) -> MatExpr:
    """Parse a matrix expression (``s0..s3``, ``M(n,u)``, ``N(...)``, ``F(...)``)."""
    scope = _scope(params, placeholders, pauli=True)
    return as_mat(Interpreter(scope, text).run(parse_ast(text)))


def parse_pauli_scoped(text: str, scope: Scope) -> MatExpr:
    return as_mat(Interpreter(scope, text).run(parse_ast(text)))


def parse_generator(text: str, params: ParamTable | Mapping | None = None,
                    placeholders: Mapping[str, int] | None = None):
    """Parse a generator such as ``L3 + n*kappa*t + n*s3`` into a DiffOp."""
    from .diffop import as_diffop

    scope = _scope(params, placeholders, pauli=True, generators=True)
    return as_diffop(Interpreter(scope, text).run(parse_ast(text)))


def parse_placeholder_decls(text: str) -> dict[str, int]:
    """``"G/2, Phi/1"`` -> {"G": 2, "Phi": 1}."""
    out: dict[str, int] = {}
    for item in re.split(r"[,\s]+", text.strip()):
        if not item:
            continue
        m = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9]*)/(\d+)", item)
        if not m:
            raise ParseError(f"bad placeholder declaration {item!r}")
        name, arity = m.group(1), int(m.group(2))
        if name in VARIABLES or name in _SHORTHAND or name in RESERVED_PARAMS:
            raise ParseError(f"placeholder name {name!r} is reserved")
        out[name] = arity
    return out


@dataclass
class PotentialFile:
    potential: MatExpr
    params: ParamTable
    placeholders: dict[str, int]
    source: str


def parse_params(text: str) -> dict[str, float]:
    """``"kappa=1.7, n=1"`` -> {"kappa": 1.7, "n": 1.0}."""
    out: dict[str, float] = {}
    for item in re.split(r"[,\s]+", text.strip()):
        if not item:
            continue
        if "=" not in item:
            raise ParseError(f"bad parameter assignment {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ParseError(f"bad parameter value in {item!r}") from None
    return out


def read_potential(text: str, extra_params: Mapping[str, float] | None = None) -> PotentialFile:
    """Parse potential-file text.

    Optional header lines ``placeholders: G/2`` and ``params: kappa=1.7``
    precede the expression; ``#`` starts a comment.
    """
    decls: dict[str, int] = {}
    values: dict[str, float] = {}
    body: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("placeholders:"):
            decls.update(parse_placeholder_decls(line.split(":", 1)[1]))
        elif low.startswith("params:"):
            values.update(parse_params(line.split(":", 1)[1]))
        else:
            body.append(line)
    if not body:
        raise ParseError("potential file has no expression")
    values.update(extra_params or {})
    table = ParamTable(values)
    for k in values:
        if k not in RESERVED_PARAMS and k in SPATIAL:
            raise ParseError(f"{k!r} is a variable")
    src = " ".join(body)
    scope = Scope(table, decls, pauli=True)
    pot = parse_pauli_scoped(src, scope)
    return PotentialFile(pot, table, scope.placeholders, src)


__all__ = [
    "ParseError",
    "PotentialFile",
    "Scope",
    "parse",
    "parse_ast",
    "parse_generator",
    "parse_params",
    "parse_pauli",
    "parse_placeholder_decls",
    "read_potential",
    "tokenize",
]
