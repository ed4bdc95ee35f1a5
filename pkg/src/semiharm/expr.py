"""Tiny expression grammar shared by covering specs, field expressions and
polynomial input.

Expressions are parsed into sympy in *Wirtinger form*: every base coordinate
``z_j`` has an independent partner ``z_jb`` standing for its conjugate, and
the fiber coordinate ``w`` has ``wb``.  ``conj`` is applied structurally
(swap partners, conjugate constants), so symbolic differentiation with
respect to ``z_j`` and ``z_jb`` yields the Wirtinger derivatives directly.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := number ['i'] | 'i' | name | name '(' args ')' | '(' expr ')'
              | '[' expr (',' expr)* ']'
"""
from __future__ import annotations

import re
from functools import cached_property

import numpy as np
import sympy as sp

from .errors import ConfigError

_NUMBER = re.compile(r"(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

FIELD_FUNCTIONS = ("conj", "re", "im", "log", "abs2", "radial_singular")


def z_symbols(m):
    return [sp.Symbol(f"z{j + 1}") for j in range(m)]


def zb_symbols(m):
    return [sp.Symbol(f"z{j + 1}b") for j in range(m)]


W = sp.Symbol("w")
WB = sp.Symbol("wb")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        mnum = _NUMBER.match(text, pos)
        if mnum:
            end = mnum.end()
            imag = False
            if end < len(text) and text[end] in "ij" and not (
                end + 1 < len(text) and (text[end + 1].isalnum() or text[end + 1] == "_")
            ):
                imag = True
                end += 1
            tokens.append(("num", (mnum.group(1), imag), pos))
            pos = end
            continue
        mname = _NAME.match(text, pos)
        if mname:
            tokens.append(("name", mname.group(0), pos))
            pos = mname.end()
            continue
        if text.startswith("**", pos):
            tokens.append(("op", "^", pos))
            pos += 2
            continue
        if ch in "+-*/^(),[]":
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        raise ConfigError(f"unexpected character {ch!r} at column {pos + 1} in {text!r}")
    tokens.append(("end", None, len(text)))
    return tokens


def conj(e):
    """Structural conjugate of a Wirtinger-form expression."""
    swap = {}
    for s in e.free_symbols:
        name = s.name
        if name == "w":
            swap[s] = WB
        elif name == "wb":
            swap[s] = W
        elif name.startswith("z") and name.endswith("b"):
            swap[s] = sp.Symbol(name[:-1])
        elif name.startswith("z"):
            swap[s] = sp.Symbol(name + "b")
        else:
            raise ConfigError(f"cannot conjugate symbol {name}")
    return _conj(e, swap)


def _conj(e, swap):
    if e.is_Symbol:
        return swap[e]
    if e.is_Number or e is sp.I or e.is_NumberSymbol:
        return sp.conjugate(e)
    if isinstance(e, (sp.Add, sp.Mul, sp.Pow)):
        return e.func(*[_conj(a, swap) for a in e.args])
    if isinstance(e, (sp.log, sp.exp)):
        return e.func(_conj(e.args[0], swap))
    raise ConfigError(f"conj is not supported for {e.func}")


class _Parser:
    def __init__(self, text, names, functions=(), m=1):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names
        self.functions = functions
        self.m = m

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] if tok[0] != "end" else "end of input"
            raise ConfigError(
                f"expected {want!r} at column {tok[2] + 1} in {self.text!r}, got {got!r}"
            )
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        self.take("end")
        if isinstance(e, list):
            raise ConfigError(f"list literal not allowed at top level in {self.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            if op == "/" and "/" not in self.allowed_ops:
                raise ConfigError(f"division not allowed in {self.text!r}")
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    allowed_ops = "+-*/^"

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            ex = self.unary()
            return base**ex
        return base

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            digits, imag = val
            q = sp.Rational(digits)
            return q * sp.I if imag else q
        if kind == "op" and val == "(":
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        if kind == "op" and val == "[":
            self.take()
            items = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.take()
                items.append(self.expr())
            self.take("op", "]")
            return items
        if kind == "name":
            self.take()
            if self.peek()[:2] == ("op", "("):
                if val not in self.functions:
                    raise ConfigError(f"unknown function {val!r} at column {pos + 1} in {self.text!r}")
                self.take()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.take("op", ")")
                return self.call(val, args, pos)
            if val == "i":
                return sp.I
            if val == "pi":
                return sp.pi
            if val in self.names:
                return self.names[val]
            raise ConfigError(f"unknown name {val!r} at column {pos + 1} in {self.text!r}")
        raise ConfigError(f"unexpected token {val!r} at column {pos + 1} in {self.text!r}")

    def call(self, name, args, pos):
        def one():
            if len(args) != 1:
                raise ConfigError(f"{name} takes one argument (column {pos + 1})")
            return args[0]

        if name == "conj":
            return conj(one())
        if name == "re":
            e = one()
            return (e + conj(e)) / 2
        if name == "im":
            e = one()
            return (e - conj(e)) / (2 * sp.I)
        if name == "abs2":
            e = one()
            return e * conj(e)
        if name == "log":
            return sp.log(one())
        if name == "radial_singular":
            if len(args) not in (3, 4):
                raise ConfigError("radial_singular(alpha, s, a[, h]) takes 3 or 4 arguments")
            alpha, s, a = args[:3]
            h = args[3] if len(args) == 4 else sp.Integer(1)
            return radial_singular_expr(alpha, s, a, h, self.m)
        raise ConfigError(f"unknown function {name!r}")


def radial_singular_expr(alpha, s, a, h, m):
    """(log||z - a||^2)^alpha * h / ||z - a||^(2m - 2 + s) in Wirtinger form."""
    for v, nm in ((alpha, "alpha"), (s, "s")):
        if isinstance(v, list) or v.free_symbols:
            raise ConfigError(f"radial_singular: {nm} must be a number")
    if isinstance(a, list):
        if len(a) != m:
            raise ConfigError(f"radial_singular: center needs {m} coordinates")
        center = a
    else:
        center = [a] * m
    for c in center:
        if c.free_symbols:
            raise ConfigError("radial_singular: center must be numeric")
    Z, ZB = z_symbols(m), zb_symbols(m)
    nsq = sum((Z[j] - center[j]) * (ZB[j] - sp.conjugate(center[j])) for j in range(m))
    return sp.log(nsq) ** alpha * h * nsq ** (-(2 * m - 2 + s) / sp.Integer(2))


def _base_names(m):
    names = {}
    for j, (z, zb) in enumerate(zip(z_symbols(m), zb_symbols(m))):
        names[f"z{j + 1}"] = z
    if m == 1:
        names["z"] = names["z1"]
    return names


def parse_coefficient(text, m):
    """Covering coefficient: polynomial in z1..zm with complex literals."""
    p = _Parser(str(text), _base_names(m), m=m)
    p.allowed_ops = "+-*^"
    e = sp.expand(p.parse())
    for s in e.free_symbols:
        if s not in z_symbols(m):
            raise ConfigError(f"coefficient {text!r} uses {s}")
    if not e.is_polynomial(*z_symbols(m)):
        raise ConfigError(f"coefficient {text!r} is not a polynomial in z")
    return e


def parse_field(text, m):
    """Field expression over z1..zm, w with conj/re/im/log/abs2/radial_singular."""
    names = _base_names(m)
    names["w"] = W
    return _Parser(str(text), names, FIELD_FUNCTIONS, m=m).parse()


def parse_polynomial(text, n=None):
    """Real polynomial in x1..xn with exact rational coefficients.

    Returns ``(n, {exponent tuple: Fraction})``.
    """
    from fractions import Fraction

    used = sorted({int(k) for k in re.findall(r"x(\d+)", str(text))})
    if n is None:
        n = max(used) if used else 1
    if used and (used[0] < 1 or used[-1] > n):
        raise ConfigError(f"polynomial {text!r} uses variables outside x1..x{n}")
    X = [sp.Symbol(f"x{j + 1}") for j in range(n)]
    p = _Parser(str(text), {f"x{j + 1}": X[j] for j in range(n)})
    e = sp.expand(p.parse())
    if e.has(sp.I):
        raise ConfigError(f"polynomial {text!r} must be real")
    try:
        poly = sp.Poly(e, *X, domain="QQ")
    except (sp.PolynomialError, sp.CoercionFailed):
        raise ConfigError(f"{text!r} is not a polynomial with rational coefficients") from None
    coeffs = {}
    for mon, c in poly.terms():
        coeffs[tuple(int(k) for k in mon)] = Fraction(int(c.p), int(c.q))
    return n, coeffs


class CompiledField:
    """numpy evaluators for a Wirtinger-form expression and its partials."""

    def __init__(self, expr, m):
        self.expr = expr
        self.m = m
        self.Z, self.ZB = z_symbols(m), zb_symbols(m)
        self.args = self.Z + self.ZB + [W, WB]
        extra = expr.free_symbols - set(self.args)
        if extra:
            raise ConfigError(f"field uses symbols {sorted(map(str, extra))} not valid for m={m}")
        self.uses_w = bool(expr.free_symbols & {W, WB})
        self._f = sp.lambdify(self.args, expr, modules="numpy")

    @cached_property
    def _derivs(self):
        out = []
        for s in self.args:
            d = sp.diff(self.expr, s)
            out.append(None if d == 0 else sp.lambdify(self.args, d, modules="numpy"))
        return out

    def _cols(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        cols = [z[:, j] for j in range(self.m)] + [np.conj(z[:, j]) for j in range(self.m)]
        return cols + [w, np.conj(w)]

    @staticmethod
    def _shape(val, n):
        return np.array(np.broadcast_to(np.asarray(val, dtype=complex), (n,)))

    def __call__(self, z, w):
        n = len(w)
        with np.errstate(all="ignore"):
            return self._shape(self._f(*self._cols(z, w)), n)

    def partials(self, z, w, dw):
        """Real partials (d/dx1, d/dy1, ...) along a branch with dw/dz = ``dw``."""
        n, m = len(w), self.m
        cols = self._cols(z, w)
        d = self._derivs
        with np.errstate(all="ignore"):
            ev = [None if g is None else self._shape(g(*cols), n) for g in d]
        fw, fwb = ev[2 * m], ev[2 * m + 1]
        out = np.empty((n, 2 * m), dtype=complex)
        for j in range(m):
            D = ev[j] if ev[j] is not None else np.zeros(n, complex)
            Db = ev[m + j] if ev[m + j] is not None else np.zeros(n, complex)
            if fw is not None:
                D = D + fw * dw[:, j]
            if fwb is not None:
                Db = Db + fwb * np.conj(dw[:, j])
            out[:, 2 * j] = D + Db
            out[:, 2 * j + 1] = 1j * (D - Db)
        return out
