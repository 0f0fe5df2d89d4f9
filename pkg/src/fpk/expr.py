"""Symbolic scalar fields on coordinate charts.

Coefficients of every tensor in this package are expression trees over the
chart coordinates: closed under exact differentiation, evaluable at chart
points, and printable back to the input grammar.  The grammar is deliberately
small (rational/real literals, pi, + - * /, integer powers, sin, cos, exp).
There is no simplification beyond constant folding; correctness rests on
pointwise evaluation, not on canonical forms.

Everything here is immutable after construction and evaluation is pure, so
fields may be shared freely between threads.
"""

from __future__ import annotations

import math
import re

__all__ = [
    "Chart",
    "Point",
    "ScalarField",
    "parse_expression",
    "differentiate",
    "evaluate",
    "ParseError",
    "UnknownSymbolError",
    "DomainError",
    "ChartMismatchError",
]

_RESERVED = {"pi", "sin", "cos", "exp"}
_FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


class ParseError(Exception):
    """Malformed expression text.  Carries the offset and the expected tokens."""

    def __init__(self, message, position=None, expected=()):
        super().__init__(message)
        self.position = position
        self.expected = tuple(expected)


class UnknownSymbolError(Exception):
    """Identifier that is neither a coordinate, a constant nor a function."""


class DomainError(Exception):
    """Evaluation failure: division by zero, overflow, or point outside domain."""


class ChartMismatchError(Exception):
    """Operands live on different charts."""


class Chart:
    """Ordered coordinate names with per-coordinate closed bounds."""

    __slots__ = ("coord_names", "domain")

    def __init__(self, coord_names, domain=None):
        names = tuple(coord_names)
        if not names:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names: {names}")
        for name in names:
            if name in _RESERVED:
                raise ValueError(f"coordinate name {name!r} is reserved")
        if domain is None:
            domain = ((-1.0, 1.0),) * len(names)
        dom = tuple((float(lo), float(hi)) for lo, hi in domain)
        if len(dom) != len(names):
            raise ValueError("one interval per coordinate is required")
        for (lo, hi), name in zip(dom, names):
            if not lo <= hi:
                raise ValueError(f"empty interval for {name}: [{lo}, {hi}]")
        object.__setattr__(self, "coord_names", names)
        object.__setattr__(self, "domain", dom)

    def __setattr__(self, name, value):
        raise AttributeError("Chart is immutable")

    @classmethod
    def box(cls, coord_names, lo=-1.0, hi=1.0):
        names = tuple(coord_names)
        return cls(names, ((lo, hi),) * len(names))

    @property
    def dim(self):
        return len(self.coord_names)

    def index(self, name):
        try:
            return self.coord_names.index(name)
        except ValueError:
            raise UnknownSymbolError(
                f"{name!r} is not a coordinate of chart {self.coord_names}"
            ) from None

    def var(self, name):
        return ScalarField(self, Var(self.index(name), name))

    def const(self, value):
        return ScalarField(self, _const(float(value)))

    def zero(self):
        return ScalarField(self, _ZERO)

    def coordinate_fields(self):
        return tuple(ScalarField(self, Var(i, n)) for i, n in enumerate(self.coord_names))

    def point(self, values):
        return Point(self, values)

    def extend(self, name, interval=(-1.0, 1.0)):
        """New chart with one extra coordinate appended."""
        return Chart(self.coord_names + (name,), self.domain + (tuple(interval),))

    def __eq__(self, other):
        return (
            isinstance(other, Chart)
            and self.coord_names == other.coord_names
            and self.domain == other.domain
        )

    def __hash__(self):
        return hash((self.coord_names, self.domain))

    def __repr__(self):
        return f"Chart({list(self.coord_names)})"


class Point:
    """A chart point; values are checked against the chart domain."""

    __slots__ = ("chart", "values")

    def __init__(self, chart, values):
        vals = tuple(float(v) for v in values)
        if len(vals) != chart.dim:
            raise ValueError(f"expected {chart.dim} values, got {len(vals)}")
        for v, (lo, hi), name in zip(vals, chart.domain, chart.coord_names):
            if not (lo - 1e-12 <= v <= hi + 1e-12):
                raise DomainError(f"{name}={v} outside [{lo}, {hi}]")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    def __iter__(self):
        return iter(self.values)

    def __repr__(self):
        pairs = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.chart.coord_names, self.values))
        return f"Point({pairs})"


# --- expression nodes -------------------------------------------------------
#
# Plain classes with __slots__; the only mutable member is the per-node
# derivative cache, which is write-once and value-idempotent (safe under
# concurrent evaluation).


class Expr:
    __slots__ = ("_dcache",)

    def deriv(self, index):
        cache = self._dcache
        if cache is None:
            cache = {}
            object.__setattr__(self, "_dcache", cache)
        hit = cache.get(index)
        if hit is None:
            hit = self._deriv(index)
            cache[index] = hit
        return hit

    def _ev(self, vals, memo):
        key = id(self)
        got = memo.get(key)
        if got is None:
            got = self._eval(vals, memo)
            memo[key] = got
        return got


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self._dcache = None
        self.value = float(value)

    def _deriv(self, index):
        return _ZERO

    def _eval(self, vals, memo):
        return self.value

    def _fmt(self):
        if self.value < 0:
            return repr(self.value), 0
        return repr(self.value), 9


class Var(Expr):
    __slots__ = ("index", "name")

    def __init__(self, index, name):
        self._dcache = None
        self.index = index
        self.name = name

    def _deriv(self, index):
        return _ONE if index == self.index else _ZERO

    def _eval(self, vals, memo):
        return vals[self.index]

    def _fmt(self):
        return self.name, 9


class Add(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self._dcache = None
        self.a = a
        self.b = b

    def _deriv(self, index):
        return _add(self.a.deriv(index), self.b.deriv(index))

    def _eval(self, vals, memo):
        return self.a._ev(vals, memo) + self.b._ev(vals, memo)

    def _fmt(self):
        ta, pa = self.a._fmt()
        tb, pb = self.b._fmt()
        if pa < 1:
            ta = f"({ta})"
        if pb < 1:
            tb = f"({tb})"
        return f"{ta} + {tb}", 1


class Sub(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self._dcache = None
        self.a = a
        self.b = b

    def _deriv(self, index):
        return _sub(self.a.deriv(index), self.b.deriv(index))

    def _eval(self, vals, memo):
        return self.a._ev(vals, memo) - self.b._ev(vals, memo)

    def _fmt(self):
        ta, pa = self.a._fmt()
        tb, pb = self.b._fmt()
        if pa < 1:
            ta = f"({ta})"
        if pb <= 1:
            tb = f"({tb})"
        return f"{ta} - {tb}", 1


class Neg(Expr):
    __slots__ = ("a",)

    def __init__(self, a):
        self._dcache = None
        self.a = a

    def _deriv(self, index):
        return _neg(self.a.deriv(index))

    def _eval(self, vals, memo):
        return -self.a._ev(vals, memo)

    def _fmt(self):
        ta, pa = self.a._fmt()
        if pa <= 1:
            ta = f"({ta})"
        return f"-{ta}", 0


class Mul(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self._dcache = None
        self.a = a
        self.b = b

    def _deriv(self, index):
        return _add(
            _mul(self.a.deriv(index), self.b),
            _mul(self.a, self.b.deriv(index)),
        )

    def _eval(self, vals, memo):
        return self.a._ev(vals, memo) * self.b._ev(vals, memo)

    def _fmt(self):
        ta, pa = self.a._fmt()
        tb, pb = self.b._fmt()
        if pa <= 1:
            ta = f"({ta})"
        if pb <= 1:
            tb = f"({tb})"
        return f"{ta}*{tb}", 2


class Div(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self._dcache = None
        self.a = a
        self.b = b

    def _deriv(self, index):
        num = _sub(
            _mul(self.a.deriv(index), self.b),
            _mul(self.a, self.b.deriv(index)),
        )
        return _div(num, _ipow(self.b, 2))

    def _eval(self, vals, memo):
        return self.a._ev(vals, memo) / self.b._ev(vals, memo)

    def _fmt(self):
        ta, pa = self.a._fmt()
        tb, pb = self.b._fmt()
        if pa <= 1:
            ta = f"({ta})"
        if pb <= 2:
            tb = f"({tb})"
        return f"{ta}/{tb}", 2


class Pow(Expr):
    __slots__ = ("a", "n")

    def __init__(self, a, n):
        self._dcache = None
        self.a = a
        self.n = int(n)

    def _deriv(self, index):
        return _mul(
            _mul(_const(self.n), _ipow(self.a, self.n - 1)),
            self.a.deriv(index),
        )

    def _eval(self, vals, memo):
        return self.a._ev(vals, memo) ** self.n

    def _fmt(self):
        ta, pa = self.a._fmt()
        if pa <= 3:
            ta = f"({ta})"
        return f"{ta}^{self.n}", 3


class Call(Expr):
    __slots__ = ("fn", "a")

    def __init__(self, fn, a):
        self._dcache = None
        self.fn = fn
        self.a = a

    def _deriv(self, index):
        da = self.a.deriv(index)
        if self.fn == "sin":
            return _mul(_call("cos", self.a), da)
        if self.fn == "cos":
            return _neg(_mul(_call("sin", self.a), da))
        return _mul(_call("exp", self.a), da)

    def _eval(self, vals, memo):
        return _FUNCTIONS[self.fn](self.a._ev(vals, memo))

    def _fmt(self):
        ta, _ = self.a._fmt()
        return f"{self.fn}({ta})", 9


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _const(v):
    v = float(v)
    if v == 0.0:
        return _ZERO
    if v == 1.0:
        return _ONE
    return Const(v)


def _add(a, b):
    if isinstance(a, Const):
        if a.value == 0.0:
            return b
        if isinstance(b, Const):
            return _const(a.value + b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Add(a, b)


def _sub(a, b):
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const):
        if isinstance(b, Const):
            return _const(a.value - b.value)
        if a.value == 0.0:
            return _neg(b)
    return Sub(a, b)


def _neg(a):
    if isinstance(a, Const):
        return _const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def _mul(a, b):
    if isinstance(a, Const):
        if a.value == 0.0:
            return _ZERO
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return _neg(b)
        if isinstance(b, Const):
            return _const(a.value * b.value)
    if isinstance(b, Const):
        if b.value == 0.0:
            return _ZERO
        if b.value == 1.0:
            return a
        if b.value == -1.0:
            return _neg(a)
    return Mul(a, b)


def _div(a, b):
    if isinstance(a, Const) and a.value == 0.0 and not (isinstance(b, Const) and b.value == 0.0):
        return _ZERO
    if isinstance(b, Const) and b.value != 0.0:
        if b.value == 1.0:
            return a
        if isinstance(a, Const):
            return _const(a.value / b.value)
    return Div(a, b)


def _ipow(a, n):
    n = int(n)
    if n == 0:
        return _ONE
    if n == 1:
        return a
    if n < 0:
        return _div(_ONE, _ipow(a, -n))
    if isinstance(a, Const):
        return _const(a.value**n)
    return Pow(a, n)


def _call(fn, a):
    if isinstance(a, Const):
        return _const(_FUNCTIONS[fn](a.value))
    return Call(fn, a)


def _substitute(node, repl, memo):
    got = memo.get(id(node))
    if got is not None:
        return got
    if isinstance(node, Var):
        out = repl.get(node.index, node)
    elif isinstance(node, Const):
        out = node
    elif isinstance(node, Add):
        out = _add(_substitute(node.a, repl, memo), _substitute(node.b, repl, memo))
    elif isinstance(node, Sub):
        out = _sub(_substitute(node.a, repl, memo), _substitute(node.b, repl, memo))
    elif isinstance(node, Neg):
        out = _neg(_substitute(node.a, repl, memo))
    elif isinstance(node, Mul):
        out = _mul(_substitute(node.a, repl, memo), _substitute(node.b, repl, memo))
    elif isinstance(node, Div):
        out = _div(_substitute(node.a, repl, memo), _substitute(node.b, repl, memo))
    elif isinstance(node, Pow):
        out = _ipow(_substitute(node.a, repl, memo), node.n)
    else:
        out = _call(node.fn, _substitute(node.a, repl, memo))
    memo[id(node)] = out
    return out


class ScalarField:
    """An expression tree bound to a chart.  Immutable; supports arithmetic."""

    __slots__ = ("chart", "root")

    def __init__(self, chart, root):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "root", root)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.chart != self.chart:
                raise ChartMismatchError("fields on different charts")
            return other
        return ScalarField(self.chart, _const(float(other)))

    def __add__(self, other):
        other = self._coerce(other)
        return ScalarField(self.chart, _add(self.root, other.root))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return ScalarField(self.chart, _sub(self.root, other.root))

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __neg__(self):
        return ScalarField(self.chart, _neg(self.root))

    def __mul__(self, other):
        other = self._coerce(other)
        return ScalarField(self.chart, _mul(self.root, other.root))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        return ScalarField(self.chart, _div(self.root, other.root))

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __pow__(self, n):
        return ScalarField(self.chart, _ipow(self.root, n))

    def sin(self):
        return ScalarField(self.chart, _call("sin", self.root))

    def cos(self):
        return ScalarField(self.chart, _call("cos", self.root))

    def exp(self):
        return ScalarField(self.chart, _call("exp", self.root))

    # -- calculus and evaluation ---------------------------------------------

    def diff(self, coord):
        return ScalarField(self.chart, self.root.deriv(self.chart.index(coord)))

    def diff_index(self, index):
        return ScalarField(self.chart, self.root.deriv(index))

    def at(self, point):
        return evaluate(self, point)

    def sample(self, points):
        return [evaluate(self, p) for p in points]

    def substitute(self, mapping):
        """Replace coordinates by constants or fields on the same chart."""
        repl = {}
        for name, value in mapping.items():
            idx = self.chart.index(name)
            if isinstance(value, ScalarField):
                if value.chart != self.chart:
                    raise ChartMismatchError("substitution field on a different chart")
                repl[idx] = value.root
            else:
                repl[idx] = _const(float(value))
        return ScalarField(self.chart, _substitute(self.root, repl, {}))

    @property
    def is_zero(self):
        """Structurally zero (sufficient, not necessary, for vanishing)."""
        return isinstance(self.root, Const) and self.root.value == 0.0

    def __str__(self):
        return self.root._fmt()[0]

    def __repr__(self):
        return f"ScalarField({self})"


def differentiate(field, coord):
    """Exact symbolic partial derivative with respect to a chart coordinate."""
    return field.diff(coord)


def evaluate(field, point):
    """IEEE-double value of the field at a chart point."""
    if point.chart != field.chart:
        raise ChartMismatchError("point and field on different charts")
    try:
        return field.root._ev(point.values, {})
    except ZeroDivisionError:
        raise DomainError(f"division by zero at {point}") from None
    except OverflowError:
        raise DomainError(f"overflow at {point}") from None


# --- parser -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ParseError(
                f"unexpected character {text[at]!r} at offset {at}",
                position=at,
                expected=("number", "identifier", "operator"),
            )
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, chart):
        self.text = text
        self.chart = chart
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, value, offset = self.peek()
        shown = value if kind != "end" else "end of input"
        raise ParseError(
            f"unexpected {shown!r} at offset {offset}; expected {', '.join(expected)}",
            position=offset,
            expected=expected,
        )

    def expect_op(self, op):
        kind, value, _ = self.peek()
        if kind != "op" or value != op:
            self.fail((op,))
        self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(("operator", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = _add(node, rhs) if value == "+" else _sub(node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.factor()
                node = _mul(node, rhs) if value == "*" else _div(node, rhs)
            else:
                return node

    def factor(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return _neg(self.factor())
        return self.power()

    def power(self):
        node = self.base()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            node = _ipow(node, self.exponent())
        return node

    def exponent(self):
        sign = 1
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
        kind, value, offset = self.peek()
        if kind != "num" or any(c in value for c in ".eE"):
            self.fail(("integer exponent",))
        self.advance()
        return sign * int(value)

    def base(self):
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return _const(float(value))
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.advance()
            if value == "pi":
                return _const(math.pi)
            nxt = self.peek()
            if value in _FUNCTIONS:
                if not (nxt[0] == "op" and nxt[1] == "("):
                    self.fail(("(",))
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return _call(value, arg)
            if value in self.chart.coord_names:
                return Var(self.chart.coord_names.index(value), value)
            raise UnknownSymbolError(
                f"unknown identifier {value!r} at offset {offset}; "
                f"coordinates are {self.chart.coord_names}"
            )
        self.fail(("number", "pi", "coordinate", "function", "("))


def parse_expression(text, chart):
    """Parse expression text into a ScalarField over the chart."""
    return ScalarField(chart, _Parser(text, chart).parse())
