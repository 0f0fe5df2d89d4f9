"""Multivector fields and differential forms on a single chart.

Antisymmetric coefficient tables over strictly increasing index tuples, with
ScalarField entries.  Provides wedge and interior products, the exterior
derivative, Lie derivatives, the musical sharp of a bivector, pointwise
evaluation, and pushforward along explicit chart maps.

Sign conventions, fixed here and inherited by every other module:

* the interior product contracts leading slots, i(X1^...^Xk)phi =
  phi(X1,...,Xk, . , ..., .), so i(P^Q) = i(Q) o i(P);
* sharp is defined by beta(sharp_P alpha) = P(alpha, beta), giving
  (sharp_P alpha)^j = sum_i alpha_i P^{ij};
* a k-tensor applied to k arguments uses the determinant convention
  T(a_1,...,a_k) = sum_{I increasing} T_I det[a_b(I_a)].
"""

from __future__ import annotations

from .expr import ChartMismatchError, DomainError, ScalarField, parse_expression
from .linalg import lu_det, sym_det

__all__ = [
    "DegreeError",
    "SingularJacobianError",
    "MultivectorField",
    "DifferentialForm",
    "ChartMap",
    "multivector",
    "form",
    "vector_field",
    "one_form",
    "wedge",
    "interior_product",
    "full_pairing",
    "exterior_derivative",
    "lie_derivative",
    "lie_bracket",
    "sharp",
    "evaluate_on",
    "pushforward",
]


class DegreeError(Exception):
    """Operands have incompatible degrees for the requested operation."""


class SingularJacobianError(Exception):
    """Chart map Jacobian is singular at an evaluation point."""


def merge_indices(left, right):
    """Sorted concatenation of disjoint index tuples with permutation sign.

    Returns (key, sign) or None when an index repeats.
    """
    combined = list(left) + list(right)
    if len(set(combined)) != len(combined):
        return None
    sign = 1
    out = list(left)
    for idx in right:
        pos = len(out)
        while pos > 0 and out[pos - 1] > idx:
            pos -= 1
        if (len(out) - pos) % 2 == 1:
            sign = -sign
        out.insert(pos, idx)
    return tuple(out), sign


class _Blade:
    """Shared implementation of multivector fields and differential forms."""

    __slots__ = ("chart", "degree", "components")

    kind = "blade"

    def __init__(self, chart, degree, components=None):
        degree = int(degree)
        if degree < 0 or degree > chart.dim:
            raise DegreeError(f"degree {degree} out of range on {chart}")
        table = {}
        for key, value in (components or {}).items():
            key = tuple(int(i) for i in key)
            if len(key) != degree:
                raise DegreeError(f"key {key} does not have degree {degree}")
            if any(not 0 <= i < chart.dim for i in key):
                raise IndexError(f"key {key} outside chart of dim {chart.dim}")
            if list(key) != sorted(set(key)):
                raise ValueError(f"component key {key} must be strictly increasing")
            field = _coerce_field(chart, value)
            if not field.is_zero:
                table[key] = field
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "components", table)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _new(self, components):
        return type(self)(self.chart, self.degree, components)

    def _like(self, degree, components):
        return type(self)(self.chart, degree, components)

    def component(self, key):
        """Component for an arbitrary index tuple (antisymmetric extension)."""
        merged = merge_indices(key, ())
        if merged is None:
            return self.chart.zero()
        skey, sign = merged
        field = self.components.get(skey)
        if field is None:
            return self.chart.zero()
        return field if sign == 1 else -field

    def _check_mate(self, other):
        if type(other) is not type(self):
            raise ChartMismatchError(f"cannot combine {self.kind} with {other.kind}")
        if other.chart != self.chart:
            raise ChartMismatchError("operands on different charts")

    def __add__(self, other):
        self._check_mate(other)
        if other.degree != self.degree:
            raise DegreeError("cannot add different degrees")
        table = dict(self.components)
        for key, field in other.components.items():
            table[key] = table[key] + field if key in table else field
        return self._new(table)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._new({k: -f for k, f in self.components.items()})

    def scaled(self, factor):
        """Multiply every component by a scalar field or number."""
        factor = _coerce_field(self.chart, factor)
        return self._new({k: factor * f for k, f in self.components.items()})

    @property
    def is_zero(self):
        return not self.components

    def max_abs(self, points):
        """Largest |component| over the sample points, with witness values."""
        worst, witness = 0.0, None
        for field in self.components.values():
            for p in points:
                v = abs(field.at(p))
                if v > worst:
                    worst, witness = v, p.values
        return worst, witness

    def value_table(self, point):
        return {key: field.at(point) for key, field in self.components.items()}

    def __repr__(self):
        body = ", ".join(f"{key}: {field}" for key, field in sorted(self.components.items()))
        return f"{type(self).__name__}(deg {self.degree}, {{{body}}})"


class MultivectorField(_Blade):
    kind = "multivector"


class DifferentialForm(_Blade):
    kind = "form"


def _coerce_field(chart, value):
    if isinstance(value, ScalarField):
        if value.chart != chart:
            raise ChartMismatchError("component field on a different chart")
        return value
    if isinstance(value, str):
        return parse_expression(value, chart)
    return chart.const(value)


def _named_key(chart, key):
    if isinstance(key, str):
        parts = [p.strip() for p in key.split(",") if p.strip()]
        return tuple(chart.index(p) for p in parts)
    if isinstance(key, int):
        return (key,)
    return tuple(chart.index(k) if isinstance(k, str) else int(k) for k in key)


def multivector(chart, degree, components=None):
    """MultivectorField builder; keys may use coordinate names."""
    table = {}
    for key, value in (components or {}).items():
        table[_named_key(chart, key)] = value
    return MultivectorField(chart, degree, table)


def form(chart, degree, components=None):
    table = {}
    for key, value in (components or {}).items():
        table[_named_key(chart, key)] = value
    return DifferentialForm(chart, degree, table)


def vector_field(chart, components):
    return multivector(chart, 1, components)


def one_form(chart, components):
    return form(chart, 1, components)


def wedge(a, b):
    """Graded-commutative product of two tensors of the same variance."""
    a._check_mate(b)
    if a.degree + b.degree > a.chart.dim:
        raise DegreeError(
            f"wedge degree {a.degree}+{b.degree} exceeds dim {a.chart.dim}"
        )
    table = {}
    for ka, fa in a.components.items():
        for kb, fb in b.components.items():
            merged = merge_indices(ka, kb)
            if merged is None:
                continue
            key, sign = merged
            term = fa * fb if sign == 1 else -(fa * fb)
            table[key] = table[key] + term if key in table else term
    return a._like(a.degree + b.degree, table)


def interior_product(p, phi):
    """Contract a multivector into the leading slots of a form."""
    if not isinstance(p, MultivectorField) or not isinstance(phi, DifferentialForm):
        raise ChartMismatchError("interior product takes (multivector, form)")
    if p.chart != phi.chart:
        raise ChartMismatchError("operands on different charts")
    if phi.degree < p.degree:
        raise DegreeError(f"cannot contract degree {p.degree} into degree {phi.degree}")
    table = {}
    for kp, fp in p.components.items():
        for kphi, fphi in phi.components.items():
            if not set(kp) <= set(kphi):
                continue
            rest = tuple(i for i in kphi if i not in kp)
            merged = merge_indices(kp, rest)
            key_sorted, sign = merged
            term = fp * fphi if sign == 1 else -(fp * fphi)
            table[rest] = table[rest] + term if rest in table else term
    return DifferentialForm(phi.chart, phi.degree - p.degree, table)


def full_pairing(p, phi):
    """i(P)phi for equal degrees, as a ScalarField."""
    if p.degree != phi.degree:
        raise DegreeError("full pairing needs equal degrees")
    return interior_product(p, phi).component(())


def exterior_derivative(phi):
    """Coordinate exterior derivative; accepts a ScalarField for degree 0."""
    if isinstance(phi, ScalarField):
        chart = phi.chart
        return DifferentialForm(
            chart, 1, {(i,): phi.diff_index(i) for i in range(chart.dim)}
        )
    if not isinstance(phi, DifferentialForm):
        raise ChartMismatchError("exterior derivative acts on forms")
    chart = phi.chart
    if phi.degree >= chart.dim:
        return DifferentialForm(chart, min(phi.degree + 1, chart.dim), {})
    table = {}
    for key, field in phi.components.items():
        for i in range(chart.dim):
            if i in key:
                continue
            merged = merge_indices((i,), key)
            skey, sign = merged
            term = field.diff_index(i)
            if sign == -1:
                term = -term
            table[skey] = table[skey] + term if skey in table else term
    return DifferentialForm(chart, phi.degree + 1, table)


def lie_derivative(x, target):
    """Lie derivative along a vector field.

    Scalars get x(f); forms use the Cartan formula; multivectors use the
    classical component formula (independent of the Schouten machinery, which
    makes the two paths usable as mutual checks).
    """
    if x.degree != 1 or not isinstance(x, MultivectorField):
        raise DegreeError("Lie derivative needs a vector field")
    if isinstance(target, ScalarField):
        if target.chart != x.chart:
            raise ChartMismatchError("operands on different charts")
        acc = x.chart.zero()
        for (i,), xi in x.components.items():
            acc = acc + xi * target.diff_index(i)
        return acc
    if target.chart != x.chart:
        raise ChartMismatchError("operands on different charts")
    if isinstance(target, DifferentialForm):
        if target.degree == 0:
            return lie_derivative(x, target.component(()))
        inner = interior_product(x, target)
        return interior_product(x, exterior_derivative(target)) + exterior_derivative(inner)
    chart = x.chart
    table = {}

    def bump(key, field):
        if field.is_zero:
            return
        table[key] = table[key] + field if key in table else field

    for key, field in target.components.items():
        for (j,), xj in x.components.items():
            bump(key, xj * field.diff_index(j))
        for slot, idx in enumerate(key):
            for (j,), xj in x.components.items():
                dx = xj.diff_index(idx)
                if dx.is_zero:
                    continue
                replaced = key[:slot] + (j,) + key[slot + 1 :]
                merged = merge_indices(replaced, ())
                if merged is None:
                    continue
                skey, sign = merged
                term = target.components[key] * dx
                bump(skey, -term if sign == 1 else term)
    return MultivectorField(chart, target.degree, table)


def lie_bracket(x, y):
    """Classical Lie bracket of vector fields."""
    if x.degree != 1 or y.degree != 1:
        raise DegreeError("Lie bracket needs two vector fields")
    return lie_derivative(x, y)


def sharp(p, alpha):
    """(sharp_P alpha)^j = sum_i alpha_i P^{ij} for a bivector P."""
    if p.degree != 2 or alpha.degree != 1:
        raise DegreeError("sharp needs a bivector and a one-form")
    if p.chart != alpha.chart:
        raise ChartMismatchError("operands on different charts")
    chart = p.chart
    table = {}
    for (i,), ai in alpha.components.items():
        for (k, l), pkl in p.components.items():
            if i == k:
                j, coeff = l, ai * pkl
            elif i == l:
                j, coeff = k, -(ai * pkl)
            else:
                continue
            key = (j,)
            table[key] = table[key] + coeff if key in table else coeff
    return MultivectorField(chart, 1, table)


def evaluate_on(tensor, args):
    """Apply a k-tensor to k degree-1 arguments of the opposite variance."""
    if len(args) != tensor.degree:
        raise DegreeError(f"need {tensor.degree} arguments, got {len(args)}")
    chart = tensor.chart
    for a in args:
        if a.degree != 1:
            raise DegreeError("arguments must have degree 1")
        if a.chart != chart:
            raise ChartMismatchError("argument on a different chart")
    if tensor.degree == 0:
        return tensor.component(())
    acc = chart.zero()
    for key, field in tensor.components.items():
        rows = [[arg.component((i,)) for arg in args] for i in key]
        acc = acc + field * sym_det(rows)
    return acc


class ChartMap:
    """A smooth map between charts, given by one expression per target coord.

    The Jacobian determinant is checked lazily at the points where the map is
    actually used; pushforward raises SingularJacobianError when it collapses.
    """

    __slots__ = ("source", "target", "exprs", "_jac")

    def __init__(self, source, target, exprs):
        fields = tuple(_coerce_field(source, e) for e in exprs)
        if len(fields) != target.dim:
            raise ValueError("one expression per target coordinate is required")
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "exprs", fields)
        object.__setattr__(self, "_jac", None)

    def __setattr__(self, name, value):
        raise AttributeError("ChartMap is immutable")

    def jacobian(self):
        """Symbolic Jacobian rows indexed by target coordinate."""
        if self._jac is None:
            rows = [
                [e.diff_index(i) for i in range(self.source.dim)] for e in self.exprs
            ]
            object.__setattr__(self, "_jac", rows)
        return self._jac

    def apply(self, point):
        vals = [e.at(point) for e in self.exprs]
        return self.target.point(vals)

    def jacobian_at(self, point):
        return [[entry.at(point) for entry in row] for row in self.jacobian()]


def pushforward(chart_map, p, points):
    """Jacobian-transformed components of a multivector at mapped points.

    Returns a list of (target_point, {increasing key: value}) pairs, one per
    source sample point.
    """
    if not isinstance(p, MultivectorField):
        raise ChartMismatchError("pushforward acts on multivector fields")
    if p.chart != chart_map.source:
        raise ChartMismatchError("field does not live on the map source")
    if chart_map.source.dim != chart_map.target.dim:
        raise DegreeError("pushforward needs an invertible (square) chart map")
    out = []
    for pt in points:
        jac = chart_map.jacobian_at(pt)
        det = lu_det(jac)
        if abs(det) < 1e-12:
            raise SingularJacobianError(f"Jacobian determinant {det} at {pt}")
        values = p.value_table(pt)
        table = {}
        for key, val in values.items():
            if val == 0.0:
                continue
            for tkey in _increasing_tuples(chart_map.target.dim, p.degree):
                minor = [[jac[t][s] for s in key] for t in tkey]
                d = _small_det(minor)
                if d != 0.0:
                    table[tkey] = table.get(tkey, 0.0) + val * d
        out.append((chart_map.apply(pt), table))
    return out


def _small_det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return lu_det(m)


def _increasing_tuples(dim, k):
    if k == 0:
        yield ()
        return
    idx = list(range(k))
    while True:
        yield tuple(idx)
        for pos in range(k - 1, -1, -1):
            if idx[pos] < dim - (k - pos):
                idx[pos] += 1
                for q in range(pos + 1, k):
                    idx[q] = idx[q - 1] + 1
                break
        else:
            return


def increasing_tuples(dim, k):
    """All strictly increasing k-tuples in range(dim)."""
    return list(_increasing_tuples(dim, k))
