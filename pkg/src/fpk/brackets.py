"""Schouten-Nijenhuis calculus with two independent evaluation routes.

`schouten_bracket` expands the bracket termwise over decomposable pieces of
the component tables; `lichnerowicz_pairing` evaluates i([P,Q])phi through the
interior-product/exterior-derivative identity without ever forming [P,Q].
The two routes share no code beyond the tensor primitives, so they act as
mutual oracles.  The remaining functions implement the classical bivector
identities (one-form bracket, Gelfand-Dorfman expressions, the Poisson
condition) with each side of every identity computed independently.
"""

from __future__ import annotations

from .expr import ChartMismatchError
from .linalg import sym_inverse
from .sampling import make_record, max_abs_fields
from .tensors import (
    DegreeError,
    DifferentialForm,
    MultivectorField,
    evaluate_on,
    exterior_derivative,
    full_pairing,
    increasing_tuples,
    interior_product,
    lie_bracket,
    lie_derivative,
    merge_indices,
    one_form,
    sharp,
    wedge,
)

__all__ = [
    "schouten_bracket",
    "lichnerowicz_pairing",
    "one_form_bracket",
    "poisson_bracket",
    "hamiltonian_field",
    "noulpp_residual",
    "polarization_residual",
    "poisson_condition_residual",
    "gd_identity_suite",
    "regular_equivalent_form",
    "RankDropError",
    "BadComplementError",
]


class RankDropError(Exception):
    """Bivector rank varies across the sample set."""


class BadComplementError(Exception):
    """Proposed complement frame is not transverse to the image distribution."""


def schouten_bracket(p, q):
    """Schouten-Nijenhuis bracket of multivector fields.

    Convention: [X, Q] = L_X Q for a vector field X, [f, Q] = i(df) Q for a
    function, and [P, Q] = (-1)^(pq) [Q, P].  Termwise on decomposable pieces,

        [f dI, g dJ] = f (i(dg) dI) ^ dJ + (-1)^(pq) g (i(df) dJ) ^ dI.

    This is the grading under which the interior-product identity evaluated by
    `lichnerowicz_pairing` holds literally, and for bivectors it matches the
    anchor convention beta(sharp_P alpha) = P(alpha, beta) used everywhere
    else in the package.
    """
    if p.chart != q.chart:
        raise ChartMismatchError("operands on different charts")
    chart = p.chart
    dp, dq = p.degree, q.degree
    out_degree = dp + dq - 1
    if out_degree < 0:
        return MultivectorField(chart, 0, {})
    if out_degree > chart.dim:
        raise DegreeError(
            f"bracket degree {out_degree} exceeds chart dimension {chart.dim}"
        )
    sign1 = 1
    sign2 = 1 if (dp * dq) % 2 == 0 else -1
    table = {}

    def bump(key, field):
        if field.is_zero:
            return
        table[key] = table[key] + field if key in table else field

    for ki, fi in p.components.items():
        for kj, gj in q.components.items():
            # (-1)^(p-1) f (i(dg) d_I) ^ d_J
            for pos, idx in enumerate(ki):
                dg = gj.diff_index(idx)
                if dg.is_zero:
                    continue
                rest = ki[:pos] + ki[pos + 1 :]
                merged = merge_indices(rest, kj)
                if merged is None:
                    continue
                key, msign = merged
                coeff = fi * dg
                s = sign1 * msign * (1 if pos % 2 == 0 else -1)
                bump(key, coeff if s == 1 else -coeff)
            # -(-1)^((p-1)(q-1)+(q-1)) g (i(df) d_J) ^ d_I
            for pos, idx in enumerate(kj):
                df = fi.diff_index(idx)
                if df.is_zero:
                    continue
                rest = kj[:pos] + kj[pos + 1 :]
                merged = merge_indices(rest, ki)
                if merged is None:
                    continue
                key, msign = merged
                coeff = gj * df
                s = sign2 * msign * (1 if pos % 2 == 0 else -1)
                bump(key, coeff if s == 1 else -coeff)
    return MultivectorField(chart, out_degree, table)


def lichnerowicz_pairing(p, q, phi):
    """i([P,Q])phi evaluated without computing [P,Q].

    i([P,Q])phi = (-1)^(q(p+1)) i(P) d(i(Q)phi) + (-1)^p i(Q) d(i(P)phi)
                  - i(P^Q) dphi,   with i(P^Q) = i(Q) o i(P).
    """
    dp, dq = p.degree, q.degree
    if phi.degree != dp + dq - 1:
        raise DegreeError("pairing needs a form of degree deg P + deg Q - 1")
    chart = p.chart
    s1 = 1 if (dq * (dp + 1)) % 2 == 0 else -1
    s2 = 1 if dp % 2 == 0 else -1
    term1 = full_pairing(p, exterior_derivative(interior_product(q, phi)))
    term2 = full_pairing(q, exterior_derivative(interior_product(p, phi)))
    if dp + dq <= chart.dim and phi.degree < chart.dim:
        term3 = full_pairing(wedge(p, q), exterior_derivative(phi))
    else:
        term3 = chart.zero()
    acc = chart.zero()
    if s1 == 1:
        acc = acc + term1
    else:
        acc = acc - term1
    if s2 == 1:
        acc = acc + term2
    else:
        acc = acc - term2
    return acc - term3


def one_form_bracket(p, alpha, beta):
    """{alpha, beta}_P = i(sharp alpha) d beta - i(sharp beta) d alpha + d(P(alpha, beta))."""
    if p.degree != 2 or alpha.degree != 1 or beta.degree != 1:
        raise DegreeError("one-form bracket needs a bivector and two one-forms")
    pab = evaluate_on(p, [alpha, beta])
    return (
        interior_product(sharp(p, alpha), exterior_derivative(beta))
        - interior_product(sharp(p, beta), exterior_derivative(alpha))
        + exterior_derivative(pab)
    )


def poisson_bracket(p, f, g):
    """{f, g} = P(df, dg)."""
    return evaluate_on(p, [exterior_derivative(f), exterior_derivative(g)])


def hamiltonian_field(p, f):
    return sharp(p, exterior_derivative(f))


def _coframe(chart):
    return [one_form(chart, {(i,): 1.0}) for i in range(chart.dim)]


def _frame(chart):
    from .tensors import vector_field

    return [vector_field(chart, {(i,): 1.0}) for i in range(chart.dim)]


def noulpp_residual(p, points, tol=1e-10):
    """[P,P](a,b,c) = 2[dc(#a,#b) - (L_{#c}P)(a,b)] over the coordinate coframe."""
    chart = p.chart
    cof = _coframe(chart)
    bracket = schouten_bracket(p, p)
    fields = []
    for i, j, k in increasing_tuples(chart.dim, 3):
        lhs = evaluate_on(bracket, [cof[i], cof[j], cof[k]])
        sa, sb, sc = sharp(p, cof[i]), sharp(p, cof[j]), sharp(p, cof[k])
        dgamma = exterior_derivative(cof[k])
        rhs = 2.0 * (
            evaluate_on(dgamma, [sa, sb]) - evaluate_on(lie_derivative(sc, p), [cof[i], cof[j]])
        )
        fields.append(lhs - rhs)
    worst, witness = max_abs_fields(fields, points)
    return make_record("self-bracket-via-lie", worst, tol, witness)


def polarization_residual(p1, p2, points, tol=1e-10):
    """Polarized self-bracket identity for a pair of bivectors."""
    chart = p1.chart
    cof = _coframe(chart)
    bracket = schouten_bracket(p1, p2)
    fields = []
    for i, j, k in increasing_tuples(chart.dim, 3):
        a, b, c = cof[i], cof[j], cof[k]
        lhs = evaluate_on(bracket, [a, b, c])
        dgamma = exterior_derivative(c)
        rhs = (
            evaluate_on(dgamma, [sharp(p1, a), sharp(p2, b)])
            + evaluate_on(dgamma, [sharp(p2, a), sharp(p1, b)])
            - evaluate_on(lie_derivative(sharp(p1, c), p2), [a, b])
            - evaluate_on(lie_derivative(sharp(p2, c), p1), [a, b])
        )
        fields.append(lhs - rhs)
    worst, witness = max_abs_fields(fields, points)
    # cross-check: [P1,P2] = (1/2)([P1+P2,P1+P2] - [P1,P1] - [P2,P2])
    half = (
        schouten_bracket(p1 + p2, p1 + p2)
        - schouten_bracket(p1, p1)
        - schouten_bracket(p2, p2)
    )
    worst2, witness2 = (half.scaled(0.5) - bracket).max_abs(points)
    if worst2 > worst:
        worst, witness = worst2, witness2
    return make_record("polarized-bracket", worst, tol, witness)


def poisson_condition_residual(p, points, tol=1e-10):
    """(L_{#c}P)(a,b) = dc(#a,#b); vanishes exactly when P is Poisson."""
    chart = p.chart
    cof = _coframe(chart)
    fields = []
    for i, j, k in increasing_tuples(chart.dim, 3):
        a, b, c = cof[i], cof[j], cof[k]
        lhs = evaluate_on(lie_derivative(sharp(p, c), p), [a, b])
        rhs = evaluate_on(exterior_derivative(c), [sharp(p, a), sharp(p, b)])
        fields.append(lhs - rhs)
    worst, witness = max_abs_fields(fields, points)
    return make_record("poisson-condition", worst, tol, witness)


def _gd_one_form_route(p, points, tol):
    """[P,P](a,b,c) = 2 c(#{a,b} - [#a,#b]) with the one-form bracket."""
    chart = p.chart
    cof = _coframe(chart)
    bracket = schouten_bracket(p, p)
    fields = []
    for i, j, k in increasing_tuples(chart.dim, 3):
        a, b, c = cof[i], cof[j], cof[k]
        lhs = evaluate_on(bracket, [a, b, c])
        inner = sharp(p, one_form_bracket(p, a, b)) - lie_bracket(sharp(p, a), sharp(p, b))
        rhs = 2.0 * evaluate_on(c, [inner])
        fields.append(lhs - rhs)
    worst, witness = max_abs_fields(fields, points)
    return make_record("bracket-via-one-forms", worst, tol, witness)


def _gd_cyclic_route(p, points, tol):
    """[P,P](a,b,c) = 2 sum_cyc <c, #(L_{#a} b)>."""
    chart = p.chart
    cof = _coframe(chart)
    bracket = schouten_bracket(p, p)
    fields = []
    for i, j, k in increasing_tuples(chart.dim, 3):
        triple = (cof[i], cof[j], cof[k])
        lhs = evaluate_on(bracket, list(triple))
        rhs = chart.zero()
        for r in range(3):
            a, b, c = triple[r], triple[(r + 1) % 3], triple[(r + 2) % 3]
            rhs = rhs + evaluate_on(c, [sharp(p, lie_derivative(sharp(p, a), b))])
        fields.append(lhs - 2.0 * rhs)
    worst, witness = max_abs_fields(fields, points)
    return make_record("bracket-via-cyclic-sharp", worst, tol, witness)


def _gd_jacobiator_route(p, x_fields, points, tol):
    """sum_cyc <{{a,b},c}, X> = [P, L_X P](a,b,c) + (1/2) sum_cyc [P,P](a,b,d<c,X>)."""
    chart = p.chart
    cof = _coframe(chart)
    selfbr = schouten_bracket(p, p)
    fields = []
    for x in x_fields:
        mixed = schouten_bracket(p, lie_derivative(x, p))
        for i, j, k in increasing_tuples(chart.dim, 3):
            triple = (cof[i], cof[j], cof[k])
            lhs = chart.zero()
            corr = chart.zero()
            for r in range(3):
                a, b, c = triple[r], triple[(r + 1) % 3], triple[(r + 2) % 3]
                nested = one_form_bracket(p, one_form_bracket(p, a, b), c)
                lhs = lhs + evaluate_on(nested, [x])
                pairing = evaluate_on(c, [x])
                corr = corr + evaluate_on(
                    selfbr, [a, b, exterior_derivative(pairing)]
                )
            rhs = evaluate_on(mixed, list(triple)) + 0.5 * corr
            fields.append(lhs - rhs)
    worst, witness = max_abs_fields(fields, points)
    return make_record("one-form-jacobiator", worst, tol, witness)


def gd_identity_suite(p, points, tol=1e-10, aux_fields=None):
    """Residuals of the four bivector identities, sides computed independently.

    The first three hold for every bivector; `poisson-condition` vanishes
    exactly when [P,P] = 0, so it is the one that flags non-Poisson inputs.
    """
    if p.degree != 2:
        raise DegreeError("identity suite expects a bivector")
    if aux_fields is None:
        aux_fields = _frame(p.chart)[: min(3, p.chart.dim)]
    return {
        "bracket-via-one-forms": _gd_one_form_route(p, points, tol),
        "one-form-jacobiator": _gd_jacobiator_route(p, aux_fields, points, tol),
        "bracket-via-cyclic-sharp": _gd_cyclic_route(p, points, tol),
        "poisson-condition": poisson_condition_residual(p, points, tol),
    }


def regular_equivalent_form(p, complement_frame, points, tol=1e-10):
    """The 2-form equivalent to a regular bivector modulo a chosen complement.

    Returns (theta, records).  theta annihilates the complement frame and
    satisfies theta(sharp a, sharp b) = P(a, b); the sign convention is the one
    forced by flat = -(sharp restricted)^(-1) together with the round trip
    reconstruct(theta) = P.
    """
    import numpy as np

    chart = p.chart
    m = chart.dim
    pi_rows = [[p.component((i, j)) for j in range(m)] for i in range(m)]

    # constant-rank detection and a column subset C with invertible P^{CC}
    mats = [np.array([[f.at(pt) for f in row] for row in pi_rows]) for pt in points]
    svals = [np.linalg.svd(mat, compute_uv=False) for mat in mats]
    ranks = {int(np.sum(s > 1e-8 * max(s[0], 1e-300))) for s in svals}
    if len(ranks) != 1:
        raise RankDropError(f"rank varies over the sample set: {sorted(ranks)}")
    s_rank = ranks.pop()
    if s_rank == 0:
        raise RankDropError("bivector vanishes on the sample set")
    base = mats[0]
    best, best_score = None, 0.0
    for cand in increasing_tuples(m, s_rank):
        sub = base[np.ix_(cand, cand)]
        score = abs(np.linalg.det(sub))
        if score > best_score:
            best, best_score = cand, score
    if best is None or best_score < 1e-10:
        raise RankDropError("no coordinate subset spans the image")
    csub = list(best)

    frame_cols = [[v.component((i,)) for i in range(m)] for v in complement_frame]
    if len(frame_cols) != m - s_rank:
        raise BadComplementError(
            f"complement needs {m - s_rank} fields, got {len(frame_cols)}"
        )
    # columns: sharp(dx^c) for c in C, then the complement frame
    w_cols = []
    for c in csub:
        w_cols.append([p.component((c, i)) for i in range(m)])
    w_cols.extend(frame_cols)
    w_rows = [[w_cols[c][r] for c in range(m)] for r in range(m)]
    for pt in points:
        val = np.array([[f.at(pt) for f in row] for row in w_rows])
        if abs(np.linalg.det(val)) < 1e-10:
            raise BadComplementError(f"frame not transverse to the image at {pt}")
    w_inv, _ = sym_inverse(w_rows)

    # theta = W^-T diag(P_CC, 0) W^-1
    theta_table = {}
    for i in range(m):
        for j in range(i + 1, m):
            acc = chart.zero()
            for a, ca in enumerate(csub):
                for b, cb in enumerate(csub):
                    if ca == cb:
                        continue
                    acc = acc + w_inv[a][i] * pi_rows[ca][cb] * w_inv[b][j]
            if not acc.is_zero:
                theta_table[(i, j)] = acc
    theta = DifferentialForm(chart, 2, theta_table)

    # round trip and annihilation checks
    fields = []
    for v in complement_frame:
        contracted = interior_product(v, theta)
        fields.extend(contracted.components.values())
    ann, ann_w = max_abs_fields(fields, points) if fields else (0.0, None)

    worst_rt, wit_rt = 0.0, None
    theta_mats = [
        np.array([[theta.component((i, j)).at(pt) for j in range(m)] for i in range(m)])
        for pt in points
    ]
    for mat, tmat, pt in zip(mats, theta_mats, points):
        res = np.max(np.abs(mat @ tmat @ mat + mat))
        if res > worst_rt:
            worst_rt, wit_rt = float(res), pt.values
    records = {
        "annihilates-complement": make_record("annihilates-complement", ann, tol, ann_w),
        "round-trip": make_record("round-trip", worst_rt, tol, wit_rt),
    }
    return theta, records
