"""Differential forms and vector fields with symbolic coefficients.

Forms store coefficients on strictly increasing multi-indices encoded as
bitmasks over the chart coordinates; all sign bookkeeping happens at
operation time via merge-parity counts.  Iterated contractions are
innermost-first: interior(X, interior(Y, a)) contracts Y into the first
slot of a, so i_Z i_Y i_X H = H(X, Y, Z).
"""

from __future__ import annotations

from fractions import Fraction

from .symexpr import (Chart, ChartMismatchError, Expr, ExprParser,
                      OracleConfig, ParseError, Pow, Prod, Rat, Sum,
                      SymExprError, TokenStream, as_expr, diff, is_zero,
                      simplify, tokenize)

__all__ = [
    "Chart", "VectorField", "KForm", "FormVerdict", "wedge", "ext_d",
    "interior", "lie_derivative", "vf_bracket", "vf_apply", "parse_form",
    "parse_vector_field", "form_is_zero", "vf_is_zero",
]


def _require_same_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatchError(
            f"operands live on different charts "
            f"({a.chart.name!r} vs {b.chart.name!r})")


def _merge_sign(m1, m2):
    """Parity sign for sorting the concatenation of two disjoint masks."""
    inversions = 0
    rest = m2
    while rest:
        j = (rest & -rest).bit_length() - 1
        inversions += (m1 >> (j + 1)).bit_count()
        rest &= rest - 1
    return -1 if inversions & 1 else 1


class VectorField:
    """Vector field on a chart: one component expression per coordinate."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart, comps):
        comps = tuple(as_expr(c) for c in comps)
        if len(comps) != chart.dim:
            raise ValueError("one component per chart coordinate required")
        for c in comps:
            if c.chart is not None and c.chart != chart:
                raise ChartMismatchError("component from a different chart")
        self.chart = chart
        self.comps = comps

    @classmethod
    def zero(cls, chart):
        return cls(chart, (Rat(0),) * chart.dim)

    @classmethod
    def basis(cls, chart, coord):
        i = coord if isinstance(coord, int) else chart.index(coord)
        return cls(chart, tuple(Rat(1 if j == i else 0)
                                for j in range(chart.dim)))

    def __add__(self, other):
        _require_same_chart(self, other)
        return VectorField(self.chart,
                           tuple(a + b for a, b in
                                 zip(self.comps, other.comps)))

    def __sub__(self, other):
        _require_same_chart(self, other)
        return VectorField(self.chart,
                           tuple(a - b for a, b in
                                 zip(self.comps, other.comps)))

    def __neg__(self):
        return self.scale(Rat(-1))

    def scale(self, factor):
        factor = as_expr(factor)
        return VectorField(self.chart,
                           tuple(Prod(factor, c) for c in self.comps))

    def apply(self, f):
        return vf_apply(self, f)

    def simplified(self):
        return VectorField(self.chart, tuple(simplify(c) for c in self.comps))

    def __str__(self):
        parts = []
        for name, c in zip(self.chart.coords, self.comps):
            s = simplify(c)
            if s.kind == "rat" and s.value == 0:
                continue
            parts.append(f"({s})*d/d{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"<VectorField {self}>"


class KForm:
    """Alternating k-form; coefficients keyed by increasing-index bitmask."""

    __slots__ = ("chart", "degree", "coeffs")

    def __init__(self, chart, degree, coeffs=None):
        if degree < 0:
            raise ValueError("form degree must be >= 0")
        self.chart = chart
        self.degree = degree
        store = {}
        for mask, c in (coeffs or {}).items():
            if mask.bit_count() != degree or mask >= (1 << chart.dim):
                raise ValueError(
                    f"mask {mask:b} invalid for a degree-{degree} form")
            c = as_expr(c)
            if c.chart is not None and c.chart != chart:
                raise ChartMismatchError("coefficient from a different chart")
            if c.kind == "rat" and c.value == 0:
                continue
            store[mask] = c
        self.coeffs = store

    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree)

    @classmethod
    def scalar(cls, chart, value):
        return cls(chart, 0, {0: as_expr(value)})

    @classmethod
    def covector(cls, chart, coord):
        i = coord if isinstance(coord, int) else chart.index(coord)
        return cls(chart, 1, {1 << i: Rat(1)})

    @classmethod
    def basis(cls, chart, coords, coeff=1):
        """coeff * dx_{i1} ^ ... ^ dx_{ik} for coordinates in any order."""
        idx = [c if isinstance(c, int) else chart.index(c) for c in coords]
        if len(set(idx)) != len(idx):
            return cls.zero(chart, len(idx))
        mask = 0
        for i in idx:
            mask |= 1 << i
        sign = _permutation_sign(idx)
        return cls(chart, len(idx),
                   {mask: Prod(Rat(sign), as_expr(coeff))})

    def coeff(self, mask):
        return self.coeffs.get(mask, Rat(0))

    def terms(self):
        return sorted(self.coeffs.items())

    def is_structurally_zero(self):
        return not self.coeffs

    def scalar_value(self):
        if self.degree != 0:
            raise ValueError("not a degree-0 form")
        return self.coeffs.get(0, Rat(0))

    def __add__(self, other):
        _require_same_chart(self, other)
        if self.degree != other.degree:
            if self.is_structurally_zero():
                return other
            if other.is_structurally_zero():
                return self
            raise ValueError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for mask, c in other.coeffs.items():
            out[mask] = Sum(out[mask], c) if mask in out else c
        return KForm(self.chart, self.degree, out)

    def __sub__(self, other):
        return self + other.scale(Rat(-1))

    def __neg__(self):
        return self.scale(Rat(-1))

    def scale(self, factor):
        factor = as_expr(factor)
        return KForm(self.chart, self.degree,
                     {m: Prod(factor, c) for m, c in self.coeffs.items()})

    def simplified(self):
        out = {}
        for mask, c in self.coeffs.items():
            s = simplify(c)
            if not (s.kind == "rat" and s.value == 0):
                out[mask] = s
        return KForm(self.chart, self.degree, out)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for mask, c in self.terms():
            basis = "^".join(f"d{self.chart.coords[i]}"
                             for i in _mask_indices(mask))
            cs = simplify(c)
            if self.degree == 0:
                parts.append(str(cs))
            elif cs.kind == "rat" and cs.value == 1:
                parts.append(basis)
            elif cs.kind == "rat" and cs.value == -1:
                parts.append(f"-{basis}")
            else:
                s = str(cs)
                if cs.kind == "sum":
                    s = f"({s})"
                parts.append(f"{s}*{basis}")
        joined = parts[0]
        for p in parts[1:]:
            joined += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return joined

    def __repr__(self):
        return f"<KForm deg={self.degree} {self}>"


def _mask_indices(mask):
    out = []
    while mask:
        i = (mask & -mask).bit_length() - 1
        out.append(i)
        mask &= mask - 1
    return out


def _permutation_sign(indices):
    sign = 1
    for i in range(len(indices)):
        for j in range(i + 1, len(indices)):
            if indices[i] > indices[j]:
                sign = -sign
    return sign


def wedge(a, b):
    """Exterior product; associative, graded-commutative."""
    _require_same_chart(a, b)
    degree = a.degree + b.degree
    if degree > a.chart.dim:
        return KForm.zero(a.chart, degree)
    acc = {}
    for m1, c1 in a.coeffs.items():
        for m2, c2 in b.coeffs.items():
            if m1 & m2:
                continue
            sign = _merge_sign(m1, m2)
            term = Prod(Rat(sign), c1, c2)
            mask = m1 | m2
            acc.setdefault(mask, []).append(term)
    return KForm(a.chart, degree,
                 {m: Sum(*parts) for m, parts in acc.items()})


def ext_d(a):
    """De Rham differential: linear, graded Leibniz, squares to zero."""
    chart = a.chart
    degree = a.degree + 1
    if degree > chart.dim:
        return KForm.zero(chart, degree)
    acc = {}
    xs = chart.vars()
    for mask, c in a.coeffs.items():
        for i in range(chart.dim):
            bit = 1 << i
            if mask & bit:
                continue
            dc = diff(c, xs[i])
            if dc.kind == "rat" and dc.value == 0:
                continue
            sign = -1 if (mask & (bit - 1)).bit_count() & 1 else 1
            acc.setdefault(mask | bit, []).append(
                Prod(Rat(sign), dc) if sign < 0 else dc)
    return KForm(chart, degree, {m: Sum(*p) for m, p in acc.items()})


def interior(X, a):
    """Contraction of X into the first slot of a."""
    if not isinstance(X, VectorField):
        raise TypeError("first argument must be a VectorField")
    _require_same_chart(X, a)
    if a.degree == 0:
        return KForm.zero(a.chart, 0)
    acc = {}
    for mask, c in a.coeffs.items():
        for pos, i in enumerate(_mask_indices(mask)):
            comp = X.comps[i]
            if comp.kind == "rat" and comp.value == 0:
                continue
            sign = -1 if pos & 1 else 1
            term = Prod(Rat(sign), comp, c)
            acc.setdefault(mask & ~(1 << i), []).append(term)
    return KForm(a.chart, a.degree - 1, {m: Sum(*p) for m, p in acc.items()})


def lie_derivative(X, a):
    """Lie derivative along X via the homotopy formula
    L_X = interior(X, .) o d + d o interior(X, .)."""
    return interior(X, ext_d(a)) + ext_d(interior(X, a))


def vf_apply(X, f):
    """Directional derivative X(f)."""
    f = as_expr(f)
    if f.chart is not None and f.chart != X.chart:
        raise ChartMismatchError("function lives on a different chart")
    terms = []
    for comp, v in zip(X.comps, X.chart.vars()):
        if comp.kind == "rat" and comp.value == 0:
            continue
        df = diff(f, v)
        if df.kind == "rat" and df.value == 0:
            continue
        terms.append(Prod(comp, df))
    return Sum(*terms) if terms else Rat(0)


def vf_bracket(X, Y):
    """Lie bracket of vector fields: [X, Y]_i = X(Y_i) - Y(X_i)."""
    _require_same_chart(X, Y)
    comps = tuple(Sum(vf_apply(X, yc), Prod(Rat(-1), vf_apply(Y, xc)))
                  for xc, yc in zip(X.comps, Y.comps))
    return VectorField(X.chart, comps)


class FormVerdict:
    """Per-coefficient zero verdict for a form (or a vector field)."""

    def __init__(self, zero, exact, failures):
        self.zero = zero
        self.exact = exact
        self.failures = failures  # list of (label, ZeroVerdict)

    @property
    def witness(self):
        return self.failures[0][1].witness_point if self.failures else None

    @property
    def magnitude(self):
        return max((v.magnitude for _, v in self.failures), default=None)

    def __str__(self):
        if self.zero:
            return "Zero(exact)" if self.exact else "Zero(sampled)"
        label, v = self.failures[0]
        return f"NonZero at {label}: {v}"


def form_is_zero(a, cfg=OracleConfig()):
    """Zero-test every stored coefficient of a form."""
    exact = True
    failures = []
    for mask, c in a.terms():
        verdict = is_zero(c, cfg)
        exact = exact and verdict.exact
        if not verdict.zero:
            basis = "^".join(f"d{a.chart.coords[i]}"
                             for i in _mask_indices(mask)) or "1"
            failures.append((basis, verdict))
    return FormVerdict(not failures, exact, failures)


def vf_is_zero(X, cfg=OracleConfig()):
    exact = True
    failures = []
    for name, c in zip(X.chart.coords, X.comps):
        verdict = is_zero(c, cfg)
        exact = exact and verdict.exact
        if not verdict.zero:
            failures.append((f"d/d{name}", verdict))
    return FormVerdict(not failures, exact, failures)


# ---------------------------------------------------------------------------
# form literals


class FormSyntaxError(SymExprError):
    pass


def _covector_token(chart, name):
    if len(name) > 1 and name.startswith("d") and name[1:] in chart.coords:
        return name[1:]
    return None


def parse_form(text, chart, degree=None, names=None, form_names=None):
    """Parse a form literal: sums of ``coeff * dx ^ dy ^ ...`` terms.

    Scalar factors use the expression grammar; ``d<coord>`` factors are
    basis covectors joined by ``^``; idents in ``form_names`` stand for
    previously defined forms.  A literal that is purely scalar is a
    degree-0 form; ``degree`` disambiguates the all-zero literal.
    """
    ts = TokenStream(tokenize(text))
    expr_parser = ExprParser(ts, chart, names)
    form_names = form_names or {}
    result = None
    sign = 1
    kind, value, _, _ = ts.peek()
    if kind == "OP" and value == "-":
        ts.next()
        sign = -1
    while True:
        term = _parse_form_term(ts, expr_parser, chart, form_names)
        if sign < 0:
            term = term.scale(Rat(-1))
        if result is None:
            result = term
        else:
            result = _add_mixed(result, term)
        kind, value, line, col = ts.peek()
        if kind == "END":
            break
        if kind == "OP" and value in "+-":
            ts.next()
            sign = 1 if value == "+" else -1
            continue
        raise ParseError("expected '+', '-' or end of form", line, col)
    if result.is_structurally_zero() and degree is not None:
        return KForm.zero(chart, degree)
    if degree is not None and result.degree != degree \
            and not result.is_structurally_zero():
        raise FormSyntaxError(
            f"form literal has degree {result.degree}, expected {degree}")
    return result


def _add_mixed(a, b):
    if a.is_structurally_zero() and a.degree != b.degree:
        return b
    if b.is_structurally_zero() and a.degree != b.degree:
        return a
    if a.degree != b.degree:
        raise FormSyntaxError(
            f"cannot mix degrees {a.degree} and {b.degree} in one literal")
    return a + b


def _parse_form_term(ts, expr_parser, chart, form_names):
    value = None  # (kind, payload): ("scalar", Expr) or ("form", KForm)
    op = "*"
    while True:
        atom = _parse_form_atom(ts, expr_parser, chart, form_names)
        if value is None:
            value = atom
        else:
            value = _combine(value, op, atom, ts)
        kind, v, _, _ = ts.peek()
        if kind == "OP" and v in "*/^":
            ts.next()
            op = v
            continue
        break
    if value[0] == "scalar":
        return KForm.scalar(chart, value[1])
    return value[1]


def _parse_form_atom(ts, expr_parser, chart, form_names):
    kind, value, _, _ = ts.peek()
    if kind == "IDENT" and value[1] == 0:
        nxt = ts.tokens[ts.pos + 1]
        applied = nxt[0] == "OP" and nxt[1] == "("
        coord = _covector_token(chart, value[0])
        if coord is not None and not applied:
            ts.next()
            return ("form", KForm.covector(chart, coord))
        if value[0] in form_names and not applied:
            ts.next()
            return ("form", form_names[value[0]])
    return ("scalar", expr_parser.parse_factor())


def _combine(left, op, right, ts):
    lk, lv = left
    rk, rv = right
    if op == "*":
        if lk == "scalar" and rk == "scalar":
            return ("scalar", Prod(lv, rv))
        if lk == "scalar":
            return ("form", rv.scale(lv))
        if rk == "scalar":
            return ("form", lv.scale(rv))
        ts.error("use '^' to wedge basis covectors")
    if op == "/":
        if rk != "scalar":
            ts.error("cannot divide by a form")
        inverse = Pow(rv, Fraction(-1))
        if lk == "scalar":
            return ("scalar", Prod(lv, inverse))
        return ("form", lv.scale(inverse))
    if lk == "form" and rk == "form":
        return ("form", wedge(lv, rv))
    ts.error("'^' in a form literal must join basis covectors")


def parse_vector_field(components, chart, names=None):
    """Vector field from a mapping coordinate name -> expression text."""
    from .symexpr import parse_expr
    comps = [Rat(0)] * chart.dim
    for coord, text in components.items():
        i = chart.index(coord)
        comps[i] = text if isinstance(text, Expr) else \
            parse_expr(text, chart, names)
    return VectorField(chart, comps)
