"""Twisted symplectic-graph Dirac structures.

A TwistedGraph couples a 2-form h with a closed twisting 3-form H.  Sections
of the structure are the pairs (X, sign * i_X h); a function f is admissible
when df = sign * i_{X_f} h is solvable for a vector field X_f, and
H-admissible when additionally i_{X_f} H vanishes identically.  Hamiltonian
fields are obtained by exact Gaussian elimination over the expression field,
so every solve is verified by a residual zero-test.

The sign convention flag defaults to +1 (df = i_{X_f} h), which reproduces
the angular-momentum bracket table verbatim; -1 gives df = -i_{X_f} h.
Flipping the flag negates Poisson brackets and Hamiltonian fields but
preserves admissibility verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .symexpr import (OracleConfig, Pow, Prod, Rat, Sum, SymExprError,
                      as_expr, diff, is_zero, simplify)
from .exterior import (FormVerdict, KForm, VectorField, ext_d, form_is_zero,
                       interior, lie_derivative, vf_apply, vf_bracket,
                       vf_is_zero, _require_same_chart)
from .courant import (GenSection, derived_bracket, pairing,
                      twisted_courant_bracket)

__all__ = [
    "TwistedGraph", "AdmissibilityReport", "ResidualCheck", "CheckReport",
    "SymplGraphReport", "NondegeneracyError", "SolveError",
    "TwistNotClosedError", "graph_section", "hamiltonian_vf",
    "poisson_bracket", "is_courant_admissible", "is_H_admissible",
    "is_admissible_pair", "jacobi_defect", "check_theorem",
    "check_symplgraph", "check_image_under_d", "check_poiss_brak_adm",
]


class NondegeneracyError(SymExprError):
    pass


class SolveError(SymExprError):
    pass


class TwistNotClosedError(SymExprError):
    pass


@dataclass
class ResidualCheck:
    """One named residual with its zero verdict."""

    label: str
    verdict: object  # ZeroVerdict or FormVerdict

    @property
    def zero(self):
        return self.verdict.zero

    @property
    def witness(self):
        w = getattr(self.verdict, "witness", None)
        if w is not None and not isinstance(w, dict):
            w = dict(w)
        return w

    def __str__(self):
        return f"{self.label}: {self.verdict}"


@dataclass
class CheckReport:
    """Bundle of residual checks; passes when every residual is zero."""

    name: str
    checks: list = field(default_factory=list)

    def add(self, label, verdict):
        self.checks.append(ResidualCheck(label, verdict))

    @property
    def passed(self):
        return all(c.zero for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.zero]

    def __str__(self):
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  {c}" for c in self.checks]
        return "\n".join(lines)


@dataclass
class AdmissibilityReport:
    """Admissibility of a named function on a twisted graph.

    h_admissible is None when the structure is degenerate and the
    Hamiltonian field is not unique (the verdict is not determined).
    """

    name: str
    courant_admissible: bool
    hamiltonian_field: VectorField = None
    h_admissible: bool = None
    witness: dict = None
    magnitude: float = None
    detail: str = ""

    def __str__(self):
        lines = [f"function {self.name}:"]
        lines.append(f"  admissible (Courant): {self.courant_admissible}")
        if self.hamiltonian_field is not None:
            lines.append(f"  hamiltonian field: {self.hamiltonian_field}")
        if self.h_admissible is None:
            lines.append(f"  H-admissible: not determined ({self.detail})")
        else:
            lines.append(f"  H-admissible: {self.h_admissible}")
            if self.witness:
                pt = ", ".join(f"{k}={v}" for k, v in
                               sorted(self.witness.items()))
                lines.append(f"  witness: {pt} "
                             f"(|residual| = {self.magnitude:.3g})")
        return "\n".join(lines)


class TwistedGraph:
    """Graph-type Dirac structure of a 2-form h twisted by a closed 3-form.

    The twist may be given as a 3-form, as the string "dh" (use the exterior
    derivative of h), or omitted (zero twist).  Construction verifies that
    the twist is closed, samples the determinant of the coefficient matrix
    of h for nondegeneracy, and records the integrability verdict
    (dh - H = 0).
    """

    def __init__(self, chart, h, twist=None, sign=1, cfg=OracleConfig()):
        if h.degree != 2:
            raise ValueError("h must be a 2-form")
        if sign not in (1, -1):
            raise ValueError("sign convention must be +1 or -1")
        self.chart = chart
        self.cfg = cfg
        self.sign = sign
        self.h = h.simplified()
        if twist is None:
            twist = KForm.zero(chart, 3)
        elif twist == "dh":
            twist = ext_d(self.h)
        if twist.degree != 3:
            raise ValueError("the twisting form must be a 3-form")
        _require_same_chart(h, twist)
        self.H = twist.simplified()
        closed = form_is_zero(ext_d(self.H), cfg)
        if not closed.zero:
            raise TwistNotClosedError(
                f"the twisting 3-form is not closed: {closed}")
        self._matrix = self._coefficient_matrix()
        self._inverse = None
        self.det = simplify(_determinant(self._matrix))
        self.nondegenerate = self._det_nonvanishing()
        self.integrable = form_is_zero(ext_d(self.h) - self.H, cfg).zero

    def _coefficient_matrix(self):
        """M[i][j] = h(d/dx_i, d/dx_j)."""
        dim = self.chart.dim
        M = [[Rat(0)] * dim for _ in range(dim)]
        for mask, c in self.h.coeffs.items():
            lo = (mask & -mask).bit_length() - 1
            hi = mask.bit_length() - 1
            M[lo][hi] = c
            M[hi][lo] = Prod(Rat(-1), c)
        return M

    def _det_nonvanishing(self):
        """True when |det| clears the tolerance at every sample point."""
        from .symexpr import (sample_point, eval_expr, oracle_function_env,
                              function_symbols, EvaluationSingularityError)
        cfg = self.cfg
        env = oracle_function_env(cfg, function_symbols(self.det))
        terms = self.det.args if self.det.kind == "sum" else (self.det,)
        for i in range(cfg.samples):
            vals = None
            for attempt in range(cfg.max_resample):
                point = sample_point(cfg, self.chart.coords, i, attempt)
                try:
                    vals = [float(eval_expr(t, point, env)) for t in terms]
                except EvaluationSingularityError:
                    continue
                break
            if vals is None:
                return False
            scale = max((abs(v) for v in vals), default=0.0)
            if abs(sum(vals)) <= cfg.abs_tol + cfg.rel_tol * scale:
                return False
        return True

    def inverse_matrix(self):
        """Exact inverse of the coefficient matrix (adjugate over det)."""
        if self._inverse is None:
            if not self.nondegenerate:
                raise NondegeneracyError(
                    "h is degenerate on the sampling box")
            dim = self.chart.dim
            inv_det = Pow(self.det, Fraction(-1))
            inv = []
            for i in range(dim):
                row = []
                for j in range(dim):
                    minor = _minor(self._matrix, j, i)
                    sign = Rat(-1 if (i + j) & 1 else 1)
                    row.append(simplify(Prod(sign, minor, inv_det)))
                inv.append(row)
            self._inverse = inv
        return self._inverse


def _determinant(M, _memo=None, rows=None, cols=None):
    """Exact determinant by memoized expansion along the first row."""
    dim = len(M)
    if rows is None:
        rows = tuple(range(dim))
        cols = tuple(range(dim))
        _memo = {}
    key = (rows, cols)
    if key in _memo:
        return _memo[key]
    if not rows:
        out = Rat(1)
    else:
        r = rows[0]
        terms = []
        for pos, c in enumerate(cols):
            entry = M[r][c]
            if entry.kind == "rat" and entry.value == 0:
                continue
            sub = _determinant(M, _memo, rows[1:],
                               cols[:pos] + cols[pos + 1:])
            sign = Rat(-1 if pos & 1 else 1)
            terms.append(Prod(sign, entry, sub))
        out = simplify(Sum(*terms)) if terms else Rat(0)
    _memo[key] = out
    return out


def _minor(M, i, j):
    dim = len(M)
    rows = tuple(r for r in range(dim) if r != i)
    cols = tuple(c for c in range(dim) if c != j)
    return _determinant(M, {}, rows, cols)


def graph_section(D, X):
    """The section (X, sign * i_X h) of the graph."""
    _require_same_chart(X, D.h)
    alpha = interior(X, D.h)
    if D.sign < 0:
        alpha = alpha.scale(Rat(-1))
    return GenSection(X, alpha.simplified())


def _gradient(D, f):
    f = as_expr(f)
    if f.chart is not None and f.chart != D.chart:
        raise SymExprError("function lives on a different chart")
    return [simplify(diff(f, v)) for v in D.chart.vars()]


def hamiltonian_vf(D, f):
    """Solve df = sign * i_{X_f} h for X_f and verify the residual.

    Nondegenerate structures use the cached exact inverse; degenerate ones
    fall back to elimination and raise when the system is inconsistent.
    """
    f = as_expr(f)
    X = _try_hamiltonian_vf(D, f)
    if X is None:
        raise NondegeneracyError(
            "no Hamiltonian field: the linear system for f is inconsistent")
    residual = ext_d(KForm.scalar(D.chart, f)) - \
        graph_section(D, X).alpha
    verdict = form_is_zero(residual, D.cfg)
    if not verdict.zero:
        raise SolveError(f"solver residual is nonzero: {verdict}")
    return X


def _try_hamiltonian_vf(D, f):
    grad = _gradient(D, f)
    sgn = Rat(D.sign)
    if D.nondegenerate:
        inv = D.inverse_matrix()
        comps = []
        for i in range(D.chart.dim):
            terms = [Prod(sgn, inv[j][i], grad[j])
                     for j in range(D.chart.dim)
                     if not (grad[j].kind == "rat" and grad[j].value == 0)]
            comps.append(simplify(Sum(*terms)) if terms else Rat(0))
        return VectorField(D.chart, comps)
    # degenerate: eliminate on the augmented system (M^T | sign * grad)
    dim = D.chart.dim
    rows = [[D._matrix[j][i] for j in range(dim)] + [Prod(sgn, grad[i])]
            for i in range(dim)]
    rows = [[simplify(e) for e in row] for row in rows]
    solution = _solve_rows(rows, dim, D.cfg)
    if solution is None:
        return None
    return VectorField(D.chart, solution)


def _pivot_quality(e):
    return 0 if e.kind == "rat" else 1


def _solve_rows(rows, dim, cfg):
    """Gaussian elimination over the expression field with oracle-guided
    pivoting.  Returns component list (free variables zero) or None when
    inconsistent."""
    pivots = {}
    used_rows = set()
    for col in range(dim):
        candidates = []
        for r in range(len(rows)):
            if r in used_rows:
                continue
            entry = rows[r][col]
            if entry.kind == "rat" and entry.value == 0:
                continue
            candidates.append((_pivot_quality(entry), r, entry))
        candidates.sort(key=lambda t: t[:2])
        chosen = None
        for _, r, entry in candidates:
            if entry.kind == "rat" or not is_zero(entry, cfg).zero:
                chosen = r
                break
        if chosen is None:
            continue
        used_rows.add(chosen)
        pivots[col] = chosen
        pivot = rows[chosen][col]
        inv_p = Pow(pivot, Fraction(-1))
        rows[chosen] = [simplify(Prod(e, inv_p)) for e in rows[chosen]]
        for r in range(len(rows)):
            if r == chosen:
                continue
            factor = rows[r][col]
            if factor.kind == "rat" and factor.value == 0:
                continue
            rows[r] = [simplify(Sum(a, Prod(Rat(-1), factor, b)))
                       for a, b in zip(rows[r], rows[chosen])]
    for r in range(len(rows)):
        if r in used_rows:
            continue
        if not is_zero(rows[r][dim], cfg).zero:
            return None
    comps = [Rat(0)] * dim
    for col, r in pivots.items():
        comps[col] = rows[r][dim]
    return comps


def poisson_bracket(D, f, g):
    """{f, g} = X_f(g)."""
    return simplify(vf_apply(hamiltonian_vf(D, f), as_expr(g)))


def is_courant_admissible(D, f):
    """Whether some vector field X_f solves df = sign * i_{X_f} h.

    Returns (flag, X_f or None).
    """
    try:
        X = _try_hamiltonian_vf(D, f)
    except (NondegeneracyError, SolveError):
        return False, None
    if X is None:
        return False, None
    residual = ext_d(KForm.scalar(D.chart, as_expr(f))) - \
        graph_section(D, X).alpha
    if not form_is_zero(residual, D.cfg).zero:
        return False, None
    return True, X


def is_H_admissible(D, f, name="f"):
    """Full admissibility report: Courant admissibility, the solved
    Hamiltonian field, and the verdict on i_{X_f} H = 0."""
    ok, X = is_courant_admissible(D, f)
    if not ok:
        return AdmissibilityReport(name, False,
                                   detail="not admissible (Courant)")
    if not D.nondegenerate:
        return AdmissibilityReport(
            name, True, hamiltonian_field=X,
            detail="degenerate structure: Hamiltonian field not unique")
    verdict = form_is_zero(interior(X, D.H), D.cfg)
    return AdmissibilityReport(
        name, True, hamiltonian_field=X, h_admissible=verdict.zero,
        witness=verdict.witness, magnitude=verdict.magnitude)


def is_admissible_pair(X, alpha, H, cfg=OracleConfig()):
    """Zero-verdict of d alpha + i_X H for a pair at any level."""
    if H.degree != alpha.degree + 2:
        raise ValueError(
            f"twist degree {H.degree} does not match pair level "
            f"{alpha.degree + 1}")
    residual = ext_d(alpha) + interior(X, H)
    return form_is_zero(residual, cfg)


def _normalized_fields(D, fs):
    """Hamiltonian fields in the (X, +i_X h) normalization, regardless of
    the structure's sign flag; contraction identities for the twisting form
    are pinned to this normalization."""
    out = []
    for f in fs:
        X = hamiltonian_vf(D, f)
        out.append(X if D.sign > 0 else X.scale(Rat(-1)).simplified())
    return out


def jacobi_defect(D, f, g, k):
    """Cyclic bracket sum and the matching contraction of the twist.

    Returns ({f,{g,k}} + {g,{k,f}} + {k,{f,g}},  H(X_f, X_g, X_k)); the two
    are identical on integrable twisted graphs.
    """
    Xf = hamiltonian_vf(D, f)
    Xg = hamiltonian_vf(D, g)
    Xk = hamiltonian_vf(D, k)
    gk = simplify(vf_apply(Xg, k))
    kf = simplify(vf_apply(Xk, f))
    fg = simplify(vf_apply(Xf, g))
    cyclic = simplify(Sum(vf_apply(Xf, gk), vf_apply(Xg, kf),
                          vf_apply(Xk, fg)))
    Nf, Ng, Nk = _normalized_fields(D, (f, g, k))
    contraction = simplify(
        interior(Nk, interior(Ng, interior(Nf, D.H))).scalar_value())
    return cyclic, contraction


def check_theorem(D, f, g, k=None):
    """Closure of the H-admissible algebra: products and brackets stay
    H-admissible with the expected Hamiltonian fields, plus antisymmetry
    and the Leibniz rule against a third function k (f*g when omitted)."""
    if k is None:
        k = Prod(as_expr(f), as_expr(g))
    report = CheckReport("poisson_algebra_closure")
    adm_f = is_H_admissible(D, f, "f")
    adm_g = is_H_admissible(D, g, "g")
    report.add("f is H-admissible", _bool_verdict(adm_f))
    report.add("g is H-admissible", _bool_verdict(adm_g))
    if not (adm_f.h_admissible and adm_g.h_admissible):
        return report
    Xf, Xg = adm_f.hamiltonian_field, adm_g.hamiltonian_field
    f, g, k = as_expr(f), as_expr(g), as_expr(k)
    cfg = D.cfg

    X_prod = hamiltonian_vf(D, Prod(f, g))
    expected = (Xf.scale(g) + Xg.scale(f)).simplified()
    report.add("X_{fg} = g*X_f + f*X_g",
               vf_is_zero(X_prod - expected, cfg))
    report.add("fg is H-admissible",
               form_is_zero(interior(X_prod, D.H), cfg))

    fg_bracket = simplify(vf_apply(Xf, g))
    X_bracket = hamiltonian_vf(D, fg_bracket)
    commutator = vf_bracket(Xf, Xg)
    report.add("X_{{f,g}} = [X_f, X_g]",
               vf_is_zero(X_bracket - commutator, cfg))
    report.add("{f,g} is H-admissible",
               form_is_zero(interior(commutator, D.H), cfg))

    gf_bracket = simplify(vf_apply(Xg, f))
    report.add("antisymmetry {f,g} + {g,f} = 0",
               is_zero(Sum(fg_bracket, gf_bracket), cfg))

    lhs = poisson_bracket(D, Prod(f, g), k)
    rhs = Sum(Prod(g, poisson_bracket(D, f, k)),
              Prod(f, poisson_bracket(D, g, k)))
    report.add("Leibniz {fg,k} = g{f,k} + f{g,k}",
               is_zero(Sum(lhs, Prod(Rat(-1), rhs)), cfg))
    return report


@dataclass(frozen=True)
class _BoolVerdict:
    zero: bool
    exact: bool = True
    witness: dict = None
    magnitude: float = None

    def __str__(self):
        return "holds" if self.zero else "fails"


def _bool_verdict(adm_report):
    return _BoolVerdict(bool(adm_report.h_admissible),
                        witness=adm_report.witness,
                        magnitude=adm_report.magnitude)


@dataclass
class SymplGraphReport:
    """Identity residual plus the Lie-derivative admissibility verdict."""

    identity: ResidualCheck
    h_admissible: bool
    lie_verdict: FormVerdict

    @property
    def passed(self):
        return self.identity.zero

    def __str__(self):
        return (f"{self.identity}\n"
                f"  H-admissible (L_X h = 0): {self.h_admissible}")


def check_symplgraph(D, f, name="f"):
    """The graph characterization: L_{X_f} h - i_{X_f} H vanishes on
    integrable structures, and H-admissibility of f is equivalent to
    L_{X_f} h = 0."""
    X = hamiltonian_vf(D, f)
    lxh = lie_derivative(X, D.h)
    identity = ResidualCheck(
        f"L_X h - i_X H = 0 for {name}",
        form_is_zero(lxh - interior(X, D.H), D.cfg))
    lx_verdict = form_is_zero(lxh, D.cfg)
    return SymplGraphReport(identity, lx_verdict.zero, lx_verdict)


def check_image_under_d(pairs, H, cfg=OracleConfig()):
    """Push admissible pairs through the de Rham differential and verify
    the image is isotropic with the expected untwisted brackets
    ([X, Y], -i_{[X,Y]} H)."""
    report = CheckReport("image_under_d")
    for idx, sec in enumerate(pairs):
        verdict = is_admissible_pair(sec.X, sec.alpha, H, cfg)
        report.add(f"pair {idx} admissible", verdict)
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            A, B = pairs[i], pairs[j]
            p = pairing(A, B)
            v = form_is_zero(p, cfg) if isinstance(p, KForm) \
                else is_zero(p, cfg)
            report.add(f"pairing({i},{j}) = 0", v)
    if not report.passed:
        return report
    chart = pairs[0].chart
    images = [GenSection(s.X, ext_d(s.alpha).simplified()) for s in pairs]
    zero_twist = KForm.zero(chart, images[0].level + 1)
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            A, B = images[i], images[j]
            p = pairing(A, B)
            v = is_zero(p, cfg) if not isinstance(p, KForm) \
                else form_is_zero(p, cfg)
            report.add(f"image pairing({i},{j}) = 0", v)
            br = derived_bracket(A, B, zero_twist)
            expected_vf = vf_bracket(A.X, B.X)
            expected_form = interior(expected_vf, H).scale(Rat(-1))
            report.add(f"image bracket({i},{j}) vector part",
                       vf_is_zero(br.X - expected_vf, cfg))
            report.add(f"image bracket({i},{j}) form part",
                       form_is_zero(br.alpha - expected_form, cfg))
    return report


def check_poiss_brak_adm(D, f, g):
    """Twisted bracket of the graph sections of two H-admissible functions
    against ([X_f, X_g], d{f,g})."""
    Xf = hamiltonian_vf(D, f)
    Xg = hamiltonian_vf(D, g)
    chart = D.chart
    A = GenSection(Xf, ext_d(KForm.scalar(chart, f)))
    B = GenSection(Xg, ext_d(KForm.scalar(chart, g)))
    lhs = twisted_courant_bracket(A, B, D.H)
    fg = simplify(vf_apply(Xf, g))
    expected_vf = vf_bracket(Xf, Xg)
    expected_form = ext_d(KForm.scalar(chart, fg))
    report = CheckReport("bracket_of_admissible_pairs")
    report.add("vector part", vf_is_zero(lhs.X - expected_vf, D.cfg))
    report.add("form part", form_is_zero(lhs.alpha - expected_form, D.cfg))
    return report
