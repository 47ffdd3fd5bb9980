"""Internal canonical-form engine for expression trees.

Expressions are normalized to a sparse sum-of-monomials representation over
"atoms": coordinates, function applications, and irreducible power bases
(sums raised to negative or fractional exponents, non-perfect rational
radicals).  The polynomial/Laurent subclass over coordinates gets an exact
canonical form; sum denominators are recombined into a single fraction and
cancelled by exact multivariate division when the division is exact.

A monomial is a tuple of (atom, exponent) pairs sorted by the atom's sort
key, exponents are nonzero Fractions.  A polynomial is a dict mapping
monomials to nonzero Fraction coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

ONE_M = ()

_atom_poly_cache = {}


def p_const(c):
    c = Fraction(c)
    return {ONE_M: c} if c else {}


def p_add_inplace(acc, p, scale=Fraction(1)):
    for m, c in p.items():
        v = acc.get(m, Fraction(0)) + c * scale
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)
    return acc


def _iroot(n, k):
    """Exact integer k-th root of n >= 0, or None."""
    if n in (0, 1):
        return n
    lo, hi = 1, 1 << ((n.bit_length() + k - 1) // k + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** k <= n:
            lo = mid + 1
        else:
            hi = mid
    r = lo - 1
    return r if r ** k == n else None


def rational_pow(c, e):
    """c**e for Fraction c and e.  Returns (value, None) when exact,
    (1, leftover) with leftover = (c', e') to keep as an atom otherwise."""
    c = Fraction(c)
    if e.denominator == 1:
        n = int(e)
        if c == 0:
            if n > 0:
                return Fraction(0), None
            return Fraction(1), (c, e)  # 0**negative: kept, singular at eval
        return c ** n, None
    if c == 0:
        return (Fraction(0), None) if e > 0 else (Fraction(1), (c, e))
    if c < 0:
        return Fraction(1), (c, e)
    if c == 1:
        return Fraction(1), None
    b = e.denominator
    rn = _iroot(c.numerator, b)
    rd = _iroot(c.denominator, b)
    if rn is None or rd is None:
        return Fraction(1), (c, e)
    return Fraction(rn, rd) ** e.numerator, None


def _mono_key(m):
    return tuple((a.sort_key(), e) for a, e in m)


class _NormCtx:
    """Bundles the node constructors so the engine stays import-cycle free.

    symexpr registers its node classes here at import time.
    """

    Rat = None
    Var = None
    Sum = None
    Prod = None
    Pow = None
    Func = None

    @classmethod
    def register(cls, Rat, Var, Sum, Prod, Pow, Func):
        cls.Rat, cls.Var, cls.Sum, cls.Prod, cls.Pow, cls.Func = (
            Rat, Var, Sum, Prod, Pow, Func)


_CACHE_LIMIT = 20000


def _atom_poly(atom):
    """Expansion of an atom as a polynomial (used for sum atoms)."""
    p = _atom_poly_cache.get(atom)
    if p is None:
        if len(_atom_poly_cache) > _CACHE_LIMIT:
            _atom_poly_cache.clear()
        p = to_poly(atom)
        _atom_poly_cache[atom] = p
    return p


_atom_pow_cache = {}


def atom_poly_pow(atom, n):
    """Memoized positive integer power of an atom's expansion."""
    key = (atom, n)
    p = _atom_pow_cache.get(key)
    if p is None:
        if len(_atom_pow_cache) > _CACHE_LIMIT:
            _atom_pow_cache.clear()
        if n % 2 == 0 and n > 2:
            half = atom_poly_pow(atom, n // 2)
            p = p_mul(half, half)
        elif n > 1:
            p = p_mul(atom_poly_pow(atom, n - 1), _atom_poly(atom))
        else:
            p = _atom_poly(atom)
        _atom_pow_cache[key] = p
    return p


def term_mul(m1, c1, m2, c2):
    """Product of two monomial terms as a polynomial.

    Usually a single term; exponent merges that produce a positive integer
    power of a sum atom (or an integer power of a rational atom) are folded
    back into polynomial form.
    """
    coeff = c1 * c2
    if not coeff:
        return {}
    i, j = 0, 0
    merged = []
    folds = []
    k1, k2 = len(m1), len(m2)
    while i < k1 and j < k2:
        a1, e1 = m1[i]
        a2, e2 = m2[j]
        if a1 == a2:
            e = e1 + e2
            if e:
                merged.append((a1, e))
            i += 1
            j += 1
        elif a1.sort_key() <= a2.sort_key():
            merged.append((a1, e1))
            i += 1
        else:
            merged.append((a2, e2))
            j += 1
    merged.extend(m1[i:])
    merged.extend(m2[j:])
    out = []
    for a, e in merged:
        if e.denominator == 1 and (a.kind == "rat"
                                   or (a.kind == "sum" and e > 0)):
            folds.append((a, int(e)))
        else:
            out.append((a, e))
    base = {tuple(out): coeff}
    for a, n in folds:
        if a.kind == "rat":
            v, leftover = rational_pow(a.value, Fraction(n))
            base = {m: c * v for m, c in base.items()}
            if leftover is not None:
                la = _NormCtx.Rat(leftover[0])
                base = p_mul(base, {((la, leftover[1]),): Fraction(1)})
        else:
            base = p_mul(base, atom_poly_pow(a, n))
    return base


def p_mul(a, b):
    if not a or not b:
        return {}
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            p_add_inplace(out, term_mul(m1, c1, m2, c2))
    return out


def p_pow_int(p, n):
    if n == 0:
        return p_const(1)
    if n == 1:
        return dict(p)
    half = p_pow_int(p, n // 2)
    out = p_mul(half, half)
    if n % 2:
        out = p_mul(out, p)
    return out


def _atom_universe(*polys):
    atoms = set()
    for p in polys:
        for m in p:
            for a, _ in m:
                atoms.add(a)
    return sorted(atoms, key=lambda a: a.sort_key())


def _vectorizer(*polys):
    """Graded-lexicographic monomial order over the atoms of the given
    polynomials (a genuine monomial order: total, multiplicative)."""
    universe = _atom_universe(*polys)
    pos = {a: i for i, a in enumerate(universe)}
    zero = (Fraction(0),) * len(universe)

    def vec(m):
        v = list(zero)
        for a, e in m:
            v[pos[a]] = e
        return (sum(v),) + tuple(v)

    return vec


def normalize_sum(p):
    """Split p into (unit, normalized) with p == unit * normalized, where
    normalized has coefficient content 1 and positive leading coefficient."""
    if not p:
        return Fraction(1), p
    vec = _vectorizer(p)
    lead = max(p, key=vec)
    sign = 1 if p[lead] > 0 else -1
    num_gcd = 0
    den_lcm = 1
    for c in p.values():
        num_gcd = gcd(num_gcd, abs(c.numerator))
        den_lcm = den_lcm * c.denominator // gcd(den_lcm, c.denominator)
    unit = Fraction(sign * num_gcd, den_lcm)
    if unit == 1:
        return Fraction(1), p
    return unit, {m: c / unit for m, c in p.items()}


def _poly_pow(p, e):
    """p**e with full expansion for positive integer exponents and atom
    formation otherwise."""
    Rat, Pow = _NormCtx.Rat, _NormCtx.Pow
    if e == 0:
        return p_const(1)
    if e == 1:
        return p
    if not p:
        if e > 0:
            return {}
        # 0**negative kept symbolically; evaluation reports the singularity
        return {((Pow(Rat(0), e), Fraction(1)),): Fraction(1)}
    if len(p) == 1:
        (m, c), = p.items()
        val, leftover = rational_pow(c, e)
        out = p_const(val)
        if leftover is not None:
            out = p_mul(out, {((Rat(leftover[0]), leftover[1]),): Fraction(1)})
        for a, ae in m:
            ne = ae * e
            if not ne:
                continue
            if ne.denominator == 1 and a.kind in ("sum", "rat"):
                if a.kind == "sum" and ne > 0:
                    out = p_mul(out, atom_poly_pow(a, int(ne)))
                else:
                    out = p_mul(out, _poly_pow(_atom_poly(a), ne))
            else:
                out = p_mul(out, {((a, ne),): Fraction(1)})
        return out
    if e.denominator == 1 and e > 0:
        return p_pow_int(p, int(e))
    # negative or fractional power of a sum: clear any internal fractions
    # first so atom bases are always polynomial numerators (keeps repeated
    # normalization confluent), then form the atom
    num, dmap = combined_fraction(p)
    if dmap:
        out = _poly_pow(num, e)
        for a, k in dmap.items():
            out = p_mul(out, _atom_power(a, -Fraction(k) * e))
        return out
    if e.denominator == 1:
        unit, norm = normalize_sum(p)
        atom = from_poly(norm)
        val, leftover = rational_pow(unit, e)
        out = {((atom, e),): val}
        if leftover is not None:
            out = p_mul(out, {((Rat(leftover[0]), leftover[1]),): Fraction(1)})
        return out
    # fractional power: opaque atom, base kept as written
    atom = from_poly(p)
    return {((atom, e),): Fraction(1)}


def _atom_power(a, e):
    if e == 0:
        return p_const(1)
    if e.denominator == 1 and e > 0 and a.kind in ("sum", "rat"):
        if a.kind == "sum":
            return atom_poly_pow(a, int(e))
        return _poly_pow(_atom_poly(a), e)
    return {((a, e),): Fraction(1)}


def to_poly(e):
    kind = e.kind
    if kind == "rat":
        return p_const(e.value)
    if kind == "var":
        return {((e, Fraction(1)),): Fraction(1)}
    if kind == "sum":
        out = {}
        for a in e.args:
            p_add_inplace(out, to_poly(a))
        return out
    if kind == "prod":
        out = p_const(1)
        for a in e.args:
            out = p_mul(out, to_poly(a))
            if not out:
                return out
        return out
    if kind == "pow":
        return _poly_pow(to_poly(e.base), e.exp)
    if kind == "func":
        arg = canon_expr(e.arg)
        atom = _NormCtx.Func(e.name, e.order, arg)
        return {((atom, Fraction(1)),): Fraction(1)}
    raise TypeError(f"unknown node kind {kind!r}")


def mono_div(m, d):
    got = dict(m)
    for a, e in d:
        ne = got[a] - e
        if ne:
            got[a] = ne
        else:
            del got[a]
    return tuple(sorted(got.items(), key=lambda t: t[0].sort_key()))


def _pure_nonneg(p):
    for m in p:
        for _, e in m:
            if e < 0:
                return False
    return True


def try_divide(num, den):
    """Exact multivariate division num/den, or None.

    Both operands must have nonnegative exponents (rational exponents are
    fine: they live on a well-ordered lattice); the monomial order is
    graded lexicographic over atom sort keys.
    """
    if not den:
        return None
    if not num:
        return {}
    if not (_pure_nonneg(num) and _pure_nonneg(den)):
        return None
    raw_vec = _vectorizer(num, den)
    cache = {}

    def vec(m):
        v = cache.get(m)
        if v is None:
            v = raw_vec(m)
            cache[m] = v
        return v

    lead_den = max(den, key=vec)
    c_den = den[lead_den]
    den_tail = {m: c for m, c in den.items() if m != lead_den}
    v_lead = vec(lead_den)[1:]
    work = dict(num)
    quotient = {}
    steps = 0
    # exact quotients in this codebase are small; cap the effort so a
    # non-exact division on large operands fails fast instead of grinding
    step_limit = 4 * (len(num) + len(den)) + 512
    size_limit = 8 * (len(num) + len(den)) + 1024
    while work:
        steps += 1
        if steps > step_limit or len(work) > size_limit:
            return None
        lt = max(work, key=vec)
        v_lt = vec(lt)[1:]
        if any(a < b for a, b in zip(v_lt, v_lead)):
            return None
        qm = mono_div(lt, lead_den)
        qc = work[lt] / c_den
        p_add_inplace(quotient, {qm: qc})
        del work[lt]
        if den_tail:
            p_add_inplace(work, p_mul({qm: qc}, den_tail), Fraction(-1))
    return quotient


def combined_fraction(p):
    """Clear sum-atom denominators: returns (numerator, denominators) with
    denominators a dict {atom: positive int exponent}, after cancelling exact
    divisors."""
    dens = {}
    for m in p:
        for a, e in m:
            if a.kind == "sum" and e < 0 and e.denominator == 1:
                k = -int(e)
                if k > dens.get(a, 0):
                    dens[a] = k
    if not dens:
        return p, {}
    num = {}
    for m, c in p.items():
        term = {ONE_M: c}
        rest = []
        seen = set()
        for a, e in m:
            k = dens.get(a)
            if k is not None and e.denominator == 1:
                seen.add(a)
                ne = e + k
                if ne > 0:
                    term = p_mul(term, atom_poly_pow(a, int(ne)))
                elif ne < 0:
                    rest.append((a, ne))
            else:
                rest.append((a, e))
        for a, k in dens.items():
            if a not in seen:
                term = p_mul(term, atom_poly_pow(a, k))
        if rest:
            term = p_mul(term, {tuple(rest): Fraction(1)})
        p_add_inplace(num, term)
    if not num:
        return {}, {}
    for a in sorted(dens, key=lambda x: x.sort_key()):
        dp = _atom_poly(a)
        while dens[a] > 0:
            q = try_divide(num, dp)
            if q is None:
                break
            num = q
            dens[a] -= 1
        if dens[a] == 0:
            del dens[a]
    if len(dens) == 1:
        # reverse cancellation: num may exactly divide the denominator
        (a, k), = dens.items()
        if k == 1 and len(num) > 1:
            q = try_divide(_atom_poly(a), num)
            if q is not None:
                unit, norm = normalize_sum(q)
                if len(norm) == 1:
                    (m, c), = norm.items()
                    inv = tuple((ia, -ie) for ia, ie in m)
                    return {inv: 1 / (unit * c)}, {}
                atom = from_poly(norm)
                return p_const(1 / unit), {atom: 1}
    return num, dens


def recompose(num, dens):
    if not dens:
        return num
    inv = {ONE_M: Fraction(1)}
    for a, k in dens.items():
        inv = p_mul(inv, {((a, Fraction(-k)),): Fraction(1)})
    return p_mul(num, inv)


def from_poly(p):
    Rat, Prod, Pow, Sum = (_NormCtx.Rat, _NormCtx.Prod, _NormCtx.Pow,
                           _NormCtx.Sum)
    if not p:
        return Rat(0)
    terms = []
    for m, c in sorted(p.items(), key=lambda t: _mono_key(t[0])):
        factors = []
        for a, e in m:
            factors.append(a if e == 1 else Pow(a, e))
        if not factors:
            terms.append(Rat(c))
        elif c == 1:
            terms.append(factors[0] if len(factors) == 1 else Prod(*factors))
        else:
            terms.append(Prod(Rat(c), *factors))
    return terms[0] if len(terms) == 1 else Sum(*terms)


def canon_expr(e):
    """Full normalization: expand/collect, recombine fractions, cancel."""
    num, dens = combined_fraction(to_poly(e))
    return from_poly(recompose(num, dens))
