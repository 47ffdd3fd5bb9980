"""Brackets and pairings on sections of TM + Lambda^(n-1) T*M.

A generalized section pairs a vector field with a form of degree n-1; the
classical generalized tangent bundle is the level n = 2 case.  The twisted
bracket at general level acts on pairs (X, alpha) as
([X, Y], L_X beta - i_Y d alpha - i_Y i_X H) with a twisting (n+1)-form H;
level 2 with H = 0 recovers the Dorfman bracket and its antisymmetrization
recovers the classical skew bracket.
"""

from __future__ import annotations

from fractions import Fraction

from .symexpr import Rat, Sum, simplify
from .exterior import (ext_d, interior, lie_derivative, vf_bracket,
                       _require_same_chart)

__all__ = [
    "GenSection", "pairing", "courant_bracket", "dorfman_bracket",
    "twisted_courant_bracket", "derived_bracket", "derived_bracket_skew",
    "courant_tensor",
]


class GenSection:
    """Pair (X, alpha) with X a vector field and alpha a (level-1)-form."""

    __slots__ = ("X", "alpha")

    def __init__(self, X, alpha):
        _require_same_chart(X, alpha)
        self.X = X
        self.alpha = alpha

    @property
    def chart(self):
        return self.X.chart

    @property
    def level(self):
        return self.alpha.degree + 1

    def simplified(self):
        return GenSection(self.X.simplified(), self.alpha.simplified())

    def __str__(self):
        return f"({self.X}, {self.alpha})"

    def __repr__(self):
        return f"<GenSection level={self.level} {self}>"


def _check_levels(A, B):
    _require_same_chart(A.X, B.X)
    if A.level != B.level:
        raise ValueError(f"section levels differ: {A.level} vs {B.level}")
    return A.level


def _check_twist(A, H, expected_extra=1):
    if H.degree != A.level + expected_extra:
        raise ValueError(
            f"twisting form must have degree {A.level + expected_extra} "
            f"for level-{A.level} sections, got {H.degree}")
    _require_same_chart(A.X, H)


def pairing(A, B):
    """Symmetric pairing (i_X beta + i_Y alpha)/2.

    A degree-(n-2) form in general; a scalar expression at level 2; zero at
    level 1 (contraction of a function vanishes).
    """
    n = _check_levels(A, B)
    if n == 1:
        return Rat(0)
    half = Rat(Fraction(1, 2))
    form = (interior(A.X, B.alpha) + interior(B.X, A.alpha)).scale(half)
    if n == 2:
        return simplify(form.scalar_value())
    return form.simplified()


def courant_bracket(A, B):
    """Skew bracket at level 2:
    ([X, Y], L_X eta - L_Y xi - d(i_X eta - i_Y xi)/2)."""
    n = _check_levels(A, B)
    if n != 2:
        raise ValueError(f"the skew bracket is a level-2 operation, "
                         f"got level {n}")
    X, xi = A.X, A.alpha
    Y, eta = B.X, B.alpha
    half = Rat(Fraction(1, 2))
    exact = ext_d((interior(X, eta) - interior(Y, xi)).scale(half))
    form = lie_derivative(X, eta) - lie_derivative(Y, xi) - exact
    return GenSection(vf_bracket(X, Y), form).simplified()


def dorfman_bracket(A, B):
    """Non-skew bracket at level 2: ([X, Y], L_X eta - i_Y d xi)."""
    n = _check_levels(A, B)
    if n != 2:
        raise ValueError(f"the Dorfman bracket is a level-2 operation, "
                         f"got level {n}")
    form = lie_derivative(A.X, B.alpha) - interior(B.X, ext_d(A.alpha))
    return GenSection(vf_bracket(A.X, B.X), form).simplified()


def twisted_courant_bracket(A, B, H):
    """Level-2 skew bracket with the twist term -i_Y i_X H added to the
    form part; H need not be closed here (structure constructors enforce
    closedness where it matters)."""
    n = _check_levels(A, B)
    if n != 2:
        raise ValueError("the twisted bracket is a level-2 operation")
    _check_twist(A, H)
    plain = courant_bracket(A, B)
    twist = interior(B.X, interior(A.X, H))
    return GenSection(plain.X, (plain.alpha - twist).simplified())


def derived_bracket(A, B, H):
    """Twisted non-skew bracket at any level:
    ([X, Y], L_X beta - i_Y d alpha - i_Y i_X H)."""
    _check_levels(A, B)
    _check_twist(A, H)
    form = (lie_derivative(A.X, B.alpha)
            - interior(B.X, ext_d(A.alpha))
            - interior(B.X, interior(A.X, H)))
    return GenSection(vf_bracket(A.X, B.X), form).simplified()


def derived_bracket_skew(A, B, H):
    """Antisymmetrization of the derived bracket; coincides with the
    twisted skew bracket at level 2."""
    ab = derived_bracket(A, B, H)
    ba = derived_bracket(B, A, H)
    half = Rat(Fraction(1, 2))
    return GenSection(
        (ab.X - ba.X).scale(half),
        (ab.alpha - ba.alpha).scale(half)).simplified()


def courant_tensor(A, B, C, H):
    """T(A, B, C) = i_{X_C}(form part of [A, B]_H) + i_{[X_A, X_B]} alpha_C.

    Uses the unnormalized pairing (twice the symmetric pairing), which is
    the normalization under which the twist defect is exactly
    -i_{X_C} i_{X_B} i_{X_A} H and the cyclic Poisson sums match the
    contraction of the twisting form.
    """
    n = _check_levels(A, C)
    if _check_levels(A, B) != 2 or n != 2:
        raise ValueError("the tensor is a level-2 operation")
    _check_twist(A, H)
    br = twisted_courant_bracket(A, B, H)
    first = interior(C.X, br.alpha).scalar_value()
    second = interior(br.X, C.alpha).scalar_value()
    return simplify(Sum(first, second))
