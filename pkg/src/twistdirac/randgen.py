"""Seeded random generators for property tests.

All generators take an explicit random.Random so callers control
determinism; typical use is ``rng_for(seed, "some-label")``.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .symexpr import Func, Pow, Prod, Rat, Sum
from .exterior import KForm, VectorField
from .courant import GenSection

__all__ = [
    "rng_for", "rand_fraction", "rand_poly", "rand_expr",
    "rand_vector_field", "rand_kform", "rand_section",
]


def rng_for(seed, label):
    return random.Random(f"{seed}:{label}")


def rand_fraction(rng, scale=3, den=2):
    num = rng.randint(-scale * den, scale * den)
    return Fraction(num, den)


def rand_monomial(rng, chart, max_degree, coords=None):
    xs = [chart.var(c) for c in coords] if coords else list(chart.vars())
    factors = [Rat(rand_fraction(rng))]
    for _ in range(rng.randint(0, max_degree)):
        factors.append(xs[rng.randrange(len(xs))])
    return Prod(*factors)


def rand_poly(rng, chart, max_degree=2, terms=2, coords=None):
    """Random sparse polynomial, possibly constant or zero."""
    parts = [rand_monomial(rng, chart, max_degree, coords)
             for _ in range(max(terms, 1))]
    return Sum(*parts)


def rand_expr(rng, chart, depth=3):
    """Random expression tree mixing sums, products, integer, inverse and
    half powers, and a unary function symbol; inverse and radical bases are
    offset positive so the tree stays regular on the default box."""
    if depth <= 0:
        choice = rng.randrange(3)
        if choice == 0:
            return Rat(rand_fraction(rng))
        return chart.vars()[rng.randrange(chart.dim)]
    choice = rng.randrange(7)
    if choice in (0, 1):
        return Sum(rand_expr(rng, chart, depth - 1),
                   rand_expr(rng, chart, depth - 1))
    if choice in (2, 3):
        return Prod(rand_expr(rng, chart, depth - 1),
                    rand_expr(rng, chart, depth - 1))
    if choice == 4:
        exp = rng.choice([2, 3, Fraction(1, 2)])
        base = rand_expr(rng, chart, depth - 1)
        if exp == Fraction(1, 2):
            # keep radicands positive on the box
            base = Sum(Prod(base, base), Rat(1))
        return Pow(base, Fraction(exp))
    if choice == 5:
        inner = rand_expr(rng, chart, depth - 1)
        positive = Sum(Prod(inner, inner), Rat(1))
        return Pow(positive, Fraction(rng.choice([-1, -2])))
    return Func("F", 0, rand_expr(rng, chart, depth - 1))


def rand_vector_field(rng, chart, max_degree=2, terms=1, coords=None):
    return VectorField(chart, tuple(
        rand_poly(rng, chart, max_degree, terms, coords)
        for _ in range(chart.dim)))


def rand_kform(rng, chart, degree, max_degree=2, terms=1, components=3):
    masks = [m for m in range(1 << chart.dim)
             if m.bit_count() == degree]
    chosen = rng.sample(masks, min(components, len(masks)))
    return KForm(chart, degree,
                 {m: rand_poly(rng, chart, max_degree, terms)
                  for m in chosen})


def rand_section(rng, chart, level=2, max_degree=2):
    return GenSection(
        rand_vector_field(rng, chart, max_degree),
        rand_kform(rng, chart, level - 1, max_degree))
