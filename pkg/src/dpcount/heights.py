"""Heights, canonical representatives and enumeration of projective points."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .numfield import (NumberField, RingElement, canonical_unit, gcd_many,
                       norm_elem)

QQ = NumberField()


@dataclass(frozen=True)
class Representative:
    coords: tuple
    field: NumberField = QQ

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_ints(self) -> tuple:
        if self.field.d != 1:
            raise ValueError("integer view only over Q")
        return tuple(c.a if isinstance(c, RingElement) else c for c in self.coords)


@dataclass(frozen=True)
class Box:
    """Per-coordinate bounds r_i >= 1 at the single infinite place.

    Over an imaginary quadratic field the bound constrains the squared
    modulus, matching the normalized absolute value.
    """
    radii: tuple

    def __post_init__(self):
        if any(Fraction(r) < 1 for r in self.radii):
            raise ValueError("box bounds must be >= 1")

    @property
    def volume_norm(self) -> Fraction:
        out = Fraction(1)
        for r in self.radii:
            out *= Fraction(r)
        return out

    def contains(self, x: Sequence, field: NumberField = QQ) -> bool:
        return all(norm_elem(field.coerce(c)) <= Fraction(r) for c, r in zip(x, self.radii))


def _to_fraction_pair(x, field):
    """Split a field element given as int, Fraction, RingElement or (p, q) pair."""
    if isinstance(x, RingElement):
        return Fraction(x.a), Fraction(x.b)
    if isinstance(x, tuple):
        return Fraction(x[0]), Fraction(x[1])
    return Fraction(x), Fraction(0)


def normalize(coords: Sequence, field: NumberField = QQ) -> Representative:
    """Canonical primitive integral representative of a projective point.

    Coordinates may be ints, Fractions, RingElements, or pairs of rationals
    (a, b) standing for a + b*omega.
    """
    pairs = [_to_fraction_pair(c, field) for c in coords]
    if all(a == 0 and b == 0 for a, b in pairs):
        raise ValueError("zero vector has no projective class")
    den = 1
    for a, b in pairs:
        den = math.lcm(den, a.denominator, b.denominator)
    elems = [field.elem(int(a * den), int(b * den)) for a, b in pairs]
    g = gcd_many(elems, field)
    elems = [e.exact_div(g) for e in elems]
    lead = next(e for e in elems if e)
    u = canonical_unit(lead)
    elems = [e * u for e in elems]
    if field.d == 1:
        return Representative(tuple(e.a for e in elems), field)
    return Representative(tuple(elems), field)


def normalize_ints(coords: Sequence[int]) -> tuple:
    """Fast path over Q: primitive integer vector with positive leading entry."""
    g = 0
    for c in coords:
        g = math.gcd(g, c)
    if g == 0:
        raise ValueError("zero vector has no projective class")
    out = [c // g for c in coords]
    for c in out:
        if c:
            if c < 0:
                out = [-x for x in out]
            break
    return tuple(out)


def sup_norm(p, field: NumberField | None = None):
    """max_i ||x_i||_v at the infinite place (no gcd correction)."""
    if isinstance(p, Representative):
        field, coords = p.field, p.coords
    else:
        coords = p
        field = field or QQ
    return max(norm_elem(field.coerce(c)) for c in coords)


def height(p, field: NumberField | None = None) -> Fraction:
    """H_k of the point, valid for any nonzero integral vector."""
    if isinstance(p, Representative):
        field, coords = p.field, p.coords
    else:
        coords = p
        field = field or QQ
    elems = [field.coerce(c) for c in coords]
    g = gcd_many(elems, field)
    return Fraction(max(norm_elem(e) for e in elems), norm_elem(g))


def count_box(t, B, field: NumberField = QQ) -> int:
    """Number of ring integers u with ||u - t|| < B at the infinite place.

    Over Q, t and B are rationals (floats are converted exactly).  Over an
    imaginary quadratic field, t = (x, y) stands for x + y*sqrt(|d|)*i and B
    bounds the squared modulus.
    """
    B = Fraction(B)
    if B <= 0:
        return 0
    if field.d == 1:
        t = Fraction(t)
        lo, hi = t - B, t + B
        n_min = math.floor(lo) + 1
        n_max = math.ceil(hi) - 1
        return max(0, n_max - n_min + 1)
    if isinstance(t, (int, float, Fraction)):
        t = (t, 0)
    x, y = Fraction(t[0]), Fraction(t[1])
    dd = -field.d
    half = field.half_omega
    # u = a + b*omega has real part a + b/2 (or a) and imaginary coefficient b/2 (or b)
    count = 0
    # |d| (c*b - y)^2 < B with c = 1/2 or 1
    c = Fraction(1, 2) if half else Fraction(1)
    span = _sqrt_upper(B / dd)
    b_lo = math.floor((y - span) / c) - 1
    b_hi = math.ceil((y + span) / c) + 1
    for b in range(b_lo, b_hi + 1):
        rest = B - dd * (c * b - y) ** 2
        if rest <= 0:
            continue
        centre = x - (b * c if half else 0)
        # (a - centre)^2 < rest
        s = _sqrt_upper(rest)
        a_lo = math.floor(centre - s)
        a_hi = math.ceil(centre + s)
        for a in range(a_lo, a_hi + 1):
            if (a - centre) ** 2 < rest:
                count += 1
    return count


def _sqrt_upper(q: Fraction) -> Fraction:
    """A rational upper bound for sqrt(q), q >= 0."""
    n, d = q.numerator, q.denominator
    return Fraction(math.isqrt(n * d) + 1, d)


def enumerate_P1(lo, hi=None, field: NumberField = QQ, closed: bool = False) -> Iterator[Representative]:
    """Canonical points of P^1 with lo <= H < hi, or 1 <= H <= lo when hi is None.

    Points come out in lexicographic order of their integer coordinates.
    """
    if hi is None:
        lo, hi, closed = 1, lo, True
    lo, hi = Fraction(lo), Fraction(hi)

    def ok(h):
        return lo <= h and (h <= hi if closed else h < hi)

    hmax = math.floor(hi)
    if field.d == 1:
        for u, v in _p1_pairs_q(hmax, max(1, math.ceil(lo))):
            if ok(max(abs(u), abs(v))):
                yield Representative((u, v), field)
        return
    elems = sorted(_ring_ball(field, hmax), key=lambda e: (e.a, e.b))
    zero = field.zero
    for x in elems:
        for y in elems:
            if not x and not y:
                continue
            lead = x if x else y
            if canonical_unit(lead) != field.one:
                continue
            if norm_elem(gcd_many([x, y], field)) != 1:
                continue
            h = max(norm_elem(x), norm_elem(y))
            if ok(h):
                yield Representative((x if x else zero, y), field)


def _p1_pairs_q(hmax: int, hmin: int = 1):
    """Canonical coprime (u, v) with hmin <= max(|u|, |v|) <= hmax, lexicographic."""
    if hmax < max(hmin, 1):
        return
    if hmin <= 1:
        yield (0, 1)
    for u in range(1, hmax + 1):
        if u >= hmin:
            vs = range(-hmax, hmax + 1)
        else:
            vs = list(range(-hmax, -hmin + 1)) + list(range(hmin, hmax + 1))
        for v in vs:
            if math.gcd(u, v) == 1:
                yield (u, v)


def p1_pairs_in_shell(lo: int, hi: int):
    """Canonical coprime (u, v) over Q with lo <= max(|u|,|v|) <= hi, lex order."""
    yield from _p1_pairs_q(hi, lo)


def _ring_ball(field: NumberField, n: int) -> list:
    """All ring integers with norm <= n."""
    out = []
    dd = -field.d
    bmax = math.isqrt(4 * n // dd + 4) + 2
    for b in range(-bmax, bmax + 1):
        for a in range(-2 * math.isqrt(n) - bmax - 2, 2 * math.isqrt(n) + bmax + 3):
            e = field.elem(a, b)
            if e.norm() <= n:
                out.append(e)
    return out


def ring_ball(field: NumberField, n: int) -> list:
    return sorted(_ring_ball(field, n), key=lambda e: (e.a, e.b))
