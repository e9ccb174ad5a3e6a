"""Exact arithmetic in Q and in the class-number-one imaginary quadratic fields.

Elements of the ring of integers are stored as integer pairs (a, b) meaning
a + b*omega, where omega = sqrt(d) or (1 + sqrt(d))/2 when d = 1 mod 4.  The
rational field uses d = 1 and b = 0 throughout.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np
import sympy

SUPPORTED_D = (-1, -2, -3, -7, -11, -19, -43, -67, -163)


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class NumberField:
    """Base field descriptor.  d = 1 encodes Q."""

    d: int = 1

    def __post_init__(self):
        if self.d != 1 and self.d not in SUPPORTED_D:
            raise FieldError(f"unsupported field parameter d={self.d}")

    # structural data -------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.d == 1

    @property
    def degree(self) -> int:
        return 1 if self.d == 1 else 2

    @property
    def s_k(self) -> int:
        return 1

    @property
    def class_number(self) -> int:
        return 1

    @property
    def representative_ideals(self) -> tuple:
        return (self.one,)

    @property
    def half_omega(self) -> bool:
        return self.d != 1 and self.d % 4 == 1

    @property
    def trace_omega(self) -> int:
        return 1 if self.half_omega else 0

    @property
    def norm_omega(self) -> int:
        if self.d == 1:
            return 0
        return (1 - self.d) // 4 if self.half_omega else -self.d

    @property
    def discriminant(self) -> int:
        if self.d == 1:
            return 1
        return self.d if self.half_omega else 4 * self.d

    @property
    def infinite_local_degree(self) -> int:
        return self.degree

    def __str__(self):
        return "Q" if self.d == 1 else f"Q(sqrt({self.d}))"

    @classmethod
    def parse(cls, s: str) -> "NumberField":
        s = s.strip().replace(" ", "")
        if s in ("Q", "QQ"):
            return cls(1)
        if s in ("Q(i)", "Q(sqrt(-1))"):
            return cls(-1)
        m = re.fullmatch(r"Q\(sqrt\((-?\d+)\)\)", s)
        if not m:
            raise FieldError(f"cannot parse field string {s!r}")
        return cls(int(m.group(1)))

    # elements ----------------------------------------------------------
    def elem(self, a: int, b: int = 0) -> "RingElement":
        if self.d == 1 and b:
            raise FieldError("rational field elements have b = 0")
        return RingElement(int(a), int(b), self)

    def coerce(self, x) -> "RingElement":
        if isinstance(x, RingElement):
            if x.field != self:
                raise FieldError("element from a different field")
            return x
        if isinstance(x, (int, np.integer)):
            return RingElement(int(x), 0, self)
        if isinstance(x, tuple) and len(x) == 2:
            return self.elem(*x)
        raise FieldError(f"cannot coerce {x!r}")

    @property
    def zero(self) -> "RingElement":
        return RingElement(0, 0, self)

    @property
    def one(self) -> "RingElement":
        return RingElement(1, 0, self)

    @property
    def omega(self) -> "RingElement":
        return RingElement(0, 1, self)

    @property
    def units(self) -> tuple:
        if self.d == -1:
            gens = [(1, 0), (0, 1), (-1, 0), (0, -1)]
        elif self.d == -3:
            # omega = (1+sqrt(-3))/2 is a primitive 6th root of unity
            gens = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
        else:
            gens = [(1, 0), (-1, 0)]
        return tuple(RingElement(a, b, self) for a, b in gens)

    @property
    def w(self) -> int:
        return len(self.units)

    # places ------------------------------------------------------------
    @property
    def infinite_place(self) -> "Place":
        return Place(self, None, self.degree)

    def split_type(self, p: int) -> str:
        """'split', 'inert' or 'ramified' for the rational prime p."""
        if self.d == 1:
            return "split"
        D = self.discriminant
        if D % p == 0:
            return "ramified"
        if p == 2:
            return "split" if D % 8 == 1 else "inert"
        return "split" if sympy.legendre_symbol(D % p, p) == 1 else "inert"

    def primes_above(self, p: int) -> tuple:
        """Prime elements (canonical) generating the primes over p."""
        if self.d == 1:
            return (self.elem(p),)
        kind = self.split_type(p)
        if kind == "inert":
            return (self.elem(p),)
        r = _root_of_minpoly(self.trace_omega, self.norm_omega, p)
        pi = canonical(gcd(self.elem(p), self.elem(-r, 1)))
        if kind == "ramified":
            return (pi,)
        pi2 = canonical(pi.conj())
        return tuple(sorted((pi, pi2), key=lambda e: (e.a, e.b)))

    def finite_place(self, pi: "RingElement") -> "Place":
        pi = self.coerce(pi)
        n = norm_elem(pi)
        p = int(sympy.factorint(n).popitem()[0]) if n > 1 else 0
        if p == 0:
            raise FieldError("not a prime element")
        if self.d == 1:
            return Place(self, pi, 1)
        return Place(self, pi, 2 if self.split_type(p) != "split" else 1)


def _root_of_minpoly(tr: int, nm: int, p: int) -> int:
    """A root of x^2 - tr*x + nm modulo p (exists for split/ramified p)."""
    if p < 50:
        for x in range(p):
            if (x * x - tr * x + nm) % p == 0:
                return x
        raise FieldError("no root")
    disc = (tr * tr - 4 * nm) % p
    s = 0 if disc == 0 else int(sympy.sqrt_mod(disc, p))
    return (s + tr) * pow(2, -1, p) % p


@dataclass(frozen=True)
class RingElement:
    a: int
    b: int
    field: NumberField

    def _wrap(self, other) -> "RingElement":
        return self.field.coerce(other)

    def __add__(self, other):
        o = self._wrap(other)
        return RingElement(self.a + o.a, self.b + o.b, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._wrap(other)
        return RingElement(self.a - o.a, self.b - o.b, self.field)

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __neg__(self):
        return RingElement(-self.a, -self.b, self.field)

    def __mul__(self, other):
        o = self._wrap(other)
        f = self.field
        bd = self.b * o.b
        return RingElement(
            self.a * o.a - bd * f.norm_omega,
            self.a * o.b + self.b * o.a + bd * f.trace_omega,
            f,
        )

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = self.field.one
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self):
        return bool(self.a or self.b)

    def __repr__(self):
        if self.field.d == 1:
            return str(self.a)
        return f"({self.a}{self.b:+d}w)"

    def conj(self) -> "RingElement":
        return RingElement(self.a + self.b * self.field.trace_omega, -self.b, self.field)

    def norm(self) -> int:
        f = self.field
        if f.d == 1:
            return self.a
        return self.a * self.a + self.a * self.b * f.trace_omega + self.b * self.b * f.norm_omega

    def exact_div(self, other) -> "RingElement | None":
        """self / other when it lies in the ring, else None."""
        o = self._wrap(other)
        if not o:
            raise ZeroDivisionError
        if self.field.d == 1:
            q, r = divmod(self.a, o.a)
            return None if r else RingElement(q, 0, self.field)
        n = o.norm()
        num = self * o.conj()
        if num.a % n or num.b % n:
            return None
        return RingElement(num.a // n, num.b // n, self.field)

    def divides(self, other) -> bool:
        return self._wrap(other).exact_div(self) is not None if self else not self._wrap(other)

    def complex(self) -> complex:
        f = self.field
        if f.d == 1:
            return complex(self.a)
        if f.half_omega:
            return complex(self.a + self.b / 2, self.b * math.sqrt(-f.d) / 2)
        return complex(self.a, self.b * math.sqrt(-f.d))

    def is_unit(self) -> bool:
        return abs(self.norm()) == 1


@dataclass(frozen=True)
class Place:
    field: NumberField
    prime: RingElement | None  # None for the infinite place
    local_degree: int

    @property
    def is_infinite(self) -> bool:
        return self.prime is None


# ---------------------------------------------------------------------------
# norms, valuations, absolute values

def norm_elem(x) -> int:
    if isinstance(x, (int, np.integer)):
        return abs(int(x))
    return abs(x.norm())


def ord_prime(x: RingElement, pi: RingElement) -> int:
    if not x:
        raise ValueError("ord of zero")
    k = 0
    while True:
        q = x.exact_div(pi)
        if q is None:
            return k
        x = q
        k += 1


def abs_value(x, place: Place) -> Fraction:
    """Normalized absolute value ||x||_v = |x|_v^{d_v}."""
    x = place.field.coerce(x)
    if not x:
        return Fraction(0)
    if place.is_infinite:
        return Fraction(norm_elem(x))
    return Fraction(1, norm_elem(place.prime) ** ord_prime(x, place.prime))


def places_of(x) -> list:
    """Infinite place plus finite places where x has nonzero valuation."""
    if isinstance(x, (int, np.integer)):
        x = NumberField().coerce(x)
    f = x.field
    out = [f.infinite_place]
    for p in sorted(factor_integer(norm_elem(x))):
        for pi in f.primes_above(p):
            if ord_prime(x, pi):
                out.append(f.finite_place(pi))
    return out


# ---------------------------------------------------------------------------
# gcd and units

def _gauss_reduce(u, v, qf):
    """Lagrange reduction of a rank-2 integer basis under a positive form."""
    while True:
        if qf(*u) > qf(*v):
            u, v = v, u
        nu = qf(*u)
        # round(B(u,v)/Q(u)) with B the polar form
        buv = qf(u[0] + v[0], u[1] + v[1]) - nu - qf(*v)
        m = _round_div(buv, 2 * nu)
        if m == 0:
            return u, v
        v = (v[0] - m * u[0], v[1] - m * u[1])


def _round_div(a: int, b: int) -> int:
    return (2 * a + b) // (2 * b)


def gcd(a, b, field: NumberField | None = None):
    """Generator of the ideal <a, b>, in canonical unit form."""
    if field is None:
        field = a.field if isinstance(a, RingElement) else (
            b.field if isinstance(b, RingElement) else NumberField())
    a = field.coerce(a)
    b = field.coerce(b)
    if not a and not b:
        raise ValueError("gcd of two zeros")
    if field.d == 1:
        return RingElement(math.gcd(a.a, b.a), 0, field)
    gens = []
    for x in (a, b):
        xw = x * field.omega
        gens += [(x.a, x.b), (xw.a, xw.b)]
    # 2x2 Hermite form of the Z-span: pivot (x, g1) and (g0, 0)
    g0, piv = 0, None
    for r in gens:
        if r[1] == 0:
            g0 = math.gcd(g0, r[0])
        elif piv is None:
            piv = r
        else:
            g, s, t = _xgcd(piv[1], r[1])
            left = (piv[1] // g) * r[0] - (r[1] // g) * piv[0]
            g0 = math.gcd(g0, left)
            piv = (s * piv[0] + t * r[0], g)
    u, v = (g0, 0), (piv[0] % g0, piv[1])
    qf = lambda x, y: x * x + field.trace_omega * x * y + field.norm_omega * y * y
    u, v = _gauss_reduce(u, v, qf)
    return canonical(RingElement(u[0], u[1], field))


def _xgcd(a: int, b: int):
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def gcd_many(xs: Iterable, field: NumberField | None = None):
    g = None
    for x in xs:
        if isinstance(x, RingElement):
            field = x.field
        if g is None:
            g = x
            continue
        if (isinstance(g, RingElement) and not g) or g == 0:
            g = x
        elif (isinstance(x, RingElement) and x) or (not isinstance(x, RingElement) and x != 0):
            g = gcd(g, x, field)
    if g is None:
        raise ValueError("empty gcd")
    if field is None:
        field = NumberField()
    return canonical(field.coerce(g)) if field.coerce(g) else field.zero


def _in_sector(x: RingElement) -> bool:
    """Argument of x lies in [0, 2pi/w), decided with integer arithmetic."""
    f = x.field
    if f.d == 1:
        return x.a > 0
    # work with 2*x = X + Y*sqrt(|d|) i
    if f.half_omega:
        X, Y = 2 * x.a + x.b, x.b
    else:
        X, Y = 2 * x.a, 2 * x.b
    dd = -f.d
    if f.w == 2:  # arg in [0, pi)
        return Y > 0 or (Y == 0 and X > 0)
    if f.w == 4:  # arg in [0, pi/2)
        return X > 0 and Y >= 0
    # w = 6, d = -3: arg in [0, pi/3): Y >= 0 and the point lies before the 60 degree ray
    # Im/Re = Y*sqrt3/X < sqrt3  <=>  Y < X
    return X > 0 and Y >= 0 and Y < X


def canonical(x: RingElement) -> RingElement:
    if not x:
        return x
    for u in x.field.units:
        y = x * u
        if _in_sector(y):
            return y
    raise AssertionError("no canonical associate")


def canonical_unit(x: RingElement) -> RingElement:
    """The unit u with x*u canonical."""
    for u in x.field.units:
        if _in_sector(x * u):
            return u
    raise AssertionError("no canonical associate")


# ---------------------------------------------------------------------------
# factorization

_SPF_LIMIT = 1 << 22


@lru_cache(maxsize=1)
def _spf_table() -> np.ndarray:
    n = _SPF_LIMIT
    spf = np.zeros(n + 1, dtype=np.int32)
    for p in range(2, int(n ** 0.5) + 1):
        if spf[p] == 0:
            block = spf[p * p:: p]
            block[block == 0] = p
    idx = np.nonzero(spf == 0)[0]
    spf[idx] = idx
    return spf


@lru_cache(maxsize=1 << 16)
def factor_integer(n: int) -> dict:
    """Prime factorization of |n| as {p: e}.  Small values use a sieve table."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("factor of zero")
    if n <= _SPF_LIMIT:
        spf = _spf_table()
        out: dict = {}
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
        return out
    return {int(p): int(e) for p, e in sympy.factorint(n).items()}


def factor_element(x) -> list:
    """Factor x into [(prime element, exponent)] up to a unit."""
    if isinstance(x, (int, np.integer)):
        x = NumberField().coerce(x)
    if not x:
        raise ValueError("factor of zero")
    f = x.field
    out = []
    for p in sorted(factor_integer(norm_elem(x))):
        for pi in f.primes_above(p):
            e = ord_prime(x, pi)
            if e:
                out.append((pi, e))
    return out


def ideal_norm(a) -> int:
    n = norm_elem(a)
    if n == 0:
        raise ValueError("zero ideal")
    return n


def delta_t(a, t: int) -> int:
    """Multiplicative function with delta_t(p^r) = r + t - 1."""
    if t < 1:
        raise ValueError("t must be positive")
    if norm_elem(a) == 0:
        raise ValueError("zero ideal")
    out = 1
    for _, e in factor_element(a):
        out *= e + t - 1
    return out
