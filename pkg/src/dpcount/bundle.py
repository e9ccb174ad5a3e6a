"""Conic bundle torsors sum_{ij} f_ij(u, v) x_i x_j = 0 and their fiber counts.

Binary forms carry integer coefficients; coeffs[i] is the coefficient of
u^(n-i) v^i.  A torsor is stored through its equation coefficients E, the
same convention as TernaryQuadraticForm: E_ii = f_ii and, for i < j,
E_ij = 2 f_ij is the full coefficient of x_i x_j.  The stored Delta(u, v) is
the determinant of the doubled matrix 2F, which equals 8 det F; this keeps it
integral and makes det(fiber matrix) = Delta(u, v) exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
import sympy

from .conics.count import count_in_box
from .conics.forms import TernaryQuadraticForm
from .heights import enumerate_P1, ring_ball
from .numfield import NumberField, RingElement, norm_elem

QQ = NumberField()
_u, _v = sympy.symbols("u v")


class TorsorError(ValueError):
    """A torsor fails its structural invariants."""


class DegenerateFiber(ValueError):
    """The fiber over a root of Delta is a singular conic."""


@dataclass(frozen=True)
class BinaryForm:
    coeffs: tuple
    degree: int = -1

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if self.degree < 0:
            object.__setattr__(self, "degree", len(c) - 1)
        elif self.degree != len(c) - 1:
            raise ValueError("coefficient vector length must be degree + 1")

    @classmethod
    def from_expr(cls, expr, degree: int | None = None) -> "BinaryForm":
        p = sympy.Poly(sympy.expand(expr), _u, _v)
        if p.is_zero:
            n = degree if degree is not None else 0
            return cls((0,) * (n + 1))
        n = p.total_degree() if degree is None else degree
        c = [0] * (n + 1)
        for (i, j), a in p.terms():
            if i + j != n:
                raise ValueError("expression is not homogeneous of the given degree")
            if a != int(a):
                raise ValueError("non-integral coefficient")
            c[j] = int(a)
        return cls(tuple(c))

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def expr(self):
        n = self.degree
        return sum(c * _u ** (n - i) * _v ** i for i, c in enumerate(self.coeffs))

    def __call__(self, u, v):
        n = self.degree
        out = 0
        for i, c in enumerate(self.coeffs):
            if c:
                out = out + c * (u ** (n - i) if n - i else 1) * (v ** i if i else 1)
        return out

    def evaluate_np(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vectorized int64 evaluation (caller guarantees no overflow)."""
        n = self.degree
        out = np.zeros(np.broadcast(u, v).shape, dtype=np.int64)
        for i, c in enumerate(self.coeffs):
            if c:
                out += c * u ** (n - i) * v ** i
        return out

    def is_separable(self) -> bool:
        """No repeated linear factor over the algebraic closure."""
        if self.is_zero:
            return False
        if self.degree <= 1:
            return True
        _, facs = sympy.Poly(self.expr(), _u, _v).sqf_list()
        return all(m == 1 for _, m in facs)

    def resultant(self) -> int:
        """Res(F(t, 1), dF/dt(t, 1)), after removing any factor v^k with k <= 1."""
        t = sympy.symbols("t")
        f = sympy.Poly(self.expr().subs({_u: t, _v: 1}), t)
        if f.degree() < 1:
            return int(f.LC()) if f.degree() == 0 else 0
        return int(sympy.resultant(f, f.diff(t), t))


@dataclass(frozen=True)
class ConicBundleTorsor:
    entries: tuple  # 3x3 symmetric tuple of BinaryForm, equation coefficients
    name: str = ""

    @classmethod
    def from_coefficients(cls, rows, name: str = "") -> "ConicBundleTorsor":
        """rows[i][j] = coefficient list; only i <= j is read and mirrored."""
        E = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(i, 3):
                E[i][j] = E[j][i] = BinaryForm(tuple(rows[i][j]))
        return cls(tuple(tuple(r) for r in E), name)

    @classmethod
    def from_exprs(cls, exprs, name: str = "") -> "ConicBundleTorsor":
        """exprs[i][j] sympy expressions in (u, v) for i <= j (equation coefficients)."""
        E = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(i, 3):
                e = exprs[i][j]
                E[i][j] = E[j][i] = e if isinstance(e, BinaryForm) else BinaryForm.from_expr(e)
        return cls(tuple(tuple(r) for r in E), name)

    def to_coefficients(self) -> list:
        return [[list(self.entries[i][j].coeffs) for j in range(3)] for i in range(3)]

    def f_matrix(self) -> sympy.Matrix:
        """The matrix F = (f_ij) with rational entries."""
        return sympy.Matrix(3, 3, lambda i, j: self.entries[i][j].expr() * (1 if i == j else sympy.Rational(1, 2)))

    @property
    def delta(self) -> BinaryForm:
        return _delta_cached(self)

    @property
    def n(self) -> int:
        return self.delta.degree

    def cofactor_degrees(self) -> tuple:
        F = self.f_matrix()
        out = []
        for i in range(3):
            idx = [k for k in range(3) if k != i]
            m = sympy.expand(F[idx[0], idx[0]] * F[idx[1], idx[1]] - F[idx[0], idx[1]] ** 2)
            out.append(_hom_degree(m))
        return tuple(out)

    def fiber_form(self, u, v, field: NumberField = QQ, allow_degenerate: bool = False) -> TernaryQuadraticForm:
        """The conic over (u : v); raises DegenerateFiber at a root of Delta."""
        if not allow_degenerate and not self.delta(u, v):
            raise DegenerateFiber(f"Delta vanishes at ({u}, {v})")
        E = self.entries
        coeffs = (E[0][0](u, v), E[0][1](u, v), E[0][2](u, v), E[1][1](u, v), E[1][2](u, v), E[2][2](u, v))
        return TernaryQuadraticForm(coeffs, field)


_DELTA_CACHE: dict = {}


def _delta_cached(T: ConicBundleTorsor) -> BinaryForm:
    key = T.entries
    if key not in _DELTA_CACHE:
        E = T.entries
        M = sympy.Matrix(3, 3, lambda i, j: E[i][j].expr() * (2 if i == j else 1))
        d = sympy.expand(M.det())
        _DELTA_CACHE[key] = BinaryForm.from_expr(d) if d != 0 else BinaryForm((0,))
    return _DELTA_CACHE[key]


def _hom_degree(expr):
    """Degree of a homogeneous expression in (u, v); None for zero; -1 if not homogeneous."""
    if expr == 0:
        return None
    p = sympy.Poly(expr, _u, _v)
    degs = {i + j for (i, j) in p.monoms()}
    return degs.pop() if len(degs) == 1 else -1


@dataclass
class ValidationReport:
    valid: bool
    n: int
    cofactor_degrees: tuple
    resultant_nonzero: bool
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"valid": self.valid, "n": self.n, "cofactor_degrees": list(self.cofactor_degrees),
                "resultant_nonzero": self.resultant_nonzero, "violations": list(self.violations)}


def validate(T: ConicBundleTorsor) -> ValidationReport:
    viol = []
    F = T.f_matrix()
    for i in range(3):
        for j in range(3):
            if T.entries[i][j] != T.entries[j][i]:
                viol.append(f"matrix not symmetric at ({i},{j})")
    for a, b in ((0, 1), (0, 2), (1, 2)):
        m = sympy.expand(F[a, a] * F[b, b] - F[a, b] ** 2)
        d = _hom_degree(m)
        if d == -1:
            viol.append(f"principal minor ({a},{b}) is not homogeneous")
        elif d is not None and d % 2:
            viol.append(f"principal minor ({a},{b}) has odd degree {d}")
    D = T.delta
    if D.is_zero:
        viol.append("Delta vanishes identically")
        sep = False
    else:
        sep = D.is_separable()
        if not sep:
            viol.append("Delta is not separable")
    try:
        cof = T.cofactor_degrees()
    except Exception:  # non-homogeneous entries
        cof = (None, None, None)
    cof = tuple(-1 if c is None else c for c in cof)
    return ValidationReport(not viol, D.degree if not D.is_zero else -1, cof, sep, viol)


def require_valid(T: ConicBundleTorsor) -> ValidationReport:
    rep = validate(T)
    if not rep.valid:
        raise TorsorError("; ".join(rep.violations))
    return rep


# ---------------------------------------------------------------------------
# counting

def _pair_coords(rep, field):
    u, v = rep.coords
    if field.d == 1:
        return int(u), int(v)
    return field.coerce(u), field.coerce(v)


@dataclass
class NT0Result:
    A: object
    box: tuple
    total: int
    fibers: list  # rows (u, v, delta, count)
    degenerate: list
    points: list
    ratio: float
    shape: float

    def to_dict(self) -> dict:
        return {"A": str(self.A), "box": [str(r) for r in self.box], "total": self.total,
                "fibers": len(self.fibers), "degenerate": [list(map(str, d)) for d in self.degenerate],
                "ratio": self.ratio, "shape": self.shape}


def nt0_shape(A, r, n: int) -> float:
    """A^2 (1 + (|r1| |r2| |r3| / A^n)^(1/3))."""
    R = 1.0
    for x in r:
        R *= float(x)
    A = float(A)
    return A * A * (1.0 + (R / A ** n) ** (1.0 / 3.0))


def count_NT0(T: ConicBundleTorsor, A, r: Sequence, mode: str = "auto",
              field: NumberField = QQ, keep_points: bool = True) -> NT0Result:
    """Points (u, v; x) on the open part Delta != 0 with A <= H([u, v]) < 2A and x in the box."""
    rep = require_valid(T)
    A = Fraction(A)
    if A < 1:
        raise ValueError("A must be at least 1")
    r = tuple(int(x) for x in r)
    if field.d != 1 and mode != "brute":
        mode = "brute"
    fibers, degenerate, points = [], [], []
    total = 0
    for pr in enumerate_P1(A, 2 * A, field):
        u, v = _pair_coords(pr, field)
        d = T.delta(u, v)
        if not d:
            degenerate.append((u, v))
            continue
        Q = T.fiber_form(u, v, field)
        pts = count_in_box(Q, r, mode)
        fibers.append((u, v, d, len(pts)))
        total += len(pts)
        if keep_points:
            points.extend((u, v, x) for x in pts)
    shape = nt0_shape(A, r, rep.n)
    return NT0Result(A, r, total, fibers, degenerate, points, total / shape, shape)


def brute_NT0(T: ConicBundleTorsor, A, r: Sequence) -> list:
    """Oracle over Q: every (u, v) in the shell against every x in the box, vectorized."""
    A = Fraction(A)
    r = [int(x) for x in r]
    axes = [np.arange(-k, k + 1, dtype=np.int64) for k in r]
    x1, x2, x3 = (g.ravel() for g in np.meshgrid(*axes, indexing="ij"))
    g = np.gcd(np.gcd(x1, x2), x3)
    lead = np.where(x1 != 0, x1, np.where(x2 != 0, x2, x3))
    keep = (g == 1) & (lead > 0)
    x1, x2, x3 = x1[keep], x2[keep], x3[keep]
    quad = [x1 * x1, x1 * x2, x1 * x3, x2 * x2, x2 * x3, x3 * x3]
    out = []
    for pr in enumerate_P1(A, 2 * A):
        u, v = pr.coords
        if not T.delta(u, v):
            continue
        c = T.fiber_form(u, v).coeffs
        if max(abs(a) for a in c) * 6 * max(r) ** 2 >= 1 << 62:
            raise OverflowError("coefficients too large for the vectorized oracle")
        val = sum(int(a) * q for a, q in zip(c, quad))
        hit = np.nonzero(val == 0)[0]
        out.extend((u, v, (int(x1[i]), int(x2[i]), int(x3[i]))) for i in hit)
    return out


# ---------------------------------------------------------------------------
# binary form sums

def _cube_root_bracket(N: int, prec: int) -> int:
    """lo with lo <= 2^prec N^(-1/3) < lo + 1."""
    q = (1 << (3 * prec)) // N
    lo = int(round(float(q) ** (1.0 / 3.0))) if q < 1 << 1000 else _icbrt(q)
    while lo ** 3 > q:
        lo -= 1
    while (lo + 1) ** 3 <= q:
        lo += 1
    return lo


def _icbrt(q: int) -> int:
    x = 1 << ((q.bit_length() + 2) // 3)
    while True:
        y = (2 * x + q // (x * x)) // 3
        if y >= x:
            return x
        x = y


@dataclass
class BinarySum:
    A: object
    value: float
    lower: Fraction
    upper: Fraction
    terms: int
    zeros: int
    precision: int

    def to_dict(self) -> dict:
        return {"A": str(self.A), "value": self.value, "lower": f"{self.lower.numerator}/{self.lower.denominator}",
                "upper": f"{self.upper.numerator}/{self.upper.denominator}", "terms": self.terms,
                "zeros": self.zeros, "precision": self.precision}


def _shell_values_q(F: BinaryForm, A: int, chunk: int = 2048) -> Iterator[np.ndarray]:
    """F(u, v) for all integer (u, v) with A <= max(|u|, |v|) < 2A."""
    lo, hi = int(math.ceil(A)), int(math.ceil(2 * A)) - 1
    v_all = np.arange(-hi, hi + 1, dtype=np.int64)
    big = max(abs(c) for c in F.coeffs) * (F.degree + 1) * float(hi) ** F.degree
    if big >= 2 ** 62:
        raise OverflowError("binary form values exceed int64; use a smaller A")
    us = np.arange(-hi, hi + 1, dtype=np.int64)
    for start in range(0, us.size, chunk):
        u = us[start:start + chunk, None]
        mask = np.maximum(np.abs(u), np.abs(v_all[None, :])) >= lo
        vals = F.evaluate_np(np.broadcast_to(u, mask.shape), np.broadcast_to(v_all[None, :], mask.shape))
        yield vals[mask]


def binary_sum(F: BinaryForm, A, precision: int = 64, field: NumberField = QQ) -> BinarySum:
    """Sum of N(F(u, v))^(-1/3) over the dyadic shell A <= |(u, v)| < 2A, F(u, v) != 0.

    Every term is bracketed in [lo, lo + 1] / 2^precision with integer cube
    roots (a single point when the root is exact), so the bounds are exact
    rationals and the value is reproducible.
    """
    if not F.is_separable():
        raise ValueError("binary form must be separable")
    A = Fraction(A)
    if A < 1:
        raise ValueError("A must be at least 1")
    counts: dict = {}
    zeros = 0
    if field.d == 1:
        for vals in _shell_values_q(F, A):
            a = np.abs(vals)
            zeros += int(np.count_nonzero(a == 0))
            uniq, cnt = np.unique(a[a != 0], return_counts=True)
            for n, c in zip(uniq.tolist(), cnt.tolist()):
                counts[n] = counts.get(n, 0) + c
    else:
        # ||(u, v)||_* = max |.|^2 at the complex place; N = |F(u, v)|^2
        ball = ring_ball(field, int(math.floor(2 * A)))
        for u in ball:
            for v in ball:
                h = max(norm_elem(u), norm_elem(v))
                if not (A <= h < 2 * A):
                    continue
                n = norm_elem(field.coerce(F(u, v)))
                if n == 0:
                    zeros += 1
                else:
                    counts[n] = counts.get(n, 0) + 1
    lo_sum = 0
    terms = inexact = 0
    top = 1 << (3 * precision)
    for n in sorted(counts):
        c = counts[n]
        lo = _cube_root_bracket(n, precision)
        lo_sum += c * lo
        terms += c
        # the bracket collapses when 2^precision n^(-1/3) is an integer
        if top % n or lo ** 3 != top // n:
            inexact += c
    den = 1 << precision
    lower = Fraction(lo_sum, den)
    upper = Fraction(lo_sum + inexact, den)
    value = float((lower + upper) / 2)
    return BinarySum(A, value, lower, upper, terms, zeros, precision)
