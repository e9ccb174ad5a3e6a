"""Ternary quadratic forms: invariants, local solvability, points, parametrization."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import sympy

from ..heights import normalize_ints
from ..lattices import adjugate, det_int
from ..numfield import NumberField, RingElement, factor_integer, gcd_many

QQ = NumberField()

# coefficient order (a11, a12, a13, a22, a23, a33)
_IDX = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (1, 1): 3, (1, 2): 4, (2, 2): 5}


@dataclass(frozen=True)
class TernaryQuadraticForm:
    coeffs: tuple
    field: NumberField = QQ

    def __post_init__(self):
        if len(self.coeffs) != 6:
            raise ValueError("a ternary quadratic form has six coefficients")

    @classmethod
    def diagonal(cls, a: int, b: int, c: int) -> "TernaryQuadraticForm":
        return cls((a, 0, 0, b, 0, c))

    @classmethod
    def from_matrix(cls, M) -> "TernaryQuadraticForm":
        """From a doubled symmetric matrix (even diagonal)."""
        if any(M[i][i] % 2 for i in range(3)):
            raise ValueError("doubled matrix needs an even diagonal")
        return cls((M[0][0] // 2, M[0][1], M[0][2], M[1][1] // 2, M[1][2], M[2][2] // 2))

    def a(self, i: int, j: int):
        return self.coeffs[_IDX[(min(i, j), max(i, j))]]

    @cached_property
    def matrix(self) -> tuple:
        """Doubled symmetric matrix: M_ii = 2 a_ii, M_ij = a_ij."""
        return tuple(tuple((2 * self.a(i, j) if i == j else self.a(i, j)) for j in range(3)) for i in range(3))

    def __call__(self, x: Sequence):
        c = self.coeffs
        x1, x2, x3 = x
        return (c[0] * x1 * x1 + c[1] * x1 * x2 + c[2] * x1 * x3
                + c[3] * x2 * x2 + c[4] * x2 * x3 + c[5] * x3 * x3)

    def bilinear(self, x, y):
        """x^T M y = Q(x + y) - Q(x) - Q(y)."""
        M = self.matrix
        return sum(x[i] * M[i][j] * y[j] for i in range(3) for j in range(3))

    def gradient(self, x) -> tuple:
        M = self.matrix
        return tuple(sum(M[i][j] * x[j] for j in range(3)) for i in range(3))

    # invariants ----------------------------------------------------------
    @cached_property
    def det(self):
        M = self.matrix
        if self.field.d == 1:
            return det_int(M)
        return _det3_ring(M)

    @cached_property
    def minors(self) -> tuple:
        M = self.matrix
        out = []
        for r in itertools.combinations(range(3), 2):
            for c in itertools.combinations(range(3), 2):
                out.append(M[r[0]][c[0]] * M[r[1]][c[1]] - M[r[0]][c[1]] * M[r[1]][c[0]])
        return tuple(out)

    @cached_property
    def delta0(self):
        if self.field.d == 1:
            g = 0
            for m in self.minors:
                g = math.gcd(g, m)
            return g
        return gcd_many([self.field.coerce(m) for m in self.minors], self.field)

    @property
    def is_singular(self) -> bool:
        return not self.det

    @property
    def max_coeff(self) -> int:
        return max(abs(c) for c in self.coeffs)


def _det3_ring(M):
    return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
            - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
            + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))


def invariants(Q: TernaryQuadraticForm) -> tuple:
    """(Delta, Delta0): generators of the determinant ideal and the minor ideal."""
    return Q.det, Q.delta0


# ---------------------------------------------------------------------------
# diagonalization and Hilbert symbols over Q

def rational_diagonal(Q: TernaryQuadraticForm) -> tuple:
    """Diagonal entries of a form rationally equivalent to Q (Gram matrix M/2)."""
    A = [[Fraction(v, 2) for v in row] for row in Q.matrix]
    n = 3
    diag = []
    for k in range(n):
        if A[k][k] == 0:
            j = next((j for j in range(k + 1, n) if A[j][j] != 0), None)
            if j is not None:
                A[k], A[j] = A[j], A[k]
                for row in A:
                    row[k], row[j] = row[j], row[k]
            else:
                j = next((j for j in range(k + 1, n) if A[k][j] != 0), None)
                if j is None:
                    diag.append(Fraction(0))
                    continue
                # x_k <- x_k + x_j makes the pivot 2 A_kj
                for c in range(n):
                    A[k][c] += A[j][c]
                for r in range(n):
                    A[r][k] += A[r][j]
        p = A[k][k]
        diag.append(p)
        for i in range(k + 1, n):
            f = A[i][k] / p
            if f:
                for c in range(k, n):
                    A[i][c] -= f * A[k][c]
                for r in range(k, n):
                    A[r][i] -= f * A[r][k]
    return tuple(diag)


def _split_p(x: int, p: int) -> tuple:
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k, x


def _squarefree_int(q: Fraction) -> int:
    """Integer in the same square class as the nonzero rational q."""
    return q.numerator * q.denominator


def hilbert_symbol(a: int, b: int, p) -> int:
    """(a, b)_p for nonzero integers; p = 'inf' or a prime."""
    if p == "inf" or p == 0:
        return -1 if (a < 0 and b < 0) else 1
    alpha, u = _split_p(a, p)
    beta, v = _split_p(b, p)
    if p == 2:
        eps = lambda z: ((z - 1) // 2) % 2
        om = lambda z: ((z * z - 1) // 8) % 2
        e = eps(u) * eps(v) + alpha * om(v) + beta * om(u)
        return -1 if e % 2 else 1
    s = 1
    if (alpha * beta * ((p - 1) // 2)) % 2:
        s = -s
    if beta % 2 and pow(u % p, (p - 1) // 2, p) != 1:
        s = -s
    if alpha % 2 and pow(v % p, (p - 1) // 2, p) != 1:
        s = -s
    return s


def local_solvable(Q: TernaryQuadraticForm, place) -> bool:
    """Whether Q has a nontrivial zero over Q_p (place prime) or R (place 'inf')."""
    if Q.field.d != 1:
        raise NotImplementedError("local solvability is implemented over Q only")
    if Q.is_singular:
        return True
    d1, d2, d3 = (_squarefree_int(d) for d in rational_diagonal(Q))
    return hilbert_symbol(-d1 * d3, -d2 * d3, place) == 1


def bad_primes(Q: TernaryQuadraticForm, factored: dict | None = None) -> list:
    fac = factored if factored is not None else factor_integer(Q.det)
    return sorted(set(fac) | {2})


def is_soluble(Q: TernaryQuadraticForm, factored: dict | None = None) -> bool:
    """Global solvability over Q by Hasse-Minkowski.

    Only the real place and odd primes dividing the determinant need checking:
    good reduction gives points elsewhere, and the product formula fixes p = 2.
    `factored` may carry a known factorization of |det M|.
    """
    if Q.is_singular:
        return True
    d1, d2, d3 = (_squarefree_int(d) for d in rational_diagonal(Q))
    a, b = -d1 * d3, -d2 * d3
    if hilbert_symbol(a, b, "inf") != 1:
        return False
    fac = factored if factored is not None else factor_integer(Q.det)
    for p in fac:
        if p != 2 and hilbert_symbol(a, b, p) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# points and parametrization

def canonical_point(x) -> tuple:
    return normalize_ints([int(v) for v in x])


def find_point(Q: TernaryQuadraticForm, search: int = 40):
    """A canonical zero of Q, or None when Q is not soluble over Q.

    A small box is searched first so that the returned point tends to be
    short; the classical descent in sympy finishes the job otherwise.
    """
    if Q.field.d != 1:
        raise NotImplementedError("find_point is implemented over Q only")
    if Q.is_singular:
        raise ValueError("singular form")
    if not is_soluble(Q):
        return None
    from .count import brute_points
    for r in (3, 10, search):
        pts = brute_points(Q, (r, r, r))
        if pts:
            return min(pts, key=lambda p: (max(map(abs, p)), p))
    x1, x2, x3 = sympy.symbols("x1 x2 x3", integer=True)
    c = Q.coeffs
    expr = (c[0] * x1**2 + c[1] * x1 * x2 + c[2] * x1 * x3 + c[3] * x2**2 + c[4] * x2 * x3 + c[5] * x3**2)
    from sympy.solvers.diophantine.diophantine import diop_ternary_quadratic
    sol = diop_ternary_quadratic(expr)
    if sol is None or sol[0] is None:
        raise AssertionError("soluble form without a point from descent")
    pt = canonical_point([int(s) for s in sol])
    assert Q(pt) == 0
    return pt


def complete_basis(P: Sequence[int]) -> list:
    """Integer matrix with first column P (primitive) and determinant 1."""
    P = [int(v) for v in P]
    # find unimodular U with U P = (1, 0, 0); then columns of U^{-1}
    U = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    v = P[:]
    from ..numfield import _xgcd
    for j in (1, 2):
        if v[j] == 0:
            continue
        g, s, t = _xgcd(v[0], v[j])
        a, b = v[0] // g, v[j] // g
        r0, rj = U[0], U[j]
        U[0] = [s * x + t * y for x, y in zip(r0, rj)]
        U[j] = [a * y - b * x for x, y in zip(r0, rj)]
        v[0], v[j] = g, 0
    if v[0] != 1:
        raise ValueError("base point must be primitive")
    inv = adjugate(U)
    d = det_int(U)
    cols = [[inv[i][k] * d for i in range(3)] for k in range(3)]  # det is +-1
    # cols[0] = P
    assert cols[0] == P, (cols[0], P)
    if det_int([[cols[k][i] for k in range(3)] for i in range(3)]) < 0:
        cols[2] = [-x for x in cols[2]]
    return cols


@dataclass(frozen=True)
class Parametrization:
    form: TernaryQuadraticForm
    base: tuple
    g: tuple             # three binary quadratics, coefficients (s^2, st, t^2)
    c_lo: Fraction       # c_lo H(s,t)^2 <= H(X)
    c_hi: int            # H(X) <= c_hi H(s,t)^2
    lin: int             # H(s,t) <= lin * H(X)
    L: Fraction
    D: int

    def __call__(self, s: int, t: int) -> tuple:
        return tuple(a * s * s + b * s * t + c * t * t for a, b, c in self.g)

    def param_bound(self, hmax) -> int:
        """Largest H(s,t) that can produce a point of height <= hmax."""
        quad = math.isqrt(math.floor(self.L * self.D * hmax))
        return min(quad, self.lin * math.ceil(hmax))


def parametrize(Q: TernaryQuadraticForm, base) -> Parametrization:
    base = tuple(int(v) for v in base)
    if Q(base) != 0:
        raise ValueError("base point not on the conic")
    if Q.is_singular:
        raise ValueError("singular form")
    P, e, f = complete_basis(base)
    # D = s e + t f ; g = B(P, D) D - Q(D) P
    bPe, bPf = Q.bilinear(P, e), Q.bilinear(P, f)
    Qe, Qf, Bef = Q(e), Q(f), Q.bilinear(e, f)
    g = []
    for i in range(3):
        # B(P,D) D_i = (bPe s + bPf t)(e_i s + f_i t)
        s2 = bPe * e[i] - Qe * P[i]
        st = bPe * f[i] + bPf * e[i] - Bef * P[i]
        t2 = bPf * f[i] - Qf * P[i]
        g.append((s2, st, t2))
    g = tuple(g)
    L, D = _bezout_constant(g)
    # linear bound: (s,t) is proportional to the last two coordinates of U^{-1} X
    Umat = [[P[i], e[i], f[i]] for i in range(3)]
    inv = adjugate(Umat)
    lin = max(sum(abs(x) for x in inv[1]), sum(abs(x) for x in inv[2]))
    c_hi = max(sum(abs(x) for x in gi) for gi in g)
    return Parametrization(Q, base, g, Fraction(1, 1) / (L * D), c_hi, lin, L, D)


def _bezout_constant(g) -> tuple:
    """Constants L, D with s^3 and t^3 in the span of the g_i over linear forms.

    If sum l_i g_i = s^3 with rational linear l_i of total l1-norm L and common
    denominator D, then for a primitive pair (s,t) with g(s,t) = k X we get
    |s|^3 <= L H(s,t) k H(X) and k | D, so H(s,t)^2 <= L D H(X).
    """
    best = None
    for target in (0, 3):  # s^3 and t^3 as monomial index in (s^3, s^2 t, s t^2, t^3)
        # unknowns: l_i = p_i s + q_i t, i = 0..2 ; 6 unknowns, 4 equations
        cols = []
        for i in range(3):
            a, b, c = g[i]
            cols.append([a, b, c, 0])   # s * g_i
            cols.append([0, a, b, c])   # t * g_i
        rhs = [1 if k == target else 0 for k in range(4)]
        cand = None
        for chosen in itertools.combinations(range(6), 4):
            m = sympy.Matrix([[cols[j][r] for j in chosen] for r in range(4)])
            if m.det() == 0:
                continue
            sol = m.LUsolve(sympy.Matrix(rhs))
            coeffs = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in sol]
            L = sum(abs(c) for c in coeffs)
            D = 1
            for c in coeffs:
                D = math.lcm(D, c.denominator)
            if cand is None or L * D < cand[0] * cand[1]:
                cand = (L, D)
        if cand is None:
            raise AssertionError("parametrization has a base locus")
        best = cand if best is None else (max(best[0], cand[0]), math.lcm(best[1], cand[1]))
    return best
