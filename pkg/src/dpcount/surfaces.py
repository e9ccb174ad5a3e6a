"""Del Pezzo surfaces of degree 4, 3, 2 with their conic fibrations.

Models (over Q, integral coefficients):
  dp4:  x0 x1 - x2 x3 = 0,  Q(x0, x1, x2, x3) + a x4^2 = 0           in P^4
  dp3:  L1 L2 L3 = x0 Q,  L_i linear in x1, x2, x3                   in P^3
  dp2:  t^2 = q1 q2 + q3^2,  q_i ternary quadratic in x1, x2, x3      in P(2, 1, 1, 1)

Points are canonical integer tuples: primitive with first nonzero entry
positive (for dp2 this applies to x = (x1, x2, x3); t carries any sign).

The open set U removes the exceptional curves.  Every line of a dp4, every
line of a dp3 other than the three in x0 = 0, and the components of the
singular fibers of a dp2 fibration are components of singular fibers of the
listed fibrations.  A rational point on such a curve maps to a rational root
of the corresponding Delta, so the structural filter is: drop P if
Delta_i(f_i(P)) = 0 for some i, and for dp3 drop x0 = 0.  Further curves
(for dp2, preimages of bitangents that are not fiber components) come from
the fixture's curve list.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import sympy

from .bundle import BinaryForm, ConicBundleTorsor, validate
from .conics.count import count_in_box
from .conics.forms import is_soluble
from .heights import enumerate_P1, normalize_ints
from .lattices import ResourceError

FIXTURE_DIR = Path(__file__).with_name("fixtures")
_u, _v = sympy.symbols("u v")


class FixtureError(ValueError):
    """Malformed fixture (parse-level problem)."""


class InvariantError(ValueError):
    """A fixture parses but violates a structural invariant."""


def _quad_expr(coeffs: Sequence[int], xs) -> sympy.Expr:
    """Quadratic form from upper-triangular coefficients in order (i <= j)."""
    n = len(xs)
    if len(coeffs) != n * (n + 1) // 2:
        raise FixtureError(f"quadratic form in {n} variables needs {n * (n + 1) // 2} coefficients")
    out, k = 0, 0
    for i in range(n):
        for j in range(i, n):
            out += int(coeffs[k]) * xs[i] * xs[j]
            k += 1
    return out


def _l1(expr, gens) -> int:
    if expr == 0:
        return 0
    return sum(abs(int(c)) for c in sympy.Poly(expr, *gens).coeffs())


def _smooth_certificate(polys, gens) -> bool:
    """True iff the polynomials have no common zero besides the origin.

    A grevlex Groebner basis must contain, for every variable, an element whose
    leading monomial is a pure power of it.
    """
    G = sympy.groebner(polys, *gens, order="grevlex")
    lms = [sympy.Poly(g, *gens).monoms(order="grevlex")[0] for g in G.exprs]
    return all(any(m[i] > 0 and sum(m) == m[i] for m in lms) for i in range(len(gens)))


@dataclass(frozen=True)
class Curve:
    name: str
    equations: tuple  # strings in the surface variables


def _parse_curves(raw, names) -> tuple:
    out = []
    syms = {n: sympy.Symbol(n) for n in names}
    for c in raw or []:
        if not isinstance(c, dict) or "equations" not in c:
            raise FixtureError("curve entries need an 'equations' list")
        eqs = []
        for e in c["equations"]:
            try:
                ex = sympy.sympify(e, locals=syms)
            except (sympy.SympifyError, TypeError) as err:
                raise FixtureError(f"bad curve equation {e!r}") from err
            if not ex.free_symbols <= set(syms.values()):
                raise FixtureError(f"curve equation {e!r} uses unknown variables")
            eqs.append(str(ex))
        out.append(Curve(str(c.get("name", "")), tuple(eqs)))
    return tuple(out)


@dataclass
class Fibration:
    """Fibration f_i with its torsor in fiber variables w = (w1, w2, w3)."""
    index: int
    torsor: ConicBundleTorsor
    delta: BinaryForm


class DelPezzoSurface:
    variant: str = ""
    degree: int = 0
    m: int = 0
    e: int = 0
    var_names: tuple = ()

    def __init__(self, name: str = "", curves: tuple = (), raw: dict | None = None):
        self.name = name
        self.curves = curves
        self.raw = raw or {}
        self.xs = sympy.symbols(" ".join(self.var_names))
        self._curve_fns = [sympy.lambdify(self.xs, list(map(sympy.sympify, c.equations)), "math")
                           for c in curves]
        self.fibrations = [self._build_fibration(i) for i in range(self.m)]

    # -- to implement per variant
    def equations(self) -> list:
        raise NotImplementedError

    def branches(self, i: int, P) -> list:
        raise NotImplementedError

    def height(self, P) -> int:
        raise NotImplementedError

    def psi_polynomials(self) -> list:
        raise NotImplementedError

    def _fiber_setup(self, i: int):
        """(torsor equation in w, substitution x = x(u, v, w)) as sympy objects."""
        raise NotImplementedError

    def fiber_box(self, i: int, u: int, v: int, B: int) -> tuple:
        raise NotImplementedError

    def lift(self, i: int, u: int, v: int, w) -> list:
        raise NotImplementedError

    def brute_points(self, B: int) -> set:
        raise NotImplementedError

    # -- shared
    def to_dict(self) -> dict:
        return dict(self.raw)

    def contains(self, P) -> bool:
        vals = dict(zip(self.xs, P))
        return all(eq.subs(vals) == 0 for eq in self.equations())

    def fibration(self, i: int, P) -> tuple:
        for a, b in self.branches(i, P):
            if a or b:
                return normalize_ints((a, b))
        raise InvariantError(f"every branch of f_{i + 1} vanishes at {P}")

    def branches_agree(self, i: int, P) -> bool:
        vals = [(a, b) for a, b in self.branches(i, P) if a or b]
        return all(a * d - b * c == 0 for (a, b) in vals for (c, d) in vals)

    def _build_fibration(self, i: int) -> Fibration:
        w = sympy.symbols("w1:4")
        eq = sympy.expand(self._fiber_setup(i))
        poly = sympy.Poly(eq, *w)
        ex = [[0] * 3 for _ in range(3)]
        for mono, c in poly.terms():
            idx = [k for k in range(3) for _ in range(mono[k])]
            if len(idx) != 2:
                raise InvariantError("fiber equation is not quadratic in the fiber variables")
            a, b = idx
            ex[a][b] = sympy.expand(ex[a][b] + c)
        rows = [[BinaryForm.from_expr(ex[a][b], _hom_deg(ex, a, b)) if b >= a else None
                 for b in range(3)] for a in range(3)]
        T = ConicBundleTorsor.from_exprs(rows, f"{self.name}:f{i + 1}")
        return Fibration(i, T, T.delta)

    def functoriality_constant(self) -> Fraction:
        """C = c_1^m with prod_i H(f_i(P)) <= C H(P)^e on U."""
        return max(Fraction(_l1(p, self.xs)) for p in self.psi_polynomials())

    def fiber_height_bound(self, B: int) -> int:
        """Largest h with h^m <= C B^e."""
        C = self.functoriality_constant()
        rhs_num, rhs_den = C.numerator * B ** self.e, C.denominator
        h = int((rhs_num / rhs_den) ** (1.0 / self.m)) + 2
        while h > 0 and h ** self.m * rhs_den > rhs_num:
            h -= 1
        return h

    def structural_exceptional(self, P) -> bool:
        for fib in self.fibrations:
            u, v = self.fibration(fib.index, P)
            if fib.delta(u, v) == 0:
                return True
        return False

    def on_listed_curve(self, P) -> bool:
        for fn in self._curve_fns:
            if all(val == 0 for val in fn(*P)):
                return True
        return False

    def in_U(self, P) -> bool:
        return not self.structural_exceptional(P) and not self.on_listed_curve(P)


def _hom_deg(ex, a, b):
    # degree of the (a, b) entry, from the homogeneity of the fiber equation
    e = ex[a][b]
    if e == 0:
        return None
    return sympy.Poly(e, _u, _v).total_degree()


# ---------------------------------------------------------------------------

class DP4(DelPezzoSurface):
    variant = "dp4"
    degree = 4
    m, e = 2, 1
    var_names = ("x0", "x1", "x2", "x3", "x4")

    def __init__(self, Q: Sequence[int], a: int, **kw):
        self.Qc = tuple(int(c) for c in Q)
        self.a = int(a)
        if self.a == 0:
            raise InvariantError("a must be nonzero")
        super().__init__(**kw)

    def Qexpr(self, xs):
        return _quad_expr(self.Qc, xs)

    def equations(self):
        x = self.xs
        return [x[0] * x[1] - x[2] * x[3], self.Qexpr(x[:4]) + self.a * x[4] ** 2]

    def singular_certificate_polys(self):
        G = self.equations()
        J = sympy.Matrix([[sympy.diff(g, v) for v in self.xs] for g in G])
        minors = [J[:, [i, j]].det() for i in range(5) for j in range(i + 1, 5)]
        return G + minors

    def branches(self, i, P):
        x0, x1, x2, x3 = P[:4]
        if i == 0:
            return [(x0, x2), (x3, x1)]
        return [(x0, x3), (x2, x1)]

    def height(self, P):
        return max(abs(c) for c in P)

    def psi_polynomials(self):
        x = self.xs
        return [x[0], x[3], x[2], x[1]]

    def _fiber_setup(self, i):
        w1, w2, w3 = sympy.symbols("w1:4")
        u, v = _u, _v
        if i == 0:
            X = (u * w1, v * w2, v * w1, u * w2)
        else:
            X = (u * w1, v * w2, u * w2, v * w1)
        return self.Qexpr(X) + self.a * w3 ** 2

    def fiber_box(self, i, u, v, B):
        h = max(abs(u), abs(v))
        return (B // h, B // h, B)

    def lift(self, i, u, v, w):
        x, y, z = w
        if i == 0:
            P = (u * x, v * y, v * x, u * y, z)
        else:
            P = (u * x, v * y, u * y, v * x, z)
        return [normalize_ints(P)]

    def brute_points(self, B):
        """Oracle: solve x0 x1 = x2 x3 on the box, then x4 from the quadric."""
        out = set()
        r = np.arange(-B, B + 1, dtype=np.int64)
        X2, X3 = np.meshgrid(r, r, indexing="ij")
        prod = X2 * X3
        q = self.Qc
        for x0 in range(-B, B + 1):
            if x0 == 0:
                cand = []
                # x2 x3 = 0, x1 free
                mask = prod == 0
                a2, a3 = X2[mask], X3[mask]
                for x1 in range(-B, B + 1):
                    cand.append((np.full(a2.shape, 0), np.full(a2.shape, x1), a2, a3))
            else:
                mask = (prod % x0 == 0)
                x1 = prod[mask] // x0
                ok = np.abs(x1) <= B
                cand = [(np.full(int(ok.sum()), x0), x1[ok], X2[mask][ok], X3[mask][ok])]
            for c0, c1, c2, c3 in cand:
                if c0.size == 0:
                    continue
                xs = (c0, c1, c2, c3)
                val = np.zeros(c0.shape, dtype=np.int64)
                k = 0
                for s in range(4):
                    for t in range(s, 4):
                        if q[k]:
                            val += q[k] * xs[s] * xs[t]
                        k += 1
                num = -val
                ok = num % self.a == 0
                sq = num // self.a
                ok &= sq >= 0
                idx = np.nonzero(ok)[0]
                if idx.size == 0:
                    continue
                s = np.floor(np.sqrt(sq[idx].astype(np.float64))).astype(np.int64)
                s = np.where(s * s > sq[idx], s - 1, s)
                s = np.where((s + 1) * (s + 1) <= sq[idx], s + 1, s)
                good = (s * s == sq[idx]) & (s <= B)
                for j, x4 in zip(idx[good].tolist(), s[good].tolist()):
                    base = (int(c0[j]), int(c1[j]), int(c2[j]), int(c3[j]))
                    if not any(base) and x4 == 0:
                        continue
                    for sgn in ((1, -1) if x4 else (1,)):
                        P = base + (sgn * x4,)
                        if math.gcd(*P) == 1:
                            out.add(normalize_ints(P))
        return out


class DP3(DelPezzoSurface):
    variant = "dp3"
    degree = 3
    m, e = 3, 2
    var_names = ("x0", "x1", "x2", "x3")

    def __init__(self, L: Sequence[Sequence[int]], Q: Sequence[int], **kw):
        self.Lc = tuple(tuple(int(c) for c in row) for row in L)
        if len(self.Lc) != 3 or any(len(r) != 3 for r in self.Lc):
            raise FixtureError("dp3 needs three linear forms in x1, x2, x3")
        self.Qc = tuple(int(c) for c in Q)
        self.pivots = []
        for row in self.Lc:
            piv = next((k for k in range(3) if abs(row[k]) == 1), None)
            if piv is None:
                raise InvariantError("each L_i needs a coefficient +-1 (fixture normal form)")
            self.pivots.append(piv)
        super().__init__(**kw)

    def L(self, i, x):
        return sum(c * x[k + 1] for k, c in enumerate(self.Lc[i]))

    def Qexpr(self, xs):
        return _quad_expr(self.Qc, xs)

    def equations(self):
        x = self.xs
        return [self.L(0, x) * self.L(1, x) * self.L(2, x) - x[0] * self.Qexpr(x)]

    def singular_certificate_polys(self):
        F = self.equations()[0]
        return [sympy.diff(F, v) for v in self.xs]

    def _Qval(self, P):
        return _quad_eval(self.Qc, P)

    def branches(self, i, P):
        j, k = [a for a in range(3) if a != i]
        return [(P[0], self.L(i, P)), (self.L(j, P) * self.L(k, P), self._Qval(P))]

    def height(self, P):
        return max(abs(c) for c in P)

    def psi_polynomials(self):
        x = self.xs
        L = [self.L(i, x) for i in range(3)]
        return [x[0] ** 2, x[0] * L[2], x[0] * L[1], x[0] * L[0],
                sympy.expand(L[1] * L[2]), sympy.expand(L[0] * L[2]), sympy.expand(L[0] * L[1]),
                self.Qexpr(x)]

    def _coords(self, i, u, v, w):
        """x = x(u, v, w): x0 = u w1, L_i = v w1, the other two of x1..x3 are w2, w3."""
        piv = self.pivots[i]
        row = self.Lc[i]
        free = [k for k in range(3) if k != piv]
        x = [None, None, None]
        x[free[0]], x[free[1]] = w[1], w[2]
        rest = sum(row[k] * x[k] for k in free)
        x[piv] = row[piv] * (v * w[0] - rest)
        return (u * w[0], x[0], x[1], x[2])

    def _fiber_setup(self, i):
        w = sympy.symbols("w1:4")
        X = self._coords(i, _u, _v, w)
        others = [k for k in range(3) if k != i]
        # divide L1 L2 L3 - x0 Q by w1, using L_i = v w1 and x0 = u w1
        expr = _v * self.L(others[0], X) * self.L(others[1], X) - _u * self.Qexpr(X)
        return expr

    def fiber_box(self, i, u, v, B):
        h = max(abs(u), abs(v))
        c = sum(abs(x) for x in self.Lc[i])
        return (max(1, (c * B) // h), B, B)

    def lift(self, i, u, v, w):
        if w[0] == 0:
            return []
        return [normalize_ints(self._coords(i, u, v, w))]

    def brute_points(self, B):
        """Oracle over (x1, x2, x3) in the box, solving for x0 exactly."""
        q = self.Qc  # order (00,01,02,03,11,12,13,22,23,33)
        out = set()
        r = np.arange(-B, B + 1, dtype=np.int64)
        X2, X3 = np.meshgrid(r, r, indexing="ij")
        X2, X3 = X2.ravel(), X3.ravel()
        for x1 in range(-B, B + 1):
            X1 = np.full(X2.shape, x1, dtype=np.int64)
            xs = (None, X1, X2, X3)
            Ls = [sum(c * xs[k + 1] for k, c in enumerate(row) if c) for row in self.Lc]
            C = Ls[0] * Ls[1] * Ls[2]
            a3 = q[0]
            a2 = q[1] * X1 + q[2] * X2 + q[3] * X3
            a1 = (q[4] * X1 * X1 + q[5] * X1 * X2 + q[6] * X1 * X3 + q[7] * X2 * X2
                  + q[8] * X2 * X3 + q[9] * X3 * X3)
            # x0 (a3 x0^2 + a2 x0 + a1) = C
            if a3:
                sols = _cubic_int_roots(a3, a2, a1, -C, B)
            else:
                sols = _quadratic_int_roots(a2, a1, -C, B)
            for j, x0 in sols:
                P = (x0, x1, int(X2[j]), int(X3[j]))
                if any(P) and math.gcd(*P) == 1:
                    out.add(normalize_ints(P))
        return out

    def structural_exceptional(self, P) -> bool:
        if P[0] == 0:
            return True
        return super().structural_exceptional(P)


class DP2(DelPezzoSurface):
    variant = "dp2"
    degree = 2
    m, e = 2, 2
    var_names = ("t", "x1", "x2", "x3")

    def __init__(self, q: Sequence[Sequence[int]], **kw):
        if len(q) != 3:
            raise FixtureError("dp2 needs three quadratic forms q1, q2, q3")
        self.qc = tuple(tuple(int(c) for c in row) for row in q)
        for row in self.qc:
            if len(row) != 6:
                raise FixtureError("ternary quadratic forms need 6 coefficients")
        super().__init__(**kw)

    def qexpr(self, j, xs):
        return _quad_expr(self.qc[j], xs)

    def qval(self, j, x):
        return _quad_eval(self.qc[j], x)

    def quartic(self, xs):
        return sympy.expand(self.qexpr(0, xs) * self.qexpr(1, xs) + self.qexpr(2, xs) ** 2)

    def equations(self):
        t = self.xs[0]
        return [t ** 2 - self.quartic(self.xs[1:])]

    def singular_certificate_polys(self):
        f = self.quartic(self.xs[1:])
        return [sympy.diff(f, v) for v in self.xs[1:]]

    def branches(self, i, P):
        t, x = P[0], P[1:]
        q1, q2, q3 = (self.qval(j, x) for j in range(3))
        if i == 0:
            return [(t - q3, q1), (q2, t + q3)]
        return [(t - q3, q2), (q1, t + q3)]

    def height(self, P):
        return max(abs(c) for c in P[1:])

    def psi_polynomials(self):
        # t is bounded through |t| <= sqrt(|f|_1) H^2; handled in functoriality_constant
        return []

    def functoriality_constant(self) -> Fraction:
        xs = self.xs[1:]
        l1 = [_l1(sympy.expand(self.qexpr(j, xs)), xs) for j in range(3)]
        f1 = _l1(self.quartic(xs), xs)
        t_bound = math.isqrt(f1)
        if t_bound * t_bound < f1:
            t_bound += 1
        return Fraction(max(l1[0], l1[1], t_bound + l1[2]))

    def _fiber_setup(self, i):
        w = sympy.symbols("w1:4")
        a, b = (0, 1) if i == 0 else (1, 0)
        return self.qexpr(a, w) * _u ** 2 + 2 * self.qexpr(2, w) * _u * _v - self.qexpr(b, w) * _v ** 2

    def fiber_box(self, i, u, v, B):
        return (B, B, B)

    def lift(self, i, u, v, w):
        x = normalize_ints(w)
        q = [self.qval(j, x) for j in range(3)]
        a, b = (0, 1) if i == 0 else (1, 0)
        if v:
            num, den = q[a] * u, v
            sgn_q3 = 1
        else:
            num, den = q[b] * v, u
            sgn_q3 = -1
        if num % den:
            raise InvariantError("non-integral t on a fiber")
        t = sgn_q3 * q[2] + num // den
        if t * t != q[0] * q[1] + q[2] * q[2]:
            raise InvariantError("lifted point is not on the surface")
        return [(t,) + x]

    def brute_points(self, B):
        """Oracle: x over the box (canonical, primitive), t = +-sqrt(f(x))."""
        out = set()
        r = np.arange(-B, B + 1, dtype=np.int64)
        X2, X3 = np.meshgrid(r, r, indexing="ij")
        X2, X3 = X2.ravel(), X3.ravel()
        for x1 in range(0, B + 1):
            if x1 == 0:
                keep = (X2 > 0) | ((X2 == 0) & (X3 > 0))
                a2, a3 = X2[keep], X3[keep]
            else:
                a2, a3 = X2, X3
            a1 = np.full(a2.shape, x1, dtype=np.int64)
            x = (a1, a2, a3)
            qs = [_quad_eval_np(self.qc[j], x) for j in range(3)]
            f = qs[0] * qs[1] + qs[2] * qs[2]
            idx = np.nonzero(f >= 0)[0]
            s = np.floor(np.sqrt(f[idx].astype(np.float64))).astype(np.int64)
            s = np.where(s * s > f[idx], s - 1, s)
            s = np.where((s + 1) * (s + 1) <= f[idx], s + 1, s)
            good = s * s == f[idx]
            idx, s = idx[good], s[good]
            g = np.gcd(np.gcd(a1[idx], a2[idx]), a3[idx])
            prim = g == 1
            for j, t in zip(idx[prim].tolist(), s[prim].tolist()):
                P = (int(a1[j]), int(a2[j]), int(a3[j]))
                out.add((t,) + P)
                if t:
                    out.add((-t,) + P)
        return out


def _quad_eval(coeffs, x) -> int:
    n = len(x)
    out, k = 0, 0
    for i in range(n):
        for j in range(i, n):
            if coeffs[k]:
                out += coeffs[k] * x[i] * x[j]
            k += 1
    return out


def _quad_eval_np(coeffs, x):
    n = len(x)
    out = np.zeros(x[0].shape, dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i, n):
            if coeffs[k]:
                out += coeffs[k] * x[i] * x[j]
            k += 1
    return out


def _quadratic_int_roots(a, b, c, B) -> list:
    """(index, x) with a x^2 + b x + c = 0 and |x| <= B; a, b, c int64 arrays."""
    out = []
    lin = a == 0
    # linear or constant
    idx = np.nonzero(lin & (b != 0))[0]
    if idx.size:
        bb, cc = b[idx], c[idx]
        ok = cc % bb == 0
        x = -(cc[ok] // bb[ok])
        good = np.abs(x) <= B
        out.extend(zip(idx[ok][good].tolist(), x[good].tolist()))
    idx = np.nonzero(lin & (b == 0) & (c == 0))[0]
    for j in idx.tolist():
        out.extend((j, x) for x in range(-B, B + 1))
    idx = np.nonzero(~lin)[0]
    if idx.size:
        aa, bb, cc = a[idx], b[idx], c[idx]
        disc = bb * bb - 4 * aa * cc
        ok = disc >= 0
        idx, aa, bb, disc = idx[ok], aa[ok], bb[ok], disc[ok]
        s = np.floor(np.sqrt(disc.astype(np.float64))).astype(np.int64)
        s = np.where(s * s > disc, s - 1, s)
        s = np.where((s + 1) * (s + 1) <= disc, s + 1, s)
        ok = s * s == disc
        idx, aa, bb, s = idx[ok], aa[ok], bb[ok], s[ok]
        for sign in (1, -1):
            num = -bb + sign * s
            ok = num % (2 * aa) == 0
            if sign == -1:
                ok &= s != 0
            x = num[ok] // (2 * aa[ok])
            good = np.abs(x) <= B
            out.extend(zip(idx[ok][good].tolist(), x[good].tolist()))
    return out


def _cubic_int_roots(a3: int, a2, a1, a0, B) -> list:
    """Slow path: integer roots of a3 x^3 + a2 x^2 + a1 x + a0 with |x| <= B."""
    out = []
    for j in range(a2.size):
        c = [a3, int(a2[j]), int(a1[j]), int(a0[j])]
        for r in np.roots(c):
            if abs(r.imag) > 1e-6:
                continue
            for x in (math.floor(r.real), math.ceil(r.real)):
                if abs(x) <= B and ((c[0] * x + c[1]) * x + c[2]) * x + c[3] == 0:
                    out.append((j, x))
    return sorted(set(out))


# ---------------------------------------------------------------------------
# fixtures

_VARIANTS = {"dp4": DP4, "dp3": DP3, "dp2": DP2}


def surface_from_dict(d: dict, certify: bool = True) -> DelPezzoSurface:
    if not isinstance(d, dict):
        raise FixtureError("fixture must be a JSON object")
    variant = d.get("variant")
    if variant not in _VARIANTS:
        raise FixtureError(f"unknown variant {variant!r}")
    field_s = str(d.get("field", "Q"))
    if field_s not in ("Q", "QQ"):
        raise FixtureError("surface fixtures are supported over Q only")
    cls = _VARIANTS[variant]
    curves = _parse_curves(d.get("curves"), cls.var_names)
    kw = dict(name=str(d.get("name", variant)), curves=curves, raw=d)
    try:
        if variant == "dp4":
            X = DP4(d["Q"], d["a"], **kw)
        elif variant == "dp3":
            X = DP3(d["L"], d["Q"], **kw)
        else:
            X = DP2(d["q"], **kw)
    except KeyError as err:
        raise FixtureError(f"missing field {err}") from err
    except (TypeError, ValueError) as err:
        if isinstance(err, (InvariantError, FixtureError)):
            raise
        raise FixtureError(str(err)) from err
    expected_n = {"dp4": 4, "dp3": 5, "dp2": 6}[variant]
    for fib in X.fibrations:
        rep = validate(fib.torsor)
        if not rep.valid:
            raise InvariantError(f"fibration {fib.index + 1}: " + "; ".join(rep.violations))
        if rep.n != expected_n:
            raise InvariantError(f"fibration {fib.index + 1}: deg Delta = {rep.n}, expected {expected_n}")
    if certify and not _smooth_certificate(X.singular_certificate_polys(), X.xs if variant != "dp2" else X.xs[1:]):
        raise InvariantError("surface is singular (Groebner certificate failed)")
    return X


def load_surface(path_or_name) -> DelPezzoSurface:
    p = Path(path_or_name)
    if not p.exists():
        p = FIXTURE_DIR / f"{path_or_name}.json"
    try:
        d = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise FixtureError(f"cannot read fixture {path_or_name}: {err}") from err
    return _cached_surface(json.dumps(d, sort_keys=True))


@lru_cache(maxsize=16)
def _cached_surface(blob: str) -> DelPezzoSurface:
    return surface_from_dict(json.loads(blob))


# ---------------------------------------------------------------------------
# counting

def exceptional_filter(points, curves, X: DelPezzoSurface | None = None) -> tuple:
    """(kept, removed) for the listed curves, each curve a tuple of equation strings."""
    if not curves:
        return list(points), 0
    names = X.var_names if X is not None else None
    fns = []
    for c in curves:
        eqs = c.equations if isinstance(c, Curve) else tuple(c)
        syms = sympy.symbols(" ".join(names)) if names else None
        fns.append(sympy.lambdify(syms, [sympy.sympify(e) for e in eqs], "math"))
    kept, removed = [], 0
    for P in points:
        if any(all(v == 0 for v in fn(*P)) for fn in fns):
            removed += 1
        else:
            kept.append(P)
    return kept, removed


def _fiber_task(args):
    blob, i, pairs, B, fiber_mode = args
    X = _cached_surface(blob)
    fib = X.fibrations[i]
    found = set()
    stats = {"fibers": 0, "degenerate": 0, "insoluble": 0, "fiber_points": 0}
    for u, v in pairs:
        if fib.delta(u, v) == 0:
            stats["degenerate"] += 1
            continue
        stats["fibers"] += 1
        Q = fib.torsor.fiber_form(u, v)
        if not is_soluble(Q):
            stats["insoluble"] += 1
            continue
        box = X.fiber_box(i, u, v, B)
        pts = count_in_box(Q, box, fiber_mode)
        stats["fiber_points"] += len(pts)
        for w in pts:
            for P in X.lift(i, u, v, w):
                if X.height(P) <= B and not X.structural_exceptional(P):
                    found.add(P)
    return found, stats


def count_points(X: DelPezzoSurface, B: int, method: str = "fibration", threads: int = 1,
                 fiber_mode: str = "brute", timings: dict | None = None) -> tuple:
    """(sorted points of U with H <= B, report row)."""
    B = int(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    t0 = time.perf_counter()
    row = {"B": B, "method": method, "surface": X.name, "variant": X.variant,
           "u_filter": "structural+listed" if X.curves else "structural"}
    if method == "brute":
        pts = {P for P in X.brute_points(B) if not X.structural_exceptional(P)}
    elif method == "fibration":
        blob = json.dumps(X.to_dict(), sort_keys=True)
        hmax = X.fiber_height_bound(B)
        pairs = [tuple(int(c) for c in r.coords) for r in enumerate_P1(hmax)]
        tasks = []
        nchunk = max(1, threads) * 4 if threads > 1 else 1
        from .parallel import chunked, ordered_map
        for i in range(X.m):
            for chunk in chunked(pairs, nchunk):
                tasks.append((blob, i, chunk, B, fiber_mode))
        results = ordered_map(_fiber_task, tasks, threads)
        pts = set()
        stats = {"fibers": 0, "degenerate": 0, "insoluble": 0, "fiber_points": 0}
        for found, st in results:
            pts |= found
            for k in stats:
                stats[k] += st[k]
        row.update(stats)
        row["fiber_height_bound"] = hmax
        row["c1_power_m"] = str(X.functoriality_constant())
    else:
        raise ValueError(f"unknown method {method!r}")
    kept, removed = exceptional_filter(sorted(pts), X.curves, X)
    pts = tuple(kept)
    row["removed_listed"] = removed
    row["N"] = len(pts)
    if timings is not None:
        timings[f"{X.name}:{method}:{B}"] = time.perf_counter() - t0
    return pts, row


def fiber_cover_complete(X: DelPezzoSurface, points) -> list:
    """Points violating min_i H(f_i(P))^m <= C H(P)^e (should be empty)."""
    C = X.functoriality_constant()
    bad = []
    for P in points:
        hs = [max(abs(a) for a in X.fibration(i, P)) for i in range(X.m)]
        H = X.height(P)
        if not min(hs) ** X.m <= C * H ** X.e:
            bad.append(P)
    return bad


def functoriality_violations(X: DelPezzoSurface, points) -> list:
    """Points violating prod_i H(f_i(P)) <= C H(P)^e."""
    C = X.functoriality_constant()
    bad = []
    for P in points:
        prod = 1
        for i in range(X.m):
            prod *= max(abs(a) for a in X.fibration(i, P))
        if not prod <= C * X.height(P) ** X.e:
            bad.append(P)
    return bad
