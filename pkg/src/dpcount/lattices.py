"""Integer lattices, local congruence conditions and successive minima.

Lattices over an imaginary quadratic field are flattened to Z-lattices of
rank 2n through the integral basis (1, omega); coordinates are interleaved
as (a_1, b_1, a_2, b_2, ...).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .numfield import NumberField, RingElement, _xgcd, norm_elem

QQ = NumberField()


class ResourceError(RuntimeError):
    """An enumeration exceeded its node budget."""


DEFAULT_BUDGET = 2_000_000


# ---------------------------------------------------------------------------
# integer linear algebra

def hnf(rows: Sequence[Sequence[int]], n: int) -> tuple:
    """Upper-triangular Hermite normal form of a full-rank lattice in Z^n."""
    work = [list(map(int, r)) for r in rows if any(r)]
    out = []
    for col in range(n):
        piv = None
        rest = []
        for r in work:
            if r[col] == 0:
                rest.append(r)
            elif piv is None:
                piv = r
            else:
                g, s, t = _xgcd(piv[col], r[col])
                a, b = piv[col] // g, r[col] // g
                new_piv = [s * x + t * y for x, y in zip(piv, r)]
                other = [a * y - b * x for x, y in zip(piv, r)]
                piv = new_piv
                if any(other):
                    rest.append(other)
        if piv is None:
            raise ValueError("lattice is not of full rank")
        if piv[col] < 0:
            piv = [-x for x in piv]
        out.append(piv)
        work = rest
    # reduce entries above each pivot
    for i in range(n):
        for k in range(i):
            q = out[k][i] // out[i][i]
            if q:
                out[k] = [x - q * y for x, y in zip(out[k], out[i])]
    return tuple(tuple(r) for r in out)


def det_int(m: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [list(map(int, r)) for r in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def adjugate(m: Sequence[Sequence[int]]) -> list:
    n = len(m)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[m[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            adj[j][i] = (-1) ** (i + j) * det_int(minor)
    return adj


def rank_frac(vectors: Sequence[Sequence]) -> int:
    rows = [[Fraction(x) for x in v] for v in vectors]
    rank, ncol = 0, len(rows[0]) if rows else 0
    for c in range(ncol):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def minors_gcd(m: Sequence[Sequence[int]], k: int) -> int:
    n = len(m)
    g = 0
    for rs in itertools.combinations(range(n), k):
        for cs in itertools.combinations(range(len(m[0])), k):
            g = math.gcd(g, det_int([[m[r][c] for c in cs] for r in rs]))
    return g


def elementary_divisors(m: Sequence[Sequence[int]]) -> list:
    """Invariant factors of a square integer matrix from determinantal divisors."""
    n = len(m)
    out, prev = [], 1
    for k in range(1, n + 1):
        dk = minors_gcd(m, k)
        if dk == 0:
            out.append(0)
            continue
        out.append(dk // prev)
        prev = dk
    return out


# ---------------------------------------------------------------------------
# lattices

@dataclass(frozen=True)
class IntegerLattice:
    basis: tuple  # HNF rows
    field: NumberField = QQ

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def rank(self) -> int:
        """Rank over the base field."""
        return self.dim // self.field.degree

    @property
    def det(self) -> int:
        out = 1
        for i, r in enumerate(self.basis):
            out *= r[i]
        return out

    @classmethod
    def from_generators(cls, gens, n: int, field: NumberField = QQ) -> "IntegerLattice":
        return cls(hnf(gens, n), field)

    @classmethod
    def standard(cls, n: int, field: NumberField = QQ) -> "IntegerLattice":
        m = n * field.degree
        return cls(tuple(tuple(int(i == j) for j in range(m)) for i in range(m)), field)

    def __contains__(self, v) -> bool:
        v = list(map(int, v))
        for i, r in enumerate(self.basis):
            q, rem = divmod(v[i], r[i])
            if rem:
                return False
            if q:
                v = [x - q * y for x, y in zip(v, r)]
        return not any(v)

    def contains_lattice(self, other: "IntegerLattice") -> bool:
        return all(b in self for b in other.basis)

    def intersect_rows(self, rows) -> "IntegerLattice":
        return IntegerLattice(hnf(congruence_basis(rows, self.dim, start=self.basis), self.dim), self.field)


def congruence_basis(rows, n: int, start=None) -> list:
    """Basis (as rows) of {x in start : c.x = 0 mod m for every (c, m) in rows}.

    Each congruence is imposed by a unimodular change of basis that isolates
    the gcd of the values c.b_j in one vector, which is then scaled.
    """
    basis = [list(r) for r in (start if start is not None else np.eye(n, dtype=int).tolist())]
    for coeffs, m in rows:
        m = int(m)
        if m == 1:
            continue
        vals = [sum(int(c) * x for c, x in zip(coeffs, b)) % m for b in basis]
        # bring the row's value vector to (g, 0, ..., 0)
        k0 = next((k for k, v in enumerate(vals) if v), None)
        if k0 is None:
            continue
        basis[0], basis[k0] = basis[k0], basis[0]
        vals[0], vals[k0] = vals[k0], vals[0]
        for j in range(1, len(basis)):
            if vals[j] == 0:
                continue
            g, s, t = _xgcd(vals[0], vals[j])
            a, b = vals[0] // g, vals[j] // g
            b0, bj = basis[0], basis[j]
            basis[0] = [s * x + t * y for x, y in zip(b0, bj)]
            basis[j] = [a * y - b * x for x, y in zip(b0, bj)]
            vals[0], vals[j] = g, 0
        f = m // math.gcd(vals[0], m)
        basis[0] = [f * x for x in basis[0]]
    return basis


def lattice_from_congruences(rows, n: int) -> IntegerLattice:
    return IntegerLattice(hnf(congruence_basis(rows, n), n))


@dataclass(frozen=True)
class LocalCondition:
    """Congruence rows (coeffs, e) at a prime: sum c_i x_i = 0 mod prime^e."""
    prime: object
    rows: tuple

    def __post_init__(self):
        for coeffs, e in self.rows:
            if e < 1:
                raise ValueError("exponents must be >= 1")
        if isinstance(self.prime, RingElement):
            if norm_elem(self.prime) < 2:
                raise ValueError("prime must be a non-unit")
        elif abs(int(self.prime)) < 2:
            raise ValueError("prime must be a non-unit")

    @property
    def exponent(self) -> int:
        return max((e for _, e in self.rows), default=0)


def _flatten_rows(cond: LocalCondition, n: int, field: NumberField) -> list:
    """Turn o-congruences into Z-congruences on the flattened coordinates.

    For a modulus P = pi^e in o, y is divisible by P iff adj(mat P).vec(y) = 0
    mod N(P), where mat P is the multiplication matrix of P.
    """
    out = []
    pi = field.coerce(cond.prime)
    for coeffs, e in cond.rows:
        P = pi ** e
        NP = P.norm()
        cs = [field.coerce(c) for c in coeffs]
        # y = sum c_i x_i, with x_i = a_i + b_i w; columns of mult-by-c matrices
        lin = [[0] * (2 * n) for _ in range(2)]
        for i, c in enumerate(cs):
            col_a = c
            col_b = c * field.omega
            lin[0][2 * i], lin[1][2 * i] = col_a.a, col_a.b
            lin[0][2 * i + 1], lin[1][2 * i + 1] = col_b.a, col_b.b
        # multiplication matrix of P and its adjugate
        Pw = P * field.omega
        m = [[P.a, Pw.a], [P.b, Pw.b]]
        adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
        for r in range(2):
            row = [adj[r][0] * lin[0][j] + adj[r][1] * lin[1][j] for j in range(2 * n)]
            out.append((row, NP))
    return out


def from_local(conditions: Sequence[LocalCondition], n: int, field: NumberField = QQ) -> IntegerLattice:
    """Lattice with the given local conditions and o_v^n at all other places."""
    primes = [c.prime for c in conditions]
    keys = [(p.a, p.b) if isinstance(p, RingElement) else int(p) for p in primes]
    if len(set(keys)) != len(keys):
        raise ValueError("conditions must sit at distinct primes")
    m = n * field.degree
    rows = []
    for cond in conditions:
        if field.d == 1:
            p = int(cond.prime.a if isinstance(cond.prime, RingElement) else cond.prime)
            rows.extend(([int(c) for c in coeffs], p ** e) for coeffs, e in cond.rows)
        else:
            rows.extend(_flatten_rows(cond, n, field))
    if not rows:
        return IntegerLattice.standard(n, field)
    return IntegerLattice(hnf(congruence_basis(rows, m), m), field)


# ---------------------------------------------------------------------------
# reduction and exact box enumeration

def lll_reduce(basis: Sequence[Sequence[int]], scale: Sequence[float] | None = None, delta: float = 0.75) -> list:
    """LLL in floating point on rows scaled by `scale`; integer row operations only.

    Output spans the same lattice; floating error only affects how well reduced
    the result is, never the lattice itself.
    """
    b = [list(map(int, r)) for r in basis]
    n = len(b)
    if n <= 1:
        return b
    sc = np.asarray(scale if scale is not None else [1.0] * len(b[0]), dtype=float)

    def fl(r):
        return np.array([float(x) for x in r]) * sc

    k = 1
    it = 0
    while k < n:
        it += 1
        if it > 10000:
            break
        B = np.array([fl(r) for r in b])
        # Gram-Schmidt
        bs = np.zeros_like(B)
        mu = np.zeros((n, n))
        for i in range(n):
            v = B[i].copy()
            for j in range(i):
                den = bs[j] @ bs[j]
                mu[i, j] = (B[i] @ bs[j]) / den if den else 0.0
                v -= mu[i, j] * bs[j]
            bs[i] = v
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                mu[k, :j] -= q * mu[j, :j]
                mu[k, j] -= q
        nk = bs[k] @ bs[k]
        nk1 = bs[k - 1] @ bs[k - 1]
        if nk >= (delta - mu[k, k - 1] ** 2) * nk1:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            k = max(k - 1, 1)
    return b


def box_points(basis: Sequence[Sequence[int]], R: Sequence[int], budget: int = DEFAULT_BUDGET,
               adj=None, det=None) -> list:
    """All lattice vectors x (including 0) with |x_i| <= R_i, exactly.

    The outer coefficients are bounded through the inverse basis; the
    innermost coefficient runs over an exact integer interval.
    """
    n = len(basis)
    if det is None:
        det = det_int(basis)
    if adj is None:
        adj = adjugate(basis)
    ad = abs(det)
    # c = x B^{-1},  c_k = sum_i x_i adj[i][k] / det
    bounds = [sum(abs(adj[i][k]) * R[i] for i in range(len(R))) // ad for k in range(n)]
    nodes = 1
    for k in range(1, n):
        nodes *= 2 * bounds[k] + 1
        if nodes > budget:
            raise ResourceError(f"box enumeration needs {nodes} nodes")
    out = []
    b0 = basis[0]
    dim = len(b0)
    ranges = [range(-bounds[k], bounds[k] + 1) for k in range(1, n)]
    for cs in itertools.product(*ranges):
        s = [0] * dim
        for c, b in zip(cs, basis[1:]):
            if c:
                for i in range(dim):
                    s[i] += c * b[i]
        lo, hi = -bounds[0], bounds[0]
        ok = True
        for i in range(dim):
            bi = b0[i]
            if bi == 0:
                if abs(s[i]) > R[i]:
                    ok = False
                    break
                continue
            if bi > 0:
                lo = max(lo, -((R[i] + s[i]) // bi))
                hi = min(hi, (R[i] - s[i]) // bi)
            else:
                lo = max(lo, -((R[i] - s[i]) // (-bi)))
                hi = min(hi, (R[i] + s[i]) // (-bi))
            if lo > hi:
                ok = False
                break
        if not ok:
            continue
        for c0 in range(lo, hi + 1):
            out.append(tuple(c0 * b0[i] + s[i] for i in range(dim)))
    return out


# ---------------------------------------------------------------------------
# successive minima

@dataclass(frozen=True)
class BoxRegion:
    """Per-coordinate radii at the infinite place (squared-modulus radii over
    an imaginary quadratic field)."""
    radii: tuple

    def volume(self, field: NumberField = QQ) -> tuple:
        """(lower, upper) rational bounds on Vol(S_v) in the measure doubling Lebesgue measure at complex places."""
        if field.d == 1:
            v = Fraction(1)
            for r in self.radii:
                v *= 2 * Fraction(r)
            return v, v
        lo = hi = Fraction(1)
        for r in self.radii:
            lo *= 2 * Fraction(314159, 100000) * Fraction(r)
            hi *= 2 * Fraction(314160, 100000) * Fraction(r)
        return lo, hi


@dataclass
class Minima:
    values: tuple      # lambda_i^d, exact
    witnesses: tuple   # flattened integer vectors
    field: NumberField = QQ
    nodes: int = 0


def _gauge(v, radii, field) -> Fraction:
    if field.d == 1:
        return max(Fraction(abs(x)) / Fraction(r) for x, r in zip(v, radii))
    return max(Fraction(field.elem(v[2 * i], v[2 * i + 1]).norm()) / Fraction(r)
               for i, r in enumerate(radii))


def _k_rank(vecs, field) -> int:
    if field.d == 1:
        return rank_frac(vecs) if vecs else 0
    ext = []
    for v in vecs:
        ext.append(v)
        w = []
        for i in range(len(v) // 2):
            e = field.elem(v[2 * i], v[2 * i + 1]) * field.omega
            w += [e.a, e.b]
        ext.append(w)
    return rank_frac(ext) // 2 if ext else 0


def _coord_bounds(T: Fraction, radii, field) -> list:
    """Integer box in flattened coordinates enclosing the gauge-T region."""
    if field.d == 1:
        return [math.floor(T * Fraction(r)) for r in radii]
    out = []
    dd = -field.d
    for r in radii:
        Rn = math.floor(T * Fraction(r))  # norm bound
        if field.half_omega:
            bb = math.isqrt(4 * Rn // dd)
            aa = math.isqrt(Rn) + bb // 2 + 1
        else:
            bb = math.isqrt(Rn // dd)
            aa = math.isqrt(Rn)
        out += [aa, bb]
    return out


def _int_kernel(vecs, dim) -> list:
    """Integer basis of the orthogonal complement of the rational span of vecs."""
    if not vecs:
        return [[int(i == j) for j in range(dim)] for i in range(dim)]
    import sympy
    ns = sympy.Matrix(vecs).nullspace()
    out = []
    for v in ns:
        den = 1
        for x in v:
            den = math.lcm(den, sympy.fraction(x)[1])
        out.append([int(x * den) for x in v])
    return out


def _span_vectors(vecs, field) -> list:
    """Real spanning set of the k-span of vecs (flattened coordinates)."""
    if field.d == 1:
        return [list(v) for v in vecs]
    out = []
    for v in vecs:
        out.append(list(v))
        w = []
        for i in range(len(v) // 2):
            e = field.elem(v[2 * i], v[2 * i + 1]) * field.omega
            w += [e.a, e.b]
        out.append(w)
    return out


def _argmin_convex(f, lo: int, hi: int):
    """Integer minimizer of a convex function on [lo, hi]."""
    while lo < hi:
        mid = (lo + hi) // 2
        if f(mid + 1) < f(mid):
            lo = mid + 1
        else:
            hi = mid
    return lo


def successive_minima(lat: IntegerLattice, S: BoxRegion, budget: int = DEFAULT_BUDGET,
                      cap=None) -> Minima:
    """Exact successive minima of lat with respect to the box S.

    Over Q the values are lambda_i; over an imaginary quadratic field they are
    lambda_i^2 (the normalized absolute value of the dilation factor).

    Stage j scans the outer coefficients of an LLL-reduced basis within exact
    bounds and, on each line in the direction of the inner basis vector,
    minimizes the convex gauge exactly while avoiding the span of the earlier
    witnesses.

    With cap set, only the minima not exceeding cap are computed, so the
    result may hold fewer than rank values.
    """
    field = lat.field
    n = lat.rank
    dim = lat.dim
    radii = tuple(Fraction(r) for r in S.radii)
    if field.d == 1:
        scale = [1.0 / float(r) for r in radii]
    else:
        scale = [x for r in radii for x in (1.0 / math.sqrt(float(r)),) * 2]
    red = lll_reduce(lat.basis, scale)
    det = det_int(red)
    adj = adjugate(red)
    ad = abs(det)
    gauges = [_gauge(b, radii, field) for b in red]
    witnesses: list = []
    values: list = []
    nodes = 0
    b0 = red[0]
    for j in range(n):
        span = _span_vectors(witnesses, field)
        normals = _int_kernel(span, dim) if span else None
        cand = [g for b, g in zip(red, gauges) if _k_rank(witnesses + [list(b)], field) > len(witnesses)]
        T = max([min(cand)] + values[-1:])
        if cap is not None:
            T = min(T, Fraction(cap))
        R = _coord_bounds(T, radii, field)
        bounds = [sum(abs(adj[i][k]) * R[i] for i in range(dim)) // ad for k in range(dim)]
        combos = 1
        for k in range(1, dim):
            combos *= 2 * bounds[k] + 1
        nodes += combos
        if nodes > budget:
            raise ResourceError("successive minima enumeration exceeded budget")
        nb0 = [sum(a * b for a, b in zip(nv, b0)) for nv in normals] if normals else None
        best = None
        for cs in itertools.product(*[range(-bounds[k], bounds[k] + 1) for k in range(1, dim)]):
            s = [0] * dim
            for c, b in zip(cs, red[1:]):
                if c:
                    for i in range(dim):
                        s[i] += c * b[i]
            lo, hi = -bounds[0], bounds[0]
            ok = True
            for i in range(dim):
                bi = b0[i]
                if bi > 0:
                    lo = max(lo, -((R[i] + s[i]) // bi))
                    hi = min(hi, (R[i] - s[i]) // bi)
                elif bi < 0:
                    lo = max(lo, -((R[i] - s[i]) // (-bi)))
                    hi = min(hi, (R[i] + s[i]) // (-bi))
                elif abs(s[i]) > R[i]:
                    ok = False
                    break
                if lo > hi:
                    ok = False
                    break
            if not ok:
                continue
            # which c0 (if any) put the vector inside the excluded span
            if normals is None:
                excl = 0 if not any(s) else None
                if excl is not None and not any(b0):
                    continue
            else:
                ns = [sum(a * b for a, b in zip(nv, s)) for nv in normals]
                if all(v == 0 for v in nb0):
                    if all(v == 0 for v in ns):
                        continue
                    excl = None
                else:
                    excl = None
                    c_try = None
                    consistent = True
                    for a, b in zip(nb0, ns):
                        if a == 0:
                            if b != 0:
                                consistent = False
                                break
                            continue
                        if b % a:
                            consistent = False
                            break
                        c = -b // a
                        if c_try is None:
                            c_try = c
                        elif c_try != c:
                            consistent = False
                            break
                    if consistent and c_try is not None:
                        excl = c_try

            def f(c0, s=s):
                return _gauge([c0 * b0[i] + s[i] for i in range(dim)], radii, field)

            pieces = [(lo, hi)]
            if excl is not None and lo <= excl <= hi:
                pieces = [(lo, excl - 1), (excl + 1, hi)]
            for a, b in pieces:
                if a > b:
                    continue
                c0 = _argmin_convex(f, a, b)
                g = f(c0)
                if g <= T and (best is None or g < best[0]):
                    best = (g, [c0 * b0[i] + s[i] for i in range(dim)])
        if best is None and cap is not None:
            break
        if best is None:
            raise AssertionError("no independent vector below the bound")
        witnesses.append(best[1])
        values.append(best[0])
    return Minima(tuple(values), tuple(tuple(w) for w in witnesses), field, nodes)


def minkowski_check(m: Minima, S: BoxRegion, det: int) -> tuple:
    """Squares of both sides of (lambda_1...lambda_n)^d Vol(S) <= 2^{nd} |D_k|^{n/2} [o^n : L].

    Vol is taken in the measure that doubles Lebesgue measure at a complex
    place, under which o has covolume |D_k|^{1/2}; squaring keeps that factor
    rational.  Over Q the discriminant factor is 1.
    """
    field = m.field
    prod = Fraction(1)
    for v in m.values:
        prod *= v
    _, vol_hi = S.volume(field)
    n = len(m.values)
    D = abs(field.discriminant)
    return (prod * vol_hi) ** 2, Fraction(4 ** (n * field.degree) * D ** n * det * det)


def scale_inclusion(L: IntegerLattice, G: IntegerLattice) -> Fraction:
    """a = 1/e with e the largest elementary divisor of L inside G, so G is in aL."""
    if not G.contains_lattice(L):
        raise ValueError("L is not contained in G")
    Gb = [list(r) for r in G.basis]
    adj = adjugate(Gb)
    d = det_int(Gb)
    T = []
    for row in L.basis:
        coords = [sum(row[i] * adj[i][k] for i in range(len(row))) for k in range(len(Gb))]
        if any(c % d for c in coords):
            raise AssertionError("non-integral transition matrix")
        T.append([c // d for c in coords])
    e = elementary_divisors(T)[-1]
    return Fraction(1, abs(e))


def lattice_index(L: IntegerLattice, G: IntegerLattice) -> int:
    return L.det // G.det
