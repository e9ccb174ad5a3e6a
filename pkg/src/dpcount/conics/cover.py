"""Lattice covers for diagonal equations a1 x1^t + a2 x2^t + a3 x3^t = 0.

The local construction at a prime p follows the case analysis on the
exponents alpha_1 <= alpha_2 <= alpha_3 of the coefficients: one lattice for
solutions where the third term dominates, and one lattice per admissible
exponent eta and t-th root residue otherwise.  Forms are reduced to this
shape by p-adic diagonalization at odd primes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..lattices import (DEFAULT_BUDGET, IntegerLattice, LocalCondition, ResourceError,
                        adjugate, congruence_basis, det_int, hnf)
from ..numfield import delta_t, factor_integer
from .forms import TernaryQuadraticForm, is_soluble


def _ord(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("ord of zero")
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k


def t_th_roots(c: int, t: int, p: int, m: int) -> list:
    """All r mod p^m with r^t = c mod p^m (c a unit mod p)."""
    if m <= 0:
        return [0]
    pm = p ** m
    if pm <= 4096:
        return [r for r in range(pm) if r % p and pow(r, t, pm) == c % pm]
    roots = [r for r in range(1, p) if pow(r, t, p) == c % p] if p < 5000 else _roots_mod_p(c, t, p)
    mod = p
    for k in range(1, m):
        nxt = mod * p
        if t % p:
            # simple roots lift uniquely by one Newton step
            new = []
            for r in roots:
                f = (pow(r, t, nxt) - c) % nxt
                d = t * pow(r, t - 1, p) % p
                new.append((r - f * pow(d, -1, p)) % nxt)
            roots = new
        else:
            roots = [r + j * mod for r in roots for j in range(p) if pow(r + j * mod, t, nxt) == c % nxt]
        mod = nxt
    return sorted(roots)


def _roots_mod_p(c: int, t: int, p: int) -> list:
    from sympy.ntheory import nthroot_mod
    rs = nthroot_mod(c % p, t, p, all_roots=True)
    return sorted(int(r) for r in (rs or []))


@dataclass
class LocalFamily:
    """Cover of the solutions at one prime, in the caller's coordinates."""
    prime: int
    t: int
    coeffs: tuple
    alphas: tuple          # sorted exponents
    perm: tuple            # perm[k] = original index of sorted coordinate k
    gamma: int
    members: list          # list of tuples of (coeffs, exponent) rows
    dets: list
    info: dict = field(default_factory=dict)

    @property
    def J(self) -> int:
        return len(self.members)

    def k_bound(self) -> int:
        a3 = self.alphas[2]
        if self.gamma == 0:
            return a3 - 1 + self.t
        return (a3 - 1 + self.t) * self.prime ** (self.gamma + 1)

    def conditions(self, j: int) -> LocalCondition:
        return LocalCondition(self.prime, tuple(self.members[j]))


def _lattice_det(rows, p: int) -> int:
    if not rows:
        return 1
    basis = congruence_basis([(c, p ** e) for c, e in rows], 3)
    return abs(det_int(basis))


def fermat_local(a: Sequence[int], t: int, p: int) -> LocalFamily:
    """Local lattices at p covering every x with sum a_i x_i^t = 0 mod p^alpha_3."""
    if t < 2:
        raise ValueError("t >= 2 required")
    a = tuple(int(v) for v in a)
    if any(v == 0 for v in a):
        raise ValueError("coefficients must be nonzero")
    al = [_ord(v, p) for v in a]
    perm = tuple(sorted(range(3), key=lambda i: (al[i], i)))
    a1, a2, a3 = (al[i] for i in perm)
    e1, e2 = (a[perm[0]] // p ** a1, a[perm[1]] // p ** a2)
    gamma = 2 * _ord(t, p) if t % p == 0 else 0

    def row(c_sorted, e):
        c = [0, 0, 0]
        for k, v in enumerate(c_sorted):
            c[perm[k]] = v
        return (tuple(c), e)

    members, info = [], {"case2": []}
    if a3 == 0:
        fam = LocalFamily(p, t, a, (a1, a2, a3), perm, gamma, [()], [1], info)
        return fam
    # Case I lattice
    L1 = []
    for k, ak in ((0, a1), (1, a2)):
        ek = max(0, -((-(a3 - ak - gamma)) // t))
        if ek > 0:
            unit = [0, 0, 0]
            unit[k] = 1
            L1.append(row(unit, ek))
    # Case II lattices
    case2 = []
    if (a2 - a1) % t == 0:
        eta = a2
        while eta < a3:
            m = a3 - eta
            if m > gamma:
                xi1, xi2 = (eta - a1) // t, (eta - a2) // t
                pm = p ** m
                c = (-e2 * pow(e1, -1, pm)) % pm
                for r in t_th_roots(c, t, p, m):
                    rows = []
                    if xi1:
                        rows.append(row((1, 0, 0), xi1))
                    if xi2:
                        rows.append(row((0, 1, 0), xi2))
                    rows.append(row((p ** xi2, -r * p ** xi1, 0), m + xi1 + xi2))
                    case2.append(tuple(rows))
                    info["case2"].append({"eta": eta, "xi": (xi1, xi2), "r": r, "modexp": m})
            eta += t
    # L1 is dropped when some Case II lattice already contains it
    keep_L1 = True
    if case2:
        L1_basis = congruence_basis([(c, p ** e) for c, e in L1], 3)
        for rows in case2:
            lat = IntegerLattice(hnf(congruence_basis([(c, p ** e) for c, e in rows], 3), 3))
            if all(tuple(b) in lat for b in L1_basis):
                keep_L1 = False
                break
    if keep_L1:
        members.append(tuple(L1))
    members.extend(case2)
    dets = [_lattice_det(m, p) for m in members]
    info["L1_included"] = keep_L1
    return LocalFamily(p, t, a, (a1, a2, a3), perm, gamma, members, dets, info)


@dataclass
class LatticeCoverFamily:
    coeffs: tuple
    t: int
    locals: list          # LocalFamily per prime
    field_degree: int = 1

    @property
    def J(self) -> int:
        out = 1
        for f in self.locals:
            out *= f.J
        return out

    @property
    def delta(self) -> int:
        a1, a2, a3 = self.coeffs
        return abs(a1 * a2 * a3)

    @property
    def delta0(self) -> int:
        a1, a2, a3 = self.coeffs
        return math.gcd(math.gcd(a1 * a2, a2 * a3), a3 * a1)

    def members(self):
        """Global lattices as lists of LocalCondition, one choice per prime."""
        for choice in itertools.product(*[range(f.J) for f in self.locals]):
            yield [f.conditions(j) for f, j in zip(self.locals, choice) if f.members[j]]

    def dets(self):
        for choice in itertools.product(*[f.dets for f in self.locals]):
            out = 1
            for d in choice:
                out *= d
            yield out

    def lattices(self):
        from ..lattices import from_local
        for conds in self.members():
            yield from_local(conds, 3)


def fermat_cover(a1: int, a2: int, a3: int, t: int, p: int | None = None) -> LatticeCoverFamily:
    """Cover of the solutions of a1 x1^t + a2 x2^t + a3 x3^t = 0.

    With p given only that prime is treated; otherwise every prime dividing
    a1 a2 a3 contributes and the global lattices are the CRT products.
    """
    coeffs = (int(a1), int(a2), int(a3))
    if any(c == 0 for c in coeffs):
        raise ValueError("coefficients must be nonzero")
    if p is not None:
        primes = [p] if (coeffs[0] * coeffs[1] * coeffs[2]) % p == 0 else []
    else:
        n = abs(coeffs[0] * coeffs[1] * coeffs[2])
        primes = sorted(factor_integer(n)) if n > 1 else []
    return LatticeCoverFamily(coeffs, t, [fermat_local(coeffs, t, q) for q in primes])


# ---------------------------------------------------------------------------
# verification

def _orbit_reps(p: int, A: int):
    """Representatives of nonzero (x1, x2) mod p^A up to unit scaling, plus zero."""
    xs1, xs2 = [np.zeros(1, dtype=np.int64)], [np.zeros(1, dtype=np.int64)]
    for m in range(A):
        n = p ** (A - m)
        y = np.arange(n, dtype=np.int64)
        pm = p ** m
        xs1.append(pm * y)
        xs2.append(np.full(n, pm, dtype=np.int64))
        y2 = np.arange(0, n, p, dtype=np.int64)
        xs1.append(np.full(y2.size, pm, dtype=np.int64))
        xs2.append(pm * y2)
    return np.concatenate(xs1), np.concatenate(xs2)


def _member_mask(rows, p, X):
    mask = np.ones(X[0].shape, dtype=bool)
    for c, e in rows:
        pe = p ** e
        val = np.zeros(X[0].shape, dtype=np.int64)
        for ci, xi in zip(c, X):
            ci %= pe
            if ci:
                val = (val + ci * (xi % pe)) % pe
        mask &= val == 0
    return mask


def verify_local(fam: LocalFamily, mode: str = "orbit", e: int | None = None, drop: int | None = None) -> dict:
    """Exhaustive check that every x with F(x) = 0 mod p^alpha_3 lies in the cover.

    'orbit' enumerates (x1, x2) modulo p^alpha_3 up to unit scaling (the
    conditions never involve the sorted third coordinate and are stable under
    units); 'full' enumerates all of (Z/p^e)^3.
    """
    p, t = fam.prime, fam.t
    a1, a2, a3 = fam.alphas
    A = max(a3, 1)
    perm = fam.perm
    members = [m for j, m in enumerate(fam.members) if j != drop]
    if mode == "orbit":
        P = p ** A
        y1, y2 = _orbit_reps(p, A)
        y3 = np.zeros_like(y1)
    else:
        e = e if e is not None else A + 1
        P = p ** e
        grid = np.arange(P, dtype=np.int64)
        y1, y2, y3 = (g.ravel() for g in np.meshgrid(grid, grid, grid, indexing="ij"))
    Y = (y1, y2, y3)
    X = [None, None, None]
    for k in range(3):
        X[perm[k]] = Y[k]
    PA = p ** a3
    Fv = np.zeros(y1.shape, dtype=np.int64)
    for i in range(3):
        ci = fam.coeffs[i] % PA if PA > 1 else 0
        xi = X[i] % PA if PA > 1 else X[i] * 0
        pw = np.ones_like(xi)
        for _ in range(t):
            pw = (pw * xi) % PA if PA > 1 else pw * 0
        Fv = (Fv + ci * pw) % PA if PA > 1 else Fv * 0
    sols = Fv == 0
    covered = np.zeros(y1.shape, dtype=bool)
    for rows in members:
        covered |= _member_mask(rows, p, X)
    bad = np.nonzero(sols & ~covered)[0]
    witness = None
    if bad.size:
        i = int(bad[0])
        witness = [int(X[0][i]), int(X[1][i]), int(X[2][i])]
    dets = [d for j, d in enumerate(fam.dets) if j != drop]
    expo = 2 * a3 - a1 - a2 - t * fam.gamma
    det_ok = all(d ** t * (p ** max(0, -expo)) >= p ** max(0, expo) for d in dets)
    return {
        "prime": p, "t": t, "alphas": list(fam.alphas), "gamma": fam.gamma,
        "J": len(members), "K_bound": fam.k_bound(), "J_ok": len(members) <= fam.k_bound(),
        "dets": dets, "det_ok": det_ok, "covered": bad.size == 0,
        "checked": int(sols.sum()), "witness": witness,
    }


def verify_cover(family: LatticeCoverFamily, mode: str = "orbit", e: int | None = None,
                 drop: tuple | None = None) -> dict:
    """Verify completeness at each prime and the two global bounds exactly.

    drop = (prime, index) removes one lattice, as a negative control.
    """
    reports = []
    for fam in family.locals:
        d = drop[1] if drop and drop[0] == fam.prime else None
        reports.append(verify_local(fam, mode, e, d))
    t = family.t
    J = 1
    for r in reports:
        J *= r["J"]
    N, N0 = family.delta, family.delta0
    J_bound = t ** (3 * family.field_degree) * delta_t(N, t) if N > 1 else t ** 3
    min_det = 1
    for r in reports:
        min_det *= min(r["dets"]) if r["dets"] else 1
    lhs = min_det ** t * t ** (2 * t * family.field_degree) * N0 ** 3
    det_ok = lhs >= N * N
    ok = all(r["covered"] for r in reports) and J <= J_bound and det_ok
    return {
        "coeffs": list(family.coeffs), "t": t, "J": J, "J_bound": J_bound, "J_ok": J <= J_bound,
        "min_det": min_det, "det_ok": det_ok, "locals": reports,
        "pass": ok and all(r["J_ok"] and r["det_ok"] for r in reports),
        "witness": next((r["witness"] for r in reports if r["witness"]), None),
    }


# ---------------------------------------------------------------------------
# diagonalization at odd primes and covers for general forms

def local_diagonalize(M, p: int, E: int) -> tuple:
    """(T, D) with D = T^T M T exact, off-diagonal entries of D divisible by p^E,
    and T invertible modulo p.  p must be odd."""
    if p == 2:
        raise ValueError("odd primes only")
    PE = p ** E
    A = [list(map(int, r)) for r in M]
    T = [[int(i == j) for j in range(3)] for i in range(3)]

    def v(x):
        return E if x % PE == 0 else _ord(x, p)

    def col_op(i, j, f):
        # column i += f * column j, and the matching row operation
        for r in range(3):
            T[r][i] += f * T[r][j]
        for r in range(3):
            A[r][i] += f * A[r][j]
        for c in range(3):
            A[i][c] += f * A[j][c]

    def swap(i, j):
        for r in range(3):
            T[r][i], T[r][j] = T[r][j], T[r][i]
        A[i], A[j] = A[j], A[i]
        for r in range(3):
            A[r][i], A[r][j] = A[r][j], A[r][i]

    for k in range(3):
        idx = [(i, j) for i in range(k, 3) for j in range(i, 3)]
        best = min(idx, key=lambda ij: (v(A[ij[0]][ij[1]]), ij[0] != ij[1], ij))
        vb = v(A[best[0]][best[1]])
        if vb >= E:
            break
        i, j = best
        if i != j:
            col_op(i, j, 1)
        swap(i, k)
        piv = A[k][k]
        vp = _ord(piv, p)
        u = piv // p ** vp
        uinv = pow(u, -1, PE)
        for j2 in range(k + 1, 3):
            w = A[k][j2]
            if w % PE == 0:
                continue
            f = -((w // p ** vp) * uinv) % PE
            col_op(j2, k, f)
    T = [[x % PE for x in r] for r in T]
    D = [[sum(T[a][i] * M[a][b] * T[b][j] for a in range(3) for b in range(3)) for j in range(3)] for i in range(3)]
    return T, D


def form_local_family(Q: TernaryQuadraticForm, p: int, E: int | None = None) -> LocalFamily:
    """Local cover at an odd prime for a general form, rows in original coordinates."""
    M = Q.matrix
    a = _ord(Q.det, p)
    E = E if E is not None else 2 * a + 2
    T, D = local_diagonalize(M, p, E)
    diag = [D[i][i] // 2 for i in range(3)]
    PE = p ** E
    diag = [d if d % PE else PE for d in diag]   # valuation >= E behaves like p^E
    fam = fermat_local(diag, 2, p)
    adj = adjugate(T)
    dT = det_int(T)
    Tinv = [[adj[i][j] * pow(dT, -1, PE) % PE for j in range(3)] for i in range(3)]
    members = []
    for rows in fam.members:
        new = []
        for c, e in rows:
            pe = p ** e
            cx = tuple(sum(c[k] * Tinv[k][j] for k in range(3)) % pe for j in range(3))
            new.append((cx, e))
        members.append(tuple(new))
    fam.members = members
    fam.info["diag"] = diag
    fam.coeffs = tuple(diag)
    return fam


# ---------------------------------------------------------------------------
# Counting by covers, an optional sieve prime, then the kernel

_LATTICE_COST = 250e-6      # seconds per lattice handled by the kernel
_ROW_COST = 12e-6           # seconds per vectorized brute row
_ELEM_COST = 25e-9


def _brute_cost(r) -> float:
    rs = sorted(int(v) for v in r)
    return (2 * rs[0] + 1) * (_ROW_COST + (2 * rs[1] + 1) * _ELEM_COST)


@dataclass
class CoverPlan:
    families: list
    sieve_prime: int | None
    n_lattices: int
    det_lower: int


def plan_cover(Q: TernaryQuadraticForm, r, fac: dict, target_factor: int = 8,
               max_lattices: int = 4096, sieve: bool = True) -> CoverPlan:
    R = 1
    for v in r:
        R *= int(v)
    target = target_factor * R
    fams = []
    for p in sorted(fac):
        if p == 2:
            continue
        fam = form_local_family(Q, p)
        if fam.J == 1 and fam.dets[0] == 1:
            continue
        fams.append(fam)
    # most determinant per lattice first
    fams.sort(key=lambda f: (-math.log(max(min(f.dets), 1)) / math.log(f.J + 1), f.prime))
    chosen, J, D = [], 1, 1
    for fam in fams:
        if D >= target:
            break
        if min(fam.dets) <= 1:
            continue
        if J * fam.J > max_lattices:
            continue
        chosen.append(fam)
        J *= fam.J
        D *= min(fam.dets)
    q = None
    if sieve and D < target:
        need = target / D
        q = _sieve_prime(Q, max(3, int(round(need ** (1 / 3)))), fac)
        if q is not None:
            J *= q + 1
            D *= q ** 3
    chosen.sort(key=lambda f: f.prime)
    return CoverPlan(chosen, q, J, D)


def _sieve_prime(Q, start: int, fac: dict):
    from sympy import nextprime
    q = max(3, start)
    if q not in (3,) and not _is_prime(q):
        q = int(nextprime(q))
    for _ in range(50):
        if q != 2 and Q.det % q:
            return q
        q = int(nextprime(q))
    return None


def _is_prime(n: int) -> bool:
    from sympy import isprime
    return bool(isprime(n))


def cover_points(Q: TernaryQuadraticForm, r, fac: dict | None = None, auto: bool = False,
                 sieve: bool = True, budget: int = DEFAULT_BUDGET, stats: dict | None = None) -> tuple:
    """Exact conic points in the box through determinant covers.

    Every integer zero of Q lies in one of the cover lattices at each chosen
    odd prime dividing det M; an extra sieve prime q (not dividing det M)
    splits the remaining freedom into the q + 1 residue classes of the conic
    mod q.  Each combined lattice is enumerated exactly by the kernel.
    """
    from .count import brute_points, lattice_points
    from .sieve import class_rows, conic_points_mod_p
    r = [int(v) for v in r]
    if fac is None:
        fac = factor_integer(Q.det)
    if not is_soluble(Q, fac):
        if stats is not None:
            stats["route"] = "insoluble"
        return ()
    plan = plan_cover(Q, r, fac, sieve=sieve)
    if auto and plan.n_lattices * _LATTICE_COST > _brute_cost(r):
        if stats is not None:
            stats["route"] = "brute"
        return brute_points(Q, r)
    if stats is not None:
        stats["route"] = "lattice"
        stats["lattices"] = plan.n_lattices
        stats["sieve_prime"] = plan.sieve_prime
    cover_rows = []
    for fam in plan.families:
        cover_rows.append([[(c, fam.prime ** e) for c, e in m] for m in fam.members])
    if plan.sieve_prime is not None:
        q = plan.sieve_prime
        cover_rows.append([class_rows(Q, x, q) for x in conic_points_mod_p(Q, q)])
    out = set()
    for choice in itertools.product(*cover_rows) if cover_rows else [()]:
        rows = [row for part in choice for row in part]
        basis = congruence_basis(rows, 3) if rows else [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        out.update(lattice_points(Q, basis, r, budget))
    return tuple(sorted(out))
