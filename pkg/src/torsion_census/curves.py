"""Elliptic curves y^2 = x^3 + A x + B over Q and their reductions mod p."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .arith import (
    Poly,
    exact_sqrt,
    factorize,
    integer_roots,
    is_perfect_square,
    lift_root,
    primes_up_to,
    rational_roots,
)


class SingularCurve(ValueError):
    pass


class BadReduction(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Curve:
    A: int
    B: int

    def __post_init__(self):
        if 4 * self.A ** 3 + 27 * self.B ** 2 == 0:
            raise SingularCurve(f"singular Weierstrass equation A={self.A}, B={self.B}")

    @property
    def disc(self) -> int:
        """4A^3 + 27B^2 (the discriminant up to the factor -16)."""
        return 4 * self.A ** 3 + 27 * self.B ** 2

    @property
    def is_minimal(self) -> bool:
        return minimality_defect(self.A, self.B) == 1

    @property
    def key(self) -> tuple[int, int]:
        return (self.A, self.B)

    def f(self, x):
        return x ** 3 + self.A * x + self.B

    def j_invariant(self) -> Fraction:
        return Fraction(1728 * 4 * self.A ** 3, self.disc)


def height(c: Curve) -> int:
    return max(abs(4 * c.A ** 3), 27 * c.B ** 2)


def height_naive(c: Curve) -> int:
    return max(abs(c.A ** 3), c.B ** 2)


HEIGHT_FUNCTIONS = {"standard": height, "naive": height_naive}


def height_of(A: int, B: int, kind: str = "standard") -> int:
    if kind == "standard":
        return max(abs(4 * A ** 3), 27 * B * B)
    if kind == "naive":
        return max(abs(A ** 3), B * B)
    raise ValueError(f"unknown height function {kind!r}")


# ---------------------------------------------------------------------------
# minimal models
# ---------------------------------------------------------------------------

def minimality_defect(A: int, B: int, primes: Sequence[int] | None = None) -> int:
    """Largest e with e^4 | A and e^6 | B.

    When ``primes`` is given only those primes are tried; the caller then
    vouches that no other prime can divide the defect.
    """
    if A == 0 and B == 0:
        raise SingularCurve("A = B = 0")
    if primes is None:
        g = math.gcd(A, B)
        if g in (0, 1):
            return 1
        primes = list(factorize(g))
    e = 1
    for p in primes:
        q4, q6 = p ** 4, p ** 6
        while A % q4 == 0 and B % q6 == 0:
            A //= q4
            B //= q6
            e *= p
    return e


def make_minimal(A: int, B: int, primes: Sequence[int] | None = None) -> tuple[Curve, int]:
    """Return the minimal model (A/e^4, B/e^6) and the defect e."""
    if 4 * A ** 3 + 27 * B ** 2 == 0:
        raise SingularCurve(f"singular Weierstrass equation A={A}, B={B}")
    e = minimality_defect(A, B, primes)
    return Curve(A // e ** 4, B // e ** 6), e


def quadratic_twist(c: Curve, d: int) -> Curve:
    """The twist d y^2 = x^3 + A x + B, in the model (d^2 A, d^3 B)."""
    if d == 0:
        raise ValueError("twist by zero")
    return Curve(d * d * c.A, d ** 3 * c.B)


# ---------------------------------------------------------------------------
# reduction mod p
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _chi_table(p: int) -> np.ndarray:
    """chi[v] = Legendre symbol (v|p) for v in [0, p)."""
    chi = -np.ones(p, dtype=np.int64)
    chi[0] = 0
    sq = (np.arange(1, p, dtype=np.int64) ** 2) % p
    chi[sq] = 1
    return chi


def is_good_prime(c: Curve, p: int) -> bool:
    return p > 3 and c.disc % p != 0


def count_points_mod_p(c: Curve, p: int) -> int:
    """#E(F_p) by the character sum p + 1 + sum_x (f(x)|p)."""
    if p < 3 or p % 2 == 0 or p > 10 ** 5 or any(p % q == 0 for q in range(3, math.isqrt(p) + 1, 2)):
        raise ValueError(f"p must be an odd prime below 1e5, got {p}")
    if c.disc % p == 0:
        raise BadReduction(f"p={p} divides the discriminant")
    x = np.arange(p, dtype=np.int64)
    vals = ((x * x % p) * x + (c.A % p) * x + (c.B % p)) % p
    return p + 1 + int(_chi_table(p)[vals].sum())


def count_points_batch(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """Vectorized #E(F_p) for arrays of residues A, B mod p (good reduction assumed)."""
    chi = _chi_table(p)
    a = np.asarray(A, dtype=np.int64) % p
    b = np.asarray(B, dtype=np.int64) % p
    total = np.full(a.shape, p + 1, dtype=np.int64)
    for x in range(p):
        total += chi[(x * x * x + a * x + b) % p]
    return total


def good_primes(c: Curve, lo: int = 37, hi: int = 1000, extra_bad: int = 1) -> Iterator[int]:
    bad = c.disc * 6 * extra_bad
    for p in primes_up_to(hi):
        if p > lo and bad % p:
            yield p


# ---------------------------------------------------------------------------
# division polynomials
# ---------------------------------------------------------------------------

# trivariate polynomials in (x, A, B) as dicts {(i, j, k): coeff}
def _tmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (i1, j1, k1), c1 in p.items():
        for (i2, j2, k2), c2 in q.items():
            key = (i1 + i2, j1 + j2, k1 + k2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _tadd(p: dict, q: dict, sign: int = 1) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v}


_F = {(3, 0, 0): 1, (1, 1, 0): 1, (0, 0, 1): 1}


@lru_cache(maxsize=None)
def _division_core(n: int) -> tuple:
    """F_n with psi_n = F_n for odd n and psi_n = y F_n for even n."""
    if n == 0:
        return ()
    if n == 1:
        return (((0, 0, 0), 1),)
    if n == 2:
        return (((0, 0, 0), 2),)
    if n == 3:
        return tuple({(4, 0, 0): 3, (2, 1, 0): 6, (1, 0, 1): 12, (0, 2, 0): -1}.items())
    if n == 4:
        base = {(6, 0, 0): 1, (4, 1, 0): 5, (3, 0, 1): 20, (2, 2, 0): -5,
                (1, 1, 1): -4, (0, 0, 2): -8, (0, 3, 0): -1}
        return tuple({k: 4 * v for k, v in base.items()}.items())
    F = lambda k: dict(_division_core(k))  # noqa: E731
    m = n // 2
    f2 = _tmul(_F, _F)
    if n % 2:
        t1 = _tmul(F(m + 2), _tmul(F(m), _tmul(F(m), F(m))))
        t2 = _tmul(F(m - 1), _tmul(F(m + 1), _tmul(F(m + 1), F(m + 1))))
        if m % 2 == 0:
            t1 = _tmul(t1, f2)
        else:
            t2 = _tmul(t2, f2)
        return tuple(_tadd(t1, t2, -1).items())
    inner = _tadd(_tmul(F(m + 2), _tmul(F(m - 1), F(m - 1))),
                  _tmul(F(m - 2), _tmul(F(m + 1), F(m + 1))), -1)
    res = _tmul(F(m), inner)
    return tuple((k, v // 2) for k, v in res.items())


@lru_cache(maxsize=None)
def division_polynomial_terms(n: int) -> tuple[tuple[tuple[int, int, int], ...], ...]:
    """For odd n: per x-degree i, the terms (A-exp, B-exp, coeff) of psi_n."""
    if n % 2 == 0:
        raise ValueError("only odd division polynomials are exposed")
    core = dict(_division_core(n))
    deg = max(i for i, _, _ in core)
    rows: list[list] = [[] for _ in range(deg + 1)]
    for (i, j, k), c in core.items():
        rows[i].append((j, k, c))
    return tuple(tuple(r) for r in rows)


def division_polynomial(c: Curve, n: int) -> Poly:
    """psi_n of the curve as an integer polynomial in x (odd n)."""
    return Poly(sum(co * c.A ** j * c.B ** k for j, k, co in row)
                for row in division_polynomial_terms(n))


# ---------------------------------------------------------------------------
# torsion
# ---------------------------------------------------------------------------

class TorsionClass(tuple):
    """Mazur group Z/n1 x Z/n2 with n1 | n2, stored as (n1, n2)."""

    MAZUR: tuple = ()

    def __new__(cls, n1: int, n2: int):
        return super().__new__(cls, (n1, n2))

    @property
    def order(self) -> int:
        return self[0] * self[1]

    @classmethod
    def parse(cls, text: str) -> "TorsionClass":
        text = text.replace(" ", "")
        if text in ("0", "1", "trivial"):
            return cls(1, 1)
        parts = [int(s.replace("Z/", "")) for s in text.split("x")]
        return cls(1, parts[0]) if len(parts) == 1 else cls(parts[0], parts[1])

    def __str__(self) -> str:
        if self[1] == 1:
            return "trivial"
        return f"Z/{self[1]}" if self[0] == 1 else f"Z/{self[0]}xZ/{self[1]}"

    def __repr__(self) -> str:
        return f"TorsionClass({str(self)!r})"


TorsionClass.MAZUR = tuple([TorsionClass(1, k) for k in (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12)]
                           + [TorsionClass(2, 2 * k) for k in (1, 2, 3, 4)])


def torsion_order_bound(c: Curve, nprimes: int = 8) -> int:
    """gcd of #E(F_p) over the first ``nprimes`` good primes in (37, 1000]."""
    g = 0
    for i, p in enumerate(good_primes(c)):
        if i >= nprimes:
            break
        g = math.gcd(g, count_points_mod_p(c, p))
        if g == 1:
            break
    return g


def _x_bound(c: Curve) -> int:
    """Bound on |x| for integral points with y^2 | disc (hence all torsion)."""
    return 2 * max(math.isqrt(abs(c.A)) + 1, _icbrt_ceil(abs(c.B) + 16 * abs(c.disc))) + 2


def _icbrt_ceil(n: int) -> int:
    from .arith import iroot

    r = iroot(n, 3)
    return r if r ** 3 == n else r + 1


def _integral_roots_via_prime(coeffs: list[int], c: Curve, bound: int, q: int = 0) -> list[int]:
    """Integer roots of a polynomial that is separable mod every good p not dividing its lc.

    A good prime p is chosen, roots mod p are found by evaluation and
    lifted p-adically; each lift is then checked exactly.
    """
    lc = coeffs[-1]
    chosen = None
    for p in good_primes(c, lo=3, hi=2000):
        if lc % p == 0 or (q and p % q == 0):
            continue
        if q and p % q != 1:
            chosen = p
            break
        if chosen is None:
            chosen = p
    p = chosen
    red = [x % p for x in coeffs]
    out = []
    for r in range(p):
        acc = 0
        for cc in reversed(red):
            acc = (acc * r + cc) % p
        if acc:
            continue
        x, m = lift_root(coeffs, r, p, 2 * bound + 1)
        if x > m // 2:
            x -= m
        acc = 0
        for cc in reversed(coeffs):
            acc = acc * x + cc
        if acc == 0:
            out.append(x)
    return out


def _halvings(c: Curve, x0: int) -> list[tuple[int, int]]:
    """Rational points R with x(2R) = x0 (integral, as for torsion)."""
    quartic = [c.A * c.A - 4 * c.B * x0, -8 * c.B - 4 * c.A * x0, -2 * c.A, -4 * x0, 1]
    out = []
    for x in integer_roots(quartic):
        y = exact_sqrt(c.f(x))
        if y is not None and y != 0:
            out.append((x, y))
    return out


def two_torsion_roots(c: Curve) -> list[int]:
    return integer_roots([c.B, c.A, 0, 1])


def _two_part(c: Curve) -> TorsionClass:
    roots = two_torsion_roots(c)
    if not roots:
        return TorsionClass(1, 1)
    if len(roots) == 3:
        k = 1
        for e in roots:
            for x, _ in _halvings(c, e):
                k = max(k, 2)
                if _halvings(c, x):
                    return TorsionClass(2, 8)
        return TorsionClass(2, 2 * k)
    halves = _halvings(c, roots[0])
    if not halves:
        return TorsionClass(1, 2)
    for x, _ in halves:
        if _halvings(c, x):
            return TorsionClass(1, 8)
    return TorsionClass(1, 4)


def has_point_of_order(c: Curve, q: int) -> bool:
    """Exact test for a rational point of odd order q in {3, 5, 7, 9} on a minimal model."""
    if q not in (3, 5, 7, 9):
        raise ValueError("q must be 3, 5, 7 or 9")
    coeffs = [sum(co * c.A ** j * c.B ** k for j, k, co in row)
              for row in division_polynomial_terms(q)]
    bound = _x_bound(c)
    base = 3 if q == 9 else q
    for x in _integral_roots_via_prime(coeffs, c, bound, base):
        y = exact_sqrt(c.f(x))
        if y is None or y == 0:
            continue
        if q != 9:
            return True
        if point_order(c, (Fraction(x), Fraction(y))) == 9:
            return True
    return False


def point_add(c: Curve, P, Q):
    """Group law on affine points with None as the identity (exact rationals)."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if y1 + y2 == 0:
            return None
        lam = (3 * x1 * x1 + c.A) / (2 * y1)
    else:
        lam = (y2 - y1) / (x2 - x1)
    x3 = lam * lam - x1 - x2
    return (x3, lam * (x1 - x3) - y1)


def point_mul(c: Curve, k: int, P):
    R, Q = None, P
    if k < 0:
        k, Q = -k, (P[0], -P[1])
    while k:
        if k & 1:
            R = point_add(c, R, Q)
        Q = point_add(c, Q, Q)
        k >>= 1
    return R


def point_order(c: Curve, P, limit: int = 16) -> int:
    """Order of P if at most ``limit``, else 0."""
    if P is None:
        return 1
    Q = P
    for k in range(2, limit + 1):
        Q = point_add(c, Q, P)
        if Q is None:
            return k
    return 0


def _classify(two: TorsionClass, odd: int) -> TorsionClass:
    n1, n2 = two
    return TorsionClass(n1, n2 * odd)


def torsion_subgroup(c: Curve, order_bound: int | None = None) -> TorsionClass:
    """Exact rational torsion subgroup.

    The order is bounded by a gcd of point counts; each odd prime left in
    the bound is then certified or excluded by integral roots of the
    division polynomial, and the 2-part by roots of the cubic and halving.
    """
    c, _ = make_minimal(c.A, c.B)
    N = torsion_order_bound(c) if order_bound is None else order_bound
    if N == 1:
        return TorsionClass(1, 1)
    two = _two_part(c) if N % 2 == 0 else TorsionClass(1, 1)
    odd = 1
    for q in (3, 5, 7):
        if N % q == 0 and has_point_of_order(c, q):
            odd *= q
            if q == 3 and N % 9 == 0 and has_point_of_order(c, 9):
                odd *= 3
    result = _classify(two, odd)
    if result not in TorsionClass.MAZUR:  # pragma: no cover - would contradict Mazur
        raise ArithmeticError(f"non-Mazur torsion {result} for {c}")
    return result


# ---------------------------------------------------------------------------
# local divisibility
# ---------------------------------------------------------------------------

class Evidence(enum.Enum):
    RationalTorsion = "RationalTorsion"
    Twist3Torsion = "Twist3Torsion"
    FullTwoTorsion = "FullTwoTorsion"
    Cyclic4Isogeny = "Cyclic4Isogeny"
    EllIsogenyStructure = "EllIsogenyStructure"
    PrimeSampling = "PrimeSampling"


_EVIDENCE_FOR_M = {
    Evidence.Twist3Torsion: {3},
    Evidence.FullTwoTorsion: {4},
    Evidence.Cyclic4Isogeny: {4},
    Evidence.EllIsogenyStructure: {5, 7},
}


@dataclass(frozen=True)
class LocalDivisibilityWitness:
    m: int
    evidence: Evidence
    bound: Optional[int] = None
    heuristic: bool = False

    def __post_init__(self):
        allowed = _EVIDENCE_FOR_M.get(self.evidence)
        if allowed is not None and self.m not in allowed:
            raise ValueError(f"{self.evidence.value} is not evidence for m={self.m}")
        if self.evidence is Evidence.PrimeSampling and self.bound is None:
            raise ValueError("PrimeSampling evidence needs its prime bound")


@dataclass(frozen=True)
class ScreenResult:
    always_divisible: bool
    counterexample: Optional[int] = None
    bound: int = 0
    heuristic: bool = field(default=True)


def prime_sampling_screen(c: Curve, m: int, bound: int) -> ScreenResult:
    """Look for a good prime p <= bound with m not dividing #E(F_p)."""
    if bound < 50:
        raise ValueError("bound must be at least 50")
    bad = 6 * c.disc
    for p in primes_up_to(bound):
        if p < 5 or bad % p == 0:
            continue
        if count_points_mod_p(c, p) % m:
            return ScreenResult(False, p, bound, heuristic=False)
    return ScreenResult(True, None, bound, heuristic=True)


SUPPORTED_M = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 16)

# j-maps of the genus-zero curves X_0(5), X_0(7) as (numerator, denominator) in t
_X0_JMAP = {
    5: (Poly([5, 10, 1]) ** 3, Poly([0, 1])),
    7: (Poly([49, 13, 1]) * Poly([1, 5, 1]) ** 3, Poly([0, 1])),
}


def has_rational_isogeny(c: Curve, ell: int) -> Optional[bool]:
    """Rational ell-isogeny (ell in {5, 7}) via the j-map of X_0(ell).

    Returns None when j is 0 or 1728 and the j-map has a rational point
    there, since the twist class then decides and this test cannot.
    """
    num, den = _X0_JMAP[ell]
    j = c.j_invariant()
    roots = rational_roots(num * j.denominator - den * j.numerator)
    if not roots:
        return False
    if j in (0, 1728):
        return None
    return True


def _has_three_torsion(c: Curve) -> bool:
    cm, _ = make_minimal(c.A, c.B)
    return has_point_of_order(cm, 3)


def locally_divisible(c: Curve, m: int, bound: int = 1000) -> Optional[LocalDivisibilityWitness]:
    """Witness that m | #E(F_p) for a density-one set of p, or None.

    Exact for m in {1, 2, 3, 4}.  For m in {5, 7} a missing rational
    isogeny is an exact negative; an isogeny is confirmed with the
    sampling screen.  Composite m beyond 4 fall back to global torsion or
    the sampling screen.
    """
    if m not in SUPPORTED_M:
        raise ValueError(f"unsupported m={m}")
    if m == 1:
        return LocalDivisibilityWitness(1, Evidence.RationalTorsion)
    if m == 2:
        return LocalDivisibilityWitness(2, Evidence.RationalTorsion) if two_torsion_roots(c) else None
    if m == 3:
        if _has_three_torsion(c):
            return LocalDivisibilityWitness(3, Evidence.RationalTorsion)
        if _has_three_torsion(quadratic_twist(c, -3)):
            return LocalDivisibilityWitness(3, Evidence.Twist3Torsion)
        return None
    if m == 4:
        roots = two_torsion_roots(c)
        if len(roots) == 3:
            return LocalDivisibilityWitness(4, Evidence.FullTwoTorsion)
        for e in roots:
            v = 3 * e * e + c.A
            if v != 0 and is_perfect_square(v):
                return LocalDivisibilityWitness(4, Evidence.Cyclic4Isogeny)
        return None
    tors = torsion_subgroup(c)
    if tors.order % m == 0:
        return LocalDivisibilityWitness(m, Evidence.RationalTorsion)
    if m in (5, 7):
        iso = has_rational_isogeny(c, m)
        if iso is False:
            return None
        screen = prime_sampling_screen(c, m, bound)
        if not screen.always_divisible:
            return None
        return LocalDivisibilityWitness(m, Evidence.EllIsogenyStructure, bound, heuristic=iso is None)
    screen = prime_sampling_screen(c, m, bound)
    if screen.always_divisible:
        return LocalDivisibilityWitness(m, Evidence.PrimeSampling, bound, heuristic=True)
    return None
