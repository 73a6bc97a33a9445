"""Universal weighted-homogeneous families y^2 = x^3 + A(a,b) x + B(a,b).

Every family is stored with exact integer (or rational) coefficients in the
coordinates of its published parametrization.  Enumeration works in integer
lattice coordinates (u, v); :attr:`Family.int_A` and :attr:`Family.int_B`
give the forms in those coordinates, which always have integer
coefficients.

The Tate-normal-form derivation in :func:`derive_by_velu` recomputes the
l = 5, 7 coefficient lists from scratch and is used by the tests as an
oracle for the hard-coded data.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import mpmath

from .arith import BivarPoly, Poly, QuadExact, poly_gcd, resultant_bound
from .curves import Curve, SingularCurve, point_order


class SieveProfile(enum.Enum):
    CoprimeZeta2 = "CoprimeZeta2"
    SquareGcdZeta4 = "SquareGcdZeta4"
    Custom = "Custom"


class SpecializeFailure(enum.Enum):
    NonIntegral = "NonIntegral"
    Singular = "Singular"


NonIntegral = SpecializeFailure.NonIntegral
Singular = SpecializeFailure.Singular


# ---------------------------------------------------------------------------
# hard-coded coefficient data, highest degree first
# ---------------------------------------------------------------------------

F5 = (-27, 324, -378, -324, -27)
G5 = (54, -972, 4050, 0, 4050, 972, 54)
F5_PRIME = (-27, -6156, -13338, 6156, -27)
G5_PRIME = (54, -28188, -540270, 0, -540270, 28188, 54)

F7 = (-27, 324, -1134, 1512, -945, 0, 378, -108, -27)
G7 = (54, -972, 6318, -19116, 30780, -26244, 14742, -11988, 9396, -2484, -810, 324, 54)
F7_PRIME = (-27, -6156, -1134, 46872, -91665, 90720, -44982, 6372, -27)
G7_PRIME = (54, -28188, -483570, 2049300, -3833892, 7104348, -13674906, 17079660,
            -11775132, 4324860, -790074, 27540, 54)

# cubic whose real roots rho_1 < rho_2 < rho_3 drive the l = 7 transformation
H7 = Poly.from_high([1, -8, 5, 1])

# d and e of the 5-isogenous Tate form, y^2 + (1-t)xy - ty = x^3 - tx^2 + d x + e
D5 = Poly.from_high([-5, -10, 5, 0])
E5 = Poly.from_high([-1, -10, 5, -15, 1, 0])

T_POLYS = {
    "F5_tors": (F5, G5),
    "F5_isog": (F5_PRIME, G5_PRIME),
    "F7_tors": (F7, G7),
    "F7_isog": (F7_PRIME, G7_PRIME),
}


def _a() -> BivarPoly:
    return BivarPoly.var_a()


def _b() -> BivarPoly:
    return BivarPoly.var_b()


@dataclass(frozen=True)
class Family:
    """A two-parameter model and the data needed to count its members.

    ``basis`` is a 2x2 rational matrix whose columns span the parameter
    lattice: integer coordinates (u, v) correspond to the parameter
    (a, b) = u * col0 + v * col1.  ``coprime`` marks families whose groomed
    pairs satisfy gcd(a, b) = 1.
    """

    name: str
    m: int
    kind: str
    A: BivarPoly
    B: BivarPoly
    weights: tuple[int, int]
    degA: int
    degB: int
    r: int
    sieve_profile: SieveProfile
    d: int
    basis: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]] = ((1, 0), (0, 1))
    lattice: str = "Z x Z"
    coprime: bool = False
    sieve_note: str = ""

    @property
    def t_polys(self) -> Optional[tuple[Poly, Poly]]:
        data = T_POLYS.get(self.name)
        if data is None:
            return None
        return Poly.from_high(data[0]), Poly.from_high(data[1])

    @property
    def growth_exponent(self) -> Fraction:
        return Fraction(sum(self.weights), 2 * self.degB)

    @property
    def lattice_covolume(self) -> Fraction:
        """Area of a fundamental cell of the parameter lattice."""
        (m00, m01), (m10, m11) = self.basis
        return abs(Fraction(m00) * m11 - Fraction(m01) * m10)

    @property
    def int_A(self) -> BivarPoly:
        return _integer_form(self.name, "A")

    @property
    def int_B(self) -> BivarPoly:
        return _integer_form(self.name, "B")

    def to_params(self, u: int, v: int) -> tuple:
        """Parameter (a, b) of the integer lattice point (u, v)."""
        (m00, m01), (m10, m11) = self.basis
        return _simplify(m00 * u + m01 * v), _simplify(m10 * u + m11 * v)

    def to_lattice(self, a, b) -> Optional[tuple[int, int]]:
        (m00, m01), (m10, m11) = self.basis
        det = Fraction(m00) * m11 - Fraction(m01) * m10
        a, b = Fraction(a), Fraction(b)
        u = (m11 * a - m01 * b) / det
        v = (-m10 * a + m00 * b) / det
        if u.denominator != 1 or v.denominator != 1:
            return None
        return u.numerator, v.numerator

    def in_lattice(self, a, b) -> bool:
        return self.to_lattice(a, b) is not None

    def resultant_bound(self) -> Optional[int]:
        tp = self.t_polys
        return None if tp is None else resultant_bound(*tp)

    def __repr__(self) -> str:
        return f"Family({self.name})"


def _simplify(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


@lru_cache(maxsize=None)
def _integer_form(name: str, which: str) -> BivarPoly:
    fam = family(name)
    poly = fam.A if which == "A" else fam.B
    (m00, m01), (m10, m11) = fam.basis
    u, v = _a(), _b()
    sub = poly.substitute(u * Fraction(m00) + v * Fraction(m01), u * Fraction(m10) + v * Fraction(m11))
    out = {}
    for k, c in sub.terms.items():
        c = Fraction(c)
        if c.denominator != 1:
            raise ArithmeticError(f"{name}: lattice form has non-integral coefficients")
        out[k] = c.numerator
    return BivarPoly(out)


def _build_catalog() -> tuple[Family, ...]:
    a, b = _a(), _b()
    fams = []
    for name, m, kind, r in (("F5_tors", 5, "tors", 4), ("F5_isog", 5, "isog", 4),
                             ("F7_tors", 7, "tors", 6), ("F7_isog", 7, "isog", 6)):
        f, g = T_POLYS[name]
        dA, dB = len(f) - 1, len(g) - 1
        fams.append(Family(
            name=name, m=m, kind=kind,
            A=Poly.from_high(f).homogenize(dA), B=Poly.from_high(g).homogenize(dB),
            weights=(1, 1), degA=dA, degB=dB, r=r,
            sieve_profile=SieveProfile.CoprimeZeta2, d=0,
            coprime=True, lattice="Z x Z, gcd(a, b) = 1"))
    fams = [_with_d(f) for f in fams]

    tors3_A = 6 * a * b + 27 * a ** 4
    tors3_B = b ** 2 - 27 * a ** 6
    fams.append(Family(
        name="F3_tors", m=3, kind="tors", A=tors3_A, B=tors3_B,
        weights=(1, 3), degA=4, degB=6, r=2,
        sieve_profile=SieveProfile.Custom, d=3,
        sieve_note="non-minimal exactly when 3 | a and 27 | b (proportion 1/81)"))
    fams.append(Family(
        name="F3_twist", m=3, kind="twist", A=9 * tors3_A, B=-27 * tors3_B,
        weights=(1, 3), degA=4, degB=6, r=2,
        sieve_profile=SieveProfile.Custom, d=3,
        basis=((Fraction(1, 3), 0), (0, Fraction(1, 3))),
        lattice="(1/3)Z x (1/3)Z",
        sieve_note="twist by -3; non-minimal for a proportion 1/81 of lattice pairs"))

    third = Fraction(1, 3)
    fams.append(Family(
        name="F4_full2", m=4, kind="full2",
        A=-(a ** 2 - a * b + b ** 2) * third,
        B=-((a + b) * (2 * a - b) * (a - 2 * b)) * Fraction(1, 27),
        weights=(1, 1), degA=2, degB=3, r=6,
        sieve_profile=SieveProfile.SquareGcdZeta4, d=3,
        basis=((3, -1), (0, 1)), lattice="Z x Z, 3 | a + b"))
    fams.append(Family(
        name="F4_cyc4", m=4, kind="cyc4",
        A=a ** 2 - 3 * b ** 2, B=a ** 2 * b - 2 * b ** 3,
        weights=(1, 1), degA=2, degB=3, r=2,
        sieve_profile=SieveProfile.SquareGcdZeta4, d=3))
    fams.append(Family(
        name="F4_Z4", m=4, kind="tors",
        A=-27 * (16 * a ** 2 + 16 * a * b ** 2 + b ** 4),
        B=-54 * (64 * a ** 3 - 120 * a ** 2 * b ** 2 - 24 * a * b ** 4 - b ** 6),
        weights=(2, 1), degA=4, degB=6, r=2,
        sieve_profile=SieveProfile.Custom, d=4,
        basis=((Fraction(1, 6), 0), (0, 1)),
        lattice="(1/6)Z x Z"))
    return tuple(fams)


def _with_d(f: Family) -> Family:
    exp = f.growth_exponent
    if exp.numerator != 1:
        raise ArithmeticError(f"{f.name}: growth exponent {exp} is not 1/d")
    return Family(**{**f.__dict__, "d": exp.denominator})


_CATALOG = _build_catalog()
_BY_NAME = {f.name: f for f in _CATALOG}


def catalog() -> list[Family]:
    return list(_CATALOG)


def family(name: str) -> Family:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; known: {sorted(_BY_NAME)}") from None


def families_for(m: int) -> list[Family]:
    return [f for f in _CATALOG if f.m == m and f.name != "F4_Z4"]


def is_weighted_homogeneous(poly: BivarPoly, weights: tuple[int, int], degree: int) -> bool:
    """Check A(x^wa a, x^wb b) = x^deg A(a, b) as a polynomial identity."""
    return poly.weighted_degrees(*weights) <= {degree}


def discriminant_form(fam: Family) -> BivarPoly:
    return 4 * fam.A ** 3 + 27 * fam.B ** 2


def specialize(fam: Family, a, b):
    """Exact (A, B) at the parameter (a, b), or a :class:`SpecializeFailure`."""
    a, b = Fraction(a), Fraction(b)
    A, B = Fraction(fam.A(a, b)), Fraction(fam.B(a, b))
    if 4 * A ** 3 + 27 * B ** 2 == 0:
        return Singular
    if not fam.in_lattice(a, b) or A.denominator != 1 or B.denominator != 1:
        return NonIntegral
    return A.numerator, B.numerator


# ---------------------------------------------------------------------------
# j-invariants and the fractional-linear transformations
# ---------------------------------------------------------------------------

def j_invariant(fam: Family, side: str = "A") -> tuple[Poly, Poly]:
    """j(t) = 1728 * 4 f^3 / (4 f^3 + 27 g^2) as a reduced (numerator, denominator)."""
    tp = fam.t_polys
    if tp is None:
        raise ValueError(f"{fam.name} has no one-variable form")
    f, g = tp
    num = f ** 3 * (4 * 1728)
    den = f ** 3 * 4 + g ** 2 * 27
    common = poly_gcd(num, den)
    num = num.map(Fraction).exact_div(common).map(Fraction)
    den = den.map(Fraction).exact_div(common).map(Fraction)
    scale = den.lc
    return num.map(lambda c: c / scale), den.map(lambda c: c / scale)


@dataclass(frozen=True)
class FracLinear:
    """t -> (alpha t + beta) / (gamma t + delta) with QuadExact entries."""

    alpha: QuadExact
    beta: QuadExact
    gamma: QuadExact
    delta: QuadExact

    def __post_init__(self):
        if self.det == 0:
            raise ValueError("degenerate fractional-linear map")

    @property
    def det(self) -> QuadExact:
        return self.alpha * self.delta - self.beta * self.gamma

    def __matmul__(self, other: "FracLinear") -> "FracLinear":
        return FracLinear(self.alpha * other.alpha + self.beta * other.gamma,
                          self.alpha * other.beta + self.beta * other.delta,
                          self.gamma * other.alpha + self.delta * other.gamma,
                          self.gamma * other.beta + self.delta * other.delta)

    def __call__(self, t):
        """Image of t; returns None for the point at infinity."""
        den = self.gamma * t + self.delta
        if den == 0:
            return None
        return (self.alpha * t + self.beta) / den

    def numerator(self) -> Poly:
        return Poly([self.beta, self.alpha])

    def denominator(self) -> Poly:
        return Poly([self.delta, self.gamma])


def psi5() -> FracLinear:
    u = QuadExact(Fraction(11, 2), Fraction(5, 2), 5)
    one = QuadExact(1, 0, 5)
    return FracLinear(u, one, one, -u)


def _pullback_identity(fam: Family, fam_prime: Family, num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Both sides of j(num/den) * den(j') = j'(t) * ..., cleared of denominators.

    With j = P/Q in lowest terms, deg P = 3 deg f, j(num/den) equals
    P^h(num, den) / Q^h(num, den) where ^h homogenizes to degree deg P.
    """
    P, Q = j_invariant(fam)
    Pp, Qp = j_invariant(fam_prime)
    deg = max(P.degree, Q.degree)

    def hom_eval(poly: Poly) -> Poly:
        acc = Poly()
        for k, c in enumerate(poly.coeffs):
            acc = acc + num ** k * den ** (deg - k) * c
        return acc

    return hom_eval(P) * Qp, Pp * hom_eval(Q)


def check_lft(ell: int, samples: int = 20, dps: int = 50, seed: int = 5) -> bool:
    """Verify j(psi(t)) = j'(t).

    l = 5 is an exact identity over Q(sqrt 5); l = 7 is checked at
    ``samples`` rational points to relative error 1e-20.
    """
    if ell == 5:
        psi = psi5()
        lhs, rhs = _pullback_identity(family("F5_tors"), family("F5_isog"),
                                      psi.numerator(), psi.denominator())
        return lhs == rhs and psi(psi.alpha) is None
    if ell == 7:
        P, Q = j_invariant(family("F7_tors"))
        Pp, Qp = j_invariant(family("F7_isog"))
        rng = random.Random(seed)
        with mpmath.workdps(dps):
            rho = rho7(dps)
            for _ in range(samples):
                t = mpmath.mpf(rng.randint(-999, 999)) / rng.randint(1, 97)
                s = psi7_value(t, rho)
                lhs = _mp_eval(P, s) / _mp_eval(Q, s)
                rhs = _mp_eval(Pp, t) / _mp_eval(Qp, t)
                if abs(lhs - rhs) > mpmath.mpf(10) ** -20 * max(abs(rhs), 1):
                    return False
        return True
    raise ValueError("l must be 5 or 7")


def _mp_eval(poly: Poly, x):
    acc = mpmath.mpf(0)
    for c in reversed(poly.coeffs):
        c = Fraction(c)
        acc = acc * x + mpmath.mpf(c.numerator) / c.denominator
    return acc


def rho7(dps: int = 50) -> tuple:
    """Real roots rho_1 < rho_2 < rho_3 of t^3 - 8t^2 + 5t + 1."""
    with mpmath.workdps(dps + 10):
        roots = sorted(mpmath.re(r) for r in mpmath.polyroots([1, -8, 5, 1], maxsteps=200,
                                                                extraprec=2 * dps))
    return tuple(roots)


def psi7_matrix(rho: tuple) -> tuple:
    r1, r2, r3 = rho
    return ((r2 - r1, (r1 - r2) * r3), (r2 - r3, r1 * r3 - r1 * r2))


def psi7_value(t, rho: tuple):
    (p, q), (r, s) = psi7_matrix(rho)
    return (p * t + q) / (r * t + s)


# ---------------------------------------------------------------------------
# region maps
# ---------------------------------------------------------------------------

# cos^2, sin^2 and cos*sin of half the angle arctan(2/11)
_COS2 = QuadExact(Fraction(1, 2), Fraction(11, 50), 5)
_SIN2 = QuadExact(Fraction(1, 2), Fraction(-11, 50), 5)
_COSSIN = QuadExact(0, Fraction(1, 25), 5)


def _trig_monomial(i: int, j: int) -> QuadExact:
    """cos^i sin^j for i + j even, expressed in Q(sqrt 5)."""
    if (i + j) % 2:
        raise ValueError("odd total degree leaves Q(sqrt 5)")
    if i % 2 == 0:
        return _COS2 ** (i // 2) * _SIN2 ** (j // 2)
    return _COSSIN * _COS2 ** ((i - 1) // 2) * _SIN2 ** ((j - 1) // 2)


def _rotate_exact(poly: BivarPoly) -> BivarPoly:
    """poly(a cos - b sin, a sin + b cos) with coefficients in Q(sqrt 5)."""
    # expand over formal (a, b, cos, sin) first
    x = {(1, 0, 1, 0): 1, (0, 1, 0, 1): -1}
    y = {(1, 0, 0, 1): 1, (0, 1, 1, 0): 1}

    def mul(p, q):
        out = {}
        for k1, v1 in p.items():
            for k2, v2 in q.items():
                k = tuple(u + w for u, w in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return out

    def power(p, n):
        acc = {(0, 0, 0, 0): 1}
        for _ in range(n):
            acc = mul(acc, p)
        return acc

    total = {}
    for (i, j), c in poly.terms.items():
        for k, v in mul(power(x, i), power(y, j)).items():
            total[k] = total.get(k, 0) + c * v
    out: dict = {}
    for (ia, ib, ic, is_), v in total.items():
        if v:
            out[(ia, ib)] = out.get((ia, ib), QuadExact(0)) + _trig_monomial(ic, is_) * v
    return BivarPoly(out)


def _scale_exact(poly: BivarPoly, sa: QuadExact, sb: QuadExact) -> BivarPoly:
    return BivarPoly({(i, j): sa ** i * sb ** j * c for (i, j), c in poly.terms.items()})


def region_map_identity(ell: int, samples: int = 20, dps: int = 50, seed: int = 7) -> dict:
    """Check the linear map carrying the torsion region onto the isogeny region.

    The A-forms agree exactly; the B-forms agree up to an overall sign,
    which leaves the regions (defined through |B|) unchanged.  Returns the
    verdict, the sign on B and the area ratio Area(R')/Area(R).
    """
    if ell == 5:
        tors, isog = family("F5_tors"), family("F5_isog")
        r5 = QuadExact.sqrt(5)
        a_ok = _rotate_exact(isog.A) == _scale_exact(tors.A, r5, -r5)
        rot_b, scaled_b = _rotate_exact(isog.B), _scale_exact(tors.B, r5, -r5)
        b_sign = 1 if rot_b == scaled_b else (-1 if rot_b == -scaled_b else 0)
        # R' is the image of R under rotation o diag(1/sqrt 5, -1/sqrt 5)
        return {"ell": 5, "identity": a_ok and b_sign != 0, "b_sign": b_sign,
                "ratio": Fraction(1, 5), "ratio_text": "1/5", "det": Fraction(-1, 5)}
    if ell == 7:
        tors, isog = family("F7_tors"), family("F7_isog")
        rng = random.Random(seed)
        with mpmath.workdps(dps):
            J = jacobian7(dps)
            det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
            tol = mpmath.mpf(10) ** -20
            a_ok, signs = True, set()
            for _ in range(samples):
                a = mpmath.mpf(rng.randint(-10 ** 6, 10 ** 6)) / 10 ** 6
                b = mpmath.mpf(rng.randint(-10 ** 6, 10 ** 6)) / 10 ** 6
                x = J[0][0] * a + J[0][1] * b
                y = J[1][0] * a + J[1][1] * b
                for w in ("A", "B"):
                    lhs = _mp_bivar(getattr(tors, w), x, y)
                    rhs = _mp_bivar(getattr(isog, w), a, b)
                    scale = max(_mp_bivar(getattr(isog, w).map(abs), abs(a), abs(b)), 1)
                    if w == "A":
                        a_ok = a_ok and abs(lhs - rhs) <= tol * scale
                    elif abs(lhs - rhs) <= tol * scale:
                        signs.add(1)
                    elif abs(lhs + rhs) <= tol * scale:
                        signs.add(-1)
                    else:
                        signs.add(0)
            b_sign = signs.pop() if len(signs) == 1 else 0
            return {"ell": 7, "identity": a_ok and b_sign != 0, "b_sign": b_sign,
                    "ratio": 1 / abs(det), "ratio_text": "1/sqrt(7)", "det": det}
    raise ValueError("l must be 5 or 7")


def _mp_bivar(poly: BivarPoly, a, b):
    acc = mpmath.mpf(0)
    for (i, j), c in poly.terms.items():
        acc += mpmath.mpf(int(c)) * a ** i * b ** j
    return acc


def jacobian7(dps: int = 50) -> tuple:
    """The matrix J with A(J(a, b)) = A'(a, b) for the l = 7 families."""
    with mpmath.workdps(dps + 10):
        r1, r2, r3 = rho7(dps)
        u = mpmath.mpf(7) ** (mpmath.mpf(-3) / 4)
        return ((u * (r2 - r1), u * (r1 * r3 - r2 * r3)),
                (u * (r2 - r3), u * (r1 * r3 - r1 * r2)))


# ---------------------------------------------------------------------------
# the explicit 5-torsion point on the isogenous Tate form
# ---------------------------------------------------------------------------

_X5 = Poly.from_high([1, 1, 2, -2, 5, -3, 2, -1, 0])
_Y5 = Poly.from_high([1, -1, -1, 0, 1, -10, 13, -11, 5, -3, 1, 0, 0])


def tate_invariants(a1, a2, a3, a4, a6) -> tuple:
    """(c4, c6) of a long Weierstrass equation."""
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    c4 = b2 * b2 - 24 * b4
    c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
    return c4, c6


def isogenous_tate5(t) -> tuple:
    """a-invariants of y^2 + (1-t)xy - ty = x^3 - tx^2 + d(t) x + e(t)."""
    return (1 - t, -t, -t, D5(t), E5(t))


def to_short(ainv: tuple, point: tuple) -> tuple[int, int, tuple]:
    """Map a long-form point to an integral short model (A, B, point)."""
    a1, a2, a3, _, _ = ainv
    c4, c6 = tate_invariants(*ainv)
    A, B = Fraction(-27 * c4), Fraction(-54 * c6)
    b2 = a1 * a1 + 4 * a2
    x, y = point
    X = 36 * x + 3 * b2
    Y = 108 * (2 * y + a1 * x + a3)
    # scale by the least u with u^4 A and u^6 B integral
    u = 1
    for q in (A.denominator, B.denominator):
        u = math.lcm(u, q)
    return int(A * u ** 4), int(B * u ** 6), (X * u ** 2, Y * u ** 3)


def five_torsion_point(s) -> tuple:
    """The explicit point of order 5 on the isogenous curve at t = s^5."""
    s = Fraction(s)
    if s == 0:
        raise ValueError("s must be nonzero")
    t = s ** 5
    ainv = isogenous_tate5(t)
    c4, c6 = tate_invariants(*ainv)
    if c4 ** 3 == c6 ** 2:
        raise SingularCurve(f"isogenous curve singular at t={t}")
    return (_X5(s), _Y5(s))


def on_tate_curve(ainv: tuple, P: tuple) -> bool:
    a1, a2, a3, a4, a6 = ainv
    x, y = P
    return y * y + a1 * x * y + a3 * y == x ** 3 + a2 * x * x + a4 * x + a6


def five_torsion_order(s) -> int:
    """Order of :func:`five_torsion_point` computed with the group law."""
    s = Fraction(s)
    ainv = isogenous_tate5(s ** 5)
    P = five_torsion_point(s)
    if not on_tate_curve(ainv, P):
        return 0
    A, B, Q = to_short(ainv, P)
    return point_order(Curve(A, B), Q)


# ---------------------------------------------------------------------------
# Tate normal form and Velu (test oracle)
# ---------------------------------------------------------------------------

class _RatFunc:
    """Element of Q(t) as a reduced pair of polynomials."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, Poly) else Poly([Fraction(num)])
        den = Poly([Fraction(1)]) if den is None else den
        num, den = num.map(Fraction), den.map(Fraction)
        if not num:
            self.num, self.den = Poly(), Poly([Fraction(1)])
            return
        g = poly_gcd(num, den)
        num, den = num.exact_div(g).map(Fraction), den.exact_div(g).map(Fraction)
        lc = den.lc
        self.num, self.den = num.map(lambda c: c / lc), den.map(lambda c: c / lc)

    def _c(self, o):
        return o if isinstance(o, _RatFunc) else _RatFunc(o)

    def __add__(self, o):
        o = self._c(o)
        return _RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return _RatFunc(-self.num, self.den)

    def __sub__(self, o):
        return self + (-self._c(o))

    def __rsub__(self, o):
        return self._c(o) - self

    def __mul__(self, o):
        o = self._c(o)
        return _RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._c(o)
        return _RatFunc(self.num * o.den, self.den * o.num)

    def __pow__(self, k):
        acc = _RatFunc(1)
        for _ in range(k):
            acc = acc * self
        return acc

    def __eq__(self, o):
        o = self._c(o)
        return self.num == o.num and self.den == o.den

    def poly(self) -> Poly:
        if self.den.degree != 0:
            raise ArithmeticError("not a polynomial")
        return self.num.map(lambda c: Fraction(c) / self.den.lc)


def _long_add(ainv, P, Q):
    a1, a2, a3, _, _ = ainv
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2:
        lam = (3 * x1 * x1 + 2 * a2 * x1 + ainv[3] - a1 * y1) / (2 * y1 + a1 * x1 + a3)
    else:
        lam = (y2 - y1) / (x2 - x1)
    nu = y1 - lam * x1
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    return (x3, -(lam + a1) * x3 - nu - a3)


def tate_normal_form(ell: int) -> tuple:
    """(b, c) as polynomials in t for the universal curve with a point of order l."""
    t = Poly([0, 1])
    if ell == 5:
        return t, t
    if ell == 7:
        return t ** 3 - t ** 2, t ** 2 - t
    raise ValueError("l must be 5 or 7")


def _to_int_poly(r: _RatFunc) -> Poly:
    p = r.poly()
    if not p.is_integral():
        raise ArithmeticError("non-integral coefficients")
    return p.to_int()


def velu_odd(ainv: tuple, kernel: list) -> tuple:
    """a-invariants of E/K for K of odd order, given one point from each pair +-P."""
    a1, a2, a3, a4, a6 = ainv
    v = w = _RatFunc(0)
    for x, y in kernel:
        gx = 3 * x * x + 2 * a2 * x + a4 - a1 * y
        gy = -2 * y - a1 * x - a3
        vq = 2 * gx - a1 * gy
        v = v + vq
        w = w + gy * gy + x * vq
    b2 = a1 * a1 + 4 * a2
    return (a1, a2, a3, a4 - 5 * v, a6 - b2 * v - 7 * w)


def derive_by_velu(ell: int) -> dict:
    """Recompute (f, g, f', g') from the Tate normal form and Velu's formulas."""
    bt, ct = tate_normal_form(ell)
    b, c = _RatFunc(bt), _RatFunc(ct)
    zero = _RatFunc(0)
    ainv = (1 - c, -b, -b, zero, zero)
    P = (zero, zero)
    kernel, Q = [P], P
    for _ in range((ell - 1) // 2 - 1):
        Q = _long_add(ainv, Q, P)
        kernel.append(Q)
    iso = velu_odd(ainv, kernel)
    out = {"d": _to_int_poly(iso[3]), "e": _to_int_poly(iso[4])}
    for label, inv in (("", ainv), ("_prime", iso)):
        c4, c6 = tate_invariants(*inv)
        out["f" + label] = _to_int_poly(-27 * c4)
        out["g" + label] = _to_int_poly(-54 * c6)
    return out
