"""Region areas, sieve densities, growth constants and the limiting probabilities.

A family counted up to height H contributes c * H^(1/d) curves.  The
constant c is assembled from three ingredients:

* the area of the unit region R(1) = {|A(a,b)| <= X, |B(a,b)| <= Y}, with
  (X, Y) = (4^(-1/3), 27^(-1/2)) for the standard height and (1, 1) for the
  naive one;
* the density of parameter pairs surviving the minimality sieve;
* the number r of parametrizations of each isomorphism class.

Coprime families (l = 5, 7) keep non-minimal pairs and weight them by the
defect distribution delta_e, while lattice families (m = 3, 4) discard
non-minimal pairs outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate, optimize

from .arith import BivarPoly, Poly, QuadExact, factorize, resultant
from .families import Family, SieveProfile, family, region_map_identity


class NonConvergence(ArithmeticError):
    """Raised when a numeric routine misses its tolerance; carries the best estimate."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnsupportedExponent(ValueError):
    pass


HEIGHT_BOUNDS = {
    "standard": (4.0 ** (-1.0 / 3.0), 27.0 ** -0.5),
    "naive": (1.0, 1.0),
}

MAX_SIEVE_LEVEL = 8


def zeta(k: int, dps: int = 30) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return +mpmath.zeta(k)


ZETA2 = float(zeta(2))
ZETA4 = float(zeta(4))


# ---------------------------------------------------------------------------
# sieve densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SieveTable:
    family: str
    deltas: dict[int, Fraction]
    moduli: dict[int, int] = field(default_factory=dict)

    def total(self) -> Fraction:
        return sum(self.deltas.values(), Fraction(0))

    def as_json(self) -> dict:
        return {
            "family": self.family,
            "deltas": {str(e): str(d) for e, d in sorted(self.deltas.items())},
            "moduli": {str(p): q for p, q in sorted(self.moduli.items())},
        }


def _int_terms(poly: BivarPoly) -> list[tuple[int, int, int]]:
    return [(i, j, int(c)) for (i, j), c in poly.terms.items()]


def _eval_terms(terms, a: int, b: int, mod: int) -> int:
    return sum(c * pow(a, i, mod) * pow(b, j, mod) for i, j, c in terms) % mod


def _projective_mass(A_terms, B_terms, p: int, level: int) -> Fraction:
    """Measure of [a:b] in P^1(Z_p) with p^(4 level) | A and p^(6 level) | B.

    Walks both affine charts (t : 1) and (1 : p s) digit by digit, pruning
    classes that already fail modulo p^k.  The measure is normalized to 1.
    """
    depth = 6 * level
    alive = 0
    for chart in (0, 1):
        stack = [(t, 1) for t in range(p)] if chart == 0 else [(0, 1)]
        while stack:
            t, k = stack.pop()
            mod = p ** k
            a, b = ((t, 1) if chart == 0 else (1, t))
            if _eval_terms(A_terms, a, b, p ** min(k, 4 * level)) or \
                    _eval_terms(B_terms, a, b, p ** min(k, 6 * level)):
                continue
            if k == depth:
                alive += 1
                continue
            stack.extend((t + mod * i, k + 1) for i in range(p))
    return Fraction(alive * p, (p + 1) * p ** depth)


def _prime_defect_profile(fam: Family, p: int) -> tuple[dict[int, Fraction], int]:
    A_terms, B_terms = _int_terms(fam.int_A), _int_terms(fam.int_B)
    masses = [Fraction(1)]
    level = 1
    while True:
        if level >= MAX_SIEVE_LEVEL:
            raise ArithmeticError(f"{fam.name}: defect density at {p} does not stabilize by level {level}")
        mass = _projective_mass(A_terms, B_terms, p, level)
        masses.append(mass)
        if mass == 0:
            break
        level += 1
    profile = {p ** j: masses[j] - masses[j + 1] for j in range(len(masses) - 1)}
    return {q: d for q, d in profile.items() if d}, p ** (6 * (len(masses) - 1))


def sieve_table(fam: Family | str) -> SieveTable:
    return _sieve_table(fam if isinstance(fam, str) else fam.name)


@lru_cache(maxsize=None)
def _sieve_table(name: str) -> SieveTable:
    """Exact distribution of the minimality defect over coprime parameter pairs.

    For lattice families non-minimal pairs are removed by the lattice sieve,
    so every counted pair has defect 1.
    """
    fam = family(name)
    if not fam.coprime:
        return SieveTable(fam.name, {1: Fraction(1)})
    deltas = {1: Fraction(1)}
    moduli = {}
    for p in sorted(factorize(fam.resultant_bound())):
        profile, modulus = _prime_defect_profile(fam, p)
        moduli[p] = modulus
        combined = {}
        for e, de in deltas.items():
            for q, dq in profile.items():
                combined[e * q] = combined.get(e * q, 0) + de * dq
        deltas = combined
    return SieveTable(fam.name, dict(sorted(deltas.items())), moduli)


def sieve_sum(table: SieveTable, d: int) -> Fraction:
    """Sum of delta_e * e^(12/d)."""
    if 12 % d:
        raise UnsupportedExponent(f"12/{d} is not an integer")
    k = 12 // d
    return sum((delta * e ** k for e, delta in table.deltas.items()), Fraction(0))


def _eval_mod_vec(terms, u: np.ndarray, v: np.ndarray, mod: int) -> np.ndarray:
    out = np.zeros_like(u)
    for i, j, c in terms:
        term = np.full_like(u, c % mod)
        for _ in range(i):
            term = term * u % mod
        for _ in range(j):
            term = term * v % mod
        out = (out + term) % mod
    return out


def local_nonminimal_density(fam: Family | str, p: int) -> Fraction:
    """Density of integer lattice points (u, v) with p^4 | A and p^6 | B.

    Breadth-first over residues mod p^k, vectorized with numpy; each step
    keeps the classes on which both divisibility conditions can still hold.
    """
    if isinstance(fam, str):
        fam = family(fam)
    if p ** 12 >= 2 ** 62:
        raise ValueError(f"prime {p} too large for the vectorized walk")
    A_terms, B_terms = _int_terms(fam.int_A), _int_terms(fam.int_B)
    u = np.zeros(1, dtype=np.int64)
    v = np.zeros(1, dtype=np.int64)
    for k in range(1, 7):
        step = p ** (k - 1)
        du, dv = np.divmod(np.arange(p * p, dtype=np.int64), p)
        u = (u[:, None] + step * du[None, :]).ravel()
        v = (v[:, None] + step * dv[None, :]).ravel()
        mod = p ** k
        keep = (_eval_mod_vec(A_terms, u, v, p ** min(k, 4)) == 0) & (_eval_mod_vec(B_terms, u, v, mod) == 0)
        u, v = u[keep], v[keep]
    return Fraction(len(u), p ** 12)


def zeta_exponent(fam: Family) -> int:
    """Exponent k of the zeta factor: 2 for coprime families, 12/d for lattice ones."""
    return 2 if fam.coprime else 12 // fam.d


def local_correction(fam: Family, primes=(2, 3)) -> Fraction:
    """Product over the given primes of (1 - rho_p) / (1 - p^-k).

    rho_p is the non-minimal density; away from these primes rho_p = p^-k and
    the product over all primes collapses to 1 / zeta(k).
    """
    k = zeta_exponent(fam)
    out = Fraction(1)
    for p in primes:
        out *= (1 - local_nonminimal_density(fam, p)) / (1 - Fraction(1, p ** k))
    return out


# ---------------------------------------------------------------------------
# region areas
# ---------------------------------------------------------------------------

def _float_terms(poly: BivarPoly):
    return [(i, j, float(c)) for (i, j), c in poly.terms.items()]


def _eval_float(terms, a, b):
    return sum(c * a ** i * b ** j for i, j, c in terms)


class _Region:
    """Radial description of R(1) along the weighted rays (r^wa cos t, r^wb sin t)."""

    def __init__(self, fam: Family, height_fn: str):
        self.fam = fam
        self.wa, self.wb = fam.weights
        self.W = self.wa + self.wb
        self.X, self.Y = HEIGHT_BOUNDS[height_fn]
        self.At, self.Bt = _float_terms(fam.A), _float_terms(fam.B)

    def log_radii(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        A = np.abs(_eval_float(self.At, c, s))
        B = np.abs(_eval_float(self.Bt, c, s))
        la = (math.log(self.X) - np.log(np.maximum(A, 1e-300))) / self.fam.degA
        lb = (math.log(self.Y) - np.log(np.maximum(B, 1e-300))) / self.fam.degB
        return la, lb

    def rho(self, theta):
        la, lb = self.log_radii(theta)
        return np.exp(np.minimum(la, lb))

    def integrand(self, theta) -> float:
        c, s = math.cos(theta), math.sin(theta)
        return float((self.wa * c * c + self.wb * s * s) * self.rho(theta) ** self.W / self.W)

    def switch(self, theta) -> float:
        la, lb = self.log_radii(theta)
        return float(la - lb)

    def breakpoints(self, samples: int) -> list[float]:
        grid = np.linspace(0.0, math.pi, samples + 1)
        la, lb = self.log_radii(grid)
        h = la - lb
        points = [0.0]
        for k in range(samples):
            if h[k] == 0.0:
                points.append(float(grid[k]))
            elif h[k] * h[k + 1] < 0:
                lo, hi = float(grid[k]), float(grid[k + 1])
                if self.switch(lo) * self.switch(hi) < 0:
                    points.append(optimize.brentq(self.switch, lo, hi, xtol=1e-15, rtol=1e-15))
                else:
                    # sign flip within rounding of an endpoint
                    points.append(lo if abs(h[k]) < abs(h[k + 1]) else hi)
        points.append(math.pi)
        return sorted(set(points))

    def bounding_box(self, samples: int = 1 << 14) -> tuple[float, float]:
        """Max |a| and |b| over R(1), from a dense sample plus a margin."""
        theta = np.linspace(0.0, math.pi, samples + 1)
        rho = self.rho(theta)
        amax = float(np.max(rho ** self.wa * np.abs(np.cos(theta))))
        bmax = float(np.max(rho ** self.wb * np.abs(np.sin(theta))))
        return amax, bmax


def _piecewise_integral(region: _Region, samples: int, tol: float) -> tuple[float, float]:
    points = region.breakpoints(samples)
    pieces = len(points) - 1
    total, err = 0.0, 0.0
    for lo, hi in zip(points, points[1:]):
        val, e = integrate.quad(region.integrand, lo, hi, epsabs=tol / (8 * pieces), epsrel=1e-14, limit=400)
        total += val
        err += e
    # rays t and t + pi cover symmetric halves of the region
    return 2 * total, 2 * err


def area_R1(fam: Family | str, tol: float = 1e-10, height_fn: str = "standard") -> tuple[float, float]:
    """Area of R(1) and an error bound.

    The region is star-shaped along weighted rays, so its area is a 1-D
    integral of (wa cos^2 + wb sin^2) rho^(wa+wb) / (wa+wb) over the angle.
    The radius rho is piecewise smooth; its kinks are located by root
    finding and the integral is split there.  The error bound combines the
    quadrature estimate with the change under a finer breakpoint search.
    """
    if isinstance(fam, str):
        fam = family(fam)
    if tol < 1e-12:
        raise ValueError("tolerance below 1e-12 is not supported")
    region = _Region(fam, height_fn)
    v1, e1 = _piecewise_integral(region, 4096, tol)
    v2, e2 = _piecewise_integral(region, 16384, tol)
    err = max(e1, e2) + abs(v1 - v2)
    if err > tol:
        raise NonConvergence(f"area of {fam.name} did not reach {tol}", v2, err)
    return v2, err


def bounding_box(fam: Family, height_fn: str = "standard") -> tuple[float, float]:
    return _Region(fam, height_fn).bounding_box()


def ellipse_area_full2(height_fn: str = "standard") -> float:
    """Closed form for the full 2-torsion region: |A| <= X alone cuts out an ellipse.

    |a^2 - ab + b^2| <= 3X has area 2 pi (3X) / sqrt 3; the |B| condition is
    implied on it.
    """
    X, _ = HEIGHT_BOUNDS[height_fn]
    return 2 * math.pi * 3 * X / math.sqrt(3)


def exact_area_cyc4(height_fn: str = "standard", dps: int = 30) -> mpmath.mpf:
    """Closed-form area of the cyclic 4-isogeny region.

    u and v are the bounds on |A| and |B|; alpha_+- are the positive roots of
    x^3 +- u x - v and beta_+- = sqrt(3 alpha_+-^2 +- u).
    """
    X, Y = HEIGHT_BOUNDS[height_fn]
    with mpmath.workdps(dps):
        if height_fn == "standard":
            u, v = mpmath.cbrt(mpmath.mpf(4)) ** -1, mpmath.sqrt(mpmath.mpf(27)) ** -1
        else:
            u, v = mpmath.mpf(X), mpmath.mpf(Y)
        alpha_p = mpmath.findroot(lambda x: x ** 3 + u * x - v, 0.5)
        alpha_m = mpmath.findroot(lambda x: x ** 3 - u * x - v, 1.0)
        beta_p = mpmath.sqrt(3 * alpha_p ** 2 + u)
        beta_m = mpmath.sqrt(3 * alpha_m ** 2 - u)
        integral = mpmath.quad(lambda y: mpmath.sqrt((2 * y ** 3 + v) / y), [alpha_p, alpha_m])
        s3 = mpmath.sqrt(3)
        return (4 * integral + 2 * (alpha_p * beta_p - alpha_m * beta_m)
                + 2 * u / s3 * mpmath.log((s3 * alpha_p + beta_p) * (s3 * alpha_m + beta_m) / u))


# ---------------------------------------------------------------------------
# growth constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthConstant:
    family: str
    area: float
    area_error: float
    sieve_sum: Fraction
    zeta_factor: str
    zeta_value: float
    r: int
    value: float
    error: float
    exact_form: Optional[str] = None
    published: Optional[float] = None
    notes: tuple[str, ...] = ()

    def as_json(self) -> dict:
        out = {
            "family": self.family, "area": self.area, "area_error": self.area_error,
            "sieve_sum": str(self.sieve_sum), "zeta_factor": self.zeta_factor,
            "r": self.r, "c": self.value, "c_error": self.error,
        }
        if self.exact_form:
            out["exact_form"] = self.exact_form
        if self.published is not None:
            out["published"] = self.published
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _full2_published(height_fn: str) -> float:
    # factor 121/120 at 3 and lattice density 1/3, per class (r = 6)
    return ellipse_area_full2(height_fn) / 3 * (121 / 120) / (6 * ZETA4)


def growth_constant(fam: Family | str, tol: float = 1e-10, height_fn: str = "standard") -> GrowthConstant:
    """c = area * (sieve density) / r, per isomorphism class."""
    if isinstance(fam, str):
        fam = family(fam)
    area, area_err = area_R1(fam, tol, height_fn)
    k = zeta_exponent(fam)
    zval = float(zeta(k))
    notes = []
    published = None
    exact_form = None
    if fam.sieve_profile is SieveProfile.CoprimeZeta2:
        s = sieve_sum(sieve_table(fam), fam.d)
        scale = float(s) / (fam.r * zval)
    else:
        s = local_correction(fam)
        scale = float(s / fam.lattice_covolume) / (fam.r * zval)
        notes.append(f"lattice covolume {fam.lattice_covolume}; local factor at 2 and 3 is {s}")
    if fam.name == "F4_full2":
        published = _full2_published(height_fn)
        if height_fn == "standard":
            exact_form = ("" if s == 1 else f"{s}*") + "pi*sqrt(3)*cbrt(2)/(18*zeta(4))"
        notes.append("published constant uses a factor 121/120 at 3; the residue count gives "
                     f"{local_nonminimal_density(fam, 3)} for the non-minimal density at 3")
    value = area * scale
    return GrowthConstant(fam.name, area, area_err, s, f"zeta({k})", zval, fam.r,
                          value, area_err * scale, exact_form, published, tuple(notes))


# ---------------------------------------------------------------------------
# probabilities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Probability:
    m: int
    exact: Optional[object]
    exact_text: Optional[str]
    numeric: float
    error: float
    components: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def as_json(self) -> dict:
        return {
            "m": self.m,
            "exact": self.exact_text,
            "decimal": self.numeric,
            "error": self.error,
            "components": self.components,
            "notes": list(self.notes),
        }


def _surd_text(P: QuadExact) -> str:
    """Write P = 1/(1 + (n/d) sqrt D) as d/(d+n*sqrt(D))."""
    q = (P.inverse() - 1)
    if q.p != 0 or q.D in (0, 1):
        return str(P)
    n, d = q.q.numerator, q.q.denominator
    coef = "" if n == 1 else f"{n}*"
    return f"{d}/({d}+{coef}sqrt({q.D}))"


def area_ratio_7() -> QuadExact:
    """Exact Area(R'(1)) / Area(R(1)) for l = 7.

    The linear map J has det^2 = u^4 disc(t^3 - 8t^2 + 5t + 1) with
    u = 7^(-3/4), and the ratio is 1/|det J|.
    """
    h = Poly.from_high([1, -8, 5, 1])
    disc = -resultant(h, h.deriv())
    return QuadExact.sqrt(Fraction(disc, 7 ** 3)).inverse()


def _ell_probability(ell: int, tol: float, height_fn: str) -> Probability:
    tors, isog = family(f"F{ell}_tors"), family(f"F{ell}_isog")
    s_t = sieve_sum(sieve_table(tors), tors.d)
    s_i = sieve_sum(sieve_table(isog), isog.d)
    ratio = Fraction(region_map_identity(5)["ratio"]) if ell == 5 else area_ratio_7()
    exact = (s_t / (s_t + ratio * s_i)) if ell == 5 else (QuadExact(s_t) / (QuadExact(s_t) + ratio * s_i))
    text = str(exact) if ell == 5 else _surd_text(exact)
    c_t = growth_constant(tors, tol, height_fn)
    c_i = growth_constant(isog, tol, height_fn)
    num = c_t.value / (c_t.value + c_i.value)
    err = (c_t.error + c_i.error) / (c_t.value + c_i.value)
    components = {
        "c_tors": c_t.as_json(), "c_isog": c_i.as_json(),
        "area_ratio_exact": str(ratio), "quadrature_probability": num, "quadrature_error": err,
    }
    return Probability(ell, exact, text, float(exact), err, components)


def _p3(tol: float, height_fn: str) -> Probability:
    tors, twist = family("F3_tors"), family("F3_twist")
    # the twist region is the tors region scaled by lambda with lambda^degA = 9
    wa, wb = tors.weights
    ratio = Fraction(9) ** Fraction(wa + wb, tors.degA)
    if ratio.denominator != 1 and ratio != int(ratio):
        raise ArithmeticError("non-rational area ratio")
    ratio = Fraction(ratio)
    surv_t = 1 - local_nonminimal_density(tors, 3)
    surv_w = 1 - local_nonminimal_density(twist, 3)
    weight_t = surv_t / tors.lattice_covolume / tors.r
    weight_w = surv_w / twist.lattice_covolume / ratio / twist.r
    exact = weight_t / (weight_t + weight_w)
    c_t = growth_constant(tors, tol, height_fn)
    c_w = growth_constant(twist, tol, height_fn)
    num = c_t.value / (c_t.value + c_w.value)
    components = {
        "area_ratio_exact": str(ratio),
        "nonminimal_density_at_3": {"F3_tors": str(1 - surv_t), "F3_twist": str(1 - surv_w)},
        "c_tors": c_t.as_json(), "c_twist": c_w.as_json(),
        "quadrature_probability": num,
    }
    return Probability(3, exact, str(exact), float(exact),
                       (c_t.error + c_w.error) / (c_t.value + c_w.value), components)


def _p4(tol: float, height_fn: str) -> Probability:
    full, cyc = family("F4_full2"), family("F4_cyc4")
    area_full, err_full = area_R1(full, tol, height_fn)
    area_cyc, err_cyc = area_R1(cyc, tol, height_fn)
    closed = 121 * area_full / (121 * area_full + 1080 * area_cyc)
    # d(closed)/d(area) bounds, summed
    den = (121 * area_full + 1080 * area_cyc) ** 2
    err = (121 * 1080 * (area_cyc * err_full + area_full * err_cyc)) / den
    c_full = growth_constant(full, tol, height_fn)
    c_cyc = growth_constant(cyc, tol, height_fn)
    sieved = c_full.value / (c_full.value + c_cyc.value)
    components = {
        "area_full2": area_full, "area_cyc4": area_cyc,
        "c_full2": c_full.as_json(), "c_cyc4": c_cyc.as_json(),
        "closed_ratio": closed,
        "from_residue_sieve": sieved,
        "published_approximations": ["0.270", "0.272"],
    }
    notes = (
        "decimal is 121*Area(R4)/(121*Area(R4) + 1080*Area(R4')) with areas by quadrature",
        "from_residue_sieve replaces the factor 121/120 at 3 by the residue-count value",
        "published figures: 0.270 (closed ratio) and 0.272 (headline estimate)",
    )
    return Probability(4, None, "121*Area(R4)/(121*Area(R4)+1080*Area(R4'))", closed, err, components, notes)


def probability(m: int, tol: float = 1e-10, height_fn: str = "standard") -> Probability:
    if m in (5, 7):
        return _ell_probability(m, tol, height_fn)
    if m == 3:
        return _p3(tol, height_fn)
    if m == 4:
        return _p4(tol, height_fn)
    raise ValueError(f"no probability for m = {m}")


def constants_report(m: int, tol: float = 1e-9, height_fn: str = "standard") -> dict:
    """Everything the constants command prints, as JSON-ready data."""
    from .families import families_for

    fams = families_for(m)
    out = {"m": m, "height_fn": height_fn, "tol": tol, "areas": {}, "sieve_tables": {}, "growth_constants": {}}
    for fam in fams:
        area, err = area_R1(fam, tol, height_fn)
        out["areas"][fam.name] = {"value": area, "error": err}
        out["sieve_tables"][fam.name] = sieve_table(fam).as_json()
        out["growth_constants"][fam.name] = growth_constant(fam, tol, height_fn).as_json()
    if m == 4:
        out["areas"]["F4_cyc4_closed_form"] = float(exact_area_cyc4(height_fn))
        out["areas"]["F4_full2_ellipse"] = ellipse_area_full2(height_fn)
    out["probability"] = probability(m, tol, height_fn).as_json()
    return out
