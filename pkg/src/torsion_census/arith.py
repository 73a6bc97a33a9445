"""Exact arithmetic kernel.

Integers are Python ints and rationals are :class:`fractions.Fraction`, so
all arithmetic here is exact.  The module provides dense univariate
polynomials with generic coefficients, sparse bivariate polynomials,
subresultant resultants, rational-root finding by p-adic lifting, and the
quadratic-surd type :class:`QuadExact`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

Rational = Union[int, Fraction]


# ---------------------------------------------------------------------------
# integers and primes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _small_primes(limit: int) -> tuple[int, ...]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i:: i] = bytearray(len(range(i * i, limit + 1, i)))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def primes_up_to(limit: int) -> tuple[int, ...]:
    """All primes p <= limit."""
    if limit < 2:
        return ()
    return _small_primes(limit)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factor_small(n: int, primes: Iterable[int] | None = None) -> dict[int, int]:
    """Factor ``n`` over the given primes; the cofactor must be +-1.

    Raises ``ValueError`` if something is left over.  Intended for
    resultant bounds, which are smooth by construction.
    """
    if n == 0:
        raise ValueError("cannot factor zero")
    n = abs(n)
    out: dict[int, int] = {}
    for p in primes if primes is not None else primes_up_to(1000):
        if n == 1:
            break
        while n % p == 0:
            n //= p
            out[p] = out.get(p, 0) + 1
    if n != 1:
        raise ValueError(f"cofactor {n} is not smooth over the given primes")
    return out


def _pollard_brent(n: int) -> int:
    if n % 2 == 0:
        return 2
    for c in range(1, 100):
        y, r, q, g = 2, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(128, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += 128
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ArithmeticError(f"failed to split {n}")  # pragma: no cover


def factorize(n: int) -> dict[int, int]:
    """Complete prime factorization of a nonzero integer (sign dropped)."""
    if n == 0:
        raise ValueError("cannot factor zero")
    n = abs(n)
    out: dict[int, int] = {}
    for p in primes_up_to(1000):
        if p * p > n:
            break
        while n % p == 0:
            n //= p
            out[p] = out.get(p, 0) + 1
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_brent(m)
        stack.extend((d, m // d))
    return dict(sorted(out.items()))


def legendre_symbol(a: int, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p, by Euler's criterion."""
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def exact_sqrt(n: int) -> int | None:
    """The non-negative integer square root of n, or None if n is not a square."""
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def is_perfect_square(n: int) -> bool:
    return exact_sqrt(n) is not None


def iroot(n: int, k: int) -> int:
    """floor(n**(1/k)) for n >= 0, exact."""
    if n < 0:
        raise ValueError("iroot of a negative number")
    if n < 2:
        return n
    x = 1 << -(-n.bit_length() // k)  # an upper bound
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def is_perfect_power(n: int, k: int) -> bool:
    """True iff n = m**k for some integer m (sign allowed for odd k)."""
    if n < 0:
        return k % 2 == 1 and is_perfect_power(-n, k)
    return iroot(n, k) ** k == n


def as_fraction(x: Rational | str) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# univariate polynomials
# ---------------------------------------------------------------------------

def _is_zero(c) -> bool:
    return c == 0


class Poly:
    """Dense univariate polynomial, coefficients stored low degree first.

    Coefficients may be ints, Fractions, :class:`QuadExact` values, or any
    ring elements supporting ``+ - *`` and comparison with 0.  Instances are
    immutable and always trimmed, so the leading coefficient is nonzero
    (the zero polynomial has no coefficients).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = list(coeffs)
        while c and _is_zero(c[-1]):
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def from_high(cls, coeffs: Sequence) -> "Poly":
        """Build from coefficients listed highest degree first."""
        return cls(reversed(list(coeffs)))

    @classmethod
    def monomial(cls, k: int, c=1) -> "Poly":
        return cls([0] * k + [c])

    X: "Poly"

    # -- basic data ---------------------------------------------------------
    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def lc(self):
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __getitem__(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Poly({list(self.coeffs)})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if _is_zero(c):
                continue
            mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            terms.append(f"({c})*{mono}" if mono else f"({c})")
        return " + ".join(terms)

    # -- ring operations ----------------------------------------------------
    def _coerce(self, other) -> "Poly":
        return other if isinstance(other, Poly) else Poly([other])

    def __add__(self, other) -> "Poly":
        o = self._coerce(other).coeffs
        s = self.coeffs
        n = max(len(s), len(o))
        return Poly((s[i] if i < len(s) else 0) + (o[i] if i < len(o) else 0) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly(c * other for c in self.coeffs)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if _is_zero(x):
                continue
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        result, base = Poly([1]), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        """Euclidean division; requires an invertible leading coefficient."""
        if not other:
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quot = [0] * (dq + 1)
        lc = other.lc
        inv = Fraction(1) / lc if isinstance(lc, int) else 1 / lc
        for k in range(dq, -1, -1):
            c = rem[k + len(other.coeffs) - 1]
            if _is_zero(c):
                continue
            q = c * inv
            if isinstance(q, Fraction) and q.denominator == 1:
                q = q.numerator
            quot[k] = q
            for j, oc in enumerate(other.coeffs):
                rem[k + j] = rem[k + j] - q * oc
        return Poly(quot), Poly(rem)

    def __floordiv__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError("polynomial division is not exact")
        return q

    # -- evaluation and transforms ------------------------------------------
    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_mod(self, x: int, m: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % m
        return acc

    def deriv(self) -> "Poly":
        return Poly(k * c for k, c in enumerate(self.coeffs) if k)

    def compose(self, inner: "Poly") -> "Poly":
        acc = Poly()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def reciprocal(self) -> "Poly":
        """t^{deg h} h(1/t), keeping the degree of h (leading zeros drop)."""
        return Poly(reversed(self.coeffs))

    def map(self, fn: Callable) -> "Poly":
        return Poly(fn(c) for c in self.coeffs)

    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = math.gcd(g, int(c))
        return g

    def primitive(self) -> "Poly":
        g = self.content()
        if g == 0:
            return self
        if self.lc < 0:
            g = -g
        return Poly(c // g for c in self.coeffs)

    def homogenize(self, degree: int | None = None) -> "BivarPoly":
        """The form b^d h(a/b) as a :class:`BivarPoly` in (a, b)."""
        d = self.degree if degree is None else degree
        return BivarPoly({(k, d - k): c for k, c in enumerate(self.coeffs) if not _is_zero(c)})

    def is_integral(self) -> bool:
        return all(isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1)
                   for c in self.coeffs)

    def to_int(self) -> "Poly":
        return Poly(int(c) for c in self.coeffs)


Poly.X = Poly([0, 1])
IntPoly = Poly


def poly_gcd(f: Poly, g: Poly) -> Poly:
    """Monic gcd over Q."""
    a = f.map(Fraction)
    b = g.map(Fraction)
    while b:
        a, b = b, a % b
    if not a:
        return a
    return a * (Fraction(1) / a.lc)


# ---------------------------------------------------------------------------
# resultant
# ---------------------------------------------------------------------------

def _pseudo_rem(a: Poly, b: Poly) -> Poly:
    """lc(b)^(deg a - deg b + 1) * a mod b, in integer arithmetic."""
    r = list(a.coeffs)
    db = b.degree
    lcb = b.lc
    e = a.degree - db + 1
    while len(r) - 1 >= db and any(r):
        while r and r[-1] == 0:
            r.pop()
        if len(r) - 1 < db:
            break
        c = r[-1]
        shift = len(r) - 1 - db
        r = [x * lcb for x in r]
        for j, bc in enumerate(b.coeffs):
            r[shift + j] -= c * bc
        r.pop()
        e -= 1
    return Poly(x * lcb ** e for x in r)


def resultant(f: Poly, g: Poly) -> int:
    """Res(f, g) of integer polynomials by the subresultant algorithm.

    Uses the convention Res(f, g) = lc(f)^deg g * prod g(roots of f).
    """
    if not f and not g:
        raise ValueError("resultant of two zero polynomials")
    if not f or not g:
        return 0
    a_pol, b_pol = f.to_int(), g.to_int()
    sign = 1
    if a_pol.degree < b_pol.degree:
        a_pol, b_pol = b_pol, a_pol
        if a_pol.degree % 2 and b_pol.degree % 2:
            sign = -1
    if b_pol.degree == 0:
        return sign * b_pol.lc ** a_pol.degree
    ca, cb = a_pol.content(), b_pol.content()
    a_pol = Poly(c // ca for c in a_pol.coeffs)
    b_pol = Poly(c // cb for c in b_pol.coeffs)
    t = ca ** b_pol.degree * cb ** a_pol.degree
    gg, h = 1, 1
    while True:
        delta = a_pol.degree - b_pol.degree
        if a_pol.degree % 2 and b_pol.degree % 2:
            sign = -sign
        r = _pseudo_rem(a_pol, b_pol)
        a_pol = b_pol
        div = gg * h ** delta
        b_pol = Poly(c // div for c in r.coeffs)
        if any(c % div for c in r.coeffs):
            raise ArithmeticError("subresultant division not exact")
        gg = a_pol.lc
        h = gg ** delta // h ** (delta - 1) if delta >= 1 else h
        if not b_pol:
            return 0
        if b_pol.degree == 0:
            break
    da = a_pol.degree
    h = b_pol.lc ** da // h ** (da - 1) if da >= 1 else h
    return sign * t * h


def sylvester_resultant(f: Poly, g: Poly) -> Fraction:
    """Res(f, g) as the Sylvester determinant, by exact Gaussian elimination."""
    m, n = f.degree, g.degree
    size = m + n
    if size == 0:
        return Fraction(1)
    rows = []
    fh = list(reversed(f.coeffs))
    gh = list(reversed(g.coeffs))
    for i in range(n):
        rows.append([0] * i + fh + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + gh + [0] * (size - n - 1 - i))
    mat = [[Fraction(x) for x in row] for row in rows]
    det = Fraction(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if mat[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            mat[col], mat[piv] = mat[piv], mat[col]
            det = -det
        det *= mat[col][col]
        for r in range(col + 1, size):
            if mat[r][col] != 0:
                factor = mat[r][col] / mat[col][col]
                mat[r] = [x - factor * y for x, y in zip(mat[r], mat[col])]
    return det


def resultant_bound(f: Poly, g: Poly) -> int:
    """lcm(Res(f, g), Res(f^rec, g^rec)), the bound on minimality defects."""
    r1 = resultant(f, g)
    r2 = resultant(f.reciprocal(), g.reciprocal())
    return abs(r1 * r2) // math.gcd(r1, r2)


# ---------------------------------------------------------------------------
# roots
# ---------------------------------------------------------------------------

def _roots_mod_p(coeffs: Sequence[int], p: int) -> list[int]:
    reduced = [c % p for c in coeffs]
    out = []
    for x in range(p):
        acc = 0
        for c in reversed(reduced):
            acc = (acc * x + c) % p
        if acc == 0:
            out.append(x)
    return out


def _poly_mod_p_gcd_is_one(f: Sequence[int], p: int) -> bool:
    """True iff f mod p is squarefree of the same degree (for lifting)."""
    a = [c % p for c in f]
    if a[-1] == 0:
        return False
    b = [(k * c) % p for k, c in enumerate(f)][1:]

    def trim(v):
        while v and v[-1] == 0:
            v.pop()
        return v

    a, b = trim(a), trim(b)
    while b:
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b) and a:
            q = a[-1] * inv % p
            s = len(a) - len(b)
            for j, c in enumerate(b):
                a[s + j] = (a[s + j] - q * c) % p
            trim(a)
        a, b = b, a
    return len(a) == 1


def lift_root(coeffs: Sequence[int], r: int, p: int, modulus_floor: int) -> tuple[int, int]:
    """Newton-lift a simple root r of f mod p to modulus >= modulus_floor.

    Returns (root mod M, M) with M a power of p.
    """
    m = p
    deriv = [k * c for k, c in enumerate(coeffs)][1:]
    while m < modulus_floor:
        m = m * m
        fx = 0
        for c in reversed(coeffs):
            fx = (fx * r + c) % m
        dfx = 0
        for c in reversed(deriv):
            dfx = (dfx * r + c) % m
        r = (r - fx * pow(dfx, -1, m)) % m
    return r, m


def root_bound(coeffs: Sequence[int]) -> int:
    """An integer bound on the absolute value of every complex root (Fujiwara)."""
    n = len(coeffs) - 1
    lc = abs(coeffs[-1])
    best = 0.0
    for k in range(1, n + 1):
        c = abs(coeffs[n - k])
        if c == 0:
            continue
        # logarithms keep this finite for huge coefficients
        val = math.exp((math.log(c) - math.log(lc) - (math.log(2) if k == n else 0.0)) / k)
        best = max(best, val)
    return int(2 * best) + 2


def integer_roots(coeffs: Sequence[int]) -> list[int]:
    """All integer roots of a squarefree-or-not integer polynomial (low first)."""
    f = Poly(coeffs).to_int()
    if not f:
        raise ValueError("zero polynomial")
    roots = []
    # strip the root 0
    k = 0
    while f.coeffs[k] == 0:
        k += 1
    if k:
        roots.append(0)
        f = Poly(f.coeffs[k:])
    if f.degree <= 0:
        return roots
    sqf = f.exact_div(poly_gcd(f, f.deriv())) if f.degree > 1 else f.map(Fraction)
    den = 1
    for c in sqf.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator) if isinstance(c, Fraction) else den
    sqf = Poly(int(c * den) for c in sqf.coeffs).primitive()
    if sqf.degree == 1:
        a0, a1 = sqf.coeffs
        if a0 % a1 == 0:
            roots.append(-a0 // a1)
        return sorted(set(roots))
    bound = root_bound(sqf.coeffs)
    for p in primes_up_to(100000)[3:]:
        if _poly_mod_p_gcd_is_one(sqf.coeffs, p):
            break
    else:  # pragma: no cover - a squarefree poly has finitely many bad primes
        raise ArithmeticError("no suitable prime for lifting")
    for r in _roots_mod_p(sqf.coeffs, p):
        x, m = lift_root(sqf.coeffs, r, p, 2 * bound + 1)
        if x > m // 2:
            x -= m
        if sqf(x) == 0:
            roots.append(x)
    return sorted(set(roots))


def rational_roots(f: Poly | Sequence[Rational]) -> set[Fraction]:
    """Exactly the rational roots of a nonzero polynomial with rational coefficients."""
    if not isinstance(f, Poly):
        f = Poly(f)
    if not f:
        raise ValueError("rational_roots of the zero polynomial")
    den = 1
    for c in f.coeffs:
        if isinstance(c, Fraction):
            den = den * c.denominator // math.gcd(den, c.denominator)
    f = Poly(int(c * den) for c in f.coeffs)
    out: set[Fraction] = set()
    k = 0
    while f.coeffs[k] == 0:
        k += 1
    if k:
        out.add(Fraction(0))
        f = Poly(f.coeffs[k:])
    n = f.degree
    if n <= 0:
        return out
    lc = f.lc
    # monic transform g(y) = lc^(n-1) f(y / lc)
    g = [c * lc ** (n - 1 - i) for i, c in enumerate(f.coeffs[:-1])] + [1]
    for y in integer_roots(g):
        out.add(Fraction(y, lc))
    return out


# ---------------------------------------------------------------------------
# bivariate polynomials
# ---------------------------------------------------------------------------

class BivarPoly:
    """Sparse polynomial in (a, b): a map (i, j) -> coefficient of a^i b^j."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[int, int], object] | None = None):
        clean = {k: v for k, v in (terms or {}).items() if not _is_zero(v)}
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("BivarPoly is immutable")

    @classmethod
    def var_a(cls) -> "BivarPoly":
        return cls({(1, 0): 1})

    @classmethod
    def var_b(cls) -> "BivarPoly":
        return cls({(0, 1): 1})

    @classmethod
    def const(cls, c) -> "BivarPoly":
        return cls({(0, 0): c})

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivarPoly):
            other = BivarPoly.const(other)
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"BivarPoly({dict(sorted(self.terms.items()))})"

    @property
    def total_degree(self) -> int:
        return max((i + j for i, j in self.terms), default=-1)

    @property
    def degree_a(self) -> int:
        return max((i for i, _ in self.terms), default=-1)

    @property
    def degree_b(self) -> int:
        return max((j for _, j in self.terms), default=-1)

    def weighted_degrees(self, wa: int, wb: int) -> set[int]:
        return {wa * i + wb * j for i, j in self.terms}

    def _coerce(self, other) -> "BivarPoly":
        return other if isinstance(other, BivarPoly) else BivarPoly.const(other)

    def __add__(self, other) -> "BivarPoly":
        out = dict(self.terms)
        for k, v in self._coerce(other).terms.items():
            out[k] = out.get(k, 0) + v
        return BivarPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "BivarPoly":
        return BivarPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> "BivarPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "BivarPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "BivarPoly":
        other = self._coerce(other)
        out: dict[tuple[int, int], object] = {}
        for (i1, j1), v1 in self.terms.items():
            for (i2, j2), v2 in other.terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, 0) + v1 * v2
        return BivarPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "BivarPoly":
        result, base = BivarPoly.const(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __call__(self, a, b):
        total = 0
        for (i, j), c in self.terms.items():
            total = total + c * a ** i * b ** j
        return total

    def substitute(self, a_expr: "BivarPoly", b_expr: "BivarPoly") -> "BivarPoly":
        """Compose with polynomial substitutions a -> a_expr, b -> b_expr."""
        total = BivarPoly()
        pa: dict[int, BivarPoly] = {0: BivarPoly.const(1)}
        pb: dict[int, BivarPoly] = {0: BivarPoly.const(1)}
        for (i, j), c in self.terms.items():
            for store, expr, k in ((pa, a_expr, i), (pb, b_expr, j)):
                top = max(store)
                while top < k:
                    store[top + 1] = store[top] * expr
                    top += 1
            total = total + pa[i] * pb[j] * c
        return total

    def map(self, fn: Callable) -> "BivarPoly":
        return BivarPoly({k: fn(v) for k, v in self.terms.items()})

    def dehomogenize(self) -> Poly:
        """Set b = 1 and return the polynomial in a."""
        coeffs: dict[int, object] = {}
        for (i, _), c in self.terms.items():
            coeffs[i] = coeffs.get(i, 0) + c
        top = max(coeffs, default=-1)
        return Poly(coeffs.get(k, 0) for k in range(top + 1))


# ---------------------------------------------------------------------------
# quadratic surds
# ---------------------------------------------------------------------------

def squarefree_part(n: int) -> tuple[int, int]:
    """Write n = k^2 * d with d squarefree; return (k, d) (n >= 0)."""
    if n < 0:
        raise ValueError("negative input")
    if n == 0:
        return 0, 0
    k, d = 1, 1
    m = n
    for p in primes_up_to(10000):
        if p * p > m:
            break
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        k *= p ** (e // 2)
        d *= p ** (e % 2)
    r = exact_sqrt(m)
    if r is not None:
        k *= r
    else:
        d *= m
    return k, d


@dataclass(frozen=True)
class QuadExact:
    """The real number p + q*sqrt(D) with p, q rational and D squarefree >= 0.

    D in {0, 1} is normalized away so that the value is a pure rational
    (stored with D = 0, q = 0).  Arithmetic between two irrational values
    requires equal D.
    """

    p: Fraction
    q: Fraction
    D: int

    def __init__(self, p: Rational = 0, q: Rational = 0, D: int = 0):
        p, q = Fraction(p), Fraction(q)
        if D < 0:
            raise ValueError("D must be non-negative")
        if D > 1:
            k, d = squarefree_part(D)
            q *= k
            D = d
        if D == 1:
            p, q, D = p + q, Fraction(0), 0
        if D == 0 or q == 0:
            q, D = Fraction(0), 0
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "D", D)

    @classmethod
    def sqrt(cls, n: Rational) -> "QuadExact":
        """sqrt(n) for a non-negative rational n."""
        n = Fraction(n)
        if n < 0:
            raise ValueError("sqrt of a negative rational")
        # sqrt(a/b) = sqrt(a*b)/b
        return cls(0, Fraction(1, n.denominator), n.numerator * n.denominator)

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def _common(self, other) -> tuple["QuadExact", int]:
        if not isinstance(other, QuadExact):
            other = QuadExact(other)
        if self.D and other.D and self.D != other.D:
            raise ValueError(f"mixed radicands sqrt({self.D}) and sqrt({other.D})")
        return other, self.D or other.D

    def __add__(self, other) -> "QuadExact":
        other, D = self._common(other)
        return QuadExact(self.p + other.p, self.q + other.q, D)

    __radd__ = __add__

    def __neg__(self) -> "QuadExact":
        return QuadExact(-self.p, -self.q, self.D)

    def __sub__(self, other) -> "QuadExact":
        other, D = self._common(other)
        return QuadExact(self.p - other.p, self.q - other.q, D)

    def __rsub__(self, other) -> "QuadExact":
        return QuadExact(other) - self

    def __mul__(self, other) -> "QuadExact":
        other, D = self._common(other)
        return QuadExact(self.p * other.p + self.q * other.q * D,
                         self.p * other.q + self.q * other.p, D)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadExact":
        return QuadExact(self.p, -self.q, self.D)

    def norm(self) -> Fraction:
        return self.p * self.p - self.q * self.q * self.D

    def inverse(self) -> "QuadExact":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadExact(self.p / n, -self.q / n, self.D)

    def __truediv__(self, other) -> "QuadExact":
        other, _ = self._common(other)
        return self * other.inverse()

    def __rtruediv__(self, other) -> "QuadExact":
        return QuadExact(other) * self.inverse()

    def __pow__(self, k: int) -> "QuadExact":
        if k < 0:
            return self.inverse() ** (-k)
        result, base = QuadExact(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def sign(self) -> int:
        """Exact sign of p + q*sqrt(D)."""
        sp = (self.p > 0) - (self.p < 0)
        sq = (self.q > 0) - (self.q < 0)
        if sq == 0:
            return sp
        if sp == 0 or sp == sq:
            return sq
        # opposite signs: compare p^2 with q^2 D
        diff = self.p * self.p - self.q * self.q * self.D
        return sp if diff > 0 else (-sp if diff < 0 else 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadExact):
            try:
                other = QuadExact(other)
            except (TypeError, ValueError):
                return NotImplemented
        return (self.p, self.q, self.D) == (other.p, other.q, other.D)

    def __hash__(self) -> int:
        return hash((self.p, self.q, self.D))

    def __lt__(self, other) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - other).sign() >= 0

    def __abs__(self) -> "QuadExact":
        return -self if self.sign() < 0 else self

    def __float__(self) -> float:
        return float(self.p) + float(self.q) * math.sqrt(self.D)

    def to_mpf(self, dps: int = 50):
        import mpmath

        with mpmath.workdps(dps):
            return mpmath.mpf(self.p.numerator) / self.p.denominator + \
                mpmath.mpf(self.q.numerator) / self.q.denominator * mpmath.sqrt(self.D)

    def __str__(self) -> str:
        if self.q == 0:
            return str(self.p)
        rad = f"sqrt({self.D})"
        qs = rad if self.q == 1 else (f"-{rad}" if self.q == -1 else f"{self.q}*{rad}")
        if self.p == 0:
            return qs
        if qs.startswith("-"):
            return f"{self.p} - {qs[1:]}"
        return f"{self.p} + {qs}"

    def __repr__(self) -> str:
        return f"QuadExact({self.p}, {self.q}, {self.D})"
