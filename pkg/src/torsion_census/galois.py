"""Finite group theory of the l-adic groups G_l(n; r, s).

G_l(n; r, s) is the group of invertible 2x2 matrices over Z_l of shape

    [ 1 + l^r Z_l    l^s Z_l       ]
    [ l^(n-s) Z_l    1 + l^(n-r) Z_l ]

where an exponent 0 on a diagonal entry means "any unit".  Everything here
is computed twice where possible: once by closed form and once by brute
force enumeration of the reduction modulo l^k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .arith import is_prime

Matrix = tuple[int, int, int, int]  # (a, b, c, d) for [[a, b], [c, d]]

MODULUS_CAP = 10 ** 4
ELEMENT_CAP = 3 * 10 ** 6


class TooLarge(ValueError):
    pass


@dataclass(frozen=True, order=True)
class GroupSpec:
    ell: int
    n: int
    r: int
    s: int

    def __post_init__(self):
        if not is_prime(self.ell):
            raise ValueError(f"ell={self.ell} is not prime")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (0 <= self.r <= self.n and 0 <= self.s <= self.n):
            raise ValueError(f"need 0 <= r, s <= n, got {self}")

    @property
    def modulus(self) -> int:
        return self.ell ** self.n

    @property
    def is_normalized(self) -> bool:
        return self.r + self.s <= self.n

    def swapped(self) -> "GroupSpec":
        return GroupSpec(self.ell, self.n, self.n - self.r, self.n - self.s)

    def normalized(self) -> "GroupSpec":
        return self if self.is_normalized else self.swapped()

    def __str__(self) -> str:
        return f"G_{self.ell}({self.n};{self.r},{self.s})"


def normalized_specs(ell: int, n: int) -> list[GroupSpec]:
    return [GroupSpec(ell, n, r, s) for r in range(n + 1) for s in range(n + 1) if r + s <= n]


# ---------------------------------------------------------------------------
# matrix groups mod N
# ---------------------------------------------------------------------------

def mat_mul(x: Matrix, y: Matrix, N: int) -> Matrix:
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % N, (a * f + b * h) % N, (c * e + d * g) % N, (c * f + d * h) % N)


def mat_det(x: Matrix, N: int) -> int:
    return (x[0] * x[3] - x[1] * x[2]) % N


def mat_inv(x: Matrix, N: int) -> Matrix:
    a, b, c, d = x
    di = pow((a * d - b * c) % N, -1, N)
    return ((d * di) % N, (-b * di) % N, (-c * di) % N, (a * di) % N)


def _is_unit(x: int, N: int) -> bool:
    return math.gcd(x, N) == 1


@dataclass(frozen=True)
class FiniteMatrixGroup:
    modulus: int
    elements: frozenset

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> Matrix:
        return (1 % self.modulus, 0, 0, 1 % self.modulus)

    def __contains__(self, g: Matrix) -> bool:
        return g in self.elements

    def sl2_part(self) -> "FiniteMatrixGroup":
        N = self.modulus
        return FiniteMatrixGroup(N, frozenset(g for g in self.elements if mat_det(g, N) == 1 % N))

    def is_group(self) -> bool:
        N = self.modulus
        if self.identity not in self.elements:
            return False
        gens = self.generators()
        return all(mat_mul(g, h, N) in self.elements for g in self.elements for h in gens) and \
            all(mat_inv(g, N) in self.elements for g in gens)

    def generators(self) -> list[Matrix]:
        """A small generating set, grown greedily."""
        N = self.modulus
        gens: list[Matrix] = []
        span = {self.identity}
        for g in sorted(self.elements):
            if g in span:
                continue
            gens.append(g)
            frontier = list(span)
            span_new = set(span)
            while frontier:
                nxt = []
                for x in frontier:
                    for h in gens:
                        y = mat_mul(x, h, N)
                        if y not in span_new:
                            span_new.add(y)
                            nxt.append(y)
                frontier = nxt
            span = span_new
            if len(span) == len(self.elements):
                break
        return gens


def _diag_residues(ell: int, k: int, M: int) -> list[int]:
    if k == 0:
        return [x for x in range(M) if x % ell]
    step = ell ** k
    return sorted({(1 + step * t) % M for t in range(max(1, M // step))})


def _offdiag_residues(ell: int, k: int, M: int) -> list[int]:
    step = ell ** k
    return sorted({(step * t) % M for t in range(max(1, M // step))})


def _check_modulus(M: int) -> None:
    if M > MODULUS_CAP:
        raise TooLarge(f"modulus {M} exceeds the enumeration cap {MODULUS_CAP}")


@lru_cache(maxsize=256)
def reduce(spec: GroupSpec, k: int | None = None) -> FiniteMatrixGroup:
    """All elements of G_l(n; r, s) mod l^k, by enumerating the four entries."""
    ell, n, r, s = spec.ell, spec.n, spec.r, spec.s
    k = n if k is None else k
    if not 1 <= k:
        raise ValueError("k must be positive")
    M = ell ** k
    _check_modulus(M)
    A = _diag_residues(ell, r, M)
    Bs = _offdiag_residues(ell, s, M)
    Cs = _offdiag_residues(ell, n - s, M)
    D = _diag_residues(ell, n - r, M)
    if len(A) * len(Bs) * len(Cs) * len(D) > ELEMENT_CAP:
        raise TooLarge(f"{spec} mod {M} has too many elements to enumerate")
    els = frozenset((a, b, c, d) for a in A for b in Bs for c in Cs for d in D
                    if (a * d - b * c) % ell)
    return FiniteMatrixGroup(M, els)


def gl2_order(N: int) -> int:
    out = N ** 4
    for p in _prime_divisors(N):
        out = out * (p - 1) * (p * p - 1) // p ** 3
    return out


def sl2_order(N: int) -> int:
    out = N ** 3
    for p in _prime_divisors(N):
        out = out * (p * p - 1) // (p * p)
    return out


def _prime_divisors(N: int) -> list[int]:
    out, p = [], 2
    while p * p <= N:
        if N % p == 0:
            out.append(p)
            while N % p == 0:
                N //= p
        p += 1
    if N > 1:
        out.append(N)
    return out


@lru_cache(maxsize=None)
def gl2_elements(N: int) -> tuple[Matrix, ...]:
    if N > 16:
        raise TooLarge(f"GL2(Z/{N}) enumeration capped at N = 16")
    return tuple(g for g in itertools.product(range(N), repeat=4) if _is_unit(mat_det(g, N), N))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def index_in_GL2(spec: GroupSpec) -> int:
    ell, n = spec.ell, spec.n
    if min(spec.r, n - spec.r) >= 1:
        return ell ** (2 * n - 3) * (ell * ell - 1) * (ell - 1)
    return ell ** (2 * n - 2) * (ell * ell - 1)


@dataclass(frozen=True)
class DetImage:
    """det G = 1 + l^exponent Z_l."""

    ell: int
    exponent: int

    @property
    def surjective(self) -> bool:
        return self.exponent == 0 or (self.ell == 2 and self.exponent <= 1)

    def __str__(self) -> str:
        if self.exponent == 0:
            return f"Z_{self.ell}^x"
        return f"1 + {self.ell}^{self.exponent} Z_{self.ell}"


def det_image(spec: GroupSpec) -> DetImage:
    return DetImage(spec.ell, min(spec.r, spec.n - spec.r))


def det_values(spec: GroupSpec, k: int | None = None) -> set[int]:
    G = reduce(spec, k)
    return {mat_det(g, G.modulus) for g in G.elements}


def is_torsion_free(spec: GroupSpec) -> bool:
    """Closed form: l^n >= 5."""
    return spec.modulus >= 5


def torsion_candidates(spec: GroupSpec) -> list[Matrix]:
    """Elements g != 1 of the SL2 part mod l^n whose trace is that of a
    nontrivial finite-order element of SL2(Z) (trace -2, -1, 0 or 1).

    An empty list certifies that the congruence subgroup is torsion free.
    """
    G = reduce(spec, spec.n)
    N = G.modulus
    traces = {t % N for t in (-2, -1, 0, 1)}
    ident = G.identity
    return sorted(g for g in G.sl2_part().elements
                  if g != ident and (g[0] + g[3]) % N in traces)


def torsion_witness(spec: GroupSpec, entry_bound: int = 6) -> Matrix | None:
    """An integer matrix of finite order != 1 in SL2(Z) lying in the
    congruence subgroup, found by search over small entries, or None."""
    G = reduce(spec, spec.n)
    N = G.modulus
    rng = range(-entry_bound, entry_bound + 1)
    for a, b, c in itertools.product(rng, repeat=3):
        for d in rng:
            if a * d - b * c != 1 or a + d not in (-2, -1, 0, 1):
                continue
            if (a, b, c, d) == (1, 0, 0, 1):
                continue
            if a + d == -2 and (a, b, c, d) != (-1, 0, 0, -1):
                continue  # parabolic, infinite order
            if (a % N, b % N, c % N, d % N) in G:
                return (a, b, c, d)
    return None


# ---------------------------------------------------------------------------
# brute-force invariants
# ---------------------------------------------------------------------------

def brute_index_in_GL2(spec: GroupSpec) -> int:
    G = reduce(spec, spec.n)
    return gl2_order(G.modulus) // G.order


def sl2_index(spec: GroupSpec) -> int:
    """[SL2(Z/l^n) : G cap SL2] by enumeration."""
    G = reduce(spec, spec.n)
    return sl2_order(G.modulus) // G.sl2_part().order


def d_of(specs: GroupSpec | Sequence[GroupSpec]) -> Fraction:
    """d = (product of SL2 indices) / 4 for a product of groups at distinct primes."""
    if isinstance(specs, GroupSpec):
        specs = [specs]
    ells = [s.ell for s in specs]
    if len(set(ells)) != len(ells):
        raise ValueError("one group per prime")
    idx = 1
    for s in specs:
        idx *= sl2_index(s)
    return Fraction(idx, 4)


def normalizer_index(G: FiniteMatrixGroup) -> int:
    """r(G) = [N_{GL2(Z/N)}(G) : G] by exhaustive search."""
    N = G.modulus
    gens = G.generators()
    count = 0
    for g in gl2_elements(N):
        gi = mat_inv(g, N)
        if all(mat_mul(mat_mul(g, h, N), gi, N) in G.elements for h in gens):
            count += 1
    return count // G.order


def borel_unipotent(N: int) -> FiniteMatrixGroup:
    """{[[1, b], [0, d]]} mod N, the reduction of G_l(1; 1, 0) at N = l."""
    return FiniteMatrixGroup(N, frozenset((1 % N, b, 0, d) for b in range(N) for d in range(N)
                                          if _is_unit(d, N)))


def full_gl2(N: int) -> FiniteMatrixGroup:
    return FiniteMatrixGroup(N, frozenset(gl2_elements(N)))


def isogeny_transition(spec: GroupSpec, k: int, branch: str) -> GroupSpec:
    """Image group for the curve reached by a cyclic l^k-isogeny."""
    n, r = spec.n, spec.r
    if spec.s != n - r:
        raise ValueError("transitions start from a spec with s = n - r")
    if k < 0:
        raise ValueError("k must be non-negative")
    if branch == "first":
        if k > n - r:
            raise ValueError(f"k={k} exceeds n-r={n - r}")
        return GroupSpec(spec.ell, n, r, n - r - k)
    if branch == "second":
        if k > r:
            raise ValueError(f"k={k} exceeds r={r}")
        return GroupSpec(spec.ell, n, n - r, r - k)
    raise ValueError(f"unknown branch {branch!r}")


def transition_paths(spec: GroupSpec) -> list[tuple[str, int, GroupSpec]]:
    out = []
    for k in range(spec.n - spec.r + 1):
        out.append(("first", k, isogeny_transition(spec, k, "first")))
    for k in range(spec.r + 1):
        out.append(("second", k, isogeny_transition(spec, k, "second")))
    return out


def fixed_vectors(spec: GroupSpec) -> list[tuple[int, int]]:
    G = reduce(spec, spec.n)
    N = G.modulus
    gens = G.generators()
    return [(x, y) for x in range(N) for y in range(N)
            if all(((a * x + b * y) - x) % N == 0 and ((c * x + d * y) - y) % N == 0
                   for a, b, c, d in gens)]


def fixed_subgroup_structure(spec: GroupSpec) -> tuple[int, int]:
    """Exponents (u, v), u >= v, with fixed subgroup isomorphic to Z/l^u x Z/l^v."""
    vecs = fixed_vectors(spec)
    ell, N = spec.ell, spec.modulus
    size = len(vecs)
    total = round(math.log(size, ell))
    exponent = 0
    for x, y in vecs:
        g = math.gcd(math.gcd(x, y), N)
        exponent = max(exponent, round(math.log(N // g, ell)))
    return exponent, total - exponent


def sl2_parts_equal(spec_a: GroupSpec, spec_b: GroupSpec) -> bool:
    return reduce(spec_a, spec_a.n).sl2_part().elements == reduce(spec_b, spec_b.n).sl2_part().elements


# ---------------------------------------------------------------------------
# published degree table (reference data; each row is checked by brute force)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeRow:
    m: int
    label: str
    products: tuple[tuple[GroupSpec, ...], ...]
    published_d: int
    torsion: str


def _all_surjective(ell: int, n: int) -> list[GroupSpec]:
    return [s for s in normalized_specs(ell, n) if det_image(s).surjective]


def _products(*factors: Iterable[GroupSpec]) -> tuple[tuple[GroupSpec, ...], ...]:
    return tuple(itertools.product(*[list(f) for f in factors]))


def published_degree_table() -> list[DegreeRow]:
    G = GroupSpec
    return [
        DegreeRow(5, "all", _products(_all_surjective(5, 1)), 6, "0, Z/5"),
        DegreeRow(6, "all", _products(_all_surjective(2, 1), _all_surjective(3, 1)), 6, "Z/2, Z/6"),
        DegreeRow(7, "all", _products(_all_surjective(7, 1)), 12, "0, Z/7"),
        DegreeRow(8, "G_2(3;r,0), r=1,2,3", tuple((G(2, 3, r, 0),) for r in (1, 2, 3)), 12, "Z/2^r"),
        DegreeRow(8, "G_2(3;r,1), r=1,2", tuple((G(2, 3, r, 1),) for r in (1, 2)), 6, "Z/2^r x Z/2"),
        DegreeRow(9, "all", _products(_all_surjective(3, 2)), 18, "0, Z/3, Z/9"),
        DegreeRow(10, "all", _products(_all_surjective(2, 1), _all_surjective(5, 1)), 18, "Z/2, Z/10"),
        DegreeRow(12, "G_2(4;r,0) x G_3(1;0,0), r=1,2",
                  tuple((G(2, 2, r, 0), G(3, 1, 0, 0)) for r in (1, 2)), 24, "Z/2^r"),
        DegreeRow(12, "G_2(4;1,1) x G_3(1;1,0)", ((G(2, 2, 1, 1), G(3, 1, 1, 0)),), 12, "Z/6 x Z/2"),
        DegreeRow(16, "all", _products(_all_surjective(2, 4)), 24, "Z/2^r x Z/2, r=0..3"),
    ]


@dataclass(frozen=True)
class RowCheck:
    row: DegreeRow
    product: tuple[GroupSpec, ...]
    brute_d: Fraction
    closed_d: Fraction
    matches_published: bool


def check_degree_table() -> list[RowCheck]:
    """Brute-force d for every group in every row of the published table."""
    out = []
    for row in published_degree_table():
        for prod in row.products:
            brute = d_of(prod)
            closed = Fraction(math.prod(index_in_GL2(s) for s in prod), 4)
            out.append(RowCheck(row, prod, brute, closed, brute == row.published_d))
    return out


def group_suite_rows(max_modulus: int = 49) -> list[dict]:
    """(spec, closed-form index, brute-force index, d, r(G)) for normalized specs."""
    rows = []
    for ell in (2, 3, 5, 7):
        n = 1
        while ell ** n <= max_modulus:
            for spec in normalized_specs(ell, n):
                G = reduce(spec, n)
                r_of_g = normalizer_index(G) if G.modulus <= 16 else None
                rows.append({
                    "spec": str(spec),
                    "closed_index": index_in_GL2(spec),
                    "brute_index": gl2_order(G.modulus) // G.order,
                    "d": str(d_of(spec)),
                    "r": r_of_g,
                })
            n += 1
    return rows
