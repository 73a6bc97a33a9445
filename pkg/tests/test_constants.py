import json
import math
import random
from fractions import Fraction

import mpmath
import pytest

from torsion_census.arith import QuadExact
from torsion_census.constants import (NonConvergence, UnsupportedExponent, area_R1, area_ratio_7,
                                      bounding_box, constants_report, ellipse_area_full2,
                                      exact_area_cyc4, growth_constant, local_correction,
                                      local_nonminimal_density, probability, sieve_sum, sieve_table,
                                      zeta, zeta_exponent)
from torsion_census.families import catalog, family

PUBLISHED_TABLES = {
    "F5_tors": {1: Fraction(1)},
    "F5_isog": {1: Fraction(29, 30), 5: Fraction(1, 30)},
    "F7_tors": {1: Fraction(3, 4), 3: Fraction(1, 4)},
    "F7_isog": {1: Fraction(21, 32), 3: Fraction(7, 32), 7: Fraction(3, 32), 21: Fraction(1, 32)},
}


def sampled_defects(name, samples, seed, box=10 ** 4):
    """Empirical defect distribution over random coprime pairs, by direct divisibility tests."""
    fam = family(name)
    primes = [p for p in (2, 3, 5, 7) if fam.resultant_bound() % p == 0]
    rng = random.Random(seed)
    counts = {}
    n = 0
    while n < samples:
        a, b = rng.randint(-box, box), rng.randint(-box, box)
        if math.gcd(a, b) != 1:
            continue
        A, B = fam.A(a, b), fam.B(a, b)
        if 4 * A ** 3 + 27 * B ** 2 == 0:
            continue
        e = 1
        for p in primes:
            while A % (e * p) ** 4 == 0 and B % (e * p) ** 6 == 0:
                e *= p
        counts[e] = counts.get(e, 0) + 1
        n += 1
    return counts, n


class TestSieveTables:
    @pytest.mark.parametrize("name", sorted(PUBLISHED_TABLES))
    def test_published_fractions(self, name):
        assert sieve_table(name).deltas == PUBLISHED_TABLES[name]

    @pytest.mark.parametrize("name", [f.name for f in catalog()])
    def test_sums_to_one_and_divides_bound(self, name):
        table = sieve_table(name)
        assert table.total() == 1
        bound = family(name).resultant_bound()
        if bound is not None:
            assert all(bound % e == 0 for e in table.deltas)

    @pytest.mark.parametrize("name,d,expected", [("F5_isog", 6, Fraction(9, 5)), ("F7_tors", 12, Fraction(3, 2)),
                                                 ("F7_isog", 12, Fraction(21, 8)), ("F5_tors", 6, Fraction(1))])
    def test_sieve_sums(self, name, d, expected):
        assert sieve_sum(sieve_table(name), d) == expected

    def test_fractional_exponent(self):
        with pytest.raises(UnsupportedExponent):
            sieve_sum(sieve_table("F5_isog"), 5)

    def test_json_is_exact(self):
        assert sieve_table("F5_isog").as_json()["deltas"] == {"1": "29/30", "5": "1/30"}

    @pytest.mark.parametrize("name,seed", [("F5_isog", 11), ("F7_tors", 12), ("F7_isog", 13)])
    def test_random_sampling_agrees(self, name, seed):
        counts, n = sampled_defects(name, 10 ** 6, seed)
        for e, delta in sieve_table(name).deltas.items():
            p = float(delta)
            sigma = math.sqrt(p * (1 - p) / n)
            assert abs(counts.get(e, 0) / n - p) <= 3 * sigma, (e, counts.get(e, 0), n)
        assert set(counts) <= set(sieve_table(name).deltas)


class TestLocalDensities:
    @pytest.mark.parametrize("name,p,expected", [("F4_full2", 2, Fraction(1, 16)), ("F4_full2", 3, Fraction(1, 81)),
                                                 ("F3_tors", 3, Fraction(1, 81)), ("F3_twist", 3, Fraction(1, 81))])
    def test_values(self, name, p, expected):
        assert local_nonminimal_density(name, p) == expected

    @pytest.mark.parametrize("name", ["F4_full2", "F3_tors"])
    def test_brute_force_residues(self, name):
        # 3^4 | A depends on (u, v) mod 3^4 and 3^6 | B on (u, v) mod 3^6
        fam = family(name)
        mod = 3 ** 6
        A_terms = [(i, j, int(c)) for (i, j), c in fam.int_A.terms.items()]
        B_terms = [(i, j, int(c)) for (i, j), c in fam.int_B.terms.items()]
        hits = 0
        for u in range(mod):
            for v in range(mod):
                if sum(c * u ** i * v ** j for i, j, c in A_terms) % 81 == 0 and \
                        sum(c * u ** i * v ** j for i, j, c in B_terms) % mod == 0:
                    hits += 1
        assert Fraction(hits, mod * mod) == local_nonminimal_density(fam, 3)

    def test_exponent_and_correction(self):
        assert zeta_exponent(family("F5_tors")) == 2
        assert zeta_exponent(family("F4_full2")) == 4
        # the density at 2 is the generic 2^-4, so only 3 changes the factor
        assert local_correction(family("F4_full2")) == 1


class TestAreas:
    def test_cyc4_against_closed_form(self):
        area, err = area_R1("F4_cyc4", 1e-8)
        assert err <= 1e-8
        assert abs(area - float(exact_area_cyc4())) < 1e-7
        assert round(area, 3) == 2.072

    def test_cyc4_closed_form_is_independent_of_quadrature(self):
        # the defining integral, recomputed here with mpmath alone
        with mpmath.workdps(30):
            u, v = mpmath.mpf(4) ** (-mpmath.mpf(1) / 3), 1 / mpmath.sqrt(27)
            ap = mpmath.findroot(lambda x: x ** 3 + u * x - v, 0.5)
            am = mpmath.findroot(lambda x: x ** 3 - u * x - v, 1.0)
            bp, bm = mpmath.sqrt(3 * ap ** 2 + u), mpmath.sqrt(3 * am ** 2 - u)
            integral = mpmath.quad(lambda y: mpmath.sqrt((2 * y ** 3 + v) / y), [ap, am])
            s3 = mpmath.sqrt(3)
            value = (4 * integral + 2 * (ap * bp - am * bm)
                     + 2 * u / s3 * mpmath.log((s3 * ap + bp) * (s3 * am + bm) / u))
            assert abs(value - exact_area_cyc4(dps=30)) < mpmath.mpf(10) ** -20

    def test_naive_cyc4(self):
        area, _ = area_R1("F4_cyc4", 1e-8, "naive")
        assert round(area, 3) == 4.019
        assert abs(area - float(exact_area_cyc4("naive"))) < 1e-7

    def test_full2_ellipse(self):
        area, _ = area_R1("F4_full2", 1e-8)
        closed = math.pi * math.sqrt(3) * 2 ** (1 / 3)
        assert abs(ellipse_area_full2() - closed) < 1e-12
        assert abs(area - closed) < 1e-7

    def test_five_area_ratio(self):
        tol = 1e-10
        a_t, _ = area_R1("F5_tors", tol)
        a_i, _ = area_R1("F5_isog", tol)
        assert abs(a_i / a_t - 0.2) <= 2 * tol

    def test_seven_area_ratio(self):
        a_t, _ = area_R1("F7_tors", 1e-10)
        a_i, _ = area_R1("F7_isog", 1e-10)
        assert area_ratio_7() == QuadExact.sqrt(7).inverse()
        assert abs(a_i / a_t - 1 / math.sqrt(7)) < 1e-6

    def test_three_area_ratio(self):
        a_t, _ = area_R1("F3_tors", 1e-10)
        a_w, _ = area_R1("F3_twist", 1e-10)
        assert abs(a_t / a_w - 9) < 1e-8

    @pytest.mark.parametrize("name", ["F5_tors", "F7_isog", "F3_twist"])
    def test_grid_count_oracle(self, name):
        # midpoint grid count of the region, independent of the ray integral
        import numpy as np

        fam = family(name)
        bx, by = bounding_box(fam)
        n = 1500
        xs = (np.arange(n) + 0.5) / n * 2 * bx - bx
        ys = (np.arange(n) + 0.5) / n * 2 * by - by
        X, Y = np.meshgrid(xs, ys)
        A = sum(float(c) * X ** i * Y ** j for (i, j), c in fam.A.terms.items())
        B = sum(float(c) * X ** i * Y ** j for (i, j), c in fam.B.terms.items())
        inside = (np.abs(A) <= 4 ** (-1 / 3)) & (np.abs(B) <= 27 ** -0.5)
        grid_area = inside.sum() * (2 * bx / n) * (2 * by / n)
        assert abs(grid_area - area_R1(fam, 1e-9)[0]) < 1e-2 * grid_area

    def test_tolerance_floor(self):
        with pytest.raises(ValueError):
            area_R1("F4_cyc4", 1e-13)

    def test_nonconvergence_is_an_arithmetic_error(self):
        assert issubclass(NonConvergence, ArithmeticError)


class TestGrowthConstants:
    @pytest.mark.parametrize("name", [f.name for f in catalog() if f.name != "F4_Z4"])
    def test_formula(self, name):
        g = growth_constant(name, 1e-9)
        fam = family(name)
        if fam.coprime:
            expected = g.area * float(g.sieve_sum) / (g.r * g.zeta_value)
        else:
            expected = g.area * float(g.sieve_sum / fam.lattice_covolume) / (g.r * g.zeta_value)
        assert g.value == pytest.approx(expected, rel=1e-12)
        assert g.as_json()["c"] == g.value

    def test_cyc4(self):
        g = growth_constant("F4_cyc4", 1e-9)
        assert round(g.value, 4) == 0.9574
        assert g.zeta_factor == "zeta(4)" and g.r == 2

    def test_full2_published(self):
        g = growth_constant("F4_full2", 1e-9)
        published = 121 * math.pi * math.sqrt(3) * 2 ** (1 / 3) / (2160 * float(zeta(4)))
        assert g.published == pytest.approx(published, rel=1e-12)
        assert round(published, 3) == 0.355
        # the residue sieve finds 1/81 non-minimal at 3, the generic rate, so no 121/120 factor
        assert g.value == pytest.approx(published * 120 / 121, rel=1e-9)

    def test_zeta(self):
        with mpmath.workdps(40):
            assert abs(zeta(2, 40) - mpmath.pi ** 2 / 6) < mpmath.mpf(10) ** -35
            assert abs(zeta(4, 40) - mpmath.pi ** 4 / 90) < mpmath.mpf(10) ** -35


class TestProbabilities:
    def test_p3(self):
        p = probability(3, 1e-9)
        assert p.exact == Fraction(1, 2)
        assert abs(p.components["quadrature_probability"] - 0.5) < 1e-8

    def test_p5(self):
        p = probability(5, 1e-9)
        assert p.exact == Fraction(25, 34) and p.exact_text == "25/34"
        assert abs(p.components["quadrature_probability"] - 25 / 34) <= p.error + 1e-9

    def test_p7(self):
        p = probability(7, 1e-9)
        assert p.exact_text == "4/(4+sqrt(7))"
        with mpmath.workdps(40):
            oracle = 4 / (4 + mpmath.sqrt(7))
            rational, coeff = (mpmath.mpf(x.numerator) / x.denominator for x in (p.exact.p, p.exact.q))
            assert abs(rational + coeff * mpmath.sqrt(p.exact.D) - oracle) < mpmath.mpf(10) ** -30
        assert abs(p.numeric - float(oracle)) < 1e-12
        assert abs(p.components["quadrature_probability"] - p.numeric) < 1e-6

    def test_p4(self):
        p = probability(4, 1e-9)
        assert abs(p.numeric - 0.2704) <= 1e-3
        assert p.components["published_approximations"] == ["0.270", "0.272"]
        assert 0 <= p.components["from_residue_sieve"] <= 1

    def test_naive_height(self):
        assert abs(probability(4, 1e-9, "naive").numeric - 0.233) <= 1e-3
        assert probability(3, 1e-9, "naive").exact == Fraction(1, 2)

    def test_unknown_m(self):
        with pytest.raises(ValueError):
            probability(6)

    @pytest.mark.parametrize("m,text", [(3, "1/2"), (5, "25/34"), (7, "4/(4+sqrt(7))")])
    def test_report_json(self, m, text):
        report = json.loads(json.dumps(constants_report(m)))
        assert report["probability"]["exact"] == text
