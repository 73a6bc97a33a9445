import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsion_census.census import (CensusConfig, CensusReport, EmptyDenominator, RegionSpec,
                                   defect_split, diff_harness, empirical_probability,
                                   enumerate_region, naive_scan, run_census, two_primary)
from torsion_census.curves import Curve, TorsionClass, height, make_minimal, prime_sampling_screen
from torsion_census.families import catalog, family


def direct_two_torsion_census(H):
    """Minimal curves of height <= H, split by whether x^3 + Ax + B has an integer root."""
    with_root = without = 0
    XA = 0
    while 4 * (XA + 1) ** 3 <= H:
        XA += 1
    XB = math.isqrt(H // 27)
    for A in range(-XA, XA + 1):
        for B in range(-XB, XB + 1):
            if 4 * A ** 3 + 27 * B * B == 0:
                continue
            if any(A % p ** 4 == 0 and B % p ** 6 == 0 for p in (2, 3, 5, 7)):
                continue
            bound = max(abs(A), abs(B), 1) + 1
            if any(x ** 3 + A * x + B == 0 for x in range(-bound, bound + 1)):
                with_root += 1
            else:
                without += 1
    return with_root, without


def collapse_defect(report):
    out = {}
    for (t, g, _), n in report.buckets.items():
        out[(str(t), g)] = out.get((str(t), g), 0) + n
    return out


class TestRegionSpec:
    def test_bounds_are_exact(self):
        rs = RegionSpec(family("F5_tors"), 10 ** 36)
        XA, XB = rs.bounds()
        assert 4 * XA ** 3 <= 10 ** 36 < 4 * (XA + 1) ** 3
        assert 27 * XB ** 2 <= 10 ** 36 < 27 * (XB + 1) ** 2

    def test_validation(self):
        with pytest.raises(ValueError):
            RegionSpec(family("F5_tors"), 0)
        with pytest.raises(ValueError):
            RegionSpec(family("F5_tors"), 10, height_fn="other")


class TestEnumerateRegion:
    def test_full2_example(self):
        pts = {(a, b): c for a, b, c, _ in enumerate_region(RegionSpec(family("F4_full2"), 243))}
        assert pts[(1, 2)] == Curve(-1, 0)
        assert height(pts[(1, 2)]) == 4

    def test_full2_six_point_orbit(self):
        a, b = 1, 2
        orbit = {(a, b), (b, a), (-a, b - a), (b - a, -a), (-b, a - b), (a - b, -b)}
        pts = {(x, y): c for x, y, c, _ in enumerate_region(RegionSpec(family("F4_full2"), 243))}
        assert set(pts) == orbit
        assert set(pts.values()) == {Curve(-1, 0)}

    def test_empty_region(self):
        assert list(enumerate_region(RegionSpec(family("F7_tors"), 1))) == []

    def test_order_b_then_a(self):
        fam = family("F5_tors")
        pts = [(a, b) for a, b, _, _ in enumerate_region(RegionSpec(fam, 10 ** 14))]
        assert pts == sorted(pts, key=lambda p: (p[1], p[0]))

    @pytest.mark.parametrize("name,H,e", [("F5_isog", 10 ** 16, 5), ("F5_tors", 10 ** 16, 1),
                                          ("F7_isog", 10 ** 30, 3), ("F3_tors", 10 ** 8, 1)])
    def test_points_inside_and_defect_accounting(self, name, H, e):
        fam = family(name)
        rs = RegionSpec(fam, H, e)
        count = 0
        for a, b, curve, d in enumerate_region(rs):
            A, B = fam.A(a, b), fam.B(a, b)
            assert rs.contains(A, B)
            if fam.coprime:
                assert math.gcd(int(a), int(b)) == 1 and d == e
                assert Curve(A // e ** 4, B // e ** 6) == curve
                assert e ** 12 * height(curve) == max(abs(4 * A ** 3), 27 * B * B)
            else:
                assert make_minimal(A, B) == (curve, d)
            count += 1
        assert count > 0

    def test_matches_brute_force_box(self):
        fam = family("F5_tors")
        rs = RegionSpec(fam, 10 ** 14)
        got = {(a, b) for a, b, _, _ in enumerate_region(rs)}
        umax, vmax = rs.box()
        want = set()
        for a in range(-umax, umax + 1):
            for b in range(-vmax, vmax + 1):
                if math.gcd(a, b) != 1:
                    continue
                A, B = fam.A(a, b), fam.B(a, b)
                if rs.contains(A, B) and 4 * A ** 3 + 27 * B * B != 0 and \
                        not (A % 5 ** 4 == 0 and B % 5 ** 6 == 0):
                    want.add((a, b))
        assert got == want


class TestRunCensus:
    @pytest.mark.parametrize("m,H", [(3, 10 ** 8), (4, 10 ** 8), (5, 10 ** 18), (7, 10 ** 30)])
    def test_report_invariants(self, m, H):
        report = run_census(m, H, CensusConfig(threads=1, keep_curves=True))
        assert sum(report.buckets.values()) == report.total == len(report.curves)
        for A, B, h, t, e in report.curves:
            c = Curve(A, B)
            assert c.is_minimal and h == height(c) <= H
            assert prime_sampling_screen(c, m, 200).always_divisible
            assert (TorsionClass.parse(t).order % m == 0) == any(
                g for (tt, g, ee), _ in report.buckets.items() if str(tt) == t and ee == e)

    def test_rejects_unsupported_m(self):
        with pytest.raises(ValueError):
            run_census(6, 10 ** 6)

    @pytest.mark.parametrize("m", [3, 4])
    def test_matches_naive_scan(self, m):
        census = run_census(m, 10 ** 6, CensusConfig(threads=1))
        scan = naive_scan(10 ** 6, m, CensusConfig(threads=1))
        assert collapse_defect(census) == collapse_defect(scan)
        assert census.buckets == scan.buckets

    def test_monotone_in_height(self):
        prev = {}
        for H in (10 ** 6, 10 ** 8, 10 ** 10):
            cur = collapse_defect(run_census(3, H, CensusConfig(threads=1)))
            assert all(cur.get(k, 0) >= n for k, n in prev.items())
            prev = cur

    def test_thread_count_does_not_change_result(self):
        one = run_census(5, 10 ** 20, CensusConfig(threads=1))
        four = run_census(5, 10 ** 20, CensusConfig(threads=4))
        assert one.buckets == four.buckets and one.reference == four.reference

    def test_rerun_is_identical(self):
        first = run_census(4, 10 ** 9, CensusConfig(threads=1))
        second = run_census(4, 10 ** 9, CensusConfig(threads=1))
        assert first.to_json()["buckets"] == second.to_json()["buckets"]

    def test_budget_marks_incomplete(self):
        report = run_census(7, 10 ** 60, CensusConfig(threads=1, budget_seconds=1e-9))
        assert report.incomplete
        with pytest.raises(ValueError):
            defect_split(report, "global")

    def test_checkpoint_resume(self, tmp_path):
        path = str(tmp_path / "ck.jsonl")
        partial = run_census(5, 10 ** 24, CensusConfig(threads=1, checkpoint=path))
        with open(path) as fh:
            lines = fh.readlines()
        assert lines
        with open(path, "w") as fh:
            fh.writelines(lines[: len(lines) // 2] + ['{"key": "cut'])
        resumed = run_census(5, 10 ** 24, CensusConfig(threads=1, checkpoint=path))
        assert resumed.buckets == partial.buckets and not resumed.incomplete

    def test_full_two_torsion_from_either_family_is_counted_once(self):
        report = run_census(4, 10 ** 8, CensusConfig(threads=1))
        classes = report.reference["classes"]
        assert sum(classes.values()) == report.reference["total"]
        assert set(classes) <= {"Z/2", "Z/2xZ/2", "Z/4", "Z/2xZ/4", "Z/8", "Z/2xZ/8"}


class TestEllCensus:
    def test_five_isogeny_shortcut(self):
        # torsion of curves coming only from the isogeny family never contains 5
        from torsion_census.curves import torsion_subgroup

        report = run_census(5, 10 ** 20, CensusConfig(threads=1, keep_curves=True))
        checked = 0
        for A, B, _, t, _ in report.curves:
            assert torsion_subgroup(Curve(A, B)) == TorsionClass.parse(t)
            checked += 1
        assert checked == report.total

    def test_defect_split_conventions(self):
        report = run_census(5, 10 ** 24, CensusConfig(threads=1))
        ref = defect_split(report, "local_only")
        assert set(ref) <= {1, 5}
        curves = defect_split(report, "global", convention="curves")
        assert sum(curves.values()) == report.global_count()
        with pytest.raises(ValueError):
            defect_split(report, "both")

    def test_reference_split_needs_ell(self):
        with pytest.raises(ValueError):
            defect_split(run_census(3, 10 ** 6), "global")

    def test_diff_harness_shape(self):
        report = run_census(5, 10 ** 24, CensusConfig(threads=1))
        diff = diff_harness(report)
        assert [r["bucket"] for r in diff["rows"]] == ["global:e=1", "local_only:e=1", "local_only:e=5"]
        assert not diff["exact"]
        for r in diff["rows"]:
            assert r["delta"] == r["actual"] - r["expected"]


class TestProbabilityAndJson:
    def test_empirical_probability(self):
        report = run_census(3, 10 ** 8, CensusConfig(threads=1))
        num, den = report.probability()
        assert empirical_probability(report) == Fraction(num, den)
        ref = empirical_probability(report, "reference")
        assert ref == Fraction(report.reference["global"], report.reference["total"])

    def test_empty_denominator(self):
        report = run_census(7, 1, CensusConfig(threads=1))
        assert report.total == 0
        with pytest.raises(EmptyDenominator):
            empirical_probability(report)

    @pytest.mark.parametrize("m,H", [(4, 10 ** 8), (7, 10 ** 24)])
    def test_json_round_trip(self, m, H):
        report = run_census(m, H, CensusConfig(threads=1))
        text = json.dumps(report.to_json())
        back = CensusReport.from_json(json.loads(text))
        assert back.buckets == report.buckets and back.total == report.total
        assert json.dumps(back.to_json()) == text

    def test_json_schema(self):
        data = run_census(3, 10 ** 6).to_json()
        assert {"m", "H", "height_fn", "buckets", "total", "probability", "runtime_ms", "incomplete"} <= set(data)
        assert set(data["buckets"][0]) == {"torsion", "global_m", "defect", "count"}
        assert data["H"] == str(10 ** 6)


class TestNaiveScan:
    def test_two_torsion_against_direct_roots(self):
        report = naive_scan(10 ** 4, 2, CensusConfig(threads=1))
        with_root, _ = direct_two_torsion_census(10 ** 4)
        assert report.total == with_root
        assert report.global_count() == with_root

    def test_cap(self):
        with pytest.raises(ValueError):
            naive_scan(10 ** 11, 3)
        with pytest.raises(ValueError):
            naive_scan(10 ** 5, 3, CensusConfig(naive_cap=10 ** 4))

    @given(st.integers(2, 10 ** 4))
    @settings(max_examples=10, deadline=None)
    def test_every_scanned_curve_is_within_height(self, H):
        report = naive_scan(H, 3, CensusConfig(threads=1))
        assert sum(report.buckets.values()) == report.total

    def test_two_primary(self):
        assert two_primary(TorsionClass(2, 6)) == TorsionClass(2, 2)
        assert two_primary(TorsionClass(1, 12)) == TorsionClass(1, 4)


def test_every_family_has_a_bounding_box():
    for fam in catalog():
        umax, vmax = RegionSpec(fam, 10 ** 12).box()
        assert umax > 0 and vmax > 0
