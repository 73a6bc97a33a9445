"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line with the numbers
behind the verdict and then asserts the verdict.
"""

import json
import math
import os
import random
import time
from fractions import Fraction

import mpmath
import pytest

from torsion_census.arith import Poly, resultant_bound
from torsion_census.census import CensusConfig, naive_scan, run_census
from torsion_census.cli import main
from torsion_census.constants import (area_R1, ellipse_area_full2, exact_area_cyc4, probability,
                                      sieve_sum, sieve_table)
from torsion_census.curves import (Curve, locally_divisible, make_minimal, prime_sampling_screen,
                                   torsion_subgroup)
from torsion_census.families import (F5, F5_PRIME, F7, F7_PRIME, G5, G5_PRIME, G7, G7_PRIME,
                                     check_lft, derive_by_velu, family, five_torsion_order,
                                     jacobian7, region_map_identity, specialize, Singular)
from torsion_census.galois import (brute_index_in_GL2, borel_unipotent, check_degree_table,
                                   fixed_subgroup_structure, index_in_GL2,
                                   mat_det, normalized_specs, normalizer_index, reduce, sl2_index,
                                   sl2_parts_equal, transition_paths, GroupSpec)

THREADS = max(1, min(8, os.cpu_count() or 1))
TOLERANCE = 0.005


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok
    return emit


def run_cli_census(tmp_path, m, height):
    out = tmp_path / f"census{m}.json"
    code = main(["census", "--m", str(m), "--height", height, "--threads", str(THREADS), "--out", str(out)])
    return code, json.loads(out.read_text())


def bucket_report(expected, actual):
    rows = []
    exact = within = True
    for name, want in expected.items():
        got = actual.get(name, 0)
        rel = abs(got - want) / want
        exact &= got == want
        within &= rel <= TOLERANCE
        rows.append(f"{name} {got}/{want}")
    return exact, within, ", ".join(rows)


def test_criterion_1_ell5_census(tmp_path, verdict):
    t0 = time.monotonic()
    code, data = run_cli_census(tmp_path, 5, "1e36")
    ref = data["reference_convention"]
    actual = {"global e=1": ref["global"]["1"], "local e=1": ref["local_only"]["1"],
              "local e=5": ref["local_only"]["5"], "global": ref["global_total"],
              "local": ref["local_only_total"]}
    expected = {"global e=1": 196772, "local e=1": 37944, "local e=5": 32840, "global": 196772, "local": 70784}
    exact, within, rows = bucket_report(expected, actual)
    elapsed = time.monotonic() - t0
    ok = code == 0 and within and elapsed < 300 and (exact or "diff" in data)
    verdict(1, ok, f"{'exact' if exact else 'within 0.5%'}; {rows}; {elapsed:.1f}s")
    assert ok


def test_criterion_2_ell7_census(tmp_path, verdict):
    t0 = time.monotonic()
    code, data = run_cli_census(tmp_path, 7, "1e72")
    ref = data["reference_convention"]
    actual = {f"global e={e}": ref["global"][str(e)] for e in (1, 3)}
    actual |= {f"local e={e}": ref["local_only"][str(e)] for e in (1, 3, 7, 21)}
    actual |= {"global": ref["global_total"], "local": ref["local_only_total"]}
    expected = {"global e=1": 645918, "global e=3": 645758, "local e=1": 213522, "local e=3": 213704,
                "local e=7": 213714, "local e=21": 213492, "global": 1291676, "local": 854432}
    exact, within, rows = bucket_report(expected, actual)
    elapsed = time.monotonic() - t0
    harness = data.get("diff", {})
    ok = code == 0 and within and elapsed < 900 and (exact or bool(harness.get("rows")))
    deltas = ", ".join(f"{r['bucket']} {r['delta']:+d}" for r in harness.get("rows", []) if r["delta"])
    verdict(2, ok, f"{'exact' if exact else 'within 0.5%, diff harness: ' + deltas}; {rows}; {elapsed:.1f}s")
    assert ok


def test_criterion_3_p3_census(tmp_path, verdict):
    t0 = time.monotonic()
    code, data = run_cli_census(tmp_path, 3, "1e12")
    elapsed = time.monotonic() - t0
    ref = data["reference_convention"]
    counts_ok = (ref["global"], ref["total"]) == (3808, 7578)
    census = run_census(3, 10 ** 8, CensusConfig(threads=THREADS))
    scan = naive_scan(10 ** 8, 3, CensusConfig(threads=THREADS))
    scan_ok = census.buckets == scan.buckets
    ok = code == 0 and counts_ok and scan_ok and elapsed < 60
    verdict(3, ok, f"{ref['global']}/{ref['total']} (want 3808/7578) in {elapsed:.1f}s; "
                   f"naive scan at 1e8 bucket-equal: {scan_ok} ({scan.total} curves)")
    assert ok


def test_criterion_4_p4_census(tmp_path, verdict):
    t0 = time.monotonic()
    code, data = run_cli_census(tmp_path, 4, "1e13")
    elapsed = time.monotonic() - t0
    classes = data["reference_convention"]["classes"]
    expected = {"Z/2": 20612, "Z/2xZ/2": 8126, "Z/2xZ/4": 8, "Z/4": 1382, "Z/8": 2}
    exact = all(classes.get(k, 0) == v for k, v in expected.items())
    restricted = data["reference_convention"]["restricted"]
    ratio = Fraction(restricted["num"], restricted["den"])
    ok = code == 0 and exact and elapsed < 300 and round(float(ratio), 3) == 0.283
    rows = ", ".join(f"{k} {classes.get(k, 0)}/{v}" for k, v in expected.items())
    verdict(4, ok, f"{rows}; ratio {restricted['num']}/{restricted['den']} = {float(ratio):.4f}; {elapsed:.1f}s")
    assert ok


def test_criterion_5_probabilities(tmp_path, verdict):
    texts, decimals = {}, {}
    for m in (3, 4, 5, 7):
        out = tmp_path / f"constants{m}.json"
        assert main(["constants", "--m", str(m), "--out", str(out)]) == 0
        data = json.loads(out.read_text())["probability"]
        texts[m], decimals[m] = data["exact"], data["decimal"]
    p7 = probability(7)
    with mpmath.workdps(40):
        oracle7 = 4 / (4 + mpmath.sqrt(7))
    exact_ok = texts[3] == "1/2" and texts[5] == "25/34" and texts[7] == "4/(4+sqrt(7))"
    surd_ok = p7.exact.D == 7 and abs(decimals[7] - float(oracle7)) < 1e-12
    literal_ok = abs(decimals[7] - 0.601926) < 1e-6
    p4 = probability(4)
    p4_ok = abs(p4.numeric - 0.2704) <= 1e-3 and p4.components["published_approximations"] == ["0.270", "0.272"]
    ok = exact_ok and surd_ok and literal_ok and p4_ok
    verdict(5, ok, f"P3 {texts[3]}, P5 {texts[5]}, P7 {texts[7]} = {decimals[7]:.15f} "
                   f"(matches 4/(4+sqrt 7): {surd_ok}; matches literal 0.601926...: {literal_ok}); "
                   f"P4 {p4.numeric:.5f} +- {p4.error:.1e}, annotated 0.270 and 0.272")
    assert ok


def test_criterion_6_areas(verdict):
    cyc, _ = area_R1("F4_cyc4", 1e-8)
    closed = float(exact_area_cyc4())
    full, _ = area_R1("F4_full2", 1e-8)
    ellipse = ellipse_area_full2()
    naive, _ = area_R1("F4_cyc4", 1e-8, "naive")
    p4_naive = probability(4, 1e-9, "naive").numeric
    ok = (abs(cyc - closed) < 1e-7 and round(cyc, 3) == 2.072 and abs(full - ellipse) < 1e-7
          and round(naive, 3) == 4.019 and abs(p4_naive - 0.233) <= 1e-3)
    verdict(6, ok, f"cyc4 {cyc:.10f} vs closed {closed:.10f}; full2 {full:.10f} vs ellipse {ellipse:.10f}; "
                   f"naive cyc4 {naive:.5f}; naive P4 {p4_naive:.5f}")
    assert ok


def test_criterion_7_region_maps(verdict):
    five = region_map_identity(5)
    with mpmath.workdps(50):
        (p, q), (r, s) = jacobian7()
        det_err = abs(abs(p * s - q * r) - mpmath.sqrt(7))
    ok = five["identity"] and five["ratio"] == Fraction(1, 5) and det_err < mpmath.mpf(10) ** -12
    verdict(7, ok, f"l=5 exact identity {five['identity']}, ratio {five['ratio']}, B sign {five.get('b_sign')}; "
                   f"l=7 ||det J| - sqrt 7| = {mpmath.nstr(det_err, 3)}")
    assert ok


def test_criterion_8_sieves(verdict):
    tables = {
        "F5_tors": {1: Fraction(1)},
        "F5_isog": {1: Fraction(29, 30), 5: Fraction(1, 30)},
        "F7_tors": {1: Fraction(3, 4), 3: Fraction(1, 4)},
        "F7_isog": {1: Fraction(21, 32), 3: Fraction(7, 32), 7: Fraction(3, 32), 21: Fraction(1, 32)},
    }
    tables_ok = all(sieve_table(name).deltas == want for name, want in tables.items())
    sums = (sieve_sum(sieve_table("F5_isog"), 6), sieve_sum(sieve_table("F7_isog"), 12),
            sieve_sum(sieve_table("F7_tors"), 12))
    sums_ok = sums == (Fraction(9, 5), Fraction(21, 8), Fraction(3, 2))
    bounds = [abs(resultant_bound(Poly.from_high(f), Poly.from_high(g)))
              for f, g in ((F5, G5), (F5_PRIME, G5_PRIME), (F7, G7), (F7_PRIME, G7_PRIME))]
    bounds_ok = bounds == [2 ** 16 * 3 ** 36 * 5, 2 ** 16 * 3 ** 36 * 5 ** 25,
                           2 ** 32 * 3 ** 72 * 7, 2 ** 32 * 3 ** 72 * 7 ** 49]
    ok = tables_ok and sums_ok and bounds_ok
    verdict(8, ok, f"tables {tables_ok}; sums {', '.join(map(str, sums))}; resultant bounds {bounds_ok}")
    assert ok


def _specs(limit):
    for ell in (2, 3, 5, 7):
        n = 1
        while ell ** n <= limit:
            yield from normalized_specs(ell, n)
            n += 1


def test_criterion_9_group_theory(verdict):
    t0 = time.monotonic()
    specs = list(_specs(49))
    index_ok = all(index_in_GL2(s) == brute_index_in_GL2(s) for s in specs)
    det_ok = trace_ok = True
    fixed_bad = []
    for s in specs:
        H = reduce(s)
        N = H.modulus
        det_ok &= all(mat_det((1 - a, -b, -c, 1 - d), N) == 0 for a, b, c, d in H.elements)
        trace_ok &= all((g[0] + g[3]) % N == 2 % N for g in H.sl2_part().elements)
        if fixed_subgroup_structure(s) != tuple(sorted((s.r, s.s), reverse=True)):
            fixed_bad.append(str(s))
    sl2_ok = all(sl2_parts_equal(s, GroupSpec(s.ell, s.n, max(s.r, s.n - s.r), s.s))
                 for s in specs if s.modulus <= 27)
    d_ok = all(sl2_index(t) == sl2_index(s) for s in specs if s.s == s.n - s.r
               for _, _, t in transition_paths(s))
    r_ok = normalizer_index(borel_unipotent(5)) == 4 and normalizer_index(borel_unipotent(7)) == 6
    checks = check_degree_table()
    reported = {(c.row.m, c.row.label) for c in checks if not c.matches_published and c.row.m == 8}
    table_bad = sorted({(c.row.m, c.row.label) for c in checks if not c.matches_published and c.row.m != 8})
    elapsed = time.monotonic() - t0
    ok = (index_ok and det_ok and trace_ok and not fixed_bad and sl2_ok and d_ok and r_ok
          and not table_bad and elapsed < 120)
    verdict(9, ok, f"{len(specs)} specs; index {index_ok}; det(1-g) {det_ok}; trace {trace_ok}; "
                   f"SL2 equality {sl2_ok}; d-invariance {d_ok}; r = 4, 6 {r_ok}; "
                   f"fixed subgroup mismatches {len(fixed_bad)} {fixed_bad[:4]}; "
                   f"G_2(3) rows reported {sorted(reported)}; other table rows disagreeing {table_bad}; "
                   f"{elapsed:.1f}s")
    assert ok


def _family_samples(name, count, seed, bound):
    fam = family(name)
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        u, v = rng.randint(-bound, bound), rng.randint(-bound, bound)
        if (u, v) == (0, 0) or (fam.coprime and math.gcd(u, v) != 1):
            continue
        res = specialize(fam, *fam.to_params(u, v))
        if res is Singular:
            continue
        out.append(((u, v), make_minimal(*res)[0]))
    return out


def test_criterion_10_family_oracles(verdict):
    t0 = time.monotonic()
    from torsion_census.families import F5 as f5, G5 as g5, F5_PRIME as f5p, G5_PRIME as g5p

    def high(p):
        return tuple(int(c) for c in reversed(p.coeffs))

    v5, v7 = derive_by_velu(5), derive_by_velu(7)
    velu_ok = ((high(v5["f"]), high(v5["g"]), high(v5["f_prime"]), high(v5["g_prime"]))
               == (tuple(f5), tuple(g5), tuple(f5p), tuple(g5p))
               and (high(v7["f"]), high(v7["g"]), high(v7["f_prime"]), high(v7["g_prime"]))
               == (tuple(F7), tuple(G7), tuple(F7_PRIME), tuple(G7_PRIME)))
    rng = random.Random(10)
    points = [Fraction(rng.choice([-1, 1]) * rng.randint(1, 50), rng.randint(1, 20)) for _ in range(20)]
    point_ok = all(five_torsion_order(s) == 5 for s in points)
    lft_ok = check_lft(5) and check_lft(7)
    sample_ok = {}
    for name, need in (("F5_tors", 5), ("F7_tors", 7), ("F4_full2", 4)):
        samples = _family_samples(name, 200, 100 + need, 12)
        if name == "F4_full2":
            sample_ok[name] = all(torsion_subgroup(c)[0] == 2 for _, c in samples)
        else:
            sample_ok[name] = all(torsion_subgroup(c).order % need == 0 for _, c in samples)
    tors3 = []
    rng = random.Random(33)
    while len(tors3) < 200:
        v = rng.randint(-200, 200)
        res = specialize(family("F3_tors"), 1, v) if v else Singular
        if res is not Singular and isinstance(res, tuple):
            tors3.append(make_minimal(*res)[0])
    sample_ok["F3_tors (u=1)"] = all(torsion_subgroup(c).order % 3 == 0 for c in tors3)

    def fifth_power(n):
        return round(abs(n) ** 0.2) ** 5 == abs(n)

    isog = [(uv, c) for uv, c in _family_samples("F5_isog", 260, 55, 30)
            if not (fifth_power(uv[0]) and fifth_power(uv[1]))][:200]
    sample_ok["F5_isog"] = len(isog) == 200 and all(
        torsion_subgroup(c).order % 5 and prime_sampling_screen(c, 5, 500).always_divisible for _, c in isog)
    cyc_ok = True
    rng = random.Random(44)
    squares = 0
    for _ in range(200):
        x, y = rng.randint(-60, 60), rng.randint(-60, 60)
        A, B = x * x - 3 * y * y, x * x * y - 2 * y ** 3
        if 4 * A ** 3 + 27 * B * B == 0:
            continue
        t = torsion_subgroup(Curve(A, B))
        sq = [n > 0 and math.isqrt(n) ** 2 == n for n in (2 * x - 3 * y, -2 * x - 3 * y, 9 * y * y - 4 * x * x)]
        squares += any(sq)
        cyc_ok &= (t[1] % 4 == 0) == (sq[0] or sq[1]) and (t[0] == 2) == sq[2]
    elapsed = time.monotonic() - t0
    ok = velu_ok and point_ok and lft_ok and all(sample_ok.values()) and cyc_ok and elapsed < 120
    verdict(10, ok, f"Velu byte-exact {velu_ok}; 5-torsion point {point_ok}; j(psi(t)) = j'(t) {lft_ok}; "
                    f"samples {sample_ok}; biquadratic conditions {cyc_ok} ({squares} with a square); "
                    f"{elapsed:.1f}s")
    assert ok


def test_criterion_11_oracle_equivalence(verdict):
    equal = {}
    for m in (3, 4):
        census = run_census(m, 10 ** 6, CensusConfig(threads=1))
        scan = naive_scan(10 ** 6, m, CensusConfig(threads=1))
        equal[m] = census.buckets == scan.buckets
    XA, XB = 62, 192  # 4 * 62^3 <= 1e6 < 4 * 63^3 and 27 * 192^2 <= 1e6 < 27 * 193^2
    rng = random.Random(11)
    seen, contradictions, structural = set(), 0, 0
    while len(seen) < 10 ** 4:
        A, B = rng.randint(-XA, XA), rng.randint(-XB, XB)
        if (A, B) in seen or 4 * A ** 3 + 27 * B * B == 0 or not Curve(A, B).is_minimal:
            continue
        seen.add((A, B))
        c = Curve(A, B)
        if locally_divisible(c, 3) is not None:
            structural += 1
            contradictions += not prime_sampling_screen(c, 3, 2000).always_divisible
    ok = all(equal.values()) and contradictions == 0
    verdict(11, ok, f"census = naive scan at 1e6: m=3 {equal[3]}, m=4 {equal[4]}; "
                    f"{len(seen)} random curves, {structural} locally 3-divisible, {contradictions} contradictions")
    assert ok
