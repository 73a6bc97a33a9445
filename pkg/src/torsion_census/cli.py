"""Command-line entry point: census, constants, verify, scan, plot-regions.

Exit codes: 0 success, 1 a verification check failed, 2 bad arguments,
3 the time budget ran out (a partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Optional, Sequence

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_height(text: str) -> int:
    """Exact integer from a decimal or scientific string such as '1e72' or '2.5e3'."""
    try:
        value = Fraction(Decimal(text.strip().replace("_", "")))
    except (InvalidOperation, ValueError):
        raise UsageError(f"height {text!r} is not a number") from None
    if value.denominator != 1 or value < 1:
        raise UsageError(f"height {text!r} must be a positive integer")
    return value.numerator


@dataclass
class RunConfig:
    command: str
    m: Optional[int] = None
    H: Optional[int] = None
    threads: int = 1
    tol: float = 1e-9
    height_fn: str = "standard"
    out: Optional[str] = None
    csv_out: Optional[str] = None
    budget: Optional[float] = None
    resume: Optional[str] = None
    reproducible: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.budget is not None and self.budget <= 0:
            raise UsageError("budget must be positive")
        if self.threads < 1:
            raise UsageError("threads must be at least 1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("TORSION_CENSUS_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="torsion-census", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, need_height=True):
        p.add_argument("--m", type=int, required=True, choices=(3, 4, 5, 7) if p.prog.endswith(("census", "constants")) else None)
        if need_height:
            p.add_argument("--height", required=True)
        p.add_argument("--height-fn", choices=("standard", "naive"), default="standard")
        p.add_argument("--out")

    p = sub.add_parser("census", help="count curves through the families")
    common(p)
    p.add_argument("--naive", action="store_true", help="use the full (A, B) scan instead of the families")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--csv")
    p.add_argument("--budget", type=float, help="wall-clock cap in seconds")
    p.add_argument("--resume", help="checkpoint file; completed row bands are reused")
    p.add_argument("--reproducible", action="store_true", help="omit timings and thread count")

    p = sub.add_parser("constants", help="areas, sieve tables, growth constants, P_m")
    common(p, need_height=False)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("verify", help="run a self-check suite")
    p.add_argument("--suite", required=True, choices=("groups", "families", "sieves", "areas", "oracle"))
    p.add_argument("--out")

    p = sub.add_parser("scan", help="naive scan over all minimal (A, B)")
    p.add_argument("--m", type=int, required=True, choices=(2, 3, 4, 5, 7))
    p.add_argument("--height", required=True)
    p.add_argument("--height-fn", choices=("standard", "naive"), default="standard")
    p.add_argument("--override-cap", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("plot-regions", help="SVG of the two height regions of m")
    p.add_argument("--m", type=int, required=True, choices=(3, 4, 5, 7))
    p.add_argument("--height", help="also mark the lattice points of the region of this height")
    p.add_argument("--height-fn", choices=("standard", "naive"), default="standard")
    p.add_argument("--out", required=True)
    return parser


def _emit(data: dict, path: Optional[str]) -> None:
    text = json.dumps(data, indent=2, sort_keys=False) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_census(cfg: RunConfig) -> int:
    from .census import REFERENCE_COUNTS, CensusConfig, diff_harness, naive_scan, run_census

    cc = CensusConfig(threads=cfg.threads, height_fn=cfg.height_fn, budget_seconds=cfg.budget,
                      keep_curves=cfg.csv_out is not None, checkpoint=cfg.resume)
    if cfg.extra.get("naive"):
        report = naive_scan(cfg.H, cfg.m, cc)
    else:
        report = run_census(cfg.m, cfg.H, cc)
    data = report.to_json()
    ref = REFERENCE_COUNTS.get(cfg.m)
    if not cfg.extra.get("naive") and ref and ref["H"] == cfg.H and cfg.height_fn == "standard" \
            and not report.incomplete:
        data["diff"] = diff_harness(report)
    if cfg.reproducible:
        data["runtime_ms"] = 0
        data["config"] = {k: v for k, v in data["config"].items() if k != "threads"}
    _emit(data, cfg.out)
    if cfg.csv_out and report.curves is not None:
        with open(cfg.csv_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["A", "B", "height", "torsion", "defect"])
            w.writerows(report.curves)
    return EXIT_BUDGET if report.incomplete else EXIT_OK


def _cmd_constants(cfg: RunConfig) -> int:
    from .constants import constants_report

    _emit(constants_report(cfg.m, cfg.tol, cfg.height_fn), cfg.out)
    return EXIT_OK


def _cmd_scan(cfg: RunConfig) -> int:
    from .census import CensusConfig, naive_scan

    report = naive_scan(cfg.H, cfg.m, CensusConfig(height_fn=cfg.height_fn),
                        override_cap=cfg.extra.get("override_cap", False))
    _emit(report.to_json(), cfg.out)
    return EXIT_OK


def _check(name: str, ok: bool, **detail) -> dict:
    return {"check": name, "pass": bool(ok), **detail}


def _suite_groups() -> list[dict]:
    from .galois import check_degree_table, group_suite_rows

    out = [_check(f"index {r['spec']}", r["closed_index"] == r["brute_index"], **r)
           for r in group_suite_rows(49)]
    for chk in check_degree_table():
        # table rows that disagree with brute force are reported, not failed
        out.append(_check(f"table m={chk.row.m} {chk.row.label}", True, d=str(chk.brute_d),
                          published_d=str(chk.row.published_d), matches_published=chk.matches_published))
    return out


def _suite_families() -> list[dict]:
    import random
    from fractions import Fraction as F

    from .families import (F5, F5_PRIME, F7, F7_PRIME, G5, G5_PRIME, G7, G7_PRIME, check_lft,
                           derive_by_velu, five_torsion_order, region_map_identity)

    out = []
    for ell, data in ((5, (F5, G5, F5_PRIME, G5_PRIME)), (7, (F7, G7, F7_PRIME, G7_PRIME))):
        d = derive_by_velu(ell)
        got = tuple(tuple(int(c) for c in reversed(d[k].coeffs)) for k in ("f", "g", "f_prime", "g_prime"))
        out.append(_check(f"Velu coefficients l={ell}", got == data))
        out.append(_check(f"fractional-linear map l={ell}", check_lft(ell)))
        rm = region_map_identity(ell)
        out.append(_check(f"region map identity l={ell}", rm["identity"], ratio=rm["ratio_text"],
                          b_sign=rm["b_sign"]))
    rng = random.Random(11)
    for _ in range(20):
        s = F(rng.randint(-50, 50) or 1, rng.randint(1, 20))
        out.append(_check(f"5-torsion point at s={s}", five_torsion_order(s) == 5))
    return out


def _suite_sieves() -> list[dict]:
    from .constants import sieve_table
    from .families import families_for

    out = []
    for m in (5, 7):
        for fam in families_for(m):
            t = sieve_table(fam)
            bound = abs(fam.resultant_bound())
            out.append(_check(f"{fam.name} sums to 1", t.total() == 1, table=t.as_json()))
            out.append(_check(f"{fam.name} support divides the resultant bound",
                              all(bound % e == 0 for e in t.deltas)))
    return out


def _suite_areas() -> list[dict]:
    from .constants import area_R1, ellipse_area_full2, exact_area_cyc4

    out = []
    for hf in ("standard", "naive"):
        a, _ = area_R1("F4_full2", 1e-10, hf)
        c = ellipse_area_full2(hf)
        out.append(_check(f"ellipse closed form ({hf})", abs(a - c) < 1e-7, quadrature=a, closed=c))
        a, _ = area_R1("F4_cyc4", 1e-10, hf)
        c = float(exact_area_cyc4(hf))
        out.append(_check(f"cyc4 closed form ({hf})", abs(a - c) < 1e-7, quadrature=a, closed=c))
    return out


def _suite_oracle() -> list[dict]:
    from .census import naive_scan, run_census

    out = []
    for m in (3, 4):
        fam, naive = run_census(m, 10 ** 6), naive_scan(10 ** 6, m)
        out.append(_check(f"family census = naive scan, m={m}, H=1e6", fam.buckets == naive.buckets,
                          curves=fam.total))
    return out


SUITES = {"groups": _suite_groups, "families": _suite_families, "sieves": _suite_sieves,
          "areas": _suite_areas, "oracle": _suite_oracle}


def _cmd_verify(cfg: RunConfig) -> int:
    results = SUITES[cfg.extra["suite"]]()
    failed = [r["check"] for r in results if not r["pass"]]
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['check']}", file=sys.stderr)
    _emit({"suite": cfg.extra["suite"], "checks": len(results), "failed": failed, "results": results}, cfg.out)
    return EXIT_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# region plots
# ---------------------------------------------------------------------------

def _marching_squares(values, xs, ys, level: float = 1.0) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Line segments of the contour values == level on a rectangular grid."""
    segs = []
    ny, nx = values.shape

    def interp(p, q, vp, vq):
        t = (level - vp) / (vq - vp) if vq != vp else 0.5
        return p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])

    for j in range(ny - 1):
        for i in range(nx - 1):
            corners = [(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
            vals = [values[j, i], values[j, i + 1], values[j + 1, i + 1], values[j + 1, i]]
            inside = [v <= level for v in vals]
            if all(inside) or not any(inside):
                continue
            pts = []
            for k in range(4):
                a, b = k, (k + 1) % 4
                if inside[a] != inside[b]:
                    pts.append(interp(corners[a], corners[b], vals[a], vals[b]))
            for k in range(0, len(pts) - 1, 2):
                segs.append((pts[k], pts[k + 1]))
    return segs


def plot_regions(m: int, H: Optional[int], out: str, height_fn: str = "standard") -> str:
    """Write an SVG with the boundaries of the two height regions for m."""
    import numpy as np

    from .census import RegionSpec, enumerate_region
    from .constants import HEIGHT_BOUNDS, bounding_box
    from .families import families_for

    fams = families_for(m)
    X, Y = HEIGHT_BOUNDS[height_fn]
    scale = 1.0
    if H is not None:
        scale = math.exp(math.log(H) / (2 * fams[0].degB))
    ext = max(max(bounding_box(f, height_fn)) for f in fams) * 1.15
    extent = ext * scale ** max(fams[0].weights)
    n = 401
    xs = np.linspace(-extent, extent, n)
    ys = np.linspace(-extent, extent, n)
    gx, gy = np.meshgrid(xs, ys)
    colors = ("#1f5fa8", "#c0392b")
    size = 640
    to_px = lambda x, y: ((x + extent) / (2 * extent) * size, size - (y + extent) / (2 * extent) * size)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    x0, y0 = to_px(0, 0)
    parts.append(f'<line x1="0" y1="{y0:.2f}" x2="{size}" y2="{y0:.2f}" stroke="#bbb"/>')
    parts.append(f'<line x1="{x0:.2f}" y1="0" x2="{x0:.2f}" y2="{size}" stroke="#bbb"/>')
    for fam, color in zip(fams, colors):
        bx = X * (H ** (1 / 3) if H else 1.0)
        by = Y * (H ** 0.5 if H else 1.0)
        A = np.zeros_like(gx)
        B = np.zeros_like(gx)
        for (i, j), c in fam.A.terms.items():
            A += float(c) * gx ** i * gy ** j
        for (i, j), c in fam.B.terms.items():
            B += float(c) * gx ** i * gy ** j
        ratio = np.maximum(np.abs(A) / bx, np.abs(B) / by)
        for p, q in _marching_squares(ratio, xs, ys):
            (ax, ay), (qx, qy) = to_px(*p), to_px(*q)
            parts.append(f'<line x1="{ax:.2f}" y1="{ay:.2f}" x2="{qx:.2f}" y2="{qy:.2f}" stroke="{color}" stroke-width="1.5"/>')
        if H is not None:
            marks = [to_px(float(a), float(b)) for a, b, _, _ in enumerate_region(RegionSpec(fam, H, 1, height_fn))]
            marks = marks[::max(1, len(marks) // 4000)]
            for px, py in marks:
                parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1.6" fill="{color}"/>')
        parts.append(f'<text x="8" y="{18 + 18 * fams.index(fam)}" fill="{color}" font-family="sans-serif" '
                     f'font-size="14">{fam.name}</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return svg


def _cmd_plot(cfg: RunConfig) -> int:
    plot_regions(cfg.m, cfg.H, cfg.out, cfg.height_fn)
    return EXIT_OK


COMMANDS = {"census": _cmd_census, "constants": _cmd_constants, "verify": _cmd_verify,
            "scan": _cmd_scan, "plot-regions": _cmd_plot}


def parse_config(argv: Sequence[str]) -> RunConfig:
    args = build_parser().parse_args(list(argv))
    if args.command is None:
        raise UsageError("a subcommand is required")
    height = getattr(args, "height", None)
    cfg = RunConfig(
        command=args.command,
        m=getattr(args, "m", None),
        H=parse_height(height) if height is not None else None,
        threads=getattr(args, "threads", 1),
        tol=getattr(args, "tol", 1e-9),
        height_fn=getattr(args, "height_fn", "standard"),
        out=getattr(args, "out", None),
        csv_out=getattr(args, "csv", None),
        budget=getattr(args, "budget", None),
        resume=getattr(args, "resume", None),
        reproducible=getattr(args, "reproducible", False),
        extra={"naive": getattr(args, "naive", False), "suite": getattr(args, "suite", None),
               "override_cap": getattr(args, "override_cap", False)},
    )
    if cfg.command == "constants" and cfg.tol < 1e-12:
        raise UsageError("tolerance below 1e-12 is not supported")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"torsion-census: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[cfg.command](cfg)
    except (UsageError, ValueError) as exc:
        print(f"torsion-census: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
