"""Command line front end.

Every subcommand parses its input, calls one library routine and prints
JSON (or CSV for ``export cloud``).  Exit codes: 0 success, 1 refused
certificate, 2 malformed input, 3 insufficient precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from psl2trop import certifier, lines, surfaces, valuation
from psl2trop.errors import ClusteringError, GenericityError, PrecisionError, SeriesParseError
from psl2trop.mat2 import EPS_PROJ, mat_to_json, puiseux_mat_from_json
from psl2trop.puiseux import DEFAULT_DEPTH

EXIT_OK, EXIT_REFUSED, EXIT_INPUT, EXIT_PRECISION = 0, 1, 2, 3
SEED_ENV = "PSL2TROP_SEED"
DEFAULT_T_GRID = "e^10,e^20,e^30"


class InputError(ValueError):
    """Malformed command line input."""


@dataclass
class RunConfig:
    seed: int = 0
    depth: int = DEFAULT_DEPTH
    tol_proj: float = EPS_PROJ
    tol_curve: float = surfaces.EPS_CURVE
    tol_tip: float = valuation.EPS_TIP
    t_grid: list = field(default_factory=lambda: parse_t_grid(DEFAULT_T_GRID))
    workers: int = 1

    def __post_init__(self):
        if self.depth < 2:
            raise InputError("depth must be at least 2")
        if any(not t > math.e for t in self.t_grid):
            raise InputError("t-grid entries must exceed e")
        if self.workers < 1:
            raise InputError("workers must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")


def parse_t_grid(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(math.exp(float(item[2:])) if item.startswith("e^") else float(item))
        except ValueError as exc:
            raise InputError(f"bad t-grid entry {item!r}") from exc
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    common.add_argument("--tol-proj", type=float, default=EPS_PROJ)
    common.add_argument("--tol-curve", type=float, default=surfaces.EPS_CURVE)
    common.add_argument("--tol-tip", type=float, default=valuation.EPS_TIP)
    common.add_argument("--t-grid", default=DEFAULT_T_GRID,
                        help="comma separated evaluation points, e.g. 'e^10,e^20'")
    common.add_argument("--out", default=None, help="write the result here instead of stdout")
    common.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="psl2trop", description="PSL2 phase tropicalization toolkit",
                parents=[common])
    sub = p.add_subparsers(dest="group", required=True)

    val = sub.add_parser("val", parents=[common]).add_subparsers(dest="cmd", required=True)
    vp = val.add_parser("point", parents=[common], help="VAL of a Puiseux matrix")
    vp.add_argument("-m", "--matrix", required=True, help="JSON or @file")
    vl = val.add_parser("line", parents=[common], help="symbolic VAL-image of a line")
    vl.add_argument("--p1", required=True)
    vl.add_argument("--p2", required=True)
    vl.add_argument("--contains", default=None, help="cone point JSON to test")

    surf = sub.add_parser("surface", parents=[common]).add_subparsers(dest="cmd", required=True)
    ss = surf.add_parser("strata", parents=[common])
    ss.add_argument("--family", required=True)
    sc = surf.add_parser("check", parents=[common])
    sc.add_argument("--family", required=True)
    sc.add_argument("--point", required=True, help="cone point JSON or @file")
    sm = surf.add_parser("sample", parents=[common])
    sm.add_argument("--family", required=True)
    sm.add_argument("--count", type=int, default=20)

    ln = sub.add_parser("lines", parents=[common]).add_subparsers(dest="cmd", required=True)
    lc = ln.add_parser("certify", parents=[common])
    lc.add_argument("--family", required=True)
    lc.add_argument("--degree", type=int, default=None)

    ver = sub.add_parser("verify", parents=[common]).add_subparsers(dest="cmd", required=True)
    vs = ver.add_parser("scaling", parents=[common])
    vs.add_argument("-m", "--matrix", required=True)

    ex = sub.add_parser("export", parents=[common]).add_subparsers(dest="cmd", required=True)
    ec = ex.add_parser("cloud", parents=[common])
    ec.add_argument("--family", required=True)
    ec.add_argument("--count", type=int, default=100)
    return p


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------

def _read_json(text):
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def bundled_names():
    return sorted(p.name[:-5] for p in (resources.files("psl2trop") / "data").iterdir()
                  if p.name.endswith(".json"))


def load_family(ref):
    """A family from a JSON file, or a bundled example by name (e.g. ``d4``)."""
    path = Path(ref)
    if path.exists():
        data = json.loads(path.read_text())
    elif ref in bundled_names():
        data = json.loads((resources.files("psl2trop") / "data" / f"{ref}.json").read_text())
    else:
        raise InputError(f"no family file or bundled example named {ref!r}")
    try:
        return surfaces.SurfaceFamily.from_json(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed family: {exc}") from exc


def config_from(args):
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError as exc:
            raise InputError(f"{SEED_ENV} must be an integer") from exc
    return RunConfig(seed=seed, depth=args.depth, tol_proj=args.tol_proj,
                     tol_curve=args.tol_curve, tol_tip=args.tol_tip,
                     t_grid=parse_t_grid(args.t_grid), workers=args.workers)


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_val_point(args, cfg):
    A = puiseux_mat_from_json(_read_json(args.matrix))
    return dumps(valuation.val_point(A, cfg.depth).to_json())


def cmd_val_line(args, cfg):
    L = lines.LineK(puiseux_mat_from_json(_read_json(args.p1)),
                    puiseux_mat_from_json(_read_json(args.p2)))
    profile = lines.quadric_intersections(L, cfg.depth)
    img = lines.val_image(L, cfg.depth)
    out = {"profile": profile.kind, "image": img.to_json()}
    if args.contains:
        x = valuation.ConePoint.from_json(_read_json(args.contains))
        m = lines.image_contains(img, x, tol=cfg.tol_proj)
        out["contains"] = {"member": m.ok, "reason": m.reason,
                           "witness": None if m.witness is None
                           else [m.witness.real, m.witness.imag]}
    return dumps(out)


def cmd_surface_strata(args, cfg):
    S = load_family(args.family)
    return dumps(surfaces.strata_describe(S).to_json())


def cmd_surface_check(args, cfg):
    S = load_family(args.family)
    x = valuation.ConePoint.from_json(_read_json(args.point))
    return dumps(surfaces.stratum_membership(S, x, tol_curve=cfg.tol_curve).to_json())


def _samples(S, count, cfg):
    if count < 1:
        raise InputError("count must be positive")
    if cfg.workers == 1:
        return surfaces.sample_points_seeded(S, count, cfg.seed, cfg.depth)
    with ProcessPoolExecutor(cfg.workers) as pool:
        return surfaces.sample_points_seeded(S, count, cfg.seed, cfg.depth, map_fn=pool.map,
                                             batch=2 * cfg.workers)


def cmd_surface_sample(args, cfg):
    S = load_family(args.family)
    samples, skipped = _samples(S, args.count, cfg)
    st = surfaces.strata_describe(S)
    rows = []
    for smp in samples:
        verdict = surfaces.stratum_membership(S, smp.val, tol_curve=cfg.tol_curve, strata=st)
        rows.append({
            "A": smp.A.to_json()["entries"],
            "residual_order": str(smp.residual_order),
            "val": smp.val.to_json(),
            "stratum": verdict.stratum,
        })
    return dumps({"count": len(rows), "skipped": skipped, "samples": rows})


def cmd_lines_certify(args, cfg):
    S = load_family(args.family)
    if args.degree is not None and args.degree != S.degree:
        raise InputError(f"family has degree {S.degree}, not {args.degree}")
    rng = surfaces.line_rng(cfg.seed, 0)
    try:
        cert = certifier.certify_no_lines(S, rng)
    except GenericityError as exc:
        report = exc.report.to_json() if exc.report is not None else None
        return dumps({"valid": False, "refused": str(exc), "genericity": report}), EXIT_REFUSED
    return dumps(cert.to_json()), (EXIT_OK if cert.valid else EXIT_REFUSED)


def cmd_verify_scaling(args, cfg):
    A = puiseux_mat_from_json(_read_json(args.matrix))
    target = valuation.val_point(A, cfg.depth)
    rows = []
    for t0 in cfg.t_grid:
        x = valuation.numeric_limit(A, t0, cfg.tol_tip)
        rows.append({"t": t0, "log_t": math.log(t0), "point": x.to_json(),
                     "distance": round(valuation.cone_distance(x, target), 12)})
    dists = [r["distance"] for r in rows]
    decreasing = all(b <= a * 1.1 for a, b in zip(dists, dists[1:]))
    return dumps({"val": target.to_json(), "grid": rows, "nonincreasing": decreasing})


def cmd_export_cloud(args, cfg):
    S = load_family(args.family)
    samples, _ = _samples(S, args.count, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["height", "layer", "re11", "im11", "re12", "im12", "re21", "im21", "re22", "im22"])
    for smp in samples:
        x = smp.val
        h = "inf" if x.height == math.inf else repr(round(x.height, 12))
        w.writerow([h, x.layer] + [repr(v) for pair in mat_to_json(x.rep) for v in pair])
    return buf.getvalue()


COMMANDS = {
    ("val", "point"): cmd_val_point,
    ("val", "line"): cmd_val_line,
    ("surface", "strata"): cmd_surface_strata,
    ("surface", "check"): cmd_surface_check,
    ("surface", "sample"): cmd_surface_sample,
    ("lines", "certify"): cmd_lines_certify,
    ("verify", "scaling"): cmd_verify_scaling,
    ("export", "cloud"): cmd_export_cloud,
}


def _error(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}, sort_keys=True) + "\n")
    return code


def run(argv=None):
    """Run one command; returns ``(exit code, output text)``."""
    args = build_parser().parse_args(argv)
    cfg = config_from(args)
    result = COMMANDS[(args.group, args.cmd)](args, cfg)
    text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
    return code, text, args.out


def main(argv=None):
    try:
        code, text, out = run(argv)
    except (PrecisionError, ClusteringError) as exc:
        return _error("precision_insufficient", exc, EXIT_PRECISION)
    except (InputError, SeriesParseError, ValueError, KeyError, TypeError, OSError) as exc:
        return _error("malformed_input", exc, EXIT_INPUT)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
