"""``wulffkit`` command line: run scenarios, batch tables, mesh export, gauge checks.

Exit codes: 0 all requested checks pass, 1 a check failed (or a batch row
failed), 2 the input did not parse, 3 a precondition of the computation was
violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ParseError, PreconditionFailure, WulffkitError
from .gauge import geodesic_support_check, gauge_from_spec
from .hk import ALL_CHECKS, VerificationReport
from .scenario import GAUGE_SCHEMA, Scenario, _walk_dims, load_scenario, run
from .surface import WulffMap, anisotropic_shape, sample

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_PRECONDITION = 0, 1, 2, 3

FIELD_COLUMNS = {3: ("x", "y", "z", "H_F", "kappa1_F", "kappa2_F", "F_nu"),
                 2: ("x", "y", "H_F", "kappa1_F", "F_nu")}


def _checks(values):
    if not values:
        return None
    out = []
    for v in values:
        out += [c.strip() for c in v.split(",") if c.strip()]
    bad = sorted(set(out) - set(ALL_CHECKS))
    if bad:
        raise ParseError(f"unknown checks {bad}; choose from {', '.join(ALL_CHECKS)}")
    return out


def _exit_code(exc):
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, PreconditionFailure):
        return EXIT_PRECONDITION
    return EXIT_CHECK


def report_path(scenario_path):
    p = Path(scenario_path)
    return p.with_name(p.stem + ".report.json")


def run_scenario(path, checks=None, resolution=None, seed=None, out=None):
    """Run one scenario file, write its report and return ``(report, exit_code)``."""
    sc = load_scenario(path)
    rep = run(sc, checks, resolution, seed)
    target = Path(out) if out else report_path(path)
    target.write_text(rep.to_json())
    return rep, (EXIT_OK if rep.passed else EXIT_CHECK)


# ---------------------------------------------------------------------------
# batch
# ---------------------------------------------------------------------------

def _batch_one(args):
    path, checks, resolution, seed = args
    name = Path(path).stem
    try:
        rep = run(load_scenario(path), checks, resolution, seed)
        return rep.csv_row(), rep.passed
    except (WulffkitError, ValueError):
        row = [name, "ERROR"] + [""] * (len(VerificationReport.CSV_FIELDS) - 2)
        return row, False


def batch(table_path, scenario_dir, checks=None, resolution=None, seed=None, threads=1):
    """One CSV row per ``*.json`` scenario (lexicographic by file name); returns the exit code."""
    files = sorted(str(p) for p in Path(scenario_dir).glob("*.json")
                   if not p.name.endswith(".report.json"))
    jobs = [(f, checks, resolution, seed) for f in files]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_batch_one, jobs))
    else:
        results = [_batch_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VerificationReport.CSV_FIELDS)
    for row, _ in results:
        w.writerow(row)
    text = buf.getvalue()
    if table_path is None or str(table_path) == "-":
        sys.stdout.write(text)
    else:
        Path(table_path).write_text(text)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_CHECK


# ---------------------------------------------------------------------------
# mesh export
# ---------------------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def write_obj(fh, V, cells, loop, closed):
    dim = V.shape[1]
    fh.write("o surface\n")
    for v in V:
        xyz = list(v) + [0.0] * (3 - dim)
        fh.write("v " + " ".join(_fmt(c) for c in xyz) + "\n")
    key = "f" if dim == 3 else "l"
    for c in cells:
        fh.write(key + " " + " ".join(str(int(i) + 1) for i in c) + "\n")
    if not closed and len(loop):
        fh.write("o boundary\n")
        if dim == 3:
            idx = list(loop) + [loop[0]]
            fh.write("l " + " ".join(str(int(i) + 1) for i in idx) + "\n")
        else:
            fh.write("p " + " ".join(str(int(i) + 1) for i in loop) + "\n")


def sample_fields(sc: Scenario, resolution):
    """Per-sample ``x, H^F, kappa^F, F(nu)`` as an array with :data:`FIELD_COLUMNS` columns."""
    surf = sample(sc.patch, resolution)
    sh = anisotropic_shape(sc.gauge, surf)
    return np.column_stack([surf.x, sh.H_F, sh.kappa, sh.F_nu])


def export_mesh(sc: Scenario, out_path, resolution=None, fields_path=None):
    """Write the OBJ mesh (and optionally the per-sample CSV); returns a summary dict."""
    res = resolution or sc.resolution
    V, _, cells, loop = sc.patch.mesh(res)
    out_path = Path(out_path)
    with out_path.open("w") as fh:
        write_obj(fh, V, cells, loop, sc.patch.closed)
    summary = {"obj": str(out_path), "vertices": int(V.shape[0]), "cells": int(len(cells)),
               "boundary_vertices": 0 if sc.patch.closed else int(len(loop))}
    smap = getattr(sc.patch, "map", None)
    if isinstance(smap, WulffMap):
        # post-export validation: vertices must lie on the level set F°(x - x0) = r
        level = smap.gauge.dual_gauge(V - smap.center) / smap.radius
        summary["wulff_level_error"] = float(np.max(np.abs(level - 1.0)))
    if fields_path is not None:
        data = sample_fields(sc, res)
        with Path(fields_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FIELD_COLUMNS[sc.dimension])
            for row in data:
                w.writerow([_fmt(v) for v in row])
        summary["csv"] = str(fields_path)
        summary["samples"] = int(data.shape[0])
    return summary


# ---------------------------------------------------------------------------
# gauge check
# ---------------------------------------------------------------------------

def gauge_check(F, n_samples=10_000, seed=0, grid=64):
    """Convexity margin, dual-gauge identities and the geodesic monotonicity margin."""
    rng = np.random.default_rng(seed)
    d = F.dimension
    z = rng.standard_normal((n_samples, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    x = rng.standard_normal((n_samples, d))
    phi_err = float(np.max(np.abs(F.dual_gauge(F.cahn_hoffman(z)) - 1.0)))
    cs = float(np.max(np.einsum("ij,ij->i", x, z) - F.dual_gauge(x) * F.eval(z)))
    # geodesic triples x, y, z with y between x and z and |xz| < pi
    a = rng.standard_normal((n_samples, d))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = rng.standard_normal((n_samples, d))
    b -= np.einsum("ij,ij->i", b, a)[:, None] * a
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    L = rng.uniform(0.0, np.pi * (1 - 1e-6), n_samples)
    s = rng.uniform(0.0, 1.0, n_samples) * L

    def geo(t):
        return np.cos(t)[:, None] * a + np.sin(t)[:, None] * b

    mono = float(np.min(geodesic_support_check(F, a, geo(s), geo(L))))
    margin = float(F.convexity_margin(grid))
    return {"gauge": F.spec(), "convexity_margin": margin, "dual_identity_error": phi_err,
            "cauchy_schwarz_excess": cs, "monotonicity_min": mono, "samples": n_samples,
            "seed": seed,
            "passed": bool(margin > 0 and phi_err <= 1e-6 and cs <= 1e-9 and mono >= -1e-9)}


def _load_gauge(path):
    import jsonschema

    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if "gauge" in doc:
        return load_scenario(path).gauge
    schema = dict(GAUGE_SCHEMA)
    schema["$defs"] = {"gauge": GAUGE_SCHEMA}
    schema["properties"] = dict(GAUGE_SCHEMA["properties"], dimension={"enum": [2, 3]})
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"gauge schema violation: {exc.message}") from None
    dim = doc.get("dimension", 3)
    _walk_dims(doc, dim, "gauge")
    return gauge_from_spec(doc, dim)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="wulffkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--check", action="append", metavar="NAME",
                        help="check to run (repeatable or comma separated); default: the scenario's list")
        sp.add_argument("--resolution", type=int, help="override the scenario resolution")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for batches")

    r = sub.add_parser("run", help="run one scenario and write its report")
    r.add_argument("scenario")
    common(r)
    r.add_argument("--out", help="report path (default: <scenario>.report.json)")

    b = sub.add_parser("batch", help="run every scenario of a directory into a CSV table")
    b.add_argument("scenario_dir")
    common(b)
    b.add_argument("--out", help="CSV table path (default: stdout)")

    m = sub.add_parser("mesh", help="export the sampled surface as OBJ")
    m.add_argument("scenario")
    m.add_argument("--resolution", type=int)
    m.add_argument("--out", required=True, help="OBJ path")
    m.add_argument("--fields", help="optional CSV of per-sample fields")

    g = sub.add_parser("gauge-check", help="convexity and dual-gauge identities of a gauge")
    g.add_argument("gauge", help="gauge JSON or scenario JSON")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--samples", type=int, default=10_000)
    g.add_argument("--out", help="write the JSON result here instead of stdout")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            rep, code = run_scenario(args.scenario, _checks(args.check), args.resolution,
                                     args.seed, args.out)
            status = "PASS" if code == EXIT_OK else "FAIL"
            print(f"{rep.name}: {status} " + " ".join(f"{k}={'ok' if v else 'FAIL'}"
                                                       for k, v in rep.checks.items()))
            if rep.hk_ratio is not None:
                print(f"hk_ratio = {rep.hk_ratio:.10f}")
            return code
        if args.command == "batch":
            return batch(args.out, args.scenario_dir, _checks(args.check), args.resolution,
                         args.seed, max(1, args.threads))
        if args.command == "mesh":
            summary = export_mesh(load_scenario(args.scenario), args.out, args.resolution,
                                  args.fields)
            print(json.dumps(summary, sort_keys=True))
            return EXIT_OK
        if args.command == "gauge-check":
            res = gauge_check(_load_gauge(args.gauge), args.samples, args.seed)
            text = json.dumps(res, sort_keys=True, indent=2) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK if res["passed"] else EXIT_CHECK
    except WulffkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
