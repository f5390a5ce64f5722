"""Command-line frontend: parameter queries, exact-series dumps, sampling,
block generation, experiment campaigns, and a self-verification gate.

Every subcommand is deterministic for a fixed --seed (including under
different --threads); timing fields are zeroed unless --timings is given.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

from blockmap import mapcore, phase, sampler, series, stats


def _frac_json(x: Fraction):
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _dump_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- params -------------------------------------------------------------------


def cmd_params(args):
    if args.table:
        rows = []
        for sid in phase.SCHEMA_IDS:
            s = phase.schema_params(sid)
            rows.append({
                "schema": s.schema_id,
                "maps": s.maps,
                "cores": s.cores,
                "u_c": _frac_json(s.u_c),
                "mean_at_u_c": _frac_json(s.mean(s.u_c)),
                "one_minus_mean_at_1": _frac_json(1 - s.mean(1)),
            })
        _dump_json({"schemas": rows}, args.out)
        return 0
    if args.u is None:
        raise SystemExit("params: --u or --table required")
    p = phase.params(args.u)
    doc = {
        "u": p.u,
        "regime": p.regime,
        "y": p.y,
        "B": p.B,
        "Bp": p.Bp,
        "Bpp": p.Bpp if math.isfinite(p.Bpp) else None,
        "M_rho": p.M_rho,
        "E": p.E,
        "c": p.c,
        "sigma": p.sigma if math.isfinite(p.sigma) else None,
        "w": p.w,
        "mu0": p.mu0,
        "near_critical_warning": p.near_critical_warning,
    }
    if p.regime == "subcritical":
        ur = Fraction(args.u).limit_denominator(10**12)
        doc["E_exact"] = _frac_json(phase.exact_subcritical_mean(ur))
    _dump_json(doc, args.out)
    return 0


# -- series ---------------------------------------------------------------------


def cmd_series(args):
    coeffs = series.solve_bivariate(args.max_n, method=args.method)
    lines = ["n,b,count"]
    for n, b, c in coeffs.iter_rows():
        lines.append(f"{n},{b},{c}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# -- sample / blocks -------------------------------------------------------------


def cmd_sample(args):
    cfg = sampler.SamplerConfig(
        u=args.u, n=args.n, kind=args.kind, tree_method=args.method, seed=args.seed
    )
    rng = sampler.make_rng(args.seed)
    obj, _tree = sampler.sample_model(cfg, rng)
    text = mapcore.dumps_hemap(obj)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_blocks(args):
    rng = sampler.make_rng(args.seed)
    blobs = []
    for i in range(args.count):
        blk = sampler.sample_uniform_block(args.k, args.kind, rng)
        blobs.append(mapcore.dumps_hemap(blk))
    if args.out:
        for i, blob in enumerate(blobs):
            with open(f"{args.out}.{i}.hemap", "w", newline="\n") as fh:
                fh.write(blob)
    else:
        sys.stdout.write("".join(blobs))
    return 0


# -- experiment -------------------------------------------------------------------


def _float_list(text):
    return tuple(float(t) for t in text.split(",") if t)


def _int_list(text):
    return tuple(int(t) for t in text.split(",") if t)


def cmd_experiment(args):
    plan = stats.ExperimentPlan(
        us=_float_list(args.u),
        ns=_int_list(args.n),
        replicas=args.replicas,
        seed=args.seed,
        kind=args.kind,
        measure=args.measure,
        distance_reps=args.distance_reps,
        threads=args.threads,
        out_csv=args.out_csv,
        out_json=args.out_json,
        timings=args.timings,
    )
    summary = stats.run_experiment(plan)
    sys.stdout.write(f"wrote {plan.out_csv} and {plan.out_json}\n")
    for per in summary["per_u"]:
        fits = {k: round(v["slope"], 4) for k, v in per["fits"].items()}
        sys.stdout.write(f"u={per['u']} ({per['regime']}): fitted exponents {fits}\n")
    return 0


# -- verify -----------------------------------------------------------------------


def _check(report, name, ok, observed, tolerance):
    report.append({
        "check": name,
        "pass": bool(ok),
        "observed": observed,
        "tolerance": tolerance,
    })


def cmd_verify(args):
    """Reduced-scale run of the acceptance identities; exit 0 iff all pass."""
    rep = []
    t_start = time.time()

    coeffs = series.solve_bivariate(80)
    ok = all(sum(coeffs.row(n)) == series.maps_count(n) for n in range(81))
    _check(rep, "series.sum_rows_equal_m_n (n<=80)", ok, "exact", "exact")
    ok = all(coeffs.count(n, 1) == series.blocks_count(n) for n in range(1, 81))
    _check(rep, "series.single_block_equals_b_n (n<=80)", ok, "exact", "exact")
    ok = coeffs.row(3) == [0, 2, 12, 40] and coeffs.row(2) == [0, 1, 8]
    _check(rep, "series.small_rows", ok, str(coeffs.row(3)), "[0,2,12,40]")
    z = coeffs.partition_function(3, Fraction(1, 2))
    _check(rep, "series.partition(3,1/2)=9", z == 9, str(z), "9")

    e1 = phase.exact_subcritical_mean(1)
    _check(rep, "phase.E(1)=2/3 exact", e1 == Fraction(2, 3), str(e1), "2/3")
    dev = max(abs(phase.params(u).E - 1.0) for u in (1.8, 2.0, 2.5, 5.0))
    _check(rep, "phase.E=1 supercritical", dev <= 1e-10, dev, 1e-10)
    sdev = 0.0
    for u in (1.82, 2.0, 3.0, 10.0, 50.0):
        i, c = phase.sigma_sq_expressions(u)
        sdev = max(sdev, abs(i - c) / max(1.0, c))
    _check(rep, "phase.sigma_sq_two_expressions", sdev <= 1e-8, sdev, 1e-8)
    _check(rep, "phase.y(9/5)=4/27", abs(phase.y_of_u(1.8) - 4 / 27) <= 1e-12,
           phase.y_of_u(1.8), 1e-12)
    ok = all(phase.schema_params(s).mean(phase.schema_params(s).u_c) == 1
             for s in phase.SCHEMA_IDS)
    _check(rep, "phase.schema_table_E(u_C)=1", ok, "exact", "exact")

    maps3 = mapcore.enumerate_maps(3)
    _check(rep, "mapcore.catalogue_sizes", len(maps3) == 54, len(maps3), 54)
    ok = True
    okd = True
    for m in maps3:
        q = mapcore.tutte_angular(m)
        ok &= mapcore.tutte_inverse(q) == m
        ok &= mapcore.is_simple(q) == mapcore.is_two_connected(m)
        t, _ = mapcore.block_decompose(m)
        ok &= mapcore.assemble(t) == m
        okd &= mapcore.diameter(q) <= 2 * mapcore.diameter(m) + 2
    _check(rep, "mapcore.size3_roundtrips", ok, "exact", "exact")
    _check(rep, "mapcore.size3_diameter_bound", okd, "exact", "2*diam+2")

    rng = sampler.make_rng(args.seed)
    from collections import Counter
    cnt = Counter()
    draws = 20000
    for _ in range(draws):
        cnt[sampler.sample_uniform_quadrangulation(1, rng).canonical_form()] += 1
    freqs = sorted(v / draws for v in cnt.values())
    ok = len(freqs) == 2 and abs(freqs[0] - 0.5) < 0.02
    _check(rep, "sampler.uniform_quad_n1_frequencies", ok, freqs, "1/2 +- 0.02")

    off = phase.OffspringDistribution(phase.params(1.0))
    d = off.sample(rng, size=50000)
    f0 = float((d == 0).mean())
    _check(rep, "sampler.offspring_zero_freq_u1", abs(f0 - 0.75) < 0.01, f0, "3/4 +- 0.01")

    cfg = sampler.SamplerConfig(u=1.0, n=2, tree_method="exact_dp", seed=args.seed)
    k1 = 0
    draws = 50000
    for _ in range(draws):
        _, tree = sampler.sample_model(cfg, rng)
        if tree.outdegs[0] == 2:
            k1 += 1
    law = series.root_block_law(2, 1, coeffs)
    dev = abs(k1 / draws - float(law.prob(1)))
    _check(rep, "sampler.root_block_law_n2_u1", dev < 8e-3, dev, 8e-3)

    cfg = sampler.SamplerConfig(u=2.0, n=40, tree_method="exact_dp", seed=args.seed)
    obj, tree = sampler.sample_model(cfg, sampler.make_rng(args.seed, 1))
    t2, _ = mapcore.block_decompose(obj)
    _check(rep, "sampler.model_decomposition_roundtrip",
           t2.structure_key() == tree.structure_key(), "exact", "exact")
    blob = mapcore.dumps_hemap(obj)
    _check(rep, "mapcore.hemap_bit_roundtrip",
           mapcore.dumps_hemap(mapcore.loads_hemap(blob)) == blob, "exact", "exact")

    obj2, _ = sampler.sample_model(cfg, sampler.make_rng(args.seed, 1))
    _check(rep, "sampler.seed_determinism",
           mapcore.dumps_hemap(obj2) == blob, "exact", "exact")

    ok_all = all(r["pass"] for r in rep)
    doc = {"ok": ok_all, "elapsed_s": round(time.time() - t_start, 1), "checks": rep}
    _dump_json(doc, args.out)
    return 0 if ok_all else 1


# -- main -------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(
        prog="blockmap",
        description="Block-weighted random planar maps: enumeration, sampling, experiments.",
    )
    ap.add_argument("--threads", type=int, default=None,
                    help="worker processes (default: BLOCKMAP_THREADS or all cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="analytic constants at u, or the 8-schema table")
    p.add_argument("--u", type=float)
    p.add_argument("--table", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("series", help="dump the exact N(n,b) table as CSV")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--method", choices=("block_product", "fixed_point"), default="block_product")
    p.add_argument("--out")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("sample", help="sample one map/quadrangulation from the model")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=("map", "quad"), default="map")
    p.add_argument("--method", default="auto",
                   choices=("auto", "rejection_cycle", "exact_dp", "janson_approx"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output HEMAP file (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("blocks", help="sample uniform blocks of a given size")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--kind", choices=("map", "quad"), default="map")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file prefix (default stdout stream)")
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("experiment", help="run a (u, n, replica) campaign")
    p.add_argument("--u", required=True, help="comma-separated u values")
    p.add_argument("--n", required=True, help="comma-separated sizes")
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("map", "quad"), default="quad")
    p.add_argument("--measure", choices=("tree", "full"), default="tree")
    p.add_argument("--distance-reps", type=int, default=64)
    p.add_argument("--out-csv", default="experiment.csv")
    p.add_argument("--out-json", default="experiment_summary.json")
    p.add_argument("--timings", action="store_true",
                   help="record wall times (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="reduced-scale acceptance checks; exit 0 iff green")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads is not None:
        os.environ["BLOCKMAP_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, ArithmeticError) as exc:
        sys.stderr.write(f"blockmap: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
