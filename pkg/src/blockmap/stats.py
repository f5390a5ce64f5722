"""Statistics extraction and the phase-diagram experiment harness.

Produces per-replica records (ranked block sizes, block count, tree height,
distance summaries) for a grid of (u, n), in parallel with deterministic
per-task seeding, plus summary fits of the scaling exponents against the
model's predictions.

Distance conventions: rows measured on the assembled object store the
median of sampled root-to-uniform-vertex distances (medians are robust to
the heavy tails near u_C); rows measured on the bare block tree store the
exact mean of the depth over all tree vertices, which is what the
supercritical tree-distance collapse compares.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from blockmap import mapcore, phase, sampler
from blockmap.mapcore import BlockTree

__all__ = [
    "SampleRecord",
    "ExperimentPlan",
    "CSV_COLUMNS",
    "largest_blocks",
    "distance_sample",
    "exponent_fit",
    "kappa_mc",
    "KappaEstimate",
    "tree_depths",
    "tree_diameter",
    "run_experiment",
]

U_CRITICAL = 9 / 5

CSV_COLUMNS = [
    "u", "n", "replica", "seed", "kind", "method", "approx",
    "LB1", "LB2", "LB3", "b", "height", "dist", "diam_lb", "ms",
]


@dataclass
class SampleRecord:
    u: float
    n: int
    replica: int
    seed: int
    kind: str
    method: str
    approx: bool
    LB1: int
    LB2: int
    LB3: int
    b: int
    height: int
    dist: float
    diam_lb: int
    ms: float

    def row(self):
        return [
            self.u, self.n, self.replica, self.seed, self.kind, self.method,
            int(self.approx), self.LB1, self.LB2, self.LB3, self.b,
            self.height, f"{self.dist:g}", self.diam_lb, f"{self.ms:g}",
        ]


def largest_blocks(tree: BlockTree, j_max: int = 3):
    """Ranked block sizes LB_1 >= LB_2 >= ..., zero-padded to j_max."""
    sizes = sorted(tree.block_sizes(), reverse=True)
    sizes += [0] * max(0, j_max - len(sizes))
    return sizes[:j_max] if j_max else sizes


def distance_sample(obj, rng, reps: int):
    """BFS distances from the root vertex to `reps` uniform vertices."""
    m = obj.map if isinstance(obj, mapcore.Quadrangulation) else obj
    dist = mapcore.bfs_distances(m, m.root_vertex())
    dist = np.asarray(dist)
    picks = rng.integers(0, len(dist), size=reps)
    return dist[picks]


def exponent_fit(points):
    """OLS fit of ln(stat) against ln(n): (slope, stderr, r_squared)."""
    pts = [(n, s) for n, s in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(n <= 0 or s <= 0 for n, s in pts):
        raise ValueError("nonpositive input to a log-log fit")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y) / sxx)
    inter = float(y.mean() - slope * x.mean())
    resid = y - (inter + slope * x)
    dof = len(pts) - 2
    s2 = float(np.dot(resid, resid)) / dof if dof else 0.0
    stderr = math.sqrt(s2 / sxx) if dof else 0.0
    sst = float(np.dot(y - y.mean(), y - y.mean()))
    r2 = 1.0 - float(np.dot(resid, resid)) / sst if sst > 0 else 1.0
    return slope, stderr, r2


# -- tree helpers ------------------------------------------------------------


def tree_depths(tree: BlockTree):
    """Depth of every vertex, from the preorder outdegree sequence."""
    depths = np.empty(tree.n_nodes, dtype=np.int64)
    stack = []
    for i, d in enumerate(tree.outdegs):
        depths[i] = len(stack)
        if stack:
            stack[-1] -= 1
            if d == 0:
                while stack and stack[-1] == 0:
                    stack.pop()
        if d > 0:
            stack.append(d)
    return depths


def _tree_parents(tree: BlockTree):
    parents = np.full(tree.n_nodes, -1, dtype=np.int64)
    stack = []
    for i, d in enumerate(tree.outdegs):
        if stack:
            parents[i] = stack[-1][0]
            stack[-1][1] -= 1
            if stack[-1][1] == 0 and d == 0:
                while stack and stack[-1][1] == 0:
                    stack.pop()
        if d > 0:
            stack.append([i, d])
    return parents


def tree_diameter(tree: BlockTree) -> int:
    """Exact diameter of the tree (two sweeps are exact on trees)."""
    nv = tree.n_nodes
    if nv <= 1:
        return 0
    parents = _tree_parents(tree)
    adj = [[] for _ in range(nv)]
    for i in range(1, nv):
        p = int(parents[i])
        adj[p].append(i)
        adj[i].append(p)

    def far(src):
        dist = np.full(nv, -1, dtype=np.int64)
        dist[src] = 0
        frontier = [src]
        best = src
        while frontier:
            nxt = []
            for v in frontier:
                dv = dist[v] + 1
                for w in adj[v]:
                    if dist[w] < 0:
                        dist[w] = dv
                        nxt.append(w)
                        best = w
            frontier = nxt
        return best, int(dist.max())

    a, _ = far(0)
    _, d = far(a)
    return d


# -- kappa estimation ---------------------------------------------------------


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    stderr: float
    samples: int
    skipped: int
    truncation_prob_bound: float
    truncation_bias_bound: float


def kappa_mc(u, samples, rng, kind="quad", j_cap=4096, max_rejections=10**6) -> KappaEstimate:
    """Monte Carlo estimate of the distance constant kappa_u.

    kappa_u = sum_j 2j mu(2j) D_j, with D_j the mean distance, in a uniform
    block of size j, from the root vertex to the closest endpoint of a
    uniform edge (quadrangulations) or to the base vertex of a uniform
    corner (maps).  Draws 2J from the size-biased offspring law, a uniform
    block of size J, and one distance; the mean estimates kappa_u when
    E(u) = 1, hence the u >= 9/5 precondition.  Sizes beyond j_cap are
    skipped; the reported tail bounds come from the mu tail formula (the
    bias bound is infinite at u = 9/5 where the size-biased mean diverges).
    """
    if u < U_CRITICAL:
        raise ValueError("kappa_u is defined for u >= 9/5")
    p = phase.params(u)
    off = phase.OffspringDistribution(p)
    sb = phase.SizeBiasedDistribution(off)
    vals = []
    skipped = 0
    for _ in range(samples):
        j = int(sb.sample(rng)) // 2
        if j > j_cap:
            skipped += 1
            continue
        blk = sampler.sample_uniform_block(j, kind, rng, max_rejections=max_rejections)
        m = blk.map if isinstance(blk, mapcore.Quadrangulation) else blk
        dist = mapcore.bfs_distances(m, m.root_vertex())
        vid = m.vertex_ids()
        h = int(rng.integers(len(m.alpha)))
        if kind == "quad":
            d = min(dist[vid[h]], dist[vid[m.alpha[h]]])
        else:
            d = dist[vid[h]]
        vals.append(d)
    vals = np.asarray(vals, dtype=np.float64)
    mean = float(vals.mean()) if len(vals) else math.nan
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
    off.extend(j_cap)
    trunc_prob = off.tail_mean_bound(j_cap) / p.E
    q = 27.0 * p.y / 4.0
    if q < 1.0:
        t = float(off._terms[j_cap])
        bias = 4.0 * p.u * t * q * j_cap**2 / (p.M_rho * p.E * (1.0 - q))
    else:
        bias = math.inf
    return KappaEstimate(mean, stderr, len(vals), skipped, trunc_prob, bias)


# -- the experiment harness ----------------------------------------------------


@dataclass
class ExperimentPlan:
    us: tuple
    ns: tuple
    replicas: int
    seed: int = 0
    kind: str = "quad"
    measure: str = "tree"  # "tree": block-tree statistics only; "full": assembled objects
    distance_reps: int = 64
    threads: int | None = None
    out_csv: str = "experiment.csv"
    out_json: str = "experiment_summary.json"
    timings: bool = False
    max_rejections: int = 10**7

    def __post_init__(self):
        self.us = tuple(float(u) for u in self.us)
        self.ns = tuple(int(n) for n in self.ns)
        if self.measure not in ("tree", "full"):
            raise ValueError("measure must be 'tree' or 'full'")
        if self.kind not in ("map", "quad"):
            raise ValueError("kind must be 'map' or 'quad'")
        if min(self.ns) < 1 or self.replicas < 1:
            raise ValueError("ns and replicas must be positive")


def _method_for(u, n, measure, kind):
    if measure == "full" and u == 1.0 and kind == "quad":
        return "cvs_direct"
    if n <= 64:
        return "exact_dp"
    if u >= U_CRITICAL:
        return "rejection_cycle"
    return "janson_approx"


def _replica_record(plan: ExperimentPlan, u, n, replica, ui, ni) -> SampleRecord:
    rng = sampler.make_rng(plan.seed, ui, ni, replica)
    method = _method_for(u, n, plan.measure, plan.kind)
    t0 = time.perf_counter()
    approx = method == "janson_approx"

    if plan.measure == "full":
        if method == "cvs_direct":
            obj = sampler.sample_uniform_quadrangulation(n, rng)
            m = mapcore.tutte_inverse(obj)
            tree = mapcore._decompose_map(m, want_blocks=False)
        else:
            cfg = sampler.SamplerConfig(
                u=u, n=n, kind=plan.kind, tree_method=method,
                max_rejections=plan.max_rejections,
            )
            obj, tree = sampler.sample_model(cfg, rng)
        dists = distance_sample(obj, rng, plan.distance_reps)
        dist = float(np.median(dists))
        diam = mapcore.diameter(obj, "two_sweep_lower_bound")
        kind = plan.kind
        depths = tree_depths(tree)
        height = int(depths.max())
    else:
        cfg = sampler.SamplerConfig(
            u=u, n=n, kind=plan.kind, tree_method=method,
            max_rejections=plan.max_rejections,
        )
        gw = sampler.sample_gw_conditioned(cfg, rng)
        tree = gw.tree
        depths = tree_depths(tree)
        height = int(depths.max())
        dist = float(depths.mean())
        diam = tree_diameter(tree)
        kind = "tree"

    lb = largest_blocks(tree, 3)
    ms = (time.perf_counter() - t0) * 1000.0 if plan.timings else 0.0
    return SampleRecord(
        u=u, n=n, replica=replica, seed=plan.seed, kind=kind, method=method,
        approx=approx, LB1=lb[0], LB2=lb[1], LB3=lb[2],
        b=tree.block_count, height=height, dist=dist, diam_lb=diam, ms=ms,
    )


def _task(args):
    plan_dict, u, n, replica, ui, ni = args
    plan = ExperimentPlan(**plan_dict)
    rec = _replica_record(plan, u, n, replica, ui, ni)
    return rec


def _plan_dict(plan: ExperimentPlan):
    return {
        "us": plan.us, "ns": plan.ns, "replicas": plan.replicas,
        "seed": plan.seed, "kind": plan.kind, "measure": plan.measure,
        "distance_reps": plan.distance_reps, "threads": 1,
        "out_csv": plan.out_csv, "out_json": plan.out_json,
        "timings": plan.timings, "max_rejections": plan.max_rejections,
    }


def run_experiment(plan: ExperimentPlan):
    """Run the replica grid, write the CSV incrementally, return the summary.

    Replica tasks are distributed over a process pool; every record depends
    only on (seed, u index, n index, replica), so the CSV is byte-identical
    whatever the thread count.  Rows appear grouped by (u, n) in plan
    order, replicas ascending.
    """
    threads = plan.threads or int(os.environ.get("BLOCKMAP_THREADS", "0")) or (os.cpu_count() or 1)
    pd = _plan_dict(plan)
    records = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 and plan.replicas > 1 else None
    try:
        with open(plan.out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for ui, u in enumerate(plan.us):
                for ni, n in enumerate(plan.ns):
                    tasks = [(pd, u, n, r, ui, ni) for r in range(plan.replicas)]
                    if pool is not None:
                        group = list(pool.map(_task, tasks, chunksize=1))
                    else:
                        group = [_task(t) for t in tasks]
                    group.sort(key=lambda r: r.replica)
                    for rec in group:
                        writer.writerow(rec.row())
                    fh.flush()
                    records.extend(group)
    finally:
        if pool is not None:
            pool.shutdown()
    summary = summarize(plan, records)
    with open(plan.out_json, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def summarize(plan: ExperimentPlan, records):
    """Per-u aggregates, exponent fits, and comparison with predictions."""
    out = {"seed": plan.seed, "kind": plan.kind, "measure": plan.measure, "per_u": []}
    for u in plan.us:
        urecs = [r for r in records if r.u == u]
        pts = []
        for n in plan.ns:
            rows = [r for r in urecs if r.n == n]
            if not rows:
                continue
            lb1 = np.array([r.LB1 for r in rows], dtype=float)
            lb2 = np.array([r.LB2 for r in rows], dtype=float)
            dist = np.array([r.dist for r in rows], dtype=float)
            pred = phase.predicted_largest_block(u, n) if n >= 2 else None
            pts.append({
                "n": n,
                "replicas": len(rows),
                "mean_lb1": float(lb1.mean()),
                "median_lb1": float(np.median(lb1)),
                "mean_lb1_over_n": float(lb1.mean() / n),
                "median_lb2": float(np.median(lb2)),
                "mean_b": float(np.mean([r.b for r in rows])),
                "mean_height": float(np.mean([r.height for r in rows])),
                "median_dist": float(np.median(dist)),
                "mean_dist": float(dist.mean()),
                "predicted_lb1": None if pred is None else pred.value,
                "prediction_scale": None if pred is None else pred.scale,
            })
        fits = {}
        fit_pts = pts[max(0, min(2, len(pts) - 3)):]  # drop the two smallest n (transient)
        def _fit(key, source):
            series = [(p["n"], p[source]) for p in fit_pts if p[source] > 0]
            if len(series) >= 3:
                slope, se, r2 = exponent_fit(series)
                fits[key] = {"slope": slope, "stderr": se, "r2": r2}
        _fit("lb1_exponent", "mean_lb1")
        _fit("lb2_exponent", "median_lb2")
        _fit("dist_exponent", "median_dist")
        regime = phase.params(u).regime
        out["per_u"].append({"u": u, "regime": regime, "points": pts, "fits": fits})
    return out
