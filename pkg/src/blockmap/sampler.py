"""Random generation for the block-weighted map model.

The model factorizes through the block tree: a Galton-Watson tree with the
even offspring law mu^u conditioned to have 2n edges, whose internal nodes
of outdegree 2k are decorated with independent uniform blocks of size k.
Three tree samplers are provided (exact rejection for u >= 9/5, an exact
sequential-conditional sampler for small n at any u, and a total-variation
approximation for large subcritical n), together with a uniform rooted
quadrangulation generator built on the labeled-tree construction, and a
uniform-block sampler by core extraction from slightly larger uniform
quadrangulations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from blockmap import mapcore
from blockmap.mapcore import (
    BlockTree,
    HalfEdgeMap,
    Quadrangulation,
    _decompose_map,
    assemble,
    edge_map,
    loop_map,
    tutte_angular,
    tutte_inverse,
)
from blockmap.phase import OffspringDistribution, params

__all__ = [
    "SamplerConfig",
    "GWTreeSample",
    "SamplingBudgetError",
    "make_rng",
    "sample_offspring",
    "sample_gw_conditioned",
    "sample_uniform_quadrangulation",
    "sample_uniform_block",
    "sample_model",
]

U_CRITICAL = 9 / 5


class SamplingBudgetError(RuntimeError):
    """A rejection loop exceeded its configured budget."""


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator with deterministic per-task derivation.

    Philox keyed by SeedSequence(seed, spawn_key=key): replicas get
    independent streams from (seed, replica index) and results do not
    depend on scheduling.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _rng_digest(rng: np.random.Generator) -> str:
    st = rng.bit_generator.state
    inner = st.get("state", {})
    h = hashlib.sha256()
    for part in inner.values():
        h.update(np.asarray(part).tobytes())
    h.update(str(st.get("buffer_pos", "")).encode())
    return h.hexdigest()[:16]


@dataclass
class SamplerConfig:
    u: float
    n: int
    kind: str = "map"  # "map" | "quad"
    tree_method: str = "auto"  # "rejection_cycle" | "exact_dp" | "janson_approx"
    seed: int = 0
    max_rejections: int = 10**7
    j_max: int = 1 << 16

    EXACT_DP_CAP = 512

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError("u must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind not in ("map", "quad"):
            raise ValueError(f"kind must be 'map' or 'quad', got {self.kind!r}")
        if self.tree_method == "auto":
            if self.n <= 64:
                self.tree_method = "exact_dp"
            elif self.u >= U_CRITICAL:
                self.tree_method = "rejection_cycle"
            else:
                self.tree_method = "janson_approx"
        if self.tree_method == "exact_dp" and self.n > self.EXACT_DP_CAP:
            raise ValueError(f"exact_dp is capped at n <= {self.EXACT_DP_CAP}")
        if self.tree_method == "rejection_cycle" and self.u < U_CRITICAL:
            raise ValueError(
                "rejection_cycle is exponentially slow for u < 9/5; "
                "use exact_dp (n <= 512) or janson_approx"
            )
        if self.tree_method == "janson_approx" and self.u >= U_CRITICAL:
            raise ValueError("janson_approx is for the subcritical phase u < 9/5")
        if self.tree_method not in ("rejection_cycle", "exact_dp", "janson_approx"):
            raise ValueError(f"unknown tree method {self.tree_method!r}")


@dataclass
class GWTreeSample:
    tree: BlockTree
    rejections: int
    method: str
    approx: bool
    rng_digest: str


def sample_offspring(dist: OffspringDistribution, rng) -> int:
    """One exact draw from mu^u (an even integer)."""
    return dist.sample(rng)


_offspring_cache: dict = {}


def _offspring(u: float, j_max: int) -> OffspringDistribution:
    key = (u,)
    dist = _offspring_cache.get(key)
    if dist is None:
        dist = OffspringDistribution(params(u), j_max)
        _offspring_cache[key] = dist
    return dist


def _rotate_to_tree(degrees) -> list:
    """Cycle lemma: the unique rotation of a (sum = count-1) degree sequence
    that is a preorder outdegree list; rotation starts after the first
    minimum of the prefix sums of (degree - 1)."""
    if len(degrees) < 1024:
        degrees = list(degrees)
        best = cur = 0
        cut = 0
        for i, d in enumerate(degrees):
            cur += d - 1
            if cur < best:
                best = cur
                cut = i + 1
        return degrees[cut:] + degrees[:cut]
    steps = np.asarray(degrees, dtype=np.int64) - 1
    prefix = np.cumsum(steps)
    cut = int(np.argmin(prefix)) + 1
    if cut == len(steps):
        return list(degrees)
    d = np.concatenate([steps[cut:], steps[:cut]]) + 1
    return d.tolist()


def sample_gw_conditioned(config: SamplerConfig, rng) -> GWTreeSample:
    """GW(mu^u) tree conditioned to have exactly 2n edges."""
    n = config.n
    dist = _offspring(config.u, config.j_max)
    method = config.tree_method
    if method == "rejection_cycle":
        degrees, rejections = _trees_rejection(dist, n, rng, config.max_rejections)
        approx = False
    elif method == "exact_dp":
        degrees = _trees_exact_dp(dist, n, rng)
        rejections = 0
        approx = False
    else:
        degrees, rejections = _trees_janson(dist, n, rng, config.max_rejections)
        approx = True
    outdegs = _rotate_to_tree(degrees)
    tree = BlockTree(outdegs)
    return GWTreeSample(tree, rejections, method, approx, _rng_digest(rng))


def _trees_rejection(dist, n, rng, max_rejections):
    """Draw 2n+1 iid offspring until their sum is exactly 2n (even spans
    match, so the event has probability Theta(n^-1/2), or Theta(n^-2/3) at
    the critical point)."""
    v = 2 * n + 1
    target = 2 * n
    batch = max(1, min(2048, 4_000_000 // v))
    rejections = 0
    while rejections <= max_rejections:
        draws = dist.sample(rng, size=batch * v).reshape(batch, v)
        sums = draws.sum(axis=1)
        hits = np.nonzero(sums == target)[0]
        if hits.size:
            h = int(hits[0])
            return draws[h], rejections + h
        rejections += batch
    raise SamplingBudgetError(f"no tree of size 2n={target} within {max_rejections} attempts")


_dp_cache: dict = {}


def _dp_tables(u: float, n: int, dist: OffspringDistribution):
    """Partial-sum tables q[m][s] = P(xi_1 + .. + xi_m = 2s), s <= n.

    Rows are stored max-normalized with separate log-scale accumulators;
    within-row ratios are all the conditional sampler needs.
    """
    key = (u, n)
    tab = _dp_cache.get(key)
    if tab is not None:
        return tab
    p = dist.probs_prefix(n)  # mu(2j), j = 0..n
    v = 2 * n + 1
    rows = np.zeros((v, n + 1))
    logscale = np.zeros(v)
    row = np.zeros(n + 1)
    row[0] = 1.0
    rows[0] = row
    for m in range(1, v):
        row = np.convolve(row, p)[: n + 1]
        mx = row.max()
        row = row / mx
        logscale[m] = logscale[m - 1] + np.log(mx)
        rows[m] = row
    _dp_cache[key] = (rows, logscale, p)
    return rows, logscale, p


def _trees_exact_dp(dist, n, rng):
    """Sequential conditional sampling of (xi_1..xi_{2n+1}) given sum 2n."""
    rows, _, p = _dp_tables(dist.params.u, n, dist)
    v = 2 * n + 1
    if n <= 48:
        return _exact_dp_small(dist.params.u, n, rows, p, rng)
    degrees = np.empty(v, dtype=np.int64)
    r = n  # remaining sum in half-units
    for i in range(v):
        m = v - 1 - i
        if m == 0:
            k = r
        else:
            w = p[: r + 1] * rows[m][r::-1]
            cdf = np.cumsum(w)
            if cdf[-1] <= 0:
                raise ArithmeticError("conditional weights vanished in exact_dp")
            k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        degrees[i] = 2 * k
        r -= k
    assert r == 0
    return degrees


_dp_list_cache: dict = {}


def _exact_dp_small(u, n, rows, p, rng):
    key = (u, n)
    cached = _dp_list_cache.get(key)
    if cached is None:
        cached = (rows.tolist(), p.tolist())
        _dp_list_cache[key] = cached
    rowl, pl = cached
    v = 2 * n + 1
    degrees = [0] * v
    r = n
    for i in range(v):
        m = v - 1 - i
        if m == 0:
            k = r
        else:
            row = rowl[m]
            tot = 0.0
            cum = []
            for k in range(r + 1):
                tot += pl[k] * row[r - k]
                cum.append(tot)
            x = rng.random() * tot
            k = 0
            while k < r and cum[k] <= x:
                k += 1
        degrees[i] = 2 * k
        r -= k
    return degrees


def _trees_janson(dist, n, rng, max_rejections):
    """Approximate conditioned tree for subcritical u: 2n iid offspring plus
    one special degree absorbing the defect, uniformly placed.

    Total-variation close to the exact law in the condensation regime; the
    output is flagged approximate and never used for oracle-grade tests.
    """
    v = 2 * n + 1
    rejections = 0
    while True:
        draws = dist.sample(rng, size=2 * n)
        special = 2 * n - int(draws.sum())
        if special >= 0:
            break
        rejections += 1
        if rejections > max_rejections:
            raise SamplingBudgetError("janson_approx: special degree stayed negative")
    degrees = np.empty(v, dtype=np.int64)
    degrees[: 2 * n] = draws
    degrees[2 * n] = special
    degrees = degrees[rng.permutation(v)]
    return degrees, rejections


# -- uniform quadrangulations (labeled-tree construction) --------------------


def sample_uniform_quadrangulation(n: int, rng) -> Quadrangulation:
    """Uniform rooted quadrangulation with n faces.

    Uniform plane tree with n edges (cycle lemma on +-1 steps), iid label
    increments uniform on {-1,0,+1}, each corner joined to its successor
    (the next corner of label one less, minimum-label corners to a fresh
    vertex), root orientation by a fair bit.  Uniformity over rooted
    objects follows since every quadrangulation with n faces has n+2
    vertices.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    l2 = 2 * n

    # uniform Dyck path: n ups among 2n+1 slots, rotate after the first min
    steps = np.full(2 * n + 1, -1, dtype=np.int64)
    steps[rng.choice(2 * n + 1, size=n, replace=False)] = 1
    prefix = np.cumsum(steps)
    cut = int(np.argmin(prefix)) + 1
    dyck = np.concatenate([steps[cut:], steps[:cut]])[:l2]

    # contour: vertex and label per corner
    incr = rng.integers(-1, 2, size=n)
    corner_vertex = np.empty(l2, dtype=np.int64)
    corner_label = np.empty(l2, dtype=np.int64)
    labels = [0]
    stack = [0]
    nv = 1
    ei = 0
    cur = 0
    curlab = 0
    for t in range(l2):
        corner_vertex[t] = cur
        corner_label[t] = curlab
        if dyck[t] == 1:
            lab = curlab + int(incr[ei])
            ei += 1
            labels.append(lab)
            stack.append(cur)
            cur = nv
            curlab = lab
            nv += 1
        else:
            cur = stack.pop()
            curlab = labels[cur]

    lmin = int(corner_label.min())
    vstar = nv  # the extra vertex collecting minimum-label corners

    # successor of each corner: next corner (cyclically) with label - 1
    succ = np.full(l2, -1, dtype=np.int64)
    next_at = {}
    for i in range(2 * l2 - 1, -1, -1):
        t = i % l2
        lab = int(corner_label[t])
        if i < l2 and lab > lmin:
            succ[t] = next_at[lab - 1]  # guaranteed present: labels step by >= -1
        next_at[lab] = t

    # arcs: half-edge t at corner t, half-edge 2n+t at its successor corner
    alpha = list(range(l2, 2 * l2)) + list(range(l2))

    # incoming arcs per corner, then the outgoing arc: around a vertex the
    # corners appear in contour order, and inside a corner the arc ends are
    # sorted by decreasing cyclic distance of the far endpoint
    incoming = [[] for _ in range(l2)]
    for t in range(l2):
        s = int(succ[t])
        if s >= 0:
            incoming[s].append(t)
    corners_of_vertex = [[] for _ in range(nv)]
    for t in range(l2):
        corners_of_vertex[corner_vertex[t]].append(t)

    sigma = [0] * (2 * l2)
    for v in range(nv):
        cycle = []
        for t in corners_of_vertex[v]:
            ins = sorted(incoming[t], key=lambda j: -((j - t) % l2))
            cycle.extend(l2 + j for j in ins)
            cycle.append(t)
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            sigma[a] = b
    star_cycle = [l2 + t for t in range(l2 - 1, -1, -1) if succ[t] < 0]
    for a, b in zip(star_cycle, star_cycle[1:] + star_cycle[:1]):
        sigma[a] = b

    root = 0 if rng.integers(2) == 0 else alpha[0]
    return Quadrangulation(HalfEdgeMap(alpha, sigma, root), check=False)


# -- uniform blocks ----------------------------------------------------------

_block_catalogue: dict = {}


def _small_blocks(k: int):
    blocks = _block_catalogue.get(k)
    if blocks is None:
        blocks = mapcore.enumerate_two_connected(k)
        _block_catalogue[k] = blocks
    return blocks


def sample_uniform_block(k: int, kind: str, rng, max_rejections: int = 10**6):
    """Uniform rooted 2-connected map with k edges (kind='map') or uniform
    rooted simple quadrangulation with k faces (kind='quad').

    For k <= 3 the full catalogue (2, 1, 2 objects) is sampled directly.
    Beyond that: draw a uniform quadrangulation with 3k faces (sized so the
    condensation fraction 1 - E(1) = 1/3 puts the largest block near k),
    decompose its pre-image map, and accept the first block of size k in
    the tree's depth-first order, a tree-measurable choice, so conditionally
    on the tree the accepted block is uniform.
    """
    if k < 1:
        raise ValueError("k >= 1 required")
    if kind not in ("map", "quad"):
        raise ValueError("kind must be 'map' or 'quad'")
    if k <= 3:
        blocks = _small_blocks(k)
        b = blocks[int(rng.integers(len(blocks)))]
        return tutte_angular(b) if kind == "quad" else b
    nstar = max(k, round(3 * k))
    for _ in range(max_rejections):
        q = sample_uniform_quadrangulation(nstar, rng)
        m = tutte_inverse(q)
        blk = _decompose_map(m, stop_block_size=k)
        if blk is not None:
            return tutte_angular(blk) if kind == "quad" else blk
    raise SamplingBudgetError(f"no block of size {k} within {max_rejections} rejections")


def sample_model(config: SamplerConfig, rng=None):
    """One draw from the fixed-size model: (object, decorated block tree).

    The tree comes from sample_gw_conditioned; each internal node of
    outdegree 2k gets an independent uniform block of size k; the object is
    their assembly.  Blocks are fresh draws, never shared across samples.
    """
    if rng is None:
        rng = make_rng(config.seed)
    gw = sample_gw_conditioned(config, rng)
    outdegs = gw.tree.outdegs
    sizes = [d // 2 for d in outdegs if d > 0]
    n1 = sum(1 for k in sizes if k == 1)
    n3 = sum(1 for k in sizes if k == 3)
    bits1 = rng.integers(0, 2, size=n1) if n1 else None
    bits3 = rng.integers(0, 2, size=n3) if n3 else None
    cat1 = (edge_map(), loop_map())
    cat3 = _small_blocks(3)
    cat2 = _small_blocks(2)
    i1 = i3 = 0
    mblocks = []
    for k in sizes:
        if k == 1:
            mblocks.append(cat1[int(bits1[i1])])
            i1 += 1
        elif k == 2:
            mblocks.append(cat2[0])
        elif k == 3:
            mblocks.append(cat3[int(bits3[i3])])
            i3 += 1
        else:
            mblocks.append(sample_uniform_block(k, "map", rng))
    m = assemble(gw.tree, mblocks)
    it = iter(mblocks)
    if config.kind == "quad":
        obj = tutte_angular(m) if not m.is_vertex_map else None
        decorations = [tutte_angular(next(it)) if d > 0 else None for d in outdegs]
    else:
        obj = m
        decorations = [next(it) if d > 0 else None for d in outdegs]
    tree = BlockTree(outdegs, decorations)
    return obj, tree
