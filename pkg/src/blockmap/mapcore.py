"""Rooted planar maps as rotation systems on half-edges.

A map is stored as a pair of permutations on half-edge indices 0..2E-1:
``alpha`` (a fixed-point-free involution pairing the two half-edges of each
edge) and ``sigma`` (counterclockwise next half-edge around the origin
vertex), plus a distinguished root half-edge.  Vertices are the cycles of
sigma, faces the cycles of sigma o alpha, and genus 0 is enforced through
Euler's formula.

The module provides the angular (quadrangulation) bijection and its inverse,
the recursive block decomposition into an ordered tree of 2-connected blocks
(simple blocks for quadrangulations), the inverse assembly, graph metrics,
the HEMAP v1 text format, and exhaustive catalogues of small maps used as
ground truth in tests.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HalfEdgeMap",
    "Quadrangulation",
    "BlockTree",
    "Diagnostics",
    "VERTEX_MAP",
    "validate",
    "tutte_angular",
    "tutte_inverse",
    "block_decompose",
    "assemble",
    "bfs_distances",
    "diameter",
    "is_simple",
    "is_two_connected",
    "edge_block_ids",
    "write_hemap",
    "read_hemap",
    "dumps_hemap",
    "loads_hemap",
    "enumerate_maps",
    "enumerate_two_connected",
    "edge_map",
    "loop_map",
]

_BIG = 4096  # half-edge count above which permutation utilities switch to numpy


def perm_cycle_ids(perm):
    """Label the cycles of a permutation; returns (ids, n_cycles).

    ids[i] is a dense cycle index in 0..n_cycles-1, numbered by smallest
    element first appearance.
    """
    h = len(perm)
    if h >= _BIG:
        p = np.asarray(perm, dtype=np.int64)
        rep = np.arange(h, dtype=np.int64)
        jump = p
        while True:
            rep2 = np.minimum(rep, rep[jump])
            if np.array_equal(rep2, rep):
                break
            rep = rep2
            jump = jump[jump]
        _, ids = np.unique(rep, return_inverse=True)
        return ids.astype(np.int64), int(ids.max()) + 1 if h else 0
    ids = [-1] * h
    nc = 0
    for i in range(h):
        if ids[i] >= 0:
            continue
        j = i
        while ids[j] < 0:
            ids[j] = nc
            j = perm[j]
        nc += 1
    return ids, nc


def _count_cycles(perm):
    return perm_cycle_ids(perm)[1]


class HalfEdgeMap:
    """Immutable rooted combinatorial map (rotation system).

    Half-edge indices are dense integers 0..2E-1.  The vertex map (no
    half-edges, a single vertex) is represented with root -1; see
    ``VERTEX_MAP``.
    """

    __slots__ = ("alpha", "sigma", "root", "_vid", "_nv", "_canon")

    def __init__(self, alpha, sigma, root, check=False):
        self.alpha = list(alpha)
        self.sigma = list(sigma)
        self.root = int(root)
        self._vid = None
        self._nv = None
        self._canon = None
        if check:
            diag = validate(self)
            if not diag.ok:
                raise ValueError(f"invalid map: {diag.first_violation}")

    # -- basic counts ------------------------------------------------------

    @property
    def half_edge_count(self):
        return len(self.alpha)

    @property
    def n_edges(self):
        return len(self.alpha) // 2

    @property
    def is_vertex_map(self):
        return not self.alpha

    def vertex_ids(self):
        """Per-half-edge vertex index (cycles of sigma); cached."""
        if self._vid is None:
            self._vid, self._nv = perm_cycle_ids(self.sigma)
        return self._vid

    @property
    def n_vertices(self):
        if self.is_vertex_map:
            return 1
        self.vertex_ids()
        return self._nv

    @property
    def n_faces(self):
        if self.is_vertex_map:
            return 1
        sigma = self.sigma
        return _count_cycles([sigma[a] for a in self.alpha])

    def root_vertex(self):
        if self.is_vertex_map:
            return 0
        return self.vertex_ids()[self.root]

    # -- relabeling-invariant identity ------------------------------------

    def canonical_order(self):
        """Half-edges in deterministic root-first traversal order.

        Walks each vertex's full rotation on first visit, stacking opposite
        half-edges depth-first.  Visits every half-edge iff the map is
        connected; rooted maps are isomorphic iff relabeling by this order
        yields identical (alpha, sigma).
        """
        h = len(self.alpha)
        if h == 0:
            return []
        alpha, sigma = self.alpha, self.sigma
        seen = bytearray(h)
        order = []
        stack = [self.root]
        while stack:
            e = stack.pop()
            if seen[e]:
                continue
            f = e
            while True:
                seen[f] = 1
                order.append(f)
                stack.append(alpha[f])
                f = sigma[f]
                if f == e:
                    break
        return order

    def canonical_form(self):
        if self._canon is None:
            order = self.canonical_order()
            h = len(self.alpha)
            if len(order) != h:
                raise ValueError("map is not connected")
            pos = [0] * h
            for i, e in enumerate(order):
                pos[e] = i
            alpha, sigma = self.alpha, self.sigma
            self._canon = (
                tuple(pos[alpha[e]] for e in order),
                tuple(pos[sigma[e]] for e in order),
            )
        return self._canon

    def canonical(self):
        """The canonically relabeled copy (root becomes half-edge 0)."""
        if self.is_vertex_map:
            return self
        a, s = self.canonical_form()
        return HalfEdgeMap(a, s, 0)

    def __eq__(self, other):
        if not isinstance(other, HalfEdgeMap):
            return NotImplemented
        if len(self.alpha) != len(other.alpha):
            return False
        if self.is_vertex_map:
            return True
        return self.canonical_form() == other.canonical_form()

    def __hash__(self):
        if self.is_vertex_map:
            return hash(("hemap", 0))
        return hash(("hemap",) + self.canonical_form())

    def __repr__(self):
        return f"HalfEdgeMap(E={self.n_edges}, root={self.root})"


VERTEX_MAP = HalfEdgeMap([], [], -1)


def edge_map():
    """The map reduced to a single edge between two vertices."""
    return HalfEdgeMap([1, 0], [0, 1], 0)


def loop_map():
    """The map reduced to a single loop edge."""
    return HalfEdgeMap([1, 0], [1, 0], 0)


@dataclass
class Diagnostics:
    ok: bool
    involution_ok: bool
    permutation_ok: bool
    transitive_ok: bool
    genus_ok: bool
    first_violation: tuple | None
    n_vertices: int
    n_edges: int
    n_faces: int


def validate(m) -> Diagnostics:
    """Check the rotation-system invariants; never raises on bad input."""
    if isinstance(m, Quadrangulation):
        return validate(m.map)
    h = len(m.alpha)
    if h == 0:
        return Diagnostics(True, True, True, True, True, None, 1, 0, 1)
    alpha, sigma = m.alpha, m.sigma

    if h % 2 or not (0 <= m.root < h) or len(sigma) != h:
        return Diagnostics(False, False, False, False, False, ("shape", -1), 0, h // 2, 0)

    inv_bad = next((i for i in range(h) if alpha[i] == i or not (0 <= alpha[i] < h) or alpha[alpha[i]] != i), None)
    involution_ok = inv_bad is None

    seen = bytearray(h)
    perm_bad = None
    for i in range(h):
        j = sigma[i]
        if not (0 <= j < h) or seen[j]:
            perm_bad = i
            break
        seen[j] = 1
    permutation_ok = perm_bad is None

    transitive_ok = genus_ok = False
    nv = nf = 0
    if involution_ok and permutation_ok:
        transitive_ok = len(m.canonical_order()) == h
        _, nv = perm_cycle_ids(sigma)
        nf = _count_cycles([sigma[a] for a in alpha])
        genus_ok = nv - h // 2 + nf == 2

    if not involution_ok:
        first = ("involution", inv_bad)
    elif not permutation_ok:
        first = ("permutation", perm_bad)
    elif not transitive_ok:
        first = ("transitivity", -1)
    elif not genus_ok:
        first = ("genus", -1)
    else:
        first = None
    ok = first is None
    return Diagnostics(ok, involution_ok, permutation_ok, transitive_ok, genus_ok, first, nv, h // 2, nf)


class Quadrangulation:
    """A map with every face of degree 4, bicolored with a black root vertex.

    The size of a quadrangulation is its number of faces (= E/2).  The
    bicoloring is recomputed from the rotation system; it is the unique
    proper 2-coloring with the root vertex black.
    """

    __slots__ = ("map", "colors")

    def __init__(self, m: HalfEdgeMap, check=True):
        self.map = m
        self.colors = _bipartition(m)
        if check:
            if not validate(m).ok:
                raise ValueError("underlying map is invalid")
            if self.colors is None:
                raise ValueError("map is not bipartite")
            if not _faces_are_quadrilaterals(m):
                raise ValueError("not all faces have degree 4")

    @property
    def size(self):
        return self.map.n_edges // 2

    @property
    def n_faces(self):
        return self.size

    @property
    def n_vertices(self):
        return self.map.n_vertices

    def black(self, vertex):
        return bool(self.colors[vertex])

    def canonical_form(self):
        return self.map.canonical_form()

    def __eq__(self, other):
        if not isinstance(other, Quadrangulation):
            return NotImplemented
        return self.map == other.map

    def __hash__(self):
        return hash(("quad",) + self.map.canonical_form())

    def __repr__(self):
        return f"Quadrangulation(faces={self.size}, root={self.map.root})"


def _bipartition(m):
    """2-coloring of vertices with the root vertex black (True); None if improper."""
    vid = m.vertex_ids()
    nv = m.n_vertices
    colors = [None] * nv
    colors[vid[m.root]] = True
    neighbors = _adjacency(m)
    queue = deque([vid[m.root]])
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if colors[w] is None:
                colors[w] = not colors[v]
                queue.append(w)
            elif colors[w] == colors[v]:
                return None
    return colors


def _faces_are_quadrilaterals(m):
    alpha, sigma = m.alpha, m.sigma
    face_next = [sigma[a] for a in alpha]
    seen = bytearray(len(alpha))
    for i in range(len(alpha)):
        if seen[i]:
            continue
        d = 0
        j = i
        while not seen[j]:
            seen[j] = 1
            j = face_next[j]
            d += 1
        if d != 4:
            return False
    return True


def _adjacency(m):
    vid = m.vertex_ids()
    nv = m.n_vertices
    neighbors = [[] for _ in range(nv)]
    alpha = m.alpha
    for h in range(len(alpha)):
        neighbors[vid[h]].append(vid[alpha[h]])
    return neighbors


# -- Tutte's angular bijection --------------------------------------------


def tutte_angular(m: HalfEdgeMap) -> Quadrangulation:
    """Angular map of m: one white vertex per face, one edge per corner.

    The image has n faces, n+2 vertices and 2n edges for |m| = n, and is
    rooted at the corner of m's root, oriented black to white.  Restricted to
    2-connected maps the image is simple.
    """
    if m.is_vertex_map:
        raise ValueError("the vertex map has no faces to star")
    h = len(m.alpha)
    alpha, sigma = m.alpha, m.sigma
    inv_sigma = [0] * h
    for i in range(h):
        inv_sigma[sigma[i]] = i
    # black half-edge of corner e keeps index e; its white partner is h + e
    alpha_q = [0] * (2 * h)
    sigma_q = [0] * (2 * h)
    for e in range(h):
        alpha_q[e] = h + e
        alpha_q[h + e] = e
        sigma_q[e] = sigma[e]
        sigma_q[h + e] = h + inv_sigma[alpha[e]]
    return Quadrangulation(HalfEdgeMap(alpha_q, sigma_q, m.root), check=False)


def tutte_inverse(q: Quadrangulation) -> HalfEdgeMap:
    """Inverse of the angular bijection: black diagonals of the faces."""
    if not isinstance(q, Quadrangulation):
        q = Quadrangulation(q)
    qm = q.map
    h = len(qm.alpha)
    vid = qm.vertex_ids()
    colors = q.colors
    alpha_q, sigma_q = qm.alpha, qm.sigma
    pos = [-1] * h
    blacks = []
    for i in range(h):
        if colors[vid[i]]:
            pos[i] = len(blacks)
            blacks.append(i)
    if 2 * len(blacks) != h:
        raise ValueError("not a quadrangulation: unbalanced half-edge coloring")
    alpha_m = [0] * len(blacks)
    sigma_m = [0] * len(blacks)
    for e, b in enumerate(blacks):
        sigma_m[e] = pos[sigma_q[b]]
        alpha_m[e] = pos[sigma_q[alpha_q[sigma_q[alpha_q[b]]]]]
    return HalfEdgeMap(alpha_m, sigma_m, pos[qm.root])


# -- blocks ----------------------------------------------------------------


def edge_block_ids(m: HalfEdgeMap):
    """Biconnected components of the underlying multigraph.

    Returns (bid, n_blocks) with bid[h] the block index of h's edge.  Each
    loop is its own block; parallel edges share a block.  Dense indices, in
    no particular order.
    """
    h = len(m.alpha)
    if h == 0:
        return [], 0
    alpha, sigma = m.alpha, m.sigma
    vid = m.vertex_ids()
    nv = m.n_vertices

    # incidence lists in rotation order
    inc = [[] for _ in range(nv)]
    for i in range(h):
        inc[vid[i]].append(i)

    bid = [-1] * h
    n_blocks = 0
    disc = [-1] * nv
    low = [0] * nv
    timer = 0
    estack = []  # half-edge representatives (smaller index of the pair)

    root_v = vid[m.root]
    disc[root_v] = low[root_v] = timer
    timer += 1
    # frames: [vertex, incidence index, half-edge used to enter, parent vertex]
    frames = [[root_v, 0, -1, -1]]
    while frames:
        frame = frames[-1]
        v, idx = frame[0], frame[1]
        if idx < len(inc[v]):
            frame[1] += 1
            he = inc[v][idx]
            if bid[he] >= 0:
                continue
            w = vid[alpha[he]]
            if w == v:
                # loop: its own block
                bid[he] = bid[alpha[he]] = n_blocks
                n_blocks += 1
                continue
            if he == frame[2]:
                continue  # the single tree-edge instance back to the parent
            if disc[w] == -1:
                estack.append(he)
                disc[w] = low[w] = timer
                timer += 1
                frames.append([w, 0, alpha[he], v])
            elif disc[w] < disc[v]:
                estack.append(he)
                if disc[w] < low[v]:
                    low[v] = disc[w]
        else:
            frames.pop()
            if not frames:
                break
            parent = frames[-1]
            pv = parent[0]
            if low[v] < low[pv]:
                low[pv] = low[v]
            if low[v] >= disc[pv]:
                # pop one block, delimited by the tree edge into v
                enter = alpha[frame[2]]
                while True:
                    e = estack.pop()
                    bid[e] = bid[alpha[e]] = n_blocks
                    if e == enter:
                        break
                n_blocks += 1
    return bid, n_blocks


def is_two_connected(x) -> bool:
    """Cut-vertex search, independent of the block decomposition.

    A map is separable iff its edge set splits into two nonempty parts
    sharing exactly one vertex.  The vertex map counts as 2-connected.
    """
    m = x.map if isinstance(x, Quadrangulation) else x
    ne = m.n_edges
    if ne <= 1:
        return True
    vid = m.vertex_ids()
    alpha = m.alpha
    nv = m.n_vertices
    ends = [(vid[h], vid[alpha[h]]) for h in range(2 * ne) if h < alpha[h]]
    incident = [[] for _ in range(nv)]
    for e, (a, b) in enumerate(ends):
        incident[a].append(e)
        if b != a:
            incident[b].append(e)
    parent = list(range(ne))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for v in range(nv):
        for e in range(ne):
            parent[e] = e
        groups = ne
        for w in range(nv):
            if w == v or not incident[w]:
                continue
            r0 = find(incident[w][0])
            for e in incident[w][1:]:
                r = find(e)
                if r != r0:
                    parent[r] = r0
                    groups -= 1
        if groups >= 2:
            return False
    return True


def is_simple(x) -> bool:
    """No loops and no multiple edges (direct scan)."""
    m = x.map if isinstance(x, Quadrangulation) else x
    vid = m.vertex_ids()
    alpha = m.alpha
    seen = set()
    for h in range(0, len(alpha)):
        if h > alpha[h]:
            continue
        a, b = vid[h], vid[alpha[h]]
        if a == b:
            return False
        key = (a, b) if a < b else (b, a)
        if key in seen:
            return False
        seen.add(key)
    return True


# -- block tree ------------------------------------------------------------


class BlockTree:
    """Ordered rooted tree with even outdegrees, in preorder representation.

    ``outdegs[i]`` is the number of children of the i-th node in preorder;
    ``blocks[i]`` is the decoration: a rooted 2-connected HalfEdgeMap (or a
    simple Quadrangulation) for internal nodes, None (the vertex-map
    sentinel) for leaves.  A node of outdegree 2k carries a block of size k.
    """

    __slots__ = ("outdegs", "blocks", "_children")

    def __init__(self, outdegs, blocks=None):
        self.outdegs = list(outdegs)
        self.blocks = list(blocks) if blocks is not None else [None] * len(self.outdegs)
        self._children = None
        if len(self.blocks) != len(self.outdegs):
            raise ValueError("one decoration per node required")

    @property
    def n_nodes(self):
        return len(self.outdegs)

    @property
    def n_tree_edges(self):
        return sum(self.outdegs)

    @property
    def size(self):
        """Size of the encoded object: edges for maps, faces for quadrangulations."""
        return self.n_tree_edges // 2

    def internal_nodes(self):
        return [i for i, d in enumerate(self.outdegs) if d > 0]

    @property
    def block_count(self):
        return sum(1 for d in self.outdegs if d > 0)

    def block_sizes(self):
        return [d // 2 for d in self.outdegs if d > 0]

    def children(self):
        """children()[i] = list of preorder indices of node i's children."""
        if self._children is None:
            ch = [[] for _ in self.outdegs]
            stack = []
            for i, d in enumerate(self.outdegs):
                if stack:
                    p = stack[-1]
                    ch[p].append(i)
                    if len(ch[p]) == self.outdegs[p]:
                        stack.pop()
                        while stack and len(ch[stack[-1]]) == self.outdegs[stack[-1]]:
                            stack.pop()
                if d > 0:
                    stack.append(i)
            self._children = ch
        return self._children

    def depths(self):
        ch = self.children()
        depth = [0] * self.n_nodes
        stack = [0]
        while stack:
            i = stack.pop()
            for c in ch[i]:
                depth[c] = depth[i] + 1
                stack.append(c)
        return depth

    def height(self):
        return max(self.depths()) if self.outdegs else 0

    def is_consistent(self):
        if any(d % 2 for d in self.outdegs):
            return False
        remaining = 1
        for i, d in enumerate(self.outdegs):
            if remaining <= 0:
                return False
            remaining += d - 1
        if remaining != 0:
            return False
        for d, b in zip(self.outdegs, self.blocks):
            if d == 0 and b is not None:
                return False
            if d > 0:
                if b is None:
                    return False
                size = b.size if isinstance(b, Quadrangulation) else b.n_edges
                if 2 * size != d:
                    return False
        return True

    def structure_key(self):
        return (
            tuple(self.outdegs),
            tuple(b.canonical_form() if b is not None else None for b in self.blocks),
        )

    def __eq__(self, other):
        if not isinstance(other, BlockTree):
            return NotImplemented
        return self.structure_key() == other.structure_key()

    def __repr__(self):
        return f"BlockTree(nodes={self.n_nodes}, blocks={self.block_count}, size={self.size})"


# -- decomposition ---------------------------------------------------------


def _decompose_map(m: HalfEdgeMap, want_blocks=True, stop_block_size=None):
    """Ordered block tree of a map.

    Children of a block node are indexed by the block's half-edges in the
    deterministic traversal order of the standalone rooted block (the same
    order ``canonical_order`` produces), so decompose and assemble are exact
    inverses.  With want_blocks False only the tree shape is produced.  With
    stop_block_size set, returns the first block of that size in preorder
    (or None) instead of a tree; used by rejection sampling of uniform
    blocks, where the choice must be measurable with respect to the tree.
    """
    if m.is_vertex_map:
        if stop_block_size is not None:
            return None
        return BlockTree([0], [None])
    alpha, sigma = m.alpha, m.sigma
    bid, _ = edge_block_ids(m)

    outdegs = []
    blocks = []

    # a task is a pendant submap: (root half-edge, run_next dict at the
    # attachment vertex or None for the whole map)
    # stack holds ("task", r, run_next) and ("leaf",) entries; preorder pops.
    stack = [("task", m.root, None)]
    while stack:
        item = stack.pop()
        if item[0] == "leaf":
            outdegs.append(0)
            blocks.append(None)
            continue
        _, r, run_next = item
        b = bid[r]
        # traverse the block exactly like the standalone canonical traversal
        order = []
        pos = {}
        next_b = {}
        runs = []
        bseen = set()
        bstack = [r]
        while bstack:
            e = bstack.pop()
            if e in bseen:
                continue
            f = e
            while True:
                bseen.add(f)
                pos[f] = len(order)
                order.append(f)
                bstack.append(alpha[f])
                # scan the corner after f, collecting the pendant run
                g = run_next[f] if run_next is not None and f in run_next else sigma[f]
                run = []
                while bid[g] != b:
                    run.append(g)
                    g = run_next[g] if run_next is not None and g in run_next else sigma[g]
                runs.append(run)
                next_b[f] = g
                f = g
                if f == e:
                    break
        k2 = len(order)  # 2k half-edges for a block of size k
        if stop_block_size is not None and k2 == 2 * stop_block_size:
            return _extract_block(alpha, order, pos, next_b)
        outdegs.append(k2)
        if want_blocks:
            blocks.append(_extract_block(alpha, order, pos, next_b))
        else:
            blocks.append(True)  # placeholder, replaced below
        # children in slot order: push reversed so they pop left to right
        for i in range(k2 - 1, -1, -1):
            run = runs[i]
            if not run:
                stack.append(("leaf",))
            else:
                sub_next = {run[j]: run[(j + 1) % len(run)] for j in range(len(run))}
                stack.append(("task", run[0], sub_next))
    if stop_block_size is not None:
        return None
    if not want_blocks:
        blocks = [None if d == 0 else True for d in outdegs]
        t = BlockTree(outdegs)
        return t
    return BlockTree(outdegs, blocks)


def _extract_block(alpha, order, pos, next_b):
    """Standalone rooted map for a traversed block (canonical labels)."""
    k2 = len(order)
    a = [0] * k2
    s = [0] * k2
    for i, e in enumerate(order):
        a[i] = pos[alpha[e]]
        s[i] = pos[next_b[e]]
    return HalfEdgeMap(a, s, 0)


def block_decompose(x):
    """Block tree and blocks of a map or quadrangulation.

    For maps, blocks are the maximal 2-connected submaps; for
    quadrangulations, the maximal simple blocks, obtained through the
    angular bijection, under which the two decompositions correspond
    node by node.  Returns (tree, blocks) where blocks is the list of
    internal-node decorations in preorder.
    """
    if isinstance(x, Quadrangulation):
        m = tutte_inverse(x)
        t = _decompose_map(m)
        qblocks = [tutte_angular(b) if b is not None else None for b in t.blocks]
        t = BlockTree(t.outdegs, qblocks)
    else:
        t = _decompose_map(x)
    return t, [b for b in t.blocks if b is not None]


def assemble(tree: BlockTree, blocks=None):
    """Rebuild the map (or quadrangulation) encoded by (tree, blocks).

    Inverse of block_decompose: each internal node's block has its pendant
    submaps inserted in the corners of its half-edges, taken in standalone
    traversal order.  If ``blocks`` is given it must list the internal-node
    decorations in preorder and overrides the tree's own decorations.
    """
    outdegs = list(tree.outdegs)
    decorations = list(tree.blocks)
    if blocks is not None:
        blocks = list(blocks)
        it = iter(blocks)
        decorations = [next(it) if d > 0 else None for d in outdegs]
        rest = list(it)
        if rest:
            raise ValueError("more blocks than internal nodes")
    nodes = len(outdegs)
    if nodes == 1 and outdegs[0] == 0:
        return VERTEX_MAP

    quad_mode = any(isinstance(b, Quadrangulation) for b in decorations if b is not None)
    if quad_mode:
        mblocks = []
        for d, b in zip(outdegs, decorations):
            if d == 0:
                mblocks.append(None)
                continue
            if not isinstance(b, Quadrangulation):
                raise ValueError("mixed map/quadrangulation decorations")
            mb = tutte_inverse(b)
            if 2 * mb.n_edges != d:
                raise ValueError("block size does not match outdegree")
            mblocks.append(mb.canonical())
        decorations = mblocks
    else:
        canon = []
        for d, b in zip(outdegs, decorations):
            if d == 0:
                canon.append(None)
                continue
            if b is None or 2 * b.n_edges != d:
                raise ValueError("block size does not match outdegree")
            canon.append(b.canonical())
        decorations = canon

    # children lists
    ch = BlockTree(outdegs).children()
    # half-edge ranges per internal node, preorder
    offset = [0] * nodes
    acc = 0
    for i in range(nodes):
        offset[i] = acc
        acc += outdegs[i]
    total = acc
    alpha_out = [0] * total
    sigma_out = [0] * total

    # last[i]: half-edge whose spliced sigma closes node i's root-vertex cycle
    last = [0] * nodes
    for i in range(nodes - 1, -1, -1):
        if outdegs[i] == 0:
            continue
        dec = decorations[i]
        lb = dec.sigma.index(0)
        c = ch[i][lb]
        last[i] = offset[i] + lb if outdegs[c] == 0 else last[c]

    # children first (reverse preorder) so parents overwrite the splice points
    for i in range(nodes - 1, -1, -1):
        d = outdegs[i]
        if d == 0:
            continue
        dec = decorations[i]
        o = offset[i]
        da, ds = dec.alpha, dec.sigma
        ci = ch[i]
        for j in range(d):
            alpha_out[o + j] = o + da[j]
            c = ci[j]
            if outdegs[c] == 0:
                sigma_out[o + j] = o + ds[j]
            else:
                sigma_out[o + j] = offset[c]
                sigma_out[last[c]] = o + ds[j]
    m = HalfEdgeMap(alpha_out, sigma_out, 0)
    if quad_mode:
        return tutte_angular(m)
    return m


# -- metrics ---------------------------------------------------------------

_SCIPY_MIN = 20000  # half-edge count above which BFS goes through scipy


def _graph_of(x):
    m = x.map if isinstance(x, Quadrangulation) else x
    return m


def bfs_distances(x, v: int):
    """Exact graph distances from vertex v to every vertex."""
    m = _graph_of(x)
    if m.is_vertex_map:
        if v != 0:
            raise IndexError("vertex out of range")
        return [0]
    nv = m.n_vertices
    if not (0 <= v < nv):
        raise IndexError("vertex out of range")
    if len(m.alpha) >= _SCIPY_MIN:
        return list(_bfs_scipy(m, [v])[0])
    neighbors = _adjacency(m)
    dist = [-1] * nv
    dist[v] = 0
    queue = deque([v])
    while queue:
        a = queue.popleft()
        da = dist[a] + 1
        for b in neighbors[a]:
            if dist[b] < 0:
                dist[b] = da
                queue.append(b)
    return dist


def _bfs_scipy(m, sources):
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    vid = np.asarray(m.vertex_ids(), dtype=np.int64)
    alpha = np.asarray(m.alpha, dtype=np.int64)
    nv = m.n_vertices
    rows = vid
    cols = vid[alpha]
    data = np.ones(len(rows), dtype=np.int8)
    g = csr_matrix((data, (rows, cols)), shape=(nv, nv))
    d = dijkstra(g, unweighted=True, indices=sources)
    return d.astype(np.int64)


DIAMETER_EXACT_CAP = 100_000


def diameter(x, mode="exact"):
    """Graph diameter, exact (capped at 1e5 edges) or two-sweep lower bound."""
    m = _graph_of(x)
    if m.is_vertex_map:
        return 0
    if mode == "exact":
        if m.n_edges > DIAMETER_EXACT_CAP:
            raise ValueError("exact diameter capped at 1e5 edges; use two_sweep_lower_bound")
        best = 0
        if len(m.alpha) >= _SCIPY_MIN:
            d = _bfs_scipy(m, list(range(m.n_vertices)))
            return int(d.max())
        for v in range(m.n_vertices):
            best = max(best, max(bfs_distances(m, v)))
        return best
    if mode == "two_sweep_lower_bound":
        d0 = bfs_distances(m, m.root_vertex())
        far = max(range(len(d0)), key=d0.__getitem__) if isinstance(d0, list) else int(np.argmax(d0))
        d1 = bfs_distances(m, far)
        return int(max(d1))
    raise ValueError(f"unknown mode {mode!r}")


# -- HEMAP v1 text format ---------------------------------------------------


def dumps_hemap(x) -> str:
    quad = isinstance(x, Quadrangulation)
    m = x.map if quad else x
    h = len(m.alpha)
    header = f"HEMAP 1 {h} {m.root}"
    if quad:
        color0 = 1 if x.colors[m.vertex_ids()[0]] else 0
        header += f" QUAD {color0}"
    lines = [header]
    for i in range(h):
        lines.append(f"{i} {m.alpha[i]} {m.sigma[i]}")
    return "\n".join(lines) + "\n"


def loads_hemap(text: str):
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty HEMAP input")
    head = lines[0].split()
    if len(head) < 4 or head[0] != "HEMAP" or head[1] != "1":
        raise ValueError("bad HEMAP header")
    h, root = int(head[2]), int(head[3])
    quad = len(head) >= 5 and head[4] == "QUAD"
    color0 = int(head[5]) if quad else None
    alpha = [0] * h
    sigma = [0] * h
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != h:
        raise ValueError("wrong number of half-edge lines")
    for ln in body:
        i, a, s = (int(t) for t in ln.split())
        alpha[i] = a
        sigma[i] = s
    m = HalfEdgeMap(alpha, sigma, root, check=True)
    if quad:
        q = Quadrangulation(m)
        stored = bool(color0)
        if q.colors[m.vertex_ids()[0]] != stored:
            raise ValueError("stored color contradicts the black-root convention")
        return q
    return m


def write_hemap(x, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_hemap(x))


def read_hemap(path):
    with open(path) as fh:
        return loads_hemap(fh.read())


# -- exhaustive catalogues ---------------------------------------------------


def enumerate_maps(n: int):
    """All rooted maps with n edges, canonically labeled (feasible n <= 4).

    Brute force over rotation systems with the fixed involution
    (0 1)(2 3)... and root 0, deduplicated by canonical form.  Sizes 1, 2, 3
    yield 2, 9 and 54 maps.
    """
    if n == 0:
        return [VERTEX_MAP]
    h = 2 * n
    alpha = [i ^ 1 for i in range(h)]
    out = {}
    for perm in itertools.permutations(range(h)):
        m = HalfEdgeMap(alpha, list(perm), 0)
        order = m.canonical_order()
        if len(order) != h:
            continue
        _, nv = perm_cycle_ids(perm)
        nf = _count_cycles([perm[a] for a in alpha])
        if nv - n + nf != 2:
            continue
        key = m.canonical_form()
        if key not in out:
            out[key] = m.canonical()
    return list(out.values())


def enumerate_two_connected(n: int):
    """All rooted 2-connected maps with n edges (blocks of size n)."""
    return [m for m in enumerate_maps(n) if is_two_connected(m)]
