"""Exact enumeration of maps by edges and blocks.

Closed-form counts m_n and b_n, the exact coefficient table N(n, b) of the
bivariate series M(z, u) solving M = u B(z M^2) + 1 - u, and the exact
finite-n laws (root-block size, block count) used as oracles for the
samplers.  All arithmetic is big-integer / rational; laws sum to 1 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "maps_count",
    "blocks_count",
    "BivariateCoefficients",
    "solve_bivariate",
    "partition_function",
    "root_block_law",
    "block_number_law",
    "ExactLaw",
]


def maps_count(n: int) -> int:
    """Number of rooted planar maps with n edges: 2 (2n)! 3^n / ((n+2)! n!)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    num = 2 * math.factorial(2 * n) * 3**n
    den = math.factorial(n + 2) * math.factorial(n)
    assert num % den == 0
    return num // den


def blocks_count(n: int) -> int:
    """Number of rooted 2-connected maps with n edges: 2 (3n-3)! / (n! (2n-1)!)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    num = 2 * math.factorial(3 * n - 3)
    den = math.factorial(n) * math.factorial(2 * n - 1)
    assert num % den == 0
    return num // den


@dataclass(frozen=True)
class ExactLaw:
    """A finitely supported law with exact rational probabilities."""

    support: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support/probability length mismatch")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        if sum(self.probs, Fraction(0)) != 1:
            raise ValueError("probabilities do not sum to 1")

    def prob(self, x):
        for s, p in zip(self.support, self.probs):
            if s == x:
                return p
        return Fraction(0)

    def mean(self):
        return sum(Fraction(s) * p for s, p in zip(self.support, self.probs))

    def as_floats(self):
        return {s: float(p) for s, p in zip(self.support, self.probs)}


class BivariateCoefficients:
    """Exact table N(n, b) = number of maps with n edges and b blocks.

    Satisfies sum_b N(n, b) = m_n and N(n, 1) = b_n.  ``table[n][b]`` for
    0 <= b <= n <= N.
    """

    def __init__(self, truncation: int, table):
        self.truncation = truncation
        self.table = table

    def count(self, n: int, b: int) -> int:
        if not (0 <= n <= self.truncation):
            raise ValueError(f"n={n} outside solved range 0..{self.truncation}")
        if b < 0 or b > n:
            return 0
        return self.table[n][b]

    def row(self, n: int):
        if not (0 <= n <= self.truncation):
            raise ValueError(f"n={n} outside solved range 0..{self.truncation}")
        return list(self.table[n])

    def partition_function(self, n: int, u) -> Fraction:
        """[z^n] M(z, u) = sum_b N(n, b) u^b at exact rational u."""
        u = Fraction(u)
        row = self.row(n)
        acc = Fraction(0)
        up = Fraction(1)
        for b in range(n + 1):
            if b:
                up *= u
            if row[b]:
                acc += row[b] * up
        return acc

    def iter_rows(self):
        for n in range(self.truncation + 1):
            for b in range(n + 1):
                c = self.table[n][b]
                if c or (n == 0 and b == 0):
                    yield n, b, c


def solve_bivariate(truncation: int, method: str = "block_product") -> BivariateCoefficients:
    """Compute N(n, b) for all n <= truncation.

    block_product expands the block-tree encoding of a map directly: a map
    with b blocks of sizes k_1..k_b corresponds to a plane tree with 2n+1
    vertices whose internal outdegrees are (2k_i), counted by the cycle
    lemma, so

        N(n, b) = (2n)! / (2n+1-b)!  *  [x^n] (sum_{j>=1} b_j x^j)^b  /  b!

    fixed_point iterates M <- 1 + u (B(z M^2) - 1), gaining one correct
    z-degree per round; it is kept as an independent (much slower) oracle
    and is practical only for small truncations.
    """
    if truncation < 0:
        raise ValueError("truncation must be nonnegative")
    if method == "block_product":
        return _solve_block_product(truncation)
    if method == "fixed_point":
        return _solve_fixed_point(truncation)
    raise ValueError(f"unknown method {method!r}")


def _solve_block_product(nmax: int) -> BivariateCoefficients:
    bpos = [0] + [blocks_count(j) for j in range(1, nmax + 1)]
    table = [[0] * (n + 1) for n in range(nmax + 1)]
    table[0][0] = 1
    power = [1] + [0] * nmax  # (B - 1)^b, truncated
    fact_b = 1
    for b in range(1, nmax + 1):
        fact_b *= b
        new = [0] * (nmax + 1)
        for i in range(b - 1, nmax):  # power has valuation b-1
            ci = power[i]
            if not ci:
                continue
            for j in range(1, nmax - i + 1):
                new[i + j] += ci * bpos[j]
        power = new
        # (2n)! / (2n+1-b)! = product of the b-1 integers 2n+2-b .. 2n
        for n in range(b, nmax + 1):
            t = power[n]
            if not t:
                continue
            ff = 1
            for v in range(2 * n + 2 - b, 2 * n + 1):
                ff *= v
            num = t * ff
            assert num % fact_b == 0
            table[n][b] = num // fact_b
    return BivariateCoefficients(nmax, table)


# -- small independent oracle: z-adic fixed point ---------------------------
# Bivariate polynomials are lists over z-degree of lists over u-degree.


def _bp_mul(a, b, nmax):
    out = [[0] * (nmax + 1) for _ in range(nmax + 1)]
    for i, ai in enumerate(a):
        if i > nmax:
            break
        for j, bj in enumerate(b):
            if i + j > nmax:
                break
            tgt = out[i + j]
            for p, ap in enumerate(ai):
                if not ap:
                    continue
                for q, bq in enumerate(bj):
                    if bq:
                        tgt[p + q] += ap * bq
    return out


def _solve_fixed_point(nmax: int) -> BivariateCoefficients:
    bpos = [blocks_count(j) for j in range(nmax + 1)]
    zero = lambda: [[0] * (nmax + 1) for _ in range(nmax + 1)]
    m = zero()
    m[0][0] = 1
    for _ in range(nmax + 1):
        msq = _bp_mul(m, m, nmax)
        # s = z * m^2
        s = zero()
        for i in range(nmax):
            s[i + 1] = list(msq[i])
        # b(s) - 1 via Horner from the top
        acc = zero()
        acc[0][0] = bpos[nmax]
        for j in range(nmax - 1, 0, -1):
            acc = _bp_mul(acc, s, nmax)
            acc[0][0] += bpos[j]
        acc = _bp_mul(acc, s, nmax)  # now acc = B(s) - 1 (b_0 term dropped)
        nxt = zero()
        nxt[0][0] = 1
        for i in range(nmax + 1):
            for p in range(nmax):
                nxt[i][p + 1] += acc[i][p]  # multiply by u
        if nxt == m:
            break
        m = nxt
    table = [[m[n][b] for b in range(n + 1)] for n in range(nmax + 1)]
    return BivariateCoefficients(nmax, table)


def partition_function(n: int, u, coeffs: BivariateCoefficients | None = None) -> Fraction:
    """Normalizing constant [z^n] M(z, u) of the fixed-size model, exact."""
    if coeffs is None:
        coeffs = solve_bivariate(n)
    return coeffs.partition_function(n, u)


def _m_series(n: int, u: Fraction, coeffs: BivariateCoefficients):
    return [coeffs.partition_function(i, u) for i in range(n + 1)]


def _conv(a, b, nmax):
    out = [Fraction(0)] * (nmax + 1)
    for i, ai in enumerate(a):
        if i > nmax:
            break
        if not ai:
            continue
        for j, bj in enumerate(b):
            if i + j > nmax:
                break
            if bj:
                out[i + j] += ai * bj
    return out


def root_block_law(n: int, u, coeffs: BivariateCoefficients | None = None) -> ExactLaw:
    """Law of the root block size under the fixed-size model.

    P(K = k) = u b_k [z^(n-k)] M(z,u)^(2k) / [z^n] M(z,u), the k-th term of
    the root decomposition: a block of size k with each of its 2k half-edge
    corners carrying an independent pendant map.
    """
    if n < 1:
        raise ValueError("root block law needs n >= 1")
    u = Fraction(u)
    if coeffs is None:
        coeffs = solve_bivariate(n)
    mser = _m_series(n, u, coeffs)
    z = mser[n]
    msq = _conv(mser, mser, n)
    probs = []
    power = msq  # M^(2k), starting at k=1
    for k in range(1, n + 1):
        term = u * blocks_count(k) * power[n - k] / z
        probs.append(term)
        if k < n:
            power = _conv(power, msq, n)
    return ExactLaw(tuple(range(1, n + 1)), tuple(probs))


def block_number_law(n: int, u, coeffs: BivariateCoefficients | None = None) -> ExactLaw:
    """Law of the total number of blocks: P(b) = N(n,b) u^b / [z^n] M(z,u)."""
    u = Fraction(u)
    if coeffs is None:
        coeffs = solve_bivariate(n)
    z = coeffs.partition_function(n, u)
    if n == 0:
        return ExactLaw((0,), (Fraction(1),))
    row = coeffs.row(n)
    support = []
    probs = []
    up = Fraction(1)
    for b in range(1, n + 1):
        up *= u
        if row[b]:
            support.append(b)
            probs.append(row[b] * up / z)
    return ExactLaw(tuple(support), tuple(probs))
