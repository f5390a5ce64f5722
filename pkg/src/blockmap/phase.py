"""Analytic constants of the block-weighted map model at a given u > 0.

The model's offspring law on even integers is

    mu(2j) = b_j y^j u^[j != 0] / (1 + u (B(y) - 1)),    y = y(u),

where B is the generating series of 2-connected maps, algebraic of degree 3:
B^3 - B^2 - 18 y B + 27 y^2 + 16 y = 0, with B(0) = 1 and radius 4/27.
For u <= 9/5 the singularity of B rules and y(u) = 4/27; for u >= 9/5 the
branch-point singularity rules, y solves u = 1/(2 y B'(y) - B(y) + 1) and
has the closed form y = (1 - sqrt(1 - 1/u)) (1 - 1/u).  The phase transition
sits at u_C = 9/5: the mean of mu is E(u) = 8u/(3(3+u)) < 1 below it and
exactly 1 at and above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from blockmap.series import blocks_count

__all__ = [
    "U_CRITICAL",
    "RHO_B",
    "PhaseParams",
    "OffspringDistribution",
    "SizeBiasedDistribution",
    "LargestBlockPrediction",
    "SchemaParams",
    "SCHEMA_IDS",
    "y_of_u",
    "b_values",
    "b_series_partial",
    "params",
    "criticality_map",
    "exact_subcritical_mean",
    "sigma_sq_expressions",
    "predicted_largest_block",
    "schema_params",
    "size_biased",
]

U_CRITICAL = 9 / 5
RHO_B = 4 / 27

# |u - 9/5| below this and u != 9/5: constants are ill-conditioned (B'' blows
# up like (4/27 - y)^(-1/2)); params() still answers but flags the result.
NEAR_CRITICAL_BAND = 1e-6


def y_of_u(u: float) -> float:
    """y(u) = rho(u) M(rho(u), u)^2; equals 4/27 for u <= 9/5.

    The branch is decided by float comparison with 9/5, so u = 1.8 lands
    exactly on the critical value.
    """
    if u <= 0:
        raise ValueError("u must be positive")
    if u <= U_CRITICAL:
        return RHO_B
    t = 1.0 - 1.0 / u
    return (1.0 - math.sqrt(t)) * t


def b_series_partial(y: float, terms: int = 200):
    """Partial sums of B, B', B'' at y from the first ``terms`` coefficients.

    Term ratio b_{j+1}/b_j = 3j(3j-1)(3j-2) / ((j+1) 2j (2j+1)) keeps every
    intermediate in floating range.
    """
    b = 1.0  # b_1 * y
    bsum = 1.0
    d1 = 0.0
    d2 = 0.0
    t = 2.0 * y
    for j in range(1, terms + 1):
        bsum += t
        d1 += j * t / y
        d2 += j * (j - 1) * t / (y * y)
        t *= y * (3 * j) * (3 * j - 1) * (3 * j - 2) / ((j + 1) * (2 * j) * (2 * j + 1))
    return bsum, d1, d2


_MP_DPS = 50


def _b_values_mp(y):
    """mpmath (B, B', B'') at mpf y.

    On (0, 4/27) the cubic has three real roots; the combinatorial branch
    (continuation of B(0) = 1, increasing to 4/3) is the largest.  Near the
    double root at 4/27 the two close roots are separated by only
    O((4/27 - y)^(3/2)), far below the accuracy of any series seed, so the
    roots are found at 50 digits and selected by size.
    """
    rho = mp.mpf(4) / 27
    if y == rho:
        return mp.mpf(4) / 3, mp.mpf(3), mp.inf
    roots = mp.polyroots([1, -1, -18 * y, 27 * y * y + 16 * y], maxsteps=200, extraprec=80)
    real = [r.real for r in roots if abs(r.imag) < mp.mpf(10) ** (-_MP_DPS // 2)]
    if not real:
        raise ArithmeticError(f"no real cubic root at y={y}")
    bv = max(real)
    fb = 3 * bv * bv - 2 * bv - 18 * y
    fy = -18 * bv + 54 * y + 16
    d1 = -fy / fb
    d2 = -(54 - 36 * d1 + (6 * bv - 2) * d1 * d1) / fb
    return bv, d1, d2


def _y_mp(u: float):
    """y(u) as mpf; the phase is decided by the float comparison."""
    if u <= U_CRITICAL:
        return mp.mpf(4) / 27
    um = mp.mpf(u)
    t = 1 - 1 / um
    return (1 - mp.sqrt(t)) * t


def b_values(y: float):
    """(B(y), B'(y), B''(y)) on the combinatorial branch, 0 < y <= 4/27.

    Newton on the cubic from the 200-term partial-sum seed (high-precision
    internally); derivatives by implicit differentiation.  At y = 4/27 the
    cubic has a double root and the exact critical values B = 4/3, B' = 3
    are returned, with B'' = +inf (square-root singularity).
    """
    if not (0.0 < y <= RHO_B):
        raise ValueError(f"y={y} outside (0, 4/27]")
    if y >= RHO_B * (1.0 - 1e-15):
        return 4.0 / 3.0, 3.0, math.inf
    with mp.workdps(_MP_DPS):
        bv, d1, d2 = _b_values_mp(mp.mpf(y))
        return float(bv), float(d1), float(d2)


def criticality_map(y: float) -> float:
    """The unique u making mu^{y,u} critical: u = 1/(2 y B'(y) - B(y) + 1).

    Decreasing from the critical point: maps (0, 4/27] onto [9/5, inf).  The
    float nearest 4/27 stands for the radius itself, where d(4/27) = 5/9.
    """
    if not (0.0 < y <= RHO_B):
        raise ValueError(f"y={y} outside (0, 4/27]")
    if y >= RHO_B * (1.0 - 1e-15):
        return 9.0 / 5.0
    with mp.workdps(_MP_DPS):
        bv, d1, _ = _b_values_mp(mp.mpf(y))
        return float(1 / (2 * mp.mpf(y) * d1 - bv + 1))


def exact_subcritical_mean(u) -> Fraction:
    """E(u) = 8u / (3(3+u)) as an exact rational, valid for u <= 9/5."""
    u = Fraction(u)
    if u <= 0 or u > Fraction(9, 5):
        raise ValueError("exact mean formula holds for 0 < u <= 9/5")
    return 8 * u / (3 * (3 + u))


def sigma_sq_expressions(u: float):
    """Both forms of sigma(u)^2 for u > 9/5; they must agree to 1e-8.

    implicit: 1 + 4 u y^2 B''(y) / (u B(y) + 1 - u)
    closed:   (3u - 3 + 2 sqrt(u(u-1))) / (5u - 9)
    """
    if u <= U_CRITICAL:
        raise ValueError("sigma is finite only for u > 9/5")
    with mp.workdps(_MP_DPS):
        um = mp.mpf(u)
        y = _y_mp(u)
        bv, _, d2 = _b_values_mp(y)
        implicit = 1 + 4 * um * y * y * d2 / (um * bv + 1 - um)
        closed = (3 * um - 3 + 2 * mp.sqrt(um * (um - 1))) / (5 * um - 9)
        return float(implicit), float(closed)


@dataclass(frozen=True)
class PhaseParams:
    u: float
    y: float
    B: float
    Bp: float
    Bpp: float
    M_rho: float
    E: float
    c: float
    sigma: float
    w: float
    regime: str
    near_critical_warning: bool

    @property
    def mu0(self):
        return 1.0 / self.M_rho


def params(u: float) -> PhaseParams:
    """All analytic constants of the model at u, with consistency checks."""
    if u <= 0:
        raise ValueError("u must be positive")
    with mp.workdps(_MP_DPS):
        um = mp.mpf(u)
        ym = _y_mp(u)
        bv, d1, d2 = _b_values_mp(ym)
        m_rho = 1 + um * (bv - 1)
        mean = float(2 * um * ym * d1 / m_rho)
        c = float(mp.sqrt(3 / mp.pi) * (mp.mpf(2) / 27) * um / m_rho)
        y, bvf, d1f, d2f = float(ym), float(bv), float(d1), float(d2)
        m_rho_f = float(m_rho)
        w = float(mp.mpf(4) / (27 * ym))
    if u < U_CRITICAL:
        regime = "subcritical"
        sigma = math.inf
    elif u == U_CRITICAL:
        regime = "critical"
        sigma = math.inf
    else:
        regime = "supercritical"
        implicit, closed = sigma_sq_expressions(u)
        if not (math.isfinite(implicit) and abs(implicit - closed) <= 1e-8 * max(1.0, abs(closed))):
            raise ArithmeticError(
                f"sigma^2 expressions disagree at u={u}: {implicit} vs {closed}"
            )
        sigma = math.sqrt(closed)
    if u >= U_CRITICAL and abs(mean - 1.0) > 1e-10:
        raise ArithmeticError(f"criticality violated at u={u}: E={mean}")
    near = u != U_CRITICAL and abs(u - U_CRITICAL) < NEAR_CRITICAL_BAND
    return PhaseParams(
        u=u,
        y=y,
        B=bvf,
        Bp=d1f,
        Bpp=d2f,
        M_rho=m_rho_f,
        E=mean,
        c=c,
        sigma=sigma,
        w=w,
        regime=regime,
        near_critical_warning=near,
    )


# -- the offspring distribution ---------------------------------------------


class OffspringDistribution:
    """mu^u on even integers, with prefix tables and analytic tail bounds.

    Entry j of the internal table is mu(2j).  The table extends on demand;
    beyond it, b_j y^j is continued through the exact term ratio, so no
    factorials are ever formed.
    """

    def __init__(self, p: PhaseParams, j_max: int = 1 << 16):
        self.params = p
        self.hard_max = max(j_max, 1 << 22)
        self._terms = None  # b_j y^j
        self._probs = None
        self._cdf = None
        self._build(min(j_max, 1 << 12))

    def _build(self, upto: int):
        # extended precision keeps the cumulative recurrence error below the
        # 1e-12 normalization tolerance out to j ~ 2^20
        p = self.params
        u, m_rho = p.u, p.M_rho
        y = np.longdouble(p.y)
        old = self._terms
        start = len(old) if old is not None else 0
        terms = np.empty(upto + 1, dtype=np.longdouble)
        if start:
            terms[:start] = old
        else:
            terms[0] = 1.0  # sentinel, unused (j = 0 handled via 1/M_rho)
            terms[1] = 2.0 * y
            start = 2
        t = terms[start - 1]
        for j in range(start - 1, upto):
            t *= y * (3 * j) * (3 * j - 1) * (3 * j - 2) / ((j + 1) * (2 * j) * (2 * j + 1))
            terms[j + 1] = t
        self._terms = terms
        probs = (terms * (np.longdouble(u) / np.longdouble(m_rho))).astype(np.float64)
        probs[0] = 1.0 / m_rho
        self._probs = probs
        self._cdf = np.cumsum(probs)

    @property
    def table_size(self):
        return len(self._probs) - 1

    def extend(self, j_new: int):
        if j_new <= self.table_size:
            return
        if j_new > self.hard_max:
            raise RuntimeError(f"offspring table request {j_new} beyond hard cap")
        self._build(j_new)

    def pmf(self, outcome: int) -> float:
        """mu(outcome) for an even outcome 2j."""
        if outcome % 2 or outcome < 0:
            return 0.0
        j = outcome // 2
        if j > self.table_size:
            self.extend(max(j, 2 * self.table_size))
        return float(self._probs[j])

    def probs_prefix(self, j_hi: int):
        """Array [mu(0), mu(2), ..., mu(2 j_hi)]."""
        self.extend(j_hi)
        return self._probs[: j_hi + 1].copy()

    # -- analytic tail bounds -----------------------------------------------
    # a_j = b_j (4/27)^j j^(5/2) decreases to sqrt(3/pi) 2/27, so with
    # q = 27 y / 4 <= 1 and t_J = b_J y^J:
    #   sum_{j>J} b_j y^j   <= a_J q^(J+1) (2/3) J^(-3/2) = (2/3) q t_J J
    #   sum_{j>J} 2j b_j y^j <= 2 a_J q^(J+1) 2 J^(-1/2)  = 4 q t_J J^2

    def tail_mass_bound(self, j_from: int) -> float:
        """Upper bound on sum_{j > j_from} mu(2j)."""
        self.extend(j_from)
        p = self.params
        q = min(27.0 * p.y / 4.0, 1.0)
        t = float(self._terms[j_from])
        return (p.u / p.M_rho) * (2.0 / 3.0) * q * t * j_from

    def tail_mean_bound(self, j_from: int) -> float:
        """Upper bound on sum_{j > j_from} 2j mu(2j)."""
        self.extend(j_from)
        p = self.params
        q = min(27.0 * p.y / 4.0, 1.0)
        t = float(self._terms[j_from])
        return (p.u / p.M_rho) * 4.0 * q * t * j_from * j_from

    def _prefix_ld(self, j_hi, moment):
        p = self.params
        vals = self._terms[1 : j_hi + 1] * (np.longdouble(p.u) / np.longdouble(p.M_rho))
        if moment:
            vals = vals * (2 * np.arange(1, j_hi + 1, dtype=np.longdouble))
            s = np.sum(vals, dtype=np.longdouble)
        else:
            s = np.sum(vals, dtype=np.longdouble) + np.longdouble(1.0) / np.longdouble(p.M_rho)
        return float(s)

    def normalization_bracket(self, j_hi: int | None = None):
        """(lo, hi) bracketing the total mass 1 (extended-precision prefix)."""
        j_hi = j_hi or self.table_size
        self.extend(j_hi)
        s = self._prefix_ld(j_hi, moment=0)
        return s - 1e-14, s + self.tail_mass_bound(j_hi) + 1e-14

    def mean_bracket(self, j_hi: int | None = None):
        """(lo, hi) bracketing E(u)."""
        j_hi = j_hi or self.table_size
        self.extend(j_hi)
        s = self._prefix_ld(j_hi, moment=1)
        return s - 1e-13, s + self.tail_mean_bound(j_hi) + 1e-13

    # -- sampling ------------------------------------------------------------

    def sample(self, rng, size=None):
        """Draw outcomes 2j by prefix-table inversion with tail extension."""
        if size is None:
            return int(self.sample(rng, 1)[0])
        u = rng.random(size)
        out = self._invert(u)
        return 2 * out

    def _invert(self, u):
        cdf = self._cdf
        idx = np.searchsorted(cdf, u, side="right")
        hi = idx >= len(cdf)
        while np.any(hi):
            need = min(max(2 * self.table_size, 1 << 12), self.hard_max)
            if need <= self.table_size:
                raise RuntimeError("offspring tail beyond hard cap")
            self.extend(need)
            cdf = self._cdf
            idx[hi] = np.searchsorted(cdf, u[hi], side="right")
            hi = idx >= len(cdf)
        return idx


class SizeBiasedDistribution:
    """Law proportional to 2j mu(2j): the spine outdegree law.

    Normalized by E(u) (which is 1 for u >= 9/5).  Tail exponent is
    j^(-3/2), so the on-demand extension matters here.
    """

    def __init__(self, offspring: OffspringDistribution):
        self.offspring = offspring
        self._rebuild()

    def _rebuild(self):
        off = self.offspring
        j = np.arange(off.table_size + 1, dtype=np.float64)
        weights = 2.0 * j * off._probs
        self._probs = weights / off.params.E
        self._cdf = np.cumsum(self._probs)

    @property
    def table_size(self):
        return self.offspring.table_size

    def pmf(self, outcome: int) -> float:
        if outcome <= 0 or outcome % 2:
            return 0.0
        return outcome * self.offspring.pmf(outcome) / self.offspring.params.E

    def sample(self, rng, size=None):
        if size is None:
            return int(self.sample(rng, 1)[0])
        u = rng.random(size)
        cdf = self._cdf
        idx = np.searchsorted(cdf, u, side="right")
        hi = idx >= len(cdf)
        while np.any(hi):
            self.offspring.extend(min(max(2 * self.table_size, 1 << 12), self.offspring.hard_max))
            self._rebuild()
            cdf = self._cdf
            idx[hi] = np.searchsorted(cdf, u[hi], side="right")
            hi = idx >= len(cdf)
        return 2 * idx


def size_biased(u: float, j_max: int = 1 << 16) -> SizeBiasedDistribution:
    return SizeBiasedDistribution(OffspringDistribution(params(u), j_max))


# -- predictions -------------------------------------------------------------


@dataclass(frozen=True)
class LargestBlockPrediction:
    u: float
    n: int
    regime: str
    value: float | None  # predicted location (None at criticality)
    scale: float  # fluctuation scale
    janson_center: int | None = None  # exact mu-table crossing (supercritical)

    def deviation(self, lb1: float) -> float:
        if self.value is None:
            return lb1 / self.scale
        return (lb1 - self.value) / self.scale


def predicted_largest_block(u: float, n: int) -> LargestBlockPrediction:
    """Largest-block location and fluctuation scale in each regime.

    subcritical: (1 - E(u)) n with scale (2 n c(u))^(2/3);
    critical: scale n^(2/3), no closed-form constant;
    supercritical: the block size where mu(2j) crosses 1/(2n), i.e.
    ln n / ln w - (5/2) ln ln n / ln w with w = 4/(27 y), fluctuations O(1).
    The supercritical record also carries the exact crossing index
    ``janson_center`` = max{j : mu(2j) >= 1/(2n)} for diagnostics.
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    p = params(u)
    if p.regime == "subcritical":
        return LargestBlockPrediction(u, n, p.regime, (1.0 - p.E) * n, (2.0 * n * p.c) ** (2.0 / 3.0))
    if p.regime == "critical":
        return LargestBlockPrediction(u, n, p.regime, None, float(n) ** (2.0 / 3.0))
    lw = math.log(p.w)
    val = math.log(n) / lw - 2.5 * math.log(math.log(n)) / lw
    dist = OffspringDistribution(p, 1 << 12)
    thr = 1.0 / (2.0 * n)
    j = max(1, int(val))
    while dist.pmf(2 * (j + 1)) >= thr:
        j += 1
    while j > 1 and dist.pmf(2 * j) < thr:
        j -= 1
    return LargestBlockPrediction(u, n, p.regime, val, 1.0, janson_center=j)


# -- the eight decomposition schemas ------------------------------------------


@dataclass(frozen=True)
class SchemaParams:
    schema_id: str
    maps: str
    cores: str
    u_c: Fraction
    # E(u) = num u / (den (cu u + c0))
    num: int
    den: int
    cu: int
    c0: int

    def mean(self, u) -> Fraction:
        u = Fraction(u)
        return Fraction(self.num) * u / (self.den * (self.cu * u + self.c0))


_SCHEMAS = [
    SchemaParams("M2/M3", "loopless", "simple", Fraction(81, 17), 32, 3, 5, 27),
    SchemaParams("M1/M4", "all", "2-connected", Fraction(9, 5), 8, 3, 1, 3),
    SchemaParams("M4-Z/M5", "2-connected", "2-connected simple", Fraction(135, 7), 32, 5, 5, 27),
    SchemaParams("B1/B2", "bipartite", "bipartite simple", Fraction(36, 11), 20, 9, 1, 4),
    SchemaParams("B1/B4", "bipartite", "bipartite 2-connected", Fraction(52, 27), 40, 13, 1, 4),
    SchemaParams("B4/B5", "bipartite 2-connected", "bipartite 2-connected simple", Fraction(68, 3), 20, 17, 1, 4),
    SchemaParams("T1/T2", "loopless triangulations", "simple triangulations", Fraction(16, 7), 9, 2, 1, 8),
    SchemaParams("T2/T3", "simple triangulations", "irreducible triangulations", Fraction(64, 37), 27, 2, -5, 32),
]

SCHEMA_IDS = [s.schema_id for s in _SCHEMAS]


def schema_params(schema_id: str) -> SchemaParams:
    """Critical weight and mean law for the eight decomposition schemas."""
    for s in _SCHEMAS:
        if s.schema_id == schema_id:
            return s
    raise KeyError(f"unknown schema {schema_id!r}; known: {SCHEMA_IDS}")
