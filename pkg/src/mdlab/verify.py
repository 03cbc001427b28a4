"""Exact population oracles and exact lower-bound calculators.

Population errors are evaluated in exact rational arithmetic over the
distributions' rational fields and exposed as binary64. The divergence
calculators (chi-square with hypergeometric overlap, brute-force TV over
outcome sequences, Poissonized count TV) verify the hard-instance
constructions numerically at tiny scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .core import (
    Benchmark,
    Hypothesis,
    MdlInstance,
    NoisyDistribution,
    RationalLike,
    as_fraction,
)

NULL_BIAS = Fraction(93, 200)  # 0.465
HEAVY_BIAS = Fraction(3, 4)
HEAVY_WEIGHT = Fraction(31, 50)  # 0.62


# ---------------------------------------------------------------------------
# population error oracles

def exact_error_fraction(f: Hypothesis, dist: NoisyDistribution) -> Fraction:
    """Exact misclassification probability of ``f`` as a rational."""
    total = Fraction(0)
    for x, (px, qx) in enumerate(zip(dist.marginal, dist.bias)):
        if px == 0:
            continue
        total += px * ((1 - qx) if f(x) == 1 else qx)
    return total


def exact_error(f: Hypothesis, dist: NoisyDistribution) -> float:
    return float(exact_error_fraction(f, dist))


def excess_error_fraction(f: Hypothesis, dist: NoisyDistribution) -> Fraction:
    """Exact excess over the Bayes error, via the pointwise identity
    sum_x p(x) (1 - 2 noise(x)) [f(x) != f*(x)]."""
    fstar = dist.bayes
    total = Fraction(0)
    for x, px in enumerate(dist.marginal):
        if px == 0 or f(x) == fstar(x):
            continue
        total += px * (1 - 2 * dist.pointwise_noise[x])
    return total


def excess_error(f: Hypothesis, dist: NoisyDistribution) -> float:
    return float(excess_error_fraction(f, dist))


def identity_deviation_all_hypotheses(dist: NoisyDistribution) -> float:
    """Max |excess - (err - err*)| over every binary function on the domain.

    Vectorized binary64 sweep used by the fast identity check; the domain must
    be small enough to enumerate all 2^n functions.
    """
    n = dist.size
    if n > 20:
        raise ValueError("domain too large to enumerate all hypotheses")
    funcs = (np.arange(2**n, dtype=np.int64)[:, None] >> np.arange(n)[None, :]) & 1
    p = dist.marginal_floats()
    q = dist.bias_floats()
    noise = np.minimum(q, 1 - q)
    errs = funcs @ (p * (1 - q)) + (1 - funcs) @ (p * q)
    err_star = float(p @ noise)
    disagree = funcs != dist.bayes.bits[None, :]
    excess = disagree @ (p * (1 - 2 * noise))
    return float(np.abs(excess - (errs - err_star)).max())


@dataclass(frozen=True)
class SuccessReport:
    success: bool
    max_excess: float
    per_distribution: tuple


def benchmark_targets(instance: MdlInstance) -> tuple:
    """Per-distribution target error levels for the instance's benchmark."""
    if instance.benchmark is Benchmark.RCN:
        return instance.noise_bounds
    if instance.benchmark is Benchmark.MINIMAX:
        return (instance.eta_star,) * instance.k
    return instance.bayes_errors


def check_success(
    outputs: Sequence[Hypothesis], instance: MdlInstance, eps: float
) -> SuccessReport:
    """Exact evaluation of the success event max_i (err_i - OPT_i) <= eps."""
    if len(outputs) != instance.k:
        raise ValueError(f"expected {instance.k} outputs, got {len(outputs)}")
    targets = benchmark_targets(instance)
    per = tuple(
        exact_error_fraction(f, dist) - opt
        for f, dist, opt in zip(outputs, instance.distributions, targets)
    )
    max_excess = max(per)
    return SuccessReport(
        success=max_excess <= as_fraction(eps),
        max_excess=float(max_excess),
        per_distribution=tuple(float(v) for v in per),
    )


# ---------------------------------------------------------------------------
# hypergeometric overlap and the chi-square bound

@dataclass(frozen=True)
class OverlapDistribution:
    """Distribution of |R . R'| for two iid size-d subsets of a d^2 universe.

    Hypergeometric with population d^2, d marked, d drawn.
    """

    d: int
    pmf_fractions: tuple

    @classmethod
    def for_subset_size(cls, d: int) -> "OverlapDistribution":
        if d < 1:
            raise ValueError("subset size must be >= 1")
        big_n, k, n = d * d, d, d
        denom = math.comb(big_n, n)
        pmf = tuple(
            Fraction(math.comb(k, j) * math.comb(big_n - k, n - j), denom)
            for j in range(d + 1)
        )
        return cls(d=d, pmf_fractions=pmf)

    def pmf_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.pmf_fractions])

    def normalization_defect(self) -> float:
        return abs(float(sum(self.pmf_fractions, Fraction(0))) - 1.0)


@dataclass(frozen=True)
class IngsterResult:
    chi_square: float
    tv_upper_bound: float


def ingster_chi2(d: int, gamma: RationalLike, T: int) -> IngsterResult:
    """Chi-square of the subset-mixture alternative after T draws, and the TV bound.

    chi^2 + 1 = E[(1 + (4 gamma / 3d) J)^T] with J hypergeometric over
    overlaps; the expectation is accumulated in the log domain so large T
    cannot overflow. TV <= sqrt(chi^2) / 2.
    """
    g = float(as_fraction(gamma))
    if not 0 < g:
        raise ValueError(f"gamma must be positive, got {g}")
    if d * g > 1 + 1e-15:
        raise ValueError(f"need d*gamma <= 1, got {d * g}")
    if T < 0:
        raise ValueError("T must be non-negative")
    overlap = OverlapDistribution.for_subset_size(d)
    c = 4 * g / (3 * d)
    log_terms = [
        math.log(float(w)) + T * math.log1p(c * j)
        for j, w in enumerate(overlap.pmf_fractions)
        if w > 0
    ]
    log_sum = np.logaddexp.reduce(np.array(log_terms))
    chi2 = float(np.expm1(log_sum))
    chi2 = max(chi2, 0.0)
    return IngsterResult(chi_square=chi2, tv_upper_bound=0.5 * math.sqrt(chi2))


# ---------------------------------------------------------------------------
# brute-force TV over outcome sequences

SEQUENCE_BUDGET = 10**7


def exact_tv_sequences(
    d: int, gamma: RationalLike, T: int, budget: int = SEQUENCE_BUDGET
) -> float:
    """Exact TV between the null and the uniform subset mixture after T draws.

    Enumerates every labeled outcome sequence of length T over the
    (d^2 + 1)-point marginal and averages the alternative's likelihood over
    all C(d^2, d) planted subsets. Budget-capped on the number of sequences.
    """
    g = as_fraction(gamma)
    if not 0 < g:
        raise ValueError(f"gamma must be positive, got {float(g)}")
    if d * g > 1:
        raise ValueError(f"need d*gamma <= 1, got {float(d * g)}")
    if T < 0:
        raise ValueError("T must be non-negative")
    n_points = d * d + 1
    n_symbols = 2 * n_points
    if n_symbols**T > budget:
        raise ValueError(
            f"enumeration budget exceeded: {n_symbols}^{T} > {budget} outcome sequences"
        )
    if T == 0:
        return 0.0
    marg = [1 - d * g] + [g / d] * (d * d)
    p = np.array([float(v) for v in marg])
    # symbol a = 2*x + y
    p0 = np.empty(n_symbols)
    p0[0::2] = p * 0.75
    p0[1::2] = p * 0.25
    subsets = list(itertools.combinations(range(1, n_points), d))
    pr = np.tile(p0, (len(subsets), 1))
    for r, subset in enumerate(subsets):
        for x in subset:
            pr[r, 2 * x] = p[x] * 0.25
            pr[r, 2 * x + 1] = p[x] * 0.75
    return float(_kernels.tv_sequence_sum(p0, pr, T))


# ---------------------------------------------------------------------------
# Poissonized count TV

MAX_POISSON_RATE = 50.0
TRUNCATION_RESIDUAL = 1e-12


@dataclass(frozen=True)
class CountTvResult:
    exact_tv: float
    paper_bound: float
    rate: float
    truncation_level: int
    residual: float
    moment_rows: tuple  # ((mu0, mu1) for counts (0,0), (1,0), (0,1))
    moments_match_exactly: bool


def _poisson_truncation(rate: float) -> tuple:
    """Smallest N with P(Poisson(rate) > N) <= the residual target, plus the residual."""
    if rate == 0:
        return 0, 0.0
    log_pmf = -rate
    cdf = math.exp(log_pmf)
    n = 0
    while 1 - cdf > TRUNCATION_RESIDUAL:
        n += 1
        log_pmf += math.log(rate) - math.log(n)
        cdf += math.exp(log_pmf)
        if n > 100000:
            raise ValueError("Poisson truncation failed to reach the residual target")
    return n, max(0.0, 1 - cdf)


def _pair_pmf(rate: float, q: float, level: int) -> np.ndarray:
    """Grid of P_q(n, m) = rate^{n+m} q^n (1-q)^m e^{-rate} / (n! m!) for n+m <= level."""
    n = np.arange(level + 1, dtype=np.float64)[:, None]
    m = np.arange(level + 1, dtype=np.float64)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rate = math.log(rate) if rate > 0 else -math.inf
        log_q = math.log(q) if q > 0 else -math.inf
        log_1q = math.log(1 - q) if q < 1 else -math.inf
        logp = (
            (n + m) * log_rate
            + np.where(n == 0, 0.0, n * log_q)
            + np.where(m == 0, 0.0, m * log_1q)
            - rate
            - (np.vectorize(math.lgamma)(n + 1) + np.vectorize(math.lgamma)(m + 1))
        )
    pmf = np.exp(logp)
    pmf[(np.arange(level + 1)[:, None] + np.arange(level + 1)[None, :]) > level] = 0.0
    return pmf


def poisson_count_tv(
    d: int,
    eps: float,
    T: int,
    null_bias: Fraction = NULL_BIAS,
    heavy_bias: Fraction = HEAVY_BIAS,
    heavy_weight: Fraction = HEAVY_WEIGHT,
) -> CountTvResult:
    """Per-coordinate Poissonized count TV (times d) against the T^2 eps^2 / 2d bound.

    The two priors are the point mass at ``null_bias`` and the two-point prior
    placing ``heavy_weight`` on ``heavy_bias`` and the rest on zero; their
    first moments match exactly by construction, which forces the (0,0),
    (1,0), (0,1) rows of the mixtures to coincide.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0,1), got {eps}")
    if T < 0:
        raise ValueError("T must be non-negative")
    rate = T * eps / d
    if rate > MAX_POISSON_RATE:
        raise ValueError(f"rate {rate} exceeds the truncation practicality cap {MAX_POISSON_RATE}")
    level, residual = _poisson_truncation(rate)
    if T == 0:
        mix0 = np.zeros((1, 1))
        mix0[0, 0] = 1.0
        mix1 = mix0.copy()
    else:
        w = float(heavy_weight)
        mix0 = _pair_pmf(rate, float(null_bias), level)
        mix1 = w * _pair_pmf(rate, float(heavy_bias), level) + (1 - w) * _pair_pmf(
            rate, 0.0, level
        )
    per_coord_tv = 0.5 * float(np.abs(mix0 - mix1).sum())
    rows = (
        (float(mix0[0, 0]), float(mix1[0, 0])),
        (float(mix0[1, 0]), float(mix1[1, 0])) if level >= 1 else (0.0, 0.0),
        (float(mix0[0, 1]), float(mix1[0, 1])) if level >= 1 else (0.0, 0.0),
    )
    return CountTvResult(
        exact_tv=d * per_coord_tv,
        paper_bound=T**2 * eps**2 / (2 * d),
        rate=rate,
        truncation_level=level,
        residual=residual,
        moment_rows=rows,
        moments_match_exactly=(heavy_weight * heavy_bias == null_bias),
    )


# ---------------------------------------------------------------------------
# bundled check suite (used by the CLI verify command)

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    slack: float
    detail: str


def default_check_suite(null_bias: Fraction = NULL_BIAS, seed: int = 20260809) -> list:
    """Deterministic identity and bound checks with measured slack."""
    from .erm import erm, exhaustive_min_error
    from .core import empirical_error
    from .instances import random_structured_case, random_tiny_instance

    checks = []

    defect = max(
        OverlapDistribution.for_subset_size(d).normalization_defect()
        for d in (1, 2, 3, 5, 8, 16, 32, 64)
    )
    checks.append(
        CheckResult(
            "hypergeometric-normalization",
            defect <= 1e-12,
            defect,
            "max |sum pmf - 1| over d <= 64",
        )
    )

    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(200):
        inst = random_tiny_instance(rng)
        for dist in inst.distributions:
            dev = max(dev, identity_deviation_all_hypotheses(dist))
    checks.append(
        CheckResult(
            "excess-error-identity",
            dev < 1e-12,
            dev,
            "max |excess - (err - err*)| over all hypotheses, 200 random instances",
        )
    )

    rng = np.random.default_rng(seed + 1)
    mismatches = 0
    for _ in range(200):
        hclass, sample = random_structured_case(rng)
        if empirical_error(erm(hclass, sample), sample) != exhaustive_min_error(hclass, sample):
            mismatches += 1
    checks.append(
        CheckResult(
            "structured-erm-exactness",
            mismatches == 0,
            float(mismatches),
            "structured ERM vs exhaustive minimum, 200 random cases",
        )
    )

    worst = -math.inf
    floor_worst = -math.inf
    for d in (1, 2):
        for gamma in (0.1, 0.2, 0.3):
            for T in range(6):
                bound = ingster_chi2(d, gamma, T).tv_upper_bound
                tv = exact_tv_sequences(d, gamma, T)
                worst = max(worst, tv - bound)
                if bound < 0.5:
                    floor_worst = max(floor_worst, tv)
    checks.append(
        CheckResult(
            "ingster-sandwich",
            worst <= 1e-9,
            worst,
            "max (exact TV - chi-square bound) over the tiny grid",
        )
    )
    checks.append(
        CheckResult(
            "indistinguishability-floor",
            floor_worst < 0.5,
            floor_worst,
            "max exact TV where the chi-square bound is below 1/2",
        )
    )

    worst = -math.inf
    rows_dev = 0.0
    exact_ok = True
    for d, eps, T in ((2, 0.1, 10), (2, 0.2, 5), (5, 0.1, 20), (10, 0.25, 8)):
        res = poisson_count_tv(d, eps, T, null_bias=null_bias)
        worst = max(worst, res.exact_tv - res.paper_bound)
        rows_dev = max(rows_dev, max(abs(a - b) for a, b in res.moment_rows))
        exact_ok = exact_ok and res.moments_match_exactly
    checks.append(
        CheckResult(
            "count-tv-bound",
            worst <= 0.0,
            worst,
            "max (exact count TV - T^2 eps^2 / 2d) over the rate grid",
        )
    )
    checks.append(
        CheckResult(
            "moment-match",
            exact_ok and rows_dev <= 1e-15,
            rows_dev,
            "low-count mixture rows across priors (and exact first moments)",
        )
    )
    return checks
