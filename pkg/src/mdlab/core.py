"""Domain, hypothesis, distribution, and sampling primitives.

Conventions used throughout the package:

* domain points are the dense integers ``0 .. size-1`` and labels are bits;
* empirical quantities are exact rationals (`fractions.Fraction`) so that
  tester accept/reject thresholds never flip on floating-point ties;
* population quantities are binary64, computed from exact rational inputs;
* distributions store their marginal and per-point label bias as exact
  rationals (floats are converted to their exact binary64 value).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels

RationalLike = Union[Fraction, int, float, str]

HALF = Fraction(1, 2)
PMF_SUM_TOL = Fraction(1, 10**12)


def as_fraction(value: RationalLike) -> Fraction:
    """Exact rational conversion; floats map to their binary64 value, strings parse as 'num/den'."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Domain:
    """Finite covariate space: points are 0 .. size-1."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"domain size must be >= 1, got {self.size}")

    def points(self) -> range:
        return range(self.size)


class Hypothesis:
    """Binary classifier on a finite domain, canonicalized as its set of 1-points.

    Constructed either from a subset of points mapped to 1 (all others 0) or
    from a dense bit vector; both normalize to the same representation, so
    equality and hashing are well defined.
    """

    __slots__ = ("domain_size", "ones", "bits")

    def __init__(self, domain_size: int, ones: Iterable[int] = ()):
        pts = tuple(sorted(int(x) for x in ones))
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError(f"duplicate point {a} in subset indicator")
        if pts and (pts[0] < 0 or pts[-1] >= domain_size):
            raise ValueError(f"subset points {pts} outside domain of size {domain_size}")
        if domain_size < 1:
            raise ValueError("domain size must be >= 1")
        bits = np.zeros(domain_size, dtype=np.uint8)
        if pts:
            bits[list(pts)] = 1
        bits.setflags(write=False)
        object.__setattr__(self, "domain_size", domain_size)
        object.__setattr__(self, "ones", pts)
        object.__setattr__(self, "bits", bits)

    def __setattr__(self, name, value):
        raise AttributeError("Hypothesis is immutable")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Hypothesis":
        arr = np.asarray(bits)
        if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
            raise ValueError("bit vector must be one-dimensional over {0,1}")
        return cls(len(arr), np.flatnonzero(arr).tolist())

    @classmethod
    def zero(cls, domain_size: int) -> "Hypothesis":
        return cls(domain_size, ())

    def __call__(self, x: int) -> int:
        return int(self.bits[x])

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        return self.bits[xs]

    def __eq__(self, other):
        return (
            isinstance(other, Hypothesis)
            and self.domain_size == other.domain_size
            and self.ones == other.ones
        )

    def __hash__(self):
        return hash((self.domain_size, self.ones))

    def __repr__(self):
        return f"Hypothesis(n={self.domain_size}, ones={list(self.ones)})"


class LabeledSample:
    """A batch of labeled examples held as parallel numpy arrays."""

    __slots__ = ("xs", "ys")

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int8)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise ValueError("xs and ys must be parallel one-dimensional arrays")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledSample is immutable")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "LabeledSample":
        pairs = list(pairs)
        xs = np.array([p[0] for p in pairs], dtype=np.int64)
        ys = np.array([p[1] for p in pairs], dtype=np.int8)
        return cls(xs, ys)

    @classmethod
    def empty(cls) -> "LabeledSample":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8))

    @classmethod
    def concat(cls, samples: Iterable["LabeledSample"]) -> "LabeledSample":
        samples = list(samples)
        if not samples:
            return cls.empty()
        return cls(
            np.concatenate([s.xs for s in samples]),
            np.concatenate([s.ys for s in samples]),
        )

    def __add__(self, other: "LabeledSample") -> "LabeledSample":
        return LabeledSample.concat((self, other))

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    def pairs(self) -> list:
        return [(int(x), int(y)) for x, y in zip(self.xs, self.ys)]


def empirical_error(f: Hypothesis, sample: LabeledSample) -> Fraction:
    """Exact fraction of examples misclassified by ``f``."""
    n = len(sample)
    if n == 0:
        raise ValueError("empirical error of an empty sample is undefined")
    miss = _kernels.mismatch_count(f.bits, sample.xs, sample.ys)
    return Fraction(miss, n)


def _validate_blocks(domain_size: int, blocks) -> tuple:
    norm = []
    seen = set()
    for b, block in enumerate(blocks):
        pts = tuple(sorted(int(x) for x in block))
        if not pts:
            raise ValueError(f"block {b} is empty")
        if len(set(pts)) != len(pts):
            raise ValueError(f"block {b} has duplicate points")
        if pts[0] < 0 or pts[-1] >= domain_size:
            raise ValueError(f"block {b} has points outside the domain")
        if seen & set(pts):
            raise ValueError(f"block {b} overlaps an earlier block")
        seen.update(pts)
        norm.append(pts)
    if not norm:
        raise ValueError("at least one block is required")
    return tuple(norm)


@dataclass(frozen=True)
class ExplicitClass:
    """Hypothesis class given by explicit enumeration."""

    members: tuple
    vc_dim: int

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("explicit class must be non-empty")
        if len(set(members)) != len(members):
            raise ValueError("explicit class contains duplicate hypotheses")
        sizes = {h.domain_size for h in members}
        if len(sizes) != 1:
            raise ValueError("explicit class members disagree on domain size")
        if self.vc_dim < 1:
            raise ValueError("vc_dim must be >= 1")

    @property
    def domain_size(self) -> int:
        return self.members[0].domain_size

    def contains(self, h: Hypothesis) -> bool:
        return h in set(self.members)

    def member_count(self) -> int:
        return len(self.members)

    def enumerate_members(self):
        return iter(self.members)

    @property
    def bits_matrix(self) -> np.ndarray:
        cached = self.__dict__.get("_bits_matrix")
        if cached is None:
            cached = np.stack([h.bits for h in self.members]).astype(np.int64)
            cached.setflags(write=False)
            self.__dict__["_bits_matrix"] = cached
        return cached


@dataclass(frozen=True)
class FixedSizeBlockSubsets:
    """The zero function plus all fixed-size subset indicators inside a single block.

    VC dimension equals the subset size.
    """

    domain_size: int
    blocks: tuple
    subset_size: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", _validate_blocks(self.domain_size, self.blocks))
        if self.subset_size < 1:
            raise ValueError("subset size must be >= 1")
        for b, block in enumerate(self.blocks):
            if len(block) < self.subset_size:
                raise ValueError(
                    f"block {b} has {len(block)} points, fewer than subset size {self.subset_size}"
                )

    @property
    def vc_dim(self) -> int:
        return self.subset_size

    def contains(self, h: Hypothesis) -> bool:
        if h.domain_size != self.domain_size:
            return False
        if not h.ones:
            return True
        if len(h.ones) != self.subset_size:
            return False
        ones = set(h.ones)
        return any(ones <= set(block) for block in self.blocks)

    def member_count(self) -> int:
        return 1 + sum(math.comb(len(b), self.subset_size) for b in self.blocks)

    def enumerate_members(self):
        yield Hypothesis.zero(self.domain_size)
        for block in self.blocks:
            for subset in itertools.combinations(block, self.subset_size):
                yield Hypothesis(self.domain_size, subset)


@dataclass(frozen=True)
class AnyBlockSubsets:
    """The zero function plus all subset indicators confined to a single block.

    VC dimension equals the largest block size.
    """

    domain_size: int
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", _validate_blocks(self.domain_size, self.blocks))

    @property
    def vc_dim(self) -> int:
        return max(len(b) for b in self.blocks)

    def contains(self, h: Hypothesis) -> bool:
        if h.domain_size != self.domain_size:
            return False
        if not h.ones:
            return True
        ones = set(h.ones)
        return any(ones <= set(block) for block in self.blocks)

    def member_count(self) -> int:
        return 1 + sum(2 ** len(b) - 1 for b in self.blocks)

    def enumerate_members(self):
        yield Hypothesis.zero(self.domain_size)
        for block in self.blocks:
            for r in range(1, len(block) + 1):
                for subset in itertools.combinations(block, r):
                    yield Hypothesis(self.domain_size, subset)


HypothesisClass = Union[ExplicitClass, FixedSizeBlockSubsets, AnyBlockSubsets]


class NoisyDistribution:
    """Finite-support labeled distribution: X ~ marginal, Y | X=x ~ Bernoulli(bias[x]).

    The construction enforces the bounded-noise condition
    ``min(q_x, 1 - q_x) <= noise_bound < 1/2`` on every positive-mass point,
    which makes the implied Bayes classifier (1 iff q_x > 1/2), the pointwise
    noise ``min(q_x, 1-q_x)``, and the Bayes error all well defined.
    """

    __slots__ = (
        "marginal",
        "bias",
        "noise_bound",
        "bayes",
        "pointwise_noise",
        "bayes_error",
        "_marginal_f",
        "_bias_f",
        "_cum",
    )

    def __init__(
        self,
        marginal: Sequence[RationalLike],
        bias: Sequence[RationalLike],
        noise_bound: RationalLike,
    ):
        p = tuple(as_fraction(v) for v in marginal)
        q = tuple(as_fraction(v) for v in bias)
        eta = as_fraction(noise_bound)
        if len(p) != len(q) or not p:
            raise ValueError("marginal and bias must be non-empty and of equal length")
        if not (0 <= eta < HALF):
            raise ValueError(f"noise bound must lie in [0, 1/2), got {float(eta)}")
        if any(v < 0 for v in p):
            raise ValueError("marginal has a negative entry")
        total = sum(p)
        if abs(total - 1) > PMF_SUM_TOL:
            raise ValueError(f"marginal sums to {float(total)}, not 1")
        for x, (px, qx) in enumerate(zip(p, q)):
            if not (0 <= qx <= 1):
                raise ValueError(f"bias q[{x}]={float(qx)} outside [0,1]")
            if px > 0 and min(qx, 1 - qx) > eta:
                raise ValueError(
                    f"bias q[{x}]={float(qx)} violates the noise bound {float(eta)}"
                )
        object.__setattr__(self, "marginal", p)
        object.__setattr__(self, "bias", q)
        object.__setattr__(self, "noise_bound", eta)
        object.__setattr__(
            self, "bayes", Hypothesis(len(p), [x for x, qx in enumerate(q) if qx > HALF])
        )
        noise = tuple(min(qx, 1 - qx) for qx in q)
        object.__setattr__(self, "pointwise_noise", noise)
        object.__setattr__(
            self, "bayes_error", sum((px * nx for px, nx in zip(p, noise)), Fraction(0))
        )
        pf = np.array([float(v) for v in p])
        qf = np.array([float(v) for v in q])
        cum = np.cumsum(pf)
        for arr in (pf, qf, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "_marginal_f", pf)
        object.__setattr__(self, "_bias_f", qf)
        object.__setattr__(self, "_cum", cum)

    def __setattr__(self, name, value):
        raise AttributeError("NoisyDistribution is immutable")

    @property
    def size(self) -> int:
        return len(self.marginal)

    def support(self) -> tuple:
        return tuple(x for x, px in enumerate(self.marginal) if px > 0)

    def marginal_floats(self) -> np.ndarray:
        return self._marginal_f

    def bias_floats(self) -> np.ndarray:
        return self._bias_f

    def __repr__(self):
        return (
            f"NoisyDistribution(size={self.size}, eta={float(self.noise_bound):.4g}, "
            f"bayes_error={float(self.bayes_error):.4g})"
        )


class Benchmark(enum.Enum):
    """Which target each per-distribution output must epsilon-approach."""

    RCN = "rcn"
    MINIMAX = "minimax"
    MASSART = "massart"


class MdlInstance:
    """k noisy distributions sharing one Bayes classifier drawn from a known class."""

    __slots__ = ("domain", "hclass", "distributions", "bayes", "benchmark")

    def __init__(
        self,
        domain: Domain,
        hclass,
        distributions: Sequence[NoisyDistribution],
        bayes: Hypothesis,
        benchmark: Benchmark,
    ):
        dists = tuple(distributions)
        if not dists:
            raise ValueError("instance needs at least one distribution")
        if bayes.domain_size != domain.size:
            raise ValueError("shared Bayes classifier domain mismatch")
        if hclass.domain_size != domain.size:
            raise ValueError("hypothesis class domain mismatch")
        if not hclass.contains(bayes):
            raise ValueError("shared Bayes classifier is not a member of the class")
        for i, dist in enumerate(dists):
            if dist.size != domain.size:
                raise ValueError(f"distribution {i} domain mismatch")
            for x in dist.support():
                if dist.bayes(x) != bayes(x):
                    raise ValueError(
                        f"distribution {i} implies f*({x})={dist.bayes(x)}, "
                        f"conflicting with the shared Bayes classifier"
                    )
            if benchmark is Benchmark.RCN:
                for x in dist.support():
                    if dist.pointwise_noise[x] != dist.noise_bound:
                        raise ValueError(
                            f"benchmark RCN requires exact noise {float(dist.noise_bound)} "
                            f"everywhere; distribution {i} has "
                            f"{float(dist.pointwise_noise[x])} at x={x}"
                        )
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "hclass", hclass)
        object.__setattr__(self, "distributions", dists)
        object.__setattr__(self, "bayes", bayes)
        object.__setattr__(self, "benchmark", benchmark)

    def __setattr__(self, name, value):
        raise AttributeError("MdlInstance is immutable")

    @property
    def k(self) -> int:
        return len(self.distributions)

    @property
    def noise_bounds(self) -> tuple:
        return tuple(d.noise_bound for d in self.distributions)

    @property
    def eta(self) -> Fraction:
        """Largest declared noise bound, max_i eta_i."""
        return max(self.noise_bounds)

    @property
    def bayes_errors(self) -> tuple:
        return tuple(d.bayes_error for d in self.distributions)

    @property
    def eta_star(self) -> Fraction:
        """Minimax benchmark level, max_i of the true Bayes errors."""
        return max(self.bayes_errors)

    @property
    def vc_dim(self) -> int:
        return self.hclass.vc_dim

    def __repr__(self):
        return (
            f"MdlInstance(k={self.k}, domain={self.domain.size}, "
            f"d={self.vc_dim}, benchmark={self.benchmark.value})"
        )


class BudgetedOracle:
    """Seeded sampler over the instance's distributions with per-distribution accounting.

    Each distribution gets its own counter-based stream keyed by
    ``(seed, trial_id, index)`` (plus one auxiliary stream for mixture index
    choices), so identical seeds and request sequences replay bit-identically
    and parallel trials are independent of scheduling. Single-owner mutable:
    one oracle per trial.
    """

    def __init__(self, source, seed: int, trial_id: int = 0):
        if isinstance(source, MdlInstance):
            dists = source.distributions
        elif isinstance(source, NoisyDistribution):
            dists = (source,)
        else:
            dists = tuple(source)
        if not dists:
            raise ValueError("oracle needs at least one distribution")
        self.distributions = dists
        self.seed = int(seed)
        self.trial_id = int(trial_id)
        self._rngs = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence((self.seed, self.trial_id, i))))
            for i in range(len(dists))
        ]
        self._aux = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((self.seed, self.trial_id, len(dists))))
        )
        self.draw_counts = np.zeros(len(dists), dtype=np.int64)

    @property
    def k(self) -> int:
        return len(self.distributions)

    @property
    def total_draws(self) -> int:
        return int(self.draw_counts.sum())

    def counts(self) -> tuple:
        return tuple(int(c) for c in self.draw_counts)

    def sample(self, i: int, count: int) -> LabeledSample:
        """Draw ``count`` iid labeled examples from distribution ``i`` (0-based)."""
        if not 0 <= i < self.k:
            raise IndexError(f"distribution index {i} out of range [0, {self.k})")
        if count < 0:
            raise ValueError("sample count must be non-negative")
        if count == 0:
            return LabeledSample.empty()
        dist = self.distributions[i]
        rng = self._rngs[i]
        u = rng.random(count)
        v = rng.random(count)
        xs, ys = _kernels.draw_pairs(dist._cum, dist._bias_f, u, v)
        self.draw_counts[i] += count
        return LabeledSample(xs, ys)

    def sample_mixture(self, indices: Sequence[int], count: int) -> LabeledSample:
        """Draw from the uniform mixture over ``indices``.

        Every draw picks an index uniformly and then samples that
        distribution, so each draw is charged to the distribution actually
        sampled (never to a virtual mixture source).
        """
        indices = list(indices)
        if not indices:
            raise ValueError("mixture over an empty index set")
        if count == 0:
            return LabeledSample.empty()
        per = self._aux.multinomial(count, [1.0 / len(indices)] * len(indices))
        parts = [self.sample(i, int(c)) for i, c in zip(indices, per) if c > 0]
        return LabeledSample.concat(parts)
