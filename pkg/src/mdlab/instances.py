"""Generators for the hard-instance families plus generic random instances.

All generators are pure functions of their spec (and seed, where drawing is
involved); biases that the constructions pin to decimals are stored as exact
rationals (0.465 = 93/200, 0.49 = 49/100, ...) so that threshold comparisons
and serialization round-trips stay exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
import yaml

from .core import (
    AnyBlockSubsets,
    Benchmark,
    Domain,
    ExplicitClass,
    FixedSizeBlockSubsets,
    Hypothesis,
    HypothesisClass,
    LabeledSample,
    MdlInstance,
    NoisyDistribution,
    RationalLike,
    as_fraction,
    fraction_str,
)

QUARTER = Fraction(1, 4)
THREE_QUARTERS = Fraction(3, 4)
NULL_BIAS = Fraction(93, 200)
MASS_NOISE_BOUND = Fraction(49, 100)
HEAVY_WEIGHT = Fraction(31, 50)
EXPLICIT_MEMBER_CAP = 10**4

RngLike = Union[int, np.random.Generator]


def _as_rng(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(int(rng))


# ---------------------------------------------------------------------------
# fixed-noise single-distribution family (anchor point + d^2 light points)

@dataclass(frozen=True)
class ShtBaseSpec:
    """Single distribution on {0..d^2} with exact noise 1/4.

    ``planted`` is None for the null (Bayes classifier is the zero function)
    or a size-d subset of {1..d^2} carrying the flipped labels.
    """

    d: int
    gamma: Fraction
    planted: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 < self.gamma or self.d * self.gamma > 1:
            raise ValueError(
                f"need 0 < gamma and d*gamma <= 1, got d={self.d}, gamma={float(self.gamma)}"
            )
        if self.planted is not None:
            pts = tuple(sorted(int(x) for x in self.planted))
            if len(pts) != self.d or len(set(pts)) != self.d:
                raise ValueError(f"planted subset must have exactly d={self.d} distinct points")
            if pts[0] < 1 or pts[-1] > self.d * self.d:
                raise ValueError("planted subset must lie in {1..d^2}")
            object.__setattr__(self, "planted", pts)


def quarter_noise_bias(fstar: Hypothesis) -> tuple:
    """Exact-RCN-1/4 bias vector for a Bayes classifier: 3/4 on its 1-points."""
    return tuple(THREE_QUARTERS if fstar(x) else QUARTER for x in range(fstar.domain_size))


def subset_class(domain_size: int, points: Sequence[int], d: int) -> HypothesisClass:
    """Zero function plus all size-d subset indicators of ``points``.

    Explicit when small enough to enumerate comfortably, structured otherwise.
    """
    points = tuple(points)
    if math.comb(len(points), d) <= EXPLICIT_MEMBER_CAP:
        members = [Hypothesis.zero(domain_size)]
        members.extend(
            Hypothesis(domain_size, subset) for subset in itertools.combinations(points, d)
        )
        return ExplicitClass(tuple(members), vc_dim=d)
    return FixedSizeBlockSubsets(domain_size, (points,), d)


def make_sht_base(spec: ShtBaseSpec):
    """Build (class, distribution, bayes) for the anchor-plus-grid testing family."""
    n = spec.d * spec.d + 1
    marginal = [1 - spec.d * spec.gamma] + [spec.gamma / spec.d] * (spec.d * spec.d)
    fstar = Hypothesis(n, spec.planted or ())
    dist = NoisyDistribution(marginal, quarter_noise_bias(fstar), QUARTER)
    hclass = subset_class(n, range(1, n), spec.d)
    return hclass, dist, fstar


def sht_base_instance(spec: ShtBaseSpec) -> MdlInstance:
    hclass, dist, fstar = make_sht_base(spec)
    return MdlInstance(Domain(dist.size), hclass, (dist,), fstar, Benchmark.RCN)


# ---------------------------------------------------------------------------
# k-block extension with one planted block

@dataclass(frozen=True)
class MshtBlockSpec:
    """k disjoint blocks of size d^2+1; each distribution lives on its own block.

    ``planted`` is None or (block index, size-d subset of that block's
    non-anchor points, given in block-local coordinates 1..d^2).
    """

    k: int
    d: int
    eps: Fraction
    planted: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be >= 1")
        if 2 * self.d * self.eps > 1:
            raise ValueError(f"need 2*d*eps <= 1, got {float(2 * self.d * self.eps)}")
        if self.d < 8 * self.eps:
            raise ValueError(f"need d >= 8*eps, got d={self.d}, eps={float(self.eps)}")
        if self.planted is not None:
            block, local = self.planted
            block = int(block)
            if not 0 <= block < self.k:
                raise ValueError(f"planted block {block} out of range [0, {self.k})")
            pts = tuple(sorted(int(x) for x in local))
            if len(pts) != self.d or len(set(pts)) != self.d:
                raise ValueError(f"planted subset must have exactly d={self.d} distinct points")
            if pts[0] < 1 or pts[-1] > self.d * self.d:
                raise ValueError("planted subset must lie in the block's 1..d^2 coordinates")
            object.__setattr__(self, "planted", (block, pts))

    def anchor(self, i: int) -> int:
        return i * (self.d * self.d + 1)

    def block_points(self, i: int) -> tuple:
        a = self.anchor(i)
        return tuple(range(a + 1, a + self.d * self.d + 1))


def make_msht_blocks(spec: MshtBlockSpec):
    """Build (class, k distributions, bayes) for the planted-block testing family."""
    d, k = spec.d, spec.k
    n = k * (d * d + 1)
    blocks = tuple(spec.block_points(i) for i in range(k))
    hclass = FixedSizeBlockSubsets(n, blocks, d)
    if spec.planted is None:
        fstar = Hypothesis.zero(n)
    else:
        block, local = spec.planted
        fstar = Hypothesis(n, tuple(spec.anchor(block) + x for x in local))
    bias = quarter_noise_bias(fstar)
    dists = []
    for i in range(k):
        marginal = [Fraction(0)] * n
        marginal[spec.anchor(i)] = 1 - 2 * d * spec.eps
        for x in blocks[i]:
            marginal[x] = 2 * spec.eps / d
        dists.append(NoisyDistribution(marginal, bias, QUARTER))
    return hclass, tuple(dists), fstar


def msht_blocks_instance(spec: MshtBlockSpec) -> MdlInstance:
    hclass, dists, fstar = make_msht_blocks(spec)
    return MdlInstance(Domain(dists[0].size), hclass, dists, fstar, Benchmark.RCN)


# ---------------------------------------------------------------------------
# moment-matched Massart bias family

@dataclass(frozen=True)
class MassBiasSpec:
    """Anchor plus d light points with unknown biases from the matched priors.

    Null: every bias is 0.465. Alternative: non-anchor biases drawn iid from
    the prior putting weight 0.62 on 0.75 and 0.38 on 0, rejection-resampled
    until the zero function's suboptimality gap reaches 0.3 eps.
    """

    d: int
    eps: Fraction
    null: bool = True

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {float(self.eps)}")


def mass_gap(bias: Sequence[Fraction], marginal_weight: Fraction) -> Fraction:
    """Zero-function excess induced by a bias vector: weight * sum_{q>=1/2} (2q-1)."""
    return marginal_weight * sum(
        (2 * q - 1 for q in bias if q >= Fraction(1, 2)), Fraction(0)
    )


def draw_mass_bias(d: int, rng: np.random.Generator) -> tuple:
    """One iid draw of the d non-anchor biases from the alternative prior."""
    heavy = rng.random(d) < float(HEAVY_WEIGHT)
    return tuple(THREE_QUARTERS if h else Fraction(0) for h in heavy)


def sample_mass_gaps(d: int, eps: RationalLike, n: int, rng: RngLike) -> np.ndarray:
    """n iid pre-rejection gap draws (as floats), for distributional statistics."""
    rng = _as_rng(rng)
    eps_f = float(as_fraction(eps))
    heavy_counts = rng.binomial(d, float(HEAVY_WEIGHT), size=n)
    return heavy_counts * (eps_f / (2 * d))


@dataclass(frozen=True)
class MassDraw:
    distribution: NoisyDistribution
    bias: tuple
    gap: Fraction
    attempts: int


def make_sht_mass(spec: MassBiasSpec, rng: RngLike = 0) -> MassDraw:
    """Build the single-block Massart testing distribution.

    Alternative draws are rejection-resampled so every emitted instance has
    gap >= 0.3 eps; the attempt count is returned so acceptance rates can be
    reported.
    """
    rng = _as_rng(rng)
    marginal = [1 - spec.eps] + [spec.eps / spec.d] * spec.d
    threshold = 3 * spec.eps / 10
    weight = spec.eps / spec.d
    if spec.null:
        bias = (NULL_BIAS,) * (spec.d + 1)
        dist = NoisyDistribution(marginal, bias, MASS_NOISE_BOUND)
        return MassDraw(dist, bias, Fraction(0), attempts=0)
    attempts = 0
    while True:
        attempts += 1
        tail = draw_mass_bias(spec.d, rng)
        gap = mass_gap(tail, weight)
        if gap >= threshold:
            bias = (NULL_BIAS,) + tail
            dist = NoisyDistribution(marginal, bias, MASS_NOISE_BOUND)
            return MassDraw(dist, bias, gap, attempts=attempts)
        if attempts > 10000:
            raise RuntimeError("rejection sampling failed to hit the gap threshold")


# ---------------------------------------------------------------------------
# k-block Massart instance

@dataclass(frozen=True)
class MdlMassSpec:
    """k blocks of size d+1; per-block bias vectors for the d non-anchor points.

    ``block_biases[i]`` is None for an all-0.465 block or a length-d tuple of
    biases in [0, 0.49] or [0.51, 1]. Heavy points (bias > 1/2) must stay
    within a single block so the implied Bayes classifier is a class member.
    """

    k: int
    d: int
    eps: Fraction
    block_biases: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {float(self.eps)}")
        biases = tuple(self.block_biases) or (None,) * self.k
        if len(biases) != self.k:
            raise ValueError(f"expected {self.k} per-block bias entries")
        norm = []
        lo, hi = Fraction(49, 100), Fraction(51, 100)
        for i, entry in enumerate(biases):
            if entry is None:
                norm.append(None)
                continue
            vec = tuple(as_fraction(q) for q in entry)
            if len(vec) != self.d:
                raise ValueError(f"block {i} bias vector must have length d={self.d}")
            for q in vec:
                if not (0 <= q <= lo or hi <= q <= 1):
                    raise ValueError(
                        f"block {i} bias {float(q)} outside [0,0.49] u [0.51,1]"
                    )
            norm.append(vec)
        object.__setattr__(self, "block_biases", tuple(norm))

    def anchor(self, i: int) -> int:
        return i * (self.d + 1)

    def block_points(self, i: int) -> tuple:
        a = self.anchor(i)
        return tuple(range(a + 1, a + self.d + 1))


def make_mdl_mass(spec: MdlMassSpec) -> MdlInstance:
    """Assemble the k-block Massart instance (noise bounds 0.49 everywhere)."""
    k, d = spec.k, spec.d
    n = k * (d + 1)
    blocks = tuple(spec.block_points(i) for i in range(k))
    hclass = AnyBlockSubsets(n, blocks)
    bias = [NULL_BIAS] * n
    for i, entry in enumerate(spec.block_biases):
        if entry is None:
            continue
        for x, q in zip(blocks[i], entry):
            bias[x] = q
    heavy = [x for x, q in enumerate(bias) if q > Fraction(1, 2)]
    heavy_blocks = {i for i in range(k) if set(heavy) & set(blocks[i])}
    if len(heavy_blocks) > 1:
        raise ValueError(
            "heavy biases span multiple blocks; no class member matches the Bayes classifier"
        )
    fstar = Hypothesis(n, heavy)
    dists = []
    for i in range(k):
        marginal = [Fraction(0)] * n
        marginal[spec.anchor(i)] = 1 - spec.eps
        for x in blocks[i]:
            marginal[x] = spec.eps / d
        dists.append(NoisyDistribution(marginal, bias, MASS_NOISE_BOUND))
    return MdlInstance(Domain(n), hclass, tuple(dists), fstar, Benchmark.MASSART)


def mdl_mass_instance(
    k: int,
    d: int,
    eps: RationalLike,
    planted_block: Optional[int] = None,
    rng: RngLike = 0,
) -> tuple:
    """Null environment or a single planted block drawn from the matched prior.

    Returns (instance, per-block gaps).
    """
    eps = as_fraction(eps)
    biases: list = [None] * k
    if planted_block is not None:
        draw = make_sht_mass(MassBiasSpec(d=d, eps=eps, null=False), rng)
        biases[planted_block] = draw.bias[1:]
    spec = MdlMassSpec(k=k, d=d, eps=eps, block_biases=tuple(biases))
    inst = make_mdl_mass(spec)
    weight = eps / d
    gaps = tuple(
        mass_gap([inst.distributions[i].bias[x] for x in spec.block_points(i)], weight)
        for i in range(k)
    )
    return inst, gaps


# ---------------------------------------------------------------------------
# generic instances

def make_generic(
    hclass: HypothesisClass,
    bias_vectors: Sequence[Sequence[RationalLike]],
    noise_bounds: Sequence[RationalLike],
    benchmark: Benchmark,
    marginals: Optional[Sequence[Sequence[RationalLike]]] = None,
) -> MdlInstance:
    """Validated instance from user-supplied bias vectors (uniform marginal default)."""
    n = hclass.domain_size
    k = len(bias_vectors)
    if k < 1:
        raise ValueError("need at least one bias vector")
    if len(noise_bounds) != k:
        raise ValueError(f"expected {k} noise bounds, got {len(noise_bounds)}")
    if marginals is None:
        marginals = [[Fraction(1, n)] * n] * k
    if len(marginals) != k:
        raise ValueError(f"expected {k} marginals, got {len(marginals)}")
    dists = tuple(
        NoisyDistribution(m, q, eta)
        for m, q, eta in zip(marginals, bias_vectors, noise_bounds)
    )
    bits = [None] * n
    for i, dist in enumerate(dists):
        for x in dist.support():
            b = dist.bayes(x)
            if bits[x] is None:
                bits[x] = b
            elif bits[x] != b:
                raise ValueError(
                    f"distributions disagree on the Bayes label at x={x}; no shared classifier"
                )
    fstar = Hypothesis(n, [x for x, b in enumerate(bits) if b == 1])
    return MdlInstance(Domain(n), hclass, dists, fstar, benchmark)


def random_tiny_instance(rng: RngLike, max_domain: int = 8, max_k: int = 4) -> MdlInstance:
    """Small random Massart instance for identity and property checks."""
    rng = _as_rng(rng)
    n = int(rng.integers(1, max_domain + 1))
    k = int(rng.integers(1, max_k + 1))
    eta = as_fraction(float(rng.uniform(0.05, 0.45)))
    fstar = Hypothesis(n, np.flatnonzero(rng.integers(0, 2, size=n)).tolist())
    dists = []
    for _ in range(k):
        weights = [as_fraction(float(w)) for w in rng.uniform(0.05, 1.0, size=n)]
        total = sum(weights)
        marginal = [w / total for w in weights]
        noise = [as_fraction(float(v)) for v in rng.uniform(0.0, float(eta), size=n)]
        bias = [nx if fstar(x) == 0 else 1 - nx for x, nx in enumerate(noise)]
        dists.append(NoisyDistribution(marginal, bias, eta))
    members = {fstar, Hypothesis.zero(n)}
    while len(members) < min(2**n, 6):
        members.add(Hypothesis(n, np.flatnonzero(rng.integers(0, 2, size=n)).tolist()))
    ordered = sorted(members, key=lambda h: h.ones)
    vc_dim = max(1, int(math.floor(math.log2(len(ordered)))))
    hclass = ExplicitClass(tuple(ordered), vc_dim=vc_dim)
    return MdlInstance(Domain(n), hclass, tuple(dists), fstar, Benchmark.MASSART)


def random_structured_case(rng: RngLike, max_block: int = 4, max_samples: int = 12):
    """Random structured class plus sample, small enough for exhaustive checking."""
    rng = _as_rng(rng)
    n_blocks = int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, max_block + 1)) for _ in range(n_blocks)]
    pool = list(range(sum(sizes) + int(rng.integers(0, 3))))
    rng.shuffle(pool)
    blocks = []
    at = 0
    for s in sizes:
        blocks.append(tuple(sorted(pool[at : at + s])))
        at += s
    domain = len(pool)
    if bool(rng.integers(0, 2)):
        d = int(rng.integers(1, min(2, min(sizes)) + 1))
        hclass: HypothesisClass = FixedSizeBlockSubsets(domain, tuple(blocks), d)
    else:
        hclass = AnyBlockSubsets(domain, tuple(blocks))
    m = int(rng.integers(1, max_samples + 1))
    xs = rng.integers(0, domain, size=m)
    ys = rng.integers(0, 2, size=m)
    return hclass, LabeledSample(xs, ys)


# ---------------------------------------------------------------------------
# serialization (bit-exact round trip; rationals as "num/den")

_CLASS_KINDS = {"explicit", "fixed-size-block-subsets", "any-block-subsets"}


def class_to_dict(hclass: HypothesisClass) -> dict:
    if isinstance(hclass, ExplicitClass):
        return {
            "kind": "explicit",
            "domain": hclass.domain_size,
            "vc_dim": hclass.vc_dim,
            "members": [list(h.ones) for h in hclass.members],
        }
    if isinstance(hclass, FixedSizeBlockSubsets):
        return {
            "kind": "fixed-size-block-subsets",
            "domain": hclass.domain_size,
            "blocks": [list(b) for b in hclass.blocks],
            "subset_size": hclass.subset_size,
        }
    if isinstance(hclass, AnyBlockSubsets):
        return {
            "kind": "any-block-subsets",
            "domain": hclass.domain_size,
            "blocks": [list(b) for b in hclass.blocks],
        }
    raise TypeError(f"unsupported class {type(hclass).__name__}")


def class_from_dict(data: dict) -> HypothesisClass:
    kind = data.get("kind")
    if kind not in _CLASS_KINDS:
        raise ValueError(f"unknown class kind {kind!r}")
    n = int(data["domain"])
    if kind == "explicit":
        members = tuple(Hypothesis(n, ones) for ones in data["members"])
        return ExplicitClass(members, vc_dim=int(data["vc_dim"]))
    blocks = tuple(tuple(int(x) for x in b) for b in data["blocks"])
    if kind == "fixed-size-block-subsets":
        return FixedSizeBlockSubsets(n, blocks, int(data["subset_size"]))
    return AnyBlockSubsets(n, blocks)


def instance_to_dict(inst: MdlInstance) -> dict:
    return {
        "format": "mdlab-instance-v1",
        "domain": inst.domain.size,
        "benchmark": inst.benchmark.value,
        "class": class_to_dict(inst.hclass),
        "bayes": list(inst.bayes.ones),
        "distributions": [
            {
                "noise_bound": fraction_str(d.noise_bound),
                "marginal": [fraction_str(p) for p in d.marginal],
                "bias": [fraction_str(q) for q in d.bias],
            }
            for d in inst.distributions
        ],
    }


def instance_from_dict(data: dict) -> MdlInstance:
    if data.get("format") != "mdlab-instance-v1":
        raise ValueError(f"unrecognized instance format {data.get('format')!r}")
    hclass = class_from_dict(data["class"])
    n = int(data["domain"])
    bayes = Hypothesis(n, data["bayes"])
    dists = tuple(
        NoisyDistribution(
            [as_fraction(p) for p in entry["marginal"]],
            [as_fraction(q) for q in entry["bias"]],
            as_fraction(entry["noise_bound"]),
        )
        for entry in data["distributions"]
    )
    return MdlInstance(Domain(n), hclass, dists, bayes, Benchmark(data["benchmark"]))


def save_instance(inst: MdlInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(instance_to_dict(inst), fh, sort_keys=False)


def load_instance(path) -> MdlInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(yaml.safe_load(fh))
