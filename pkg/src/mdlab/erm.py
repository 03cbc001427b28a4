"""Exact empirical risk minimization and the sample-size formulas.

ERM is exact for all three class representations: explicit classes are
evaluated in full via a count-vector reduction, and the structured
single-block classes are solved combinatorially from per-point label gains.
All comparisons are on integer mismatch counts, so ties are unambiguous and
the stated tie-break order (zero function first, then blocks by index,
points by id) is deterministic.

Sample sizes use natural logarithms, are ceiled, and are floored at 1.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import _kernels
from .core import (
    AnyBlockSubsets,
    ExplicitClass,
    FixedSizeBlockSubsets,
    Hypothesis,
    HypothesisClass,
    LabeledSample,
)

DEFAULT_C_SL = 8.0


def _check_unit(name: str, value: float) -> None:
    if not 0 < value < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def _check_eta(eta: float) -> None:
    if not 0 <= eta < 0.5:
        raise ValueError(f"noise bound must lie in [0, 1/2); got {eta} (1 - 2*eta blows up)")


def sample_size_sl(d: int, eta: float, eps: float, delta: float, c_sl: float = DEFAULT_C_SL) -> int:
    """Statistical-learning sample size C * (d log(1/eps) + log(1/delta)) / (eps (1-2 eta))."""
    if d < 1:
        raise ValueError(f"VC dimension must be >= 1, got {d}")
    if c_sl <= 0:
        raise ValueError(f"learning constant must be positive, got {c_sl}")
    _check_eta(eta)
    _check_unit("epsilon", eps)
    _check_unit("delta", delta)
    value = c_sl * (d * math.log(1 / eps) + math.log(1 / delta)) / (eps * (1 - 2 * eta))
    return max(1, math.ceil(value))


def sample_size_test(nu: float, eps: float, delta: float) -> int:
    """Threshold-test sample size 16 log(2/delta) (eps + 8 nu) / eps^2."""
    if nu < 0:
        raise ValueError(f"target level must be non-negative, got {nu}")
    _check_unit("epsilon", eps)
    _check_unit("delta", delta)
    value = 16 * math.log(2 / delta) * (eps + 8 * nu) / eps**2
    return max(1, math.ceil(value))


def sample_size_agnostic(eps: float, delta: float) -> int:
    """Direct empirical-error test sample size 72 log(2/delta) / eps^2."""
    _check_unit("epsilon", eps)
    _check_unit("delta", delta)
    value = 72 * math.log(2 / delta) / eps**2
    return max(1, math.ceil(value))


def sample_size_learned(eta: float, eps: float, delta: float) -> int:
    """Reference-comparison test sample size 96 log(6/delta) / (eps (1-2 eta))."""
    _check_eta(eta)
    _check_unit("epsilon", eps)
    _check_unit("delta", delta)
    value = 96 / (eps * (1 - 2 * eta)) * math.log(6 / delta)
    return max(1, math.ceil(value))


def _erm_explicit(hclass: ExplicitClass, gains: np.ndarray, total_ones: int) -> Hypothesis:
    miss = total_ones - hclass.bits_matrix @ gains
    return hclass.members[int(np.argmin(miss))]


def _erm_fixed(hclass: FixedSizeBlockSubsets, gains: np.ndarray, total_ones: int) -> Hypothesis:
    best_miss = total_ones
    best_ones: tuple = ()
    for block in hclass.blocks:
        pts = np.asarray(block)
        order = np.argsort(-gains[pts], kind="stable")
        chosen = pts[order[: hclass.subset_size]]
        cand = total_ones - int(gains[chosen].sum())
        if cand < best_miss:
            best_miss = cand
            best_ones = tuple(int(x) for x in chosen)
    return Hypothesis(hclass.domain_size, best_ones)


def _erm_any(hclass: AnyBlockSubsets, gains: np.ndarray, total_ones: int) -> Hypothesis:
    best_miss = total_ones
    best_ones: tuple = ()
    for block in hclass.blocks:
        pts = np.asarray(block)
        chosen = pts[gains[pts] > 0]
        cand = total_ones - int(gains[chosen].sum())
        if cand < best_miss:
            best_miss = cand
            best_ones = tuple(int(x) for x in chosen)
    return Hypothesis(hclass.domain_size, best_ones)


def erm(hclass: HypothesisClass, sample: LabeledSample) -> Hypothesis:
    """A class member attaining the exact minimum empirical error on the sample."""
    if len(sample) == 0:
        raise ValueError("ERM over an empty sample is undefined")
    n = hclass.domain_size
    if int(sample.xs.min()) < 0 or int(sample.xs.max()) >= n:
        raise ValueError("sample contains points outside the class domain")
    gains, total_ones = _kernels.label_gains(n, sample.xs, sample.ys)
    if isinstance(hclass, ExplicitClass):
        return _erm_explicit(hclass, gains, total_ones)
    if isinstance(hclass, FixedSizeBlockSubsets):
        return _erm_fixed(hclass, gains, total_ones)
    if isinstance(hclass, AnyBlockSubsets):
        return _erm_any(hclass, gains, total_ones)
    raise TypeError(f"unsupported hypothesis class {type(hclass).__name__}")


def erm_min_error(hclass: HypothesisClass, sample: LabeledSample) -> Fraction:
    """Exact minimum empirical error achieved by the class on the sample."""
    from .core import empirical_error

    return empirical_error(erm(hclass, sample), sample)


def exhaustive_min_error(hclass: HypothesisClass, sample: LabeledSample) -> Fraction:
    """Independent oracle: the minimum empirical error by full class enumeration.

    Deliberately ignores the gain-based solvers; only usable when the class is
    small enough to enumerate.
    """
    from .core import empirical_error

    best = None
    for h in hclass.enumerate_members():
        err = empirical_error(h, sample)
        if best is None or err < best:
            best = err
    if best is None:
        raise ValueError("class enumerated no members")
    return best
