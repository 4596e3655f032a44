"""Sample-size bounds: the information-theoretic lower bound and the
sufficient sample sizes for DICE and SLICE. Natural logarithms throughout."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.special import gammaln

from .exceptions import DomainError


def log_binom(n: int, k: int) -> float:
    """``log C(n, k)`` via log-gamma; ``-inf`` when the coefficient is zero."""
    if k < 0 or n < 0:
        raise DomainError(f"binomial arguments must be nonnegative, got C({n}, {k})")
    if k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def _check(p, d, kappa, delta=None, strict_kappa=False):
    if d < 1 or p <= d:
        raise DomainError(f"need p > d >= 1, got p={p}, d={d}")
    hi_ok = kappa < 1 if strict_kappa else kappa <= 1
    if not (kappa > 0 and hi_ok):
        raise DomainError(f"kappa out of range: {kappa}")
    if delta is not None and not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def it_lower_bound(p: int, d: int, kappa: float) -> float:
    """Information-theoretic minimum number of samples for exact recovery."""
    _check(p, d, kappa, strict_kappa=True)
    if p - d < 2:
        raise DomainError(f"need p - d >= 2 for the pair count, got p={p}, d={d}")
    first = (log_binom(p - d, 2) - 1.0) / (4.0 * kappa**2)
    denom = math.log1p(d * kappa / (1.0 - kappa)) - d * kappa / (1.0 + (d - 1) * kappa)
    second = 2.0 * (log_binom(p, d) - 1.0) / denom
    return max(first, second)


def dice_sample_bound_rhs(p, d, kappa, delta) -> float:
    _check(p, d, kappa, delta)
    return 2 * d + 192.0 / kappa**2 * d * math.log(p) + 64.0 / kappa**2 * math.log(4 * d / delta)


def dice_sample_bound(p: int, d: int, kappa: float, delta: float) -> int:
    """Smallest integer strictly above the DICE sufficient sample size."""
    return math.floor(dice_sample_bound_rhs(p, d, kappa, delta)) + 1


def dice_sample_bound_simple(p, d, kappa, delta) -> float:
    """The coarser ``(320 / kappa^2)(d log p + log(1/delta))`` form."""
    _check(p, d, kappa, delta)
    return 320.0 / kappa**2 * (d * math.log(p) + math.log(1.0 / delta))


def slice_support_rhs(p, d, kappa, delta) -> float:
    _check(p, d, kappa, delta)
    log_term = math.log(4.0) + (d + 1) * math.log(p) - math.log(delta)
    return d + 32.0 / kappa**4 * log_term


def slice_threshold_rhs(p, d, kappa, delta) -> float:
    _check(p, d, kappa, delta)
    return d + 64.0 / kappa**2 * math.log(8.0 * d * p / delta)


def slice_sample_bound(p: int, d: int, kappa: float, delta: float) -> int:
    """Smallest integer satisfying both the support-containment and the
    product-and-threshold sample requirements of SLICE."""
    return max(
        math.floor(slice_support_rhs(p, d, kappa, delta)) + 1,
        math.floor(slice_threshold_rhs(p, d, kappa, delta)) + 1,
    )


def conditional_variance_sample_bound(p: int, d: int, epsilon: float, delta: float) -> int:
    """Samples after which every ``theta_hat_ii`` lies within
    ``[theta_ii / (1 + eps), theta_ii / (1 - eps)]`` with probability ``1 - delta``."""
    if d < 1 or p <= d:
        raise DomainError(f"need p > d >= 1, got p={p}, d={d}")
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise DomainError("epsilon and delta must lie in (0, 1)")
    rhs = d + 8.0 / epsilon**2 * d * math.log(p) + 8.0 / epsilon**2 * math.log(2 * d / delta)
    return math.floor(rhs) + 1


@dataclass(frozen=True)
class SamplePlan:
    p: int
    d: int
    kappa: float
    delta: float
    n_it_lower: float
    n_dice: int
    n_slice: int
    ratio_dice: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [(k, v) for k, v in self.to_dict().items()]
        width = max(len(k) for k, _ in rows)
        lines = []
        for k, v in rows:
            text = f"{v:.6g}" if isinstance(v, float) else str(v)
            lines.append(f"{k.ljust(width)}  {text.rjust(14)}")
        return "\n".join(lines)


def plan(p: int, d: int, kappa: float, delta: float) -> SamplePlan:
    n_it = it_lower_bound(p, d, kappa)
    n_dice = dice_sample_bound(p, d, kappa, delta)
    return SamplePlan(
        p=p,
        d=d,
        kappa=kappa,
        delta=delta,
        n_it_lower=n_it,
        n_dice=n_dice,
        n_slice=slice_sample_bound(p, d, kappa, delta),
        ratio_dice=n_dice / n_it,
    )
