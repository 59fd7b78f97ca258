"""Closed-form pairwise preference loss and gradients in ratio coordinates.

The DPO objective for a single preference pair, written through the two
policy-to-reference probability ratios

    x1 = pi(y_w | x) / pi_ref(y_w | x),    x2 = pi(y_l | x) / pi_ref(y_l | x),

is ``L(x1, x2) = -log(x1**beta / (x1**beta + x2**beta))``.  This module is
the scalar core used by everything else: the loss in its ratio and sigmoid
forms, the analytic gradient, a central-difference oracle for that gradient,
the update-rate ratio x2/x1, and the dominance classification derived from
it.

All functions are pure and all values immutable, so they are safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "DOMAIN_FLOOR",
    "SINGULAR_GUARD",
    "DomainError",
    "RatioPoint",
    "LossParams",
    "GradientVec",
    "ReferencePair",
    "Dominance",
    "dpo_loss",
    "dpo_loss_sigmoid_form",
    "dpo_gradient",
    "finite_diff_gradient",
    "update_rate",
    "dominance",
]

#: Smallest accepted ratio.  The x2-gradient grows like x2**(beta - 1),
#: which diverges at zero for beta < 1, so inputs below this floor are
#: rejected everywhere rather than handled case by case.
DOMAIN_FLOOR = 1e-8

#: Gradient magnitude beyond which a result is flagged as singular
#: instead of being allowed to run toward overflow.
SINGULAR_GUARD = 1.0 / DOMAIN_FLOOR


class DomainError(ValueError):
    """An input lies outside the valid (floored, finite, positive) domain."""


def _check_ratio(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if value < DOMAIN_FLOOR:
        raise DomainError(f"{name} must be >= {DOMAIN_FLOOR}, got {value!r}")


def _check_prob(name: str, value: float) -> None:
    if not math.isfinite(value) or not 0.0 < value <= 1.0:
        raise DomainError(f"{name} must be a probability in (0, 1], got {value!r}")


@dataclass(frozen=True, slots=True)
class RatioPoint:
    """A point (x1, x2) in probability-ratio space.

    x1 is the preferred-response ratio, x2 the dispreferred one.  Both must
    be finite and at least DOMAIN_FLOOR.
    """

    x1: float
    x2: float

    def __post_init__(self) -> None:
        _check_ratio("x1", self.x1)
        _check_ratio("x2", self.x2)


@dataclass(frozen=True, slots=True)
class LossParams:
    """Temperature beta scaling the log-ratio margin (typical range 0.1-0.5)."""

    beta: float = 0.1

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or self.beta <= 0.0:
            raise DomainError(f"beta must be a positive finite real, got {self.beta!r}")


@dataclass(frozen=True, slots=True)
class GradientVec:
    """The pair (dL/dx1, dL/dx2); always negative/positive respectively.

    ``singular`` marks points where a component magnitude exceeded
    SINGULAR_GUARD (possible only near the x2 floor with beta > 1).
    """

    d_x1: float
    d_x2: float
    singular: bool = False

    @property
    def norm(self) -> float:
        return math.hypot(self.d_x1, self.d_x2)


@dataclass(frozen=True, slots=True)
class ReferencePair:
    """Reference-model probabilities for (y_w, y_l); both 1 when no reference."""

    ref_w: float = 1.0
    ref_l: float = 1.0

    def __post_init__(self) -> None:
        _check_prob("ref_w", self.ref_w)
        _check_prob("ref_l", self.ref_l)


class Dominance(Enum):
    """Which coordinate the gradient moves faster, per the x2/x1 update rate."""

    X2_DOMINANT = "X2Dominant"
    X1_DOMINANT = "X1Dominant"
    BALANCED = "Balanced"


def _softplus(u: float) -> float:
    """log(1 + e**u) with full relative precision at both tails."""
    if u > 0.0:
        return u + math.log1p(math.exp(-u))
    return math.log1p(math.exp(u))


def _sigmoid(u: float) -> float:
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _loss_kernel(x1: float, x2: float, beta: float) -> float:
    # -beta*log x1 + logsumexp(beta*log x1, beta*log x2), factored as a
    # softplus of the log-ratio gap so tiny losses keep relative precision
    # and large x**beta never overflows.
    return _softplus(beta * (math.log(x2) - math.log(x1)))


def _grad_kernel(x1: float, x2: float, beta: float) -> tuple[float, float]:
    # With w = x2**beta / (x1**beta + x2**beta) = sigma(beta*(log x2 - log x1)):
    #   dL/dx1 = -beta*w/x1,   dL/dx2 = beta*w/x2.
    # Sharing the single factor beta*w keeps |dL/dx1| / (dL/dx2) equal to
    # x2/x1 to a couple of ulps for every beta.
    t = beta * _sigmoid(beta * (math.log(x2) - math.log(x1)))
    return -t / x1, t / x2


def dpo_loss(p: RatioPoint, params: LossParams) -> float:
    """Loss -log(x1^b / (x1^b + x2^b)) at a ratio point.

    Strictly positive, strictly decreasing in x1 and increasing in x2, and
    exactly log 2 on the diagonal x1 = x2 for every beta.
    """
    return _loss_kernel(p.x1, p.x2, params.beta)


def dpo_loss_sigmoid_form(
    pi_w: float, pi_l: float, refs: ReferencePair, params: LossParams
) -> float:
    """Loss -log sigma(beta*log(pi_w/ref_w) - beta*log(pi_l/ref_l)).

    Algebraically identical to :func:`dpo_loss` at the ratio point
    (pi_w/ref_w, pi_l/ref_l); computed through the sigmoid route so the two
    forms cross-check each other.  Raises DomainError when either ratio
    falls below DOMAIN_FLOOR, keeping the two forms' domains identical.
    """
    _check_prob("pi_w", pi_w)
    _check_prob("pi_l", pi_l)
    RatioPoint(pi_w / refs.ref_w, pi_l / refs.ref_l)  # domain check only
    z = params.beta * math.log(pi_w / refs.ref_w) - params.beta * math.log(pi_l / refs.ref_l)
    return _softplus(-z)


def dpo_gradient(p: RatioPoint, params: LossParams) -> GradientVec:
    """Analytic gradient (-beta*x2^b / (x1*(x1^b + x2^b)), beta*x2^(b-1) / (x1^b + x2^b))."""
    d1, d2 = _grad_kernel(p.x1, p.x2, params.beta)
    singular = max(abs(d1), abs(d2)) > SINGULAR_GUARD
    return GradientVec(d1, d2, singular)


def finite_diff_gradient(p: RatioPoint, params: LossParams, h: float) -> GradientVec:
    """Central-difference gradient, the independent oracle for dpo_gradient.

    Uses (L(x+h) - L(x-h)) / (2h) per coordinate; agreement with the
    analytic gradient is O(h^2).  Raises DomainError when the stencil
    would leave the valid domain.
    """
    if not math.isfinite(h) or h <= 0.0:
        raise DomainError(f"h must be a positive finite real, got {h!r}")
    if p.x1 - h < DOMAIN_FLOOR or p.x2 - h < DOMAIN_FLOOR:
        raise DomainError(f"stencil h={h!r} leaves the valid domain at {p}")
    b = params.beta
    d1 = (_loss_kernel(p.x1 + h, p.x2, b) - _loss_kernel(p.x1 - h, p.x2, b)) / (2.0 * h)
    d2 = (_loss_kernel(p.x1, p.x2 + h, b) - _loss_kernel(p.x1, p.x2 - h, b)) / (2.0 * h)
    return GradientVec(d1, d2)


def update_rate(p: RatioPoint) -> float:
    """The ratio x2/x1 = |dL/dx1| / (dL/dx2), independent of beta."""
    return p.x2 / p.x1


def dominance(p: RatioPoint, tol: float = 1e-9) -> Dominance:
    """Classify which coordinate the loss moves faster at ``p``.

    X2Dominant when x2/x1 < 1 - tol (the x2-gradient is larger in
    magnitude), X1Dominant when x2/x1 > 1 + tol, Balanced in between.
    Exact ties occur only on the diagonal.
    """
    if not math.isfinite(tol) or tol < 0.0:
        raise DomainError(f"tol must be a nonnegative finite real, got {tol!r}")
    rate = update_rate(p)
    if rate < 1.0 - tol:
        return Dominance.X2_DOMINANT
    if rate > 1.0 + tol:
        return Dominance.X1_DOMINANT
    return Dominance.BALANCED
