"""Seeded end-to-end check of the analytic gradient against the oracle.

Draws deterministic pseudo-random points from a square in ratio space and
reports the worst relative disagreement between the analytic gradient and
central finite differences.  This is the verification harness behind the
``check-grad`` command.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loss import DomainError, LossParams, RatioPoint, dpo_gradient, finite_diff_gradient

__all__ = ["GradCheckReport", "check_gradients"]


@dataclass(frozen=True, slots=True)
class GradCheckReport:
    samples: int
    beta: float
    h: float
    seed: int
    max_rel_err: float
    worst_point: RatioPoint


def check_gradients(
    samples: int,
    params: LossParams,
    seed: int = 0,
    h: float = 1e-6,
    lo: float = 0.01,
    hi: float = 2.0,
) -> GradCheckReport:
    """Max relative gradient error over ``samples`` seeded points in [lo, hi]^2."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples!r}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo!r}, {hi!r}]")
    rng = np.random.default_rng(seed)
    points = lo + rng.random((samples, 2)) * (hi - lo)
    worst = RatioPoint(float(points[0, 0]), float(points[0, 1]))
    max_err = -1.0
    for x1, x2 in points:
        p = RatioPoint(float(x1), float(x2))
        analytic = dpo_gradient(p, params)
        numeric = finite_diff_gradient(p, params, h)
        err = max(
            abs(analytic.d_x1 - numeric.d_x1) / abs(analytic.d_x1),
            abs(analytic.d_x2 - numeric.d_x2) / abs(analytic.d_x2),
        )
        if err > max_err:
            max_err = err
            worst = p
    return GradCheckReport(samples, params.beta, h, seed, max_err, worst)
