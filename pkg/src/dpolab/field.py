"""Grid sampling of the loss landscape and its gradient vector field.

Samples the ratio-space loss surface and the descent field over a
rectangular grid, classifies each node into the corner regions used to
discuss optimization behavior (top-left, top-right, low-x2 band, interior),
and prepares rows for tabular export.

Grid sampling is embarrassingly parallel across nodes; the implementation
here is sequential, but the output ordering (row-major, x1 slowest) is part
of the contract and would not change under a parallel evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .loss import (
    DOMAIN_FLOOR,
    DomainError,
    GradientVec,
    LossParams,
    RatioPoint,
    dpo_gradient,
    dpo_loss,
    update_rate,
)

__all__ = [
    "GridSpec",
    "Thresholds",
    "Region",
    "RegionLabel",
    "FieldSample",
    "default_grid",
    "default_thresholds",
    "classify_region",
    "sample_landscape",
    "sample_field",
]


@dataclass(frozen=True, slots=True)
class GridSpec:
    """A rectangular sampling grid over ratio space.

    ``spacing`` is "linear" or "log"; node ordering everywhere is row-major
    with x1 as the slow axis (all x2 values for the first x1, then the next
    x1, ...).
    """

    x1_min: float = 0.01
    x1_max: float = 2.0
    x2_min: float = 0.01
    x2_max: float = 2.0
    n1: int = 50
    n2: int = 50
    spacing: str = "linear"

    def __post_init__(self) -> None:
        for name, lo, hi in (
            ("x1", self.x1_min, self.x1_max),
            ("x2", self.x2_min, self.x2_max),
        ):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"{name} range must be finite")
            if lo < DOMAIN_FLOOR:
                raise DomainError(f"{name}_min must be >= {DOMAIN_FLOOR}, got {lo!r}")
            if hi <= lo:
                raise DomainError(f"{name}_max must exceed {name}_min, got [{lo!r}, {hi!r}]")
        if self.n1 < 2 or self.n2 < 2:
            raise DomainError(f"need at least 2 samples per axis, got {self.n1}x{self.n2}")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")

    def x1_axis(self) -> np.ndarray:
        return self._axis(self.x1_min, self.x1_max, self.n1)

    def x2_axis(self) -> np.ndarray:
        return self._axis(self.x2_min, self.x2_max, self.n2)

    def _axis(self, lo: float, hi: float, n: int) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)


def default_grid() -> GridSpec:
    """The default 50x50 linear grid over [0.01, 2]^2."""
    return GridSpec()


@dataclass(frozen=True, slots=True)
class Thresholds:
    """Absolute cut points splitting each axis into low / middle / high."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise DomainError("thresholds must be finite")
        if not self.low < self.high:
            raise DomainError(f"low must be < high, got ({self.low!r}, {self.high!r})")


def default_thresholds(grid: GridSpec) -> Thresholds:
    """Thresholds at 25% / 75% of the grid's combined coordinate range.

    "Extremely small/large" is a judgment call; these are configuration,
    recorded alongside every export, not derived quantities.
    """
    lo = min(grid.x1_min, grid.x2_min)
    hi = max(grid.x1_max, grid.x2_max)
    return Thresholds(lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo))


class Region(Enum):
    TOP_LEFT = "TopLeft"
    TOP_RIGHT = "TopRight"
    BOTTOM_LOW_X2 = "BottomLowX2"
    INTERIOR = "Interior"


@dataclass(frozen=True, slots=True)
class RegionLabel:
    """A region classification together with the thresholds that produced it."""

    kind: Region
    low: float
    high: float


def classify_region(p: RatioPoint, thresholds: Thresholds) -> RegionLabel:
    """Assign a ratio point to one of the corner regions.

    Checked in priority order:

    * TopLeft:      x1 <= low and x2 >= high
    * TopRight:     x1 >= high and x2 >= high
    * BottomLowX2:  x2 <= low and x1 > low
    * Interior:     everything else

    The low-x2 band deliberately excludes the bottom-left square x1 <= low,
    where the descent direction is not x2-dominated (the update rate x2/x1
    can exceed 1 there); that square classifies as Interior.
    """
    low, high = thresholds.low, thresholds.high
    if p.x1 <= low and p.x2 >= high:
        kind = Region.TOP_LEFT
    elif p.x1 >= high and p.x2 >= high:
        kind = Region.TOP_RIGHT
    elif p.x2 <= low and p.x1 > low:
        kind = Region.BOTTOM_LOW_X2
    else:
        kind = Region.INTERIOR
    return RegionLabel(kind, low, high)


@dataclass(frozen=True, slots=True)
class FieldSample:
    """Everything sampled at one grid node.

    ``unit_dir`` is the normalized descent direction -grad/|grad| (unit
    Euclidean norm; the gradient norm is strictly positive everywhere in
    the domain), and ``ratio`` is the update rate x2/x1.
    """

    point: RatioPoint
    loss: float
    grad: GradientVec
    grad_norm: float
    unit_dir: tuple[float, float]
    ratio: float
    region: RegionLabel


def sample_landscape(
    grid: GridSpec, params: LossParams
) -> list[tuple[RatioPoint, float]]:
    """Loss value at every grid node, row-major (x1 slowest)."""
    out = []
    for x1 in grid.x1_axis():
        for x2 in grid.x2_axis():
            p = RatioPoint(float(x1), float(x2))
            out.append((p, dpo_loss(p, params)))
    return out


def sample_field(
    grid: GridSpec, params: LossParams, thresholds: Thresholds | None = None
) -> list[FieldSample]:
    """Gradient, descent direction, update rate and region per grid node.

    Nodes are emitted row-major (x1 slowest).  ``thresholds`` defaults to
    :func:`default_thresholds` of the grid.
    """
    if thresholds is None:
        thresholds = default_thresholds(grid)
    out = []
    for x1 in grid.x1_axis():
        for x2 in grid.x2_axis():
            p = RatioPoint(float(x1), float(x2))
            grad = dpo_gradient(p, params)
            norm = grad.norm
            out.append(
                FieldSample(
                    point=p,
                    loss=dpo_loss(p, params),
                    grad=grad,
                    grad_norm=norm,
                    unit_dir=(-grad.d_x1 / norm, -grad.d_x2 / norm),
                    ratio=update_rate(p),
                    region=classify_region(p, thresholds),
                )
            )
    return out
