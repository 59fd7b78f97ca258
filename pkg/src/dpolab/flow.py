"""Gradient-flow dynamics d(x1,x2)/dt = -grad L in ratio space.

Fixed-step explicit integrators (Euler and classical RK4) with
floor-clamped termination, initial-condition sweeps over a grid, and
detection of slow (low gradient-norm) stretches along a trajectory.

A fixed small step plus clamp-and-terminate at the x2 floor is used
instead of adaptive stepping: the x2 dynamics stiffen like x2**(beta-1)
near the floor for beta < 1, and determinism matters more here than
efficiency.  Time is dimensionless flow time, not SGD steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .field import GridSpec, RegionLabel, Thresholds, classify_region, default_thresholds
from .loss import (
    DOMAIN_FLOOR,
    DomainError,
    GradientVec,
    LossParams,
    RatioPoint,
    _grad_kernel,
    _loss_kernel,
)

__all__ = [
    "Method",
    "Termination",
    "IntegratorConfig",
    "TrajectoryStep",
    "Trajectory",
    "SweepCell",
    "SweepReport",
    "integrate_flow",
    "detect_slow_regions",
    "sweep_initial_conditions",
]


class Method(Enum):
    EULER = "euler"
    RK4 = "rk4"


class Termination(Enum):
    LOSS_REACHED = "LossReached"
    FLOOR_HIT = "FloorHit"
    MAX_STEPS = "MaxSteps"
    SINGULAR_REGION = "SingularRegion"


@dataclass(frozen=True, slots=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    ``stop_loss`` terminates once the loss falls to it; ``floor`` is the
    clamp for x2 (the run records the clamped state and stops).
    ``record_every`` thins the recorded trajectory; the initial and
    terminal states are always recorded.
    """

    method: Method = Method.RK4
    step: float = 1e-3
    max_steps: int = 1_000_000
    stop_loss: float = 1e-4
    floor: float = DOMAIN_FLOOR
    record_every: int = 1

    def __post_init__(self) -> None:
        if not math.isfinite(self.step) or self.step <= 0.0:
            raise DomainError(f"step must be positive, got {self.step!r}")
        if self.max_steps < 1:
            raise DomainError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if not math.isfinite(self.stop_loss) or self.stop_loss < 0.0:
            raise DomainError(f"stop_loss must be >= 0, got {self.stop_loss!r}")
        if not math.isfinite(self.floor) or self.floor < DOMAIN_FLOOR:
            raise DomainError(f"floor must be >= {DOMAIN_FLOOR}, got {self.floor!r}")
        if self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every!r}")


@dataclass(frozen=True, slots=True)
class TrajectoryStep:
    t: float
    point: RatioPoint
    loss: float
    grad: GradientVec
    ratio: float

    @property
    def grad_norm(self) -> float:
        return self.grad.norm


@dataclass(frozen=True, slots=True)
class Trajectory:
    params: LossParams
    config: IntegratorConfig
    steps: tuple[TrajectoryStep, ...]
    termination: Termination
    steps_taken: int

    @property
    def final(self) -> TrajectoryStep:
        return self.steps[-1]


def integrate_flow(
    init: RatioPoint, params: LossParams, config: IntegratorConfig
) -> Trajectory:
    """Integrate the descent flow from ``init`` until a termination fires.

    Terminations, checked in this order at every recorded state: loss at or
    below ``stop_loss``; x2 clamped at the floor; gradient magnitude past
    the singular guard 1/floor; step budget exhausted.  States are never
    NaN/inf: integrator substeps evaluate the field with coordinates
    clamped to the floor, and an update that lands x2 at or below the floor
    is clamped there and recorded as the terminal state.

    Deterministic: identical inputs give bit-identical trajectories.
    """
    floor = config.floor
    if init.x2 <= floor or init.x1 <= floor:
        raise DomainError(f"init must lie strictly above the floor {floor!r}")
    beta = params.beta
    h = config.step
    guard = 1.0 / floor
    euler = config.method is Method.EULER

    def velocity(x1: float, x2: float) -> tuple[float, float]:
        g1, g2 = _grad_kernel(max(x1, floor), max(x2, floor), beta)
        return -g1, -g2

    records: list[TrajectoryStep] = []
    x1, x2 = init.x1, init.x2
    n = 0
    floored = False
    while True:
        g1, g2 = _grad_kernel(x1, x2, beta)
        loss = _loss_kernel(x1, x2, beta)
        singular = max(abs(g1), abs(g2)) > guard

        termination = None
        if loss <= config.stop_loss:
            termination = Termination.LOSS_REACHED
        elif floored:
            termination = Termination.FLOOR_HIT
        elif singular:
            termination = Termination.SINGULAR_REGION
        elif n >= config.max_steps:
            termination = Termination.MAX_STEPS

        if termination is not None or n % config.record_every == 0:
            records.append(
                TrajectoryStep(
                    t=n * h,
                    point=RatioPoint(x1, x2),
                    loss=loss,
                    grad=GradientVec(g1, g2, singular),
                    ratio=x2 / x1,
                )
            )
        if termination is not None:
            return Trajectory(params, config, tuple(records), termination, n)

        if euler:
            x1n = x1 + h * -g1
            x2n = x2 + h * -g2
        else:
            k1 = (-g1, -g2)
            k2 = velocity(x1 + 0.5 * h * k1[0], x2 + 0.5 * h * k1[1])
            k3 = velocity(x1 + 0.5 * h * k2[0], x2 + 0.5 * h * k2[1])
            k4 = velocity(x1 + h * k3[0], x2 + h * k3[1])
            x1n = x1 + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            x2n = x2 + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        if x2n <= floor:
            x2n = floor
            floored = True
        x1, x2 = x1n, x2n
        n += 1


def detect_slow_regions(
    traj: Trajectory, eps: float
) -> list[tuple[float, float, float]]:
    """Maximal contiguous stretches where the gradient norm stays below eps.

    Returns (t_start, t_end, min_grad_norm) per stretch; empty when the
    norm never drops below eps (always, for eps = 0, since the norm is
    strictly positive).
    """
    if not math.isfinite(eps) or eps < 0.0:
        raise DomainError(f"eps must be >= 0, got {eps!r}")
    intervals: list[tuple[float, float, float]] = []
    run_start = None
    run_min = math.inf
    last_t = 0.0
    for step in traj.steps:
        if step.grad_norm < eps:
            if run_start is None:
                run_start = step.t
                run_min = step.grad_norm
            else:
                run_min = min(run_min, step.grad_norm)
            last_t = step.t
        elif run_start is not None:
            intervals.append((run_start, last_t, run_min))
            run_start = None
            run_min = math.inf
    if run_start is not None:
        intervals.append((run_start, last_t, run_min))
    return intervals


@dataclass(frozen=True, slots=True)
class SweepCell:
    """Outcome of one initial condition in a sweep."""

    init: RatioPoint
    region: RegionLabel
    steps_to_stop: int
    termination: Termination
    final: RatioPoint
    slow_time: float
    steps_to_x1_double: int | None


@dataclass(frozen=True, slots=True)
class SweepReport:
    grid: GridSpec
    params: LossParams
    config: IntegratorConfig
    slow_eps: float
    cells: tuple[SweepCell, ...]


def sweep_initial_conditions(
    grid: GridSpec,
    params: LossParams,
    config: IntegratorConfig,
    slow_eps: float = 0.05,
    thresholds: Thresholds | None = None,
) -> SweepReport:
    """Integrate from every grid node and summarize the outcomes.

    One cell per node, in the grid's row-major order; cells are independent
    (the contract permits parallel evaluation) and the report is
    deterministic for a given configuration.  ``slow_time`` is the total
    flow time spent below the ``slow_eps`` gradient-norm threshold, and
    ``steps_to_x1_double`` the first recorded step where x1 reached twice
    its initial value (None when it never does; x1 is bounded along the
    flow by the conserved x1^2 + x2^2).
    """
    if thresholds is None:
        thresholds = default_thresholds(grid)
    cells = []
    for x1 in grid.x1_axis():
        for x2 in grid.x2_axis():
            init = RatioPoint(float(x1), float(x2))
            traj = integrate_flow(init, params, config)
            slow_time = sum(t1 - t0 for t0, t1, _ in detect_slow_regions(traj, slow_eps))
            doubled = None
            target = 2.0 * init.x1
            for step in traj.steps:
                if step.point.x1 >= target:
                    doubled = int(round(step.t / config.step))
                    break
            cells.append(
                SweepCell(
                    init=init,
                    region=classify_region(init, thresholds),
                    steps_to_stop=traj.steps_taken,
                    termination=traj.termination,
                    final=traj.final.point,
                    slow_time=slow_time,
                    steps_to_x1_double=doubled,
                )
            )
    return SweepReport(grid, params, config, slow_eps, tuple(cells))
