"""FastAPI application exposing the laboratory as stateless compute endpoints.

Every endpoint is a pure function of its request body: no state, no
background work, deterministic responses.  Domain violations that get past
request validation surface as 400s with the core error message.
"""

from __future__ import annotations

import functools

from fastapi import FastAPI, HTTPException

from .. import SCHEMA_VERSION, __version__
from ..export import field_rows, landscape_rows, sweep_rows, trace_rows, trajectory_rows
from ..field import default_thresholds, sample_field, sample_landscape
from ..flow import integrate_flow, sweep_initial_conditions
from ..loss import DomainError, LossParams, RatioPoint
from ..policy import (
    PolicyMode,
    PreferenceTriple,
    TabularPolicy,
    preset_atomic,
    rate_asymmetry_report,
    train,
)
from ..verify import check_gradients
from .models import (
    CheckGradRequest,
    CheckGradResponse,
    FieldRequest,
    FieldResponse,
    FlowRequest,
    FlowResponse,
    HealthResponse,
    LandscapeRequest,
    LandscapeResponse,
    RateReportModel,
    SweepRequest,
    SweepResponse,
    ThresholdsModel,
    TrainRequest,
    TrainResponse,
    TripleModel,
)

__all__ = ["create_app", "app"]


def _domain_guard(fn):
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DomainError, KeyError, ValueError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err

    return wrapped


def _build_triple(model: TripleModel, mode: PolicyMode) -> PreferenceTriple:
    def convert(y):
        if mode is PolicyMode.ATOMIC:
            if not isinstance(y, int):
                raise DomainError("atomic responses are integer ids")
            return y
        if isinstance(y, int):
            raise DomainError("autoregressive responses are token lists")
        return tuple(y)

    return PreferenceTriple(model.prompt, convert(model.y_w), convert(model.y_l))


def create_app() -> FastAPI:
    app = FastAPI(
        title="dpolab",
        version=__version__,
        description="Loss landscape, gradient field, gradient flow and tabular-policy training for DPO in ratio coordinates.",
    )

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__, schema_version=SCHEMA_VERSION)

    @app.post("/v1/landscape", response_model=LandscapeResponse)
    @_domain_guard
    def landscape(req: LandscapeRequest) -> LandscapeResponse:
        samples = sample_landscape(req.grid.to_spec(), LossParams(req.beta))
        return LandscapeResponse(
            schema_version=SCHEMA_VERSION, beta=req.beta, rows=landscape_rows(samples)
        )

    @app.post("/v1/field", response_model=FieldResponse)
    @_domain_guard
    def field(req: FieldRequest) -> FieldResponse:
        grid = req.grid.to_spec()
        thresholds = req.thresholds.to_spec() if req.thresholds else default_thresholds(grid)
        samples = sample_field(grid, LossParams(req.beta), thresholds)
        return FieldResponse(
            schema_version=SCHEMA_VERSION,
            beta=req.beta,
            thresholds=ThresholdsModel(low=thresholds.low, high=thresholds.high),
            rows=field_rows(samples),
        )

    @app.post("/v1/flow", response_model=FlowResponse)
    @_domain_guard
    def flow(req: FlowRequest) -> FlowResponse:
        traj = integrate_flow(
            RatioPoint(req.x1, req.x2), LossParams(req.beta), req.integrator.to_spec()
        )
        return FlowResponse(
            schema_version=SCHEMA_VERSION,
            beta=req.beta,
            termination=traj.termination.value,
            steps_taken=traj.steps_taken,
            rows=trajectory_rows(traj),
        )

    @app.post("/v1/sweep", response_model=SweepResponse)
    @_domain_guard
    def sweep(req: SweepRequest) -> SweepResponse:
        report = sweep_initial_conditions(
            req.grid.to_spec(),
            LossParams(req.beta),
            req.integrator.to_spec(),
            slow_eps=req.slow_eps,
            thresholds=req.thresholds.to_spec() if req.thresholds else None,
        )
        return SweepResponse(schema_version=SCHEMA_VERSION, beta=req.beta, rows=sweep_rows(report))

    @app.post("/v1/train", response_model=TrainResponse)
    @_domain_guard
    def train_endpoint(req: TrainRequest) -> TrainResponse:
        params = LossParams(req.beta)
        spec = req.policy
        if spec.mode == "atomic":
            if spec.preset or spec.targets:
                policy, ref, triple = preset_atomic(
                    spec.preset or spec.targets, num_responses=spec.num_responses
                )
                dataset = [triple]
            else:
                models = req.dataset or [TripleModel()]
                dataset = [_build_triple(m, PolicyMode.ATOMIC) for m in models]
                prompts = sorted({t.prompt for t in dataset})
                policy = TabularPolicy.atomic_uniform(prompts, spec.num_responses)
                ref = TabularPolicy.atomic_uniform(prompts, spec.num_responses)
        else:
            if req.dataset:
                dataset = [_build_triple(m, PolicyMode.AUTOREGRESSIVE) for m in req.dataset]
            else:
                y_w = (0,) * (spec.seq_len - 1) + (1,)
                y_l = (0,) * spec.seq_len
                dataset = [PreferenceTriple("prompt-0", y_w, y_l)]
            policy = TabularPolicy.autoregressive_uniform(dataset, spec.vocab_size, spec.seq_len)
            ref = TabularPolicy.autoregressive_uniform(dataset, spec.vocab_size, spec.seq_len)

        trace = train(policy, ref, dataset, req.lr, req.steps, params)
        if len(trace.records) >= 2:
            rep = rate_asymmetry_report(trace)
            rate = RateReportModel(
                steps=rep.steps,
                fraction_dispreferred_faster=rep.fraction_dispreferred_faster,
                slack=rep.slack,
                steps_checked=rep.steps_checked,
                violations=list(rep.violations),
                asymmetry_holds=rep.asymmetry_holds,
                degenerate=rep.degenerate,
                cum_pi_w_gain=list(rep.cum_pi_w_gain),
                cum_pi_l_drop=list(rep.cum_pi_l_drop),
            )
        else:
            rate = RateReportModel(
                steps=0,
                fraction_dispreferred_faster=0.0,
                slack=0.0,
                steps_checked=0,
                violations=[],
                asymmetry_holds=True,
                degenerate=True,
                cum_pi_w_gain=[],
                cum_pi_l_drop=[],
            )
        return TrainResponse(
            schema_version=SCHEMA_VERSION,
            beta=req.beta,
            lr=req.lr,
            mode=spec.mode,
            rows=trace_rows(trace),
            rate_report=rate,
        )

    @app.post("/v1/check-grad", response_model=CheckGradResponse)
    @_domain_guard
    def check_grad(req: CheckGradRequest) -> CheckGradResponse:
        report = check_gradients(req.samples, LossParams(req.beta), seed=req.seed, h=req.h)
        return CheckGradResponse(
            schema_version=SCHEMA_VERSION,
            beta=req.beta,
            samples=report.samples,
            seed=report.seed,
            h=report.h,
            tol=req.tol,
            max_rel_err=report.max_rel_err,
            worst_x1=report.worst_point.x1,
            worst_x2=report.worst_point.x2,
            passed=report.max_rel_err < req.tol,
        )

    return app


app = create_app()
