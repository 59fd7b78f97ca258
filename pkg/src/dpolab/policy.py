"""Tabular softmax policies trained with the pairwise preference loss.

Two policy shapes share one logit-table representation:

* Atomic: one softmax row per prompt over a finite set of responses.
* Autoregressive: one softmax row per (prompt, token-prefix) context over a
  fixed vocabulary; responses are fixed-length token tuples whose
  probability is the product of the per-position conditionals.

Training is full-batch deterministic gradient descent with analytic logit
gradients, plus a finite-difference twin of the trainer that serves as the
oracle for it.  Everything is small enough to brute-force: the default
universe is 4 atomic responses, or vocabulary 4 with length up to 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Union

import numpy as np

from .loss import DomainError, LossParams, ReferencePair, _sigmoid, _softplus, dpo_loss_sigmoid_form

__all__ = [
    "PolicyMode",
    "Response",
    "PreferenceTriple",
    "TabularPolicy",
    "TraceRecord",
    "TrainingTrace",
    "TrainingDiverged",
    "RateAsymmetryReport",
    "CORNER_PRESETS",
    "response_prob",
    "dpo_policy_loss",
    "dpo_policy_gradient",
    "train",
    "train_finite_diff",
    "rate_asymmetry_report",
    "preset_atomic",
    "GradTable",
]

Response = Union[int, tuple[int, ...]]
RowKey = Union[str, tuple[str, tuple[int, ...]]]
GradTable = dict[RowKey, np.ndarray]


class PolicyMode(Enum):
    ATOMIC = "atomic"
    AUTOREGRESSIVE = "autoregressive"


@dataclass(frozen=True, slots=True)
class PreferenceTriple:
    """(prompt, preferred response, dispreferred response)."""

    prompt: str
    y_w: Response
    y_l: Response

    def __post_init__(self) -> None:
        if self.y_w == self.y_l:
            raise DomainError(f"y_w and y_l must differ, both are {self.y_w!r}")
        if type(self.y_w) is not type(self.y_l):
            raise DomainError("y_w and y_l must come from the same response universe")


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


class TabularPolicy:
    """A softmax distribution over responses, stored as mutable logit rows.

    Rows are keyed by prompt (atomic) or by (prompt, prefix-tuple)
    (autoregressive) and iterate in insertion order, which fixes the
    parameter ordering used by the finite-difference trainer.
    """

    def __init__(
        self,
        mode: PolicyMode,
        *,
        num_responses: int | None = None,
        vocab_size: int | None = None,
        seq_len: int | None = None,
    ):
        self.mode = mode
        if mode is PolicyMode.ATOMIC:
            if num_responses is None or num_responses < 2:
                raise DomainError("atomic mode needs num_responses >= 2")
            self.num_responses = int(num_responses)
            self.vocab_size = None
            self.seq_len = None
        else:
            if vocab_size is None or vocab_size < 2:
                raise DomainError("autoregressive mode needs vocab_size >= 2")
            if seq_len is None or seq_len < 1:
                raise DomainError("autoregressive mode needs seq_len >= 1")
            self.num_responses = None
            self.vocab_size = int(vocab_size)
            self.seq_len = int(seq_len)
        self._rows: dict[RowKey, np.ndarray] = {}

    # -- construction -----------------------------------------------------

    @classmethod
    def atomic_uniform(cls, prompts: Iterable[str], num_responses: int) -> "TabularPolicy":
        policy = cls(PolicyMode.ATOMIC, num_responses=num_responses)
        for prompt in prompts:
            policy._rows[prompt] = np.zeros(num_responses)
        return policy

    @classmethod
    def atomic_from_probs(cls, prompt: str, probs: np.ndarray) -> "TabularPolicy":
        """Atomic policy realizing the given probability row (logits = log p)."""
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or len(probs) < 2:
            raise DomainError("probs must be a vector of length >= 2")
        if np.any(probs <= 0.0) or abs(probs.sum() - 1.0) > 1e-9:
            raise DomainError("probs must be strictly positive and sum to 1")
        policy = cls(PolicyMode.ATOMIC, num_responses=len(probs))
        policy._rows[prompt] = np.log(probs)
        return policy

    @classmethod
    def autoregressive_uniform(
        cls,
        triples: Iterable["PreferenceTriple"],
        vocab_size: int,
        seq_len: int,
    ) -> "TabularPolicy":
        """Uniform-conditional policy with rows for every context the triples touch."""
        policy = cls(PolicyMode.AUTOREGRESSIVE, vocab_size=vocab_size, seq_len=seq_len)
        for triple in triples:
            for response in (triple.y_w, triple.y_l):
                policy._validate_response(response)
                for t in range(seq_len):
                    key = (triple.prompt, tuple(response[:t]))
                    if key not in policy._rows:
                        policy._rows[key] = np.zeros(vocab_size)
        return policy

    def clone(self) -> "TabularPolicy":
        other = TabularPolicy(
            self.mode,
            num_responses=self.num_responses,
            vocab_size=self.vocab_size,
            seq_len=self.seq_len,
        )
        other._rows = {key: row.copy() for key, row in self._rows.items()}
        return other

    # -- lookups ----------------------------------------------------------

    def _validate_response(self, response: Response) -> None:
        if self.mode is PolicyMode.ATOMIC:
            if not isinstance(response, int) or not 0 <= response < self.num_responses:
                raise KeyError(f"response {response!r} outside the atomic universe")
        else:
            if not isinstance(response, tuple) or len(response) != self.seq_len:
                raise KeyError(f"response {response!r} is not a length-{self.seq_len} token tuple")
            if any(not isinstance(tok, int) or not 0 <= tok < self.vocab_size for tok in response):
                raise KeyError(f"response {response!r} has tokens outside the vocabulary")

    def row(self, key: RowKey) -> np.ndarray:
        try:
            return self._rows[key]
        except KeyError:
            raise KeyError(f"no logit row for {key!r}") from None

    def probs(self, key: RowKey) -> np.ndarray:
        return _softmax(self.row(key))

    def param_items(self) -> list[tuple[RowKey, np.ndarray]]:
        return list(self._rows.items())

    def log_response_prob(self, prompt: str, response: Response) -> float:
        self._validate_response(response)
        if self.mode is PolicyMode.ATOMIC:
            return float(np.log(self.probs(prompt)[response]))
        total = 0.0
        for t, token in enumerate(response):
            total += float(np.log(self.probs((prompt, tuple(response[:t])))[token]))
        return total

    def response_prob(self, prompt: str, response: Response) -> float:
        """Probability of one response; the autoregressive case multiplies conditionals."""
        self._validate_response(response)
        if self.mode is PolicyMode.ATOMIC:
            return float(self.probs(prompt)[response])
        prob = 1.0
        for t, token in enumerate(response):
            prob *= float(self.probs((prompt, tuple(response[:t])))[token])
        return prob

    # -- updates ----------------------------------------------------------

    def zero_grad_table(self) -> GradTable:
        return {key: np.zeros_like(row) for key, row in self._rows.items()}

    def apply_gradient(self, grad: GradTable, lr: float) -> None:
        for key, g in grad.items():
            self._rows[key] -= lr * g


def response_prob(policy: TabularPolicy, prompt: str, response: Response) -> float:
    return policy.response_prob(prompt, response)


def _margin(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    triple: PreferenceTriple,
    params: LossParams,
) -> float:
    """beta * (log x1 - log x2) computed exactly as the sigmoid-form loss does."""
    pw = policy.response_prob(triple.prompt, triple.y_w)
    pl = policy.response_prob(triple.prompt, triple.y_l)
    rw = ref_policy.response_prob(triple.prompt, triple.y_w)
    rl = ref_policy.response_prob(triple.prompt, triple.y_l)
    if pw <= 0.0 or pl <= 0.0:
        raise DomainError("zero-probability response (logits underflowed the softmax)")
    return params.beta * math.log(pw / rw) - params.beta * math.log(pl / rl)


def dpo_policy_loss(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    triple: PreferenceTriple,
    params: LossParams,
) -> float:
    """Preference loss of one triple under (policy, reference).

    Exactly the sigmoid-form ratio loss of the four response probabilities;
    log 2 whenever policy equals the reference, for any triple and beta.
    """
    pw = policy.response_prob(triple.prompt, triple.y_w)
    pl = policy.response_prob(triple.prompt, triple.y_l)
    rw = ref_policy.response_prob(triple.prompt, triple.y_w)
    rl = ref_policy.response_prob(triple.prompt, triple.y_l)
    return dpo_loss_sigmoid_form(pw, pl, ReferencePair(rw, rl), params)


def dpo_policy_gradient(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    triple: PreferenceTriple,
    params: LossParams,
) -> GradTable:
    """Analytic logit gradient of the triple's loss, as a full zero-padded table.

    Atomic rows use the reduced form dL/dtheta_y = -beta*sigma(-z) *
    (1{y=y_w} - 1{y=y_l}) (the softmax terms of the two responses cancel
    algebraically).  Autoregressive rows accumulate the per-position terms
    -+beta*sigma(-z) * (onehot(token) - softmax(context)) along each
    response's path; positions where both responses share context *and*
    token cancel to exact bitwise zeros, which is the similar-responses
    counteraction scenario.
    """
    z = _margin(policy, ref_policy, triple, params)
    c = params.beta * _sigmoid(-z)
    grad = policy.zero_grad_table()
    if policy.mode is PolicyMode.ATOMIC:
        row = grad[triple.prompt]
        row[triple.y_w] -= c
        row[triple.y_l] += c
        return grad
    for t in range(policy.seq_len):
        ctx_w = (triple.prompt, tuple(triple.y_w[:t]))
        vec_w = np.zeros(policy.vocab_size)
        vec_w[triple.y_w[t]] = 1.0
        vec_w -= policy.probs(ctx_w)
        grad[ctx_w] -= c * vec_w

        ctx_l = (triple.prompt, tuple(triple.y_l[:t]))
        vec_l = np.zeros(policy.vocab_size)
        vec_l[triple.y_l[t]] = 1.0
        vec_l -= policy.probs(ctx_l)
        grad[ctx_l] += c * vec_l
    return grad


def _grad_table_norm(grad: GradTable) -> float:
    return math.sqrt(sum(float(np.dot(g, g)) for g in grad.values()))


def _objective(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    params: LossParams,
) -> float:
    return sum(dpo_policy_loss(policy, ref_policy, triple, params) for triple in dataset)


def finite_diff_policy_gradient(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    params: LossParams,
    h: float = 1e-6,
) -> GradTable:
    """Central-difference gradient of the summed loss over every logit entry.

    The oracle path: perturbs each parameter in place (restoring it
    exactly) and never touches the analytic gradient code.
    """
    grad: GradTable = {}
    for key, row in policy.param_items():
        g = np.zeros_like(row)
        for k in range(len(row)):
            orig = row[k]
            row[k] = orig + h
            up = _objective(policy, ref_policy, dataset, params)
            row[k] = orig - h
            down = _objective(policy, ref_policy, dataset, params)
            row[k] = orig
            g[k] = (up - down) / (2.0 * h)
        grad[key] = g
    return grad


class TrainingDiverged(RuntimeError):
    """The summed loss increased for 10 consecutive steps."""


@dataclass(frozen=True, slots=True)
class TraceRecord:
    step: int
    loss: float
    pi_w: float
    pi_l: float
    x1: float
    x2: float
    margin: float
    rest_mass: float
    grad_norm: float
    d_pi_w: float
    d_pi_l: float


@dataclass(frozen=True, slots=True)
class TrainingTrace:
    """Per-step training record for the tracked (first) triple.

    ``loss`` is the tracked triple's own loss, so loss = -log sigma(margin)
    holds at every record; with multi-triple datasets the optimizer and the
    divergence guard use the summed objective instead.
    """

    mode: PolicyMode
    params: LossParams
    lr: float
    records: tuple[TraceRecord, ...]


def _run_training(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    lr: float,
    steps: int,
    params: LossParams,
    gradient_fn: Callable[[TabularPolicy], GradTable],
) -> TrainingTrace:
    if not dataset:
        raise DomainError("dataset must contain at least one triple")
    if not math.isfinite(lr) or lr < 0.0:
        raise DomainError(f"lr must be >= 0, got {lr!r}")
    if steps < 0:
        raise DomainError(f"steps must be >= 0, got {steps!r}")
    tracked = dataset[0]
    rw = ref_policy.response_prob(tracked.prompt, tracked.y_w)
    rl = ref_policy.response_prob(tracked.prompt, tracked.y_l)

    def rest_mass(pw: float, pl: float) -> float:
        # atomic: actually measure the other responses, so the trace's
        # normalization (pi_w + pi_l + rest = 1) is a real check
        if policy.mode is PolicyMode.ATOMIC:
            probs = policy.probs(tracked.prompt)
            return float(probs.sum() - probs[tracked.y_w] - probs[tracked.y_l])
        return 1.0 - pw - pl

    records: list[TraceRecord] = []
    prev_pw = prev_pl = None
    prev_objective = None
    bad_streak = 0
    for step_idx in range(steps + 1):
        grad = gradient_fn(policy)
        margin = _margin(policy, ref_policy, tracked, params)
        pw = policy.response_prob(tracked.prompt, tracked.y_w)
        pl = policy.response_prob(tracked.prompt, tracked.y_l)
        records.append(
            TraceRecord(
                step=step_idx,
                loss=_softplus(-margin),
                pi_w=pw,
                pi_l=pl,
                x1=pw / rw,
                x2=pl / rl,
                margin=margin,
                rest_mass=rest_mass(pw, pl),
                grad_norm=_grad_table_norm(grad),
                d_pi_w=0.0 if prev_pw is None else pw - prev_pw,
                d_pi_l=0.0 if prev_pl is None else pl - prev_pl,
            )
        )
        prev_pw, prev_pl = pw, pl
        if step_idx == steps:
            break
        objective = _objective(policy, ref_policy, dataset, params)
        if prev_objective is not None and objective > prev_objective:
            bad_streak += 1
            if bad_streak >= 10:
                raise TrainingDiverged(
                    f"loss increased for {bad_streak} consecutive steps (at step {step_idx})"
                )
        else:
            bad_streak = 0
        prev_objective = objective
        policy.apply_gradient(grad, lr)
    return TrainingTrace(policy.mode, params, lr, tuple(records))


def train(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    lr: float,
    steps: int,
    params: LossParams,
) -> TrainingTrace:
    """Full-batch gradient descent with analytic gradients.

    Updates ``policy`` in place and returns the per-step trace (steps + 1
    records; steps = 0 records only the initial state).  lr = 0 is allowed
    and produces a degenerate, movement-free trace.  Aborts with
    TrainingDiverged if the summed loss rises 10 steps in a row.
    """
    return _run_training(
        policy,
        ref_policy,
        dataset,
        lr,
        steps,
        params,
        lambda pol: _sum_triple_gradients(pol, ref_policy, dataset, params),
    )


def _sum_triple_gradients(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    params: LossParams,
) -> GradTable:
    total = policy.zero_grad_table()
    for triple in dataset:
        for key, g in dpo_policy_gradient(policy, ref_policy, triple, params).items():
            total[key] += g
    return total


def train_finite_diff(
    policy: TabularPolicy,
    ref_policy: TabularPolicy,
    dataset: list[PreferenceTriple],
    lr: float,
    steps: int,
    params: LossParams,
    h: float = 1e-6,
) -> TrainingTrace:
    """The trainer's finite-difference twin: same loop, oracle gradients."""
    return _run_training(
        policy,
        ref_policy,
        dataset,
        lr,
        steps,
        params,
        lambda pol: finite_diff_policy_gradient(pol, ref_policy, dataset, params, h),
    )


@dataclass(frozen=True, slots=True)
class RateAsymmetryReport:
    """How much faster the dispreferred side moves, per step and cumulatively.

    ``asymmetry_holds`` records whether |dlog x2| >= dlog x1 - slack at
    every step that started with x2 < x1 (the discrete counterpart of the
    update-rate bound); ``violations`` lists offending step indices.  A
    trace with no movement at all (e.g. lr = 0) is flagged ``degenerate``.
    """

    steps: int
    d_pi_w: tuple[float, ...]
    d_pi_l: tuple[float, ...]
    cum_pi_w_gain: tuple[float, ...]
    cum_pi_l_drop: tuple[float, ...]
    d_log_x1: tuple[float, ...]
    d_log_x2: tuple[float, ...]
    fraction_dispreferred_faster: float
    slack: float
    steps_checked: int
    violations: tuple[int, ...]
    asymmetry_holds: bool
    degenerate: bool


def rate_asymmetry_report(trace: TrainingTrace, slack: float | None = None) -> RateAsymmetryReport:
    """Summarize the preferred-vs-dispreferred movement asymmetry of a trace.

    ``slack`` defaults to 2*(lr*beta)^2, a second-order bound on the
    discretization error of one gradient step.
    """
    recs = trace.records
    if len(recs) < 2:
        raise DomainError("trace must contain at least 2 records")
    if slack is None:
        slack = 2.0 * (trace.lr * trace.params.beta) ** 2
    n = len(recs) - 1
    d_pi_w = tuple(recs[k].pi_w - recs[k - 1].pi_w for k in range(1, n + 1))
    d_pi_l = tuple(recs[k].pi_l - recs[k - 1].pi_l for k in range(1, n + 1))
    cum_w = tuple(recs[k].pi_w - recs[0].pi_w for k in range(1, n + 1))
    cum_l = tuple(recs[0].pi_l - recs[k].pi_l for k in range(1, n + 1))
    d_log_x1 = tuple(math.log(recs[k].x1) - math.log(recs[k - 1].x1) for k in range(1, n + 1))
    d_log_x2 = tuple(math.log(recs[k].x2) - math.log(recs[k - 1].x2) for k in range(1, n + 1))

    faster = sum(1 for a, b in zip(d_log_x1, d_log_x2) if abs(b) > abs(a))
    violations = []
    checked = 0
    for k in range(1, n + 1):
        if recs[k - 1].x2 < recs[k - 1].x1:
            checked += 1
            if abs(d_log_x2[k - 1]) < d_log_x1[k - 1] - slack:
                violations.append(k)
    degenerate = all(v == 0.0 for v in d_log_x1) and all(v == 0.0 for v in d_log_x2)
    return RateAsymmetryReport(
        steps=n,
        d_pi_w=d_pi_w,
        d_pi_l=d_pi_l,
        cum_pi_w_gain=cum_w,
        cum_pi_l_drop=cum_l,
        d_log_x1=d_log_x1,
        d_log_x2=d_log_x2,
        fraction_dispreferred_faster=faster / n,
        slack=slack,
        steps_checked=checked,
        violations=tuple(violations),
        asymmetry_holds=not violations,
        degenerate=degenerate,
    )


#: Named starting corners in ratio coordinates (x1, x2), under a uniform
#: reference (so x_i = K * pi_i for an atomic universe of size K).
CORNER_PRESETS: dict[str, tuple[float, float]] = {
    "top_left": (0.05, 0.95),
    "top_right": (0.95, 0.95),
    "bottom_left": (0.05, 0.05),
    "bottom_right": (0.95, 0.05),
    "preferred_leading": (1.5, 0.5),
    "balanced": (1.0, 1.0),
}


def preset_atomic(
    preset: str | tuple[float, float],
    num_responses: int = 4,
    prompt: str = "prompt-0",
    y_w: int = 0,
    y_l: int = 1,
) -> tuple[TabularPolicy, TabularPolicy, PreferenceTriple]:
    """Build (policy, uniform reference, triple) hitting target ratios.

    ``preset`` is a name from CORNER_PRESETS or an explicit (x1, x2) pair.
    With the uniform reference each target ratio x maps to the probability
    x / num_responses; the remaining mass is spread uniformly over the
    other responses, which solves the two free logits analytically.
    """
    if isinstance(preset, str):
        try:
            targets = CORNER_PRESETS[preset]
        except KeyError:
            raise DomainError(
                f"unknown preset {preset!r}; choices: {sorted(CORNER_PRESETS)}"
            ) from None
    else:
        targets = preset
    x1_target, x2_target = targets
    if y_w == y_l or not (0 <= y_w < num_responses and 0 <= y_l < num_responses):
        raise DomainError("y_w and y_l must be distinct responses in the universe")
    k = num_responses
    pi_w = x1_target / k
    pi_l = x2_target / k
    rest = 1.0 - pi_w - pi_l
    if pi_w <= 0.0 or pi_l <= 0.0 or rest <= 0.0 or k < 3:
        raise DomainError(
            f"targets ({x1_target}, {x2_target}) infeasible for {k} responses"
        )
    probs = np.full(k, rest / (k - 2))
    probs[y_w] = pi_w
    probs[y_l] = pi_l
    policy = TabularPolicy.atomic_from_probs(prompt, probs)
    ref = TabularPolicy.atomic_uniform([prompt], k)
    return policy, ref, PreferenceTriple(prompt, y_w, y_l)
