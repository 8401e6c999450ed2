"""Periodic queueing with aggregated gradient descent.

Each period boundary runs three moves: the long-term constraint queue absorbs
the previous period's duration-weighted violation, ``steps`` projected
gradient steps are taken on the aggregated feedback, and the next decision
solves a strongly convex subproblem that regularizes toward both the descent
iterate and the previous decision while pricing the constraints by the queue.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .problem import ProblemInstance
from .schedule import PeriodSchedule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PqgaParams:
    alpha: float
    eta: float
    gamma: float
    steps: int = 0
    inner_tol: float = 1e-8
    inner_max_iter: int = 10_000
    use_closed_form: bool = True

    def __post_init__(self):
        for name in ("alpha", "eta", "gamma", "inner_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps}")
        if self.inner_max_iter < 1:
            raise ValueError("inner_max_iter must be positive")

    def replace(self, **changes) -> PqgaParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class QueueState:
    backlog: np.ndarray
    period: int = 0

    def __post_init__(self):
        b = np.asarray(self.backlog, dtype=float)
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValueError("queue backlog must be finite and nonnegative")
        object.__setattr__(self, "backlog", b)

    @classmethod
    def empty(cls, n_constraints: int) -> QueueState:
        return cls(np.zeros(n_constraints), 0)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.backlog))


def queue_update(state: QueueState, g_val, gamma: float, duration: int) -> QueueState:
    """``Q' = max(-gamma*T*g, Q + gamma*T*g)`` componentwise."""
    g_val = np.asarray(g_val, dtype=float)
    if not np.all(np.isfinite(g_val)):
        raise ValueError("constraint value must be finite")
    if gamma <= 0 or duration < 1:
        raise ValueError("gamma must be positive and duration at least one slot")
    scaled = gamma * duration * g_val
    return QueueState(np.maximum(-scaled, state.backlog + scaled), state.period + 1)


def aggregated_gradient(
    problem: ProblemInstance, slots: Sequence[int], duration: int, x: np.ndarray
) -> np.ndarray:
    """Duration-scaled average ``(T/S) * sum_s grad f_s(x)`` of delivered feedback."""
    if len(slots) == 0:
        raise ValueError("no delivered feedback; the caller must hold the decision")
    total = problem.loss_gradient(slots[0], x)
    for s in slots[1:]:
        total = total + problem.loss_gradient(s, x)
    return (duration / len(slots)) * total


def descent_step(problem, x, slots, duration, alpha):
    hook = getattr(problem, "closed_form_descent", None)
    if hook is not None:
        out = hook(x, slots, duration, alpha)
        if out is not None:
            return out
    grad = aggregated_gradient(problem, slots, duration, x)
    return problem.project_short_term(x - grad / (2 * alpha))


def multi_step_descent(
    problem: ProblemInstance,
    x: np.ndarray,
    slots: Sequence[int],
    duration: int,
    params: PqgaParams,
) -> np.ndarray:
    """``params.steps`` projected aggregated-gradient steps with step ``1/(2 alpha)``."""
    x_t = np.asarray(x, dtype=float)
    for _ in range(params.steps):
        x_t = descent_step(problem, x_t, slots, duration, params.alpha)
    return x_t


class SubproblemError(RuntimeError):
    def __init__(self, message, iterate, residual):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


@dataclass
class SubproblemResult:
    point: np.ndarray
    iterations: int
    residual: float
    closed_form: bool


def penalty_weights(queue_next: QueueState, g_prev, gamma, duration, next_duration):
    """Nonnegative prices ``(Q_{i+1} + gamma*T_i*g(x_i)) * gamma*T_{i+1}``."""
    price = queue_next.backlog + gamma * duration * np.asarray(g_prev, dtype=float)
    # the price is nonnegative in exact arithmetic; clip rounding noise
    return np.maximum(price, 0.0) * (gamma * next_duration)


def subproblem_objective(problem, x, x_prev, x_tilde, lin, weights, params):
    return (
        float(lin @ (x - x_tilde))
        + params.alpha * float((x - x_tilde) @ (x - x_tilde))
        + params.eta * float((x - x_prev) @ (x - x_prev))
        + float(weights @ problem.constraint(x))
    )


def solve_period_subproblem(
    problem: ProblemInstance,
    x_prev: np.ndarray,
    x_tilde: np.ndarray,
    queue_next: QueueState,
    g_prev,
    duration: int,
    next_duration: int,
    slots: Sequence[int],
    params: PqgaParams,
    closed_form: bool | None = None,
) -> SubproblemResult:
    """Minimize the doubly regularized, queue-priced model over ``X0``.

    With ``closed_form`` (default: ``params.use_closed_form``) a problem-supplied
    solution is used when available; otherwise projected gradient runs with
    step ``1 / (2(alpha + eta) + sum_c w_c * curv_c)`` until the fixed-point
    residual ``||x - P(x - step * grad)||`` drops below ``params.inner_tol``.
    """
    weights = penalty_weights(queue_next, g_prev, params.gamma, duration, next_duration)
    if closed_form is None:
        closed_form = params.use_closed_form
    if closed_form:
        out = problem.closed_form_decision(x_prev, x_tilde, weights, slots, duration, params)
        if out is not None:
            return SubproblemResult(out, 0, 0.0, True)

    lin = aggregated_gradient(problem, slots, duration, x_tilde)
    curvature = float(weights @ problem.constraint_curvature())
    step = 1.0 / (2 * (params.alpha + params.eta) + curvature)

    def grad(x):
        g = lin + 2 * params.alpha * (x - x_tilde) + 2 * params.eta * (x - x_prev)
        return g + problem.constraint_jacobian(x).T @ weights

    x = problem.project_short_term(np.asarray(x_tilde, dtype=float))
    residual = np.inf
    for it in range(1, params.inner_max_iter + 1):
        x_new = problem.project_short_term(x - step * grad(x))
        residual = float(np.linalg.norm(x_new - x))
        x = x_new
        if residual <= params.inner_tol:
            return SubproblemResult(x, it, residual, False)
    raise SubproblemError(
        f"inner solver stalled at residual {residual:.3e} after {params.inner_max_iter} iterations",
        x,
        residual,
    )


@dataclass
class StepReport:
    period: int
    constraint_value: np.ndarray
    queue_norm: float
    inner_iterations: int
    inner_residual: float
    held: bool = False


@dataclass
class PqgaState:
    decision: np.ndarray
    queue: QueueState
    period: int = 0


def pqga_step(
    state: PqgaState,
    slots: Sequence[int],
    schedule: PeriodSchedule,
    params: PqgaParams,
    problem: ProblemInstance,
) -> tuple[np.ndarray, QueueState, StepReport]:
    """Advance from period ``state.period`` to the next one.

    Queue update, descent from the current decision, then the subproblem
    solve. A period whose feedback was all dropped keeps its decision but
    still charges the queue.
    """
    i = state.period
    x = state.decision
    duration = schedule.durations[i]
    g_val = problem.constraint(x)
    queue_next = queue_update(state.queue, g_val, params.gamma, duration)
    if len(slots) == 0:
        logger.info("period %d: no feedback delivered, holding decision", i)
        report = StepReport(i, g_val, queue_next.norm, 0, 0.0, held=True)
        return x.copy(), queue_next, report
    x_tilde = multi_step_descent(problem, x, slots, duration, params)
    res = solve_period_subproblem(
        problem, x, x_tilde, queue_next, g_val, duration,
        schedule.next_duration(i), slots, params,
    )
    report = StepReport(i, g_val, queue_next.norm, res.iterations, res.residual)
    return res.point, queue_next, report


class RunAborted(RuntimeError):
    def __init__(self, message, decisions, queues, reports):
        super().__init__(message)
        self.decisions = decisions
        self.queues = queues
        self.reports = reports


@dataclass
class PqgaRun:
    """Raw output of the solver loop: one decision and entry queue per period."""

    decisions: np.ndarray
    queues: np.ndarray
    final_queue: np.ndarray
    reports: list[StepReport] = field(default_factory=list)
    params: PqgaParams | None = None


def run_pqga(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    params: PqgaParams,
    x0: np.ndarray,
    feedback_slots: Sequence[Sequence[int]] | None = None,
    durations: Sequence[int] | None = None,
) -> PqgaRun:
    """Run the solver over every period of ``schedule`` starting from ``x0``.

    ``feedback_slots`` overrides the delivered feedback per period and
    ``durations`` overrides the period lengths the solver believes in; both
    exist for the super-slot baseline and default to the schedule's own.
    """
    x = np.asarray(x0, dtype=float)
    if np.linalg.norm(problem.project_short_term(x) - x) > 1e-9 * (1 + np.linalg.norm(x)):
        raise ValueError("initial decision must lie in the short-term set")
    n = schedule.num_periods
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(n)]
    view = schedule
    if durations is not None:
        view = _DurationView(schedule, tuple(int(d) for d in durations))
    state = PqgaState(x, QueueState.empty(problem.n_constraints), 0)
    decisions, queues, reports = [x], [state.queue.backlog], []
    try:
        for i in range(n - 1):
            x_next, q_next, report = pqga_step(state, feedback_slots[i], view, params, problem)
            reports.append(report)
            state = PqgaState(x_next, q_next, i + 1)
            decisions.append(x_next)
            queues.append(q_next.backlog)
        last = queue_update(
            state.queue, problem.constraint(state.decision), params.gamma, view.durations[-1]
        )
    except Exception as exc:
        raise RunAborted(f"period {state.period}: {exc}", decisions, queues, reports) from exc
    return PqgaRun(np.array(decisions), np.array(queues), last.backlog, reports, params)


@dataclass(frozen=True)
class _DurationView:
    """Schedule stand-in that reports substitute period lengths."""

    base: PeriodSchedule
    durations: tuple[int, ...]

    def next_duration(self, i):
        return self.durations[min(i + 1, len(self.durations) - 1)]
