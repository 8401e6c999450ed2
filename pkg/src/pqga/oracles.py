"""Clairvoyant benchmarks and the comparison policies."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .algorithm import PqgaParams, PqgaRun, PqgaState, pqga_step, run_pqga, _DurationView
from .problem import ProblemInstance
from .schedule import PeriodSchedule

logger = logging.getLogger(__name__)


class OracleError(RuntimeError):
    pass


@dataclass
class OracleSolution:
    point: np.ndarray
    objective: float
    solver_residual: float
    iterations: int


def weighted_objective(problem, slots, weights, x) -> float:
    return float(sum(w * problem.loss(s, x) for s, w in zip(slots, weights)))


def weighted_gradient(problem, slots, weights, x) -> np.ndarray:
    total = np.zeros_like(x)
    for s, w in zip(slots, weights):
        total = total + w * problem.loss_gradient(s, x)
    return total


def minimize_weighted(
    problem: ProblemInstance,
    slots: Sequence[int],
    weights: Sequence[float],
    tol: float = 1e-8,
    max_iter: int = 100_000,
    x0: np.ndarray | None = None,
) -> OracleSolution:
    """Minimize a nonnegative combination of slot losses over the feasible set.

    Uses the problem's specialized solver when it has one, otherwise
    projected gradient with step ``1 / (2 L sum(weights))`` until the
    fixed-point residual is below ``tol``.
    """
    if len(slots) == 0:
        raise ValueError("at least one loss is required")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    special = problem.weighted_optimum(slots, weights)
    if special is not None:
        point, residual, iters = special
        return OracleSolution(point, weighted_objective(problem, slots, weights, point), residual, iters)

    step = 1.0 / (2 * problem.constants.smoothness * float(weights.sum()))
    x = problem.project_feasible(np.zeros(problem.dim) if x0 is None else np.asarray(x0, float))
    residual = np.inf
    for it in range(1, max_iter + 1):
        x_new = problem.project_feasible(x - step * weighted_gradient(problem, slots, weights, x))
        residual = float(np.linalg.norm(x_new - x))
        x = x_new
        if residual <= tol:
            return OracleSolution(x, weighted_objective(problem, slots, weights, x), residual, it)
    raise OracleError(f"benchmark solver stalled at residual {residual:.3e}")


def per_period_optimizer(
    problem: ProblemInstance, slots: Sequence[int], duration: int, tol: float = 1e-8, x0=None
) -> OracleSolution:
    """Best decision for one period in hindsight, weighting each feedback by ``T/S``."""
    if len(slots) == 0:
        raise ValueError("period has no delivered feedback")
    w = duration / len(slots)
    return minimize_weighted(problem, slots, [w] * len(slots), tol=tol, x0=x0)


def _period_weights(schedule, feedback_slots):
    slots, weights = [], []
    for i, fb in enumerate(feedback_slots):
        for s in fb:
            slots.append(s)
            weights.append(schedule.durations[i] / len(fb))
    return slots, weights


def offline_fixed_optimizer(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    feedback_slots: Sequence[Sequence[int]] | None = None,
    tol: float = 1e-8,
) -> OracleSolution:
    """Best single decision for the whole horizon in hindsight."""
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(schedule.num_periods)]
    slots, weights = _period_weights(schedule, feedback_slots)
    return minimize_weighted(problem, slots, weights, tol=tol)


def per_period_policy(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    x0: np.ndarray,
    feedback_slots: Sequence[Sequence[int]] | None = None,
    tol: float = 1e-8,
) -> list[OracleSolution]:
    """Per-period optimizers for every period.

    A period without feedback has no benchmark; the previous solution (or
    ``x0``, projected onto the feasible set) stands in for it.
    """
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(schedule.num_periods)]
    prev = problem.project_feasible(np.asarray(x0, dtype=float))
    out = []
    for i, slots in enumerate(feedback_slots):
        if slots:
            sol = per_period_optimizer(problem, slots, schedule.durations[i], tol, x0=prev)
        else:
            sol = OracleSolution(prev, 0.0, 0.0, 0)
        out.append(sol)
        prev = sol.point
    return out


def delayed_policy(period_optima: Sequence[np.ndarray], x0: np.ndarray) -> list[np.ndarray]:
    """Apply the previous period's optimizer; period 0 uses ``x0``."""
    return [np.asarray(x0, dtype=float)] + [np.asarray(p) for p in period_optima[:-1]]


def offline_policy(point: np.ndarray, num_periods: int) -> list[np.ndarray]:
    return [np.asarray(point, dtype=float)] * num_periods


def superslot_baseline_step(
    state: PqgaState, slots: Sequence[int], params: PqgaParams, problem: ProblemInstance,
    num_periods: int,
):
    """One update of the per-slot method that treats each period as one slot.

    It is the periodic solver with every duration set to one and no descent
    steps: the gradient is the plain average of the delivered feedback and
    the queue is charged with the unscaled constraint value.
    """
    view = _DurationView(None, (1,) * num_periods)
    return pqga_step(state, slots, view, params.replace(steps=0), problem)


def run_superslot(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    params: PqgaParams,
    x0: np.ndarray,
    feedback_slots: Sequence[Sequence[int]] | None = None,
) -> PqgaRun:
    return run_pqga(
        problem,
        schedule,
        params.replace(steps=0),
        x0,
        feedback_slots=feedback_slots,
        durations=[1] * schedule.num_periods,
    )
