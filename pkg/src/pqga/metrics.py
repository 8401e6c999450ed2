"""Regret, constraint violation and variation accounting over run traces."""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .problem import ProblemInstance
from .schedule import PeriodSchedule

logger = logging.getLogger(__name__)


@dataclass
class RunTrace:
    """Per-period record of one policy's run.

    ``queues[i]`` is the backlog entering period ``i`` and ``final_queue``
    the backlog after charging the last period. Policies without a queue of
    their own carry the backlog the solver's recursion would have built along
    their decisions, so the certificate can be reported uniformly.

    Application samples are per-period sums over every slot of the period:
    ``app_deviation`` of normalized deviations (over ``app_deviation_slots``
    slots with a nonzero demand), ``app_rate`` of per-user rates summed over
    users, with ``app_users`` users per slot.
    """

    policy: str
    seed: int
    durations: np.ndarray
    starts: np.ndarray
    feedback_counts: np.ndarray
    decisions: np.ndarray
    weighted_loss: np.ndarray
    constraint_values: np.ndarray
    queues: np.ndarray
    final_queue: np.ndarray
    gamma: float
    app_deviation: np.ndarray | None = None
    app_deviation_slots: np.ndarray | None = None
    app_power: np.ndarray | None = None
    app_rate: np.ndarray | None = None
    app_users: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.durations)
        for name in ("starts", "feedback_counts", "decisions", "weighted_loss",
                     "constraint_values", "queues"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trace field {name} has length {len(getattr(self, name))}, expected {n}")
        if np.any(np.asarray(self.queues) < 0):
            raise ValueError("queue backlogs must be nonnegative")

    @property
    def num_periods(self) -> int:
        return len(self.durations)

    @property
    def horizon(self) -> int:
        return int(np.sum(self.durations))

    @property
    def queue_norms(self) -> np.ndarray:
        return np.linalg.norm(self.queues, axis=1)

    @property
    def has_application(self) -> bool:
        return self.app_power is not None

    _ARRAYS = ("durations", "starts", "feedback_counts", "decisions", "weighted_loss",
               "constraint_values", "queues", "final_queue", "app_deviation",
               "app_deviation_slots", "app_power", "app_rate")

    def to_dict(self) -> dict:
        out = {"policy": self.policy, "seed": int(self.seed), "gamma": float(self.gamma),
               "app_users": int(self.app_users), "meta": self.meta}
        for name in self._ARRAYS:
            v = getattr(self, name)
            out[name] = None if v is None else np.asarray(v).tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RunTrace:
        kw = dict(data)
        for name in cls._ARRAYS:
            if kw.get(name) is not None:
                kw[name] = np.asarray(kw[name], dtype=int if name in (
                    "durations", "starts", "feedback_counts", "app_deviation_slots") else float)
        return cls(**kw)

    def dumps(self) -> str:
        # json writes floats with repr, so a round trip is exact
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> RunTrace:
        return cls.from_dict(json.loads(text))


def weighted_losses(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    decisions: Sequence[np.ndarray],
    feedback_slots: Sequence[Sequence[int]] | None = None,
) -> np.ndarray:
    """``(T_i/S_i) sum_s f_s(x_i)`` over the delivered feedback of each period.

    Periods without delivered feedback contribute zero.
    """
    if len(decisions) != schedule.num_periods:
        raise ValueError("one decision per period required")
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(schedule.num_periods)]
    out = np.zeros(schedule.num_periods)
    for i, (x, slots) in enumerate(zip(decisions, feedback_slots)):
        if slots:
            out[i] = schedule.durations[i] / len(slots) * sum(problem.loss(s, x) for s in slots)
    return out


def shadow_queues(constraint_values: np.ndarray, durations, gamma: float):
    """Backlogs the queue recursion accumulates along a given decision sequence."""
    g = np.asarray(constraint_values, dtype=float)
    q = np.zeros(g.shape[1])
    queues = []
    for gi, d in zip(g, durations):
        queues.append(q)
        scaled = gamma * d * gi
        q = np.maximum(-scaled, q + scaled)
    return np.array(queues), q


def build_trace(
    problem: ProblemInstance,
    schedule: PeriodSchedule,
    decisions: Sequence[np.ndarray],
    policy: str,
    seed: int = 0,
    gamma: float = 1.0,
    queues: np.ndarray | None = None,
    final_queue: np.ndarray | None = None,
    feedback_slots: Sequence[Sequence[int]] | None = None,
    application: bool = True,
    meta: dict | None = None,
) -> RunTrace:
    """Evaluate a decision sequence into a :class:`RunTrace`.

    Without ``queues`` the shadow backlog with step ``gamma`` is attached.
    Application samples are collected when ``application`` is set and the
    problem reports per-slot metrics.
    """
    decisions = np.array([np.asarray(x, dtype=float) for x in decisions])
    n = schedule.num_periods
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(n)]
    g = np.array([problem.constraint(x) for x in decisions]).reshape(n, -1)
    if queues is None:
        queues, final_queue = shadow_queues(g, schedule.durations, gamma)
    elif final_queue is None:
        raise ValueError("final_queue is required with explicit queues")
    trace = RunTrace(
        policy=policy,
        seed=int(seed),
        durations=np.array(schedule.durations),
        starts=np.array(schedule.starts),
        feedback_counts=np.array([len(s) for s in feedback_slots]),
        decisions=decisions,
        weighted_loss=weighted_losses(problem, schedule, decisions, feedback_slots),
        constraint_values=g,
        queues=np.asarray(queues, dtype=float),
        final_queue=np.asarray(final_queue, dtype=float),
        gamma=float(gamma),
        meta=dict(meta or {}),
    )
    if application:
        _attach_application(trace, problem, schedule)
    return trace


def _attach_application(trace: RunTrace, problem, schedule):
    probe = problem.slot_metrics(0, trace.decisions[0])
    if probe is None:
        return
    n = schedule.num_periods
    dev, dev_slots, power, rate = np.zeros(n), np.zeros(n, dtype=int), np.zeros(n), np.zeros(n)
    for i in range(n):
        x = trace.decisions[i]
        for t in schedule.period_slots(i):
            m = problem.slot_metrics(t, x)
            if m["deviation"] is not None:
                dev[i] += m["deviation"]
                dev_slots[i] += 1
            rate[i] += m["rate_sum"]
        power[i] = m["power"]
    trace.app_deviation = dev
    trace.app_deviation_slots = dev_slots
    trace.app_power = power
    trace.app_rate = rate
    trace.app_users = int(probe["users"])


def _check_len(trace: RunTrace, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (trace.num_periods,):
        raise ValueError(
            f"benchmark has {values.shape[0] if values.ndim else 0} entries, trace has {trace.num_periods}"
        )
    return values


def dynamic_regret(trace: RunTrace, benchmark_losses) -> float:
    """Accumulated gap to the per-period benchmark losses (same weights and feedback)."""
    return float(np.sum(trace.weighted_loss - _check_len(trace, benchmark_losses)))


def static_regret(trace: RunTrace, benchmark_losses) -> float:
    """Accumulated gap to the losses of one fixed decision."""
    return float(np.sum(trace.weighted_loss - _check_len(trace, benchmark_losses)))


def regret_series(trace: RunTrace, benchmark_losses) -> np.ndarray:
    return np.cumsum(trace.weighted_loss - _check_len(trace, benchmark_losses))


def constraint_violation(trace: RunTrace) -> tuple[np.ndarray, float]:
    """Signed duration-weighted violation per constraint and the queue certificate.

    The certificate ``||Q_final|| / gamma`` upper-bounds every entry.
    """
    vo = trace.durations @ trace.constraint_values
    return vo, float(np.linalg.norm(trace.final_queue)) / trace.gamma


def violation_series(trace: RunTrace) -> np.ndarray:
    return np.cumsum(trace.durations[:, None] * trace.constraint_values, axis=0)


def variation_measures(
    benchmark: Sequence[np.ndarray],
    schedule: PeriodSchedule,
    problem: ProblemInstance | None = None,
    feedback_slots: Sequence[Sequence[int]] | None = None,
) -> tuple[float, float, float]:
    """Path length, period variation and gradient energy of a benchmark sequence.

    The sequences are extended by repeating their last element, so the final
    differences vanish. The gradient energy needs ``problem`` and is NaN
    without it.
    """
    pts = np.asarray(benchmark, dtype=float)
    if len(pts) != schedule.num_periods:
        raise ValueError("one benchmark point per period required")
    path = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))) if len(pts) > 1 else 0.0
    d = np.asarray(schedule.durations, dtype=float)
    period_var = float(np.sum(np.diff(d) ** 2))
    if problem is None:
        return path, period_var, float("nan")
    if feedback_slots is None:
        feedback_slots = [schedule.deliverable(i) for i in range(schedule.num_periods)]
    energy = 0.0
    for i, (x, slots) in enumerate(zip(pts, feedback_slots)):
        if not slots:
            continue
        g = sum(problem.loss_gradient(s, x) for s in slots) * (d[i] / len(slots))
        energy += float(g @ g)
    return path, period_var, energy


def application_metrics(trace: RunTrace) -> tuple[float, float, float]:
    """Time-averaged normalized deviation, transmit power and per-user rate."""
    f_bar, p_bar, r_bar = application_series(trace)
    return float(f_bar[-1]), float(p_bar[-1]), float(r_bar[-1])


def application_series(trace: RunTrace):
    """Running averages of the application metrics at the end of each period."""
    if not trace.has_application:
        raise ValueError("trace carries no application samples")
    slots = np.cumsum(trace.durations).astype(float)
    dev_slots = np.cumsum(trace.app_deviation_slots).astype(float)
    excluded = int(trace.horizon - dev_slots[-1])
    if excluded:
        logger.info("%s: %d slots with zero demand excluded from the deviation average",
                    trace.policy, excluded)
    with np.errstate(invalid="ignore", divide="ignore"):
        f_bar = np.cumsum(trace.app_deviation) / dev_slots
    p_bar = np.cumsum(trace.durations * trace.app_power) / slots
    r_bar = np.cumsum(trace.app_rate) / (slots * max(trace.app_users, 1))
    return f_bar, p_bar, r_bar
