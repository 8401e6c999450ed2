"""Update-period timelines and the feedback drop rule.

A horizon of ``T`` slots is cut into periods of ``durations[i]`` slots. During
period ``i`` the environment emits gradient feedbacks at absolute slots
``feedback_slots[i]``; each one arrives ``feedback_delays[i][s]`` slots later.
Feedback arriving at or after the start of the next period is dropped.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

logger = logging.getLogger(__name__)

OffsetPattern = (
    Sequence[int]
    | Mapping[int, Sequence[int]]
    | Sequence[Sequence[int]]
    | Callable[[int, int], Sequence[int]]
)
DelayPattern = int | Sequence[Sequence[int]] | Callable[[int, int], int]


@dataclass(frozen=True)
class GradientFeedback:
    """One gradient feedback emitted at ``emitted_slot`` in ``period``.

    ``gradient`` and ``loss_value`` are filled in once the feedback has been
    evaluated at the decision active when it was emitted.
    """

    period: int
    emitted_slot: int
    arrival_slot: int
    gradient: np.ndarray | None = field(default=None, compare=False)
    loss_value: float | None = None

    def __post_init__(self):
        if self.arrival_slot < self.emitted_slot:
            raise ValueError("feedback cannot arrive before it is emitted")

    @property
    def delay(self) -> int:
        return self.arrival_slot - self.emitted_slot


@dataclass(frozen=True)
class PeriodSchedule:
    durations: tuple[int, ...]
    feedback_slots: tuple[tuple[int, ...], ...]
    feedback_delays: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.durations:
            raise ValueError("schedule needs at least one period")
        if len(self.feedback_slots) != len(self.durations) or len(
            self.feedback_delays
        ) != len(self.durations):
            raise ValueError("feedback_slots/feedback_delays must have one entry per period")
        for i, d in enumerate(self.durations):
            if int(d) != d or d < 1:
                raise ValueError(f"period {i}: duration must be a positive integer, got {d}")
        starts = self.starts
        for i, (slots, delays) in enumerate(zip(self.feedback_slots, self.feedback_delays)):
            if len(slots) != len(delays):
                raise ValueError(f"period {i}: one delay per feedback slot required")
            lo, hi = starts[i], starts[i] + self.durations[i] - 1
            for a, b in zip(slots, slots[1:]):
                if b <= a:
                    raise ValueError(f"period {i}: feedback slots must be strictly increasing")
            for s, dl in zip(slots, delays):
                if not lo <= s <= hi:
                    raise ValueError(f"period {i}: feedback slot {s} outside [{lo}, {hi}]")
                if dl < 0:
                    raise ValueError(f"period {i}: negative delay {dl} for slot {s}")

    @cached_property
    def starts(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.durations)[:-1]]))

    @property
    def num_periods(self) -> int:
        return len(self.durations)

    @property
    def horizon(self) -> int:
        return int(sum(self.durations))

    @property
    def t_max(self) -> int:
        return int(max(self.durations))

    def next_duration(self, i: int) -> int:
        """Duration of period ``i + 1``; the final period repeats its own length."""
        self._check(i)
        return self.durations[min(i + 1, self.num_periods - 1)]

    def period_slots(self, i: int) -> range:
        self._check(i)
        return range(self.starts[i], self.starts[i] + self.durations[i])

    def feedbacks(self, i: int) -> list[GradientFeedback]:
        self._check(i)
        return [
            GradientFeedback(i, s, s + d)
            for s, d in zip(self.feedback_slots[i], self.feedback_delays[i])
        ]

    def deliverable(self, i: int) -> list[int]:
        return deliverable_feedbacks(self, i)

    def feedback_count(self, i: int) -> int:
        return len(self.deliverable(i))

    @cached_property
    def zero_feedback_periods(self) -> tuple[int, ...]:
        """Periods in which every feedback is dropped."""
        return tuple(i for i in range(self.num_periods) if not self.deliverable(i))

    def _check(self, i: int):
        if not 0 <= i < self.num_periods:
            raise IndexError(f"period {i} out of range [0, {self.num_periods})")


def deliverable_feedbacks(schedule: PeriodSchedule, i: int) -> list[int]:
    """Emission slots of period ``i`` feedbacks that beat the next decision epoch.

    Returned in arrival order; ties keep emission order.
    """
    schedule._check(i)
    epoch = schedule.starts[i] + schedule.durations[i]
    kept = [
        (s + d, s)
        for s, d in zip(schedule.feedback_slots[i], schedule.feedback_delays[i])
        if s + d < epoch
    ]
    kept.sort()
    return [s for _, s in kept]


def _offsets_for(pattern: OffsetPattern, i: int, duration: int) -> Sequence[int]:
    if callable(pattern):
        return pattern(i, duration)
    if isinstance(pattern, Mapping):
        if duration not in pattern:
            raise ValueError(f"no feedback offsets configured for duration {duration}")
        return pattern[duration]
    if len(pattern) and not np.isscalar(pattern[0]):
        return pattern[i]
    return pattern


def _delays_for(pattern: DelayPattern, i: int, offsets: Sequence[int]) -> list[int]:
    if callable(pattern):
        return [int(pattern(i, o)) for o in offsets]
    if np.isscalar(pattern):
        return [int(pattern)] * len(offsets)
    row = list(pattern[i])
    if len(row) != len(offsets):
        raise ValueError(f"period {i}: {len(offsets)} feedbacks but {len(row)} delays")
    return [int(v) for v in row]


def make_schedule(
    durations: Sequence[int],
    feedback_offsets: OffsetPattern = (0,),
    delays: DelayPattern = 0,
) -> PeriodSchedule:
    """Build a schedule from per-period durations and feedback offsets.

    ``feedback_offsets`` gives offsets from each period's first slot. It may be
    one list shared by all periods, a ``{duration: offsets}`` mapping, one list
    per period, or a callable ``(period, duration) -> offsets``. ``delays`` is
    an int, one list per period, or a callable ``(period, offset) -> delay``.

    >>> s = make_schedule([8, 4], {8: [0, 4], 4: [0]})
    >>> s.feedback_slots
    ((0, 4), (8,))
    """
    durations = [int(d) for d in durations]
    if not durations:
        raise ValueError("durations must be nonempty")
    slots, dls = [], []
    start = 0
    for i, d in enumerate(durations):
        if d < 1:
            raise ValueError(f"period {i}: duration must be >= 1, got {d}")
        offsets = [int(o) for o in _offsets_for(feedback_offsets, i, d)]
        if not offsets:
            raise ValueError(f"period {i}: at least one feedback per period is required")
        for o in offsets:
            if not 0 <= o < d:
                raise ValueError(f"period {i}: feedback offset {o} outside period of length {d}")
        delay_row = _delays_for(delays, i, offsets)
        slots.append(tuple(start + o for o in offsets))
        dls.append(tuple(delay_row))
        start += d
    schedule = PeriodSchedule(tuple(durations), tuple(slots), tuple(dls))
    if schedule.zero_feedback_periods:
        logger.warning(
            "all feedbacks dropped in periods %s", list(schedule.zero_feedback_periods)
        )
    return schedule


def cyclic_durations(pattern: Sequence[int], horizon: int) -> list[int]:
    """Repeat ``pattern`` until the durations add up to ``horizon``.

    The final period is shortened when the pattern does not divide the horizon.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if not pattern or min(pattern) < 1:
        raise ValueError("duration pattern must be nonempty and positive")
    out, total, k = [], 0, 0
    while total < horizon:
        d = min(int(pattern[k % len(pattern)]), horizon - total)
        out.append(d)
        total += d
        k += 1
    return out
