"""Online convex optimization with long-term constraints and periodic updates."""

from .algorithm import (
    PqgaParams,
    PqgaRun,
    QueueState,
    RunAborted,
    SubproblemError,
    aggregated_gradient,
    multi_step_descent,
    pqga_step,
    queue_update,
    run_pqga,
    solve_period_subproblem,
)
from .problem import ProblemConstants, ProblemInstance, QuadraticTrackingProblem, project_ball
from .schedule import GradientFeedback, PeriodSchedule, deliverable_feedbacks, make_schedule

__version__ = "0.1.0"
