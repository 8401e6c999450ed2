import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pqga.algorithm import (
    PqgaParams,
    PqgaState,
    QueueState,
    RunAborted,
    SubproblemError,
    aggregated_gradient,
    multi_step_descent,
    penalty_weights,
    pqga_step,
    queue_update,
    run_pqga,
    solve_period_subproblem,
)
from pqga.problem import QuadraticTrackingProblem, make_tracking_problem
from pqga.schedule import make_schedule


def interval(targets, a=1.0, b=0.5):
    return QuadraticTrackingProblem(np.asarray(targets, float)[:, None], [1.0], 1.0, [[a]], [b])


# queue recursion

def test_queue_update_examples():
    q = queue_update(QueueState(np.zeros(2)), [-1, 0.5], 1.0, 2)
    np.testing.assert_array_equal(q.backlog, [2.0, 1.0])
    assert q.period == 1
    np.testing.assert_array_equal(queue_update(QueueState([3.0]), [0.0], 0.5, 4).backlog, [3.0])
    np.testing.assert_array_equal(queue_update(QueueState([1.0]), [-2.0], 1.0, 1).backlog, [2.0])


def test_queue_update_rejects():
    with pytest.raises(ValueError):
        queue_update(QueueState([0.0]), [np.inf], 1.0, 1)
    with pytest.raises(ValueError):
        queue_update(QueueState([0.0]), [1.0], 0.0, 1)
    with pytest.raises(ValueError):
        queue_update(QueueState([0.0]), [1.0], 1.0, 0)
    with pytest.raises(ValueError):
        QueueState([-1.0])


vec = arrays(float, 3, elements=st.floats(-50, 50, allow_nan=False))


@settings(max_examples=500, deadline=None)
@given(arrays(float, 3, elements=st.floats(0, 100)), vec, st.floats(0.01, 10), st.integers(1, 16))
def test_queue_laws(q, g, gamma, T):
    state = QueueState(q)
    out = queue_update(state, g, gamma, T).backlog
    scaled = gamma * T * g
    assert np.all(out >= 0)
    assert np.all(out + scaled >= 0)
    assert np.linalg.norm(out) >= np.linalg.norm(scaled) * (1 - 1e-15)
    assert np.linalg.norm(out) <= (np.linalg.norm(q) + np.linalg.norm(scaled)) * (1 + 1e-15)
    drift = 0.5 * out @ out - 0.5 * q @ q
    rhs = q @ scaled + scaled @ scaled
    assert drift <= rhs + 1e-9 * max(1.0, abs(rhs), abs(drift))


# descent

def test_aggregated_gradient_examples():
    lin = interval([0.0, 0.0])
    grads = {0: np.array([1.0, -1.0]), 1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])}

    class Stub:
        def loss_gradient(self, t, x):
            return grads[t]

    np.testing.assert_array_equal(aggregated_gradient(Stub(), [0], 2, None), [2, -2])
    np.testing.assert_array_equal(aggregated_gradient(Stub(), [1, 2], 4, None), [2, 2])
    np.testing.assert_array_equal(aggregated_gradient(lin, [0], 1, np.zeros(1)), [0.0])
    with pytest.raises(ValueError):
        aggregated_gradient(lin, [], 1, np.zeros(1))


def test_descent_examples():
    params = PqgaParams(alpha=1.0, eta=1.0, gamma=1.0, steps=1)
    x = np.array([1.0])
    np.testing.assert_array_equal(multi_step_descent(interval([0.0]), x, [0], 1, params), [0.0])
    np.testing.assert_array_equal(multi_step_descent(interval([3.0]), x, [0], 1, params), [1.0])
    np.testing.assert_array_equal(
        multi_step_descent(interval([3.0]), x, [0], 1, params.replace(steps=0)), x
    )


# subproblem

def grid_argmin(fun, lo=-1.0, hi=1.0, h=1e-6):
    xs = np.arange(lo, hi + h / 2, h)
    return xs[np.argmin(fun(xs))]


def test_subproblem_unconstrained_stationary_point():
    prob = interval([-1.0])  # gradient 2 at 0
    params = PqgaParams(1.0, 1.0, 1.0, inner_tol=1e-12)
    res = solve_period_subproblem(prob, np.zeros(1), np.zeros(1), QueueState([0.0]), [-1.0],
                                  1, 1, [0], params)
    assert res.point[0] == pytest.approx(-0.5, abs=1e-10)
    assert not res.closed_form


def test_subproblem_with_queue_price():
    prob = interval([-1.0])
    params = PqgaParams(1.0, 1.0, 1.0, inner_tol=1e-12)
    res = solve_period_subproblem(prob, np.zeros(1), np.zeros(1), QueueState([1.0]), [0.0],
                                  1, 1, [0], params)
    assert res.point[0] == pytest.approx(-0.75, abs=1e-10)
    x_grid = grid_argmin(lambda x: 2 * x + 2 * x**2 + x)
    assert abs(res.point[0] - x_grid) <= 1e-5


def test_subproblem_huge_price_clamps():
    prob = interval([-1.0])
    params = PqgaParams(1.0, 1.0, 1.0, inner_tol=1e-12)
    res = solve_period_subproblem(prob, np.zeros(1), np.zeros(1), QueueState([1e3]), [0.0],
                                  1, 1, [0], params)
    assert res.point[0] == pytest.approx(-1.0, abs=1e-12)
    assert grid_argmin(lambda x: 2 * x + 2 * x**2 + 1e3 * x) == pytest.approx(-1.0)


def test_subproblem_matches_grid_2d(rng):
    for _ in range(5):
        prob = make_tracking_problem(rng, 3, dim=2, n_constraints=1, slack=0.2)
        params = PqgaParams(1.3, 0.7, 1.0, inner_tol=1e-12)
        x_prev = prob.sample_short_term(rng, 1)[0]
        x_tilde = prob.sample_short_term(rng, 1)[0]
        q = QueueState(rng.uniform(0, 2, 1))
        res = solve_period_subproblem(prob, x_prev, x_tilde, q, prob.constraint(x_prev),
                                      2, 3, [0, 1], params)
        w = penalty_weights(q, prob.constraint(x_prev), 1.0, 2, 3)
        lin = aggregated_gradient(prob, [0, 1], 2, x_tilde)
        h = 2e-3
        g = np.arange(-1, 1 + h / 2, h)
        X, Y = np.meshgrid(g, g)
        P = np.stack([X.ravel(), Y.ravel()], 1)
        P = P[np.sum(P**2, 1) <= 1]
        obj = ((P - x_tilde) @ lin + 1.3 * np.sum((P - x_tilde) ** 2, 1)
               + 0.7 * np.sum((P - x_prev) ** 2, 1) + (P @ prob.A.T - prob.b) @ w)
        assert np.linalg.norm(P[np.argmin(obj)] - res.point) <= 10 * h


def test_subproblem_reports_stall():
    prob = interval([-1.0])
    params = PqgaParams(1.0, 1.0, 1.0, inner_tol=1e-15, inner_max_iter=1)
    with pytest.raises(SubproblemError) as info:
        solve_period_subproblem(prob, np.array([0.9]), np.array([0.9]), QueueState([0.0]),
                                [0.0], 1, 1, [0], params)
    assert info.value.residual > 0
    assert info.value.iterate.shape == (1,)


def test_penalty_weights_nonnegative():
    w = penalty_weights(QueueState([0.0, 2.0]), [-1e-17, -1.0], 1.0, 1, 3)
    np.testing.assert_array_equal(w, [0.0, 3.0])


def test_params_validation():
    with pytest.raises(ValueError):
        PqgaParams(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        PqgaParams(1.0, 1.0, 1.0, steps=-1)
    with pytest.raises(ValueError):
        PqgaParams(1.0, 1.0, 1.0, steps=1.5)


# full step and runs

def test_step_fixed_point():
    prob = interval([0.3, 0.3], b=0.3)  # g(0.3) = 0
    sched = make_schedule([1, 1], [0])
    params = PqgaParams(1.0, 1.0, 1.0, steps=2, inner_tol=1e-13)
    state = PqgaState(np.array([0.3]), QueueState([0.0]), 0)
    x, q, report = pqga_step(state, [0], sched, params, prob)
    assert x[0] == pytest.approx(0.3, abs=1e-12)
    assert q.norm == 0.0
    assert not report.held


def test_step_holds_decision_without_feedback():
    prob = interval([0.0, 0.0], b=0.25)
    sched = make_schedule([2, 2], [0])
    params = PqgaParams(1.0, 1.0, 1.0)
    state = PqgaState(np.array([0.75]), QueueState([0.0]), 0)
    x, q, report = pqga_step(state, [], sched, params, prob)
    np.testing.assert_array_equal(x, [0.75])
    np.testing.assert_allclose(q.backlog, [1.0])
    assert report.held


def hand_replay(prob, x0, slots, durations, alpha, eta, gamma):
    """Closed-form 1-D replay: one feedback per period, no descent steps."""
    a, b = prob.A[0, 0], prob.b[0]
    x, q, xs = x0, 0.0, [x0]
    for i in range(len(durations) - 1):
        T, Tn = durations[i], durations[i + 1]
        gx = a * x - b
        q_next = max(-gamma * T * gx, q + gamma * T * gx)
        w = max(q_next + gamma * T * gx, 0.0) * gamma * Tn
        lin = T * 2 * (x - prob.targets[slots[i], 0])
        x = float(np.clip(x - (lin + w * a) / (2 * (alpha + eta)), -1, 1))
        q = q_next
        xs.append(x)
    return np.array(xs)


def test_run_matches_hand_replay():
    prob = interval([0.9, -0.4, 0.7, 0.2, 0.0, 0.0, 0.0], b=0.1)
    sched = make_schedule([2, 1, 3, 1], [0])
    params = PqgaParams(2.0, 1.5, 0.8, inner_tol=1e-14, inner_max_iter=100_000)
    run = run_pqga(prob, sched, params, np.array([0.0]))
    slots = [sched.deliverable(i)[0] for i in range(4)]
    expect = hand_replay(prob, 0.0, slots, sched.durations, 2.0, 1.5, 0.8)
    np.testing.assert_allclose(run.decisions[:, 0], expect, atol=1e-10)
    assert len(run.reports) == 3


def test_single_period_run():
    prob = interval([0.5] * 5)
    sched = make_schedule([5], [0])
    run = run_pqga(prob, sched, PqgaParams(1.0, 1.0, 1.0), np.array([0.2]))
    np.testing.assert_array_equal(run.decisions, [[0.2]])
    assert run.reports == []
    # g(0.2) = -0.3, so the lower branch gives 1.5
    np.testing.assert_allclose(run.final_queue, [1.5])


def test_run_rejects_infeasible_start():
    prob = interval([0.0])
    with pytest.raises(ValueError):
        run_pqga(prob, make_schedule([1], [0]), PqgaParams(1, 1, 1), np.array([2.0]))


def test_run_aborts_with_partial_trace():
    prob = interval([0.0] * 4)
    sched = make_schedule([1, 1, 1, 1], [0])
    params = PqgaParams(1.0, 1.0, 1.0, inner_tol=1e-15, inner_max_iter=1)
    with pytest.raises(RunAborted) as info:
        run_pqga(prob, sched, params, np.array([0.9]))
    assert len(info.value.decisions) >= 1


def test_decisions_stay_in_short_term_set(rng):
    prob = make_tracking_problem(rng, 120, dim=3, n_constraints=2, slack=0.05)
    sched = make_schedule([4, 2] * 20, {4: [0, 2], 2: [1]})
    run = run_pqga(prob, sched, PqgaParams(3.0, 2.0, 1.5, steps=3), np.zeros(3))
    assert np.all(np.linalg.norm(run.decisions, axis=1) <= 1 + 1e-9)
    for i in range(sched.num_periods):
        assert np.all(run.queues[i] >= 0)
