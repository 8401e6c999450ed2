"""Problem abstraction shared by the solver, the oracles and the applications."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProblemConstants:
    """Regularity constants of a constrained online problem.

    grad_bound        bound on every loss gradient norm over the short-term set
    smoothness        each loss is ``2 * smoothness``-smooth
    strong_convexity  each loss is ``2 * strong_convexity``-strongly convex
    constraint_lipschitz  Lipschitz constant of the constraint map
    constraint_bound  bound on the constraint map norm
    slater_margin     some feasible point has every constraint <= -margin
    diameter          diameter of the short-term set
    """

    grad_bound: float
    smoothness: float
    strong_convexity: float
    constraint_lipschitz: float
    constraint_bound: float
    slater_margin: float
    diameter: float

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")


def project_ball(x: np.ndarray, radius_sq: float, center: np.ndarray | None = None) -> np.ndarray:
    """Euclidean projection onto ``{y : ||y - center||^2 <= radius_sq}``."""
    if radius_sq <= 0:
        raise ValueError("radius_sq must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot project a nonfinite point")
    c = np.zeros_like(x) if center is None else center
    d = x - c
    n2 = float(d @ d)
    if n2 <= radius_sq:
        return x.copy()
    return c + d * (np.sqrt(radius_sq) / np.sqrt(n2))


def project_halfspace(x: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Projection onto ``{y : normal @ y <= offset}``."""
    viol = float(normal @ x) - offset
    if viol <= 0:
        return x.copy()
    return x - viol / float(normal @ normal) * normal


def dykstra_projection(
    x: np.ndarray,
    projections: Sequence[Callable[[np.ndarray], np.ndarray]],
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Projection onto an intersection of convex sets by Dykstra's method.

    Plain alternating projections only find *a* point of the intersection;
    the correction terms here make the limit the Euclidean projection.
    """
    y = np.asarray(x, dtype=float).copy()
    corr = [np.zeros_like(y) for _ in projections]
    for _ in range(max_iter):
        prev = y
        for k, proj in enumerate(projections):
            z = proj(y + corr[k])
            corr[k] = y + corr[k] - z
            y = z
        if np.linalg.norm(y - prev) <= tol:
            return y
    return y


class ProblemInstance:
    """Interface for a constrained online convex problem over real vectors.

    Subclasses supply the per-slot loss and gradient, the long-term constraint
    map with its Jacobian, and projections onto the short-term set ``X0`` and
    onto the feasible set ``X = X0 ∩ {g <= 0}``. Complex decision spaces are
    handled by the subclass through a real embedding.
    """

    dim: int
    n_constraints: int
    constants: ProblemConstants

    def loss(self, t: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def loss_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def constraint(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def constraint_jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def constraint_curvature(self) -> np.ndarray:
        """Lipschitz constants of each constraint gradient (zeros if affine)."""
        return np.zeros(self.n_constraints)

    def project_short_term(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project_feasible(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # Optional fast paths; returning None falls back to the generic routines.
    def closed_form_decision(self, x_prev, x_tilde, penalty, slots, duration, params):
        return None

    def weighted_optimum(self, slots, weights):
        """Minimizer of ``sum_k weights[k] * f_{slots[k]}`` over the feasible set."""
        return None

    def slot_metrics(self, t: int, x: np.ndarray) -> dict | None:
        return None

    def sample_short_term(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def check_convex_constraints(self, rng: np.random.Generator, samples: int = 200, tol=1e-9):
        """Midpoint test of constraint convexity on random pairs from ``X0``.

        The decision subproblem is only well posed for convex constraints.
        """
        pts = self.sample_short_term(rng, 2 * samples)
        for a, b in zip(pts[:samples], pts[samples:]):
            mid = self.constraint(0.5 * (a + b))
            avg = 0.5 * (self.constraint(a) + self.constraint(b))
            if np.any(mid > avg + tol * (1 + np.abs(avg))):
                raise ValueError("constraint map failed the midpoint convexity test")


class QuadraticTrackingProblem(ProblemInstance):
    """Track a moving target under affine long-term constraints.

    Loss at slot ``t`` is ``(x - c_t)^T diag(curvature) (x - c_t)``; the
    short-term set is the ball of radius ``radius`` around the origin and the
    long-term constraints are ``A x - b <= 0`` with ``b > 0`` so the origin is
    strictly feasible.
    """

    def __init__(self, targets, curvature, radius, A, b):
        self.targets = np.asarray(targets, dtype=float)
        self.curvature = np.asarray(curvature, dtype=float)
        self.radius = float(radius)
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float)
        self.dim = self.targets.shape[1]
        self.n_constraints = self.A.shape[0]
        if self.curvature.shape != (self.dim,) or np.any(self.curvature <= 0):
            raise ValueError("curvature must be a positive vector of the decision size")
        if self.A.shape[1] != self.dim or self.b.shape != (self.n_constraints,):
            raise ValueError("constraint shapes do not match the decision size")
        if np.any(self.b <= 0):
            raise ValueError("offsets b must be positive so that the origin is interior")
        target_norm = float(np.max(np.linalg.norm(self.targets, axis=1)))
        a_norm = float(np.linalg.norm(self.A, 2))
        self.constants = ProblemConstants(
            grad_bound=2 * float(self.curvature.max()) * (self.radius + target_norm),
            smoothness=float(self.curvature.max()),
            strong_convexity=float(self.curvature.min()),
            constraint_lipschitz=a_norm,
            constraint_bound=a_norm * self.radius + float(np.linalg.norm(self.b)),
            slater_margin=float(self.b.min()),
            diameter=2 * self.radius,
        )
        self._half = [
            (lambda y, a=a, c=c: project_halfspace(y, a, c)) for a, c in zip(self.A, self.b)
        ]

    def loss(self, t, x):
        d = x - self.targets[t]
        return float(d @ (self.curvature * d))

    def loss_gradient(self, t, x):
        return 2 * self.curvature * (x - self.targets[t])

    def constraint(self, x):
        return self.A @ x - self.b

    def constraint_jacobian(self, x):
        return self.A

    def project_short_term(self, x):
        return project_ball(x, self.radius**2)

    def project_feasible(self, x):
        y = self.project_short_term(x)
        if np.all(self.constraint(y) <= 0):
            return y
        ball = lambda z: project_ball(z, self.radius**2)
        return dykstra_projection(x, [ball, *self._half])

    def sample_short_term(self, rng, size):
        d = rng.normal(size=(size, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(size, 1)) ** (1 / self.dim)
        return d * r


def make_tracking_problem(
    rng: np.random.Generator,
    horizon: int,
    dim: int = 2,
    n_constraints: int = 1,
    radius: float = 1.0,
    curvature: Sequence[float] | None = None,
    drift: float = 0.02,
    target_scale: float = 0.8,
    slack: float = 0.3,
) -> QuadraticTrackingProblem:
    """Random instance whose target wanders slowly inside a ball.

    ``slack`` sets the constraint offsets relative to the radius; small values
    make the long-term constraints bind at the target, large values leave
    them inactive.
    """
    if curvature is None:
        curvature = np.linspace(0.5, 1.0, dim)
    steps = rng.normal(scale=drift, size=(horizon, dim))
    path = np.cumsum(steps, axis=0) + rng.uniform(-0.5, 0.5, size=dim) * target_scale
    norms = np.linalg.norm(path, axis=1, keepdims=True)
    path = np.where(norms > target_scale, path * target_scale / norms, path)
    A = rng.normal(size=(n_constraints, dim))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = np.full(n_constraints, slack * radius)
    return QuadraticTrackingProblem(path, curvature, radius, A, b)
