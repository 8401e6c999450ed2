"""Performance guarantees of the periodic solver and the parameter rules behind them.

Every bound takes the regularity constants of the problem plus the solver
parameters and returns a number; hypotheses the guarantee depends on are
checked and reported through :class:`HypothesisError` with the failed
inequality spelled out.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .algorithm import PqgaParams
from .problem import ProblemConstants


class HypothesisError(ValueError):
    """A parameter choice falls outside the regime a bound covers."""


@dataclass(frozen=True)
class AssumptionConstants:
    """Regularity constants plus the longest update period.

    grad_bound D, smoothness L, strong_convexity (varrho), constraint_lipschitz
    beta, constraint_bound G, slater_margin epsilon, diameter R.
    """

    grad_bound: float
    smoothness: float
    strong_convexity: float
    constraint_lipschitz: float
    constraint_bound: float
    slater_margin: float
    diameter: float
    t_max: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")

    @property
    def convexity_consistent(self) -> bool:
        """Whether the strong convexity constant is at most the smoothness constant.

        Every guarantee below assumes it; constants copied from closed-form
        formulas can break it for small channel bounds.
        """
        return self.strong_convexity <= self.smoothness * (1 + 1e-12)

    @classmethod
    def from_problem(cls, constants: ProblemConstants, t_max: int) -> AssumptionConstants:
        return cls(**asdict(constants), t_max=float(t_max))


def contraction_factor(alpha: float, strong_convexity: float) -> float:
    """``(alpha - varrho) / (alpha + varrho)``, the per-step shrink toward the period optimum."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (alpha - strong_convexity) / (alpha + strong_convexity)


def rho_power(rho: float, steps: int) -> float:
    """``rho ** steps`` evaluated in log space; ``0 ** 0 == 1``."""
    if steps == 0:
        return 1.0
    if rho <= 0:
        return 0.0
    return math.exp(steps * math.log(rho))


def _require(cond: bool, text: str):
    if not cond:
        raise HypothesisError(f"hypothesis violated: {text}")


def _check_general(c: AssumptionConstants, p: PqgaParams):
    _require(c.convexity_consistent, "strong convexity <= smoothness")
    L, beta = c.smoothness, c.constraint_lipschitz
    _require(
        p.alpha >= c.t_max * L * (1 - 1e-12),
        f"alpha >= T_max*L ({p.alpha:.6g} < {c.t_max * L:.6g})",
    )
    need = beta**2 * p.gamma**2 * c.t_max**2
    _require(
        p.eta >= need * (1 - 1e-12),
        f"eta >= beta^2*gamma^2*T_max^2 ({p.eta:.6g} < {need:.6g})",
    )


def dynamic_regret_bound(
    c: AssumptionConstants, p: PqgaParams, path_length: float, period_variation: float, T: int
) -> float:
    """Dynamic regret guarantee for any number of descent steps."""
    _check_general(c, p)
    D, R, G = c.grad_bound, c.diameter, c.constraint_bound
    rho = contraction_factor(p.alpha, c.strong_convexity)
    return (
        D**2 * c.t_max / (4 * p.alpha) * T
        + (p.alpha * rho_power(rho, p.steps) + p.eta) * (R**2 + 2 * R * path_length)
        + p.gamma**2 * G**2 * (c.t_max**2 + period_variation)
    )


def dynamic_regret_bound_large_steps(
    c: AssumptionConstants,
    p: PqgaParams,
    path_length: float,
    period_variation: float,
    grad_energy: float,
    T: int | None = None,
    xi: float | None = None,
) -> float:
    """Dynamic regret guarantee once ``2 rho^(J+1) < 1``; ``xi`` defaults to ``L``."""
    _require(c.convexity_consistent, "strong convexity <= smoothness")
    L, R, G = c.smoothness, c.diameter, c.constraint_bound
    xi = L if xi is None else xi
    if xi <= 0:
        raise ValueError("xi must be positive")
    rho = contraction_factor(p.alpha, c.strong_convexity)
    shrink = 2 * rho_power(rho, p.steps + 1)
    _require(shrink < 1, f"2*rho^(J+1) < 1 (got {shrink:.6g})")
    _require(p.alpha >= c.t_max * L * (1 - 1e-12), f"alpha >= T_max*L ({p.alpha:.6g})")
    need = max(4 * p.alpha, c.constraint_lipschitz**2 * p.gamma**2 * c.t_max**2)
    _require(
        p.eta >= need * (1 - 1e-12),
        f"eta >= max(4*alpha, beta^2*gamma^2*T_max^2) ({p.eta:.6g} < {need:.6g})",
    )
    inner = p.gamma**2 * G**2 * (c.t_max**2 + period_variation) + p.eta * R * (
        R + 2 * path_length
    )
    return grad_energy / (4 * xi) + (L + xi) / (1 - shrink) * (
        R**2 + inner / (p.alpha + c.strong_convexity)
    )


def static_regret_bound(
    c: AssumptionConstants, p: PqgaParams, period_variation: float, T: int
) -> float:
    """Static regret guarantee; independent of the benchmark path length."""
    _check_general(c, p)
    D, R, G = c.grad_bound, c.diameter, c.constraint_bound
    rho = contraction_factor(p.alpha, c.strong_convexity)
    return (
        D**2 * c.t_max / (4 * p.alpha) * T
        + (p.alpha * rho_power(rho, p.steps) + p.eta) * R**2
        + p.gamma**2 * G**2 * (c.t_max**2 + period_variation)
    )


def violation_bound(c: AssumptionConstants, p: PqgaParams) -> float:
    """Per-constraint bound on the accumulated long-term violation."""
    D, R, G, eps, tm = c.grad_bound, c.diameter, c.constraint_bound, c.slater_margin, c.t_max
    num = (p.alpha + p.eta) * R**2 + D * R * tm**2 + 2 * p.gamma**2 * G**2 * tm
    return 2 * G * tm + num / (eps * p.gamma**2)


def min_steps_for_contraction(rho: float) -> int:
    """Smallest ``J >= 0`` with ``2 rho^(J+1) < 1``.

    >>> min_steps_for_contraction(0.5)
    1
    """
    if not 0 <= rho < 1:
        raise ValueError(f"need 0 <= rho < 1 for a finite step count, got {rho}")
    if rho < 0.5:
        return 0
    # 2 rho^(J+1) < 1  <=>  J + 1 > log(1/2) / log(rho)
    j = max(0, math.floor(math.log(0.5) / math.log(rho)))
    while 2 * rho_power(rho, j + 1) >= 1:
        j += 1
    while j > 0 and 2 * rho_power(rho, j) < 1:
        j -= 1
    return j


REGIMES = {1, 2, 3, 4, 5, 6}


def select_params(
    c: AssumptionConstants,
    mode: int,
    T: int,
    nu: float | None = None,
    delta: float | None = None,
    kappa: float | None = None,
    target: str = "dynamic",
    steps: int = 0,
    **solver_options,
) -> PqgaParams:
    """Parameter prescriptions of the six regimes.

    1  known variation exponents: gamma^2 = T^kappa, alpha depends on ``target``
    2  unknown exponents: alpha = T_max L sqrt(T), gamma = 1
    3  many descent steps: alpha = T_max L, gamma = 1, eta = max(4 alpha, beta^2 T_max^2)
    4-6  as 1-3 with bounded period variation (gamma^2 = sqrt(T) for 4 and 5)

    ``target`` is ``"dynamic"`` or ``"static"`` for regimes 1 and 4. ``steps``
    is used as given for 1, 2, 4, 5 and replaced by the smallest admissible
    count for 3 and 6. ``delta`` only documents the regime and is unused.
    """
    if mode not in REGIMES:
        raise ValueError(f"unknown parameter regime {mode}; expected one of 1..6")
    if T < 1:
        raise ValueError("horizon must be positive")
    if target not in ("dynamic", "static"):
        raise ValueError("target must be 'dynamic' or 'static'")
    L, beta, tm = c.smoothness, c.constraint_lipschitz, c.t_max
    base = tm * L

    if mode in (3, 6):
        alpha = base
        gamma = 1.0
        eta = max(4 * alpha, beta**2 * gamma**2 * tm**2)
        rho = contraction_factor(alpha, c.strong_convexity)
        return PqgaParams(alpha, eta, gamma, min_steps_for_contraction(rho), **solver_options)

    if mode == 1:
        if kappa is None:
            raise ValueError("regime 1 requires kappa")
        if not 0 <= kappa <= 0.5:
            raise ValueError(f"kappa must lie in [0, 1/2], got {kappa}")
        gamma_sq = T**kappa
    elif mode == 2:
        gamma_sq = 1.0
    else:
        gamma_sq = math.sqrt(T)

    if mode in (1, 4) and target == "dynamic":
        if nu is None:
            raise ValueError(f"regime {mode} with a dynamic target requires nu")
        if not 0 <= nu <= 1:
            raise ValueError(f"nu must lie in [0, 1], got {nu}")
        alpha = base * T ** ((1 - nu) / 2)
    else:
        alpha = base * math.sqrt(T)
    gamma = math.sqrt(gamma_sq)
    eta = beta**2 * gamma_sq * tm**2
    return PqgaParams(alpha, eta, gamma, steps, **solver_options)


def mimo_constants(p_max: float, p_bar: float, channel_bound: float, t_max: int = 1):
    """Regularity constants of power-constrained precoding.

    ``channel_bound`` caps ``||H_t||_F`` over the horizon.
    """
    if not (p_max > 0 and p_bar > 0 and channel_bound > 0):
        raise ValueError("powers and channel bound must be positive")
    if p_bar > p_max:
        raise ValueError(f"average budget {p_bar} exceeds peak power {p_max}")
    root = math.sqrt(p_max)
    return AssumptionConstants(
        grad_bound=4 * channel_bound**2 * root,
        smoothness=channel_bound**2,
        strong_convexity=2.0,
        constraint_lipschitz=2 * root,
        constraint_bound=max(p_bar, p_max - p_bar),
        slater_margin=p_bar,
        diameter=2 * root,
        t_max=float(t_max),
    )


@dataclass
class BoundReport:
    re_dynamic: float | None
    re_dynamic_large_steps: float | None
    re_static: float | None
    vo: float
    rho: float
    params_used: PqgaParams
    path_length: float
    period_variation: float
    grad_energy: float
    horizon: int
    xi: float
    skipped: dict

    def as_dict(self) -> dict:
        out = asdict(self)
        out["params_used"] = asdict(self.params_used)
        return out


def bound_report(
    c: AssumptionConstants,
    p: PqgaParams,
    path_length: float,
    period_variation: float,
    grad_energy: float,
    T: int,
    xi: float | None = None,
) -> BoundReport:
    """Evaluate every applicable bound; inapplicable ones are recorded in ``skipped``."""
    skipped = {}
    values = {}
    calls = {
        "re_dynamic": lambda: dynamic_regret_bound(c, p, path_length, period_variation, T),
        "re_dynamic_large_steps": lambda: dynamic_regret_bound_large_steps(
            c, p, path_length, period_variation, grad_energy, T, xi
        ),
        "re_static": lambda: static_regret_bound(c, p, period_variation, T),
    }
    for key, fn in calls.items():
        try:
            values[key] = fn()
        except HypothesisError as exc:
            values[key] = None
            skipped[key] = str(exc)
    return BoundReport(
        **values,
        vo=violation_bound(c, p),
        rho=contraction_factor(p.alpha, c.strong_convexity),
        params_used=p,
        path_length=path_length,
        period_variation=period_variation,
        grad_energy=grad_energy,
        horizon=T,
        xi=c.smoothness if xi is None else xi,
        skipped=skipped,
    )


def estimate_growth_exponent(horizons, values) -> float:
    """Log-log slope of ``values`` against ``horizons`` (least squares).

    Nonpositive values carry no growth information and are dropped.
    """
    h = np.asarray(horizons, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (h > 0) & (v > 0)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[keep]), np.log(v[keep]), 1)
    return float(slope)
