"""Downlink precoding for a base station shared by several service providers.

The infrastructure owner picks one global precoder ``V`` (N antennas by K
users) per update period. Each provider asks for the received signals its
own zero-forcing precoder would produce; the loss is the squared mismatch
``||H V - D||_F^2`` and the long-term constraint caps the average transmit
power. Decisions are complex matrices embedded as real vectors by
interleaving real and imaginary parts.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bounds import AssumptionConstants, mimo_constants
from .problem import ProblemConstants, ProblemInstance, project_ball
from .seeding import stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellConfig:
    """Cell geometry, radio parameters and channel model.

    ``channel_normalization="mean_gain"`` rescales the large-scale gains to
    average ``gain_scale`` and the noise power by the same factor, which
    leaves every SINR and normalized deviation unchanged but moves the
    loss constants away from the ~1e-12 range of raw path loss.
    """

    N: int = 32
    M: int = 4
    K_m: int = 2
    P_max_dbm: float = 33.0
    P_bar_dbm: float = 30.0
    N0_dbm_hz: float = -174.0
    NF_db: float = 10.0
    B_W: float = 15e3
    alpha_h: float = 0.997
    sigma_phi_db: float = 8.0
    cell_radius_m: float = 500.0
    min_distance_m: float = 10.0
    channel_normalization: str = "none"
    gain_scale: float = 1.0
    channel_bound: float | None = None

    def __post_init__(self):
        for name in ("N", "M", "K_m"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.K_m > self.N:
            raise ValueError("each provider needs at most N users for zero forcing")
        if dbm_to_watt(self.P_bar_dbm) > dbm_to_watt(self.P_max_dbm):
            raise ValueError("average power limit exceeds the peak power limit")
        if not 0 <= self.alpha_h <= 1:
            raise ValueError("alpha_h must lie in [0, 1]")
        if self.B_W <= 0 or self.sigma_phi_db < 0:
            raise ValueError("bandwidth must be positive and shadowing std nonnegative")
        if not 0 < self.min_distance_m < self.cell_radius_m:
            raise ValueError("need 0 < min_distance_m < cell_radius_m")
        if self.channel_normalization not in ("none", "mean_gain"):
            raise ValueError("channel_normalization must be 'none' or 'mean_gain'")
        if self.gain_scale <= 0:
            raise ValueError("gain_scale must be positive")
        if self.channel_bound is not None and self.channel_bound <= 0:
            raise ValueError("channel_bound must be positive")

    @property
    def K(self) -> int:
        return self.M * self.K_m

    @property
    def p_max(self) -> float:
        return dbm_to_watt(self.P_max_dbm)

    @property
    def p_bar(self) -> float:
        return dbm_to_watt(self.P_bar_dbm)

    @property
    def noise_power(self) -> float:
        """Receiver noise in watts, summing the dB quantities."""
        return dbm_to_watt(self.N0_dbm_hz + 10 * math.log10(self.B_W) + self.NF_db)


def dbm_to_watt(p_dbm: float) -> float:
    return 10 ** ((p_dbm - 30) / 10)


def in_hexagon(xy: np.ndarray, radius: float) -> np.ndarray:
    """Membership in the flat-topped regular hexagon of circumradius ``radius``."""
    x, y = np.abs(xy[..., 0]), np.abs(xy[..., 1])
    return (y <= math.sqrt(3) / 2 * radius) & (math.sqrt(3) * x + y <= math.sqrt(3) * radius)


def place_users(config: CellConfig, rng: np.random.Generator, count: int | None = None,
                max_draws: int = 1_000_000):
    """Uniform positions in the hexagonal cell, at least ``min_distance_m`` from the BS.

    Candidates are drawn uniformly from the circumscribed disk and rejected
    outside the hexagon or too close to the center. Returns
    ``(distances, positions)``.
    """
    count = config.K if count is None else count
    R, rmin = config.cell_radius_m, config.min_distance_m
    kept, drawn = [], 0
    need = count
    while need > 0:
        batch = max(2 * need, 16)
        if drawn + batch > max_draws:
            raise RuntimeError("user placement exceeded its draw budget")
        drawn += batch
        r = R * np.sqrt(rng.uniform(size=batch))
        th = rng.uniform(0, 2 * np.pi, size=batch)
        xy = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        ok = in_hexagon(xy, R) & (r >= rmin)
        kept.append(xy[ok][:need])
        need -= len(kept[-1])
    pos = np.concatenate(kept)
    return np.hypot(pos[:, 0], pos[:, 1]), pos


def pathloss_db(d, shadowing_db=0.0):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    return -31.54 - 33 * np.log10(d) - shadowing_db


def pathloss_shadowing(d, rng: np.random.Generator, config: CellConfig) -> np.ndarray:
    """Linear large-scale gains with real Gaussian shadowing in dB."""
    d = np.asarray(d, dtype=float)
    psi = rng.normal(0.0, config.sigma_phi_db, size=d.shape)
    return 10 ** (pathloss_db(d, psi) / 10)


def complex_normal(rng, shape, variance):
    """Circularly symmetric complex Gaussian entries with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2)
    return scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape))


def channel_step(h_prev: np.ndarray, gains, alpha_h: float, rng: np.random.Generator):
    """One Gauss-Markov step; rows of ``h_prev`` are users, ``gains`` their variances.

    The innovation variance ``(1 - alpha_h^2) * gain`` keeps the per-entry
    variance stationary.
    """
    if not 0 <= alpha_h <= 1:
        raise ValueError("alpha_h must lie in [0, 1]")
    var = (1 - alpha_h**2) * np.asarray(gains, dtype=float)
    var = var[:, None] if np.ndim(h_prev) == 2 else var
    if alpha_h == 1:
        return np.array(h_prev, dtype=complex)
    return alpha_h * h_prev + complex_normal(rng, np.shape(h_prev), var)


@dataclass
class VirtualizationDemand:
    D: np.ndarray
    W_blocks: list[np.ndarray]
    scales: np.ndarray

    @property
    def stacked_precoder(self) -> np.ndarray:
        """The providers' own precoders side by side (N by K)."""
        return np.concatenate(self.W_blocks, axis=1)


def zf_demand(H: np.ndarray, K_m: int, p_max: float, M: int) -> VirtualizationDemand:
    """Per-provider zero-forcing precoders with power ``p_max / M`` each.

    Rows of ``H`` are grouped by provider, ``K_m`` consecutive users each.
    """
    K, N = H.shape
    if K != K_m * M:
        raise ValueError(f"channel has {K} users, expected {K_m * M}")
    D = np.zeros((K, K), dtype=complex)
    blocks, scales = [], np.zeros(M)
    for m in range(M):
        rows = slice(m * K_m, (m + 1) * K_m)
        Hm = H[rows]
        gram = Hm @ Hm.conj().T
        if np.linalg.matrix_rank(Hm) < K_m:
            raise ValueError(f"provider {m}: channel block is rank deficient")
        W = np.linalg.solve(gram, Hm).conj().T
        scales[m] = math.sqrt(p_max / M) / np.linalg.norm(W)
        W = scales[m] * W
        blocks.append(W)
        D[rows, rows] = Hm @ W
    return VirtualizationDemand(D, blocks, scales)


def precoding_deviation(H: np.ndarray, V: np.ndarray, D: np.ndarray) -> float:
    if H.shape[1] != V.shape[0] or (H.shape[0], V.shape[1]) != D.shape:
        raise ValueError("shape mismatch between channel, precoder and demand")
    r = H @ V - D
    return float(np.vdot(r, r).real)


def deviation_gradient(H, V, D):
    """Gradient with respect to the conjugate precoder, ``H^H (H V - D)``."""
    return H.conj().T @ (H @ V - D)


def power_constraint_g(V: np.ndarray, p_bar: float) -> float:
    return float(np.vdot(V, V).real) - p_bar


def _ball(X, p_max):
    n2 = float(np.vdot(X, X).real)
    if n2 <= p_max:
        return X
    return math.sqrt(p_max) * X / math.sqrt(n2)


def _aggregate(Hs, Ds, V, duration):
    total = deviation_gradient(Hs[0], V, Ds[0])
    for H, D in zip(Hs[1:], Ds[1:]):
        total = total + deviation_gradient(H, V, D)
    return (duration / len(Hs)) * total


def pqga_mimo_inner_step(V_prev, Hs, Ds, duration, alpha, p_max):
    """One aggregated gradient step on the precoder followed by the power-ball projection."""
    if not np.all(np.isfinite(V_prev)):
        raise ValueError("nonfinite precoder")
    X = V_prev - _aggregate(Hs, Ds, V_prev, duration) / alpha
    return _ball(X, p_max)


def _decision(V_tilde, V_prev, weight, Hs, Ds, duration, alpha, eta, p_max):
    X = (alpha * V_tilde + eta * V_prev - _aggregate(Hs, Ds, V_tilde, duration)) / (
        alpha + eta + weight
    )
    if not np.all(np.isfinite(X)):
        raise ValueError("nonfinite precoder")
    return _ball(X, p_max)


def pqga_mimo_decision(
    V_tilde, V_prev, q_next, g_prev, duration, next_duration, Hs, Ds, alpha, eta, gamma, p_max
):
    """Closed-form period decision: a scaled proximal point, projected on the power ball."""
    weight = max(float(q_next) + gamma * duration * float(g_prev), 0.0) * gamma * next_duration
    return _decision(V_tilde, V_prev, weight, Hs, Ds, duration, alpha, eta, p_max)


class OracleBracketError(RuntimeError):
    pass


def per_period_mimo_oracle(Hs, Ds, weights, p_bar, rtol=1e-12):
    """Minimize ``sum_s w_s ||H_s V - D_s||^2`` over ``||V||_F^2 <= p_bar``.

    The solution is ``V(lam) = (sum w H^H H + lam I)^-1 sum w H^H D`` with the
    smallest ``lam >= 0`` meeting the power limit; ``lam`` is found by a
    bracketing root search on the power. Returns ``(V, lam, iterations)``.
    """
    if p_bar <= 0:
        raise ValueError("power limit must be positive")
    A = sum(w * H.conj().T @ H for H, w in zip(Hs, weights))
    Bm = sum(w * H.conj().T @ D for H, D, w in zip(Hs, Ds, weights))
    lam_vals, U = np.linalg.eigh(A)
    active = lam_vals > 1e-12 * max(lam_vals.max(), 1e-300)
    # the right-hand side lies in the range of A; rounding leaks into the
    # null space would be amplified by 1/lam**2, so those rows are zeroed
    C = np.where(active[:, None], U.conj().T @ Bm, 0.0)
    row_energy = np.sum(np.abs(C) ** 2, axis=1)

    def power(lam):
        if lam == 0:
            return float(np.sum(row_energy[active] / lam_vals[active] ** 2))
        return float(np.sum(row_energy[active] / (lam_vals[active] + lam) ** 2))

    def solution(lam):
        if lam == 0:
            inv = np.where(active, 1 / np.where(active, lam_vals, 1), 0.0)
        else:
            inv = 1 / (lam_vals + lam)
        return U @ (inv[:, None] * C)

    if power(0.0) <= p_bar:
        return solution(0.0), 0.0, 0
    hi = math.sqrt(float(row_energy.sum()) / p_bar)
    if not power(hi) <= p_bar:
        raise OracleBracketError("failed to bracket the power multiplier")
    lam, info = brentq(lambda v: power(v) - p_bar, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                       full_output=True)
    return solution(lam), lam, info.iterations


def sinr_and_rate(H: np.ndarray, V: np.ndarray, noise_power: float):
    """Per-user SINR and rate ``log2(1 + SINR)`` with user ``k`` served by column ``k``."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    G = np.abs(H @ V) ** 2
    signal = np.diag(G).copy()
    interference = G.sum(axis=1) - signal
    sinr = signal / (interference + noise_power)
    return sinr, np.log2(1 + sinr)


def embed(V: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(V, dtype=complex).view(float).ravel()


def unembed(x: np.ndarray, shape) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=float).view(complex).reshape(shape)


@dataclass
class MimoScenario:
    """One realization of channels and demands over the horizon."""

    config: CellConfig
    channels: np.ndarray
    demands: np.ndarray
    gains: np.ndarray
    distances: np.ndarray
    noise_power: float
    initial_demand: VirtualizationDemand = field(repr=False)

    @property
    def horizon(self) -> int:
        return len(self.channels)

    @property
    def max_channel_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.channels, axis=(1, 2))))


def generate_scenario(config: CellConfig, horizon: int, seed: int) -> MimoScenario:
    """Draw placements, gains and a channel trajectory from labeled streams of ``seed``."""
    d, _ = place_users(config, stream(seed, "placement"))
    gains = pathloss_shadowing(d, stream(seed, "shadowing"), config)
    noise = config.noise_power
    if config.channel_normalization == "mean_gain":
        factor = config.gain_scale / gains.mean()
        gains, noise = gains * factor, noise * factor
    rng = stream(seed, "channel")
    K, N = config.K, config.N
    h = complex_normal(rng, (K, N), gains[:, None])
    channels = np.empty((horizon, K, N), dtype=complex)
    demands = np.empty((horizon, K, K), dtype=complex)
    first = None
    for t in range(horizon):
        channels[t] = h
        dem = zf_demand(h, config.K_m, config.p_max, config.M)
        demands[t] = dem.D
        if t == 0:
            first = dem
        h = channel_step(h, gains, config.alpha_h, rng)
    return MimoScenario(config, channels, demands, gains, d, noise, first)


class MimoProblem(ProblemInstance):
    """Precoding deviation with a long-term average power limit."""

    def __init__(self, scenario: MimoScenario, t_max: int = 1):
        self.scenario = scenario
        cfg = scenario.config
        self.N, self.K = cfg.N, cfg.K
        self.shape = (self.N, self.K)
        self.dim = 2 * self.N * self.K
        self.n_constraints = 1
        self.p_max, self.p_bar = cfg.p_max, cfg.p_bar
        self.channel_bound = cfg.channel_bound or scenario.max_channel_norm
        self.assumption_constants = mimo_constants(self.p_max, self.p_bar, self.channel_bound, t_max)
        fields = asdict(self.assumption_constants)
        fields.pop("t_max")
        self.constants = ProblemConstants(**fields)
        self._H = scenario.channels
        self._D = scenario.demands

    def V(self, x):
        return unembed(x, self.shape)

    def loss(self, t, x):
        return precoding_deviation(self._H[t], self.V(x), self._D[t])

    def loss_gradient(self, t, x):
        return embed(2 * deviation_gradient(self._H[t], self.V(x), self._D[t]))

    def constraint(self, x):
        return np.array([float(x @ x) - self.p_bar])

    def constraint_jacobian(self, x):
        return 2 * x[None, :]

    def constraint_curvature(self):
        return np.array([2.0])

    def project_short_term(self, x):
        return project_ball(x, self.p_max)

    def project_feasible(self, x):
        return project_ball(x, self.p_bar)

    def _blocks(self, slots):
        return [self._H[s] for s in slots], [self._D[s] for s in slots]

    def closed_form_descent(self, x, slots, duration, alpha):
        Hs, Ds = self._blocks(slots)
        return embed(pqga_mimo_inner_step(self.V(x), Hs, Ds, duration, alpha, self.p_max))

    def closed_form_decision(self, x_prev, x_tilde, penalty, slots, duration, params):
        Hs, Ds = self._blocks(slots)
        V = _decision(self.V(x_tilde), self.V(x_prev), float(penalty[0]), Hs, Ds, duration,
                      params.alpha, params.eta, self.p_max)
        return embed(V)

    def weighted_optimum(self, slots, weights):
        Hs, Ds = self._blocks(slots)
        V, lam, iters = per_period_mimo_oracle(Hs, Ds, weights, self.p_bar)
        residual = 0.0 if lam == 0 else abs(float(np.vdot(V, V).real) - self.p_bar) / self.p_bar
        return embed(V), residual, iters

    def slot_metrics(self, t, x):
        V = self.V(x)
        H, D = self._H[t], self._D[t]
        dn = float(np.vdot(D, D).real)
        _, rates = sinr_and_rate(H, V, self.scenario.noise_power)
        return {
            "deviation": precoding_deviation(H, V, D) / dn if dn > 0 else None,
            "power": float(np.vdot(V, V).real),
            "rate_sum": float(rates.sum()),
            "users": self.K,
        }

    def sample_short_term(self, rng, size):
        d = rng.normal(size=(size, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d * math.sqrt(self.p_max) * rng.uniform(size=(size, 1)) ** (1 / self.dim)

    def initial_decision(self, mode: str = "zero") -> np.ndarray:
        """``"zero"`` (idle transmitter) or ``"demand"``: the providers' own
        precoders at the first slot, scaled to the average power limit."""
        if mode == "zero":
            return np.zeros(self.dim)
        if mode == "demand":
            W = self.scenario.initial_demand.stacked_precoder
            return embed(W * math.sqrt(self.p_bar) / np.linalg.norm(W))
        raise ValueError(f"unknown initial decision {mode!r}")

    def bound_constants(self, t_max: int) -> AssumptionConstants:
        return mimo_constants(self.p_max, self.p_bar, self.channel_bound, t_max)
