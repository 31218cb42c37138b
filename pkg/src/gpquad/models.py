"""Benchmark state-space models and moment-integral test functions.

* univariate non-linear growth model (UNGM), the standard strongly
  non-linear scalar benchmark with a time-indexed transition;
* coordinated-turn bearings-only tracking with four angle sensors;
* the radial moment integrands (1 + x^T x)^(p/2) used to compare
  integration rules.

Model functions follow the filtering module's vectorized contract:
states arrive as (N, n) batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filtering import AdditiveStateSpaceModel, GaussianState

__all__ = [
    "Trajectory",
    "BotConfig",
    "ungm_model",
    "bot_model",
    "moment_integrand",
    "simulate",
]


@dataclass(frozen=True)
class Trajectory:
    """Simulated states x_0..x_T and measurements y_1..y_T."""

    states: np.ndarray        # (T+1, n)
    measurements: np.ndarray  # (T, d)
    seed: int

    def __post_init__(self):
        if self.states.shape[0] != self.measurements.shape[0] + 1:
            raise ValueError("need exactly one more state than measurements")
        if not (np.all(np.isfinite(self.states))
                and np.all(np.isfinite(self.measurements))):
            raise ValueError("trajectory contains non-finite values")


def ungm_model() -> AdditiveStateSpaceModel:
    """Univariate non-linear growth model.

    x_k = x_{k-1}/2 + 25 x_{k-1}/(1+x_{k-1}^2) + 8 cos(1.2 k) + q,
    y_k = x_k^2/20 + r, with q ~ N(0, 10), r ~ N(0, 1) and prior N(0, 5)
    (scalar variances).  The cosine argument uses the destination index k.
    """

    def transition(x, k):
        return x / 2.0 + 25.0 * x / (1.0 + x**2) + 8.0 * np.cos(1.2 * k)

    def measurement(x, k):
        return x**2 / 20.0

    return AdditiveStateSpaceModel(
        transition=transition,
        measurement=measurement,
        process_cov=np.array([[10.0]]),
        measurement_cov=np.array([[1.0]]),
        prior=GaussianState(np.zeros(1), np.array([[5.0]])),
        state_dim=1,
        measurement_dim=1,
    )


_DEFAULT_SENSORS = 1e3 * np.array([
    [-1.5, 0.5],
    [1.0, 1.0],
    [-0.3, -1.5],
    [1.2, -1.1],
])

# |omega dt| below this uses the series limits sin(w dt)/w -> dt,
# (1 - cos(w dt))/w -> w dt^2/2
_OMEGA_EPS = 1e-6


@dataclass(frozen=True)
class BotConfig:
    """Bearings-only tracking configuration.

    Geometry, noise levels and the prior are configuration, not constants;
    the defaults give a target turning inside the ring of four sensors.
    """

    sensors: np.ndarray = field(default_factory=lambda: _DEFAULT_SENSORS.copy())
    bearing_noise_std: float = 0.05      # radians
    dt: float = 1.0                      # seconds
    q1: float = 0.1                      # m^2 s^-3
    q2: float = 1.75e-4                  # s^-3
    steps: int = 100
    prior_mean: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 10.0, 0.0, -10.0, 0.05]))
    prior_cov: np.ndarray = field(
        default_factory=lambda: np.diag([100.0**2, 10.0**2, 100.0**2, 10.0**2, 0.05**2]))

    def __post_init__(self):
        sensors = np.atleast_2d(np.asarray(self.sensors, dtype=float))
        if sensors.shape != (4, 2):
            raise ValueError(f"exactly four 2-D sensors required, got {sensors.shape}")
        if self.bearing_noise_std <= 0 or self.dt <= 0:
            raise ValueError("bearing_noise_std and dt must be positive")
        object.__setattr__(self, "sensors", sensors)


def _turn_factors(omega: np.ndarray, dt: float):
    # sin(w dt)/w and (1 - cos(w dt))/w with series limits at w ~ 0
    w = np.asarray(omega, dtype=float)
    small = np.abs(w * dt) < _OMEGA_EPS
    w_safe = np.where(small, 1.0, w)
    sin_f = np.where(small, dt * (1.0 - (w * dt) ** 2 / 6.0),
                     np.sin(w_safe * dt) / w_safe)
    cos_f = np.where(small, w * dt**2 / 2.0 * (1.0 - (w * dt) ** 2 / 12.0),
                     (1.0 - np.cos(w_safe * dt)) / w_safe)
    return sin_f, cos_f


def bot_model(config: BotConfig | None = None) -> AdditiveStateSpaceModel:
    """Coordinated-turn dynamics with four bearing measurements.

    State (x1, dx1, x2, dx2, omega); the turn-rate-dependent transition
    matrix is applied as a non-linear function of the state's own omega,
    the process noise is the discretized white-noise-acceleration block
    per position/velocity pair plus q2*dt on the turn rate, and each
    sensor measures the four-quadrant bearing to the target.
    """
    cfg = config or BotConfig()
    dt = cfg.dt

    def transition(x, k):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pos1, vel1, pos2, vel2, omega = x.T
        sin_f, cos_f = _turn_factors(omega, dt)
        sin_wt = np.sin(omega * dt)
        cos_wt = np.cos(omega * dt)
        return np.column_stack([
            pos1 + sin_f * vel1 - cos_f * vel2,
            cos_wt * vel1 - sin_wt * vel2,
            pos2 + cos_f * vel1 + sin_f * vel2,
            sin_wt * vel1 + cos_wt * vel2,
            omega,
        ])

    def measurement(x, k):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dx = x[:, 0][:, None] - cfg.sensors[:, 0][None, :]
        dy = x[:, 2][:, None] - cfg.sensors[:, 1][None, :]
        return np.arctan2(dy, dx)

    wn_block = np.array([[dt**3 / 3.0, dt**2 / 2.0],
                         [dt**2 / 2.0, dt]])
    process = np.zeros((5, 5))
    process[:2, :2] = cfg.q1 * wn_block
    process[2:4, 2:4] = cfg.q1 * wn_block
    process[4, 4] = cfg.q2 * dt
    return AdditiveStateSpaceModel(
        transition=transition,
        measurement=measurement,
        process_cov=process,
        measurement_cov=cfg.bearing_noise_std**2 * np.eye(4),
        prior=GaussianState(cfg.prior_mean, cfg.prior_cov),
        state_dim=5,
        measurement_dim=4,
    )


def moment_integrand(exponent: int):
    """Radial test functions y(x) = (1 + x^T x)^(p/2) and y^2.

    Both are vectorized over (N, n) batches and return (N,) values.  The
    benchmark exponents are {1, -2, -3, -5}; other integers are accepted.
    """

    def y(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (1.0 + (x**2).sum(axis=1)) ** (exponent / 2.0)

    def y_squared(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (1.0 + (x**2).sum(axis=1)) ** float(exponent)

    return y, y_squared


def simulate(model: AdditiveStateSpaceModel, steps: int, seed: int) -> Trajectory:
    """Draw one trajectory of the model, deterministic per seed."""
    if steps < 1:
        raise ValueError(f"need steps >= 1, got {steps}")
    rng = np.random.default_rng(seed)
    n, d = model.state_dim, model.measurement_dim
    states = np.empty((steps + 1, n))
    measurements = np.empty((steps, d))
    prior = model.prior
    states[0] = rng.multivariate_normal(prior.mean, prior.cov)
    for k in range(1, steps + 1):
        drift = np.asarray(model.transition(states[k - 1][None, :], k),
                           dtype=float).reshape(n)
        states[k] = drift + rng.multivariate_normal(np.zeros(n), model.q_cov(k))
        if not np.all(np.isfinite(states[k])):
            raise FloatingPointError(f"simulation diverged at step {k}")
        projected = np.asarray(model.measurement(states[k][None, :], k),
                               dtype=float).reshape(d)
        measurements[k - 1] = projected + rng.multivariate_normal(
            np.zeros(d), model.r_cov(k))
    return Trajectory(states, measurements, seed)
