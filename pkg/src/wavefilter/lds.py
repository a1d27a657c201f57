"""Linear dynamical system simulation and reference predictors.

State-space model with symmetric PSD transition:

    h_{t+1} = A (h_t + B x_t + eta_t),    y_t = C h_t + D x_t + xi_t,

seeded with h_1 = A h_0 and zero inputs before time 1, which matches the
closed form

    y_t = sum_{i=1}^{T-1} C A^i (B x_{t-i} + eta_{t-i}) + C A^t h_0 + D x_t + xi_t

exactly. The derivative predictor is the comparator map

    yhat_t = y_{t-1} + (CB + D) x_t - D x_{t-1}
             + sum_{i=1}^{T-1} C (A^i - A^{i-1}) B x_{t-i}
             + C (A^t - A^{t-1}) h_0,

which is what the relaxation represents exactly. Note that under the
closed form above its self-prediction gap on noiseless data is
``CB (x_t - x_{t-1})``, not zero; the identity is pinned by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "LdsParams",
    "Trajectory",
    "NoiseConfig",
    "InputGenerator",
    "PendulumConfig",
    "simulate",
    "impulse_response_output",
    "derivative_predictor",
    "diagonalize",
    "lipschitz_bound",
    "synthetic_system",
    "block_impulse_inputs",
    "pendulum_simulate",
]

_EIG_TOL = 1e-10


@dataclass(frozen=True)
class LdsParams:
    """System matrices (A, B, C, D) and initial hidden state.

    ``a`` is either a dense symmetric matrix or a 1-D vector of diagonal
    entries; its eigenvalues must lie in [0, 1] (PSD and Lyapunov-stable).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    h0: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        for name in ("b", "c", "d", "h0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        dim = a.shape[0]
        if a.ndim == 2:
            if a.shape != (dim, dim) or not np.allclose(a, a.T, atol=1e-12):
                raise ValueError("transition matrix must be square and symmetric")
            eigs = np.linalg.eigvalsh(a)
        elif a.ndim == 1:
            eigs = a
        else:
            raise ValueError("transition matrix must be 1-D (diagonal) or 2-D")
        if eigs.min() < -_EIG_TOL or eigs.max() > 1.0 + _EIG_TOL:
            raise ValueError(
                f"transition eigenvalues must lie in [0, 1], got range "
                f"[{eigs.min():.3e}, {eigs.max():.3e}]"
            )
        if self.b.shape[0] != dim or self.c.shape[1] != dim or len(self.h0) != dim:
            raise ValueError("state dimension mismatch among A, B, C, h0")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise ValueError("D must be (output dim, input dim)")

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b.shape[1]

    @property
    def output_dim(self) -> int:
        return self.c.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.a.ndim == 1

    def dense_a(self) -> np.ndarray:
        return np.diag(self.a) if self.is_diagonal else self.a

    @property
    def r_theta(self) -> float:
        """Smallest admissible norm radius for these parameters."""
        return max(
            np.linalg.norm(self.b),
            np.linalg.norm(self.c),
            np.linalg.norm(self.d),
            np.linalg.norm(self.h0),
        )


@dataclass(frozen=True)
class NoiseConfig:
    """Isotropic Gaussian process/observation noise with a fixed seed."""

    process_std: float = 0.0
    observation_std: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.process_std < 0 or self.observation_std < 0:
            raise ValueError("noise standard deviations must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    """Aligned input/output sequences with recorded scale bounds."""

    inputs: np.ndarray
    outputs: np.ndarray
    r_x: float = field(default=0.0)
    l_y: float = field(default=0.0)

    def __post_init__(self) -> None:
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if inputs.shape[0] != outputs.shape[0]:
            raise ValueError("inputs and outputs must have equal length")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        actual_rx = float(np.linalg.norm(inputs, axis=1).max(initial=0.0))
        prev = np.vstack([np.zeros((1, outputs.shape[1])), outputs[:-1]])
        actual_ly = float(np.linalg.norm(outputs - prev, axis=1).max(initial=0.0))
        if self.r_x < actual_rx:
            object.__setattr__(self, "r_x", actual_rx)
        if self.l_y < actual_ly:
            object.__setattr__(self, "l_y", actual_ly)

    @property
    def length(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def output_dim(self) -> int:
        return self.outputs.shape[1]

    def output_differences(self) -> np.ndarray:
        """y_t - y_{t-1} with y_0 = 0."""
        prev = np.vstack([np.zeros((1, self.output_dim)), self.outputs[:-1]])
        return self.outputs - prev


def _apply_a(params: LdsParams, v: np.ndarray) -> np.ndarray:
    return params.a * v if params.is_diagonal else params.a @ v


def simulate(
    params: LdsParams, inputs: np.ndarray, noise: Optional[NoiseConfig] = None
) -> Trajectory:
    """Run the recurrence over the input sequence; deterministic per seed."""
    xs = np.atleast_2d(np.asarray(inputs, dtype=float))
    T, n = xs.shape
    if T < 1:
        raise ValueError("need at least one input step")
    if n != params.input_dim:
        raise ValueError(f"input width {n} does not match system ({params.input_dim})")
    m, d = params.output_dim, params.state_dim
    rng = np.random.default_rng(noise.seed) if noise is not None else None
    pstd = noise.process_std if noise else 0.0
    ostd = noise.observation_std if noise else 0.0

    h = _apply_a(params, params.h0)
    ys = np.zeros((T, m))
    for t in range(T):
        ys[t] = params.c @ h + params.d @ xs[t]
        if ostd:
            ys[t] += ostd * rng.standard_normal(m)
        drive = h + params.b @ xs[t]
        if pstd:
            drive = drive + pstd * rng.standard_normal(d)
        h = _apply_a(params, drive)
    return Trajectory(inputs=xs, outputs=ys)


def impulse_response_output(params: LdsParams, inputs: np.ndarray, t: int) -> np.ndarray:
    """Closed-form noiseless output at step t (1-based); recurrence oracle."""
    xs = np.atleast_2d(np.asarray(inputs, dtype=float))
    T = xs.shape[0]
    if not 1 <= t <= T:
        raise ValueError(f"need 1 <= t <= {T}, got {t}")
    if xs.shape[1] != params.input_dim:
        raise ValueError("input width does not match system")
    acc = params.d @ xs[t - 1]
    if params.is_diagonal:
        apow = params.a.copy()
        for i in range(1, t):
            acc = acc + params.c @ (apow * (params.b @ xs[t - 1 - i]))
            apow = apow * params.a
        # apow is now A^t
        acc = acc + params.c @ (apow * params.h0)
    else:
        apow = params.a.copy()
        for i in range(1, t):
            acc = acc + params.c @ (apow @ (params.b @ xs[t - 1 - i]))
            apow = apow @ params.a
        # apow is now A^t
        acc = acc + params.c @ (apow @ params.h0)
    return acc


def derivative_predictor(params: LdsParams, trajectory: Trajectory, t: int) -> np.ndarray:
    """Comparator prediction: previous output plus the derivative map at t."""
    if not 1 <= t <= trajectory.length:
        raise ValueError(f"need 1 <= t <= {trajectory.length}, got {t}")
    if trajectory.input_dim != params.input_dim or trajectory.output_dim != params.output_dim:
        raise ValueError("trajectory dimensions do not match system")
    xs = trajectory.inputs
    m = params.output_dim
    y_prev = trajectory.outputs[t - 2] if t >= 2 else np.zeros(m)
    x_prev = xs[t - 2] if t >= 2 else np.zeros(params.input_dim)
    acc = (params.c @ (params.b @ xs[t - 1])) + params.d @ xs[t - 1] - params.d @ x_prev
    if params.is_diagonal:
        apow_prev = np.ones(params.state_dim)
        apow = params.a.copy()
        for i in range(1, t):
            acc = acc + params.c @ ((apow - apow_prev) * (params.b @ xs[t - 1 - i]))
            apow_prev = apow
            apow = apow * params.a
        # loop leaves apow = A^t, apow_prev = A^{t-1}
        acc = acc + params.c @ ((apow - apow_prev) * params.h0)
    else:
        eye = np.eye(params.state_dim)
        apow_prev = eye
        apow = params.a.copy()
        for i in range(1, t):
            acc = acc + params.c @ ((apow - apow_prev) @ (params.b @ xs[t - 1 - i]))
            apow_prev = apow
            apow = apow @ params.a
        acc = acc + params.c @ ((apow - apow_prev) @ params.h0)
    return y_prev + acc


def diagonalize(params: LdsParams) -> LdsParams:
    """Rotate to an equivalent system with diagonal transition matrix."""
    if params.is_diagonal:
        return params
    eigs, u = np.linalg.eigh(params.a)
    return LdsParams(
        a=eigs,
        b=u.T @ params.b,
        c=params.c @ u,
        d=params.d,
        h0=u.T @ params.h0,
    )


def lipschitz_bound(params: LdsParams, r_x: float) -> float:
    """Worst-case one-step output change of the noiseless system."""
    bn = np.linalg.norm(params.b)
    cn = np.linalg.norm(params.c)
    dn = np.linalg.norm(params.d)
    return (2.0 * bn * cn + 2.0 * dn) * r_x + cn * np.linalg.norm(params.h0)


@dataclass(frozen=True)
class InputGenerator:
    """Seeded description of an input process for benchmark systems."""

    kind: str  # 'gaussian' | 'block_impulse'
    scale: float = 1.0
    block_len: int = 20
    duty: float = 0.25

    def generate(self, T: int, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal((T, n))
        if self.kind == "block_impulse":
            return block_impulse_inputs(
                T, n, rng, block_len=self.block_len, duty=self.duty, scale=self.scale
            )
        raise ValueError(f"unknown input generator '{self.kind}'")


def block_impulse_inputs(
    T: int,
    n: int,
    rng: np.random.Generator,
    block_len: int = 20,
    duty: float = 0.25,
    scale: float = 1.0,
) -> np.ndarray:
    """Piecewise-constant impulses: on for block_len steps per duty cycle."""
    xs = np.zeros((T, n))
    cycle = max(int(round(block_len / duty)), block_len)
    t = 0
    while t < T:
        xs[t : t + block_len] = rng.uniform(-scale, scale, n)
        t += cycle
    return xs


def synthetic_system(name: str, seed: int = 0) -> tuple[LdsParams, InputGenerator]:
    """Named benchmark systems.

    ``siso_hard``: two-state single-channel system with an almost-unit
    mode (0.999) next to a fast one (0.5), driven by unit Gaussians.
    ``mimo_10``: ten-state system with transitions 0.0 .. 0.9, identity
    input map, Gaussian observation matrix, block-impulse inputs.
    """
    if name == "siso_hard":
        params = LdsParams(
            a=np.array([0.999, 0.5]),
            b=np.ones((2, 1)),
            c=np.ones((1, 2)),
            d=np.zeros((1, 1)),
            h0=np.zeros(2),
        )
        return params, InputGenerator(kind="gaussian", scale=1.0)
    if name == "mimo_10":
        rng = np.random.default_rng([seed, 10])
        params = LdsParams(
            a=np.arange(10) / 10.0,
            b=np.eye(10),
            c=rng.standard_normal((10, 10)),
            d=np.zeros((10, 10)),
            h0=np.zeros(10),
        )
        return params, InputGenerator(kind="block_impulse", scale=1.0)
    raise ValueError(f"unknown synthetic system '{name}'")


@dataclass(frozen=True)
class PendulumConfig:
    """Forced damped pendulum with fixed-step RK4 integration."""

    mass: float = 1.0
    length: float = 1.0
    gravity: float = 1.0
    damping: float = 0.1
    dt: float = 0.01
    accel_noise_std: float = 0.05
    obs_noise_std: float = 0.001
    theta0: float = 0.0
    omega0: float = 0.0


def pendulum_simulate(
    config: PendulumConfig, inputs: np.ndarray, seed: int = 0
) -> Trajectory:
    """Integrate theta'' = -(g/L) sin(theta) - damping*theta' + u/(m L^2).

    The per-step forcing includes a Gaussian acceleration disturbance held
    constant within the step; outputs are the angle plus observation
    noise. Raises ``FloatingPointError`` if the state diverges.
    """
    xs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if xs.shape[1] != 1:
        raise ValueError("pendulum takes a single torque input channel")
    T = xs.shape[0]
    rng = np.random.default_rng(seed)
    gl = config.gravity / config.length
    inertia = config.mass * config.length**2
    dt = config.dt
    theta, omega = config.theta0, config.omega0
    ys = np.zeros((T, 1))
    for t in range(T):
        u = xs[t, 0] / inertia + config.accel_noise_std * rng.standard_normal()

        def rhs(state: np.ndarray) -> np.ndarray:
            return np.array(
                [state[1], -gl * np.sin(state[0]) - config.damping * state[1] + u]
            )

        s = np.array([theta, omega])
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(s)
            k2 = rhs(s + dt / 2 * k1)
            k3 = rhs(s + dt / 2 * k2)
            k4 = rhs(s + dt * k3)
            s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        theta, omega = float(s[0]), float(s[1])
        if not (np.isfinite(theta) and np.isfinite(omega)):
            raise FloatingPointError(f"pendulum state diverged at step {t + 1}")
        ys[t, 0] = theta + config.obs_noise_std * rng.standard_normal()
    return Trajectory(inputs=xs, outputs=ys)
