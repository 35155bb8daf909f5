"""Servo and environment models.

State vector is ``x = [q_m, dq_m]`` (rad, rad/s).  All models share the
rigid-body form with optional viscous friction::

    A = [[0, 1], [0, -b/J]],   B = D = [[0], [1/J]]

and the exact plant obeys ``x' = A x + B u - D tau_d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Literal

import numpy as np

from .errors import ParameterError

Signal = Callable[[float], float]


def zero_signal(t: float) -> float:
    return 0.0


def constant(value: float) -> Signal:
    value = float(value)

    def signal(t: float) -> float:
        return value

    return signal


class TauIMode(str, Enum):
    EXPLICIT = "explicit"
    MODEL_DERIVED = "model-derived"


@dataclass(frozen=True)
class ServoParams:
    J_m: float
    J_mn: float
    J_mi: float
    b_m: float = 0.0
    b_mn: float = 0.0
    b_mi: float = 0.0

    def __post_init__(self):
        for name in ("J_m", "J_mn", "J_mi"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("b_m", "b_mn", "b_mi"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    def variant(self, which: str) -> tuple[float, float]:
        """(inertia, viscous coefficient) for ``exact``, ``nominal`` or ``identified``."""
        try:
            suffix = {"exact": "", "nominal": "n", "identified": "i"}[which]
        except KeyError:
            raise ParameterError(f"unknown servo variant {which!r}") from None
        return getattr(self, "J_m" + suffix), getattr(self, "b_m" + suffix)


@dataclass(frozen=True)
class Environment:
    D_env: float = 0.0
    K_env: float = 0.0

    def __post_init__(self):
        if not (self.D_env >= 0 and self.K_env >= 0):
            raise ParameterError("environment damping and stiffness must be >= 0")

    @property
    def is_free(self) -> bool:
        return self.D_env == 0 and self.K_env == 0


@dataclass(frozen=True)
class StateMatrices:
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    inertia: float
    viscous: float = 0.0


@dataclass(frozen=True)
class DisturbanceSignals:
    """Exogenous torques acting on the loop.

    ``tau_i`` is only read in ``explicit`` mode.  In ``model-derived`` mode the
    identified-disturbance input is computed from the true motion, and
    ``tau_id_u`` is the part of the unknown disturbance the RTOb is told
    about (defaults to all of ``tau_u``).
    """

    tau_u: Signal = zero_signal
    tau_id_u: Signal | None = None
    tau_i: Signal = zero_signal
    tau_i_mode: TauIMode = TauIMode.EXPLICIT


@dataclass(frozen=True)
class Noise:
    velocity_noise_std: float = 0.0
    seed: int = 0
    position_noise_std: float = 0.0

    def __post_init__(self):
        if self.velocity_noise_std < 0 or self.position_noise_std < 0:
            raise ParameterError("noise standard deviations must be >= 0")

    @property
    def active(self) -> bool:
        return self.velocity_noise_std > 0 or self.position_noise_std > 0

    def samples(self, steps: int) -> np.ndarray:
        """Per-step ``[eta_q, eta_dq]`` samples, shape ``(steps, 2)``."""
        rng = np.random.default_rng(self.seed)
        eta = rng.standard_normal((steps, 2))
        return eta * np.array([self.position_noise_std, self.velocity_noise_std])


def build_servo_matrices(
    p: ServoParams, variant: Literal["exact", "nominal", "identified"] = "exact"
) -> StateMatrices:
    J, b = p.variant(variant)
    A = np.array([[0.0, 1.0], [0.0, -b / J if b else 0.0]])
    B = np.array([[0.0], [1.0 / J]])
    return StateMatrices(A=A, B=B, D=B.copy(), inertia=J, viscous=b)


def fold_environment(sm: StateMatrices, env: Environment) -> np.ndarray:
    """Plant matrix with the spring-damper contact moved into the loop.

    ``tau_d = tau_u + K_env q + D_env dq`` and ``x' = ... - D tau_d``, so the
    state-dependent part becomes ``A - D [K_env, D_env]``.
    """
    return sm.A - sm.D @ np.array([[env.K_env, env.D_env]])


def interaction_torque(env: Environment, q, qdot):
    return env.K_env * np.asarray(q) + env.D_env * np.asarray(qdot)
