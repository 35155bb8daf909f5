"""Auxiliary-variable disturbance and reaction-torque observers.

For a disturbance generator ``x_d' = A_gen x_d``, ``tau = C_gen x_d`` acting
through the model ``x' = A_m x + B_m u - D_m tau`` (plus ``B_m tau_i`` for
the RTOb), the observer state is ``sigma = x_d + L x``::

    sigma' = A_obs sigma + A_x x + B_obs u (+ B_tau_i tau_i)
    A_obs  = A_gen - L D_m C_gen
    A_x    = L A_m + L D_m C_gen L - A_gen L
    B_obs  = L B_m
    N_obs  = [L A_m, -L]          # acts on [eta_x, d(eta_x)/dt]

and the estimate is ``C_gen (sigma - L x)``.  ``L`` is a ``k x 2`` matrix
(one row per generator state); the conventional design is ``[[0, g*J]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, ParameterError, SynthesisError
from .numkit import as_matrix, eigenvalues
from .plant import StateMatrices


class ObserverKind(str, Enum):
    DOB = "DOb"
    RTOB = "RTOb"


@dataclass(frozen=True)
class DisturbanceModel:
    A_gen: np.ndarray
    C_gen: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.A_gen, "A_gen")
        c = as_matrix(self.C_gen, "C_gen")
        k = a.shape[0]
        if a.shape != (k, k) or c.shape != (1, k):
            raise DimensionError(f"generator shapes {a.shape} / {c.shape} are inconsistent")
        object.__setattr__(self, "A_gen", a)
        object.__setattr__(self, "C_gen", c)

    @property
    def order(self) -> int:
        return self.A_gen.shape[0]

    def observability_matrix(self) -> np.ndarray:
        rows = [self.C_gen]
        for _ in range(self.order - 1):
            rows.append(rows[-1] @ self.A_gen)
        return np.vstack(rows)

    @property
    def observable(self) -> bool:
        return np.linalg.matrix_rank(self.observability_matrix()) == self.order

    @classmethod
    def constant(cls) -> "DisturbanceModel":
        return cls(np.zeros((1, 1)), np.ones((1, 1)))

    @classmethod
    def periodic(cls, omega: float) -> "DisturbanceModel":
        return cls(np.array([[0.0, omega], [-omega, 0.0]]), np.array([[1.0, 0.0]]))


@dataclass(frozen=True)
class ObserverRealization:
    A_obs: np.ndarray
    A_x: np.ndarray
    B_obs: np.ndarray
    B_tau_i: np.ndarray
    N_obs: np.ndarray
    L: np.ndarray
    C_gen: np.ndarray
    kind: ObserverKind
    model: StateMatrices
    dist: DisturbanceModel

    @property
    def order(self) -> int:
        return self.A_obs.shape[0]

    @property
    def is_conventional(self) -> bool:
        """Constant generator with ``L = [[0, l2]]``, ``l2 > 0``."""
        return (
            self.order == 1
            and not np.any(self.dist.A_gen)
            and self.C_gen[0, 0] == 1.0
            and self.L[0, 0] == 0.0
            and self.L[0, 1] > 0
        )

    @property
    def bandwidth(self) -> float:
        if not self.is_conventional:
            raise ParameterError("bandwidth is only defined for conventional gains on a constant model")
        return float(self.L[0, 1] / self.model.inertia)


@dataclass(frozen=True)
class ErrorDynamics:
    A_err: np.ndarray
    N_err: np.ndarray


def _as_gain(L, k: int) -> np.ndarray:
    g = np.array(L, dtype=float)
    if g.ndim == 1:
        g = g.reshape(1, -1) if k == 1 else g.reshape(k, -1)
    if g.shape != (k, 2):
        raise DimensionError(f"gain must be {k}x2, got {g.shape}")
    return g


def conventional_gains(bandwidth: float, inertia: float, dist: DisturbanceModel | None = None) -> np.ndarray:
    """Velocity-only gain ``[[0, bandwidth*inertia]]``.

    For a higher-order generator all error poles are placed at
    ``-bandwidth`` (Ackermann on ``(A_gen, C_gen)``), still reading velocity
    only; with the constant model this reduces to the scalar form.
    """
    if not (bandwidth > 0 and inertia > 0):
        raise ParameterError(f"bandwidth and inertia must be > 0, got {bandwidth}, {inertia}")
    if dist is None or dist.order == 1 and not np.any(dist.A_gen) and dist.C_gen[0, 0] == 1:
        return np.array([[0.0, bandwidth * inertia]])
    if not dist.observable:
        raise SynthesisError("disturbance generator is not observable")
    k = dist.order
    a = dist.A_gen
    phi = np.eye(k)
    for _ in range(k):
        phi = phi @ (a + bandwidth * np.eye(k))
    e_k = np.zeros((k, 1))
    e_k[-1, 0] = 1.0
    v = phi @ np.linalg.solve(dist.observability_matrix(), e_k)
    # A_obs = A_gen - L D C with D = [0, 1/J]^T, so column 2 of L is J*v
    return np.hstack([np.zeros((k, 1)), inertia * v])


def synthesize(
    model: StateMatrices,
    dist: DisturbanceModel,
    L,
    kind: ObserverKind | str = ObserverKind.DOB,
) -> ObserverRealization:
    """Build the auxiliary-variable observer for ``model`` and ``dist``.

    Pass the nominal servo model for a DOb and the identified one for an
    RTOb.  For the RTOb the identified-disturbance input enters through
    ``B_tau_i = L B_m``.
    """
    kind = ObserverKind(kind)
    if not dist.observable:
        raise SynthesisError("(A_gen, C_gen) is not observable")
    k = dist.order
    L = _as_gain(L, k)
    A_m, B_m, D_m = model.A, model.B, model.D
    if A_m.shape != (2, 2) or B_m.shape != (2, 1) or D_m.shape != (2, 1):
        raise DimensionError("servo model must be 2x2 / 2x1 / 2x1")
    C = dist.C_gen
    A_obs = dist.A_gen - L @ D_m @ C
    A_x = L @ A_m + L @ D_m @ C @ L - dist.A_gen @ L
    B_obs = L @ B_m
    B_tau_i = L @ B_m if kind is ObserverKind.RTOB else np.zeros((k, 1))
    N_obs = np.hstack([L @ A_m, -L])
    return ObserverRealization(
        A_obs=A_obs, A_x=A_x, B_obs=B_obs, B_tau_i=B_tau_i, N_obs=N_obs,
        L=L, C_gen=C.copy(), kind=kind, model=model, dist=dist,
    )


def error_dynamics(obs: ObserverRealization) -> ErrorDynamics:
    return ErrorDynamics(A_err=obs.A_obs.copy(), N_err=obs.N_obs.copy())


def error_poles(obs: ObserverRealization) -> np.ndarray:
    return eigenvalues(obs.A_obs)


def estimate_output(obs: ObserverRealization, aux_state, measured_x) -> float:
    """``C_gen (aux - L x)``, i.e. the disturbance/interaction torque estimate."""
    aux = np.asarray(aux_state, dtype=float).reshape(obs.order)
    x = np.asarray(measured_x, dtype=float).reshape(2)
    return float((obs.C_gen @ (aux - obs.L @ x)).item())
