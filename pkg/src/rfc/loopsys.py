"""Augmented open-loop, inner-loop and outer-loop systems.

State ordering is ``[x (2); sigma (k_D); rho (k_R)]``.  Inputs are written
so that every column enters with a plus sign::

    x_a' = A x_a + B_a u + D_a tau_u + B_rho_a tau_i + N_a [eta_x; eta_x']

hence ``D_a = [-D; 0; 0]`` (the plant sees ``-D tau_d``).  When the
environment is folded, ``tau_u`` is only the unknown part of ``tau_d``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DimensionError, ParameterError, StageError
from .observer import ObserverKind, ObserverRealization
from .plant import Environment, StateMatrices, fold_environment


class Stage(str, Enum):
    OPEN = "open"
    INNER_CLOSED = "inner_closed"
    OUTER_CLOSED = "outer_closed"


@dataclass(frozen=True)
class ControllerGains:
    C_f: float

    def __post_init__(self):
        if not self.C_f >= 0:
            raise ParameterError(f"C_f must be >= 0, got {self.C_f}")


@dataclass(frozen=True)
class AugmentedSystem:
    A: np.ndarray
    B_a: np.ndarray
    D_a: np.ndarray
    B_rho_a: np.ndarray
    N_a: np.ndarray
    C_a: np.ndarray
    dob_row: np.ndarray  # tau_dis_hat = dob_row @ x_a
    stage: Stage
    env_folded: bool
    plant: StateMatrices
    plant_A: np.ndarray  # plant block actually used (A or A_e)
    env: Environment
    dob: ObserverRealization
    rtob: ObserverRealization
    C_f: float = 0.0

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def slices(self) -> tuple[slice, slice, slice]:
        kd, kr = self.dob.order, self.rtob.order
        return slice(0, 2), slice(2, 2 + kd), slice(2 + kd, 2 + kd + kr)


def output_vector(rtob: ObserverRealization, n_dob: int = 1, gain=None) -> np.ndarray:
    """Row ``C_a`` with ``C_a x_a = C_gen (rho - L_R x)``.

    ``gain`` overrides ``L_R`` in the position/velocity slots (used for the
    literal reading of the output row with the exact inertia).
    """
    L = rtob.L if gain is None else np.asarray(gain, dtype=float).reshape(rtob.L.shape)
    return np.hstack([-rtob.C_gen @ L, np.zeros((1, n_dob)), rtob.C_gen])


def assemble_open_loop(
    plant: StateMatrices,
    env: Environment,
    dob: ObserverRealization,
    rtob: ObserverRealization,
    *,
    fold: bool = True,
    literal_output_inertia: bool = False,
) -> AugmentedSystem:
    """Stack plant, DOb and RTOb into the block lower-triangular open loop.

    ``plant`` must be the exact servo model.  With ``literal_output_inertia``
    the output row uses ``g_RTOb * J_m`` instead of ``g_RTOb * J_mi``.
    """
    if dob.kind is not ObserverKind.DOB or rtob.kind is not ObserverKind.RTOB:
        raise ParameterError("expected a DOb and an RTOb realization")
    kd, kr = dob.order, rtob.order
    n = 2 + kd + kr
    Ap = fold_environment(plant, env) if fold else plant.A.copy()
    A = np.zeros((n, n))
    A[0:2, 0:2] = Ap
    A[2:2 + kd, 0:2] = dob.A_x
    A[2:2 + kd, 2:2 + kd] = dob.A_obs
    A[2 + kd:, 0:2] = rtob.A_x
    A[2 + kd:, 2 + kd:] = rtob.A_obs
    B_a = np.vstack([plant.B, dob.B_obs, rtob.B_obs])
    D_a = np.vstack([-plant.D, np.zeros((kd + kr, 1))])
    B_rho_a = np.vstack([np.zeros((2 + kd, 1)), rtob.B_tau_i])
    N_a = np.vstack([np.zeros((2, 4)), dob.N_obs, rtob.N_obs])
    if B_a.shape != (n, 1):
        raise DimensionError("input vectors do not stack to the augmented dimension")

    gain = None
    if literal_output_inertia:
        gain = rtob.L * (plant.inertia / rtob.model.inertia)
    C_a = output_vector(rtob, kd, gain)
    dob_row = np.hstack([-dob.C_gen @ dob.L, dob.C_gen, np.zeros((1, kr))])
    return AugmentedSystem(
        A=A, B_a=B_a, D_a=D_a, B_rho_a=B_rho_a, N_a=N_a, C_a=C_a, dob_row=dob_row,
        stage=Stage.OPEN, env_folded=fold, plant=plant, plant_A=Ap, env=env,
        dob=dob, rtob=rtob,
    )


def close_inner_loop(sys: AugmentedSystem) -> AugmentedSystem:
    """Feed the disturbance estimate back: ``u = tau_per + tau_dis_hat``."""
    if sys.stage is not Stage.OPEN:
        raise StageError(f"inner loop closes an open system, got stage {sys.stage.value}")
    return replace(sys, A=sys.A + sys.B_a @ sys.dob_row, stage=Stage.INNER_CLOSED)


def close_outer_loop(sys: AugmentedSystem, gains: ControllerGains) -> AugmentedSystem:
    """Proportional force loop ``tau_per = r - C_f tau_int_hat`` with ``r = C_f tau_ref``."""
    if sys.stage is not Stage.INNER_CLOSED:
        raise StageError(f"outer loop needs stage inner_closed, got {sys.stage.value}")
    return replace(sys, A=sys.A - gains.C_f * (sys.B_a @ sys.C_a), stage=Stage.OUTER_CLOSED, C_f=gains.C_f)


def build_loop(plant, env, dob, rtob, C_f: float | None = None, **kw) -> AugmentedSystem:
    """Assemble and close the inner loop, plus the outer loop if ``C_f`` is given."""
    sys = close_inner_loop(assemble_open_loop(plant, env, dob, rtob, **kw))
    if C_f is None:
        return sys
    return close_outer_loop(sys, ControllerGains(C_f))


def measurement_noise_map(sys: AugmentedSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Noise entry when the observers read ``y = x + eta_x`` directly.

    In that form the observer states are ``sigma + L eta_x`` and no noise
    derivative appears.  Returns ``(G, c_int, c_dis)`` such that
    ``z' = A z + G eta_x + ...``, ``tau_int_hat = C_a z + c_int eta_x`` and
    ``tau_dis_hat = dob_row z + c_dis eta_x``.
    """
    G = sys.A[:, 0:2].copy()
    G[0:2, :] -= sys.plant_A
    return G, sys.C_a[:, 0:2].copy(), sys.dob_row[:, 0:2].copy()
