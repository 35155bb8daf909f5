"""One-call construction of a complete DOb/RTOb force-control design."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import analysis
from .loopsys import AugmentedSystem, ControllerGains, assemble_open_loop, close_inner_loop, close_outer_loop
from .numkit import eigenvalues, is_hurwitz
from .observer import DisturbanceModel, ObserverKind, ObserverRealization, conventional_gains, synthesize
from .plant import Environment, ServoParams, build_servo_matrices


@dataclass(frozen=True)
class ObserverSpec:
    bandwidth: float
    model: DisturbanceModel | None = None
    gain: np.ndarray | None = None  # overrides the conventional gain when given

    def realize(self, servo_matrices, kind) -> ObserverRealization:
        dist = self.model or DisturbanceModel.constant()
        L = self.gain if self.gain is not None else conventional_gains(self.bandwidth, servo_matrices.inertia, dist)
        return synthesize(servo_matrices, dist, L, kind)


@dataclass(frozen=True)
class Design:
    """Servo, environment, observers and force gain, with derived loops cached."""

    servo: ServoParams
    env: Environment
    dob_spec: ObserverSpec
    rtob_spec: ObserverSpec
    C_f: float = 2.0
    literal_output_inertia: bool = False

    @cached_property
    def dob(self) -> ObserverRealization:
        return self.dob_spec.realize(build_servo_matrices(self.servo, "nominal"), ObserverKind.DOB)

    @cached_property
    def rtob(self) -> ObserverRealization:
        return self.rtob_spec.realize(build_servo_matrices(self.servo, "identified"), ObserverKind.RTOB)

    @cached_property
    def open_loop(self) -> AugmentedSystem:
        return assemble_open_loop(
            build_servo_matrices(self.servo, "exact"), self.env, self.dob, self.rtob,
            literal_output_inertia=self.literal_output_inertia,
        )

    @cached_property
    def inner(self) -> AugmentedSystem:
        return close_inner_loop(self.open_loop)

    def outer(self, C_f: float | None = None) -> AugmentedSystem:
        return close_outer_loop(self.inner, ControllerGains(self.C_f if C_f is None else C_f))

    @cached_property
    def tfs(self) -> analysis.TfSet:
        return analysis.extract_tfs(self.inner)

    @cached_property
    def report(self) -> analysis.MinimumPhaseReport:
        return analysis.classify(self.tfs.L, self.dob_spec.bandwidth, self.rtob_spec.bandwidth)

    def closed_loop_poles(self, C_f: float | None = None) -> np.ndarray:
        return eigenvalues(self.outer(C_f).A)

    def stable(self, C_f: float | None = None) -> bool:
        return is_hurwitz(self.outer(C_f).A)


def conventional_design(
    J_m: float = 0.25,
    J_mn: float | None = None,
    J_mi: float | None = None,
    D_env: float = 50.0,
    K_env: float = 1e4,
    g_dob: float = 500.0,
    g_rtob: float = 500.0,
    C_f: float = 2.0,
    b_m: float = 0.0,
    b_mn: float = 0.0,
    b_mi: float = 0.0,
) -> Design:
    """Constant disturbance models with ``L = [0, g J]`` for both observers."""
    servo = ServoParams(J_m, J_m if J_mn is None else J_mn, J_m if J_mi is None else J_mi, b_m, b_mn, b_mi)
    return Design(servo, Environment(D_env, K_env), ObserverSpec(g_dob), ObserverSpec(g_rtob), C_f)
