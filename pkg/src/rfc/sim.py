"""Time-domain simulation of the force loop and of stand-alone observers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ParameterError, StageError
from .loopsys import AugmentedSystem, Stage, measurement_noise_map
from .numkit import integrate_lti
from .observer import ObserverRealization
from .plant import (
    Environment,
    Noise,
    Signal,
    StateMatrices,
    TauIMode,
    constant,
    fold_environment,
    interaction_torque,
)

DEFAULT_DT = 1e-5
DEFAULT_T_END = 0.2
TRACE_COLUMNS = ("t", "q", "qdot", "tau_int_true", "tau_int_est", "tau_dis_est", "u")


def _signal(v) -> Signal:
    return v if callable(v) else constant(v)


@dataclass(frozen=True)
class Scenario:
    """Inputs for one closed-loop run.

    ``tau_ref`` is the interaction-torque reference; the loop is driven by
    ``r = C_f * tau_ref``.  Scalars are accepted for any signal and mean a
    step at ``t = 0``.
    """

    tau_ref: Signal | float = 1.0
    tau_u: Signal | float = 0.0
    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    noise: Noise = field(default_factory=Noise)
    tau_i_mode: TauIMode = TauIMode.EXPLICIT
    tau_i: Signal | float = 0.0
    tau_id_u: Signal | float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if not self.t_end >= 10 * self.dt:
            raise ParameterError("t_end must cover at least 10 steps")
        object.__setattr__(self, "tau_i_mode", TauIMode(self.tau_i_mode))


@dataclass(frozen=True)
class Trace:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    tau_int_true: np.ndarray
    tau_int_est: np.ndarray
    tau_dis_est: np.ndarray
    u: np.ndarray
    warnings: tuple = ()

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRACE_COLUMNS}

    def __len__(self):
        return self.t.size


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    settling_time_2pct: float | None
    steady_state_error: float
    oscillatory: bool
    absolute: bool = False

    @property
    def settled(self) -> bool:
        return self.settling_time_2pct is not None


def _inputs_for(sys: AugmentedSystem, scenario: Scenario):
    """Effective ``(A, input_map, G)`` including the model-derived tau_i feedback."""
    A = sys.A
    M = np.hstack([sys.B_a, sys.D_a, sys.B_rho_a])
    G, c_int, c_dis = measurement_noise_map(sys)
    if scenario.tau_i_mode is TauIMode.MODEL_DERIVED:
        # tau_i = (J_mi - J_m) qdd + (b_mi - b_m) qd - tau_id_u makes the
        # identified model see exactly the environment torque
        c = sys.rtob.model.inertia - sys.plant.inertia
        db = sys.rtob.model.viscous - sys.plant.viscous
        bt = sys.B_rho_a
        row = c * A[1, :].copy()
        row[1] += db
        A = A + bt @ row[None, :]
        M_new = M + c * bt @ M[1:2, :]
        M_new[:, 2] = -bt[:, 0]
        G = G + c * bt @ G[1:2, :]
        M = M_new
    return A, M, G, c_int, c_dis


def simulate(sys: AugmentedSystem, scenario: Scenario) -> Trace:
    """RK4 run of the outer-closed loop from zero initial state.

    Observers read the measured state ``y = x + eta``; noise samples are
    held constant over each step.  Raises :class:`DivergenceError` (with
    the finite prefix of the trace attached) if the state becomes
    non-finite.
    """
    if sys.stage is not Stage.OUTER_CLOSED:
        raise StageError(f"simulation needs the outer-closed loop, got {sys.stage.value}")
    if not sys.env_folded:
        raise StageError("simulation needs the environment folded into A")
    A, M, G, c_int, c_dis = _inputs_for(sys, scenario)
    C_f = sys.C_f
    tau_ref = _signal(scenario.tau_ref)
    tau_u = _signal(scenario.tau_u)
    if scenario.tau_i_mode is TauIMode.MODEL_DERIVED:
        third = _signal(scenario.tau_u if scenario.tau_id_u is None else scenario.tau_id_u)
    else:
        third = _signal(scenario.tau_i)

    def w(t):
        return (C_f * tau_ref(t), tau_u(t), third(t), 0.0, 0.0)

    steps = int(round(scenario.t_end / scenario.dt))
    zoh = None
    eta = np.zeros((steps + 1, 2))
    if scenario.noise.active:
        samples = scenario.noise.samples(steps)
        zoh = np.hstack([np.zeros((steps, 3)), samples])
        eta[:-1] = samples
        eta[-1] = samples[-1]
    input_map = np.hstack([M, G])
    with np.errstate(over="ignore", invalid="ignore"):
        lt = integrate_lti(A, input_map, w, np.zeros(sys.n), scenario.dt, scenario.t_end, zoh=zoh)
        trace = _reconstruct(sys, lt.t, lt.x, eta, tau_ref, c_int, c_dis, lt.warnings)
    bad = ~np.all(np.isfinite(lt.x), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        with np.errstate(over="ignore", invalid="ignore"):
            partial = _reconstruct(sys, lt.t[:k], lt.x[:k], eta[:k], tau_ref, c_int, c_dis,
                                   lt.warnings + ("DIVERGENCE",))
        raise DivergenceError(f"state became non-finite at t={lt.t[k]:.6g}s", partial=partial)
    return trace


def _reconstruct(sys, t, z, eta, tau_ref, c_int, c_dis, warnings) -> Trace:
    q, qdot = z[:, 0], z[:, 1]
    tau_int_est = z @ sys.C_a[0] + eta @ c_int[0]
    tau_dis_est = z @ sys.dob_row[0] + eta @ c_dis[0]
    r = sys.C_f * np.array([tau_ref(tk) for tk in t]) if t.size else np.zeros(0)
    u = r - sys.C_f * tau_int_est + tau_dis_est
    return Trace(
        t=t, q=q, qdot=qdot,
        tau_int_true=interaction_torque(sys.env, q, qdot),
        tau_int_est=tau_int_est, tau_dis_est=tau_dis_est, u=u,
        warnings=tuple(warnings),
    )


def step_metrics(trace: Trace, target: float, band: float = 0.02) -> StepMetrics:
    """Overshoot, 2 % settling time, final error and oscillation flag of ``tau_int_est``.

    With ``target == 0`` overshoot and the settling band are absolute
    (N·m) and ``absolute`` is set.
    """
    if len(trace) == 0:
        raise ParameterError("empty trace")
    y = trace.tau_int_est
    e = y - target
    absolute = target == 0
    ref = 1.0 if absolute else abs(target)
    with np.errstate(over="ignore", invalid="ignore"):
        peak = np.max(e) if target >= 0 else np.max(-e)
        overshoot = float(max(peak, 0.0) / ref)
        outside = ~(np.abs(e) <= band * ref)
    if not outside[-1]:
        idx = np.flatnonzero(outside)
        settling = float(trace.t[idx[-1] + 1]) if idx.size else float(trace.t[0])
    else:
        settling = None
    signs = np.sign(e[np.isfinite(e)])
    signs = signs[signs != 0]
    changes = int(np.count_nonzero(np.diff(signs)))
    # changes after the first crossing
    oscillatory = changes - 1 >= 2
    return StepMetrics(
        overshoot=overshoot,
        settling_time_2pct=settling,
        steady_state_error=float(target - y[-1]),
        oscillatory=oscillatory,
        absolute=absolute,
    )


@dataclass(frozen=True)
class EstimationTrace:
    t: np.ndarray
    estimate: np.ndarray
    truth: np.ndarray
    decay_rate: float

    @property
    def error(self) -> np.ndarray:
        return self.estimate - self.truth


def fit_decay_rate(t: np.ndarray, err: np.ndarray, floor: float = 1e-6) -> float:
    """Rate ``a`` of ``|err| ~ exp(-a t)`` from a log-linear least-squares fit.

    Uses the initial stretch where ``|err|`` stays above ``floor`` times its
    peak.
    """
    mag = np.abs(err)
    peak = np.max(mag)
    if peak == 0:
        return float("nan")
    below = np.flatnonzero(mag < floor * peak)
    stop = below[0] if below.size else mag.size
    if stop < 3:
        return float("nan")
    slope, _ = np.polyfit(t[:stop], np.log(mag[:stop]), 1)
    return float(-slope)


def estimation_experiment(
    plant: StateMatrices,
    env: Environment | None,
    observer: ObserverRealization,
    disturbance: Signal | float,
    *,
    u: Signal | float = 0.0,
    dt: float = DEFAULT_DT,
    t_end: float = 0.02,
) -> EstimationTrace:
    """Run one observer alongside an open-loop plant.

    ``truth`` is the disturbance as seen by the observer's own model, i.e.
    the torque it would reconstruct from exact measurements: for a DOb on
    the nominal model this is ``tau_dis``.
    """
    env = env or Environment()
    dist = _signal(disturbance)
    uin = _signal(u)
    k = observer.order
    Ap = fold_environment(plant, env)
    A = np.zeros((2 + k, 2 + k))
    A[:2, :2] = Ap
    A[2:, :2] = observer.A_x
    A[2:, 2:] = observer.A_obs
    M = np.zeros((2 + k, 2))
    M[:2, 0:1] = plant.B
    M[:2, 1:2] = -plant.D
    M[2:, 0:1] = observer.B_obs
    lt = integrate_lti(A, M, lambda t: (uin(t), dist(t)), np.zeros(2 + k), dt, t_end)
    x = lt.x[:, :2]
    aux = lt.x[:, 2:]
    uu = np.array([uin(tk) for tk in lt.t])
    dd = np.array([dist(tk) for tk in lt.t])
    xdot = x @ Ap.T + np.outer(uu, plant.B[:, 0]) - np.outer(dd, plant.D[:, 0])
    mdl = observer.model
    seen = x @ mdl.A.T + np.outer(uu, mdl.B[:, 0]) - xdot
    truth = seen[:, 1] / mdl.D[1, 0]
    estimate = (aux - x @ observer.L.T) @ observer.C_gen[0]
    return EstimationTrace(t=lt.t, estimate=estimate, truth=truth,
                           decay_rate=fit_decay_rate(lt.t, estimate - truth))
