"""Transfer functions, minimum-phase checks and root loci of the force loop.

All transfer functions are obtained numerically from the inner-loop
resolvent ``C_a (sI - A_CLi)^-1 b`` rather than from closed-form
expressions, so they hold for any observer/plant combination.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DegenerateSamplingError,
    ExtractionError,
    InconsistencyError,
    LocusError,
    NoConvergenceError,
    ParameterError,
    StageError,
)
from .loopsys import AugmentedSystem, Stage
from .numkit import EIG_RTOL, RationalTf, eigenvalues, poly_roots, rational_fit, spectral_scale

ORIGIN_TOL = 1e-6
RHP_TOL = 1e-6
DEFAULT_GAIN_GRID = tuple(np.logspace(-2, 2, 60))


class Compensator(str, Enum):
    LEAD = "lead"
    LAG = "lag"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class TfSet:
    """Transfer functions from each exogenous input to ``tau_int_hat``.

    ``L`` is driven by ``tau_per``; ``T_tau_d`` by the unknown disturbance
    ``tau_u``; ``T_tau_i`` by the identified-disturbance input; ``T_noise``
    by the velocity measurement noise.
    """

    L: RationalTf
    T_tau_d: RationalTf
    T_tau_i: RationalTf
    T_noise: RationalTf

    def items(self):
        return (("L", self.L), ("T_tau_d", self.T_tau_d), ("T_tau_i", self.T_tau_i), ("T_noise", self.T_noise))


@dataclass(frozen=True)
class MinimumPhaseReport:
    relative_degree: int
    zeros: np.ndarray
    poles: np.ndarray
    has_integrator: bool
    rhp_zero: bool
    compensator: Compensator

    @property
    def minimum_phase(self) -> bool:
        return not self.rhp_zero


@dataclass(frozen=True)
class RootLocus:
    gains: np.ndarray
    branches: np.ndarray  # (len(gains), n_branches) complex
    zeros: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))


def resolvent(sys: AugmentedSystem, column: np.ndarray, s: complex) -> complex:
    """``C_a (sI - A)^-1 column`` by a direct complex solve."""
    n = sys.n
    v = np.linalg.solve(s * np.eye(n) - sys.A, np.asarray(column, dtype=complex).reshape(n))
    return complex((sys.C_a @ v).item())


def _velocity_noise_column(sys: AugmentedSystem):
    # eta = [eta_q, eta_dq, d eta_q, d eta_dq]; velocity noise uses cols 1 and 3 (times s)
    n1 = sys.N_a[:, 1]
    n3 = sys.N_a[:, 3]
    return lambda s: resolvent(sys, n1 + s * n3, s)


def tf_evaluators(sys: AugmentedSystem) -> dict:
    return {
        "L": lambda s: resolvent(sys, sys.B_a, s),
        "T_tau_d": lambda s: resolvent(sys, sys.D_a, s),
        "T_tau_i": lambda s: resolvent(sys, sys.B_rho_a, s),
        "T_noise": _velocity_noise_column(sys),
    }


def extract_tfs(sys: AugmentedSystem, *, check_rtol: float = 1e-6) -> TfSet:
    """Fit every exogenous transfer function of the inner-closed loop.

    Degrees follow from the state dimension ``n``: ``(n-1, n)`` for the
    input/disturbance channels and ``(n, n)`` for the noise channel, which
    carries a derivative of the noise.  Common factors are cancelled and
    recorded in each result's ``cancelled`` field.
    """
    if sys.stage is not Stage.INNER_CLOSED:
        raise StageError(f"transfer functions are taken at stage inner_closed, got {sys.stage.value}")
    if not sys.env_folded:
        raise StageError("transfer functions require the environment folded into A")
    n = sys.n
    modes = eigenvalues(sys.A)
    scale = max(1.0, float(np.max(np.abs(modes))))
    out = {}
    for name, fn in tf_evaluators(sys).items():
        num_deg = n if name == "T_noise" else n - 1
        try:
            out[name] = rational_fit(fn, num_deg, n, scale=scale)
        except DegenerateSamplingError as exc:
            raise ExtractionError(f"{name}: {exc}") from exc
        rng = np.random.default_rng(7)
        pts = scale * 10 ** rng.uniform(-2, 1, 8) * np.exp(1j * rng.uniform(0.1, 3.0, 8))
        ref = np.array([fn(s) for s in pts])
        err = np.max(np.abs(out[name](pts) - ref) / np.maximum(np.abs(ref), 1e-300))
        if err > check_rtol:
            raise ExtractionError(f"{name}: fit residual {err:.3g} exceeds {check_rtol}")
        out[name] = _attach_cancelled_modes(out[name], modes)
    return TfSet(**out)


def _attach_cancelled_modes(tf: RationalTf, modes: np.ndarray) -> RationalTf:
    """Record the state-space modes that do not appear as poles of ``tf``."""
    poles = tf.poles()
    if poles.size > modes.size:
        raise ExtractionError("fitted transfer function has more poles than the state dimension")
    if poles.size == modes.size:
        return replace(tf, cancelled=())
    cost = np.abs(poles[:, None] - modes[None, :])
    _, cols = linear_sum_assignment(cost)
    left = np.delete(modes, cols)
    return replace(tf, cancelled=tuple(complex(m) for m in left))


def classify(L: RationalTf, g_dob: float, g_rtob: float) -> MinimumPhaseReport:
    poles = L.poles()
    zeros = L.zeros()
    if g_rtob > g_dob:
        comp = Compensator.LEAD
    elif g_rtob < g_dob:
        comp = Compensator.LAG
    else:
        comp = Compensator.NEUTRAL
    return MinimumPhaseReport(
        relative_degree=L.relative_degree,
        zeros=zeros,
        poles=poles,
        has_integrator=bool(np.any(np.abs(poles) < ORIGIN_TOL)),
        rhp_zero=bool(np.any(zeros.real > RHP_TOL)),
        compensator=comp,
    )


def _pair(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - cur[None, :])
    _, cols = linear_sum_assignment(cost)
    return cur[cols]


def closed_loop_poles(L: RationalTf, gain: float, include_cancelled: bool = True) -> np.ndarray:
    """Roots of ``1 + gain*L = 0``; cancelled modes of ``L`` are fixed poles."""
    roots = poly_roots(L.closed_loop_poly(gain)) if L.den.degree else np.zeros(0, complex)
    if include_cancelled and L.cancelled:
        roots = np.concatenate([roots, np.asarray(L.cancelled, dtype=complex)])
    return roots


def open_loop_poles(L: RationalTf) -> np.ndarray:
    return np.concatenate([L.poles(), np.asarray(L.cancelled, dtype=complex)])


def root_locus(L: RationalTf, gain_grid=DEFAULT_GAIN_GRID) -> RootLocus:
    """Roots of ``den + C_f num`` along ``gain_grid`` with continuous branches.

    Branches are continued from the open-loop poles by optimal
    nearest-neighbour assignment between consecutive grid points.  Modes
    cancelled out of ``L`` stay put and appear as constant branches.
    """
    gains = np.asarray(list(gain_grid), dtype=float)
    if gains.size == 0:
        raise ParameterError("gain grid is empty")
    if np.any(np.diff(gains) <= 0) or gains[0] <= 0:
        raise ParameterError("gain grid must be strictly ascending and positive")
    prev = open_loop_poles(L)
    rows = []
    for g in gains:
        try:
            cur = closed_loop_poles(L, g)
        except (np.linalg.LinAlgError, NoConvergenceError, ValueError) as exc:
            raise LocusError(g, exc) from exc
        cur = _pair(prev, cur)
        rows.append(cur)
        prev = cur
    return RootLocus(gains=gains, branches=np.array(rows), zeros=L.zeros(), poles=open_loop_poles(L))


def pole_mismatch(a: np.ndarray, b: np.ndarray) -> float:
    if a.size != b.size:
        return np.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(np.max(cost[r, c])) if a.size else 0.0


def cross_check_poles(sys: AugmentedSystem, L: RationalTf, C_f: float, *, rtol: float = EIG_RTOL) -> float:
    """Compare ``eig(A_CL)`` with the roots of ``den_L + C_f num_L``.

    Cancelled pole/zero pairs of ``L`` are closed-loop poles for every gain
    and are added back before pairing.  ``sys`` may be inner- or
    outer-closed; an inner-closed system is closed here at ``C_f``.
    """
    if sys.stage is Stage.OUTER_CLOSED:
        A = sys.A
    elif sys.stage is Stage.INNER_CLOSED:
        A = sys.A - C_f * (sys.B_a @ sys.C_a)
    else:
        raise StageError("cross-check needs a closed inner loop")
    eig = eigenvalues(A)
    roots = closed_loop_poles(L, C_f)
    mismatch = pole_mismatch(eig, roots)
    bound = rtol * spectral_scale(A)
    if not mismatch < bound:
        raise InconsistencyError(f"pole mismatch {mismatch:.3g} exceeds {bound:.3g} at C_f={C_f}")
    return mismatch


def max_real_part(L: RationalTf, gain: float) -> float:
    return float(np.max(closed_loop_poles(L, gain).real))


def critical_gain(L: RationalTf, lo: float = 1e-3, hi: float = 1e2, *, rtol: float = 1e-4,
                  max_hi: float = 1e8) -> float | None:
    """Smallest gain at which ``1 + C_f L`` gets a right-half-plane root.

    Returns ``None`` when the loop stays stable up to ``max_hi``.  Assumes
    the loop is stable at ``lo`` and bisects on ``max Re(pole)``.
    """
    if max_real_part(L, lo) >= 0:
        return lo
    while max_real_part(L, hi) < 0:
        hi *= 2.0
        if hi > max_hi:
            return None
    while (hi - lo) > rtol * hi:
        mid = 0.5 * (lo + hi)
        if max_real_part(L, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def damping_ratio(p: complex) -> float:
    return float(-p.real / abs(p)) if p != 0 else 1.0


def dominant_complex_pair(poles: np.ndarray, imag_tol: float = 1e-9) -> complex | None:
    """Rightmost pole with positive imaginary part, if any."""
    cplx = poles[poles.imag > imag_tol * max(1.0, float(np.max(np.abs(poles))))]
    if cplx.size == 0:
        return None
    return complex(cplx[np.argmax(cplx.real)])


def static_gain(sys: AugmentedSystem) -> float:
    """``tau_ref -> tau_int_hat`` DC gain of the outer-closed loop."""
    if sys.stage is not Stage.OUTER_CLOSED:
        raise StageError("static gain is defined for the outer-closed loop")
    return float(-sys.C_f * (sys.C_a @ np.linalg.solve(sys.A, sys.B_a)).item())
