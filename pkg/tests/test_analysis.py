import numpy as np
import pytest

from rfc import analysis
from rfc.config import load_config
from rfc.errors import InconsistencyError, ParameterError, StageError
from rfc.numkit import Poly, RationalTf, eigenvalues
from rfc.pipeline import conventional_design

CASES = [  # (J_mi, g_dob, g_rtob)
    (0.25, 500, 500),
    (0.25, 500, 1000),
    (0.5, 500, 1000),
    (0.125, 500, 1000),
    (0.125, 300, 700),
]


def closed_form_L(s, J_m, J_mn, J_mi, D, K, g_D, g_R):
    """Hand-derived frictionless L(s) for constant observers with conventional gains."""
    num = g_R * (s + g_D) * ((J_m - J_mi) * s**2 + D * s + K)
    den = s * (s + g_R) * (J_m * s**2 + (D + g_D * J_mn) * s + K)
    return num / den


@pytest.mark.parametrize("J_mi,g_D,g_R", CASES)
def test_L_matches_closed_form(J_mi, g_D, g_R):
    d = conventional_design(J_mi=J_mi, g_dob=g_D, g_rtob=g_R)
    pts = np.array([10 + 20j, 300j, -40 + 900j, 5000 + 1j])
    ref = closed_form_L(pts, 0.25, 0.25, J_mi, 50.0, 1e4, g_D, g_R)
    assert np.max(np.abs(d.tfs.L(pts) - ref) / np.abs(ref)) < 1e-9


@pytest.mark.parametrize("J_mi,g_D,g_R", CASES)
def test_L_numerator_from_charpoly_difference(J_mi, g_D, g_R):
    # det(sI - A + b c) - det(sI - A) = c adj(sI - A) b
    d = conventional_design(J_mi=J_mi, g_dob=g_D, g_rtob=g_R)
    sys = d.inner
    pa = np.poly(sys.A)
    num = np.poly(sys.A - sys.B_a @ sys.C_a) - pa
    L = d.tfs.L
    pts = np.array([7 + 100j, 2000j])
    ref = np.polyval(num, pts) / np.polyval(pa, pts)
    assert np.allclose(L(pts), ref, rtol=1e-7)


def test_rhp_zero_location_fig2c():
    d = load_config("fig2c").design()
    zeros = d.tfs.L.zeros()
    rhp = zeros[zeros.real > 0]
    # (J_m - J_mi) s^2 + D s + K with J_mi = 2 J_m: s = (50 + sqrt(2500 + 1e4)) / 0.5
    assert rhp.size == 1
    assert rhp[0].real == pytest.approx((50 + np.sqrt(2500 + 1e4)) / 0.5, rel=1e-8)


def test_fig2a_records_exact_cancellation():
    d = load_config("fig2a").design()
    assert d.tfs.L.den.degree == 3
    assert np.allclose(d.tfs.L.cancelled, [-500.0], atol=1e-6)
    loc = analysis.root_locus(d.tfs.L, [0.5, 1.0, 2.0])
    assert loc.branches.shape == (3, 4)


def test_classification_and_compensator():
    rep = conventional_design(J_mi=0.125, g_dob=500, g_rtob=1000).report
    assert rep.minimum_phase and rep.has_integrator and rep.relative_degree == 1
    assert rep.compensator is analysis.Compensator.LEAD
    lag = conventional_design(g_dob=1000, g_rtob=500).report
    assert lag.compensator is analysis.Compensator.LAG
    assert conventional_design().report.compensator is analysis.Compensator.NEUTRAL


def test_root_locus_branches_start_at_open_loop_poles():
    d = load_config("fig2d").design()
    grid = np.logspace(-3, 2, 40)
    loc = analysis.root_locus(d.tfs.L, grid)
    assert loc.branches.shape == (40, 4)
    assert analysis.pole_mismatch(loc.branches[0], loc.poles) < 1e-2 * np.max(np.abs(loc.poles))
    # continuity: each step moves a pole by less than half its own magnitude
    step = np.abs(np.diff(loc.branches, axis=0))
    size = np.maximum(np.abs(loc.branches[1:]), np.abs(loc.branches[:-1]))
    assert np.all(step <= 0.5 * np.maximum(size, 1.0))
    # at high gain three branches end near the zeros, one runs off to -inf
    end = loc.branches[-1]
    far = end[np.argmax(np.abs(end))]
    assert far.real < -1e4
    assert analysis.pole_mismatch(np.delete(end, np.argmax(np.abs(end))), loc.zeros) < 0.05 * np.max(np.abs(loc.zeros))


@pytest.mark.parametrize("grid", [[], [1.0, 1.0], [2.0, 1.0], [-1.0, 1.0]])
def test_root_locus_rejects_bad_grid(grid):
    L = RationalTf(Poly([1.0]), Poly([1.0, 1.0]))
    with pytest.raises(ParameterError):
        analysis.root_locus(L, grid)


def test_cross_check_catches_wrong_tf():
    d = load_config("fig2d").design()
    assert analysis.cross_check_poles(d.inner, d.tfs.L, 2.0) < 1e-6
    wrong = RationalTf(d.tfs.L.num.scale(1.1), d.tfs.L.den)
    with pytest.raises(InconsistencyError):
        analysis.cross_check_poles(d.inner, wrong, 2.0)
    with pytest.raises(StageError):
        analysis.cross_check_poles(d.open_loop, d.tfs.L, 2.0)


def test_critical_gain():
    dc = load_config("fig2c").design()
    c = analysis.critical_gain(dc.tfs.L)
    assert c == pytest.approx(1.1187, rel=1e-3)
    assert analysis.critical_gain(load_config("fig2d").design().tfs.L) is None


def test_damping_helpers():
    p = analysis.dominant_complex_pair(np.array([-1000.0, -100 + 173.2j, -100 - 173.2j]))
    assert p == -100 + 173.2j
    assert analysis.damping_ratio(p) == pytest.approx(0.5, rel=1e-3)
    assert analysis.dominant_complex_pair(np.array([-1.0, -2.0])) is None


def test_extract_requires_inner_stage():
    d = conventional_design()
    with pytest.raises(StageError):
        analysis.extract_tfs(d.open_loop)
    with pytest.raises(StageError):
        analysis.static_gain(d.inner)


def test_disturbance_channels_reject_constant_disturbances():
    # the DOb integrator rejects constant tau_u and tau_i steps in steady state
    d = load_config("fig2d").design()
    outer = d.outer()
    for col in (outer.D_a, outer.B_rho_a):
        dc = float(-(outer.C_a @ np.linalg.solve(outer.A, col)).item())
        assert abs(dc) < 1e-9


def test_viscous_friction_keeps_integrator():
    d = conventional_design(J_mi=0.125, g_rtob=1000, b_m=0.5, b_mn=0.5, b_mi=0.5)
    assert d.report.has_integrator
    assert np.all(eigenvalues(d.outer().A).real < 0)
