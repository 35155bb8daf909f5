import numpy as np
import pytest

from rfc.errors import ParameterError, StageError
from rfc.loopsys import (
    ControllerGains,
    Stage,
    assemble_open_loop,
    build_loop,
    close_inner_loop,
    close_outer_loop,
    measurement_noise_map,
)
from rfc.numkit import eigenvalues
from rfc.pipeline import conventional_design
from rfc.plant import Environment


@pytest.fixture
def design():
    return conventional_design(J_mi=0.125, g_dob=500, g_rtob=1000)


def test_block_structure(design):
    ol = design.open_loop
    assert ol.stage is Stage.OPEN and ol.n == 4
    x, s, r = ol.slices
    assert np.allclose(ol.A[x, :], [[0, 1, 0, 0], [-4e4, -200, 0, 0]])
    assert ol.A[2, 3] == 0 and ol.A[3, 2] == 0
    assert ol.A[2, 2] == -500 and ol.A[3, 3] == -1000
    assert np.allclose(ol.D_a.ravel(), [0, -4, 0, 0])
    assert np.allclose(ol.C_a, [[0, -125, 0, 1]])
    assert np.allclose(ol.dob_row, [[0, -125, 1, 0]])
    # open loop is block lower triangular: its modes are the blocks' modes
    expected = np.concatenate([eigenvalues(ol.plant_A), [-500, -1000]])
    assert np.allclose(np.sort_complex(eigenvalues(ol.A)), np.sort_complex(expected))


def test_stage_order_enforced(design):
    with pytest.raises(StageError):
        close_outer_loop(design.open_loop, ControllerGains(2.0))
    inner = close_inner_loop(design.open_loop)
    with pytest.raises(StageError):
        close_inner_loop(inner)
    outer = close_outer_loop(inner, ControllerGains(2.0))
    assert outer.stage is Stage.OUTER_CLOSED and outer.C_f == 2.0
    with pytest.raises(ParameterError):
        ControllerGains(-1.0)


def test_swapped_observers_rejected(design):
    with pytest.raises(ParameterError):
        assemble_open_loop(design.open_loop.plant, design.env, design.rtob, design.dob)


def test_build_loop_matches_pipeline(design):
    sys = build_loop(design.open_loop.plant, design.env, design.dob, design.rtob, C_f=2.0)
    assert np.array_equal(sys.A, design.outer().A)


def test_inner_loop_modes_with_exact_nominal_model():
    # J_mn = J_m: modes are 0, -g_RTOb and the roots of J s^2 + (D + g_DOb J) s + K
    d = conventional_design(J_mi=0.125, g_dob=500, g_rtob=1000)
    expected = np.concatenate([[0.0, -1000.0], np.roots([0.25, 50 + 500 * 0.25, 1e4])])
    got = eigenvalues(d.inner.A)
    assert np.allclose(np.sort_complex(got), np.sort_complex(expected), atol=1e-6)


def test_literal_output_inertia_switch(design):
    from dataclasses import replace

    lit = replace(design, literal_output_inertia=True)
    assert np.allclose(lit.open_loop.C_a, [[0, -250, 0, 1]])
    assert np.array_equal(lit.open_loop.A, design.open_loop.A)


def test_unfolded_plant_keeps_free_dynamics(design):
    ol = assemble_open_loop(design.open_loop.plant, Environment(50, 1e4), design.dob, design.rtob, fold=False)
    assert not ol.env_folded
    assert np.allclose(ol.A[:2, :2], [[0, 1], [0, 0]])


def test_noise_map_frame_equivalence(design):
    """Reading y = x + eta is the derivative-input form after a change of frame."""
    sys = design.inner
    G, c_int, c_dis = measurement_noise_map(sys)
    n = sys.n
    for s in (30 + 200j, 800j, -50 + 3000j):
        res = np.linalg.inv(s * np.eye(n) - sys.A)
        direct = (c_int + sys.C_a @ res @ G)[0, 1]
        deriv = (sys.C_a @ res @ (sys.N_a[:, 1] + s * sys.N_a[:, 3]))[0]
        assert abs(direct - deriv) < 1e-9 * abs(deriv)
    assert np.allclose(G[:2, :], sys.B_a[:2] @ c_dis)
