import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grk_workbench import control
from grk_workbench.control import (
    anchor_costate,
    bracket,
    compression_report,
    continuum_initial_state,
    endpoint_checks,
    first_switch_Y,
    gamma_from_K,
    generators,
    lie_closure_residual,
    longest_quiet_interval,
    phi_arc_X,
    phi_arc_Y,
    reduced_ode_matrix,
    rk4_linear,
    rotation,
    simulate_extremal,
    switching_matrices,
    switching_variables,
    tau_X,
)

gammas = st.floats(0.01, math.pi / 2 - 0.01)
ab = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(lambda p: abs(p[0]) > 1e-3)
G06 = math.asin(0.6)


def test_generators_at_s_06():
    X, Y = generators(G06)
    assert X[0, 1] == pytest.approx(0.36, abs=1e-15)
    assert X[0, 2] == pytest.approx(0.48, abs=1e-15)
    assert np.array_equal(Y, [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])


@given(gammas)
def test_skew_symmetry(g):
    for M in (*generators(g), *switching_matrices(g)):
        assert np.max(np.abs(M + M.T)) <= 1e-14


def test_bracket_at_s_06():
    X, Y = generators(G06)
    B = bracket(X, Y)
    expected = np.zeros((3, 3))
    expected[1, 2], expected[2, 1] = 0.48, -0.48
    assert np.allclose(B, expected, atol=1e-15)
    assert np.array_equal(bracket(X, X), np.zeros((3, 3)))
    assert np.array_equal(bracket(X, Y), -bracket(Y, X))


def test_lie_closure_at_half():
    assert lie_closure_residual(math.pi / 6) <= 1e-13


@given(gammas)
def test_lie_closure_random(g):
    assert lie_closure_residual(g) <= 1e-13
    X, Y = generators(g)
    F1, F2, _ = switching_matrices(g)
    assert np.max(np.abs(bracket(F1, X) - bracket(F1, Y))) <= 1e-14
    assert np.allclose(F2, bracket(X, Y))


def test_rotation_examples():
    X, Y = generators(0.4)
    assert np.array_equal(rotation(X, 0.0), np.eye(3))
    assert np.allclose(rotation(Y, math.pi / 2) @ [1, 0, 0], [0, -1, 0], atol=1e-15)
    assert np.allclose(rotation(X, 1.7) @ rotation(X, -1.7), np.eye(3), atol=1e-12)


@given(gammas, st.floats(-50, 50))
def test_rotation_matches_series_exponential(g, t):
    from scipy.linalg import expm

    X, _ = generators(g)
    R = rotation(X, t)
    assert np.allclose(R, expm(t * X), atol=1e-10)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)


@given(gammas, ab)
def test_phi_arc_X_properties(g, pair):
    a, b = pair
    s = math.sin(g)
    assert np.allclose(phi_arc_X(a, b, g, 0.0), (0, a, b))
    assert np.allclose(phi_arc_X(a, b, g, tau_X(g)), (0, -a, b), atol=1e-12 * (1 + abs(a) / s))
    ts = np.linspace(0, 4 * math.pi / s, 50)
    f1, _, f3 = phi_arc_X(a, b, g, ts)
    assert np.allclose(f3 - s * s * f1, b, atol=1e-11)


@given(ab)
def test_phi_arc_Y_properties(pair):
    a, b = pair
    assert np.allclose(phi_arc_Y(a, b, 0.0), (0, a, b))
    assert np.allclose(phi_arc_Y(a, b, first_switch_Y(a, b)), (0, -a, b), atol=1e-12 * (1 + abs(a) + abs(b)))
    ts = np.linspace(0, 20, 50)
    f1, f2, f3 = phi_arc_Y(a, b, ts)
    assert np.allclose(f2**2 + f3**2, a * a + b * b, atol=1e-11)
    assert np.allclose(f3 - f1, b, atol=1e-11)


def test_phi_arc_Y_one_one():
    assert np.allclose(phi_arc_Y(1, 1, math.pi / 2), (0, -1, 1), atol=1e-15)


def test_first_switch_Y_examples():
    assert first_switch_Y(1, 1) == pytest.approx(math.pi / 2, abs=1e-15)
    assert first_switch_Y(1, 0) == pytest.approx(math.pi, abs=1e-15)
    assert first_switch_Y(-1, 1) == pytest.approx(3 * math.pi / 2, abs=1e-15)
    with pytest.raises(ValueError):
        first_switch_Y(0, 0)


def test_first_switch_Y_is_first_sign_change():
    ts = np.linspace(1e-6, 3 * math.pi / 2 - 1e-6, 20001)
    f1 = phi_arc_Y(-1, 1, ts)[0]
    assert np.all(f1 < 0)


def test_reduced_ode_matches_closed_forms():
    g = 0.3
    s = math.sin(g)
    a, b = 0.7, -0.4
    ts, ms = rk4_linear(reduced_ode_matrix(g, "X"), [0, a, b], 4 * math.pi / s, 40000)
    assert np.max(np.abs(ms - np.column_stack(phi_arc_X(a, b, g, ts)))) <= 1e-8
    ts, ms = rk4_linear(reduced_ode_matrix(g, "Y"), [0, a, b], 4 * math.pi / s, 40000)
    assert np.max(np.abs(ms - np.column_stack(phi_arc_Y(a, b, ts)))) <= 1e-8


def test_switching_variables_follow_arc_formulas():
    # from a point on the switching surface, the PMP pairings obey the reduced closed forms
    g = 0.5
    X, Y = generators(g)
    psi = continuum_initial_state(g)
    p = np.array([0.3, -0.8, 0.52])
    phis0 = switching_variables(g, psi, p)
    assert abs(phis0.phi1) < 1e-15  # (X - Y) x0 = 0
    for A, name in ((X, "X"), (Y, "Y")):
        for t in (0.3, 2.0, 7.5):
            R = rotation(A, t)
            got = switching_variables(g, R @ psi, R @ p)
            want = (phi_arc_X(phis0.phi2, phis0.phi3, g, t) if name == "X"
                    else phi_arc_Y(phis0.phi2, phis0.phi3, t))
            assert np.allclose(got, want, atol=1e-12)


def test_costate_finite_difference():
    g = 0.4
    X, _ = generators(g)
    p0 = np.array([0.2, 0.5, -0.3])
    h = 1e-5
    for t in (0.0, 1.0, 4.0):
        dp = (rotation(X, t + h) @ p0 - rotation(X, t - h) @ p0) / (2 * h)
        assert np.allclose(dp, X @ rotation(X, t) @ p0, atol=1e-8)
        assert np.allclose(-X.T, X)


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def test_initial_control_follows_sign_of_phi():
    g = gamma_from_K(16)
    X, Y = generators(g)
    rng = np.random.default_rng(3)
    psi = random_unit(rng)
    for _ in range(20):
        p = random_unit(rng)
        phi = p @ (X - Y) @ psi
        traj = simulate_extremal(g, psi, p, 5.0)
        assert traj.arcs[0].control == ("X" if phi > 0 else "Y")


@pytest.mark.parametrize("K", [4, 16, 64])
def test_extremal_invariants(K):
    g = gamma_from_K(K)
    s = math.sin(g)
    rng = np.random.default_rng(K)
    for _ in range(5):
        traj = simulate_extremal(g, continuum_initial_state(g), random_unit(rng), 6 * math.pi / s)
        assert np.ptp(traj.hamiltonian) <= 1e-9
        for gap in traj.x_gaps():
            assert gap == pytest.approx(math.pi / s, abs=1e-10)
        assert longest_quiet_interval(traj) <= 1e-3
        # control constant between recorded switches
        for arc in traj.arcs:
            inside = (traj.times > arc.start) & (traj.times < arc.end)
            assert {c for c, m in zip(traj.control, inside) if m} <= {arc.control}


def test_consecutive_Y_arcs_have_equal_length():
    g = gamma_from_K(16)
    s = math.sin(g)
    rng = np.random.default_rng(11)
    seen = 0
    for _ in range(10):
        traj = simulate_extremal(g, continuum_initial_state(g), random_unit(rng), 6 * math.pi / s)
        ys = traj.complete_arcs("Y")
        for y1, y2 in zip(ys, ys[1:]):
            assert y1.length == pytest.approx(y2.length, abs=1e-9)
            seen += 1
    assert seen > 0


def test_generic_start_switch_located():
    # a Y-arc whose offset exceeds its amplitude never switches, so sample several starts
    g = 0.6
    rng = np.random.default_rng(5)
    switched = 0
    for _ in range(10):
        traj = simulate_extremal(g, random_unit(rng), random_unit(rng), 30.0)
        if traj.switching_times:
            switched += 1
            assert np.allclose(traj.switching_function(traj.switching_times), 0, atol=1e-9)
    assert switched >= 5


def test_singular_start_halts():
    g = 0.5
    psi = continuum_initial_state(g)
    # p orthogonal to both (X-Y) psi = 0 trivially and to F2 psi
    F1, F2, _ = switching_matrices(g)
    v = F2 @ psi
    p = np.cross(v, [1.0, 0.0, 0.0])
    p = p if np.linalg.norm(p) > 1e-6 else np.cross(v, [0.0, 1.0, 0.0])
    traj = simulate_extremal(g, psi, p, 10.0)
    assert traj.halted and "singular" in traj.diagnostic


def test_anchor_costate_reaches_normal():
    g = gamma_from_K(16)
    s = math.sin(g)
    psi0 = continuum_initial_state(g)
    sched = [("X", math.pi / (2 * s))]
    p0 = anchor_costate(g, psi0, sched)
    X, _ = generators(g)
    R = rotation(X, math.pi / (2 * s))
    pT, psiT = R @ p0, R @ psi0
    assert abs(psiT[2]) < 1e-15
    assert np.allclose(pT[:2], 0, atol=1e-15)
    assert pT @ X @ psiT == pytest.approx(1.0, abs=1e-12)


def test_compression_examples():
    r = compression_report(math.pi / 6, math.pi)
    assert r.L_YXY == pytest.approx(4 * math.pi, abs=1e-12)
    assert r.gap_YXY == pytest.approx(2 * math.pi, abs=1e-12)
    r = compression_report(math.pi / 6, math.pi / 3)
    assert r.L_XYX == pytest.approx(4 * math.pi + math.pi / 3, abs=1e-12)
    assert r.gap_XYX == pytest.approx(4 * math.pi, abs=1e-12)
    assert r.gap_YXY_equal_arcs == pytest.approx(2 * math.pi / 3, abs=1e-12)


@given(gammas, st.floats(1e-6, 2 * math.pi - 1e-6))
def test_compression_gaps_positive(g, ell):
    r = compression_report(g, ell)
    assert r.gap_YXY > 0 and r.gap_XYX > 0


def test_compression_rejects_bad_ell():
    with pytest.raises(ValueError):
        compression_report(0.5, 0.0)


def test_endpoint_examples():
    r = endpoint_checks(math.pi / 6, math.pi)
    assert abs(r.x_arc_u) <= 1e-15
    assert r.y_arc_u_drift <= 1e-13
    r0 = endpoint_checks(math.pi / 6, 0.0)
    assert r0.x_arc_u == pytest.approx(math.cos(math.pi / 6), abs=1e-15)


@settings(max_examples=30)
@given(gammas, st.floats(0, 20))
def test_endpoint_checks_random(g, tau):
    r = endpoint_checks(g, tau)
    assert r.y_arc_u_drift <= 1e-13
    assert r.x_arc_max_deviation <= 1e-10


def test_gamma_validation():
    with pytest.raises(ValueError):
        generators(0.0)
    with pytest.raises(ValueError):
        generators(math.pi / 2)
