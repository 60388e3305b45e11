import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grk_workbench.reduced_model import (
    DatabaseGeometry,
    Letter,
    OperatorWord,
    apply_word,
    apply_word_naive,
    global_grover,
    initial_state,
    local_grover,
    residual_amplitude,
    target_block_probability,
)

geometries = st.integers(2, 24).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1)))
words = st.lists(st.sampled_from("GL"), max_size=60).map(lambda xs: OperatorWord.parse("".join(xs)))


def test_geometry_6_3():
    g = DatabaseGeometry(6, 3)
    assert (g.N, g.b, g.K) == (64, 8, 8)
    assert math.sin(g.gamma) == pytest.approx(1 / math.sqrt(8), abs=1e-15)


def test_geometry_2_1():
    g = DatabaseGeometry(2, 1)
    assert (g.N, g.b, g.K) == (4, 2, 2)
    assert math.sin(g.theta2) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("n,m", [(3, 3), (3, 0), (2, 5)])
def test_geometry_rejects_bad_split(n, m):
    with pytest.raises(ValueError):
        DatabaseGeometry(n, m)


def test_geometry_rejects_non_integers():
    with pytest.raises(TypeError):
        DatabaseGeometry(6.0, 3)


@given(geometries)
def test_geometry_invariants(nm):
    g = DatabaseGeometry(*nm)
    assert g.N == g.b * g.K
    for angle, count in ((g.theta1, g.N), (g.theta2, g.b), (g.gamma, g.K)):
        assert 0 < angle <= math.pi / 2
        assert math.sin(angle) == pytest.approx(1 / math.sqrt(count), rel=1e-14)


@given(geometries)
def test_operators_orthogonal_with_expected_determinants(nm):
    g = DatabaseGeometry(*nm)
    G, L = global_grover(g), local_grover(g)
    assert np.allclose(G.T @ G, np.eye(3), atol=1e-12)
    assert np.allclose(L.T @ L, np.eye(3), atol=1e-12)
    assert np.linalg.det(G) == pytest.approx(-1, abs=1e-12)
    assert np.linalg.det(L) == pytest.approx(1, abs=1e-12)
    assert L[2, 2] == 1.0 and L[2, 0] == 0.0 and L[2, 1] == 0.0


def test_global_2_1_corner_entry():
    # sin(gamma) = 1/sqrt 2 gives 2 cos^2 gamma - 1 = 0
    assert global_grover(DatabaseGeometry(2, 1))[2, 2] == pytest.approx(0, abs=1e-15)


def test_local_2_1_is_quarter_turn():
    L = local_grover(DatabaseGeometry(2, 1))
    assert np.allclose(L, [[0, 1, 0], [-1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_global_matches_reflection_about_initial_state():
    # D_n O_t in the reduced basis is (2|s><s| - I)(I - 2|t><t|)
    g = DatabaseGeometry(7, 3)
    s = initial_state(g)
    expected = (2 * np.outer(s, s) - np.eye(3)) @ np.diag([-1.0, 1.0, 1.0])
    assert np.allclose(global_grover(g), expected, atol=1e-14)


def test_initial_state_6_3():
    psi = initial_state(DatabaseGeometry(6, 3))
    assert np.allclose(psi, [1 / 8, math.sqrt(7) / 8, math.sqrt(7 / 8)], atol=1e-15)
    assert residual_amplitude(psi) == pytest.approx(0.93541, abs=1e-5)


@given(geometries)
def test_initial_state_target_amplitude_and_norm(nm):
    g = DatabaseGeometry(*nm)
    psi = initial_state(g)
    assert psi[0] == pytest.approx(1 / math.sqrt(g.N), rel=1e-13)
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)


def test_empty_word_leaves_state():
    g = DatabaseGeometry(5, 2)
    assert np.array_equal(apply_word(g, OperatorWord()), initial_state(g))


def test_single_local_on_2_1():
    g = DatabaseGeometry(2, 1)
    out = apply_word(g, OperatorWord((Letter.LOCAL,)), np.array([0.5, 0.5, 1 / math.sqrt(2)]))
    assert np.allclose(out, [0.5, -0.5, 1 / math.sqrt(2)], atol=1e-15)


@settings(max_examples=50)
@given(geometries, words)
def test_norm_preserved_and_power_path_matches_naive(nm, word):
    g = DatabaseGeometry(*nm)
    fast = apply_word(g, word)
    assert np.linalg.norm(fast) == pytest.approx(1, abs=1e-10)
    assert np.allclose(fast, apply_word_naive(g, word), atol=1e-10)


def test_long_runs_use_matrix_power_consistently():
    g = DatabaseGeometry(12, 6)
    word = OperatorWord.from_runs([("G", 40), ("L", 17), ("G", 1)])
    assert np.allclose(apply_word(g, word), apply_word_naive(g, word), atol=1e-10)


def test_norm_preserved_for_very_long_word():
    g = DatabaseGeometry(20, 10)
    word = OperatorWord.from_runs([("G", 5000), ("L", 3000), ("G", 2000)])
    assert np.linalg.norm(apply_word(g, word)) == pytest.approx(1, abs=1e-10)


def test_word_runs_and_round_trip():
    w = OperatorWord.parse("GGLLG")
    assert w.runs() == [("G", 2), ("L", 2), ("G", 1)]
    assert OperatorWord.from_runs(w.runs()) == w
    assert str(OperatorWord.glg(3, 2)) == "GGGLLG"
    with pytest.raises(ValueError):
        OperatorWord.from_runs([("G", 0)])


def test_target_block_probability():
    assert target_block_probability(np.array([0.6, 0.8, 0.0])) == 1.0
    psi = initial_state(DatabaseGeometry(6, 3))
    assert target_block_probability(psi) == pytest.approx(1 / 8, abs=1e-15)
