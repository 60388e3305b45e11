import numpy as np
import pytest

from grk_workbench.full_space import (
    compare_with_reduced,
    reduced_embedding,
    simulate_full,
)
from grk_workbench.reduced_model import DatabaseGeometry, OperatorWord, apply_word, global_grover

RNG = np.random.default_rng(7)


def random_word(length):
    return OperatorWord.parse("".join(RNG.choice(["G", "L"], size=length)))


def test_empty_word_is_uniform():
    amps = simulate_full(4, 2, 5, OperatorWord()).amplitudes
    assert np.allclose(amps, 0.25, atol=1e-15)


def test_single_global_n2_by_hand():
    # O_t flips item 3; D_n = 2|s><s| - I on 4 items
    s = np.full(4, 0.5)
    O = np.diag([1.0, 1.0, 1.0, -1.0])
    D = 2 * np.outer(s, s) - np.eye(4)
    expected = D @ O @ s
    out = simulate_full(2, 1, 3, OperatorWord.parse("G")).amplitudes
    assert np.allclose(out, expected, atol=1e-15)
    assert np.allclose(expected, [0, 0, 0, 1])


def test_single_local_n3_by_hand():
    s = np.full(8, 1 / np.sqrt(8))
    O = np.eye(8)
    O[6, 6] = -1
    block = np.full((2, 2), 0.5)
    D = np.kron(np.eye(4), 2 * block - np.eye(2))
    out = simulate_full(3, 1, 6, OperatorWord.parse("L")).amplitudes
    assert np.allclose(out, D @ O @ s, atol=1e-15)


def test_norm_preserved():
    out = simulate_full(6, 3, 11, random_word(40)).amplitudes
    assert np.linalg.norm(out) == pytest.approx(1, abs=1e-12)


def test_embedding_orthonormal_and_supported():
    n, m, target = 6, 2, 22
    emb = reduced_embedding(n, m, target)
    B = emb.basis()
    assert np.allclose(B @ B.T, np.eye(3), atol=1e-12)
    block = slice(20, 24)
    assert emb.ntt[target] == 0
    assert np.count_nonzero(emb.ntt) == 3 and np.all(emb.ntt[block][[0, 1, 3]] > 0)
    assert np.all(emb.u[block] == 0) and np.count_nonzero(emb.u) == 60


def test_empty_word_has_zero_deviation():
    assert compare_with_reduced(5, 2, 9, OperatorWord()) == pytest.approx((0, 0), abs=1e-12)


def test_random_word_length_50_on_6_3():
    target = int(RNG.integers(64))
    dev, leak = compare_with_reduced(6, 3, target, random_word(50))
    assert dev <= 1e-10 and leak <= 1e-10


def test_reduced_trajectory_independent_of_target():
    word = random_word(20)
    geom = DatabaseGeometry(4, 2)
    ref = apply_word(geom, word)
    for target in range(16):
        emb = reduced_embedding(4, 2, target).basis()
        coords = emb @ simulate_full(4, 2, target, word).amplitudes
        assert np.allclose(coords, ref, atol=1e-10)


def test_double_global_matches_reduced_square():
    geom = DatabaseGeometry(5, 2)
    G = global_grover(geom)
    full = simulate_full(5, 2, 13, OperatorWord.parse("GG")).amplitudes
    u = reduced_embedding(5, 2, 13).u @ full
    assert u == pytest.approx((G @ G @ apply_word(geom, OperatorWord()))[2], abs=1e-10)


def test_qubit_cap_and_target_range():
    with pytest.raises(ValueError):
        simulate_full(22, 11, 0, OperatorWord())
    with pytest.raises(ValueError):
        simulate_full(4, 2, 16, OperatorWord())
