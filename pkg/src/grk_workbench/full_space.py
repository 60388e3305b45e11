"""Brute-force 2**n statevector simulation of oracle, global and local diffusion.

Item index x is split as x = t1 * b + t2, so block t1 occupies the contiguous
index range [t1*b, (t1+1)*b).  All amplitudes stay real.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reduced_model import (
    DatabaseGeometry,
    Letter,
    OperatorWord,
    global_grover,
    initial_state,
    local_grover,
)

DEFAULT_MAX_QUBITS = 20


@dataclass(frozen=True)
class ReducedEmbedding:
    """Orthonormal vectors |t>, |ntt>, |u> in the full 2**n space."""

    t: np.ndarray
    ntt: np.ndarray
    u: np.ndarray

    def basis(self) -> np.ndarray:
        return np.stack([self.t, self.ntt, self.u])


@dataclass(frozen=True)
class FullState:
    amplitudes: np.ndarray
    n: int
    target: int


def _check_args(n: int, m: int, target: int, max_qubits: int) -> DatabaseGeometry:
    if n > max_qubits:
        raise ValueError(f"n={n} exceeds the full-space cap of {max_qubits} qubits")
    geom = DatabaseGeometry(n, m)
    if not 0 <= target < geom.N:
        raise ValueError(f"target {target} outside [0, {geom.N})")
    return geom


def reduced_embedding(n: int, m: int, target: int) -> ReducedEmbedding:
    geom = DatabaseGeometry(n, m)
    N, b = geom.N, geom.b
    block = target // b
    t = np.zeros(N)
    t[target] = 1.0
    ntt = np.zeros(N)
    ntt[block * b : (block + 1) * b] = 1.0 / np.sqrt(b - 1)
    ntt[target] = 0.0
    u = np.full(N, 1.0 / np.sqrt(N - b))
    u[block * b : (block + 1) * b] = 0.0
    return ReducedEmbedding(t, ntt, u)


def _oracle(psi: np.ndarray, target: int) -> np.ndarray:
    out = psi.copy()
    out[target] = -out[target]
    return out


def _global_diffusion(psi: np.ndarray) -> np.ndarray:
    # 2|s><s|psi> - psi with |s> uniform
    return 2.0 * psi.mean() - psi


def _local_diffusion(psi: np.ndarray, b: int) -> np.ndarray:
    blocks = psi.reshape(-1, b)
    return (2.0 * blocks.mean(axis=1, keepdims=True) - blocks).reshape(-1)


def step(psi: np.ndarray, letter: Letter, target: int, b: int) -> np.ndarray:
    """One oracle call followed by the diffusion named by ``letter``."""
    marked = _oracle(psi, target)
    if letter is Letter.GLOBAL:
        return _global_diffusion(marked)
    return _local_diffusion(marked, b)


def simulate_full(
    n: int,
    m: int,
    target: int,
    word: OperatorWord,
    *,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> FullState:
    geom = _check_args(n, m, target, max_qubits)
    psi = np.full(geom.N, 1.0 / np.sqrt(geom.N))
    for letter in word.letters:
        psi = step(psi, letter, target, geom.b)
    return FullState(psi, n, target)


def compare_with_reduced(
    n: int,
    m: int,
    target: int,
    word: OperatorWord,
    *,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> tuple[float, float]:
    """Largest reduced-coordinate deviation and leakage along the whole trajectory.

    The full state is projected onto the embedding after every letter and
    compared with the 3-dimensional trajectory; leakage is the norm of the
    component orthogonal to span{|t>, |ntt>, |u>}.
    """
    geom = _check_args(n, m, target, max_qubits)
    basis = reduced_embedding(n, m, target).basis()
    ops = {Letter.GLOBAL: global_grover(geom), Letter.LOCAL: local_grover(geom)}

    psi = np.full(geom.N, 1.0 / np.sqrt(geom.N))
    red = np.array(initial_state(geom))
    deviation = leakage = 0.0
    for letter in (None, *word.letters):
        if letter is not None:
            psi = step(psi, letter, target, geom.b)
            red = ops[letter] @ red
        coords = basis @ psi
        deviation = max(deviation, float(np.max(np.abs(coords - red))))
        leakage = max(leakage, float(np.linalg.norm(psi - coords @ basis)))
    return deviation, leakage
