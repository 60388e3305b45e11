"""Exact partial-search dynamics in the three-dimensional invariant subspace.

Coordinates are taken in the ordered basis (|t>, |ntt>, |u>): the target item,
the normalized superposition of the other items in the target block, and the
normalized superposition of every item outside the target block.  States are
plain length-3 float arrays and operators are 3x3 orthogonal float arrays.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

NORM_DRIFT_LIMIT = 1e-8
RUN_POWER_THRESHOLD = 16


class Letter(str, Enum):
    GLOBAL = "G"
    LOCAL = "L"


@dataclass(frozen=True)
class DatabaseGeometry:
    """Database of N = 2**n items split into K = 2**(n-m) blocks of b = 2**m items."""

    n: int
    m: int
    N: int = field(init=False)
    b: int = field(init=False)
    K: int = field(init=False)
    theta1: float = field(init=False)
    theta2: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and isinstance(self.m, int)):
            raise TypeError("n and m must be integers")
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got n={self.n}, m={self.m}")
        N, b, K = 2**self.n, 2**self.m, 2 ** (self.n - self.m)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "theta1", math.asin(1.0 / math.sqrt(N)))
        object.__setattr__(self, "theta2", math.asin(1.0 / math.sqrt(b)))
        object.__setattr__(self, "gamma", math.asin(1.0 / math.sqrt(K)))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "N": self.N,
            "b": self.b,
            "K": self.K,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "gamma": self.gamma,
        }


def make_geometry(n: int, m: int) -> DatabaseGeometry:
    return DatabaseGeometry(n, m)


@dataclass(frozen=True)
class OperatorWord:
    """Sequence of Grover letters, listed in application order."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "letters", tuple(Letter(x) for x in self.letters))

    @classmethod
    def parse(cls, text: str) -> "OperatorWord":
        """Build a word from a string such as ``"GGLLG"``; whitespace is ignored."""
        return cls(tuple(Letter(ch) for ch in text.upper() if not ch.isspace()))

    @classmethod
    def from_runs(cls, runs: Iterable[tuple[str, int]]) -> "OperatorWord":
        letters: list[Letter] = []
        for letter, count in runs:
            if count < 1:
                raise ValueError("run counts must be >= 1")
            letters.extend([Letter(letter)] * count)
        return cls(tuple(letters))

    @classmethod
    def glg(cls, k1: int, k2: int) -> "OperatorWord":
        """The GRK-family word: k1 global, k2 local, then one global letter."""
        return cls((Letter.GLOBAL,) * k1 + (Letter.LOCAL,) * k2 + (Letter.GLOBAL,))

    def runs(self) -> list[tuple[str, int]]:
        return [(k.value, len(list(g))) for k, g in itertools.groupby(self.letters)]

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(x.value for x in self.letters)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def global_grover(geom: DatabaseGeometry) -> np.ndarray:
    """Reduced matrix of D_n O_t; orthogonal with determinant -1."""
    sg, cg = math.sin(geom.gamma), math.cos(geom.gamma)
    s2, c2 = math.sin(geom.theta2), math.cos(geom.theta2)
    return _readonly(
        np.array(
            [
                [1 - 2 * sg**2 * s2**2, 2 * sg**2 * s2 * c2, 2 * sg * cg * s2],
                [-2 * sg**2 * s2 * c2, 2 * sg**2 * c2**2 - 1, 2 * sg * cg * c2],
                [-2 * sg * cg * s2, 2 * sg * cg * c2, 2 * cg**2 - 1],
            ]
        )
    )


def local_grover(geom: DatabaseGeometry) -> np.ndarray:
    """Reduced matrix of D_m O_t: rotation by 2*theta2 in the (t, ntt) plane."""
    c, s = math.cos(2 * geom.theta2), math.sin(2 * geom.theta2)
    return _readonly(np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]))


def letter_operator(geom: DatabaseGeometry, letter: Letter | str) -> np.ndarray:
    return global_grover(geom) if Letter(letter) is Letter.GLOBAL else local_grover(geom)


def initial_state(geom: DatabaseGeometry) -> np.ndarray:
    """Uniform superposition |s_n> in reduced coordinates."""
    sg, cg = math.sin(geom.gamma), math.cos(geom.gamma)
    return _readonly(
        np.array([sg * math.sin(geom.theta2), sg * math.cos(geom.theta2), cg])
    )


def _check_norm(state: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
        logger.warning("reduced state norm drifted to %.3e; renormalizing", norm - 1.0)
        state = state / norm
    return state


def apply_word(
    geom: DatabaseGeometry, word: OperatorWord, state: np.ndarray | None = None
) -> np.ndarray:
    """Apply the letters of ``word`` in order to ``state`` (default: the initial state).

    Runs longer than ``RUN_POWER_THRESHOLD`` letters use a matrix power; shorter
    runs are applied letter by letter.
    """
    psi = np.array(initial_state(geom) if state is None else state, dtype=float)
    ops = {Letter.GLOBAL: global_grover(geom), Letter.LOCAL: local_grover(geom)}
    for letter, count in word.runs():
        op = ops[Letter(letter)]
        if count > RUN_POWER_THRESHOLD:
            psi = np.linalg.matrix_power(op, count) @ psi
        else:
            for _ in range(count):
                psi = op @ psi
    return _readonly(_check_norm(psi))


def apply_word_naive(
    geom: DatabaseGeometry, word: OperatorWord, state: np.ndarray | None = None
) -> np.ndarray:
    """Letter-by-letter reference for :func:`apply_word`."""
    psi = np.array(initial_state(geom) if state is None else state, dtype=float)
    for letter in word.letters:
        psi = letter_operator(geom, letter) @ psi
    return psi


def residual_amplitude(state: np.ndarray) -> float:
    """Amplitude left on the non-target blocks, c_u."""
    return float(state[2])


def target_block_probability(state: np.ndarray) -> float:
    return 1.0 - float(state[2]) ** 2
