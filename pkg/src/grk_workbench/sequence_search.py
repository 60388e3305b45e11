"""Exhaustive and structured enumeration of Grover operator words.

A word of length L is encoded as an integer whose most significant of L bits is
the first letter applied, with Global = 0 and Local = 1.  At fixed length,
integer order is therefore lexicographic order with Global < Local.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .reduced_model import (
    DatabaseGeometry,
    Letter,
    OperatorWord,
    apply_word_naive,
    global_grover,
    initial_state,
    local_grover,
)

DEFAULT_EPSILON = 0.01
DEFAULT_MAX_LEN_CAP = 26
PARTITION_DEPTH = 8


class BudgetExceeded(RuntimeError):
    def __init__(self, max_len: int, cap: int):
        self.max_len = max_len
        self.cap = cap
        self.required_words = 2 ** (max_len + 1) - 1
        super().__init__(
            f"max_len={max_len} exceeds the search budget (max_len <= {cap}); "
            f"a full search would examine up to {self.required_words} words"
        )


class Structure(NamedTuple):
    runs: list[tuple[str, int]]
    switchings: int


@dataclass(frozen=True)
class SearchReport:
    geometry: DatabaseGeometry
    epsilon: float
    best_word: OperatorWord | None
    best_length: int | None
    best_residual: float | None
    structure: Structure | None
    words_examined: int
    glg_best: tuple[tuple[int, int], float]

    @property
    def found(self) -> bool:
        return self.best_word is not None

    def to_dict(self) -> dict:
        (k1, k2), glg_res = self.glg_best
        return {
            "geometry": self.geometry.to_dict(),
            "epsilon": self.epsilon,
            "found": self.found,
            "best_word": None if self.best_word is None else str(self.best_word),
            "best_length": self.best_length,
            "best_residual": self.best_residual,
            "structure": None
            if self.structure is None
            else [[letter, count] for letter, count in self.structure.runs],
            "switchings": None if self.structure is None else self.structure.switchings,
            "words_examined": self.words_examined,
            "glg_best": {"k1": k1, "k2": k2, "residual": glg_res},
        }


def classify_structure(word: OperatorWord) -> Structure:
    runs = word.runs()
    return Structure(runs, max(len(runs) - 1, 0))


def decode_word(code: int, length: int) -> OperatorWord:
    bits = format(code, f"0{length}b") if length else ""
    return OperatorWord(tuple(Letter.LOCAL if c == "1" else Letter.GLOBAL for c in bits))


def _run_count(code: int, length: int) -> int:
    if length == 0:
        return 0
    flips = (code ^ (code >> 1)) & ((1 << (length - 1)) - 1)
    return bin(flips).count("1") + 1


def _best_code(codes, length: int) -> int:
    return min((int(c) for c in codes), key=lambda c: (_run_count(c, length), c))


def _expand(states: np.ndarray, G: np.ndarray, L: np.ndarray) -> np.ndarray:
    # states has shape (3, M); child 2c is c+Global, 2c+1 is c+Local
    return np.stack([G @ states, L @ states], axis=-1).reshape(3, -1)


def glg_scan(
    geom: DatabaseGeometry, k1_max: int, k2_max: int, epsilon: float = DEFAULT_EPSILON
) -> tuple[tuple[int, int], float]:
    """Scan G^k1 L^k2 G over 0 <= k1 <= k1_max, 0 <= k2 <= k2_max.

    Returns the fewest-query pair whose residual probability is <= epsilon, or
    the residual minimizer when none succeeds.  Ties go to fewer runs and then
    to the lexicographically smaller word (larger k1).
    """
    if k1_max < 0 or k2_max < 0:
        raise ValueError("scan ranges must be nonnegative")
    table = glg_landscape(geom, k1_max, k2_max)

    def tie(k1: int, k2: int) -> tuple:
        runs = 1 if k2 == 0 else (2 if k1 == 0 else 3)
        return (k1 + k2 + 1, runs, -k1)

    k1s, k2s = np.nonzero(table <= epsilon)
    if len(k1s):
        k1, k2 = min(zip(k1s.tolist(), k2s.tolist()), key=lambda p: tie(*p))
    else:
        low = table.min()
        k1s, k2s = np.nonzero(table == low)
        k1, k2 = min(zip(k1s.tolist(), k2s.tolist()), key=lambda p: tie(*p))
    return (k1, k2), float(table[k1, k2])


def glg_landscape(geom: DatabaseGeometry, k1_max: int, k2_max: int) -> np.ndarray:
    """Residual probability of G^k1 L^k2 G, indexed [k1, k2]."""
    G, L = global_grover(geom), local_grover(geom)
    rows = np.empty((k1_max + 1, 3))
    psi = np.array(initial_state(geom))
    for k1 in range(k1_max + 1):
        rows[k1] = psi
        psi = G @ psi
    out = np.empty((k1_max + 1, k2_max + 1))
    for k2 in range(k2_max + 1):
        out[:, k2] = (rows @ G.T)[:, 2] ** 2
        rows = rows @ L.T
    return out


def _glg_default(geom: DatabaseGeometry, max_len: int, epsilon: float):
    k = max(max_len - 1, 0)
    return glg_scan(geom, k, k, epsilon)


def _report(geom, epsilon, max_len, best, glg_best) -> SearchReport:
    if best is None:
        return SearchReport(geom, epsilon, None, None, None, None, 2 ** (max_len + 1) - 1, glg_best)
    length, code, residual = best
    word = decode_word(code, length)
    return SearchReport(
        geom,
        epsilon,
        word,
        length,
        residual,
        classify_structure(word),
        2 ** (length + 1) - 1,
        glg_best,
    )


def exhaustive_search(
    geom: DatabaseGeometry,
    max_len: int,
    epsilon: float = DEFAULT_EPSILON,
    *,
    threads: int = 1,
    max_len_cap: int = DEFAULT_MAX_LEN_CAP,
) -> SearchReport:
    """Shortest word (length <= max_len) with residual probability <= epsilon.

    Words are examined in length order, so the first success is query-optimal.
    Prefix states are shared: the first ``PARTITION_DEPTH`` letters are expanded
    once, then each prefix partition is expanded level by level on its own,
    optionally on a thread pool.  Partitions share a monotone length bound and
    their local winners are merged with the global tie-break (length, number of
    runs, lexicographic), so the report does not depend on ``threads``.

    ``words_examined`` counts the length-ordered search space up to the answer
    (every word of length <= best_length, or <= max_len when nothing succeeds).
    """
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    if max_len > max_len_cap:
        raise BudgetExceeded(max_len, max_len_cap)
    G, L = global_grover(geom), local_grover(geom)
    glg_best = _glg_default(geom, max_len, epsilon)

    states = np.array(initial_state(geom)).reshape(3, 1)
    depth = min(PARTITION_DEPTH, max_len)
    for length in range(depth + 1):
        if length:
            states = _expand(states, G, L)
        hits = np.nonzero(states[2] ** 2 <= epsilon)[0]
        if len(hits):
            code = _best_code(hits, length)
            return _report(geom, epsilon, max_len, (length, code, float(states[2, code] ** 2)), glg_best)
    if depth == max_len:
        return _report(geom, epsilon, max_len, None, glg_best)

    # A successful GLG word is a valid upper bound on the optimal length.
    (k1, k2), glg_res = glg_best
    bound = [k1 + k2 + 1 if glg_res <= epsilon and k1 + k2 + 1 <= max_len else max_len]
    lock = threading.Lock()

    def search_partition(prefix: int):
        sub = states[:, prefix : prefix + 1]
        extra = 0
        while True:
            extra += 1
            with lock:
                limit = bound[0]
            if depth + extra > limit:
                return None
            sub = _expand(sub, G, L)
            hits = np.nonzero(sub[2] ** 2 <= epsilon)[0]
            if len(hits):
                length = depth + extra
                codes = [(prefix << extra) | int(h) for h in hits]
                code = _best_code(codes, length)
                local = code & ((1 << extra) - 1)
                with lock:
                    bound[0] = min(bound[0], length)
                return length, code, float(sub[2, local] ** 2)

    prefixes = range(states.shape[1])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(search_partition, prefixes))
    else:
        results = [search_partition(p) for p in prefixes]

    found = [r for r in results if r is not None]
    if not found:
        return _report(geom, epsilon, max_len, None, glg_best)
    length = min(r[0] for r in found)
    best = min(
        (r for r in found if r[0] == length),
        key=lambda r: (_run_count(r[1], length), r[1]),
    )
    return _report(geom, epsilon, max_len, best, glg_best)


def naive_search(
    geom: DatabaseGeometry, max_len: int, epsilon: float = DEFAULT_EPSILON
) -> SearchReport:
    """Reference search: every word evaluated from scratch, letter by letter."""
    glg_best = _glg_default(geom, max_len, epsilon)
    for length in range(max_len + 1):
        hits = []
        for code in range(2**length):
            psi = apply_word_naive(geom, decode_word(code, length))
            if psi[2] ** 2 <= epsilon:
                hits.append((code, float(psi[2] ** 2)))
        if hits:
            code = _best_code([c for c, _ in hits], length)
            return _report(geom, epsilon, max_len, (length, code, dict(hits)[code]), glg_best)
    return _report(geom, epsilon, max_len, None, glg_best)


def default_max_len(geom: DatabaseGeometry) -> int:
    """ceil((pi/4) sqrt N) + 2: a little more than plain Grover needs."""
    return math.ceil(math.pi / 4 * math.sqrt(geom.N)) + 2
