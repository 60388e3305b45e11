"""Closed-form GRK parameters and integer iteration counts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .reduced_model import DatabaseGeometry, OperatorWord, apply_word

DEFAULT_SCAN_WINDOW = 2


@dataclass(frozen=True)
class GrkParameters:
    K: float
    alpha: float
    eta: float
    k1: int | None
    k2: int | None
    predicted_queries: float | None

    def to_dict(self) -> dict:
        return asdict(self)


class GrkRun(NamedTuple):
    final: np.ndarray
    residual: float
    queries: int

    @property
    def residual_probability(self) -> float:
        return self.residual**2


def _check_K(K: float) -> None:
    if not K >= 2:
        raise ValueError(f"GRK parameters need K >= 2, got {K}")


def optimal_alpha(K: float) -> float:
    """alpha_K with cos(2 alpha_K) = (K - 2) / (2 (K - 1))."""
    _check_K(K)
    return 0.5 * math.acos((K - 2) / (2 * (K - 1)))


def optimal_eta(K: float) -> float:
    """eta_K with tan(2 eta_K / sqrt K) = sqrt(3K - 4) / (K - 2).

    atan2 picks the continuous branch, so K = 2 gives an angle of pi/2.
    """
    _check_K(K)
    return 0.5 * math.sqrt(K) * math.atan2(math.sqrt(3 * K - 4), K - 2)


def constraint_residual(K: float, alpha: float, eta: float) -> float:
    """Success condition tan(x) (K - 4 sin^2 alpha) = 2 sqrt(K) sin(2 alpha), x = 2 eta / sqrt(K).

    Evaluated multiplied through by cos(x), so it stays finite at the pole
    x = pi/2 (reached at K = 2); zero exactly when the condition holds.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    x = 2 * eta / math.sqrt(K)
    return math.sin(x) * (K - 4 * math.sin(alpha) ** 2) - (
        2 * math.sqrt(K) * math.sin(2 * alpha) * math.cos(x)
    )


def continuum_parameters(K: float) -> GrkParameters:
    """alpha_K and eta_K only; the integer counts need a concrete geometry."""
    return GrkParameters(float(K), optimal_alpha(K), optimal_eta(K), None, None, None)


def real_counts(geom: DatabaseGeometry) -> tuple[float, float]:
    alpha, eta = optimal_alpha(geom.K), optimal_eta(geom.K)
    k1 = math.pi / 4 * math.sqrt(geom.N) - eta * math.sqrt(geom.b)
    k2 = alpha * math.sqrt(geom.b)
    return k1, k2


def glg_residual(geom: DatabaseGeometry, k1: int, k2: int) -> float:
    """c_u after G^k1 L^k2 G applied to the initial state."""
    return float(apply_word(geom, OperatorWord.glg(k1, k2))[2])


def iteration_counts(
    geom: DatabaseGeometry, window: int = DEFAULT_SCAN_WINDOW
) -> GrkParameters:
    """Round the asymptotic counts, then pick the pair in the +-window box
    with the smallest residual probability (ties: smaller k1, then smaller k2)."""
    _check_K(geom.K)
    alpha, eta = optimal_alpha(geom.K), optimal_eta(geom.K)
    k1_real, k2_real = real_counts(geom)
    k1_0, k2_0 = round(k1_real), round(k2_real)
    best = None
    for k1 in range(max(0, k1_0 - window), k1_0 + window + 1):
        for k2 in range(max(0, k2_0 - window), k2_0 + window + 1):
            p = glg_residual(geom, k1, k2) ** 2
            if best is None or p < best[0]:
                best = (p, k1, k2)
    _, k1, k2 = best
    predicted = math.pi / 4 * math.sqrt(geom.N) - (eta - alpha) * math.sqrt(geom.b)
    return GrkParameters(float(geom.K), alpha, eta, k1, k2, predicted)


def run_grk(geom: DatabaseGeometry, params: GrkParameters | None = None) -> GrkRun:
    params = params or iteration_counts(geom)
    psi = apply_word(geom, OperatorWord.glg(params.k1, params.k2))
    return GrkRun(psi, float(psi[2]), params.k1 + params.k2 + 1)
