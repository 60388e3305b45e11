"""Minimum-time arc schedules that steer the continuum start onto the terminal plane.

A schedule is an alternating sequence of X- and Y-arcs with durations.  For a
requested pattern the final X-arc is not a free variable: its duration is the
first root of the u-component along that arc.  Interior X-arcs run between two
switching points of an extremal, so they are held at pi/sin(gamma).  The first
arc and every Y-arc are optimized (coarse grid, then bounded Nelder-Mead from
several seeded starts).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from . import control
from .grk_parameters import optimal_alpha, optimal_eta
from .reduced_model import DatabaseGeometry

PRUNE_BELOW = 1e-9
RESIDUAL_TOL = 1e-10
GRID_POINTS = 9
N_PERTURB = 8
PERTURB_RADIUS = 0.2
DEFAULT_SEED = 20240
MAX_ARCS = 7
TIME_TIE = 1e-9


class InfeasiblePattern(ValueError):
    pass


@dataclass(frozen=True)
class ArcSchedule:
    pattern: tuple[str, ...]
    durations: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.pattern) != len(self.durations):
            raise ValueError("pattern and durations differ in length")
        if any(a == b for a, b in zip(self.pattern, self.pattern[1:])):
            raise ValueError(f"pattern {self.pattern} is not alternating")
        if any(x not in ("X", "Y") for x in self.pattern):
            raise ValueError("arcs must be 'X' or 'Y'")
        if any(d < 0 for d in self.durations):
            raise ValueError("durations must be nonnegative")

    @property
    def total_time(self) -> float:
        return math.fsum(self.durations)

    def pruned(self, below: float = PRUNE_BELOW) -> "ArcSchedule":
        """Drop arcs shorter than ``below`` and merge the neighbours they separated."""
        merged: list[list] = []
        for arc, dur in zip(self.pattern, self.durations):
            if dur < below:
                continue
            if merged and merged[-1][0] == arc:
                merged[-1][1] += dur
            else:
                merged.append([arc, dur])
        return ArcSchedule(tuple(a for a, _ in merged), tuple(d for _, d in merged))

    def to_dict(self) -> dict:
        return {
            "pattern": list(self.pattern),
            "durations": list(self.durations),
            "total_time": self.total_time,
        }


def _propagate(gamma: float, schedule: ArcSchedule, psi: np.ndarray | None = None) -> np.ndarray:
    X, Y = control.generators(gamma)
    psi = control.continuum_initial_state(gamma) if psi is None else psi
    for arc, dur in zip(schedule.pattern, schedule.durations):
        psi = control.rotation(X if arc == "X" else Y, dur) @ psi
    return psi


def terminal_residual(gamma: float, schedule: ArcSchedule) -> float:
    """u-component after running ``schedule`` from (0, sin gamma, cos gamma)."""
    return float(_propagate(gamma, schedule)[2])


def odd_parity_residual(gamma: float, schedule: ArcSchedule) -> float:
    """u-component after ``schedule`` followed by the reflection I - 2 n n^T.

    n is the unit rotation axis of X.  This reflection is the large-block
    limit of a single global Grover step, which has determinant -1 and so
    is not reachable by the connected X/Y flow.
    """
    s, c = control._sc(gamma)
    n = np.array([0.0, c, -s])
    psi = _propagate(gamma, schedule)
    return float(psi[2] - 2 * (n @ psi) * n[2])


def _final_x_root(gamma: float, psi: np.ndarray) -> float:
    """First t >= 0 with u(exp(tX) psi) = 0, or inf if the X-orbit misses u = 0.

    Along an X-arc, u(t) = -s w + c (beta cos st - alpha sin st), where w is the
    component of psi on the X axis and (alpha, beta) its coordinates on e_t and
    the continuum start.  That form gives the first root; brentq polishes it when needed.
    """
    X, _ = control.generators(gamma)
    s, c = control._sc(gamma)
    if psi[2] == 0.0:
        return 0.0
    w = c * psi[1] - s * psi[2]
    alpha, beta = psi[0], s * psi[1] + c * psi[2]
    offset, amp, phase = -s * w, c * math.hypot(alpha, beta), math.atan2(alpha, beta)
    if amp == 0.0 or abs(offset) > amp * (1 + 1e-12):
        return math.inf
    theta = math.acos(max(-1.0, min(1.0, -offset / amp)))
    period = 2 * math.pi / s
    cands = [((sgn * theta - phase) / s) % period for sgn in (1, -1)]
    t_star = min(cands)

    def f(t):
        return float(control.rotation(X, t)[2] @ psi)

    if abs(f(t_star)) <= 1e-14:
        return t_star
    width = 1e-6 * period
    lo, hi = max(t_star - width, 0.0), t_star + width
    if f(lo) * f(hi) < 0:
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return t_star


def _validate_pattern(pattern) -> tuple[str, ...]:
    pattern = tuple(pattern)
    if not pattern:
        raise ValueError("empty pattern")
    if len(pattern) > MAX_ARCS:
        raise ValueError(f"patterns are limited to {MAX_ARCS} arcs")
    if any(a == b for a, b in zip(pattern, pattern[1:])):
        raise ValueError(f"pattern {pattern} is not alternating")
    if pattern[-1] != "X":
        raise InfeasiblePattern(
            "pattern ends with a Y-arc; Y leaves the u-component unchanged, "
            "so a final Y-arc cannot reach the terminal plane"
        )
    return pattern


class _Layout:
    """Which arcs of a pattern are free, pinned, or solved for."""

    def __init__(self, gamma: float, pattern: tuple[str, ...]):
        s, _ = control._sc(gamma)
        self.gamma = gamma
        self.pattern = pattern
        self.tau_x = math.pi / s
        self.free: list[int] = []
        self.bounds: list[tuple[float, float]] = []
        for i, arc in enumerate(pattern[:-1]):
            if arc == "X" and i > 0:
                continue  # interior X: switching-to-switching, pinned
            self.free.append(i)
            self.bounds.append((0.0, 2 * math.pi / s) if arc == "X" else (0.0, 2 * math.pi))

    def durations(self, x) -> list[float]:
        d = [self.tau_x if (a == "X" and i > 0) else 0.0 for i, a in enumerate(self.pattern)]
        for i, v in zip(self.free, x):
            d[i] = float(v)
        return d

    def complete(self, x) -> tuple[float, ...] | None:
        d = self.durations(x)
        head = ArcSchedule(self.pattern[:-1], tuple(d[:-1])) if len(self.pattern) > 1 else None
        psi = control.continuum_initial_state(self.gamma)
        if head is not None:
            psi = _propagate(self.gamma, head, psi)
        last = _final_x_root(self.gamma, psi)
        if not math.isfinite(last):
            return None
        d[-1] = last
        return tuple(d)

    def objective(self, x) -> float:
        for v, (lo, hi) in zip(x, self.bounds):
            if not lo <= v <= hi:
                return math.inf
        d = self.complete(x)
        return math.inf if d is None else math.fsum(d)


def _grk_start(gamma: float, layout: _Layout) -> np.ndarray:
    K = 1.0 / math.sin(gamma) ** 2
    t1 = max(math.pi / (2 * math.sin(gamma)) - 2 * optimal_eta(K), 0.0) if K >= 2 else 0.0
    t2 = 2 * optimal_alpha(K) if K >= 2 else 0.0
    guess = [t1 if layout.pattern[i] == "X" else t2 for i in layout.free]
    return np.clip(guess, [b[0] for b in layout.bounds], [b[1] for b in layout.bounds])


def optimize_pattern(
    gamma: float, pattern, *, seed: int = DEFAULT_SEED
) -> ArcSchedule:
    """Shortest schedule with the given arc pattern that reaches u = 0.

    The returned schedule has arcs shorter than ``PRUNE_BELOW`` removed, so a
    pattern whose optimum degenerates comes back with fewer arcs.
    """
    pattern = _validate_pattern(pattern)
    layout = _Layout(gamma, pattern)
    if not layout.free:
        d = layout.complete([])
        if d is None:
            raise InfeasiblePattern(f"no root of the residual along the final X-arc for {pattern}")
        return ArcSchedule(pattern, d).pruned()

    lows = np.array([b[0] for b in layout.bounds])
    highs = np.array([b[1] for b in layout.bounds])
    axes = [np.linspace(lo, hi, GRID_POINTS) for lo, hi in layout.bounds]
    grid_best = min(itertools.product(*axes), key=layout.objective)

    rng = np.random.default_rng(seed)
    grk = _grk_start(gamma, layout)
    span = highs - lows
    starts = [grk, np.array(grid_best)]
    for _ in range(N_PERTURB):
        starts.append(np.clip(grk + PERTURB_RADIUS * span * rng.uniform(-1, 1, grk.size), lows, highs))

    best_x, best_f = None, math.inf
    for x0 in starts:
        if not math.isfinite(layout.objective(x0)):
            continue
        res = minimize(
            layout.objective,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lows, highs)),
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        f = layout.objective(res.x)
        if f < best_f:
            best_x, best_f = res.x, f
    if best_x is None:
        raise InfeasiblePattern(f"no feasible start found for pattern {pattern}")
    return ArcSchedule(pattern, layout.complete(best_x)).pruned()


@dataclass(frozen=True)
class PatternResult:
    pattern: tuple[str, ...]
    schedule: ArcSchedule | None
    feasible: bool

    @property
    def switchings(self) -> int:
        return len(self.pattern) - 1

    @property
    def total_time(self) -> float:
        return self.schedule.total_time if self.schedule else math.inf

    def to_dict(self) -> dict:
        return {
            "pattern": list(self.pattern),
            "switchings": self.switchings,
            "feasible": self.feasible,
            "total_time": self.total_time if self.feasible else None,
            "schedule": self.schedule.to_dict() if self.schedule else None,
        }


def candidate_patterns(max_switches: int) -> list[tuple[str, ...]]:
    """Alternating patterns ending in X with at most ``max_switches`` switchings."""
    out = []
    for k in range(max_switches + 1):
        out.append(tuple("X" if (k - i) % 2 == 0 else "Y" for i in range(k + 1)))
    return out


@dataclass(frozen=True)
class PatternTable:
    gamma: float
    rows: list[PatternResult]
    best: PatternResult

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "rows": [r.to_dict() for r in self.rows],
            "best": list(self.best.pattern),
            "best_time": self.best.total_time,
        }


def compare_patterns(gamma: float, max_switches: int, *, seed: int = DEFAULT_SEED) -> PatternTable:
    if not 0 <= max_switches <= 6:
        raise ValueError("max_switches must be between 0 and 6")
    rows = []
    for pattern in candidate_patterns(max_switches):
        try:
            rows.append(PatternResult(pattern, optimize_pattern(gamma, pattern, seed=seed), True))
        except InfeasiblePattern:
            rows.append(PatternResult(pattern, None, False))
    feasible = [r for r in rows if r.feasible]
    t_min = min(r.total_time for r in feasible)
    best = min(
        (r for r in feasible if r.total_time <= t_min + TIME_TIE),
        key=lambda r: (len(r.pattern), r.pattern),
    )
    return PatternTable(gamma, rows, best)


@dataclass(frozen=True)
class ContinuumGrk:
    K: float
    t1: float
    t2: float

    @property
    def total_time(self) -> float:
        return self.t1 + self.t2

    def to_dict(self) -> dict:
        return {"K": self.K, "t1": self.t1, "t2": self.t2, "total_time": self.total_time}


def continuum_grk_schedule(K: float) -> ContinuumGrk:
    """GRK stage lengths in continuum time (one query = 2*theta2 of time).

    The trailing single global step carries no continuum time here.
    """
    s = 1.0 / math.sqrt(K)
    return ContinuumGrk(float(K), math.pi / (2 * s) - 2 * optimal_eta(K), 2 * optimal_alpha(K))


def queries_from_time(t: float, geom: DatabaseGeometry) -> float:
    return t / (2 * geom.theta2)


def queries_at_block_size(t: float, b: float) -> float:
    """queries_from_time for a block of ``b`` items, without a full geometry."""
    if not b > 1:
        raise ValueError("block size must exceed 1")
    return t / (2 * math.asin(1 / math.sqrt(b)))


def grk_predicted_time(K: float) -> float:
    s = 1.0 / math.sqrt(K)
    return math.pi / (2 * s) - 2 * (optimal_eta(K) - optimal_alpha(K))
