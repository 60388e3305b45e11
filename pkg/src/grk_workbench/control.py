"""Continuum control layer: generators, switching variables and PMP extremals.

The global and local Grover stages become the flows of two skew-symmetric
generators X and Y on the reduced space.  Along an arc with constant generator
A, the state obeys psi' = A psi and the costate p' = -A^T p = A p, so both are
moved by the same rotation exp(tA).  The switching function
Phi = <p, (X - Y) psi> selects X when positive and Y when negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SWITCH_TOL = 1e-12
SINGULAR_TOL = 1e-10
MAX_ARCS = 100_000
_EYE = np.eye(3)


class PhiTriple(NamedTuple):
    phi1: float | np.ndarray
    phi2: float | np.ndarray
    phi3: float | np.ndarray


def _sc(gamma: float) -> tuple[float, float]:
    if not 0.0 < gamma < math.pi / 2:
        raise ValueError(f"gamma must lie in (0, pi/2), got {gamma}")
    return math.sin(gamma), math.cos(gamma)


def gamma_from_K(K: float) -> float:
    return math.asin(1.0 / math.sqrt(K))


def generators(gamma: float) -> tuple[np.ndarray, np.ndarray]:
    s, c = _sc(gamma)
    X = np.array([[0.0, s * s, s * c], [-s * s, 0.0, 0.0], [-s * c, 0.0, 0.0]])
    Y = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return X, Y


def bracket(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def switching_matrices(gamma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """F1 = X - Y, F2 = [X, Y], F3 = [Y, [X, Y]]."""
    X, Y = generators(gamma)
    F2 = bracket(X, Y)
    return X - Y, F2, bracket(Y, F2)


def lie_closure_residual(gamma: float) -> float:
    """Largest entrywise violation of the six commutator identities closing span{F1, F2, F3}."""
    s, _ = _sc(gamma)
    X, Y = generators(gamma)
    F1, F2, F3 = switching_matrices(gamma)
    pairs = [
        (bracket(F1, X), F2),
        (bracket(F1, Y), F2),
        (bracket(F2, X), -s * s * F1),
        (bracket(F2, Y), -F3),
        (bracket(F3, X), s * s * F2),
        (bracket(F3, Y), F2),
    ]
    return max(float(np.max(np.abs(lhs - rhs))) for lhs, rhs in pairs)


def _axis(A: np.ndarray) -> np.ndarray:
    # A v = w x v
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def rotation(A: np.ndarray, t: float) -> np.ndarray:
    """exp(tA) for a 3x3 skew matrix, by the axis-angle (Rodrigues) formula."""
    w = math.sqrt(A[2, 1] ** 2 + A[0, 2] ** 2 + A[1, 0] ** 2)
    if w == 0.0:
        return _EYE.copy()
    theta = t * w
    return _EYE + (math.sin(theta) / w) * A + ((1 - math.cos(theta)) / (w * w)) * (A @ A)


def rotation_batch(A: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Stack of exp(tA) for every t in ``ts``; shape (len(ts), 3, 3)."""
    ts = np.asarray(ts, dtype=float)
    w = float(np.linalg.norm(_axis(A)))
    out = np.broadcast_to(np.eye(3), (ts.size, 3, 3)).copy()
    if w == 0.0:
        return out
    theta = ts * w
    out += (np.sin(theta) / w)[:, None, None] * A
    out += ((1 - np.cos(theta)) / w**2)[:, None, None] * (A @ A)
    return out


def tau_X(gamma: float) -> float:
    """Switching-to-switching duration of an X-arc."""
    return math.pi / _sc(gamma)[0]


def phi_arc_X(a, b, gamma: float, t) -> PhiTriple:
    """Switching variables along an X-arc that leaves the switching point (0, a, b)."""
    s, _ = _sc(gamma)
    st = np.sin(s * np.asarray(t, dtype=float))
    return PhiTriple((a / s) * st, a * np.cos(s * np.asarray(t, dtype=float)), b + a * s * st)


def phi_arc_Y(a, b, t) -> PhiTriple:
    """Switching variables along a Y-arc that leaves the switching point (0, a, b)."""
    t = np.asarray(t, dtype=float)
    st, ct = np.sin(t), np.cos(t)
    return PhiTriple(a * st + b * (ct - 1), a * ct - b * st, a * st + b * ct)


def first_switch_Y(a: float, b: float) -> float:
    """First root in (0, 2*pi] of a cos(tau/2) - b sin(tau/2) = 0."""
    if a == 0 and b == 0:
        raise ValueError("degenerate switching data (a, b) = (0, 0)")
    if a == 0:
        return 2 * math.pi
    half = math.atan2(a, b)
    if half <= 0:
        half += math.pi
    return 2 * half


def reduced_ode_matrix(gamma: float, arc: str) -> np.ndarray:
    """Linear vector field m' = M m of (phi1, phi2, phi3) on a pure X- or Y-arc."""
    s, _ = _sc(gamma)
    if arc == "X":
        return np.array([[0.0, 1.0, 0.0], [-s * s, 0.0, 0.0], [0.0, s * s, 0.0]])
    if arc == "Y":
        return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    raise ValueError(f"unknown arc type {arc!r}")


def rk4_linear(M: np.ndarray, m0, t_end: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for m' = M m on a uniform grid.

    For a linear autonomous field one RK4 step is the fixed matrix
    I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24, which is what gets iterated.
    """
    h = t_end / steps
    hM = h * M
    step = np.eye(3) + hM + hM @ hM / 2 + hM @ hM @ hM / 6 + hM @ hM @ hM @ hM / 24
    out = np.empty((steps + 1, 3))
    out[0] = m0
    for i in range(steps):
        out[i + 1] = step @ out[i]
    return np.linspace(0.0, t_end, steps + 1), out


def switching_variables(gamma: float, psi: np.ndarray, p: np.ndarray) -> PhiTriple:
    F1, F2, F3 = switching_matrices(gamma)
    return PhiTriple(float(p @ F1 @ psi), float(p @ F2 @ psi), float(p @ F3 @ psi))


@dataclass
class Arc:
    control: str
    start: float
    end: float
    # True when the arc begins and ends at switching points
    complete: bool

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass
class ExtremalTrajectory:
    gamma: float
    times: np.ndarray
    psi: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    control: list[str]
    switching_times: list[float]
    hamiltonian: np.ndarray
    arcs: list[Arc]
    halted: bool = False
    diagnostic: str | None = None
    _arc_states: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    def complete_arcs(self, control: str) -> list[Arc]:
        return [a for a in self.arcs if a.complete and a.control == control]

    def x_gaps(self) -> list[float]:
        """Durations of X-arcs bounded by two switches."""
        return [a.length for a in self.complete_arcs("X")]

    def y_pair_sums(self) -> list[float]:
        """l1 + l2 for each Y X Y triple of complete arcs."""
        out = []
        for i in range(len(self.arcs) - 2):
            y1, x, y2 = self.arcs[i : i + 3]
            if (y1.control, x.control, y2.control) == ("Y", "X", "Y") and y1.complete and y2.complete:
                out.append(y1.length + y2.length)
        return out

    def switching_function(self, ts) -> np.ndarray:
        """Phi evaluated from the stored arc-start states at arbitrary times."""
        ts = np.asarray(ts, dtype=float)
        X, Y = generators(self.gamma)
        F1 = X - Y
        out = np.empty(ts.size)
        starts = np.array([a.start for a in self.arcs])
        idx = np.clip(np.searchsorted(starts, ts, side="right") - 1, 0, len(self.arcs) - 1)
        for k in np.unique(idx):
            sel = idx == k
            arc = self.arcs[k]
            R = rotation_batch(X if arc.control == "X" else Y, ts[sel] - arc.start)
            psi0, p0 = self._arc_states[k]
            psi = R @ psi0
            p = R @ p0
            out[sel] = np.einsum("ni,ij,nj->n", p, F1, psi)
        return out


def longest_quiet_interval(
    traj: ExtremalTrajectory, threshold: float = 1e-10, resolution: float = 1e-4
) -> float:
    """Longest stretch of a uniform grid (spacing <= resolution) on which |Phi| < threshold."""
    end = traj.arcs[-1].end if traj.arcs else 0.0
    n = max(int(math.ceil(end / resolution)), 1) + 1
    ts = np.linspace(0.0, end, n)
    quiet = np.abs(traj.switching_function(ts)) < threshold
    best = run = 0
    for q in quiet:
        run = run + 1 if q else 0
        best = max(best, run)
    return max(best - 1, 0) * (ts[1] - ts[0] if n > 1 else 0.0)


def _next_zero(control: str, phis: PhiTriple, s: float) -> float:
    """First t > 0 where phi1 changes sign along a pure arc, or inf."""
    f1, f2, f3 = phis
    if control == "X":
        # f1(t) = R cos(s t - d)
        d = math.atan2(f2 / s, f1)
        k = math.floor((-(math.pi / 2) - d) / math.pi) + 1
        t = (math.pi / 2 + d + k * math.pi) / s
        while t <= 0:
            t += math.pi / s
        return t
    # Y: f1(t) = C + R cos(t - d)
    C, R, d = f1 - f3, math.hypot(f2, f3), math.atan2(f2, f3)
    if R == 0 or abs(C) >= R:
        return math.inf
    base = math.acos(-C / R)
    cands = [d + sgn * base + 2 * math.pi * k for k in (-1, 0, 1, 2) for sgn in (1, -1)]
    pos = [t for t in cands if t > 1e-14]
    return min(pos) if pos else math.inf


def _bisect_switch(phi, lo: float, hi: float, tol: float = SWITCH_TOL) -> float:
    flo = phi(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = phi(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simulate_extremal(
    gamma: float,
    psi0,
    p0,
    horizon: float,
    *,
    samples: int = 2001,
) -> ExtremalTrajectory:
    """Integrate a bang-bang PMP extremal on [0, horizon].

    Arcs are advanced with exact rotations.  From a switching point the next
    switch is pi/s away on an X-arc and ``first_switch_Y`` away on a Y-arc;
    from a generic start it is located analytically and polished by bisection
    on Phi.  If Phi and phi2 vanish together at a switch the run stops and
    ``diagnostic`` explains why.
    """
    s, _ = _sc(gamma)
    X, Y = generators(gamma)
    F1 = X - Y
    psi = np.asarray(psi0, dtype=float).copy()
    p = np.asarray(p0, dtype=float).copy()
    if not np.any(p):
        raise ValueError("costate must be nonzero")
    scale = float(np.linalg.norm(p) * np.linalg.norm(psi))

    arcs: list[Arc] = []
    arc_states: list[tuple[np.ndarray, np.ndarray]] = []
    switches: list[float] = []
    halted, diagnostic = False, None

    phis = switching_variables(gamma, psi, p)
    if abs(phis.phi1) > SINGULAR_TOL * scale:
        control = "X" if phis.phi1 > 0 else "Y"
        at_switch = False
    elif abs(phis.phi2) > SINGULAR_TOL * scale:
        control = "X" if phis.phi2 > 0 else "Y"
        at_switch = True
    else:
        control, at_switch = "X", True
        halted, diagnostic = True, "Phi and phi2 vanish at t=0: possible singular point"

    t = 0.0
    while not halted and t < horizon and len(arcs) < MAX_ARCS:
        A = X if control == "X" else Y
        phis = switching_variables(gamma, psi, p)
        if at_switch:
            dt = math.pi / s if control == "X" else first_switch_Y(phis.phi2, phis.phi3)
        else:
            dt = _next_zero(control, phis, s)
            if math.isfinite(dt):
                psi_c, p_c = psi.copy(), p.copy()

                def phi_at(tt, A=A, psi_c=psi_c, p_c=p_c):
                    R = rotation(A, tt)
                    return float((R @ p_c) @ F1 @ (R @ psi_c))

                width = 1e-7 * max(dt, 1.0)
                lo, hi = max(dt - width, 0.0), dt + width
                if phi_at(lo) * phi_at(hi) < 0:
                    dt = _bisect_switch(phi_at, lo, hi)
        arc_states.append((psi.copy(), p.copy()))
        end = t + dt
        if end >= horizon:
            arcs.append(Arc(control, t, horizon, False))
            R = rotation(A, horizon - t)
            psi, p = R @ psi, R @ p
            t = horizon
            break
        arcs.append(Arc(control, t, end, at_switch))
        R = rotation(A, dt)
        psi, p = R @ psi, R @ p
        t = end
        switches.append(t)
        phis = switching_variables(gamma, psi, p)
        if abs(phis.phi2) <= SINGULAR_TOL * scale:
            halted = True
            diagnostic = f"Phi and phi2 vanish together at t={t:.15g}: possible singular point"
            break
        control = "Y" if control == "X" else "X"
        at_switch = True

    if not arcs:
        arc_states.append((psi.copy(), p.copy()))
        arcs.append(Arc(control, 0.0, 0.0, False))

    t_end = arcs[-1].end
    times = np.union1d(np.linspace(0.0, t_end, samples), np.array(switches))
    traj = ExtremalTrajectory(
        gamma=gamma,
        times=times,
        psi=np.empty((times.size, 3)),
        p=np.empty((times.size, 3)),
        phi=np.empty((times.size, 3)),
        control=[],
        switching_times=switches,
        hamiltonian=np.empty(times.size),
        arcs=arcs,
        halted=halted,
        diagnostic=diagnostic,
        _arc_states=arc_states,
    )
    F1, F2, F3 = switching_matrices(gamma)
    starts = np.array([a.start for a in arcs])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(arcs) - 1)
    for i, (tt, k) in enumerate(zip(times, idx)):
        arc = arcs[k]
        A = X if arc.control == "X" else Y
        R = rotation(A, tt - arc.start)
        ps, pp = R @ arc_states[k][0], R @ arc_states[k][1]
        traj.psi[i], traj.p[i] = ps, pp
        traj.phi[i] = (pp @ F1 @ ps, pp @ F2 @ ps, pp @ F3 @ ps)
        traj.hamiltonian[i] = max(pp @ X @ ps, pp @ Y @ ps) - 1.0
        traj.control.append(arc.control)
    return traj


def anchor_costate(gamma: float, psi0, schedule: list[tuple[str, float]]) -> np.ndarray:
    """Initial costate of a terminal-anchored extremal.

    The state is pushed forward through ``schedule``; at the end p is taken
    along the u-axis (the normal of the terminal plane) and scaled so that
    <p, A psi> - 1 = 0 for the final generator A, then pulled back to t = 0.
    This anchor is a modelling choice, not something the PMP fixes.
    """
    X, Y = generators(gamma)
    gens = {"X": X, "Y": Y}
    psi = np.asarray(psi0, dtype=float)
    for control, dur in schedule:
        psi = rotation(gens[control], dur) @ psi
    final = gens[schedule[-1][0]]
    rate = float((final @ psi)[2])
    if rate == 0:
        raise ValueError("final arc does not cross the terminal plane; H = 0 cannot be met")
    p = np.array([0.0, 0.0, 1.0 / rate])
    for control, dur in reversed(schedule):
        p = rotation(gens[control], -dur) @ p
    return p


@dataclass(frozen=True)
class CompressionReport:
    gamma: float
    ell: float
    tau_X: float
    L_YXY: float
    L_XYX: float
    gap_YXY: float
    gap_XYX: float
    # on an actual extremal both Y-arcs of a YXY block start from the same data
    L_YXY_equal_arcs: float
    gap_YXY_equal_arcs: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compression_report(gamma: float, ell: float) -> CompressionReport:
    s, _ = _sc(gamma)
    if not 0.0 < ell < 2 * math.pi:
        raise ValueError("ell must lie in (0, 2*pi)")
    tx = math.pi / s
    L_yxy = 2 * math.pi + tx
    L_xyx = 2 * math.pi / s + ell
    return CompressionReport(
        gamma=gamma,
        ell=ell,
        tau_X=tx,
        L_YXY=L_yxy,
        L_XYX=L_xyx,
        gap_YXY=L_yxy - tx,
        gap_XYX=L_xyx - ell,
        L_YXY_equal_arcs=2 * ell + tx,
        gap_YXY_equal_arcs=2 * ell,
    )


@dataclass(frozen=True)
class EndpointReport:
    gamma: float
    tau: float
    y_arc_u_drift: float
    x_arc_u: float
    x_arc_u_closed_form: float
    x_arc_max_deviation: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def continuum_initial_state(gamma: float) -> np.ndarray:
    """Large-block limit of the uniform superposition: (0, sin gamma, cos gamma)."""
    s, c = _sc(gamma)
    return np.array([0.0, s, c])


def endpoint_checks(gamma: float, tau: float, samples: int = 1000) -> EndpointReport:
    """u-component bookkeeping showing a Y-arc never moves u and an X-arc from the start traces c cos(s tau).

    Both checks start from the continuum initial state and use a uniform grid
    of ``samples`` points on [0, tau].
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    s, c = _sc(gamma)
    X, Y = generators(gamma)
    x0 = continuum_initial_state(gamma)
    ts = np.linspace(0.0, tau, samples)
    u_y = (rotation_batch(Y, ts) @ x0)[:, 2]
    u_x = (rotation_batch(X, ts) @ x0)[:, 2]
    closed = c * np.cos(s * ts)
    return EndpointReport(
        gamma=gamma,
        tau=tau,
        y_arc_u_drift=float(np.max(np.abs(u_y - x0[2]))),
        x_arc_u=float((rotation(X, tau) @ x0)[2]),
        x_arc_u_closed_form=c * math.cos(s * tau),
        x_arc_max_deviation=float(np.max(np.abs(u_x - closed))),
    )
