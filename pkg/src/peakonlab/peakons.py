"""Multipeakon states, the interacting-peakon ODE system, and wave breaking.

A multipeakon velocity profile is u(t,x) = sum_i p_i(t) exp(-|x - q_i(t)|),
fully described by positions q and momenta p.  Two things live here:

* the general N-peakon Hamiltonian ODE system together with an adaptive
  integrator that stops cleanly when two peaks collide (wave breaking), and
* the exact antisymmetric peakon-antipeakon pair, the one configuration with
  a usable closed form.  It breaks in finite time T and serves as the oracle
  against which the integrator and every downstream estimate is validated.

The closed form is evaluated through the equivalent stable expressions

    p(t) = H0 / tanh(H0 (T - t) / 2),   q(t) = -2 log cosh(H0 (T - t) / 2),

which keep the invariant p(t)^2 (1 - e^{q(t)}) = H0^2 exact in floating point
all the way to the collision (the textbook rational-in-e^{H0 t} form loses the
denominator to cancellation near T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "EPSILON_GAP",
    "PeakonState",
    "ClosedFormPair",
    "BreakingEvent",
    "CollisionError",
    "closed_form_eval",
    "closed_form_pq",
    "npeakon_rhs",
    "integrate",
    "integrate_dense",
    "breaking_time_estimate",
    "antisymmetric_pair_of",
    "invariant_value",
    "kernel_sum",
]

#: Default collision threshold (space units): a run is declared broken when an
#: adjacent position gap falls below this.
EPSILON_GAP = 1e-8


class CollisionError(ValueError):
    """Raised when an operation requires strictly separated peak positions."""


def kernel_sum(x, q, p):
    """sum_j p_j exp(-|x - q_j|), vectorized over x.

    Shared by ``fields.eval_u`` and the dq part of :func:`npeakon_rhs` so that
    the characteristic-speed identity dq_i = u(q_i) holds exactly, not merely
    to rounding.
    """
    x = np.asarray(x, dtype=float)
    out = (p * np.exp(-np.abs(x[..., None] - q))).sum(axis=-1)
    return float(out) if x.ndim == 0 else out


@dataclass
class PeakonState:
    """Positions and momenta of N peakons at one instant.

    q is kept nondecreasing (sorted on construction, momenta permuted along);
    equal positions mean a collision and are rejected by operations that need
    separation, not by the constructor.
    """

    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.t = float(self.t)
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.ndim != 1 or p.ndim != 1 or len(q) != len(p):
            raise ValueError("q and p must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and math.isfinite(self.t)):
            raise ValueError("PeakonState entries must be finite")
        if len(q) and np.any(np.diff(q) < 0.0):
            order = np.argsort(q, kind="stable")
            q, p = q[order], p[order]
        self.q, self.p = q, p

    @property
    def n(self) -> int:
        return len(self.q)

    def min_gap(self) -> float:
        """Smallest adjacent position gap (inf for fewer than two peakons)."""
        return float(np.min(np.diff(self.q))) if self.n >= 2 else math.inf

    def with_t(self, t: float) -> "PeakonState":
        return PeakonState(t, self.q.copy(), self.p.copy())

    def negated(self, t: float | None = None) -> "PeakonState":
        """State of -u at the same positions (momenta flipped)."""
        return PeakonState(self.t if t is None else t, self.q.copy(), -self.p)


def zero_state(t: float = 0.0) -> PeakonState:
    """The identically-zero field (no peakons)."""
    return PeakonState(t, np.empty(0), np.empty(0))


@dataclass(frozen=True)
class ClosedFormPair:
    """Parameters of the exact antisymmetric peakon-antipeakon solution.

    p0 > 0 and q0 < 0 are the initial pair momentum and (negative) separation;
    H0 and T follow from them:

        H0^2 = p0^2 (1 - e^{q0}),
        T    = log((p0 + H0) / (p0 - H0)) / H0.

    Passing explicit H0 / T values is allowed but they are validated against
    the derived ones to 1e-12 relative.
    """

    p0: float
    q0: float
    H0: float = field(default=math.nan)
    T: float = field(default=math.nan)

    def __post_init__(self):
        if not (self.p0 > 0.0):
            raise ValueError("ClosedFormPair requires p0 > 0")
        if not (self.q0 < 0.0):
            raise ValueError("ClosedFormPair requires q0 < 0")
        h0 = self.p0 * math.sqrt(-math.expm1(self.q0))
        t_star = math.log((self.p0 + h0) / (self.p0 - h0)) / h0
        if math.isnan(self.H0):
            object.__setattr__(self, "H0", h0)
        elif abs(self.H0 - h0) > 1e-12 * h0:
            raise ValueError("H0 inconsistent with p0, q0")
        if math.isnan(self.T):
            object.__setattr__(self, "T", t_star)
        elif abs(self.T - t_star) > 1e-12 * t_star:
            raise ValueError("T inconsistent with p0, q0")


@dataclass(frozen=True)
class BreakingEvent:
    """Detected collision: time, the offending adjacent pair, and residuals."""

    t_break: float
    indices: tuple[int, int]
    gap_at_stop: float
    vmin_at_stop: float


def closed_form_pq(pair: ClosedFormPair, t: float) -> tuple[float, float]:
    """Pair momentum p(t) and separation q(t) of the closed form.

    Valid for every t != T; for t > T this is the analytic continuation, which
    coincides with the conservative prolongation u(t,x) = -u(2T-t,x) (p turns
    negative, the pair separates again).
    """
    h = 0.5 * pair.H0 * (pair.T - float(t))
    if h == 0.0:
        raise ValueError("closed form is singular at t = T")
    ah = abs(h)
    # log cosh(h) = |h| + log1p(e^{-2|h|}) - log 2, safe for large |h|
    logcosh = ah + math.log1p(math.exp(-2.0 * ah)) - math.log(2.0)
    return pair.H0 / math.tanh(h), -2.0 * logcosh


def closed_form_eval(pair: ClosedFormPair, t: float) -> PeakonState:
    """Exact two-peakon state at time t in [0, T).

    The peakon (momentum +p(t)/2) sits at q(t)/2 < 0 moving right, the
    antipeakon at -q(t)/2 moving left; they collide at the origin at time T.
    """
    t = float(t)
    if t < 0.0 or t >= pair.T:
        raise ValueError(f"t={t} outside the closed form domain [0, T={pair.T})")
    p, q = closed_form_pq(pair, t)
    return PeakonState(t, np.array([0.5 * q, -0.5 * q]), np.array([0.5 * p, -0.5 * p]))


def invariant_value(state: PeakonState) -> float:
    """p(t)^2 (1 - e^{q(t)}) of an antisymmetric two-peakon state.

    Uses expm1 so the value stays meaningful when the gap is tiny.
    """
    if state.n != 2:
        raise ValueError("invariant is defined for two-peakon states")
    p = state.p[0] - state.p[1]   # pair momentum (antisymmetric: 2 * p_1)
    q = state.q[0] - state.q[1]   # pair separation (negative)
    return p * p * (-math.expm1(q))


def antisymmetric_pair_of(state: PeakonState, tol: float = 1e-9) -> ClosedFormPair | None:
    """Recover ClosedFormPair parameters from an antisymmetric two-peakon state.

    Returns None unless the state is (to ``tol``) of the form
    q = [Q, -Q], p = [P, -P] with Q < 0 < P, i.e. an approaching pair with an
    exact closed form ahead of it.
    """
    if state.n != 2:
        return None
    scale_p = max(1.0, float(np.max(np.abs(state.p))))
    scale_q = max(1.0, float(np.max(np.abs(state.q))))
    if abs(state.p[0] + state.p[1]) > tol * scale_p:
        return None
    if abs(state.q[0] + state.q[1]) > tol * scale_q:
        return None
    if not (state.p[0] > 0.0 and state.q[0] < 0.0):
        return None
    return ClosedFormPair(2.0 * state.p[0], 2.0 * state.q[0])


# ---------------------------------------------------------------------------
# N-peakon ODE system
# ---------------------------------------------------------------------------

def npeakon_rhs(state: PeakonState, epsilon_gap: float = 0.0):
    """Right-hand side of the interacting peakon system.

        dq_i = sum_j p_j e^{-|q_i - q_j|}            (= u(q_i))
        dp_i = sum_j p_i p_j sgn(q_i - q_j) e^{-|q_i - q_j|},  sgn(0) = 0

    Raises CollisionError when the smallest gap is below ``epsilon_gap`` (or
    exactly zero).
    """
    gap = state.min_gap()
    if gap < epsilon_gap or gap == 0.0:
        raise CollisionError(f"adjacent peakons closer than {max(epsilon_gap, 0.0)!r}")
    dq, dp = _rhs_arrays(state.q, state.p)
    return dq, dp


def _rhs_arrays(q: np.ndarray, p: np.ndarray):
    if len(q) == 0:
        return np.empty(0), np.empty(0)
    d = q[:, None] - q[None, :]
    w = np.exp(-np.abs(d))
    dq = (p * w).sum(axis=-1)           # same reduction as kernel_sum(q, q, p)
    dp = p * (p * np.sign(d) * w).sum(axis=-1)
    return dq, dp


def _gap_event(epsilon_gap, n):
    def event(t, y):
        if n < 2:
            return 1.0
        return float(np.min(np.diff(y[:n]))) - epsilon_gap

    event.terminal = True
    event.direction = -1.0
    return event


def integrate_dense(
    state: PeakonState,
    t_end: float,
    tol: float = 1e-9,
    epsilon_gap: float = EPSILON_GAP,
    method: str = "DOP853",
):
    """Integrate the peakon ODEs with dense output.

    Returns ``(sol, event)`` where ``sol`` is the solve_ivp result (valid up
    to ``sol.t[-1]``) and ``event`` is a BreakingEvent or None.  Step-size
    failure near a closing gap is reported as breaking, not raised.
    """
    if not (0.0 < tol <= 1e-2):
        raise ValueError("tol must lie in (0, 1e-2]")
    t_end = float(t_end)
    if t_end < state.t:
        raise ValueError("t_end must be >= state.t")
    n = state.n
    y0 = np.concatenate([state.q, state.p])

    def rhs(t, y):
        dq, dp = _rhs_arrays(y[:n], y[n:])
        return np.concatenate([dq, dp])

    if n == 0 or t_end == state.t:
        sol = solve_ivp(rhs, (state.t, max(t_end, state.t + 1e-12)), y0,
                        method=method, rtol=tol, atol=1e-3 * tol, dense_output=True)
        return sol, None

    sol = solve_ivp(
        rhs, (state.t, t_end), y0,
        method=method, rtol=tol, atol=1e-3 * tol,
        dense_output=True, events=_gap_event(epsilon_gap, n),
    )
    event = None
    if sol.t_events and len(sol.t_events[0]):
        event = _make_breaking_event(sol, n, state.t)
    elif sol.status == -1:
        qf = sol.y[:n, -1]
        if n >= 2 and float(np.min(np.diff(qf))) < 1e3 * epsilon_gap:
            event = _make_breaking_event(sol, n, state.t)
        else:  # genuine solver failure, surface it
            raise RuntimeError(f"ODE solver failed: {sol.message}")
    return sol, event


def _make_breaking_event(sol, n, t_start) -> BreakingEvent:
    from . import fields  # deferred: fields imports this module

    t_break = float(sol.t[-1])
    qf = sol.y[:n, -1]
    gaps = np.diff(qf)
    i = int(np.argmin(gaps))
    ts = np.linspace(t_start, t_break, 201)
    vmin = math.inf
    for t in ts:
        y = sol.sol(t)
        st = PeakonState(t, y[:n], y[n:])
        if st.min_gap() > 0.0:
            vmin = min(vmin, fields.extreme_ux(st)[0])
    return BreakingEvent(t_break, (i, i + 1), float(gaps[i]), vmin)


def integrate(
    state: PeakonState,
    t_end: float,
    tol: float = 1e-9,
    epsilon_gap: float = EPSILON_GAP,
    method: str = "DOP853",
):
    """Advance a state to ``t_end``.

    Returns the PeakonState at t_end, or a BreakingEvent if an adjacent gap
    closes below ``epsilon_gap`` first.
    """
    sol, event = integrate_dense(state, t_end, tol=tol, epsilon_gap=epsilon_gap, method=method)
    if event is not None:
        return event
    n = state.n
    y = sol.y[:, -1]
    return PeakonState(t_end, y[:n], y[n:])


def breaking_time_estimate(
    state: PeakonState,
    horizon: float = 10.0,
    tol: float = 1e-9,
    epsilon_gap: float = EPSILON_GAP,
) -> float | None:
    """Absolute breaking time of a state, or None if none is detected.

    Antisymmetric two-peakon data uses the closed form T; anything else is
    integrated up to ``state.t + horizon`` and the detected collision time is
    returned.
    """
    pair = antisymmetric_pair_of(state)
    if pair is not None:
        return state.t + pair.T
    res = integrate(state, state.t + float(horizon), tol=tol, epsilon_gap=epsilon_gap)
    if isinstance(res, BreakingEvent):
        return res.t_break
    return None
