"""Time-indexed multipeakon solution providers.

Characteristics and measure estimation only need one thing from a solution:
the PeakonState at an arbitrary time.  Providers here supply that for

* the identically-zero solution,
* the exact antisymmetric pair (optionally prolonged past breaking, either
  conservatively by time-odd reflection or dissipatively by the zero field),
* the creation-of-a-pair solution (the reflected pair restarted at its
  collision, so the field is 0 at t = 0 and energy appears out of nothing),
* numerically integrated general multipeakon data, and
* the time reversal -u(t0 - t, x) of any other provider, which is again a
  solution and is how dissipation measures reduce to accretion measures.

Providers are immutable after construction and safe for concurrent reads.
Queries inside the +-1e-6 window around a breaking time are clamped to its
edge (slopes there already reach ~1e6, the far end of what double precision
resolves cleanly); a query exactly at breaking returns the zero field.
"""

from __future__ import annotations

import math

import numpy as np

from .peakons import (
    BreakingEvent,
    ClosedFormPair,
    PeakonState,
    closed_form_pq,
    integrate_dense,
    zero_state,
)

__all__ = [
    "Solution",
    "ZeroSolution",
    "ClosedFormSolution",
    "IntegratedSolution",
    "TimeReversedSolution",
    "BREAKING_CLAMP",
]

#: Half-width of the clamp window around a breaking time.
BREAKING_CLAMP = 1e-6


class Solution:
    """Base provider: a map t -> PeakonState plus breaking-time metadata."""

    t_start: float = 0.0
    t_end: float = math.inf
    singular_times: tuple[float, ...] = ()

    def state(self, t: float) -> PeakonState:
        raise NotImplementedError

    def first_singular_after(self, t: float) -> float | None:
        """Earliest breaking time strictly after t (None if none)."""
        later = [s for s in self.singular_times if s > t + 1e-12]
        return min(later) if later else None

    def _clamp(self, t: float) -> float:
        for s in self.singular_times:
            if abs(t - s) < BREAKING_CLAMP and t != s:
                return s - BREAKING_CLAMP if t < s else s + BREAKING_CLAMP
        return t


class ZeroSolution(Solution):
    """u == 0 for all times."""

    def __init__(self, t_start: float = 0.0):
        self.t_start = float(t_start)

    def state(self, t: float) -> PeakonState:
        return zero_state(float(t))


class ClosedFormSolution(Solution):
    """The exact antisymmetric pair, with a selectable continuation past T.

    prolongation:
        'none'          domain [t_origin, T_abs); queries clamp below T_abs
        'conservative'  u(t,x) = -u(2 T_abs - t, x) for t > T_abs (the closed
                        form continues analytically through the collision)
        'zero'          u == 0 for t >= T_abs

    ``t_origin`` shifts the pair's clock; the creation-of-a-pair solution is
    the conservative continuation with t_origin = -T, so that the field at
    t = 0 is identically zero and the pair emerges for t > 0.
    """

    def __init__(self, pair: ClosedFormPair, prolongation: str = "none",
                 t_origin: float = 0.0, t_start: float | None = None):
        if prolongation not in ("none", "conservative", "zero"):
            raise ValueError(f"unknown prolongation {prolongation!r}")
        self.pair = pair
        self.prolongation = prolongation
        self.t_origin = float(t_origin)
        self.T_abs = self.t_origin + pair.T
        self.t_start = self.t_origin if t_start is None else float(t_start)
        self.t_end = self.T_abs if prolongation == "none" else math.inf
        self.singular_times = (self.T_abs,)

    @classmethod
    def pair_creation(cls, pair: ClosedFormPair) -> "ClosedFormSolution":
        return cls(pair, prolongation="conservative", t_origin=-pair.T, t_start=0.0)

    def state(self, t: float) -> PeakonState:
        t = float(t)
        if t == self.T_abs:
            return zero_state(t)
        tc = self._clamp(t)
        if self.prolongation == "zero" and tc >= self.T_abs:
            return zero_state(t)
        if self.prolongation == "none" and tc >= self.T_abs:
            tc = self.T_abs - BREAKING_CLAMP
        p, q = closed_form_pq(self.pair, tc - self.t_origin)
        return PeakonState(t, np.array([0.5 * q, -0.5 * q]), np.array([0.5 * p, -0.5 * p]))


class IntegratedSolution(Solution):
    """Dense numerical solution of general multipeakon initial data.

    Integrates once on construction, stopping at the first collision; queries
    past the stop time clamp to it.  ``breaking`` carries the BreakingEvent
    when one was detected.
    """

    def __init__(self, initial: PeakonState, t_end: float, tol: float = 1e-9,
                 epsilon_gap: float | None = None):
        kw = {} if epsilon_gap is None else {"epsilon_gap": epsilon_gap}
        sol, event = integrate_dense(initial, t_end, tol=tol, **kw)
        self._n = initial.n
        self._sol = sol
        self.breaking: BreakingEvent | None = event
        self.t_start = initial.t
        self.t_end = float(sol.t[-1])
        self.singular_times = (event.t_break,) if event is not None else ()

    def state(self, t: float) -> PeakonState:
        t = float(t)
        tc = min(max(self._clamp(t), self.t_start), self.t_end)
        y = self._sol.sol(tc)
        n = self._n
        return PeakonState(t, y[:n], y[n:])


class TimeReversedSolution(Solution):
    """u^{t0b}(t, x) = -u(t0 - t, x), itself a solution on [0, t0 - t_start].

    Running the movie backward from t0 with the sign flipped turns left limits
    at t0 into right limits at 0; dissipation estimates use exactly this.
    """

    def __init__(self, inner: Solution, t0: float):
        self.inner = inner
        self.t0 = float(t0)
        self.t_start = 0.0
        self.t_end = self.t0 - inner.t_start
        self.singular_times = tuple(
            self.t0 - s for s in inner.singular_times if inner.t_start <= s <= self.t0
        )

    def state(self, t: float) -> PeakonState:
        return self.inner.state(self.t0 - float(t)).negated(t=float(t))
