"""Characteristics, the slope Riccati equation, and thick pushforwards.

A characteristic of a solution u is a curve with zeta' = u(t, zeta).  Along
it the velocity satisfies U' = -P_x and, at points where the flow is unique
and the slope well defined, the slope obeys the Riccati equation

    v' = u^2 - v^2 / 2 - P.

Weak solutions have nonunique characteristics; extremal (leftmost/rightmost)
selections are approximated here by one-sided delta-families: integrate from
zeta0 +- delta for a decreasing sequence of offsets and extrapolate the
monotone limit.  The one-sided limit is the correct target because the
rightmost flow is right-continuous in its starting point; no rate is known,
so every extremal result carries convergence diagnostics.

The thick pushforward B(t) of a set B collects the time-t values of all
characteristics starting in B.  For the set classes supported here (finite
unions of closed/open intervals and points) it is assembled from extremal
characteristics:

    [a, b]  ->  [a^l(t), b^r(t)]
    {a}     ->  [a^l(t), a^r(t)]
    (a, b)  ->  (a^r(t), b^l(t))   inner,   [a^rl(t), b^lr(t)]   outer,

where a^rl / b^lr (left-rightmost / right-leftmost) are obtained by
restarting a leftmost/rightmost family just after t0.  Pushbackwards run the
same machinery on the time-reversed solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from .fields import eval_P_Px, eval_u, eval_ux
from .numerics import one_sided_limit
from .solutions import Solution, TimeReversedSolution

__all__ = [
    "CharPath",
    "Pushforward",
    "ExtremalFamilyError",
    "TruncatedPathError",
    "DEFAULT_DELTA_SEQ",
    "integrate_char",
    "integrate_char_batch",
    "riccati_residual",
    "extremal_char",
    "thick_pushforward",
    "pushforward_at_times",
    "cov_jacobian",
    "normalize_borel",
]

#: Default one-sided offset family 1e-2 * 2^-k, k = 0..8.
DEFAULT_DELTA_SEQ = 1e-2 * 0.5 ** np.arange(9)

_CHAR_TOL = 1e-10


class ExtremalFamilyError(RuntimeError):
    """A delta-family violated monotonicity beyond tolerance: the one-sided
    uniqueness heuristic failed at this starting point."""


class TruncatedPathError(RuntimeError):
    """An operation needed a full path but got one truncated at breaking."""


@dataclass
class CharPath:
    """A sampled characteristic with along-path velocity and Riccati slope.

    u stores the independently integrated U' = -P_x velocity (it must agree
    with a fresh field evaluation along the path; that agreement is a real
    consistency check of the characteristic system).  v solves the Riccati
    equation from v(t0) = u_x(t0, zeta0).
    """

    t_samples: np.ndarray
    zeta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    flavor: str = "generic"
    truncated: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def t0(self) -> float:
        return float(self.t_samples[0])

    @property
    def t1(self) -> float:
        return float(self.t_samples[-1])

    def terminal(self) -> float:
        return float(self.zeta[-1])

    def value_at(self, t: float) -> float:
        return float(np.interp(t, self.t_samples, self.zeta))

    def write_csv(self, path) -> None:
        from .serialize import write_charpath_csv

        write_charpath_csv(path, self)


@dataclass
class Pushforward:
    """Disjoint sorted intervals approximating B(t).

    ``pieces`` holds the canonical per-class set (closed: [a^l, b^r]; point:
    [a^l, a^r]; open: the inner (a^r, b^l)).  For open pieces the outer
    sandwich cover [a^rl, b^lr] is kept in ``outer_pieces``.
    """

    t: float
    pieces: list[tuple[float, float]]
    source: str
    outer_pieces: list[tuple[float, float]] | None = None
    truncated: bool = False


# ---------------------------------------------------------------------------
# core integration
# ---------------------------------------------------------------------------

def _truncation(source: Solution, t0: float, t1: float):
    """Clip [t0, t1] below the first breaking time inside it."""
    s = source.first_singular_after(t0)
    if s is not None and s <= t1:
        return max(t0, s - 1e-6), True
    return t1, False


def _solve_forward(source: Solution, t0: float, z0: np.ndarray, t1: float,
                   tol: float, t_eval: np.ndarray):
    n = len(z0)
    st0 = source.state(t0)
    y0 = np.concatenate([z0, eval_u(st0, z0), eval_ux(st0, z0)])

    def rhs(t, y):
        st = source.state(t)
        z, v = y[:n], y[2 * n:]
        u = eval_u(st, z)
        P, Px = eval_P_Px(st, z)
        return np.concatenate([u, -Px, u * u - 0.5 * v * v - P])

    if t1 == t0:
        m = len(t_eval)
        tile = np.tile(y0.reshape(3, n), (m, 1, 1))
        return tile[:, 0, :], tile[:, 1, :], tile[:, 2, :]

    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=tol,
                    atol=1e-2 * tol + 1e-14, dense_output=True)
    if sol.status != 0:
        raise RuntimeError(f"characteristic integration failed: {sol.message}")
    ys = sol.sol(t_eval)
    return ys[:n].T, ys[n:2 * n].T, ys[2 * n:].T


def integrate_char_batch(source: Solution, t0: float, zeta0, t1: float,
                         tol: float = _CHAR_TOL, t_eval=None):
    """Integrate many characteristics of one solution at once.

    Returns (t_samples, Z, U, V, truncated) with arrays shaped
    (n_times, n_chars).  Backward runs (t1 < t0) go through the reversed
    solution; samples are reported in increasing time either way.
    """
    z0 = np.atleast_1d(np.asarray(zeta0, dtype=float))
    t0, t1 = float(t0), float(t1)
    if t1 >= t0:
        t1_eff, trunc = _truncation(source, t0, t1)
        ts = np.linspace(t0, t1_eff, 1025) if t_eval is None else np.clip(
            np.sort(np.asarray(t_eval, float)), t0, t1_eff)
        Z, U, V = _solve_forward(source, t0, z0, t1_eff, tol, ts)
        return ts, Z, U, V, trunc
    rev = TimeReversedSolution(source, t0)
    s1 = t0 - t1
    s1_eff, trunc = _truncation(rev, 0.0, s1)
    ss = np.linspace(0.0, s1_eff, 1025) if t_eval is None else np.clip(
        np.sort(t0 - np.asarray(t_eval, float)), 0.0, s1_eff)
    Z, U, V = _solve_forward(rev, 0.0, z0, s1_eff, tol, ss)
    ts = t0 - ss
    order = np.argsort(ts)
    return ts[order], Z[order], -U[order], -V[order], trunc


def integrate_char(source: Solution, t0: float, zeta0: float, t1: float,
                   tol: float = _CHAR_TOL, t_eval=None, flavor: str = "generic") -> CharPath:
    """One characteristic from (t0, zeta0) to t1 (forward or backward)."""
    ts, Z, U, V, trunc = integrate_char_batch(source, t0, [zeta0], t1, tol=tol, t_eval=t_eval)
    if t1 < t0 and "backward" not in flavor:
        flavor = flavor + "-backward"
    return CharPath(ts, Z[:, 0], U[:, 0], V[:, 0], flavor=flavor, truncated=trunc)


def riccati_residual(path: CharPath, source: Solution) -> float:
    """Sup over samples of |v(t) - v(t0) - ∫ (U^2 - v^2/2 - P) ds|.

    The integral uses Simpson quadrature on the sample grid, independent of
    the ODE solver's internal steps, so a small residual certifies both the
    stored slope and the sampling resolution.
    """
    P = np.empty_like(path.t_samples)
    for i, (t, z) in enumerate(zip(path.t_samples, path.zeta)):
        P[i], _ = eval_P_Px(source.state(t), float(z))
    integrand = path.u ** 2 - 0.5 * path.v ** 2 - P
    acc = cumulative_simpson(integrand, x=path.t_samples, initial=0.0)
    return float(np.max(np.abs(path.v - path.v[0] - acc)))


def cov_jacobian(path: CharPath) -> float:
    """Flow-map derivative along the path: exp(∫ v ds), trapezoid quadrature."""
    if path.truncated:
        raise TruncatedPathError("jacobian undefined on a truncated path")
    return float(np.exp(np.trapezoid(path.v, path.t_samples)))


# ---------------------------------------------------------------------------
# extremal characteristics via delta-families
# ---------------------------------------------------------------------------

def _richardson_paths(deltas: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Columnwise linear-in-delta extrapolation from the two finest members.

    values has shape (n_times, n_deltas), deltas decreasing.
    """
    d1, d0 = deltas[-2], deltas[-1]
    return (d1 * values[:, -1] - d0 * values[:, -2]) / (d1 - d0)


def extremal_char(source: Solution, t0: float, zeta0: float, t1: float,
                  side: str, delta_seq=None, tol: float = _CHAR_TOL,
                  t_eval=None) -> CharPath:
    """Leftmost or rightmost characteristic from (t0, zeta0), by delta-family.

    side='right': integrate from zeta0 + delta for each delta and extrapolate
    the decreasing limit; side='left' mirrors.  Monotonicity across the family
    is enforced as a diagnostic; violations beyond tolerance raise
    ExtremalFamilyError.  Diagnostics carry the terminal family values and the
    collapse spread of the three finest members.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    deltas = np.asarray(DEFAULT_DELTA_SEQ if delta_seq is None else delta_seq, dtype=float)
    if len(deltas) < 2 or np.any(np.diff(deltas) >= 0) or np.any(deltas <= 0):
        raise ValueError("delta_seq must be strictly decreasing and positive")
    sgn = 1.0 if side == "right" else -1.0
    starts = zeta0 + sgn * deltas
    ts, Z, U, V, trunc = integrate_char_batch(source, t0, starts, t1, tol=tol, t_eval=t_eval)

    # rightmost: values decrease toward the limit as delta decreases
    drift = sgn * np.diff(Z, axis=1)          # should be <= 0 columnwise
    mono_violation = float(max(np.max(drift, initial=-math.inf), 0.0))
    scale = 1.0 + float(np.max(np.abs(Z)))
    if mono_violation > max(1e-8, 1e3 * tol) * scale:
        raise ExtremalFamilyError(
            f"delta-family not monotone (violation {mono_violation:.3e}) at zeta0={zeta0}")

    zeta = _richardson_paths(deltas, Z)
    u = _richardson_paths(deltas, U)
    v = _richardson_paths(deltas, V)
    tail = Z[-1, -3:] if Z.shape[1] >= 3 else Z[-1, :]
    diag = {
        "delta_seq": deltas,
        "terminal_family": Z[-1, :].copy(),
        "collapse_spread": float(np.max(tail) - np.min(tail)),
        "monotone_violation": mono_violation,
    }
    forward = t1 >= t0
    flavor = ("leftmost" if side == "left" else "rightmost") + ("" if forward else "-backward")
    return CharPath(ts, zeta, u, v, flavor=flavor, truncated=trunc, diagnostics=diag)


def _restarted_extremal(source: Solution, t0: float, zeta0: float, t1: float,
                        outer_side: str, tol: float = _CHAR_TOL,
                        eta_seq=None, delta_seq=None) -> float:
    """Terminal value of the left-rightmost (outer_side='right') or
    right-leftmost (outer_side='left') characteristic.

    Follow the extremal path of ``outer_side`` to t0 + eta, restart the
    opposite extremal family there, and extrapolate eta -> 0+.
    """
    etas = np.asarray(1e-3 * 0.5 ** np.arange(4) if eta_seq is None else eta_seq, float)
    deltas = (DEFAULT_DELTA_SEQ[::2] if delta_seq is None else np.asarray(delta_seq, float))
    inner_side = "left" if outer_side == "right" else "right"
    t_eval = np.sort(np.concatenate([[t0], etas + t0, [t1]]))
    base = extremal_char(source, t0, zeta0, t1, outer_side, delta_seq=deltas,
                         tol=tol, t_eval=t_eval)
    vals = []
    for eta in etas:
        z_restart = base.value_at(t0 + eta)
        p = extremal_char(source, t0 + eta, z_restart, t1, inner_side,
                          delta_seq=deltas, tol=tol, t_eval=np.array([t0 + eta, t1]))
        vals.append(p.terminal())
    est = one_sided_limit(etas[::-1] * 0 + etas, np.asarray(vals))  # etas already decreasing
    return est.value


# ---------------------------------------------------------------------------
# Borel-set handling and pushforwards
# ---------------------------------------------------------------------------

def normalize_borel(B) -> list[tuple[str, float, float]]:
    """Normalize a set description to [(kind, a, b)] pieces.

    Accepted forms: a number (a point), a pair (a, b) (closed interval),
    ('closed'|'open'|'point', a, b), or a list of any of these.  Pieces are
    sorted by left endpoint.
    """
    if isinstance(B, (int, float)):
        x = float(B)
        return [("point", x, x)]
    if isinstance(B, tuple) and len(B) == 3 and isinstance(B[0], str):
        kind, a, b = B
        if kind not in ("closed", "open", "point"):
            raise ValueError(f"unknown interval kind {kind!r}")
        a, b = float(a), float(b)
        if b < a:
            raise ValueError("interval must satisfy a <= b")
        return [(kind, a, b)]
    if isinstance(B, (tuple, list)) and len(B) == 2 and all(
            isinstance(v, (int, float)) for v in B):
        a, b = float(B[0]), float(B[1])
        if b < a:
            raise ValueError("interval must satisfy a <= b")
        return [("closed", a, b) if b > a else ("point", a, a)]
    if isinstance(B, (list, tuple)):
        pieces = []
        for item in B:
            pieces.extend(normalize_borel(item))
        return sorted(pieces, key=lambda pc: (pc[1], pc[2]))
    raise ValueError(f"cannot interpret {B!r} as a finite union of intervals/points")


def borel_description(B) -> str:
    parts = []
    for kind, a, b in normalize_borel(B):
        if kind == "point":
            parts.append(f"{{{a:g}}}")
        elif kind == "open":
            parts.append(f"({a:g},{b:g})")
        else:
            parts.append(f"[{a:g},{b:g}]")
    return " U ".join(parts)


def _merge(pieces: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pieces = sorted(pieces)
    out: list[tuple[float, float]] = []
    for lo, hi in pieces:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def pushforward_at_times(source: Solution, t0: float, B, times,
                         delta_seq=None, tol: float = _CHAR_TOL,
                         with_outer: bool = False) -> list[Pushforward]:
    """Thick pushforward (t >= t0) or pushbackward (t <= t0) of B at several
    times, sharing one delta-family integration per needed endpoint."""
    pieces = normalize_borel(B)
    times = np.asarray(sorted(float(t) for t in np.atleast_1d(times)))
    if len(times) == 0:
        return []
    forward = times[0] >= t0
    if not (np.all(times >= t0) or np.all(times <= t0)):
        raise ValueError("times must lie on one side of t0")
    t_far = float(times[-1] if forward else times[0])
    t_eval = np.concatenate([[t0], times]) if forward else np.concatenate([times, [t0]])
    t_eval = np.unique(t_eval)

    # which extremal endpoints each piece class needs
    paths: dict[tuple[float, str], CharPath] = {}

    def endpoint(z: float, side: str) -> CharPath:
        key = (z, side)
        if key not in paths:
            paths[key] = extremal_char(source, t0, z, t_far, side,
                                       delta_seq=delta_seq, tol=tol, t_eval=t_eval)
        return paths[key]

    needs = []
    for kind, a, b in pieces:
        if kind == "closed":
            needs.append((endpoint(a, "left"), endpoint(b, "right"), kind, a, b))
        elif kind == "point":
            needs.append((endpoint(a, "left"), endpoint(a, "right"), kind, a, b))
        else:
            needs.append((endpoint(a, "right"), endpoint(b, "left"), kind, a, b))

    desc = borel_description(B)
    result = []
    truncated = any(p.truncated for p in paths.values())
    for t in times:
        main: list[tuple[float, float]] = []
        outer: list[tuple[float, float]] = []
        for left_path, right_path, kind, a, b in needs:
            lo, hi = left_path.value_at(t), right_path.value_at(t)
            if kind == "open" and hi < lo:
                continue  # inner approximation collapsed
            main.append((min(lo, hi), max(lo, hi)))
            if kind == "open" and with_outer:
                lo_o = _restarted_extremal(source, t0, a, t, "right", tol=tol)
                hi_o = _restarted_extremal(source, t0, b, t, "left", tol=tol)
                outer.append((lo_o, hi_o))
        result.append(Pushforward(
            t=float(t), pieces=_merge(main), source=desc,
            outer_pieces=_merge(outer) if outer else None, truncated=truncated))
    return result


def thick_pushforward(source: Solution, t0: float, B, t: float,
                      delta_seq=None, tol: float = _CHAR_TOL,
                      with_outer: bool = False) -> Pushforward:
    """Thick pushforward of B from t0 to a single time t (either direction)."""
    return pushforward_at_times(source, t0, B, [t], delta_seq=delta_seq,
                                tol=tol, with_outer=with_outer)[0]
