"""Polyhedral queries on the technology set.

Membership, dominance, frontier classification, the ideal point, and the two
practical detectors of ideal technologies (generator search and per-coordinate
membership LPs).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linprog import LinearProgram, LpError, LpStatus, solve
from .model import Technology

__all__ = [
    "Dominance",
    "dominance",
    "membership",
    "contains",
    "max_improvement",
    "SlackSolution",
    "max_additive_slack",
    "UnitLocation",
    "classify_unit",
    "ideal_point",
    "is_trivial_technology",
    "coincidence_sets",
    "IdealTechnologyReport",
    "ideal_technology_by_generators",
    "ideal_technology_by_membership",
]


# ---------------------------------------------------------------------------
# Dominance
# ---------------------------------------------------------------------------


class Dominance(Enum):
    NONE = "none"
    WEAK = "weak"                    # x_u <= x_v, y_u >= y_v
    STRICT_PARTIAL = "strict-partial"  # weak and u != v
    STRICT = "strict"                # componentwise strict

    @property
    def dominates(self) -> bool:
        """True for the two relations that make u strictly better somewhere."""
        return self in (Dominance.STRICT_PARTIAL, Dominance.STRICT)


def dominance(u: tuple[np.ndarray, np.ndarray], v: tuple[np.ndarray, np.ndarray]) -> Dominance:
    """Classify how unit u relates to unit v (inputs lower, outputs higher is better)."""
    xu, yu = np.atleast_1d(np.asarray(u[0], float)), np.atleast_1d(np.asarray(u[1], float))
    xv, yv = np.atleast_1d(np.asarray(v[0], float)), np.atleast_1d(np.asarray(v[1], float))
    if xu.shape != xv.shape or yu.shape != yv.shape:
        raise ValueError("dominance requires equal dimensions")
    if not (np.all(xu <= xv) and np.all(yu >= yv)):
        return Dominance.NONE
    if np.all(xu < xv) and np.all(yu > yv):
        return Dominance.STRICT
    if np.array_equal(xu, xv) and np.array_equal(yu, yv):
        return Dominance.WEAK
    return Dominance.STRICT_PARTIAL


# ---------------------------------------------------------------------------
# Membership and improvement LPs
# ---------------------------------------------------------------------------


def membership(tech: Technology, x, y, tol: float = 1e-8) -> tuple[float, np.ndarray]:
    """Scaled infeasibility gap of (x, y) and a witnessing intensity vector.

    Solves  min t  s.t.  X lam - t sx <= x,  Y lam + t sy >= y,  sum lam = 1,
    lam >= 0, t >= 0, with per-row scales sx, sy. The point belongs to the
    technology iff the gap is ~0; the LP is always feasible and bounded,
    which keeps repeated calls inside a bisection loop robust.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    n, m, s = tech.n, tech.m, tech.s
    if x.size != m or y.size != s:
        raise ValueError("point dimensions do not match the technology")
    a_ub = np.zeros((m + s, n + 1))
    a_ub[:m, :n] = tech.X
    a_ub[:m, n] = -tech.row_scale_x
    a_ub[m:, :n] = -tech.Y
    a_ub[m:, n] = -tech.row_scale_y
    b_ub = np.concatenate([x, -y])
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    lp = LinearProgram(
        c=np.concatenate([np.zeros(n), [1.0]]),
        a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=np.array([1.0]),
    )
    sol = solve(lp, tol)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpError(f"membership LP ended {sol.status.value}")
    return max(0.0, float(sol.objective_value)), sol.z[:n].copy()


def contains(tech: Technology, point: tuple, tol: float = 1e-8) -> bool:
    """True iff some convex combination of units weakly dominates the point."""
    gap, _ = membership(tech, point[0], point[1], tol)
    return gap <= tol


def max_improvement(tech: Technology, x, y, dir_x, dir_y, tol: float = 1e-8) -> float:
    """Largest t with (x - t dir_x, y + t dir_y) in the technology.

    The improving direction must be strictly positive so the LP stays
    feasible for t << 0; negative optima measure how far outside the point
    lies along the ray.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    dir_x = np.atleast_1d(np.asarray(dir_x, float))
    dir_y = np.atleast_1d(np.asarray(dir_y, float))
    if np.any(dir_x <= 0.0) or np.any(dir_y <= 0.0):
        raise ValueError("improvement direction must be strictly positive")
    n, m, s = tech.n, tech.m, tech.s
    a_ub = np.zeros((m + s, n + 1))
    a_ub[:m, :n] = tech.X
    a_ub[:m, n] = dir_x
    a_ub[m:, :n] = -tech.Y
    a_ub[m:, n] = dir_y
    b_ub = np.concatenate([x, -y])
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    lp = LinearProgram(
        c=np.concatenate([np.zeros(n), [-1.0]]),
        a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=np.array([1.0]),
        lower=np.concatenate([np.zeros(n), [-np.inf]]),
    )
    sol = solve(lp, tol)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpError(f"improvement LP ended {sol.status.value}")
    return -float(sol.objective_value)


@dataclass(frozen=True)
class SlackSolution:
    total: float
    slack_x: np.ndarray
    slack_y: np.ndarray
    lam: np.ndarray


def max_additive_slack(tech: Technology, x, y, feas_tol: float = 1e-8) -> SlackSolution:
    """Maximise total additive slack at a point of the technology.

    max sum(sx) + sum(sy)  s.t.  X lam + sx <= x,  Y lam - sy >= y,
    sum lam = 1, lam, sx, sy >= 0. A zero optimum certifies that the point
    is strongly efficient. Points that are only tolerance-close to the
    technology get a small rhs cushion so the program stays feasible.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    n, m, s = tech.n, tech.m, tech.s

    def _attempt(cushion: float) -> SlackSolution | None:
        a_ub = np.zeros((m + s, n + m + s))
        a_ub[:m, :n] = tech.X
        a_ub[:m, n:n + m] = np.eye(m)
        a_ub[m:, :n] = -tech.Y
        a_ub[m:, n + m:] = np.eye(s)
        b_ub = np.concatenate([
            x + cushion * tech.row_scale_x,
            -(y - cushion * tech.row_scale_y),
        ])
        a_eq = np.zeros((1, n + m + s))
        a_eq[0, :n] = 1.0
        c = np.concatenate([np.zeros(n), -np.ones(m + s)])
        sol = solve(LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=np.array([1.0])), feas_tol)
        if sol.status is LpStatus.INFEASIBLE:
            return None
        if sol.status is not LpStatus.OPTIMAL:
            raise LpError(f"slack LP ended {sol.status.value}")
        lam = sol.z[:n].copy()
        sx = sol.z[n:n + m].copy()
        sy = sol.z[n + m:].copy()
        return SlackSolution(max(0.0, -float(sol.objective_value)), sx, sy, lam)

    out = _attempt(0.0)
    if out is None:
        out = _attempt(feas_tol)
    if out is None:
        raise LpError("slack LP infeasible: point lies outside the technology")
    return out


# ---------------------------------------------------------------------------
# Frontier classification
# ---------------------------------------------------------------------------


class UnitLocation(str, Enum):
    INTERIOR = "interior"
    WEAK_FRONTIER = "weak-frontier"
    STRONG_FRONTIER = "strong-frontier"
    OUTSIDE = "outside"


def classify_unit(
    tech: Technology,
    point: tuple,
    tol: float = 1e-8,
    boundary_tol: float | None = None,
    slack_tol: float | None = None,
) -> UnitLocation:
    """Locate a point relative to the technology frontier.

    Interior means strictly improvable in every coordinate at once, measured
    by the largest uniform improvement step; a boundary point is strongly
    efficient iff the additive slack optimum at the point itself is zero.
    """
    x, y = np.atleast_1d(np.asarray(point[0], float)), np.atleast_1d(np.asarray(point[1], float))
    if boundary_tol is None:
        boundary_tol = 1e-7 * max(1.0, tech.data_range)
    if slack_tol is None:
        slack_tol = tech.default_slack_threshold()
    gap, _ = membership(tech, x, y, tol)
    if gap > tol:
        return UnitLocation.OUTSIDE
    step = max_improvement(tech, x, y, np.ones(tech.m), np.ones(tech.s), tol)
    if step > boundary_tol:
        return UnitLocation.INTERIOR
    slack = max_additive_slack(tech, x, y, tol)
    if slack.total <= slack_tol:
        return UnitLocation.STRONG_FRONTIER
    return UnitLocation.WEAK_FRONTIER


def ideal_point(tech: Technology) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise minimum of inputs and maximum of outputs."""
    return tech.ideal_point


def is_trivial_technology(tech: Technology, tol: float = 1e-8) -> bool:
    """True iff the technology contains its own ideal point."""
    return contains(tech, tech.ideal_point, tol)


def coincidence_sets(tech: Technology, x, y) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Index sets of coordinates where the point touches the ideal point."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    atol_x = 1e-9 * (1.0 + np.abs(tech.x_min))
    atol_y = 1e-9 * (1.0 + np.abs(tech.y_max))
    eye = tuple(int(i) for i in np.nonzero(np.abs(x - tech.x_min) <= atol_x)[0])
    arr = tuple(int(r) for r in np.nonzero(np.abs(y - tech.y_max) <= atol_y)[0])
    return eye, arr


# ---------------------------------------------------------------------------
# Ideal-technology detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdealTechnologyReport:
    """Verdict of one ideal-technology detector with per-coordinate witnesses.

    An ideal technology is one whose entire weakly efficient frontier touches
    the ideal point in at least one coordinate. The generator detector
    exhibits, per coordinate, a unit coinciding with the ideal point except
    perhaps in that coordinate; the membership detector exhibits a
    technology point of the same shape, at offset delta >= 0.
    """

    ideal_x: np.ndarray
    ideal_y: np.ndarray
    is_trivial: bool
    is_ideal: bool
    method: str
    input_witnesses: tuple[int | None, ...] = ()
    output_witnesses: tuple[int | None, ...] = ()
    input_deltas: tuple[float | None, ...] = ()
    output_deltas: tuple[float | None, ...] = ()


def ideal_technology_by_generators(tech: Technology, tol: float = 1e-8) -> IdealTechnologyReport:
    """Detect an ideal technology by searching the generating units.

    For each input coordinate i' there must be a generator at the ideal
    point in every other input and in all outputs; symmetrically for each
    output coordinate. Equality uses a tolerance that only absorbs parse
    round-off, since witnesses must sit exactly on the typed data.
    """
    X, Y = tech.X, tech.Y
    x_min, y_max = tech.x_min, tech.y_max
    atol_x = 1e-9 * (1.0 + np.abs(x_min))
    atol_y = 1e-9 * (1.0 + np.abs(y_max))
    at_xmin = np.abs(X - x_min[:, None]) <= atol_x[:, None]   # (m, n)
    at_ymax = np.abs(Y - y_max[:, None]) <= atol_y[:, None]   # (s, n)

    input_wit: list[int | None] = []
    for i in range(tech.m):
        ok = np.all(np.delete(at_xmin, i, axis=0), axis=0) & np.all(at_ymax, axis=0)
        input_wit.append(int(np.argmax(ok)) if ok.any() else None)
    output_wit: list[int | None] = []
    for r in range(tech.s):
        ok = np.all(at_xmin, axis=0) & np.all(np.delete(at_ymax, r, axis=0), axis=0)
        output_wit.append(int(np.argmax(ok)) if ok.any() else None)

    is_ideal = all(w is not None for w in input_wit) and all(w is not None for w in output_wit)
    return IdealTechnologyReport(
        x_min.copy(), y_max.copy(),
        is_trivial=is_trivial_technology(tech, tol),
        is_ideal=is_ideal,
        method="generators",
        input_witnesses=tuple(input_wit),
        output_witnesses=tuple(output_wit),
    )


def ideal_technology_by_membership(tech: Technology, tol: float = 1e-8) -> IdealTechnologyReport:
    """Detect an ideal technology by per-coordinate membership LPs.

    Input coordinate i is witnessed iff (x_min + delta e_i, y_max) lies in
    the technology for some delta >= 0 (take the smallest); output
    coordinate r symmetrically with (x_min, y_max - delta e_r).
    """
    n, m, s = tech.n, tech.m, tech.s
    x_min, y_max = tech.x_min, tech.y_max

    def _min_delta(coord: int, on_input: bool) -> float | None:
        a_ub = np.zeros((m + s, n + 1))
        a_ub[:m, :n] = tech.X
        a_ub[m:, :n] = -tech.Y
        b_ub = np.concatenate([x_min, -y_max])
        if on_input:
            a_ub[coord, n] = -1.0
        else:
            a_ub[m + coord, n] = -1.0
        a_eq = np.zeros((1, n + 1))
        a_eq[0, :n] = 1.0
        lp = LinearProgram(
            c=np.concatenate([np.zeros(n), [1.0]]),
            a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=np.array([1.0]),
        )
        sol = solve(lp, tol)
        if sol.status is LpStatus.INFEASIBLE:
            return None
        if sol.status is not LpStatus.OPTIMAL:
            raise LpError(f"ideal-coordinate LP ended {sol.status.value}")
        return max(0.0, float(sol.objective_value))

    input_deltas = tuple(_min_delta(i, True) for i in range(m))
    output_deltas = tuple(_min_delta(r, False) for r in range(s))
    is_ideal = all(d is not None for d in input_deltas) and all(d is not None for d in output_deltas)
    return IdealTechnologyReport(
        x_min.copy(), y_max.copy(),
        is_trivial=is_trivial_technology(tech, tol),
        is_ideal=is_ideal,
        method="membership",
        input_deltas=input_deltas,
        output_deltas=output_deltas,
    )
