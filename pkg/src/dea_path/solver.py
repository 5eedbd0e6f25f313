"""Path-based efficiency solver.

For one unit the model asks for the smallest theta keeping the improvement
path inside the technology. Feasibility of the path point is monotone
nondecreasing in theta (points earlier on the path dominate later ones), so
the score is found by bisection over an LP membership test; models whose
path functions are affine admit a single-LP route used as a cross-check.
A slack-maximising second phase classifies the projection as strongly or
weakly efficient.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry
from .linprog import LinearProgram, LpError, LpStatus, solve
from .model import (
    Direction,
    DirectionScheme,
    EvaluationResult,
    PathSpec,
    ProjectionDiagnostics,
    Technology,
    make_direction,
)

__all__ = [
    "SolverError",
    "DomainExitError",
    "SolverOptions",
    "PathProblem",
    "SecondPhaseResult",
    "path_point",
    "solve_efficiency",
    "solve_efficiency_lp",
    "second_phase",
    "evaluate_unit",
    "UnitOutcome",
    "evaluate_technology",
]

UNBOUNDED_FLOOR = -1e6


class SolverError(RuntimeError):
    """Evaluation failed for one unit."""


class DomainExitError(SolverError):
    """The path never left the technology before the domain floor."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances for one evaluation.

    ``slack_zero_threshold`` defaults to 1e-6 times the data spread of the
    technology; ``lower_search_floor`` defaults to just above the path
    domain's lower end, or -1e6 for unbounded domains.
    """

    theta_tol: float = 1e-9
    feas_tol: float = 1e-8
    slack_zero_threshold: float | None = None
    lower_search_floor: float | None = None

    def __post_init__(self):
        if self.theta_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.slack_zero_threshold is not None and self.slack_zero_threshold <= 0:
            raise ValueError("slack_zero_threshold must be positive")

    def slack_threshold(self, tech: Technology) -> float:
        if self.slack_zero_threshold is not None:
            return self.slack_zero_threshold
        return tech.default_slack_threshold()

    def floor(self, spec: PathSpec) -> float:
        if self.lower_search_floor is not None:
            return self.lower_search_floor
        if np.isfinite(spec.domain_lower):
            return spec.domain_lower + 1e-6
        return UNBOUNDED_FLOOR


@dataclass(frozen=True)
class PathProblem:
    """One unit to evaluate against a technology under a path model."""

    tech: Technology
    spec: PathSpec
    direction: Direction
    x_o: np.ndarray
    y_o: np.ndarray
    unit_id: str = ""
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        x_o = np.atleast_1d(np.asarray(self.x_o, dtype=float))
        y_o = np.atleast_1d(np.asarray(self.y_o, dtype=float))
        if x_o.size != self.tech.m or y_o.size != self.tech.s:
            raise ValueError("unit dimensions do not match the technology")
        if self.direction.gx.size != self.tech.m or self.direction.gy.size != self.tech.s:
            raise ValueError("direction dimensions do not match the technology")
        object.__setattr__(self, "x_o", x_o)
        object.__setattr__(self, "y_o", y_o)


@dataclass(frozen=True)
class SecondPhaseResult:
    total_slack: float
    slack_x: np.ndarray
    slack_y: np.ndarray
    lam: np.ndarray


def path_point(
    spec: PathSpec, direction: Direction, x_o, y_o, theta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Point of the improvement path at parameter theta.

    x = x_o + (psi_x(theta) - 1) gx,  y = y_o + (psi_y(theta) - 1) gy;
    theta = 1 returns the unit itself.
    """
    if not spec.in_domain(theta):
        raise ValueError(
            f"theta={theta!r} outside path domain ({spec.domain_lower:g}, inf)"
        )
    x_o = np.atleast_1d(np.asarray(x_o, dtype=float))
    y_o = np.atleast_1d(np.asarray(y_o, dtype=float))
    x = x_o + (spec.psi_x(theta) - 1.0) * direction.gx
    y = y_o + (spec.psi_y(theta) - 1.0) * direction.gy
    return x, y


def _member(problem: PathProblem, theta: float) -> tuple[bool, np.ndarray]:
    x, y = path_point(problem.spec, problem.direction, problem.x_o, problem.y_o, theta)
    gap, lam = geometry.membership(problem.tech, x, y, problem.options.feas_tol)
    return gap <= problem.options.feas_tol, lam


def _check_unit_inside(problem: PathProblem) -> np.ndarray:
    gap, lam = geometry.membership(
        problem.tech, problem.x_o, problem.y_o, problem.options.feas_tol
    )
    if gap > problem.options.feas_tol:
        raise SolverError(
            f"unit {problem.unit_id or '<anonymous>'} lies outside the technology "
            f"(membership gap {gap:.3e})"
        )
    return lam


def _degenerate_result(problem: PathProblem, lam: np.ndarray) -> EvaluationResult:
    return EvaluationResult(
        unit_id=problem.unit_id,
        theta_star=1.0,
        lambda_star=lam,
        projection_x=problem.x_o.copy(),
        projection_y=problem.y_o.copy(),
        diagnostics=ProjectionDiagnostics(degenerate=True),
    )


def _clamp_to_anchor(problem: PathProblem, theta: float, lam: np.ndarray) -> tuple[float, np.ndarray]:
    """Scores cannot fall below the parameter where the path meets the ideal
    point (every earlier path point beats the ideal point somewhere, hence
    lies outside); the feasibility slack of the membership LP may let the
    bisection undershoot by a few 1e-8, which this corrects."""
    anchor = problem.direction.ideal_theta
    if anchor is None or theta >= anchor:
        return theta, lam
    x, y = path_point(problem.spec, problem.direction, problem.x_o, problem.y_o, anchor)
    _, lam_anchor = geometry.membership(problem.tech, x, y, problem.options.feas_tol)
    return anchor, lam_anchor


def _alphas(problem: PathProblem, theta_star: float) -> tuple[float | None, float | None]:
    anchor = problem.direction.ideal_theta
    if anchor is None or theta_star >= 1.0:
        return None, None
    spec = problem.spec
    den_x = 1.0 - spec.psi_x(anchor)
    den_y = spec.psi_y(anchor) - 1.0
    ax = (1.0 - spec.psi_x(theta_star)) / den_x if den_x > 0 else None
    ay = (spec.psi_y(theta_star) - 1.0) / den_y if den_y > 0 else None
    return ax, ay


def solve_efficiency(problem: PathProblem) -> EvaluationResult:
    """Efficiency score by bracketing and bisection on the path parameter.

    Starting from theta = 1 (the unit itself, always feasible), the lower
    bracket is found by a doubling step search towards the domain floor; a
    direction that passes through the ideal point supplies a natural first
    probe. Failure to leave the technology before the floor is reported as
    :class:`DomainExitError`, never clipped silently.
    """
    lam_unit = _check_unit_inside(problem)
    if problem.direction.degenerate:
        # unit coincides with the ideal point: score 1 by definition
        return _degenerate_result(problem, lam_unit)

    opts = problem.options
    floor = opts.floor(problem.spec)
    if floor >= 1.0:
        raise SolverError("search floor must lie below theta = 1")

    hi, lam_hi = 1.0, lam_unit
    lo = None

    # quick probe just below 1 resolves strongly efficient units cheaply
    first = 1.0 - max(1e-6, 10.0 * opts.theta_tol)
    if first > floor:
        ok, lam = _member(problem, first)
        if ok:
            hi, lam_hi = first, lam
        else:
            lo = first

    if lo is None:
        anchor = problem.direction.ideal_theta
        if anchor is not None and floor < anchor < hi:
            ok, lam = _member(problem, anchor)
            if ok:
                hi, lam_hi = anchor, lam
            else:
                lo = anchor

    if lo is None:
        step = 0.25
        t = hi
        while True:
            t = max(floor, t - step)
            ok, lam = _member(problem, t)
            if ok:
                hi, lam_hi = t, lam
                if t <= floor:
                    raise DomainExitError(
                        f"path of unit {problem.unit_id or '<anonymous>'} stays inside the "
                        f"technology down to the domain floor {floor:g}"
                    )
                step *= 2.0
            else:
                lo = t
                break

    bracket_low = lo
    while hi - lo > opts.theta_tol:
        mid = 0.5 * (hi + lo)
        ok, lam = _member(problem, mid)
        if ok:
            hi, lam_hi = mid, lam
        else:
            lo = mid

    theta_star, lam_hi = _clamp_to_anchor(problem, hi, lam_hi)
    px, py = path_point(problem.spec, problem.direction, problem.x_o, problem.y_o, theta_star)
    ax, ay = _alphas(problem, theta_star)
    return EvaluationResult(
        unit_id=problem.unit_id,
        theta_star=theta_star,
        lambda_star=lam_hi,
        projection_x=px,
        projection_y=py,
        diagnostics=ProjectionDiagnostics(alpha_x=ax, alpha_y=ay, bracket_low=bracket_low),
    )


def solve_efficiency_lp(problem: PathProblem) -> EvaluationResult:
    """Single-LP efficiency score for models with affine path functions.

    Same contract as :func:`solve_efficiency`; exists as an independent
    cross-check route. Raises ValueError when a path function is not affine.
    """
    spec = problem.spec
    if not spec.is_affine:
        raise ValueError(f"model {spec.name!r} has non-affine path functions")
    lam_unit = _check_unit_inside(problem)
    if problem.direction.degenerate:
        return _degenerate_result(problem, lam_unit)

    ax_a, ax_b = spec.affine_x
    ay_a, ay_b = spec.affine_y
    tech = problem.tech
    n, m, s = tech.n, tech.m, tech.s
    gx, gy = problem.direction.gx, problem.direction.gy

    # variables z = (theta, lambda); X lam - b_x theta gx <= x_o + (a_x - 1) gx
    a_ub = np.zeros((m + s, 1 + n))
    a_ub[:m, 0] = -ax_b * gx
    a_ub[:m, 1:] = tech.X
    a_ub[m:, 0] = ay_b * gy
    a_ub[m:, 1:] = -tech.Y
    b_ub = np.concatenate([
        problem.x_o + (ax_a - 1.0) * gx,
        -(problem.y_o + (ay_a - 1.0) * gy),
    ])
    a_eq = np.zeros((1, 1 + n))
    a_eq[0, 1:] = 1.0
    floor = problem.options.floor(spec)
    lp = LinearProgram(
        c=np.concatenate([[1.0], np.zeros(n)]),
        a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=np.array([1.0]),
        lower=np.concatenate([[floor], np.zeros(n)]),
    )
    sol = solve(lp, problem.options.feas_tol)
    if sol.status is not LpStatus.OPTIMAL:
        raise SolverError(f"direct LP ended {sol.status.value}")
    theta_star = float(sol.z[0])
    if theta_star <= floor + 1e-9:
        raise DomainExitError(
            f"path of unit {problem.unit_id or '<anonymous>'} stays inside the technology "
            f"down to the domain floor {floor:g}"
        )
    theta_star = min(theta_star, 1.0)
    theta_star, lam = _clamp_to_anchor(problem, theta_star, sol.z[1:].copy())
    px, py = path_point(spec, problem.direction, problem.x_o, problem.y_o, theta_star)
    ax, ay = _alphas(problem, theta_star)
    return EvaluationResult(
        unit_id=problem.unit_id,
        theta_star=theta_star,
        lambda_star=lam,
        projection_x=px,
        projection_y=py,
        diagnostics=ProjectionDiagnostics(alpha_x=ax, alpha_y=ay),
    )


def second_phase(problem: PathProblem, result: EvaluationResult) -> SecondPhaseResult:
    """Maximise the residual slacks at the projection.

    The optimum is zero exactly when the projection is strongly efficient;
    any positive slack exhibits a dominating technology point.
    """
    slack = geometry.max_additive_slack(
        problem.tech, result.projection_x, result.projection_y, problem.options.feas_tol
    )
    return SecondPhaseResult(slack.total, slack.slack_x, slack.slack_y, slack.lam)


def attach_second_phase(problem: PathProblem, result: EvaluationResult) -> EvaluationResult:
    phase = second_phase(problem, result)
    threshold = problem.options.slack_threshold(problem.tech)
    bind_x = tuple(
        int(i) for i in range(problem.tech.m)
        if phase.slack_x[i] <= max(problem.options.feas_tol, 1e-9 * problem.tech.row_scale_x[i])
    )
    bind_y = tuple(
        int(r) for r in range(problem.tech.s)
        if phase.slack_y[r] <= max(problem.options.feas_tol, 1e-9 * problem.tech.row_scale_y[r])
    )
    diag = replace(result.diagnostics, binding_inputs=bind_x, binding_outputs=bind_y)
    return replace(
        result,
        strongly_efficient_projection=bool(phase.total_slack <= threshold),
        slack_x=phase.slack_x,
        slack_y=phase.slack_y,
        total_slack=phase.total_slack,
        diagnostics=diag,
    )


def evaluate_unit(problem: PathProblem) -> EvaluationResult:
    """Score, projection and second-phase classification for one unit."""
    return attach_second_phase(problem, solve_efficiency(problem))


@dataclass(frozen=True)
class UnitOutcome:
    unit_id: str
    result: EvaluationResult | None
    error: str | None = None


def evaluate_technology(
    tech: Technology,
    spec: PathSpec,
    scheme: DirectionScheme,
    options: SolverOptions = SolverOptions(),
    jobs: int = 1,
) -> list[UnitOutcome]:
    """Evaluate every generating unit; failures are recorded, not raised.

    Units are independent, so they may run concurrently; the output order is
    the dataset order regardless of completion order.
    """

    def _one(args) -> UnitOutcome:
        uid, x_o, y_o = args
        try:
            direction = make_direction(scheme, spec, tech, (x_o, y_o), unit_id=uid)
            problem = PathProblem(tech, spec, direction, x_o, y_o, unit_id=uid, options=options)
            return UnitOutcome(uid, evaluate_unit(problem))
        except (SolverError, LpError, ValueError) as exc:
            return UnitOutcome(uid, None, error=str(exc))

    units = list(tech.units())
    if jobs <= 1:
        return [_one(u) for u in units]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one, units))
