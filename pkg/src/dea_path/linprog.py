"""Linear-programming kernel shared by every technology-set query.

All polyhedral computations in this package reduce to small dense LPs.
This module wraps scipy's HiGHS backend behind a minimal, deterministic
interface so no other module touches solver options directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog as _scipy_linprog

__all__ = ["LpStatus", "LpError", "LinearProgram", "LpSolution", "solve", "feasible"]


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    """Numerical or structural solver failure (not an infeasible/unbounded verdict)."""


def _as_matrix(a, name: str) -> np.ndarray | None:
    if a is None:
        return None
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _as_vector(b, name: str, allow_inf: bool = False) -> np.ndarray | None:
    if b is None:
        return None
    v = np.atleast_1d(np.asarray(b, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not allow_inf and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class LinearProgram:
    """min c.z  s.t.  a_ub z <= b_ub,  a_eq z = b_eq,  lower <= z <= upper.

    ``lower``/``upper`` may be scalars or per-variable vectors; +-inf means
    unbounded on that side. All coefficient entries must be finite.
    """

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | float = 0.0
    upper: np.ndarray | float = np.inf

    def __post_init__(self):
        c = _as_vector(self.c, "c")
        a_ub = _as_matrix(self.a_ub, "a_ub")
        b_ub = _as_vector(self.b_ub, "b_ub")
        a_eq = _as_matrix(self.a_eq, "a_eq")
        b_eq = _as_vector(self.b_eq, "b_eq")
        n = c.size
        if n == 0:
            raise ValueError("objective must have at least one variable")
        if (a_ub is None) != (b_ub is None) or (a_eq is None) != (b_eq is None):
            raise ValueError("constraint matrix and rhs must be given together")
        if a_ub is not None and (a_ub.shape[1] != n or a_ub.shape[0] != b_ub.size):
            raise ValueError("inequality block dimensions inconsistent with objective")
        if a_eq is not None and (a_eq.shape[1] != n or a_eq.shape[0] != b_eq.size):
            raise ValueError("equality block dimensions inconsistent with objective")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("bounds must not be NaN")
        for name, arr in (
            ("c", c), ("a_ub", a_ub), ("b_ub", b_ub), ("a_eq", a_eq),
            ("b_eq", b_eq), ("lower", lower), ("upper", upper),
        ):
            if arr is not None:
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    z: np.ndarray | None
    objective_value: float
    # duals of the a_ub / a_eq blocks when optimal (HiGHS marginals), else None
    ineq_duals: np.ndarray | None = None
    eq_duals: np.ndarray | None = None


def solve(lp: LinearProgram, tol: float = 1e-8) -> LpSolution:
    """Solve the LP; deterministic for a fixed input.

    ``tol`` is the feasibility tolerance used for the status classification.
    Raises :class:`LpError` on numerical failure.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    feas = float(np.clip(tol, 1e-10, 1e-7))
    bounds = list(zip(lp.lower.tolist(), lp.upper.tolist()))
    bounds = [
        (None if lo == -np.inf else lo, None if hi == np.inf else hi)
        for lo, hi in bounds
    ]
    res = _scipy_linprog(
        lp.c,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        A_eq=lp.a_eq,
        b_eq=lp.b_eq,
        bounds=bounds,
        method="highs",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": feas,
            "dual_feasibility_tolerance": feas,
        },
    )
    if res.status == 0:
        z = np.asarray(res.x, dtype=float)
        ineq_duals = None if lp.a_ub is None else np.asarray(res.ineqlin.marginals, dtype=float)
        eq_duals = None if lp.a_eq is None else np.asarray(res.eqlin.marginals, dtype=float)
        return LpSolution(LpStatus.OPTIMAL, z, float(res.fun), ineq_duals, eq_duals)
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, float("nan"))
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, float("nan"))
    raise LpError(f"LP solver failed (status {res.status}): {res.message}")


def feasible(lp: LinearProgram, tol: float = 1e-8) -> bool:
    """True iff the constraint set of ``lp`` is nonempty (objective ignored)."""
    probe = LinearProgram(
        c=np.zeros(lp.n_vars),
        a_ub=lp.a_ub,
        b_ub=lp.b_ub,
        a_eq=lp.a_eq,
        b_eq=lp.b_eq,
        lower=lp.lower,
        upper=lp.upper,
    )
    sol = solve(probe, tol)
    return sol.status is not LpStatus.INFEASIBLE
