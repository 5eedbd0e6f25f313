"""Core domain types: datasets, VRS technologies, path functions, directions.

Everything here is a plain immutable container with validation; all LP-backed
queries live in :mod:`dea_path.geometry` and :mod:`dea_path.solver`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Iterator, Mapping

import numpy as np

__all__ = [
    "DatasetError",
    "Dataset",
    "Technology",
    "PathSpec",
    "ddf",
    "hdf",
    "bcc_input",
    "bcc_output",
    "gdf",
    "custom_path",
    "catalog_path",
    "PathValidation",
    "validate_pathspec",
    "Direction",
    "DirectionKind",
    "DirectionScheme",
    "make_direction",
    "ProjectionDiagnostics",
    "EvaluationResult",
    "load_dataset",
    "load_directions_file",
    "PADDING_NAME",
]

PADDING_NAME = "unity"


class DatasetError(ValueError):
    """Malformed dataset or directions file."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


def _coincides(value: float, target: float) -> bool:
    # absolute tolerance scaled by the target magnitude; absorbs parse round-off only
    return abs(value - target) <= 1e-9 * (1.0 + abs(target))


# ---------------------------------------------------------------------------
# Dataset and technology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Observed units: input matrix X (m x n) and output matrix Y (s x n).

    Columns are units; rows are input/output factors. Negative data are
    allowed. A dataset with no inputs (or no outputs) is padded with a
    constant row of ones so that every technology has at least one input
    and one output; the padding is recorded in ``padded_input`` /
    ``padded_output`` so reports stay interpretable.
    """

    unit_ids: tuple[str, ...]
    X: np.ndarray
    Y: np.ndarray
    input_names: tuple[str, ...] = ()
    output_names: tuple[str, ...] = ()
    undesirable_outputs: tuple[str, ...] = ()
    padded_input: bool = False
    padded_output: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise DatasetError("X and Y must be matrices (rows=factors, columns=units)")
        n = len(self.unit_ids)
        if n < 1:
            raise DatasetError("dataset needs at least one unit")
        if X.shape[1] != n or Y.shape[1] != n:
            raise DatasetError(
                f"matrix widths ({X.shape[1]}, {Y.shape[1]}) must equal number of units ({n})"
            )
        if X.shape[0] + Y.shape[0] < 1:
            raise DatasetError("dataset needs at least one input or output row")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DatasetError("all data entries must be finite")
        if len(set(self.unit_ids)) != n:
            raise DatasetError("duplicate id")

        in_names = tuple(self.input_names) or tuple(f"x{i + 1}" for i in range(X.shape[0]))
        out_names = tuple(self.output_names) or tuple(f"y{r + 1}" for r in range(Y.shape[0]))
        if len(in_names) != X.shape[0] or len(out_names) != Y.shape[0]:
            raise DatasetError("factor name counts must match matrix rows")

        padded_in, padded_out = False, False
        if X.shape[0] == 0:
            X = np.ones((1, n))
            in_names = (PADDING_NAME,)
            padded_in = True
        if Y.shape[0] == 0:
            Y = np.ones((1, n))
            out_names = (PADDING_NAME,)
            padded_out = True

        object.__setattr__(self, "unit_ids", tuple(str(u) for u in self.unit_ids))
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "Y", _readonly(Y))
        object.__setattr__(self, "input_names", in_names)
        object.__setattr__(self, "output_names", out_names)
        object.__setattr__(self, "undesirable_outputs", tuple(self.undesirable_outputs))
        object.__setattr__(self, "padded_input", padded_in)
        object.__setattr__(self, "padded_output", padded_out)

    @classmethod
    def from_arrays(cls, X, Y, unit_ids=None, input_names=(), output_names=()) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        n = max(X.shape[1] if X.size else 0, Y.shape[1] if Y.size else 0)
        if unit_ids is None:
            unit_ids = tuple(f"dmu{j + 1}" for j in range(n))
        return cls(tuple(unit_ids), X, Y, tuple(input_names), tuple(output_names))

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def s(self) -> int:
        return self.Y.shape[0]

    def unit(self, unit_id: str) -> tuple[np.ndarray, np.ndarray]:
        j = self.unit_ids.index(unit_id)
        return self.X[:, j].copy(), self.Y[:, j].copy()


@dataclass(frozen=True)
class Technology:
    """VRS technology generated by a dataset.

    Membership of a point (x, y) means: there is an intensity vector
    lambda >= 0 with sum 1 such that X lambda <= x and Y lambda >= y.
    Membership itself is an LP question, answered in
    :func:`dea_path.geometry.contains`.
    """

    dataset: Dataset

    @property
    def X(self) -> np.ndarray:
        return self.dataset.X

    @property
    def Y(self) -> np.ndarray:
        return self.dataset.Y

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def m(self) -> int:
        return self.dataset.m

    @property
    def s(self) -> int:
        return self.dataset.s

    @cached_property
    def x_min(self) -> np.ndarray:
        return _readonly(self.X.min(axis=1))

    @cached_property
    def x_max(self) -> np.ndarray:
        return _readonly(self.X.max(axis=1))

    @cached_property
    def y_min(self) -> np.ndarray:
        return _readonly(self.Y.min(axis=1))

    @cached_property
    def y_max(self) -> np.ndarray:
        return _readonly(self.Y.max(axis=1))

    @property
    def ideal_point(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise best achievable point (x_min, y_max); usually outside."""
        return self.x_min, self.y_max

    @cached_property
    def data_range(self) -> float:
        """Largest per-row spread, used to scale slack thresholds."""
        spans = [float(self.x_max[i] - self.x_min[i]) for i in range(self.m)]
        spans += [float(self.y_max[r] - self.y_min[r]) for r in range(self.s)]
        return max(spans) if spans else 0.0

    @cached_property
    def row_scale_x(self) -> np.ndarray:
        return _readonly(np.maximum(1.0, np.abs(self.X).max(axis=1)))

    @cached_property
    def row_scale_y(self) -> np.ndarray:
        return _readonly(np.maximum(1.0, np.abs(self.Y).max(axis=1)))

    def default_slack_threshold(self) -> float:
        # relative: slack magnitudes grow with the data spread
        return 1e-6 * max(1.0, self.data_range)

    def units(self) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        for j, uid in enumerate(self.dataset.unit_ids):
            yield uid, self.X[:, j].copy(), self.Y[:, j].copy()

    def is_ideal_unit(self, x: np.ndarray, y: np.ndarray) -> bool:
        return all(_coincides(x[i], self.x_min[i]) for i in range(self.m)) and all(
            _coincides(y[r], self.y_max[r]) for r in range(self.s)
        )


# ---------------------------------------------------------------------------
# Path functions
# ---------------------------------------------------------------------------


def _detect_affine(f: Callable[[float], float], lo: float) -> tuple[float, float] | None:
    """Return (a, b) with f(t) = a + b t if f is affine on its domain, else None."""
    base = max(lo + 1e-3, 1e-3) if np.isfinite(lo) else -3.0
    t0, t1 = base + 1.0, base + 2.0
    try:
        b = f(t1) - f(t0)
        a = f(t0) - b * t0
        for t in np.linspace(base + 0.1, base + 6.0, 9):
            if abs(f(float(t)) - (a + b * t)) > 1e-10 * (1.0 + abs(f(float(t)))):
                return None
    except (ArithmeticError, ValueError):
        return None
    return float(a), float(b)


@dataclass(frozen=True)
class PathSpec:
    """A pair of scalar path functions identifying one path-based model.

    ``psi_x`` rescales the input side and ``psi_y`` the output side of the
    improvement path; both are normalised to 1 at theta = 1. Domains are
    open intervals (dom_lower, +inf) with dom_lower in {-inf, 0}.
    ``affine_x``/``affine_y`` hold (a, b) coefficients when the function is
    affine, enabling the single-LP solution route.
    """

    name: str
    psi_x: Callable[[float], float]
    psi_y: Callable[[float], float]
    dom_lower_x: float = -np.inf
    dom_lower_y: float = -np.inf
    gdf_p: float | None = None
    affine_x: tuple[float, float] | None = None
    affine_y: tuple[float, float] | None = None

    def __post_init__(self):
        for v in (self.dom_lower_x, self.dom_lower_y):
            if not (v == -np.inf or v == 0.0):
                raise ValueError("domain lower bound must be -inf or 0")

    @property
    def domain_lower(self) -> float:
        return max(self.dom_lower_x, self.dom_lower_y)

    def in_domain(self, theta: float) -> bool:
        return theta > self.domain_lower

    @property
    def is_affine(self) -> bool:
        return self.affine_x is not None and self.affine_y is not None


def ddf() -> PathSpec:
    """Directional distance function: psi_x = theta, psi_y = 2 - theta, domain R."""
    return PathSpec("ddf", lambda t: t, lambda t: 2.0 - t, affine_x=(0.0, 1.0), affine_y=(2.0, -1.0))


def hdf() -> PathSpec:
    """Hyperbolic distance function: psi_x = theta, psi_y = 1/theta, domain (0, inf)."""
    return PathSpec("hdf", lambda t: t, lambda t: 1.0 / t, 0.0, 0.0, affine_x=(0.0, 1.0))


def bcc_input() -> PathSpec:
    """Radial input model; the output side is inert (its direction is zero)."""
    return PathSpec("bcc-i", lambda t: t, lambda t: 2.0 - t, affine_x=(0.0, 1.0), affine_y=(2.0, -1.0))


def bcc_output() -> PathSpec:
    """Radial output model; the input side is inert (its direction is zero)."""
    return PathSpec("bcc-o", lambda t: t, lambda t: 1.0 / t, 0.0, 0.0, affine_x=(0.0, 1.0))


def gdf(p: float) -> PathSpec:
    """Generalised distance function: psi_x = theta^(1-p), psi_y = theta^(-p).

    p in [0, 1]; p = 0 degenerates to a pure-input model and p = 1 to a
    pure-output model (the constant side contributes no movement).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("gdf exponent p must lie in [0, 1]")
    affine_x = (0.0, 1.0) if p == 0.0 else ((1.0, 0.0) if p == 1.0 else None)
    affine_y = (1.0, 0.0) if p == 0.0 else None
    return PathSpec(
        f"gdf({p:g})",
        lambda t: t ** (1.0 - p),
        lambda t: t ** (-p),
        0.0,
        0.0,
        gdf_p=float(p),
        affine_x=affine_x,
        affine_y=affine_y,
    )


def custom_path(
    psi_x: Callable[[float], float],
    psi_y: Callable[[float], float],
    dom_lower_x: float = -np.inf,
    dom_lower_y: float = -np.inf,
    name: str = "custom",
) -> PathSpec:
    lo = max(dom_lower_x, dom_lower_y)
    return PathSpec(
        name, psi_x, psi_y, dom_lower_x, dom_lower_y,
        affine_x=_detect_affine(psi_x, lo),
        affine_y=_detect_affine(psi_y, lo),
    )


def catalog_path(name: str, gdf_p: float | None = None) -> PathSpec:
    name = name.lower()
    if name == "ddf":
        return ddf()
    if name == "hdf":
        return hdf()
    if name == "bcc-i":
        return bcc_input()
    if name == "bcc-o":
        return bcc_output()
    if name == "gdf":
        if gdf_p is None:
            raise ValueError("gdf requires an exponent p")
        return gdf(gdf_p)
    raise ValueError(f"unknown model {name!r} (expected bcc-i, bcc-o, ddf, hdf, gdf)")


@dataclass(frozen=True)
class PathValidation:
    ok: bool
    violations: tuple[str, ...]


def validate_pathspec(spec: PathSpec, grid: int = 101) -> PathValidation:
    """Check path-function admissibility on a sampled grid.

    Verifies normalisation at theta = 1 and, on ``grid`` points of the
    common domain clipped to [max(dom_lower + 1e-6, 1e-6), 10], that psi_x
    is nondecreasing and concave while psi_y is nonincreasing and convex.
    Smoothness cannot be verified for arbitrary user functions, so the
    check is purely numerical; the catalog specs always pass.
    """
    if grid < 3:
        raise ValueError("grid must be at least 3")
    violations: list[str] = []

    def _probe(f, label):
        try:
            v = f(1.0)
        except (ArithmeticError, ValueError) as exc:
            violations.append(f"{label} not evaluable at theta=1: {exc}")
            return None
        if abs(v - 1.0) > 1e-9:
            violations.append(f"{label}(1) != 1 (got {v!r})")
        return v

    _probe(spec.psi_x, "psi_x")
    _probe(spec.psi_y, "psi_y")

    lo = max(spec.domain_lower + 1e-6, 1e-6)
    thetas = np.linspace(lo, 10.0, grid)
    try:
        fx = np.array([spec.psi_x(float(t)) for t in thetas])
        fy = np.array([spec.psi_y(float(t)) for t in thetas])
    except (ArithmeticError, ValueError) as exc:
        violations.append(f"path function not evaluable on [{lo:g}, 10]: {exc}")
        return PathValidation(False, tuple(violations))

    scale_x = max(1.0, float(np.abs(fx).max()))
    scale_y = max(1.0, float(np.abs(fy).max()))
    mono_tol_x, mono_tol_y = 1e-9 * scale_x, 1e-9 * scale_y
    curv_tol_x, curv_tol_y = 1e-8 * scale_x, 1e-8 * scale_y

    dx, dy = np.diff(fx), np.diff(fy)
    if np.any(dx < -mono_tol_x):
        k = int(np.argmax(dx < -mono_tol_x))
        violations.append(f"psi_x not increasing at theta={thetas[k]:.6g}")
    if np.any(dy > mono_tol_y):
        k = int(np.argmax(dy > mono_tol_y))
        violations.append(f"psi_y not decreasing at theta={thetas[k]:.6g}")
    ddx, ddy = np.diff(fx, 2), np.diff(fy, 2)
    if np.any(ddx > curv_tol_x):
        k = int(np.argmax(ddx > curv_tol_x))
        violations.append(f"psi_x not concave at theta={thetas[k + 1]:.6g}")
    if np.any(ddy < -curv_tol_y):
        k = int(np.argmax(ddy < -curv_tol_y))
        violations.append(f"psi_y not convex at theta={thetas[k + 1]:.6g}")

    return PathValidation(not violations, tuple(violations))


# ---------------------------------------------------------------------------
# Directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Direction:
    """Directional vector (gx, gy) >= 0, not identically zero.

    ``degenerate`` marks the one allowed zero direction: the evaluated unit
    coincides with the ideal point (its score is 1 by definition).
    ``ideal_theta`` is set when the induced path passes through the ideal
    point, at that parameter value; the solver uses it as a bracket anchor.
    """

    gx: np.ndarray
    gy: np.ndarray
    degenerate: bool = False
    ideal_theta: float | None = None

    def __post_init__(self):
        gx = np.atleast_1d(np.asarray(self.gx, dtype=float))
        gy = np.atleast_1d(np.asarray(self.gy, dtype=float))
        tol_x = 1e-12 * (1.0 + np.abs(gx).max(initial=0.0))
        tol_y = 1e-12 * (1.0 + np.abs(gy).max(initial=0.0))
        if np.any(gx < -tol_x) or np.any(gy < -tol_y):
            raise ValueError("direction components must be nonnegative")
        gx = np.maximum(gx, 0.0)
        gy = np.maximum(gy, 0.0)
        if not self.degenerate and gx.max(initial=0.0) == 0.0 and gy.max(initial=0.0) == 0.0:
            raise ValueError("direction is identically zero for a non-degenerate unit")
        object.__setattr__(self, "gx", _readonly(gx))
        object.__setattr__(self, "gy", _readonly(gy))


class DirectionKind(str, Enum):
    PROPORTIONAL = "g1"   # |x_o|, |y_o|
    IDEAL_RANGE = "g2"    # scaled ranges to the ideal point, common theta_min
    GLOBAL_RANGE = "g3"   # x_max - x_min, y_max - y_min
    AVERAGE = "g4"        # |column means|
    CONSTANT = "constant"
    PER_UNIT = "per-unit"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DirectionScheme:
    """Rule assigning each unit its directional vector.

    ``theta_min`` applies to the ideal-range rule only; ``constant`` holds a
    single (gx, gy) pair; ``per_unit`` maps unit ids to pairs; ``fn`` is a
    free-form rule (x, y) -> (gx, gy) used for custom models and audits.
    """

    kind: DirectionKind
    theta_min: float | None = None
    constant: tuple[np.ndarray, np.ndarray] | None = None
    per_unit: Mapping[str, tuple[np.ndarray, np.ndarray]] | None = None
    fn: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind is DirectionKind.IDEAL_RANGE and self.theta_min is None:
            raise ValueError("ideal-range directions need theta_min")
        if self.kind is DirectionKind.CONSTANT and self.constant is None:
            raise ValueError("constant scheme needs a (gx, gy) pair")
        if self.kind is DirectionKind.PER_UNIT and self.per_unit is None:
            raise ValueError("per-unit scheme needs an id -> (gx, gy) mapping")
        if self.kind is DirectionKind.CUSTOM and self.fn is None:
            raise ValueError("custom scheme needs a callable")
        if not self.label:
            lbl = self.kind.value
            if self.kind is DirectionKind.IDEAL_RANGE:
                lbl += f"(theta_min={self.theta_min:g})"
            object.__setattr__(self, "label", lbl)

    @property
    def pointwise(self) -> bool:
        """True when the rule can be evaluated at arbitrary points of the technology."""
        return self.kind is not DirectionKind.PER_UNIT


def proportional_directions() -> DirectionScheme:
    return DirectionScheme(DirectionKind.PROPORTIONAL)


def ideal_range_directions(theta_min: float) -> DirectionScheme:
    return DirectionScheme(DirectionKind.IDEAL_RANGE, theta_min=float(theta_min))


def global_range_directions() -> DirectionScheme:
    return DirectionScheme(DirectionKind.GLOBAL_RANGE)


def average_directions() -> DirectionScheme:
    return DirectionScheme(DirectionKind.AVERAGE)


def make_direction(
    scheme: DirectionScheme,
    spec: PathSpec,
    tech: Technology,
    unit: tuple[np.ndarray, np.ndarray],
    unit_id: str | None = None,
) -> Direction:
    """Build the directional vector for one unit under a scheme.

    The unit is assumed to belong to the technology (checked by the solver,
    not here); for units in the technology all rules below yield
    componentwise nonnegative vectors.
    """
    x_o = np.atleast_1d(np.asarray(unit[0], dtype=float))
    y_o = np.atleast_1d(np.asarray(unit[1], dtype=float))
    if x_o.size != tech.m or y_o.size != tech.s:
        raise ValueError("unit dimensions do not match the technology")

    kind = scheme.kind
    if kind is DirectionKind.PROPORTIONAL:
        return Direction(np.abs(x_o), np.abs(y_o))
    if kind is DirectionKind.GLOBAL_RANGE:
        return Direction(tech.x_max - tech.x_min, tech.y_max - tech.y_min)
    if kind is DirectionKind.AVERAGE:
        return Direction(np.abs(tech.X.mean(axis=1)), np.abs(tech.Y.mean(axis=1)))
    if kind is DirectionKind.CONSTANT:
        gx, gy = scheme.constant
        return Direction(np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))
    if kind is DirectionKind.PER_UNIT:
        if unit_id is None or unit_id not in scheme.per_unit:
            raise DatasetError(f"no direction supplied for unit {unit_id!r}")
        gx, gy = scheme.per_unit[unit_id]
        return Direction(np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))
    if kind is DirectionKind.CUSTOM:
        gx, gy = scheme.fn(x_o, y_o)
        return Direction(np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))

    # ideal-range rule: path passes through the ideal point at theta_min
    theta_min = scheme.theta_min
    if not (0.0 <= theta_min < 1.0) or not spec.in_domain(theta_min):
        raise ValueError(
            f"theta_min={theta_min!r} must lie in [0, 1) and inside the path domain "
            f"({spec.domain_lower:g}, inf)"
        )
    if tech.is_ideal_unit(x_o, y_o):
        return Direction(np.zeros(tech.m), np.zeros(tech.s), degenerate=True)
    den_x = 1.0 - spec.psi_x(theta_min)
    den_y = spec.psi_y(theta_min) - 1.0
    tiny = 1e-12
    gx = (x_o - tech.x_min) / den_x if den_x > tiny else np.zeros(tech.m)
    gy = (tech.y_max - y_o) / den_y if den_y > tiny else np.zeros(tech.s)
    direction = Direction(gx, gy)

    # anchor only when the path really meets the ideal point at theta_min
    px = x_o + (spec.psi_x(theta_min) - 1.0) * direction.gx
    py = y_o + (spec.psi_y(theta_min) - 1.0) * direction.gy
    hits = np.allclose(px, tech.x_min, rtol=0.0, atol=1e-9 * (1.0 + np.abs(tech.x_min).max(initial=0.0))) and np.allclose(
        py, tech.y_max, rtol=0.0, atol=1e-9 * (1.0 + np.abs(tech.y_max).max(initial=0.0))
    )
    if hits:
        return Direction(direction.gx, direction.gy, ideal_theta=float(theta_min))
    return direction


# ---------------------------------------------------------------------------
# Evaluation records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionDiagnostics:
    """Extras attached to an evaluation.

    ``alpha_x``/``alpha_y`` are the convex-combination weights placing the
    projection on the segments unit -> ideal point (ideal-range directions
    with score < 1 only). Binding index sets mark rows left without slack by
    the slack-maximising second phase. ``bracket_low`` is the infeasible end
    of the initial score bracket.
    """

    alpha_x: float | None = None
    alpha_y: float | None = None
    binding_inputs: tuple[int, ...] = ()
    binding_outputs: tuple[int, ...] = ()
    degenerate: bool = False
    bracket_low: float | None = None


@dataclass(frozen=True)
class EvaluationResult:
    """Score, intensity vector, projection and second-phase classification."""

    unit_id: str
    theta_star: float
    lambda_star: np.ndarray
    projection_x: np.ndarray
    projection_y: np.ndarray
    strongly_efficient_projection: bool | None = None
    slack_x: np.ndarray | None = None
    slack_y: np.ndarray | None = None
    total_slack: float | None = None
    diagnostics: ProjectionDiagnostics = field(default_factory=ProjectionDiagnostics)

    @property
    def projection(self) -> tuple[np.ndarray, np.ndarray]:
        return self.projection_x, self.projection_y


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def _parse_header(header: list[str]) -> tuple[list[int], list[int], list[str], list[str], list[str]]:
    if not header or header[0].strip().lower() != "id":
        raise DatasetError("malformed header: first column must be 'id'")
    in_cols: list[int] = []
    out_cols: list[int] = []
    in_names: list[str] = []
    out_names: list[str] = []
    undesirable: list[str] = []
    for k, raw in enumerate(header[1:], start=1):
        col = raw.strip()
        if col.startswith("i:"):
            in_cols.append(k)
            in_names.append(col[2:])
        elif col.startswith("u:"):
            # undesirable outputs are treated as inputs, nothing else is done
            in_cols.append(k)
            in_names.append(col[2:])
            undesirable.append(col[2:])
        elif col.startswith("o:"):
            out_cols.append(k)
            out_names.append(col[2:])
        else:
            raise DatasetError(
                f"malformed header: column {col!r} must start with 'i:', 'o:' or 'u:'"
            )
    return in_cols, out_cols, in_names, out_names, undesirable


def load_dataset(path, fmt: str = "csv") -> Dataset:
    """Load a dataset from CSV (header: id, i:<name>..., o:<name>..., u:<name>...).

    Undesirable outputs (``u:``) are ingested as inputs. Datasets with no
    input or no output columns are padded with a constant row of ones.
    """
    if fmt != "csv":
        raise ValueError(f"unsupported format {fmt!r}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError("empty file")
    in_cols, out_cols, in_names, out_names, undesirable = _parse_header(rows[0])
    if len(rows) == 1:
        raise DatasetError("empty file: no data rows")

    ids: list[str] = []
    x_rows: list[list[float]] = []
    y_rows: list[list[float]] = []
    width = len(rows[0])
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DatasetError(f"line {lineno}: expected {width} cells, got {len(row)}")
        uid = row[0].strip()
        if uid in ids:
            raise DatasetError(f"duplicate id {uid!r}")
        ids.append(uid)

        def _cell(k: int) -> float:
            try:
                return float(row[k])
            except ValueError as exc:
                raise DatasetError(
                    f"non-numeric cell {row[k]!r} at line {lineno}, column {rows[0][k]!r}"
                ) from exc

        x_rows.append([_cell(k) for k in in_cols])
        y_rows.append([_cell(k) for k in out_cols])

    n = len(ids)
    X = np.array(x_rows, dtype=float).T if in_cols else np.empty((0, n))
    Y = np.array(y_rows, dtype=float).T if out_cols else np.empty((0, n))
    return Dataset(
        tuple(ids), X, Y, tuple(in_names), tuple(out_names),
        undesirable_outputs=tuple(undesirable),
    )


def load_directions_file(path, dataset: Dataset) -> DirectionScheme:
    """Load per-unit directions from a CSV sidecar keyed by unit id.

    The header must use the dataset's own factor names (``i:``/``o:``
    prefixes). A padded factor row gets a zero direction component. A file
    with the single id ``*`` defines one constant direction for all units.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DatasetError("directions file needs a header and at least one row")
    in_cols, out_cols, in_names, out_names, _ = _parse_header(rows[0])

    real_inputs = [nm for nm in dataset.input_names if not (dataset.padded_input and nm == PADDING_NAME)]
    real_outputs = [nm for nm in dataset.output_names if not (dataset.padded_output and nm == PADDING_NAME)]
    if sorted(in_names) != sorted(real_inputs) or sorted(out_names) != sorted(real_outputs):
        raise DatasetError(
            "directions file factor names must match the dataset "
            f"(expected inputs {real_inputs}, outputs {real_outputs})"
        )
    in_pos = {nm: k for nm, k in zip(in_names, in_cols)}
    out_pos = {nm: k for nm, k in zip(out_names, out_cols)}

    mapping: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise DatasetError(f"line {lineno}: ragged row in directions file")
        uid = row[0].strip()
        gx = np.zeros(dataset.m)
        gy = np.zeros(dataset.s)
        try:
            for i, nm in enumerate(dataset.input_names):
                if nm in in_pos:
                    gx[i] = float(row[in_pos[nm]])
            for r, nm in enumerate(dataset.output_names):
                if nm in out_pos:
                    gy[r] = float(row[out_pos[nm]])
        except ValueError as exc:
            raise DatasetError(f"non-numeric direction cell at line {lineno}") from exc
        mapping[uid] = (gx, gy)

    if set(mapping) == {"*"}:
        gx, gy = mapping["*"]
        return DirectionScheme(DirectionKind.CONSTANT, constant=(gx, gy), label="constant(file)")
    missing = [uid for uid in dataset.unit_ids if uid not in mapping]
    if missing:
        raise DatasetError(f"directions file misses units: {missing}")
    return DirectionScheme(DirectionKind.PER_UNIT, per_unit=mapping, label="file")
