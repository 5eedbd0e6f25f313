"""Path-based DEA efficiency analysis over variable returns-to-scale technologies.

The package evaluates decision-making units along parametric improvement
paths (radial, directional, hyperbolic, generalised-distance), classifies
each projection as strongly or weakly efficient with a slack-maximising
second phase, detects ideal technologies, and audits the identification,
projection-strength and monotonicity properties of any model configuration
on any dataset.
"""

from .audit import (
    AuditReport,
    IdealGuaranteeSummary,
    audit_id,
    audit_mo,
    audit_pathflow,
    audit_pr,
    percentage_table,
    run_audit,
    sample_dominance_pairs,
    sample_technology_points,
    sample_weak_point_off_ideal,
    verify_ideal_guarantee,
)
from .geometry import (
    Dominance,
    IdealTechnologyReport,
    UnitLocation,
    classify_unit,
    coincidence_sets,
    contains,
    dominance,
    ideal_point,
    ideal_technology_by_generators,
    ideal_technology_by_membership,
    is_trivial_technology,
    max_additive_slack,
    membership,
)
from .linprog import LinearProgram, LpError, LpSolution, LpStatus, feasible, solve
from .model import (
    Dataset,
    DatasetError,
    Direction,
    DirectionKind,
    DirectionScheme,
    EvaluationResult,
    PathSpec,
    PathValidation,
    ProjectionDiagnostics,
    Technology,
    bcc_input,
    bcc_output,
    catalog_path,
    custom_path,
    ddf,
    gdf,
    hdf,
    load_dataset,
    load_directions_file,
    make_direction,
    validate_pathspec,
)
from .solver import (
    DomainExitError,
    PathProblem,
    SecondPhaseResult,
    SolverError,
    SolverOptions,
    UnitOutcome,
    evaluate_technology,
    evaluate_unit,
    path_point,
    second_phase,
    solve_efficiency,
    solve_efficiency_lp,
)

__version__ = "0.1.0"
