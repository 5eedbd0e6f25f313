"""Command-line front end: batch evaluation, audits, and path-sample export.

Writes one JSON report (machine) and one aligned-text table (human) per run;
reports are byte-stable for identical inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .audit import AuditReport, run_audit
from .model import (
    Dataset,
    DatasetError,
    DirectionKind,
    DirectionScheme,
    PathSpec,
    Technology,
    catalog_path,
    load_dataset,
    load_directions_file,
    make_direction,
)
from .solver import (
    PathProblem,
    SolverOptions,
    UnitOutcome,
    evaluate_technology,
    path_point,
    solve_efficiency,
)

SCHEMA = "dea-path/1"
ALL_OUTPUTS = ("scores", "projections", "slacks", "audit", "ideal-report", "path-samples")
DEFAULT_OUTPUTS = ("scores", "projections", "slacks")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNIT_FAILURE = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run parameters assembled from CLI flags."""

    model: str
    gdf_p: float | None
    direction: str | None
    theta_min: float | None
    dataset_path: Path
    directions_path: Path | None
    audit: bool
    paths: tuple[str, int] | None
    jobs: int
    options: SolverOptions
    seed: int
    out_dir: Path | None
    fmt: str
    outputs: tuple[str, ...]
    spec: PathSpec = field(init=False)

    def __post_init__(self):
        if self.model not in ("bcc-i", "bcc-o", "ddf", "hdf", "gdf"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.model == "gdf" and self.gdf_p is None:
            raise ConfigError("--model gdf requires --gdf-p")
        if self.fmt not in ("json", "table", "both"):
            raise ConfigError("--format must be json, table or both")
        if not self.outputs:
            raise ConfigError("no outputs requested")
        unknown = set(self.outputs) - set(ALL_OUTPUTS)
        if unknown:
            raise ConfigError(f"unknown outputs: {sorted(unknown)}")
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if self.paths is not None and self.paths[1] < 2:
            raise ConfigError("--paths needs a sample count of at least 2")
        try:
            self.spec = catalog_path(self.model, self.gdf_p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.model in ("bcc-i", "bcc-o") and self.direction is not None:
            raise ConfigError(f"{self.model} fixes its own direction; drop --direction")
        if self.theta_min is None:
            self.theta_min = {"ddf": 0.0, "hdf": 0.1, "gdf": 0.1}.get(self.model)

    def build_scheme(self, dataset: Dataset) -> DirectionScheme:
        if self.model == "bcc-i":
            return DirectionScheme(
                DirectionKind.CUSTOM, fn=lambda x, y: (x, np.zeros_like(y)), label="radial-input"
            )
        if self.model == "bcc-o":
            return DirectionScheme(
                DirectionKind.CUSTOM, fn=lambda x, y: (np.zeros_like(x), y), label="radial-output"
            )
        direction = self.direction or "g2"
        if direction in ("g1", "g3", "g4"):
            return DirectionScheme(DirectionKind(direction))
        if direction == "g2":
            if self.theta_min is None:
                raise ConfigError("g2 directions need --theta-min")
            return DirectionScheme(DirectionKind.IDEAL_RANGE, theta_min=self.theta_min)
        if direction in ("file", "constant"):
            if self.directions_path is None:
                raise ConfigError(f"--direction {direction} requires --directions-file")
            scheme = load_directions_file(self.directions_path, dataset)
            if direction == "constant" and scheme.kind is not DirectionKind.CONSTANT:
                raise ConfigError(
                    "--direction constant expects a single '*' row in the directions file"
                )
            return scheme
        raise ConfigError(f"unknown direction {direction!r}")

    def model_id(self, scheme: DirectionScheme) -> str:
        return f"{self.spec.name}+{scheme.label}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dea-path",
        description="Evaluate path-based DEA efficiency over a VRS technology.",
    )
    p.add_argument("--model", default="ddf", help="bcc-i | bcc-o | ddf | hdf | gdf")
    p.add_argument("--gdf-p", type=float, default=None, help="exponent p in [0,1] for gdf")
    p.add_argument("--direction", default=None,
                   help="g1 | g2 | g3 | g4 | constant | file (default: g2 for ddf/hdf/gdf)")
    p.add_argument("--theta-min", type=float, default=None,
                   help="common lower score for g2 directions (default: 0 ddf, 0.1 hdf/gdf)")
    p.add_argument("--dataset", required=True, help="CSV with header id,i:...,o:...,u:...")
    p.add_argument("--directions-file", default=None,
                   help="CSV sidecar with per-unit directions (or one '*' row)")
    p.add_argument("--audit", action="store_true", help="also run the property audits")
    p.add_argument("--paths", default=None, metavar="UNIT:COUNT",
                   help="emit COUNT path samples for UNIT")
    p.add_argument("--jobs", type=int, default=1, help="concurrent unit evaluations")
    p.add_argument("--tol-theta", type=float, default=1e-9, help="bisection width")
    p.add_argument("--tol-feas", type=float, default=1e-8, help="LP feasibility tolerance")
    p.add_argument("--seed", type=int, default=0, help="seed for audit sampling")
    p.add_argument("--out", default=None, metavar="DIR", help="write report files here")
    p.add_argument("--format", default="both", choices=("json", "table", "both"))
    p.add_argument("--outputs", default=",".join(DEFAULT_OUTPUTS),
                   help="comma list of " + "|".join(ALL_OUTPUTS))
    return p


def _parse_paths(arg: str | None) -> tuple[str, int] | None:
    if arg is None:
        return None
    unit, sep, count = arg.rpartition(":")
    if not sep or not unit:
        raise ConfigError("--paths expects UNIT_ID:COUNT")
    try:
        return unit, int(count)
    except ValueError as exc:
        raise ConfigError("--paths count must be an integer") from exc


def config_from_args(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    env_seed = os.environ.get("DEA_PATH_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError("DEA_PATH_SEED must be an integer") from exc
    try:
        options = SolverOptions(theta_tol=args.tol_theta, feas_tol=args.tol_feas)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    outputs = tuple(tok for tok in (t.strip() for t in args.outputs.split(",")) if tok)
    if args.audit:
        outputs = tuple(dict.fromkeys(outputs + ("audit", "ideal-report")))
    paths = _parse_paths(args.paths)
    if paths is not None:
        outputs = tuple(dict.fromkeys(outputs + ("path-samples",)))
    return RunConfig(
        model=args.model,
        gdf_p=args.gdf_p,
        direction=args.direction,
        theta_min=args.theta_min,
        dataset_path=Path(args.dataset),
        directions_path=Path(args.directions_file) if args.directions_file else None,
        audit=args.audit or "audit" in outputs,
        paths=paths,
        jobs=args.jobs,
        options=options,
        seed=seed,
        out_dir=Path(args.out) if args.out else None,
        fmt=args.format,
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def _round(v: float) -> float:
    # stabilise float text across platforms without losing tolerance headroom
    return float(f"{v:.12g}")


def _vec(a: np.ndarray | None) -> list[float] | None:
    return None if a is None else [_round(float(v)) for v in a]


def _unit_record(outcome: UnitOutcome, cfg: RunConfig) -> dict:
    rec: dict = {"id": outcome.unit_id}
    if outcome.error is not None:
        rec["error"] = outcome.error
        return rec
    r = outcome.result
    if "scores" in cfg.outputs:
        rec["theta_star"] = _round(r.theta_star)
    rec["strongly_efficient_projection"] = r.strongly_efficient_projection
    if "projections" in cfg.outputs:
        rec["projection_inputs"] = _vec(r.projection_x)
        rec["projection_outputs"] = _vec(r.projection_y)
    if "slacks" in cfg.outputs:
        rec["slack_inputs"] = _vec(r.slack_x)
        rec["slack_outputs"] = _vec(r.slack_y)
        rec["total_slack"] = _round(r.total_slack)
    if r.diagnostics.degenerate:
        rec["degenerate"] = True
    if r.diagnostics.alpha_x is not None:
        rec["alpha_x"] = _round(r.diagnostics.alpha_x)
    if r.diagnostics.alpha_y is not None:
        rec["alpha_y"] = _round(r.diagnostics.alpha_y)
    return rec


def _audit_json(report: AuditReport) -> dict:
    return {
        "model_id": report.model_id,
        "pct_strong_projections": _round(report.pct_strong_projections),
        "id": {
            "pass": report.id_pass,
            "violations": list(report.id.id_violations),
            "missed_strong": list(report.id.missed_strong),
        },
        "pr": {
            "pass": report.pr_pass,
            "weak_projection_units": list(report.pr.weak_projection_units),
            "weak_projection_samples": list(report.pr.weak_projection_samples),
        },
        "mo": {
            "pass": report.mo_pass,
            "weak_pass": report.weak_mo_pass,
            "violations": [
                {
                    "dominant": v.dominant,
                    "dominated": v.dominated,
                    "relation": v.relation,
                    "theta_dominant": _round(v.theta_dominant),
                    "theta_dominated": _round(v.theta_dominated),
                }
                for v in report.mo.mo_violations
            ],
            "weak_violations": [
                {
                    "dominant": v.dominant,
                    "dominated": v.dominated,
                    "theta_dominant": _round(v.theta_dominant),
                    "theta_dominated": _round(v.theta_dominated),
                }
                for v in report.mo.weak_mo_violations
            ],
        },
        "pathflow": {
            "monotone": report.pathflow_monotone,
            "strictly_monotone": report.pathflow_strictly_monotone,
            "thetas": [_round(p.theta) for p in report.pathflow],
            "violation_count": sum(len(p.violations) for p in report.pathflow),
        },
        "failures": list(report.pr.failures),
        "notes": list(report.notes),
    }


def _ideal_json(tech: Technology) -> dict:
    gen = geometry.ideal_technology_by_generators(tech)
    mem = geometry.ideal_technology_by_membership(tech)
    return {
        "ideal_point": {"inputs": _vec(gen.ideal_x), "outputs": _vec(gen.ideal_y)},
        "is_trivial": gen.is_trivial,
        "by_generators": {
            "is_ideal": gen.is_ideal,
            "input_witnesses": list(gen.input_witnesses),
            "output_witnesses": list(gen.output_witnesses),
        },
        "by_membership": {
            "is_ideal": mem.is_ideal,
            "input_deltas": [None if d is None else _round(d) for d in mem.input_deltas],
            "output_deltas": [None if d is None else _round(d) for d in mem.output_deltas],
        },
        "detectors_agree": gen.is_ideal == mem.is_ideal,
    }


def _table(dataset: Dataset, outcomes: list[UnitOutcome], cfg: RunConfig,
           model_id: str, audit_json: dict | None) -> str:
    idw = max(4, *(len(o.unit_id) for o in outcomes))
    lines = [f"model: {model_id}   dataset: {cfg.dataset_path.name} "
             f"(n={dataset.n}, m={dataset.m}, s={dataset.s})"]
    if dataset.padded_input or dataset.padded_output:
        side = "input" if dataset.padded_input else "output"
        lines.append(f"note: constant {side} row added (dataset had none)")
    lines.append("")
    lines.append(f"{'unit'.ljust(idw)}  {'theta*':>12}  {'projection':>10}  {'total slack':>12}")
    lines.append("-" * (idw + 42))
    strong = 0
    evaluated = 0
    for o in outcomes:
        if o.error is not None:
            lines.append(f"{o.unit_id.ljust(idw)}  {'failed':>12}  {o.error}")
            continue
        evaluated += 1
        r = o.result
        flag = "strong" if r.strongly_efficient_projection else "weak"
        strong += r.strongly_efficient_projection
        lines.append(
            f"{o.unit_id.ljust(idw)}  {r.theta_star:>12.9f}  {flag:>10}  {r.total_slack:>12.3e}"
        )
    lines.append("-" * (idw + 42))
    pct = 100.0 * strong / len(outcomes) if outcomes else 0.0
    lines.append(f"strong projections: {strong}/{len(outcomes)}  ({pct:.1f}%)")
    if audit_json is not None:
        lines.append("")
        lines.append(
            "audit: ID={} PR={} MO={} weak-MO={}".format(
                *("pass" if b else "FAIL" for b in (
                    audit_json["id"]["pass"], audit_json["pr"]["pass"],
                    audit_json["mo"]["pass"], audit_json["mo"]["weak_pass"],
                ))
            )
        )
    return "\n".join(lines) + "\n"


def _path_samples(tech: Technology, dataset: Dataset, cfg: RunConfig,
                  scheme: DirectionScheme) -> tuple[str, list[dict]]:
    unit_id, count = cfg.paths
    if unit_id not in dataset.unit_ids:
        raise ConfigError(f"unknown unit id {unit_id!r}")
    x_o, y_o = dataset.unit(unit_id)
    direction = make_direction(scheme, cfg.spec, tech, (x_o, y_o), unit_id=unit_id)
    problem = PathProblem(tech, cfg.spec, direction, x_o, y_o, unit_id=unit_id,
                          options=cfg.options)
    result = solve_efficiency(problem)
    low = result.diagnostics.bracket_low
    if low is None:  # degenerate unit: sample a short flat bracket below 1
        low = max(cfg.spec.domain_lower + 1e-6, 0.5)
    rows = []
    for theta in np.linspace(low, 1.0, count):
        x, y = path_point(cfg.spec, direction, x_o, y_o, float(theta))
        inside = geometry.contains(tech, (x, y), cfg.options.feas_tol)
        rows.append({
            "theta": _round(float(theta)),
            "inputs": _vec(x),
            "outputs": _vec(y),
            "inside": inside,
        })
    header = ["theta"] + [f"i:{nm}" for nm in dataset.input_names] \
        + [f"o:{nm}" for nm in dataset.output_names] + ["inside"]
    csv_lines = [",".join(header)]
    for row in rows:
        cells = [repr(row["theta"])]
        cells += [repr(v) for v in row["inputs"]]
        cells += [repr(v) for v in row["outputs"]]
        cells.append("1" if row["inside"] else "0")
        csv_lines.append(",".join(cells))
    return "\n".join(csv_lines) + "\n", rows


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def run(cfg: RunConfig) -> int:
    try:
        dataset = load_dataset(cfg.dataset_path)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    tech = Technology(dataset)
    try:
        scheme = cfg.build_scheme(dataset)
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    model_id = cfg.model_id(scheme)

    outcomes = evaluate_technology(tech, cfg.spec, scheme, cfg.options, jobs=cfg.jobs)
    failures = [o for o in outcomes if o.error is not None]
    strong = sum(1 for o in outcomes if o.result is not None
                 and o.result.strongly_efficient_projection)
    pct = 100.0 * strong / len(outcomes) if outcomes else 0.0

    report: dict = {
        "schema": SCHEMA,
        "model_id": model_id,
        "config": {
            "model": cfg.model,
            "gdf_p": cfg.gdf_p,
            "direction": scheme.label,
            "theta_min": cfg.theta_min,
            "theta_tol": cfg.options.theta_tol,
            "feas_tol": cfg.options.feas_tol,
            "seed": cfg.seed,
        },
        "dataset": {
            "path": str(cfg.dataset_path),
            "n": dataset.n,
            "m": dataset.m,
            "s": dataset.s,
            "padded_input": dataset.padded_input,
            "padded_output": dataset.padded_output,
            "undesirable_as_inputs": list(dataset.undesirable_outputs),
        },
        "units": [_unit_record(o, cfg) for o in outcomes],
        "summary": {
            "evaluated": len(outcomes) - len(failures),
            "failed": len(failures),
            "strong_projections": strong,
            "pct_strong_projections": _round(pct),
        },
    }

    audit_json = None
    if "audit" in cfg.outputs:
        audit_report = run_audit(tech, cfg.spec, scheme, cfg.options,
                                 seed=cfg.seed, model_id=model_id)
        audit_json = _audit_json(audit_report)
        report["audit"] = audit_json
    if "ideal-report" in cfg.outputs:
        report["ideal_report"] = _ideal_json(tech)

    paths_csv = None
    if "path-samples" in cfg.outputs and cfg.paths is not None:
        try:
            paths_csv, rows = _path_samples(tech, dataset, cfg, scheme)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        report["path_samples"] = {"unit": cfg.paths[0], "points": rows}

    json_text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    table_text = _table(dataset, outcomes, cfg, model_id, audit_json)

    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        if cfg.fmt in ("json", "both"):
            (cfg.out_dir / "results.json").write_text(json_text, encoding="utf-8")
        if cfg.fmt in ("table", "both"):
            (cfg.out_dir / "results.txt").write_text(table_text, encoding="utf-8")
        if paths_csv is not None:
            (cfg.out_dir / "path_samples.csv").write_text(paths_csv, encoding="utf-8")
    else:
        if cfg.fmt in ("table", "both"):
            sys.stdout.write(table_text)
        if cfg.fmt in ("json", "both"):
            sys.stdout.write(json_text)

    return EXIT_UNIT_FAILURE if failures else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
