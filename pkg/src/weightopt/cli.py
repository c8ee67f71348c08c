"""Command-line front end.

``weightopt <task> --config <path> [--out <dir>] [--seed <u64>] [--grid <n>]``

Tasks: eig, optimize, optimize2, symmetrize, verify, remark.  Each run
reads a JSON config, validates feasibility before any computation, and
writes results.json plus weight.csv / eigenfunction.csv (and an optional
heatmap.pgm).  Identical config and seed produce byte-identical artifacts.

Exit codes: 0 success, 1 malformed config, 2 infeasible constants,
3 eigensolver non-convergence, 4 verification-suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as wio
from . import verify as wverify
from .eig import (
    EIG_RESIDUAL_RTOL,
    NoConvergence,
    WeightNotPositiveAnywhere,
    principal_positive_eigenvalue,
)
from .grid import GridDomain, ScalarField, transpose_field, transposed
from .optimize import (
    DEFAULT_SEEDS,
    InfeasibleClassError,
    OptimizeReport,
    compare_split_vs_merged,
    optimize_single,
    optimize_two,
    single_class_profile,
)
from .rearrange import INTEGRAL_RTOL, ResourceClass
from .steiner import SteinerAxisError, symmetrize_function, symmetry_defect

TASKS = ("eig", "optimize", "optimize2", "symmetrize", "verify", "remark")

DEFAULT_TOLERANCES = {
    "eig_residual": EIG_RESIDUAL_RTOL,
    "integral_rel": INTEGRAL_RTOL,
    "symmetry_defect": 0.02,
}


class ConfigError(ValueError):
    """Malformed or schema-invalid run configuration."""


@dataclass
class RunConfig:
    task: str
    domain_cfg: dict
    weight_cfg: dict | None = None
    single_class: tuple[float, float, float] | None = None
    classes: tuple[tuple[float, float, float], tuple[float, float, float]] | None = None
    seeds: int = DEFAULT_SEEDS
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "."
    heatmap: bool = False
    verify_trials: int = 60

    @staticmethod
    def load(path: str | Path, task_override: str | None = None) -> "RunConfig":
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config root must be a JSON object")
        if task_override is not None:
            declared = raw.get("task")
            if declared is not None and declared != task_override:
                raise ConfigError(
                    f"{path}: config task {declared!r} does not match CLI task {task_override!r}"
                )
            raw = {**raw, "task": task_override}
        return RunConfig.from_dict(raw, path)

    @staticmethod
    def from_dict(raw: dict, path: str | Path = "<config>") -> "RunConfig":
        task = raw.get("task")
        if task not in TASKS:
            raise ConfigError(f"{path}: task must be one of {TASKS}, got {task!r}")
        domain_cfg = raw.get("domain")
        if not isinstance(domain_cfg, dict):
            raise ConfigError(f"{path}: missing domain object")
        if domain_cfg.get("shape") not in ("rectangle", "ellipse", "mask_file"):
            raise ConfigError(
                f"{path}: domain.shape must be rectangle, ellipse or mask_file"
            )
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(raw.get("tolerances", {}))
        try:
            single = raw.get("single_class")
            if single is not None:
                single = (float(single["m1"]), float(single["m2"]), float(single["m3"]))
            classes = raw.get("classes")
            if classes is not None:
                if len(classes) != 2:
                    raise ConfigError(f"{path}: classes must hold exactly two entries")
                classes = tuple(
                    (float(c["p"]), float(c["q"]), float(c["l"])) for c in classes
                )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: bad class constants ({exc})") from exc
        return RunConfig(
            task=task,
            domain_cfg=domain_cfg,
            weight_cfg=raw.get("weight"),
            single_class=single,
            classes=classes,
            seeds=int(raw.get("seeds", DEFAULT_SEEDS)),
            seed=int(raw.get("seed", 0)),
            tolerances=tol,
            output_dir=str(raw.get("output_dir", ".")),
            heatmap=bool(raw.get("heatmap", False)),
            verify_trials=int(raw.get("verify_trials", 60)),
        )


def _apply_grid_override(domain_cfg: dict, n: int) -> dict:
    """--grid n: rectangle -> n x n cells with h = 1/(n+1) (unit square);
    ellipse -> (n+1) x (n+1) grid with h = 1/n, semi-axes kept."""
    cfg = dict(domain_cfg)
    if cfg.get("shape") == "rectangle":
        cfg.update(nx=n, ny=n, h=1.0 / (n + 1))
    elif cfg.get("shape") == "ellipse":
        cfg.update(nx=n + 1, ny=n + 1, h=1.0 / n)
    else:
        raise ConfigError("--grid override applies to rectangle/ellipse shapes only")
    return cfg


def _build_weight(cfg: RunConfig, domain: GridDomain, base_dir: Path) -> ScalarField:
    wc = cfg.weight_cfg or {"kind": "constant", "value": 1.0}
    kind = wc.get("kind")
    if kind == "constant":
        return domain.constant_field(float(wc.get("value", 1.0)))
    if kind == "csv":
        return wio.read_field_csv(base_dir / wc["path"], domain)
    if kind == "bang_bang":
        constants = (float(wc["m1"]), float(wc["m2"]), float(wc["m3"]))
        profile = single_class_profile(domain, constants)
        rng = np.random.default_rng([cfg.seed, 0xBB])
        values = np.empty(domain.n_cells)
        values[rng.permutation(domain.n_cells)] = profile.cell_values()
        return ScalarField(domain, values)
    raise ConfigError(f"unknown weight kind: {kind!r}")


def _validate_feasibility(cfg: RunConfig, domain: GridDomain) -> None:
    """Feasibility of the task's constants, before any computation starts."""
    omega = domain.total_measure
    if cfg.task == "optimize":
        if cfg.single_class is None:
            raise ConfigError("optimize task needs single_class constants")
        m1, m2, m3 = cfg.single_class
        if m1 <= 0 or not (-m2 * omega < m3 < m1 * omega):
            raise InfeasibleClassError(
                f"single-class constants infeasible: m1={m1}, m2={m2}, m3={m3}, |Omega|={omega}"
            )
    if cfg.task == "optimize2":
        if cfg.classes is None:
            raise ConfigError("optimize2 task needs two classes")
        for p, q, l in cfg.classes:
            if p + q <= 0 or not (-p * omega < l < q * omega):
                raise InfeasibleClassError(
                    f"resource class infeasible: p={p}, q={q}, l={l}, |Omega|={omega}"
                )
        if cfg.classes[0][1] + cfg.classes[1][1] <= 0:
            raise InfeasibleClassError("q1 + q2 must be positive")
    if cfg.task == "eig" and (cfg.weight_cfg or {}).get("kind") == "bang_bang":
        wc = cfg.weight_cfg
        m1, m2, m3 = float(wc["m1"]), float(wc["m2"]), float(wc["m3"])
        if m1 <= 0 or not (-m2 * omega < m3 < m1 * omega):
            raise InfeasibleClassError(
                f"bang-bang weight constants infeasible: m1={m1}, m2={m2}, m3={m3}"
            )


def _optimize_results(report: OptimizeReport, domain: GridDomain) -> dict:
    defect_v = symmetry_defect(domain, report.weight) if domain.axis is not None else None
    td = transposed(domain)
    defect_h = (
        symmetry_defect(td, transpose_field(report.weight, td))
        if td.axis is not None else None
    )
    return {
        "lambda": report.final.lambda1,
        "eig_iterations": report.final.iterations,
        "eig_residual": report.final.residual,
        "fixed_point_steps": len(report.lambda_history),
        "lambda_history": list(report.lambda_history),
        "stabilized": report.stabilized,
        "restarts_used": report.restarts_used,
        "symmetry_defect_vertical": defect_v,
        "symmetry_defect_horizontal": defect_h,
    }


def _write_artifacts(outdir: Path, cfg: RunConfig, results: dict,
                     weight: ScalarField | None, u: ScalarField | None) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    wio.write_results_json(outdir / "results.json", results)
    if weight is not None:
        wio.write_field_csv(outdir / "weight.csv", weight)
        if cfg.heatmap:
            wio.write_pgm(outdir / "heatmap.pgm", wio.heatmap_image(weight))
    if u is not None:
        wio.write_field_csv(outdir / "eigenfunction.csv", u)


def run(config_path: str | Path, out_dir: str | None = None,
        seed: int | None = None, grid_n: int | None = None,
        task: str | None = None) -> int:
    """Execute one task from a config file; returns the process exit code."""
    try:
        cfg = RunConfig.load(config_path, task_override=task)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if cfg.task == "verify":
        return verify(config_path, out_dir=out_dir, seed=seed, grid_n=grid_n)
    if seed is not None:
        cfg.seed = seed
    if out_dir is not None:
        cfg.output_dir = out_dir
    base_dir = Path(config_path).parent
    try:
        domain_cfg = _apply_grid_override(cfg.domain_cfg, grid_n) if grid_n else cfg.domain_cfg
        domain = wio.domain_from_config(domain_cfg, base_dir)
        _validate_feasibility(cfg, domain)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleClassError, WeightNotPositiveAnywhere, ValueError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2

    outdir = Path(cfg.output_dir)
    eig_kwargs = {"residual_rtol": float(cfg.tolerances["eig_residual"])}
    try:
        if cfg.task == "eig":
            m = _build_weight(cfg, domain, base_dir)
            pair = principal_positive_eigenvalue(domain, m, **eig_kwargs)
            results = {
                "task": "eig",
                "lambda": pair.lambda1,
                "eig_iterations": pair.iterations,
                "eig_residual": pair.residual,
                "domain_measure": domain.total_measure,
                "seed": cfg.seed,
            }
            _write_artifacts(outdir, cfg, results, m, pair.u)
        elif cfg.task == "optimize":
            report = optimize_single(
                domain, cfg.single_class, cfg.seeds, rng_seed=cfg.seed,
                eig_kwargs=eig_kwargs,
            )
            results = {
                "task": "optimize",
                "seed": cfg.seed,
                "domain_measure": domain.total_measure,
                "realized_integral": report.weight.integral(),
                **_optimize_results(report, domain),
            }
            _write_artifacts(outdir, cfg, results, report.weight, report.final.u)
        elif cfg.task == "optimize2":
            c1, c2 = cfg.classes
            omega = domain.total_measure
            cls1 = ResourceClass(c1[0], c1[1], c1[2], omega)
            cls2 = ResourceClass(c2[0], c2[1], c2[2], omega)
            report, bb = optimize_two(
                domain, cls1, cls2, cfg.seeds, rng_seed=cfg.seed,
                eig_kwargs=eig_kwargs,
            )
            results = {
                "task": "optimize2",
                "seed": cfg.seed,
                "domain_measure": domain.total_measure,
                "levels": {"top": bb.top, "mid": bb.mid, "bot": bb.bot},
                "measure_E": float(bb.E.sum()) * domain.cell_area,
                "measure_G": float(bb.G.sum()) * domain.cell_area,
                "realized_integrals": list(bb.realized_integrals),
                **_optimize_results(report, domain),
            }
            _write_artifacts(outdir, cfg, results, report.weight, report.final.u)
        elif cfg.task == "symmetrize":
            m = _build_weight(cfg, domain, base_dir)
            pair_before = principal_positive_eigenvalue(domain, m, **eig_kwargs)
            m_sym = symmetrize_function(domain, m)
            pair_after = principal_positive_eigenvalue(domain, m_sym, **eig_kwargs)
            results = {
                "task": "symmetrize",
                "seed": cfg.seed,
                "lambda_before": pair_before.lambda1,
                "lambda_after": pair_after.lambda1,
                "defect_before": symmetry_defect(domain, m),
                "defect_after": symmetry_defect(domain, m_sym),
            }
            _write_artifacts(outdir, cfg, results, m_sym, pair_after.u)
        elif cfg.task == "remark":
            report_two, report_one = compare_split_vs_merged(
                domain, cfg.seeds, rng_seed=cfg.seed, eig_kwargs=eig_kwargs
            )
            lam_two = report_two.final.lambda1
            lam_single = report_one.final.lambda1
            results = {
                "task": "remark",
                "seed": cfg.seed,
                "lambda_two_resource": lam_two,
                "lambda_single": lam_single,
                "single_beats_two_resource": lam_single < lam_two,
                **{f"single_{k}": v
                   for k, v in _optimize_results(report_one, domain).items()},
            }
            # artifacts carry the winning (merged-constraint) arrangement
            _write_artifacts(outdir, cfg, results, report_one.weight,
                             report_one.final.u)
    except (InfeasibleClassError, WeightNotPositiveAnywhere, SteinerAxisError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 3
    return 0


def verify(config_path: str | Path, out_dir: str | None = None,
           seed: int | None = None, grid_n: int | None = None,
           broken_tie_rule: bool = False) -> int:
    """Run the property suites on the configured instance; 0 iff all pass.

    ``broken_tie_rule`` is a test hook that deliberately mis-biases the
    set-symmetrization parity rule so the superlevel-consistency suite must
    report a failure (negative control).
    """
    try:
        cfg = RunConfig.load(config_path, task_override="verify")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if seed is not None:
        cfg.seed = seed
    if out_dir is not None:
        cfg.output_dir = out_dir
    try:
        domain_cfg = _apply_grid_override(cfg.domain_cfg, grid_n) if grid_n else cfg.domain_cfg
        domain = wio.domain_from_config(domain_cfg, Path(config_path).parent)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2

    results = wverify.run_all(
        domain, rng_seed=cfg.seed, trials=cfg.verify_trials,
        broken_tie_rule=broken_tie_rule,
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "task": "verify",
        "seed": cfg.seed,
        "checks": {r.name: r.passed for r in results},
        "all_passed": all(r.passed for r in results),
    }
    wio.write_results_json(outdir / "results.json", payload)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
    return 0 if payload["all_passed"] else 4


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="weightopt",
        description="Minimize the principal Dirichlet eigenvalue over weight rearrangements",
    )
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    parser.add_argument("--grid", type=int, default=None, help="grid resolution override")
    args = parser.parse_args(argv)
    if args.task == "verify":
        return verify(args.config, out_dir=args.out, seed=args.seed, grid_n=args.grid)
    return run(args.config, out_dir=args.out, seed=args.seed, grid_n=args.grid,
               task=args.task)


if __name__ == "__main__":
    sys.exit(main())
