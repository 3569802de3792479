"""Command-line front end.

    scn weights <matrix-file>
    scn matrix [--config PATH] [--unconstrained-m44-zero]
    scn run [--config PATH] [--manifest PATH] [--out DIR] [--step DAYS]

Exit status: 0 success, 1 validation/parse error (or inconsistent
judgments for ``weights``), 2 numerical failure, 3 some solve diverged.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import ahp, bvp, scenario
from .config import ModelConfig, load_config
from .errors import NumericalError, ValidationError
from .model import gradient

log = logging.getLogger("scn")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_DIVERGENT = 0, 1, 2, 3


@dataclass
class RunConfig:
    model_config_path: str | None = None
    scenario_manifest_path: str | None = None
    output_dir: str = "scn_output"
    step_days: float = bvp.DEFAULT_STEP_DAYS
    tolerances: dict = field(default_factory=lambda: {
        "boundary": bvp.BOUNDARY_TOL, "divergence": bvp.DIVERGENCE_THRESHOLD})
    flags: dict = field(default_factory=lambda: {"unconstrained_m44_zero": False})

    def __post_init__(self):
        if not self.step_days > 0:
            raise ValidationError(f"step must be positive, got {self.step_days}")

    def solve_kwargs(self) -> dict:
        return {"boundary_tol": self.tolerances["boundary"],
                "divergence_threshold": self.tolerances["divergence"]}

    def load_model(self) -> ModelConfig:
        cfg = load_config(self.model_config_path)
        if self.flags.get("unconstrained_m44_zero"):
            cfg = cfg.replace(unconstrained_m44_zero=True)
        return cfg


def _setup_logging() -> None:
    level = os.environ.get("SCN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _dump(obj, fh=None) -> None:
    fh = fh or sys.stdout
    json.dump(obj, fh, indent=2, sort_keys=True)
    fh.write("\n")


def _modes_json(modes) -> list[dict]:
    return [{"eigenvalue": {"re": m.eigenvalue.real, "im": m.eigenvalue.imag},
             "kind": m.kind, "rate": m.rate} for m in modes]


def cmd_weights(matrix_file: str) -> int:
    try:
        text = Path(matrix_file).read_text()
    except OSError as exc:
        print(f"error: cannot read {matrix_file}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    m = ahp.parse_matrix_text(text)
    w, lam = ahp.priority_vector(m)
    rep = ahp.consistency_from_lambda(lam, m.n)
    _dump({"weights": w.tolist(), "lambda_max": lam, "ci": rep.ci, "ri": rep.ri,
           "cr": rep.cr, "acceptable": rep.acceptable})
    if not rep.acceptable:
        print(f"CR = {rep.cr:.4f} > {ahp.CR_THRESHOLD}: review the judgments", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def matrix_report(cfg: ModelConfig) -> dict:
    grad = gradient(cfg.params, cfg.weights, cfg.coeffs, cfg.point)
    out = {"operating_point_gradient": {k: getattr(grad, k) for k in
                                        ("n4", "n5", "n3", "n1", "n2", "n6", "n7", "n8",
                                         "vco2", "l", "g", "m")}}
    for constrained, key, scales in ((False, "unconstrained", cfg.xi), (True, "constrained", cfg.psi)):
        m = cfg.matrix(constrained)
        out[key] = m.to_json()
        out[key]["mass_scales"] = list(scales.xi)
        out[key]["modes"] = _modes_json(bvp.classify_modes(cfg.effective_matrix(constrained)))
    return out


def cmd_matrix(run: RunConfig) -> int:
    _dump(matrix_report(run.load_model()))
    return EXIT_OK


def _load_manifest(path: str | None) -> dict:
    if path is None:
        text = resources.files("scn").joinpath("data/default_manifest.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest is not valid JSON: {exc}") from exc
    if isinstance(doc, list):
        doc = {"runs": doc}
    if not isinstance(doc, dict) or not isinstance(doc.get("runs"), list) or not doc["runs"]:
        raise ValidationError("manifest must hold a non-empty 'runs' list")
    return doc


def _terminal_row(values):
    return tuple(None if (v is None or v == "neumann") else float(v) for v in values)


def _definition(entry: dict) -> scenario.CaseDefinition:
    try:
        case = int(entry["case"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"manifest entry needs an integer 'case': {entry}") from None
    return scenario.CaseDefinition(
        case_id=case,
        horizon_years=int(entry.get("horizon_years", 3)),
        constrained=bool(entry.get("constrained", True)),
        initial=tuple(float(v) for v in entry["initial"]) if "initial" in entry else None,
        terminal=_terminal_row(entry["terminal"]) if "terminal" in entry else None,
    )


def _plans(defn: scenario.CaseDefinition, spec) -> list[scenario.RestrategizePlan]:
    stages = spec.get("stages", "default")
    if stages == "default":
        return scenario.default_plans(defn)
    plans = []
    for st in stages:
        t = st.get("time", "detect")
        target = st.get("target", {"check": "BC"})
        if isinstance(target, dict):
            target = defn.check_value(target.get("check", "BC"))
        plans.append(scenario.RestrategizePlan(None if t == "detect" else float(t), float(target)))
    return plans


def _run_summary(res: scenario.CaseResult, csv_name: str) -> dict:
    rep = res.report
    out = {
        "name": res.definition.name,
        "case": res.definition.case_id,
        "horizon_years": res.definition.horizon_years,
        "constrained": res.definition.constrained,
        "csv": csv_name,
        "divergent": rep.divergent,
        "diagnostic": rep.diagnostic,
        "boundary_residual": rep.boundary_residual,
        "ode_residual": rep.ode_residual,
        "condition_estimate": rep.condition_estimate,
        "matrix": res.matrix.tolist(),
        "modes": _modes_json(res.modes),
        "vco2_oscillatory": res.vco2_oscillatory,
        "vco2_instability": res.vco2_instability,
        "action_points": [{"component": p.component, "time": p.time, "kind": p.kind}
                          for p in res.action_points],
    }
    if not rep.divergent:
        out["endpoint_error"] = res.endpoint_error()
        vmins = [p.time for p in res.action_points
                 if p.component == "dVCO2" and p.kind == "minimum"]
        out["vco2_interior_minimum"] = vmins[0] if vmins else None
    if res.stages:
        out["restrategize"] = {
            "stages": [{"revision_time": s.revision_time, "target": s.target,
                        "reference_terminal": s.reference_terminal,
                        "revised_terminal": s.revised_terminal,
                        "reduction_pct": s.reduction_pct,
                        "divergent": s.report.divergent} for s in res.stages],
            "vco2_reduction_pct": res.vco2_reduction_pct,
            "cumulative_reduction_pct": res.cumulative_reduction_pct,
        }
    return out


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".scn_write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


def cmd_run(run: RunConfig) -> int:
    out = Path(run.output_dir)
    _check_writable(out)
    cfg = run.load_model()
    manifest = _load_manifest(run.scenario_manifest_path)
    kw = run.solve_kwargs()

    summaries = []
    any_divergent = False
    for entry in manifest["runs"]:
        defn = _definition(entry)
        res = scenario.run_case(defn, cfg, run.step_days, **kw)
        rs = entry.get("restrategize")
        if rs and not res.divergent:
            scenario.apply_plans(res, _plans(defn, rs), **kw)
        csv_name = f"{defn.name}.csv"
        bvp.write_csv(res.base, out / csv_name)
        summary = _run_summary(res, csv_name)
        if entry.get("write_revised") and res.revised is not None:
            summary["revised_csv"] = f"{defn.name}_revised.csv"
            bvp.write_csv(res.revised, out / summary["revised_csv"])
        summaries.append(summary)
        any_divergent |= res.divergent or any(s.report.divergent for s in res.stages)

    with open(out / "summary.json", "w") as fh:
        _dump({"step_days": run.step_days, "runs": summaries}, fh)
    return EXIT_DIVERGENT if any_divergent else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scn", description="Supply-chain free-energy model tools")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", help="AHP weights and consistency of a judgment matrix")
    w.add_argument("matrix_file")

    m = sub.add_parser("matrix", help="assemble the unconstrained and constrained system matrices")
    m.add_argument("--config")
    m.add_argument("--unconstrained-m44-zero", action="store_true")

    r = sub.add_parser("run", help="run the case-study manifest")
    r.add_argument("--config")
    r.add_argument("--manifest")
    r.add_argument("--out", default="scn_output")
    r.add_argument("--step", type=float, default=bvp.DEFAULT_STEP_DAYS)
    r.add_argument("--unconstrained-m44-zero", action="store_true")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "weights":
            return cmd_weights(args.matrix_file)
        flags = {"unconstrained_m44_zero": args.unconstrained_m44_zero}
        if args.command == "matrix":
            return cmd_matrix(RunConfig(model_config_path=args.config, flags=flags))
        return cmd_run(RunConfig(model_config_path=args.config,
                                 scenario_manifest_path=args.manifest,
                                 output_dir=args.out, step_days=args.step, flags=flags))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
