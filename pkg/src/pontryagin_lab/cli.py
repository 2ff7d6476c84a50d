"""Command line front end.

Subcommands::

    pontryagin-lab run CONFIG [--out DIR]
    pontryagin-lab checks
    pontryagin-lab dump-model CONFIG

``run`` writes a CSV with one row per ladder point and a JSON summary; the
exit status is 0 iff every verdict passes.  Set ``PONTRYAGIN_LAB_WORKERS`` to
fan ladder rungs out to a thread pool; the output does not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .convergence import (
    ConvergenceReport,
    Experiment,
    LadderConfig,
    run_m0_reduction,
    run_projection_ladder,
    run_resolvent_convergence,
    run_schrodinger_ladder,
    run_parabolic_ladder,
    run_hyperbolic_ladder,
)
from .errors import LabError
from .exact import a_limit
from .spectral import build_model

__all__ = ["CHECKS", "CSV_COLUMNS", "list_checks", "run_scenario", "render_csv", "main"]

log = logging.getLogger("pontryagin_lab")

CSV_COLUMNS = ("check", "series", "n", "param", "probe", "error", "error_euclid", "status")

CHECKS = (
    ("signature", "form on B_n has m = floor(k/2) negative squares; eigen count equals reduction count"),
    ("intertwining", "resolvent intertwining Q_n (A_n + lam)^-1 = R_n(lam) Q_n"),
    ("pseudoresolvent", "pseudoresolvent identity; H independent of the construction point"),
    ("inverse", "R(0) matches the closed-form inverse; rank-one form for m = 0"),
    ("conservation", "indefinite product conserved by the unitary groups"),
    ("schrodinger", "Schrodinger ladder: U_n(t) P_n -> P_n U(t)"),
    ("parabolic", "parabolic ladder: exp(-t A_n) P_n -> P_n exp(-t H)"),
    ("hyperbolic", "hyperbolic ladder: V_n, W_n -> V, W separately"),
    ("resolvent", "resolvent ladder: (A_n + lam)^-1 P_n -> P_n (H + lam)^-1"),
    ("m0-reduction", "k = 1 system equals the rank-one equation with g_n = 1/z_0"),
    ("projection", "Q_n P_n -> I and <P_n Phi, P_n Phi> -> <Phi, Phi>"),
    ("hyperbolic-residual", "second difference of V_n(t) Phi solves -u'' = A_n u; scalar cos/sin"),
    ("determinism", "same config and seed give byte-identical CSV"),
)


def list_checks() -> str:
    width = max(len(name) for name, _ in CHECKS)
    return "\n".join(f"{name.ljust(width)}  {desc}" for name, desc in CHECKS)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def render_csv(reports: list[ConvergenceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for r in rep.rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class ScenarioResult:
    exit_code: int
    csv_path: Path
    json_path: Path
    summary: dict
    reports: list


def _aggregate(rep: ConvergenceReport) -> list[dict]:
    out = []
    keys = sorted({(r.series, r.param) for r in rep.rows})
    for series, param in keys:
        ns, errs = rep.series(series, param)
        out.append({"series": series, "param": param, "n": ns.tolist(), "max_error": errs.tolist()})
    return out


def run_scenario(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None) -> ScenarioResult:
    """Run every ladder requested by ``cfg`` and write CSV and JSON outputs."""
    model = build_model(cfg.model)
    exp = Experiment(
        model,
        cfg.g_targets,
        alpha=cfg.alpha,
        noise=cfg.noise,
        lambda0=cfg.lambda0,
        seed=cfg.seed,
        n_random=cfg.probes_random,
        random_subspace=cfg.random_subspace,
    )
    ladder = LadderConfig(cfg.n_values, cfg.t_values, "schrodinger", cfg.lambda_values, None, cfg.drop)
    runners = {
        "schrodinger": run_schrodinger_ladder,
        "parabolic": run_parabolic_ladder,
        "hyperbolic": run_hyperbolic_ladder,
        "resolvent": run_resolvent_convergence,
        "projection": run_projection_ladder,
    }
    reports = []
    hard_failures = []
    for kind in cfg.kinds:
        log.info("running %s ladder", kind)
        try:
            reports.append(runners[kind](exp, ladder, workers=workers))
        except LabError as err:
            hard_failures.append(f"{kind}: {err}")
    if model.k == 1:
        reports.append(run_m0_reduction(model, cfg.g_targets[0], cfg.n_values, cfg.t_values, seed=cfg.seed))

    verdicts = [
        {"name": v.name, "passed": v.passed, "slope": v.slope, "ratio": v.ratio, "detail": v.detail}
        for rep in reports
        for v in rep.verdicts
    ]
    skipped = [
        {"check": r.check, "n": r.n, "param": r.param, "probe": r.probe, "status": r.status}
        for rep in reports
        for r in rep.rows
        if r.status != "ok"
    ]
    passed = not hard_failures and all(v["passed"] for v in verdicts)
    h = exp.hamiltonian
    summary = {
        "config": cfg.to_dict(),
        "model": {
            "dim": model.dim,
            "k": model.k,
            "m": model.m,
            "eigenvalue_range": [float(model.eigenvalues[0]), float(model.eigenvalues[-1])],
        },
        "lambda0": h.lambda0,
        "a_lambda0": a_limit(exp.space, h.lambda0),
        "signature_audit": exp.space.signature_audit(),
        "hamiltonian_spectrum": h.spectral_data(),
        "j_selfadjoint_defect": h.j_selfadjoint_defect(),
        "verdicts": [f"{v['name']}: {'pass' if v['passed'] else 'fail'}" for v in verdicts],
        "verdict_details": verdicts,
        "aggregates": {rep.check: _aggregate(rep) for rep in reports},
        "constants": {rep.check: rep.constants for rep in reports},
        "skipped_rows": skipped,
        "hard_failures": hard_failures,
        "passed": passed,
    }
    out = Path(out_dir if out_dir is not None else cfg.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / cfg.output["csv"]
    json_path = out / cfg.output["json"]
    csv_path.write_text(render_csv(reports), encoding="utf-8")
    json_path.write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ScenarioResult(0 if passed else 1, csv_path, json_path, summary, reports)


def dump_model(cfg: ExperimentConfig) -> dict:
    model = build_model(cfg.model)
    exp = Experiment(model, cfg.g_targets, alpha=cfg.alpha, lambda0=cfg.lambda0, seed=cfg.seed)
    return _json_safe(
        {
            "model": model.to_dict(),
            "g_targets": list(cfg.g_targets),
            "lambda0": exp.hamiltonian.lambda0,
            "signature_audit": exp.space.signature_audit(),
            "hamiltonian_spectrum": exp.hamiltonian.spectral_data(),
        }
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pontryagin-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run the ladders of a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (overrides the config)")
    sub.add_parser("checks", help="list the acceptance checks")
    p_dump = sub.add_parser("dump-model", help="print the surrogate and Gram audit as JSON")
    p_dump.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.cmd == "checks":
        print(list_checks())
        return 0
    try:
        cfg = load_config(args.config)
        if args.cmd == "dump-model":
            print(json.dumps(dump_model(cfg), indent=2, sort_keys=True))
            return 0
        res = run_scenario(cfg, args.out)
    except (LabError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for line in res.summary["verdicts"]:
        print(line)
    print(f"wrote {res.csv_path} and {res.json_path}")
    return res.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
