"""Command-line scenario runner.

    gaussent run <config> [--out-dir DIR]
    gaussent sweep <config> [--out-dir DIR] [--workers N]
    gaussent validate <config>

``<config>`` is a JSON file or the name of a bundled config (``fig1_qbme``,
``fig1_iho_line``, ``coupled_demo``, ``mathieu_stability``). Exit status: 0 on
success, 2 for a malformed config, 3 for a precondition violation, 4 when the
dynamics overflow or never reach the asymptotic regime (partial outputs are
kept and flagged).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import analysis, dynamics
from .analysis import EntropySeries, Sampling
from .config import ScenarioConfig, bundled_configs, load_config
from .errors import ConfigError, DomainError, DynamicsOverflow, GaussentError, NotAsymptoticError
from .gaussian import GaussianState, entropy_from_nu, make_single_mode_state, product_state
from .qbme import QbmeParams, qbme_entropy_series, qbme_nu

log = logging.getLogger("gaussent")

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_DYNAMICS = 0, 2, 3, 4
_EXIT = {"config": EXIT_CONFIG, "precondition": EXIT_PRECONDITION,
         "overflow": EXIT_DYNAMICS, "not_asymptotic": EXIT_DYNAMICS}


def fmt(x: float | None) -> str:
    """17 significant digits, enough for a lossless double round-trip."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def build_model(cfg: ScenarioConfig) -> dynamics.QuadraticModel:
    m = cfg.model
    if cfg.scenario == "IHE":
        return dynamics.ihe(m["omega1_sq"], m["lambda_sq"], m["coupling"])
    if cfg.scenario == "COUPLED_PARAMETRIC":
        return dynamics.coupled_parametric(m["omega1_sq"], m["omega2_sq"], m["q"], m["g"])
    if cfg.scenario == "SINGLE_PARAMETRIC":
        return dynamics.single_parametric(m["alpha"], m["q"])
    if cfg.scenario == "CUSTOM_PERIODIC":
        return dynamics.custom_periodic(m["k0"], m["period"], m.get("cos_terms", ()), m.get("sin_terms", ()))
    raise ConfigError(f"scenario {cfg.scenario} has no Hamiltonian model")


def build_initial_state(cfg: ScenarioConfig, n_modes: int) -> GaussianState:
    modes = cfg.initial_state["modes"]
    if len(modes) > n_modes:
        raise ConfigError(f"initial_state lists {len(modes)} modes, the model has {n_modes}")
    modes = modes + [{"nu": 0.0, "r": 0.0, "phi": 0.0, "alpha": 0.0}] * (n_modes - len(modes))
    return product_state([make_single_mode_state(**m) for m in modes])


def build_qbme_params(cfg: ScenarioConfig) -> QbmeParams:
    mode = cfg.initial_state["modes"][0] if cfg.initial_state["modes"] else {}
    return QbmeParams(
        omega=cfg.model["omega"], k=cfg.model["k"], n_bar=cfg.model["n_bar"],
        nu0=mode.get("nu", 0.0), r0=mode.get("r", 0.0), phi0=mode.get("phi", 0.0),
        alpha0=mode.get("alpha", 0.0),
    )


def _sampling(cfg: ScenarioConfig) -> Sampling | None:
    s = cfg.analysis["sampling"]
    return None if s == "AUTO" else Sampling(s)


def _uniform_grid(t_max: float, dt: float) -> np.ndarray:
    n = int(math.floor(t_max / dt + 1e-9))
    return dt * np.arange(n + 1)


def validate(cfg: ScenarioConfig) -> None:
    """Construct every object the scenario needs, raising on bad parameters."""
    integ = cfg.integration
    for key in ("step", "t_max", "sample_dt", "defect_tol", "max_norm"):
        if not integ[key] > 0:
            raise DomainError(f"integration.{key} must be > 0, got {integ[key]}")
    if integ["horizon_cap"] is not None and integ["horizon_cap"] < integ["t_max"]:
        raise DomainError("integration.horizon_cap must be >= t_max")
    if not 0 < cfg.analysis["tail_fraction"] <= 1:
        raise DomainError("analysis.tail_fraction must lie in (0, 1]")
    if cfg.scenario == "QBME":
        if len(cfg.initial_state["modes"]) > 1:
            raise ConfigError("QBME takes a single-mode initial_state")
        build_qbme_params(cfg)
        return
    model = build_model(cfg)
    build_initial_state(cfg, model.n_modes)
    if not 0 <= cfg.analysis["reduced_mode"] < model.n_modes:
        raise DomainError(f"analysis.reduced_mode out of range for {model.n_modes} modes")
    if _sampling(cfg) is Sampling.PERIOD_MULTIPLES and not model.is_periodic:
        raise DomainError("PERIOD_MULTIPLES sampling needs a periodic model")


def analyze(cfg: ScenarioConfig, fit: bool = True) -> tuple[dict[str, Any], EntropySeries | None]:
    """Run the physics of one scenario; returns the result record and its series."""
    integ, an = cfg.integration, cfg.analysis
    if cfg.scenario == "QBME":
        p = build_qbme_params(cfg)
        series = qbme_entropy_series(p, _uniform_grid(integ["t_max"], integ["sample_dt"]))
        return {
            "flag": "SATURATING",
            "entropy_initial": float(series.entropy[0]),
            "entropy_final": float(series.entropy[-1]),
            "entropy_limit": float(entropy_from_nu(p.n_bar)),
            "nu_final": float(qbme_nu(p, series.times[-1])),
        }, series

    model = build_model(cfg)
    initial = build_initial_state(cfg, model.n_modes)
    if cfg.scenario == "SINGLE_PARAMETRIC":
        sol = dynamics.mathieu_solution(model.params["alpha"], model.params["q"], integ["step"])
        lyap = dynamics.floquet_spectrum(sol.monodromy, model.period).lyapunov_upper
        record: dict[str, Any] = {"lyapunov": lyap, "characteristic_exponent": [sol.phi.real, sol.phi.imag]}
    else:
        lyap = analysis.upper_lyapunov(model, integ["step"])
        record = {"lyapunov": lyap}
    if not fit or model.n_modes < 2:
        record["flag"] = "UNSTABLE" if lyap > analysis.STABLE_TOL else "STABLE"
        series = None
        if fit:
            series = analysis.determinant_series(
                model, initial, integ["t_max"], integ["step"], an["reduced_mode"], _sampling(cfg),
                integ["sample_dt"], integ["defect_tol"], integ["max_norm"],
            )
            record["max_symplectic_defect"] = series.max_defect
            record["truncated"] = series.truncated
        return record, series

    report = analysis.compare_rate(
        model, initial, integ["t_max"], step=integ["step"], reduced_mode=an["reduced_mode"],
        tail_fraction=an["tail_fraction"], horizon_cap=integ["horizon_cap"],
        sampling=_sampling(cfg), sample_dt=integ["sample_dt"], defect_tol=integ["defect_tol"],
        max_norm=integ["max_norm"],
    )
    s = report.series
    record.update(
        flag=report.flag,
        reason=report.reason,
        fitted_slope=report.fitted_slope,
        intercept=report.intercept,
        half_log_c20=report.half_log_c20,
        relative_error=report.relative_error,
        residual_rms=report.fit.residual_rms if report.fit else None,
        fit_window=[float(s.times[report.fit.window[0]]), float(s.times[report.fit.window[1] - 1])] if report.fit else None,
        t_max_used=report.t_max_used,
        max_symplectic_defect=s.max_defect,
        truncated=s.truncated,
        truncation_reason=s.truncation_reason,
        sampling=s.sampling.value,
        reduced_mode=s.reduced_mode,
        n_samples=len(s),
    )
    return record, s


def write_series_csv(series: EntropySeries, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,det,entropy\n")
        for t, d, s in zip(series.times, series.det, series.entropy):
            fh.write(f"{fmt(t)},{fmt(d)},{fmt(s)}\n")


def read_series_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in ("t", "det", "entropy")}


def _write_json(obj: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, allow_nan=False, default=_jsonable)
        fh.write("\n")


def _jsonable(x: Any) -> Any:
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _base_summary(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "name": cfg.name,
        "scenario": cfg.scenario,
        "model": cfg.model,
        "initial_state": cfg.source.get("initial_state", {}),
        "integration": cfg.integration,
        "analysis": cfg.analysis,
    }


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path = ".") -> tuple[int, dict[str, Any]]:
    """Run one scenario and write ``series.csv`` and ``summary.json`` into ``out_dir``.

    Nothing is written when the config fails validation (exit 2 or 3).
    """
    out = Path(out_dir)
    summary = _base_summary(cfg)
    try:
        validate(cfg)
    except GaussentError as exc:
        summary.update(status=exc.category, error=str(exc))
        return _EXIT.get(exc.category, EXIT_PRECONDITION), summary

    out.mkdir(parents=True, exist_ok=True)
    series_path, summary_path = out / cfg.output["series"], out / cfg.output["summary"]
    try:
        record, series = analyze(cfg)
        code = EXIT_OK
        summary.update(status="ok", **record)
    except (NotAsymptoticError, DynamicsOverflow) as exc:
        series = getattr(exc, "series", None)
        code = EXIT_DYNAMICS
        summary.update(status=exc.category, error=str(exc), partial=True)
    except GaussentError as exc:
        summary.update(status=exc.category, error=str(exc))
        return _EXIT.get(exc.category, EXIT_PRECONDITION), summary
    if series is not None:
        write_series_csv(series, series_path)
        summary["series_file"] = series_path.name
    summary["exit_code"] = code
    _write_json(summary, summary_path)
    return code, summary


# --------------------------------------------------------------------------- #
# Sweeps
# --------------------------------------------------------------------------- #

SWEEP_COLUMNS = ["lyapunov", "fitted_slope", "intercept", "relative_error", "flag", "status"]


def _axis_values(axis: dict[str, Any]) -> list[float]:
    if "values" in axis:
        return [float(v) for v in axis["values"]]
    return [float(v) for v in np.linspace(axis["start"], axis["stop"], axis["num"])]


def sweep_points(cfg: ScenarioConfig) -> tuple[list[str], list[tuple[float, ...]]]:
    names = list(cfg.sweep["parameters"])
    grids = [_axis_values(cfg.sweep["parameters"][n]) for n in names]
    return names, list(itertools.product(*grids))


def _sweep_point(args: tuple[ScenarioConfig, list[str], tuple[float, ...], bool]) -> dict[str, Any]:
    cfg, names, values, fit = args
    model = dict(cfg.model)
    for name, value in zip(names, values):
        model[name.partition(".")[2]] = value
    point = dataclasses.replace(cfg, model=model, sweep=None)
    row: dict[str, Any] = dict(zip(names, values))
    try:
        validate(point)
        record, _ = analyze(point, fit=fit)
        row.update({k: record.get(k) for k in SWEEP_COLUMNS[:-1]}, status="ok")
    except GaussentError as exc:
        row["status"] = exc.category
    return row


def run_sweep(cfg: ScenarioConfig, out_dir: str | Path = ".", workers: int | None = None) -> tuple[int, list[dict[str, Any]]]:
    """Evaluate every grid point and write one CSV row per point, in grid order."""
    if cfg.sweep is None:
        raise ConfigError("config has no 'sweep' section")
    names, points = sweep_points(cfg)
    fit = bool(cfg.sweep.get("fit", True))
    workers = workers or cfg.sweep.get("workers") or os.cpu_count() or 1
    jobs = [(cfg, names, p, fit) for p in points]
    if workers <= 1 or len(jobs) == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / cfg.output["sweep"], "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names + SWEEP_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in names + SWEEP_COLUMNS:
                v = row.get(col)
                cells.append(v if isinstance(v, str) else fmt(v))
            fh.write(",".join(cells) + "\n")
    return EXIT_OK, rows


# --------------------------------------------------------------------------- #
# Entry point
# --------------------------------------------------------------------------- #

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussent",
        description="Entropy growth of Gaussian bipartite systems versus Lyapunov exponents.",
        epilog="Bundled configs: " + ", ".join(bundled_configs()),
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (("run", "run one scenario"), ("sweep", "run a parameter sweep"),
                       ("validate", "check a config without running it")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("config", help="JSON config file or bundled config name")
        p.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
        p.add_argument("--workers", type=int, default=None, help="sweep worker processes")
        p.add_argument("--seedless", action="store_true",
                       help="no-op: every run is deterministic and uses no random numbers")
    return parser


def _fail(exc: GaussentError) -> int:
    print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
    return _EXIT.get(exc.category, EXIT_PRECONDITION)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except GaussentError as exc:
        return _fail(exc)

    if args.verb == "validate":
        try:
            validate(cfg)
        except GaussentError as exc:
            return _fail(exc)
        print(f"{args.config}: ok ({cfg.scenario})")
        return EXIT_OK

    if args.verb == "sweep":
        try:
            validate(cfg)
            code, rows = run_sweep(cfg, args.out_dir, args.workers)
        except GaussentError as exc:
            return _fail(exc)
        log.info("wrote %d rows to %s", len(rows), Path(args.out_dir) / cfg.output["sweep"])
        return code

    code, summary = run_scenario(cfg, args.out_dir)
    if code in (EXIT_CONFIG, EXIT_PRECONDITION):
        print(json.dumps({"error": summary["status"], "message": summary["error"]}), file=sys.stderr)
        return code
    buf = io.StringIO()
    json.dump({k: summary.get(k) for k in ("status", "flag", "lyapunov", "fitted_slope", "relative_error")
               if k in summary}, buf, default=_jsonable)
    print(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
