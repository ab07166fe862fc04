"""Scenario configuration files (JSON) and their strict schema.

A scenario file looks like::

    {
      "name": "fig1_iho_line",
      "scenario": "IHE",
      "model": {"omega1_sq": 1.0, "lambda_sq": 0.875, "coupling": 0.5},
      "initial_state": {"modes": [{"nu": 0.0}, {"nu": 0.0}]},
      "integration": {"step": 0.001, "t_max": 10.0},
      "analysis": {"tail_fraction": 0.5},
      "output": {"series": "series.csv", "summary": "summary.json"}
    }

Unknown keys anywhere are rejected with the offending dotted path named.
Sweep files add a ``"sweep"`` section; see :data:`SWEEP_KEYS`.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigError

SCENARIOS = ("QBME", "IHE", "COUPLED_PARAMETRIC", "SINGLE_PARAMETRIC", "CUSTOM_PERIODIC")

MODEL_KEYS: dict[str, dict[str, type]] = {
    "QBME": {"omega": float, "k": float, "n_bar": float},
    "IHE": {"omega1_sq": float, "lambda_sq": float, "coupling": float},
    "COUPLED_PARAMETRIC": {"omega1_sq": float, "omega2_sq": float, "q": float, "g": float},
    "SINGLE_PARAMETRIC": {"alpha": float, "q": float},
    "CUSTOM_PERIODIC": {"k0": list, "period": float, "cos_terms": list, "sin_terms": list},
}
OPTIONAL_MODEL_KEYS = {"CUSTOM_PERIODIC": {"cos_terms", "sin_terms"}}

MODE_KEYS = {"nu": float, "r": float, "phi": float, "alpha": (float, list)}
INTEGRATION_KEYS = {
    "step": float,
    "t_max": float,
    "horizon_cap": float,
    "sample_dt": float,
    "defect_tol": float,
    "max_norm": float,
}
ANALYSIS_KEYS = {"tail_fraction": float, "sampling": str, "reduced_mode": int}
OUTPUT_KEYS = {"series": str, "summary": str, "sweep": str}
SWEEP_KEYS = {"parameters": dict, "workers": int, "fit": bool}
AXIS_KEYS = {"start": float, "stop": float, "num": int, "values": list}

TOP_KEYS = {
    "name", "scenario", "model", "initial_state", "integration", "analysis", "output", "sweep",
}

INTEGRATION_DEFAULTS = {
    "step": 1e-3,
    "t_max": 10.0,
    "horizon_cap": None,
    "sample_dt": 0.1,
    "defect_tol": 1e-8,
    "max_norm": 1e120,
}
ANALYSIS_DEFAULTS = {"tail_fraction": 0.5, "sampling": "AUTO", "reduced_mode": 0}
OUTPUT_DEFAULTS = {"series": "series.csv", "summary": "summary.json", "sweep": "sweep.csv"}


@dataclass
class ScenarioConfig:
    scenario: str
    model: dict[str, Any]
    initial_state: dict[str, Any]
    integration: dict[str, Any]
    analysis: dict[str, Any]
    output: dict[str, str]
    name: str = "scenario"
    sweep: dict[str, Any] | None = None
    source: dict[str, Any] = field(default_factory=dict, repr=False)


def _type_ok(value: Any, expected: type | tuple) -> bool:
    expected = expected if isinstance(expected, tuple) else (expected,)
    for e in expected:
        if e is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return True
        if e is int and isinstance(value, int) and not isinstance(value, bool):
            return True
        if e not in (float, int) and isinstance(value, e):
            return True
    return False


def _check_section(section: Any, allowed: dict[str, Any], path: str, required: set[str] = frozenset()) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{path} must be an object")
    for key, value in section.items():
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}.{key}'")
        if not _type_ok(value, allowed[key]):
            raise ConfigError(f"'{path}.{key}' has the wrong type ({type(value).__name__})")
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"'{path}.{key}' must be finite")
    missing = sorted(required - section.keys())
    if missing:
        raise ConfigError(f"missing key '{path}.{missing[0]}'")
    return dict(section)


def parse_config(data: Any) -> ScenarioConfig:
    """Validate the structure of a decoded config; physics checks happen later."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in data:
        if key not in TOP_KEYS:
            raise ConfigError(f"unknown key '{key}'")
    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"'scenario' must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
    name = data.get("name", "scenario")
    if not isinstance(name, str):
        raise ConfigError("'name' must be a string")

    keys = MODEL_KEYS[scenario]
    required = set(keys) - OPTIONAL_MODEL_KEYS.get(scenario, set())
    model = _check_section(data.get("model", {}), keys, "model", required)

    raw_state = data.get("initial_state", {})
    if scenario in ("QBME", "SINGLE_PARAMETRIC") and isinstance(raw_state, dict) and "modes" not in raw_state:
        raw_state = {"modes": [raw_state]}
    state = _check_section(raw_state, {"modes": list}, "initial_state")
    modes = []
    for i, mode in enumerate(state.get("modes", [])):
        m = _check_section(mode, MODE_KEYS, f"initial_state.modes[{i}]")
        alpha = m.get("alpha", 0.0)
        if isinstance(alpha, list):
            if len(alpha) != 2 or not all(_type_ok(a, float) for a in alpha):
                raise ConfigError(f"'initial_state.modes[{i}].alpha' must be a number or [re, im]")
            alpha = complex(alpha[0], alpha[1])
        modes.append({"nu": m.get("nu", 0.0), "r": m.get("r", 0.0), "phi": m.get("phi", 0.0), "alpha": alpha})
    state = {"modes": modes}

    integration = {**INTEGRATION_DEFAULTS, **_check_section(data.get("integration", {}), INTEGRATION_KEYS, "integration")}
    analysis = {**ANALYSIS_DEFAULTS, **_check_section(data.get("analysis", {}), ANALYSIS_KEYS, "analysis")}
    if analysis["sampling"] not in ("AUTO", "UNIFORM", "PERIOD_MULTIPLES"):
        raise ConfigError("'analysis.sampling' must be AUTO, UNIFORM or PERIOD_MULTIPLES")
    output = {**OUTPUT_DEFAULTS, **_check_section(data.get("output", {}), OUTPUT_KEYS, "output")}

    sweep = None
    if "sweep" in data:
        sweep = _check_section(data["sweep"], SWEEP_KEYS, "sweep", {"parameters"})
        axes = {}
        for pname, axis in sweep["parameters"].items():
            section, _, key = pname.partition(".")
            if section != "model" or key not in keys:
                raise ConfigError(f"unknown sweep parameter '{pname}'")
            ax = _check_section(axis, AXIS_KEYS, f"sweep.parameters.{pname}")
            if "values" in ax:
                if set(ax) != {"values"} or not ax["values"] or not all(_type_ok(v, float) for v in ax["values"]):
                    raise ConfigError(f"'sweep.parameters.{pname}' needs a non-empty numeric 'values' list alone")
            elif not {"start", "stop", "num"} <= set(ax):
                raise ConfigError(f"'sweep.parameters.{pname}' needs start, stop and num")
            elif ax["num"] < 1:
                raise ConfigError(f"'sweep.parameters.{pname}.num' must be >= 1")
            axes[pname] = ax
        if not 1 <= len(axes) <= 2:
            raise ConfigError("a sweep scans one or two parameters")
        sweep = {"parameters": axes, "workers": sweep.get("workers"), "fit": sweep.get("fit", True)}

    return ScenarioConfig(
        scenario=scenario,
        model=model,
        initial_state=state,
        integration=integration,
        analysis=analysis,
        output=output,
        name=name,
        sweep=sweep,
        source=copy.deepcopy(data),
    )


def bundled_configs() -> list[str]:
    root = resources.files("gaussent") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name: str | Path) -> ScenarioConfig:
    """Read a config file, or a bundled config by name (e.g. ``fig1_qbme``)."""
    path = Path(path_or_name)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        res = resources.files("gaussent") / "configs" / f"{path_or_name}.json"
        if not res.is_file():
            raise ConfigError(f"no config file or bundled config named '{path_or_name}'")
        text = res.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(data)
