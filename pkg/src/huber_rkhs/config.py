"""Experiment configuration: JSON file merged over centralized defaults.

The whole file is validated before any computation starts; unknown keys are
rejected with a :class:`ConfigError` naming the offending key path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

from .errors import ContractViolation, HuberRKHSError
from .scenario import scenario_from_dict

RATE_TARGET = {
    "family": "rkhs_element",
    "support": [[0.15], [0.4], [0.65], [0.9]],
    "coefficients": [0.8, -0.6, 0.7, -0.5],
}

DEFAULTS = {
    "base_seed": 0,
    "jobs": 1,
    "out": "results",
    "scenario": {
        "target": {"family": "sinusoid", "amplitude": 1.0, "frequency": 1.0},
        "marginal": {"family": "uniform_interval", "lo": 0.0, "hi": 1.0},
        "noise": {"family": "student_t", "dof": 2.5, "scale": 1.0, "epsilon": 1.0},
        "kernel": {"family": "gaussian", "bandwidth": 0.2},
        "probe_points": 1024,
    },
    "grid": {"nodes": 129, "inner_tolerance": 1e-10},
    "solver": {"tol_objective": 1e-10, "tol_gradient": None, "max_iterations": 500, "init": "ridge"},
    "fit": {"estimator": "huber", "sigma": 4.0, "lambda": 0.01, "n": 200},
    "compare": {"sigma": None, "lambda": None, "n": 800, "beta": 1.0, "q": 1.0, "eta": 1.0},
    "lemma1": {"sigma_grid": [2.0, 4.0, 8.0], "lambda_grid": [1e-3, 1e-2, 1e-1], "trials": 12, "n": 200},
    "thm2": {"sigma": 4.0, "lambda": 0.01, "delta": 0.2, "trials": 500, "n": 200},
    "prop1": {"sigma_grid": [2.0, 4.0, 8.0], "lambda_grid": [1e-3, 1e-2, 1e-1]},
    "thm1": {"lambda": 0.01, "sigma_grid": [2.0, 4.0, 8.0, 16.0, 32.0],
             "scenario": {"noise": {"family": "asym_two_exp", "epsilon": 1.0}}},
    "thm3": {"sigma_grid": [4.0, 8.0, 16.0, 32.0], "count": 200},
    "thm4": {"sigma_grid": [64.0, 128.0, 256.0, 512.0], "count": 100,
             "scenario": {"noise": {"family": "student_t", "dof": 2.0, "scale": 1.0, "epsilon": 0.5}}},
    "rates": {"n_grid": [200, 400, 800, 1600, 3200], "reps": 20, "beta": 1.0, "q": 1.0, "eta": 1.0,
              "sensitivity_reps": 0, "q_values": [0.5, 1.0, 2.0], "eta_values": [0.1, 1.0, 10.0],
              "scenario": {"target": RATE_TARGET,
                           "noise": {"family": "student_t", "dof": 1.5, "scale": 1.0, "epsilon": 0.4}}},
}

SECTIONS = ("fit", "compare", "lemma1", "thm2", "prop1", "thm1", "thm3", "thm4", "rates")
# keys every command section accepts on top of its own defaults
SECTION_EXTRAS = {"scenario", "epsilon"}
# scenario sub-dicts whose contents depend on "family"
_FAMILY_DICTS = {"target", "marginal", "noise", "kernel"}


class ConfigError(HuberRKHSError, ValueError):
    """Malformed or unknown configuration entry."""


def merge_scenario(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key 'scenario.{key}'")
        if key in _FAMILY_DICTS:
            if not isinstance(val, dict):
                raise ConfigError(f"config key 'scenario.{key}' must be an object")
            # switching family replaces the block, otherwise parameters merge
            base_block = base[key] if val.get("family", base[key].get("family")) == base[key].get("family") else {}
            out[key] = {**base_block, **val}
        else:
            out[key] = copy.deepcopy(val)
    return out


def _check_section(name, given, defaults):
    if not isinstance(given, dict):
        raise ConfigError(f"config key '{name}' must be an object")
    allowed = set(defaults) | (SECTION_EXTRAS if name in SECTIONS else set())
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{name}.{key}'")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @property
    def base_seed(self):
        return int(self.raw["base_seed"])

    @property
    def jobs(self):
        return int(self.raw["jobs"])

    @property
    def out(self):
        return self.raw["out"]

    def section(self, name):
        return {k: v for k, v in self.raw[name].items() if k != "scenario"}

    def scenario_dict(self, name=None):
        base = self.raw["scenario"]
        if name is None:
            return copy.deepcopy(base)
        return merge_scenario(base, self.raw[name].get("scenario", {}))

    def scenario(self, name=None):
        return scenario_from_dict(self.scenario_dict(name))

    def grid_options(self):
        return {"nodes": int(self.raw["grid"]["nodes"]),
                "inner_tolerance": float(self.raw["grid"]["inner_tolerance"])}

    def solver_options(self):
        s = self.raw["solver"]
        return {"tol_objective": s["tol_objective"], "tol_gradient": s["tol_gradient"],
                "max_iterations": int(s["max_iterations"]), "init": s["init"]}

    def snapshot(self, name):
        """Everything that determines the results of command ``name``."""
        return {"section": name, "section_config": self.section(name),
                "scenario": self.scenario_dict(name), "grid": self.raw["grid"],
                "solver": self.raw["solver"], "base_seed": self.base_seed}


_POSITIVE_INTS = {"n", "trials", "reps", "count", "nodes", "max_iterations", "probe_points"}
_NONNEGATIVE_INTS = {"sensitivity_reps"}
_POSITIVE_REALS = {"sigma", "lambda", "delta", "epsilon", "beta", "q", "eta", "inner_tolerance",
                   "tol_objective", "tol_gradient"}
_POSITIVE_LISTS = {"sigma_grid", "lambda_grid", "n_grid", "q_values", "eta_values"}


def _validate_values(merged):
    def bad(path, what):
        raise ConfigError(f"config key '{path}' must be {what}")

    for name, sec in merged.items():
        if not isinstance(sec, dict) or name == "scenario":
            continue
        for key, val in sec.items():
            path = f"{name}.{key}"
            if key in _POSITIVE_INTS | _NONNEGATIVE_INTS:
                low = 1 if key in _POSITIVE_INTS else 0
                if isinstance(val, bool) or not isinstance(val, int) or val < low:
                    bad(path, "a positive integer" if low else "a nonnegative integer")
            elif key in _POSITIVE_REALS and val is not None:
                if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
                    bad(path, "a positive number")
            elif key in _POSITIVE_LISTS:
                if not isinstance(val, list) or not val or any(
                        isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0 for v in val):
                    bad(path, "a nonempty list of positive numbers")


def load_config(data=None, seed=None, out=None, jobs=None):
    """Merge ``data`` (dict, or None for defaults) over :data:`DEFAULTS` and validate it.

    Every command section's scenario is built once here, so a malformed
    scenario is reported before any computation.
    """
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    merged = copy.deepcopy(DEFAULTS)
    for key, val in data.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key '{key}'")
        if key == "scenario":
            merged["scenario"] = merge_scenario(DEFAULTS["scenario"], val)
        elif isinstance(DEFAULTS[key], dict):
            _check_section(key, val, DEFAULTS[key])
            merged[key] = {**DEFAULTS[key], **copy.deepcopy(val)}
        else:
            merged[key] = val
    if seed is not None:
        merged["base_seed"] = seed
    if out is not None:
        merged["out"] = out
    if jobs is not None:
        merged["jobs"] = jobs
    if not isinstance(merged["base_seed"], int) or merged["base_seed"] < 0:
        raise ConfigError("config key 'base_seed' must be a nonnegative integer")
    if not isinstance(merged["jobs"], int) or merged["jobs"] < 1:
        raise ConfigError("config key 'jobs' must be a positive integer")
    _validate_values(merged)
    cfg = ExperimentConfig(merged)
    for name in (None, *SECTIONS):
        try:
            cfg.scenario(name)
        except (ContractViolation, KeyError, TypeError) as exc:
            where = "scenario" if name is None else f"{name}.scenario"
            raise ConfigError(f"invalid config key '{where}': {exc}") from exc
    return cfg


def load_config_file(path, **overrides):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return load_config(data, **overrides)
