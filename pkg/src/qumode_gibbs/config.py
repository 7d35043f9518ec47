"""Experiment configuration: typed defaults, INI files and ``key=value`` overrides.

Grid values accept comma lists (``1,2,3``), inclusive arithmetic ranges
(``2:20:2``), ``lin:a:b:n`` and ``geom:a:b:n``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .models import ModelSpec

OUT_ENV = "QUMODE_GIBBS_OUT"
RUN_SECTION = "run"


def parse_grid(text: str, kind=float) -> tuple:
    text = text.strip()
    try:
        if text.startswith(("lin:", "geom:")):
            name, a, b, n = text.split(":")
            fn = np.linspace if name == "lin" else np.geomspace
            values = fn(float(a), float(b), int(n))
        elif text.count(":") == 2:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError("range needs a <= b and step > 0")
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            values = np.round(a + step * np.arange(n), 12)
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc
    if len(values) == 0:
        raise ConfigError(f"grid {text!r} is empty")
    if kind is int:
        if any(float(v) != int(v) for v in values):
            raise ConfigError(f"grid {text!r} must contain integers")
        return tuple(int(v) for v in values)
    return tuple(float(v) for v in values)


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    return str(value)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _cutoff(text: str):
    low = text.strip().lower()
    if low == "auto":
        return "auto"
    if low in ("none", "untruncated"):
        return None
    return int(low)


def _model(text: str) -> str:
    return str(ModelSpec.parse(text))


PARSERS = {
    "float": float,
    "int": int,
    "bool": _bool,
    "str": str,
    "floats": lambda t: parse_grid(t, float),
    "ints": lambda t: parse_grid(t, int),
    "cutoff": _cutoff,
    "model": _model,
}

# experiment -> key -> (parser name, default)
SCHEMAS: dict[str, dict[str, tuple[str, object]]] = {
    "single-qubit": {
        "model": ("model", "single:g=1,c=1"),
        "betas": ("floats", (1.0, 2.0, 3.0)),
        "s_grid": ("floats", tuple(float(s) for s in range(2, 21, 2))),
        "adaptive_beta_resource": ("float", 1.0),
        "n_c": ("int", 35),
        "cutoff": ("cutoff", "auto"),
    },
    "phase-diagram": {
        "ising_L": ("ints", (10, 20, 80)),
        "kitaev_L": ("ints", (2, 3, 4, 5, 6)),
        "include_limit": ("bool", True),
        "J": ("float", 1.0),
        "lambdas": ("floats", parse_grid("0.6:1.4:0.05")),
        "temps": ("floats", parse_grid("geom:0.005:4:160")),
        "delta_h": ("float", 1e-4),
    },
    "crossover-tqs": {
        "model": ("model", "kitaev:L=2,J=1"),
        "n_c_sweep": ("ints", (3, 7, 15, 35)),
        "L_sweep": ("ints", (2, 3, 4, 5)),
        "n_c": ("int", 35),
        "beta_resource": ("float", 4.0),
        "s": ("float", 10.0),
        "lambdas": ("floats", parse_grid("0.6:1.4:0.05")),
        "temps": ("floats", parse_grid("geom:0.005:4:160")),
        "delta_h": ("float", 1e-4),
        "cutoff": ("cutoff", "auto"),
    },
    "free-energy": {
        "model": ("model", "kitaev:L=2,J=1"),
        "n_c": ("int", 35),
        "beta_resource": ("float", 1.0),
        "s": ("float", 10.0),
        "T_fixed": ("float", 0.4),
        "lambdas": ("floats", parse_grid("0:2:0.1")),
        "lambda_fixed": ("float", 1.0),
        "temps": ("floats", parse_grid("0.2:2:0.2")),
        "s_grid": ("floats", (2.0, 4.0, 6.0, 8.0, 10.0)),
        "cutoff": ("cutoff", "auto"),
    },
    "error-scaling": {
        "model": ("model", "single:g=1,c=1"),
        "betas": ("floats", (1.0, 2.0, 3.0)),
        "s_grid": ("floats", (5.0, 10.0, 20.0, 40.0)),
        "adaptive_beta_resource": ("float", 1.0),
        "n_c": ("int", 35),
        "cutoff": ("cutoff", "auto"),
        "energy_offset": ("float", 0.0),
        "slope_target": ("float", -2.0),
        "slope_tol": ("float", 0.15),
    },
    "check-circuits": {
        "kitaev_L": ("ints", (2, 3, 4)),
        "ising_L": ("ints", (3,)),
        "include_single": ("bool", True),
        "theta": ("float", 0.37),
        "fock_cutoff": ("int", 12),
        "tolerance": ("float", 1e-10),
    },
}

EXPERIMENTS = tuple(SCHEMAS)


@dataclass
class ExperimentConfig:
    """Fully resolved, validated parameters for one experiment run."""

    experiment: str
    values: dict
    out_dir: str
    workers: int
    sources: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def header_lines(self) -> list[str]:
        lines = [f"experiment = {self.experiment}"]
        lines += [f"{k} = {_format(self.values[k])}" for k in sorted(self.values)]
        return lines

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values.items()}


def _coerce(experiment: str, key: str, text: str):
    schema = SCHEMAS[experiment]
    if key not in schema:
        raise ConfigError(
            f"unknown key {key!r} for {experiment}; expected one of {sorted(schema)}"
        )
    kind, _ = schema[key]
    try:
        return PARSERS[kind](text)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value {text!r} for {key}: {exc}") from exc


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def load_config(
    experiment: str,
    config_file: str | None = None,
    overrides: list[str] | tuple[str, ...] = (),
    out_dir: str | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Defaults, then the file's ``[run]`` and ``[<experiment>]`` sections, then overrides."""
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    values = {k: default for k, (_, default) in SCHEMAS[experiment].items()}
    sources = {k: "default" for k in values}
    run = {"out": None, "workers": None}

    if config_file is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(config_file, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from exc
        for section in parser.sections():
            if section == RUN_SECTION:
                for key, text in parser.items(section):
                    if key not in run:
                        raise ConfigError(f"unknown key {key!r} in [run]; expected out or workers")
                    run[key] = text
            elif section in SCHEMAS:
                # validate every known section so one file can drive all experiments
                for key, text in parser.items(section):
                    value = _coerce(section, key, text)
                    if section == experiment:
                        values[key] = value
                        sources[key] = config_file
            else:
                raise ConfigError(f"unknown section [{section}] in {config_file}")

    for item in overrides:
        key, eq, text = item.partition("=")
        if not eq:
            raise ConfigError(f"override {item!r} is not key=value")
        key = key.strip()
        values[key] = _coerce(experiment, key, text)
        sources[key] = "command line"

    if workers is None and run["workers"] is not None:
        try:
            workers = int(run["workers"])
        except ValueError as exc:
            raise ConfigError(f"workers must be an integer, got {run['workers']!r}") from exc
    if workers is None:
        workers = default_workers()
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    out = out_dir or run["out"] or os.environ.get(OUT_ENV) or "results"
    _validate(experiment, values)
    return ExperimentConfig(experiment, values, out, workers, sources)


def _validate(experiment: str, values: dict) -> None:
    for key, value in values.items():
        if isinstance(value, tuple) and key in ("betas", "s_grid", "temps"):
            if any(not v > 0 for v in value):
                raise ConfigError(f"{key} must be positive")
        if key in ("n_c", "n_c_sweep"):
            vals = value if isinstance(value, tuple) else (value,)
            if any(v < 1 for v in vals):
                raise ConfigError(f"{key} must be >= 1")
    for key in ("s", "beta_resource", "adaptive_beta_resource", "T_fixed", "delta_h"):
        if key in values and not values[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if experiment in ("phase-diagram", "crossover-tqs"):
        if len(values["temps"]) < 3:
            raise ConfigError("temperature grid needs at least three points")
        if list(values["temps"]) != sorted(set(values["temps"])):
            raise ConfigError("temperature grid must be strictly increasing")
        if list(values["lambdas"]) != sorted(set(values["lambdas"])):
            raise ConfigError("lambda grid must be strictly increasing")
    if experiment == "phase-diagram":
        if any(L < 3 for L in values["ising_L"]):
            raise ConfigError("Ising rings need L >= 3")
        if any(L < 2 for L in values["kitaev_L"]):
            raise ConfigError("Kitaev rings need L >= 2")
