"""Scenario and sweep configuration: schemas, loading, and the built-in
catalog of dynamical regimes.

Configuration files are JSON, validated against explicit schemas before
any numerics run; validation failures carry the offending path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import jsonschema

from .engine import Cohort, SolverSettings
from .errors import ConfigurationError
from .model import ModelParams, TumorState

__all__ = [
    "Scenario",
    "SweepSpec",
    "catalog",
    "load_scenario",
    "load_sweep",
    "scenario_to_dict",
]

_PARAM_NAMES = ("b", "e", "k", "m", "alpha", "V0", "K0", "Vm")
_SETTING_NAMES = ("dt", "t_end", "sample_every", "weight_floor")
_OUTPUT_KINDS = ("timeseries", "histogram", "metrics", "plots")

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9._-]+$"},
        "params": {
            "type": "object",
            "properties": {name: {"type": "number"} for name in _PARAM_NAMES},
            "additionalProperties": False,
        },
        "settings": {
            "type": "object",
            "properties": {name: {"type": "number"} for name in _SETTING_NAMES},
            "additionalProperties": False,
        },
        "initial_cohorts": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "birth_time": {"type": "number"},
                    "weight": {"type": "number"},
                    "V": {"type": "number"},
                    "K": {"type": "number"},
                },
                "required": ["weight", "V", "K"],
                "additionalProperties": False,
            },
        },
        "outputs": {
            "type": "array",
            "items": {"enum": list(_OUTPUT_KINDS)},
            "uniqueItems": True,
        },
        "transient": {"type": ["number", "null"]},
        "log_scale": {"type": "boolean"},
        "n_bins": {"type": "integer", "minimum": 1},
    },
    "required": ["name"],
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "base": {"anyOf": [{"type": "string"}, SCENARIO_SCHEMA]},
        "axis": {"enum": list(_PARAM_NAMES)},
        "values": {
            "anyOf": [
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
                {
                    "type": "object",
                    "properties": {
                        "from": {"type": "number", "exclusiveMinimum": 0},
                        "to": {"type": "number", "exclusiveMinimum": 0},
                        "count": {"type": "integer", "minimum": 2},
                    },
                    "required": ["from", "to", "count"],
                    "additionalProperties": False,
                },
            ]
        },
        "parallelism": {"type": "integer", "minimum": 1},
    },
    "required": ["base", "axis", "values"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Scenario:
    """One named, fully-resolved simulation configuration.

    ``transient`` is the analysis-window start for oscillation metrics;
    None resolves to a quarter of the horizon. ``log_scale`` requests
    logarithmic y-axes on the plots.
    """

    name: str
    params: ModelParams = field(default_factory=ModelParams)
    settings: SolverSettings = field(default_factory=SolverSettings)
    initial_cohorts: tuple[Cohort, ...] = ()
    outputs: tuple[str, ...] = _OUTPUT_KINDS
    transient: float | None = None
    log_scale: bool = False
    n_bins: int = 40

    @property
    def resolved_transient(self) -> float:
        if self.transient is not None:
            return self.transient
        return 0.25 * self.settings.t_end


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter family of runs derived from a base scenario."""

    base: Scenario
    axis: str
    values: tuple[float, ...]
    parallelism: int = 1

    def __post_init__(self):
        if self.axis not in _PARAM_NAMES:
            raise ConfigurationError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ConfigurationError("sweep needs at least one value")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be >= 1")

    def scenarios(self) -> list[Scenario]:
        out = []
        for value in self.values:
            params = replace(self.base.params, **{self.axis: value})
            if self.axis == "V0" and self.base.params.Vm == self.base.params.V0:
                # a swept V0 drags a defaulted Vm along with it
                params = replace(params, Vm=value)
            out.append(
                replace(
                    self.base,
                    name=f"{self.base.name}_{self.axis}={value:g}",
                    params=params,
                )
            )
        return out


def _validate(instance: dict, schema: dict, what: str):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid {what} at {exc.json_path}: {exc.message}") from exc


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a Scenario from validated JSON data."""
    _validate(raw, SCENARIO_SCHEMA, "scenario")
    try:
        params = ModelParams(**raw.get("params", {}))
        settings = SolverSettings(**raw.get("settings", {}))
        cohorts = tuple(
            Cohort(
                birth_time=c.get("birth_time", 0.0),
                weight=c["weight"],
                state=TumorState(V=c["V"], K=c["K"]),
            )
            for c in raw.get("initial_cohorts", ())
        )
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError(f"invalid scenario content: {exc}") from exc
    return Scenario(
        name=raw["name"],
        params=params,
        settings=settings,
        initial_cohorts=cohorts,
        outputs=tuple(raw.get("outputs", _OUTPUT_KINDS)),
        transient=raw.get("transient"),
        log_scale=raw.get("log_scale", False),
        n_bins=raw.get("n_bins", 40),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    """Serialize a Scenario to its JSON file form (round-trips)."""
    p = sc.params
    s = sc.settings
    out = {
        "name": sc.name,
        "params": {name: getattr(p, name) for name in _PARAM_NAMES},
        "settings": {name: getattr(s, name) for name in _SETTING_NAMES},
        "outputs": list(sc.outputs),
        "transient": sc.transient,
        "log_scale": sc.log_scale,
        "n_bins": sc.n_bins,
    }
    if sc.initial_cohorts:
        out["initial_cohorts"] = [
            {
                "birth_time": c.birth_time,
                "weight": c.weight,
                "V": c.state.V,
                "K": c.state.K,
            }
            for c in sc.initial_cohorts
        ]
    return out


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: scenario file must hold a JSON object")
    return scenario_from_dict(raw)


def load_sweep(path: str) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: sweep file must hold a JSON object")
    _validate(raw, SWEEP_SCHEMA, "sweep")

    base_raw = raw["base"]
    if isinstance(base_raw, str):
        by_name = {sc.name: sc for sc in catalog()}
        if base_raw not in by_name:
            raise ConfigurationError(
                f"unknown base scenario {base_raw!r}; catalog has: {', '.join(sorted(by_name))}"
            )
        base = by_name[base_raw]
    else:
        base = scenario_from_dict(base_raw)

    values_raw = raw["values"]
    if isinstance(values_raw, dict):
        import numpy as np

        values = tuple(
            float(v)
            for v in np.geomspace(values_raw["from"], values_raw["to"], values_raw["count"])
        )
    else:
        values = tuple(float(v) for v in values_raw)

    return SweepSpec(
        base=base,
        axis=raw["axis"],
        values=values,
        parallelism=raw.get("parallelism", 1),
    )


def catalog() -> list[Scenario]:
    """Built-in scenarios covering every reported dynamical regime.

    The linear scenario runs on a shorter horizon: its population grows
    exponentially forever, and a horizon of 20 keeps cumulative counts
    small enough that the conservation identity stays meaningful at
    float precision.
    """
    base = Scenario(name="base")
    long_settings = replace(base.settings, t_end=1000.0)
    return [
        base,
        replace(
            base,
            name="linear",
            params=ModelParams(e=0.0),
            settings=replace(base.settings, t_end=20.0),
        ),
        replace(base, name="b-x10", params=ModelParams(b=10.0)),
        replace(base, name="m-x10", params=ModelParams(m=10.0)),
        replace(base, name="e-x10", params=ModelParams(e=10.0)),
        replace(base, name="b-x0.1", params=ModelParams(b=0.1)),
        replace(base, name="m-x0.1", params=ModelParams(m=0.1)),
        replace(base, name="e-x0.1", params=ModelParams(e=0.1)),
        replace(base, name="bursts", params=ModelParams(m=10.0, k=0.1)),
        replace(
            base,
            name="bursts-long",
            params=ModelParams(m=10.0, k=0.1),
            settings=long_settings,
            log_scale=True,
        ),
        replace(base, name="complex-periodic", params=ModelParams(m=0.1, k=0.1, e=0.02)),
        replace(base, name="deep-seed", params=ModelParams(V0=1e-4, K0=1e-3)),
    ]
