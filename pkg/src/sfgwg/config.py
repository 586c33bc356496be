"""Run configuration: JSON ingestion, defaults, unit-suffix validation and round-trip."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

UNIT_SUFFIXES = ("_nm", "_um", "_mm", "_mW", "_uW", "_nW", "_C", "_K_per_W", "_per_m",
                 "_pm_per_V", "_dB_cm", "_dB_cm_per_W", "_per_W_m2")
# keys that are dimensionless or non-physical and therefore carry no unit suffix
UNITLESS_KEYS = {"material", "material_file", "profile", "depth_scale", "delta_n0_override",
                 "qpm_factor", "tuning_index_source", "loss_presets", "losses", "curve_samples",
                 "neff_table_nodes", "chain_in", "chain_out", "pump_chain", "mode_matching",
                 "facet_transmission", "output_dir", "solver_scheme", "export_mode_fields",
                 "dynamics_steps"}


def _default_pumps():
    return [float(p) for p in np.arange(0.0, 401.0, 10.0)]


@dataclass(frozen=True)
class RunConfig:
    """All inputs of a run. Length-type keys carry their unit in the name."""

    lambda_in_nm: float
    lambda_pump_nm: float
    material: str = "KTP"
    material_file: str = None
    profile: str = "rbktp-z"
    width_um: float = 2.0
    depth_um: float = 6.0
    depth_scale: float = None
    delta_n0_override: float = None
    grid_x_min_um: float = -14.5
    grid_x_max_um: float = 14.5
    grid_y_min_um: float = -1.5
    grid_y_max_um: float = 28.5
    grid_step_um: float = 0.05
    solver_scheme: str = "auto"
    export_mode_fields: bool = True
    period_um: float = 2.535
    length_mm: float = 9.6
    d_tensor_pm_per_V: float = 16.65
    qpm_factor: float = 2.0 / np.pi
    temperature_C: float = 20.0
    thermal_load_K_per_W: float = 13.8
    tuning_index_source: str = "bulk"
    neff_table_half_span_nm: float = 3.0
    neff_table_nodes: int = 5
    curve_half_span_nm: float = 1.0
    curve_samples: int = 401
    curve_temperatures_C: tuple = (20.0,)
    curve_pump_powers_mW: tuple = (0.0,)
    measured_fwhm_nm: float = 0.20
    kappa_override_per_m: float = None
    pump_powers_mW: tuple = field(default_factory=lambda: tuple(_default_pumps()))
    p_in_uW: float = 20.0
    loss_presets: tuple = ("estimated", "literature")
    losses: dict = None
    griira_dB_cm_per_W: float = 0.0
    dynamics_steps: int = 2000
    measured_p_in_uW: float = 22.1
    measured_p_out_nW: float = 980.0
    chain_in: dict = field(default_factory=lambda: {"incoupling_objective": 0.696})
    chain_out: dict = field(default_factory=lambda: {"outcoupling": 0.517, "filters": 0.627})
    pump_chain: dict = field(default_factory=lambda: {"incoupling_objective": 0.895})
    facet_transmission: float = None
    mode_matching: float = 0.507
    output_dir: str = "out"

    def __post_init__(self):
        positive = ["lambda_in_nm", "lambda_pump_nm", "width_um", "depth_um", "grid_step_um",
                    "period_um", "length_mm", "d_tensor_pm_per_V", "qpm_factor",
                    "neff_table_half_span_nm", "curve_half_span_nm", "measured_fwhm_nm",
                    "measured_p_in_uW", "mode_matching"]
        for name in positive:
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigurationError(f"config field '{name}' must be a positive number, got {v!r}")
        for name in ("p_in_uW", "thermal_load_K_per_W", "griira_dB_cm_per_W", "measured_p_out_nW"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"config field '{name}' must be >= 0")
        if self.depth_scale is not None and not self.depth_scale > 0:
            raise ConfigurationError("config field 'depth_scale' must be positive")
        if self.delta_n0_override is not None and self.delta_n0_override < 0:
            raise ConfigurationError("config field 'delta_n0_override' must be >= 0")
        if self.kappa_override_per_m is not None and not self.kappa_override_per_m >= 0:
            raise ConfigurationError("config field 'kappa_override_per_m' must be >= 0")
        if not (self.grid_x_max_um > self.grid_x_min_um and self.grid_y_max_um > self.grid_y_min_um):
            raise ConfigurationError("grid extents must be increasing")
        if self.neff_table_nodes < 5:
            raise ConfigurationError("config field 'neff_table_nodes' must be >= 5")
        if self.curve_samples < 3 or self.dynamics_steps < 1:
            raise ConfigurationError("curve_samples must be >= 3 and dynamics_steps >= 1")
        pumps = list(self.pump_powers_mW)
        if len(pumps) < 2 or any(b <= a for a, b in zip(pumps, pumps[1:])) or pumps[0] < 0:
            raise ConfigurationError("config field 'pump_powers_mW' must be a strictly increasing "
                                     "list of >= 2 non-negative values")
        for name in ("chain_in", "chain_out", "pump_chain"):
            for k, v in getattr(self, name).items():
                if not 0 < v <= 1:
                    raise ConfigurationError(f"config field '{name}.{k}' = {v} is not in (0, 1]")
        if self.facet_transmission is not None and not 0 < self.facet_transmission <= 1:
            raise ConfigurationError("config field 'facet_transmission' must be in (0, 1]")
        if not 0 < self.mode_matching <= 1:
            raise ConfigurationError("config field 'mode_matching' must be in (0, 1]")
        if self.tuning_index_source not in ("bulk", "effective"):
            raise ConfigurationError("config field 'tuning_index_source' must be 'bulk' or 'effective'")
        if self.solver_scheme not in ("auto", "quasi-tm", "scalar"):
            raise ConfigurationError("config field 'solver_scheme' must be auto, quasi-tm or scalar")
        if self.losses is None:
            from .dynamics import LOSS_PRESETS
            for p in self.loss_presets:
                if p not in LOSS_PRESETS:
                    raise ConfigurationError(f"unknown loss preset '{p}'")

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self):
        """sha256 of the canonical config, excluding where outputs are written."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def replace(self, **changes):
        return from_dict({**self.to_dict(), **changes})


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TUPLE_FIELDS = {"curve_temperatures_C", "curve_pump_powers_mW", "pump_powers_mW", "loss_presets"}


def _check_key(key):
    if key in _FIELDS:
        return
    if key in UNITLESS_KEYS or key.endswith(UNIT_SUFFIXES):
        raise ConfigurationError(f"unknown config key '{key}'")
    raise ConfigurationError(
        f"config key '{key}' is not recognised; physical keys need a unit suffix "
        f"({', '.join(s for s in UNIT_SUFFIXES[:7])}, ...)")


def from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a JSON object")
    kwargs = {}
    for key, value in doc.items():
        _check_key(key)
        if key in _TUPLE_FIELDS and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigurationError(f"config field '{key}' must be a list")
            value = tuple(value)
        kwargs[key] = value
    for required in ("lambda_in_nm", "lambda_pump_nm"):
        if required not in kwargs:
            raise ConfigurationError(f"config field '{required}' is required")
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc


def load_config(path):
    """Parse and validate a JSON run configuration."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_dict(doc)


def parse_override(text):
    """``key=value`` with the value parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigurationError(f"override '{text}' is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(config, overrides):
    doc = config.to_dict()
    for item in overrides:
        key, value = parse_override(item)
        _check_key(key)
        doc[key] = value
    return from_dict(doc)
