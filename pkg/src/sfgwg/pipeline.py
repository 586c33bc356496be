"""Command orchestration: config → modes → phasematching → dynamics → artifacts."""

import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coupling, dynamics, qpm
from .errors import ConfigurationError, SfgError
from .grid import Grid
from .materials import (ExchangeDispersion, ExchangeIndexProfile, build_index_map,
                        default_library, load_material_library)
from .modes import (boundary_ratio, count_guided_modes, field_fwhm, fundamental_mode,
                    mode_csv_text, solve_modes)

COMMANDS = ("modes", "qpm", "curve", "dynamics", "report")
WAVE_LABELS = {"in": "input", "pump": "pump", "out": "output"}

SATURATION_NOTE = {
    "region": {"P_pump_mW_min": 200.0},
    "note": "measured conversion saturates above about 200 mW internal pump power; "
            "the coupled-amplitude model does not include this effect and diverges from the data there",
}


def _q(value, unit):
    return {"value": value, "unit": unit}


@dataclass
class RunReport:
    """Derived quantities with units, provenance and the artifacts to emit."""

    command: str
    quantities: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    annotations: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)   # relative path → text content
    manifest: list = field(default_factory=list)

    def add(self, name, value, unit):
        if name in self.quantities:
            raise ConfigurationError(f"quantity '{name}' reported twice")
        self.quantities[name] = _q(value, unit)

    def value(self, name):
        return self.quantities[name]["value"]

    def merge(self, other):
        for k, v in other.quantities.items():
            if k not in self.quantities:
                self.quantities[k] = v
        self.artifacts.update(other.artifacts)
        for a in other.annotations:
            if a not in self.annotations:
                self.annotations.append(a)

    def to_dict(self):
        return {"command": self.command, "quantities": self.quantities,
                "provenance": self.provenance, "annotations": self.annotations,
                "manifest": self.manifest}

    def to_json(self):
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class Design:
    """Waveguide model assembled from a RunConfig, with memoised eigensolves."""

    def __init__(self, config):
        self.config = config
        self.library = (load_material_library(config.material_file) if config.material_file
                        else default_library())
        self.material = self.library.material(config.material)
        base = self.library.profile(config.profile, width_um=config.width_um,
                                    depth_um=config.depth_um, depth_scale=config.depth_scale)
        if config.delta_n0_override is not None:
            base = ExchangeIndexProfile(ExchangeDispersion.constant(config.delta_n0_override),
                                        base.width_um, base.depth_um, base.depth_scale)
        self.profile = base
        self.grid = Grid.from_step(config.grid_x_min_um, config.grid_x_max_um,
                                   config.grid_y_min_um, config.grid_y_max_um, config.grid_step_um)
        self.spec = qpm.ProcessSpec(config.lambda_in_nm, config.lambda_pump_nm,
                                    length_mm=config.length_mm, period_um=config.period_um,
                                    d_tensor_pm_per_V=config.d_tensor_pm_per_V,
                                    qpm_factor=config.qpm_factor)
        self.tuning = qpm.TuningModel(config.thermal_load_K_per_W, config.temperature_C, 0.0,
                                      config.lambda_in_nm, config.tuning_index_source)
        self._fund = {}

    def index_map(self, wavelength_nm, temperature_c=None):
        t = self.config.temperature_C if temperature_c is None else temperature_c
        return build_index_map(self.profile, wavelength_nm, t, self.grid, "z", self.material)

    def fundamental(self, wavelength_nm):
        key = round(float(wavelength_nm), 9)
        if key not in self._fund:
            self._fund[key] = fundamental_mode(self.index_map(wavelength_nm),
                                               self.config.solver_scheme)
        return self._fund[key]

    def fundamentals(self):
        return [self.fundamental(lam) for lam in self.spec.wavelengths]

    def neff_tables(self):
        """Effective-index tables around the input and matching output wavelengths."""
        c = self.config
        nodes_in = c.lambda_in_nm + np.linspace(-c.neff_table_half_span_nm,
                                                c.neff_table_half_span_nm, c.neff_table_nodes)
        nodes_out = np.array([qpm.energy_matched_output(v, c.lambda_pump_nm) for v in nodes_in])
        t = c.temperature_C
        tables = {
            "in": qpm.DispersionTable(tuple(nodes_in), tuple(self.fundamental(v).n_eff for v in nodes_in),
                                      t, "z", self.material),
            "pump": qpm.DispersionTable((c.lambda_pump_nm,), (self.fundamental(c.lambda_pump_nm).n_eff,),
                                        t, "z", self.material),
            "out": qpm.DispersionTable(tuple(nodes_out),
                                       tuple(self.fundamental(v).n_eff for v in nodes_out),
                                       t, "z", self.material),
        }
        return qpm.IndexSet(tables)

    def tuning_indices(self):
        if self.tuning.index_source == "bulk":
            return qpm.IndexSet.bulk("z", self.material)
        return self.neff_tables()

    def overlap(self):
        m = self.fundamentals()
        return coupling.OverlapResult.from_modes(*m, self.spec.d_eff_pm_per_V,
                                                 coupling.crystal_region(self.grid))

    def eta_nor_for_dynamics(self):
        """η_nor from the configured κ̃ override when given, else from the modelled overlap."""
        ov = self.overlap()
        if self.config.kappa_override_per_m is None:
            return ov.eta_nor_per_W_m2, "mode-solver overlap"
        eta = coupling.normalized_efficiency(self.config.kappa_override_per_m,
                                             self.spec.d_eff_pm_per_V, *ov.n_eff,
                                             self.spec.lambda_in_nm, self.spec.lambda_out_nm)
        return eta, "kappa_override_per_m"


# -- commands -------------------------------------------------------------------

def _cmd_modes(design, report):
    c = design.config
    for wave, lam in zip(qpm.WAVES, design.spec.wavelengths):
        label = WAVE_LABELS[wave]
        imap = design.index_map(lam)
        count = count_guided_modes(imap, c.solver_scheme)
        report.add(f"mode_count_{label}", count, "1")
        if count == 0:
            continue
        m = solve_modes(imap, 1, c.solver_scheme)[0]
        design._fund[round(float(lam), 9)] = m
        wx, wy = field_fwhm(m)
        report.add(f"n_eff_{label}", m.n_eff, "1")
        report.add(f"mode_fwhm_lateral_{label}", wx, "um")
        report.add(f"mode_fwhm_depth_{label}", wy, "um")
        report.add(f"mode_boundary_ratio_{label}", boundary_ratio(m), "1")
        if c.export_mode_fields:
            report.artifacts[f"mode_{label}.csv"] = mode_csv_text(m)
    if report.quantities.get("mode_count_input", {}).get("value"):
        fit = coupling.optimize_gaussian_coupling(design.fundamental(c.lambda_in_nm))
        report.add("gaussian_coupling_input", fit.efficiency, "1")
        report.add("gaussian_waist_x_input", fit.waist_x_um, "um")
        report.add("gaussian_waist_y_input", fit.waist_y_um, "um")
    return report


def _cmd_qpm(design, report):
    c = design.config
    spec = design.spec
    m_in, m_pump, m_out = design.fundamentals()
    period = qpm.solve_poling_period(m_in.n_eff, m_pump.n_eff, m_out.n_eff, spec.wavelengths)
    report.add("poling_period_theory", period, "um")
    ov = design.overlap()
    report.add("kappa_model", ov.kappa_per_m, "1/m")
    report.add("eta_nor_model", ov.eta_nor_per_W_m2, "1/(W m^2)")
    report.add("P_complete_model", dynamics.complete_conversion_power(ov.eta_nor_per_W_m2,
                                                                      spec.length_mm), "mW")
    if c.kappa_override_per_m is not None:
        eta, _ = design.eta_nor_for_dynamics()
        report.add("kappa_configured", c.kappa_override_per_m, "1/m")
        report.add("eta_nor_configured", eta, "1/(W m^2)")
        report.add("P_complete_configured", dynamics.complete_conversion_power(eta, spec.length_mm), "mW")
    tables = design.neff_tables()
    curve = _curve(design, tables, c.temperature_C, 0.0)
    report.add("phasematching_fwhm", curve.fwhm_nm, "nm")
    report.add("phasematched_lambda_in", curve.peak_lambda_nm, "nm")
    report.add("effective_length", qpm.effective_length_from_fwhm(
        c.measured_fwhm_nm, curve.fwhm_nm, spec.length_mm), "mm")
    slopes = qpm.tuning_slopes(spec, design.tuning, design.tuning_indices())
    report.add("tuning_slope_temperature", slopes.per_K_nm, "nm/K")
    report.add("tuning_slope_pump", slopes.per_mW_pm, "pm/mW")
    report.add("tuning_composition_error", slopes.composition_error(c.thermal_load_K_per_W), "1")
    report.add("tuning_curvature_ratio", slopes.curvature_ratio, "1")
    report.provenance["tuning_index_source"] = design.tuning.index_source
    return report


def _curve(design, tables, temperature_c, pump_mW):
    c = design.config
    # locate the root on the table span first, then centre the sampled span on it
    t_eff = design.tuning.effective_temperature(temperature_c, pump_mW)
    lo, hi = tables["in"].wavelengths_nm[0], tables["in"].wavelengths_nm[-1]
    root = qpm._root(lambda v: qpm.process_delta_beta(design.spec, tables, v, t_eff), lo, hi,
                     qpm.BracketingError(f"no phasematching inside the tabulated span [{lo}, {hi}] nm"))
    span = (max(lo, root - c.curve_half_span_nm), min(hi, root + c.curve_half_span_nm))
    return qpm.phasematching_curve(design.spec, tables, temperature_c, pump_mW, span,
                                   c.curve_samples, design.tuning)


def _cmd_curve(design, report):
    c = design.config
    tables = design.neff_tables()
    for t in c.curve_temperatures_C:
        for p in c.curve_pump_powers_mW:
            curve = _curve(design, tables, float(t), float(p))
            stem = f"phasematching_T{float(t):g}C_P{float(p):g}mW"
            report.artifacts[f"{stem}.csv"] = curve.to_csv()
            report.artifacts[f"{stem}.json"] = curve.sidecar_json()
            report.add(f"fwhm_{stem}", curve.fwhm_nm, "nm")
            report.add(f"peak_{stem}", curve.peak_lambda_nm, "nm")
    return report


def _loss_models(config):
    if config.losses is not None:
        models = [dynamics.LossModel(label="custom", **{**config.losses})]
    else:
        models = [dynamics.loss_preset(p) for p in config.loss_presets]
    if config.griira_dB_cm_per_W:
        models = [dynamics.LossModel(m.alpha_pump_dB_cm, m.alpha_in_dB_cm, m.alpha_out_dB_cm,
                                     config.griira_dB_cm_per_W, m.label + "+griira")
                  for m in models]
    return models


def _cmd_dynamics(design, report):
    c = design.config
    spec = design.spec
    eta, source = design.eta_nor_for_dynamics()
    report.add("eta_nor_dynamics", eta, "1/(W m^2)")
    report.provenance["eta_nor_source"] = source
    report.add("P_complete_dynamics", dynamics.complete_conversion_power(eta, spec.length_mm), "mW")
    n_pump = design.fundamental(spec.lambda_pump_nm).n_eff
    objective = coupling.TransmissionChain(c.pump_chain).product
    facet = coupling.fresnel_transmission(n_pump)
    conventions = {"objective_only": objective, "objective_and_facet": objective * facet}
    for name, factor in conventions.items():
        report.add(f"pump_chain_{name}", factor, "1")
    for losses in _loss_models(c):
        curve = dynamics.efficiency_vs_pump(c.pump_powers_mW, spec, eta, losses, c.p_in_uW,
                                            c.dynamics_steps)
        side = curve.sidecar()
        side["external_pump_factor"] = conventions
        stem = f"efficiency_{losses.label}"
        report.artifacts[f"{stem}.csv"] = curve.to_csv()
        report.artifacts[f"{stem}.json"] = json.dumps(side, indent=2, sort_keys=True) + "\n"
        report.add(f"peak_depletion_{losses.label}", float(curve.eta_depletion.max()), "1")
        report.add(f"peak_depletion_pump_{losses.label}",
                   float(curve.pump_mW[int(np.argmax(curve.eta_depletion))]), "mW")
        report.add(f"conversion_at_max_pump_{losses.label}", float(curve.eta_conversion[-1]), "1")
    if max(c.pump_powers_mW) > SATURATION_NOTE["region"]["P_pump_mW_min"]:
        report.annotations.append(SATURATION_NOTE)
    # efficiency accounting of the measured operating point
    n_in = design.fundamental(spec.lambda_in_nm).n_eff
    facet_in = (c.facet_transmission if c.facet_transmission is not None
                else coupling.fresnel_transmission(n_in))
    acc = coupling.accounting_report(c.measured_p_in_uW, c.measured_p_out_nW, spec.lambda_in_nm,
                                     spec.lambda_out_nm, coupling.TransmissionChain(c.chain_in),
                                     coupling.TransmissionChain(c.chain_out), facet_in,
                                     c.mode_matching)
    report.artifacts["efficiency_accounting.json"] = coupling.accounting_json(_clean(acc))
    report.add("eta_external", acc["eta_external"], "1")
    report.add("eta_internal", acc["eta_internal"], "1")
    report.add("facet_transmission_input", facet_in, "1")
    return report


_DISPATCH = {"modes": _cmd_modes, "qpm": _cmd_qpm, "curve": _cmd_curve, "dynamics": _cmd_dynamics}


def run_command(cmd, config, design=None):
    """Run one command (or ``report`` for all of them) and return its RunReport."""
    if cmd not in COMMANDS:
        raise ConfigurationError(f"unknown command '{cmd}', expected one of {COMMANDS}")
    report = RunReport(cmd)
    try:
        design = design or Design(config)
        report.provenance = {"config_sha256": config.digest(),
                             "material_data_version": design.library.version,
                             "material_data_source": design.library.source}
        if cmd == "report":
            for sub in ("modes", "qpm", "curve", "dynamics"):
                _DISPATCH[sub](design, report)
        else:
            _DISPATCH[cmd](design, report)
    except SfgError as exc:
        exc.command = cmd
        raise
    return report


def emit_artifacts(report, directory):
    """Write artifacts and ``report.json``; return the manifest of written files.

    Files are first written to a temporary directory next to the target and
    moved into place only when every write succeeded.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = sorted(report.artifacts)
    manifest = [{"path": n, "sha256": hashlib.sha256(report.artifacts[n].encode()).hexdigest()}
                for n in names]
    report.manifest = manifest
    report_text = report.to_json()
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=directory))
    try:
        for n in names:
            with open(staging / n, "w", newline="\n") as fh:
                fh.write(report.artifacts[n])
        with open(staging / "report.json", "w", newline="\n") as fh:
            fh.write(report_text)
        for n in names + ["report.json"]:
            os.replace(staging / n, directory / n)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return manifest + [{"path": "report.json",
                        "sha256": hashlib.sha256(report_text.encode()).hexdigest()}]
