"""Quasi-phasematching: poling period, sinc² acceptance and thermal tuning.

Wavelengths are vacuum wavelengths in nm, periods in µm, lengths in mm,
temperatures in °C and pump powers in mW. Propagation-constant mismatches
are returned in rad/m.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (BracketingError, ConfigurationError, ContractViolation,
                     NoPhasematchError, TuningRangeError)
from .materials import bulk_index, default_material, thermo_optic_coefficient

ENERGY_TOL = 1e-12      # nm⁻¹
ROOT_TOL = 1e-3         # rad/m
WAVES = ("in", "pump", "out")


def energy_matched_output(lambda_in_nm, lambda_pump_nm):
    """Sum-frequency wavelength from 1/λ_out = 1/λ_in + 1/λ_pump."""
    if lambda_in_nm <= 0 or lambda_pump_nm <= 0:
        raise ConfigurationError("wavelengths must be positive")
    return 1.0 / (1.0 / lambda_in_nm + 1.0 / lambda_pump_nm)


def energy_residual(lambda_in_nm, lambda_pump_nm, lambda_out_nm):
    return abs(1.0 / lambda_out_nm - 1.0 / lambda_in_nm - 1.0 / lambda_pump_nm)


@dataclass(frozen=True)
class ProcessSpec:
    """Wavelength triple, grating and nonlinearity of a type-0 SFG device.

    The effective nonlinearity is kept as the tensor element times the
    first-order QPM reduction so both factors stay visible.
    """

    lambda_in_nm: float = 1311.0
    lambda_pump_nm: float = 514.5
    lambda_out_nm: float = None
    length_mm: float = 9.6
    period_um: float = 2.535
    d_tensor_pm_per_V: float = 16.65
    qpm_factor: float = 2.0 / np.pi
    polarization: str = "zzz"

    def __post_init__(self):
        for name in ("lambda_in_nm", "lambda_pump_nm", "length_mm", "period_um",
                     "d_tensor_pm_per_V", "qpm_factor"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lambda_out_nm is None:
            object.__setattr__(self, "lambda_out_nm",
                               energy_matched_output(self.lambda_in_nm, self.lambda_pump_nm))
        elif energy_residual(self.lambda_in_nm, self.lambda_pump_nm, self.lambda_out_nm) > ENERGY_TOL:
            raise ContractViolation(
                f"wavelength triple ({self.lambda_in_nm}, {self.lambda_pump_nm}, "
                f"{self.lambda_out_nm}) nm violates energy conservation"
            )

    @property
    def d_eff_pm_per_V(self):
        return self.d_tensor_pm_per_V * self.qpm_factor

    @property
    def wavelengths(self):
        return (self.lambda_in_nm, self.lambda_pump_nm, self.lambda_out_nm)

    def with_input(self, lambda_in_nm):
        """Same device and pump, new input; the output follows energy conservation."""
        return replace(self, lambda_in_nm=float(lambda_in_nm), lambda_out_nm=None)


@dataclass(frozen=True)
class TuningModel:
    """Pump heating ``T_eff = T + k·(P − P_ref)`` and the Δβ = 0 reference point.

    `index_source` selects the indices whose temperature dependence drives
    tuning: ``"bulk"`` (bulk KTP with thermo-optic correction) or
    ``"effective"`` (mode-solver effective indices plus the same bulk
    thermo-optic shift).
    """

    thermal_load_K_per_W: float = 13.8
    reference_temperature_c: float = 20.0
    reference_pump_mW: float = 0.0
    reference_lambda_in_nm: float = 1311.0
    index_source: str = "bulk"

    def __post_init__(self):
        if self.thermal_load_K_per_W < 0:
            raise ConfigurationError("thermal-load coefficient must be >= 0")
        if self.index_source not in ("bulk", "effective"):
            raise ConfigurationError("index_source must be 'bulk' or 'effective'")

    def effective_temperature(self, temperature_c, pump_mW):
        return temperature_c + self.thermal_load_K_per_W * (pump_mW - self.reference_pump_mW) * 1e-3


# -- index providers --------------------------------------------------------

@dataclass(frozen=True)
class BulkDispersion:
    """n(λ, T) of the bulk crystal."""

    axis: str = "z"
    material: object = None

    def __call__(self, lambda_nm, temperature_c):
        return bulk_index(lambda_nm, temperature_c, self.axis, self.material)


@dataclass(frozen=True)
class DispersionTable:
    """Effective index sampled at a few wavelengths and cubic-interpolated.

    Temperature changes add the bulk thermo-optic shift relative to the
    temperature the table was solved at. A single-node table is constant in
    wavelength (used for the fixed pump).
    """

    wavelengths_nm: tuple
    n_eff: tuple
    temperature_c: float
    axis: str = "z"
    material: object = None
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.wavelengths_nm, dtype=float)
        n = np.asarray(self.n_eff, dtype=float)
        if lam.shape != n.shape or lam.ndim != 1 or lam.size == 0:
            raise ConfigurationError("dispersion table needs matching 1-D wavelength and index lists")
        if lam.size > 1:
            if np.any(np.diff(lam) <= 0):
                raise ConfigurationError("dispersion table wavelengths must be strictly increasing")
            object.__setattr__(self, "_spline", CubicSpline(lam, n))
        object.__setattr__(self, "wavelengths_nm", tuple(lam.tolist()))
        object.__setattr__(self, "n_eff", tuple(n.tolist()))

    def __call__(self, lambda_nm, temperature_c):
        if self._spline is None:
            base = self.n_eff[0]
        else:
            lo, hi = self.wavelengths_nm[0], self.wavelengths_nm[-1]
            if not lo - 1e-9 <= lambda_nm <= hi + 1e-9:
                raise BracketingError(
                    f"{lambda_nm:.4f} nm is outside the tabulated span [{lo:.4f}, {hi:.4f}] nm"
                )
            base = float(self._spline(lambda_nm))
        shift = (temperature_c - self.temperature_c) * thermo_optic_coefficient(
            lambda_nm, self.axis, self.material)
        return base + shift


@dataclass(frozen=True)
class IndexSet:
    """One index provider per wave (keys "in", "pump", "out")."""

    waves: dict

    def __getitem__(self, wave):
        return self.waves[wave]

    @classmethod
    def bulk(cls, axis="z", material=None):
        b = BulkDispersion(axis, material or default_material())
        return cls({w: b for w in WAVES})


# -- phasematching ------------------------------------------------------------

def _mismatch_per_nm(n_in, n_pump, n_out, lambdas):
    lam_in, lam_pump, lam_out = lambdas
    if energy_residual(lam_in, lam_pump, lam_out) > ENERGY_TOL:
        raise ContractViolation(f"wavelength triple {lambdas} nm is not energy matched")
    return n_out / lam_out - n_in / lam_in - n_pump / lam_pump


def delta_beta(n_in, n_pump, n_out, lambdas_nm, period_um):
    """Δβ = 2π(n_out/λ_out − n_in/λ_in − n_pump/λ_pump − 1/Λ) in rad/m.

    ``period_um = inf`` drops the grating term.
    """
    material = _mismatch_per_nm(n_in, n_pump, n_out, lambdas_nm) * 1e9
    grating = 0.0 if np.isinf(period_um) else 1e6 / period_um
    return 2 * np.pi * (material - grating)


def solve_poling_period(n_in, n_pump, n_out, lambdas_nm):
    """First-order QPM period (µm) that cancels the material mismatch."""
    m = _mismatch_per_nm(n_in, n_pump, n_out, lambdas_nm)
    scale = n_out / lambdas_nm[2]
    if not m > 1e-12 * scale:
        raise NoPhasematchError(
            f"material mismatch {m:.3e} nm⁻¹ is not positive; no first-order QPM period exists"
        )
    return 1e-3 / m


def phasematching_response(dbeta_per_m, length_mm):
    """sinc²(Δβ·L/2) with sinc(x) = sin(x)/x."""
    if length_mm <= 0:
        raise ConfigurationError("device length must be positive")
    x = np.asarray(dbeta_per_m, dtype=float) * length_mm * 1e-3 / 2
    out = np.sinc(x / np.pi) ** 2
    return float(out) if out.ndim == 0 else out


def sinc2_half_width():
    """x at which sinc²(x) = 1/2 (≈ 1.39156)."""
    return brentq(lambda x: (np.sin(x) / x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


def predicted_fwhm(n_group_in, n_group_out, lambda_in_nm, length_mm):
    """Small-signal acceptance bandwidth in λ_in from a group-index mismatch.

    With λ_out slaved to λ_in at fixed pump, dΔβ/dλ_in = 2π·(n_g,out − n_g,in)/λ_in².
    """
    x = sinc2_half_width()
    L = length_mm * 1e6  # nm
    return 2 * (2 * x / L) * lambda_in_nm**2 / (2 * np.pi * abs(n_group_out - n_group_in))


def process_delta_beta(spec, indices, lambda_in_nm, temperature_c, period_um=None):
    """Δβ(λ_in) at fixed pump wavelength, λ_out slaved to energy conservation."""
    lam_out = energy_matched_output(lambda_in_nm, spec.lambda_pump_nm)
    n = [indices[w](lam, temperature_c) for w, lam in
         zip(WAVES, (lambda_in_nm, spec.lambda_pump_nm, lam_out))]
    period = spec.period_um if period_um is None else period_um
    return delta_beta(n[0], n[1], n[2], (lambda_in_nm, spec.lambda_pump_nm, lam_out), period)


def _root(fn, lo, hi, error):
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise error
    # brentq is bracketed bisection with secant/inverse-quadratic steps
    root = brentq(fn, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(fn(root)) > ROOT_TOL:
        raise error
    return root


@dataclass(frozen=True)
class PhasematchingCurve:
    lambda_in_nm: np.ndarray
    response: np.ndarray
    fwhm_nm: float
    peak_lambda_nm: float
    temperature_c: float
    pump_mW: float
    length_mm: float

    def to_csv(self):
        rows = ["lambda_in_nm,response"]
        rows += [f"{lam:.6f},{r:.12g}" for lam, r in zip(self.lambda_in_nm, self.response)]
        return "\n".join(rows) + "\n"

    def sidecar(self):
        return {"fwhm_nm": round(self.fwhm_nm, 9), "peak_lambda_nm": round(self.peak_lambda_nm, 9),
                "T_C": self.temperature_c, "P_pump_mW": self.pump_mW, "L_mm": self.length_mm}

    def sidecar_json(self):
        return json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n"


def curve_fwhm(x, y):
    """Full width at half maximum around the global peak, linear interpolation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ip = int(np.argmax(y))
    half = y[ip] / 2
    edges = []
    for step in (-1, 1):
        i = ip
        while y[i] >= half:
            i += step
            if i < 0 or i >= len(y):
                raise BracketingError("curve does not fall to half maximum inside the span")
        j = i - step
        edges.append(float(np.interp(half, sorted([y[i], y[j]]),
                                     [x[i], x[j]] if y[i] < y[j] else [x[j], x[i]])))
    return edges[1] - edges[0]


def phasematching_curve(spec, indices, temperature_c, pump_mW, span_nm, samples=401,
                        tuning=None):
    """Sampled sinc² response versus λ_in over `span_nm` = (lo, hi).

    Indices are evaluated at the pump-heated temperature. The exact
    phasematching root is inserted into the sample set so the peak equals 1.
    """
    tuning = tuning or TuningModel()
    lo, hi = map(float, span_nm)
    if not hi > lo or samples < 3:
        raise ConfigurationError("span must be increasing and samples >= 3")
    t_eff = tuning.effective_temperature(temperature_c, pump_mW)

    def db(lam):
        return process_delta_beta(spec, indices, lam, t_eff)

    root = _root(db, lo, hi, BracketingError(
        f"span [{lo}, {hi}] nm does not bracket the phasematched input wavelength"))
    lam = np.union1d(np.linspace(lo, hi, int(samples)), [root])
    for lam_i in lam:
        lam_o = energy_matched_output(lam_i, spec.lambda_pump_nm)
        assert energy_residual(lam_i, spec.lambda_pump_nm, lam_o) <= ENERGY_TOL
    resp = phasematching_response(np.array([db(v) for v in lam]), spec.length_mm)
    return PhasematchingCurve(lam, resp, curve_fwhm(lam, resp), float(root),
                              float(temperature_c), float(pump_mW), spec.length_mm)


def reference_period(spec, indices, tuning):
    """Grating period that makes Δβ vanish at the tuning reference point (µm)."""
    lam_in = tuning.reference_lambda_in_nm
    lam_out = energy_matched_output(lam_in, spec.lambda_pump_nm)
    t = tuning.reference_temperature_c
    n = [indices[w](v, t) for w, v in zip(WAVES, (lam_in, spec.lambda_pump_nm, lam_out))]
    return solve_poling_period(n[0], n[1], n[2], (lam_in, spec.lambda_pump_nm, lam_out))


def phasematched_wavelength(spec, tuning, temperature_c, pump_mW, indices=None,
                            window_nm=2.0):
    """Input wavelength with Δβ = 0 at (T, P_pump).

    The grating is pinned by the reference condition of `tuning`, so the
    reference point reproduces itself. Indices default to the bulk crystal.
    """
    indices = indices or IndexSet.bulk()
    period = reference_period(spec, indices, tuning)
    t_eff = tuning.effective_temperature(temperature_c, pump_mW)
    ref = tuning.reference_lambda_in_nm

    def db(lam):
        return process_delta_beta(spec, indices, lam, t_eff, period)

    return _root(db, ref - window_nm, ref + window_nm, TuningRangeError(
        f"no phasematching root within ±{window_nm} nm of {ref} nm at T = {temperature_c} °C, "
        f"P = {pump_mW} mW"))


@dataclass(frozen=True)
class TuningSlopes:
    per_K_nm: float
    per_mW_pm: float
    curvature_ratio: float

    def composition_error(self, thermal_load_K_per_W):
        expected = self.per_K_nm * 1e3 * thermal_load_K_per_W * 1e-3
        return abs(self.per_mW_pm - expected) / abs(expected)


def tuning_slopes(spec, tuning, indices=None, dT=1.0, dP_mW=50.0, span_K=5.0):
    """Temperature and pump-power slopes of the phasematched input wavelength.

    dλ/dT is a central difference at the reference temperature, dλ/dP a
    forward difference from the reference pump power. `curvature_ratio` is
    the quadratic contribution over ±`span_K` relative to the linear one.
    """
    T0, P0 = tuning.reference_temperature_c, tuning.reference_pump_mW

    def lam(T, P=P0):
        return phasematched_wavelength(spec, tuning, T, P, indices)

    center = lam(T0)
    slope_T = (lam(T0 + dT) - lam(T0 - dT)) / (2 * dT)
    slope_P = (lam(T0, P0 + dP_mW) - center) / dP_mW
    up, down = lam(T0 + span_K), lam(T0 - span_K)
    linear = (up - down) / 2
    quad = (up + down) / 2 - center
    return TuningSlopes(slope_T, slope_P * 1e3, abs(quad / linear))


def effective_length_from_fwhm(measured_fwhm_nm, predicted_fwhm_nm, length_mm):
    """Interaction length implied by a broadened acceptance curve (bandwidth ∝ 1/L)."""
    if measured_fwhm_nm <= 0 or predicted_fwhm_nm <= 0:
        raise ConfigurationError("bandwidths must be positive")
    return length_mm * predicted_fwhm_nm / measured_fwhm_nm
