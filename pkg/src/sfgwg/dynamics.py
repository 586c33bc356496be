"""Conversion dynamics: analytic lossless law and the three-wave coupled equations.

Amplitudes are photon-flux normalised (|a|² in photons/s). A single coupling
constant g = √(η_nor·ħω_pump) makes the lossless, undepleted-pump solution
equal ``sin²(√(η_nor·P_pump)·L)``.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.constants import c, h

from .errors import ConfigurationError, ContractViolation, IntegrationError

DB_TO_NEPER = np.log(10) / 10
GRIIRA_CAP = 0.066
GRIIRA_CAP_PUMP_mW = 400.0


def alpha_per_m(alpha_dB_per_cm):
    """Power attenuation coefficient in 1/m from dB/cm."""
    return alpha_dB_per_cm * DB_TO_NEPER * 100.0


@dataclass(frozen=True)
class LossModel:
    """Propagation losses (dB/cm) plus an optional pump-induced input-wave loss.

    GRIIRA is modelled as ``α_in += griira_dB_per_cm_per_W · P_pump``.
    """

    alpha_pump_dB_cm: float = 0.0
    alpha_in_dB_cm: float = 0.0
    alpha_out_dB_cm: float = 0.0
    griira_dB_cm_per_W: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        for name in ("alpha_pump_dB_cm", "alpha_in_dB_cm", "alpha_out_dB_cm", "griira_dB_cm_per_W"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"{name} must be >= 0")

    @property
    def lossless(self):
        return (self.alpha_pump_dB_cm == 0 and self.alpha_in_dB_cm == 0
                and self.alpha_out_dB_cm == 0 and self.griira_dB_cm_per_W == 0)

    def alpha_in_total_dB_cm(self, pump_mW):
        return self.alpha_in_dB_cm + self.griira_dB_cm_per_W * pump_mW * 1e-3

    def griira_depletion(self, pump_mW, length_mm):
        """Apparent depletion caused by GRIIRA alone."""
        return 1.0 - np.exp(-alpha_per_m(self.griira_dB_cm_per_W * pump_mW * 1e-3) * length_mm * 1e-3)

    def check_griira(self, length_mm):
        d = self.griira_depletion(GRIIRA_CAP_PUMP_mW, length_mm)
        if d > GRIIRA_CAP + 1e-12:
            raise ConfigurationError(
                f"GRIIRA term gives {d:.3f} standalone depletion at {GRIIRA_CAP_PUMP_mW:g} mW, "
                f"above the {GRIIRA_CAP} bound")

    def as_dict(self):
        return {"label": self.label, "alpha_pump_dB_cm": self.alpha_pump_dB_cm,
                "alpha_in_dB_cm": self.alpha_in_dB_cm, "alpha_out_dB_cm": self.alpha_out_dB_cm,
                "griira_dB_cm_per_W": self.griira_dB_cm_per_W}


def max_griira_coefficient(length_mm, cap=GRIIRA_CAP, pump_mW=GRIIRA_CAP_PUMP_mW):
    """Largest GRIIRA slope (dB/cm/W) whose standalone depletion stays at `cap`."""
    return -np.log(1 - cap) / (length_mm * 1e-1) / DB_TO_NEPER / (pump_mW * 1e-3)


LOSS_PRESETS = {
    "literature": LossModel(0.7, 0.2, 4.34, label="literature"),
    "estimated": LossModel(0.7, 0.2, 6.3, label="estimated"),
    "lossless": LossModel(label="lossless"),
}


def loss_preset(name):
    try:
        return LOSS_PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown loss preset '{name}', expected one of {sorted(LOSS_PRESETS)}") from None


def eta_analytic(pump_mW, length_mm, eta_nor_per_W_m2):
    """sin²(√(η_nor·P)·L), the lossless undepleted-pump conversion."""
    if np.any(np.asarray(pump_mW) < 0) or length_mm < 0 or eta_nor_per_W_m2 < 0:
        raise ConfigurationError("eta_analytic needs non-negative inputs")
    arg = np.sqrt(eta_nor_per_W_m2 * np.asarray(pump_mW, dtype=float) * 1e-3) * length_mm * 1e-3
    out = np.sin(arg) ** 2
    return float(out) if out.ndim == 0 else out


def complete_conversion_power(eta_nor_per_W_m2, length_mm):
    """Pump power (mW) where √(η_nor·P)·L = π/2."""
    return (np.pi / 2 / (length_mm * 1e-3)) ** 2 / eta_nor_per_W_m2 * 1e3


def photon_flux(power_W, wavelength_nm):
    return power_W * wavelength_nm * 1e-9 / (h * c)


@dataclass(frozen=True)
class WaveState:
    z_mm: float
    a_in: complex
    a_pump: complex
    a_out: complex

    @property
    def fluxes(self):
        return abs(self.a_in) ** 2, abs(self.a_pump) ** 2, abs(self.a_out) ** 2


@dataclass(frozen=True)
class Trajectory:
    """Sampled amplitudes along the device (rows: z, columns: in/pump/out)."""

    z_mm: np.ndarray
    amplitudes: np.ndarray
    lossless: bool
    eta_conversion: float
    eta_depletion: float
    steps: int

    def state(self, i):
        a = self.amplitudes[i]
        return WaveState(float(self.z_mm[i]), complex(a[0]), complex(a[1]), complex(a[2]))

    @property
    def fluxes(self):
        return np.abs(self.amplitudes) ** 2


def _rk4(rhs, y, z0, dz, steps, length_m):
    out = np.empty((steps + 1, 3), dtype=complex)
    out[0] = y
    z = z0
    for i in range(steps):
        # overflow is reported through the finiteness check below
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(z, y)
            k2 = rhs(z + dz / 2, y + dz / 2 * k1)
            k3 = rhs(z + dz / 2, y + dz / 2 * k2)
            k4 = rhs(z + dz, y + dz * k3)
            y = y + dz / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        z = z0 + (i + 1) * dz
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite wave amplitudes", z * 1e3)
        out[i + 1] = y
    return out


def integrate_three_wave(p_in_uW, pump_mW, spec, eta_nor_per_W_m2, losses=LossModel(),
                         dbeta_per_m=0.0, steps=2000, error_control=False, rtol=1e-10,
                         max_steps=2**20, coupling_scale=1.0):
    """Integrate the lossy SFG equations over the device with fixed-step RK4.

    With `error_control` the step count is doubled until the output flux
    changes by less than `rtol` (relative) between successive halvings.
    `coupling_scale` multiplies g (0 switches the interaction off).
    """
    if p_in_uW < 0 or pump_mW < 0 or eta_nor_per_W_m2 < 0:
        raise ConfigurationError("powers and η_nor must be non-negative")
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    L_mm = spec.length_mm
    losses.check_griira(L_mm)
    lam_in, lam_pump, lam_out = spec.wavelengths
    f_in = photon_flux(p_in_uW * 1e-6, lam_in)
    f_pump = photon_flux(pump_mW * 1e-3, lam_pump)
    scale = f_in + f_pump
    if scale == 0:
        scale = 1.0
    # g·√scale, so that amplitudes u = a/√scale stay of order one
    omega_pump = 2 * np.pi * c / (lam_pump * 1e-9)
    g = coupling_scale * np.sqrt(eta_nor_per_W_m2 * h / (2 * np.pi) * omega_pump) * np.sqrt(scale)
    a_in_l = alpha_per_m(losses.alpha_in_total_dB_cm(pump_mW)) / 2
    a_p_l = alpha_per_m(losses.alpha_pump_dB_cm) / 2
    a_o_l = alpha_per_m(losses.alpha_out_dB_cm) / 2
    db = float(dbeta_per_m)

    def rhs(z, u):
        ph = np.exp(1j * db * z) if db else 1.0
        ui, up, uo = u
        return np.array([
            -a_in_l * ui + 1j * g * np.conj(up) * uo * ph,
            -a_p_l * up + 1j * g * np.conj(ui) * uo * ph,
            -a_o_l * uo + 1j * g * ui * up * np.conj(ph),
        ])

    u0 = np.array([np.sqrt(f_in / scale), np.sqrt(f_pump / scale), 0.0], dtype=complex)
    length_m = L_mm * 1e-3
    n = int(steps)
    sol = _rk4(rhs, u0, 0.0, length_m / n, n, length_m)
    if error_control:
        while True:
            if 2 * n > max_steps:
                raise IntegrationError("step-size control underflow", L_mm)
            finer = _rk4(rhs, u0, 0.0, length_m / (2 * n), 2 * n, length_m)
            prev, new = abs(sol[-1, 2]) ** 2, abs(finer[-1, 2]) ** 2
            n *= 2
            sol = finer
            if abs(new - prev) <= rtol * max(new, np.finfo(float).tiny):
                break
    amps = sol * np.sqrt(scale)
    flux = np.abs(amps) ** 2
    eta_conv = flux[-1, 2] / f_in if f_in > 0 else 0.0
    off = f_in * np.exp(-alpha_per_m(losses.alpha_in_dB_cm) * length_m)
    eta_depl = 1.0 - flux[-1, 0] / off if f_in > 0 else 0.0
    z = np.linspace(0.0, L_mm, n + 1)
    return Trajectory(z, amps, losses.lossless, float(eta_conv), float(eta_depl), n)


def manley_rowe_residual(trajectory):
    """Largest relative drift of flux_in + flux_out and flux_pump + flux_out."""
    if not trajectory.lossless:
        raise ContractViolation("Manley-Rowe residual is defined for lossless trajectories only")
    f = trajectory.fluxes
    total = f[0].sum()
    s1 = f[:, 0] + f[:, 2]
    s2 = f[:, 1] + f[:, 2]
    return float(max(np.abs(s1 - s1[0]).max(), np.abs(s2 - s2[0]).max()) / total)


@dataclass(frozen=True)
class EfficiencyCurve:
    pump_mW: np.ndarray
    eta_conversion: np.ndarray
    eta_depletion: np.ndarray
    loss_label: str
    eta_nor_per_W_m2: float
    p_in_uW: float
    losses: LossModel = None
    pump_convention: str = "internal"

    def to_csv(self):
        rows = ["P_pump_mW,eta_conversion,eta_depletion"]
        rows += [f"{p:.6f},{a:.12g},{b:.12g}"
                 for p, a, b in zip(self.pump_mW, self.eta_conversion, self.eta_depletion)]
        return "\n".join(rows) + "\n"

    def sidecar(self):
        return {"loss_preset": self.loss_label,
                "losses": self.losses.as_dict() if self.losses else None,
                "eta_nor_per_W_m2": self.eta_nor_per_W_m2, "P_in_uW": self.p_in_uW,
                "pump_convention": self.pump_convention}

    def sidecar_json(self):
        return json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n"


def efficiency_vs_pump(pump_mW, spec, eta_nor_per_W_m2, losses=LossModel(), p_in_uW=20.0,
                       steps=2000):
    """Conversion and depletion efficiency at perfect phasematching for each pump power."""
    p = np.asarray(pump_mW, dtype=float)
    if p.ndim != 1 or p.size < 2 or np.any(np.diff(p) <= 0):
        raise ConfigurationError("pump powers must be a strictly increasing list of >= 2 values")
    conv, depl = [], []
    for pw in p:
        t = integrate_three_wave(p_in_uW, pw, spec, eta_nor_per_W_m2, losses, steps=steps)
        conv.append(min(max(t.eta_conversion, 0.0), 1.0))
        depl.append(min(max(t.eta_depletion, 0.0), 1.0))
    return EfficiencyCurve(p, np.array(conv), np.array(depl), losses.label, eta_nor_per_W_m2,
                           p_in_uW, losses)
