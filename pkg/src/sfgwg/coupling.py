"""Mode overlaps, normalized efficiency, Gaussian coupling and efficiency accounting."""

import json
from dataclasses import dataclass

import numpy as np
from scipy.constants import c, epsilon_0
from scipy.optimize import minimize

from .errors import ConfigurationError, IncompatibleGridError, MeasurementInconsistencyError


def overlap_integral(e_in, e_pump, e_out, region=None):
    """Signed κ̃ = ∫∫ E_in·E_pump·E_out dx dy in 1/m.

    Fields are GuidedMode instances normalised to ∫∫E² = 1 on a shared grid.
    `region` optionally restricts the quadrature to a boolean node mask, e.g.
    the nonlinear crystal (y ≥ 0).
    """
    g = e_in.grid
    if e_pump.grid != g or e_out.grid != g:
        raise IncompatibleGridError("overlap integral needs all three modes on one grid")
    prod = e_in.field * e_pump.field * e_out.field
    if region is not None:
        region = np.asarray(region, dtype=bool)
        if region.shape != prod.shape:
            raise IncompatibleGridError(f"region mask {region.shape} does not match grid {prod.shape}")
        prod = np.where(region, prod, 0.0)
    return g.integrate(prod) * 1e6   # µm⁻¹ → m⁻¹


def crystal_region(grid):
    """Node mask of the nonlinear crystal (depth y ≥ 0)."""
    return np.broadcast_to(grid.y >= 0, grid.shape)


def normalized_efficiency(kappa_per_m, d_eff_pm_per_V, n_in, n_pump, n_out,
                          lambda_in_nm, lambda_out_nm):
    """η_nor = 8π²/(c ε₀) · d_eff² κ̃² / (n_pump n_in n_out) / (λ_in λ_out) in 1/(W·m²)."""
    d = d_eff_pm_per_V * 1e-12
    lam_in, lam_out = lambda_in_nm * 1e-9, lambda_out_nm * 1e-9
    return (8 * np.pi**2 / (c * epsilon_0) * d**2 * kappa_per_m**2
            / (n_pump * n_in * n_out) / (lam_in * lam_out))


@dataclass(frozen=True)
class OverlapResult:
    kappa_per_m: float
    kappa_sign: int
    eta_nor_per_W_m2: float
    n_eff: tuple
    lambda_in_nm: float
    lambda_out_nm: float

    @property
    def eta_nor_per_W_cm2(self):
        return self.eta_nor_per_W_m2 * 1e-4

    @classmethod
    def from_modes(cls, m_in, m_pump, m_out, d_eff_pm_per_V, region=None):
        k = overlap_integral(m_in, m_pump, m_out, region)
        n = (m_in.n_eff, m_pump.n_eff, m_out.n_eff)
        eta = normalized_efficiency(abs(k), d_eff_pm_per_V, *n, m_in.wavelength_nm,
                                    m_out.wavelength_nm)
        return cls(abs(k), 1 if k >= 0 else -1, eta, n, m_in.wavelength_nm, m_out.wavelength_nm)


# -- Gaussian coupling ---------------------------------------------------------

def gaussian_field(grid, waist_x_um, waist_y_um, center_um=(0.0, 0.0)):
    """Elliptical Gaussian exp(−(x−x₀)²/wx² − (y−y₀)²/wy²) normalised over the plane."""
    X, Y = grid.mesh()
    x0, y0 = center_um
    amp = np.sqrt(2.0 / (np.pi * waist_x_um * waist_y_um))
    return amp * np.exp(-((X - x0) / waist_x_um) ** 2 - ((Y - y0) / waist_y_um) ** 2)


def gaussian_coupling(mode, waist_x_um, waist_y_um, center_um=(0.0, 0.0)):
    """Power coupling |⟨E_mode, G⟩|² into the mode from a normalised Gaussian beam."""
    if waist_x_um <= 0 or waist_y_um <= 0:
        raise ConfigurationError("Gaussian waists must be positive")
    G = gaussian_field(mode.grid, waist_x_um, waist_y_um, center_um)
    return float(min(1.0, mode.grid.integrate(mode.field * G) ** 2))


@dataclass(frozen=True)
class GaussianFit:
    efficiency: float
    waist_x_um: float
    waist_y_um: float
    center_um: tuple


def optimize_gaussian_coupling(mode):
    """Maximise the Gaussian coupling over both waists and the beam centre."""
    from .modes import field_fwhm

    fx, fy = field_fwhm(mode)
    x0, y0 = mode.peak_position()
    conv = 1.0 / np.sqrt(2 * np.log(2))   # intensity FWHM → amplitude 1/e radius

    def cost(p):
        return -gaussian_coupling(mode, np.exp(p[0]), np.exp(p[1]), (p[2], p[3]))

    start = np.array([np.log(fx * conv), np.log(fy * conv), x0, y0])
    res = minimize(cost, start, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 4000})
    p = res.x
    return GaussianFit(-float(res.fun), float(np.exp(p[0])), float(np.exp(p[1])),
                       (float(p[2]), float(p[3])))


# -- efficiency accounting -------------------------------------------------------

def fresnel_transmission(n, n_cover=1.0):
    """Normal-incidence power transmission of an uncoated facet."""
    r = (n - n_cover) / (n + n_cover)
    return 1.0 - r * r


@dataclass(frozen=True)
class TransmissionChain:
    """Named transmission factors applied in sequence to one beam."""

    factors: tuple = ()

    def __post_init__(self):
        items = tuple((str(k), float(v)) for k, v in
                      (self.factors.items() if isinstance(self.factors, dict) else self.factors))
        for name, value in items:
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"transmission factor '{name}' = {value} is not in (0, 1]")
        object.__setattr__(self, "factors", items)

    @property
    def product(self):
        return float(np.prod([v for _, v in self.factors])) if self.factors else 1.0

    def as_dict(self):
        return dict(self.factors)


def external_conversion_efficiency(p_in_uW, p_out_nW, lambda_in_nm, lambda_out_nm,
                                   chain_in=TransmissionChain(), chain_out=TransmissionChain()):
    """Photon-number conversion efficiency from measured powers.

    Measured powers are divided by their chain products to refer them to the
    device; the wavelength ratio converts the power ratio into a photon ratio.
    """
    if p_in_uW <= 0 or p_out_nW < 0:
        raise ConfigurationError("input power must be positive and output power non-negative")
    p_in = p_in_uW * 1e-6 * chain_in.product
    p_out = p_out_nW * 1e-9 / chain_out.product
    return (lambda_out_nm / lambda_in_nm) * p_out / p_in


def internal_from_external(eta_ext, facet_transmission, mode_matching):
    for name, v in (("facet_transmission", facet_transmission), ("mode_matching", mode_matching)):
        if not 0.0 < v <= 1.0:
            raise ConfigurationError(f"{name} = {v} is not in (0, 1]")
    return eta_ext / (facet_transmission * mode_matching)


def depletion_efficiency(p_on, p_off):
    """1 − P_on/P_off for transmitted input power with pump on and off."""
    if not p_off > 0 or p_on < 0:
        raise ConfigurationError("need P_off > 0 and P_on >= 0")
    if p_on > p_off:
        raise MeasurementInconsistencyError(
            f"transmitted power with pump on ({p_on}) exceeds pump off ({p_off})")
    return 1.0 - p_on / p_off


def loss_from_relative_transmission(t_rel, length_mm):
    """Propagation loss in dB/cm from a relative transmission over `length_mm`."""
    if not 0.0 < t_rel <= 1.0 or length_mm <= 0:
        raise ConfigurationError("need 0 < T_rel <= 1 and L > 0")
    return -10.0 * np.log10(t_rel) / (length_mm / 10.0) + 0.0


def accounting_report(p_in_uW, p_out_nW, lambda_in_nm, lambda_out_nm, chain_in, chain_out,
                      facet_transmission, mode_matching):
    """Every input, factor and derived efficiency of the external/internal chain."""
    eta_ext = external_conversion_efficiency(p_in_uW, p_out_nW, lambda_in_nm, lambda_out_nm,
                                             chain_in, chain_out)
    eta_int = internal_from_external(eta_ext, facet_transmission, mode_matching)
    return {
        "inputs": {"P_in_uW": p_in_uW, "P_out_nW": p_out_nW,
                   "lambda_in_nm": lambda_in_nm, "lambda_out_nm": lambda_out_nm},
        "chain_in": chain_in.as_dict(),
        "chain_out": chain_out.as_dict(),
        "internal_factors": {"facet_transmission": facet_transmission,
                             "mode_matching": mode_matching},
        "eta_external": eta_ext,
        "eta_internal": eta_int,
    }


def accounting_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
