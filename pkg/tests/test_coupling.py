import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfgwg.coupling import (OverlapResult, TransmissionChain, accounting_report,
                            depletion_efficiency, external_conversion_efficiency,
                            fresnel_transmission, gaussian_coupling, gaussian_field,
                            internal_from_external, loss_from_relative_transmission,
                            normalized_efficiency, optimize_gaussian_coupling, overlap_integral)
from sfgwg.errors import (ConfigurationError, IncompatibleGridError,
                          MeasurementInconsistencyError)
from sfgwg.grid import Grid
from sfgwg.modes import GuidedMode

G = Grid.from_step(-8, 8, -8, 8, 0.05)


def mode_from(field, grid=G, lam=1000.0):
    f = field / np.sqrt(grid.integrate(field**2))
    return GuidedMode(lam, "z", "TM", 1.8, (0, 0), f, grid)


def gauss(w, grid=G, x0=0.0, y0=0.0):
    X, Y = grid.mesh()
    return np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / w**2)


def test_triple_gaussian_closed_form():
    w = 1.2
    m = mode_from(gauss(w))
    # (2/(π w²))^{3/2} · ∫∫ exp(−3r²/w²) = (2/(π w²))^{3/2} · π w²/3, in µm⁻¹
    expected = (2 / (np.pi * w**2)) ** 1.5 * np.pi * w**2 / 3 * 1e6
    assert overlap_integral(m, m, m) == pytest.approx(expected, rel=1e-9)


def test_parity_kills_overlap():
    X, _ = G.mesh()
    even = mode_from(gauss(1.0))
    odd = mode_from(X * gauss(1.0))
    assert abs(overlap_integral(odd, even, even)) < 1e-9 * overlap_integral(even, even, even)


@pytest.mark.parametrize("s", [0.7, 1.5, 2.0])
def test_dilation_scaling(s):
    a = mode_from(gauss(0.8) * (1 + 0.3 * G.mesh()[1]))
    X, Y = G.mesh()
    b = mode_from(np.exp(-((X / s) ** 2 + (Y / s) ** 2) / 0.8**2) * (1 + 0.3 * Y / s))
    k1 = overlap_integral(a, a, a)
    k2 = overlap_integral(b, b, b)
    assert k2 == pytest.approx(k1 / s, rel=1e-6)


def test_overlap_grid_mismatch():
    m = mode_from(gauss(1.0))
    other = mode_from(gauss(1.0, Grid.from_step(-8, 8, -8, 8, 0.1)), Grid.from_step(-8, 8, -8, 8, 0.1))
    with pytest.raises(IncompatibleGridError):
        overlap_integral(m, m, other)


ETA_ARGS = dict(d_eff_pm_per_V=16.65 * 2 / np.pi, n_in=1.82, n_pump=1.91, n_out=2.03,
                lambda_in_nm=1311.0, lambda_out_nm=369.49)


def test_normalized_efficiency_examples():
    eta = normalized_efficiency(1.35e5, **ETA_ARGS)
    assert eta * 1e-4 == pytest.approx(1.83, rel=0.03)
    assert normalized_efficiency(0.0, **ETA_ARGS) == 0.0
    doubled = dict(ETA_ARGS, d_eff_pm_per_V=2 * ETA_ARGS["d_eff_pm_per_V"])
    assert normalized_efficiency(1.35e5, **doubled) == pytest.approx(4 * eta, rel=1e-12)


@given(f=st.floats(1.01, 3.0), which=st.sampled_from(["n_in", "n_pump", "n_out",
                                                      "lambda_in_nm", "lambda_out_nm"]))
def test_normalized_efficiency_monotone(f, which):
    base = normalized_efficiency(1e5, **ETA_ARGS)
    assert normalized_efficiency(1e5, **dict(ETA_ARGS, **{which: ETA_ARGS[which] * f})) < base
    assert normalized_efficiency(1e5 * f, **ETA_ARGS) > base
    assert normalized_efficiency(1e5, **dict(ETA_ARGS, d_eff_pm_per_V=ETA_ARGS["d_eff_pm_per_V"] * f)) > base


def test_overlap_result_units():
    m = mode_from(gauss(1.0))
    r = OverlapResult.from_modes(m, m, m, 10.0)
    assert r.kappa_per_m > 0 and r.kappa_sign == 1
    assert r.eta_nor_per_W_cm2 == pytest.approx(r.eta_nor_per_W_m2 * 1e-4)


def test_gaussian_coupling_self_and_far():
    wx, wy = 1.3, 0.9
    m = mode_from(gaussian_field(G, wx, wy, (0.2, -0.3)))
    assert gaussian_coupling(m, wx, wy, (0.2, -0.3)) == pytest.approx(1.0, abs=1e-9)
    assert gaussian_coupling(m, wx, wy, (40.0, 40.0)) < 1e-3
    fit = optimize_gaussian_coupling(mode_from(gaussian_field(G, wx, wy, (0.2, -0.3))))
    assert fit.efficiency == pytest.approx(1.0, abs=1e-6)
    assert fit.waist_x_um == pytest.approx(wx, rel=1e-3)


def test_fresnel():
    assert fresnel_transmission(1.0) == 1.0
    assert fresnel_transmission(1.5) == pytest.approx(0.96)


def test_transmission_chain_validation():
    with pytest.raises(ConfigurationError):
        TransmissionChain({"objective": 0.0})
    with pytest.raises(ConfigurationError):
        TransmissionChain({"objective": 1.2})
    assert TransmissionChain().product == 1.0
    assert TransmissionChain({"a": 0.5, "b": 0.5}).product == 0.25


CHAIN_IN = TransmissionChain({"incoupling_objective": 0.696})
CHAIN_OUT = TransmissionChain({"outcoupling": 0.517, "filters": 0.627})


def test_external_efficiency_examples():
    eta = external_conversion_efficiency(22.1, 980.0, 1311.0, 369.493, CHAIN_IN, CHAIN_OUT)
    assert eta == pytest.approx(0.055, abs=0.002)
    assert external_conversion_efficiency(22.1, 0.0, 1311.0, 369.493, CHAIN_IN, CHAIN_OUT) == 0.0
    assert external_conversion_efficiency(10.0, 2000.0, 1000.0, 1000.0) == pytest.approx(0.2)


@given(s=st.floats(1e-3, 1e3))
def test_external_efficiency_homogeneous(s):
    a = external_conversion_efficiency(22.1, 980.0, 1311.0, 369.493, CHAIN_IN, CHAIN_OUT)
    b = external_conversion_efficiency(22.1 * s, 980.0 * s, 1311.0, 369.493, CHAIN_IN, CHAIN_OUT)
    assert b == pytest.approx(a, rel=1e-12)


def test_internal_from_external_examples():
    assert internal_from_external(0.055, 1.0, 1.0) == 0.055
    assert internal_from_external(0.055, 1.0, 0.5) == pytest.approx(0.11)
    eta = internal_from_external(0.055, fresnel_transmission(1.8224), 0.507)
    assert 0.09 <= eta <= 0.12
    with pytest.raises(ConfigurationError):
        internal_from_external(0.055, 0.0, 0.5)


def test_depletion_examples():
    assert depletion_efficiency(1.0, 1.0) == 0.0
    assert depletion_efficiency(0.0, 1.0) == 1.0
    assert depletion_efficiency(0.6, 1.0) == pytest.approx(0.40)
    with pytest.raises(MeasurementInconsistencyError):
        depletion_efficiency(1.1, 1.0)


@given(off=st.floats(1e-9, 1e3), frac=st.floats(0, 1))
def test_depletion_bounded(off, frac):
    assert 0.0 <= depletion_efficiency(off * frac, off) <= 1.0


def test_loss_from_relative_transmission():
    assert loss_from_relative_transmission(1.0, 9.6) == 0.0
    assert loss_from_relative_transmission(0.1, 10.0) == pytest.approx(10.0)
    assert loss_from_relative_transmission(0.336, 9.6) == pytest.approx(4.93, abs=0.005)


def test_accounting_report_lists_everything():
    rep = accounting_report(22.1, 980.0, 1311.0, 369.493, CHAIN_IN, CHAIN_OUT, 0.915, 0.507)
    text = json.dumps(rep)
    for name in ("incoupling_objective", "outcoupling", "filters", "mode_matching",
                 "facet_transmission", "P_in_uW", "P_out_nW"):
        assert name in text
    assert rep["eta_internal"] == pytest.approx(rep["eta_external"] / (0.915 * 0.507))


def test_overlap_refinement_invariance(reference_design):
    # κ̃ of the reference design at h = 0.1 µm against the default 0.05 µm spacing
    from sfgwg.coupling import crystal_region
    from sfgwg.materials import build_index_map
    from sfgwg.modes import fundamental_mode

    fine = reference_design.overlap().kappa_per_m
    g = reference_design.grid
    coarse_grid = Grid.from_step(g.x_min, g.x_max, g.y_min, g.y_max, 2 * g.hx)
    modes = [fundamental_mode(build_index_map(reference_design.profile, lam, 20.0, coarse_grid))
             for lam in reference_design.spec.wavelengths]
    coarse = abs(overlap_integral(*modes, crystal_region(coarse_grid)))
    assert abs(coarse - fine) / fine < 0.01
