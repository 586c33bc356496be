import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sfgwg.errors import (BracketingError, ConfigurationError, ContractViolation,
                          NoPhasematchError)
from sfgwg.materials import bulk_index
from sfgwg.qpm import (DispersionTable, IndexSet, ProcessSpec, TuningModel, curve_fwhm,
                       delta_beta, effective_length_from_fwhm, energy_matched_output,
                       energy_residual, phasematched_wavelength, phasematching_curve,
                       phasematching_response, predicted_fwhm, reference_period,
                       solve_poling_period, tuning_slopes)

TRIPLE = (1311.0, 514.5, energy_matched_output(1311.0, 514.5))


def bisect_half_max():
    lo, hi = 1.0, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (np.sin(mid) / mid) ** 2 > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_energy_matched_output_examples():
    assert energy_matched_output(1311.0, 514.5) == pytest.approx(369.49, abs=0.005)
    assert energy_matched_output(1000.0, 1000.0) == pytest.approx(500.0, abs=1e-12)
    assert energy_matched_output(2622.0, 514.5) == pytest.approx(2622 * 514.5 / (2622 + 514.5), abs=1e-9)
    assert energy_matched_output(2622.0, 514.5) == pytest.approx(430.1, abs=0.05)


@given(a=st.floats(300, 5000), b=st.floats(300, 5000))
def test_energy_conservation_residual(a, b):
    assert energy_residual(a, b, energy_matched_output(a, b)) <= 1e-12


def test_process_spec_validation():
    with pytest.raises(ContractViolation):
        ProcessSpec(1311.0, 514.5, 370.0)
    with pytest.raises(ConfigurationError):
        ProcessSpec(length_mm=0.0)
    spec = ProcessSpec()
    assert spec.d_eff_pm_per_V == pytest.approx(16.65 * 2 / np.pi)
    assert spec.with_input(1312.0).lambda_out_nm == pytest.approx(energy_matched_output(1312.0, 514.5))


indices = st.tuples(st.floats(1.6, 2.0), st.floats(1.7, 2.1), st.floats(1.8, 2.3))


@given(n=indices)
def test_period_consistency_loop(n):
    m = n[2] / TRIPLE[2] - n[0] / TRIPLE[0] - n[1] / TRIPLE[1]
    assume(m > 1e-6)
    period = solve_poling_period(*n, TRIPLE)
    assert abs(delta_beta(*n, TRIPLE, period)) <= 1e-6


def test_infinite_period_is_bare_mismatch():
    n = (1.82, 1.91, 2.03)
    bare = 2 * np.pi * (n[2] / TRIPLE[2] - n[0] / TRIPLE[0] - n[1] / TRIPLE[1]) * 1e9
    assert delta_beta(*n, TRIPLE, np.inf) == pytest.approx(bare, rel=1e-14)


def test_dispersionless_has_no_period():
    with pytest.raises(NoPhasematchError):
        solve_poling_period(1.9, 1.9, 1.9, TRIPLE)


def test_non_matched_triple_rejected():
    with pytest.raises(ContractViolation):
        delta_beta(1.8, 1.9, 2.0, (1311.0, 514.5, 370.0), 2.5)


def test_bulk_period_below_three_micrometres():
    n = [bulk_index(lam, 20.0) for lam in TRIPLE]
    assert 2.0 < solve_poling_period(*n, TRIPLE) < 3.0


def test_response_examples():
    L = 9.6
    x = bisect_half_max()
    assert x == pytest.approx(1.39156, abs=1e-5)
    assert phasematching_response(0.0, L) == 1.0
    assert phasematching_response(2 * np.pi / (L * 1e-3), L) == pytest.approx(0.0, abs=1e-30)
    assert phasematching_response(2 * x / (L * 1e-3), L) == pytest.approx(0.5, abs=1e-12)
    assert phasematching_response(-2 * x / (L * 1e-3), L) == pytest.approx(0.5, abs=1e-12)


@given(db=st.floats(-1e6, 1e6), L=st.floats(0.1, 50))
def test_response_even_and_bounded(db, L):
    r = phasematching_response(db, L)
    assert 0.0 <= r <= 1.0
    assert r == phasematching_response(-db, L)


BULK = IndexSet.bulk()


def bulk_spec():
    n = [bulk_index(lam, 20.0) for lam in TRIPLE]
    return ProcessSpec(period_um=solve_poling_period(*n, TRIPLE))


def test_curve_peak_and_length_scaling():
    spec = bulk_spec()
    c1 = phasematching_curve(spec, BULK, 20.0, 0.0, (1310.5, 1311.5), 801)
    assert c1.response.max() == pytest.approx(1.0, abs=1e-9)
    assert c1.peak_lambda_nm == pytest.approx(1311.0, abs=1e-6)
    double = ProcessSpec(period_um=spec.period_um, length_mm=2 * spec.length_mm)
    c2 = phasematching_curve(double, BULK, 20.0, 0.0, (1310.5, 1311.5), 801)
    assert c2.fwhm_nm == pytest.approx(c1.fwhm_nm / 2, rel=0.02)
    for lam in c1.lambda_in_nm:
        assert energy_residual(lam, 514.5, energy_matched_output(lam, 514.5)) <= 1e-12


def test_curve_fwhm_matches_group_index_formula():
    spec = bulk_spec()
    curve = phasematching_curve(spec, BULK, 20.0, 0.0, (1310.0, 1312.0), 2001)

    def n_group(lam):
        h = 1e-3
        dn = (bulk_index(lam + h, 20.0) - bulk_index(lam - h, 20.0)) / (2 * h)
        return bulk_index(lam, 20.0) - lam * dn

    expected = predicted_fwhm(n_group(1311.0), n_group(TRIPLE[2]), 1311.0, spec.length_mm)
    assert curve.fwhm_nm == pytest.approx(expected, rel=5e-3)


def test_curve_span_must_bracket():
    with pytest.raises(BracketingError):
        phasematching_curve(bulk_spec(), BULK, 20.0, 0.0, (1312.0, 1313.0), 101)


def test_curve_exports():
    curve = phasematching_curve(bulk_spec(), BULK, 20.0, 0.0, (1310.5, 1311.5), 11)
    text = curve.to_csv()
    assert text.splitlines()[0] == "lambda_in_nm,response"
    assert len(text.splitlines()) == len(curve.lambda_in_nm) + 1
    side = curve.sidecar()
    assert set(side) >= {"fwhm_nm", "peak_lambda_nm", "T_C", "P_pump_mW"}


def test_curve_fwhm_helper_on_triangle():
    x = np.linspace(-1, 1, 201)
    assert curve_fwhm(x, 1 - np.abs(x)) == pytest.approx(1.0, abs=1e-12)


def test_dispersion_table_interpolates_and_shifts():
    lam = np.linspace(1308, 1314, 5)
    table = DispersionTable(tuple(lam), tuple(bulk_index(v, 20.0) for v in lam), 20.0)
    assert table(1311.3, 20.0) == pytest.approx(bulk_index(1311.3, 20.0), abs=1e-9)
    assert table(1311.3, 30.0) - table(1311.3, 20.0) == pytest.approx(
        bulk_index(1311.3, 30.0) - bulk_index(1311.3, 20.0), rel=1e-12)
    with pytest.raises(BracketingError):
        table(1320.0, 20.0)


TUNING = TuningModel()
SPEC = ProcessSpec()


def test_reference_reproduces_itself():
    assert phasematched_wavelength(SPEC, TUNING, 20.0, 0.0) == pytest.approx(1311.0, abs=1e-9)
    assert 2.0 < reference_period(SPEC, BULK, TUNING) < 3.0


def test_tuning_slopes_properties():
    s = tuning_slopes(SPEC, TUNING)
    assert s.curvature_ratio < 0.02
    assert s.composition_error(TUNING.thermal_load_K_per_W) < 0.01
    assert s.per_K_nm > 0


def test_effective_length_examples():
    assert effective_length_from_fwhm(0.20, 0.185, 9.6) == pytest.approx(8.88, abs=1e-12)
    assert effective_length_from_fwhm(0.185, 0.185, 9.6) == 9.6
    assert effective_length_from_fwhm(0.37, 0.185, 9.6) == pytest.approx(4.8)
    with pytest.raises(ConfigurationError):
        effective_length_from_fwhm(0.0, 0.185, 9.6)


def test_tuning_model_validation():
    with pytest.raises(ConfigurationError):
        TuningModel(thermal_load_K_per_W=-1.0)
    with pytest.raises(ConfigurationError):
        TuningModel(index_source="guess")
