import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfgwg.errors import ConfigurationError, DomainError, WavelengthRangeError
from sfgwg.grid import Grid
from sfgwg.materials import (ExchangeDispersion, ExchangeIndexProfile, bulk_index,
                             build_index_map, default_material, default_profile,
                             index_increase, load_material_library, thermo_optic_coefficient)

T0 = 20.0


def erfc_series(x, terms=60):
    """erfc from the Maclaurin series of erf, independent of scipy."""
    s = sum((-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms))
    return 1.0 - 2.0 / math.sqrt(math.pi) * s


def test_bulk_index_1064_z():
    # two-pole Sellmeier for KTP n_z typed in independently of the data file
    l2 = 1.064**2
    oracle = math.sqrt(4.59423 + 0.06206 / (l2 - 0.04763) + 110.80672 / (l2 - 86.12171))
    n = bulk_index(1064.0, T0, "z")
    assert n == pytest.approx(oracle, abs=1e-12)
    assert n == pytest.approx(1.830, abs=0.002)


def test_bulk_index_reference_temperature_is_pure_sellmeier():
    m = default_material()
    for lam in (400.0, 800.0, 1550.0):
        assert bulk_index(lam, T0) == m.sellmeier["z"].n(lam * 1e-3)


def test_bulk_index_out_of_range_names_interval():
    with pytest.raises(WavelengthRangeError, match=r"\[350\.0, 3540\.0\] nm"):
        bulk_index(200.0, T0)


def test_normal_dispersion_dense():
    lam = np.linspace(350, 3540, 4000)
    for axis in ("z", "y"):
        n = bulk_index(lam, T0, axis)
        assert np.all(np.diff(n) < 0)
        assert np.all(n > 1)
        sm = default_material().sellmeier[axis]
        assert np.all(sm.dn_dlambda(lam * 1e-3) < 0)


def test_thermo_optic_bounded():
    lam = np.linspace(350, 3540, 500)
    for axis in ("z", "y"):
        d = thermo_optic_coefficient(lam, axis)
        assert np.all(np.isfinite(d)) and np.all(np.abs(d) < 1e-3)


@given(lam=st.floats(360, 3500), dT=st.floats(-80, 150))
def test_thermo_optic_linearity(lam, dT):
    lhs = bulk_index(lam, T0 + dT) - bulk_index(lam, T0)
    assert lhs == pytest.approx(dT * thermo_optic_coefficient(lam), rel=1e-9, abs=1e-15)


def test_sellmeier_pole_inside_range_rejected():
    from sfgwg.materials import SellmeierModel
    with pytest.raises(ConfigurationError):
        SellmeierModel("z", 3.0, 0.05, 0.25, 0.0, 100.0, (0.4, 2.0))


def test_index_increase_examples():
    p = default_profile()
    dn0 = p.delta_n0(1311.0)
    assert index_increase(0.0, 0.0, 1311.0, p) == dn0
    assert index_increase(2 * p.width_um, 1.3, 1311.0, p) == 0.0
    # with the shape normalised so the argument is 1 at y = d
    unit = ExchangeIndexProfile(p.surface_increase, 2.0, 6.0, 1.0)
    assert index_increase(0.0, 6.0, 1311.0, unit) == pytest.approx(erfc_series(1.0) * dn0, rel=1e-12)
    assert erfc_series(1.0) == pytest.approx(0.1573, abs=1e-4)


def test_index_increase_negative_depth():
    with pytest.raises(DomainError):
        index_increase(0.0, -0.1, 1311.0, default_profile())


@given(x=st.floats(-5, 5), y=st.floats(0, 60), lam=st.floats(370, 1590))
def test_index_increase_bounded(x, y, lam):
    p = default_profile()
    v = index_increase(x, y, lam, p)
    assert 0.0 <= v <= p.delta_n0(lam)


@given(y1=st.floats(0, 40), y2=st.floats(0, 40))
def test_index_increase_monotone_in_depth(y1, y2):
    p = default_profile()
    lo, hi = sorted((y1, y2))
    assert index_increase(0.0, hi, 1000.0, p) <= index_increase(0.0, lo, 1000.0, p)


def test_index_increase_vanishes_deep():
    assert index_increase(0.0, 200.0, 1000.0, default_profile()) < 1e-30


def small_grid(step=0.1, y_min=-1.0):
    return Grid.from_step(-5.0, 5.0, y_min, 15.0, step)


def test_uniform_profile_gives_constant_map():
    p = ExchangeIndexProfile(ExchangeDispersion.constant(0.0), 2.0, 6.0)
    imap = build_index_map(p, 1311.0, T0, small_grid(y_min=0.0))
    assert np.all(imap.n == bulk_index(1311.0, T0))


def test_map_invariants():
    p = default_profile()
    imap = build_index_map(p, 514.5, T0, Grid.from_step(-5, 5, -1, 14, 0.1))
    nb = bulk_index(514.5, T0)
    assert imap.n.min() >= 1.0
    assert imap.n.max() <= nb + p.delta_n0(514.5) + 1e-15
    X, Y = imap.grid.mesh()
    outside = (np.abs(X) > p.width_um / 2 + imap.grid.hx) & (Y > 0)
    assert np.all(np.abs(imap.n[outside] - nb) <= 1e-12)
    assert np.all(imap.n[:, imap.grid.y < 0] == 1.0)


def test_map_peak_at_origin():
    # nodes on x = 0 and y = 0 exist for this offset grid
    p = default_profile()
    g = Grid(-5.05, 5.05, -1.05, 14.95, 101, 160)
    imap = build_index_map(p, 1311.0, T0, g)
    i, j = np.argmin(np.abs(g.x)), np.argmin(np.abs(g.y))
    assert abs(g.x[i]) < 1e-12 and abs(g.y[j]) < 1e-12
    assert imap.n[i, j] == pytest.approx(bulk_index(1311.0, T0) + p.delta_n0(1311.0), abs=1e-15)
    assert imap.n.max() == imap.n[i, j]


def test_refined_grid_coincident_nodes():
    # on a cell-centred grid, coarse node i coincides with fine node 3i+1
    p = default_profile()
    coarse = Grid.from_step(-5, 5, -1, 14, 0.1)
    fine = coarse.refined(3)
    a = build_index_map(p, 800.0, T0, coarse).n
    b = build_index_map(p, 800.0, T0, fine).n
    np.testing.assert_allclose(b[1::3, 1::3], a, rtol=0, atol=1e-15)


def test_build_is_pure():
    p = default_profile()
    g = small_grid()
    a = build_index_map(p, 900.0, T0, g)
    b = build_index_map(p, 900.0, T0, g)
    assert a.n.tobytes() == b.n.tobytes()
    assert not a.n.flags.writeable


def test_grid_too_small():
    with pytest.raises(ConfigurationError, match="too small"):
        build_index_map(default_profile(), 1311.0, T0, Grid.from_step(-3, 3, -1, 14, 0.1))
    with pytest.raises(ConfigurationError):
        build_index_map(default_profile(), 1311.0, T0, Grid.from_step(-5, 5, -1, 8, 0.1))


def test_material_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"materials": {\n  "KTP": [1, 2,\n}')
    with pytest.raises(ConfigurationError, match="line 3"):
        load_material_library(bad)
    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text('{"data_version": "x", "materials": {"KTP": {}}}')
    with pytest.raises(ConfigurationError, match="malformed"):
        load_material_library(incomplete)


def test_library_provenance():
    lib = load_material_library()
    assert lib.version
    assert "Kato" in lib.material("KTP").provenance
    assert set(lib.material("KTP").sellmeier) == {"z", "y"}
