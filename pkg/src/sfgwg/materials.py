"""Bulk dispersion, thermo-optic correction and the ion-exchange index profile.

Wavelengths cross the public API in nanometres; the dispersion formulas are
evaluated in micrometres internally. Temperatures are in degrees Celsius.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .errors import ConfigurationError, DomainError, WavelengthRangeError
from .grid import Grid

AIR_INDEX = 1.0
AXES = ("z", "y")


def _um(wavelength_nm):
    return np.asarray(wavelength_nm, dtype=float) * 1e-3


def _check_range(lam_um, validity, what):
    lo, hi = validity
    arr = np.atleast_1d(lam_um)
    bad = (arr < lo) | (arr > hi)
    if np.any(bad):
        raise WavelengthRangeError(float(arr[bad][0]), validity, what)


@dataclass(frozen=True)
class SellmeierModel:
    """Two-pole Sellmeier form ``n² = A + B/(λ²−C) + D/(λ²−E)``, λ in µm."""

    axis: str
    A: float
    B: float
    C: float
    D: float
    E: float
    validity_um: tuple

    def __post_init__(self):
        lo, hi = self.validity_um
        for pole in (self.C, self.E):
            if lo**2 <= pole <= hi**2:
                raise ConfigurationError(
                    f"Sellmeier pole {pole} lies inside the validity range {self.validity_um} µm"
                )

    def n(self, lam_um):
        lam_um = np.asarray(lam_um, dtype=float)
        _check_range(lam_um, self.validity_um, f"Sellmeier model ({self.axis} axis)")
        l2 = lam_um**2
        return np.sqrt(self.A + self.B / (l2 - self.C) + self.D / (l2 - self.E))

    def dn_dlambda(self, lam_um):
        """Analytic dn/dλ in 1/µm."""
        lam_um = np.asarray(lam_um, dtype=float)
        l2 = lam_um**2
        dn2 = -2.0 * lam_um * (self.B / (l2 - self.C) ** 2 + self.D / (l2 - self.E) ** 2)
        return dn2 / (2.0 * self.n(lam_um))


@dataclass(frozen=True)
class ThermoOpticModel:
    """dn/dT = scale · (c3/λ³ + c2/λ² + c1/λ + c0), λ in µm, result in 1/K."""

    axis: str
    c3: float
    c2: float
    c1: float
    c0: float
    reference_temperature_c: float
    validity_um: tuple
    scale_per_K: float = 1e-5

    def dn_dT(self, lam_um):
        lam_um = np.asarray(lam_um, dtype=float)
        _check_range(lam_um, self.validity_um, f"thermo-optic model ({self.axis} axis)")
        inv = 1.0 / lam_um
        return self.scale_per_K * (((self.c3 * inv + self.c2) * inv + self.c1) * inv + self.c0)


@dataclass(frozen=True)
class Material:
    name: str
    sellmeier: dict
    thermo_optic: dict
    provenance: str = ""

    def bulk_index(self, wavelength_nm, temperature_c, axis="z"):
        return bulk_index(wavelength_nm, temperature_c, axis, material=self)


@dataclass(frozen=True)
class ExchangeDispersion:
    """Surface index increase ``Δn₀(λ) = A + B/(λ²−C) + D·λ²`` (λ in µm)."""

    A: float
    B: float
    C: float
    D: float
    validity_um: tuple
    axis: str = "z"

    def __call__(self, lam_um):
        lam_um = np.asarray(lam_um, dtype=float)
        _check_range(lam_um, self.validity_um, "index-increase model")
        l2 = lam_um**2
        return self.A + self.B / (l2 - self.C) + self.D * l2

    @classmethod
    def constant(cls, value, validity_um=(0.2, 5.0)):
        return cls(float(value), 0.0, 0.0, 0.0, tuple(validity_um))


@dataclass(frozen=True)
class ExchangeIndexProfile:
    """Box-shaped (lateral) times erfc-shaped (depth) index increase.

    The depth dependence is ``erfc(y / (depth_scale · depth_um))``; with the
    default ``depth_scale = 1`` the argument equals 1 at the penetration depth.
    """

    surface_increase: ExchangeDispersion
    width_um: float = 2.0
    depth_um: float = 6.0
    depth_scale: float = 1.0

    def __post_init__(self):
        if self.width_um <= 0 or self.depth_um <= 0 or self.depth_scale <= 0:
            raise ConfigurationError("channel width, depth and depth scale must be positive")

    def delta_n0(self, wavelength_nm):
        return self.surface_increase(_um(wavelength_nm))

    def depth_shape(self, y_um):
        return erfc(np.asarray(y_um, dtype=float) / (self.depth_scale * self.depth_um))


def bulk_index(wavelength_nm, temperature_c, axis="z", material=None):
    """Bulk refractive index with linear thermo-optic correction.

    Returns ``n(λ, T₀) + (T − T₀)·dn/dT(λ)`` where T₀ is the temperature the
    Sellmeier data refer to.
    """
    material = material or default_material()
    if axis not in material.sellmeier:
        raise ConfigurationError(f"material {material.name} has no '{axis}' axis model")
    lam = _um(wavelength_nm)
    sm = material.sellmeier[axis]
    to = material.thermo_optic[axis]
    n0 = sm.n(lam)
    dT = np.asarray(temperature_c, dtype=float) - to.reference_temperature_c
    out = n0 + dT * to.dn_dT(lam)
    return float(out) if np.ndim(out) == 0 else out


def thermo_optic_coefficient(wavelength_nm, axis="z", material=None):
    material = material or default_material()
    out = material.thermo_optic[axis].dn_dT(_um(wavelength_nm))
    return float(out) if np.ndim(out) == 0 else out


def index_increase(x_um, y_um, wavelength_nm, profile):
    """Ion-exchange index increase Δn at lateral position x and depth y (µm)."""
    x = np.asarray(x_um, dtype=float)
    y = np.asarray(y_um, dtype=float)
    if np.any(y < 0):
        raise DomainError("index_increase is defined for depth y >= 0 only")
    inside = np.abs(x) <= profile.width_um / 2
    out = np.where(inside, profile.delta_n0(wavelength_nm) * profile.depth_shape(y), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IndexMap:
    """Sampled refractive-index distribution on a :class:`Grid`."""

    grid: Grid
    n: np.ndarray
    wavelength_nm: float
    temperature_c: float
    axis: str
    substrate_index: float
    cover_index: float = AIR_INDEX
    max_increase: float = 0.0

    def __post_init__(self):
        arr = np.array(self.n, dtype=float)
        if arr.shape != self.grid.shape:
            raise ConfigurationError(f"index samples {arr.shape} do not match grid {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "n", arr)

    @property
    def contrast(self):
        return float(self.n.max() - self.substrate_index)

    @classmethod
    def uniform(cls, grid, value, wavelength_nm, axis="z", temperature_c=20.0):
        return cls(grid, np.full(grid.shape, float(value)), wavelength_nm,
                   temperature_c, axis, float(value), cover_index=float(value))


def build_index_map(profile, wavelength_nm, temperature_c, grid, axis="z",
                    material=None, cover_index=AIR_INDEX, check_margin=True):
    """Sample bulk index plus exchange increase on `grid`.

    Nodes with y < 0 get the cover index. Lateral channel edges that cut
    through a cell are weighted by the fraction of the cell inside the channel;
    on grids whose faces line up with the edges this is plain point sampling.

    The grid must reach |x| = 2w and depth 2·(scaled d). `check_margin=False`
    skips that check, for studies on deliberately truncated domains of
    strongly confined modes.
    """
    w, d = profile.width_um, profile.depth_um * profile.depth_scale
    if check_margin and not grid.covers(-2.0 * w, 2.0 * w, 0.0, 2.0 * d):
        raise ConfigurationError(
            f"grid [{grid.x_min}, {grid.x_max}] x [{grid.y_min}, {grid.y_max}] µm is too small: "
            f"needs |x| >= {2.0 * w} µm laterally and depth >= {2.0 * d} µm"
        )
    n_sub = bulk_index(wavelength_nm, temperature_c, axis, material)
    dn0 = float(profile.delta_n0(wavelength_nm))
    x, y = grid.x, grid.y
    half = grid.hx / 2
    frac = np.clip((w / 2 - (np.abs(x) - half)) / grid.hx, 0.0, 1.0)
    depth = np.where(y >= 0, profile.depth_shape(np.clip(y, 0, None)), 0.0)
    n = n_sub + dn0 * np.outer(frac, depth)
    n[:, y < 0] = cover_index
    return IndexMap(grid, n, float(wavelength_nm), float(temperature_c), axis,
                    float(n_sub), float(cover_index), max_increase=dn0)


# -- material data file ----------------------------------------------------

@dataclass(frozen=True)
class MaterialLibrary:
    version: str
    materials: dict
    profiles: dict = field(default_factory=dict)
    source: str = ""

    def material(self, name="KTP"):
        try:
            return self.materials[name]
        except KeyError:
            raise ConfigurationError(f"unknown material '{name}'") from None

    def profile(self, name, **overrides):
        try:
            base = self.profiles[name]
        except KeyError:
            raise ConfigurationError(f"unknown exchange profile '{name}'") from None
        kwargs = {k: v for k, v in overrides.items() if v is not None}
        if not kwargs:
            return base
        return ExchangeIndexProfile(base.surface_increase,
                                    kwargs.get("width_um", base.width_um),
                                    kwargs.get("depth_um", base.depth_um),
                                    kwargs.get("depth_scale", base.depth_scale))


def _parse_library(doc, source):
    try:
        materials = {}
        for name, entry in doc["materials"].items():
            t0 = float(entry["reference_temperature_C"])
            sm, to = {}, {}
            for axis, ax in entry["axes"].items():
                validity = tuple(float(v) for v in ax["validity_um"])
                s = ax["sellmeier"]
                sm[axis] = SellmeierModel(axis, s["A"], s["B"], s["C"], s["D"], s["E"], validity)
                t = ax["thermo_optic"]
                to[axis] = ThermoOpticModel(axis, t["c3"], t["c2"], t["c1"], t["c0"], t0,
                                            validity, t.get("scale_per_K", 1e-5))
            materials[name] = Material(name, sm, to, entry.get("provenance", ""))
        profiles = {}
        for name, entry in doc.get("exchange_profiles", {}).items():
            c = entry["coefficients"]
            disp = ExchangeDispersion(c["A"], c["B"], c["C"], c["D"],
                                      tuple(float(v) for v in entry["validity_um"]),
                                      entry.get("axis", "z"))
            profiles[name] = ExchangeIndexProfile(disp, entry.get("width_um", 2.0),
                                                  entry.get("depth_um", 6.0),
                                                  entry.get("depth_scale", 1.0))
        return MaterialLibrary(str(doc["data_version"]), materials, profiles, source)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed material data file {source}: {exc!r}") from exc


def load_material_library(path=None):
    """Load a material data file; the packaged KTP data when `path` is None."""
    if path is None:
        text = resources.files("sfgwg").joinpath("data/materials.json").read_text()
        source = "sfgwg:data/materials.json"
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{source}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return _parse_library(doc, source)


_DEFAULT = None


def default_library():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_material_library()
    return _DEFAULT


def default_material():
    return default_library().material("KTP")


def default_profile():
    return default_library().profile("rbktp-z")
