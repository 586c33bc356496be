"""Finite-difference eigenmode solver for weakly guiding channel waveguides.

The transverse field is found from a five-point discretisation of the
Helmholtz equation on a cell-centred grid with zero-field walls half a cell
outside the outermost nodes.

For z-polarised light in a z-cut crystal (TM modes, field normal to the
surface) the depth derivative uses the semivectorial form
``∂y[(1/n²)∂y(n²E)]``, which carries the jump of the normal field across the
crystal/cover interface. Written for ``ψ = n·E`` the operator is symmetric,
so the few largest ``β²`` follow from shift-invert Lanczos iterations.
Laterally, and for the y axis (TE), the plain scalar Laplacian is used; the
lateral index step is below one percent.
"""

import hashlib
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import (ConfigurationError, DegenerateModeError, IncompatibleGridError,
                     NumericalConvergenceError)
from .grid import Grid

RESIDUAL_TOL = 1e-6
_SCHEMES = ("auto", "quasi-tm", "scalar")


@dataclass(frozen=True, eq=False)
class GuidedMode:
    """One guided eigenmode; `field` is normalised to ∫∫E² dx dy = 1 (µm⁻¹)."""

    wavelength_nm: float
    axis: str
    polarization: str
    n_eff: float
    order: tuple
    field: np.ndarray
    grid: Grid
    residual: float = 0.0

    @property
    def beta(self):
        """Propagation constant in rad/m."""
        return 2 * np.pi / (self.wavelength_nm * 1e-9) * self.n_eff

    @property
    def intensity(self):
        return self.field**2

    def peak_position(self):
        i, j = np.unravel_index(np.argmax(self.intensity), self.grid.shape)
        return float(self.grid.x[i]), float(self.grid.y[j])


def _polarization(axis, scheme):
    if scheme not in _SCHEMES:
        raise ConfigurationError(f"unknown solver scheme '{scheme}', expected one of {_SCHEMES}")
    if scheme == "scalar":
        return "scalar"
    if scheme == "quasi-tm" or axis == "z":
        return "TM"
    return "TE"


def _second_difference(eps, h, nlines, nper):
    """Symmetric depth operator on ψ = n·E for `nlines` columns of length `nper`.

    With ``eps`` ≡ 1 this is the ordinary second difference. Half-node
    permittivities are arithmetic means; the walls are antisymmetric ghosts.
    """
    e = eps.reshape(nlines, nper)
    em = 0.5 * (e[:, :-1] + e[:, 1:])
    coupling = np.sqrt(e[:, :-1] * e[:, 1:]) / em
    diag = np.zeros_like(e)
    diag[:, :-1] -= e[:, :-1] / em
    diag[:, 1:] -= e[:, 1:] / em
    diag[:, 0] -= 2.0
    diag[:, -1] -= 2.0
    off = np.zeros_like(e)
    off[:, :-1] = coupling
    off = off.ravel()[:-1]
    return sp.diags([off, diag.ravel(), off], [-1, 0, 1], format="csr") / h**2


def helmholtz_operator(index_map, polarization):
    """Sparse symmetric operator whose eigenvalues are β² (µm⁻²)."""
    g = index_map.grid
    nx, ny = g.shape
    n = index_map.n
    k0 = 2 * np.pi / (index_map.wavelength_nm * 1e-3)
    eps_y = n.ravel() ** 2 if polarization == "TM" else np.ones(nx * ny)
    Ly = _second_difference(eps_y, g.hy, nx, ny)
    # lateral second difference, same wall treatment
    main = np.full(nx, -2.0)
    main[[0, -1]] = -3.0
    Dx = sp.diags([np.ones(nx - 1), main, np.ones(nx - 1)], [-1, 0, 1]) / g.hx**2
    Lx = sp.kron(Dx, sp.identity(ny), format="csr")
    return (Lx + Ly + sp.diags((k0 * n.ravel()) ** 2)).tocsc()


def _sign_changes(line, floor):
    s = np.sign(np.where(np.abs(line) > floor, line, 0.0))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _order_labels(field):
    i, j = np.unravel_index(np.argmax(np.abs(field)), field.shape)
    floor = 1e-3 * np.abs(field).max()
    return (_sign_changes(field[:, j], floor), _sign_changes(field[i, :], floor))


class _Spectrum:
    """Eigenpairs of one index map, extended on demand with the same factorisation."""

    def __init__(self, index_map, polarization):
        self.map = index_map
        self.polarization = polarization
        self.A = helmholtz_operator(index_map, polarization)
        k0 = 2 * np.pi / (index_map.wavelength_nm * 1e-3)
        self.k0 = k0
        self.sigma = (k0 * float(index_map.n.max())) ** 2
        self._lu = None
        self.modes = []          # sorted, guided and unguided
        self.complete = False    # True once an unguided eigenpair was seen

    def _opinv(self):
        if self._lu is None:
            N = self.A.shape[0]
            self._lu = splu((self.A - self.sigma * sp.identity(N, format="csc")).tocsc())
        lu = self._lu
        N = self.A.shape[0]
        return LinearOperator((N, N), matvec=lu.solve, dtype=float)

    def compute(self, k):
        N = self.A.shape[0]
        k = min(k, N - 2)
        v0 = np.random.default_rng(20150331).standard_normal(N)
        try:
            w, v = eigsh(self.A, k=k, sigma=self.sigma, which="LM", OPinv=self._opinv(),
                         v0=v0, tol=0, maxiter=50 * N)
        except ArpackNoConvergence as exc:
            raise NumericalConvergenceError(
                f"eigensolver did not converge at {self.map.wavelength_nm} nm: "
                f"{len(exc.eigenvalues)} of {k} eigenpairs after {50 * N} iterations"
            ) from exc
        modes = []
        n = self.map.n.ravel()
        g = self.map.grid
        for idx in range(len(w)):
            psi = v[:, idx]
            beta2 = w[idx]
            res = np.linalg.norm(self.A @ psi - beta2 * psi) / np.linalg.norm(beta2 * psi)
            if not res <= RESIDUAL_TOL:
                raise NumericalConvergenceError(
                    f"eigenpair {idx} at {self.map.wavelength_nm} nm has relative residual "
                    f"{res:.3e} > {RESIDUAL_TOL:g}"
                )
            e = psi / n if self.polarization == "TM" else psi.copy()
            e = e.reshape(g.shape)
            e /= np.sqrt(g.integrate(e**2))
            if e.flat[np.argmax(np.abs(e))] < 0:
                e = -e
            e.setflags(write=False)
            neff = float(np.sqrt(max(beta2, 0.0)) / self.k0)
            modes.append(GuidedMode(self.map.wavelength_nm, self.map.axis, self.polarization,
                                    neff, _order_labels(e), e, g, float(res)))
        modes.sort(key=lambda m: (-m.n_eff, m.order))
        self.modes = modes
        self.complete = len(modes) < k or modes[-1].n_eff <= self.map.substrate_index or k >= N - 2
        return modes

    def guided(self, count=None):
        """Guided modes, at least `count` of them if that many exist."""
        k = max(len(self.modes), 1)
        want = count
        try:
            while True:
                cutoff = self.map.substrate_index
                guided = [m for m in self.modes if m.n_eff > cutoff]
                if self.complete or (want is not None and len(guided) >= want):
                    return guided if want is None else guided[:want]
                k = max(8, 2 * k) if self.modes else (want + 2 if want else 8)
                self.compute(k)
        finally:
            self._lu = None   # the factorisation is large; keep only the eigenpairs


_CACHE = OrderedDict()
_CACHE_SIZE = 12


def _spectrum(index_map, scheme):
    pol = _polarization(index_map.axis, scheme)
    g = index_map.grid
    key = (hashlib.sha1(index_map.n.tobytes()).hexdigest(), g, index_map.wavelength_nm,
           index_map.substrate_index, pol)
    spec = _CACHE.get(key)
    if spec is None:
        spec = _Spectrum(index_map, pol)
        _CACHE[key] = spec
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    else:
        _CACHE.move_to_end(key)
    return spec


def clear_cache():
    _CACHE.clear()


def solve_modes(index_map, max_count=1, scheme="auto"):
    """Guided modes of `index_map`, sorted by decreasing effective index.

    Returns at most `max_count` modes; an empty list when nothing is guided
    above the substrate index.
    """
    if int(max_count) < 1:
        raise ConfigurationError("max_count must be a positive integer")
    return list(_spectrum(index_map, scheme).guided(int(max_count)))


def count_guided_modes(index_map, scheme="auto"):
    """Number of eigenmodes with effective index above the substrate index."""
    return len(_spectrum(index_map, scheme).guided())


def all_guided_modes(index_map, scheme="auto"):
    return list(_spectrum(index_map, scheme).guided())


def fundamental_mode(index_map, scheme="auto"):
    modes = solve_modes(index_map, 1, scheme)
    if not modes:
        raise DegenerateModeError(f"no guided mode at {index_map.wavelength_nm} nm")
    return modes[0]


def _half_width_edge(profile, coord, peak, step):
    half = profile[peak] / 2
    i = peak
    while profile[i] >= half:
        i += step
        if i < 0 or i >= len(profile):
            raise DegenerateModeError("intensity does not fall to half maximum inside the grid")
    inner = i - step
    return float(np.interp(half, [profile[i], profile[inner]], [coord[i], coord[inner]]))


def field_fwhm(mode):
    """Intensity FWHM (lateral, depth) in µm along the axes through the peak."""
    intensity = mode.intensity
    g = mode.grid
    i, j = np.unravel_index(np.argmax(intensity), intensity.shape)
    if i in (0, g.nx - 1) or j in (0, g.ny - 1):
        raise DegenerateModeError("mode intensity peaks on the grid boundary")
    lateral = intensity[:, j]
    depth = intensity[i, :]
    wx = _half_width_edge(lateral, g.x, i, 1) - _half_width_edge(lateral, g.x, i, -1)
    wy = _half_width_edge(depth, g.y, j, 1) - _half_width_edge(depth, g.y, j, -1)
    return wx, wy


def mode_orthogonality(modes):
    """Largest |⟨E_i, E_j⟩| over distinct pairs (0 for fewer than two modes)."""
    modes = list(modes)
    if len(modes) < 2:
        return 0.0
    ref = modes[0]
    for m in modes[1:]:
        if (m.grid != ref.grid or m.wavelength_nm != ref.wavelength_nm
                or m.polarization != ref.polarization):
            raise IncompatibleGridError("modes differ in grid, wavelength or polarization")
    F = np.stack([m.field.ravel() for m in modes])
    gram = F @ F.T * ref.grid.cell_area
    np.fill_diagonal(gram, 0.0)
    return float(np.abs(gram).max())


def boundary_ratio(mode):
    """max |E| on the outermost nodes relative to the peak |E|."""
    f = np.abs(mode.field)
    edge = max(f[0].max(), f[-1].max(), f[:, 0].max(), f[:, -1].max())
    return float(edge / f.max())


def mode_csv_text(mode):
    """``x_um,y_um,E`` rows, x-major over the grid nodes."""
    X, Y = mode.grid.mesh()
    rows = ["x_um,y_um,E"]
    rows += [f"{x:.6f},{y:.6f},{e:.10g}" for x, y, e in
             zip(X.ravel(), Y.ravel(), mode.field.ravel())]
    return "\n".join(rows) + "\n"


def export_mode_csv(mode, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(mode_csv_text(mode))
    return path
