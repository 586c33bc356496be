"""Quasi-phasematched sum-frequency waveguide converter modelling.

Material dispersion, a finite-difference mode solver, quasi-phasematching
and tuning, mode overlaps and efficiency accounting, and coupled-amplitude
conversion dynamics, tied together by a config-driven command line.
"""

from .errors import (ConfigurationError, NumericalError, SfgError)
from .grid import Grid
from .materials import (bulk_index, build_index_map, default_profile, index_increase,
                        load_material_library)
from .modes import count_guided_modes, field_fwhm, mode_orthogonality, solve_modes
from .qpm import (ProcessSpec, TuningModel, delta_beta, energy_matched_output,
                  phasematching_curve, phasematching_response, phasematched_wavelength,
                  solve_poling_period)
from .coupling import (external_conversion_efficiency, gaussian_coupling, normalized_efficiency,
                       overlap_integral)
from .dynamics import LossModel, eta_analytic, integrate_three_wave

__version__ = "0.1.0"
