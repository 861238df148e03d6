"""Dispersive qubit readout enhanced by intracavity two-mode squeezing.

Submodules
----------
params    system parameters, derived rates, validity checks
analytic  closed-form signal, noise, SNR, rates and measurement times
spectra   output squeezing spectrum, densities of states, Purcell rates
lindblad  truncated-Fock master-equation engine (JC vs dispersive)
sweeps    figure datasets with manifest-stamped CSV/JSON output
cli       command-line frontend
"""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    DomainError,
    InstabilityError,
    IstmsError,
    NoConvergenceError,
    NonUniqueSteadyStateError,
)
from .params import SystemParams, derived, derive_chi, n_crit, n_sqz, validity_report
from .analytic import DriveConfig, gamma_istms, snr, tau_star
