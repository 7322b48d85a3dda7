"""First-order Runge-Kutta-Chebyshev and multirate RKC integrators with a stability laboratory."""

from .cheb import ChebTriple, cheb_eval
from .errors import (
    BlowUpError,
    EstimationFailedError,
    InvalidInputError,
    NumericOverflowError,
    PreconditionError,
    UnsupportedCaseError,
)
from .integrators import (
    MrkcParameters,
    Solution,
    SpectralEstimates,
    SplitSystem,
    StepRecord,
    averaged_force,
    integrate,
    mrkc_step,
    rk4_reference,
    rkc_step,
    select_mrkc_parameters,
)
from .spectral import PowerMethodConfig, dense_spectral_radius, estimate_spectral_radius
from .tableau import ChebTableau, build_tableau, stability_interval

__version__ = "0.1.0"
