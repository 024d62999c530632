"""Online adaptive statistical compressed sensing for Gaussian mixture models."""

from .adaptive import AdaptiveSession, Phase, new_session, run_adaptive
from .decoder import DecodeResult, map_decode, piecewise_decode, select_model
from .errors import (NumericError, PgmFormatError, ScsError, SessionStateError,
                     ValidationError)
from .gmm import (GaussianModel, Gmm, eigendecompose, linear_approx_error, log_score,
                  make_flipped_gaussian, make_power_law_gaussian, sample)
from .sensing import (MeasurementVector, SensingMatrix, concat, encode,
                      principal_direction_matrix, random_bernoulli_matrix,
                      random_gaussian_matrix)
from .simulation import (ErrorComponents, SweepResult, estimate_c0, make_synthetic_gmm,
                         run_adaptive_trial, run_standard_scs_trial, sweep_k)

__version__ = "0.1.0"
