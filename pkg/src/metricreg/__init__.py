"""Online nonparametric regression under a learned Mahalanobis metric."""
from .effective_rank import (RankTracker, effective_rank, effective_rank_tilde, kappa,
                             kappa_tilde, separation_report)
from .errors import (AlignmentError, DimensionError, DomainError, EmptyStore, InvalidExample,
                     MetricRegError, NotPositiveDefinite, NumericalFailure, SpecError)
from .gop import BandwidthSchedule, GopEstimate, estimate_gop, finite_diff_gradient, kernel_regress
from .linalg import (Metric, Spectrum, eig_sym, mahalanobis_distance, principal_angles,
                     spectral_normalize, truncated_determinant)
from .phased import RegularizationSchedule, build_metric, phase_end, phase_of_round, run_phased
from .regressor import Dataset, LabeledExample, OnlineRegressor, run_sequence

__version__ = "0.1.0"
