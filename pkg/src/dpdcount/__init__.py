"""Robust divergence-based estimation for count time series with covariates.

The estimator minimizes the average power-divergence loss between the
model's conditional pmf and the observations, trading efficiency for
outlier robustness through a tuning parameter in [0, 1]; at 0 it is the
conditional maximum likelihood estimator.  Hot numerical kernels run in
a compiled extension when available, with a pure-NumPy fallback
(``DPDCOUNT_BACKEND`` selects explicitly).
"""

from . import _backend
from .dataset import Dataset, read_csv, write_csv
from .diagnostics import (
    DiagReport,
    diagnose,
    pearson_residuals,
    prediction_interval,
    residual_mse,
)
from .dpd import (
    DpdConfig,
    divergence,
    objective,
    objective_grad,
    objective_hess,
    per_obs_loss,
    score_factor,
    score_factor_deriv,
)
from .errors import (
    DegenerateSample,
    DomainError,
    DpdcountError,
    ExplosionError,
    GridEmpty,
    InfeasibleParams,
    NegativeCount,
    NonConvergence,
    NonFiniteCovariate,
    ParseError,
    ScenarioUnstable,
    SingularInformation,
    TruncationError,
    TuneError,
)
from .families import Bernoulli, Family, NegBinomial, Poisson, family_from_spec
from .fitting import FitResult, KnotFit, fit, fit_knot, sandwich
from .meanmodel import (
    LinearIngarchX,
    OneKnot,
    ParamBox,
    knot_term,
    lambda_grad_path,
    lambda_hess_path,
    lambda_path,
)
from .montecarlo import KnotMcReport, McReport, knot_mc, run_mc
from .simulator import (
    Ar1Driver,
    Arch1Driver,
    ContamSpec,
    NegBinomialOutliers,
    PoissonOutliers,
    SimSpec,
    contaminate,
    drive_ar1,
    drive_arch1,
    simulate,
)
from .tuning import DEFAULT_GRID, TuneReport, amse, tune

__version__ = "0.1.0"

backend = _backend.kernels().name
