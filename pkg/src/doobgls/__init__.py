"""Doob-type tail and moment inequalities with Grand Lebesgue Space norms.

Tail models feed log-space quadrature for moments; on top of that sit the
Doob bounds, GLS norms and Young-Fenchel tail estimates, the sharpness
experiment on the exponential pair, and seeded Monte Carlo checks.
"""

__version__ = "0.1.0"

from .errors import (
    DivergenceError,
    DomainError,
    EmptySearchSpaceError,
    InfeasibleHypothesisError,
    NonIntegrableError,
    UnboundedQuantileError,
)
from .tail_model import (
    EmpiricalTable,
    Exponential,
    LogSquare,
    PowerLog,
    Scaled,
    SlowlyVarying,
    Subgaussian,
    TailFunction,
    eval_tail,
    point_mass,
    quantile,
)
from .quadrature import (
    GeneralH,
    PowerH,
    QuadratureConfig,
    kappa_p,
    moment_from_tail,
    norm_from_tail,
    truncated_mean,
)
from .doob_bounds import (
    IDENTICAL,
    DoobHypothesis,
    Independent,
    bound_report,
    closed_form_bound,
    derived_form_bound,
    min_admissible_C,
    multivariate_bound,
    optimize_bound,
    theorem_bound,
    vector_p_norm,
)
from .gls import (
    ConstantPsi,
    DeltaBetaTransform,
    NaturalOf,
    NuGamma,
    PsiML,
    Status,
    SubgaussianPsi,
    Tabulated,
    eval_psi,
    gls_norm,
    tail_from_gls,
    young_fenchel,
)
from .sharpness import sharpness_experiment, u_estimate, y_functional
from .montecarlo import SampleSet, empirical_moment, empirical_tail, sample, verify_bound, verify_hypothesis
