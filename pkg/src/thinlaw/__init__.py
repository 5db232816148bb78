"""Binomial thinning, its conditioned transform T_{p,m}, and the scale-free fixed points."""
from .convergence import ConvergenceReport, iterate_schedule, run_convergence
from .dist import (
    DiscreteDist,
    from_pmf,
    geometric,
    moment,
    pgf,
    point_mass,
    poisson,
    tail,
    tv_distance,
)
from .exceptions import (
    AcceptanceTooLow,
    DegenerateConditioning,
    InvalidDistribution,
    InvalidParams,
    InvalidSequence,
    RatioUndefined,
    TailUnsampleable,
    ThinlawError,
)
from .fixed_points import FixedPointParams, fixed_point, regvar_family, yule_simon
from .infdiv import InfDivDecomposition, decompose
from .mc_oracle import SampleReport, mc_transform, sample_dist
from .thinning import TransformParams, condition_at_least, thin, transform

__version__ = "0.1.0"

__all__ = [
    "AcceptanceTooLow",
    "ConvergenceReport",
    "DegenerateConditioning",
    "DiscreteDist",
    "FixedPointParams",
    "InfDivDecomposition",
    "InvalidDistribution",
    "InvalidParams",
    "InvalidSequence",
    "RatioUndefined",
    "SampleReport",
    "TailUnsampleable",
    "ThinlawError",
    "TransformParams",
    "condition_at_least",
    "decompose",
    "fixed_point",
    "from_pmf",
    "geometric",
    "iterate_schedule",
    "mc_transform",
    "moment",
    "pgf",
    "point_mass",
    "poisson",
    "regvar_family",
    "run_convergence",
    "sample_dist",
    "tail",
    "thin",
    "transform",
    "tv_distance",
    "yule_simon",
]
