"""Palm calculus for stationary Poisson-Poisson cluster processes.

Analytic evaluators (Palm intensity, generating functionals, nearest
neighbor distance, D2D coverage and device discovery) cross-validated by
a Monte Carlo engine that samples stationary and Palm PPCPs and checks
the exchange formula between the parent and cluster Palm distributions.
"""

from .coverage_analytic import (
    ConvergenceError,
    c_hat,
    coverage,
    discovery,
    e_hat,
    i_hat,
    ppp_coverage,
    ppp_discovery,
)
from .offspring import MaternKernel, OffspringKernel, ThomasKernel, kernel_from_config
from .palm_analytic import (
    ExchangeResult,
    PalmFunctional,
    RadialTestFunction,
    ball_indicator,
    nnd_ccdf,
    offspring_pgfl,
    palm_intensity_ball,
    palm_pgfl,
    stationary_pgfl,
    verify_exchange,
)
from .pointproc import (
    ClusterSpec,
    PointPattern,
    SimConfig,
    nearest_transmitter,
    replication_rng,
    sample_cluster,
    sample_palm_ppcp,
    sample_parent_ppp,
    sample_ppcp,
    thin,
)
from .quadrature import QuadPolicy, QuadResult, QuadratureError, integrate, integrate_semi_infinite
from .sinr_mc import (
    CensoringError,
    EstimateCI,
    NetworkSpec,
    estimate_coverage,
    estimate_discovery,
    estimate_nnd,
    sinr_at_origin,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    "CensoringError",
    "ClusterSpec",
    "ConvergenceError",
    "EstimateCI",
    "ExchangeResult",
    "MaternKernel",
    "NetworkSpec",
    "OffspringKernel",
    "PalmFunctional",
    "PointPattern",
    "QuadPolicy",
    "QuadResult",
    "QuadratureError",
    "RadialTestFunction",
    "SimConfig",
    "ThomasKernel",
    "ball_indicator",
    "c_hat",
    "coverage",
    "discovery",
    "e_hat",
    "estimate_coverage",
    "estimate_discovery",
    "estimate_nnd",
    "i_hat",
    "integrate",
    "integrate_semi_infinite",
    "kernel_from_config",
    "nearest_transmitter",
    "nnd_ccdf",
    "offspring_pgfl",
    "palm_intensity_ball",
    "palm_pgfl",
    "ppp_coverage",
    "ppp_discovery",
    "replication_rng",
    "sample_cluster",
    "sample_palm_ppcp",
    "sample_parent_ppp",
    "sample_ppcp",
    "sinr_at_origin",
    "stationary_pgfl",
    "thin",
    "verify_exchange",
]
