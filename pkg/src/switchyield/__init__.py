"""Thermodynamic bounds on the yield of molecular photoswitches.

Thermal, Markovian and embeddable (time-independent Markovian) thermal
operations are handled through their action on population vectors, i.e.
through Gibbs-stochastic matrices.
"""

from .thermo import (
    INFINITY,
    TOL_P,
    PhotoisomerInstance,
    ThermalSystem,
    beta_order,
    gibbs_state,
    gibbs_weights,
    populations,
)
from .curves import ThermoCurve, build_curve, curve_eval, thermomajorizes
from .gibbs_maps import (
    ConstraintError,
    GibbsStochasticMatrix,
    GS3Params,
    GS4Params,
    SamplerError,
    gs3_from_params,
    gs3_inf_from_params,
    gs4_from_params,
    sample_gs3,
    validate,
)
from .rates import RateMatrix, exp_rate, thermal_rate_matrix
from .embedding import (
    Embeddability,
    EmbeddabilityVerdict,
    embeddability_check,
    f_lambda,
    spectrum3,
)
from .markov import (
    ReachabilityResult,
    ThermalizationStep,
    ctm_reachable,
    full_thermalization,
    max_yield_search,
    partial_thermalization,
)
from .bounds import (
    YieldReport,
    f_k,
    gamma_embed_optimize,
    gamma_markov,
    gamma_markov_paths,
    gamma_star,
    gamma_star_bruteforce,
    gamma_star_gs4_bound,
    gamma_th,
    q_tilde,
    report,
    yield_of_gs3,
)

__version__ = "0.1.0"
