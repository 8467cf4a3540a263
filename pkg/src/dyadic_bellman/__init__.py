"""Sharp Carleson constants and Bellman functions for dyadic A2 weights."""

from .bellman_eval import (
    A_Lf_eval,
    K_alpha,
    K_of,
    a_f_eval,
    b_boundary,
    concave_upper_bound,
    k_alpha,
    k_of,
    s0_of,
    u_function,
    u_inverse,
)
from .dyadic_core import (
    DyadicInterval,
    DyadicWeight,
    OmegaPoint,
    a2_characteristic,
    carleson_norm_local,
    carleson_sum,
    concat,
    dyadic_maximal,
    interval_stats,
    random_a2_weight,
    scale,
)
from .exceptions import (
    BellmanError,
    CaseDispatchError,
    DomainError,
    InvalidWeightError,
    PreconditionError,
    ResourceError,
)
from .extremal_weights import (
    AfOptimizerParams,
    AlfOptimizerParams,
    af_optimizer,
    af_sum_analytic,
    alf_optimizer,
    alf_sigma_closed,
    alf_sigma_solve,
    counterexample_weight,
    two_step,
)
from .phi_spec import PhiSpec, classify, eval_f, eval_h, eval_phi, parse_phi
from .verifier import (
    OmegaLPoint,
    check_corr3,
    check_embedding,
    check_induction,
    check_leb,
    convergence_study,
    eval_P,
    eval_U,
    eval_V,
    eval_W,
    sweep,
)

__version__ = "0.1.0"
