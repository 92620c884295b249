"""smallball: simulation and robust-learning toolkit for almost-isometric
lower bounds on quadratic empirical processes.

The package computes stable-lower-bound parameters for several
distributional regimes, verifies block-wise lower bounds empirically,
reproduces the smallest-singular-value scaling law for heavy-tailed
designs, and compares ERM with block-tournament selection on heavy-tailed
regression problems.
"""

__version__ = "0.1.0"

from .blocks import (
    BlockPartition,
    FunctionHandle,
    NetSpec,
    good_block_count,
    linear_handle,
    min_good_blocks_over_net,
    packing_count,
    partition,
    quadratic_inf,
    rademacher_sup,
    rademacher_sup_linear_ball,
    random_sphere_net,
    separated_sphere_net,
    solve_critical_radius,
    star_hull_net,
)
from .distributions import (
    Dataset,
    ScalarLaw,
    estimate_norm_equiv_L,
    sample_isotropic,
    sample_regression,
    sample_scalar,
)
from .experiments import (
    SvGrid,
    fit_scaling_exponent,
    min_singular_value,
    run_sv_experiment,
    verify_main_theorem,
)
from .learners import (
    BernsteinEstimate,
    MatchOutcome,
    ModelClass,
    bernstein_constant,
    erm_finite,
    erm_linear_ball,
    excess_loss_decomposition,
    multiplier_sup_samples,
    r1_estimate,
    tournament_match,
    tournament_select,
)
from .runner import ExperimentConfig, ExperimentResult, report, run
from .slb import (
    MomentProfile,
    SlbConstants,
    SlbParams,
    bernoulli_moment_functional,
    estimate_slb_failure,
    mc_bernoulli_moment,
    slb_params_bounded,
    slb_params_lp,
    slb_params_norm_equiv,
    slb_params_uniform_integrable,
    tail_cutoff,
    trimmed_sq_mean,
)
from .streams import stream
