"""Reflected backward solver for jump-and-diffusion scenario trees.

Public surface: marked-point-process model (mpp), tree construction
(lattice), envelope/decomposition (snell), the reflected solver and its
checks (rbsde), the fixed-point solver (picard), stopping rules and the
enumeration oracle (stopping), weighted norms (wnorm), instance builders
(instances) and the acceptance harness (verify).
"""

from .errors import (
    BetaTooSmall,
    BetaZero,
    BrownianBranchesPresent,
    BudgetExceeded,
    ConfigInvalid,
    EnumerationBudgetExceeded,
    NoConvergence,
    NonMonotoneCompensator,
    NotSupermartingale,
    RbsdeTreeError,
)
from .lattice import (
    DEFAULT_NODE_BUDGET,
    Representation,
    ScenarioTree,
    TimeGrid,
    build_tree,
    cexp_level,
    conditional_expectation,
    constant_process,
    extract_representation,
    leaf_expectation,
    process_from_state,
)
from .mpp import (
    CompensatorSpec,
    MarkSet,
    MppPath,
    compensated_integral,
    counting_process,
    simulate_path,
)
from .picard import (
    ContractionConfig,
    PicardTrace,
    Triple,
    composite_distance,
    picard_solve,
    select_contraction_parameters,
    zero_triple,
)
from .rbsde import (
    EquationResidualReport,
    GeneratorSpec,
    LipschitzConstants,
    RbsdeSolution,
    SkorohodReport,
    a_priori_majorant,
    check_equation_residual,
    check_skorohod,
    reward_process,
    running_gains,
    solve_given_generators,
    solve_mpp_only,
    solve_via_snell,
)
from .snell import (
    SnellDecomposition,
    doob_meyer,
    envelope_jump_support,
    snell_envelope,
)
from .stopping import (
    ENUMERATION_CAP,
    StoppingCertificate,
    StoppingRule,
    brute_force_value,
    epsilon_optimal_time,
    k_flatness_before_stop,
    reward_of_rule,
    rule_from_mask,
    smallest_optimal_time,
    stop_levels,
)
from .wnorm import WeightedNorm, cauchy_weight_bound, norm_sq

__version__ = "0.1.0"
