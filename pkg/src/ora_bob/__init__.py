"""Online resource allocation under budget and general long-term constraints.

A simulation and verification engine: a dual-gradient-descent allocator with
a hard budget gate, stochastic and adversarial environments, exact offline
oracles (dynamic optimum, LP relaxation, Slater parameters), trajectory
metrics with closed-form bound checks, and an audit layer that re-derives the
run's invariants from recorded traces.
"""

from .allocator import AllocatorState, default_config, gate_open, run, step, stopping_time
from .core import (
    ActionSet,
    BudgetSpec,
    DualVector,
    InputTuple,
    Instance,
    InstanceValidationError,
    RoundRecord,
    Trajectory,
    UnifiedConstraints,
    ValidationError,
    ValidationReport,
    unify_constraints,
    validate_instance,
)
from .dual_ogd import (
    OgdConfig,
    dual_drift_audit,
    dual_penalty_audit,
    interval_regret_audit,
    learning_rate,
    ogd_step,
)
from .environments import (
    Example1Fixture,
    Seed,
    StochasticModel,
    constant_instance,
    load_instance,
    make_example1_instance,
    make_pacing_model,
    make_push_pull_model,
    random_instance,
    random_model,
    sample_instance,
    sample_sequence,
    save_instance,
)
from .lagrangian import best_response, lagrangian_value
from .metrics import (
    RunSummary,
    alpha_regret,
    regret,
    run_summary,
    theorem_bounds,
    total_reward,
    violation,
)
from .oracles import (
    OracleReport,
    SizeGuardError,
    alpha,
    opt_bruteforce,
    opt_lp_relax,
    opt_stoc_estimate,
    slater_adv,
    slater_adv_bruteforce,
    slater_safe_sequence,
    slater_stoc,
)

__version__ = "0.1.0"
