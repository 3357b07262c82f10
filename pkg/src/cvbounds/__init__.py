"""Cross-validation risk estimation with finite-sample deviation bounds.

The package has three layers: exact machinery (resampling plans over
binary train/test masks, exact ERM for threshold and interval predictors,
the generalized CV estimator), closed-form deviation bounds with
split-optimization and confidence-interval rules, and a Monte Carlo
harness that validates the bounds and the exact comparison lemma on
synthetic problems whose true risk is known analytically.
"""

from .resampling import (
    BinaryVector,
    ResamplingPlan,
    make_custom,
    make_holdout,
    make_kfold,
    make_leave_v_out,
    make_loo,
    plan_from_dict,
    plan_from_json,
    plan_to_dict,
    plan_to_json,
    test_vector,
)
from .learners import (
    CLIPPED_ABSOLUTE,
    Dataset,
    HypothesisClass,
    IntervalPredictor,
    Loss,
    SyntheticDistribution,
    ThresholdPredictor,
    ZERO_ONE,
    empirical_risk,
    erm_fit,
    shatter_bound,
    true_risk,
)
from .cv import (
    CvEstimates,
    cross_validate,
    cv_at_least_resub_exact,
    estimates,
    resubstitution,
    supports_exact_comparison,
)
from .bounds import (
    BoundQuery,
    BoundValue,
    CiResult,
    CurveResult,
    InfeasibleCiError,
    OptimalSplit,
    bound_abs_large,
    bound_abs_small,
    bound_holdout,
    bound_kfold_combined,
    bound_kfold_improved,
    bound_large_lower,
    bound_large_upper,
    bound_sym_combined,
    confidence_interval_search,
    estimation_curve,
    evaluate_procedure,
    l1_bound_chained,
    l1_bound_large,
    l1_bound_small,
    optimal_split_l1,
    ratio_b_sym_over_b_hold,
    ratio_v_kfold_over_v_sym,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    PlanSpec,
    TrialRecord,
    compare_procedures,
    run_experiment,
    run_trial,
    trial_key,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
