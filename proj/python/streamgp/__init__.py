"""Streaming sparse Gaussian process regression toolkit."""

from ._core import (
    BatchRecord,
    Dataset,
    ExperimentConfig,
    FieldGrid,
    FieldSource,
    GridLocation,
    Hyperparameters,
    ModelKind,
    NormalRng,
    NumericalError,
    Objective,
    OptimizationResult,
    OptimizerConfig,
    Prediction,
    ResultTable,
    SamplingPlan,
    SparseState,
    SsgpConfig,
    SsgpUpdateResult,
    TerminationReason,
    apply_config_entry,
    check_gradient,
    emit_results,
    gpr_log_marginal_likelihood,
    gpr_predict,
    gpr_window_update,
    grow_pseudo_inputs,
    kernel_diag,
    kernel_matrix,
    lawnmower_plan,
    load_experiment_config,
    load_grid_csv,
    load_results_csv,
    minimize,
    nlpd,
    observe_batch,
    onboard_count,
    pack_params,
    pseudo_count_schedule,
    rmse,
    run_experiment,
    run_scaling_study,
    sample_gp_field,
    save_grid_csv,
    sparse_predict,
    spgp_fit_state,
    spgp_log_marginal_likelihood,
    ssgp_elbo,
    ssgp_init,
    ssgp_posterior,
    ssgp_update,
    unpack_params,
    vsgp_elbo,
    vsgp_optimal_q,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
