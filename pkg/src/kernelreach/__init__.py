"""Data-driven forward reachable set estimation with separating kernels.

Fit a support classifier to sampled terminal states of a stochastic system,
query membership in the estimated reachable set, and validate the estimate
with Hausdorff-distance and Monte Carlo containment diagnostics.
"""

from .estimator import (
    RECIPROCAL_M,
    FitConfig,
    ModelFormatError,
    SampleSet,
    SupportModel,
    classify,
    classify_batch,
    decision_threshold,
    decision_value,
    decision_values,
    fit,
    load_model,
    save_model,
)
from .geometry import (
    ContourSet,
    GridSpec,
    SweepRow,
    containment_rate,
    convergence_sweep,
    directed_hausdorff,
    extract_contour,
    grid_decision_values,
    grid_nodes,
    hausdorff,
    symmetric_difference_area,
    uniform_disk_sampler,
    write_contour_csv,
    write_sweep_csv,
)
from .kernels import ABEL, GAUSSIAN, GramMatrix, KernelSpec, gram, kernel_eval, kernel_metric
from .systems import (
    BoxInitial,
    CwhSystem,
    ExternalSource,
    GaussianDisturbance,
    MlpController,
    MlpLayer,
    NoDisturbance,
    PointInitial,
    SaturatedFeedback,
    ScaledBetaDisturbance,
    SystemConfig,
    ToraSystem,
    child_seed,
    cwh_discrete_matrices,
    cwh_step,
    load_mlp_controller,
    load_sample_csv,
    mlp_forward,
    rk4_step,
    sample_gaussian,
    sample_scaled_beta,
    sample_terminal_states,
    save_mlp_controller,
    save_sample_csv,
    simulate_trajectory,
    tora_derivative,
)

__all__ = [
    "ABEL",
    "GAUSSIAN",
    "RECIPROCAL_M",
    "BoxInitial",
    "ContourSet",
    "CwhSystem",
    "ExternalSource",
    "FitConfig",
    "GaussianDisturbance",
    "GramMatrix",
    "GridSpec",
    "KernelSpec",
    "MlpController",
    "MlpLayer",
    "ModelFormatError",
    "NoDisturbance",
    "PointInitial",
    "SampleSet",
    "SaturatedFeedback",
    "ScaledBetaDisturbance",
    "SupportModel",
    "SweepRow",
    "SystemConfig",
    "ToraSystem",
    "child_seed",
    "classify",
    "classify_batch",
    "containment_rate",
    "convergence_sweep",
    "cwh_discrete_matrices",
    "cwh_step",
    "decision_threshold",
    "decision_value",
    "decision_values",
    "directed_hausdorff",
    "extract_contour",
    "fit",
    "gram",
    "grid_decision_values",
    "grid_nodes",
    "hausdorff",
    "kernel_eval",
    "kernel_metric",
    "load_mlp_controller",
    "load_model",
    "load_sample_csv",
    "mlp_forward",
    "rk4_step",
    "sample_gaussian",
    "sample_scaled_beta",
    "sample_terminal_states",
    "save_mlp_controller",
    "save_model",
    "save_sample_csv",
    "simulate_trajectory",
    "symmetric_difference_area",
    "tora_derivative",
    "uniform_disk_sampler",
    "write_contour_csv",
    "write_sweep_csv",
]

__version__ = "0.1.0"
