//! Large-system performance predictions from the replica fixed-point equations.

pub mod high_snr;
pub mod output;
pub mod solver;
pub mod step_size;

pub use high_snr::{high_snr_cb, high_snr_cb_linear, high_snr_mse_h_db};
pub use output::{bin_entropy, chi, psi_b, psi_b_prime, AdcModel, OutputState};
pub use solver::{predict_performance, solve_fixed_point, Prediction, ReplicaInput, ReplicaSolution, ReplicaSolver};
pub use step_size::{default_grid, fitted_step_size, optimal_step_size, StepSizeResult};
