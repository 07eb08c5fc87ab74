//! Dynamic factor model in state-space form: Kalman filtering and smoothing
//! with missing data, EM estimation, model-order criteria and simulation.

mod criteria;
mod em;
mod filter;
mod params;
mod pca;
mod selection;
mod simulate;
mod smoother;

pub use criteria::{condition_number, information_criteria, n_params};
pub use em::{fit_mle, fit_mle_data, identification_rotation, DfmFit, FitOptions, MAX_FITTED_MODULUS};
pub use filter::{
    kalman_filter, kalman_filter_data, FilterOutput, FilterStep, InitialState, MAX_INNOVATION_CONDITION,
};
pub use params::StateSpaceParams;
pub use pca::{pca_init, pca_init_data, MAX_INITIAL_MODULUS, OBS_VAR_FLOOR, STATE_COV_FLOOR};
pub use selection::selection_table;
pub use simulate::{simulate_dfm, SimulatedDfm};
pub use smoother::{kalman_smoother, SmootherOutput};
