//! CAPM time-series regressions and Fama–MacBeth two-pass pricing of the
//! extracted factors, with Newey–West inference.

mod capm;
mod comparison;
mod fama_macbeth;
mod ols;

pub use capm::{capm_regress, capm_table, market_excess, run_capm, CapmRow, MarketProxy, MIN_CAPM_OBS};
pub use comparison::{capm_design_condition, model_comparison, stability_label};
pub use fama_macbeth::{
    fama_macbeth, first_pass_betas, fm_premia, fm_table, newey_west_se, second_pass, BetaMatrix, FmResult,
    SecondPass, FIRST_PASS_MARGIN, MIN_FM_PERIODS,
};
pub use ols::{ols, RegressionResult};
