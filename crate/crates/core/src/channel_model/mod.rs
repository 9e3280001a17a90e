//! Time-correlated Rayleigh fading and the distribution of the fading power
//! conditioned on an aged measurement.
//!
//! The complex coefficient follows a first-order Gauss-Markov recursion with
//! per-cycle correlation `gamma`. Given a measured power `z`, the power `t`
//! cycles later is a scaled noncentral chi-square variable with two degrees
//! of freedom, parameterized by `a = gamma^t` and `b = 1 - gamma^(2t)`.

mod conditional;
mod fading;
mod table;

pub use conditional::{
    conditional_cdf, conditional_mean, conditional_pdf, gm_params, inverse_conditional_cdf,
    DirectInversion, GmParams, QuantileSource,
};
pub use fading::{evolve_fading, FadingCoefficient, GaussMarkov};
pub use table::{build_f_table, FTable, DEFAULT_BINS, DEFAULT_MAX_AGE, DEFAULT_Z_MAX};

use crate::error::{Error, Result};

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param(
            "gamma",
            format!("must lie in [0, 1), got {gamma}"),
        ));
    }
    Ok(())
}
