use super::check_gamma;
use crate::error::{Error, Result};
use crate::special::{bessel_i0e, noncentral_chi2_2dof_half_cdf};

const MAX_BISECTIONS: usize = 400;
const MAX_BRACKET_DOUBLINGS: usize = 60;
/// Inversion contract: `|F(x) - p|` at the returned point.
const INVERSION_TOL: f64 = 1e-9;

/// Parameters of the fading power distribution `age` cycles after a
/// measurement: `a = gamma^age`, `b = 1 - gamma^(2 age)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmParams {
    pub a: f64,
    pub b: f64,
    pub age: u32,
    pub gamma: f64,
}

impl GmParams {
    /// The memoryless limit: the measurement carries no information and the
    /// power is a unit-mean exponential.
    pub fn no_csi() -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            age: u32::MAX,
            gamma: 0.0,
        }
    }
}

pub fn gm_params(gamma: f64, age: u32) -> Result<GmParams> {
    check_gamma(gamma)?;
    if age < 1 {
        return Err(Error::param("age_t", "CSI age must be at least one cycle"));
    }
    let t = f64::from(age);
    let (a, b) = if gamma == 0.0 {
        (0.0, 1.0)
    } else {
        let ln_g = gamma.ln();
        // expm1 keeps b accurate when gamma is close to one
        ((t * ln_g).exp(), -(2.0 * t * ln_g).exp_m1())
    };
    Ok(GmParams { a, b, age, gamma })
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || v.is_infinite() {
        return Err(Error::param(
            name,
            format!("must be finite and non-negative, got {v}"),
        ));
    }
    Ok(())
}

/// Conditional density of the fading power `x` given a measured power `z`.
///
/// `(1/b) e^{-x/b} e^{-a^2 z/b} I0(2a sqrt(xz)/b)`, evaluated as
/// `(1/b) exp(-(sqrt(s) - sqrt(mu))^2) I0e(2 sqrt(mu s))` with `s = x/b`,
/// `mu = a^2 z / b`, which stays finite where the raw product overflows.
pub fn conditional_pdf(x: f64, z: f64, params: &GmParams) -> Result<f64> {
    check_nonneg("x", x)?;
    check_nonneg("z", z)?;
    let GmParams { a, b, .. } = *params;
    let s = x / b;
    let mu = a * a * z / b;
    let d = s.sqrt() - mu.sqrt();
    Ok((-d * d).exp() * bessel_i0e(2.0 * (mu * s).sqrt()) / b)
}

/// `P[|h|^2 <= x | measured z]`: noncentral chi-square with two degrees of
/// freedom and noncentrality `2 a^2 z / b`, evaluated at `2x / b`.
pub fn conditional_cdf(x: f64, z: f64, params: &GmParams) -> Result<f64> {
    check_nonneg("x", x)?;
    check_nonneg("z", z)?;
    Ok(cdf_unchecked(x, z, params))
}

fn cdf_unchecked(x: f64, z: f64, params: &GmParams) -> f64 {
    let GmParams { a, b, .. } = *params;
    noncentral_chi2_2dof_half_cdf(x / b, a * a * z / b)
}

/// Quantile of the conditional distribution by bisection.
///
/// The initial bracket is `[0, max(8, a^2 z + b + 40 b)]`; the upper end is
/// doubled until it covers `p`, which only matters for `p` close to one.
pub fn inverse_conditional_cdf(p: f64, z: f64, params: &GmParams) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
    }
    check_nonneg("z", z)?;
    let GmParams { a, b, .. } = *params;
    if !(b > 0.0) {
        return Err(Error::param("b", "conditional variance must be positive"));
    }

    let mut lo = 0.0_f64;
    let mut hi = (a * a * z + b + 40.0 * b).max(8.0);
    let mut doublings = 0;
    while cdf_unchecked(hi, z, params) < p {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::Numeric(format!(
                "could not bracket quantile p={p} (z={z}, a={a}, b={b})"
            )));
        }
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf_unchecked(mid, z, params) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let err = (cdf_unchecked(x, z, params) - p).abs();
    if err > INVERSION_TOL {
        return Err(Error::Numeric(format!(
            "bisection stalled at |F(x) - p| = {err:e} (p={p}, z={z}, a={a}, b={b})"
        )));
    }
    Ok(x)
}

/// `E[|h|^2 | measured z] = a^2 z + b`.
pub fn conditional_mean(z: f64, params: &GmParams) -> Result<f64> {
    check_nonneg("z", z)?;
    Ok(params.a * params.a * z + params.b)
}

/// Source of the outage quantile `F_t^{-1}(1 - rho | z)` used to size
/// allocations.
pub trait QuantileSource: Send + Sync {
    /// Per-cycle fading correlation.
    fn gamma(&self) -> f64;

    /// Target reliability.
    fn rho(&self) -> f64;

    /// Quantile of the fading power at CSI age `age >= 1` given measured
    /// power `z`.
    fn quantile(&self, age: u32, z: f64) -> Result<f64>;

    /// Quantile with no CSI at all: `-ln(rho)`.
    fn no_csi_quantile(&self) -> f64 {
        -self.rho().ln()
    }
}

/// Exact quantiles by root-finding on every call.
#[derive(Clone, Copy, Debug)]
pub struct DirectInversion {
    gamma: f64,
    rho: f64,
}

impl DirectInversion {
    pub fn new(gamma: f64, rho: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::param(
                "rho",
                format!("must lie in (0, 1), got {rho}"),
            ));
        }
        Ok(Self { gamma, rho })
    }
}

impl QuantileSource for DirectInversion {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn quantile(&self, age: u32, z: f64) -> Result<f64> {
        let params = gm_params(self.gamma, age)?;
        inverse_conditional_cdf(1.0 - self.rho, z, &params)
    }
}
