//! Special functions backing the conditional fading distribution.
//!
//! The squared fading magnitude conditioned on an older measurement is a
//! scaled noncentral chi-square variable with two degrees of freedom. Its
//! density needs the exponentially scaled Bessel function `I0e`, and its CDF
//! is evaluated as a Poisson mixture of regularized lower incomplete gamma
//! functions with integer shape.

// Cephes Chebyshev coefficients for exp(-x) I0(x).
// Interval [0, 8], argument x/2 - 2.
#[allow(clippy::excessive_precision, clippy::unreadable_literal)]
const BESSI0_COEFFS_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

// Interval (8, inf), argument 32/x - 2, result scaled by 1/sqrt(x).
#[allow(clippy::excessive_precision, clippy::unreadable_literal)]
const BESSI0_COEFFS_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

/// Poisson weights below this value are dropped from the CDF mixture. The
/// discarded mass is bounded by roughly `WEIGHT_CUTOFF * sqrt(mean)`, far
/// below 1e-12 for every mean the channel model produces.
const WEIGHT_CUTOFF: f64 = 1e-18;

const SERIES_EPS: f64 = 1e-17;

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, *c) - b2;
    }
    0.5 * (b0 - b2)
}

/// Exponentially scaled modified Bessel function of the first kind, order
/// zero: `exp(-|x|) * I0(x)`. Finite for every finite argument.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 8.0 {
        chbevl(ax.mul_add(0.5, -2.0), &BESSI0_COEFFS_A)
    } else {
        chbevl(32.0_f64.mul_add(ax.recip(), -2.0), &BESSI0_COEFFS_B) / ax.sqrt()
    }
}

/// Modified Bessel function of the first kind, order zero. Overflows to
/// infinity for `|x|` above roughly 713; use [`bessel_i0e`] there.
pub fn bessel_i0(x: f64) -> f64 {
    x.abs().exp() * bessel_i0e(x)
}

/// `ln(n!)`, exact product for small `n`, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        let mut p = 1.0_f64;
        for k in 2..=n {
            p *= k as f64;
        }
        return p.ln();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Regularized lower incomplete gamma `P(n, s)` for integer shape `n >= 1`.
pub fn gamma_p_int(n: u64, s: f64) -> f64 {
    debug_assert!(n >= 1);
    if s <= 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    if s < nf + 1.0 {
        // P(n, s) = e^-s s^n / n! * sum_k s^k / ((n+1)...(n+k))
        let lead = nf * s.ln() - s - ln_factorial(n);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= s / (nf + k);
            sum += term;
            if term < SERIES_EPS * sum {
                break;
            }
            k += 1.0;
        }
        (lead.exp() * sum).min(1.0)
    } else {
        // Q(n, s) = e^-s sum_{k<n} s^k / k!; terms grow with k here, so sum
        // downward from the largest one.
        let mut ln_term = (nf - 1.0) * s.ln() - s - ln_factorial(n - 1);
        let mut q = 0.0;
        let mut k = n - 1;
        loop {
            let t = ln_term.exp();
            q += t;
            if k == 0 || t < SERIES_EPS * q {
                break;
            }
            ln_term += (k as f64).ln() - s.ln();
            k -= 1;
        }
        (1.0 - q).max(0.0)
    }
}

/// CDF of a noncentral chi-square variable with two degrees of freedom,
/// expressed in half-scale units: returns `P[Y <= 2 s]` where `Y` has
/// noncentrality `2 mu`. Equivalently `1 - Q1(sqrt(2 mu), sqrt(2 s))` with
/// `Q1` the first-order Marcum Q-function.
///
/// Evaluated as `sum_j Pois(j; mu) P(j + 1, s)`. The window of Poisson
/// indices is centred on the mode and grown until the weights fall below
/// `WEIGHT_CUTOFF`; the incomplete gammas are produced by the downward
/// recurrence `P(j, s) = P(j + 1, s) + e^-s s^j / j!`, which only adds
/// positive terms and so keeps full relative accuracy in the lower tail.
pub fn noncentral_chi2_2dof_half_cdf(s: f64, mu: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if mu <= 0.0 {
        return -(-s).exp_m1();
    }

    let mode = mu.floor() as u64;
    let ln_mu = mu.ln();
    let ln_w_mode = mode as f64 * ln_mu - mu - ln_factorial(mode);

    let mut hi = mode;
    let mut ln_w_hi = ln_w_mode;
    let ln_cut = WEIGHT_CUTOFF.ln();
    while ln_w_hi > ln_cut {
        hi += 1;
        ln_w_hi += ln_mu - (hi as f64).ln();
    }
    let mut lo = mode;
    let mut ln_w_lo = ln_w_mode;
    while lo > 0 && ln_w_lo > ln_cut {
        ln_w_lo += (lo as f64).ln() - ln_mu;
        lo -= 1;
    }

    let ln_s = s.ln();
    let mut p_next = gamma_p_int(hi + 1, s);
    let mut ln_g = hi as f64 * ln_s - s - ln_factorial(hi);
    let mut ln_w = ln_w_hi;
    let mut acc = 0.0;
    let mut j = hi;
    loop {
        acc += ln_w.exp() * p_next;
        if j == lo {
            break;
        }
        // P(j, s) from P(j + 1, s)
        p_next += ln_g.exp();
        let jf = j as f64;
        ln_g += jf.ln() - ln_s;
        ln_w += jf.ln() - ln_mu;
        j -= 1;
    }
    acc.clamp(0.0, 1.0)
}
