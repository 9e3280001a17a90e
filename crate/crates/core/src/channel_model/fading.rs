use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;

use super::check_gamma;
use crate::error::Result;

/// Complex fading coefficient. Stationary law: real and imaginary parts
/// i.i.d. N(0, 1/2), so the power `|h|^2` is a unit-mean exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingCoefficient {
    pub re: f64,
    pub im: f64,
}

impl FadingCoefficient {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Draw from the stationary distribution.
    pub fn stationary<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Self {
            re: re * FRAC_1_SQRT_2,
            im: im * FRAC_1_SQRT_2,
        }
    }

    /// Squared magnitude `|h|^2`.
    pub fn power(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Gauss-Markov stepper with the innovation scale precomputed.
#[derive(Clone, Copy, Debug)]
pub struct GaussMarkov {
    gamma: f64,
    innovation: f64,
}

impl GaussMarkov {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gamma,
            innovation: (1.0 - gamma * gamma).sqrt(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `gamma * h + sqrt(1 - gamma^2) * xi`, `xi` a unit-variance circular
    /// complex Gaussian.
    pub fn step<R: Rng + ?Sized>(&self, h: FadingCoefficient, rng: &mut R) -> FadingCoefficient {
        let xi = FadingCoefficient::stationary(rng);
        FadingCoefficient {
            re: self.gamma * h.re + self.innovation * xi.re,
            im: self.gamma * h.im + self.innovation * xi.im,
        }
    }
}

/// One step of the Gauss-Markov recursion.
pub fn evolve_fading<R: Rng + ?Sized>(
    h: FadingCoefficient,
    gamma: f64,
    rng: &mut R,
) -> Result<FadingCoefficient> {
    Ok(GaussMarkov::new(gamma)?.step(h, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_gamma_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = FadingCoefficient::new(1.0, 0.0);
        assert!(evolve_fading(h, 1.0, &mut rng).is_err());
        assert!(evolve_fading(h, -0.1, &mut rng).is_err());
        assert!(evolve_fading(h, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn zero_gamma_forgets_the_past() {
        let h = FadingCoefficient::new(100.0, -100.0);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let next = evolve_fading(h, 0.0, &mut a).unwrap();
        assert_eq!(next, FadingCoefficient::stationary(&mut b));
    }

    #[test]
    fn gamma_near_one_keeps_the_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = FadingCoefficient::new(0.3, -0.7);
        let next = evolve_fading(h, 1.0 - 1e-12, &mut rng).unwrap();
        assert!((next.re - h.re).abs() < 1e-5);
        assert!((next.im - h.im).abs() < 1e-5);
    }

    #[test]
    fn seeded_paths_are_bit_reproducible() {
        let run = |seed| {
            let gm = GaussMarkov::new(0.9).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut h = FadingCoefficient::stationary(&mut rng);
            for _ in 0..100 {
                h = gm.step(h, &mut rng);
            }
            (h.re.to_bits(), h.im.to_bits())
        };
        assert_eq!(run(77), run(77));
        assert_ne!(run(77), run(78));
    }

    #[test]
    fn lag_one_autocorrelation_matches_gamma() {
        let gm = GaussMarkov::new(0.95).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let mut h = FadingCoefficient::stationary(&mut rng);
        let (mut s_xy, mut s_xx, mut s_x) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let next = gm.step(h, &mut rng);
            s_xy += h.re * next.re;
            s_xx += h.re * h.re;
            s_x += h.re;
            h = next;
        }
        let mean = s_x / n as f64;
        let rho = (s_xy / n as f64 - mean * mean) / (s_xx / n as f64 - mean * mean);
        assert!((rho - 0.95).abs() < 0.01, "lag-1 autocorrelation {rho}");
    }

    #[test]
    fn stationary_power_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| FadingCoefficient::stationary(&mut rng).power())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
    }
}
