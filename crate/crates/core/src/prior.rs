//! Hyperpriors `pi(dtheta)` and the map `theta -> F_theta`.
//!
//! Hyperparameters are plain `Vec<f64>` so they serialise directly into run
//! reports and ABC traces.

use rand::RngCore;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{argument, shape, Result};
use crate::urn::BaseMeasureSpec;

pub trait Hyperprior: Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Log density up to a constant; `-inf` outside the support.
    fn log_density(&self, theta: &[f64]) -> f64;

    fn base_measure(&self, theta: &[f64]) -> Result<BaseMeasureSpec>;
}

/// Degenerate prior at a single `theta`; sampling consumes no randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub theta: Vec<f64>,
    pub base: BaseMeasureSpec,
}

impl PointMass {
    pub fn new(theta: Vec<f64>, base: BaseMeasureSpec) -> Result<Self> {
        base.validate()?;
        Ok(Self { theta, base })
    }

    /// Freezes another prior at `theta`.
    pub fn at(prior: &dyn Hyperprior, theta: &[f64]) -> Result<Self> {
        Self::new(theta.to_vec(), prior.base_measure(theta)?)
    }
}

impl Hyperprior for PointMass {
    fn sample(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        self.theta.clone()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta == self.theta.as_slice() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn base_measure(&self, _theta: &[f64]) -> Result<BaseMeasureSpec> {
        Ok(self.base.clone())
    }
}

fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + var.ln() + std::f64::consts::TAU.ln())
}

/// `sigma^2 ~ InvGamma(shape, scale)`, `mu_j ~ N(0, sigma^2)` for
/// `components` locations; `theta = (sigma^2, mu_1, ..)` and `F_theta` is the
/// equal-weight mixture of `N(mu_j, kernel_sd^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationMixturePrior {
    pub components: usize,
    pub ig_shape: f64,
    pub ig_scale: f64,
    pub kernel_sd: f64,
}

impl Default for LocationMixturePrior {
    fn default() -> Self {
        Self {
            components: 3,
            ig_shape: 1.0,
            ig_scale: 1.0,
            kernel_sd: 1.0,
        }
    }
}

impl LocationMixturePrior {
    pub fn sample_variance(&self, rng: &mut dyn RngCore) -> f64 {
        let g = Gamma::new(self.ig_shape, 1.0 / self.ig_scale).expect("positive IG parameters");
        1.0 / g.sample(rng)
    }
}

impl Hyperprior for LocationMixturePrior {
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let var = self.sample_variance(rng);
        let n = Normal::new(0.0, var.sqrt()).expect("finite variance");
        let mut theta = vec![var];
        theta.extend((0..self.components).map(|_| n.sample(rng)));
        theta
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.components + 1 || !(theta[0] > 0.0) {
            return f64::NEG_INFINITY;
        }
        let var = theta[0];
        let (a, b) = (self.ig_shape, self.ig_scale);
        let mut lp = -(a + 1.0) * var.ln() - b / var;
        for mu in &theta[1..] {
            lp += normal_logpdf(*mu, 0.0, var);
        }
        lp
    }

    fn base_measure(&self, theta: &[f64]) -> Result<BaseMeasureSpec> {
        if theta.len() != self.components + 1 {
            return shape(format!("expected {} hyperparameters", self.components + 1));
        }
        let k = self.components;
        let spec = BaseMeasureSpec::GaussianMixture {
            means: theta[1..].iter().map(|m| vec![*m]).collect(),
            weights: vec![1.0 / k as f64; k],
            sd: self.kernel_sd,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `beta ~ N(mean, sd^2 I)`; `F_beta` bootstraps covariates from `covariates`
/// and draws the label from the logistic model without intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticCoefficientPrior {
    pub mean: Vec<f64>,
    pub sd: f64,
    pub covariates: Vec<Vec<f64>>,
}

impl Hyperprior for LogisticCoefficientPrior {
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let n = Normal::new(0.0, self.sd).expect("positive sd");
        self.mean.iter().map(|m| m + n.sample(rng)).collect()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.mean.len() {
            return f64::NEG_INFINITY;
        }
        let var = self.sd * self.sd;
        theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| normal_logpdf(*t, *m, var))
            .sum()
    }

    fn base_measure(&self, theta: &[f64]) -> Result<BaseMeasureSpec> {
        let spec = BaseMeasureSpec::BootstrapLogistic {
            coefficients: theta.to_vec(),
            intercept: false,
            covariates: self.covariates.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Location `mu ~ N(mean, sd^2)` of a Gaussian `F_mu = N(mu, kernel_sd^2 I)`.
/// With `flat` the density is constant (improper), which is what the
/// `epsilon = inf` ABC sanity check needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLocationPrior {
    pub mean: Vec<f64>,
    pub sd: f64,
    pub kernel_sd: f64,
    pub flat: bool,
}

impl GaussianLocationPrior {
    pub fn new(mean: Vec<f64>, sd: f64, kernel_sd: f64) -> Result<Self> {
        if mean.is_empty() || !(sd > 0.0) || !(kernel_sd > 0.0) {
            return argument("location prior needs a mean and positive scales");
        }
        Ok(Self {
            mean,
            sd,
            kernel_sd,
            flat: false,
        })
    }
}

impl Hyperprior for GaussianLocationPrior {
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let n = Normal::new(0.0, self.sd).expect("positive sd");
        self.mean.iter().map(|m| m + n.sample(rng)).collect()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.mean.len() {
            return f64::NEG_INFINITY;
        }
        if self.flat {
            return 0.0;
        }
        let var = self.sd * self.sd;
        theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| normal_logpdf(*t, *m, var))
            .sum()
    }

    fn base_measure(&self, theta: &[f64]) -> Result<BaseMeasureSpec> {
        if theta.len() != self.mean.len() {
            return shape("location has the wrong dimension");
        }
        Ok(BaseMeasureSpec::GaussianMixture {
            means: vec![theta.to_vec()],
            weights: vec![1.0],
            sd: self.kernel_sd,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_mass_consumes_nothing() {
        let pm = PointMass::new(
            vec![1.0],
            BaseMeasureSpec::GaussianMixture {
                means: vec![vec![1.0]],
                weights: vec![1.0],
                sd: 1.0,
            },
        )
        .unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(pm.sample(&mut a), vec![1.0]);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn location_mixture_shapes() {
        let prior = LocationMixturePrior::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = prior.sample(&mut rng);
        assert_eq!(theta.len(), 4);
        assert!(theta[0] > 0.0);
        assert!(prior.log_density(&theta).is_finite());
        assert_eq!(prior.log_density(&[-1.0, 0.0, 0.0, 0.0]), f64::NEG_INFINITY);
        match prior.base_measure(&theta).unwrap() {
            BaseMeasureSpec::GaussianMixture { means, .. } => assert_eq!(means.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverse_gamma_mean() {
        // IG(3, 2) has mean 2 / (3 - 1) = 1
        let prior = LocationMixturePrior {
            ig_shape: 3.0,
            ig_scale: 2.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| prior.sample_variance(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }
}
