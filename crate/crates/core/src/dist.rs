//! Scalar distribution primitives.
//!
//! Gamma variates come from `rand_distr`, which uses the Marsaglia-Tsang
//! squeeze/accept-reject method for shape >= 1 and, for shape < 1, draws
//! Gamma(shape + 1) and multiplies by U^(1/shape).

use core::f64::consts::PI;

use libm::{lgamma, log};
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    /// `sd == 0` is allowed and yields the mean exactly.
    Normal { mean: f64, sd: f64 },
    /// Shape/rate parameterisation, mean `shape / rate`.
    Gamma { shape: f64, rate: f64 },
    ChiSquare { dof: f64 },
    /// `numerator / X` with `X ~ chi-square(dof)`.
    ScaledInvChiSquare { dof: f64, numerator: f64 },
    Uniform { low: f64, high: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain { name, value })
    }
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::ParameterDomain { name: "mean", value: mean });
                }
                if !(sd >= 0.0 && sd.is_finite()) {
                    return Err(Error::ParameterDomain { name: "sd", value: sd });
                }
                Ok(())
            }
            Dist::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)
            }
            Dist::ChiSquare { dof } => positive("dof", dof),
            Dist::ScaledInvChiSquare { dof, numerator } => {
                positive("dof", dof)?;
                positive("numerator", numerator)
            }
            Dist::Uniform { low, high } => {
                if low.is_finite() && high.is_finite() && low < high {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain { name: "high", value: high })
                }
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            Dist::Normal { mean, .. } => Some(mean),
            Dist::Gamma { shape, rate } => Some(shape / rate),
            Dist::ChiSquare { dof } => Some(dof),
            Dist::ScaledInvChiSquare { dof, numerator } => {
                (dof > 2.0).then(|| numerator / (dof - 2.0))
            }
            Dist::Uniform { low, high } => Some(0.5 * (low + high)),
        }
    }

    pub fn variance(&self) -> Option<f64> {
        match *self {
            Dist::Normal { sd, .. } => Some(sd * sd),
            Dist::Gamma { shape, rate } => Some(shape / (rate * rate)),
            Dist::ChiSquare { dof } => Some(2.0 * dof),
            Dist::ScaledInvChiSquare { dof, numerator } => (dof > 4.0).then(|| {
                let d2 = dof - 2.0;
                2.0 * numerator * numerator / (d2 * d2 * (dof - 4.0))
            }),
            Dist::Uniform { low, high } => Some((high - low) * (high - low) / 12.0),
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Dist::Normal { mean, sd } => normal_ln_pdf(x, mean, sd),
            Dist::Gamma { shape, rate } => gamma_ln_pdf(x, shape, rate),
            Dist::ChiSquare { dof } => gamma_ln_pdf(x, 0.5 * dof, 0.5),
            Dist::ScaledInvChiSquare { dof, numerator } => {
                inv_chi_square_ln_pdf(x, dof, numerator)
            }
            Dist::Uniform { low, high } => {
                if (low..high).contains(&x) {
                    -log(high - low)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        self.validate()?;
        Ok(self.sample_unchecked(rng))
    }

    pub(crate) fn sample_unchecked(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Dist::Normal { mean, sd } => {
                if sd == 0.0 {
                    mean
                } else {
                    mean + sd * rng.standard_normal()
                }
            }
            Dist::Gamma { shape, rate } => gamma(shape, rate, rng),
            Dist::ChiSquare { dof } => gamma(0.5 * dof, 0.5, rng),
            Dist::ScaledInvChiSquare { dof, numerator } => numerator / gamma(0.5 * dof, 0.5, rng),
            Dist::Uniform { low, high } => low + (high - low) * rng.uniform(),
        }
    }
}

/// Draw from `dist`, validating its parameters first.
pub fn draw(rng: &mut RngStream, dist: Dist) -> Result<f64> {
    dist.sample(rng)
}

fn gamma(shape: f64, rate: f64, rng: &mut RngStream) -> f64 {
    // parameters validated by caller
    rand_distr::Gamma::new(shape, 1.0 / rate)
        .expect("validated gamma parameters")
        .sample(rng)
}

pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - log(sd) - 0.5 * log(2.0 * PI)
}

pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * log(rate) - lgamma(shape) + (shape - 1.0) * log(x) - rate * x
}

/// Density of `numerator / chi-square(dof)`.
pub fn inv_chi_square_ln_pdf(x: f64, dof: f64, numerator: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let h = 0.5 * dof;
    h * log(0.5 * numerator) - lgamma(h) - (h + 1.0) * log(x) - 0.5 * numerator / x
}

/// Index drawn with probability proportional to `weights` (nonnegative,
/// not all zero).
pub fn categorical(weights: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.uniform() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding fell off the end
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Unit-scale Student-t log density.
pub fn student_t_ln_pdf(x: f64, dof: f64) -> f64 {
    lgamma(0.5 * (dof + 1.0))
        - lgamma(0.5 * dof)
        - 0.5 * log(dof * PI)
        - 0.5 * (dof + 1.0) * libm::log1p(x * x / dof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn moments(d: Dist, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = make_rng(seed, 0);
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..n {
            let x = d.sample(&mut rng).unwrap();
            s += x;
            ss += x * x;
        }
        let m = s / n as f64;
        (m, ss / n as f64 - m * m)
    }

    #[test]
    fn degenerate_normal() {
        let mut rng = make_rng(1, 0);
        assert_eq!(draw(&mut rng, Dist::Normal { mean: 3.0, sd: 0.0 }).unwrap(), 3.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = make_rng(1, 0);
        for d in [
            Dist::Normal { mean: 0.0, sd: -1.0 },
            Dist::Gamma { shape: 0.0, rate: 1.0 },
            Dist::Gamma { shape: 1.0, rate: -2.0 },
            Dist::ChiSquare { dof: 0.0 },
            Dist::ScaledInvChiSquare { dof: 3.0, numerator: 0.0 },
            Dist::Uniform { low: 1.0, high: 1.0 },
        ] {
            assert!(matches!(draw(&mut rng, d), Err(Error::ParameterDomain { .. })), "{d:?}");
        }
    }

    #[test]
    fn chi_square_mean() {
        let (m, _) = moments(Dist::ChiSquare { dof: 5.0 }, 1_000_000, 11);
        assert!((m - 5.0).abs() < 0.02, "mean {m}");
    }

    // empirical mean and variance within 4 standard errors for every family
    #[test]
    fn moment_checks() {
        let n = 1_000_000;
        let cases = [
            Dist::Normal { mean: -1.5, sd: 2.0 },
            Dist::Gamma { shape: 3.5, rate: 2.0 },
            Dist::Gamma { shape: 0.3, rate: 1.0 },
            Dist::Gamma { shape: 0.05, rate: 4.0 },
            Dist::ChiSquare { dof: 7.0 },
            Dist::ScaledInvChiSquare { dof: 12.0, numerator: 5.0 },
            Dist::Uniform { low: -2.0, high: 5.0 },
        ];
        for (i, d) in cases.iter().enumerate() {
            let (m, v) = moments(*d, n, 100 + i as u64);
            let var = d.variance().unwrap();
            let se_mean = libm::sqrt(var / n as f64);
            assert!((m - d.mean().unwrap()).abs() < 4.0 * se_mean, "{d:?}: mean {m}");
            // var(s^2) ~ (mu4 - sigma^4)/n; use a conservative kurtosis bound per family
            let kurt_bound = match d {
                Dist::Gamma { shape, .. } => 3.0 + 6.0 / shape,
                Dist::ChiSquare { dof } => 3.0 + 12.0 / dof,
                Dist::ScaledInvChiSquare { .. } => 40.0,
                _ => 3.0,
            };
            let se_var = var * libm::sqrt((kurt_bound - 1.0) / n as f64);
            assert!((v - var).abs() < 4.0 * se_var, "{d:?}: var {v} vs {var}");
        }
    }

    #[test]
    fn inv_chi_square_is_numerator_over_chi_square() {
        // same stream, same underlying chi-square draw
        let mut a = make_rng(5, 0);
        let mut b = make_rng(5, 0);
        let x = draw(&mut a, Dist::ScaledInvChiSquare { dof: 5.0, numerator: 3.0 }).unwrap();
        let c = draw(&mut b, Dist::ChiSquare { dof: 5.0 }).unwrap();
        assert_eq!(x, 3.0 / c);
    }

    #[test]
    fn densities_integrate_to_one() {
        let cases = [
            Dist::Gamma { shape: 2.5, rate: 1.5 },
            Dist::ScaledInvChiSquare { dof: 5.0, numerator: 2.0 },
            Dist::ChiSquare { dof: 3.0 },
        ];
        for d in cases {
            // midpoint rule on a log-spaced grid
            let n = 200_000;
            let (lo, hi) = (-12.0f64, 8.0f64);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                let u = lo + (i as f64 + 0.5) * h;
                let x = libm::exp(u);
                total += libm::exp(d.ln_pdf(x)) * x * h;
            }
            assert!((total - 1.0).abs() < 1e-6, "{d:?}: {total}");
        }
        let t_total: f64 = (0..400_000)
            .map(|i| {
                let x = -200.0 + (i as f64 + 0.5) * 0.001;
                libm::exp(student_t_ln_pdf(x, 4.0)) * 0.001
            })
            .sum();
        assert!((t_total - 1.0).abs() < 1e-5, "{t_total}");
    }
}
