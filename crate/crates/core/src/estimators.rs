//! Ergodic averages, Rao-Blackwellised averages and mixing diagnostics.

use alloc::vec::Vec;

use libm::sqrt;

use crate::chain::ChainTrace;
use crate::error::{Error, Result};
use crate::oracle::ExactDistribution;

/// Scalar function values `g(state_t)` along a chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarSeries(Vec<f64>);

impl ScalarSeries {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarSeries(values)
    }

    pub fn from_trace<S>(trace: &ChainTrace<S>, g: impl Fn(&S) -> f64) -> Self {
        ScalarSeries(trace.map(g))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ScalarSeries {
    fn from(v: Vec<f64>) -> Self {
        ScalarSeries(v)
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn ergodic_average(s: &ScalarSeries) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::argument("empty series"));
    }
    Ok(mean_of(s.values()))
}

/// Mean of `E[g(theta) | y, z_i]` over the latent draws of a trace.
pub fn rao_blackwell_average<S>(
    z_trace: &ChainTrace<S>,
    cond_exp: impl Fn(&S) -> Option<f64>,
) -> Result<f64> {
    if z_trace.is_empty() {
        return Err(Error::argument("empty trace"));
    }
    let mut total = 0.0;
    for z in &z_trace.states {
        total += cond_exp(z).ok_or(Error::Capability("a conditional expectation"))?;
    }
    Ok(total / z_trace.len() as f64)
}

struct Centered {
    xs: Vec<f64>,
    c0: f64,
}

impl Centered {
    fn new(s: &[f64]) -> Result<Self> {
        let m = mean_of(s);
        let xs: Vec<f64> = s.iter().map(|x| x - m).collect();
        let c0 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        if !(c0 > 0.0) {
            return Err(Error::DegenerateSeries);
        }
        Ok(Centered { xs, c0 })
    }

    fn autocov(&self, k: usize) -> f64 {
        let n = self.xs.len();
        let (head, tail) = (&self.xs[..n - k], &self.xs[k..]);
        head.iter().zip(tail).map(|(a, b)| a * b).sum::<f64>() / n as f64
    }

    fn rho(&self, k: usize) -> f64 {
        self.autocov(k) / self.c0
    }
}

/// Sample autocorrelations at lags `0..=max_lag` with 1/n normalisation.
pub fn acf(s: &ScalarSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= s.len() {
        return Err(Error::argument("max_lag must be below the series length"));
    }
    let c = Centered::new(s.values())?;
    Ok((0..=max_lag).map(|k| c.rho(k)).collect())
}

/// Integrated autocorrelation time with its truncation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iact {
    pub tau: f64,
    pub window: usize,
    pub ess: f64,
    /// False when no window `K >= 5 tau(K)` exists below `n / 2`.
    pub reliable: bool,
}

/// Window constant of the self-consistent truncation rule.
pub const IACT_WINDOW_FACTOR: f64 = 5.0;

/// `tau = 1 + 2 sum_{k=1}^{K} rho(k)`, truncated at the smallest `K` with
/// `K >= 5 tau(K)`.
pub fn iact(s: &ScalarSeries) -> Result<Iact> {
    let n = s.len();
    if n < 100 {
        return Err(Error::argument("iact needs at least 100 values"));
    }
    let c = Centered::new(s.values())?;
    let mut tau = 1.0;
    for k in 1..n / 2 {
        tau += 2.0 * c.rho(k);
        if k as f64 >= IACT_WINDOW_FACTOR * tau {
            return Ok(Iact {
                tau,
                window: k,
                ess: n as f64 / tau,
                reliable: true,
            });
        }
    }
    Ok(Iact {
        tau,
        window: n / 2 - 1,
        ess: n as f64 / tau,
        reliable: false,
    })
}

/// Monte Carlo standard error of the mean, `sqrt(var * tau / n)`.
pub fn mc_standard_error(s: &ScalarSeries) -> Result<f64> {
    let est = iact(s)?;
    let c = Centered::new(s.values())?;
    Ok(sqrt(c.c0 * est.tau.max(f64::MIN_POSITIVE) / s.len() as f64))
}

/// Empirical frequencies of state indices in `0..n_states`.
pub fn histogram(indices: impl IntoIterator<Item = usize>, n_states: usize) -> Vec<f64> {
    let mut counts = alloc::vec![0u64; n_states];
    let mut total = 0u64;
    for i in indices {
        counts[i] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Total variation distance between an empirical law and an exact one.
pub fn tv_distance(empirical: &[f64], exact: &ExactDistribution) -> Result<f64> {
    tv_between(empirical, exact.probs())
}

pub fn tv_between(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::MismatchedSupport {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Paired comparison of the variances of two estimators computed on the
/// same replicates (Pitman-Morgan). `t` follows Student-t with `dof`
/// degrees of freedom under equal variances and is negative when
/// `var(a) < var(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedVarianceTest {
    pub var_a: f64,
    pub var_b: f64,
    pub correlation: f64,
    pub t: f64,
    pub dof: f64,
}

pub fn paired_variance_test(a: &[f64], b: &[f64]) -> Result<PairedVarianceTest> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::argument("paired samples of equal length >= 3 required"));
    }
    let n = a.len() as f64;
    let var = |xs: &[f64]| {
        let m = mean_of(xs);
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    };
    let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (ms, md) = (mean_of(&sum), mean_of(&diff));
    let cov = sum.iter().zip(&diff).map(|(s, d)| (s - ms) * (d - md)).sum::<f64>() / (n - 1.0);
    let r = cov / sqrt(var(&sum) * var(&diff));
    Ok(PairedVarianceTest {
        var_a: var(a),
        var_b: var(b),
        correlation: r,
        t: r * sqrt((n - 2.0) / (1.0 - r * r)),
        dof: n - 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn iid(n: usize, seed: u64) -> ScalarSeries {
        let mut rng = make_rng(seed, 0);
        ScalarSeries::new((0..n).map(|_| rng.standard_normal()).collect())
    }

    fn ar1(rho: f64, n: usize, seed: u64) -> ScalarSeries {
        let mut rng = make_rng(seed, 0);
        let mut x = rng.standard_normal() / sqrt(1.0 - rho * rho);
        let innov = sqrt(1.0 - rho * rho);
        ScalarSeries::new(
            (0..n)
                .map(|_| {
                    x = rho * x + innov * rng.standard_normal();
                    x
                })
                .collect(),
        )
    }

    #[test]
    fn averages() {
        assert_eq!(ergodic_average(&ScalarSeries::new(alloc::vec![4.5; 10])).unwrap(), 4.5);
        assert_eq!(ergodic_average(&ScalarSeries::new(alloc::vec![1.0, 2.0, 3.0])).unwrap(), 2.0);
        assert!(ergodic_average(&ScalarSeries::default()).is_err());
        let m = ergodic_average(&iid(1_000_000, 1)).unwrap();
        assert!(m.abs() < 0.004, "{m}");
    }

    #[test]
    fn rao_blackwell_constant_and_capability() {
        let mut t = ChainTrace::new("x", 0, 0, 0, 1);
        t.states = alloc::vec![1.0, 2.0, 3.0];
        assert_eq!(rao_blackwell_average(&t, |_| Some(2.5)).unwrap(), 2.5);
        assert_eq!(rao_blackwell_average(&t, |z| Some(*z)).unwrap(), 2.0);
        assert!(matches!(rao_blackwell_average(&t, |_| None), Err(Error::Capability(_))));
    }

    #[test]
    fn acf_white_noise_band() {
        let n = 10_000;
        let r = acf(&iid(n, 2), 20).unwrap();
        assert_eq!(r[0], 1.0);
        for &v in &r[1..] {
            assert!(v.abs() < 4.0 / sqrt(n as f64));
        }
    }

    #[test]
    fn acf_ar1() {
        let r = acf(&ar1(0.8, 100_000, 3), 1).unwrap();
        assert!((r[1] - 0.8).abs() < 0.02, "{}", r[1]);
    }

    #[test]
    fn acf_alternating() {
        let n = 1000;
        let s = ScalarSeries::new((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let r = acf(&s, 1).unwrap();
        assert!((r[1] + 1.0).abs() < 2.0 / n as f64);
    }

    #[test]
    fn acf_errors() {
        assert!(matches!(acf(&ScalarSeries::new(alloc::vec![2.0; 50]), 3), Err(Error::DegenerateSeries)));
        assert!(acf(&iid(10, 1), 10).is_err());
    }

    #[test]
    fn iact_iid() {
        let est = iact(&iid(100_000, 4)).unwrap();
        assert!((est.tau - 1.0).abs() < 0.1, "{est:?}");
        assert!(est.reliable);
        assert!((est.ess - 100_000.0 / est.tau).abs() < 1e-9);
    }

    #[test]
    fn iact_ar1() {
        let est = iact(&ar1(0.8, 1_000_000, 5)).unwrap();
        assert!((est.tau - 9.0).abs() < 1.0, "{est:?}");
    }

    #[test]
    fn iact_doubles_on_duplication() {
        let s = ar1(0.5, 200_000, 6);
        let dup: Vec<f64> = s.values().iter().flat_map(|&x| [x, x]).collect();
        let a = iact(&s).unwrap().tau;
        let b = iact(&ScalarSeries::new(dup)).unwrap().tau;
        assert!((b / a - 2.0).abs() < 0.3, "{a} -> {b}");
    }

    #[test]
    fn iact_short_series_rejected() {
        assert!(iact(&iid(99, 1)).is_err());
    }

    #[test]
    fn iact_flags_unterminated_window() {
        // a linear trend keeps every lag up to n/2 positively correlated
        let s = ScalarSeries::new((0..400).map(|i| i as f64).collect());
        assert!(!iact(&s).unwrap().reliable);
    }

    #[test]
    fn tv_basic() {
        let exact = ExactDistribution::from_weights(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(tv_distance(&[0.25, 0.25, 0.5], &exact).unwrap(), 0.0);
        assert_eq!(tv_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(tv_distance(&[1.0], &exact), Err(Error::MismatchedSupport { .. })));
    }

    #[test]
    fn histogram_frequencies() {
        assert_eq!(histogram([0, 2, 2, 1], 3), alloc::vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn paired_variance_detects_smaller_variance() {
        let mut rng = make_rng(9, 0);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..500 {
            let common = rng.standard_normal();
            a.push(0.3 * common);
            b.push(common + rng.standard_normal());
        }
        let t = paired_variance_test(&a, &b).unwrap();
        assert!(t.var_a < t.var_b);
        assert!(t.t < -5.0);
    }
}
