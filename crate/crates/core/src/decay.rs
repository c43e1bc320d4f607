//! Energy-relaxation fits: `A exp(-t / T1) + B` on a delay trace.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, FitError, ParamError};
use crate::lsq::{covariance, levenberg_marquardt, Bounds, LsqOptions};

pub const MIN_DECAY_POINTS: usize = 4;

/// Population measured after a variable delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub delays_us: Vec<f64>,
    pub population: Vec<f64>,
}

impl DecayTrace {
    pub fn new(delays_us: Vec<f64>, population: Vec<f64>) -> Result<Self, DataError> {
        let t = Self { delays_us, population };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.delays_us.len() != self.population.len() {
            return Err(DataError::Malformed(format!(
                "{} delays but {} population values",
                self.delays_us.len(),
                self.population.len()
            )));
        }
        if self.delays_us.iter().chain(&self.population).any(|v| !v.is_finite()) {
            return Err(DataError::Malformed("non-finite value in trace".into()));
        }
        if self.delays_us.first().is_some_and(|t| *t < 0.0) {
            return Err(ParamError::new("delays_us", "must be >= 0").into());
        }
        if self.delays_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ParamError::new("delays_us", "must be strictly ascending").into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delays_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays_us.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub offset: f64,
    pub t1_us: f64,
    /// 1σ on `t1_us` from the Gauss–Newton curvature.
    pub t1_sigma_us: f64,
    pub residual_rms: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Starting point (A, B, T1).
fn initial_guess(trace: &DecayTrace) -> (f64, f64, f64) {
    let n = trace.len();
    let y = &trace.population;
    let t = &trace.delays_us;
    let edge = (n / 4).max(1);
    let b = mean(&y[n - edge..]);
    let a = mean(&y[..edge]) - b;
    let span = t[n - 1] - t[0];

    // log-linear regression of (y - B) / A over points well above the floor
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        let z = (yi - b) / a;
        if z > 0.1 {
            let l = z.ln();
            sx += ti;
            sy += l;
            sxx += ti * ti;
            sxy += ti * l;
            m += 1.0;
        }
    }
    let denom = m * sxx - sx * sx;
    let slope = if m >= 2.0 && denom > 0.0 { (m * sxy - sx * sy) / denom } else { f64::NAN };
    let t1 = if slope < 0.0 { -1.0 / slope } else { span / 3.0 };
    (a, b, t1.clamp(span * 1e-3, span * 10.0))
}

/// Least-squares fit of `A exp(-t / T1) + B`.
///
/// T1 is bounded to `[1e-4, 1e3]` times the delay span; a best fit on the
/// upper bound, or a trace with no variation at all, is reported as
/// [`FitError::NonDecaying`].
pub fn fit_exponential_decay(trace: &DecayTrace) -> Result<DecayFit, FitError> {
    trace.validate()?;
    let n = trace.len();
    if n < MIN_DECAY_POINTS {
        return Err(FitError::InsufficientData { have: n, need: MIN_DECAY_POINTS });
    }
    let t = &trace.delays_us;
    let y = &trace.population;
    let span = t[n - 1] - t[0];
    let t1_upper = 1e3 * span;
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let range = hi - lo;
    if range == 0.0 {
        return Err(FitError::NonDecaying { t1_upper });
    }

    // Work in delays normalized by the span so the fit commutes exactly with
    // a rescaling of the time axis.
    let t0 = t[0];
    let tau: Vec<f64> = t.iter().map(|ti| (ti - t0) / span).collect();
    let (a0, b0, t10) = initial_guess(trace);
    let residuals = |x: &[f64]| -> Result<DVector<f64>, FitError> {
        Ok(DVector::from_iterator(n, tau.iter().zip(y).map(|(ti, yi)| x[0] * (-ti / x[2]).exp() + x[1] - yi)))
    };
    let bounds = Bounds {
        lower: vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-4],
        upper: vec![f64::INFINITY, f64::INFINITY, 1e3],
        scale: vec![range, range, 1.0],
    };
    // stop on the step only; a cost-decrease test ends early in flat valleys
    let opts = LsqOptions { xtol: 1e-12, ftol: 0.0, ..LsqOptions::default() };
    // the amplitude refers to t = t0 inside the solver
    let start = [a0 * (-t0 / t10).exp(), b0, t10 / span];
    let out = levenberg_marquardt(residuals, &start, &bounds, &opts)?;
    if !out.converged {
        return Err(FitError::NoConvergence {
            iterations: out.iterations,
            step_norm: out.step_norm,
            reason: "iteration limit reached".into(),
        });
    }
    if out.x[2] >= 1e3 * (1.0 - 1e-9) {
        return Err(FitError::NonDecaying { t1_upper });
    }
    let t1_us = out.x[2] * span;
    let t1_sigma_us = covariance(&out.jacobian, &out.residuals).map_or(f64::NAN, |c| c[(2, 2)].max(0.0).sqrt() * span);
    Ok(DecayFit {
        amplitude: out.x[0] * (t0 / t1_us).exp(),
        offset: out.x[1],
        t1_us,
        t1_sigma_us,
        residual_rms: (out.residuals.norm_squared() / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn trace(a: f64, b: f64, t1: f64, span: f64, n: usize, noise: f64, seed: u64) -> DecayTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
        let delays: Vec<f64> = (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect();
        let pop = delays
            .iter()
            .map(|t| a * (-t / t1).exp() + b + if noise > 0.0 { dist.sample(&mut rng) } else { 0.0 })
            .collect();
        DecayTrace::new(delays, pop).unwrap()
    }

    #[test]
    fn noiseless_device_values() {
        for (t1, span) in [(0.69, 4.0), (0.08, 0.5)] {
            let f = fit_exponential_decay(&trace(1.0, 0.0, t1, span, 50, 0.0, 0)).unwrap();
            assert!((f.t1_us / t1 - 1.0).abs() < 1e-6, "{t1}: {}", f.t1_us);
            assert!((f.amplitude - 1.0).abs() < 1e-6);
            assert!(f.offset.abs() < 1e-6);
        }
    }

    #[test]
    fn inverted_trace_with_offset() {
        let f = fit_exponential_decay(&trace(-0.4, 0.9, 0.3, 2.0, 40, 0.0, 0)).unwrap();
        assert!((f.t1_us / 0.3 - 1.0).abs() < 1e-6);
        assert!((f.amplitude + 0.4).abs() < 1e-6);
        assert!((f.offset - 0.9).abs() < 1e-6);
    }

    #[test]
    fn noisy_short_t1() {
        let mut inside = 0;
        for seed in 0..20 {
            let f = fit_exponential_decay(&trace(1.0, 0.0, 0.08, 0.5, 50, 0.05, seed)).unwrap();
            if (f.t1_us - 0.08).abs() <= 0.01 {
                inside += 1;
            }
            assert!(f.t1_sigma_us > 0.0 && f.t1_sigma_us < 0.01);
        }
        // ±0.01 µs is about 2σ here
        assert!(inside >= 14, "{inside}/20");
    }

    #[test]
    fn constant_trace_does_not_decay() {
        let t = DecayTrace::new((0..10).map(f64::from).collect(), vec![0.3; 10]).unwrap();
        assert!(matches!(fit_exponential_decay(&t), Err(FitError::NonDecaying { .. })));
    }

    #[test]
    fn too_few_points() {
        let t = DecayTrace::new(vec![0.0, 1.0], vec![1.0, 0.4]).unwrap();
        assert!(matches!(fit_exponential_decay(&t), Err(FitError::InsufficientData { have: 2, need: 4 })));
    }

    #[test]
    fn malformed_traces() {
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(DecayTrace::new(vec![-1.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(DecayTrace::new(vec![0.0, 0.0], vec![1.0, 0.5]).is_err());
        assert!(DecayTrace::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rescaled(base: &DecayTrace, lambda: f64) -> DecayTrace {
            DecayTrace::new(base.delays_us.iter().map(|t| t * lambda).collect(), base.population.clone()).unwrap()
        }

        proptest! {
            #[test]
            fn binary_rescaling_is_exact(t1 in 0.05f64..2.0, k in -20i32..20, seed in 0u64..1000) {
                let lambda = 2f64.powi(k);
                let base = trace(1.0, 0.1, t1, 5.0 * t1, 40, 0.02, seed);
                let a = fit_exponential_decay(&base).unwrap();
                let b = fit_exponential_decay(&rescaled(&base, lambda)).unwrap();
                prop_assert_eq!(b.t1_us, lambda * a.t1_us);
                prop_assert_eq!(b.t1_sigma_us, lambda * a.t1_sigma_us);
                prop_assert_eq!(b.amplitude, a.amplitude);
            }

            // Arbitrary factors perturb the delays at the last bit, which moves
            // the optimum by far less than any statistical error.
            #[test]
            fn rescaling_is_equivariant(t1 in 0.05f64..2.0, lambda in 0.01f64..100.0, seed in 0u64..1000) {
                let base = trace(1.0, 0.1, t1, 5.0 * t1, 40, 0.02, seed);
                let a = fit_exponential_decay(&base).unwrap();
                let b = fit_exponential_decay(&rescaled(&base, lambda)).unwrap();
                prop_assert!((b.t1_us / (lambda * a.t1_us) - 1.0).abs() < 1e-8, "{} vs {}", b.t1_us, lambda * a.t1_us);
                prop_assert!((b.t1_sigma_us / (lambda * a.t1_sigma_us) - 1.0).abs() < 1e-6);
            }
        }
    }
}
