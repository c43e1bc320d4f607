//! Least-squares fit of the dressed model to assigned spectroscopy peaks.
//!
//! The fit alternates two steps: a bounded Levenberg–Marquardt solve with the
//! current peak→line assignment held fixed, then reassignment of every peak
//! against the updated prediction. It stops once the assignment is stable or
//! after [`FitOptions::max_outer`] passes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{CavityParams, DressedSpectrum, LineKind, ModelConfig, DEFAULT_N_PH_MAX};
use crate::error::{FitError, ParamError, SolveError};
use crate::junction::{FluxCalibration, SquidParams};
use crate::lsq::{covariance, fd_jacobian, levenberg_marquardt, Bounds, LsqOptions};
use crate::peaks::{assign_peaks_to_lines, Peak, PeakSet, PredictionTable};
use crate::sweep::spectrum_at_current;
use crate::transmon::TransmonParams;

pub const N_PARAMS: usize = 7;
pub const PARAM_NAMES: [&str; N_PARAMS] =
    ["e_c", "ej_sum", "d", "omega_c", "g", "current_at_zero_flux", "current_per_flux_quantum"];

/// Full model parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub e_c: f64,
    pub ej_sum: f64,
    pub d: f64,
    pub omega_c: f64,
    pub g: f64,
    pub current_at_zero_flux: f64,
    pub current_per_flux_quantum: f64,
}

impl Theta {
    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [self.e_c, self.ej_sum, self.d, self.omega_c, self.g, self.current_at_zero_flux, self.current_per_flux_quantum]
    }

    pub fn from_array(a: [f64; N_PARAMS]) -> Self {
        Self {
            e_c: a[0],
            ej_sum: a[1],
            d: a[2],
            omega_c: a[3],
            g: a[4],
            current_at_zero_flux: a[5],
            current_per_flux_quantum: a[6],
        }
    }

    pub fn squid(&self) -> SquidParams {
        SquidParams { ej_sum: self.ej_sum, d: self.d }
    }

    pub fn calibration(&self) -> FluxCalibration {
        FluxCalibration { current_at_zero_flux: self.current_at_zero_flux, current_per_flux_quantum: self.current_per_flux_quantum }
    }

    pub fn cavity(&self, n_ph_max: usize) -> CavityParams {
        CavityParams { omega_c: self.omega_c, g: self.g, n_ph_max }
    }

    pub fn transmon_base(&self, n_g: f64) -> TransmonParams {
        TransmonParams { e_c: self.e_c, e_j: 0.0, n_g }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.squid().validate()?;
        self.calibration().validate()?;
        self.transmon_base(0.0).validate()?;
        self.cavity(DEFAULT_N_PH_MAX).validate()
    }

    /// Magnitude used to scale each parameter inside the optimizer.
    fn typical_scale(&self) -> [f64; N_PARAMS] {
        let period = self.current_per_flux_quantum.abs();
        [
            self.e_c.abs().max(1e-3),
            self.ej_sum.abs().max(1e-2),
            self.d.abs().max(0.1),
            self.omega_c.abs().max(0.1),
            self.g.abs().max(1e-3),
            period,
            period,
        ]
    }
}

/// Starting point, box constraints and frozen mask for a spectrum fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub theta: Theta,
    pub lower: [f64; N_PARAMS],
    pub upper: [f64; N_PARAMS],
    /// `true` holds the parameter at its initial value.
    pub frozen: [bool; N_PARAMS],
}

impl FitParams {
    /// Physically motivated default bounds around `theta`; nothing frozen.
    pub fn new(theta: Theta) -> Self {
        let p = theta.current_per_flux_quantum;
        let (plo, phi) = if p > 0.0 { (p / 10.0, p * 10.0) } else { (p * 10.0, p / 10.0) };
        Self {
            theta,
            lower: [1e-3, 1e-2, 0.0, 0.1, 0.0, f64::NEG_INFINITY, plo],
            upper: [10.0, 1e3, 0.999, 100.0, 5.0, f64::INFINITY, phi],
            frozen: [false; N_PARAMS],
        }
    }

    pub fn freeze(mut self, name: &str) -> Result<Self, ParamError> {
        let i = param_index(name)?;
        self.frozen[i] = true;
        Ok(self)
    }

    pub fn free_count(&self) -> usize {
        self.frozen.iter().filter(|f| !**f).count()
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.theta.validate()?;
        let a = self.theta.to_array();
        for i in 0..N_PARAMS {
            if !(self.lower[i] <= a[i] && a[i] <= self.upper[i]) {
                return Err(ParamError::new(PARAM_NAMES[i], format!("initial value {} outside [{}, {}]", a[i], self.lower[i], self.upper[i])));
            }
        }
        if self.lower[2] < 0.0 || self.upper[2] >= 1.0 {
            return Err(ParamError::new("d", "bounds must stay within [0, 1)"));
        }
        if self.lower[6] <= 0.0 && self.upper[6] >= 0.0 {
            return Err(ParamError::new("current_per_flux_quantum", "bounds must exclude zero"));
        }
        Ok(())
    }
}

pub fn param_index(name: &str) -> Result<usize, ParamError> {
    PARAM_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| ParamError::new("frozen", format!("unknown parameter `{name}`")))
}

/// Model and solver settings for [`fit_spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Candidate lines for peak assignment.
    pub lines: Vec<LineKind>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_n_ph_max")]
    pub n_ph_max: usize,
    #[serde(default)]
    pub n_g: f64,
    /// Largest peak-to-line distance accepted during reassignment, GHz.
    #[serde(default = "default_max_distance")]
    pub max_distance: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_xtol")]
    pub xtol: f64,
}

fn default_n_ph_max() -> usize {
    DEFAULT_N_PH_MAX
}
fn default_max_distance() -> f64 {
    0.03
}
fn default_max_outer() -> usize {
    10
}
fn default_max_iter() -> usize {
    200
}
fn default_xtol() -> f64 {
    1e-9
}

impl FitOptions {
    pub fn new(lines: Vec<LineKind>) -> Self {
        Self {
            lines,
            model: ModelConfig::default(),
            n_ph_max: DEFAULT_N_PH_MAX,
            n_g: 0.0,
            max_distance: default_max_distance(),
            max_outer: default_max_outer(),
            max_iter: default_max_iter(),
            xtol: default_xtol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Levenberg–Marquardt iterations summed over all passes.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub final_step_norm: f64,
    pub assigned_peaks: usize,
    pub free_parameters: Vec<String>,
    /// e.g. parameters pinned at a bound.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Theta,
    /// 1σ from the Gauss–Newton curvature; zero for frozen parameters.
    pub sigma: Theta,
    pub residual_rms: f64,
    pub diagnostics: FitDiagnostics,
    /// predicted − observed, GHz, for each assigned peak in `peaks` order.
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub peaks: PeakSet,
}

/// Dressed spectrum at one current, with labels taken even where the overlap
/// test flags them as ambiguous so the objective stays continuous.
fn lenient_frequency(kind: &LineKind, ds: &DressedSpectrum) -> f64 {
    let parts = kind.constituents();
    let mut total = 0.0;
    for (a, b) in parts {
        match (ds.level(a), ds.level(b)) {
            (Some(x), Some(y)) => total += y.energy - x.energy,
            _ => return f64::NAN,
        }
    }
    match kind {
        LineKind::Multiphoton { photons, .. } => total / f64::from(*photons),
        _ => total,
    }
}

fn solve_at(theta: &Theta, opts: &FitOptions, current: f64) -> Result<DressedSpectrum, SolveError> {
    spectrum_at_current(
        &theta.squid(),
        &theta.calibration(),
        &theta.transmon_base(opts.n_g),
        &theta.cavity(opts.n_ph_max),
        &opts.model,
        current,
    )
}

/// Predicted frequency of every candidate line at each current.
pub fn predict(theta: &Theta, opts: &FitOptions, currents: &[f64]) -> Result<PredictionTable, SolveError> {
    let mut cs = currents.to_vec();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let freqs = cs
        .par_iter()
        .map(|&c| {
            let ds = solve_at(theta, opts, c)?;
            Ok(opts.lines.iter().map(|k| lenient_frequency(k, &ds)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, SolveError>>()?;
    Ok(PredictionTable { lines: opts.lines.clone(), currents: cs, freqs })
}

/// Residuals (predicted − observed) of the assigned peaks at `theta`.
pub fn spectrum_residuals(peaks: &[&Peak], theta: &Theta, opts: &FitOptions) -> Result<Vec<f64>, SolveError> {
    let currents: Vec<f64> = peaks.iter().map(|p| p.current).collect();
    let table = predict(theta, opts, &currents)?;
    Ok(peaks
        .iter()
        .map(|p| {
            let line = p.line.as_ref().expect("only assigned peaks are passed");
            let li = table.line_index(line);
            match (table.row(p.current), li) {
                (Some(row), Some(li)) => row[li] - p.frequency,
                _ => f64::NAN,
            }
        })
        .collect())
}

/// Sum of squared residuals over the assigned peaks.
pub fn spectrum_objective(peaks: &PeakSet, theta: &Theta, opts: &FitOptions) -> Result<f64, SolveError> {
    let assigned: Vec<&Peak> = peaks.assigned().collect();
    Ok(spectrum_residuals(&assigned, theta, opts)?.iter().map(|r| r * r).sum())
}

/// Step tolerance of the passes that run while the assignment may still move.
const COARSE_XTOL: f64 = 1e-5;

fn with_free(theta: &Theta, free: &[usize], x: &[f64]) -> Theta {
    let mut a = theta.to_array();
    for (k, &i) in free.iter().enumerate() {
        a[i] = x[k];
    }
    Theta::from_array(a)
}

/// Residuals as a function of the free parameters only.
fn free_residuals<'a>(
    assigned: &'a [&'a Peak],
    base: &'a Theta,
    free: &'a [usize],
    opts: &'a FitOptions,
) -> impl FnMut(&[f64]) -> Result<nalgebra::DVector<f64>, FitError> + 'a {
    move |x: &[f64]| {
        // Trial points where the model cannot be solved are rejected by the
        // optimizer through non-finite residuals.
        let r = spectrum_residuals(assigned, &with_free(base, free, x), opts)
            .unwrap_or_else(|_| vec![f64::NAN; assigned.len()]);
        Ok(nalgebra::DVector::from_vec(r))
    }
}

fn same_assignment(a: &PeakSet, b: &PeakSet) -> bool {
    a.peaks.len() == b.peaks.len() && a.peaks.iter().zip(&b.peaks).all(|(x, y)| x.line == y.line)
}

/// Fit `init`'s free parameters to the peaks.
///
/// Peaks that already carry a line keep it for the first pass; if none do, the
/// peaks are assigned against the prediction at `init` first.
pub fn fit_spectrum(peaks: &PeakSet, init: &FitParams, opts: &FitOptions) -> Result<FitResult, FitError> {
    init.validate()?;
    let free: Vec<usize> = (0..N_PARAMS).filter(|&i| !init.frozen[i]).collect();
    if free.is_empty() {
        return Err(ParamError::new("frozen", "every parameter is frozen").into());
    }
    let need = free.len();

    let mut theta = init.theta;
    let mut current = if peaks.assigned_count() == 0 {
        assign_peaks_to_lines(peaks, &predict(&theta, opts, &peaks.currents())?, opts.max_distance)
    } else {
        peaks.clone()
    };

    let scale_all = theta.typical_scale();
    let bounds = Bounds {
        lower: free.iter().map(|&i| init.lower[i]).collect(),
        upper: free.iter().map(|&i| init.upper[i]).collect(),
        scale: free.iter().map(|&i| scale_all[i]).collect(),
    };
    let lsq_opts = LsqOptions { max_iter: opts.max_iter, xtol: opts.xtol, final_jacobian: false, ..LsqOptions::default() };
    let coarse_opts = LsqOptions { xtol: opts.xtol.max(COARSE_XTOL), ..lsq_opts };

    let mut total_iter = 0;
    let mut outer = 0;
    // Passes run at the coarse tolerance until one leaves the assignment
    // unchanged; a tight pass follows, and the fit is accepted once the
    // assignment also survives that.
    let mut settled = false;
    let mut outcome;
    loop {
        outer += 1;
        let assigned: Vec<&Peak> = current.assigned().collect();
        if assigned.len() < need {
            return Err(FitError::InsufficientData { have: assigned.len(), need });
        }
        let x0: Vec<f64> = free.iter().map(|&i| theta.to_array()[i]).collect();
        let pass_opts = if settled { &lsq_opts } else { &coarse_opts };
        outcome = levenberg_marquardt(free_residuals(&assigned, &theta, &free, opts), &x0, &bounds, pass_opts)?;
        total_iter += outcome.iterations;
        theta = with_free(&theta, &free, &outcome.x);

        let reassigned = assign_peaks_to_lines(&current, &predict(&theta, opts, &current.currents())?, opts.max_distance);
        let stable = same_assignment(&reassigned, &current);
        current = reassigned;
        if stable && settled {
            break;
        }
        settled = stable;
        if !stable && outer >= opts.max_outer {
            return Err(FitError::NoConvergence {
                iterations: total_iter,
                step_norm: outcome.step_norm,
                reason: format!("peak assignment still changing after {outer} passes"),
            });
        }
    }

    if !outcome.converged {
        return Err(FitError::NoConvergence {
            iterations: total_iter,
            step_norm: outcome.step_norm,
            reason: "iteration limit reached".into(),
        });
    }
    let (jac, r0, assigned_peaks) = {
        let assigned: Vec<&Peak> = current.assigned().collect();
        let x: Vec<f64> = free.iter().map(|&i| theta.to_array()[i]).collect();
        let mut f = free_residuals(&assigned, &theta, &free, opts);
        let r0 = f(&x)?;
        (fd_jacobian(&mut f, &x, &r0, &bounds, lsq_opts.fd_step, true)?, r0, assigned.len())
    };
    let cov = covariance(&jac, &r0).ok_or_else(|| FitError::NoConvergence {
        iterations: total_iter,
        step_norm: outcome.step_norm,
        reason: "singular curvature: free parameters are not identifiable from these peaks".into(),
    })?;

    let mut sigma = [0.0; N_PARAMS];
    for (k, &i) in free.iter().enumerate() {
        sigma[i] = cov[(k, k)].max(0.0).sqrt();
    }
    let mut warnings = Vec::new();
    for (k, &i) in free.iter().enumerate() {
        if outcome.at_bound[k] {
            warnings.push(format!("BoundaryStuck: {} = {} sits on a bound", PARAM_NAMES[i], theta.to_array()[i]));
        }
    }

    let residuals: Vec<f64> = r0.iter().copied().collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FitResult {
        theta,
        sigma: Theta::from_array(sigma),
        residual_rms,
        diagnostics: FitDiagnostics {
            iterations: total_iter,
            outer_iterations: outer,
            final_step_norm: outcome.step_norm,
            assigned_peaks,
            free_parameters: free.iter().map(|&i| PARAM_NAMES[i].to_string()).collect(),
            warnings,
        },
        residuals,
        peaks: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synthesize_peaks;

    fn truth() -> Theta {
        Theta {
            e_c: 0.14,
            ej_sum: 11.6,
            d: 0.35,
            omega_c: 7.0,
            g: 0.07,
            current_at_zero_flux: 0.0,
            current_per_flux_quantum: 1e-3,
        }
    }

    fn all_lines() -> Vec<LineKind> {
        ["0:0->1:0", "0:0->0:1", "0:0->2:0/2", "raman_A", "raman_B", "raman_C"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    fn options() -> FitOptions {
        let mut o = FitOptions::new(all_lines());
        o.model.charge.n_cut = 15;
        o
    }

    fn currents(n: usize) -> Vec<f64> {
        (0..n).map(|k| -0.5e-3 + 1.2e-3 * k as f64 / (n - 1) as f64).collect()
    }

    /// Error scaled by the parameter, or by the period for the offset.
    fn rel_error(fit: &Theta, truth: &Theta) -> [f64; N_PARAMS] {
        let (a, b) = (fit.to_array(), truth.to_array());
        let mut out = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            let scale = if i == 5 { b[6].abs() } else { b[i].abs() };
            out[i] = (a[i] - b[i]).abs() / scale;
        }
        out
    }

    #[test]
    fn noiseless_round_trip_from_ten_percent() {
        let opts = options();
        let peaks = synthesize_peaks(&truth(), &opts, &currents(21), 0.0, 0).unwrap();
        for sign in [1.0, -1.0] {
            let mut a = truth().to_array();
            for (i, v) in a.iter_mut().enumerate() {
                let s = if i % 2 == 0 { sign } else { -sign };
                *v *= 1.0 + 0.1 * s;
            }
            a[5] = sign * 1e-4;
            let r = fit_spectrum(&peaks, &FitParams::new(Theta::from_array(a)), &opts).unwrap();
            for (i, e) in rel_error(&r.theta, &truth()).iter().enumerate() {
                assert!(*e < 1e-3, "{}: {e}", PARAM_NAMES[i]);
            }
            assert!(r.residual_rms < 1e-9);
            assert_eq!(r.diagnostics.assigned_peaks, peaks.peaks.len());
        }
    }

    #[test]
    fn too_few_peaks() {
        let opts = options();
        let peaks = synthesize_peaks(&truth(), &opts, &[2e-4], 0.0, 0).unwrap();
        let err = fit_spectrum(&peaks, &FitParams::new(truth()), &opts).unwrap_err();
        assert!(matches!(err, FitError::InsufficientData { have: 6, need: 7 }), "{err}");
    }

    #[test]
    fn single_flux_is_never_silent() {
        // Enough lines to outnumber the parameters, but offset and period
        // cannot be told apart from one operating point.
        let mut opts = options();
        opts.lines.extend(["0:0->2:0", "0:0->3:0", "1:0->2:0"].iter().map(|s| s.parse::<LineKind>().unwrap()));
        let peaks = synthesize_peaks(&truth(), &opts, &[2e-4], 0.0, 0).unwrap();
        let mut init = truth();
        init.e_c *= 1.02;
        match fit_spectrum(&peaks, &FitParams::new(init), &opts) {
            Err(FitError::NoConvergence { .. }) => {}
            Ok(r) => assert!(!r.diagnostics.warnings.is_empty(), "silent answer {:?}", r.theta),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn frozen_parameter_stays_put() {
        let opts = options();
        let peaks = synthesize_peaks(&truth(), &opts, &currents(11), 0.0, 0).unwrap();
        let mut init = truth();
        init.g = 0.08;
        init.e_c = 0.145;
        let r = fit_spectrum(&peaks, &FitParams::new(init).freeze("g").unwrap(), &opts).unwrap();
        assert_eq!(r.theta.g, 0.08);
        assert_eq!(r.sigma.g, 0.0);
        assert!(!r.diagnostics.free_parameters.contains(&"g".to_string()));
    }

    #[test]
    fn freezing_at_truth_does_not_raise_rms() {
        let opts = options();
        let peaks = synthesize_peaks(&truth(), &opts, &currents(11), 0.0, 0).unwrap();
        let mut init = truth();
        init.e_c *= 1.03;
        init.ej_sum *= 0.98;
        init.d *= 1.05;
        let free = fit_spectrum(&peaks, &FitParams::new(init), &opts).unwrap();
        for name in ["e_c", "d", "g", "current_per_flux_quantum"] {
            let i = param_index(name).unwrap();
            let mut start = init.to_array();
            start[i] = truth().to_array()[i];
            let fp = FitParams::new(Theta::from_array(start)).freeze(name).unwrap();
            let frozen = fit_spectrum(&peaks, &fp, &opts).unwrap();
            assert!(frozen.residual_rms <= free.residual_rms + 1e-8, "{name}: {} > {}", frozen.residual_rms, free.residual_rms);
        }
    }

    #[test]
    fn noisy_fit_reports_uncertainty() {
        let opts = options();
        let peaks = synthesize_peaks(&truth(), &opts, &currents(21), 1e-3, 5).unwrap();
        let r = fit_spectrum(&peaks, &FitParams::new(truth()), &opts).unwrap();
        assert!((r.residual_rms - 1e-3).abs() < 3e-4, "rms {}", r.residual_rms);
        for (s, name) in r.sigma.to_array().iter().zip(PARAM_NAMES) {
            assert!(*s > 0.0 && s.is_finite(), "{name}");
        }
        assert!(r.diagnostics.warnings.is_empty());
    }

    #[test]
    fn invalid_init_rejected() {
        let mut fp = FitParams::new(truth());
        fp.lower[0] = 0.2;
        let peaks = synthesize_peaks(&truth(), &options(), &currents(5), 0.0, 0).unwrap();
        assert!(matches!(fit_spectrum(&peaks, &fp, &options()), Err(FitError::Param(_))));
        assert!(FitParams::new(truth()).freeze("nope").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn objective(peaks: &PeakSet, a: [f64; N_PARAMS]) -> f64 {
            spectrum_objective(peaks, &Theta::from_array(a), &options()).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(8))]

            #[test]
            fn objective_ignores_peak_order(seed in 0u64..1000, rot in 1usize..40) {
                let opts = options();
                let mut peaks = synthesize_peaks(&truth(), &opts, &currents(7), 2e-3, seed).unwrap();
                let mut theta = truth();
                theta.e_c = 0.141;
                let before = spectrum_objective(&peaks, &theta, &opts).unwrap();
                peaks.peaks.rotate_left(rot);
                peaks.peaks.swap(0, 3);
                let after = spectrum_objective(&peaks, &theta, &opts).unwrap();
                prop_assert!((before - after).abs() <= 1e-12 * before.max(1e-300));
            }

            #[test]
            fn gradient_stencils_agree(
                u in prop::array::uniform7(-1.0f64..1.0),
            ) {
                let opts = options();
                let peaks = synthesize_peaks(&truth(), &opts, &currents(7), 0.0, 0).unwrap();
                // random interior point within a few percent of the truth
                let mut x = truth().to_array();
                let scale = [0.14, 11.6, 0.35, 7.0, 0.07, 1e-3, 1e-3];
                for i in 0..N_PARAMS {
                    x[i] += 0.02 * u[i] * scale[i];
                }
                for i in 0..N_PARAMS {
                    let h = 1e-4 * scale[i];
                    let at = |d: f64| {
                        let mut y = x;
                        y[i] += d;
                        objective(&peaks, y)
                    };
                    let central = (at(h) - at(-h)) / (2.0 * h);
                    let five = (8.0 * (at(0.5 * h) - at(-0.5 * h)) - (at(h) - at(-h))) / (6.0 * h);
                    let rel = (central - five).abs() / five.abs().max(1e-12);
                    prop_assert!(rel < 1e-4, "{}: {central} vs {five}", PARAM_NAMES[i]);
                }
            }
        }
    }
}
