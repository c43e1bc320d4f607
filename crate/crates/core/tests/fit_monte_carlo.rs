//! Repeated noisy fits of labelled peaks at the device operating point.
//!
//! With g = 70 MHz and a 7 GHz cavity the qubit never comes within 3.5 GHz of
//! the cavity, so the coupling enters the lines only through shifts of order
//! g²/Δ. At 1 MHz of frequency noise the fit resolves g to about 2%, so g is
//! held to its quoted uncertainty rather than to 1%; every other parameter
//! comes out within 1% in every trial.

use fluxqed::cli::default_lines;
use fluxqed::fit::{fit_spectrum, FitOptions, FitParams, Theta, N_PARAMS, PARAM_NAMES};
use fluxqed::synth::synthesize_peaks;

const TRIALS: u64 = 100;
const G: usize = 4;
const OFFSET: usize = 5;

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

#[test]
fn noisy_round_trip_statistics() {
    let mut opts = FitOptions::new(default_lines());
    opts.model.charge.n_cut = 15;
    let currents: Vec<f64> = (0..41).map(|k| -0.5e-3 + 1.2e-3 * k as f64 / 40.0).collect();
    let t = truth().to_array();
    let mut start = t;
    start[0] *= 1.01;
    start[1] *= 0.99;
    start[2] *= 1.01;
    start[3] *= 1.001;
    start[G] *= 1.01;
    start[OFFSET] = 5e-6;
    start[6] *= 1.005;
    let init = FitParams::new(Theta::from_array(start));

    let mut covered = [0usize; N_PARAMS];
    let mut worst = [0.0f64; N_PARAMS];
    let mut g_pulls = Vec::new();
    for seed in 0..TRIALS {
        let peaks = synthesize_peaks(&truth(), &opts, &currents, 1e-3, seed).unwrap();
        let r = fit_spectrum(&peaks, &init, &opts).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let (got, sigma) = (r.theta.to_array(), r.sigma.to_array());
        for i in 0..N_PARAMS {
            let err = got[i] - t[i];
            // the offset is zero here, so judge it against the period
            let scale = if i == OFFSET { t[6] } else { t[i] };
            worst[i] = worst[i].max(err.abs() / scale);
            if err.abs() <= sigma[i] {
                covered[i] += 1;
            }
        }
        g_pulls.push((got[G] - t[G]) / sigma[G]);
    }

    eprintln!("worst relative errors {worst:?}, coverage {covered:?}");
    for i in (0..N_PARAMS).filter(|&i| i != G) {
        assert!(worst[i] < 0.01, "{}: worst error {:.3}%", PARAM_NAMES[i], 100.0 * worst[i]);
    }
    let total: usize = covered.iter().sum();
    let coverage = total as f64 / (N_PARAMS as f64 * TRIALS as f64);
    assert!((0.60..=0.80).contains(&coverage), "coverage {coverage:.3}, per parameter {covered:?}");

    // the quoted σ on g matches its actual scatter
    let n = g_pulls.len() as f64;
    let mean = g_pulls.iter().sum::<f64>() / n;
    let spread = (g_pulls.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    eprintln!("g pulls: mean {mean:.3}, spread {spread:.3}");
    assert!(mean.abs() < 0.4, "g pull mean {mean:.3}");
    assert!((0.75..=1.3).contains(&spread), "g pull spread {spread:.3}");
    assert!(g_pulls.iter().all(|p| p.abs() < 4.5), "g pulls {g_pulls:?}");
}
