//! Synthetic two-tone maps and peak lists rendered from the model, for
//! round-trip testing of the extraction and fitting chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SolveError};
use crate::fit::{predict, FitOptions, Theta};
use crate::peaks::{Peak, PeakSet, SpectroscopyDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSettings {
    /// Gaussian lineshape standard deviation, GHz.
    pub linewidth: f64,
    /// Standard deviation of the random shift applied to each line centre, GHz.
    pub freq_noise: f64,
    /// Peak amplitude over additive Gaussian noise standard deviation;
    /// `None` renders a noiseless map.
    pub snr: Option<f64>,
    pub seed: u64,
}

impl SynthSettings {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.linewidth > 0.0) {
            return Err(ParamError::new("linewidth", "must be > 0"));
        }
        if !(self.freq_noise >= 0.0) {
            return Err(ParamError::new("freq_noise", "must be >= 0"));
        }
        if let Some(snr) = self.snr {
            if !(snr > 0.0) {
                return Err(ParamError::new("snr", "must be > 0"));
            }
        }
        Ok(())
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite non-negative standard deviation")
}

/// Render every line of `opts.lines` predicted at `theta` onto a
/// `currents × frequencies` grid with unit Gaussian peaks.
///
/// Random draws happen in a fixed order (line centres current by current, then
/// grid noise row by row), so a seed reproduces the grid bit for bit.
pub fn synthesize_map(
    theta: &Theta,
    opts: &FitOptions,
    currents: &[f64],
    frequencies: &[f64],
    settings: &SynthSettings,
) -> Result<SpectroscopyDataset, SolveError> {
    settings.validate()?;
    theta.validate()?;
    let table = predict(theta, opts, currents)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let jitter = normal(settings.freq_noise);

    let mut rows = Vec::with_capacity(table.currents.len());
    let reach = 6.0 * settings.linewidth;
    for freqs in &table.freqs {
        let mut row = vec![0.0; frequencies.len()];
        for &f0 in freqs {
            let shift = jitter.sample(&mut rng);
            if !f0.is_finite() {
                continue;
            }
            let centre = f0 + shift;
            let lo = frequencies.partition_point(|f| *f < centre - reach);
            let hi = frequencies.partition_point(|f| *f <= centre + reach);
            for k in lo..hi {
                let z = (frequencies[k] - centre) / settings.linewidth;
                row[k] += (-0.5 * z * z).exp();
            }
        }
        rows.push(row);
    }
    if let Some(snr) = settings.snr {
        let noise = normal(1.0 / snr);
        for row in &mut rows {
            for v in row.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
    }
    SpectroscopyDataset::new(table.currents, frequencies.to_vec(), rows)
        .map_err(|e| SolveError::Dimension(e.to_string()))
}

/// Peaks placed on the predicted lines (plus optional Gaussian frequency
/// noise), already labelled with their true line.
pub fn synthesize_peaks(
    theta: &Theta,
    opts: &FitOptions,
    currents: &[f64],
    freq_noise: f64,
    seed: u64,
) -> Result<PeakSet, SolveError> {
    if !(freq_noise >= 0.0) {
        return Err(ParamError::new("freq_noise", "must be >= 0").into());
    }
    let table = predict(theta, opts, currents)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = normal(freq_noise);
    let mut peaks = Vec::new();
    for (c, freqs) in table.currents.iter().zip(&table.freqs) {
        for (line, &f) in table.lines.iter().zip(freqs) {
            let shift = jitter.sample(&mut rng);
            if f.is_finite() {
                peaks.push(Peak { current: *c, frequency: f + shift, prominence: 1.0, line: Some(line.clone()) });
            }
        }
    }
    Ok(PeakSet { peaks })
}
