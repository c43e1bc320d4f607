//! Peak picking on two-tone spectroscopy maps and assignment of peaks to
//! model lines.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::LineKind;
use crate::error::{DataError, ParamError};

/// Rectangular spectroscopy map. `magnitudes[i][k]` is the response at
/// `currents[i]` and `frequencies[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopyDataset {
    /// Coil currents, A, strictly ascending.
    pub currents: Vec<f64>,
    /// Probe frequencies, GHz, strictly ascending.
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<Vec<f64>>,
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl SpectroscopyDataset {
    pub fn new(currents: Vec<f64>, frequencies: Vec<f64>, magnitudes: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let ds = Self { currents, frequencies, magnitudes };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.magnitudes.len() != self.currents.len() {
            return Err(DataError::Malformed(format!(
                "{} magnitude rows for {} currents",
                self.magnitudes.len(),
                self.currents.len()
            )));
        }
        if let Some((i, row)) = self.magnitudes.iter().enumerate().find(|(_, r)| r.len() != self.frequencies.len()) {
            return Err(DataError::Malformed(format!(
                "row {i} has {} values, expected {}",
                row.len(),
                self.frequencies.len()
            )));
        }
        if !strictly_ascending(&self.currents) {
            return Err(DataError::Malformed("current axis must be finite and strictly ascending".into()));
        }
        if !strictly_ascending(&self.frequencies) {
            return Err(DataError::Malformed("frequency axis must be finite and strictly ascending".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// A.
    pub current: f64,
    /// GHz.
    pub frequency: f64,
    /// Prominence as a fraction of the spectrum's dynamic range.
    pub prominence: f64,
    pub line: Option<LineKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn assigned(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| p.line.is_some())
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned().count()
    }

    /// Distinct currents carrying at least one peak, ascending.
    pub fn currents(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.peaks.iter().map(|p| p.current).collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    /// Odd moving-average window, in samples.
    pub smoothing_window: usize,
    /// Minimum prominence as a fraction of each spectrum's dynamic range.
    pub min_prominence: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { smoothing_window: 3, min_prominence: 0.3 }
    }
}

impl PeakOptions {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(ParamError::new("smoothing_window", "must be odd and >= 1"));
        }
        if !(self.min_prominence > 0.0 && self.min_prominence <= 1.0) {
            return Err(ParamError::new("min_prominence", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = v.len();
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Prominence of the local maximum at `k`: height above the higher of the two
/// lowest points reached before climbing to something taller on either side.
fn prominence(s: &[f64], k: usize) -> f64 {
    let h = s[k];
    let mut left_min = h;
    for &v in s[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &s[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Abscissa of the vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv >= 0.0 || !curv.is_finite() {
        return x[1];
    }
    // y' = d1 + curv (2x - x0 - x1) = 0
    let v = 0.5 * (x[0] + x[1] - d1 / curv);
    v.clamp(x[0], x[2])
}

fn spectrum_peaks(freqs: &[f64], row: &[f64], opts: &PeakOptions) -> Vec<(f64, f64)> {
    let smooth = moving_average(row, opts.smoothing_window);
    let med = median(&smooth);
    let s: Vec<f64> = smooth.iter().map(|v| (v - med).abs()).collect();
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let n = s.len();
    let mut out = Vec::new();
    let mut k = 1;
    while k + 1 < n {
        if s[k] > s[k - 1] {
            // walk across a flat top
            let mut end = k;
            while end + 1 < n && s[end + 1] == s[k] {
                end += 1;
            }
            if end + 1 < n && s[end + 1] < s[k] {
                let centre = (k + end) / 2;
                let prom = prominence(&s, centre) / range;
                if prom > opts.min_prominence {
                    let c = centre.clamp(1, n - 2);
                    let f = parabola_vertex([freqs[c - 1], freqs[c], freqs[c + 1]], [s[c - 1], s[c], s[c + 1]]);
                    out.push((f, prom));
                }
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// Find peaks spectrum by spectrum (one spectrum per current).
///
/// Spectra containing non-finite samples are skipped with a warning.
pub fn extract_peaks(ds: &SpectroscopyDataset, opts: &PeakOptions) -> Result<PeakSet, DataError> {
    opts.validate()?;
    ds.validate()?;
    if ds.frequencies.len() < 3 {
        return Err(DataError::EmptyColumn { index: 0 });
    }
    let per_current: Vec<Vec<Peak>> = ds
        .currents
        .par_iter()
        .zip(ds.magnitudes.par_iter())
        .enumerate()
        .map(|(i, (&current, row))| {
            if row.iter().any(|v| !v.is_finite()) {
                warn!("skipping spectrum {i} at {current:e} A: non-finite samples");
                return Vec::new();
            }
            spectrum_peaks(&ds.frequencies, row, opts)
                .into_iter()
                .map(|(frequency, prominence)| Peak { current, frequency, prominence, line: None })
                .collect()
        })
        .collect();
    Ok(PeakSet { peaks: per_current.into_iter().flatten().collect() })
}

/// Model line frequencies on a set of currents.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub lines: Vec<LineKind>,
    /// Ascending.
    pub currents: Vec<f64>,
    /// `freqs[i][l]` for current `i` and line `l`; NaN where the model failed.
    pub freqs: Vec<Vec<f64>>,
}

impl PredictionTable {
    pub fn row(&self, current: f64) -> Option<&[f64]> {
        self.currents
            .binary_search_by(|c| c.total_cmp(&current))
            .ok()
            .map(|i| self.freqs[i].as_slice())
    }

    pub fn line_index(&self, kind: &LineKind) -> Option<usize> {
        self.lines.iter().position(|l| l == kind)
    }
}

/// Attach each peak to its nearest predicted line within `max_distance` GHz.
///
/// A line takes at most one peak per current: the closest claimant wins and
/// ties go to the earlier peak in the list. Peaks at currents missing from
/// `prediction` stay unassigned.
pub fn assign_peaks_to_lines(peaks: &PeakSet, prediction: &PredictionTable, max_distance: f64) -> PeakSet {
    let mut out = peaks.clone();
    for p in &mut out.peaks {
        p.line = None;
    }
    // (peak index, line index, distance) of each peak's nearest line
    let mut claims: Vec<(usize, usize, f64)> = Vec::new();
    for (pi, p) in peaks.peaks.iter().enumerate() {
        let Some(row) = prediction.row(p.current) else { continue };
        let best = row
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_finite())
            .map(|(li, f)| (li, (f - p.frequency).abs()))
            .fold(None::<(usize, f64)>, |acc, (li, d)| match acc {
                Some((_, bd)) if bd <= d => acc,
                _ => Some((li, d)),
            });
        if let Some((li, d)) = best {
            if d <= max_distance {
                claims.push((pi, li, d));
            }
        }
    }
    claims.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let mut taken: std::collections::HashSet<(u64, usize)> = std::collections::HashSet::new();
    for (pi, li, _) in claims {
        let key = (peaks.peaks[pi].current.to_bits(), li);
        if taken.insert(key) {
            out.peaks[pi].line = Some(prediction.lines[li].clone());
        }
    }
    out
}
