//! Line frequencies versus coil current.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{solve_point, CavityParams, DressedSpectrum, LineKind, ModelConfig};
use crate::error::SolveError;
use crate::junction::{ej_of_flux, flux_from_current, FluxCalibration, SquidParams};
use crate::transmon::TransmonParams;

/// One (current, line) entry of a sweep. Failed points keep their row with
/// `frequency_ghz = NaN` and the error text in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "current_A")]
    pub current_a: f64,
    pub flux_ratio: f64,
    pub line_kind: LineKind,
    #[serde(rename = "frequency_GHz")]
    pub frequency_ghz: f64,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Transmon parameters at a given reduced flux, with E_J from the loop.
pub fn transmon_at_flux(squid: &SquidParams, tp_base: &TransmonParams, phi_ratio: f64) -> TransmonParams {
    TransmonParams { e_j: ej_of_flux(squid, phi_ratio), ..*tp_base }
}

/// Labelled dressed spectrum at one coil current.
pub fn spectrum_at_current(
    squid: &SquidParams,
    cal: &FluxCalibration,
    tp_base: &TransmonParams,
    cav: &CavityParams,
    model: &ModelConfig,
    current: f64,
) -> Result<DressedSpectrum, SolveError> {
    let tp = transmon_at_flux(squid, tp_base, flux_from_current(cal, current));
    solve_point(&tp, cav, model)
}

/// Every requested line at every current. Rows are ordered by current (stable
/// for repeated currents), then by the order of `lines`. Points are solved in
/// parallel; the output does not depend on scheduling.
pub fn flux_sweep_spectrum(
    squid: &SquidParams,
    cal: &FluxCalibration,
    tp_base: &TransmonParams,
    cav: &CavityParams,
    currents: &[f64],
    lines: &[LineKind],
    model: &ModelConfig,
) -> Result<Vec<SweepRow>, SolveError> {
    squid.validate()?;
    cal.validate()?;
    tp_base.validate()?;
    cav.validate()?;

    let mut ordered: Vec<f64> = currents.to_vec();
    ordered.sort_by(f64::total_cmp);

    let rows = ordered
        .par_iter()
        .map(|&current| {
            let flux = flux_from_current(cal, current);
            let solved = spectrum_at_current(squid, cal, tp_base, cav, model, current);
            lines
                .iter()
                .map(|kind| {
                    let (frequency_ghz, status) = match solved.as_ref().map_err(Clone::clone).and_then(|ds| kind.frequency(ds)) {
                        Ok(f) => (f, "ok".to_string()),
                        Err(e) => (f64::NAN, format!("error: {e}")),
                    };
                    SweepRow { current_a: current, flux_ratio: flux, line_kind: kind.clone(), frequency_ghz, status }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::current_from_flux;

    fn setup() -> (SquidParams, FluxCalibration, TransmonParams, CavityParams) {
        (
            SquidParams::new(11.6, 0.35).unwrap(),
            FluxCalibration::new(0.0, 1e-3).unwrap(),
            TransmonParams::new(0.14, 0.0),
            CavityParams::new(7.0, 0.07),
        )
    }

    #[test]
    fn single_point_matches_direct_solve() {
        let (sq, cal, tp, cav) = setup();
        let model = ModelConfig::default();
        let rows = flux_sweep_spectrum(&sq, &cal, &tp, &cav, &[0.0], &[LineKind::qubit01()], &model).unwrap();
        let ds = solve_point(&TransmonParams::new(0.14, 11.6), &cav, &model).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].frequency_ghz, LineKind::qubit01().frequency(&ds).unwrap());
        assert!(rows[0].is_ok());
    }

    #[test]
    fn rows_sorted_by_current() {
        let (sq, cal, tp, cav) = setup();
        let lines = [LineKind::qubit01(), LineKind::cavity()];
        let rows =
            flux_sweep_spectrum(&sq, &cal, &tp, &cav, &[3e-4, -1e-4, 1e-4], &lines, &ModelConfig::default()).unwrap();
        let currents: Vec<f64> = rows.iter().map(|r| r.current_a).collect();
        assert_eq!(currents, vec![-1e-4, -1e-4, 1e-4, 1e-4, 3e-4, 3e-4]);
        assert_eq!(rows[0].line_kind, LineKind::qubit01());
        assert_eq!(rows[1].line_kind, LineKind::cavity());
        // parity about zero flux
        assert!((rows[0].frequency_ghz - rows[2].frequency_ghz).abs() < 1e-10);
    }

    #[test]
    fn failed_points_are_marked() {
        let (sq, cal, tp, cav) = setup();
        let model = ModelConfig { n_q_levels: 3, ..ModelConfig::default() };
        let rows = flux_sweep_spectrum(&sq, &cal, &tp, &cav, &[0.0], &[LineKind::qubit01(), LineKind::RamanA], &model)
            .unwrap();
        assert!(rows[0].is_ok());
        assert!(rows[1].frequency_ghz.is_nan());
        assert!(rows[1].status.starts_with("error"));
    }

    #[test]
    fn half_flux_minimum() {
        let (sq, cal, tp, cav) = setup();
        let model = ModelConfig::default();
        let currents: Vec<f64> = (0..=40).map(|k| current_from_flux(&cal, k as f64 / 40.0)).collect();
        let rows = flux_sweep_spectrum(&sq, &cal, &tp, &cav, &currents, &[LineKind::qubit01()], &model).unwrap();
        let f: Vec<f64> = rows.iter().map(|r| r.frequency_ghz).collect();
        let (imax, fmax) = f.iter().copied().enumerate().fold((0, f64::MIN), |a, (i, v)| if v > a.1 { (i, v) } else { a });
        let (imin, fmin) = f.iter().copied().enumerate().fold((0, f64::MAX), |a, (i, v)| if v < a.1 { (i, v) } else { a });
        assert!(imax == 0 || imax == 40);
        assert_eq!(imin, 20);
        assert!((fmax / 3.46 - 1.0).abs() < 0.01, "{fmax}");
        assert!((fmin / 1.99 - 1.0).abs() < 0.02, "{fmin}");
        for k in 0..=20 {
            assert!((f[k] - f[40 - k]).abs() < 1e-9);
        }
    }
}
