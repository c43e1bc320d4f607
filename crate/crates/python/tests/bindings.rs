use pyfluxqed::{ab_ej_ghz, ab_gap_uv, fit_t1, run_cli, squid_ej, sweep, transmon_levels};
use pyo3::prelude::*;

#[test]
fn zero_flux_levels() {
    let levels = transmon_levels(0.14, squid_ej(11.6, 0.35, 0.0).unwrap(), 0.0, 30, 6).unwrap();
    assert_eq!(levels.len(), 6);
    assert_eq!(levels[0], 0.0);
    assert!((levels[1] - 3.46).abs() / 3.46 < 0.01);
    assert!(transmon_levels(-0.14, 11.6, 0.0, 30, 6).is_err());
}

#[test]
fn ab_round_trip() {
    let gap = ab_gap_uv(2400.0, 11.6).unwrap();
    assert!((33.0..36.0).contains(&gap));
    assert!((ab_ej_ghz(2400.0, gap).unwrap() - 11.6).abs() < 1e-9);
    assert!(ab_gap_uv(0.0, 11.6).is_err());
}

#[test]
fn sweep_rows() {
    let rows = sweep(0.14, 11.6, 0.35, 7.0, 0.07, 0.0, 1e-3, vec![0.0, 5e-4], Some(vec!["0:0->1:0".into()]), 30).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].2 > rows[1].2);
    assert!(rows.iter().all(|r| r.3 == "ok"));
    assert!(sweep(0.14, 11.6, 0.35, 7.0, 0.07, 0.0, 1e-3, vec![0.0], Some(vec!["bogus".into()]), 30).is_err());
}

#[test]
fn decay_fit_through_python() {
    Python::attach(|py| {
        let delays: Vec<f64> = (0..40).map(|k| 0.05 * k as f64).collect();
        let pop = delays.iter().map(|t| 0.9 * (-t / 0.69f64).exp() + 0.05).collect();
        let d = fit_t1(py, delays, pop).unwrap();
        let t1: f64 = d.get_item("t1_us").unwrap().unwrap().extract().unwrap();
        assert!((t1 / 0.69 - 1.0).abs() < 1e-6);
        assert!(fit_t1(py, vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert_eq!(run_cli(py, vec!["abcheck".into(), "--rn".into(), "2400".into(), "--ej".into(), "11.6".into()]), 0);
        assert_eq!(run_cli(py, vec!["abcheck".into(), "--rn".into(), "0".into(), "--ej".into(), "11.6".into()]), 2);
    });
}
