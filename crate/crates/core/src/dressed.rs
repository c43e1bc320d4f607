//! Transmon ⊗ cavity Hamiltonian with the full `g (a† + a) n` coupling,
//! dressed-state labelling and transition-line bookkeeping.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{block_symmetric_eigen, symmetric_eigen, EigenPairs};
use crate::error::{ParamError, SolveError};
use crate::transmon::{solve_transmon, ChargeBasisConfig, TransmonEigens, TransmonParams, DEFAULT_TRANSMON_LEVELS};

pub const DEFAULT_N_PH_MAX: usize = 5;
/// Winning overlap at or below this marks a dressed state as ambiguous.
pub const AMBIGUITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Bare cavity frequency ω_c/2π, GHz.
    pub omega_c: f64,
    /// Coupling rate g/2π, GHz.
    pub g: f64,
    /// Highest Fock state kept.
    #[serde(default = "default_n_ph_max")]
    pub n_ph_max: usize,
}

fn default_n_ph_max() -> usize {
    DEFAULT_N_PH_MAX
}

impl CavityParams {
    pub fn new(omega_c: f64, g: f64) -> Self {
        Self { omega_c, g, n_ph_max: DEFAULT_N_PH_MAX }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return Err(ParamError::new("omega_c", "must be finite and > 0"));
        }
        if !self.g.is_finite() {
            return Err(ParamError::new("g", "must be finite"));
        }
        if self.n_ph_max < 1 {
            return Err(ParamError::new("n_ph_max", "must be >= 1"));
        }
        Ok(())
    }
}

/// Bare product label |n_q, n_ph>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub n_q: usize,
    pub n_ph: usize,
}

impl StateLabel {
    pub const fn new(n_q: usize, n_ph: usize) -> Self {
        Self { n_q, n_ph }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.n_q, self.n_ph)
    }
}

impl FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (q, p) = s.trim().split_once(':').ok_or_else(|| format!("bad state label `{s}`, expected n_q:n_ph"))?;
        let n_q = q.trim().parse().map_err(|_| format!("bad transmon index in `{s}`"))?;
        let n_ph = p.trim().parse().map_err(|_| format!("bad photon number in `{s}`"))?;
        Ok(Self { n_q, n_ph })
    }
}

/// One dressed eigenstate with its assigned bare label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedLevel {
    pub label: StateLabel,
    /// Eigenfrequency in GHz, measured from the bare transmon ground state.
    pub energy: f64,
    /// |<label|dressed>|².
    pub overlap: f64,
    pub ambiguous: bool,
}

/// Labelled dressed spectrum at one operating point. Levels ascend in energy.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedSpectrum {
    pub levels: Vec<DressedLevel>,
    pub n_q_levels: usize,
    pub n_ph_max: usize,
    by_label: Vec<usize>,
}

impl DressedSpectrum {
    fn product_index(&self, label: StateLabel) -> Option<usize> {
        (label.n_q < self.n_q_levels && label.n_ph <= self.n_ph_max)
            .then(|| label.n_q * (self.n_ph_max + 1) + label.n_ph)
    }

    /// The level carrying `label`, ambiguous or not.
    pub fn level(&self, label: StateLabel) -> Option<&DressedLevel> {
        self.product_index(label).map(|k| &self.levels[self.by_label[k]])
    }

    /// Energy of an unambiguous labelled level.
    pub fn energy(&self, label: StateLabel) -> Result<f64, SolveError> {
        match self.level(label) {
            Some(l) if !l.ambiguous => Ok(l.energy),
            _ => Err(SolveError::MissingLabel(label)),
        }
    }

    pub fn any_ambiguous(&self) -> bool {
        self.levels.iter().any(|l| l.ambiguous)
    }
}

/// Product basis ordering used by [`build_dressed_hamiltonian`]: transmon
/// index major, photon number minor.
pub fn product_basis(n_q_levels: usize, n_ph_max: usize) -> Vec<StateLabel> {
    (0..n_q_levels)
        .flat_map(|q| (0..=n_ph_max).map(move |p| StateLabel::new(q, p)))
        .collect()
}

pub fn build_dressed_hamiltonian(
    te: &TransmonEigens,
    n_q_levels: usize,
    cav: &CavityParams,
) -> Result<DMatrix<f64>, SolveError> {
    cav.validate()?;
    if n_q_levels == 0 || n_q_levels > te.levels() {
        return Err(SolveError::Dimension(format!(
            "{n_q_levels} transmon levels requested, {} available",
            te.levels()
        )));
    }
    if te.n_elements.nrows() != te.levels() || te.n_elements.ncols() != te.levels() {
        return Err(SolveError::Dimension("charge matrix does not match energy list".into()));
    }
    let np = cav.n_ph_max + 1;
    let dim = n_q_levels * np;
    let idx = |q: usize, p: usize| q * np + p;
    let mut h = DMatrix::zeros(dim, dim);
    for q in 0..n_q_levels {
        for p in 0..np {
            h[(idx(q, p), idx(q, p))] = te.energies[q] + p as f64 * cav.omega_c;
        }
    }
    if cav.g != 0.0 {
        // <i, p+1| g (a† + a) n |j, p> = g sqrt(p+1) <i|n|j>
        for i in 0..n_q_levels {
            for j in 0..n_q_levels {
                let nij = te.n_elements[(i, j)];
                for p in 0..cav.n_ph_max {
                    let v = cav.g * ((p + 1) as f64).sqrt() * nij;
                    h[(idx(i, p + 1), idx(j, p))] = v;
                    h[(idx(j, p), idx(i, p + 1))] = v;
                }
            }
        }
    }
    Ok(h)
}

/// Assign each dressed eigenvector the bare label it overlaps most with.
///
/// Assignment is a global greedy match on descending overlap, so labels are a
/// bijection. Ties resolve towards the lower dressed index, then the lower
/// bare index.
pub fn label_dressed_states(
    eig: &EigenPairs,
    basis: &[StateLabel],
    n_q_levels: usize,
    n_ph_max: usize,
) -> Result<DressedSpectrum, SolveError> {
    let dim = eig.values.len();
    if basis.len() != dim || eig.vectors.nrows() != dim || dim != n_q_levels * (n_ph_max + 1) {
        return Err(SolveError::Dimension(format!(
            "basis of {} labels for {dim} eigenpairs",
            basis.len()
        )));
    }
    let mut dressed_label: Vec<Option<(usize, f64)>> = vec![None; dim];
    let mut bare_taken = vec![false; dim];
    let mut remaining = dim;
    // Weights above one half are unique in their row and column of the
    // orthogonal matrix, so the greedy pass accepts all of them first.
    for k in 0..dim {
        for b in 0..dim {
            let w = eig.vectors[(b, k)].powi(2);
            if w > 0.5 + 1e-9 {
                dressed_label[k] = Some((b, w));
                bare_taken[b] = true;
                remaining -= 1;
            }
        }
    }
    if remaining > 0 {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for k in (0..dim).filter(|&k| dressed_label[k].is_none()) {
            for b in (0..dim).filter(|&b| !bare_taken[b]) {
                pairs.push((eig.vectors[(b, k)].powi(2), k, b));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (w, k, b) in pairs {
            if remaining == 0 {
                break;
            }
            if dressed_label[k].is_some() || bare_taken[b] {
                continue;
            }
            dressed_label[k] = Some((b, w));
            bare_taken[b] = true;
            remaining -= 1;
        }
    }

    let np = n_ph_max + 1;
    let mut by_label = vec![0; dim];
    let levels = (0..dim)
        .map(|k| {
            let (b, w) = dressed_label[k].expect("greedy matching is complete");
            let label = basis[b];
            by_label[label.n_q * np + label.n_ph] = k;
            DressedLevel { label, energy: eig.values[k], overlap: w, ambiguous: w <= AMBIGUITY_THRESHOLD + 1e-12 }
        })
        .collect();
    Ok(DressedSpectrum { levels, n_q_levels, n_ph_max, by_label })
}

/// Diagonalize and label the dressed Hamiltonian for a solved transmon.
pub fn solve_dressed(te: &TransmonEigens, n_q_levels: usize, cav: &CavityParams) -> Result<DressedSpectrum, SolveError> {
    let h = build_dressed_hamiltonian(te, n_q_levels, cav)?;
    let eig = match &te.parity {
        // n (a + a†) flips the joint parity of transmon and photon number
        Some(par) if par.len() >= n_q_levels => {
            let np = cav.n_ph_max + 1;
            let joint = |k: usize| i32::from(par[k / np]) * if (k % np).is_multiple_of(2) { 1 } else { -1 };
            let (even, odd): (Vec<usize>, Vec<usize>) = (0..h.nrows()).partition(|&k| joint(k) > 0);
            block_symmetric_eigen(&h, &[even, odd])?
        }
        _ => symmetric_eigen(h)?,
    };
    label_dressed_states(&eig, &product_basis(n_q_levels, cav.n_ph_max), n_q_levels, cav.n_ph_max)
}

/// Truncation settings for a full operating-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub charge: ChargeBasisConfig,
    /// Transmon eigenstates kept before tensoring with the cavity.
    #[serde(default = "default_q_levels")]
    pub n_q_levels: usize,
}

fn default_q_levels() -> usize {
    DEFAULT_TRANSMON_LEVELS
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { charge: ChargeBasisConfig::default(), n_q_levels: DEFAULT_TRANSMON_LEVELS }
    }
}

/// Transmon solve followed by the dressed solve.
pub fn solve_point(tp: &TransmonParams, cav: &CavityParams, model: &ModelConfig) -> Result<DressedSpectrum, SolveError> {
    let te = solve_transmon(tp, &model.charge, model.n_q_levels)?;
    solve_dressed(&te, model.n_q_levels, cav)
}

pub fn transition_frequency(ds: &DressedSpectrum, from: StateLabel, to: StateLabel) -> Result<f64, SolveError> {
    Ok(ds.energy(to)? - ds.energy(from)?)
}

/// A spectral line to track.
///
/// Text form (used in CSV and config files): `0:0->1:0` for a single
/// transition, `0:0->2:0/2` for an n-photon transition, `raman_A`,
/// `raman_B`, `raman_C`, and `sum[0:0->1:0+0:1->3:0]` for an arbitrary sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineKind {
    Single { from: StateLabel, to: StateLabel },
    Multiphoton { from: StateLabel, to: StateLabel, photons: u32 },
    RamanA,
    RamanB,
    RamanC,
    Sum(Vec<(StateLabel, StateLabel)>),
}

const fn s(n_q: usize, n_ph: usize) -> StateLabel {
    StateLabel::new(n_q, n_ph)
}

impl LineKind {
    pub fn single(from: StateLabel, to: StateLabel) -> Self {
        LineKind::Single { from, to }
    }

    /// The bare-qubit 0→1 line, (0,0)→(1,0).
    pub fn qubit01() -> Self {
        LineKind::single(s(0, 0), s(1, 0))
    }

    /// Readout cavity line, (0,0)→(0,1).
    pub fn cavity() -> Self {
        LineKind::single(s(0, 0), s(0, 1))
    }

    /// Transitions whose frequencies add up to this line.
    pub fn constituents(&self) -> Vec<(StateLabel, StateLabel)> {
        match self {
            LineKind::Single { from, to } | LineKind::Multiphoton { from, to, .. } => vec![(*from, *to)],
            LineKind::RamanA => vec![(s(0, 0), s(1, 0)), (s(0, 1), s(3, 0))],
            LineKind::RamanB => vec![(s(0, 0), s(1, 0)), (s(1, 1), s(4, 0))],
            LineKind::RamanC => vec![(s(0, 0), s(1, 0)), (s(2, 1), s(5, 0))],
            LineKind::Sum(parts) => parts.clone(),
        }
    }

    pub fn frequency(&self, ds: &DressedSpectrum) -> Result<f64, SolveError> {
        let total = self
            .constituents()
            .into_iter()
            .map(|(a, b)| transition_frequency(ds, a, b))
            .sum::<Result<f64, _>>()?;
        Ok(match self {
            LineKind::Multiphoton { photons, .. } => total / f64::from(*photons),
            _ => total,
        })
    }
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineKind::Single { from, to } => write!(f, "{from}->{to}"),
            LineKind::Multiphoton { from, to, photons } => write!(f, "{from}->{to}/{photons}"),
            LineKind::RamanA => f.write_str("raman_A"),
            LineKind::RamanB => f.write_str("raman_B"),
            LineKind::RamanC => f.write_str("raman_C"),
            LineKind::Sum(parts) => {
                f.write_str("sum[")?;
                for (k, (a, b)) in parts.iter().enumerate() {
                    if k > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{a}->{b}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn parse_transition(s: &str) -> Result<(StateLabel, StateLabel), String> {
    let (a, b) = s.split_once("->").ok_or_else(|| format!("bad transition `{s}`, expected a:b->c:d"))?;
    Ok((a.parse()?, b.parse()?))
}

impl FromStr for LineKind {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        match t {
            "raman_A" => return Ok(LineKind::RamanA),
            "raman_B" => return Ok(LineKind::RamanB),
            "raman_C" => return Ok(LineKind::RamanC),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix("sum[").and_then(|r| r.strip_suffix(']')) {
            let parts = inner.split('+').map(parse_transition).collect::<Result<Vec<_>, _>>()?;
            if parts.is_empty() {
                return Err("empty sum line".into());
            }
            return Ok(LineKind::Sum(parts));
        }
        if let Some((tr, n)) = t.split_once('/') {
            let (from, to) = parse_transition(tr)?;
            let photons: u32 = n.trim().parse().map_err(|_| format!("bad photon count in `{t}`"))?;
            if photons == 0 {
                return Err("photon count must be >= 1".into());
            }
            return Ok(LineKind::Multiphoton { from, to, photons });
        }
        let (from, to) = parse_transition(t)?;
        Ok(LineKind::Single { from, to })
    }
}

impl Serialize for LineKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LineKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLine {
    pub kind: LineKind,
    pub frequency: f64,
    pub constituents: Vec<(StateLabel, StateLabel)>,
}

impl TransitionLine {
    pub fn evaluate(kind: LineKind, ds: &DressedSpectrum) -> Result<Self, SolveError> {
        let frequency = kind.frequency(ds)?;
        let constituents = kind.constituents();
        Ok(Self { kind, frequency, constituents })
    }
}

/// The three composite lines A, B, C.
pub fn raman_lines(ds: &DressedSpectrum) -> Result<Vec<TransitionLine>, SolveError> {
    [LineKind::RamanA, LineKind::RamanB, LineKind::RamanC]
        .into_iter()
        .map(|k| TransitionLine::evaluate(k, ds))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn device_te(levels: usize) -> TransmonEigens {
        solve_transmon(&TransmonParams::new(0.14, 11.6), &ChargeBasisConfig::default(), levels).unwrap()
    }

    #[test]
    fn parity_blocks_match_full_solve() {
        let te = device_te(6);
        let cav = CavityParams::new(7.0, 0.2);
        let blocked = solve_dressed(&te, 6, &cav).unwrap();
        let full = solve_dressed(&TransmonEigens { parity: None, ..te }, 6, &cav).unwrap();
        for (a, b) in blocked.levels.iter().zip(&full.levels) {
            assert_eq!(a.label, b.label);
            assert!((a.energy - b.energy).abs() < 1e-11);
            assert!((a.overlap - b.overlap).abs() < 1e-10);
        }
    }

    #[test]
    fn decoupled_is_diagonal() {
        let te = device_te(6);
        let cav = CavityParams { g: 0.0, ..CavityParams::new(7.0, 0.0) };
        let h = build_dressed_hamiltonian(&te, 6, &cav).unwrap();
        assert_eq!(h.nrows(), 36);
        for r in 0..36 {
            for c in 0..36 {
                if r != c {
                    assert_eq!(h[(r, c)], 0.0);
                }
            }
        }
        assert_eq!(h[(7, 7)], te.energies[1] + 7.0);
    }

    #[test]
    fn dimension_errors() {
        let te = device_te(3);
        let cav = CavityParams::new(7.0, 0.05);
        assert!(matches!(build_dressed_hamiltonian(&te, 4, &cav), Err(SolveError::Dimension(_))));
        assert!(matches!(build_dressed_hamiltonian(&te, 0, &cav), Err(SolveError::Dimension(_))));
        let bad = CavityParams { n_ph_max: 0, ..cav };
        assert!(build_dressed_hamiltonian(&te, 3, &bad).is_err());
    }

    #[test]
    fn decoupled_labels_and_bare_transitions() {
        let te = device_te(6);
        let cav = CavityParams::new(7.0, 0.0);
        let ds = solve_dressed(&te, 6, &cav).unwrap();
        for l in &ds.levels {
            assert_eq!(l.overlap, 1.0);
            assert!(!l.ambiguous);
            let bare = te.energies[l.label.n_q] + l.label.n_ph as f64 * 7.0;
            assert!((l.energy - bare).abs() <= 1e-12 * bare.abs().max(1.0));
        }
        let f = transition_frequency(&ds, s(0, 0), s(1, 0)).unwrap();
        assert!((f - te.energies[1]).abs() < 1e-12);
        let f = transition_frequency(&ds, s(0, 0), s(0, 1)).unwrap();
        assert!((f - 7.0).abs() < 1e-12);
        // A = f01 + (E3 - E0 - ω_c)
        let a = LineKind::RamanA.frequency(&ds).unwrap();
        assert!((a - (te.energies[1] + te.energies[3] - 7.0)).abs() < 1e-11);
    }

    #[test]
    fn weak_coupling_preserves_order() {
        let te = device_te(6);
        let ds = solve_dressed(&te, 6, &CavityParams::new(7.0, 0.005)).unwrap();
        for l in &ds.levels[..12] {
            assert!(l.overlap > 0.99, "{:?}", l);
        }
        let bare = solve_dressed(&te, 6, &CavityParams::new(7.0, 0.0)).unwrap();
        let mut a: Vec<_> = ds.levels.iter().map(|l| l.label).collect();
        let b: Vec<_> = bare.levels.iter().map(|l| l.label).collect();
        assert_eq!(a, b);
        a.sort();
        assert_eq!(a, product_basis(6, 5));
    }

    #[test]
    fn exact_crossing_is_ambiguous() {
        let r = 0.5f64.sqrt();
        let eig = EigenPairs {
            values: DVector::from_vec(vec![-1.0, 1.0]),
            vectors: DMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
        };
        let ds = label_dressed_states(&eig, &product_basis(2, 0), 2, 0).unwrap();
        for l in &ds.levels {
            assert!((l.overlap - 0.5).abs() < 1e-15);
            assert!(l.ambiguous);
        }
        assert_ne!(ds.levels[0].label, ds.levels[1].label);
        assert!(matches!(
            transition_frequency(&ds, s(0, 0), s(1, 0)),
            Err(SolveError::MissingLabel(_))
        ));
    }

    #[test]
    fn missing_label_outside_truncation() {
        let te = device_te(4);
        let ds = solve_dressed(&te, 4, &CavityParams::new(7.0, 0.05)).unwrap();
        assert!(matches!(LineKind::RamanB.frequency(&ds), Err(SolveError::MissingLabel(l)) if l == s(4, 0)));
        assert!(raman_lines(&ds).is_err());
    }

    #[test]
    fn raman_identities() {
        let te = device_te(6);
        let ds = solve_dressed(&te, 6, &CavityParams::new(7.0, 0.07)).unwrap();
        let lines = raman_lines(&ds).unwrap();
        let f = |a, b| transition_frequency(&ds, a, b).unwrap();
        let base = f(s(0, 0), s(1, 0));
        assert_eq!(lines[0].frequency, base + f(s(0, 1), s(3, 0)));
        assert_eq!(lines[1].frequency, base + f(s(1, 1), s(4, 0)));
        assert_eq!(lines[2].frequency, base + f(s(2, 1), s(5, 0)));
    }

    /// Second-order perturbative level shifts with the full coupling.
    fn perturbative_shift(te: &TransmonEigens, cav: &CavityParams, q: usize, p: usize) -> f64 {
        let e = |q: usize, p: usize| te.energies[q] + p as f64 * cav.omega_c;
        let mut shift = 0.0;
        for j in 0..te.levels() {
            let n = te.n_elements[(q, j)];
            // (q,p) -> (j,p+1) and (j,p-1)
            let up = cav.g * n * ((p + 1) as f64).sqrt();
            shift += up * up / (e(q, p) - e(j, p + 1));
            if p > 0 {
                let down = cav.g * n * (p as f64).sqrt();
                shift += down * down / (e(q, p) - e(j, p - 1));
            }
        }
        shift
    }

    #[test]
    fn dispersive_shift_matches_perturbation_theory() {
        let te = device_te(6);
        let cav = CavityParams { n_ph_max: 6, ..CavityParams::new(7.0, 0.07) };
        assert!(cav.g * te.n_elements[(0, 1)].abs() / (7.0 - te.f01()) < 0.1);
        let ds = solve_dressed(&te, 6, &cav).unwrap();
        let two_chi = transition_frequency(&ds, s(0, 0), s(0, 1)).unwrap()
            - transition_frequency(&ds, s(1, 0), s(1, 1)).unwrap();
        let sh = |q, p| perturbative_shift(&te, &cav, q, p);
        let oracle = (sh(0, 1) - sh(0, 0)) - (sh(1, 1) - sh(1, 0));
        assert!(((two_chi - oracle) / oracle).abs() < 0.1, "{two_chi} vs {oracle}");
    }

    #[test]
    fn resonant_two_level_splitting() {
        let te = device_te(2);
        let wq = te.f01();
        let g = 0.002;
        let g_eff = g * te.n_elements[(0, 1)].abs();
        let cav = CavityParams { omega_c: wq, g, n_ph_max: 8 };
        let h = build_dressed_hamiltonian(&te, 2, &cav).unwrap();
        let eig = symmetric_eigen(h).unwrap();
        // Excitation manifold n sits near n·ω; the pair closest to it is split by 2 g_eff sqrt(n).
        for n in 1..=3usize {
            let target = n as f64 * wq;
            let mut near: Vec<f64> = eig.values.iter().copied().filter(|e| (e - target).abs() < 0.5 * wq).collect();
            near.sort_by(f64::total_cmp);
            assert_eq!(near.len(), 2);
            let split = near[1] - near[0];
            let expected = 2.0 * g_eff * (n as f64).sqrt();
            let bound = 10.0 * g_eff * g_eff / wq * n as f64;
            assert!((split - expected).abs() < bound, "n={n}: {split} vs {expected} (bound {bound})");
        }
    }

    #[test]
    fn line_kind_text_round_trip() {
        for t in ["0:0->1:0", "0:0->2:0/2", "raman_A", "raman_B", "raman_C", "sum[0:0->1:0+0:1->3:0]"] {
            let k: LineKind = t.parse().unwrap();
            assert_eq!(k.to_string(), t);
        }
        assert!("0:0-1:0".parse::<LineKind>().is_err());
        assert!("0:0->2:0/0".parse::<LineKind>().is_err());
        assert!("sum[]".parse::<LineKind>().is_err());
    }
}
