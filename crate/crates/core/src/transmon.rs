//! Bare transmon in the charge basis: `4 E_C (n - n_g)^2 - E_J cos(phi)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigen::{block_symmetric_eigen, fix_sign, sturm_count, symmetric_eigen, tridiagonal_lowest_eigenvalues};
use crate::error::{ParamError, SolveError};

pub const DEFAULT_N_CUT: usize = 30;
pub const DEFAULT_TRANSMON_LEVELS: usize = 6;
/// Largest tolerated shift (GHz) of any requested level when n_cut is doubled.
pub const DEFAULT_CUTOFF_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    /// Charging energy E_C/h, GHz.
    pub e_c: f64,
    /// Josephson energy E_J/h, GHz.
    pub e_j: f64,
    /// Offset charge in units of 2e.
    #[serde(default)]
    pub n_g: f64,
}

impl TransmonParams {
    pub fn new(e_c: f64, e_j: f64) -> Self {
        Self { e_c, e_j, n_g: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.e_c.is_finite() && self.e_c > 0.0) {
            return Err(ParamError::new("e_c", "must be finite and > 0"));
        }
        if !(self.e_j.is_finite() && self.e_j >= 0.0) {
            return Err(ParamError::new("e_j", "must be finite and >= 0"));
        }
        if !self.n_g.is_finite() {
            return Err(ParamError::new("n_g", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeBasisConfig {
    /// Charge states -n_cut..=n_cut are kept.
    pub n_cut: usize,
    /// Re-solve with 2·n_cut and fail if any requested level moves by more
    /// than `cutoff_tol`.
    #[serde(default = "default_true")]
    pub check_cutoff: bool,
    #[serde(default = "default_cutoff_tol")]
    pub cutoff_tol: f64,
}

fn default_true() -> bool {
    true
}

fn default_cutoff_tol() -> f64 {
    DEFAULT_CUTOFF_TOL
}

impl Default for ChargeBasisConfig {
    fn default() -> Self {
        Self { n_cut: DEFAULT_N_CUT, check_cutoff: true, cutoff_tol: DEFAULT_CUTOFF_TOL }
    }
}

impl ChargeBasisConfig {
    pub fn with_cutoff(n_cut: usize) -> Self {
        Self { n_cut, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_cut + 1
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_cut < 1 {
            return Err(ParamError::new("n_cut", "must be >= 1"));
        }
        if !(self.cutoff_tol > 0.0) {
            return Err(ParamError::new("cutoff_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Low-lying transmon spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmonEigens {
    /// Eigenfrequencies in GHz, ascending, ground state at 0.
    pub energies: Vec<f64>,
    /// `n_elements[(i, j)] = <i| n |j>` between the kept eigenstates.
    pub n_elements: DMatrix<f64>,
    /// Parity (+1 or -1) of each kept state under n -> -n, known exactly
    /// when n_g = 0; `<i|n|j>` vanishes between states of equal parity.
    pub parity: Option<Vec<i8>>,
}

impl TransmonEigens {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn f01(&self) -> f64 {
        self.energies[1]
    }

    pub fn anharmonicity(&self) -> f64 {
        self.energies[2] - 2.0 * self.energies[1]
    }
}

fn charge_tridiagonal(p: &TransmonParams, n_cut: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..2 * n_cut + 1)
        .map(|k| {
            let n = k as f64 - n_cut as f64;
            4.0 * p.e_c * (n - p.n_g).powi(2)
        })
        .collect();
    let off = vec![-0.5 * p.e_j; 2 * n_cut];
    (diag, off)
}

/// Charge-basis Hamiltonian (GHz), rows ordered n = -n_cut..=n_cut.
pub fn build_charge_hamiltonian(p: &TransmonParams, cfg: &ChargeBasisConfig) -> DMatrix<f64> {
    let (diag, off) = charge_tridiagonal(p, cfg.n_cut);
    let dim = diag.len();
    let mut h = DMatrix::zeros(dim, dim);
    for (k, d) in diag.iter().enumerate() {
        h[(k, k)] = *d;
    }
    for (k, o) in off.iter().enumerate() {
        h[(k, k + 1)] = *o;
        h[(k + 1, k)] = *o;
    }
    h
}

/// Lowest `n_levels` eigenstates of the transmon.
pub fn solve_transmon(
    p: &TransmonParams,
    cfg: &ChargeBasisConfig,
    n_levels: usize,
) -> Result<TransmonEigens, SolveError> {
    p.validate()?;
    cfg.validate()?;
    let dim = cfg.dim();
    if n_levels == 0 || n_levels > dim {
        return Err(SolveError::Dimension(format!(
            "requested {n_levels} levels from a {dim}-state charge basis"
        )));
    }

    let (raw, basis, parity) = if p.n_g == 0.0 {
        let (raw, basis, parity) = parity_eigenpairs(p, cfg.n_cut, n_levels)?;
        (raw, basis, Some(parity))
    } else {
        let eig = symmetric_eigen(build_charge_hamiltonian(p, cfg))?;
        let raw: Vec<f64> = eig.values.iter().take(n_levels).copied().collect();
        (raw, eig.vectors.columns(0, n_levels).into_owned(), None)
    };
    let energies: Vec<f64> = raw.iter().map(|e| e - raw[0]).collect();

    if cfg.check_cutoff {
        // The n_cut basis is a principal block of the 2 n_cut one, so by
        // interlacing each wide eigenvalue lies at or below its narrow
        // counterpart. A Sturm count at `a - tol` detects a larger drop.
        let (diag, off) = charge_tridiagonal(p, 2 * cfg.n_cut);
        for (level, a) in raw.iter().enumerate() {
            if sturm_count(&diag, &off, a - cfg.cutoff_tol) > level {
                let wide = tridiagonal_lowest_eigenvalues(&diag, &off, level + 1);
                return Err(SolveError::Cutoff { level, shift: a - wide[level] });
            }
        }
    }

    let charge = DVector::from_iterator(dim, (0..dim).map(|k| k as f64 - cfg.n_cut as f64));
    let mut n_elements = basis.transpose() * DMatrix::from_diagonal(&charge) * &basis;
    if let Some(par) = &parity {
        for i in 0..n_levels {
            for j in 0..n_levels {
                if par[i] == par[j] {
                    n_elements[(i, j)] = 0.0;
                }
            }
        }
    }

    Ok(TransmonEigens { energies, n_elements, parity })
}

/// Energies, charge-basis vectors (one column per level) and parities.
type ParitySolve = (Vec<f64>, DMatrix<f64>, Vec<i8>);

/// Lowest `n_levels` eigenpairs at n_g = 0, solving the even and odd charge
/// sectors separately. Vectors are returned in the charge basis.
fn parity_eigenpairs(p: &TransmonParams, n_cut: usize, n_levels: usize) -> Result<ParitySolve, SolveError> {
    // even: |0>, (|k> + |-k>)/sqrt2 at rows 0..=n_cut
    // odd: (|k> - |-k>)/sqrt2 at rows n_cut+1..2 n_cut, k = 1..=n_cut
    let dim = 2 * n_cut + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..=n_cut {
        h[(k, k)] = 4.0 * p.e_c * (k * k) as f64;
    }
    for k in 1..=n_cut {
        h[(n_cut + k, n_cut + k)] = 4.0 * p.e_c * (k * k) as f64;
    }
    let mut couple = |a: usize, b: usize, v: f64| {
        h[(a, b)] = v;
        h[(b, a)] = v;
    };
    if n_cut >= 1 {
        couple(0, 1, -p.e_j / std::f64::consts::SQRT_2);
    }
    for k in 1..n_cut {
        couple(k, k + 1, -0.5 * p.e_j);
        couple(n_cut + k, n_cut + k + 1, -0.5 * p.e_j);
    }
    let blocks = [(0..=n_cut).collect::<Vec<_>>(), (n_cut + 1..dim).collect()];
    let eig = block_symmetric_eigen(&h, &blocks)?;

    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut vectors = DMatrix::zeros(dim, n_levels);
    let mut parity = Vec::with_capacity(n_levels);
    for l in 0..n_levels {
        let u = eig.vectors.column(l);
        let even_weight: f64 = (0..=n_cut).map(|k| u[k] * u[k]).sum();
        let mut col = DVector::zeros(dim);
        if even_weight > 0.5 {
            parity.push(1);
            col[n_cut] = u[0];
            for k in 1..=n_cut {
                col[n_cut + k] = u[k] * half;
                col[n_cut - k] = u[k] * half;
            }
        } else {
            parity.push(-1);
            for k in 1..=n_cut {
                col[n_cut + k] = u[n_cut + k] * half;
                col[n_cut - k] = -u[n_cut + k] * half;
            }
        }
        fix_sign(&mut col);
        vectors.set_column(l, &col);
    }
    Ok((eig.values.iter().take(n_levels).copied().collect(), vectors, parity))
}

/// Large-E_J/E_C estimate sqrt(8 E_J E_C) - E_C of the 0-1 frequency.
pub fn asymptotic_f01(p: &TransmonParams) -> f64 {
    (8.0 * p.e_j * p.e_c).sqrt() - p.e_c
}
