//! Quantum system definition, system documents, and the standing hypotheses.
//!
//! A system document is JSON:
//!
//! ```json
//! { "n": 2, "label": "qubit", "h0": [[0.0, 0.0], [0.0, 1.0]], "mu": [[0.0, 1.0], [1.0, 0.0]] }
//! ```
//!
//! or the compact CSV variant: first line `n`, then `n` rows of `h0`, then `n`
//! rows of `mu`. [`save_system`] writes the canonical JSON form; floats use
//! the shortest representation that parses back to the same bits.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspace::HermitianZT;
use crate::reachability::{lie_closure, Controllability};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;

pub const HYP_ZERO_TRACE: &str = "zero-trace dipole";
pub const HYP_SYMMETRIC: &str = "real symmetric H0 and μ";
pub const HYP_OFFDIAG: &str = "nonzero off-diagonal dipole";
pub const HYP_CONTROLLABLE: &str = "Lie-algebra controllability";

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    h0: DMatrix<f64>,
    mu: DMatrix<f64>,
    label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    h0: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
}

fn rows_to_matrix(name: &str, n: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("`{name}` must be a {n}x{n} array")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn asymmetry(m: &DMatrix<f64>) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

fn trace_defect(mu: &DMatrix<f64>) -> f64 {
    mu.trace().abs() / (1.0 + mu.norm())
}

impl QuantumSystem {
    pub fn new(h0: DMatrix<f64>, mu: DMatrix<f64>, label: Option<String>) -> Result<Self> {
        let n = h0.nrows();
        if h0.ncols() != n {
            return Err(Error::NotSquare { rows: n, cols: h0.ncols() });
        }
        if mu.nrows() != n || mu.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mu.nrows() });
        }
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if h0.iter().chain(mu.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Validation {
                hypothesis: HYP_SYMMETRIC,
                detail: "non-finite matrix entry".into(),
            });
        }
        for (name, m) in [("H0", &h0), ("μ", &mu)] {
            let (d, i, j) = asymmetry(m);
            if d > SYMMETRY_TOL {
                return Err(Error::Validation {
                    hypothesis: HYP_SYMMETRIC,
                    detail: format!(
                        "{name} not symmetric: entry ({},{}) differs from ({},{}) by {d:e}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    ),
                });
            }
        }
        if trace_defect(&mu) >= TRACE_TOL {
            return Err(Error::Validation {
                hypothesis: HYP_ZERO_TRACE,
                detail: format!("Tr(μ)≠0 (Tr(μ) = {})", mu.trace()),
            });
        }
        Ok(Self { h0, mu, label })
    }

    pub fn from_rows(h0: &[&[f64]], mu: &[&[f64]]) -> Result<Self> {
        let n = h0.len();
        let to = |rows: &[&[f64]]| {
            let owned: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
            owned
        };
        let h = rows_to_matrix("h0", n, &to(h0))?;
        let m = rows_to_matrix("mu", n, &to(mu))?;
        Self::new(h, m, None)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn mu(&self) -> &DMatrix<f64> {
        &self.mu
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// The dipole as an element of the traceless Hermitian space.
    pub fn dipole(&self) -> HermitianZT {
        HermitianZT::project(&crate::matspace::from_real(&self.mu))
    }

    fn to_doc(&self) -> SystemDoc {
        SystemDoc {
            n: self.dim(),
            label: self.label.clone(),
            h0: matrix_to_rows(&self.h0),
            mu: matrix_to_rows(&self.mu),
        }
    }
}

pub fn load_system_json(text: &str) -> Result<QuantumSystem> {
    let doc: SystemDoc = serde_json::from_str(text)?;
    let h0 = rows_to_matrix("h0", doc.n, &doc.h0)?;
    let mu = rows_to_matrix("mu", doc.n, &doc.mu)?;
    QuantumSystem::new(h0, mu, doc.label)
}

pub fn load_system_csv(text: &str) -> Result<QuantumSystem> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let header = rows.first().ok_or_else(|| Error::Parse("empty system file".into()))?;
    if header.len() != 1 || header[0].fract() != 0.0 || header[0] < 1.0 {
        return Err(Error::Parse("first line must be the dimension n".into()));
    }
    let n = header[0] as usize;
    if rows.len() != 1 + 2 * n {
        return Err(Error::Parse(format!("expected {} matrix rows, found {}", 2 * n, rows.len() - 1)));
    }
    let h0 = rows_to_matrix("h0", n, &rows[1..=n])?;
    let mu = rows_to_matrix("mu", n, &rows[n + 1..])?;
    QuantumSystem::new(h0, mu, None)
}

/// Reads a system document, JSON or CSV (detected by the first non-blank byte).
pub fn load_system<R: Read>(mut source: R) -> Result<QuantumSystem> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    if text.trim_start().starts_with('{') {
        load_system_json(&text)
    } else {
        load_system_csv(&text)
    }
}

pub fn save_system<W: Write>(sys: &QuantumSystem, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, &sys.to_doc())?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub zero_trace: bool,
    pub symmetric: bool,
    pub offdiag_nonzero: bool,
    pub controllable: Controllability,
    pub closure_dimension: usize,
    pub min_offdiag: f64,
    pub offdiag_tol: f64,
}

impl HypothesisReport {
    /// Zero trace, symmetry and controllability; the off-diagonal condition
    /// is only needed by the dipole-independent way-points and is checked
    /// separately.
    pub fn standing_hold(&self) -> bool {
        self.zero_trace && self.symmetric && self.controllable.is_controllable()
    }

    /// Names of the failed hypotheses, in a fixed order.
    pub fn failures(&self, include_offdiag: bool) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.zero_trace {
            out.push(HYP_ZERO_TRACE);
        }
        if !self.symmetric {
            out.push(HYP_SYMMETRIC);
        }
        if include_offdiag && !self.offdiag_nonzero {
            out.push(HYP_OFFDIAG);
        }
        if !self.controllable.is_controllable() {
            out.push(HYP_CONTROLLABLE);
        }
        out
    }
}

pub fn default_offdiag_tol(sys: &QuantumSystem) -> f64 {
    1e-12 * sys.mu().norm()
}

pub fn min_offdiag(mu: &DMatrix<f64>) -> f64 {
    let n = mu.nrows();
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.min(mu[(i, j)].abs());
            }
        }
    }
    m
}

pub fn check_hypotheses(sys: &QuantumSystem, offdiag_tol: f64) -> HypothesisReport {
    let closure = lie_closure(sys.h0(), sys.mu());
    let min_off = min_offdiag(sys.mu());
    HypothesisReport {
        zero_trace: trace_defect(sys.mu()) < TRACE_TOL,
        symmetric: asymmetry(sys.h0()).0 <= SYMMETRY_TOL && asymmetry(sys.mu()).0 <= SYMMETRY_TOL,
        offdiag_nonzero: min_off > offdiag_tol,
        controllable: closure.verdict,
        closure_dimension: closure.dimension,
        min_offdiag: min_off,
        offdiag_tol,
    }
}
