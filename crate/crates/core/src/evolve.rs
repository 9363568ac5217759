//! Propagator integration for piecewise-constant controls.
//!
//! Each step applies `exp(-iΔt (H0 − ε_m μ))`, computed from the real
//! symmetric eigendecomposition of the step generator, so the only error is
//! round-off.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspace::{
    c, ensure_hermitian, ensure_same_dim, ensure_square, identity, trace_of_product, CMatrix,
    HermitianZT, UnitaryMatrix, C64,
};
use crate::model::QuantumSystem;

/// Piecewise-constant control on a uniform grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "M")]
    steps: usize,
    values: Vec<f64>,
}

impl ControlField {
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidField(format!("horizon must be positive, got {horizon}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidField("at least one step is required".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("value {} is not finite", k + 1)));
        }
        Ok(Self { horizon, steps: values.len(), values })
    }

    pub fn zeros(horizon: f64, steps: usize) -> Result<Self> {
        Self::new(horizon, vec![0.0; steps])
    }

    pub fn constant(horizon: f64, steps: usize, value: f64) -> Result<Self> {
        Self::new(horizon, vec![value; steps])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.steps {
            return Err(Error::DimensionMismatch { expected: self.steps, got: values.len() });
        }
        Self::new(self.horizon, values)
    }

    /// Reversed step order on the same grid.
    pub fn reversed(&self) -> Self {
        let mut v = self.values.clone();
        v.reverse();
        Self { horizon: self.horizon, steps: self.steps, values: v }
    }

    /// Concatenation of fields sharing one step length.
    pub fn concat(parts: &[ControlField]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("control field segments"))?;
        let dt = first.dt();
        let mut values = Vec::new();
        let mut horizon = 0.0;
        for p in parts {
            if (p.dt() - dt).abs() > 1e-12 * dt {
                return Err(Error::InvalidField("segments use different step lengths".into()));
            }
            values.extend_from_slice(&p.values);
            horizon += p.horizon;
        }
        Self::new(horizon, values)
    }

    /// Splits after `k` steps.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        if k == 0 || k >= self.steps {
            return Err(Error::InvalidArgument(format!("split point {k} outside 1..{}", self.steps)));
        }
        let dt = self.dt();
        let a = Self::new(dt * k as f64, self.values[..k].to_vec())?;
        let b = Self::new(dt * (self.steps - k) as f64, self.values[k..].to_vec())?;
        Ok((a, b))
    }
}

pub fn load_field<R: Read>(source: R) -> Result<ControlField> {
    #[derive(Deserialize)]
    struct Doc {
        #[serde(rename = "T")]
        horizon: f64,
        #[serde(rename = "M")]
        steps: usize,
        values: Vec<f64>,
    }
    let doc: Doc = serde_json::from_reader(source)?;
    if doc.values.len() != doc.steps {
        return Err(Error::Parse(format!("M = {} but {} values given", doc.steps, doc.values.len())));
    }
    ControlField::new(doc.horizon, doc.values)
}

pub fn save_field<W: Write>(field: &ControlField, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, field)?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Eigendecomposition of one step generator `H0 − εμ`, giving the step
/// propagator and its exact derivative in `ε`.
pub(crate) struct StepExp {
    vecs: DMatrix<f64>,
    vals: Vec<f64>,
    dt: f64,
}

impl StepExp {
    pub(crate) fn new(sys: &QuantumSystem, eps: f64, dt: f64) -> Self {
        let gen = sys.h0() - sys.mu().scale(eps);
        let eig = SymmetricEigen::new(gen);
        Self { vecs: eig.eigenvectors, vals: eig.eigenvalues.iter().copied().collect(), dt }
    }

    fn phases(&self) -> Vec<C64> {
        self.vals.iter().map(|&e| C64::from_polar(1.0, -self.dt * e)).collect()
    }

    pub(crate) fn propagator(&self) -> CMatrix {
        let n = self.vals.len();
        let ph = self.phases();
        let v = &self.vecs;
        CMatrix::from_fn(n, n, |i, j| {
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                acc += ph[k] * (v[(i, k)] * v[(j, k)]);
            }
            acc
        })
    }

    /// `d/dε exp(-iΔt(H0 − εμ))` via divided differences of `x ↦ exp(-iΔt x)`
    /// in the eigenbasis of the generator.
    pub(crate) fn derivative(&self, mu: &DMatrix<f64>) -> CMatrix {
        let n = self.vals.len();
        let v = &self.vecs;
        let mu_eig = v.transpose() * mu * v;
        let dt = self.dt;
        let kernel = CMatrix::from_fn(n, n, |a, b| {
            let mid = 0.5 * (self.vals[a] + self.vals[b]);
            let half = 0.5 * (self.vals[a] - self.vals[b]);
            let x = dt * half;
            let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
            // f[a,b] = -iΔt e^{-iΔt mid} sinc; dH/dε = -μ
            C64::from_polar(dt * sinc, -dt * mid) * c(0.0, 1.0) * mu_eig[(a, b)]
        });
        let vc = crate::matspace::from_real(v);
        &vc * kernel * vc.transpose()
    }
}

pub fn step_propagator(sys: &QuantumSystem, eps: f64, dt: f64) -> CMatrix {
    StepExp::new(sys, eps, dt).propagator()
}

/// Unitaries and conjugated dipoles at every grid node `t_0 = 0, …, t_M = T`.
#[derive(Debug, Clone)]
pub struct PropagatorTrajectory {
    times: Vec<f64>,
    unitaries: Vec<UnitaryMatrix>,
    dipoles: Vec<HermitianZT>,
    mu: HermitianZT,
}

impl PropagatorTrajectory {
    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[UnitaryMatrix] {
        &self.unitaries
    }

    pub fn dipoles(&self) -> &[HermitianZT] {
        &self.dipoles
    }

    pub fn dipole(&self) -> &HermitianZT {
        &self.mu
    }

    pub fn final_unitary(&self) -> &UnitaryMatrix {
        self.unitaries.last().expect("trajectory always holds U_0")
    }
}

pub fn propagate(sys: &QuantumSystem, field: &ControlField) -> PropagatorTrajectory {
    let n = sys.dim();
    let dt = field.dt();
    let mu = sys.dipole();
    let mut times = Vec::with_capacity(field.steps() + 1);
    let mut unitaries = Vec::with_capacity(field.steps() + 1);
    let mut dipoles = Vec::with_capacity(field.steps() + 1);
    let mut u = identity(n);
    times.push(0.0);
    dipoles.push(mu.clone());
    unitaries.push(UnitaryMatrix::from_raw(u.clone()));
    for (m, &eps) in field.values().iter().enumerate() {
        u = step_propagator(sys, eps, dt) * u;
        times.push(dt * (m + 1) as f64);
        dipoles.push(conjugate(&u, mu.matrix()));
        unitaries.push(UnitaryMatrix::from_raw(u.clone()));
    }
    PropagatorTrajectory { times, unitaries, dipoles, mu }
}

fn conjugate(u: &CMatrix, mu: &CMatrix) -> HermitianZT {
    HermitianZT::project(&(u.adjoint() * mu * u))
}

/// `U* μ U`.
pub fn conjugated_dipole(u: &UnitaryMatrix, mu: &HermitianZT) -> Result<HermitianZT> {
    ensure_same_dim(mu.dim(), u.dim())?;
    Ok(conjugate(u.matrix(), mu.matrix()))
}

pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Hermitian, unit trace, eigenvalues ≥ −1e-10.
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        ensure_hermitian(&m, DENSITY_TOL).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let tr = m.trace();
        if (tr - c(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} ≠ 1")));
        }
        let h = (&m + m.adjoint()).scale(0.5);
        let min = SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(identity(n).unscale(n as f64))
    }

    /// `|k⟩⟨k|` with 0-based `k`.
    pub fn basis_state(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidArgument(format!("state {k} outside dimension {n}")));
        }
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = c(1.0, 0.0);
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.0, &self.0).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `ρ_m = U_m ρ0 U_m*` at every node.
pub fn evolve_density(traj: &PropagatorTrajectory, rho0: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
    ensure_same_dim(traj.dim(), rho0.dim())?;
    Ok(traj
        .unitaries()
        .iter()
        .map(|u| {
            let r = u.matrix() * rho0.matrix() * u.matrix().adjoint();
            DensityMatrix((&r + r.adjoint()).scale(0.5))
        })
        .collect())
}

/// `Tr(ρ O)` for Hermitian `O` (trace not restricted).
pub fn expectation(rho: &DensityMatrix, obs: &CMatrix) -> Result<f64> {
    ensure_square(obs)?;
    ensure_same_dim(rho.dim(), obs.nrows())?;
    ensure_hermitian(obs, DENSITY_TOL)?;
    Ok(trace_of_product(rho.matrix(), obs).re)
}

/// CSV with `t` followed by `Re`/`Im` of every `U` entry in row-major order.
pub fn write_trajectory_csv<W: Write>(traj: &PropagatorTrajectory, sink: W) -> Result<()> {
    let n = traj.dim();
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("u{i}_{j}_re"));
            header.push(format!("u{i}_{j}_im"));
        }
    }
    w.write_record(&header)?;
    for (t, u) in traj.times().iter().zip(traj.unitaries()) {
        let mut rec = vec![t.to_string()];
        for i in 0..n {
            for j in 0..n {
                let z = u.matrix()[(i, j)];
                rec.push(z.re.to_string());
                rec.push(z.im.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
