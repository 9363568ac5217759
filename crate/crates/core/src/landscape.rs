//! Spanning analysis of conjugated dipoles, way-point visit checks, the
//! landscape gradient of `⟨O⟩(T)` and the kinematic critical-point residual.

use std::io::Write;

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::encode;
use crate::error::{Error, Result};
use crate::evolve::{
    expectation, propagate, ControlField, DensityMatrix, PropagatorTrajectory, StepExp,
};
use crate::matspace::{
    commutator, ensure_hermitian, ensure_same_dim, ensure_square, phase_invariant_fidelity,
    trace_of_product, CMatrix, HermitianZT, UnitaryMatrix, ZtBasis,
};
use crate::model::QuantumSystem;
use crate::waypoints::WaypointSet;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpanReport {
    /// Matrix dimension `N`; the target space has dimension `N²−1`.
    pub dim: usize,
    pub count: usize,
    /// Descending; `min(count, N²−1)` entries.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub full: bool,
    /// Orthonormal basis of the orthogonal complement of the span.
    pub complement_basis: Vec<HermitianZT>,
}

impl SpanReport {
    /// `σ_min / σ_max` over the leading `N²−1` values, 0 when fewer exist.
    pub fn condition_ratio(&self) -> f64 {
        let d = self.dim * self.dim - 1;
        if self.singular_values.len() < d || self.singular_values[0] == 0.0 {
            return 0.0;
        }
        self.singular_values[d - 1] / self.singular_values[0]
    }

    pub fn verdict(&self) -> String {
        if self.full {
            "FULL".to_string()
        } else {
            format!("DEFICIENT rank={}", self.rank)
        }
    }
}

pub fn spanning_rank(mats: &[HermitianZT]) -> Result<SpanReport> {
    spanning_rank_with_tol(mats, RANK_TOL)
}

/// Stacks coordinates as rows and reads the rank off the singular values.
pub fn spanning_rank_with_tol(mats: &[HermitianZT], tol: f64) -> Result<SpanReport> {
    let first = mats.first().ok_or(Error::Empty("matrix list"))?;
    let n = first.dim();
    for m in mats {
        ensure_same_dim(n, m.dim())?;
    }
    let basis = ZtBasis::new(n)?;
    let d = basis.len();
    let coords: Vec<Vec<f64>> = mats
        .par_iter()
        .map(|m| basis.to_coords(m))
        .collect::<Result<_>>()?;

    // pad with zero rows so the SVD returns a full right basis
    let rows = mats.len().max(d);
    let a = DMatrix::from_fn(rows, d, |r, k| coords.get(r).map_or(0.0, |v| v[k]));
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sorted: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();

    let smax = sorted[0];
    let rank = if smax > 0.0 { sorted.iter().filter(|&&s| s > tol * smax).count() } else { 0 };
    let complement_basis = order[rank..]
        .iter()
        .map(|&k| {
            let row: Vec<f64> = v_t.row(k).iter().copied().collect();
            basis.from_coords(&row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut singular_values = sorted;
    singular_values.truncate(mats.len().min(d));
    Ok(SpanReport { dim: n, count: mats.len(), singular_values, rank, full: rank == d, complement_basis })
}

/// Span of `μ̂(t_m)` over the sampled nodes (all nodes when `None`).
pub fn trajectory_independence(
    traj: &PropagatorTrajectory,
    sample_indices: Option<&[usize]>,
) -> Result<SpanReport> {
    match sample_indices {
        None => spanning_rank(traj.dipoles()),
        Some(idx) => {
            let mut picked = Vec::with_capacity(idx.len());
            for &k in idx {
                let d = traj.dipoles().get(k).ok_or_else(|| {
                    Error::InvalidArgument(format!("sample index {k} outside 0..{}", traj.len()))
                })?;
                picked.push(d.clone());
            }
            spanning_rank(&picked)
        }
    }
}

/// SpanReport CSV: singular values, the verdict line, then (when deficient)
/// the complement matrices as a JSON matrix list.
pub fn write_span_report<W: Write>(report: &SpanReport, mut sink: W) -> Result<()> {
    writeln!(sink, "index,singular_value")?;
    for (k, s) in report.singular_values.iter().enumerate() {
        writeln!(sink, "{},{}", k + 1, s)?;
    }
    writeln!(sink, "{}", report.verdict())?;
    if !report.full {
        #[derive(Serialize)]
        struct Complement {
            n: usize,
            count: usize,
            matrices: Vec<crate::codec::EncodedMatrix>,
        }
        let doc = Complement {
            n: report.dim,
            count: report.complement_basis.len(),
            matrices: report.complement_basis.iter().map(|m| encode(m.matrix())).collect(),
        };
        serde_json::to_writer_pretty(&mut sink, &doc)?;
        writeln!(sink)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct VisitRecord {
    /// 1-based way-point position.
    pub index: usize,
    pub fidelity: f64,
    pub time: f64,
    pub step: usize,
    pub visited: bool,
}

/// Best phase-invariant fidelity `max_m |Tr(W* U_m)|/N` for each way-point.
pub fn waypoint_visits(
    traj: &PropagatorTrajectory,
    set: &WaypointSet,
    fid_tol: f64,
) -> Result<Vec<VisitRecord>> {
    ensure_same_dim(traj.dim(), set.dim())?;
    Ok(set
        .unitaries()
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let (step, fidelity) = traj
                .unitaries()
                .iter()
                .map(|u| phase_invariant_fidelity(w.matrix(), u.matrix()))
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (m, f)| if f > best.1 { (m, f) } else { best });
            VisitRecord {
                index: k + 1,
                fidelity,
                time: traj.times()[step],
                step,
                visited: fidelity >= 1.0 - fid_tol,
            }
        })
        .collect())
}

pub fn write_visit_csv<W: Write>(visits: &[VisitRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["index", "fidelity", "time", "visited"])?;
    for v in visits {
        w.write_record([
            v.index.to_string(),
            v.fidelity.to_string(),
            v.time.to_string(),
            v.visited.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_observable(sys_dim: usize, obs: &CMatrix) -> Result<()> {
    ensure_square(obs)?;
    ensure_same_dim(sys_dim, obs.nrows())?;
    ensure_hermitian(obs, 1e-10)
}

/// `⟨O⟩(T) = Tr(ρ(T) O)`.
pub fn objective(
    sys: &QuantumSystem,
    field: &ControlField,
    rho0: &DensityMatrix,
    obs: &CMatrix,
) -> Result<f64> {
    ensure_same_dim(sys.dim(), rho0.dim())?;
    check_observable(sys.dim(), obs)?;
    let u = propagate(sys, field).final_unitary().matrix().clone();
    let rho_t = DensityMatrix::new(&u * rho0.matrix() * u.adjoint())?;
    expectation(&rho_t, obs)
}

/// `∂⟨O⟩(T)/∂ε_m` for every step.
///
/// With `P_m` the step propagator and `dP_m` its exact derivative in `ε_m`
/// (divided differences in the step eigenbasis),
/// `g_m = 2 Re Tr(Õ_m dP_m ρ_{m−1} P_m*)`, where `ρ_{m−1} = U_{m−1} ρ0 U_{m−1}*`
/// and `Õ_m = U_m Ô_T U_m*`, `Ô_T = U_M* O U_M`. For short steps this is
/// `−Δt Im Tr(Ô_T [μ̂_m, ρ0])` with `μ̂_m` taken inside the step; the exact
/// step derivative is used so the result agrees with finite differences at
/// any step length.
pub fn gradient(
    sys: &QuantumSystem,
    field: &ControlField,
    rho0: &DensityMatrix,
    obs: &CMatrix,
) -> Result<GradientVector> {
    ensure_same_dim(sys.dim(), rho0.dim())?;
    check_observable(sys.dim(), obs)?;
    let dt = field.dt();
    let steps: Vec<StepExp> = field.values().iter().map(|&e| StepExp::new(sys, e, dt)).collect();
    let props: Vec<CMatrix> = steps.iter().map(StepExp::propagator).collect();

    let n = sys.dim();
    let mut us = Vec::with_capacity(props.len() + 1);
    us.push(crate::matspace::identity(n));
    for p in &props {
        let next = p * us.last().unwrap();
        us.push(next);
    }
    let u_t = us.last().unwrap();
    let o_hat = u_t.adjoint() * obs * u_t;

    let g = (0..props.len())
        .into_par_iter()
        .map(|m| {
            let before = &us[m];
            let after = &us[m + 1];
            let rho_prev = before * rho0.matrix() * before.adjoint();
            let o_m = after * &o_hat * after.adjoint();
            let dp = steps[m].derivative(sys.mu());
            let t = trace_of_product(&(o_m * dp), &(rho_prev * props[m].adjoint()));
            2.0 * t.re
        })
        .collect();
    Ok(GradientVector(g))
}

/// Central differences of [`objective`] with step `h` in each amplitude.
pub fn central_difference_gradient(
    sys: &QuantumSystem,
    field: &ControlField,
    rho0: &DensityMatrix,
    obs: &CMatrix,
    h: f64,
) -> Result<GradientVector> {
    let base = field.values().to_vec();
    let g = (0..base.len())
        .into_par_iter()
        .map(|m| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[m] += h;
            minus[m] -= h;
            let jp = objective(sys, &field.with_values(plus)?, rho0, obs)?;
            let jm = objective(sys, &field.with_values(minus)?, rho0, obs)?;
            Ok((jp - jm) / (2.0 * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientVector(g))
}

/// `‖[U_T* O U_T, ρ0]‖_F`; zero exactly at kinematic critical points.
pub fn kinematic_residual(u_t: &UnitaryMatrix, rho0: &DensityMatrix, obs: &CMatrix) -> Result<f64> {
    ensure_same_dim(u_t.dim(), rho0.dim())?;
    check_observable(u_t.dim(), obs)?;
    let o_hat = u_t.matrix().adjoint() * obs * u_t.matrix();
    Ok(commutator(&o_hat, rho0.matrix()).norm())
}
