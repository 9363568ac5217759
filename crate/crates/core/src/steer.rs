//! Control synthesis: gradient ascent on the phase-invariant gate fidelity,
//! and segment chaining so the propagator passes through a way-point list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolve::{propagate, ControlField, StepExp};
use crate::landscape::{trajectory_independence, waypoint_visits, SpanReport, VisitRecord};
use crate::matspace::{identity, trace_of_product, CMatrix, UnitaryMatrix, C64};
use crate::model::QuantumSystem;
use crate::reachability::lie_closure;
use crate::waypoints::WaypointSet;

pub const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const INIT_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SteerOptions {
    pub segment_t: f64,
    pub steps_per_segment: usize,
    pub max_iters: usize,
    pub fid_target: f64,
    pub step_size: f64,
    pub seed: u64,
}

impl SteerOptions {
    /// Horizon `10π N / ‖μ‖_HS` per segment, 100 steps, target 0.999.
    pub fn for_system(sys: &QuantumSystem) -> Self {
        let norm = sys.mu().norm();
        let segment_t = if norm > 0.0 {
            10.0 * std::f64::consts::PI * sys.dim() as f64 / norm
        } else {
            10.0
        };
        Self { segment_t, steps_per_segment: 100, max_iters: 2000, fid_target: 0.999, step_size: 0.1, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("steer option {what}")));
        if !(self.segment_t.is_finite() && self.segment_t > 0.0) {
            return bad("segment_t must be positive");
        }
        if self.steps_per_segment == 0 {
            return bad("steps_per_segment must be positive");
        }
        if !(self.fid_target > 0.0 && self.fid_target < 1.0) {
            return bad("fid_target must lie in (0, 1)");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub field: ControlField,
    pub achieved_fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Fidelity after each accepted iterate, starting with the initial guess.
    pub history: Vec<f64>,
}

/// `Φ = |Tr(W* U_M)|² / N²` and its gradient in the step amplitudes.
fn fidelity_and_gradient(sys: &QuantumSystem, field: &ControlField, target_adj: &CMatrix) -> (f64, Vec<f64>) {
    let n = sys.dim();
    let nf = n as f64;
    let dt = field.dt();
    let steps: Vec<StepExp> = field.values().iter().map(|&e| StepExp::new(sys, e, dt)).collect();
    let mut us = Vec::with_capacity(steps.len() + 1);
    us.push(identity(n));
    for s in &steps {
        let next = s.propagator() * us.last().unwrap();
        us.push(next);
    }
    let u_t = us.last().unwrap();
    let x = target_adj * u_t;
    let tau: C64 = x.trace();
    let phi = tau.norm_sqr() / (nf * nf);
    let grad = steps
        .iter()
        .enumerate()
        .map(|(m, s)| {
            // dτ_m = Tr(U_{m-1} W* U_M U_m* dP_m)
            let y = &us[m] * &x * us[m + 1].adjoint();
            let dtau = trace_of_product(&y, &s.derivative(sys.mu()));
            2.0 * (tau.conj() * dtau).re / (nf * nf)
        })
        .collect();
    (phi, grad)
}

fn fidelity_only(sys: &QuantumSystem, field: &ControlField, target_adj: &CMatrix) -> f64 {
    let u = propagate(sys, field).final_unitary().matrix().clone();
    let nf = sys.dim() as f64;
    (target_adj * u).trace().norm_sqr() / (nf * nf)
}

fn require_controllable(sys: &QuantumSystem) -> Result<()> {
    let cl = lie_closure(sys.h0(), sys.mu());
    if !cl.verdict.is_controllable() {
        let n = sys.dim();
        return Err(Error::NotControllable { dimension: cl.dimension, needed: n * n - 1 });
    }
    Ok(())
}

/// Seeded uniform noise in `[-0.1, 0.1]` per step.
pub fn initial_guess(opts: &SteerOptions) -> Result<ControlField> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let vals = (0..opts.steps_per_segment).map(|_| rng.gen_range(-INIT_NOISE..=INIT_NOISE)).collect();
    ControlField::new(opts.segment_t, vals)
}

pub fn synthesize_to_target(
    sys: &QuantumSystem,
    target: &UnitaryMatrix,
    opts: &SteerOptions,
) -> Result<SynthesisResult> {
    synthesize_from(sys, target, opts, initial_guess(opts)?)
}

/// Gradient ascent from a given initial field. The step grows by 2 after
/// every accepted iterate and halves during backtracking until the Armijo
/// condition `Φ(ε + αg) ≥ Φ(ε) + 1e-4 α ‖g‖²` holds.
pub fn synthesize_from(
    sys: &QuantumSystem,
    target: &UnitaryMatrix,
    opts: &SteerOptions,
    initial: ControlField,
) -> Result<SynthesisResult> {
    opts.validate()?;
    crate::matspace::ensure_same_dim(sys.dim(), target.dim())?;
    require_controllable(sys)?;
    let target_adj = target.matrix().adjoint();
    let phi_target = opts.fid_target * opts.fid_target;

    let mut field = initial;
    let mut alpha = opts.step_size;
    let (mut phi, mut grad) = fidelity_and_gradient(sys, &field, &target_adj);
    let mut history = vec![phi.sqrt()];
    let mut iterations = 0;

    while phi < phi_target && iterations < opts.max_iters {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 {
            break;
        }
        let mut accepted = None;
        let mut a = alpha;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = field.values().iter().zip(&grad).map(|(e, g)| e + a * g).collect();
            let cand = field.with_values(cand)?;
            let p = fidelity_only(sys, &cand, &target_adj);
            if p >= phi + ARMIJO * a * g2 {
                accepted = Some((cand, a));
                break;
            }
            a *= 0.5;
        }
        let Some((next, a)) = accepted else { break };
        field = next;
        alpha = 2.0 * a;
        iterations += 1;
        (phi, grad) = fidelity_and_gradient(sys, &field, &target_adj);
        history.push(phi.sqrt());
    }

    let achieved_fidelity = phi.sqrt().min(1.0);
    Ok(SynthesisResult {
        field,
        achieved_fidelity,
        iterations,
        converged: achieved_fidelity >= opts.fid_target,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct WaypointSynthesis {
    pub field: ControlField,
    pub segments: Vec<SynthesisResult>,
    pub visits: Vec<VisitRecord>,
    pub span: SpanReport,
    /// Propagator at the end of each segment, from the segment composition.
    pub endpoints: Vec<UnitaryMatrix>,
}

impl WaypointSynthesis {
    pub fn all_visited(&self) -> bool {
        self.visits.iter().all(|v| v.visited)
    }

    pub fn success(&self) -> bool {
        self.all_visited() && self.span.full
    }
}

/// One segment per way-point, each targeting `W_k · U(t_{k−1},0)*` so that
/// `U(t_k,0) = U(t_k,t_{k−1}) U(t_{k−1},0)` lands on `W_k` up to phase.
/// Segment `k` is seeded with `seed + k`.
pub fn synthesize_through_waypoints(
    sys: &QuantumSystem,
    set: &WaypointSet,
    opts: &SteerOptions,
) -> Result<WaypointSynthesis> {
    opts.validate()?;
    crate::matspace::ensure_same_dim(sys.dim(), set.dim())?;
    if set.is_empty() {
        return Err(Error::Empty("way-point set"));
    }
    require_controllable(sys)?;

    let mut current = UnitaryMatrix::identity(sys.dim());
    let mut segments = Vec::with_capacity(set.len());
    let mut endpoints = Vec::with_capacity(set.len());
    for (k, w) in set.unitaries().iter().enumerate() {
        let rel = UnitaryMatrix::new(w.matrix() * current.matrix().adjoint())?;
        let seg_opts = SteerOptions { seed: opts.seed.wrapping_add(k as u64), ..opts.clone() };
        let res = synthesize_to_target(sys, &rel, &seg_opts)?;
        let seg_u = propagate(sys, &res.field).final_unitary().clone();
        current = seg_u.compose(&current);
        endpoints.push(current.clone());
        segments.push(res);
    }

    let fields: Vec<ControlField> = segments.iter().map(|s| s.field.clone()).collect();
    let field = ControlField::concat(&fields)?;
    let traj = propagate(sys, &field);
    let visits = waypoint_visits(&traj, set, 1.0 - opts.fid_target)?;
    let span = trajectory_independence(&traj, None)?;
    Ok(WaypointSynthesis { field, segments, visits, span, endpoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::step_propagator;
    use crate::matspace::{embed_2x2, frobenius_distance, Block2, ONE, ZERO};
    use nalgebra::DMatrix;

    fn pauli_system() -> QuantumSystem {
        QuantumSystem::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]], &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn swap() -> UnitaryMatrix {
        UnitaryMatrix::new(embed_2x2(&Block2::new(ZERO, ONE, ONE, ZERO), 1, 2, 2).unwrap()).unwrap()
    }

    fn opts(t: f64, m: usize) -> SteerOptions {
        SteerOptions { segment_t: t, steps_per_segment: m, max_iters: 3000, fid_target: 0.999, step_size: 0.1, seed: 1 }
    }

    #[test]
    fn free_evolution_target_converges_immediately() {
        let sys = pauli_system();
        let o = opts(2.0, 10);
        let target = UnitaryMatrix::new(step_propagator(&sys, 0.0, 2.0)).unwrap();
        let r = synthesize_from(&sys, &target, &o, ControlField::zeros(2.0, 10).unwrap()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert!((r.achieved_fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steers_to_swap() {
        let r = synthesize_to_target(&pauli_system(), &swap(), &opts(5.0, 50)).unwrap();
        assert!(r.converged, "fidelity {}", r.achieved_fidelity);
        assert!(r.achieved_fidelity > 0.999);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_uncontrollable() {
        let sys = QuantumSystem::new(DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]), None)
            .unwrap();
        let err = synthesize_to_target(&sys, &swap(), &opts(5.0, 50)).unwrap_err();
        assert!(matches!(err, Error::NotControllable { .. }));
    }

    #[test]
    fn target_phase_does_not_change_iterates() {
        let sys = pauli_system();
        let o = SteerOptions { max_iters: 25, ..opts(5.0, 40) };
        let a = synthesize_to_target(&sys, &swap(), &o).unwrap();
        let phased = UnitaryMatrix::new(swap().matrix() * C64::from_polar(1.0, 0.83)).unwrap();
        let b = synthesize_to_target(&sys, &phased, &o).unwrap();
        assert_eq!(a.iterations, b.iterations);
        for (x, y) in a.field.values().iter().zip(b.field.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_waypoint() {
        let sys = pauli_system();
        let set = WaypointSet::custom(2, vec![UnitaryMatrix::identity(2)]).unwrap();
        let out = synthesize_through_waypoints(&sys, &set, &opts(3.0, 30)).unwrap();
        assert!(out.all_visited());
        assert_eq!(out.segments.len(), 1);
    }

    #[test]
    fn concatenated_field_reproduces_segment_endpoints() {
        let sys = pauli_system();
        let set = WaypointSet::custom(2, vec![swap(), UnitaryMatrix::identity(2), swap()]).unwrap();
        let o = SteerOptions { max_iters: 30, ..opts(4.0, 40) };
        let out = synthesize_through_waypoints(&sys, &set, &o).unwrap();
        let traj = propagate(&sys, &out.field);
        for (k, e) in out.endpoints.iter().enumerate() {
            let node = &traj.unitaries()[(k + 1) * 40];
            assert!(frobenius_distance(node.matrix(), e.matrix()) < 1e-9);
        }
    }

    #[test]
    fn option_validation() {
        let sys = pauli_system();
        let mut o = SteerOptions::for_system(&sys);
        assert!(o.validate().is_ok());
        assert!((o.segment_t - 10.0 * std::f64::consts::PI * 2.0 / 2f64.sqrt()).abs() < 1e-12);
        o.fid_target = 1.0;
        assert!(o.validate().is_err());
    }
}
