//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwaypoint::landscape::central_difference_gradient;
use qwaypoint::matspace::{frobenius_distance, identity, submatrix_2x2, unitarity_defect};
use qwaypoint::waypoints::{save_waypoints, WaypointTag};
use qwaypoint::{
    default_theta_grid, gradient, lemma1_check, lie_closure, propagate, separating_unitary,
    spanning_rank, synthesize_through_waypoints, theorem1_waypoints, theorem3_waypoints,
    trajectory_independence, CMatrix, Controllability, ControlField, DensityMatrix, HermitianZT,
    QuantumSystem, SteerOptions,
};

type C = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rand_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn rand_traceless_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = rand_symmetric(rng, n);
    let t = m.trace() / n as f64;
    for k in 0..n {
        m[(k, k)] -= t;
    }
    m
}

/// Symmetric, traceless, every off-diagonal entry at least 0.1 in magnitude.
fn rand_coupled_dipole(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut m = rand_traceless_symmetric(rng, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let v = sign * rng.gen_range(0.1..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn rand_traceless_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianZT {
    let a = CMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    HermitianZT::project(&a)
}

fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C::new(x, 0.0))
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
fn expm_taylor(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a.norm();
    let mut s = 0;
    while norm / f64::from(1u32 << s) > 0.5 {
        s += 1;
    }
    let scaled = a / C::new(f64::from(1u32 << s), 0.0);
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..30 {
        term = &term * &scaled / C::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut ok = 0;
    let mut total = 0;
    let mut worst_ratio = f64::INFINITY;
    let mut notes = Vec::new();
    for n in 2..=5 {
        for _ in 0..50 {
            total += 1;
            let mu = HermitianZT::from_real(&rand_traceless_symmetric(&mut rng, n)).unwrap();
            let set = match theorem1_waypoints(&mu) {
                Ok(s) => s,
                Err(e) => {
                    notes.push(format!("N={n}: {e}"));
                    continue;
                }
            };
            let report = spanning_rank(&set.conjugated_dipoles(&mu).unwrap()).unwrap();
            worst_ratio = worst_ratio.min(report.condition_ratio());
            if set.len() == 2 * n * n - 2 * n && report.rank == n * n - 1 && report.condition_ratio() > 1e-8 {
                ok += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = ok == total && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "dipole-dependent set: {ok}/{total} full span, min sigma ratio {worst_ratio:.3e}, {:.2} s{}",
            elapsed.as_secs_f64(),
            if notes.is_empty() { String::new() } else { format!(" ({})", notes.join("; ")) }
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_block: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    let mut quads = 0;
    for n in 2..=5 {
        for _ in 0..20 {
            let raw = rand_traceless_symmetric(&mut rng, n);
            let eig = SymmetricEigen::new(raw.clone());
            let l1 = eig.eigenvalues.min();
            let l2 = eig.eigenvalues.max();
            let (s, d) = (l1 + l2, l1 - l2);
            let expected = [
                [[C::new(l1, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(l2, 0.0)]],
                [[C::new(l2, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(l1, 0.0)]],
                [[C::new(s / 2.0, 0.0), C::new(d / 2.0, 0.0)], [C::new(d / 2.0, 0.0), C::new(s / 2.0, 0.0)]],
                [[C::new(s / 2.0, 0.0), C::new(0.0, -d / 2.0)], [C::new(0.0, d / 2.0), C::new(s / 2.0, 0.0)]],
            ];
            let mu = HermitianZT::from_real(&raw).unwrap();
            let set = theorem1_waypoints(&mu).unwrap();
            let hats = set.conjugated_dipoles(&mu).unwrap();
            let tags = set.tags().unwrap();
            for (quad, chunk) in hats.chunks(4).zip(tags.chunks(4)) {
                quads += 1;
                let (i, j) = match chunk[0] {
                    WaypointTag::Theorem1 { i, j, .. } => (i, j),
                    _ => unreachable!(),
                };
                for (hat, tag) in quad.iter().zip(chunk) {
                    let WaypointTag::Theorem1 { k, .. } = *tag else { unreachable!() };
                    let b = submatrix_2x2(hat.matrix(), i, j).unwrap();
                    let e = &expected[k as usize - 1];
                    for r in 0..2 {
                        for col in 0..2 {
                            worst_block = worst_block.max((b[(r, col)] - e[r][col]).norm());
                        }
                    }
                }
                let inside = |a: usize| a + 1 == i || a + 1 == j;
                for a in 0..n {
                    for bcol in 0..n {
                        if inside(a) && inside(bcol) {
                            continue;
                        }
                        let r0 = quad[0].matrix()[(a, bcol)];
                        for h in &quad[1..] {
                            worst_off = worst_off.max((h.matrix()[(a, bcol)] - r0).norm());
                        }
                    }
                }
            }
        }
    }
    let pass = worst_block <= 1e-10 && worst_off <= 1e-12;
    outcome(pass, format!("block formulas over {quads} quadruples: max block error {worst_block:.2e}, max off-block spread {worst_off:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ok = 0;
    let mut total = 0;
    let mut bytes_stable = true;
    let grid = default_theta_grid();
    for n in 2..=6 {
        let mut reference: Option<Vec<u8>> = None;
        for _ in 0..50 {
            total += 1;
            let mu = HermitianZT::from_real(&rand_coupled_dipole(&mut rng, n)).unwrap();
            let set = theorem3_waypoints(n, &grid).unwrap();
            let mut bytes = Vec::new();
            save_waypoints(&set, &mut bytes).unwrap();
            match &reference {
                None => reference = Some(bytes),
                Some(r) => bytes_stable &= *r == bytes,
            }
            let report = spanning_rank(&set.conjugated_dipoles(&mu).unwrap()).unwrap();
            if report.rank == n * n - 1 {
                ok += 1;
            }
        }
    }
    outcome(ok == total && bytes_stable, format!("dipole-independent set: {ok}/{total} full span, set bytes identical across draws: {bytes_stable}"))
}

fn criterion_4() -> Outcome {
    let mu = HermitianZT::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
    let set = theorem3_waypoints(2, &default_theta_grid()).unwrap();
    let report = spanning_rank(&set.conjugated_dipoles(&mu).unwrap()).unwrap();
    let sigma_y = CMatrix::from_row_slice(2, 2, &[C::new(0.0, 0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), C::new(0.0, 0.0)]);
    let missing_y = report.complement_basis.len() == 1 && {
        let comp = report.complement_basis[0].matrix();
        let overlap = (comp * &sigma_y).trace().re.abs();
        (overlap - comp.norm() * 2f64.sqrt()).abs() < 1e-10
    };
    let pass = report.rank == 2 && report.verdict() == "DEFICIENT rank=2" && missing_y;
    outcome(pass, format!("mu = sigma_z: {}, complement along sigma_y: {missing_y}", report.verdict()))
}

fn criterion_5() -> Outcome {
    let repaired = lemma1_check(&[0.0, PI / 3.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
    let literal = lemma1_check(&[0.0, PI / 3.0, PI / 2.0, PI, 3.0 * PI / 3.0]);
    let pass = repaired.det > 1e-6 && literal.det < 1e-12;
    outcome(pass, format!("angle grid |det|: repaired {:.6}, literal {:.2e}", repaired.det, literal.det))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut ok = 0;
    let mut first_two = 0;
    for k in 0..1000 {
        let n = 2 + k % 5;
        let z = rand_traceless_hermitian(&mut rng, n);
        let mu = rand_traceless_hermitian(&mut rng, n);
        let Ok(w) = separating_unitary(&z, &mu, &mut rng) else { continue };
        let u = w.unitary.matrix();
        let direct = (z.matrix() * u.adjoint() * mu.matrix() * u).trace().norm();
        if direct > 1e-10 * z.hs_norm() * mu.hs_norm() {
            ok += 1;
        }
        if w.attempt <= 2 {
            first_two += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = ok == 1000 && elapsed < Duration::from_secs(5);
    outcome(pass, format!("separating witness: {ok}/1000, {first_two} within two permutations, {:.2} s", elapsed.as_secs_f64()))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_unitary: f64 = 0.0;
    let mut worst_group: f64 = 0.0;
    let mut worst_free: f64 = 0.0;
    for n in 2..=5 {
        let h0 = rand_symmetric(&mut rng, n);
        let sys = QuantumSystem::new(h0.clone(), rand_traceless_symmetric(&mut rng, n), None).unwrap();
        let values: Vec<f64> = (0..1000).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let field = ControlField::new(10.0, values).unwrap();
        let traj = propagate(&sys, &field);
        for u in traj.unitaries() {
            worst_unitary = worst_unitary.max(unitarity_defect(u.matrix()));
        }
        let (a, b) = field.split_at(400).unwrap();
        let composed = propagate(&sys, &b).final_unitary().matrix() * propagate(&sys, &a).final_unitary().matrix();
        worst_group = worst_group.max(frobenius_distance(&composed, traj.final_unitary().matrix()));

        let t = 3.7;
        let free = propagate(&sys, &ControlField::zeros(t, 1000).unwrap());
        let oracle = expm_taylor(&(real_to_complex(&h0) * C::new(0.0, -t)));
        worst_free = worst_free.max(frobenius_distance(free.final_unitary().matrix(), &oracle));
    }
    let pass = worst_unitary < 1e-10 && worst_group < 1e-9 && worst_free < 1e-10;
    outcome(pass, format!("propagator: unitarity {worst_unitary:.2e}, composition {worst_group:.2e}, free evolution {worst_free:.2e}"))
}

fn rand_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = &a * a.adjoint();
    let t = p.trace();
    DensityMatrix::new(p / t).unwrap()
}

fn rand_observable(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * C::new(0.5, 0.0)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_rel: f64 = 0.0;
    let mut worst_critical: f64 = 0.0;
    for k in 0..20 {
        let n = 2 + k % 3;
        let m = rng.gen_range(10..=50);
        let sys = QuantumSystem::new(rand_symmetric(&mut rng, n), rand_traceless_symmetric(&mut rng, n), None).unwrap();
        let field = ControlField::new(rng.gen_range(1.0..5.0), (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let rho0 = rand_density(&mut rng, n);
        let obs = rand_observable(&mut rng, n);
        let g = gradient(&sys, &field, &rho0, &obs).unwrap();
        let fd = central_difference_gradient(&sys, &field, &rho0, &obs, 1e-5).unwrap();
        let err = g.values().iter().zip(fd.values()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        worst_rel = worst_rel.max(err / g.max_abs());

        let mixed = gradient(&sys, &field, &DensityMatrix::maximally_mixed(n), &obs).unwrap();
        let trivial = gradient(&sys, &field, &rho0, &identity(n)).unwrap();
        worst_critical = worst_critical.max(mixed.max_abs()).max(trivial.max_abs());
    }
    let pass = worst_rel < 1e-5 && worst_critical < 1e-12;
    outcome(pass, format!("gradient vs central differences: max relative error {worst_rel:.2e}; kinematic-critical max |g| {worst_critical:.2e}"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let pauli = lie_closure(&sz, &sx);
    let pauli_ok = pauli.verdict == Controllability::SU && pauli.dimension == 3;

    let h3 = rand_symmetric(&mut rng, 3);
    let m3 = rand_coupled_dipole(&mut rng, 3);
    let coupled = lie_closure(&h3, &m3);
    let coupled_ok = matches!(coupled.verdict, Controllability::SU | Controllability::U);

    let mut h4 = DMatrix::zeros(4, 4);
    let mut m4 = DMatrix::zeros(4, 4);
    for block in [0, 2] {
        let h = rand_symmetric(&mut rng, 2);
        let m = rand_symmetric(&mut rng, 2);
        h4.view_mut((block, block), (2, 2)).copy_from(&h);
        m4.view_mut((block, block), (2, 2)).copy_from(&m);
    }
    let t = m4.trace() / 4.0;
    for k in 0..4 {
        m4[(k, k)] -= t;
    }
    let split = lie_closure(&h4, &m4);
    let split_ok = split.verdict == Controllability::No && split.dimension <= 8;

    let mut scale_ok = true;
    for (h, m, v) in [(&sz, &sx, pauli.verdict), (&h3, &m3, coupled.verdict), (&h4, &m4, split.verdict)] {
        for (a, b) in [(0.01, 1.0), (3.7, 0.2), (250.0, 40.0)] {
            scale_ok &= lie_closure(&(h * a), &(m * b)).verdict == v;
        }
    }
    let pass = pauli_ok && coupled_ok && split_ok && scale_ok;
    outcome(
        pass,
        format!(
            "closure: pauli {} (dim {}), coupled N=3 {} (dim {}), 2+2 blocks {} (dim {}), scale invariant: {scale_ok}",
            pauli.verdict, pauli.dimension, coupled.verdict, coupled.dimension, split.verdict, split.dimension
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let sys = QuantumSystem::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]], &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    let opts = SteerOptions::for_system(&sys);
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, set) in [
        ("dipole-dependent", theorem1_waypoints(&sys.dipole()).unwrap()),
        ("dipole-independent", theorem3_waypoints(2, &default_theta_grid()).unwrap()),
    ] {
        match synthesize_through_waypoints(&sys, &set, &opts) {
            Ok(out) => {
                let min_fid = out.visits.iter().map(|v| v.fidelity).fold(f64::INFINITY, f64::min);
                let independent = trajectory_independence(&propagate(&sys, &out.field), None).unwrap();
                let ok = min_fid >= 0.999 && independent.full && out.success();
                pass &= ok;
                parts.push(format!("{name} {} way-points min fidelity {min_fid:.5} span {}", set.len(), independent.verdict()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(pass, format!("steering on (sigma_z, sigma_x): {}; {:.2} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = 0;
    for (k, f) in criteria {
        let o = f();
        println!("criterion {k:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
