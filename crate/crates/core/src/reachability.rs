//! Controllability via the Lie algebra generated by `-iH0` and `-iμ`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::matspace::{c, commutator, from_real, CMatrix};
use crate::model::QuantumSystem;

/// Relative residual threshold for accepting a new direction.
pub const RANK_TOL_REL: f64 = 1e-10;
/// Absolute floor on the residual threshold.
pub const RANK_TOL_ABS: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Controllability {
    #[serde(rename = "SU")]
    SU,
    #[serde(rename = "U")]
    U,
    #[serde(rename = "NO")]
    No,
}

impl Controllability {
    pub fn is_controllable(self) -> bool {
        !matches!(self, Controllability::No)
    }
}

impl fmt::Display for Controllability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Controllability::SU => "SU",
            Controllability::U => "U",
            Controllability::No => "NO",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LieClosureResult {
    pub dimension: usize,
    /// Skew-Hermitian, orthonormal under `Re Tr(A* B)`.
    pub basis: Vec<CMatrix>,
    pub verdict: Controllability,
}

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Closure {
    n: usize,
    basis: Vec<CMatrix>,
}

impl Closure {
    /// Orthogonalizes `cand` against the basis (two passes) and appends it
    /// when the residual clears the threshold.
    fn try_push(&mut self, cand: CMatrix) -> bool {
        let scale = cand.norm();
        if scale == 0.0 {
            return false;
        }
        let mut r = cand;
        for _ in 0..2 {
            for b in &self.basis {
                let p = real_inner(b, &r);
                r -= b.scale(p);
            }
        }
        let res = r.norm();
        if res > (RANK_TOL_REL * scale).max(RANK_TOL_ABS) {
            self.basis.push(r.unscale(res));
            true
        } else {
            false
        }
    }

    fn full(&self) -> bool {
        self.basis.len() >= self.n * self.n
    }
}

/// Breadth-first Lie closure of `{-iH0, -iμ}`.
///
/// Each level brackets the directions found at the previous level with every
/// direction known at the start of the level; stops when a level adds nothing
/// or the dimension reaches N².
pub fn lie_closure(h0: &DMatrix<f64>, mu: &DMatrix<f64>) -> LieClosureResult {
    let n = h0.nrows();
    let minus_i = c(0.0, -1.0);
    let mut cl = Closure { n, basis: Vec::with_capacity(n * n) };
    for g in [h0, mu] {
        let m = from_real(g) * minus_i;
        let norm = m.norm();
        if norm > 0.0 {
            cl.try_push(m.unscale(norm));
        }
    }

    let mut lo = 0;
    let mut hi = cl.basis.len();
    while lo < hi && !cl.full() {
        for a in lo..hi {
            for b in 0..hi {
                // pairs inside the frontier are bracketed once
                if b >= lo && b >= a {
                    continue;
                }
                let cand = commutator(&cl.basis[a], &cl.basis[b]);
                cl.try_push(cand);
                if cl.full() {
                    break;
                }
            }
            if cl.full() {
                break;
            }
        }
        lo = hi;
        hi = cl.basis.len();
    }

    let dimension = cl.basis.len();
    let traceless = cl.basis.iter().all(|b| b.trace().norm() < 1e-10);
    let verdict = if dimension == n * n {
        Controllability::U
    } else if dimension + 1 == n * n && traceless {
        Controllability::SU
    } else {
        Controllability::No
    };
    LieClosureResult { dimension, basis: cl.basis, verdict }
}

pub fn is_controllable(sys: &QuantumSystem) -> Controllability {
    lie_closure(sys.h0(), sys.mu()).verdict
}

/// Gram matrix of a basis under `Re Tr(A* B)`.
pub fn gram_matrix(basis: &[CMatrix]) -> DMatrix<f64> {
    let k = basis.len();
    DMatrix::from_fn(k, k, |i, j| real_inner(&basis[i], &basis[j]))
}

#[cfg(test)]
fn is_skew_hermitian(m: &CMatrix, tol: f64) -> bool {
    let s: CMatrix = m + m.adjoint();
    s.iter().all(|x| x.norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    fn sz() -> DMatrix<f64> {
        real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    fn sx() -> DMatrix<f64> {
        real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn pauli_pair_generates_su2() {
        let r = lie_closure(&sz(), &sx());
        assert_eq!(r.dimension, 3);
        assert_eq!(r.verdict, Controllability::SU);
        let g = gram_matrix(&r.basis);
        assert!((g - DMatrix::identity(3, 3)).norm() < 1e-10);
        assert!(r.basis.iter().all(|b| is_skew_hermitian(b, 1e-10)));
    }

    #[test]
    fn single_generator_is_abelian() {
        let r = lie_closure(&DMatrix::zeros(2, 2), &sz());
        assert_eq!(r.dimension, 1);
        assert_eq!(r.verdict, Controllability::No);
    }

    #[test]
    fn commuting_generators_not_controllable() {
        let r = lie_closure(&DMatrix::identity(2, 2).scale(0.7), &sz());
        assert_eq!(r.verdict, Controllability::No);
        assert_eq!(r.dimension, 2);
    }

    #[test]
    fn traced_drift_gives_u() {
        let h0 = DMatrix::identity(2, 2) + sz();
        let r = lie_closure(&h0, &sx());
        assert_eq!(r.dimension, 4);
        assert_eq!(r.verdict, Controllability::U);
    }

    #[test]
    fn block_diagonal_confined() {
        let h0 = real(
            4,
            &[0.0, 0.3, 0.0, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.5, 0.0, 0.0, 0.5, 3.5],
        );
        let mu = real(
            4,
            &[0.0, 1.0, 0.0, 0.0, 1.0, 0.4, 0.0, 0.0, 0.0, 0.0, -0.2, 0.8, 0.0, 0.0, 0.8, -0.2],
        );
        let r = lie_closure(&h0, &mu);
        assert!(r.dimension <= 8, "dimension {}", r.dimension);
        assert_eq!(r.verdict, Controllability::No);
    }

    #[test]
    fn invariant_under_swap_and_scaling() {
        let h0 = real(3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        let mu = real(3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let base = lie_closure(&h0, &mu).dimension;
        assert!(base >= 8);
        assert_eq!(lie_closure(&mu, &h0).dimension, base);
        assert_eq!(lie_closure(&h0.scale(250.0), &mu.scale(-1e-3)).dimension, base);
    }
}
