//! Way-point sets whose conjugated dipoles span the traceless Hermitian space.
//!
//! * [`theorem1_waypoints`]: four way-points per index pair `<i,j>`, built from
//!   the eigenbasis of μ (2N²−2N unitaries, dipole dependent).
//! * [`theorem3_waypoints`]: dipole-independent set of embedded 2x2 rotations
//!   evaluated on a five-angle grid; spans whenever every `μ_ij ≠ 0`.
//! * [`separating_unitary`]: for a pair `(Z, μ)` a unitary with
//!   `Tr(Z U* μ U) ≠ 0`, found by aligning the two spectra with a permutation.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, PI};
use std::io::{Read, Write};

use itertools::Itertools;
use nalgebra::Matrix5;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode, encode, EncodedMatrix};
use crate::error::{Error, Result};
use crate::evolve::conjugated_dipole;
use crate::matspace::{
    c, embed_2x2, sorted_eigh, submatrix_2x2, trace_of_product, Block2, CMatrix, HermitianZT,
    UnitaryMatrix, C64, ONE, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Theorem1,
    Theorem3,
    Custom,
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Provenance::Theorem1),
            "theorem3" => Ok(Provenance::Theorem3),
            "custom" => Ok(Provenance::Custom),
            other => Err(Error::InvalidArgument(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationKind {
    U,
    V,
}

/// Where a way-point came from. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WaypointTag {
    Theorem1 { i: usize, j: usize, k: u8 },
    Theorem3 { kind: RotationKind, theta: f64, i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSet {
    n: usize,
    unitaries: Vec<UnitaryMatrix>,
    provenance: Provenance,
    tags: Option<Vec<WaypointTag>>,
}

impl WaypointSet {
    pub fn custom(n: usize, unitaries: Vec<UnitaryMatrix>) -> Result<Self> {
        if unitaries.is_empty() {
            return Err(Error::Empty("way-point set"));
        }
        for u in &unitaries {
            if u.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: u.dim() });
            }
        }
        Ok(Self { n, unitaries, provenance: Provenance::Custom, tags: None })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[UnitaryMatrix] {
        &self.unitaries
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn tags(&self) -> Option<&[WaypointTag]> {
        self.tags.as_deref()
    }

    /// `W* μ W` for every way-point, in list order.
    pub fn conjugated_dipoles(&self, mu: &HermitianZT) -> Result<Vec<HermitianZT>> {
        self.unitaries.iter().map(|w| conjugated_dipole(w, mu)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WaypointDoc {
    provenance: Provenance,
    n: usize,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tags: Option<Vec<WaypointTag>>,
    unitaries: Vec<EncodedMatrix>,
}

pub fn save_waypoints<W: Write>(set: &WaypointSet, mut sink: W) -> Result<()> {
    let doc = WaypointDoc {
        provenance: set.provenance,
        n: set.n,
        count: set.len(),
        tags: set.tags.clone(),
        unitaries: set.unitaries.iter().map(|u| encode(u.matrix())).collect(),
    };
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_waypoints<R: Read>(source: R) -> Result<WaypointSet> {
    let doc: WaypointDoc = serde_json::from_reader(source)?;
    if doc.count != doc.unitaries.len() {
        return Err(Error::Parse(format!("count {} but {} unitaries", doc.count, doc.unitaries.len())));
    }
    if let Some(t) = &doc.tags {
        if t.len() != doc.count {
            return Err(Error::Parse("tag list length differs from count".into()));
        }
    }
    if doc.unitaries.is_empty() {
        return Err(Error::Empty("way-point set"));
    }
    let unitaries = doc
        .unitaries
        .iter()
        .map(|m| UnitaryMatrix::new(decode(doc.n, m)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaypointSet { n: doc.n, unitaries, provenance: doc.provenance, tags: doc.tags })
}

const BLOCK_TOL: f64 = 1e-10;
const OFF_BLOCK_TOL: f64 = 1e-12;

fn swap_block() -> Block2 {
    Block2::new(ZERO, ONE, ONE, ZERO)
}

fn real_rotation_block() -> Block2 {
    let s = FRAC_1_SQRT_2;
    Block2::new(c(s, 0.0), c(s, 0.0), c(-s, 0.0), c(s, 0.0))
}

fn complex_rotation_block() -> Block2 {
    let s = FRAC_1_SQRT_2;
    Block2::new(c(0.0, s), c(s, 0.0), c(s, 0.0), c(0.0, s))
}

/// The four `<i,j>` blocks of `W_k* μ W_k` for `k = 1..4`, given the two
/// extreme eigenvalues `λ1 < λ2`.
pub fn theorem1_blocks(l1: f64, l2: f64) -> [Block2; 4] {
    let s = 0.5 * (l1 + l2);
    let d = 0.5 * (l1 - l2);
    [
        Block2::new(c(l1, 0.0), ZERO, ZERO, c(l2, 0.0)),
        Block2::new(c(l2, 0.0), ZERO, ZERO, c(l1, 0.0)),
        Block2::new(c(s, 0.0), c(d, 0.0), c(d, 0.0), c(s, 0.0)),
        Block2::new(c(s, 0.0), c(0.0, -d), c(0.0, d), c(s, 0.0)),
    ]
}

/// Dipole-dependent way-points: for each pair `i<j`, a base unitary placing the
/// smallest and largest eigenvectors of μ in columns `i` and `j`, followed by
/// the base composed with an embedded swap, real rotation, and complex
/// rotation at `<i,j>`.
pub fn theorem1_waypoints(mu: &HermitianZT) -> Result<WaypointSet> {
    let n = mu.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let scale = mu.hs_norm();
    if scale == 0.0 {
        return Err(Error::InvalidArgument("dipole is zero".into()));
    }
    let tr = mu.matrix().trace().norm();
    if tr > crate::matspace::TRACE_TOL * scale {
        return Err(Error::NotTraceless(tr));
    }

    let (vals, vecs) = sorted_eigh(mu.matrix());
    let l1 = vals[0];
    let l2 = vals[n - 1];
    let lo = 0;
    let hi = vals.iter().position(|&v| (v - l2).abs() <= 1e-12 * scale).unwrap_or(n - 1);
    let blocks = theorem1_blocks(l1, l2);
    let factors = [None, Some(swap_block()), Some(real_rotation_block()), Some(complex_rotation_block())];

    let mut unitaries = Vec::with_capacity(2 * n * n - 2 * n);
    let mut tags = Vec::with_capacity(2 * n * n - 2 * n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut rest = (0..n).filter(|&k| k != lo && k != hi);
            let cols: Vec<usize> = (0..n)
                .map(|p| {
                    if p == i {
                        lo
                    } else if p == j {
                        hi
                    } else {
                        rest.next().expect("n-2 remaining eigenvectors")
                    }
                })
                .collect();
            let base = CMatrix::from_fn(n, n, |r, p| vecs[(r, cols[p])]);

            let mut quad: Vec<HermitianZT> = Vec::with_capacity(4);
            for (k, f) in factors.iter().enumerate() {
                let w = match f {
                    None => base.clone(),
                    Some(b) => &base * embed_2x2(b, i + 1, j + 1, n)?,
                };
                let w = UnitaryMatrix::new(w)?;
                let hat = conjugated_dipole(&w, mu)?;
                let got = submatrix_2x2(hat.matrix(), i + 1, j + 1)?;
                let err = (got - blocks[k]).norm();
                if err > BLOCK_TOL * (1.0 + scale) {
                    return Err(Error::Postcondition(format!(
                        "block <{},{}> of way-point {} off by {err:e}",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
                quad.push(hat);
                unitaries.push(w);
                tags.push(WaypointTag::Theorem1 { i: i + 1, j: j + 1, k: (k + 1) as u8 });
            }
            let off = off_block_spread(&quad, i, j);
            if off > OFF_BLOCK_TOL * (1.0 + scale) {
                return Err(Error::Postcondition(format!(
                    "off-block entries for <{},{}> disagree by {off:e}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(WaypointSet { n, unitaries, provenance: Provenance::Theorem1, tags: Some(tags) })
}

/// Largest entry-wise disagreement among the matrices over entries outside
/// rows and columns `i`, `j` (0-based).
pub fn off_block_spread(mats: &[HermitianZT], i: usize, j: usize) -> f64 {
    let n = mats[0].dim();
    let mut worst: f64 = 0.0;
    for a in (0..n).filter(|&a| a != i && a != j) {
        for b in (0..n).filter(|&b| b != i && b != j) {
            let r = mats[0].matrix()[(a, b)];
            for m in &mats[1..] {
                worst = worst.max((m.matrix()[(a, b)] - r).norm());
            }
        }
    }
    worst
}

/// Threshold on `|det|` for a valid five-angle grid.
pub const LEMMA1_DET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Check {
    pub det: f64,
    pub pass: bool,
}

/// `|det|` of the 5x5 matrix with rows `(1, cos θ, sin θ, cos 2θ, sin 2θ)`.
pub fn lemma1_check(angles: &[f64; 5]) -> Lemma1Check {
    let m = Matrix5::from_fn(|r, col| {
        let t = angles[r];
        match col {
            0 => 1.0,
            1 => t.cos(),
            2 => t.sin(),
            3 => (2.0 * t).cos(),
            _ => (2.0 * t).sin(),
        }
    });
    let det = m.determinant().abs();
    Lemma1Check { det, pass: det > LEMMA1_DET_TOL }
}

/// Five angles on which `1, cos θ, sin θ, cos 2θ, sin 2θ` are independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid([f64; 5]);

impl ThetaGrid {
    pub fn new(angles: [f64; 5]) -> Result<Self> {
        let chk = lemma1_check(&angles);
        if !chk.pass {
            return Err(Error::InvalidArgument(format!(
                "angle grid is degenerate (|det| = {:e})",
                chk.det
            )));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64; 5] {
        &self.0
    }
}

/// `{0, π/3, π/2, π, 3π/2}`.
pub fn default_theta_grid() -> ThetaGrid {
    ThetaGrid::new([0.0, FRAC_PI_3, FRAC_PI_2, PI, 3.0 * FRAC_PI_2])
        .expect("default grid satisfies the determinant condition")
}

pub fn theorem3_count(n: usize) -> usize {
    5 * (n * (n - 1) / 2) + 5 * (n - 1)
}

/// Dipole-independent way-points: `[[0, e^{iθ}], [e^{-iθ}, 0]]` at every
/// `<i,j>`, then `[[cos θ, sin θ], [sin θ, −cos θ]]` at every `<i,i+1>`,
/// each over the five grid angles.
pub fn theorem3_waypoints(n: usize, grid: &ThetaGrid) -> Result<WaypointSet> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut unitaries = Vec::with_capacity(theorem3_count(n));
    let mut tags = Vec::with_capacity(theorem3_count(n));
    for i in 1..=n {
        for j in (i + 1)..=n {
            for &theta in grid.angles() {
                let d = Block2::new(ZERO, C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta), ZERO);
                unitaries.push(UnitaryMatrix::new(embed_2x2(&d, i, j, n)?)?);
                tags.push(WaypointTag::Theorem3 { kind: RotationKind::U, theta, i, j });
            }
        }
    }
    for i in 1..n {
        for &theta in grid.angles() {
            let (s, co) = theta.sin_cos();
            let d = Block2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0));
            unitaries.push(UnitaryMatrix::new(embed_2x2(&d, i, i + 1, n)?)?);
            tags.push(WaypointTag::Theorem3 { kind: RotationKind::V, theta, i, j: i + 1 });
        }
    }
    Ok(WaypointSet { n, unitaries, provenance: Provenance::Theorem3, tags: Some(tags) })
}

#[derive(Debug, Clone)]
pub struct SeparatingWitness {
    pub unitary: UnitaryMatrix,
    /// `Tr(Z U* μ U)`.
    pub witness: f64,
    /// `σ` with `V e_k = e_{σ(k)}`, 0-based.
    pub permutation: Vec<usize>,
    /// 1-based position of the successful permutation in the search order.
    pub attempt: usize,
}

/// Permutations beyond the exhaustive range are sampled up to this many times.
pub const RANDOM_PERMUTATION_BUDGET: usize = 10_000;
const EXHAUSTIVE_MAX_DIM: usize = 6;
const WITNESS_TOL: f64 = 1e-10;

/// Finds `U` with `|Tr(Z U* μ U)| > 1e-10 ‖Z‖ ‖μ‖`.
///
/// With `Z = U1* D1 U1`, `μ = U2* D2 U2` (spectra ascending) and a permutation
/// matrix `V`, the choice `U = U2* V U1` gives `Tr(Z U* μ U) = Σ d1_k d2_σ(k)`.
/// Tries the identity, then the reversal, then the remaining permutations in
/// lexicographic order (N ≤ 6) or random ones drawn from `rng`.
pub fn separating_unitary<R: Rng + ?Sized>(
    z: &HermitianZT,
    mu: &HermitianZT,
    rng: &mut R,
) -> Result<SeparatingWitness> {
    let n = z.dim();
    crate::matspace::ensure_same_dim(n, mu.dim())?;
    let (zn, mn) = (z.hs_norm(), mu.hs_norm());
    if zn == 0.0 || mn == 0.0 {
        return Err(Error::InvalidArgument("both matrices must be nonzero".into()));
    }
    let (d1, u1h) = sorted_eigh(z.matrix());
    let (d2, u2h) = sorted_eigh(mu.matrix());
    let threshold = WITNESS_TOL * zn * mn;

    let identity: Vec<usize> = (0..n).collect();
    let reversal: Vec<usize> = (0..n).rev().collect();
    let mut attempt = 0;
    let mut try_perm = |sigma: &[usize]| -> Option<SeparatingWitness> {
        attempt += 1;
        let predicted: f64 = (0..n).map(|k| d1[k] * d2[sigma[k]]).sum();
        if predicted.abs() <= threshold {
            return None;
        }
        let mut v = CMatrix::zeros(n, n);
        for (k, &s) in sigma.iter().enumerate() {
            v[(s, k)] = ONE;
        }
        let u = &u2h * v * u1h.adjoint();
        let w = trace_of_product(z.matrix(), &(u.adjoint() * mu.matrix() * &u)).re;
        (w.abs() > threshold).then(|| SeparatingWitness {
            unitary: UnitaryMatrix::from_raw(u),
            witness: w,
            permutation: sigma.to_vec(),
            attempt,
        })
    };

    if let Some(w) = try_perm(&identity) {
        return Ok(w);
    }
    if n > 1 {
        if let Some(w) = try_perm(&reversal) {
            return Ok(w);
        }
    }
    if n <= EXHAUSTIVE_MAX_DIM {
        for sigma in (0..n).permutations(n) {
            if sigma == identity || sigma == reversal {
                continue;
            }
            if let Some(w) = try_perm(&sigma) {
                return Ok(w);
            }
        }
    } else {
        let mut sigma = identity.clone();
        for _ in 0..RANDOM_PERMUTATION_BUDGET {
            sigma.shuffle(rng);
            if let Some(w) = try_perm(&sigma) {
                return Ok(w);
            }
        }
    }
    Err(Error::NoWitness { attempts: attempt })
}
