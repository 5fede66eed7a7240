//! Local invariants of two-qubit gates and extraction of one-qubit corrections.
//!
//! With the magic basis `Q`, `M = Q^dagger U Q` and `m = M^T M`:
//!
//! ```text
//! m1 = tr(m)^2 / (16 det U)
//! m2 = (tr(m)^2 - tr(m^2)) / (4 det U)
//! ```
//!
//! Both are unchanged by `U -> (A1 ⊗ A2) U (B1 ⊗ B2)`. They are holomorphic
//! functions of the entries of `U`, which the synthesis objective relies on
//! for its analytic gradient.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::linalg::{self, c, from_rows, Operator, I, ONE, ZERO};
use crate::optimize::{self, LocalOptions};

/// Unitarity tolerance for [`makhlin_invariants`].
pub const UNITARY_TOL: f64 = 1e-8;

/// Blocks with `residual_unitarity` below this are renormalized by their
/// polar factor before their invariants are reported.
pub const TRUSTED_BLOCK_TOL: f64 = 1e-3;

/// Magic (Bell) basis in the order 00, 01, 10, 11.
pub fn magic_basis() -> Operator {
    let s = c(FRAC_1_SQRT_2, 0.0);
    from_rows([[ONE, ZERO, ZERO, I], [ZERO, I, ONE, ZERO], [ZERO, I, -ONE, ZERO], [ONE, ZERO, ZERO, -I]]) * s
}

pub fn cnot() -> Operator {
    from_rows([[ONE, ZERO, ZERO, ZERO], [ZERO, ONE, ZERO, ZERO], [ZERO, ZERO, ZERO, ONE], [ZERO, ZERO, ONE, ZERO]])
}

pub fn cz() -> Operator {
    Operator::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

pub fn swap() -> Operator {
    from_rows([[ONE, ZERO, ZERO, ZERO], [ZERO, ZERO, ONE, ZERO], [ZERO, ONE, ZERO, ZERO], [ZERO, ZERO, ZERO, ONE]])
}

/// Local invariants of a two-qubit gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantPair {
    pub m1: Complex64,
    pub m2: f64,
}

impl InvariantPair {
    /// `|m1 - m1'|^2 + |m2 - m2'|^2`.
    pub fn distance(&self, other: &InvariantPair) -> f64 {
        (self.m1 - other.m1).norm_sqr() + (self.m2 - other.m2).powi(2)
    }
}

/// Invariants of an arbitrary 4x4 matrix, without any unitarity check.
/// `m2` is complex in general and real for unitary input.
pub fn raw_invariants(w: &Operator) -> (Complex64, Complex64) {
    let q = magic_basis();
    let m_mat = q.adjoint() * w * &q;
    let m = m_mat.transpose() * &m_mat;
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let (det, _) = linalg::det_adjugate_4(w);
    (tr * tr / (det * 16.0), (tr * tr - tr2) / (det * 4.0))
}

/// Invariants of `w` and their directional derivatives along each `dws[k]`.
pub fn raw_invariants_with_derivatives(
    w: &Operator,
    dws: &[Operator],
) -> ((Complex64, Complex64), Vec<(Complex64, Complex64)>) {
    let q = magic_basis();
    let qa = q.adjoint();
    let m_mat = &qa * w * &q;
    let m_t = m_mat.transpose();
    let m = &m_t * &m_mat;
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let (det, adj) = linalg::det_adjugate_4(w);
    let m1 = tr * tr / (det * 16.0);
    let m2 = (tr * tr - tr2) / (det * 4.0);
    let derivs = dws
        .iter()
        .map(|dw| {
            let dm_mat = &qa * dw * &q;
            // dm = dM^T M + M^T dM, and tr(dM^T M) = tr(M^T dM)
            let mt_dm = &m_t * &dm_mat;
            let d_tr = mt_dm.trace() * 2.0;
            let dm = dm_mat.transpose() * &m_mat + &mt_dm;
            let d_tr2 = (&m * dm).trace() * 2.0;
            let d_det = (&adj * dw).trace();
            let dm1 = (tr * d_tr * 2.0) / (det * 16.0) - tr * tr * d_det / (det * det * 16.0);
            let dm2 = (tr * d_tr * 2.0 - d_tr2) / (det * 4.0) - (tr * tr - tr2) * d_det / (det * det * 4.0);
            (dm1, dm2)
        })
        .collect();
    ((m1, m2), derivs)
}

fn check_two_qubit(u: &Operator, tol: f64) -> Result<()> {
    if u.shape() != (4, 4) {
        return Err(Error::DimensionMismatch { expected: 4, got: u.nrows() });
    }
    let defect = linalg::unitarity_defect(u);
    if defect > tol {
        return domain(format!("gate is not unitary (defect {defect:e})"));
    }
    Ok(())
}

/// Local invariants of a unitary two-qubit gate.
pub fn makhlin_invariants(u: &Operator) -> Result<InvariantPair> {
    check_two_qubit(u, UNITARY_TOL)?;
    let (m1, m2) = raw_invariants(u);
    Ok(InvariantPair { m1, m2: m2.re })
}

/// Invariants of a possibly leaky logical block: the block is replaced by its
/// unitary polar factor when its unitarity defect is below
/// [`TRUSTED_BLOCK_TOL`]; larger defects are rejected as untrusted.
pub fn block_invariants(w: &Operator) -> Result<InvariantPair> {
    check_two_qubit(w, TRUSTED_BLOCK_TOL)?;
    let p = linalg::polar_unitary(w);
    let (m1, m2) = raw_invariants(&p);
    Ok(InvariantPair { m1, m2: m2.re })
}

/// Local-equivalence test: returns `(distance < tol, distance)`.
pub fn locally_equivalent(u: &Operator, v: &Operator, tol: f64) -> Result<(bool, f64)> {
    let d = makhlin_invariants(u)?.distance(&makhlin_invariants(v)?);
    Ok((d < tol, d))
}

/// One-qubit gates with `(a1 ⊗ a2) · achieved · (b1 ⊗ b2) ≈ target` up to phase.
#[derive(Debug, Clone)]
pub struct LocalCorrections {
    pub a1: Operator,
    pub a2: Operator,
    pub b1: Operator,
    pub b2: Operator,
    /// Phase-insensitive entrywise distance of the corrected gate from the target.
    pub residual: f64,
}

impl LocalCorrections {
    pub fn apply(&self, achieved: &Operator) -> Operator {
        linalg::kron(&self.a1, &self.a2) * achieved * linalg::kron(&self.b1, &self.b2)
    }
}

/// Real orthogonal `P` with `P^T m P` diagonal, for symmetric unitary `m`.
fn orthogonal_diagonalize(m: &Operator) -> (DMatrix<f64>, Vec<Complex64>) {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, DMatrix<f64>, Vec<Complex64>)> = None;
    // generic mixing weights; any values that avoid accidental degeneracy work
    for r in [0.577_215_664_901_532_9, std::f64::consts::SQRT_2, -std::f64::consts::FRAC_1_PI] {
        let eig = SymmetricEigen::new(&re + &im * r);
        let p = eig.eigenvectors;
        let pc = linalg::to_complex(&p);
        let d = pc.transpose() * m * &pc;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .fold(0.0, |a, (i, j)| a + d[(i, j)].norm());
        let diag: Vec<Complex64> = (0..4).map(|k| d[(k, k)]).collect();
        if best.as_ref().is_none_or(|(o, _, _)| off < *o) {
            best = Some((off, p, diag));
        }
        if off < 1e-12 {
            break;
        }
    }
    let (_, p, d) = best.expect("at least one attempt");
    (p, d)
}

fn local_from_so4(o: &DMatrix<f64>) -> (Operator, Operator) {
    let q = magic_basis();
    let k = &q * linalg::to_complex(o) * q.adjoint();
    // K[(a b), (c d)] = A[a c] B[b d]  ->  R[(a c), (b d)] rank one
    let r = Operator::from_fn(4, 4, |row, col| {
        let (a, cc) = (row / 2, row % 2);
        let (b, d) = (col / 2, col % 2);
        k[(a * 2 + b, cc * 2 + d)]
    });
    let svd = r.svd(true, true);
    let s0 = svd.singular_values[0].sqrt();
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v_t");
    let a = Operator::from_fn(2, 2, |i, j| u[(i * 2 + j, 0)] * s0);
    let b = Operator::from_fn(2, 2, |i, j| vt[(0, i * 2 + j)] * s0);
    (linalg::polar_unitary(&a), linalg::polar_unitary(&b))
}

fn fourth_root(z: Complex64) -> Complex64 {
    Complex64::from_polar(z.norm().powf(0.25), z.arg() / 4.0)
}

/// Canonical-form seed: `target = K1 · (phase · achieved) · K2` with `K1, K2` local.
fn canonical_seed(achieved: &Operator, target: &Operator, branch: usize) -> Option<[Operator; 4]> {
    let q = magic_basis();
    let qa = q.adjoint();
    let u = achieved * (fourth_root(achieved.determinant()).inv() * I.powu(branch as u32));
    let t = target * fourth_root(target.determinant()).inv();
    let mu = &qa * &u * &q;
    let mt = &qa * &t * &q;
    let (pu, du) = orthogonal_diagonalize(&(mu.transpose() * &mu));
    let (mut pt, dt) = orthogonal_diagonalize(&(mt.transpose() * &mt));
    // match eigenvalues of the target to those of the achieved gate
    let mut used = [false; 4];
    let mut perm = [0usize; 4];
    for (k, &lt) in dt.iter().enumerate() {
        let j = (0..4).filter(|&j| !used[j]).min_by(|&a, &b| (du[a] - lt).norm().total_cmp(&(du[b] - lt).norm()))?;
        used[j] = true;
        perm[k] = j;
    }
    if (0..4).any(|k| (du[perm[k]] - dt[k]).norm() > 1e-4) {
        return None;
    }
    let pu = DMatrix::from_fn(4, 4, |i, k| pu[(i, perm[k])]);
    let mut o2 = &pu * pt.transpose();
    if o2.determinant() < 0.0 {
        for i in 0..4 {
            pt[(i, 0)] = -pt[(i, 0)];
        }
        o2 = &pu * pt.transpose();
    }
    let m_prime = &mu * linalg::to_complex(&o2);
    let o1c = &mt * m_prime.try_inverse()?;
    let o1 = o1c.map(|z| z.re);
    // nearest orthogonal matrix
    let svd = o1.svd(true, true);
    let o1 = svd.u? * svd.v_t?;
    if o1.determinant() < 0.0 {
        return None;
    }
    let (a1, a2) = local_from_so4(&o1);
    let (b1, b2) = local_from_so4(&o2);
    Some([a1, a2, b1, b2])
}

fn su2_from_params(p: &[f64]) -> Operator {
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if norm < 1e-300 {
        return linalg::identity(2);
    }
    linalg::su2_rotation([p[0] / norm, p[1] / norm, p[2] / norm], norm)
}

/// Real and imaginary parts of `V - (tr(T^dagger V) / 4) T`, which vanish iff
/// `V` equals `T` up to a global phase (for unitary `V`, `T`).
fn phase_residuals(v: &Operator, target: &Operator) -> DVector<f64> {
    let ov = (target.adjoint() * v).trace() / 4.0;
    let diff = v - target * ov;
    DVector::from_iterator(32, diff.iter().flat_map(|z| [z.re, z.im]))
}

/// Finds one-qubit gates mapping `achieved` onto `target`.
///
/// A canonical-form decomposition of both gates seeds a 12-parameter local
/// refinement (one SU(2) generator triple per correction).
pub fn extract_local_corrections(achieved: &Operator, target: &Operator) -> Result<LocalCorrections> {
    check_two_qubit(achieved, UNITARY_TOL)?;
    check_two_qubit(target, UNITARY_TOL)?;
    let (ok, dist) = locally_equivalent(achieved, target, 1e-8)?;
    if !ok {
        return Err(Error::NoSolution(format!("gates are not locally equivalent (invariant distance {dist:e})")));
    }
    let mut seeds: Vec<[Operator; 4]> = (0..4).filter_map(|b| canonical_seed(achieved, target, b)).collect();
    let id = linalg::identity(2);
    seeds.push([id.clone(), id.clone(), id.clone(), id]);

    let mut best: Option<LocalCorrections> = None;
    for seed in seeds {
        let corrected = |p: &[f64]| {
            let a1 = &seed[0] * su2_from_params(&p[0..3]);
            let a2 = &seed[1] * su2_from_params(&p[3..6]);
            let b1 = su2_from_params(&p[6..9]) * &seed[2];
            let b2 = su2_from_params(&p[9..12]) * &seed[3];
            LocalCorrections { a1, a2, b1, b2, residual: f64::NAN }
        };
        let start = [0.0; 12];
        let x = if phase_residuals(&corrected(&start).apply(achieved), target).norm_squared() < 1e-28 {
            start.to_vec()
        } else {
            let rj = |p: &[f64]| {
                let r0 = phase_residuals(&corrected(p).apply(achieved), target);
                let h = 1e-6;
                let mut jac = DMatrix::zeros(r0.len(), 12);
                for k in 0..12 {
                    let mut pp = p.to_vec();
                    let mut pm = p.to_vec();
                    pp[k] += h;
                    pm[k] -= h;
                    let d = (phase_residuals(&corrected(&pp).apply(achieved), target)
                        - phase_residuals(&corrected(&pm).apply(achieved), target))
                        / (2.0 * h);
                    jac.set_column(k, &d);
                }
                (r0, jac)
            };
            let opts = LocalOptions { max_iterations: 300, f_target: 1e-30, ..Default::default() };
            optimize::levenberg_marquardt(rj, &start, &opts).x
        };
        let corr = corrected(&x);
        let residual = linalg::phase_distance(&corr.apply(achieved), target);
        let corr = LocalCorrections { residual, ..corr };
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(corr);
        }
        if residual < 1e-12 {
            break;
        }
    }
    best.ok_or_else(|| Error::NoSolution("no correction found".into()))
}
