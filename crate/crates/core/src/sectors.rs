//! Total-spin sectors: bases, block projection and leakage.
//!
//! A sector is the joint eigenspace of `S^2_total` (eigenvalue `S(S+1)`) and
//! `Sz_total`. Every exchange pulse commutes with both, so a pulse sequence
//! never moves amplitude between sectors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{self, Operator};
use crate::spin::SpinRegister;

/// Eigenvalue grouping tolerance for `S(S+1)`.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub fn from_twice(twice: i32) -> Self {
        Self(twice)
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `"3/2"`, `"-1/2"`, `"1"`, or decimals such as `"0.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("not a half-integer: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Ok(Self(num)),
                "1" => Ok(Self(2 * num)),
                _ => Err(bad()),
            }
        } else {
            let x: f64 = s.parse().map_err(|_| bad())?;
            let twice = 2.0 * x;
            if (twice - twice.round()).abs() > 1e-12 || !twice.is_finite() {
                return Err(bad());
            }
            Ok(Self(twice.round() as i32))
        }
    }
}

/// Quantum numbers `(n, S, Sz)` of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub n: usize,
    pub s: HalfInt,
    pub sz: HalfInt,
}

impl SectorLabel {
    pub fn new(n: usize, s: HalfInt, sz: HalfInt) -> Result<Self> {
        let (ts, tsz) = (s.twice(), sz.twice());
        if n == 0 || n > crate::spin::MAX_SPINS {
            return domain(format!("spin count {n} out of range"));
        }
        if ts < 0 || ts > n as i32 {
            return domain(format!("S = {s} impossible for {n} spins"));
        }
        if (n as i32 - ts) % 2 != 0 {
            return domain(format!("S = {s} has the wrong parity for {n} spins"));
        }
        if tsz.abs() > ts || (ts - tsz) % 2 != 0 {
            return domain(format!("Sz = {sz} inconsistent with S = {s}"));
        }
        Ok(Self { n, s, sz })
    }

    /// Number of down spins in every basis state of this `Sz` subspace.
    fn down_count(&self) -> usize {
        ((self.n as i32 - self.sz.twice()) / 2) as usize
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Multiplicity of spin-`S` irreducibles in `n` spin-1/2 particles:
/// `C(n, n/2 - S) - C(n, n/2 - S - 1)`.
pub fn sector_dimension(n: usize, s: HalfInt) -> Result<u64> {
    SectorLabel::new(n, s, s)?;
    let k = ((n as i32 - s.twice()) / 2) as usize;
    Ok(binomial(n, k) - if k == 0 { 0 } else { binomial(n, k - 1) })
}

/// Orthonormal basis of a sector, embedded in the full `2^n` space.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub label: SectorLabel,
    /// `2^n x dim`, real entries, orthonormal columns.
    pub columns: Operator,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// `B^dagger O B`.
    pub fn restrict(&self, op: &Operator) -> Result<Operator> {
        check_dim(op.nrows(), self.columns.nrows())?;
        Ok(self.columns.adjoint() * op * &self.columns)
    }
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// Canonical basis of the `(S, Sz)` sector of `n` spins.
///
/// `S^2_total` is diagonalized inside the `Sz_total` eigenspace; the
/// projector onto the requested `S` is then applied to computational basis
/// states in increasing index order and Gram-Schmidt orthonormalized. The
/// projector is unique, so the result does not depend on how the eigensolver
/// orders or rotates degenerate eigenvectors.
pub fn sector_basis(n: usize, s: HalfInt, sz: HalfInt) -> Result<SectorBasis> {
    let label = SectorLabel::new(n, s, sz)?;
    let reg = SpinRegister::new(n)?;
    let downs = label.down_count();
    let states: Vec<usize> = (0..reg.dim()).filter(|&k| reg.down_count(k) == downs).collect();
    let m = states.len();
    let position = |idx: usize| states.binary_search(&idx).expect("swap preserves Sz");

    // S^2 restricted to the Sz subspace; integer entries.
    let diag_shift = 0.75 * n as f64 - 0.25 * (n * (n - 1)) as f64;
    let mut s2 = DMatrix::<f64>::identity(m, m) * diag_shift;
    for (col, &idx) in states.iter().enumerate() {
        for i in 0..n {
            for j in (i + 1)..n {
                s2[(position(reg.swapped_index(idx, i, j)), col)] += 1.0;
            }
        }
    }

    let target = s.value() * (s.value() + 1.0);
    let eig = SymmetricEigen::new(s2);
    let picked: Vec<usize> = (0..m).filter(|&k| (eig.eigenvalues[k] - target).abs() < DEGENERACY_TOL).collect();
    let dim = sector_dimension(n, s)? as usize;
    if picked.len() != dim {
        return domain(format!("found {} eigenvectors for S = {s}, expected {dim}", picked.len()));
    }
    let v = eig.eigenvectors.select_columns(&picked);
    let projector = &v * v.transpose();

    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(dim);
    for seed in 0..m {
        if cols.len() == dim {
            break;
        }
        let mut w = projector.column(seed).into_owned();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &cols {
                let overlap = q.dot(&w);
                w.axpy(-overlap, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            cols.push(w / norm);
        }
    }
    if cols.len() != dim {
        return domain("sector basis construction lost rank");
    }

    let mut full = Operator::zeros(reg.dim(), dim);
    for (j, q) in cols.iter().enumerate() {
        for (r, &idx) in states.iter().enumerate() {
            full[(idx, j)] = linalg::c(q[r], 0.0);
        }
    }
    Ok(SectorBasis { label, columns: full })
}

/// An operator seen from inside an orthonormal subspace.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// `B^dagger U B`.
    pub inside_block: Operator,
    /// `||(I - B B^dagger) U B||_F`.
    pub leakage_norm: f64,
    /// `max |W^dagger W - I|` of the inside block.
    pub residual_unitarity: f64,
}

/// Splits `u` relative to the subspace spanned by the orthonormal columns of `basis`.
pub fn project_to_block(u: &Operator, basis: &Operator) -> Result<BlockDecomposition> {
    check_dim(u.nrows(), basis.nrows())?;
    check_dim(u.ncols(), basis.nrows())?;
    let orth = linalg::unitarity_defect(basis);
    if orth > 1e-10 {
        return domain(format!("subspace columns not orthonormal (defect {orth:e})"));
    }
    let ub = u * basis;
    let inside = basis.adjoint() * &ub;
    let outside = &ub - basis * &inside;
    Ok(BlockDecomposition {
        residual_unitarity: linalg::unitarity_defect(&inside),
        leakage_norm: linalg::frobenius(&outside),
        inside_block: inside,
    })
}

/// All sector labels of `n` spins, ordered by `S` then `Sz` descending.
pub fn all_sectors(n: usize) -> Vec<SectorLabel> {
    let mut out = Vec::new();
    let mut ts = n as i32;
    while ts >= 0 {
        let mut tsz = ts;
        while tsz >= -ts {
            out.push(SectorLabel { n, s: HalfInt(ts), sz: HalfInt(tsz) });
            tsz -= 2;
        }
        ts -= 2;
    }
    out
}

/// Deterministic checksum of a basis: FNV-1a over the entries rounded to 1e-12.
pub fn basis_checksum(basis: &SectorBasis) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for z in basis.columns.iter() {
        for part in [z.re, z.im] {
            let q = (part * 1e12).round() as i64;
            for b in q.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, ONE};

    fn hi(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn parses_half_integers() {
        assert_eq!(hi("1/2"), HalfInt(1));
        assert_eq!(hi("-3/2"), HalfInt(-3));
        assert_eq!(hi("1"), HalfInt(2));
        assert_eq!(hi("0.5"), HalfInt(1));
        assert!("0.3".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt(3).to_string(), "3/2");
        assert_eq!(HalfInt(-2).to_string(), "-1");
    }

    #[test]
    fn multiplicities() {
        assert_eq!(sector_dimension(3, hi("1/2")).unwrap(), 2);
        assert_eq!(sector_dimension(2, hi("0")).unwrap(), 1);
        assert_eq!(sector_dimension(2, hi("1")).unwrap(), 1);
        assert_eq!(sector_dimension(6, hi("1")).unwrap(), 9);
        assert_eq!(sector_dimension(6, hi("0")).unwrap(), 5);
    }

    #[test]
    fn multiplicities_sum_to_full_space() {
        for n in 1..=12 {
            let total: u64 = (0..=n as i32)
                .rev()
                .step_by(2)
                .map(|ts| (ts as u64 + 1) * sector_dimension(n, HalfInt(ts)).unwrap())
                .sum();
            assert_eq!(total, 1 << n);
        }
    }

    #[test]
    fn inconsistent_quantum_numbers() {
        assert!(sector_basis(3, hi("1"), hi("1")).is_err());
        assert!(sector_basis(3, hi("1/2"), hi("3/2")).is_err());
        assert!(sector_basis(2, hi("2"), hi("0")).is_err());
        assert!(sector_basis(4, hi("1"), hi("1/2")).is_err());
    }

    #[test]
    fn code_and_cnot_sector_dims() {
        assert_eq!(sector_basis(3, hi("1/2"), hi("1/2")).unwrap().dim(), 2);
        assert_eq!(sector_basis(6, hi("1"), hi("1")).unwrap().dim(), 9);
    }

    #[test]
    fn two_spin_singlet() {
        let b = sector_basis(2, hi("0"), hi("0")).unwrap();
        assert_eq!(b.dim(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let col = b.columns.column(0);
        // sign fixed by the first seed |up down>
        assert!((col[1].re - s).abs() < 1e-14 && (col[2].re + s).abs() < 1e-14);
    }

    #[test]
    fn sector_columns_are_eigenvectors() {
        let reg = SpinRegister::new(5).unwrap();
        let s2 = reg.total_spin_squared();
        let sz = reg.total_sz();
        for label in all_sectors(5) {
            let b = sector_basis(5, label.s, label.sz).unwrap();
            let sv = label.s.value();
            assert!(linalg::unitarity_defect(&b.columns) < 1e-12);
            let r1 = &s2 * &b.columns - &b.columns * linalg::c(sv * (sv + 1.0), 0.0);
            let r2 = &sz * &b.columns - &b.columns * linalg::c(label.sz.value(), 0.0);
            assert!(max_abs(&r1) < 1e-10 && max_abs(&r2) < 1e-10);
        }
    }

    #[test]
    fn identity_projects_cleanly() {
        let b = sector_basis(4, hi("1"), hi("0")).unwrap();
        let d = project_to_block(&linalg::identity(16), &b.columns).unwrap();
        assert!(max_abs(&(d.inside_block - linalg::identity(b.dim()))) < 1e-14);
        assert!(d.leakage_norm < 1e-14);
    }

    #[test]
    fn projection_dimension_mismatch() {
        let b = sector_basis(3, hi("1/2"), hi("1/2")).unwrap();
        assert!(matches!(project_to_block(&linalg::identity(4), &b.columns), Err(Error::DimensionMismatch { .. })));
        let mut bad = b.columns.clone();
        bad[(0, 0)] += ONE;
        assert!(project_to_block(&linalg::identity(8), &bad).is_err());
    }

    #[test]
    fn checksum_is_stable() {
        let a = sector_basis(6, hi("1"), hi("1")).unwrap();
        let b = sector_basis(6, hi("1"), hi("1")).unwrap();
        assert_eq!(basis_checksum(&a), basis_checksum(&b));
        assert_ne!(basis_checksum(&a), basis_checksum(&sector_basis(6, hi("0"), hi("0")).unwrap()));
    }
}
