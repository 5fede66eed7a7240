//! Spin-1/2 registers, exchange Hamiltonians and exchange-pulse unitaries.
//!
//! Basis convention: site 0 is the most significant bit of the computational
//! index and a bit value of 0 means spin up. For three sites the index of
//! `|up down up>` is `0b010 = 2`.
//!
//! Time convention: a pulse of dimensionless duration `tau` on pair `(i, j)`
//! is `exp(i 2 pi tau S_i . S_j)`. Since `S_i . S_j = SWAP_ij / 2 - 1/4`,
//! `tau = 1/2` is a SWAP up to a global phase and `tau -> tau + 1` multiplies
//! the unitary by the global phase `i`.

use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::linalg::{self, c, Operator, ONE, ZERO};

pub const MAX_SPINS: usize = 12;

/// Hermiticity tolerance accepted by [`matrix_exp_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A register of `n` spin-1/2 sites indexed from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinRegister {
    n: usize,
}

impl SpinRegister {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SPINS {
            return domain(format!("spin count {n} outside 1..={MAX_SPINS}"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Full Hilbert-space dimension `2^n`.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Bit of `site` inside computational index `index` (0 = up, 1 = down).
    #[inline]
    pub fn bit(&self, index: usize, site: usize) -> usize {
        (index >> (self.n - 1 - site)) & 1
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            Err(Error::IndexOutOfRange { site, n: self.n })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::InvalidPair(i, j));
        }
        Ok(())
    }

    /// Index obtained by exchanging the states of sites `i` and `j`.
    #[inline]
    pub fn swapped_index(&self, index: usize, i: usize, j: usize) -> usize {
        let (bi, bj) = (self.bit(index, i), self.bit(index, j));
        if bi == bj {
            index
        } else {
            index ^ (1 << (self.n - 1 - i)) ^ (1 << (self.n - 1 - j))
        }
    }

    /// Number of down spins in a computational basis state.
    pub fn down_count(&self, index: usize) -> usize {
        index.count_ones() as usize
    }

    /// `(Sx, Sy, Sz)` of one site, embedded with identities on all others.
    pub fn spin_operators(&self, site: usize) -> Result<[Operator; 3]> {
        self.check_site(site)?;
        let dim = self.dim();
        let mut sx = Operator::zeros(dim, dim);
        let mut sy = Operator::zeros(dim, dim);
        let mut sz = Operator::zeros(dim, dim);
        let flip = 1 << (self.n - 1 - site);
        for col in 0..dim {
            let row = col ^ flip;
            sx[(row, col)] = c(0.5, 0.0);
            // sigma_y |up> = i |down>, sigma_y |down> = -i |up>
            sy[(row, col)] = if self.bit(col, site) == 0 { c(0.0, 0.5) } else { c(0.0, -0.5) };
            sz[(col, col)] = if self.bit(col, site) == 0 { c(0.5, 0.0) } else { c(-0.5, 0.0) };
        }
        Ok([sx, sy, sz])
    }

    /// Permutation operator exchanging sites `i` and `j`.
    pub fn swap_operator(&self, i: usize, j: usize) -> Result<Operator> {
        self.check_pair(i, j)?;
        let dim = self.dim();
        let mut p = Operator::zeros(dim, dim);
        for col in 0..dim {
            p[(self.swapped_index(col, i, j), col)] = ONE;
        }
        Ok(p)
    }

    /// `S_i . S_j`, built as `SWAP_ij / 2 - 1/4`.
    pub fn exchange_hamiltonian(&self, i: usize, j: usize) -> Result<Operator> {
        let swap = self.swap_operator(i, j)?;
        Ok(swap * c(0.5, 0.0) - linalg::identity(self.dim()) * c(0.25, 0.0))
    }

    /// `exp(i 2 pi tau S_i . S_j)` from the SWAP closed form.
    pub fn exchange_unitary(&self, i: usize, j: usize, tau: f64) -> Result<Operator> {
        if !tau.is_finite() {
            return domain(format!("non-finite pulse duration {tau}"));
        }
        let swap = self.swap_operator(i, j)?;
        Ok(exchange_from_swap(&swap, tau))
    }

    /// One clock cycle with several couplings on at once:
    /// `exp(i 2 pi sum_p tau_p S_i(p) . S_j(p))`. Pairs may share sites.
    pub fn parallel_step_unitary(&self, couplings: &[(usize, usize, f64)]) -> Result<Operator> {
        check_step(couplings)?;
        match couplings {
            [] => Ok(linalg::identity(self.dim())),
            [(i, j, tau)] => self.exchange_unitary(*i, *j, *tau),
            _ => {
                let mut h = Operator::zeros(self.dim(), self.dim());
                for &(i, j, tau) in couplings {
                    if !tau.is_finite() {
                        return domain(format!("non-finite pulse duration {tau}"));
                    }
                    h += self.exchange_hamiltonian(i, j)? * c(tau, 0.0);
                }
                matrix_exp_hermitian(&h, TAU)
            }
        }
    }

    /// `Sz_total`.
    pub fn total_sz(&self) -> Operator {
        let dim = self.dim();
        Operator::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
            c(self.n as f64 / 2.0 - self.down_count(k) as f64, 0.0)
        }))
    }

    /// `S^2_total = 3n/4 + sum_{i<j} (SWAP_ij - 1/2)`.
    pub fn total_spin_squared(&self) -> Operator {
        let n = self.n;
        let mut s2 = linalg::identity(self.dim()) * c(0.75 * n as f64 - 0.25 * (n * (n - 1)) as f64, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                s2 += self.swap_operator(i, j).expect("valid pair");
            }
        }
        s2
    }
}

/// Rejects repeated pairs (in either orientation) and self-pairs.
pub(crate) fn check_step(couplings: &[(usize, usize, f64)]) -> Result<()> {
    for (k, &(i, j, _)) in couplings.iter().enumerate() {
        if i == j {
            return Err(Error::InvalidPair(i, j));
        }
        let key = (i.min(j), i.max(j));
        if couplings[..k].iter().any(|&(a, b, _)| (a.min(b), a.max(b)) == key) {
            return Err(Error::InvalidStep(format!("pair ({i}, {j}) appears twice")));
        }
    }
    Ok(())
}

/// `exp(i theta S.S) = e^{-i theta/4} (cos(theta/2) I + i sin(theta/2) SWAP)` with `theta = 2 pi tau`.
///
/// Valid for any operator `swap` that squares to the identity, including a
/// SWAP restricted to an invariant sector.
pub fn exchange_from_swap(swap: &Operator, tau: f64) -> Operator {
    let (a, b) = exchange_coefficients(tau);
    let mut u = swap * b;
    for k in 0..u.nrows() {
        u[(k, k)] += a;
    }
    u
}

/// Coefficients `(a, b)` with `exp(i 2 pi tau S.S) = a I + b SWAP`.
#[inline]
pub fn exchange_coefficients(tau: f64) -> (Complex64, Complex64) {
    let theta = TAU * tau;
    let phase = Complex64::from_polar(1.0, -theta / 4.0);
    (phase * (theta / 2.0).cos(), phase * c(0.0, (theta / 2.0).sin()))
}

/// `exp(i scale H)` for hermitian `H` by spectral decomposition.
pub fn matrix_exp_hermitian(h: &Operator, scale: f64) -> Result<Operator> {
    if !h.is_square() {
        return domain("matrix exponential of a non-square matrix");
    }
    let defect = linalg::hermiticity_defect(h);
    if defect > HERMITIAN_TOL {
        return domain(format!("operator is not hermitian (defect {defect:e})"));
    }
    if !scale.is_finite() {
        return domain("non-finite exponent scale");
    }
    let herm = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, scale * l));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, ph) in phases.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= *ph;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Singlet `(|up down> - |down up>)/sqrt 2` on two spins.
pub fn singlet_pair() -> linalg::StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    linalg::StateVector::from_vec(vec![ZERO, c(s, 0.0), c(-s, 0.0), ZERO])
}
