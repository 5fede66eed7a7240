use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::encoding::{CodeBranch, LogicalBasis};
use crate::error::{domain, Error, Result};
use crate::invariants;
use crate::linalg::{self, c, Operator, I};
use crate::sectors::{sector_basis, HalfInt};
use crate::spin::{exchange_coefficients, SpinRegister};

use super::sequence::{Pattern, PulseSequence};

/// What counts as reaching the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    /// Equal up to one-qubit gates before and after (local invariants).
    Local,
    /// Equal up to a global phase.
    Exact,
}

/// Target gate, code branches and leakage penalty.
///
/// `f = sum over branches [ mismatch(W) + lambda * |leak|_F^2 ]` where `W` is
/// the logical block of the branch's sector. In local mode the mismatch is
/// `|m1(W) - m1(T)|^2 + |m2(W) - m2(T)|^2`; in exact mode it is
/// `|W - (tr(T^dagger W)/d) T|_F^2`.
#[derive(Debug, Clone)]
pub struct SynthesisObjective {
    pub target: Operator,
    pub equivalence: Equivalence,
    pub leakage_weight: f64,
    pub branches: Vec<CodeBranch>,
}

pub const DEFAULT_LEAKAGE_WEIGHT: f64 = 10.0;

impl SynthesisObjective {
    /// Two-qubit target on blocks (0,1,2) and (3,4,5).
    pub fn two_qubit(target: Operator, equivalence: Equivalence) -> Result<Self> {
        if target.shape() != (4, 4) {
            return Err(Error::DimensionMismatch { expected: 4, got: target.nrows() });
        }
        if !linalg::is_unitary(&target, 1e-10) {
            return domain("target gate is not unitary");
        }
        Ok(Self { target, equivalence, leakage_weight: DEFAULT_LEAKAGE_WEIGHT, branches: vec![CodeBranch::AllUp] })
    }

    /// cNOT up to one-qubit gates.
    pub fn cnot() -> Self {
        Self::two_qubit(invariants::cnot(), Equivalence::Local).expect("cnot is unitary")
    }

    /// One coded qubit on sites (0,1,2), exact up to global phase.
    pub fn single_qubit(target: Operator) -> Result<Self> {
        if target.shape() != (2, 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: target.nrows() });
        }
        if !linalg::is_unitary(&target, 1e-10) {
            return domain("target gate is not unitary");
        }
        Ok(Self {
            target,
            equivalence: Equivalence::Exact,
            leakage_weight: DEFAULT_LEAKAGE_WEIGHT,
            branches: vec![CodeBranch::AllUp],
        })
    }

    /// Also require the gate on the two-block total-singlet branch (the
    /// decoherence-free subsystem code).
    pub fn with_subsystem(mut self) -> Self {
        if self.logical_qubits() == 2 && !self.branches.contains(&CodeBranch::TwoBlockSinglet) {
            self.branches.push(CodeBranch::TwoBlockSinglet);
        }
        self
    }

    pub fn with_leakage_weight(mut self, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return domain(format!("leakage weight {weight} must be finite and non-negative"));
        }
        self.leakage_weight = weight;
        Ok(self)
    }

    pub fn logical_qubits(&self) -> usize {
        if self.target.nrows() == 4 {
            2
        } else {
            1
        }
    }

    /// Number of physical spins the objective acts on.
    pub fn n(&self) -> usize {
        3 * self.logical_qubits()
    }

    pub fn logical_basis(&self, branch: CodeBranch) -> LogicalBasis {
        if self.logical_qubits() == 2 {
            LogicalBasis::pair_with_branch(branch)
        } else {
            LogicalBasis::single()
        }
    }

    /// `(2S, 2Sz)` of the sector holding a branch.
    fn sector_numbers(&self, branch: CodeBranch) -> (i32, i32) {
        match (self.logical_qubits(), branch) {
            (1, _) => (1, 1),
            (_, CodeBranch::AllUp) => (2, 2),
            (_, CodeBranch::TwoBlockSinglet) => (0, 0),
        }
    }
}

/// Result of one objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Total objective, including the leakage penalty.
    pub f: f64,
    /// Target mismatch part only.
    pub mismatch: f64,
    /// Frobenius norm of the off-block part, summed in quadrature over branches.
    pub leakage: f64,
}

/// One code branch compiled into sector coordinates in which the logical
/// states are the first `k` basis vectors.
#[derive(Debug, Clone)]
struct SectorModel {
    dim: usize,
    k: usize,
    /// Restricted SWAP for each pair of the pattern.
    swaps: HashMap<(usize, usize), Operator>,
}

impl SectorModel {
    fn build(objective: &SynthesisObjective, branch: CodeBranch, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = objective.n();
        let (ts, tsz) = objective.sector_numbers(branch);
        let sector = sector_basis(n, HalfInt(ts), HalfInt(tsz))?;
        let logical = objective.logical_basis(branch);
        let coeff = sector.columns.adjoint() * &logical.vectors;
        let dim = sector.dim();
        let k = coeff.ncols();
        // orthonormal complement of the logical columns inside the sector
        let proj = linalg::identity(dim) - &coeff * coeff.adjoint();
        let eig = SymmetricEigen::new((&proj + proj.adjoint()) * c(0.5, 0.0));
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let comp = eig.eigenvectors.select_columns(&order[..dim - k]);
        let mut frame = Operator::zeros(dim, dim);
        frame.view_mut((0, 0), (dim, k)).copy_from(&coeff);
        frame.view_mut((0, k), (dim, dim - k)).copy_from(&comp);
        if linalg::unitarity_defect(&frame) > 1e-10 {
            return domain("logical basis does not lie in its sector");
        }
        let embed = &sector.columns * &frame;
        let reg = SpinRegister::new(n)?;
        let mut swaps = HashMap::new();
        for &(i, j) in pairs {
            let key = (i.min(j), i.max(j));
            if swaps.contains_key(&key) {
                continue;
            }
            let full = reg.swap_operator(i, j)?;
            swaps.insert(key, embed.adjoint() * full * &embed);
        }
        Ok(Self { dim, k, swaps })
    }

    fn swap(&self, i: usize, j: usize) -> &Operator {
        &self.swaps[&(i.min(j), i.max(j))]
    }

    /// `S_i . S_j` in sector coordinates.
    fn exchange(&self, i: usize, j: usize) -> Operator {
        let mut h = self.swap(i, j) * c(0.5, 0.0);
        for d in 0..self.dim {
            h[(d, d)] -= c(0.25, 0.0);
        }
        h
    }
}

/// A step unitary and the derivative of its action with respect to each coupling.
struct StepJet {
    unitary: Operator,
    /// Spectral data for multi-coupling steps: eigenvectors, phases and
    /// divided-difference kernel.
    spectral: Option<(Operator, Operator)>,
}

fn step_jet(model: &SectorModel, couplings: &[((usize, usize), f64)], want_derivative: bool) -> StepJet {
    match couplings {
        [] => StepJet { unitary: linalg::identity(model.dim), spectral: None },
        [((i, j), tau)] => {
            let (a, b) = exchange_coefficients(*tau);
            let mut u = model.swap(*i, *j) * b;
            for d in 0..model.dim {
                u[(d, d)] += a;
            }
            StepJet { unitary: u, spectral: None }
        }
        _ => {
            let mut g = Operator::zeros(model.dim, model.dim);
            for &((i, j), tau) in couplings {
                g += model.exchange(i, j) * c(TAU * tau, 0.0);
            }
            let eig = SymmetricEigen::new((&g + g.adjoint()) * c(0.5, 0.0));
            let v = eig.eigenvectors;
            let lam = eig.eigenvalues;
            let ph: Vec<Complex64> = lam.iter().map(|&l| Complex64::from_polar(1.0, l)).collect();
            let mut scaled = v.clone();
            for (col, p) in ph.iter().enumerate() {
                for row in 0..model.dim {
                    scaled[(row, col)] *= *p;
                }
            }
            let unitary = &scaled * v.adjoint();
            let spectral = want_derivative.then(|| {
                let kernel = Operator::from_fn(model.dim, model.dim, |a, b| {
                    let dl = lam[a] - lam[b];
                    if dl.abs() < 1e-9 {
                        I * ph[a]
                    } else {
                        (ph[a] - ph[b]) / dl
                    }
                });
                (v, kernel)
            });
            StepJet { unitary, spectral }
        }
    }
}

/// Objective compiled for a fixed pulse pattern.
#[derive(Debug, Clone)]
pub struct Evaluator {
    objective: SynthesisObjective,
    pattern: Pattern,
    models: Vec<SectorModel>,
    target_invariants: (Complex64, Complex64),
    n_params: usize,
}

impl Evaluator {
    pub fn new(objective: &SynthesisObjective, pattern: &Pattern) -> Result<Self> {
        let n = objective.n();
        let pairs: Vec<(usize, usize)> = pattern.iter().flatten().copied().collect();
        for &(i, j) in &pairs {
            if i == j {
                return Err(Error::InvalidPair(i, j));
            }
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { site: i.max(j), n });
            }
        }
        for step in pattern {
            let steps: Vec<(usize, usize, f64)> = step.iter().map(|&(i, j)| (i, j, 0.0)).collect();
            crate::spin::check_step(&steps)?;
        }
        let models =
            objective.branches.iter().map(|&b| SectorModel::build(objective, b, &pairs)).collect::<Result<Vec<_>>>()?;
        let target_invariants = if objective.equivalence == Equivalence::Local {
            invariants::raw_invariants(&objective.target)
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        };
        Ok(Self {
            objective: objective.clone(),
            pattern: pattern.clone(),
            models,
            target_invariants,
            n_params: pairs.len(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn objective(&self) -> &SynthesisObjective {
        &self.objective
    }

    fn step_couplings(&self, times: &[f64]) -> Vec<Vec<((usize, usize), f64)>> {
        let mut it = times.iter();
        self.pattern.iter().map(|s| s.iter().map(|&p| (p, *it.next().expect("length checked"))).collect()).collect()
    }

    /// Logical block `W` and off-block part `L` of each branch (sector coordinates).
    pub fn blocks(&self, times: &[f64]) -> Vec<(Operator, Operator)> {
        assert_eq!(times.len(), self.n_params, "duration count");
        let steps = self.step_couplings(times);
        self.models
            .iter()
            .map(|m| {
                let mut x = Operator::identity(m.dim, m.k);
                for s in &steps {
                    x = step_jet(m, s, false).unitary * x;
                }
                let w = x.rows(0, m.k).into_owned();
                let l = x.rows(m.k, m.dim - m.k).into_owned();
                (w, l)
            })
            .collect()
    }

    fn mismatch_residuals(&self, w: &Operator, dws: &[Operator], out: &mut Vec<f64>, jac: &mut [Vec<f64>]) {
        match self.objective.equivalence {
            Equivalence::Local => {
                let ((m1, m2), d) = invariants::raw_invariants_with_derivatives(w, dws);
                let (t1, t2) = self.target_invariants;
                let r1 = m1 - t1;
                let r2 = m2 - t2;
                out.extend([r1.re, r1.im, r2.re, r2.im]);
                for (col, (d1, d2)) in jac.iter_mut().zip(d) {
                    col.extend([d1.re, d1.im, d2.re, d2.im]);
                }
            }
            Equivalence::Exact => {
                let t = &self.objective.target;
                let td = t.adjoint();
                let k = t.nrows() as f64;
                let ov = (&td * w).trace() / k;
                let r = w - t * ov;
                out.extend(r.iter().flat_map(|z| [z.re, z.im]));
                for (col, dw) in jac.iter_mut().zip(dws) {
                    let dov = (&td * dw).trace() / k;
                    let dr = dw - t * dov;
                    col.extend(dr.iter().flat_map(|z| [z.re, z.im]));
                }
            }
        }
    }

    /// Residual vector `r` with `f = |r|^2`, and optionally its Jacobian.
    fn residuals(&self, times: &[f64], want_jacobian: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>, f64, f64) {
        assert_eq!(times.len(), self.n_params, "duration count");
        let steps = self.step_couplings(times);
        let sqrt_lambda = self.objective.leakage_weight.sqrt();
        let mut r = Vec::new();
        let mut jac: Vec<Vec<f64>> = vec![Vec::new(); self.n_params];
        let mut mismatch = 0.0;
        let mut leak2 = 0.0;
        for m in &self.models {
            let jets: Vec<StepJet> = steps.iter().map(|s| step_jet(m, s, want_jacobian)).collect();
            // prefixes X_s = Step_{s-1} ... Step_0 restricted to logical columns
            let mut prefix = Vec::with_capacity(jets.len() + 1);
            prefix.push(Operator::identity(m.dim, m.k));
            for jet in &jets {
                let next = &jet.unitary * prefix.last().expect("non-empty");
                prefix.push(next);
            }
            let x = prefix.last().expect("non-empty");
            let w = x.rows(0, m.k).into_owned();
            let l = x.rows(m.k, m.dim - m.k).into_owned();

            let mut d_full: Vec<Operator> = Vec::new();
            if want_jacobian {
                // suffixes Suf_s = Step_{N-1} ... Step_{s+1}
                let nsteps = jets.len();
                let mut suffix = vec![linalg::identity(m.dim); nsteps];
                for s in (0..nsteps.saturating_sub(1)).rev() {
                    suffix[s] = &suffix[s + 1] * &jets[s + 1].unitary;
                }
                for (s, (jet, couplings)) in jets.iter().zip(&steps).enumerate() {
                    for &((i, j), _) in couplings {
                        let h = m.exchange(i, j);
                        let inner = match &jet.spectral {
                            None => (&h * &prefix[s + 1]) * c(0.0, TAU),
                            Some((v, kernel)) => {
                                let hv = v.adjoint() * &h * v * c(TAU, 0.0);
                                let dexp = v * hv.component_mul(kernel) * v.adjoint();
                                dexp * &prefix[s]
                            }
                        };
                        d_full.push(&suffix[s] * inner);
                    }
                }
            }
            let dws: Vec<Operator> = d_full.iter().map(|d| d.rows(0, m.k).into_owned()).collect();
            let start = r.len();
            self.mismatch_residuals(&w, &dws, &mut r, &mut jac);
            mismatch += r[start..].iter().map(|x| x * x).sum::<f64>();
            leak2 += l.iter().map(|z| z.norm_sqr()).sum::<f64>();
            r.extend(l.iter().flat_map(|z| [z.re * sqrt_lambda, z.im * sqrt_lambda]));
            for (col, d) in jac.iter_mut().zip(&d_full) {
                let dl = d.rows(m.k, m.dim - m.k);
                col.extend(dl.iter().flat_map(|z| [z.re * sqrt_lambda, z.im * sqrt_lambda]));
            }
        }
        (r, want_jacobian.then_some(jac), mismatch, leak2)
    }

    pub fn evaluate(&self, times: &[f64]) -> Evaluation {
        let (r, _, mismatch, leak2) = self.residuals(times, false);
        Evaluation { f: r.iter().map(|x| x * x).sum(), mismatch, leakage: leak2.sqrt() }
    }

    /// Residuals and Jacobian for least-squares solvers.
    pub fn residuals_and_jacobian(&self, times: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (r, jac, _, _) = self.residuals(times, true);
        let jac = jac.expect("requested");
        let m = r.len();
        (DVector::from_vec(r), DMatrix::from_fn(m, self.n_params, |row, col| jac[col][row]))
    }

    /// `f` and `grad f = 2 J^T r`.
    pub fn value_and_gradient(&self, times: &[f64]) -> (f64, Vec<f64>) {
        let (r, jac) = self.residuals_and_jacobian(times);
        let g = jac.transpose() * &r * 2.0;
        (r.norm_squared(), g.as_slice().to_vec())
    }
}

fn check_sequence(seq: &PulseSequence, obj: &SynthesisObjective) -> Result<()> {
    seq.validate()?;
    if seq.n() != obj.n() {
        return Err(Error::DimensionMismatch { expected: obj.n(), got: seq.n() });
    }
    Ok(())
}

/// Objective value and leakage of a sequence.
pub fn evaluate_objective(seq: &PulseSequence, obj: &SynthesisObjective) -> Result<Evaluation> {
    check_sequence(seq, obj)?;
    Ok(Evaluator::new(obj, &seq.pattern())?.evaluate(&seq.times()))
}

/// `df / dtau` for every coupling, in step-major order.
pub fn analytic_gradient(seq: &PulseSequence, obj: &SynthesisObjective) -> Result<Vec<f64>> {
    check_sequence(seq, obj)?;
    Ok(Evaluator::new(obj, &seq.pattern())?.value_and_gradient(&seq.times()).1)
}
