//! The three-spin coded qubit.
//!
//! Within a block with sites `(a, b, c)` (the first two carry the
//! singlet/triplet structure):
//!
//! ```text
//! |0_L> = |S>_ab |up>_c
//! |1_L> = sqrt(2/3) |T+>_ab |down>_c - sqrt(1/3) |T0>_ab |up>_c
//! ```
//!
//! Both states have block spin `S = 1/2, Sz = +1/2`, so exchanges inside a
//! block act on the code space without leakage.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::linalg::{self, c, Operator, StateVector, ONE, ZERO};
use crate::sectors::{self, BlockDecomposition};
use crate::spin::SpinRegister;

/// Tolerance on the state norm accepted by [`measure_singlet_triplet`].
pub const NORM_TOL: f64 = 1e-10;

/// Three distinct sites forming one coded qubit, in code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeBlock {
    sites: [usize; 3],
}

impl CodeBlock {
    pub fn new(sites: [usize; 3]) -> Result<Self> {
        let [a, b, c] = sites;
        if a == b || b == c || a == c {
            return domain(format!("code block sites {sites:?} are not distinct"));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> [usize; 3] {
        self.sites
    }

    /// Position (0, 1 or 2) of `site` inside the block.
    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        i != j && self.position(i).is_some() && self.position(j).is_some()
    }
}

impl Default for CodeBlock {
    fn default() -> Self {
        Self { sites: [0, 1, 2] }
    }
}

/// Amplitudes of `|0_L>`, `|1_L>` (and their `Sz = -1/2` partners) on the
/// eight local states of a block, indexed with the first block site as the
/// most significant bit.
fn local_amplitudes(which: usize) -> [f64; 8] {
    let s = FRAC_1_SQRT_2;
    let r23 = (2.0f64 / 3.0).sqrt();
    let r16 = (1.0f64 / 6.0).sqrt();
    let mut a = [0.0; 8];
    match which {
        // |S>|up>: up-down-up = 0b010, down-up-up = 0b100
        0 => {
            a[0b010] = s;
            a[0b100] = -s;
        }
        // sqrt(2/3)|up up>|down> - sqrt(1/3)(|up down> + |down up>)/sqrt2 |up>
        1 => {
            a[0b001] = r23;
            a[0b010] = -r16;
            a[0b100] = -r16;
        }
        // lowering partners: S-_block |0_L> = |S>|down>
        2 => {
            a[0b011] = s;
            a[0b101] = -s;
        }
        // S-_block |1_L>, normalized
        3 => {
            a[0b011] = r16;
            a[0b101] = r16;
            a[0b110] = -r23;
        }
        _ => unreachable!(),
    }
    a
}

/// Embeds a product over blocks of local block states into the full register.
fn product_state(reg: &SpinRegister, blocks: &[CodeBlock], locals: &[[f64; 8]]) -> StateVector {
    let n = reg.n();
    let covered: Vec<usize> = blocks.iter().flat_map(|b| b.sites()).collect();
    StateVector::from_fn(reg.dim(), |idx, _| {
        // sites outside every block must be up
        if (0..n).filter(|s| !covered.contains(s)).any(|s| reg.bit(idx, s) == 1) {
            return ZERO;
        }
        let mut amp = 1.0;
        for (block, local) in blocks.iter().zip(locals) {
            let [a, b, cc] = block.sites();
            let k = (reg.bit(idx, a) << 2) | (reg.bit(idx, b) << 1) | reg.bit(idx, cc);
            amp *= local[k];
            if amp == 0.0 {
                break;
            }
        }
        c(amp, 0.0)
    })
}

fn check_blocks(reg: &SpinRegister, blocks: &[CodeBlock]) -> Result<()> {
    let mut seen = Vec::new();
    for b in blocks {
        for s in b.sites() {
            if s >= reg.n() {
                return Err(Error::IndexOutOfRange { site: s, n: reg.n() });
            }
            if seen.contains(&s) {
                return domain(format!("site {s} belongs to two code blocks"));
            }
            seen.push(s);
        }
    }
    Ok(())
}

/// `|0_L>` of `block`, embedded in an `n`-spin register (other sites up).
pub fn logical_zero(reg: &SpinRegister, block: &CodeBlock) -> Result<StateVector> {
    check_blocks(reg, std::slice::from_ref(block))?;
    Ok(product_state(reg, &[*block], &[local_amplitudes(0)]))
}

/// `|1_L>` of `block`, embedded in an `n`-spin register (other sites up).
pub fn logical_one(reg: &SpinRegister, block: &CodeBlock) -> Result<StateVector> {
    check_blocks(reg, std::slice::from_ref(block))?;
    Ok(product_state(reg, &[*block], &[local_amplitudes(1)]))
}

/// Which total-spin branch a multi-block logical basis lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeBranch {
    /// Every block in its `Sz = +1/2` state (the product code).
    AllUp,
    /// Two blocks coupled to a total singlet: `(|a,up>|b,down> - |a,down>|b,up>)/sqrt 2`.
    TwoBlockSinglet,
}

/// Orthonormal logical basis `|0...0_L>, ..., |1...1_L>` of a list of blocks.
#[derive(Debug, Clone)]
pub struct LogicalBasis {
    pub reg: SpinRegister,
    pub blocks: Vec<CodeBlock>,
    pub branch: CodeBranch,
    /// `2^n x 2^blocks`, columns in logical order (first block most significant).
    pub vectors: Operator,
}

impl LogicalBasis {
    pub fn new(reg: SpinRegister, blocks: Vec<CodeBlock>) -> Result<Self> {
        Self::with_branch(reg, blocks, CodeBranch::AllUp)
    }

    pub fn with_branch(reg: SpinRegister, blocks: Vec<CodeBlock>, branch: CodeBranch) -> Result<Self> {
        if blocks.is_empty() {
            return domain("logical basis needs at least one block");
        }
        check_blocks(&reg, &blocks)?;
        let k = blocks.len();
        let mut vectors = Operator::zeros(reg.dim(), 1 << k);
        for label in 0..(1usize << k) {
            let bits: Vec<usize> = (0..k).map(|b| (label >> (k - 1 - b)) & 1).collect();
            let v = match branch {
                CodeBranch::AllUp => {
                    let locals: Vec<[f64; 8]> = bits.iter().map(|&b| local_amplitudes(b)).collect();
                    product_state(&reg, &blocks, &locals)
                }
                CodeBranch::TwoBlockSinglet => {
                    if k != 2 {
                        return domain("singlet branch is defined for two blocks");
                    }
                    let (a, b) = (bits[0], bits[1]);
                    let up_down = product_state(&reg, &blocks, &[local_amplitudes(a), local_amplitudes(b + 2)]);
                    let down_up = product_state(&reg, &blocks, &[local_amplitudes(a + 2), local_amplitudes(b)]);
                    (up_down - down_up) * c(FRAC_1_SQRT_2, 0.0)
                }
            };
            vectors.set_column(label, &v);
        }
        Ok(Self { reg, blocks, branch, vectors })
    }

    /// One block on sites (0, 1, 2) of a three-spin register.
    pub fn single() -> Self {
        Self::new(SpinRegister::new(3).expect("n = 3"), vec![CodeBlock::default()]).expect("valid block")
    }

    /// Blocks A = (0, 1, 2) and B = (3, 4, 5) of a six-spin register, order A ⊗ B.
    pub fn pair() -> Self {
        Self::pair_with_branch(CodeBranch::AllUp)
    }

    pub fn pair_with_branch(branch: CodeBranch) -> Self {
        let reg = SpinRegister::new(6).expect("n = 6");
        let blocks = vec![CodeBlock::new([0, 1, 2]).expect("block A"), CodeBlock::new([3, 4, 5]).expect("block B")];
        Self::with_branch(reg, blocks, branch).expect("valid blocks")
    }

    pub fn logical_dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Logical matrix of `u` in the code space plus the leakage out of it.
pub fn logical_action(u: &Operator, basis: &LogicalBasis) -> Result<BlockDecomposition> {
    sectors::project_to_block(u, &basis.vectors)
}

/// Rotation axis and angular rate of a single exchange inside one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAxis {
    /// Unit rotation axis `n`.
    pub axis: [f64; 3],
    /// Angle per unit `tau`: the logical action of a pulse is
    /// `exp(-i rate tau (n . sigma) / 2)` up to a global phase.
    pub rate: f64,
}

impl BlochAxis {
    /// Angle between the axis and `+z`, in degrees.
    pub fn polar_angle_degrees(&self) -> f64 {
        self.axis[2].clamp(-1.0, 1.0).acos().to_degrees()
    }
}

/// Axis of the logical rotation produced by exchange on `(i, j)` inside the block.
///
/// The logical generator `G = P H_ij P` is a 2x2 hermitian matrix with
/// traceless part `g . sigma`, so a pulse acts as `exp(i 2 pi tau g . sigma)`.
/// The rate is reported positive, `rate = 4 pi |g|`, and `n = -g / |g|`.
pub fn bloch_axis(i: usize, j: usize, block: &CodeBlock) -> Result<BlochAxis> {
    if !block.contains_pair(i, j) {
        return domain(format!("pair ({i}, {j}) is not inside block {:?}", block.sites()));
    }
    let n = block.sites().iter().copied().max().unwrap_or(0) + 1;
    let reg = SpinRegister::new(n)?;
    let basis = LogicalBasis::new(reg, vec![*block])?;
    let h = reg.exchange_hamiltonian(i, j)?;
    let g = basis.vectors.adjoint() * h * &basis.vectors;
    let [px, py, pz] = linalg::paulis();
    // coefficients of g . sigma: tr(G sigma_k) / 2
    let coeff = |p: &Operator| (g.component_mul(&p.transpose())).sum().re / 2.0;
    let gv = [coeff(&px), coeff(&py), coeff(&pz)];
    let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return domain("exchange acts trivially on the code space");
    }
    Ok(BlochAxis { axis: [-gv[0] / norm, -gv[1] / norm, -gv[2] / norm], rate: 2.0 * TAU * norm })
}

/// Singlet and triplet probabilities of the first two sites of `block`.
pub fn measure_singlet_triplet(state: &StateVector, reg: &SpinRegister, block: &CodeBlock) -> Result<(f64, f64)> {
    if state.len() != reg.dim() {
        return Err(Error::DimensionMismatch { expected: reg.dim(), got: state.len() });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return domain(format!("state is not normalized (norm {norm})"));
    }
    let [a, b, _] = block.sites();
    // singlet projector (I - SWAP)/2
    let mut p_singlet = 0.0;
    for idx in 0..reg.dim() {
        let partner = reg.swapped_index(idx, a, b);
        let amp: Complex64 = (state[idx] - state[partner]) * 0.5;
        p_singlet += amp.norm_sqr();
    }
    Ok((p_singlet, (norm * norm - p_singlet).max(0.0)))
}

/// Computational basis state of `n` spins as a vector.
pub fn basis_state(reg: &SpinRegister, index: usize) -> StateVector {
    let mut v = StateVector::zeros(reg.dim());
    v[index] = ONE;
    v
}
