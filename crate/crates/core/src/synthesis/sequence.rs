use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Operator};
use crate::spin::SpinRegister;

/// How couplings may be switched on in one clock cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exactly one coupling per step.
    Serial,
    /// Any set of distinct nearest-neighbour couplings on a line.
    Parallel1d,
    /// Any set of distinct nearest-neighbour couplings on a rectangular grid.
    Parallel2d,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Serial => "serial",
            Mode::Parallel1d => "parallel-1d",
            Mode::Parallel2d => "parallel-2d",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(Mode::Serial),
            "parallel-1d" | "parallel1d" => Ok(Mode::Parallel1d),
            "parallel-2d" | "parallel2d" => Ok(Mode::Parallel2d),
            _ => Err(Error::Domain(format!("unknown mode {s:?}"))),
        }
    }
}

/// Which pairs of sites can be coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Layout {
    /// Sites `0..n` on a line; only `|i - j| = 1`.
    Line { n: usize },
    /// `rows x cols` array, site `r * cols + c`; only grid neighbours.
    Grid { rows: usize, cols: usize },
    /// Any pair of `0..n`.
    Complete { n: usize },
}

impl Layout {
    pub fn n(&self) -> usize {
        match *self {
            Layout::Line { n } | Layout::Complete { n } => n,
            Layout::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return false;
        }
        match *self {
            Layout::Line { .. } => i.abs_diff(j) == 1,
            Layout::Complete { .. } => true,
            Layout::Grid { cols, .. } => {
                let (ri, ci) = (i / cols, i % cols);
                let (rj, cj) = (j / cols, j % cols);
                (ri == rj && ci.abs_diff(cj) == 1) || (ci == cj && ri.abs_diff(rj) == 1)
            }
        }
    }

    /// All allowed pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| self.allows(i, j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub tau: f64,
}

impl Coupling {
    pub fn new(i: usize, j: usize, tau: f64) -> Self {
        Self { i, j, tau }
    }
}

/// Pairs switched on in each step, without durations.
pub type Pattern = Vec<Vec<(usize, usize)>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub mode: Mode,
    pub layout: Layout,
    pub steps: Vec<Vec<Coupling>>,
}

impl PulseSequence {
    pub fn new(mode: Mode, layout: Layout, steps: Vec<Vec<Coupling>>) -> Result<Self> {
        let seq = Self { mode, layout, steps };
        seq.validate()?;
        Ok(seq)
    }

    /// Serial sequence from `(i, j, tau)` triples.
    pub fn serial(layout: Layout, pulses: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(Mode::Serial, layout, pulses.iter().map(|&(i, j, t)| vec![Coupling::new(i, j, t)]).collect())
    }

    /// Attaches `times` (step-major, in pattern order) to `pattern`.
    pub fn from_pattern(mode: Mode, layout: Layout, pattern: &Pattern, times: &[f64]) -> Result<Self> {
        let count: usize = pattern.iter().map(Vec::len).sum();
        if count != times.len() {
            return Err(Error::InvalidSequence(format!("{} durations for {count} couplings", times.len())));
        }
        let mut it = times.iter();
        let steps = pattern
            .iter()
            .map(|step| step.iter().map(|&(i, j)| Coupling::new(i, j, *it.next().expect("counted"))).collect())
            .collect();
        Self::new(mode, layout, steps)
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSequence(msg));
        match (self.mode, self.layout) {
            (Mode::Parallel1d, Layout::Line { .. }) | (Mode::Parallel2d, Layout::Grid { .. }) | (Mode::Serial, _) => {}
            (mode, layout) => return bad(format!("mode {mode} cannot use layout {layout:?}")),
        }
        for (k, step) in self.steps.iter().enumerate() {
            if self.mode == Mode::Serial && step.len() != 1 {
                return bad(format!("serial step {k} has {} couplings", step.len()));
            }
            for (p, c) in step.iter().enumerate() {
                if !self.layout.allows(c.i, c.j) {
                    return bad(format!("step {k}: pair ({}, {}) not allowed by layout", c.i, c.j));
                }
                if !c.tau.is_finite() {
                    return bad(format!("step {k}: non-finite duration"));
                }
                let key = (c.i.min(c.j), c.i.max(c.j));
                if step[..p].iter().any(|o| (o.i.min(o.j), o.i.max(o.j)) == key) {
                    return bad(format!("step {k}: pair ({}, {}) repeated", c.i, c.j));
                }
            }
        }
        Ok(())
    }

    pub fn pattern(&self) -> Pattern {
        self.steps.iter().map(|s| s.iter().map(|c| (c.i, c.j)).collect()).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().flatten().map(|c| c.tau).collect()
    }

    pub fn coupling_count(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    /// Every duration reduced to `[0, 1)`; only global phases change.
    pub fn canonicalized(&self) -> Self {
        let mut out = self.clone();
        for c in out.steps.iter_mut().flatten() {
            c.tau = canonical_tau(c.tau);
        }
        out
    }
}

pub fn canonical_tau(tau: f64) -> f64 {
    let t = tau.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// Full `2^n` unitary `U_N ... U_2 U_1` by direct multiplication of step unitaries.
pub fn sequence_unitary(seq: &PulseSequence) -> Result<Operator> {
    seq.validate()?;
    let reg = SpinRegister::new(seq.n())?;
    let mut u = linalg::identity(reg.dim());
    for step in &seq.steps {
        let couplings: Vec<(usize, usize, f64)> = step.iter().map(|c| (c.i, c.j, c.tau)).collect();
        u = reg.parallel_step_unitary(&couplings)? * u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, phase_distance};

    #[test]
    fn layouts() {
        let line = Layout::Line { n: 6 };
        assert_eq!(line.pairs(), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let grid = Layout::Grid { rows: 2, cols: 3 };
        assert_eq!(grid.pairs(), vec![(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
        assert!(Layout::Complete { n: 3 }.allows(0, 2));
        assert!(!line.allows(0, 2));
    }

    #[test]
    fn empty_sequence_is_identity() {
        let seq = PulseSequence::serial(Layout::Line { n: 3 }, &[]).unwrap();
        assert!(max_abs(&(sequence_unitary(&seq).unwrap() - linalg::identity(8))) < 1e-15);
    }

    #[test]
    fn single_half_pulse_is_swap() {
        let seq = PulseSequence::serial(Layout::Line { n: 2 }, &[(0, 1, 0.5)]).unwrap();
        let swap = SpinRegister::new(2).unwrap().swap_operator(0, 1).unwrap();
        assert!(phase_distance(&sequence_unitary(&seq).unwrap(), &swap) < 1e-12);
    }

    #[test]
    fn consecutive_pulses_add() {
        let line = Layout::Line { n: 3 };
        let a = PulseSequence::serial(line, &[(0, 1, 0.21), (0, 1, 0.43)]).unwrap();
        let b = PulseSequence::serial(line, &[(0, 1, 0.64)]).unwrap();
        assert!(max_abs(&(sequence_unitary(&a).unwrap() - sequence_unitary(&b).unwrap())) < 1e-12);
    }

    #[test]
    fn order_is_right_to_left() {
        let line = Layout::Line { n: 3 };
        let seq = PulseSequence::serial(line, &[(0, 1, 0.2), (1, 2, 0.3)]).unwrap();
        let reg = SpinRegister::new(3).unwrap();
        let want = reg.exchange_unitary(1, 2, 0.3).unwrap() * reg.exchange_unitary(0, 1, 0.2).unwrap();
        assert!(max_abs(&(sequence_unitary(&seq).unwrap() - want)) < 1e-14);
    }

    #[test]
    fn layout_violations() {
        assert!(PulseSequence::serial(Layout::Line { n: 3 }, &[(0, 2, 0.1)]).is_err());
        let two = vec![vec![Coupling::new(0, 1, 0.1), Coupling::new(1, 2, 0.2)]];
        assert!(PulseSequence::new(Mode::Serial, Layout::Line { n: 3 }, two.clone()).is_err());
        assert!(PulseSequence::new(Mode::Parallel1d, Layout::Line { n: 3 }, two.clone()).is_ok());
        assert!(PulseSequence::new(Mode::Parallel2d, Layout::Line { n: 3 }, two).is_err());
    }

    #[test]
    fn canonicalization_only_changes_phase() {
        let line = Layout::Line { n: 3 };
        let seq = PulseSequence::serial(line, &[(0, 1, 2.3), (1, 2, -0.4)]).unwrap();
        let can = seq.canonicalized();
        assert!(can.times().iter().all(|t| (0.0..1.0).contains(t)));
        assert!(phase_distance(&sequence_unitary(&seq).unwrap(), &sequence_unitary(&can).unwrap()) < 1e-12);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [Mode::Serial, Mode::Parallel1d, Mode::Parallel2d] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
    }
}
