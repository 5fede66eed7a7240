use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{phase_distance, Operator};

use super::objective::{Evaluator, SynthesisObjective};
use super::search::{minimize_multistart, MultistartOptions};
use super::sequence::{Layout, Mode, Pattern, PulseSequence};

/// Pulse layouts for one coded qubit on sites (0, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleQubitFlavor {
    /// `(0,1) (1,2) (0,1) (1,2)`, one pulse at a time.
    Serial4Nearest,
    /// `(0,1) (1,2) (0,2)` in some order, one pulse at a time. No single
    /// order reaches every rotation, so all six are tried.
    Serial3AnyPair,
    /// Three clock cycles, each with `(0,1)` and `(1,2)` on together.
    Parallel3,
}

impl SingleQubitFlavor {
    pub const ALL: [SingleQubitFlavor; 3] =
        [SingleQubitFlavor::Serial4Nearest, SingleQubitFlavor::Serial3AnyPair, SingleQubitFlavor::Parallel3];

    pub fn mode(self) -> Mode {
        match self {
            SingleQubitFlavor::Parallel3 => Mode::Parallel1d,
            _ => Mode::Serial,
        }
    }

    pub fn layout(self) -> Layout {
        match self {
            SingleQubitFlavor::Serial3AnyPair => Layout::Complete { n: 3 },
            _ => Layout::Line { n: 3 },
        }
    }

    /// Candidate patterns in the order they are tried.
    pub fn patterns(self) -> Vec<Pattern> {
        match self {
            SingleQubitFlavor::Serial4Nearest => vec![vec![vec![(0, 1)], vec![(1, 2)], vec![(0, 1)], vec![(1, 2)]]],
            SingleQubitFlavor::Serial3AnyPair => {
                const ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                let pairs = [(0, 1), (1, 2), (0, 2)];
                ORDERS.iter().map(|o| o.iter().map(|&k| vec![pairs[k]]).collect()).collect()
            }
            SingleQubitFlavor::Parallel3 => vec![vec![vec![(0, 1), (1, 2)]; 3]],
        }
    }
}

impl fmt::Display for SingleQubitFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingleQubitFlavor::Serial4Nearest => "serial-4-nearest",
            SingleQubitFlavor::Serial3AnyPair => "serial-3-anypair",
            SingleQubitFlavor::Parallel3 => "parallel-3",
        })
    }
}

impl FromStr for SingleQubitFlavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Domain(format!("unknown single-qubit flavor {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleQubitSolution {
    pub flavor: SingleQubitFlavor,
    pub sequence: PulseSequence,
    /// Entrywise distance between the logical action and the target, up to global phase.
    pub residual: f64,
    pub success: bool,
}

/// Residual accepted as a successful decomposition.
pub const SINGLE_QUBIT_TOL: f64 = 1e-8;

/// Pulse durations realizing a 2x2 logical unitary with the given flavor.
///
/// The all-zero schedule is tried first, then seeded multi-start
/// Levenberg-Marquardt in exact mode. A failed search is returned with
/// `success = false`, not as an error.
pub fn decompose_single_qubit(target: &Operator, flavor: SingleQubitFlavor) -> Result<SingleQubitSolution> {
    let obj = SynthesisObjective::single_qubit(target.clone())?;
    let mut best: Option<(f64, Pattern, Vec<f64>)> = None;
    for pattern in flavor.patterns() {
        let eval = Evaluator::new(&obj, &pattern)?;
        let residual_of = |times: &[f64]| phase_distance(&eval.blocks(times)[0].0, target);
        let zero = vec![0.0; eval.n_params()];
        let mut cand = (residual_of(&zero), zero);
        if cand.0 >= 1e-14 {
            let opts = MultistartOptions { restarts: 64, seed: 0, success_f: 1e-22, batch: 8, ..Default::default() };
            let rep = minimize_multistart(&obj, &pattern, &opts)?;
            let r = residual_of(&rep.best_times);
            if r < cand.0 {
                cand = (r, rep.best_times);
            }
        }
        if best.as_ref().is_none_or(|b| cand.0 < b.0) {
            best = Some((cand.0, pattern, cand.1));
        }
        if best.as_ref().is_some_and(|b| b.0 < SINGLE_QUBIT_TOL) {
            break;
        }
    }
    let (residual, pattern, times) = best.expect("every flavor has a pattern");
    let sequence = PulseSequence::from_pattern(flavor.mode(), flavor.layout(), &pattern, &times)?;
    Ok(SingleQubitSolution { flavor, sequence, residual, success: residual < SINGLE_QUBIT_TOL })
}

/// Shortest schedule on the three-spin line reaching `target` within
/// [`SINGLE_QUBIT_TOL`], using at most `max_steps` steps.
///
/// Serial schedules alternate `(0,1)` and `(1,2)`, starting with either;
/// parallel schedules repeat cycles with both couplings on. The best attempt
/// is returned even when no length succeeds.
pub fn shortest_single_qubit(
    target: &Operator,
    mode: Mode,
    max_steps: usize,
    opts: &MultistartOptions,
) -> Result<SingleQubitSchedule> {
    let obj = SynthesisObjective::single_qubit(target.clone())?;
    let layout = Layout::Line { n: 3 };
    let mut best: Option<SingleQubitSchedule> = None;
    for len in 1..=max_steps {
        let pats: Vec<Pattern> = match mode {
            Mode::Serial => [(0, 1), (1, 2)]
                .into_iter()
                .map(|first| {
                    (0..len).map(|k| vec![if k % 2 == 0 { first } else { (1 - first.0, 3 - first.1) }]).collect()
                })
                .collect(),
            Mode::Parallel1d => vec![vec![vec![(0, 1), (1, 2)]; len]],
            Mode::Parallel2d => return Err(Error::Domain("one coded qubit has no 2D layout".into())),
        };
        for pattern in pats {
            let eval = Evaluator::new(&obj, &pattern)?;
            let rep = minimize_multistart(&obj, &pattern, &MultistartOptions { success_f: 1e-22, ..opts.clone() })?;
            let residual = phase_distance(&eval.blocks(&rep.best_times)[0].0, target);
            if best.as_ref().is_none_or(|b| residual < b.residual) {
                let sequence = PulseSequence::from_pattern(mode, layout, &pattern, &rep.best_times)?;
                best = Some(SingleQubitSchedule { sequence, residual, success: residual < SINGLE_QUBIT_TOL });
            }
            if residual < SINGLE_QUBIT_TOL {
                return Ok(best.expect("just set"));
            }
        }
    }
    best.ok_or_else(|| Error::Domain("max_steps must be at least 1".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleQubitSchedule {
    pub sequence: PulseSequence,
    pub residual: f64,
    pub success: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{logical_action, LogicalBasis};
    use crate::linalg::{self, c, haar_unitary};
    use crate::synthesis::sequence::sequence_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn check(target: &Operator, flavor: SingleQubitFlavor) -> SingleQubitSolution {
        let sol = decompose_single_qubit(target, flavor).unwrap();
        assert!(sol.success, "{flavor}: residual {}", sol.residual);
        assert!(sol.sequence.times().iter().all(|t| (0.0..1.0).contains(t)));
        // independent check in the full 8-dim space
        let u = sequence_unitary(&sol.sequence).unwrap();
        let d = logical_action(&u, &LogicalBasis::single()).unwrap();
        assert!(d.leakage_norm < 1e-12);
        assert!(phase_distance(&d.inside_block, target) < SINGLE_QUBIT_TOL);
        sol
    }

    #[test]
    fn identity_needs_no_pulses() {
        for flavor in SingleQubitFlavor::ALL {
            let sol = check(&linalg::identity(2), flavor);
            assert!(sol.sequence.times().iter().all(|&t| t == 0.0));
            assert_eq!(sol.residual, 0.0);
        }
    }

    #[test]
    fn z_rotation_is_one_pulse_on_first_pair() {
        let theta: f64 = 1.234;
        let rz = linalg::su2_rotation([0.0, 0.0, 1.0], theta);
        let seq = PulseSequence::serial(Layout::Line { n: 3 }, &[(0, 1, theta / (2.0 * PI))]).unwrap();
        let d = logical_action(&sequence_unitary(&seq).unwrap(), &LogicalBasis::single()).unwrap();
        assert!(phase_distance(&d.inside_block, &rz) < 1e-12);
        for flavor in SingleQubitFlavor::ALL {
            check(&rz, flavor);
        }
    }

    #[test]
    fn random_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = haar_unitary(2, &mut rng);
            for flavor in SingleQubitFlavor::ALL {
                check(&u, flavor);
            }
        }
    }

    #[test]
    fn hadamard() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = linalg::from_rows([[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]);
        for flavor in SingleQubitFlavor::ALL {
            check(&h, flavor);
        }
    }

    #[test]
    fn shortest_schedules() {
        let opts = MultistartOptions { restarts: 16, batch: 8, ..Default::default() };
        let rz = linalg::su2_rotation([0.0, 0.0, 1.0], PI);
        let s = shortest_single_qubit(&rz, Mode::Serial, 1, &opts).unwrap();
        assert!(s.success);
        assert_eq!(s.sequence.pattern(), vec![vec![(0, 1)]]);
        assert!((s.sequence.times()[0] - 0.5).abs() < 1e-8);
        let rx = linalg::su2_rotation([1.0, 0.0, 0.0], 0.7);
        assert!(!shortest_single_qubit(&rx, Mode::Serial, 1, &opts).unwrap().success);
        let s = shortest_single_qubit(&rx, Mode::Parallel1d, 3, &opts).unwrap();
        assert!(s.success && s.sequence.steps.len() <= 3);
        assert!(shortest_single_qubit(&rx, Mode::Parallel2d, 3, &opts).is_err());
        assert!(shortest_single_qubit(&rx, Mode::Serial, 0, &opts).is_err());
    }

    #[test]
    fn flavor_names() {
        for f in SingleQubitFlavor::ALL {
            assert_eq!(f.to_string().parse::<SingleQubitFlavor>().unwrap(), f);
        }
        assert!("serial-5".parse::<SingleQubitFlavor>().is_err());
        assert!(decompose_single_qubit(&linalg::identity(4), SingleQubitFlavor::Parallel3).is_err());
    }
}
