//! Schedule files and their verification.
//!
//! A schedule is one JSON document. Durations are stored as decimal strings
//! so a file survives any number of load/save cycles unchanged.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::{logical_action, LogicalBasis};
use crate::error::{Error, Result};
use crate::invariants::{extract_local_corrections, LocalCorrections};
use crate::linalg::{self, phase_distance, Operator};
use crate::sectors::{all_sectors, project_to_block, sector_basis};
use crate::synthesis::{
    evaluate_objective, sequence_unitary, Coupling, Equivalence, Layout, Mode, PulseSequence, SynthesisObjective,
};

pub const SCHEDULE_VERSION: u32 = 1;

/// Significant digits written for every duration.
pub const TAU_DIGITS: usize = 17;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub i: usize,
    pub j: usize,
    pub tau: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub target: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub objective: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub version: u32,
    pub n_spins: usize,
    pub mode: Mode,
    pub layout: Layout,
    pub steps: Vec<Vec<Step>>,
    pub metadata: Metadata,
}

/// `tau` in positional notation with [`TAU_DIGITS`] significant digits.
pub fn format_tau(tau: f64) -> String {
    if tau == 0.0 {
        return format!("{:.*}", TAU_DIGITS - 1, 0.0);
    }
    let magnitude = tau.abs().log10().floor() as i64;
    let decimals = (TAU_DIGITS as i64 - 1 - magnitude).max(1) as usize;
    format!("{tau:.decimals$}")
}

fn parse_tau(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite())
        .ok_or_else(|| Error::InvalidStep(format!("bad duration {s:?}")))
}

impl ScheduleFile {
    pub fn from_sequence(seq: &PulseSequence, metadata: Metadata) -> Self {
        let steps = seq
            .steps
            .iter()
            .map(|step| step.iter().map(|c| Step { i: c.i, j: c.j, tau: format_tau(c.tau) }).collect())
            .collect();
        Self { version: SCHEDULE_VERSION, n_spins: seq.n(), mode: seq.mode, layout: seq.layout, steps, metadata }
    }

    /// Rebuilds the pulse sequence, checking mode and layout constraints.
    pub fn to_sequence(&self) -> Result<PulseSequence> {
        if self.version != SCHEDULE_VERSION {
            return Err(Error::Domain(format!("unsupported schedule version {}", self.version)));
        }
        if self.layout.n() != self.n_spins {
            return Err(Error::InvalidSequence(format!(
                "layout has {} sites but n_spins is {}",
                self.layout.n(),
                self.n_spins
            )));
        }
        let steps = self
            .steps
            .iter()
            .map(|step| step.iter().map(|s| Ok(Coupling::new(s.i, s.j, parse_tau(&s.tau)?))).collect())
            .collect::<Result<Vec<Vec<Coupling>>>>()?;
        PulseSequence::new(self.mode, self.layout, steps)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schedule serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Domain(format!("malformed schedule: {e}")))?;
        file.to_sequence()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
    }
}

/// Pass thresholds for [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_f: f64,
    pub max_leakage: f64,
    pub max_residual: f64,
    /// Bound on amplitude moved between total-spin sectors.
    pub max_sector_leakage: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { max_f: 1e-12, max_leakage: 1e-8, max_residual: 6e-5, max_sector_leakage: 1e-8 }
    }
}

/// How the full unitary splits over total-spin sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    /// Dimension of the sector holding the code space.
    pub sector_dim: usize,
    pub logical_dim: usize,
    /// Frobenius norm coupling the code space to the rest of its sector.
    pub off_block_norm: f64,
    /// Largest Frobenius norm leaving any sector of the full space.
    pub max_sector_leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub f: bool,
    pub leakage: bool,
    pub residual: bool,
    pub structure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub target: String,
    /// Invariant mismatch plus leakage penalty for two-qubit targets;
    /// squared entrywise distance up to phase for one-qubit targets.
    pub f: f64,
    pub leakage: f64,
    /// Entrywise distance to the target after one-qubit corrections.
    pub residual: f64,
    pub block_structure: BlockStructure,
    pub thresholds: Thresholds,
    pub checks: Checks,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrections: Option<CorrectionsRecord>,
}

/// One-qubit corrections as `[re, im]` rows, `(A1 x A2) W (B1 x B2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionsRecord {
    pub a1: [[[f64; 2]; 2]; 2],
    pub a2: [[[f64; 2]; 2]; 2],
    pub b1: [[[f64; 2]; 2]; 2],
    pub b2: [[[f64; 2]; 2]; 2],
}

fn rows(m: &Operator) -> [[[f64; 2]; 2]; 2] {
    std::array::from_fn(|r| std::array::from_fn(|c| [m[(r, c)].re, m[(r, c)].im]))
}

impl From<&LocalCorrections> for CorrectionsRecord {
    fn from(c: &LocalCorrections) -> Self {
        Self { a1: rows(&c.a1), a2: rows(&c.a2), b1: rows(&c.b1), b2: rows(&c.b2) }
    }
}

fn sector_structure(u: &Operator, n: usize, logical: &LogicalBasis, leakage: f64) -> Result<BlockStructure> {
    let mut max_sector_leakage: f64 = 0.0;
    let mut sector_dim = 0;
    for label in all_sectors(n) {
        let basis = sector_basis(n, label.s, label.sz)?;
        let d = project_to_block(u, &basis.columns)?;
        max_sector_leakage = max_sector_leakage.max(d.leakage_norm);
        let inside = (basis.columns.adjoint() * &logical.vectors).norm_squared();
        if (inside - logical.logical_dim() as f64).abs() < 1e-8 {
            sector_dim = basis.dim();
        }
    }
    Ok(BlockStructure { sector_dim, logical_dim: logical.logical_dim(), off_block_norm: leakage, max_sector_leakage })
}

/// Checks a schedule against `target` from the brute-force product of the
/// full-space pulse unitaries.
///
/// Six-spin schedules are compared with a two-qubit target up to one-qubit
/// gates, which are extracted and reported. Three-spin schedules are compared
/// with a one-qubit target up to global phase.
pub fn verify(
    schedule: &ScheduleFile,
    target: &Operator,
    target_name: &str,
    thresholds: Thresholds,
) -> Result<VerificationReport> {
    let seq = schedule.to_sequence()?;
    let u = sequence_unitary(&seq)?;
    let (f, leakage, residual, corrections, basis) = match (seq.n(), target.nrows()) {
        (6, 4) => {
            let basis = LogicalBasis::pair();
            let d = logical_action(&u, &basis)?;
            let obj = SynthesisObjective::two_qubit(target.clone(), Equivalence::Local)?;
            let f = evaluate_objective(&seq, &obj)?.f;
            // not locally equivalent: compare without corrections
            match extract_local_corrections(&linalg::polar_unitary(&d.inside_block), target) {
                Ok(mut corr) => {
                    corr.residual = phase_distance(&corr.apply(&d.inside_block), target);
                    (f, d.leakage_norm, corr.residual, Some(corr), basis)
                }
                Err(_) => (f, d.leakage_norm, phase_distance(&d.inside_block, target), None, basis),
            }
        }
        (3, 2) => {
            let basis = LogicalBasis::single();
            let d = logical_action(&u, &basis)?;
            let residual = phase_distance(&d.inside_block, target);
            let obj = SynthesisObjective::single_qubit(target.clone())?;
            let f = evaluate_objective(&seq, &obj)?.f;
            (f, d.leakage_norm, residual, None, basis)
        }
        (n, d) => {
            return Err(Error::Domain(format!("a {d}x{d} target cannot be checked on {n} spins")));
        }
    };
    let block_structure = sector_structure(&u, seq.n(), &basis, leakage)?;
    let checks = Checks {
        f: f < thresholds.max_f,
        leakage: leakage < thresholds.max_leakage,
        residual: residual < thresholds.max_residual,
        structure: block_structure.max_sector_leakage < thresholds.max_sector_leakage,
    };
    let pass = checks.f && checks.leakage && checks.residual && checks.structure;
    Ok(VerificationReport {
        target: target_name.to_string(),
        f,
        leakage,
        residual,
        block_structure,
        thresholds,
        checks,
        pass,
        corrections: corrections.as_ref().map(CorrectionsRecord::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants;
    use crate::synthesis::{canonical_cnot_pattern, synthesize_cnot, SynthesisOptions};

    fn sample() -> ScheduleFile {
        let seq =
            PulseSequence::serial(Layout::Line { n: 3 }, &[(0, 1, 0.1), (1, 2, 1.0 / 3.0), (0, 1, 1e-9)]).unwrap();
        ScheduleFile::from_sequence(&seq, Metadata { target: "rz:1".into(), ..Default::default() })
    }

    #[test]
    fn tau_strings_round_trip() {
        for tau in [0.0, 0.5, 0.1, 1.0 / 3.0, 0.589_101_120_218_099_4, 1e-9, 0.999_999_999_999_999_9] {
            let s = format_tau(tau);
            assert_eq!(parse_tau(&s).unwrap(), tau, "{s}");
            let digits = s.trim_start_matches(['0', '.']).chars().filter(char::is_ascii_digit).count();
            assert!(tau == 0.0 || digits >= 15, "{s}");
        }
        assert!(parse_tau("abc").is_err());
        assert!(parse_tau("inf").is_err());
    }

    #[test]
    fn file_round_trip_is_exact() {
        let file = sample();
        let text = file.to_json();
        let back = ScheduleFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        // hand-written strings are kept verbatim
        let edited = text.replace(&file.steps[0][0].tau, "0.10");
        assert_eq!(ScheduleFile::from_json(&edited).unwrap().steps[0][0].tau, "0.10");
    }

    #[test]
    fn load_rejects_bad_files() {
        let file = sample();
        let mut bad = file.clone();
        bad.steps[0][0].j = 2;
        assert!(ScheduleFile::from_json(&bad.to_json()).is_err());
        let mut bad = file.clone();
        bad.steps[0].push(Step { i: 1, j: 2, tau: "0.1".into() });
        assert!(ScheduleFile::from_json(&bad.to_json()).is_err());
        let mut bad = file.clone();
        bad.n_spins = 4;
        assert!(ScheduleFile::from_json(&bad.to_json()).is_err());
        assert!(ScheduleFile::from_json("{").is_err());
        assert!(ScheduleFile::from_json(&file.to_json().replace("\"0.1", "\"x0.1")).is_err());
    }

    #[test]
    fn zero_schedule_fails_cnot_with_f_five() {
        let times = vec![0.0; 19];
        let seq = PulseSequence::from_pattern(Mode::Serial, Layout::Line { n: 6 }, &canonical_cnot_pattern(), &times)
            .unwrap();
        let file = ScheduleFile::from_sequence(&seq, Metadata::default());
        let r = verify(&file, &invariants::cnot(), "cnot", Thresholds::default()).unwrap();
        assert!((r.f - 5.0).abs() < 1e-12);
        assert!(!r.pass && !r.checks.f && r.checks.leakage && r.checks.structure);
    }

    #[test]
    fn synthesized_cnot_verifies_and_perturbation_breaks_it() {
        let s = synthesize_cnot(&SynthesisOptions::default()).unwrap();
        let file = ScheduleFile::from_sequence(&s.sequence, Metadata::default());
        let r = verify(&file, &invariants::cnot(), "cnot", Thresholds::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.residual < 1e-8);
        assert_eq!((r.block_structure.sector_dim, r.block_structure.logical_dim), (9, 4));

        let mut bumped = file.clone();
        for (k, step) in bumped.steps.iter_mut().enumerate() {
            let t = parse_tau(&step[0].tau).unwrap() + if k % 2 == 0 { 1e-3 } else { -1e-3 };
            step[0].tau = format_tau(t);
        }
        let r = verify(&bumped, &invariants::cnot(), "cnot", Thresholds::default()).unwrap();
        assert!(!r.pass && !r.checks.residual && r.checks.structure);
    }

    #[test]
    fn one_qubit_schedule() {
        let theta = 1.0;
        let seq = PulseSequence::serial(Layout::Line { n: 3 }, &[(0, 1, theta / std::f64::consts::TAU)]).unwrap();
        let file = ScheduleFile::from_sequence(&seq, Metadata::default());
        let rz = linalg::su2_rotation([0.0, 0.0, 1.0], theta);
        let r = verify(&file, &rz, "rz:1", Thresholds::default()).unwrap();
        assert!(r.pass && r.residual < 1e-12);
        assert_eq!((r.block_structure.sector_dim, r.block_structure.logical_dim), (2, 2));
        assert!(verify(&file, &invariants::cnot(), "cnot", Thresholds::default()).is_err());
    }
}
