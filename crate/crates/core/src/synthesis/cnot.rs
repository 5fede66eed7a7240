use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{logical_action, LogicalBasis};
use crate::error::{Error, Result};
use crate::invariants::{self, extract_local_corrections, LocalCorrections};
use crate::linalg::{self, phase_distance, Operator};
use crate::optimize::{levenberg_marquardt, LocalOptions};

use super::objective::{Equivalence, Evaluator, SynthesisObjective};
use super::patterns::{self, Pair, BRIDGE};
use super::search::{minimize_multistart, Method, MultistartOptions, OptimizationReport};
use super::sequence::{canonical_tau, sequence_unitary, Layout, Mode, Pattern, PulseSequence};

/// Serial patterns up to this length are enumerated exhaustively.
pub const EXHAUSTIVE_LEN: usize = 9;

/// Entrywise accuracy quoted for the 19-pulse circuit.
pub const REFERENCE_ACCURACY: f64 = 6e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub mode: Mode,
    /// Serial: pulses. Parallel: clock cycles.
    pub max_steps: usize,
    /// Restarts per pattern.
    pub restarts: usize,
    pub seed: u64,
    pub method: Method,
    /// Also require the gate on the two-block singlet branch.
    pub subsystem: bool,
    /// Upper bound on the number of patterns tried.
    pub max_patterns: usize,
    /// Drop the `(0, 1)` coupling from 1D parallel cycles.
    pub skip_first_pair: bool,
    pub polish: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Serial,
            max_steps: 19,
            restarts: 200,
            seed: 42,
            method: Method::LevenbergMarquardt,
            subsystem: false,
            max_patterns: 500,
            skip_first_pair: true,
            polish: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CnotSynthesis {
    /// Report for the best pattern; `f_min_distribution` and `restarts_run`
    /// cover every pattern tried.
    pub report: OptimizationReport,
    pub sequence: PulseSequence,
    pub corrections: Option<LocalCorrections>,
    pub patterns_tried: usize,
    /// Best `f` per pattern tried, in the order tried.
    pub pattern_f_min: Vec<(Pattern, f64)>,
}

/// Nearest-neighbour 19-pulse layout producing cNOT. Bridge pulses `(2,3)`
/// are the only couplings between the blocks. The word reads the same
/// backwards.
pub fn canonical_cnot_pattern() -> Pattern {
    const STEPS: [Pair; 19] = [
        (2, 3),
        (3, 4),
        (4, 5),
        (3, 4),
        (2, 3),
        (1, 2),
        (0, 1),
        (1, 2),
        (2, 3),
        (1, 2),
        (2, 3),
        (1, 2),
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (3, 4),
        (2, 3),
    ];
    STEPS.iter().map(|&p| vec![p]).collect()
}

pub use patterns::{mirror_pattern, mirror_symmetric_patterns};

/// A random reduced serial pattern with `len` pulses, or `None` after a
/// bounded number of rejected draws.
///
/// Drawn as bridge pulses separated by segments; each segment holds an
/// alternating word on block A and one on block B.
fn random_reduced_pattern(len: usize, rng: &mut ChaCha8Rng) -> Option<Pattern> {
    if len < 3 {
        return (len == 1).then(|| vec![vec![BRIDGE]]);
    }
    for _ in 0..1000 {
        let bridges = rng.random_range(2..=len.div_ceil(2));
        let slots = 2 * (bridges - 1);
        let mut lengths = vec![0usize; slots];
        for _ in 0..len - bridges {
            lengths[rng.random_range(0..slots)] += 1;
        }
        let mut word = vec![BRIDGE];
        for seg in lengths.chunks(2) {
            for (block, &n) in seg.iter().enumerate() {
                let (inner, outer) = if block == 0 { ((1, 2), (0, 1)) } else { ((3, 4), (4, 5)) };
                let first_inner = rng.random_bool(0.5);
                for k in 0..n {
                    word.push(if (k % 2 == 0) == first_inner { inner } else { outer });
                }
            }
            word.push(BRIDGE);
        }
        if word.windows(2).all(|w| w[0] != w[1]) && patterns::is_reduced(&word) {
            return Some(word.iter().map(|&p| vec![p]).collect());
        }
    }
    None
}

/// Serial patterns in the order they are tried: the canonical layout, then
/// every reduced pattern up to [`EXHAUSTIVE_LEN`] pulses, then symmetric
/// patterns (mirror images and palindromes) from the longest down, then random
/// reduced patterns.
fn serial_patterns(opts: &SynthesisOptions) -> Vec<Pattern> {
    let mut out: Vec<Pattern> = Vec::new();
    let canonical = canonical_cnot_pattern();
    if canonical.len() <= opts.max_steps {
        out.push(canonical);
    }
    let push = |p: Pattern, out: &mut Vec<Pattern>| {
        if out.len() < opts.max_patterns && !out.contains(&p) {
            out.push(p);
        }
    };
    for len in 1..=opts.max_steps.min(EXHAUSTIVE_LEN) {
        for p in patterns::reduced_patterns(len) {
            push(p, &mut out);
        }
    }
    for len in (EXHAUSTIVE_LEN + 1..=opts.max_steps).rev() {
        for p in mirror_symmetric_patterns(len).into_iter().chain(patterns::palindromic_patterns(len)) {
            push(p, &mut out);
        }
    }
    if opts.max_steps > EXHAUSTIVE_LEN {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(u64::MAX);
        let mut misses = 0;
        while out.len() < opts.max_patterns && misses < 1000 {
            let len = rng.random_range(EXHAUSTIVE_LEN + 1..=opts.max_steps);
            match random_reduced_pattern(len, &mut rng) {
                Some(p) if !out.contains(&p) => out.push(p),
                _ => misses += 1,
            }
        }
    }
    out.truncate(opts.max_patterns);
    out
}

fn parallel_patterns(opts: &SynthesisOptions) -> Result<(Layout, Vec<Pattern>)> {
    let (layout, pairs): (Layout, Vec<Pair>) = match opts.mode {
        Mode::Parallel1d => {
            let layout = Layout::Line { n: 6 };
            let pairs = layout.pairs().into_iter().filter(|&p| !(opts.skip_first_pair && p == (0, 1))).collect();
            (layout, pairs)
        }
        Mode::Parallel2d => {
            let layout = Layout::Grid { rows: 2, cols: 3 };
            (layout, layout.pairs())
        }
        Mode::Serial => unreachable!("serial handled separately"),
    };
    let pats = (1..=opts.max_steps).map(|c| vec![pairs.clone(); c]).take(opts.max_patterns).collect();
    Ok((layout, pats))
}

/// Searches for a pulse sequence equal to cNOT up to one-qubit gates.
pub fn synthesize_cnot(opts: &SynthesisOptions) -> Result<CnotSynthesis> {
    synthesize_two_qubit(&invariants::cnot(), opts)
}

/// Searches for a six-spin pulse sequence equal to `target` up to one-qubit
/// gates.
///
/// Patterns are tried in a fixed order with `opts.restarts` seeded restarts
/// each; the search stops at the first success. A failed search is not an
/// error: the returned report has `success = false` and records every
/// restart's final `f`.
pub fn synthesize_two_qubit(target: &Operator, opts: &SynthesisOptions) -> Result<CnotSynthesis> {
    if opts.max_steps == 0 {
        return Err(Error::Domain("max_steps must be at least 1".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::Domain("restarts must be at least 1".into()));
    }
    let started = Instant::now();
    let mut obj = SynthesisObjective::two_qubit(target.clone(), Equivalence::Local)?;
    if opts.subsystem {
        obj = obj.with_subsystem();
    }
    let (layout, pats) = match opts.mode {
        Mode::Serial => (Layout::Line { n: 6 }, serial_patterns(opts)),
        _ => parallel_patterns(opts)?,
    };
    if pats.is_empty() {
        return Err(Error::NoSolution(format!("no admissible pattern with at most {} steps", opts.max_steps)));
    }
    let ms = MultistartOptions { restarts: opts.restarts, seed: opts.seed, method: opts.method, ..Default::default() };
    let mut best: Option<OptimizationReport> = None;
    let mut all_f = Vec::new();
    let mut pattern_f_min = Vec::new();
    let (mut iterations, mut evaluations) = (0, 0);
    for pattern in &pats {
        let rep = minimize_multistart(&obj, pattern, &ms)?;
        all_f.extend_from_slice(&rep.f_min_distribution);
        pattern_f_min.push((pattern.clone(), rep.f_min()));
        iterations += rep.iterations;
        evaluations += rep.evaluations;
        let better =
            best.as_ref().is_none_or(|b| (rep.success && !b.success) || (rep.success == b.success && rep.f < b.f));
        let done = rep.success;
        if better {
            best = Some(rep);
        }
        if done {
            break;
        }
    }
    let mut report = best.expect("at least one pattern");
    let mut sequence = PulseSequence::from_pattern(opts.mode, layout, &report.pattern, &report.best_times)?;
    let mut corrections = None;
    if report.success {
        let (seq, corr) = if opts.polish {
            polish_solution(&obj, &sequence)?
        } else {
            let corr = corrections_for(&sequence, target)?;
            (sequence.clone(), corr)
        };
        let e = Evaluator::new(&obj, &seq.pattern())?.evaluate(&seq.times());
        report.best_times = seq.times();
        report.f = e.f;
        report.mismatch = e.mismatch;
        report.leakage = e.leakage;
        report.success = e.f < ms.success_f && e.leakage < ms.success_leakage;
        report.correction_residual = Some(corr.residual);
        sequence = seq;
        corrections = Some(corr);
    }
    report.f_min_distribution = all_f;
    report.restarts_run = report.f_min_distribution.len();
    report.iterations = iterations;
    report.evaluations = evaluations;
    report.wall_time = started.elapsed();
    Ok(CnotSynthesis { report, sequence, corrections, patterns_tried: pattern_f_min.len(), pattern_f_min })
}

/// Logical 4x4 action of a six-spin sequence, computed from the full 64-dim unitary.
pub fn logical_gate(seq: &PulseSequence) -> Result<(Operator, f64)> {
    let u = sequence_unitary(seq)?;
    let d = logical_action(&u, &LogicalBasis::pair())?;
    Ok((d.inside_block, d.leakage_norm))
}

/// One-qubit corrections turning the logical action of `seq` into `target`.
/// The residual is measured on the brute-force 64-dim product.
pub fn corrections_for(seq: &PulseSequence, target: &Operator) -> Result<LocalCorrections> {
    let (w, _) = logical_gate(seq)?;
    let mut corr = extract_local_corrections(&linalg::polar_unitary(&w), target)?;
    corr.residual = phase_distance(&corr.apply(&w), target);
    Ok(corr)
}

fn lm_refine(eval: &Evaluator, times: &[f64]) -> Vec<f64> {
    let opts = LocalOptions { max_iterations: 200, f_target: 1e-30, gradient_tol: 0.0, step_tol: 1e-17 };
    let r = levenberg_marquardt(|x| eval.residuals_and_jacobian(x), times, &opts);
    if r.f <= eval.evaluate(times).f {
        r.x
    } else {
        times.to_vec()
    }
}

/// Drives a local-invariant solution to an exact one.
///
/// Continues the invariant minimization, extracts one-qubit corrections
/// `(A1 ⊗ A2) W (B1 ⊗ B2) ≈ cNOT`, then minimizes the entrywise mismatch of
/// `W` against `(A1 ⊗ A2)^† cNOT (B1 ⊗ B2)^†`.
pub fn polish_solution(obj: &SynthesisObjective, seq: &PulseSequence) -> Result<(PulseSequence, LocalCorrections)> {
    let pattern = seq.pattern();
    let local = Evaluator::new(obj, &pattern)?;
    let mut times = lm_refine(&local, &seq.times());
    let corr = corrections_for(&PulseSequence::from_pattern(seq.mode, seq.layout, &pattern, &times)?, &obj.target)?;
    if obj.branches.len() == 1 {
        let target = obj.target.clone();
        let local_target =
            linalg::kron(&corr.a1, &corr.a2).adjoint() * &target * linalg::kron(&corr.b1, &corr.b2).adjoint();
        let exact_obj = SynthesisObjective::two_qubit(linalg::polar_unitary(&local_target), Equivalence::Exact)?
            .with_leakage_weight(obj.leakage_weight)?;
        let exact = Evaluator::new(&exact_obj, &pattern)?;
        let refined = lm_refine(&exact, &times);
        let candidate = PulseSequence::from_pattern(seq.mode, seq.layout, &pattern, &refined)?;
        if let Ok(c) = corrections_for(&candidate, &obj.target) {
            if c.residual < corr.residual {
                times = refined;
            }
        }
    }
    for t in &mut times {
        *t = canonical_tau(*t);
    }
    let polished = PulseSequence::from_pattern(seq.mode, seq.layout, &pattern, &times)?;
    let corr = corrections_for(&polished, &obj.target)?;
    Ok((polished, corr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pattern_is_reduced_nearest_neighbour() {
        let p = canonical_cnot_pattern();
        assert_eq!(p.len(), 19);
        let w: Vec<Pair> = p.iter().map(|s| s[0]).collect();
        assert!(patterns::is_reduced(&w));
        let line = Layout::Line { n: 6 };
        assert!(w.iter().all(|&(i, j)| line.allows(i, j)));
    }

    #[test]
    fn two_pulses_cannot_make_cnot() {
        let opts = SynthesisOptions { max_steps: 2, restarts: 50, ..Default::default() };
        let s = synthesize_cnot(&opts).unwrap();
        assert!(!s.report.success);
        assert!(s.report.f_min() > 0.1);
        assert!(s.corrections.is_none());
    }

    #[test]
    fn serial_pattern_order() {
        let opts = SynthesisOptions { max_steps: 5, ..Default::default() };
        let pats = serial_patterns(&opts);
        assert!(pats.iter().all(|p| p.len() <= 5));
        let mut lens: Vec<usize> = pats.iter().map(Vec::len).collect();
        let sorted = {
            let mut s = lens.clone();
            s.sort_unstable();
            s
        };
        assert_eq!(lens, sorted);
        lens.dedup();
        assert_eq!(lens, vec![1, 3, 4, 5]);
    }

    #[test]
    fn random_patterns_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [10, 13, 19] {
            let p = random_reduced_pattern(len, &mut rng).unwrap();
            assert_eq!(p.len(), len);
            let w: Vec<Pair> = p.iter().map(|s| s[0]).collect();
            assert!(patterns::is_reduced(&w));
        }
    }

    #[test]
    fn nineteen_pulses_make_cnot() {
        let s = synthesize_cnot(&SynthesisOptions::default()).unwrap();
        assert!(s.report.success);
        assert_eq!(s.report.pattern, canonical_cnot_pattern());
        let corr = s.corrections.unwrap();
        assert!(corr.residual < 1e-8, "{}", corr.residual);
        let (w, leak) = logical_gate(&s.sequence).unwrap();
        assert!(leak < 1e-8);
        assert!(phase_distance(&corr.apply(&w), &invariants::cnot()) < 1e-8);
    }

    #[test]
    fn seventeen_pulses_suffice() {
        let w: [Pair; 17] = [
            (2, 3),
            (1, 2),
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (3, 4),
            (2, 3),
            (3, 4),
            (4, 5),
            (3, 4),
            (2, 3),
            (1, 2),
            (0, 1),
            (1, 2),
            (2, 3),
        ];
        let pattern: Pattern = w.iter().map(|&p| vec![p]).collect();
        let obj = SynthesisObjective::cnot();
        let rep =
            minimize_multistart(&obj, &pattern, &MultistartOptions { restarts: 64, seed: 30, ..Default::default() })
                .unwrap();
        assert!(rep.success, "f {}", rep.f);
        let seq = PulseSequence::from_pattern(Mode::Serial, Layout::Line { n: 6 }, &pattern, &rep.best_times).unwrap();
        let (_, corr) = polish_solution(&obj, &seq).unwrap();
        assert!(corr.residual < 1e-8, "{}", corr.residual);
    }

    #[test]
    fn complementary_times_also_solve() {
        let s = synthesize_cnot(&SynthesisOptions::default()).unwrap();
        let obj = SynthesisObjective::cnot();
        let eval = Evaluator::new(&obj, &s.report.pattern).unwrap();
        let flipped: Vec<f64> = s.report.best_times.iter().map(|t| 1.0 - t).collect();
        let (a, b) = (eval.evaluate(&s.report.best_times), eval.evaluate(&flipped));
        assert!((a.f - b.f).abs() < 1e-14 && (a.leakage - b.leakage).abs() < 1e-12);
    }

    #[test]
    fn mirrored_steps_share_gradient_at_zero() {
        let obj = SynthesisObjective::cnot();
        for p in mirror_symmetric_patterns(7).into_iter().take(20) {
            let (_, g) = Evaluator::new(&obj, &p).unwrap().value_and_gradient(&[0.0; 7]);
            for k in 0..7 {
                assert!((g[k] - g[6 - k]).abs() < 1e-10, "{p:?}: {g:?}");
            }
        }
    }

    #[test]
    fn cz_shares_the_layout() {
        let s = synthesize_two_qubit(&invariants::cz(), &SynthesisOptions::default()).unwrap();
        assert!(s.report.success);
        assert!(corrections_for(&s.sequence, &invariants::cz()).unwrap().residual < 1e-8);
    }

    #[test]
    fn bad_options() {
        assert!(synthesize_cnot(&SynthesisOptions { max_steps: 0, ..Default::default() }).is_err());
        assert!(synthesize_cnot(&SynthesisOptions { restarts: 0, ..Default::default() }).is_err());
    }
}
