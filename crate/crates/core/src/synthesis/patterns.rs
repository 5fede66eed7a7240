//! Serial nearest-neighbour pulse patterns on the six-spin line.
//!
//! Two patterns that differ only by swapping adjacent commuting pulses
//! reach the same unitaries, so enumeration works on a normal form. A
//! pattern is *reduced* when no pulse can be merged with an equal one, and
//! no intra-block pulse can be commuted to either end (where it would only
//! add a one-qubit gate).

use std::collections::BTreeSet;

use super::sequence::Pattern;

pub type Pair = (usize, usize);

/// Nearest-neighbour pairs of the six-spin line.
pub const LINE6_PAIRS: [Pair; 5] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)];

/// The only pair coupling block A = (0,1,2) to block B = (3,4,5).
pub const BRIDGE: Pair = (2, 3);

fn commute(a: Pair, b: Pair) -> bool {
    a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1
}

/// Left-right reflection of the line: site `k` goes to `5 - k`.
pub fn mirror_pair(p: Pair) -> Pair {
    (5 - p.1, 5 - p.0)
}

/// Reverses time order and reflects every pair.
pub fn mirror_pattern(pattern: &Pattern) -> Pattern {
    pattern.iter().rev().map(|s| s.iter().map(|&p| mirror_pair(p)).collect()).collect()
}

pub fn is_mirror_symmetric(pattern: &Pattern) -> bool {
    let norm = |p: &Pattern| -> Pattern {
        p.iter()
            .map(|s| {
                let mut s: Vec<Pair> = s.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
                s.sort_unstable();
                s
            })
            .collect()
    };
    norm(pattern) == norm(&mirror_pattern(pattern))
}

/// Whether the serial word is reduced (see module docs).
pub fn is_reduced(word: &[Pair]) -> bool {
    for (k, &x) in word.iter().enumerate() {
        if x != BRIDGE && (word[..k].iter().all(|&y| commute(x, y)) || word[k + 1..].iter().all(|&y| commute(x, y))) {
            return false;
        }
        if let Some(m) = word[k + 1..].iter().position(|&y| y == x) {
            if word[k + 1..k + 1 + m].iter().all(|&y| commute(x, y)) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest word equivalent to `word` under commutation.
pub fn normal_form(word: &[Pair]) -> Vec<Pair> {
    let mut rest = word.to_vec();
    let mut out = Vec::with_capacity(word.len());
    while !rest.is_empty() {
        let pick = (0..rest.len())
            .filter(|&k| rest[..k].iter().all(|&y| commute(rest[k], y)))
            .min_by_key(|&k| rest[k])
            .expect("first letter is always movable");
        out.push(rest.remove(pick));
    }
    out
}

fn to_pattern(word: &[Pair]) -> Pattern {
    word.iter().map(|&p| vec![p]).collect()
}

fn push_unique(word: Vec<Pair>, seen: &mut BTreeSet<Vec<Pair>>, out: &mut Vec<Pattern>) {
    if is_reduced(&word) && seen.insert(normal_form(&word)) {
        out.push(to_pattern(&word));
    }
}

/// All reduced serial nearest-neighbour patterns of exactly `len` pulses,
/// one representative per commutation class, in lexicographic order of the
/// representative.
pub fn reduced_patterns(len: usize) -> Vec<Pattern> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    let mut word = Vec::with_capacity(len);
    fn rec(len: usize, word: &mut Vec<Pair>, seen: &mut BTreeSet<Vec<Pair>>, out: &mut Vec<Pattern>) {
        if word.len() == len {
            push_unique(word.clone(), seen, out);
            return;
        }
        for p in LINE6_PAIRS {
            if word.last() == Some(&p) {
                continue;
            }
            // a reduced word starts and ends with the bridge
            if (word.is_empty() || word.len() + 1 == len) && p != BRIDGE {
                continue;
            }
            word.push(p);
            rec(len, word, seen, out);
            word.pop();
        }
    }
    rec(len, &mut word, &mut seen, &mut out);
    out
}

/// Reduced patterns of `len` pulses with step `k` and step `len - 1 - k`
/// acting on mirrored pairs.
pub fn mirror_symmetric_patterns(len: usize) -> Vec<Pattern> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    let half = len / 2;
    fn rec(len: usize, half: usize, word: &mut Vec<Pair>, seen: &mut BTreeSet<Vec<Pair>>, out: &mut Vec<Pattern>) {
        if word.len() == half {
            let mut full = word.clone();
            if len % 2 == 1 {
                // the centre must be its own mirror image
                full.push(BRIDGE);
            }
            full.extend(word.iter().rev().map(|&p| mirror_pair(p)));
            if full.windows(2).all(|w| w[0] != w[1]) {
                push_unique(full, seen, out);
            }
            return;
        }
        for p in LINE6_PAIRS {
            if word.last() == Some(&p) || (word.is_empty() && p != BRIDGE) {
                continue;
            }
            word.push(p);
            rec(len, half, word, seen, out);
            word.pop();
        }
    }
    rec(len, half, &mut Vec::with_capacity(half), &mut seen, &mut out);
    out
}

/// Reduced patterns of `len` pulses that read the same backwards.
pub fn palindromic_patterns(len: usize) -> Vec<Pattern> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    let half = len / 2;
    fn rec(len: usize, half: usize, word: &mut Vec<Pair>, seen: &mut BTreeSet<Vec<Pair>>, out: &mut Vec<Pattern>) {
        if word.len() == half {
            let centres: &[Pair] = if len % 2 == 1 { &LINE6_PAIRS } else { &[] };
            let mut fulls = Vec::new();
            if centres.is_empty() {
                fulls.push(word.iter().chain(word.iter().rev()).copied().collect::<Vec<_>>());
            }
            for &c in centres {
                fulls.push(word.iter().copied().chain([c]).chain(word.iter().rev().copied()).collect());
            }
            for full in fulls {
                if full.windows(2).all(|w| w[0] != w[1]) {
                    push_unique(full, seen, out);
                }
            }
            return;
        }
        for p in LINE6_PAIRS {
            if word.last() == Some(&p) || (word.is_empty() && p != BRIDGE) {
                continue;
            }
            word.push(p);
            rec(len, half, word, seen, out);
            word.pop();
        }
    }
    rec(len, half, &mut Vec::with_capacity(half), &mut seen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_reduced_patterns() {
        assert_eq!(reduced_patterns(1), vec![vec![vec![BRIDGE]]]);
        // two bridges with nothing between them would merge
        assert!(reduced_patterns(2).is_empty());
        let three = reduced_patterns(3);
        assert_eq!(three, vec![to_pattern(&[(2, 3), (1, 2), (2, 3)]), to_pattern(&[(2, 3), (3, 4), (2, 3)])]);
    }

    #[test]
    fn reduction_rules() {
        assert!(!is_reduced(&[(2, 3), (0, 1), (2, 3)]));
        assert!(!is_reduced(&[(2, 3), (1, 2), (4, 5), (1, 2), (2, 3)]));
        assert!(is_reduced(&[(2, 3), (1, 2), (3, 4), (2, 3)]));
        assert_eq!(normal_form(&[(3, 4), (1, 2)]), vec![(1, 2), (3, 4)]);
    }

    #[test]
    fn mirror_patterns_are_symmetric_and_reduced() {
        for len in [5, 7, 9] {
            let pats = mirror_symmetric_patterns(len);
            assert!(!pats.is_empty());
            for p in &pats {
                assert_eq!(p.len(), len);
                assert!(is_mirror_symmetric(p));
                let w: Vec<Pair> = p.iter().map(|s| s[0]).collect();
                assert!(is_reduced(&w));
            }
        }
    }

    #[test]
    fn palindromes() {
        assert_eq!(palindromic_patterns(1), vec![vec![vec![BRIDGE]]]);
        assert_eq!(palindromic_patterns(19).len(), 733);
        for p in palindromic_patterns(11) {
            let w: Vec<Pair> = p.iter().map(|s| s[0]).collect();
            assert!(w.iter().eq(w.iter().rev()));
            assert!(is_reduced(&w));
        }
    }

    #[test]
    fn mirror_of_pair() {
        assert_eq!(mirror_pair((0, 1)), (4, 5));
        assert_eq!(mirror_pair((2, 3)), (2, 3));
        assert_eq!(mirror_pattern(&to_pattern(&[(0, 1), (1, 2)])), to_pattern(&[(3, 4), (4, 5)]));
    }
}
