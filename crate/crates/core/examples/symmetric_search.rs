//! Multi-start search over every symmetric serial pattern of one length.
//!
//!     cargo run --release --example symmetric_search -- [LEN] [RESTARTS] [palindrome|mirror]
//!
//! Defaults: 19 pulses, 20 restarts, palindromes. Pattern `k` uses seed `k`.

use exchange_only::synthesis::patterns::{mirror_symmetric_patterns, palindromic_patterns};
use exchange_only::synthesis::{minimize_multistart, MultistartOptions, SynthesisObjective};
use rayon::prelude::*;

fn main() {
    let mut args = std::env::args().skip(1);
    let len: usize = args.next().map_or(19, |s| s.parse().expect("LEN"));
    let restarts: usize = args.next().map_or(20, |s| s.parse().expect("RESTARTS"));
    let family = args.next().unwrap_or_else(|| "palindrome".into());
    let pats = match family.as_str() {
        "palindrome" => palindromic_patterns(len),
        "mirror" => mirror_symmetric_patterns(len),
        other => panic!("unknown family {other}"),
    };
    eprintln!("{} {family} patterns of {len} pulses", pats.len());
    let obj = SynthesisObjective::cnot();
    let mut results: Vec<(f64, usize)> = pats
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let opts = MultistartOptions { restarts, seed: k as u64, batch: restarts, ..Default::default() };
            let rep = minimize_multistart(&obj, p, &opts).expect("valid pattern");
            if rep.success {
                let pairs: Vec<_> = p.iter().map(|s| s[0]).collect();
                println!("HIT {k} f {:.3e} {pairs:?}\n  times {:?}", rep.f, rep.best_times);
            }
            (rep.f, k)
        })
        .collect();
    results.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(f, k) in results.iter().take(5) {
        let pairs: Vec<_> = pats[k].iter().map(|s| s[0]).collect();
        println!("best {f:.3e} {pairs:?}");
    }
}
