//! Item streams for experiments: synthetic Zipf draws, file-based streams,
//! round-plan construction, and the exact frequency oracle every metric is
//! measured against.

use std::path::Path;

use fedfreq_core::{Frequencies, RoundPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Normalized law `f_i` proportional to `(i + 1)^(-a)` over item ids
/// `0..d` (ranks start at 1).
pub fn zipf_probs(d: usize, a: f64) -> Vec<f64> {
    let mut probs: Vec<f64> = (1..=d).map(|i| (i as f64).powf(-a)).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    probs
}

/// Draws `count` items i.i.d. from an arbitrary probability vector by
/// inverting the cumulative sums.
pub fn sample_items(probs: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cum = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cum.push(acc);
    }
    let top = probs.len() - 1;
    (0..count)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cum.partition_point(|&c| c < u).min(top)
        })
        .collect()
}

/// A plan of `rounds` rounds of `n` clients each, drawn i.i.d. Zipf(a).
pub fn zipf_plan(d: usize, a: f64, rounds: usize, n: usize, seed: u64) -> Result<RoundPlan> {
    let probs = zipf_probs(d, a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = sample_items(&probs, rounds * n, &mut rng);
    Ok(RoundPlan::from_concatenated(&items, rounds, d)?)
}

/// A homogeneous plan: one round of `n` Zipf(a) clients drawn once and
/// repeated verbatim, so every round's frequency vector is identical.
pub fn repeated_round_plan(
    d: usize,
    a: f64,
    rounds: usize,
    n: usize,
    seed: u64,
) -> Result<RoundPlan> {
    let probs = zipf_probs(d, a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let round = sample_items(&probs, n, &mut rng);
    Ok(RoundPlan::new(vec![round; rounds], d)?)
}

/// Reads an item stream: one nonnegative id per line, or `id,count` lines
/// expanded to `count` copies. Returns the stream and the domain size,
/// which is `1 + max id` unless `declared` overrides it.
///
/// # Errors
/// Malformed lines and ids at or above a declared domain report the
/// offending line number; an empty stream is an error.
pub fn load_items(path: &Path, declared: Option<usize>) -> Result<(Vec<usize>, usize)> {
    let text = std::fs::read_to_string(path)?;
    let fail = |line: usize, message: String| Error::Data {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut items = Vec::new();
    let mut max_id = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let (id, count) = match content.split_once(',') {
            Some((id, count)) => {
                let id: usize = id
                    .trim()
                    .parse()
                    .map_err(|e| fail(line, format!("bad item id: {e}")))?;
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|e| fail(line, format!("bad count: {e}")))?;
                (id, count)
            }
            None => {
                let id: usize = content
                    .parse()
                    .map_err(|e| fail(line, format!("bad item id: {e}")))?;
                (id, 1)
            }
        };
        if let Some(d) = declared {
            if id >= d {
                return Err(fail(line, format!("item {id} is outside the domain 0..{d}")));
            }
        }
        if count > 0 {
            max_id = max_id.max(id);
            items.extend(std::iter::repeat(id).take(count));
        }
    }
    if items.is_empty() {
        return Err(fail(0, "no items in file".into()));
    }
    Ok((items, declared.unwrap_or(max_id + 1)))
}

/// Splits a loaded stream into a plan of `rounds` equal rounds.
pub fn plan_from_stream(items: &[usize], rounds: usize, domain: usize) -> Result<RoundPlan> {
    Ok(RoundPlan::from_concatenated(items, rounds, domain)?)
}

/// Exact global and per-round frequency vectors of a plan. Every error
/// metric in the simulator is measured against this.
pub fn exact_oracle(plan: &RoundPlan) -> (Frequencies, Vec<Frequencies>) {
    let d = plan.domain_size();
    let mut global = vec![0u64; d];
    let mut per_round = Vec::with_capacity(plan.num_rounds());
    for m in 0..plan.num_rounds() {
        let mut counts = vec![0u64; d];
        for &j in plan.round_items(m) {
            counts[j] += 1;
            global[j] += 1;
        }
        per_round.push(Frequencies::from_counts(&counts).expect("round is non-empty"));
    }
    let global = Frequencies::from_counts(&global).expect("plan is non-empty");
    (global, per_round)
}
