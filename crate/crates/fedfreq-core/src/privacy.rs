//! Gaussian differential privacy for hybrid-sketch aggregates.
//!
//! After secure summation, the simulated trusted aggregator divides each
//! round's table by `n` and adds independent `N(0, sigma^2)` noise to every
//! entry, with `sigma = c0 * sqrt(L * ln(1/delta)) / (n * epsilon)`. Hybrid
//! decoding then runs unchanged on the noisy tables (post-processing), and
//! the reported error bound adds a privacy term to the hybrid tail bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hashing::{mix_item, splitmix64, HashFamily, SignMode, ROLE_NOISE};
use crate::multiround::{hybrid_round_aggregates, RoundPlan};
use crate::scalar::Real;
use crate::sizing::tail_error;
use crate::sketch::{median_inplace, FrequencyEstimate, SketchMatrix, Strategy};

/// Privacy budget and noise calibration, valid in the `epsilon < 1`,
/// `delta < 0.1` regime the mechanism's analysis covers.
#[derive(Debug, Clone, Copy)]
pub struct PrivacyParams<R> {
    epsilon: R,
    delta: R,
    c0: R,
}

impl<R: Real> PrivacyParams<R> {
    /// Parameters with the classic Gaussian-mechanism constant `c0 = sqrt 2`.
    ///
    /// # Errors
    /// Returns [`Error::OutOfRegime`] unless `0 < epsilon < 1` and
    /// `0 < delta < 0.1`.
    pub fn new(epsilon: R, delta: R) -> Result<Self> {
        if !(epsilon > R::zero() && epsilon < R::one()) {
            return Err(Error::OutOfRegime("epsilon must be in (0, 1)"));
        }
        if !(delta > R::zero() && delta < R::cast(0.1)) {
            return Err(Error::OutOfRegime("delta must be in (0, 0.1)"));
        }
        Ok(Self {
            epsilon,
            delta,
            c0: R::cast(2.0).sqrt(),
        })
    }

    /// Overrides the calibration constant.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] unless `c0 > 0`.
    pub fn with_c0(mut self, c0: R) -> Result<Self> {
        if !(c0 > R::zero()) {
            return Err(Error::InvalidParameter("c0 must be positive"));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn epsilon(&self) -> R {
        self.epsilon
    }

    pub fn delta(&self) -> R {
        self.delta
    }

    pub fn c0(&self) -> R {
        self.c0
    }

    /// Per-entry noise scale `c0 * sqrt(L * ln(1/delta)) / (n * epsilon)`.
    /// Strictly decreasing in `n` and `epsilon`, increasing in `L`.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] when `rows` or
    /// `clients_per_round` is zero.
    pub fn calibrate_sigma(&self, rows: usize, clients_per_round: usize) -> Result<R> {
        if rows == 0 || clients_per_round == 0 {
            return Err(Error::InvalidParameter(
                "sigma needs positive rows and clients",
            ));
        }
        let l = R::cast(rows as f64);
        let n = R::cast(clients_per_round as f64);
        Ok(self.c0 * (l * (R::one() / self.delta).ln()).sqrt() / (n * self.epsilon))
    }
}

/// A round aggregate on the frequency scale (`counts / n`) with Gaussian
/// noise added to every entry.
#[derive(Debug, Clone)]
pub struct NoisySketch<R> {
    rows: usize,
    width: usize,
    entries: Vec<R>,
    clients: u64,
    seed: u64,
}

impl<R: Real> NoisySketch<R> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> R {
        self.entries[row * self.width + col]
    }

    pub fn clients(&self) -> u64 {
        self.clients
    }
}

/// Divides a round aggregate by its client count and adds independent
/// `N(0, sigma^2)` noise per entry. Noise streams are seeded per row, so
/// the result is deterministic in `rng_seed` and independent of traversal
/// order; `sigma = 0` reproduces the exact frequency-scale table.
///
/// # Errors
/// Returns [`Error::EmptySketch`] when no clients contributed and
/// [`Error::InvalidParameter`] for a negative or non-finite `sigma`.
pub fn privatize_round_sketch<R: Real>(
    sketch: &SketchMatrix,
    sigma: R,
    rng_seed: u64,
) -> Result<NoisySketch<R>> {
    if sketch.scale() == 0 {
        return Err(Error::EmptySketch);
    }
    if !(sigma >= R::zero() && sigma.is_finite()) {
        return Err(Error::InvalidParameter("sigma must be finite and >= 0"));
    }
    let n = R::cast(sketch.scale() as f64);
    let width = sketch.width();
    let mut entries = Vec::with_capacity(sketch.rows() * width);
    if sigma == R::zero() {
        entries.extend(sketch.counts().iter().map(|&c| R::cast(c as f64) / n));
    } else {
        let normal = Normal::new(0.0, sigma.as_f64())
            .map_err(|_| Error::InvalidParameter("sigma must be finite and >= 0"))?;
        for l in 0..sketch.rows() {
            let row_seed = splitmix64((rng_seed ^ ROLE_NOISE).wrapping_add(l as u64));
            let mut rng = ChaCha8Rng::seed_from_u64(row_seed);
            for k in 0..width {
                let noise = R::cast(normal.sample(&mut rng));
                entries.push(R::cast(sketch.entry(l, k) as f64) / n + noise);
            }
        }
    }
    Ok(NoisySketch {
        rows: sketch.rows(),
        width,
        entries,
        clients: sketch.scale(),
        seed: sketch.seed(),
    })
}

/// Hybrid decoding over noisy frequency-scale rounds: for each item the
/// median over rows of `(1/M) * sum_m sign(l, m, j) * table_m[l, h_l(j)]`.
///
/// # Errors
/// Mirrors the validation of the integer hybrid decoder.
pub fn decode_hybrid_noisy<R: Real>(
    rounds: &[NoisySketch<R>],
    family: &HashFamily,
) -> Result<FrequencyEstimate<R>> {
    if family.mode() != SignMode::PerRound {
        return Err(Error::ModeMismatch {
            expected: SignMode::PerRound,
            got: family.mode(),
        });
    }
    if rounds.len() != family.num_rounds() {
        return Err(Error::FamilyCount {
            expected: family.num_rounds(),
            got: rounds.len(),
        });
    }
    let rows = family.num_rows();
    let width = family.width();
    let mut clients = 0u64;
    for r in rounds {
        if r.rows != rows || r.width != width {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_width: width,
                rows: r.rows,
                width: r.width,
            });
        }
        if r.seed != family.master_seed() {
            return Err(Error::FamilyMismatch);
        }
        clients += r.clients;
    }
    let m = R::cast(rounds.len() as f64);
    let mut scratch = vec![R::zero(); rows];
    let mut values = Vec::with_capacity(family.domain_size());
    for j in 0..family.domain_size() {
        for (l, slot) in scratch.iter_mut().enumerate() {
            let col = family.bucket_unchecked(l, j);
            let mut acc = R::zero();
            for (mi, round) in rounds.iter().enumerate() {
                let sign = R::cast(family.sign_unchecked(l, mi, j) as f64);
                acc += sign * round.entry(l, col);
            }
            *slot = acc / m;
        }
        values.push(median_inplace(&mut scratch));
    }
    Ok(FrequencyEstimate::new(
        values,
        Strategy::Hybrid,
        rows,
        width,
        rounds.len(),
        family.master_seed(),
        clients,
    ))
}

/// Privatizes a sequence of round aggregates with noise streams keyed by
/// `(noise_seed, round, row)`, so rounds never share a stream.
///
/// # Errors
/// Propagates [`privatize_round_sketch`] failures.
pub fn privatize_rounds<R: Real>(
    tables: &[SketchMatrix],
    sigma: R,
    noise_seed: u64,
) -> Result<Vec<NoisySketch<R>>> {
    tables
        .iter()
        .enumerate()
        .map(|(m, t)| privatize_round_sketch(t, sigma, mix_item(noise_seed, m as u64)))
        .collect()
}

/// Runs the hybrid strategy with per-round Gaussian noise at scale `sigma`:
/// aggregate each round, privatize it, and decode the noisy rounds.
///
/// # Errors
/// Propagates aggregation, privatization, and decoding errors.
pub fn run_hybrid_private<R: Real>(
    plan: &RoundPlan,
    family: &HashFamily,
    sigma: R,
    noise_seed: u64,
) -> Result<FrequencyEstimate<R>> {
    let tables = hybrid_round_aggregates(plan, family)?;
    let noisy = privatize_rounds(&tables, sigma, noise_seed)?;
    decode_hybrid_noisy(&noisy, family)
}

/// Largest l2 change of the concatenated frequency-scale round sketches over
/// random neighboring plans (one client's item replaced), computed exactly
/// from the two items' buckets and signs. Validates the `sqrt(2L) / n`
/// sensitivity ceiling.
///
/// # Errors
/// Returns [`Error::InvalidParameter`] for zero trials.
pub fn l2_sensitivity_probe<R: Real>(
    plan: &RoundPlan,
    family: &HashFamily,
    trials: usize,
    probe_seed: u64,
) -> Result<R> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial"));
    }
    let d = family.domain_size();
    let n = plan.clients_per_round();
    let mut state = probe_seed;
    let mut next = move || {
        state = splitmix64(state);
        state
    };
    let mut max_sq = 0u64; // squared distance in count units, exact
    for _ in 0..trials {
        let m = (next() % plan.num_rounds() as u64) as usize;
        let t = (next() % n as u64) as usize;
        let old_item = plan.round_items(m)[t];
        let new_item = (next() % d as u64) as usize;
        let mut sq = 0u64;
        for l in 0..family.num_rows() {
            let (b_old, b_new) = (
                family.bucket_unchecked(l, old_item),
                family.bucket_unchecked(l, new_item),
            );
            let (s_old, s_new) = (
                family.sign_unchecked(l, m, old_item),
                family.sign_unchecked(l, m, new_item),
            );
            if b_old != b_new {
                sq += 2;
            } else if s_old != s_new {
                sq += 4;
            }
        }
        max_sq = max_sq.max(sq);
    }
    Ok(R::cast(max_sq as f64).sqrt() / R::cast(n as f64))
}

/// The two components of the private hybrid error bound.
#[derive(Debug, Clone, Copy)]
pub struct DpErrorBound<R> {
    /// `sqrt(sum_{i>W} (F*_i)^2 / W)`, the heterogeneity tail.
    pub tail_term: R,
    /// `sqrt(L * ln(1/delta)) / (n * sqrt(M) * epsilon)`; zero without
    /// privacy.
    pub dp_term: R,
    /// `2 * (tail_term + dp_term)`.
    pub total: R,
}

/// Error bound for a (possibly private) hybrid run: the heterogeneity tail
/// plus a privacy term, scaled by the bound constant 2. Pass `None` for a
/// noiseless run; the bound then reduces to the plain hybrid tail bound.
/// The row count stands in for `ln(d/p)` in the privacy term, matching how
/// rows are chosen.
///
/// # Errors
/// Propagates [`tail_error`]'s validation of the sorted input, and rejects
/// zero dimensions.
pub fn dp_error_bound<R: Real>(
    f_star: &[R],
    width: usize,
    rows: usize,
    num_rounds: usize,
    clients_per_round: usize,
    params: Option<&PrivacyParams<R>>,
) -> Result<DpErrorBound<R>> {
    if rows == 0 || num_rounds == 0 || clients_per_round == 0 {
        return Err(Error::InvalidParameter(
            "bound needs positive rows, rounds, and clients",
        ));
    }
    let tail_term = tail_error(f_star, width)?;
    let dp_term = match params {
        None => R::zero(),
        Some(p) => {
            let l = R::cast(rows as f64);
            let n = R::cast(clients_per_round as f64);
            let m = R::cast(num_rounds as f64);
            (l * (R::one() / p.delta()).ln()).sqrt() / (n * m.sqrt() * p.epsilon())
        }
    };
    let total = R::cast(2.0) * (tail_term + dp_term);
    Ok(DpErrorBound {
        tail_term,
        dp_term,
        total,
    })
}
