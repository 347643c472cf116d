//! Multi-round aggregation strategies: shared, fresh, and hybrid sketches.
//!
//! `M` rounds of `n` clients each produce one aggregate table per round. The
//! strategies differ only in how rounds share randomness:
//!
//! - **shared** reuses one hash family everywhere and decodes the summed
//!   table, so an `M`-round run is identical to one big single-round run;
//! - **fresh** gives every round its own family, decodes each round alone,
//!   and averages the `M` estimates;
//! - **hybrid** shares bucket hashes but draws new sign hashes per round,
//!   decoding as a median over rows of per-round-averaged estimators.
//!
//! The round-structure of the data is captured by [`RoundPlan`] and its
//! [`HeterogeneityVector`], which governs the hybrid error bound.

use crate::error::{Error, Result};
use crate::hashing::{HashFamily, SignMode};
use crate::scalar::Real;
use crate::sketch::{
    encode_accumulate, median_inplace, FrequencyEstimate, SketchMatrix, Strategy,
};

/// Assignment of `M * n` clients to `M` rounds of `n` single-item clients.
#[derive(Debug, Clone)]
pub struct RoundPlan {
    num_rounds: usize,
    clients_per_round: usize,
    domain_size: usize,
    items: Vec<Vec<usize>>,
}

impl RoundPlan {
    /// Validates that all rounds have equal size and all items are in `[d)`.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] for empty or ragged rounds and
    /// [`Error::IndexOutOfRange`] for an out-of-domain item.
    pub fn new(items: Vec<Vec<usize>>, domain_size: usize) -> Result<Self> {
        if items.is_empty() || items[0].is_empty() {
            return Err(Error::InvalidParameter(
                "a plan needs at least one round with at least one client",
            ));
        }
        let clients_per_round = items[0].len();
        for round in &items {
            if round.len() != clients_per_round {
                return Err(Error::InvalidParameter(
                    "all rounds must have the same number of clients",
                ));
            }
            for &j in round {
                if j >= domain_size {
                    return Err(Error::IndexOutOfRange {
                        what: "item",
                        index: j,
                        limit: domain_size,
                    });
                }
            }
        }
        Ok(Self {
            num_rounds: items.len(),
            clients_per_round,
            domain_size,
            items,
        })
    }

    /// Splits a flat item stream into `num_rounds` equal rounds.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] when the stream does not divide
    /// evenly, plus the validations of [`RoundPlan::new`].
    pub fn from_concatenated(
        stream: &[usize],
        num_rounds: usize,
        domain_size: usize,
    ) -> Result<Self> {
        if num_rounds == 0 || stream.is_empty() || stream.len() % num_rounds != 0 {
            return Err(Error::InvalidParameter(
                "stream length must be a positive multiple of the round count",
            ));
        }
        let n = stream.len() / num_rounds;
        let items = stream.chunks(n).map(|c| c.to_vec()).collect();
        Self::new(items, domain_size)
    }

    pub fn num_rounds(&self) -> usize {
        self.num_rounds
    }

    pub fn clients_per_round(&self) -> usize {
        self.clients_per_round
    }

    pub fn total_clients(&self) -> usize {
        self.num_rounds * self.clients_per_round
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn round_items(&self, round: usize) -> &[usize] {
        &self.items[round]
    }

    pub fn rounds(&self) -> &[Vec<usize>] {
        &self.items
    }

    /// All items in round order, as one single-round stream.
    pub fn concatenated(&self) -> Vec<usize> {
        self.items.iter().flatten().copied().collect()
    }

    /// Per-round integer counts, one length-`d` histogram per round.
    pub(crate) fn round_counts(&self) -> Vec<Vec<u64>> {
        self.items
            .iter()
            .map(|round| {
                let mut counts = vec![0u64; self.domain_size];
                for &j in round {
                    counts[j] += 1;
                }
                counts
            })
            .collect()
    }
}

/// The per-item heterogeneity `F_i = (1/M) * sqrt(sum_m (f_i^(m))^2)`.
///
/// `F_i <= f_i` always, with equality at `M = 1`; identical rounds give
/// `F_i = f_i / sqrt(M)`.
#[derive(Debug, Clone)]
pub struct HeterogeneityVector<R> {
    values: Vec<R>,
}

impl<R: Real> HeterogeneityVector<R> {
    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries sorted non-increasing (the `F*` view used by the bounds).
    pub fn sorted_desc(&self) -> Vec<R> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("heterogeneity is finite"));
        v
    }
}

/// Computes the heterogeneity vector of a plan from exact integer counts.
pub fn heterogeneity<R: Real>(plan: &RoundPlan) -> HeterogeneityVector<R> {
    let n = plan.clients_per_round() as u64;
    let m = plan.num_rounds() as u64;
    let mut sq = vec![0u64; plan.domain_size()];
    for counts in plan.round_counts() {
        for (acc, c) in sq.iter_mut().zip(counts) {
            *acc += c * c;
        }
    }
    let denom = R::cast((m * n) as f64);
    let values = sq
        .into_iter()
        .map(|s| R::cast(s as f64).sqrt() / denom)
        .collect();
    HeterogeneityVector { values }
}

fn check_family_shape(plan: &RoundPlan, family: &HashFamily) -> Result<()> {
    if family.domain_size() != plan.domain_size() {
        return Err(Error::InvalidParameter(
            "hash family and plan disagree on the domain size",
        ));
    }
    Ok(())
}

/// Per-round plaintext aggregates under shared randomness (signs taken at
/// round zero for every round).
///
/// # Errors
/// Returns [`Error::ModeMismatch`] unless `family` is in shared mode.
pub fn shared_round_aggregates(
    plan: &RoundPlan,
    family: &HashFamily,
) -> Result<Vec<SketchMatrix>> {
    if family.mode() != SignMode::Shared {
        return Err(Error::ModeMismatch {
            expected: SignMode::Shared,
            got: family.mode(),
        });
    }
    check_family_shape(plan, family)?;
    round_aggregates_with(plan, family, |_| 0)
}

/// Per-round plaintext aggregates under hybrid randomness (shared buckets,
/// round-`m` signs in round `m`).
///
/// # Errors
/// Returns [`Error::ModeMismatch`] unless `family` is in per-round mode, and
/// [`Error::InvalidParameter`] when the family was not built for exactly the
/// plan's round count.
pub fn hybrid_round_aggregates(
    plan: &RoundPlan,
    family: &HashFamily,
) -> Result<Vec<SketchMatrix>> {
    if family.mode() != SignMode::PerRound {
        return Err(Error::ModeMismatch {
            expected: SignMode::PerRound,
            got: family.mode(),
        });
    }
    if family.num_rounds() != plan.num_rounds() {
        return Err(Error::InvalidParameter(
            "hash family must be built for the plan's round count",
        ));
    }
    check_family_shape(plan, family)?;
    round_aggregates_with(plan, family, |m| m)
}

/// Per-round plaintext aggregates with one independent family per round.
///
/// # Errors
/// Returns [`Error::FamilyCount`] when the family list does not match the
/// plan's round count.
pub fn fresh_round_aggregates(
    plan: &RoundPlan,
    families: &[HashFamily],
) -> Result<Vec<SketchMatrix>> {
    if families.len() != plan.num_rounds() {
        return Err(Error::FamilyCount {
            expected: plan.num_rounds(),
            got: families.len(),
        });
    }
    let mut tables = Vec::with_capacity(plan.num_rounds());
    for (m, family) in families.iter().enumerate() {
        check_family_shape(plan, family)?;
        let mut table =
            SketchMatrix::zero(family.num_rows(), family.width(), family.master_seed());
        for &j in plan.round_items(m) {
            encode_accumulate(family, 0, j, &mut table)?;
        }
        tables.push(table);
    }
    Ok(tables)
}

fn round_aggregates_with(
    plan: &RoundPlan,
    family: &HashFamily,
    sign_round: impl Fn(usize) -> usize,
) -> Result<Vec<SketchMatrix>> {
    let mut tables = Vec::with_capacity(plan.num_rounds());
    for m in 0..plan.num_rounds() {
        let mut table =
            SketchMatrix::zero(family.num_rows(), family.width(), family.master_seed());
        for &j in plan.round_items(m) {
            encode_accumulate(family, sign_round(m), j, &mut table)?;
        }
        tables.push(table);
    }
    Ok(tables)
}

/// Decodes shared-strategy round aggregates: sums the tables and runs the
/// single-round decoder on the total, scaled by `M * n`.
///
/// # Errors
/// Propagates shape and family mismatches from aggregation and decoding.
pub fn decode_shared<R: Real>(
    tables: &[SketchMatrix],
    family: &HashFamily,
) -> Result<FrequencyEstimate<R>> {
    let total = crate::sketch::aggregate(tables)?;
    let decoded = crate::sketch::decode_single_round::<R>(&total, family)?;
    Ok(FrequencyEstimate::new(
        decoded.into_values(),
        Strategy::Shared,
        family.num_rows(),
        family.width(),
        tables.len(),
        family.master_seed(),
        total.scale(),
    ))
}

/// Decodes fresh-strategy round aggregates: each round through its own
/// single-round decoder, then the unweighted mean of the `M` estimates.
///
/// # Errors
/// Returns [`Error::FamilyCount`] on a table/family count mismatch and
/// propagates per-round decode errors.
pub fn decode_fresh<R: Real>(
    tables: &[SketchMatrix],
    families: &[HashFamily],
) -> Result<FrequencyEstimate<R>> {
    if tables.is_empty() || tables.len() != families.len() {
        return Err(Error::FamilyCount {
            expected: tables.len(),
            got: families.len(),
        });
    }
    let d = families[0].domain_size();
    let m = R::cast(tables.len() as f64);
    let mut acc = vec![R::zero(); d];
    let mut clients = 0u64;
    for (table, family) in tables.iter().zip(families) {
        let est = crate::sketch::decode_single_round::<R>(table, family)?;
        for (a, v) in acc.iter_mut().zip(est.values()) {
            *a += *v;
        }
        clients += table.scale();
    }
    for a in &mut acc {
        *a /= m;
    }
    Ok(FrequencyEstimate::new(
        acc,
        Strategy::Fresh,
        families[0].num_rows(),
        families[0].width(),
        tables.len(),
        families[0].master_seed(),
        clients,
    ))
}

/// Decodes hybrid-strategy round aggregates: for each item, the median over
/// rows of `(1/M) * sum_m sign(l, m, j) * counts_m[l, h_l(j)] / n`.
///
/// The inner sum is accumulated in exact integers and divided once.
///
/// # Errors
/// Returns [`Error::EmptySketch`] for an all-empty round set, and shape,
/// family, or mode mismatches as for the aggregate builders.
pub fn decode_hybrid<R: Real>(
    tables: &[SketchMatrix],
    family: &HashFamily,
) -> Result<FrequencyEstimate<R>> {
    if family.mode() != SignMode::PerRound {
        return Err(Error::ModeMismatch {
            expected: SignMode::PerRound,
            got: family.mode(),
        });
    }
    if tables.len() != family.num_rounds() {
        return Err(Error::FamilyCount {
            expected: family.num_rounds(),
            got: tables.len(),
        });
    }
    let rows = family.num_rows();
    let width = family.width();
    let mut clients = 0u64;
    for t in tables {
        if t.rows() != rows || t.width() != width {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_width: width,
                rows: t.rows(),
                width: t.width(),
            });
        }
        if t.seed() != family.master_seed() {
            return Err(Error::FamilyMismatch);
        }
        if t.scale() != tables[0].scale() {
            return Err(Error::InvalidParameter(
                "hybrid rounds must have equal client counts",
            ));
        }
        clients += t.scale();
    }
    let n = tables[0].scale();
    if n == 0 {
        return Err(Error::EmptySketch);
    }
    let denom = R::cast((tables.len() as u64 * n) as f64);
    let mut scratch = vec![R::zero(); rows];
    let mut values = Vec::with_capacity(family.domain_size());
    for j in 0..family.domain_size() {
        for (l, slot) in scratch.iter_mut().enumerate() {
            let col = family.bucket_unchecked(l, j);
            let mut signed_sum = 0i64;
            for (m, table) in tables.iter().enumerate() {
                signed_sum += family.sign_unchecked(l, m, j) * table.entry(l, col);
            }
            *slot = R::cast(signed_sum as f64) / denom;
        }
        values.push(median_inplace(&mut scratch));
    }
    Ok(FrequencyEstimate::new(
        values,
        Strategy::Hybrid,
        rows,
        width,
        tables.len(),
        family.master_seed(),
        clients,
    ))
}

/// Runs the shared strategy end to end on plaintext aggregates.
pub fn run_shared<R: Real>(plan: &RoundPlan, family: &HashFamily) -> Result<FrequencyEstimate<R>> {
    let tables = shared_round_aggregates(plan, family)?;
    decode_shared(&tables, family)
}

/// Runs the fresh strategy end to end on plaintext aggregates.
pub fn run_fresh<R: Real>(
    plan: &RoundPlan,
    families: &[HashFamily],
) -> Result<FrequencyEstimate<R>> {
    let tables = fresh_round_aggregates(plan, families)?;
    decode_fresh(&tables, families)
}

/// Runs the hybrid strategy end to end on plaintext aggregates.
pub fn run_hybrid<R: Real>(plan: &RoundPlan, family: &HashFamily) -> Result<FrequencyEstimate<R>> {
    let tables = hybrid_round_aggregates(plan, family)?;
    decode_hybrid(&tables, family)
}
