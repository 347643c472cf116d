//! Seed-derived hash families for bucket and sign assignment.
//!
//! Every sketch draws its randomness from a [`HashFamily`]: per-row bucket
//! hashes `h_l: [d] -> [W]` and per-row sign hashes `s_l: [d] -> {+1, -1}`.
//! Bucket hashes never depend on the round index; sign hashes depend on the
//! round only when the family is built with [`SignMode::PerRound`]. All
//! outputs are pure functions of the master seed, so two families constructed
//! with equal seeds and parameters agree everywhere, across processes.

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

const ROLE_BUCKET: u64 = 0x2C69_7D17_B4B7_A6E1;
const ROLE_SIGN: u64 = 0x9B1A_615E_9C88_3A35;
const ROLE_FRESH: u64 = 0xC3A5_1796_24D8_EB09;
pub(crate) const ROLE_MASK: u64 = 0x7A0F_3D52_C9E4_1B87;
pub(crate) const ROLE_NOISE: u64 = 0x51D2_E8A4_0B6C_97F3;

/// 64-bit avalanche mixer (splitmix64 finalizer). Used for all seed
/// derivation so that nearby inputs produce unrelated outputs.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// Mixes an item id into a derived seed's stream.
#[inline]
pub(crate) fn mix_item(seed: u64, item: u64) -> u64 {
    splitmix64(seed ^ item.wrapping_mul(GOLDEN))
}

/// Whether sign hashes are reused across rounds or drawn fresh per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    /// One sign hash per row, identical in every round.
    Shared,
    /// An independent sign hash per (row, round) pair.
    PerRound,
}

/// Reproducible bucket and sign hashes for an `L x W` sketch over `[d]`.
#[derive(Debug, Clone)]
pub struct HashFamily {
    master_seed: u64,
    num_rows: usize,
    width: usize,
    num_rounds: usize,
    domain_size: usize,
    mode: SignMode,
    bucket_seeds: Vec<u64>,
    /// Row-major `num_rows x effective_rounds` sign seeds; a single column
    /// in [`SignMode::Shared`].
    sign_seeds: Vec<u64>,
}

impl HashFamily {
    /// Derives a family from a master seed.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] if any dimension is zero.
    pub fn new(
        master_seed: u64,
        num_rows: usize,
        width: usize,
        num_rounds: usize,
        domain_size: usize,
        mode: SignMode,
    ) -> Result<Self> {
        if num_rows == 0 || width == 0 || num_rounds == 0 || domain_size == 0 {
            return Err(Error::InvalidParameter(
                "rows, width, rounds, and domain size must all be positive",
            ));
        }
        let bucket_base = splitmix64(master_seed ^ ROLE_BUCKET);
        let bucket_seeds = (0..num_rows)
            .map(|l| splitmix64(bucket_base.wrapping_add(l as u64)))
            .collect();
        let effective_rounds = match mode {
            SignMode::Shared => 1,
            SignMode::PerRound => num_rounds,
        };
        let sign_base = splitmix64(master_seed ^ ROLE_SIGN);
        let mut sign_seeds = Vec::with_capacity(num_rows * effective_rounds);
        for l in 0..num_rows {
            let row_base = splitmix64(sign_base.wrapping_add(l as u64));
            for m in 0..effective_rounds {
                sign_seeds.push(splitmix64(row_base.wrapping_add(m as u64)));
            }
        }
        Ok(Self {
            master_seed,
            num_rows,
            width,
            num_rounds,
            domain_size,
            mode,
            bucket_seeds,
            sign_seeds,
        })
    }

    /// Derives `num_rounds` mutually independent single-round families, one
    /// per round, for the fresh-sketch strategy.
    pub fn fresh_set(
        master_seed: u64,
        num_rows: usize,
        width: usize,
        num_rounds: usize,
        domain_size: usize,
    ) -> Result<Vec<Self>> {
        (0..num_rounds)
            .map(|m| {
                let seed = splitmix64((master_seed ^ ROLE_FRESH).wrapping_add(m as u64));
                Self::new(seed, num_rows, width, 1, domain_size, SignMode::Shared)
            })
            .collect()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_rounds(&self) -> usize {
        self.num_rounds
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn mode(&self) -> SignMode {
        self.mode
    }

    /// Bucket of `item` in row `row`; identical for every round.
    ///
    /// # Errors
    /// Returns [`Error::IndexOutOfRange`] for `row >= L` or `item >= d`.
    pub fn bucket(&self, row: usize, item: usize) -> Result<usize> {
        self.check_row(row)?;
        self.check_item(item)?;
        Ok(self.bucket_unchecked(row, item))
    }

    /// Sign of `item` in row `row` during round `round`. Ignores `round`
    /// in [`SignMode::Shared`].
    ///
    /// # Errors
    /// Returns [`Error::IndexOutOfRange`] for any index outside the family's
    /// dimensions.
    pub fn sign(&self, row: usize, round: usize, item: usize) -> Result<i64> {
        self.check_row(row)?;
        if round >= self.num_rounds {
            return Err(Error::IndexOutOfRange {
                what: "round",
                index: round,
                limit: self.num_rounds,
            });
        }
        self.check_item(item)?;
        Ok(self.sign_unchecked(row, round, item))
    }

    #[inline]
    pub(crate) fn bucket_unchecked(&self, row: usize, item: usize) -> usize {
        debug_assert!(row < self.num_rows && item < self.domain_size);
        (mix_item(self.bucket_seeds[row], item as u64) % self.width as u64) as usize
    }

    #[inline]
    pub(crate) fn sign_unchecked(&self, row: usize, round: usize, item: usize) -> i64 {
        debug_assert!(row < self.num_rows && item < self.domain_size);
        let col = match self.mode {
            SignMode::Shared => 0,
            SignMode::PerRound => round,
        };
        let effective_rounds = self.sign_seeds.len() / self.num_rows;
        let seed = self.sign_seeds[row * effective_rounds + col];
        1 - 2 * ((mix_item(seed, item as u64) >> 63) as i64)
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row >= self.num_rows {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: row,
                limit: self.num_rows,
            });
        }
        Ok(())
    }

    fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.domain_size {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: item,
                limit: self.domain_size,
            });
        }
        Ok(())
    }
}
