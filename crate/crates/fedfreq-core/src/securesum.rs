//! Simulated secure summation over a power-of-two group.
//!
//! Each client adds a zero-sum additive mask to its sketch before upload, so
//! any single uploaded message is uniform on the group and only the modular
//! sum of all messages carries information. Masks follow the pairwise-share
//! structure of practical secure aggregation: adjacent clients on a ring
//! share a pad, and each client adds its clockwise pad and subtracts its
//! counter-clockwise one, so the masks telescope to zero by construction.
//! The aggregate is therefore bit-exact, and the group's bit width is the
//! per-entry communication cost.

use crate::error::{Error, Result};
use crate::hashing::{mix_item, splitmix64, ROLE_MASK};
use crate::sketch::SketchMatrix;

/// Modulus and bit width of the summation group, sized so that `n` clients
/// with entries in `[-v_max, v_max]` can never wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupParams {
    modulus: u64,
    bits: u32,
    max_clients: usize,
    max_entry: u64,
}

impl GroupParams {
    /// Smallest power-of-two group safe for `max_clients` clients whose
    /// entries are bounded by `max_entry` in absolute value (1 for plain
    /// sketch encodings).
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] when the bound is zero or needs
    /// more than 62 bits.
    pub fn for_clients(max_clients: usize, max_entry: u64) -> Result<Self> {
        if max_clients == 0 || max_entry == 0 {
            return Err(Error::InvalidParameter(
                "group needs positive client count and entry bound",
            ));
        }
        let bound = (max_clients as u128) * (max_entry as u128) * 2 + 2;
        if bound > (1u128 << 62) {
            return Err(Error::InvalidParameter("group bound exceeds 62 bits"));
        }
        let modulus = (bound as u64).next_power_of_two();
        Ok(Self {
            modulus,
            bits: modulus.trailing_zeros(),
            max_clients,
            max_entry,
        })
    }

    /// A group of exactly `bits` bits, validated against the wrap-around
    /// rule for `max_clients` and `max_entry`.
    ///
    /// # Errors
    /// Returns [`Error::GroupTooSmall`] when `2^bits` cannot hold the sums.
    pub fn with_bits(bits: u32, max_clients: usize, max_entry: u64) -> Result<Self> {
        if bits == 0 || bits > 62 {
            return Err(Error::InvalidParameter("group bits must be in 1..=62"));
        }
        let modulus = 1u64 << bits;
        let bound = (max_clients as u128) * (max_entry as u128) * 2 + 2;
        if (modulus as u128) < bound {
            return Err(Error::GroupTooSmall {
                bits,
                clients: max_clients,
                v_max: max_entry,
            });
        }
        Ok(Self {
            modulus,
            bits,
            max_clients,
            max_entry,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Bits per transmitted entry, `ceil(log2 q)`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn max_clients(&self) -> usize {
        self.max_clients
    }

    pub fn max_entry(&self) -> u64 {
        self.max_entry
    }

    #[inline]
    fn mask_of(&self) -> u64 {
        self.modulus - 1
    }

    /// Signed value to group residue. Powers of two make the two's
    /// complement wrap exactly the `mod q` embedding.
    #[inline]
    fn encode(&self, v: i64) -> u64 {
        (v as u64) & self.mask_of()
    }

    /// Group residue to the centered representative in `(-q/2, q/2]`.
    #[inline]
    fn decode_centered(&self, r: u64) -> i64 {
        if r <= self.modulus / 2 {
            r as i64
        } else {
            r as i64 - self.modulus as i64
        }
    }
}

/// One client's sketch after masking: residues mod `q`, plus the identity
/// needed to verify the round is complete at aggregation time.
#[derive(Debug, Clone)]
pub struct MaskedMessage {
    rows: usize,
    width: usize,
    entries: Vec<u64>,
    client: usize,
    ring: usize,
    round: usize,
    seed: u64,
}

impl MaskedMessage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn client(&self) -> usize {
        self.client
    }

    /// Number of clients in the masking ring. Pads only cancel when the
    /// aggregator receives exactly this many messages.
    pub fn ring(&self) -> usize {
        self.ring
    }

    pub fn round(&self) -> usize {
        self.round
    }
}

/// Pad stream shared by ring neighbors `(t, t+1 mod n)`.
fn pad_seed(mask_seed: u64, round: usize, pair: usize) -> u64 {
    let base = splitmix64((mask_seed ^ ROLE_MASK).wrapping_add(round as u64));
    splitmix64(base.wrapping_add(pair as u64))
}

/// Masks a full round of client sketches with zero-sum pads.
///
/// Client `t` adds pad `t` and subtracts pad `t-1 mod n`, entry by entry, so
/// the masks cancel over the round while each individual mask stays uniform
/// on the group.
///
/// # Errors
/// Returns [`Error::Protocol`] for an empty or oversized round,
/// [`Error::ShapeMismatch`] / [`Error::FamilyMismatch`] for inconsistent
/// sketches, and [`Error::GroupOverflow`] when an entry exceeds the bound
/// the group was sized for.
pub fn mask_clients(
    messages: &[SketchMatrix],
    params: &GroupParams,
    mask_seed: u64,
    round: usize,
) -> Result<Vec<MaskedMessage>> {
    let n = messages.len();
    if n == 0 {
        return Err(Error::Protocol("round has no clients".into()));
    }
    if n > params.max_clients() {
        return Err(Error::Protocol(format!(
            "round has {n} clients but the group was sized for {}",
            params.max_clients()
        )));
    }
    let rows = messages[0].rows();
    let width = messages[0].width();
    let seed = messages[0].seed();
    let entries_len = rows * width;
    let group_mask = params.mask_of();
    let mut out = Vec::with_capacity(n);
    for (t, msg) in messages.iter().enumerate() {
        if msg.rows() != rows || msg.width() != width {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_width: width,
                rows: msg.rows(),
                width: msg.width(),
            });
        }
        if msg.seed() != seed {
            return Err(Error::FamilyMismatch);
        }
        let own = pad_seed(mask_seed, round, t);
        let prev = pad_seed(mask_seed, round, (t + n - 1) % n);
        let mut entries = Vec::with_capacity(entries_len);
        for (e, &v) in msg.counts().iter().enumerate() {
            if v.unsigned_abs() > params.max_entry() {
                return Err(Error::GroupOverflow {
                    value: v,
                    v_max: params.max_entry(),
                });
            }
            let pad_own = mix_item(own, e as u64) & group_mask;
            let pad_prev = mix_item(prev, e as u64) & group_mask;
            let masked = params
                .encode(v)
                .wrapping_add(pad_own)
                .wrapping_sub(pad_prev)
                & group_mask;
            entries.push(masked);
        }
        out.push(MaskedMessage {
            rows,
            width,
            entries,
            client: t,
            ring: n,
            round,
            seed,
        });
    }
    Ok(out)
}

/// Modular sum of one complete masked round, re-centered into signed counts.
/// Equals the plaintext aggregate of the unmasked sketches bit-exactly.
///
/// # Errors
/// Returns [`Error::Protocol`] when the set is empty, has duplicate or
/// missing client ids, or mixes rounds, plus shape and family mismatches.
pub fn secure_aggregate(masked: &[MaskedMessage], params: &GroupParams) -> Result<SketchMatrix> {
    if masked.is_empty() {
        return Err(Error::Protocol("no masked messages".into()));
    }
    let rows = masked[0].rows;
    let width = masked[0].width;
    let ring = masked[0].ring;
    let round = masked[0].round;
    let seed = masked[0].seed;
    if masked.len() != ring {
        return Err(Error::Protocol(format!(
            "round is incomplete: {} of {ring} masked messages",
            masked.len()
        )));
    }
    let mut seen = vec![false; ring];
    for msg in masked {
        if msg.rows != rows || msg.width != width {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_width: width,
                rows: msg.rows,
                width: msg.width,
            });
        }
        if msg.seed != seed {
            return Err(Error::FamilyMismatch);
        }
        if msg.round != round || msg.ring != ring {
            return Err(Error::Protocol("messages from different rounds".into()));
        }
        if msg.client >= ring || seen[msg.client] {
            return Err(Error::Protocol(format!(
                "client ids must cover 0..{ring} exactly once (got {} twice or out of range)",
                msg.client
            )));
        }
        seen[msg.client] = true;
    }
    let n = ring;
    let group_mask = params.mask_of();
    let mut sums = vec![0u64; rows * width];
    for msg in masked {
        for (acc, &e) in sums.iter_mut().zip(&msg.entries) {
            *acc = acc.wrapping_add(e) & group_mask;
        }
    }
    let counts: Vec<i64> = sums.into_iter().map(|r| params.decode_centered(r)).collect();
    Ok(SketchMatrix::from_parts(rows, width, counts, n as u64, seed))
}

/// Per-client upload cost in bits: `L * W * ceil(log2 q)`.
pub fn comm_cost_bits(rows: usize, width: usize, params: &GroupParams) -> u64 {
    rows as u64 * width as u64 * params.bits() as u64
}

/// Cost of the trivial one-hot protocol at the same group: `d * ceil(log2 q)`.
/// Reported alongside sketch costs for comparison.
pub fn one_hot_cost_bits(domain_size: usize, params: &GroupParams) -> u64 {
    domain_size as u64 * params.bits() as u64
}
