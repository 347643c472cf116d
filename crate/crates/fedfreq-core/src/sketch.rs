//! Single-round count sketch: encoding, aggregation, and median decoding.
//!
//! A client holding item `j` contributes one `±1` per row, at column
//! `h_l(j)`, with sign `s_l(j)`. Aggregation is entrywise integer addition,
//! so the server-side table is exact regardless of order or grouping. The
//! decoder estimates each item's frequency as the median over rows of
//! `s_l(j) * counts[l, h_l(j)] / n`.

use std::io::{Read as IoRead, Write as IoWrite};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::scalar::Real;

const BINARY_MAGIC: &[u8; 4] = b"FFS1";

/// An `L x W` table of signed counts at client-count scale.
///
/// `scale` records how many single-client encodings were summed in; division
/// by it happens only at decode time, keeping every aggregation step exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchMatrix {
    rows: usize,
    width: usize,
    counts: Vec<i64>,
    scale: u64,
    seed: u64,
}

impl SketchMatrix {
    /// An all-zero table tied to a hash-family seed.
    pub fn zero(rows: usize, width: usize, seed: u64) -> Self {
        Self {
            rows,
            width,
            counts: vec![0; rows * width],
            scale: 0,
            seed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of single-client encodings summed into this table.
    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Master seed of the hash family the table was encoded under.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        self.counts[row * self.width + col]
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub(crate) fn from_parts(
        rows: usize,
        width: usize,
        counts: Vec<i64>,
        scale: u64,
        seed: u64,
    ) -> Self {
        debug_assert_eq!(counts.len(), rows * width);
        Self {
            rows,
            width,
            counts,
            scale,
            seed,
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.width != other.width {
            return Err(Error::ShapeMismatch {
                expected_rows: self.rows,
                expected_width: self.width,
                rows: other.rows,
                width: other.width,
            });
        }
        if self.seed != other.seed {
            return Err(Error::FamilyMismatch);
        }
        Ok(())
    }

    /// Adds `other` entrywise; scales add too.
    ///
    /// # Errors
    /// Returns [`Error::ShapeMismatch`] or [`Error::FamilyMismatch`] if the
    /// tables do not belong to the same sketch.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.scale += other.scale;
        Ok(())
    }

    /// Writes the documented binary layout: magic `FFS1`, then little-endian
    /// `u32 rows`, `u32 width`, `u64 seed`, `u64 scale`, then `rows*width`
    /// little-endian `i64` counts in row-major order.
    pub fn write_binary<W: IoWrite>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.rows as u32).to_le_bytes())?;
        out.write_all(&(self.width as u32).to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.scale.to_le_bytes())?;
        for c in &self.counts {
            out.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the layout written by [`SketchMatrix::write_binary`].
    ///
    /// # Errors
    /// Returns [`Error::Format`] on a bad magic or truncated table, and
    /// propagates I/O errors.
    pub fn read_binary<R: IoRead>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic, not a sketch file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let rows = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b4)?;
        let width = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let scale = u64::from_le_bytes(b8);
        if rows == 0 || width == 0 {
            return Err(Error::Format("zero dimension in header".into()));
        }
        let mut counts = Vec::with_capacity(rows * width);
        for _ in 0..rows * width {
            input.read_exact(&mut b8)?;
            counts.push(i64::from_le_bytes(b8));
        }
        Ok(Self {
            rows,
            width,
            counts,
            scale,
            seed,
        })
    }

    /// Writes the CSV debug form: a `rows,width,seed,scale` header pair of
    /// lines, then one comma-separated line of counts per row.
    pub fn write_csv<W: IoWrite>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "rows,width,seed,scale")?;
        writeln!(out, "{},{},{},{}", self.rows, self.width, self.seed, self.scale)?;
        for row in self.counts.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV debug form written by [`SketchMatrix::write_csv`].
    ///
    /// # Errors
    /// Returns [`Error::Format`] for a malformed header, a bad count, or a
    /// row of the wrong length.
    pub fn read_csv<R: IoRead>(input: &mut R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines();
        match lines.next() {
            Some("rows,width,seed,scale") => {}
            _ => return Err(Error::Format("missing csv header".into())),
        }
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("missing header values".into()))?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format("header needs 4 values".into()));
        }
        let parse_u64 = |s: &str, what: &str| {
            u64::from_str(s.trim()).map_err(|_| Error::Format(format!("bad {what}: {s:?}")))
        };
        let rows = parse_u64(fields[0], "rows")? as usize;
        let width = parse_u64(fields[1], "width")? as usize;
        let seed = parse_u64(fields[2], "seed")?;
        let scale = parse_u64(fields[3], "scale")?;
        if rows == 0 || width == 0 {
            return Err(Error::Format("zero dimension in header".into()));
        }
        let mut counts = Vec::with_capacity(rows * width);
        for (idx, line) in lines.enumerate() {
            if idx >= rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Format("trailing data after count rows".into()));
            }
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != width {
                return Err(Error::Format(format!(
                    "row {idx} has {} entries, expected {width}",
                    vals.len()
                )));
            }
            for v in vals {
                let c = i64::from_str(v.trim())
                    .map_err(|_| Error::Format(format!("bad count: {v:?}")))?;
                counts.push(c);
            }
        }
        if counts.len() != rows * width {
            return Err(Error::Format(format!(
                "expected {rows} count rows, got {}",
                counts.len() / width
            )));
        }
        Ok(Self {
            rows,
            width,
            counts,
            scale,
            seed,
        })
    }
}

/// Encodes one client's item as its own single-entry-per-row table.
///
/// # Errors
/// Returns [`Error::IndexOutOfRange`] if `item` or `round` is outside the
/// family's dimensions.
pub fn encode_item(family: &HashFamily, round: usize, item: usize) -> Result<SketchMatrix> {
    let mut sketch = SketchMatrix::zero(family.num_rows(), family.width(), family.master_seed());
    encode_accumulate(family, round, item, &mut sketch)?;
    Ok(sketch)
}

/// Adds one client's encoding directly into an existing table, avoiding a
/// per-client allocation on the aggregation path.
///
/// # Errors
/// Returns [`Error::IndexOutOfRange`] for a bad `item` or `round`, and
/// [`Error::ShapeMismatch`] / [`Error::FamilyMismatch`] if `sketch` does not
/// match the family.
pub fn encode_accumulate(
    family: &HashFamily,
    round: usize,
    item: usize,
    sketch: &mut SketchMatrix,
) -> Result<()> {
    if item >= family.domain_size() {
        return Err(Error::IndexOutOfRange {
            what: "item",
            index: item,
            limit: family.domain_size(),
        });
    }
    if round >= family.num_rounds() {
        return Err(Error::IndexOutOfRange {
            what: "round",
            index: round,
            limit: family.num_rounds(),
        });
    }
    if sketch.rows != family.num_rows() || sketch.width != family.width() {
        return Err(Error::ShapeMismatch {
            expected_rows: family.num_rows(),
            expected_width: family.width(),
            rows: sketch.rows,
            width: sketch.width,
        });
    }
    if sketch.seed != family.master_seed() {
        return Err(Error::FamilyMismatch);
    }
    let width = sketch.width;
    for l in 0..sketch.rows {
        let col = family.bucket_unchecked(l, item);
        sketch.counts[l * width + col] += family.sign_unchecked(l, round, item);
    }
    sketch.scale += 1;
    Ok(())
}

/// Entrywise sum of client (or shard) tables.
///
/// # Errors
/// Returns [`Error::InvalidParameter`] on an empty input and shape or family
/// errors when the tables disagree.
pub fn aggregate<'a, I>(sketches: I) -> Result<SketchMatrix>
where
    I: IntoIterator<Item = &'a SketchMatrix>,
{
    let mut iter = sketches.into_iter();
    let first = iter
        .next()
        .ok_or(Error::InvalidParameter("cannot aggregate zero sketches"))?;
    let mut total = first.clone();
    for s in iter {
        total.merge(s)?;
    }
    Ok(total)
}

/// Which multi-round strategy produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Shared,
    Fresh,
    Hybrid,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Shared => "shared",
            Strategy::Fresh => "fresh",
            Strategy::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(Strategy::Shared),
            "fresh" => Ok(Strategy::Fresh),
            "hybrid" => Ok(Strategy::Hybrid),
            _ => Err(Error::InvalidParameter(
                "strategy must be shared, fresh, or hybrid",
            )),
        }
    }
}

/// A decoded length-`d` vector of frequency estimates plus the parameters
/// that produced it.
#[derive(Debug, Clone)]
pub struct FrequencyEstimate<R> {
    values: Vec<R>,
    domain_size: usize,
    strategy: Strategy,
    rows: usize,
    width: usize,
    num_rounds: usize,
    seed: u64,
    clients: u64,
}

impl<R: Real> FrequencyEstimate<R> {
    pub(crate) fn new(
        values: Vec<R>,
        strategy: Strategy,
        rows: usize,
        width: usize,
        num_rounds: usize,
        seed: u64,
        clients: u64,
    ) -> Self {
        let domain_size = values.len();
        Self {
            values,
            domain_size,
            strategy,
            rows,
            width,
            num_rounds,
            seed,
            clients,
        }
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn into_values(self) -> Vec<R> {
        self.values
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_rounds(&self) -> usize {
        self.num_rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of clients that contributed across all rounds.
    pub fn clients(&self) -> u64 {
        self.clients
    }

    /// Estimates sorted non-increasing, for tail and fit computations.
    pub fn sorted_desc(&self) -> Vec<R> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("estimates are finite"));
        v
    }
}

/// An exact frequency vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector<R> {
    values: Vec<R>,
}

impl<R: Real> FrequencyVector<R> {
    /// Validates nonnegativity and normalization (within `sqrt(epsilon)` of
    /// one, which scales with the scalar's precision).
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] on a negative entry, a non-finite
    /// entry, or a sum away from one.
    pub fn new(values: Vec<R>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("frequency vector cannot be empty"));
        }
        let mut sum = R::zero();
        for &v in &values {
            if !v.is_finite() || v < R::zero() {
                return Err(Error::InvalidParameter(
                    "frequencies must be finite and nonnegative",
                ));
            }
            sum += v;
        }
        if (sum - R::one()).abs() > R::epsilon().sqrt() {
            return Err(Error::InvalidParameter("frequencies must sum to one"));
        }
        Ok(Self { values })
    }

    /// Builds the empirical vector `counts / total`.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] when `counts` is empty or sums
    /// to zero.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if counts.is_empty() || total == 0 {
            return Err(Error::InvalidParameter(
                "counts must be nonempty with a positive total",
            ));
        }
        let t = R::cast(total as f64);
        Ok(Self {
            values: counts.iter().map(|&c| R::cast(c as f64) / t).collect(),
        })
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries sorted non-increasing (the `f*` view used by every bound).
    pub fn sorted_desc(&self) -> Vec<R> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.partial_cmp(a).expect("frequencies are finite"));
        v
    }
}

/// Median of a mutable scratch slice; the mean of the two middle order
/// statistics when the length is even.
pub(crate) fn median_inplace<R: Real>(scratch: &mut [R]) -> R {
    debug_assert!(!scratch.is_empty());
    scratch.sort_by(|a, b| a.partial_cmp(b).expect("row estimates are finite"));
    let mid = scratch.len() / 2;
    if scratch.len() % 2 == 1 {
        scratch[mid]
    } else {
        (scratch[mid - 1] + scratch[mid]) / R::cast(2.0)
    }
}

/// Decodes a single-round aggregate: for each item the median over rows of
/// `sign(l, j) * counts[l, h_l(j)] / n`, with signs taken at round zero.
///
/// # Errors
/// Returns [`Error::EmptySketch`] when no clients contributed, and shape or
/// family errors when `sketch` does not match `family`.
pub fn decode_single_round<R: Real>(
    sketch: &SketchMatrix,
    family: &HashFamily,
) -> Result<FrequencyEstimate<R>> {
    if sketch.scale == 0 {
        return Err(Error::EmptySketch);
    }
    if sketch.rows != family.num_rows() || sketch.width != family.width() {
        return Err(Error::ShapeMismatch {
            expected_rows: family.num_rows(),
            expected_width: family.width(),
            rows: sketch.rows,
            width: sketch.width,
        });
    }
    if sketch.seed != family.master_seed() {
        return Err(Error::FamilyMismatch);
    }
    let n = R::cast(sketch.scale as f64);
    let rows = sketch.rows;
    let mut scratch = vec![R::zero(); rows];
    let mut values = Vec::with_capacity(family.domain_size());
    for j in 0..family.domain_size() {
        for (l, slot) in scratch.iter_mut().enumerate() {
            let col = family.bucket_unchecked(l, j);
            let signed = family.sign_unchecked(l, 0, j) * sketch.entry(l, col);
            *slot = R::cast(signed as f64) / n;
        }
        values.push(median_inplace(&mut scratch));
    }
    Ok(FrequencyEstimate::new(
        values,
        Strategy::Shared,
        rows,
        sketch.width,
        1,
        family.master_seed(),
        sketch.scale,
    ))
}
