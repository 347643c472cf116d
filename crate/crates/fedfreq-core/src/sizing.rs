//! Sketch sizing: the tail functional, width formulas, and the two-phase
//! planner.
//!
//! The instance-dependent error scale of a width-`W` sketch is the tail
//! functional `E(W) = sqrt((1/W) * sum_{i>W} (f*_i)^2)` over the sorted
//! frequencies. Meeting a target `tau` takes width
//!
//! ```text
//! W = C * min( #{f_i >= tau} + (1/tau^2) * sum_{f_i < tau} f_i^2 ,  n )
//! ```
//!
//! and never more than the worst case `W = C * min(2/tau, n)`. When the true
//! frequencies are unknown, the two-phase planner sketches a pilot sample,
//! fits a power law to the top estimates, and evaluates the width formula
//! under the fitted model.

use crate::error::{Error, Result};
use crate::hashing::{HashFamily, SignMode};
use crate::multiround::RoundPlan;
use crate::scalar::Real;
use crate::securesum::{comm_cost_bits, GroupParams};
use crate::sketch::{decode_single_round, encode_accumulate, FrequencyEstimate, FrequencyVector, SketchMatrix};

/// Target accuracy: maximum `l_inf` error `tau`, failure probability `p`,
/// and the bound constant `C`.
#[derive(Debug, Clone, Copy)]
pub struct TargetSpec<R> {
    tau: R,
    p: R,
    c: R,
}

impl<R: Real> TargetSpec<R> {
    /// A target with the default bound constant `C = 2`.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] unless `0 < tau < 1` and
    /// `0 < p < 1`.
    pub fn new(tau: R, p: R) -> Result<Self> {
        if !(tau > R::zero() && tau < R::one()) {
            return Err(Error::InvalidParameter("tau must be in (0, 1)"));
        }
        if !(p > R::zero() && p < R::one()) {
            return Err(Error::InvalidParameter("p must be in (0, 1)"));
        }
        Ok(Self {
            tau,
            p,
            c: R::cast(2.0),
        })
    }

    /// Overrides the bound constant.
    ///
    /// # Errors
    /// Returns [`Error::InvalidParameter`] unless `c > 0`.
    pub fn with_constant(mut self, c: R) -> Result<Self> {
        if !(c > R::zero()) {
            return Err(Error::InvalidParameter("C must be positive"));
        }
        self.c = c;
        Ok(self)
    }

    pub fn tau(&self) -> R {
        self.tau
    }

    pub fn p(&self) -> R {
        self.p
    }

    pub fn constant(&self) -> R {
        self.c
    }

    /// Row count for a domain of size `d`: `ceil(ln(d / p))`, at least 1.
    pub fn rows_for_domain(&self, domain_size: usize) -> usize {
        let l = (R::cast(domain_size as f64) / self.p).ln().ceil();
        l.as_f64().max(1.0) as usize
    }
}

fn check_sorted_desc<R: Real>(sorted: &[R]) -> Result<()> {
    for w in sorted.windows(2) {
        match w[0].partial_cmp(&w[1]) {
            Some(std::cmp::Ordering::Less) | None => return Err(Error::Unsorted),
            _ => {}
        }
    }
    Ok(())
}

/// The tail functional `E(W) = sqrt((1/W) * sum_{i>W} (f*_i)^2)` on a sorted
/// non-increasing view. Monotone non-increasing in `W`, and at most `1/W`
/// for any frequency vector.
///
/// # Errors
/// Returns [`Error::Unsorted`] for an unsorted input and
/// [`Error::InvalidParameter`] for `W = 0`.
pub fn tail_error<R: Real>(sorted: &[R], width: usize) -> Result<R> {
    if width == 0 {
        return Err(Error::InvalidParameter("width must be at least 1"));
    }
    check_sorted_desc(sorted)?;
    if width >= sorted.len() {
        return Ok(R::zero());
    }
    let sq: R = sorted[width..].iter().map(|&f| f * f).sum();
    Ok((sq / R::cast(width as f64)).sqrt())
}

fn head_tail<R: Real>(freqs: &[R], tau: R) -> R {
    let mut head = R::zero();
    let mut tail = R::zero();
    for &f in freqs {
        if f >= tau {
            head += R::one();
        } else {
            tail += f * f;
        }
    }
    head + tail / (tau * tau)
}

fn width_from_value<R: Real>(value: R, spec: &TargetSpec<R>, clients: usize) -> usize {
    let capped = value.min(R::cast(clients as f64));
    let w = (spec.constant() * capped).ceil().as_f64();
    (w as usize).max(1)
}

/// Width sufficient for target `tau` on a known frequency vector:
/// `C * min(#{f_i >= tau} + (1/tau^2) * sum_{f_i < tau} f_i^2, n)`, rounded
/// up. The smallest width with `E(W) <= tau` lies in `[W/(2C), W]`.
pub fn oracle_width<R: Real>(
    freqs: &FrequencyVector<R>,
    spec: &TargetSpec<R>,
    clients: usize,
) -> usize {
    width_from_value(head_tail(freqs.values(), spec.tau()), spec, clients)
}

/// The distribution-free width ceiling `C * min(2/tau, n)`, rounded up.
pub fn worst_case_width<R: Real>(spec: &TargetSpec<R>, clients: usize) -> usize {
    width_from_value(R::cast(2.0) / spec.tau(), spec, clients)
}

/// Smallest width with `E(W) <= tau`, found by doubling then bisection.
/// This is the brute-force inverse of [`tail_error`], kept as the testing
/// oracle for the closed-form widths.
///
/// # Errors
/// Propagates [`tail_error`]'s validation errors.
pub fn min_feasible_width<R: Real>(sorted: &[R], tau: R) -> Result<usize> {
    check_sorted_desc(sorted)?;
    let feasible = |w: usize| tail_error(sorted, w).map(|e| e <= tau);
    let mut hi = 1usize;
    while !feasible(hi)? {
        hi *= 2;
    }
    let mut lo = hi / 2; // 0 when hi == 1; lo is always infeasible or 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A power law `g_i = beta * i^(-alpha)` fitted to sorted top estimates.
///
/// `i_star` is the largest index at which the model's cumulative mass stays
/// within a frequency vector's budget: `max{i : sum_{j<=i} beta*j^(-alpha)
/// <= 1}`, capped at the domain size (0 when even the first term exceeds 1).
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit<R> {
    pub alpha: R,
    pub beta: R,
    pub i_star: usize,
    pub k_top: usize,
    /// Sum of squared log-space residuals of the fitted points.
    pub residual: R,
}

fn compute_i_star<R: Real>(alpha: R, beta: R, domain_size: usize) -> usize {
    let mut cum = R::zero();
    let mut i_star = 0;
    for i in 1..=domain_size {
        let g = beta * R::cast(i as f64).powf(-alpha);
        if cum + g <= R::one() {
            cum += g;
            i_star = i;
        } else {
            break;
        }
    }
    i_star
}

/// Fits `log g_i = log beta - alpha * log i` to the top `k_top` estimates by
/// least squares, excluding exact zeros and clamping negative estimates to
/// the floor `1 / (2 * clients)`.
///
/// The returned `alpha` may be zero or negative for degenerate inputs; the
/// planner treats those as fit failures.
///
/// # Errors
/// Returns [`Error::Fit`] when fewer than two usable points remain and
/// [`Error::InvalidParameter`] for `k_top < 2`.
pub fn fit_power_law<R: Real>(
    estimates: &FrequencyEstimate<R>,
    k_top: usize,
) -> Result<PowerLawFit<R>> {
    if k_top < 2 {
        return Err(Error::InvalidParameter("k_top must be at least 2"));
    }
    if estimates.clients() == 0 {
        return Err(Error::Fit("estimate has no contributing clients"));
    }
    let floor = R::cast(1.0) / R::cast(2.0 * estimates.clients() as f64);
    let top = estimates.sorted_desc();
    let k = k_top.min(top.len());
    let mut xs = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for (idx, &v) in top[..k].iter().enumerate() {
        if v == R::zero() {
            continue;
        }
        let v = if v < R::zero() { floor } else { v };
        xs.push(R::cast((idx + 1) as f64).ln());
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two positive top estimates"));
    }
    let count = R::cast(xs.len() as f64);
    let x_mean = xs.iter().copied().sum::<R>() / count;
    let y_mean = ys.iter().copied().sum::<R>() / count;
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let alpha = -slope;
    let beta = intercept.exp();
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Fit("regression produced non-finite parameters"));
    }
    let mut residual = R::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        residual += r * r;
    }
    Ok(PowerLawFit {
        alpha,
        beta,
        i_star: compute_i_star(alpha, beta, estimates.domain_size()),
        k_top: k,
        residual,
    })
}

/// A sizing recommendation: sketch dimensions, the reference widths, and the
/// predicted per-client upload cost.
#[derive(Debug, Clone)]
pub struct SizingReport<R> {
    /// Recommended row count, `ceil(ln(d / p))`.
    pub rows: usize,
    /// Recommended width; never exceeds `w_worst`.
    pub width: usize,
    /// The distribution-free ceiling for the same target.
    pub w_worst: usize,
    /// The width formula on the true frequencies, when those are available.
    pub w_oracle: Option<usize>,
    /// `rows * width * ceil(log2 q)` for the production group.
    pub predicted_bits: u64,
    /// The pilot fit behind the recommendation, when one succeeded.
    pub fit: Option<PowerLawFit<R>>,
    /// Set when the fit failed or degenerated and `width` fell back to
    /// `w_worst`.
    pub fallback: bool,
}

/// Smallest alpha the planner accepts before declaring the fit degenerate.
const MIN_PLANNER_ALPHA: f64 = 0.05;

/// Runs the two-phase sizing method: sketch the pilot sample with a small
/// `L0 x W0` sketch, fit a power law to the top `k_top` decoded estimates,
/// and evaluate the width formula for `clients`-per-round production runs
/// under the fitted model `g_i = min(beta * i^(-alpha), 1)`, `i = 1..=d`,
/// clamping the recommendation to the worst-case width.
///
/// A failed or degenerate fit (non-finite parameters, `beta <= 0`, or
/// `alpha <= 0.05`) falls back to the worst-case width and sets the report's
/// `fallback` flag.
///
/// # Errors
/// Propagates pilot encoding and decoding errors; fit failures are reported
/// through the fallback flag instead.
pub fn two_phase_plan<R: Real>(
    pilot: &RoundPlan,
    spec: &TargetSpec<R>,
    pilot_dims: (usize, usize),
    k_top: usize,
    clients: usize,
    seed: u64,
) -> Result<SizingReport<R>> {
    let (l0, w0) = pilot_dims;
    let d = pilot.domain_size();
    let family = HashFamily::new(seed, l0, w0, 1, d, SignMode::Shared)?;
    let mut table = SketchMatrix::zero(l0, w0, seed);
    for &j in &pilot.concatenated() {
        encode_accumulate(&family, 0, j, &mut table)?;
    }
    let estimate = decode_single_round::<R>(&table, &family)?;

    let rows = spec.rows_for_domain(d);
    let w_worst = worst_case_width(spec, clients);
    let fit = match fit_power_law(&estimate, k_top) {
        Ok(f) => Some(f),
        Err(Error::Fit(_)) => None,
        Err(e) => return Err(e),
    };
    let usable = fit.as_ref().is_some_and(|f| {
        f.alpha.is_finite()
            && f.beta.is_finite()
            && f.beta > R::zero()
            && f.alpha > R::cast(MIN_PLANNER_ALPHA)
    });
    let (width, fallback) = if usable {
        let f = fit.as_ref().unwrap();
        let tau = spec.tau();
        let mut head = R::zero();
        let mut tail = R::zero();
        for i in 1..=d {
            let g = (f.beta * R::cast(i as f64).powf(-f.alpha)).min(R::one());
            if g >= tau {
                head += R::one();
            } else {
                tail += g * g;
            }
        }
        let value = head + tail / (tau * tau);
        (width_from_value(value, spec, clients).min(w_worst), false)
    } else {
        (w_worst, true)
    };

    let group = GroupParams::for_clients(clients.max(1), 1)?;
    Ok(SizingReport {
        rows,
        width,
        w_worst,
        w_oracle: None,
        predicted_bits: comm_cost_bits(rows, width, &group),
        fit,
        fallback,
    })
}
