//! End-to-end experiment execution: build the plan, push every round
//! through (optionally masked) aggregation, decode with the configured
//! strategy, optionally add noise, and score against the exact oracle.

use std::collections::HashMap;
use std::time::Instant;

use fedfreq_core::{
    comm_cost_bits, decode_fresh, decode_hybrid, decode_hybrid_noisy, decode_shared,
    dp_error_bound, encode_accumulate, encode_item, heterogeneity, mask_clients, oracle_width,
    privatize_rounds, secure_aggregate, two_phase_plan, worst_case_width, Estimate, GroupParams,
    HashFamily, PrivacyParams, RoundPlan, SignMode, SketchMatrix, Strategy, TargetSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Dataset, ExperimentConfig, SizingMode};
use crate::data::{exact_oracle, load_items, plan_from_stream, zipf_plan};
use crate::error::{Error, Result};
use crate::metrics::{items_over, linf, MetricsRow};

/// The decoded estimate behind one metrics row, kept for optional dumping.
#[derive(Debug, Clone)]
pub struct CellEstimate {
    pub tau_target: f64,
    pub estimate: Estimate,
}

/// Everything a run produces; writing files is the caller's business.
#[derive(Debug)]
pub struct RunResult {
    pub metrics: Vec<MetricsRow>,
    pub estimates: Vec<CellEstimate>,
    pub exact: Vec<f64>,
    /// Human-readable notes, e.g. a width exceeding the domain.
    pub warnings: Vec<String>,
}

fn build_plan(cfg: &ExperimentConfig) -> Result<RoundPlan> {
    match &cfg.dataset {
        Dataset::Zipf { exponent } => {
            let d = cfg.domain.expect("validated");
            zipf_plan(d, *exponent, cfg.rounds, cfg.clients_per_round, cfg.seed)
        }
        Dataset::File { path } => {
            let (items, d) = load_items(path, cfg.domain)?;
            let need = cfg.rounds * cfg.clients_per_round;
            if items.len() != need {
                return Err(Error::Validation(format!(
                    "file holds {} items but rounds * clients_per_round = {need}",
                    items.len()
                )));
            }
            plan_from_stream(&items, cfg.rounds, d)
        }
    }
}

/// Per-round aggregates for one strategy, over the masked path or in
/// plaintext. Both paths produce bit-identical tables.
fn round_tables(
    plan: &RoundPlan,
    families: &[&HashFamily],
    per_round_sign: bool,
    group: &GroupParams,
    secsum: bool,
    mask_seed: u64,
) -> Result<Vec<SketchMatrix>> {
    let mut tables = Vec::with_capacity(plan.num_rounds());
    for m in 0..plan.num_rounds() {
        let family = families[m.min(families.len() - 1)];
        let sign_round = if per_round_sign { m } else { 0 };
        let table = if secsum {
            let messages: Vec<SketchMatrix> = plan
                .round_items(m)
                .iter()
                .map(|&j| encode_item(family, sign_round, j))
                .collect::<fedfreq_core::Result<_>>()?;
            secure_aggregate(&mask_clients(&messages, group, mask_seed, m)?, group)?
        } else {
            let mut t = SketchMatrix::zero(family.num_rows(), family.width(), family.master_seed());
            for &j in plan.round_items(m) {
                encode_accumulate(family, sign_round, j, &mut t)?;
            }
            t
        };
        tables.push(table);
    }
    Ok(tables)
}

struct Cell {
    estimate: Estimate,
    sigma: f64,
    bits: u64,
}

/// Decodes the configured strategy at one width, reusing nothing.
fn run_cell(
    cfg: &ExperimentConfig,
    plan: &RoundPlan,
    rows: usize,
    width: usize,
    group: &GroupParams,
) -> Result<Cell> {
    let d = plan.domain_size();
    let m_rounds = plan.num_rounds();
    let estimate;
    let mut sigma = 0.0;
    match cfg.strategy {
        Strategy::Shared => {
            let family = HashFamily::new(cfg.seed, rows, width, m_rounds, d, SignMode::Shared)?;
            let tables = round_tables(plan, &[&family], false, group, cfg.secsum, cfg.seed)?;
            estimate = decode_shared(&tables, &family)?;
        }
        Strategy::Fresh => {
            let families = HashFamily::fresh_set(cfg.seed, rows, width, m_rounds, d)?;
            let refs: Vec<&HashFamily> = families.iter().collect();
            let tables = round_tables(plan, &refs, false, group, cfg.secsum, cfg.seed)?;
            estimate = decode_fresh(&tables, &families)?;
        }
        Strategy::Hybrid => {
            let family = HashFamily::new(cfg.seed, rows, width, m_rounds, d, SignMode::PerRound)?;
            let tables = round_tables(plan, &[&family], true, group, cfg.secsum, cfg.seed)?;
            estimate = match &cfg.dp {
                None => decode_hybrid(&tables, &family)?,
                Some(dp) => {
                    let mut params = PrivacyParams::new(dp.epsilon, dp.delta)?;
                    if let Some(c0) = dp.c0 {
                        params = params.with_c0(c0)?;
                    }
                    let s = params.calibrate_sigma(rows, plan.clients_per_round())?;
                    sigma = s;
                    let noisy = privatize_rounds(&tables, s, cfg.seed)?;
                    decode_hybrid_noisy(&noisy, &family)?
                }
            };
        }
    }
    Ok(Cell {
        estimate,
        sigma,
        bits: comm_cost_bits(rows, width, group),
    })
}

/// Runs one experiment: a metrics row (and estimate) per tau target, or a
/// single untargeted row when the grid is empty.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let plan = build_plan(cfg)?;
    let d = plan.domain_size();
    let n = plan.clients_per_round();
    let total = plan.num_rounds() * n;
    let (f_global, _) = exact_oracle(&plan);
    let exact = f_global.values().to_vec();

    let rows = cfg
        .rows
        .unwrap_or_else(|| ((d as f64 / cfg.p).ln()).ceil().max(1.0) as usize);
    let group = match cfg.group_bits {
        Some(bits) => GroupParams::with_bits(bits, n, 1)?,
        None => GroupParams::for_clients(n, 1)?,
    };
    let f_star_het: Vec<f64> = heterogeneity::<f64>(&plan).sorted_desc();
    let dp_params = match &cfg.dp {
        None => None,
        Some(dp) => {
            let mut params = PrivacyParams::new(dp.epsilon, dp.delta)?;
            if let Some(c0) = dp.c0 {
                params = params.with_c0(c0)?;
            }
            Some(params)
        }
    };

    let taus: Vec<f64> = if cfg.tau_grid.is_empty() {
        vec![0.0]
    } else {
        cfg.tau_grid.clone()
    };

    let mut result = RunResult {
        metrics: Vec::with_capacity(taus.len()),
        estimates: Vec::with_capacity(taus.len()),
        exact,
        warnings: Vec::new(),
    };
    let mut cells: HashMap<usize, Cell> = HashMap::new();
    for &tau in &taus {
        let started = Instant::now();
        let width = match cfg.sizing {
            SizingMode::Fixed => cfg.width.expect("validated"),
            SizingMode::InstanceOptimal => {
                let spec = TargetSpec::new(tau, cfg.p)?;
                oracle_width(&f_global, &spec, total)
            }
            SizingMode::Minimax => {
                let spec = TargetSpec::new(tau, cfg.p)?;
                worst_case_width(&spec, total)
            }
            SizingMode::TwoPhase => {
                let spec = TargetSpec::new(tau, cfg.p)?;
                let report = two_phase_plan(
                    &pilot_plan(&plan, cfg.seed),
                    &spec,
                    (16, 100),
                    20,
                    total,
                    cfg.seed,
                )?;
                if report.fallback {
                    result
                        .warnings
                        .push(format!("tau {tau}: pilot fit failed, using the worst-case width"));
                }
                report.width
            }
        };
        if width > d {
            result
                .warnings
                .push(format!("tau {tau}: width {width} exceeds the domain {d}"));
        }
        if !cells.contains_key(&width) {
            cells.insert(width, run_cell(cfg, &plan, rows, width, &group)?);
        }
        let cell = &cells[&width];
        let bound = if cfg.strategy == Strategy::Hybrid {
            dp_error_bound(
                &f_star_het,
                width,
                rows,
                plan.num_rounds(),
                n,
                dp_params.as_ref(),
            )?
        } else {
            fedfreq_core::DpErrorBound {
                tail_term: 0.0,
                dp_term: 0.0,
                total: 0.0,
            }
        };
        result.metrics.push(MetricsRow {
            strategy: cfg.strategy,
            rows,
            width,
            tau_target: tau,
            seed: cfg.seed,
            linf_error: linf(cell.estimate.values(), &result.exact),
            items_over_threshold: items_over(
                cell.estimate.values(),
                &result.exact,
                0.1 / width as f64,
            ),
            bits_per_client: cell.bits,
            sigma: cell.sigma,
            dp_term: bound.dp_term,
            bound: bound.total,
            wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
        });
        result.estimates.push(CellEstimate {
            tau_target: tau,
            estimate: cells[&width].estimate.clone(),
        });
    }
    Ok(result)
}

/// Uniform subsample of the plan's clients used to seed the two-phase
/// planner; capped at 5000 pilots.
fn pilot_plan(plan: &RoundPlan, seed: u64) -> RoundPlan {
    let all = plan.concatenated();
    let count = all.len().min(5000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9056_71D0_37A1_66F5);
    let items: Vec<usize> = (0..count)
        .map(|_| all[rng.random_range(0..all.len())])
        .collect();
    RoundPlan::new(vec![items], plan.domain_size()).expect("pilot items come from the plan")
}
