//! Experiment configuration: a flat `key = value` text format that
//! round-trips losslessly, so a config written back out reparses to the
//! same experiment.
//!
//! Recognized keys:
//!
//! ```text
//! dataset            zipf | file
//! zipf_a             Zipf exponent (dataset = zipf)
//! path               item file (dataset = file)
//! domain             d; required for zipf, optional override for file
//! rounds             M (default 1)
//! clients_per_round  n
//! total_clients      optional cross-check, must equal M * n
//! strategy           shared | fresh | hybrid
//! rows               L; omit to use ceil(ln(d / p))
//! width              W; required when sizing = fixed
//! sizing             fixed | instance-optimal | minimax | two-phase
//! tau_grid           comma-separated targets in (0, 1)
//! p                  failure probability (default 0.1)
//! seed               64-bit decimal seed (default 0)
//! secsum             true | false (default true)
//! group_bits         override for the summation group size
//! dp_epsilon         privacy budget; enables the Gaussian mechanism
//! dp_delta           privacy slack; required with dp_epsilon
//! dp_c0              noise calibration constant (default sqrt 2)
//! output             metrics CSV path (default stdout)
//! dump_estimates     optional per-item estimate CSV path
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fedfreq_core::Strategy;

use crate::error::{Error, Result};

/// Where the item stream comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// Synthetic draws from `f_i` proportional to `i^(-exponent)`.
    Zipf { exponent: f64 },
    /// Newline-separated item ids, or `id,count` lines.
    File { path: PathBuf },
}

/// How the sketch width is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizingMode {
    /// Use the `width` key as given.
    Fixed,
    /// Width formula evaluated on the exact frequencies of the run itself.
    InstanceOptimal,
    /// Distribution-free worst-case width.
    Minimax,
    /// Pilot sketch, power-law fit, width formula on the fitted model.
    TwoPhase,
}

impl SizingMode {
    fn name(self) -> &'static str {
        match self {
            SizingMode::Fixed => "fixed",
            SizingMode::InstanceOptimal => "instance-optimal",
            SizingMode::Minimax => "minimax",
            SizingMode::TwoPhase => "two-phase",
        }
    }
}

impl fmt::Display for SizingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed" => Ok(SizingMode::Fixed),
            "instance-optimal" => Ok(SizingMode::InstanceOptimal),
            "minimax" => Ok(SizingMode::Minimax),
            "two-phase" => Ok(SizingMode::TwoPhase),
            other => Err(format!(
                "unknown sizing mode '{other}' (expected fixed, instance-optimal, minimax, or two-phase)"
            )),
        }
    }
}

/// Differential-privacy settings; present only when the mechanism is on.
#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Calibration constant; `None` keeps the library default.
    pub c0: Option<f64>,
}

/// One experiment: dataset, shape, strategy, sizing, and output targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub domain: Option<usize>,
    pub rounds: usize,
    pub clients_per_round: usize,
    pub total_clients: Option<usize>,
    pub strategy: Strategy,
    pub rows: Option<usize>,
    pub width: Option<usize>,
    pub sizing: SizingMode,
    pub tau_grid: Vec<f64>,
    pub p: f64,
    pub seed: u64,
    pub secsum: bool,
    pub group_bits: Option<u32>,
    pub dp: Option<DpConfig>,
    pub output: Option<PathBuf>,
    pub dump_estimates: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::Zipf { exponent: 1.1 },
            domain: None,
            rounds: 1,
            clients_per_round: 0,
            total_clients: None,
            strategy: Strategy::Hybrid,
            rows: None,
            width: None,
            sizing: SizingMode::Fixed,
            tau_grid: Vec::new(),
            p: 0.1,
            seed: 0,
            secsum: true,
            group_bits: None,
            dp: None,
            output: None,
            dump_estimates: None,
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_as<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| bad(line, format!("{key}: {e}")))
}

impl ExperimentConfig {
    /// Parses the `key = value` format. Unknown and repeated keys are
    /// errors; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        let mut dataset_kind: Option<&str> = None;
        let mut zipf_a: Option<f64> = None;
        let mut file_path: Option<PathBuf> = None;
        let mut dp_epsilon: Option<f64> = None;
        let mut dp_delta: Option<f64> = None;
        let mut dp_c0: Option<f64> = None;
        let mut has_clients = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(bad(line, format!("expected 'key = value', got '{content}'")));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(bad(line, format!("{key}: empty value")));
            }
            if seen.iter().any(|k| k == key) {
                return Err(bad(line, format!("{key}: repeated key")));
            }

            match key {
                "dataset" => match value {
                    "zipf" | "file" => dataset_kind = Some(if value == "zipf" { "zipf" } else { "file" }),
                    other => {
                        return Err(bad(line, format!("dataset: expected zipf or file, got '{other}'")))
                    }
                },
                "zipf_a" => zipf_a = Some(parse_as(line, key, value)?),
                "path" => file_path = Some(PathBuf::from(value)),
                "domain" => cfg.domain = Some(parse_as(line, key, value)?),
                "rounds" => cfg.rounds = parse_as(line, key, value)?,
                "clients_per_round" => {
                    cfg.clients_per_round = parse_as(line, key, value)?;
                    has_clients = true;
                }
                "total_clients" => cfg.total_clients = Some(parse_as(line, key, value)?),
                "strategy" => cfg.strategy = parse_as(line, key, value)?,
                "rows" => cfg.rows = Some(parse_as(line, key, value)?),
                "width" => cfg.width = Some(parse_as(line, key, value)?),
                "sizing" => cfg.sizing = parse_as(line, key, value)?,
                "tau_grid" => {
                    cfg.tau_grid = value
                        .split(',')
                        .map(|t| parse_as(line, key, t.trim()))
                        .collect::<Result<_>>()?;
                }
                "p" => cfg.p = parse_as(line, key, value)?,
                "seed" => cfg.seed = parse_as(line, key, value)?,
                "secsum" => cfg.secsum = parse_as(line, key, value)?,
                "group_bits" => cfg.group_bits = Some(parse_as(line, key, value)?),
                "dp_epsilon" => dp_epsilon = Some(parse_as(line, key, value)?),
                "dp_delta" => dp_delta = Some(parse_as(line, key, value)?),
                "dp_c0" => dp_c0 = Some(parse_as(line, key, value)?),
                "output" => cfg.output = Some(PathBuf::from(value)),
                "dump_estimates" => cfg.dump_estimates = Some(PathBuf::from(value)),
                other => return Err(bad(line, format!("unknown key '{other}'"))),
            }
            seen.push(key.to_string());
        }

        cfg.dataset = match dataset_kind {
            Some("file") => {
                let path = file_path
                    .ok_or_else(|| bad(0, "dataset = file needs a path key"))?;
                Dataset::File { path }
            }
            Some("zipf") | None => {
                let exponent =
                    zipf_a.ok_or_else(|| bad(0, "dataset = zipf needs a zipf_a key"))?;
                Dataset::Zipf { exponent }
            }
            Some(_) => unreachable!(),
        };
        cfg.dp = match (dp_epsilon, dp_delta) {
            (Some(epsilon), Some(delta)) => Some(DpConfig {
                epsilon,
                delta,
                c0: dp_c0,
            }),
            (None, None) => {
                if dp_c0.is_some() {
                    return Err(bad(0, "dp_c0 given without dp_epsilon and dp_delta"));
                }
                None
            }
            _ => return Err(bad(0, "dp_epsilon and dp_delta must be given together")),
        };
        if !has_clients {
            return Err(bad(0, "clients_per_round is required"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Writes the config back out; `parse(to_text(c)) == c` for every valid
    /// config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        match &self.dataset {
            Dataset::Zipf { exponent } => {
                push("dataset", "zipf".into());
                push("zipf_a", exponent.to_string());
            }
            Dataset::File { path } => {
                push("dataset", "file".into());
                push("path", path.display().to_string());
            }
        }
        if let Some(d) = self.domain {
            push("domain", d.to_string());
        }
        push("rounds", self.rounds.to_string());
        push("clients_per_round", self.clients_per_round.to_string());
        if let Some(total) = self.total_clients {
            push("total_clients", total.to_string());
        }
        push("strategy", self.strategy.to_string());
        if let Some(rows) = self.rows {
            push("rows", rows.to_string());
        }
        if let Some(width) = self.width {
            push("width", width.to_string());
        }
        push("sizing", self.sizing.to_string());
        if !self.tau_grid.is_empty() {
            let grid: Vec<String> = self.tau_grid.iter().map(|t| t.to_string()).collect();
            push("tau_grid", grid.join(","));
        }
        push("p", self.p.to_string());
        push("seed", self.seed.to_string());
        push("secsum", self.secsum.to_string());
        if let Some(bits) = self.group_bits {
            push("group_bits", bits.to_string());
        }
        if let Some(dp) = &self.dp {
            push("dp_epsilon", dp.epsilon.to_string());
            push("dp_delta", dp.delta.to_string());
            if let Some(c0) = dp.c0 {
                push("dp_c0", c0.to_string());
            }
        }
        if let Some(path) = &self.output {
            push("output", path.display().to_string());
        }
        if let Some(path) = &self.dump_estimates {
            push("dump_estimates", path.display().to_string());
        }
        out
    }

    /// Checks the cross-field rules before any work starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Validation(m.into()));
        if self.rounds == 0 {
            return fail("rounds must be at least 1");
        }
        if self.clients_per_round == 0 {
            return fail("clients_per_round must be at least 1");
        }
        if let Some(total) = self.total_clients {
            if total != self.rounds * self.clients_per_round {
                return Err(Error::Validation(format!(
                    "total_clients = {total} but rounds * clients_per_round = {}",
                    self.rounds * self.clients_per_round
                )));
            }
        }
        if let Dataset::Zipf { exponent } = self.dataset {
            if !(exponent > 0.0) {
                return fail("zipf_a must be positive");
            }
            if self.domain.is_none() {
                return fail("dataset = zipf needs a domain");
            }
        }
        if self.domain == Some(0) {
            return fail("domain must be at least 1");
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail("p must be in (0, 1)");
        }
        if self.tau_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return fail("tau_grid values must be in (0, 1)");
        }
        if self.rows == Some(0) {
            return fail("rows must be at least 1");
        }
        if self.width == Some(0) {
            return fail("width must be at least 1");
        }
        match self.sizing {
            SizingMode::Fixed => {
                if self.width.is_none() {
                    return fail("sizing = fixed needs a width");
                }
            }
            _ => {
                if self.tau_grid.is_empty() {
                    return fail("adaptive sizing needs a tau_grid");
                }
            }
        }
        if let Some(dp) = &self.dp {
            if self.strategy != Strategy::Hybrid {
                return fail("differential privacy requires strategy = hybrid");
            }
            if !(dp.epsilon > 0.0 && dp.epsilon < 1.0) {
                return fail("dp_epsilon must be in (0, 1)");
            }
            if !(dp.delta > 0.0 && dp.delta < 0.1) {
                return fail("dp_delta must be in (0, 0.1)");
            }
            if let Some(c0) = dp.c0 {
                if !(c0 > 0.0) {
                    return fail("dp_c0 must be positive");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: Dataset::Zipf { exponent: 2.5 },
            domain: Some(10_000),
            rounds: 10,
            clients_per_round: 1000,
            total_clients: Some(10_000),
            strategy: Strategy::Hybrid,
            rows: Some(16),
            width: Some(256),
            sizing: SizingMode::Fixed,
            tau_grid: vec![0.01, 0.025, 0.1],
            p: 0.1,
            seed: 42,
            secsum: true,
            group_bits: Some(12),
            dp: Some(DpConfig {
                epsilon: 0.5,
                delta: 1e-6,
                c0: Some(1.0),
            }),
            output: Some(PathBuf::from("metrics.csv")),
            dump_estimates: Some(PathBuf::from("estimates.csv")),
        }
    }

    #[test]
    fn round_trips_losslessly() {
        let cfg = full_config();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);

        let minimal = ExperimentConfig {
            dataset: Dataset::File { path: "items.txt".into() },
            clients_per_round: 50,
            width: Some(64),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&minimal.to_text()).unwrap(), minimal);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = ExperimentConfig::parse(
            "# an experiment\n\ndataset = zipf\nzipf_a = 2 # heavy tail\nclients_per_round = 10\nwidth = 8\ndomain = 100\n",
        )
        .unwrap();
        assert_eq!(cfg.dataset, Dataset::Zipf { exponent: 2.0 });
        assert_eq!(cfg.clients_per_round, 10);
    }

    #[test]
    fn unknown_and_repeated_keys_error_with_line_numbers() {
        let err = ExperimentConfig::parse("clients_per_round = 5\nwdith = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err =
            ExperimentConfig::parse("zipf_a = 1\nseed = 1\nseed = 2\nclients_per_round = 5\n")
                .unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_values_name_the_key_and_line() {
        let err = ExperimentConfig::parse("rounds = many\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 1);
                assert!(message.starts_with("rounds:"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn dp_keys_must_come_as_a_pair() {
        let text = "zipf_a = 2\ndomain = 10\nclients_per_round = 5\nwidth = 4\ndp_epsilon = 0.5\n";
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn validation_enforces_the_cross_field_rules() {
        let mut cfg = full_config();
        cfg.validate().unwrap();

        cfg.total_clients = Some(9999);
        assert!(cfg.validate().is_err());
        cfg.total_clients = None;

        cfg.tau_grid = vec![0.5, 1.5];
        assert!(cfg.validate().is_err());
        cfg.tau_grid = vec![0.5];

        cfg.strategy = Strategy::Shared;
        assert!(cfg.validate().is_err(), "privacy needs the hybrid strategy");
        cfg.strategy = Strategy::Hybrid;

        cfg.sizing = SizingMode::TwoPhase;
        cfg.tau_grid.clear();
        assert!(cfg.validate().is_err(), "adaptive sizing needs targets");
    }
}
