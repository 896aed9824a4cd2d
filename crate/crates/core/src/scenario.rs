//! Scenario configuration, the matrix runner, CSV emission and aggregation.
//!
//! Configs are line-oriented `key = value` text with `#` comments. Absent
//! keys take the standard defaults (1000 m × 1000 m area, 250 m range,
//! node counts 50..250, v_max 5/15/25, 1–15 J initial energy, 600 s runs,
//! 20 CBR flows at 5 packets/s of 512 bytes). Unknown keys are rejected so
//! typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::str::FromStr;

use thiserror::Error;

use crate::backbone::Algorithm;
use crate::energy::PowerRatings;
use crate::sim::{run_simulation, MetricsRecord, RouteMode, SimParams};

#[derive(Debug, Error)]
#[error("config error at line {line} ({key}): {message}")]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError { line, key: key.to_string(), message: message.into() }
    }
}

/// Full description of a scenario matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area: (f64, f64),
    pub nodes: Vec<usize>,
    pub range_m: f64,
    pub v_max: Vec<f64>,
    pub pause_s: f64,
    pub initial_energy: (f64, f64),
    pub ratings: PowerRatings,
    pub bitrate_bps: f64,
    pub duration_s: f64,
    pub hello_interval_s: f64,
    pub recompute_interval_s: f64,
    pub flows: usize,
    pub packet_rate_hz: f64,
    pub packet_bytes: usize,
    pub rreq_bytes: usize,
    pub hello_base_bytes: usize,
    pub hello_per_neighbor_bytes: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub modes: Vec<RouteMode>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area: (1000.0, 1000.0),
            nodes: vec![50, 100, 150, 200, 250],
            range_m: 250.0,
            v_max: vec![5.0, 15.0, 25.0],
            pause_s: 100.0,
            initial_energy: (1.0, 15.0),
            ratings: PowerRatings::default(),
            bitrate_bps: 2_000_000.0,
            duration_s: 600.0,
            hello_interval_s: 1.0,
            recompute_interval_s: 5.0,
            flows: 20,
            packet_rate_hz: 5.0,
            packet_bytes: 512,
            rreq_bytes: 48,
            hello_base_bytes: 64,
            hello_per_neighbor_bytes: 4,
            seeds: (0..10).collect(),
            algorithms: Algorithm::ALL.to_vec(),
            modes: vec![RouteMode::Cds],
        }
    }
}

impl ScenarioConfig {
    /// Scalar parameters for one cell of the matrix.
    pub fn sim_params(&self, n: usize, v_max: f64) -> SimParams {
        SimParams {
            n,
            area: self.area,
            range_m: self.range_m,
            v_max,
            pause_s: self.pause_s,
            initial_energy: self.initial_energy,
            ratings: self.ratings,
            bitrate_bps: self.bitrate_bps,
            duration_s: self.duration_s,
            hello_interval_s: self.hello_interval_s,
            recompute_interval_s: self.recompute_interval_s,
            flows: self.flows,
            packet_rate_hz: self.packet_rate_hz,
            packet_bytes: self.packet_bytes,
            rreq_bytes: self.rreq_bytes,
            hello_base_bytes: self.hello_base_bytes,
            hello_per_neighbor_bytes: self.hello_per_neighbor_bytes,
        }
    }

    /// Emit the config as parseable text; `parse_config(c.to_text()) == c`.
    pub fn to_text(&self) -> String {
        let list = |v: &[String]| v.join(",");
        let mut out = String::new();
        let _ = writeln!(out, "area = {}x{}", self.area.0, self.area.1);
        let _ = writeln!(out, "nodes = {}", list(&self.nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "range = {}", self.range_m);
        let _ = writeln!(out, "vmax = {}", list(&self.v_max.iter().map(|v| v.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "pause = {}", self.pause_s);
        let _ = writeln!(out, "initial_energy = {}..{}", self.initial_energy.0, self.initial_energy.1);
        let _ = writeln!(out, "tx_power = {}", self.ratings.tx_w);
        let _ = writeln!(out, "rx_power = {}", self.ratings.rx_w);
        let _ = writeln!(out, "idle_power = {}", self.ratings.idle_w);
        let _ = writeln!(out, "bitrate = {}", self.bitrate_bps);
        let _ = writeln!(out, "duration = {}", self.duration_s);
        let _ = writeln!(out, "hello_interval = {}", self.hello_interval_s);
        let _ = writeln!(out, "recompute_interval = {}", self.recompute_interval_s);
        let _ = writeln!(out, "flows = {}", self.flows);
        let _ = writeln!(out, "packet_rate = {}", self.packet_rate_hz);
        let _ = writeln!(out, "packet_size = {}", self.packet_bytes);
        let _ = writeln!(out, "rreq_size = {}", self.rreq_bytes);
        let _ = writeln!(out, "hello_size = {}", self.hello_base_bytes);
        let _ = writeln!(out, "hello_neighbor_size = {}", self.hello_per_neighbor_bytes);
        let _ = writeln!(out, "seeds = {}", list(&self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "algorithms = {}", list(&self.algorithms.iter().map(|a| a.label().to_string()).collect::<Vec<_>>()));
        let _ = writeln!(
            out,
            "mode = {}",
            if self.modes.len() == 2 { "both".to_string() } else { self.modes[0].label().to_string() }
        );
        out
    }
}

fn parse_positive_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(line, key, format!("not a number: '{value}'")))?;
    if !(v > 0.0) {
        return Err(ConfigError::new(line, key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_nonneg_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(line, key, format!("not a number: '{value}'")))?;
    if !(v >= 0.0) {
        return Err(ConfigError::new(line, key, format!("must be non-negative, got {v}")));
    }
    Ok(v)
}

fn parse_positive_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    let v: usize = value
        .parse()
        .map_err(|_| ConfigError::new(line, key, format!("not a count: '{value}'")))?;
    if v == 0 {
        return Err(ConfigError::new(line, key, "must be positive"));
    }
    Ok(v)
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| ConfigError::new(line, key, format!("bad list element '{s}'")))
        })
        .collect()
}

/// Parse `key = value` text into a config; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line_no, line, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "area" => {
                let (w, h) = value
                    .split_once(['x', 'X'])
                    .ok_or_else(|| ConfigError::new(line_no, key, "expected WIDTHxHEIGHT"))?;
                cfg.area = (
                    parse_positive_f64(line_no, key, w.trim())?,
                    parse_positive_f64(line_no, key, h.trim())?,
                );
            }
            "nodes" => {
                cfg.nodes = parse_list(line_no, key, value)?;
                if cfg.nodes.is_empty() || cfg.nodes.contains(&0) {
                    return Err(ConfigError::new(line_no, key, "need positive node counts"));
                }
            }
            "range" => cfg.range_m = parse_positive_f64(line_no, key, value)?,
            "vmax" => {
                cfg.v_max = parse_list(line_no, key, value)?;
                if cfg.v_max.is_empty() || cfg.v_max.iter().any(|&v| v < 0.0) {
                    return Err(ConfigError::new(line_no, key, "need non-negative speeds"));
                }
            }
            "pause" => cfg.pause_s = parse_nonneg_f64(line_no, key, value)?,
            "initial_energy" => {
                let (lo, hi) = value
                    .split_once("..")
                    .ok_or_else(|| ConfigError::new(line_no, key, "expected LO..HI joules"))?;
                let lo = parse_positive_f64(line_no, key, lo.trim())?;
                let hi = parse_positive_f64(line_no, key, hi.trim())?;
                if hi < lo {
                    return Err(ConfigError::new(line_no, key, "upper bound below lower"));
                }
                cfg.initial_energy = (lo, hi);
            }
            "tx_power" => cfg.ratings.tx_w = parse_positive_f64(line_no, key, value)?,
            "rx_power" => cfg.ratings.rx_w = parse_positive_f64(line_no, key, value)?,
            "idle_power" => cfg.ratings.idle_w = parse_positive_f64(line_no, key, value)?,
            "bitrate" => cfg.bitrate_bps = parse_positive_f64(line_no, key, value)?,
            "duration" => cfg.duration_s = parse_positive_f64(line_no, key, value)?,
            "hello_interval" => cfg.hello_interval_s = parse_positive_f64(line_no, key, value)?,
            "recompute_interval" => {
                cfg.recompute_interval_s = parse_positive_f64(line_no, key, value)?
            }
            "flows" => {
                cfg.flows = value
                    .parse()
                    .map_err(|_| ConfigError::new(line_no, key, "not a count"))?
            }
            "packet_rate" => cfg.packet_rate_hz = parse_positive_f64(line_no, key, value)?,
            "packet_size" => cfg.packet_bytes = parse_positive_usize(line_no, key, value)?,
            "rreq_size" => cfg.rreq_bytes = parse_positive_usize(line_no, key, value)?,
            "hello_size" => cfg.hello_base_bytes = parse_positive_usize(line_no, key, value)?,
            "hello_neighbor_size" => {
                cfg.hello_per_neighbor_bytes = value
                    .parse()
                    .map_err(|_| ConfigError::new(line_no, key, "not a count"))?
            }
            "seeds" => {
                cfg.seeds = parse_list(line_no, key, value)?;
                if cfg.seeds.is_empty() {
                    return Err(ConfigError::new(line_no, key, "need at least one seed"));
                }
            }
            "algorithms" => {
                cfg.algorithms = parse_list(line_no, key, value)?;
                if cfg.algorithms.is_empty() {
                    return Err(ConfigError::new(line_no, key, "need at least one algorithm"));
                }
            }
            "mode" => {
                cfg.modes = match value.to_ascii_lowercase().as_str() {
                    "both" => vec![RouteMode::Cds, RouteMode::Flooding],
                    other => vec![other
                        .parse()
                        .map_err(|e: String| ConfigError::new(line_no, key, e))?],
                };
            }
            unknown => {
                return Err(ConfigError::new(line_no, unknown, "unknown key"));
            }
        }
    }
    Ok(cfg)
}

/// A run that could not produce metrics.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub algorithm: Algorithm,
    pub mode: RouteMode,
    pub n: usize,
    pub v_max: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct MatrixOutcome {
    /// Successful rows, sorted by (algorithm, mode, n, v_max, seed).
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    n: usize,
    v_max: f64,
    algorithm: Algorithm,
    mode: RouteMode,
    seed: u64,
}

fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        a.algorithm
            .label()
            .cmp(b.algorithm.label())
            .then_with(|| a.mode.label().cmp(b.mode.label()))
            .then_with(|| a.n.cmp(&b.n))
            .then_with(|| a.v_max.total_cmp(&b.v_max))
            .then_with(|| a.seed.cmp(&b.seed))
    });
}

/// Run the whole cartesian product (n × v_max × algorithm × seed × mode).
///
/// Individual failures never abort the matrix. Output order is fixed by
/// the sort, independent of scheduling; with `jobs > 1` runs execute on
/// that many worker threads.
pub fn run_matrix(cfg: &ScenarioConfig, jobs: usize) -> MatrixOutcome {
    let mut job_list = Vec::new();
    for &n in &cfg.nodes {
        for &v_max in &cfg.v_max {
            for &algorithm in &cfg.algorithms {
                for &seed in &cfg.seeds {
                    for &mode in &cfg.modes {
                        job_list.push(Job { n, v_max, algorithm, mode, seed });
                    }
                }
            }
        }
    }

    let execute = |job: Job| -> Result<MetricsRecord, RunFailure> {
        run_simulation(cfg.sim_params(job.n, job.v_max), job.algorithm, job.mode, job.seed)
            .map_err(|e| RunFailure {
                algorithm: job.algorithm,
                mode: job.mode,
                n: job.n,
                v_max: job.v_max,
                seed: job.seed,
                error: e.to_string(),
            })
    };

    let mut outcome = MatrixOutcome::default();
    if jobs <= 1 {
        for job in job_list {
            match execute(job) {
                Ok(r) => outcome.records.push(r),
                Err(f) => outcome.failures.push(f),
            }
        }
    } else {
        let results = std::thread::scope(|scope| {
            let chunks: Vec<Vec<Job>> = (0..jobs)
                .map(|w| {
                    job_list
                        .iter()
                        .copied()
                        .skip(w)
                        .step_by(jobs)
                        .collect()
                })
                .collect();
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk.into_iter().map(execute).collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect::<Vec<_>>()
        });
        for result in results {
            match result {
                Ok(r) => outcome.records.push(r),
                Err(f) => outcome.failures.push(f),
            }
        }
    }
    sort_records(&mut outcome.records);
    outcome
        .failures
        .sort_by(|a, b| {
            (a.algorithm.label(), a.mode.label(), a.n, a.seed).cmp(&(
                b.algorithm.label(),
                b.mode.label(),
                b.n,
                b.seed,
            ))
        });
    outcome
}

/// Format with six significant digits, trailing zeros trimmed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".to_string() } else { x.to_string() };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub const CSV_HEADER: &str =
    "algorithm,mode,n,v_max,seed,cds_size_mean,lifetime_s,rreq_total,sent,delivered,pdr";

fn csv_row(r: &MetricsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.algorithm.label(),
        r.mode.label(),
        r.n,
        format_sig(r.v_max),
        r.seed,
        format_sig(r.cds_size_mean),
        format_sig(r.lifetime_s),
        r.rreq_total,
        r.sent,
        r.delivered,
        format_sig(r.pdr()),
    )
}

/// Write records as CSV: a header plus one row per record, sorted.
/// Identical record sets produce byte-identical output.
pub fn emit_csv(records: &[MetricsRecord], out: &mut impl io::Write) -> io::Result<()> {
    let mut sorted: Vec<MetricsRecord> = records.to_vec();
    sort_records(&mut sorted);
    writeln!(out, "{CSV_HEADER}")?;
    for r in &sorted {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Parse CSV produced by [`emit_csv`] back into records.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty csv")?;
    if header.trim() != CSV_HEADER {
        return Err(format!("unexpected header: {header}"));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!("row {}: expected 11 fields", idx + 2));
        }
        let err = |what: &str| format!("row {}: bad {what}", idx + 2);
        records.push(MetricsRecord {
            algorithm: fields[0].parse().map_err(|_| err("algorithm"))?,
            mode: fields[1].parse().map_err(|_| err("mode"))?,
            n: fields[2].parse().map_err(|_| err("n"))?,
            v_max: fields[3].parse().map_err(|_| err("v_max"))?,
            seed: fields[4].parse().map_err(|_| err("seed"))?,
            cds_size_mean: fields[5].parse().map_err(|_| err("cds_size_mean"))?,
            lifetime_s: fields[6].parse().map_err(|_| err("lifetime_s"))?,
            rreq_total: fields[7].parse().map_err(|_| err("rreq_total"))?,
            sent: fields[8].parse().map_err(|_| err("sent"))?,
            delivered: fields[9].parse().map_err(|_| err("delivered"))?,
        });
    }
    Ok(records)
}

/// Aggregate statistics of one (algorithm, mode, n, v_max) group.
#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub algorithm: Algorithm,
    pub mode: RouteMode,
    pub n: usize,
    pub v_max: f64,
    pub runs: usize,
    pub cds_mean: f64,
    pub cds_sd: f64,
    pub lifetime_mean: f64,
    pub lifetime_sd: f64,
    pub rreq_mean: f64,
    pub rreq_sd: f64,
    pub pdr_mean: f64,
    pub pdr_sd: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Group records by (algorithm, mode, n, v_max) and compute mean/sample
/// standard deviation per metric.
pub fn summarize(records: &[MetricsRecord]) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<(String, String, usize, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.algorithm.label().to_string(),
                r.mode.label().to_string(),
                r.n,
                r.v_max.to_bits(),
            ))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let pick = |f: &dyn Fn(&MetricsRecord) -> f64| -> Vec<f64> {
                rs.iter().map(|r| f(r)).collect()
            };
            let (cds_mean, cds_sd) = mean_sd(&pick(&|r| r.cds_size_mean));
            let (lifetime_mean, lifetime_sd) = mean_sd(&pick(&|r| r.lifetime_s));
            let (rreq_mean, rreq_sd) = mean_sd(&pick(&|r| r.rreq_total as f64));
            let (pdr_mean, pdr_sd) = mean_sd(&pick(&|r| r.pdr()));
            GroupSummary {
                algorithm: rs[0].algorithm,
                mode: rs[0].mode,
                n: rs[0].n,
                v_max: rs[0].v_max,
                runs: rs.len(),
                cds_mean,
                cds_sd,
                lifetime_mean,
                lifetime_sd,
                rreq_mean,
                rreq_sd,
                pdr_mean,
                pdr_sd,
            }
        })
        .collect()
}

/// Render the aggregate table as CSV with relative-improvement columns
/// against `baseline` (matched on mode, n and v_max). Improvements are
/// `(mean_alg − mean_base) / mean_base`; a missing baseline group renders
/// as `-`.
pub fn render_summary(groups: &[GroupSummary], baseline: Option<Algorithm>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "algorithm,mode,n,v_max,runs,cds_mean,cds_sd,lifetime_mean,lifetime_sd,\
         rreq_mean,rreq_sd,pdr_mean,pdr_sd,d_cds,d_lifetime,d_rreq,d_pdr"
    );
    let base_of = |g: &GroupSummary| -> Option<&GroupSummary> {
        let base = baseline?;
        groups.iter().find(|b| {
            b.algorithm == base && b.mode == g.mode && b.n == g.n && b.v_max == g.v_max
        })
    };
    for g in groups {
        let improvement = |mine: f64, basev: fn(&GroupSummary) -> f64| -> String {
            match base_of(g) {
                Some(b) if basev(b) != 0.0 => format_sig((mine - basev(b)) / basev(b)),
                _ => "-".to_string(),
            }
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            g.algorithm.label(),
            g.mode.label(),
            g.n,
            format_sig(g.v_max),
            g.runs,
            format_sig(g.cds_mean),
            format_sig(g.cds_sd),
            format_sig(g.lifetime_mean),
            format_sig(g.lifetime_sd),
            format_sig(g.rreq_mean),
            format_sig(g.rreq_sd),
            format_sig(g.pdr_mean),
            format_sig(g.pdr_sd),
            improvement(g.cds_mean, |b| b.cds_mean),
            improvement(g.lifetime_mean, |b| b.lifetime_mean),
            improvement(g.rreq_mean, |b| b.rreq_mean),
            improvement(g.pdr_mean, |b| b.pdr_mean),
        );
    }
    out
}
