//! Reproducible Monte Carlo experiments on loop-soup random graphs.
//!
//! Every command takes a flat [`ExperimentConfig`], runs its replicas in
//! parallel and produces a [`Report`]: CSV tables, pass/fail checks and a
//! JSON summary. Replica `r` of block `b` (one block per grid point) draws
//! from stream `(b << 32) | r` of the run seed, so outputs do not depend on
//! scheduling and are bit-exact across reruns.
//!
//! Times are given in model units: the soup horizon is `n t`, or
//! `n t (ε+1)^j` for fixed-length soups.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exploration::Explorer;
use crate::graph_process::ClusterState;
use crate::gw_analytics::{
    cramer_h, dual_params, extinction_prob, fixed_length_progeny_pmf, CPGeo, Offspring,
};
use crate::loop_measure::{
    sample_fixed_length_loops, sample_soup_stream, ModelParams, SoupSampler, TimedLoop,
};
use crate::rng::{self, GENERATOR_ID};
use crate::stats::{binomial_se, chi_square_gof, chi_square_independence, linear_fit, mean_var};

/// Experiment commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ComponentLaw,
    TwoComponents,
    PhaseScan,
    Hydro,
    FixedLength,
    IntermediateGap,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::ComponentLaw,
        Command::TwoComponents,
        Command::PhaseScan,
        Command::Hydro,
        Command::FixedLength,
        Command::IntermediateGap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ComponentLaw => "component-law",
            Command::TwoComponents => "two-components",
            Command::PhaseScan => "phase-scan",
            Command::Hydro => "hydro",
            Command::FixedLength => "fixed-length",
            Command::IntermediateGap => "intermediate-gap",
        }
    }

    fn default_replicas(self) -> u64 {
        match self {
            Command::ComponentLaw => 200_000,
            Command::TwoComponents => 100_000,
            Command::PhaseScan => 100,
            Command::Hydro | Command::FixedLength => 2_000,
            Command::IntermediateGap => 1_000,
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        Command::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat experiment configuration; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must match the command being run when present.
    pub command: Option<Command>,
    /// Single graph size (two-components).
    pub n: Option<u32>,
    /// Graph sizes for the scaling commands.
    pub n_grid: Option<Vec<u32>>,
    pub eps: f64,
    /// Model time; defaults to 2 for intermediate-gap and 0.5 otherwise.
    pub t: Option<f64>,
    /// Times for phase-scan; also the snapshot grid of each replica.
    pub t_grid: Option<Vec<f64>>,
    pub replicas: Option<u64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Largest component size compared against the limit law.
    pub kmax: u32,
    /// Loop length for fixed-length soups.
    pub j: u32,
    /// Subcritical threshold `c₁ > (a_factor / h) log n`.
    pub a_factor: f64,
    /// Lower end `c1 log n` of the intermediate window; defaults to `1 / h̃`
    /// with `h̃` the Cramér rate of the dual law.
    pub c1: Option<f64>,
    pub c2: f64,
    pub beta: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    /// Significance level of chi-square checks.
    pub alpha: f64,
    pub sub_prob_max: f64,
    pub super_tol: f64,
    pub super_frac_min: f64,
    /// Second-largest component bound `c₂ ≤ c2_log_factor · log n`.
    pub c2_log_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            n: None,
            n_grid: None,
            eps: 1.0,
            t: None,
            t_grid: None,
            replicas: None,
            seed: 0,
            out: None,
            kmax: 10,
            j: 3,
            a_factor: 1.5,
            c1: None,
            c2: 0.5,
            beta: 0.6,
            slope_min: -1.3,
            slope_max: -0.7,
            alpha: 0.01,
            sub_prob_max: 0.05,
            super_tol: 0.01,
            super_frac_min: 0.95,
            c2_log_factor: 20.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn time_for(&self, cmd: Command) -> f64 {
        self.t.unwrap_or(if cmd == Command::IntermediateGap { 2.0 } else { 0.5 })
    }

    /// Resolved time; only meaningful after [`run`] has filled in the default.
    fn time(&self) -> f64 {
        self.t.unwrap_or(0.5)
    }

    fn replicas_for(&self, cmd: Command) -> u64 {
        self.replicas.unwrap_or_else(|| cmd.default_replicas())
    }

    fn n_grid_or(&self, default: &[u32]) -> Vec<u32> {
        self.n_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    fn validate(&self, cmd: Command) -> Result<()> {
        if let Some(c) = self.command {
            if c != cmd {
                return Err(Error::Config(format!("config is for `{c}`, not `{cmd}`")));
            }
        }
        let r = self.replicas_for(cmd);
        if r == 0 || r >= 1 << 32 {
            return Err(Error::Config(format!("replicas = {r} must be in [1, 2^32)")));
        }
        let t = self.time_for(cmd);
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("t = {t} must be finite and ≥ 0")));
        }
        if self.kmax == 0 {
            return Err(Error::Config("kmax must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must be in (0, 1)".into()));
        }
        ModelParams::new(2, self.eps)?;
        Ok(())
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

/// One pass/fail assertion of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Streams used by one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamBlock {
    pub label: String,
    pub block: u64,
    pub replicas: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: Command,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub summary: Value,
    pub streams: Vec<StreamBlock>,
}

impl Report {
    fn new(command: Command) -> Self {
        Self {
            command,
            tables: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            summary: json!({}),
            streams: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn block(&mut self, label: String, replicas: u64) -> u64 {
        let block = self.streams.len() as u64;
        self.streams.push(StreamBlock {
            label,
            block,
            replicas,
        });
        block
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: Command,
    pub config: ExperimentConfig,
    pub generator_id: &'static str,
    pub code_version: &'static str,
    pub seed: u64,
    /// Replica `r` of block `b` uses stream `(b << 32) | r`.
    pub stream_rule: &'static str,
    pub streams: Vec<StreamBlock>,
    pub wall_time_s: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub summary: Value,
    pub tables: Vec<String>,
}

pub const STREAM_RULE: &str = "stream = (block << 32) | replica";

pub fn stream_id(block: u64, replica: u64) -> u64 {
    (block << 32) | replica
}

/// Runs replicas `0..count` in parallel, returning results in replica order.
fn run_replicas<T, F>(count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Cluster state of the soup on `[0, horizon]`, full or fixed-length.
fn soup_state(
    params: &ModelParams,
    sampler: &SoupSampler,
    fixed_j: Option<u32>,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<ClusterState> {
    let mut rng = rng::stream(seed, stream);
    let loops: Vec<TimedLoop> = match fixed_j {
        None => sampler.sample_loops(horizon, &mut rng),
        Some(j) => sample_fixed_length_loops(params, j, horizon, &mut rng)?,
    };
    let mut st = ClusterState::new(params.n())?;
    for tl in &loops {
        st.apply_loop(&tl.lp, tl.time)?;
    }
    Ok(st)
}

/// `P̂(|C(x)| ≤ k)` averaged over all vertices: `Σ_{s ≤ k} s · #{size s} / n`.
fn vertex_cdf(st: &ClusterState, kmax: u32) -> Vec<f64> {
    let n = f64::from(st.n());
    let mut acc = 0u64;
    let mut out = Vec::with_capacity(kmax as usize);
    for k in 1..=kmax {
        acc += u64::from(k) * st.hist().get(&k).copied().unwrap_or(0);
        out.push(acc as f64 / n);
    }
    out
}

fn column_mean_se(rows: &[Vec<f64>], col: usize) -> (f64, f64) {
    let xs: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    let (m, v) = mean_var(&xs);
    (m, (v / xs.len() as f64).sqrt())
}

/// Slope of `log y` against `log n`, ignoring non-positive `y`.
fn log_log_slope(ns: &[u32], ys: &[f64]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&n, &y)| (f64::from(n).ln(), y.ln()))
        .unzip();
    (x.len() >= 2).then(|| linear_fit(&x, &y).0)
}

fn slope_check(cfg: &ExperimentConfig, name: &str, slope: Option<f64>, all_zero: bool) -> Check {
    match slope {
        _ if all_zero => check(name, true, "all deviations are exactly zero"),
        Some(s) => check(
            name,
            s >= cfg.slope_min && s <= cfg.slope_max,
            format!("slope {s:.4} in [{}, {}]", cfg.slope_min, cfg.slope_max),
        ),
        None => check(name, false, "fewer than two positive points to fit"),
    }
}

/// Exact `P(T ≤ k)` for `k = 1..=kmax`.
fn limit_cdf(pmf: impl Fn(u64) -> f64, kmax: u32) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=u64::from(kmax))
        .map(|k| {
            acc += pmf(k);
            acc
        })
        .collect()
}

/// Runs `cmd` with `cfg`.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate(cmd)?;
    let mut cfg = cfg.clone();
    cfg.t = Some(cfg.time_for(cmd));
    let cfg = &cfg;
    match cmd {
        Command::ComponentLaw => cmd_component_law(cfg),
        Command::TwoComponents => cmd_two_components(cfg),
        Command::PhaseScan => cmd_phase_scan(cfg),
        Command::Hydro => cmd_hydro(cfg),
        Command::FixedLength => cmd_fixed_length(cfg),
        Command::IntermediateGap => cmd_intermediate_gap(cfg),
    }
}

struct LawScan {
    /// Per n: deviation, its standard error, the k = 1 cell.
    dev: Vec<(f64, f64, f64)>,
    table: Table,
    warnings: Vec<String>,
}

/// Shared core of the component-law comparisons.
fn scan_component_law(
    cfg: &ExperimentConfig,
    report: &mut Report,
    ns: &[u32],
    fixed_j: Option<u32>,
    exact: &[f64],
    label: &str,
) -> Result<LawScan> {
    let reps = cfg.replicas_for(report.command);
    let mut table = Table::new(label, &["n", "k", "p_hat", "p_limit", "abs_dev", "se"]);
    let mut dev = Vec::new();
    let mut warnings = Vec::new();
    for &n in ns {
        let params = ModelParams::new(n, cfg.eps)?;
        let sampler = SoupSampler::new(params);
        let horizon = horizon(cfg, n, fixed_j);
        let block = report.block(format!("{label} n={n}"), reps);
        let rows = run_replicas(reps, |r| {
            let st = soup_state(&params, &sampler, fixed_j, horizon, cfg.seed, stream_id(block, r))?;
            Ok(vertex_cdf(&st, cfg.kmax))
        })?;
        let (mut sup, mut sup_se) = (0.0, 0.0);
        let mut k1 = 0.0;
        for k in 0..cfg.kmax as usize {
            let (m, se) = column_mean_se(&rows, k);
            let d = (m - exact[k]).abs();
            if k == 0 {
                k1 = m;
            }
            if k == 0 || d > sup {
                sup = d;
                sup_se = se;
            }
            table.push(row![n, k + 1, m, exact[k], d, se]);
        }
        if sup > 0.0 && 6.0 * sup_se > sup {
            let need = (reps as f64 * (6.0 * sup_se / sup).powi(2)).ceil();
            warnings.push(format!(
                "{label} n={n}: Monte Carlo error {sup_se:.2e} is large against deviation {sup:.2e}; \
                 about {need} replicas are needed"
            ));
        }
        dev.push((sup, sup_se, k1));
    }
    Ok(LawScan { dev, table, warnings })
}

fn horizon(cfg: &ExperimentConfig, n: u32, fixed_j: Option<u32>) -> f64 {
    let base = f64::from(n) * cfg.time();
    match fixed_j {
        None => base,
        Some(j) => base * (cfg.eps + 1.0).powi(j as i32),
    }
}

/// Deviation of the component-size law from the total-progeny law across a
/// doubling grid of `n`, with a log-log slope fit.
pub fn cmd_component_law(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::ComponentLaw);
    let ns = cfg.n_grid_or(&[250, 500, 1000, 2000]);
    let off = Offspring::CpGeo(CPGeo::from_model(cfg.eps, cfg.time())?);
    let exact = limit_cdf(|k| off.progeny_pmf(1, k), cfg.kmax);
    let scan = scan_component_law(cfg, &mut report, &ns, None, &exact, "component_law")?;
    let mut summary = Table::new("component_law_summary", &["n", "deviation", "se", "p_hat_k1", "p_k1"]);
    let p1 = (-cfg.time() / (cfg.eps * (cfg.eps + 1.0))).exp();
    for (&n, &(d, se, k1)) in ns.iter().zip(&scan.dev) {
        summary.push(row![n, d, se, k1, p1]);
    }
    let devs: Vec<f64> = scan.dev.iter().map(|d| d.0).collect();
    let all_zero = devs.iter().all(|&d| d == 0.0);
    let slope = log_log_slope(&ns, &devs);
    report.checks.push(slope_check(cfg, "deviation decays like 1/n", slope, all_zero));
    report.summary = json!({ "n": ns, "deviation": devs, "slope": slope });
    report.warnings = scan.warnings;
    report.tables = vec![scan.table, summary];
    Ok(report)
}

/// Joint law of the component sizes of vertices 1 and 2.
pub fn cmd_two_components(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::TwoComponents);
    let n = cfg.n.unwrap_or(2000);
    let params = ModelParams::new(n, cfg.eps)?;
    let sampler = SoupSampler::new(params);
    let reps = cfg.replicas_for(Command::TwoComponents);
    let h = horizon(cfg, n, None);
    let block = report.block(format!("two_components n={n}"), reps);
    let cells = cfg.kmax.min(8) as usize + 1;
    let pairs = run_replicas(reps, |r| {
        let mut st = soup_state(&params, &sampler, None, h, cfg.seed, stream_id(block, r))?;
        let same = st.find(1)? == st.find(2)?;
        Ok((st.component_size(1)?, st.component_size(2)?, same))
    })?;
    let cell = |s: u32| (s as usize).min(cells) - 1;
    let mut counts = vec![vec![0u64; cells]; cells];
    let mut same = 0u64;
    let mut size_sum = 0u64;
    for &(a, b, s) in &pairs {
        counts[cell(a)][cell(b)] += 1;
        same += u64::from(s);
        size_sum += u64::from(a) + u64::from(b);
    }
    let indep = chi_square_independence(&counts);
    let off = Offspring::CpGeo(CPGeo::from_model(cfg.eps, cfg.time())?);
    let marg: Vec<f64> = (1..cells as u64).map(|k| off.progeny_pmf(1, k)).collect();
    let mut marg_full = marg.clone();
    marg_full.push((1.0 - marg.iter().sum::<f64>()).max(0.0));
    let probs: Vec<f64> = (0..cells * cells)
        .map(|i| marg_full[i / cells] * marg_full[i % cells])
        .collect();
    let flat: Vec<u64> = counts.iter().flatten().copied().collect();
    let gof = chi_square_gof(&flat, &probs, 5.0);
    let mut table = Table::new("two_components", &["size_x", "size_y", "count", "expected_product"]);
    for i in 0..cells {
        for j in 0..cells {
            let label = |c: usize| if c + 1 == cells { format!(">{}", cells - 1) } else { (c + 1).to_string() };
            table.push(row![label(i), label(j), counts[i][j], probs[i * cells + j] * reps as f64]);
        }
    }
    let same_freq = same as f64 / reps as f64;
    let mean_size = size_sum as f64 / (2 * reps) as f64;
    let same_pred = (mean_size - 1.0) / f64::from(n - 1);
    report.checks.push(check(
        "sizes of two vertices are independent",
        indep.p_value > cfg.alpha,
        format!("chi2 = {:.3}, df = {}, p = {:.4}", indep.statistic, indep.df, indep.p_value),
    ));
    report.summary = json!({
        "n": n,
        "independence": { "statistic": indep.statistic, "df": indep.df, "p_value": indep.p_value },
        "product_law_fit": { "statistic": gof.statistic, "df": gof.df, "p_value": gof.p_value },
        "same_component_freq": same_freq,
        "same_component_pred": same_pred,
    });
    report.tables.push(table);
    Ok(report)
}

/// Largest and second-largest components across a grid of times.
pub fn cmd_phase_scan(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::PhaseScan);
    let mut ts = cfg.t_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    ts.sort_by(f64::total_cmp);
    if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::Config("t_grid must hold finite times ≥ 0".into()));
    }
    let ns = cfg.n_grid_or(&[100_000]);
    let reps = cfg.replicas_for(Command::PhaseScan);
    let eps2 = cfg.eps * cfg.eps;
    let mut table = Table::new("phase_scan", &["t", "n", "rep", "c1", "c2"]);
    let mut summary = Table::new("phase_scan_summary", &["t", "n", "regime", "statistic", "threshold", "passed"]);
    let mut out = Vec::new();
    for &n in &ns {
        let params = ModelParams::new(n, cfg.eps)?;
        let sampler = SoupSampler::new(params);
        let nf = f64::from(n);
        let block = report.block(format!("phase_scan n={n}"), reps);
        let tmax = *ts.last().expect("non-empty");
        let runs = run_replicas(reps, |r| {
            let mut rng = rng::stream(cfg.seed, stream_id(block, r));
            let loops = sampler.sample_loops(nf * tmax, &mut rng);
            let mut st = ClusterState::new(n)?;
            let mut it = loops.iter().peekable();
            let mut tops = Vec::with_capacity(ts.len());
            for &t in &ts {
                while let Some(tl) = it.next_if(|tl| tl.time <= nf * t) {
                    st.apply_loop(&tl.lp, tl.time)?;
                }
                tops.push(st.top2());
            }
            Ok(tops)
        })?;
        for (ti, &t) in ts.iter().enumerate() {
            for (r, tops) in runs.iter().enumerate() {
                table.push(row![t, n, r, tops[ti].0, tops[ti].1]);
            }
            let c1: Vec<f64> = runs.iter().map(|v| f64::from(v[ti].0)).collect();
            let c2: Vec<f64> = runs.iter().map(|v| f64::from(v[ti].1)).collect();
            let logn = nf.ln();
            if t < eps2 && t > 0.0 {
                let h = cramer_h(cfg.eps, t)?;
                let thr = cfg.a_factor / h * logn;
                let frac = c1.iter().filter(|&&c| c > thr).count() as f64 / reps as f64;
                let ok = frac < cfg.sub_prob_max;
                summary.push(row![t, n, "subcritical", frac, thr, ok]);
                report.checks.push(check(
                    format!("t={t} n={n}: largest component is O(log n)"),
                    ok,
                    format!("P(c1 > {thr:.1}) = {frac} < {}", cfg.sub_prob_max),
                ));
                out.push(json!({"t": t, "n": n, "h": h, "threshold": thr, "exceed_freq": frac}));
            } else if t > eps2 {
                let q = extinction_prob(&CPGeo::from_model(cfg.eps, t)?);
                let close = c1.iter().filter(|&&c| (c / nf - (1.0 - q)).abs() < cfg.super_tol).count();
                let frac = close as f64 / reps as f64;
                let c2max = c2.iter().copied().fold(0.0, f64::max);
                let ok1 = frac >= cfg.super_frac_min;
                let ok2 = c2max <= cfg.c2_log_factor * logn;
                summary.push(row![t, n, "supercritical giant", frac, cfg.super_frac_min, ok1]);
                summary.push(row![t, n, "supercritical second", c2max, cfg.c2_log_factor * logn, ok2]);
                report.checks.push(check(
                    format!("t={t} n={n}: giant fraction near 1-q"),
                    ok1,
                    format!("|c1/n - {:.6}| < {} in {frac} of replicas", 1.0 - q, cfg.super_tol),
                ));
                report.checks.push(check(
                    format!("t={t} n={n}: second component is O(log n)"),
                    ok2,
                    format!("max c2 = {c2max} ≤ {:.1}", cfg.c2_log_factor * logn),
                ));
                out.push(json!({"t": t, "n": n, "q": q, "giant_close_freq": frac, "c2_max": c2max,
                    "c2_over_log_n": c2max / logn}));
            } else {
                let (m, _) = mean_var(&c1);
                summary.push(row![t, n, if t == 0.0 { "empty" } else { "critical" }, m, "", true]);
                if t == 0.0 {
                    report.checks.push(check(
                        format!("t=0 n={n}: all singletons"),
                        c1.iter().all(|&c| c == 1.0),
                        "c1 = 1",
                    ));
                }
                out.push(json!({"t": t, "n": n, "c1_mean": m}));
            }
        }
    }
    report.summary = Value::Array(out);
    report.tables = vec![table, summary];
    Ok(report)
}

struct HydroScan {
    mse: Vec<f64>,
    table: Table,
    partition_ok: bool,
    /// Average fraction of vertices in components off the `1 + (j−1)ℕ` lattice.
    off_lattice: Vec<f64>,
}

fn scan_hydro(
    cfg: &ExperimentConfig,
    report: &mut Report,
    ns: &[u32],
    fixed_j: Option<u32>,
    exact: &[f64],
    label: &str,
) -> Result<HydroScan> {
    let reps = cfg.replicas_for(report.command);
    let mut table = Table::new(label, &["n", "k", "rho_hat_mean", "rho_limit", "mse"]);
    let mut mse_tot = Vec::new();
    let mut off_lattice = Vec::new();
    let mut partition_ok = true;
    for &n in ns {
        let params = ModelParams::new(n, cfg.eps)?;
        let sampler = SoupSampler::new(params);
        let h = horizon(cfg, n, fixed_j);
        let block = report.block(format!("{label} n={n}"), reps);
        let step = fixed_j.map_or(1, |j| j - 1);
        let rows = run_replicas(reps, |r| {
            let st = soup_state(&params, &sampler, fixed_j, h, cfg.seed, stream_id(block, r))?;
            let mass: u64 = st.hist().iter().map(|(&s, &c)| u64::from(s) * c).sum();
            let off: u64 = st
                .hist()
                .iter()
                .filter(|(&s, _)| (s - 1) % step != 0)
                .map(|(&s, &c)| u64::from(s) * c)
                .sum();
            let rho: Vec<f64> = (1..=cfg.kmax).map(|k| st.rho_hat(k)).collect();
            Ok((rho, mass == u64::from(n), off as f64 / f64::from(n)))
        })?;
        partition_ok &= rows.iter().all(|r| r.1);
        let mut tot = 0.0;
        for k in 0..cfg.kmax as usize {
            let (m, _) = mean_var(&rows.iter().map(|r| r.0[k]).collect::<Vec<_>>());
            let mse = rows.iter().map(|r| (r.0[k] - exact[k]).powi(2)).sum::<f64>() / reps as f64;
            tot += mse;
            table.push(row![n, k + 1, m, exact[k], mse]);
        }
        mse_tot.push(tot);
        off_lattice.push(rows.iter().map(|r| r.2).sum::<f64>() / reps as f64);
    }
    Ok(HydroScan {
        mse: mse_tot,
        table,
        partition_ok,
        off_lattice,
    })
}

fn hydro_checks(cfg: &ExperimentConfig, report: &mut Report, ns: &[u32], scan: &HydroScan) -> Option<f64> {
    report.checks.push(check(
        "Σ k ρ̂(k) = 1 in every replica",
        scan.partition_ok,
        "component sizes partition the vertex set",
    ));
    let all_zero = scan.mse.iter().all(|&m| m == 0.0);
    let decreasing = scan.mse.windows(2).all(|w| w[1] <= w[0]);
    report.checks.push(check(
        "mean-square error decreases in n",
        decreasing,
        format!("{:?}", scan.mse),
    ));
    let slope = log_log_slope(ns, &scan.mse);
    report.checks.push(slope_check(cfg, "mean-square error decays like 1/n", slope, all_zero));
    slope
}

/// Mean-square error of the empirical cluster densities against the analytic profile.
pub fn cmd_hydro(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::Hydro);
    let ns = cfg.n_grid_or(&[500, 1000, 2000, 4000]);
    let off = Offspring::CpGeo(CPGeo::from_model(cfg.eps, cfg.time())?);
    let exact: Vec<f64> = (1..=u64::from(cfg.kmax)).map(|k| off.progeny_pmf(1, k) / k as f64).collect();
    let unvalidated = cfg.time() > cfg.eps * cfg.eps;
    if unvalidated {
        report
            .warnings
            .push(format!("t = {} exceeds ε² = {}: outside the mass-conserving regime", cfg.time(), cfg.eps * cfg.eps));
    }
    let scan = scan_hydro(cfg, &mut report, &ns, None, &exact, "hydro")?;
    let slope = hydro_checks(cfg, &mut report, &ns, &scan);
    report.summary = json!({ "n": ns, "mse": scan.mse, "slope": slope, "unvalidated": unvalidated });
    report.tables.push(scan.table);
    Ok(report)
}

/// Component law and densities for soups made of loops of one length `j`.
pub fn cmd_fixed_length(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::FixedLength);
    let j = cfg.j;
    if j < 2 {
        return Err(Error::Config(format!("j = {j} must be at least 2")));
    }
    let ns = cfg.n_grid_or(&[500, 1000, 2000, 4000]);
    let exact_cdf = limit_cdf(|k| fixed_length_progeny_pmf(1, j, cfg.time(), k), cfg.kmax);
    let scan = scan_component_law(cfg, &mut report, &ns, Some(j), &exact_cdf, "fixed_length_law")?;
    let devs: Vec<f64> = scan.dev.iter().map(|d| d.0).collect();
    let slope_law = log_log_slope(&ns, &devs);
    report.checks.push(slope_check(
        cfg,
        "component law deviation decays like 1/n",
        slope_law,
        devs.iter().all(|&d| d == 0.0),
    ));
    let exact_rho: Vec<f64> = (1..=u64::from(cfg.kmax))
        .map(|k| fixed_length_progeny_pmf(1, j, cfg.time(), k) / k as f64)
        .collect();
    let hydro = scan_hydro(cfg, &mut report, &ns, Some(j), &exact_rho, "fixed_length_rho")?;
    let slope_rho = hydro_checks(cfg, &mut report, &ns, &hydro);
    let anomaly_drops = hydro.off_lattice.first() >= hydro.off_lattice.last();
    report.checks.push(check(
        "off-lattice component mass does not grow with n",
        anomaly_drops,
        format!("{:?}", hydro.off_lattice),
    ));
    let mut lattice = Table::new("fixed_length_lattice", &["n", "off_lattice_fraction"]);
    for (&n, &f) in ns.iter().zip(&hydro.off_lattice) {
        lattice.push(row![n, f]);
    }
    report.summary = json!({
        "j": j, "n": ns, "deviation": devs, "deviation_slope": slope_law,
        "mse": hydro.mse, "mse_slope": slope_rho, "off_lattice": hydro.off_lattice,
    });
    report.warnings = scan.warnings;
    report.tables = vec![scan.table, hydro.table, lattice];
    Ok(report)
}

/// Supercritical exploration: how often the active set dips below `c₂ k`
/// inside `[c₁ log n, n^β]`, and how often two components exceed `c₁ log n`.
pub fn cmd_intermediate_gap(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(Command::IntermediateGap);
    let eps2 = cfg.eps * cfg.eps;
    let ns = cfg.n_grid_or(&[1_000, 10_000, 100_000]);
    let reps = cfg.replicas_for(Command::IntermediateGap);
    if !(cfg.beta > 0.5 && cfg.beta < 1.0) {
        return Err(Error::Config(format!("beta = {} must be in (1/2, 1)", cfg.beta)));
    }
    let c1 = match cfg.c1 {
        Some(c) => c,
        None if cfg.time() > eps2 => {
            let dual = dual_params(&CPGeo::from_model(cfg.eps, cfg.time())?)?;
            1.0 / Offspring::CpGeo(dual).cramer_h()
        }
        None => 1.0,
    };
    if cfg.time() > 0.0 {
        if cfg.time() <= eps2 {
            return Err(Error::Config(format!("t = {} must exceed ε² = {eps2}", cfg.time())));
        }
        let cap = (cfg.time() / eps2 - 1.0).min(1.0);
        if !(cfg.c2 > 0.0 && cfg.c2 < cap) {
            return Err(Error::Config(format!("c2 = {} must be in (0, {cap})", cfg.c2)));
        }
    }
    let mut table = Table::new("intermediate_gap", &["n", "window_lo", "window_hi", "dip_freq", "two_large_freq"]);
    let (mut dips, mut twos) = (Vec::new(), Vec::new());
    for &n in &ns {
        let params = ModelParams::new(n, cfg.eps)?;
        let nf = f64::from(n);
        let lo = (c1 * nf.ln()).ceil() as u64;
        let hi = nf.powf(cfg.beta).floor() as u64;
        let block = report.block(format!("intermediate_gap n={n}"), reps);
        let res = run_replicas(reps, |r| {
            let soup = sample_soup_stream(&params, nf * cfg.time(), cfg.seed, stream_id(block, r))?;
            let tr = Explorer::new(&soup, soup.horizon()).explore_until(1, hi)?;
            let dip = (lo.max(1)..=hi.min(tr.active_sizes.len() as u64))
                .any(|k| (tr.active_sizes[k as usize - 1] as f64) < cfg.c2 * k as f64);
            let mut st = ClusterState::new(n)?;
            for tl in soup.loops() {
                st.apply_loop(&tl.lp, tl.time)?;
            }
            let two = f64::from(st.top2().1) > c1 * nf.ln();
            Ok((dip, two))
        })?;
        let dip = res.iter().filter(|r| r.0).count() as f64 / reps as f64;
        let two = res.iter().filter(|r| r.1).count() as f64 / reps as f64;
        table.push(row![n, lo, hi, dip, two]);
        dips.push(dip);
        twos.push(two);
    }
    report.checks.push(check(
        "dip frequency decreases in n",
        decreasing_within_noise(&dips, reps) || dips.iter().all(|&f| f == 0.0),
        format!("{dips:?}"),
    ));
    report.checks.push(check(
        "two-large-components frequency decreases in n",
        decreasing_within_noise(&twos, reps) || twos.iter().all(|&f| f == 0.0),
        format!("{twos:?}"),
    ));
    report.summary = json!({ "n": ns, "c1": c1, "c2": cfg.c2, "beta": cfg.beta, "dip_freq": dips, "two_large_freq": twos });
    report.tables.push(table);
    Ok(report)
}

/// Frequencies from `reps` trials decrease: each step rises by at most two
/// standard errors of the difference, and the last is strictly below the first.
fn decreasing_within_noise(freqs: &[f64], reps: u64) -> bool {
    let se = |p: f64| binomial_se(p, reps as usize);
    let steps = freqs
        .windows(2)
        .all(|w| w[1] - w[0] <= 2.0 * (se(w[0]).powi(2) + se(w[1]).powi(2)).sqrt());
    steps && freqs.last() < freqs.first()
}

/// Writes every table as `<name>.csv` and `run_record.json` into `dir`.
pub fn write_outputs(report: &Report, cfg: &ExperimentConfig, dir: &Path, wall_time_s: f64) -> Result<RunRecord> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for t in &report.tables {
        let name = format!("{}.csv", t.name);
        fs::write(dir.join(&name), t.to_csv())?;
        names.push(name);
    }
    let record = RunRecord {
        command: report.command,
        config: cfg.clone(),
        generator_id: GENERATOR_ID,
        code_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        stream_rule: STREAM_RULE,
        streams: report.streams.clone(),
        wall_time_s,
        passed: report.passed(),
        checks: report.checks.clone(),
        warnings: report.warnings.clone(),
        summary: report.summary.clone(),
        tables: names,
    };
    fs::write(dir.join("run_record.json"), serde_json::to_string_pretty(&record)?)?;
    Ok(record)
}
