use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use loopsoup::coagulation::{self, DensityVector, SolverConfig};
use loopsoup::experiments::{self, Command, ExperimentConfig};
use loopsoup::exploration::{self, Explorer};
use loopsoup::gw_analytics::{CPGeo, FixedLengthOffspring, Offspring, ProgenyLaw};
use loopsoup::loop_measure::{sample_fixed_length_soup_stream, sample_soup_stream};
use loopsoup::{LoopSoup, ModelParams, Result};

#[derive(Parser)]
#[command(name = "loopsoup", version, about = "Loop soups on the complete graph: experiments and analytic tables")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Component-size law against the total-progeny law over a grid of n.
    ComponentLaw(ExpArgs),
    /// Joint law of the components of two vertices.
    TwoComponents(ExpArgs),
    /// Largest and second-largest components across a time grid.
    PhaseScan(ExpArgs),
    /// Empirical cluster densities against the analytic profile.
    Hydro(ExpArgs),
    /// Fixed-length soups: component law, densities, lattice anomalies.
    FixedLength(ExpArgs),
    /// Supercritical exploration windows and uniqueness of large components.
    IntermediateGap(ExpArgs),
    /// Total-progeny table of the limiting branching process.
    GwTable(GwArgs),
    /// Integrate the coagulation equations from the monodisperse state.
    CoagSolve(CoagArgs),
    /// Sample a loop soup and write it to a file.
    SampleSoup(SoupArgs),
    /// Explore the component of a vertex in a stored soup.
    Explore(ExploreArgs),
}

#[derive(Args)]
struct ExpArgs {
    /// Flat JSON configuration; all fields optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GwArgs {
    /// Number of ancestors.
    #[arg(long, default_value_t = 1)]
    u: u32,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    t: f64,
    /// Use the fixed-length-j offspring law instead.
    #[arg(long)]
    j: Option<u32>,
    /// Tail tolerance of the adaptive cutoff.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Fixed cutoff instead of the adaptive one (required at criticality).
    #[arg(long)]
    kmax: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CoagArgs {
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long = "K", default_value_t = 60)]
    k: usize,
    #[arg(long = "Jmax", default_value_t = 40)]
    jmax: u32,
    #[arg(long, default_value_t = coagulation::DEFAULT_DT)]
    dt: f64,
    /// Solve the fixed-arity system instead of the full one.
    #[arg(long)]
    fixed_j: Option<u32>,
    /// Number of equally spaced output times.
    #[arg(long, default_value_t = 10)]
    outputs: u32,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SoupArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Soup horizon (not rescaled by n).
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Only loops of this length.
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    soup: PathBuf,
    /// Soup time (defaults to the horizon).
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 1)]
    x: u32,
    /// Also run the dominating walk with this auxiliary seed.
    #[arg(long)]
    aux_seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::ComponentLaw(a) => experiment(Command::ComponentLaw, a),
        Cmd::TwoComponents(a) => experiment(Command::TwoComponents, a),
        Cmd::PhaseScan(a) => experiment(Command::PhaseScan, a),
        Cmd::Hydro(a) => experiment(Command::Hydro, a),
        Cmd::FixedLength(a) => experiment(Command::FixedLength, a),
        Cmd::IntermediateGap(a) => experiment(Command::IntermediateGap, a),
        Cmd::GwTable(a) => gw_table(a),
        Cmd::CoagSolve(a) => coag_solve(a),
        Cmd::SampleSoup(a) => sample(a),
        Cmd::Explore(a) => explore(a),
    }
}

fn experiment(cmd: Command, a: ExpArgs) -> Result<bool> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.replicas.is_some() {
        cfg.replicas = a.replicas;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cmd.name()));
    let start = Instant::now();
    let report = experiments::run(cmd, &cfg)?;
    let record = experiments::write_outputs(&report, &cfg, &dir, start.elapsed().as_secs_f64())?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    for c in &record.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("outputs in {}", dir.display());
    Ok(record.passed)
}

fn gw_table(a: GwArgs) -> Result<bool> {
    let off: Offspring = match a.j {
        Some(j) => FixedLengthOffspring::new(j, a.t)?.into(),
        None => CPGeo::from_model(a.eps, a.t)?.into(),
    };
    let (pmf, tail_bound) = match a.kmax {
        Some(k) => ((0..=k).map(|k| off.progeny_pmf(a.u, k)).collect::<Vec<_>>(), None),
        None => {
            if off.mean() == 1.0 {
                return Err(loopsoup::Error::Config("critical law: pass --kmax".into()));
            }
            let law = ProgenyLaw::new(off, a.u, a.tol)?;
            (law.pmf, Some(law.tail_bound))
        }
    };
    fs::create_dir_all(&a.out)?;
    let mut w = BufWriter::new(File::create(a.out.join("gw_table.csv"))?);
    writeln!(w, "k,pmf,cdf")?;
    let mut cdf = 0.0;
    for (k, p) in pmf.iter().enumerate().skip(a.u as usize) {
        cdf += p;
        writeln!(w, "{k},{p},{cdf}")?;
    }
    w.flush()?;
    let mean = off.mean();
    let (rate_kind, rate) = if mean < 1.0 {
        ("h", off.cramer_h())
    } else if mean > 1.0 {
        ("I", off.tail_rate_i())
    } else {
        ("critical", 0.0)
    };
    let summary = json!({
        "u": a.u, "q": off.extinction_prob(), "mean": mean,
        "rate_kind": rate_kind, "h_or_I": rate,
        "k_max": pmf.len() - 1, "mass": cdf, "tail_bound": tail_bound,
    });
    fs::write(a.out.join("gw_table.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{summary}");
    Ok(true)
}

fn coag_solve(a: CoagArgs) -> Result<bool> {
    let cfg = match a.fixed_j {
        Some(j) => SolverConfig::fixed(a.k, j, a.dt)?,
        None => SolverConfig::new(a.k, a.jmax, a.dt, a.eps)?,
    };
    let rho0 = DensityVector::monodisperse(a.k)?;
    let m = a.outputs.max(1);
    let times: Vec<f64> = (1..=m).map(|i| a.t_end * f64::from(i) / f64::from(m)).collect();
    let traj = coagulation::integrate(&rho0, a.t_end, &cfg, &times)?;
    fs::create_dir_all(&a.out)?;
    coagulation::write_rho_csv(BufWriter::new(File::create(a.out.join("rho.csv"))?), &traj)?;
    coagulation::write_moments_csv(BufWriter::new(File::create(a.out.join("moments.csv"))?), &traj)?;
    if traj.unvalidated {
        eprintln!(
            "warning: t_end = {} is past {}, where no analytic solution is available",
            a.t_end,
            cfg.validated_until()
        );
    }
    println!(
        "{}",
        json!({ "clamp_events": traj.clamp_events, "unvalidated": traj.unvalidated,
                "final_gel": traj.states.last().map(|s| s.gel()) })
    );
    Ok(true)
}

fn sample(a: SoupArgs) -> Result<bool> {
    let params = ModelParams::new(a.n, a.eps)?;
    let soup = match a.j {
        Some(j) => sample_fixed_length_soup_stream(&params, j, a.horizon, a.seed, a.stream)?,
        None => sample_soup_stream(&params, a.horizon, a.seed, a.stream)?,
    };
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    soup.write_to(BufWriter::new(File::create(&a.out)?))?;
    println!("{} loops written to {}", soup.len(), a.out.display());
    Ok(true)
}

fn read_soup(p: &Path) -> Result<LoopSoup> {
    LoopSoup::read_from(BufReader::new(File::open(p)?))
}

fn explore(a: ExploreArgs) -> Result<bool> {
    let soup = read_soup(&a.soup)?;
    let t = a.t.unwrap_or(soup.horizon());
    let ex = Explorer::new(&soup, t);
    let tr = ex.explore(a.x)?;
    fs::create_dir_all(&a.out)?;
    exploration::write_trace_csv(BufWriter::new(File::create(a.out.join("trace.csv"))?), &tr)?;
    let mut summary = serde_json::to_value(exploration::trace_summary(&tr))?;
    if let Some(seed) = a.aux_seed {
        let cap = 10 * u64::from(soup.params().n());
        let gw = ex.couple_gw(a.x, seed, cap)?;
        summary["t_bar"] = json!(gw.t_bar);
        summary["walk_censored"] = json!(gw.censored);
    }
    fs::write(a.out.join("trace.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{summary}");
    Ok(true)
}
