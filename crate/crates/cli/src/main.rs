use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use raptor_core::config::RunConfig;
use raptor_core::design::sweep_alpha;
use raptor_core::evolution::{alpha_min, delta_max, stability_floor_omega2};
use raptor_core::experiment::{predict_threshold, Campaign};
use raptor_core::transfer::threshold_xp;
use raptor_core::TransferFunction;

/// Design, analysis and simulation of raptor codes on the binary-input AWGN channel.
#[derive(Parser)]
#[command(name = "raptor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the LT output degree distribution over the configured α grid.
    Design(Common),
    /// Run the IC trajectory of a distribution and report its threshold.
    Analyze(Common),
    /// Simulate BER versus overhead and write CSV.
    Simulate(Common),
    /// Tabulate the extrinsic transfer curve of an LDPC ensemble.
    Transfer(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of a simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn set_workers(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    Ok(())
}

fn design(args: &Common, cfg: &RunConfig) -> Result<()> {
    set_workers(args.workers)?;
    let dcfg = cfg.design()?;
    let sweep = sweep_alpha(&dcfg)?;
    for (alpha, rate) in sweep.profile() {
        match rate {
            Some(r) => eprintln!("alpha {alpha}: rate_lt {r:.6}"),
            None => eprintln!("alpha {alpha}: infeasible or unverified"),
        }
    }
    for r in sweep.results.iter().filter(|r| r.flagged()) {
        log::warn!("alpha {}: LP optimum failed fine-grid verification", r.alpha);
    }
    let Some(best) = sweep.best else {
        bail!("no feasible verified design on the alpha grid");
    };
    let dist = best.distribution.as_ref().context("best design carries no distribution")?;
    let mut out = sink(args.out.as_deref())?;
    out.write_all(dist.to_text().as_bytes())?;
    out.flush()?;
    if let Some(p) = &args.out {
        let report = p.with_extension("report.txt");
        std::fs::write(&report, best.report_text(&dcfg)).with_context(|| format!("writing {}", report.display()))?;
        eprintln!("best alpha {} rate_lt {:.6}; report in {}", best.alpha, best.rate_lt, report.display());
    } else {
        eprint!("{}", best.report_text(&dcfg));
    }
    Ok(())
}

fn analyze(args: &Common, cfg: &RunConfig) -> Result<()> {
    let channel = cfg.channel()?;
    let transfer = cfg.transfer()?;
    let x_p = cfg.precode_threshold(&transfer)?;
    let (section, dist) = cfg.analysis()?;
    let rate_p = section.precode_rate.unwrap_or(1.0);
    let pred = predict_threshold(&dist, &channel, &transfer, x_p, section.alpha, rate_p)?;
    let last = pred.trajectory.final_point();
    let mut s = String::new();
    use std::fmt::Write as _;
    writeln!(s, "capacity = {:.9}", channel.x0)?;
    writeln!(s, "x_p = {:.9}", x_p.get())?;
    writeln!(s, "alpha = {}", section.alpha)?;
    writeln!(s, "rate_lt = {:.9}", pred.rate_lt)?;
    writeln!(s, "reachable = {}", pred.reachable)?;
    writeln!(s, "iterations = {}", last.iteration)?;
    writeln!(s, "fixed_point.x_u = {:.9}", last.x_u)?;
    writeln!(s, "fixed_point.x_ext = {:.9}", last.x_ext)?;
    writeln!(s, "threshold_overhead = {:.6}", pred.overhead)?;
    if x_p.get() > 0.0 {
        let floor = alpha_min(&channel, x_p)?;
        writeln!(s, "alpha_min = {floor:.6}")?;
        if section.alpha >= floor {
            writeln!(s, "delta_max = {:.6}", delta_max(section.alpha, &channel, x_p)?)?;
        }
    }
    if section.alpha > 1.0 {
        writeln!(s, "omega2_floor = {:.9}", stability_floor_omega2(section.alpha, &channel)?)?;
    }
    writeln!(s, "omega2 = {:.9}", dist.edge_weight(2))?;
    print!("{s}");
    if let Some(p) = &args.out {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("creating {}", p.display()))?;
        w.write_record(["iteration", "x_u", "x_v", "x_ext"])?;
        for pt in &pred.trajectory.points {
            w.write_record([pt.iteration.to_string(), pt.x_u.to_string(), pt.x_v.to_string(), pt.x_ext.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn simulate(args: &Common, cfg: &RunConfig) -> Result<()> {
    let mut ecfg = cfg.experiment()?;
    if let Some(seed) = args.seed {
        ecfg.master_seed = seed;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        ecfg.workers = w;
    }
    let campaign = Campaign::new(ecfg)?;
    campaign.run(sink(args.out.as_deref())?)?;
    Ok(())
}

fn transfer(args: &Common, cfg: &RunConfig) -> Result<()> {
    let ens = cfg.ldpc_ensemble()?;
    let points = cfg.transfer.points.unwrap_or(201);
    if points < 2 {
        bail!("[transfer] points must be at least 2");
    }
    let x_p = threshold_xp(&ens, raptor_core::config::THRESHOLD_TOL)?;
    let text = TransferFunction::AnalyticLdpc(ens).to_table_text(points);
    let mut out = sink(args.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    eprintln!("x_p = {:.9}", x_p.get());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (args, f): (&Common, fn(&Common, &RunConfig) -> Result<()>) = match &cli.command {
        Command::Design(a) => (a, design),
        Command::Analyze(a) => (a, analyze),
        Command::Simulate(a) => (a, simulate),
        Command::Transfer(a) => (a, transfer),
    };
    let cfg = RunConfig::load(&args.config)?;
    f(args, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
