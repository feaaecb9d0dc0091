use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use submodular_bandits::config::ExperimentConfig;
use submodular_bandits::experiment::{run_experiment, run_oracle_bench};
use submodular_bandits::t_operator::{WeightFamily, WeightTable, DEFAULT_QUAD_POINTS};
use submodular_bandits::testkit::{run_battery, BATTERIES};

#[derive(Parser)]
#[command(name = "subbandit", version, about = "Submodular contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write per-seed and summary CSVs.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the structural verification batteries.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BATTERIES))]
        battery: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the weight table as CSV.
    Weights {
        #[arg(long)]
        kmax: usize,
        #[arg(long, value_enum, default_value_t = Family::FilmusWard)]
        family: Family,
        #[arg(long, default_value_t = DEFAULT_QUAD_POINTS)]
        quad: usize,
    },
    /// Oracle-only regression runs at horizons n and 4n.
    BenchOracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    FilmusWard,
    Literal,
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(path)?)
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<bool> {
    let cfg = load(&config)?;
    let dir = out.unwrap_or_else(|| cfg.output.clone());
    let res = run_experiment(&cfg, &dir).context("experiment failed")?;
    println!("{:<8} {:>8} {:>14} {:>12} {:>10}", "c", "t", "mean_regret", "std", "slope");
    for r in &res.summary {
        let slope = match r.mean_slope {
            Some(s) => format!("{s:.4}"),
            None if r.nonpositive > 0 => "nonpos".to_string(),
            None => "-".to_string(),
        };
        println!("{:<8.4} {:>8} {:>14.4} {:>12.4} {:>10}", r.c, r.t, r.mean, r.std, slope);
    }
    for f in &res.files {
        log::info!("wrote {}", f.display());
    }
    Ok(true)
}

fn verify(battery: Option<String>, seed: u64) -> Result<bool> {
    let table = WeightTable::compute(3, DEFAULT_QUAD_POINTS)?;
    let names: Vec<&str> = match &battery {
        Some(b) => vec![b.as_str()],
        None => BATTERIES.to_vec(),
    };
    println!("{:<12} {:>9} {:>14} {:>9} {:>6}", "battery", "instances", "min_slack", "failures", "status");
    let mut all = true;
    for name in names {
        let r = run_battery(name, seed, &table)?;
        let ok = r.passed();
        all &= ok;
        println!(
            "{:<12} {:>9} {:>14.3e} {:>9} {:>6}",
            r.name,
            r.instances,
            r.min_slack,
            r.failures,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(all)
}

fn weights(kmax: usize, family: Family, quad: usize) -> Result<bool> {
    let family = match family {
        Family::FilmusWard => WeightFamily::FilmusWard,
        Family::Literal => WeightFamily::Literal,
    };
    let table = WeightTable::compute_family(kmax, quad, family)?;
    let stdout = std::io::stdout();
    let mut w = std::io::BufWriter::new(stdout.lock());
    writeln!(w, "s,t,w,tau,tau_bound_ok")?;
    for s in 1..=kmax {
        for t in 1..=s {
            writeln!(
                w,
                "{s},{t},{:.17e},{:.17e},{}",
                table.w(s, t),
                table.tau(s),
                table.tau_bound_ok(s)
            )?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn bench_oracle(config: PathBuf, out: Option<PathBuf>) -> Result<bool> {
    let cfg = load(&config)?;
    let dir = out.unwrap_or_else(|| cfg.output.clone());
    let (rows, path) = run_oracle_bench(&cfg, &dir)?;
    println!("{:<8} {:>14} {:>14} {:>8}", "seed", "err_n", "err_4n", "ratio");
    for r in &rows {
        println!(
            "{:<8} {:>14.4} {:>14.4} {:>8.3}",
            r.seed,
            r.at_n.cum_sq_error,
            r.at_4n.cum_sq_error,
            r.ratio()
        );
    }
    log::info!("wrote {}", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Verify { battery, seed } => verify(battery, seed),
        Command::Weights { kmax, family, quad } => weights(kmax, family, quad),
        Command::BenchOracle { config, out } => bench_oracle(config, out),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
