//! Replicated runs described by an [`ExperimentConfig`], with CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::bandit::{
    regret_report, simulate, Environment, RoundRecord, RunLog, RunSettings, SlopeFit, Streams,
    ONE_MINUS_INV_E,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::oracle::RegressionOracle;
use crate::rng::{stream, Role};
use crate::set::ElementSet;

pub const ROUND_HEADER: [&str; 14] = [
    "t",
    "context_id",
    "matroid_id",
    "benchmark",
    "benchmark_method",
    "local_opt",
    "chosen",
    "reward",
    "mean_reward",
    "pred",
    "inst_regret_half",
    "inst_regret_1me",
    "cum_regret_half",
    "cum_regret_1me",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "c",
    "t",
    "mean_cum_regret",
    "std_cum_regret",
    "mean_slope",
    "fitted_seeds",
    "nonpositive_seeds",
];

impl ExperimentConfig {
    pub fn environment(&self) -> Result<Environment> {
        Environment::new(
            self.model.build()?,
            self.contexts.build(),
            self.matroid_schedule()?,
            self.reward_law(),
            self.k,
        )
    }

    pub fn settings(&self) -> RunSettings {
        let mut s = RunSettings::new(self.algorithm, self.horizon, self.schedules());
        s.ls_tol = self.local_search.tol;
        s.ls_max_iters = self.local_search.max_iters;
        s.t_config = self.t_operator.t_config();
        s.budget = self.enumeration_budget;
        s
    }
}

pub fn write_rounds<W: Write>(records: &[RoundRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUND_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.context_id.to_string(),
            r.matroid_id.to_string(),
            r.benchmark.to_string(),
            r.benchmark_method.tag().to_string(),
            r.local_opt.to_string(),
            r.chosen.to_string(),
            r.reward.to_string(),
            r.mean_reward.to_string(),
            r.pred.to_string(),
            r.inst_regret_half.to_string(),
            r.inst_regret_1me.to_string(),
            r.cum_regret_half.to_string(),
            r.cum_regret_1me.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub log: RunLog,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub c: f64,
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    pub mean_slope: Option<f64>,
    pub fitted: usize,
    pub nonpositive: usize,
}

/// Runs every seed in parallel; results come back in seed-list order.
pub fn run_seeds(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    let env = cfg.environment()?;
    let table = cfg.t_operator.table(cfg.k)?;
    let settings = cfg.settings();
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let mut oracle = cfg.oracle.build(cfg.horizon, env.model())?;
            let log = simulate(&env, oracle.as_mut(), &table, &settings, &mut Streams::new(seed))?;
            Ok(SeedRun { seed, log })
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Cross-seed cumulative regret at `n/10`, `n/2` and `n`, for both
/// benchmark fractions.
pub fn summarize(runs: &[SeedRun]) -> Vec<SummaryRow> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = first.log.records.len();
    let mut marks: Vec<usize> = [n / 10, n / 2, n].into_iter().filter(|&t| t > 0).collect();
    marks.dedup();
    let mut rows = Vec::new();
    for c in [0.5, ONE_MINUS_INV_E] {
        let reports: Vec<_> = runs.iter().map(|r| regret_report(&r.log.records, c)).collect();
        let slopes: Vec<f64> = reports.iter().filter_map(|r| r.slope.slope()).collect();
        let nonpositive = reports
            .iter()
            .filter(|r| r.slope == SlopeFit::NonPositive)
            .count();
        let mean_slope = (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64);
        for &t in &marks {
            let at: Vec<f64> = reports.iter().map(|r| r.cumulative[t - 1]).collect();
            let (mean, std) = mean_std(&at);
            rows.push(SummaryRow {
                c,
                t,
                mean,
                std,
                mean_slope,
                fitted: slopes.len(),
                nonpositive,
            });
        }
    }
    rows
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.c.to_string(),
            r.t.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.mean_slope.map_or_else(String::new, |s| s.to_string()),
            r.fitted.to_string(),
            r.nonpositive.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<SeedRun>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

/// Runs all seeds and writes `seed_<seed>.csv` plus `summary.csv` into `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutput> {
    ensure_dir(dir)?;
    let runs = run_seeds(cfg)?;
    let mut files = Vec::new();
    for r in &runs {
        let path = dir.join(format!("seed_{}.csv", r.seed));
        write_rounds(&r.log.records, create(&path)?)?;
        files.push(path);
    }
    let summary = summarize(&runs);
    let path = dir.join("summary.csv");
    write_summary(&summary, create(&path)?)?;
    files.push(path);
    Ok(ExperimentOutput {
        runs,
        summary,
        files,
    })
}

/// Random base by greedy insertion in a shuffled order.
fn random_base<R: Rng + ?Sized>(m: &Matroid, rng: &mut R) -> ElementSet {
    let mut order: Vec<usize> = (0..m.ground_size()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let mut s = ElementSet::empty();
    for e in order {
        if s.len() == m.rank() {
            break;
        }
        let cand = s.with(e);
        if m.independent_unchecked(&cand) {
            s = cand;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRun {
    /// `Σ_t (ŷ_t - u*(S_t, x_t))²` with `ŷ_t` predicted before the update.
    pub cum_sq_error: f64,
    pub signal_strength: Option<f64>,
}

/// Online regression on random bases: predict, observe a reward, update.
pub fn oracle_error_run(
    env: &Environment,
    oracle: &mut dyn RegressionOracle,
    n: usize,
    seed: u64,
) -> OracleRun {
    let mut streams = Streams::new(seed);
    let mut pick = stream(seed, Role::Oracle);
    let mut err = 0.0;
    for t in 0..n {
        let obs = env.observe(t, &mut streams.context, &mut streams.matroid);
        let s = random_base(obs.matroid, &mut pick);
        let pred = oracle.predict(&s, &obs.context);
        let (r, mean) = env.reward(&s, &obs.context, &mut streams.reward);
        err += (pred - mean).powi(2);
        oracle.update(&s, &obs.context, r);
    }
    OracleRun {
        cum_sq_error: err,
        signal_strength: oracle.signal_strength(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBenchRow {
    pub seed: u64,
    pub at_n: OracleRun,
    pub at_4n: OracleRun,
}

impl OracleBenchRow {
    /// Error growth between horizons `n` and `4n`; 2 for `sqrt(n)` growth.
    pub fn ratio(&self) -> f64 {
        self.at_4n.cum_sq_error / self.at_n.cum_sq_error
    }
}

/// Oracle regret at horizons `n` and `4n`, each with a freshly tuned oracle.
pub fn bench_oracle(cfg: &ExperimentConfig) -> Result<Vec<OracleBenchRow>> {
    let env = cfg.environment()?;
    let n = cfg.horizon;
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let mut o1 = cfg.oracle.build(n, env.model())?;
            let mut o4 = cfg.oracle.build(4 * n, env.model())?;
            Ok(OracleBenchRow {
                seed,
                at_n: oracle_error_run(&env, o1.as_mut(), n, seed),
                at_4n: oracle_error_run(&env, o4.as_mut(), 4 * n, seed),
            })
        })
        .collect()
}

pub fn write_oracle_bench<W: Write>(rows: &[OracleBenchRow], n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "n", "cum_sq_error_n", "cum_sq_error_4n", "ratio", "signal_strength"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            n.to_string(),
            r.at_n.cum_sq_error.to_string(),
            r.at_4n.cum_sq_error.to_string(),
            r.ratio().to_string(),
            r.at_4n.signal_strength.map_or_else(String::new, |s| s.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `oracle_bench.csv` into `dir`.
pub fn run_oracle_bench(cfg: &ExperimentConfig, dir: &Path) -> Result<(Vec<OracleBenchRow>, PathBuf)> {
    ensure_dir(dir)?;
    let rows = bench_oracle(cfg)?;
    let path = dir.join("oracle_bench.csv");
    write_oracle_bench(&rows, cfg.horizon, create(&path)?)?;
    Ok((rows, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
horizon = 200
ground = 4
k = 2
algorithm = "squarecb"
seeds = [3, 1]
output = "out"

[[matroids]]
kind = "uniform"

[model]
kind = "modular"
weights = [0.4, 0.3, 0.2, 0.1]

[contexts]
kind = "fixed"
list = [[]]

[oracle]
kind = "finite"
experts = [
  { kind = "modular", weights = [0.4, 0.3, 0.2, 0.1] },
  { kind = "modular", weights = [0.1, 0.2, 0.3, 0.4] },
]
"#;

    #[test]
    fn round_csv_has_the_fixed_header() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let runs = run_seeds(&cfg).unwrap();
        assert_eq!(runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1]);
        let mut buf = Vec::new();
        write_rounds(&runs[0].log.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ROUND_HEADER.join(","));
        assert_eq!(text.lines().count(), 201);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert!(ElementSet::parse_joined(row[6]).unwrap().len() == 2);
    }

    #[test]
    fn summary_has_three_marks_per_fraction() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let rows = summarize(&run_seeds(&cfg).unwrap());
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![20, 100, 200, 20, 100, 200]);
    }

    #[test]
    fn finite_oracle_error_is_bounded() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let rows = bench_oracle(&cfg).unwrap();
        for r in rows {
            assert!(r.at_4n.cum_sq_error < 10.0 * 2f64.ln() * 10.0);
        }
    }
}
