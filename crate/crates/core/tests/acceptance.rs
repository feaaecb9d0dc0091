//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::{E, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use submodular_bandits::bandit::{
    loglog_slope, regret_report, run_epsgreedy, run_squarecb, simulate, Algorithm, ContextSource, Environment,
    MatroidSchedule, RewardLaw, RunLog, RunSettings, Schedules, SlopeFit, Streams, ONE_MINUS_INV_E,
};
use submodular_bandits::config::ExperimentConfig;
use submodular_bandits::experiment::{oracle_error_run, run_experiment};
use submodular_bandits::igw::{igw_distribution, ScoredActions};
use submodular_bandits::matroid::Matroid;
use submodular_bandits::oracle::{default_eta, FiniteClassOracle, GlmOracle, MultiGlmOracle};
use submodular_bandits::set_function::{
    Context, GlmModel, GlmTerm, Link, Modular, Restricted, SetFunction, SharedModel,
    SumGlmModel, WidthBaseline, WidthModel,
};
use submodular_bandits::t_operator::{t_value_exact, WeightFamily, WeightTable, DEFAULT_QUAD_POINTS};
use submodular_bandits::testkit::{
    filmus_ward_battery, lemma1_battery, lemma2_battery, width_battery, GeneratorKind,
    RandomSubmodularGen,
};
use submodular_bandits::ElementSet;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// ---------------------------------------------------------------- criterion 1

fn igw_contract() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut min_slack = f64::INFINITY;
    let mut min_greedy = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=50usize);
        let gamma = 10f64.powf(rng.random_range(0.0..4.0));
        let yhat: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let fstar: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let p = igw_distribution(&ScoredActions::new(yhat.clone(), gamma).unwrap());

        // independent construction of the same law
        let b = (0..k).fold(0, |b, a| if yhat[a] > yhat[b] { a } else { b });
        let mut q: Vec<f64> = (0..k)
            .map(|a| 1.0 / (2.0 * k as f64 + gamma * (yhat[b] - yhat[a])))
            .collect();
        q[b] = 0.0;
        q[b] = 1.0 - q.iter().sum::<f64>();
        for a in 0..k {
            max_dev = max_dev.max((p[a] - q[a]).abs());
        }
        min_greedy = min_greedy.min(p[b]);

        let top = fstar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lhs: f64 = (0..k)
            .map(|a| p[a] * (top - fstar[a] - gamma / 4.0 * (yhat[a] - fstar[a]).powi(2)))
            .sum();
        min_slack = min_slack.min(2.0 * k as f64 / gamma - lhs);
    }
    let took = start.elapsed();
    outcome(
        min_slack >= -1e-9 && min_greedy >= 0.5 && max_dev <= 1e-12 && took < Duration::from_secs(10),
        format!(
            "10^4 trials, min slack {min_slack:.3e}, min p(greedy) {min_greedy:.4}, \
             max |p - p_ref| {max_dev:.1e}, {took:.2?}"
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

/// `∫_0^1 e^p p^a (1-p)^b dp / (e-1)` from the antiderivative recursion
/// `∫ p^m e^p = e - m ∫ p^{m-1} e^p`.
fn closed_form_weight(a: usize, b: usize) -> f64 {
    let mut i = vec![E - 1.0];
    for m in 1..=a + b {
        let prev = i[m - 1];
        i.push(E - m as f64 * prev);
    }
    let sum: f64 = (0..=b)
        .map(|j| binom(b, j) * if j % 2 == 0 { 1.0 } else { -1.0 } * i[a + j])
        .sum();
    sum / (E - 1.0)
}

fn weight_table() -> Outcome {
    let mut max_err: f64 = 0.0;
    for family in [WeightFamily::FilmusWard, WeightFamily::Literal] {
        let table = WeightTable::compute_family(3, DEFAULT_QUAD_POINTS, family).unwrap();
        for s in 1..=3 {
            for t in 1..=s {
                let a = match family {
                    WeightFamily::FilmusWard => t - 1,
                    WeightFamily::Literal => s - 1,
                };
                max_err = max_err.max((table.w(s, t) - closed_form_weight(a, s - t)).abs());
            }
        }
    }
    let lit = WeightTable::compute_family(2, DEFAULT_QUAD_POINTS, WeightFamily::Literal).unwrap();
    let w21 = (3.0 - E) / (E - 1.0);
    let named_ok = (lit.w(1, 1) - 1.0).abs() < 1e-10
        && (lit.w(2, 1) - w21).abs() < 1e-10
        && (lit.w(2, 2) - 1.0 / (E - 1.0)).abs() < 1e-10
        && (lit.tau(2) - 0.909_883).abs() < 1e-6;

    let fw = WeightTable::compute(20, DEFAULT_QUAD_POINTS).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for s in 1..=20 {
        let h: f64 = (1..=s).map(|i| 1.0 / i as f64).sum();
        worst_ratio = worst_ratio.max(fw.tau(s) / (E / (E - 1.0) * h));
    }
    outcome(
        max_err <= 1e-10 && named_ok && worst_ratio <= 1.0 && (fw.tau(1) - 1.0).abs() < 1e-12,
        format!(
            "max |w - closed form| {max_err:.1e} (s <= 3, both families), \
             max tau(s)/(e/(e-1) H_s) {worst_ratio:.4} for s <= 20"
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn structural_lemmas() -> Outcome {
    let start = Instant::now();
    let table = WeightTable::compute(3, DEFAULT_QUAD_POINTS).unwrap();
    let reports = [
        lemma1_battery(1000, 7).unwrap(),
        lemma2_battery(1000, 7, &table).unwrap(),
        filmus_ward_battery(1000, 7, &table).unwrap(),
    ];
    let took = start.elapsed();
    let pass = reports.iter().all(|r| r.instances == 1000 && r.min_slack >= -1e-9)
        && took < Duration::from_secs(120);
    let detail = reports
        .iter()
        .map(|r| format!("{} min slack {:.3e}", r.name, r.min_slack))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("{detail}, {took:.2?}"))
}

// ---------------------------------------------------------------- criterion 4

fn subset_sampler() -> Outcome {
    let table = WeightTable::compute(10, DEFAULT_QUAD_POINTS).unwrap();
    let mut worst_tv: f64 = 0.0;
    for s in 1..=4usize {
        let base: ElementSet = (0..s).collect();
        let dist = table.distribution(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(400 + s as u64);
        let draws = 1_000_000;
        let mut counts = vec![0usize; 1 << s];
        for _ in 0..draws {
            counts[dist.sample(&mut rng).to_mask() as usize] += 1;
        }
        let tv: f64 = (1..1usize << s)
            .map(|mask| {
                let t = mask.count_ones() as usize;
                let exact = table.w(s, t) / table.tau(s);
                (counts[mask] as f64 / draws as f64 - exact).abs()
            })
            .sum::<f64>()
            / 2.0;
        worst_tv = worst_tv.max(tv + counts[0] as f64 / draws as f64);
    }

    let mut worst_id: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    for s in 1..=10usize {
        let v = RandomSubmodularGen::new(GeneratorKind::Coverage, s).generate(&mut rng);
        let ctx = Context::empty();
        let base: ElementSet = (0..s).collect();
        let exact = t_value_exact(|t| v.value(t, &ctx), &base, &table).unwrap();
        let dist = table.distribution(&base).unwrap();
        let expect: f64 = (1u64..1 << s)
            .map(|m| {
                let t = ElementSet::from_mask(m);
                dist.probability(&t) * v.value(&t, &ctx)
            })
            .sum();
        worst_id = worst_id.max((exact - table.tau(s) * expect).abs());
    }
    outcome(
        worst_tv <= 0.01 && worst_id <= 1e-9,
        format!("max TV {worst_tv:.2e} over |S| <= 4 at 10^6 draws, max |Tv - tau E v| {worst_id:.1e} for |S| <= 10"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn width_model() -> Outcome {
    let draws = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = WidthModel::sample(
        vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        draws,
        None,
        WidthBaseline::Origin,
        &mut rng,
    )
    .unwrap();
    let est = m.width(&ElementSet::from([0, 1])).unwrap();
    let exact = (2.0 / PI).sqrt();
    let sigma = ((1.0 - 2.0 / PI) / draws as f64).sqrt();
    let z = (est - exact).abs() / sigma;
    let audit = width_battery(200, 55).unwrap();
    outcome(
        z <= 3.0 && audit.failures == 0 && audit.min_slack == 0.0,
        format!(
            "two-point width {est:.5} vs {exact:.5} ({z:.2} sigma), \
             {} shared-noise models on A <= 6 with {} violating",
            audit.instances, audit.failures
        ),
    )
}

// ------------------------------------------------------ shared bandit instance

const CATS: [[usize; 3]; 2] = [[0, 1, 2], [3, 4, 5]];
const V_WEIGHTS: [f64; 6] = [0.45, 0.03, 0.02, 0.45, 0.03, 0.02];

fn selector(i: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(2, 2);
    p[(i, i)] = 1.0;
    p
}

fn category_terms() -> Vec<GlmTerm> {
    let v: SharedModel = Arc::new(Modular::new(V_WEIGHTS.to_vec()).unwrap());
    CATS.iter()
        .enumerate()
        .map(|(i, c)| GlmTerm {
            base: Arc::new(Restricted::new(v.clone(), c.iter().copied().collect())),
            projection: selector(i),
        })
        .collect()
}

fn theta_grid() -> Vec<Vec<f64>> {
    (0..16)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / 16.0;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

const TRUE_THETA: usize = 1;

fn category_model(theta: Vec<f64>) -> SharedModel {
    Arc::new(SumGlmModel::new(category_terms(), theta, Link::Relu).unwrap())
}

fn bandit_env() -> Environment {
    Environment::new(
        category_model(theta_grid()[TRUE_THETA].clone()),
        ContextSource::Gaussian { dim: 2, scale: 1.0 },
        MatroidSchedule::Fixed(Matroid::uniform(6, 2).unwrap()),
        RewardLaw::Bernoulli,
        2,
    )
    .unwrap()
}

fn finite_oracle() -> FiniteClassOracle {
    FiniteClassOracle::new(theta_grid().into_iter().map(category_model).collect(), 0.5).unwrap()
}

fn bandit_schedules() -> Schedules {
    Schedules {
        reg_hat: 16f64.ln(),
        ..Schedules::default()
    }
}

// ---------------------------------------------------------------- criterion 6

fn oracle_rates() -> Outcome {
    let start = Instant::now();
    let env = bandit_env();
    let bound = 10.0 * 16f64.ln();
    let finite: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| oracle_error_run(&env, &mut finite_oracle(), 10_000, seed).cum_sq_error)
        .collect();
    let finite_med = median(finite);

    let glm_base: SharedModel = Arc::new(Modular::new(vec![0.5, 0.4, 0.3, 0.2, 0.1, 0.05]).unwrap());
    let glm_env = Environment::new(
        Arc::new(GlmModel::new(glm_base.clone(), vec![0.6, -0.8, 0.0], Link::Logistic).unwrap()),
        ContextSource::Gaussian { dim: 3, scale: 1.0 },
        MatroidSchedule::Fixed(Matroid::uniform(6, 2).unwrap()),
        RewardLaw::Bernoulli,
        2,
    )
    .unwrap();
    let n = 10_000;
    let ratio = |env: &Environment, make: &(dyn Fn(usize) -> Box<dyn submodular_bandits::oracle::RegressionOracle> + Sync)| {
        median(
            (0..20u64)
                .into_par_iter()
                .map(|seed| {
                    let a = oracle_error_run(env, make(n).as_mut(), n, seed).cum_sq_error;
                    let b = oracle_error_run(env, make(4 * n).as_mut(), 4 * n, seed).cum_sq_error;
                    b / a
                })
                .collect(),
        )
    };
    let glm_ratio = ratio(&glm_env, &|h| {
        Box::new(GlmOracle::new(glm_base.clone(), Link::Logistic, 3, default_eta(h)).unwrap())
    });
    let multi_ratio = ratio(&env, &|h| {
        Box::new(MultiGlmOracle::new(category_terms(), 2, default_eta(h)).unwrap())
    });
    let took = start.elapsed();
    outcome(
        finite_med <= bound && glm_ratio <= 2.5 && multi_ratio <= 2.5 && took < Duration::from_secs(300),
        format!(
            "finite |F|=16 median error {finite_med:.3} (bound {bound:.2}), \
             GLM ratio {glm_ratio:.3}, multi-GLM ratio {multi_ratio:.3}, {took:.2?}"
        ),
    )
}

// ------------------------------------------------------------ criteria 7 and 8

struct BanditRuns {
    squarecb: Vec<RunLog>,
    epsgreedy: Vec<RunLog>,
    uniform: Vec<RunLog>,
    took: Duration,
}

fn bandit_runs() -> BanditRuns {
    let start = Instant::now();
    let env = bandit_env();
    let n = 10_000;
    let table = WeightTable::compute(2, DEFAULT_QUAD_POINTS).unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    let squarecb = seeds
        .par_iter()
        .map(|&s| run_squarecb(&env, &mut finite_oracle(), bandit_schedules(), n, s).unwrap())
        .collect();
    let epsgreedy = seeds
        .par_iter()
        .map(|&s| run_epsgreedy(&env, &mut finite_oracle(), bandit_schedules(), n, &table, s).unwrap())
        .collect();
    let settings = RunSettings::new(Algorithm::Uniform, n, bandit_schedules());
    let uniform = seeds
        .par_iter()
        .map(|&s| simulate(&env, &mut finite_oracle(), &table, &settings, &mut Streams::new(s)).unwrap())
        .collect();
    BanditRuns {
        squarecb,
        epsgreedy,
        uniform,
        took: start.elapsed(),
    }
}

fn end_to_end(runs: &BanditRuns) -> Outcome {
    let sq_worst = runs
        .squarecb
        .iter()
        .map(|l| l.mean_reward() - 0.5 * l.mean_benchmark())
        .fold(f64::INFINITY, f64::min);
    let eg_worst = runs
        .epsgreedy
        .iter()
        .map(|l| l.mean_reward() - (ONE_MINUS_INV_E * l.mean_benchmark() - 0.05))
        .fold(f64::INFINITY, f64::min);
    let sq_ratio = runs.squarecb.iter().map(|l| l.mean_reward() / l.mean_benchmark()).fold(f64::INFINITY, f64::min);
    let eg_ratio = runs.epsgreedy.iter().map(|l| l.mean_reward() / l.mean_benchmark()).fold(f64::INFINITY, f64::min);
    outcome(
        sq_worst >= 0.0 && eg_worst >= 0.0 && runs.took < Duration::from_secs(600),
        format!(
            "worst-seed reward/benchmark: squarecb {sq_ratio:.3} (need 0.5), \
             epsgreedy {eg_ratio:.3} (margin {eg_worst:.3}), rho {:.3}, {:.2?}",
            runs.epsgreedy[0].rho, runs.took
        ),
    )
}

/// Slope of the seed-averaged cumulative `c = 1/2` regret curve.
fn mean_curve_slope(logs: &[RunLog]) -> SlopeFit {
    let reports: Vec<_> = logs.iter().map(|l| regret_report(&l.records, 0.5)).collect();
    let n = reports[0].cumulative.len();
    let mean: Vec<f64> = (0..n)
        .map(|t| reports.iter().map(|r| r.cumulative[t]).sum::<f64>() / reports.len() as f64)
        .collect();
    loglog_slope(&mean)
}

fn rate_sanity(runs: &BanditRuns) -> Outcome {
    let sq = mean_curve_slope(&runs.squarecb);
    let un = mean_curve_slope(&runs.uniform);
    let per_seed = |logs: &[RunLog]| {
        logs.iter()
            .map(|l| regret_report(&l.records, 0.5).slope.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        sq.at_most(0.75) && un.at_least(0.95),
        format!(
            "seed-mean slopes: squarecb {sq}, uniform {un}; per seed squarecb [{}], uniform [{}]",
            per_seed(&runs.squarecb),
            per_seed(&runs.uniform)
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

const DETERMINISM_CFG: &str = r#"
horizon = 500
ground = 6
k = 2
algorithm = "epsgreedy"
seeds = [11, 12, 13]
output = "unused"

[[matroids]]
kind = "partition"
blocks = [[0, 1, 2], [3, 4, 5]]
capacities = [1, 1]

[model]
kind = "sum-glm"
theta = [0.70710678, 0.70710678]
link = "relu"
[[model.terms]]
projection = [[1.0, 0.0], [0.0, 0.0]]
base = { kind = "restricted", category = [0, 1, 2], inner = { kind = "modular", weights = [0.45, 0.03, 0.02, 0.45, 0.03, 0.02] } }
[[model.terms]]
projection = [[0.0, 0.0], [0.0, 1.0]]
base = { kind = "restricted", category = [3, 4, 5], inner = { kind = "modular", weights = [0.45, 0.03, 0.02, 0.45, 0.03, 0.02] } }

[contexts]
kind = "gaussian"
dim = 2
scale = 1.0

[oracle]
kind = "multiglm"
dim = 2
[[oracle.terms]]
projection = [[1.0, 0.0], [0.0, 0.0]]
base = { kind = "restricted", category = [0, 1, 2], inner = { kind = "modular", weights = [0.45, 0.03, 0.02, 0.45, 0.03, 0.02] } }
[[oracle.terms]]
projection = [[0.0, 0.0], [0.0, 1.0]]
base = { kind = "restricted", category = [3, 4, 5], inner = { kind = "modular", weights = [0.45, 0.03, 0.02, 0.45, 0.03, 0.02] } }
"#;

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_toml(DETERMINISM_CFG).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = run_experiment(&cfg, d1.path()).unwrap();
    let b = run_experiment(&cfg, d2.path()).unwrap();
    let mut identical = a.files.len() == b.files.len();
    for (fa, fb) in a.files.iter().zip(&b.files) {
        identical &= std::fs::read(fa).unwrap() == std::fs::read(fb).unwrap();
    }
    outcome(
        identical && a.files.len() == 4,
        format!("{} files compared byte for byte", a.files.len()),
    )
}

fn main() {
    let start = Instant::now();
    let runs = bandit_runs();
    let results: Vec<(&str, Outcome)> = vec![
        ("igw contract", igw_contract()),
        ("weight table", weight_table()),
        ("structural lemmas", structural_lemmas()),
        ("subset sampler", subset_sampler()),
        ("width model", width_model()),
        ("oracle rates", oracle_rates()),
        ("end-to-end approximation", end_to_end(&runs)),
        ("rate sanity", rate_sanity(&runs)),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.2?}",
        results.len() - failed,
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
