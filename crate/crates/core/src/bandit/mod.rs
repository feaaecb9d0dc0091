//! The two bandit algorithms, two reference policies, and regret accounting.
//!
//! Per round the environment reveals `(x_t, M_t)`, the policy picks an
//! independent set, a reward with mean `u*(S_t, x_t)` is drawn and the oracle
//! is updated. Regret is logged against both `c = 1/2` and `c = 1 - 1/e`.

mod benchmark;
mod env;
mod regret;
mod schedule;

pub use benchmark::{benchmark_value, lazy_greedy, BenchmarkMethod};
pub use env::{ContextSource, Environment, MatroidSchedule, Observation, RewardLaw};
pub use regret::{checkpoints, loglog_slope, regret_report, RegretSummary, SlopeFit, ONE_MINUS_INV_E};
pub use schedule::Schedules;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::igw::igw_sample;
use crate::local_search::{
    local_optimum, neighborhood_scores, SearchMode, DEFAULT_LS_TOL, DEFAULT_MAX_ITERS,
};
use crate::matroid::{Matroid, DEFAULT_ENUMERATION_BUDGET};
use crate::oracle::RegressionOracle;
use crate::rng::{stream, Role};
use crate::set::ElementSet;
use crate::set_function::Context;
use crate::t_operator::{t_value, TConfig, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Algorithm {
    /// IGW over the swap neighborhood of the oracle's local optimum.
    #[serde(rename = "squarecb")]
    SquareCb,
    /// Local optimum of the T-potential of the oracle, explored with
    /// probability `ρ` through `D_{S'}` for a random base neighbor `S'`.
    #[serde(rename = "epsgreedy")]
    EpsGreedy,
    /// A uniformly random base each round.
    #[serde(rename = "uniform-baseline")]
    Uniform,
    /// The swap-local optimum of the true model, without exploration.
    #[serde(rename = "oracle-truth-baseline")]
    OracleTruth,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SquareCb => "squarecb",
            Algorithm::EpsGreedy => "epsgreedy",
            Algorithm::Uniform => "uniform-baseline",
            Algorithm::OracleTruth => "oracle-truth-baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub context_id: usize,
    pub matroid_id: usize,
    /// `max_{S ∈ I_t} u*(S, x_t)`, normalized.
    pub benchmark: f64,
    pub benchmark_method: BenchmarkMethod,
    pub local_opt: ElementSet,
    pub chosen: ElementSet,
    pub reward: f64,
    pub mean_reward: f64,
    /// Oracle prediction for the chosen set, before the update.
    pub pred: f64,
    pub inst_regret_half: f64,
    pub inst_regret_1me: f64,
    pub cum_regret_half: f64,
    pub cum_regret_1me: f64,
    pub converged: bool,
    /// Whether the round took an exploration branch (ε-Greedy only).
    pub explored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub schedules: Schedules,
    pub ls_tol: f64,
    pub ls_max_iters: usize,
    pub t_config: TConfig,
    pub budget: usize,
}

impl RunSettings {
    pub fn new(algorithm: Algorithm, horizon: usize, schedules: Schedules) -> Self {
        RunSettings {
            algorithm,
            horizon,
            schedules,
            ls_tol: DEFAULT_LS_TOL,
            ls_max_iters: DEFAULT_MAX_ITERS,
            t_config: TConfig::default(),
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

/// Random streams for one replication.
#[derive(Debug, Clone)]
pub struct Streams {
    pub context: ChaCha8Rng,
    pub matroid: ChaCha8Rng,
    pub reward: ChaCha8Rng,
    pub algorithm: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams {
            context: stream(seed, Role::Context),
            matroid: stream(seed, Role::Matroid),
            reward: stream(seed, Role::Reward),
            algorithm: stream(seed, Role::Algorithm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub algorithm: Algorithm,
    pub records: Vec<RoundRecord>,
    pub gamma: f64,
    pub rho: f64,
    /// Final design-matrix eigenvalue reported by the oracle, if tracked.
    pub signal_strength: Option<f64>,
    pub non_converged: usize,
}

impl RunLog {
    /// Fraction of rounds that played the local optimum.
    pub fn local_opt_frequency(&self) -> f64 {
        let hits = self.records.iter().filter(|r| r.chosen == r.local_opt).count();
        hits as f64 / self.records.len().max(1) as f64
    }

    pub fn mean_reward(&self) -> f64 {
        self.records.iter().map(|r| r.mean_reward).sum::<f64>() / self.records.len().max(1) as f64
    }

    pub fn mean_benchmark(&self) -> f64 {
        self.records.iter().map(|r| r.benchmark).sum::<f64>() / self.records.len().max(1) as f64
    }
}

struct Decision {
    local_opt: ElementSet,
    chosen: ElementSet,
    pred: f64,
    converged: bool,
    explored: bool,
}

/// Runs `settings.horizon` rounds of `settings.algorithm`.
pub fn simulate(
    env: &Environment,
    oracle: &mut dyn RegressionOracle,
    table: &WeightTable,
    settings: &RunSettings,
    streams: &mut Streams,
) -> Result<RunLog> {
    settings.schedules.validate()?;
    if settings.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let n = settings.horizon;
    let a = env.ground_size();
    let k = env.k();
    if table.k_max() < k {
        return Err(Error::Config(format!(
            "weight table covers sizes up to {} but k = {k}",
            table.k_max()
        )));
    }
    let gamma = settings.schedules.gamma(n, a, k);
    let rho = settings.schedules.rho(n, a, k, table.tau(k));
    let mut bench_cache: HashMap<(usize, usize), (f64, BenchmarkMethod)> = HashMap::new();
    let mut base_cache: HashMap<usize, Option<Vec<ElementSet>>> = HashMap::new();
    let mut records = Vec::with_capacity(n);
    let (mut cum_half, mut cum_1me) = (0.0, 0.0);
    let mut non_converged = 0;

    for t in 0..n {
        let obs = env.observe(t, &mut streams.context, &mut streams.matroid);
        let ctx = &obs.context;
        let m = obs.matroid;
        if m.rank() != k {
            return Err(Error::Config(format!("round {t}: matroid rank {} but k = {k}", m.rank())));
        }

        let d = match settings.algorithm {
            Algorithm::SquareCb => {
                squarecb_round(&*oracle, ctx, m, gamma, settings, &mut streams.algorithm)?
            }
            Algorithm::EpsGreedy => {
                epsgreedy_round(&*oracle, ctx, m, rho, table, settings, &mut streams.algorithm)?
            }
            Algorithm::Uniform => {
                let bases = base_cache
                    .entry(obs.matroid_id)
                    .or_insert_with(|| m.enumerate_bases(settings.budget).ok());
                let chosen = uniform_base(m, bases.as_deref(), &mut streams.algorithm);
                Decision {
                    pred: oracle.predict(&chosen, ctx),
                    local_opt: chosen.clone(),
                    chosen,
                    converged: true,
                    explored: true,
                }
            }
            Algorithm::OracleTruth => {
                let truth = |s: &ElementSet| env.mean_reward(s, ctx);
                let ls = local_optimum(
                    truth,
                    m,
                    SearchMode::Swap,
                    settings.ls_tol,
                    settings.ls_max_iters,
                );
                Decision {
                    pred: ls.score,
                    chosen: ls.set.clone(),
                    local_opt: ls.set,
                    converged: ls.converged,
                    explored: false,
                }
            }
        };
        assert!(
            m.is_independent(&d.chosen)?,
            "round {t}: played set {{{}}} is not independent",
            d.chosen
        );
        if !d.converged {
            non_converged += 1;
        }

        let (reward, mean) = env.reward(&d.chosen, ctx, &mut streams.reward);
        oracle.update(&d.chosen, ctx, reward);

        let compute = || benchmark_value(|s| env.mean_reward(s, ctx), m, settings.budget);
        let (benchmark, method) = if env.contexts().is_finite() {
            *bench_cache
                .entry((obs.context_id, obs.matroid_id))
                .or_insert_with(compute)
        } else {
            compute()
        };
        let inst_half = 0.5 * benchmark - mean;
        let inst_1me = ONE_MINUS_INV_E * benchmark - mean;
        cum_half += inst_half;
        cum_1me += inst_1me;
        records.push(RoundRecord {
            t: t + 1,
            context_id: obs.context_id,
            matroid_id: obs.matroid_id,
            benchmark,
            benchmark_method: method,
            local_opt: d.local_opt,
            chosen: d.chosen,
            reward,
            mean_reward: mean,
            pred: d.pred,
            inst_regret_half: inst_half,
            inst_regret_1me: inst_1me,
            cum_regret_half: cum_half,
            cum_regret_1me: cum_1me,
            converged: d.converged,
            explored: d.explored,
        });
    }
    if non_converged > 0 {
        log::warn!("local search hit max_iters in {non_converged} of {n} rounds");
    }
    Ok(RunLog {
        algorithm: settings.algorithm,
        records,
        gamma,
        rho,
        signal_strength: oracle.signal_strength(),
        non_converged,
    })
}

/// Per-round prediction memo: the oracle is fixed within a round.
fn memo_predict<'a>(
    oracle: &'a dyn RegressionOracle,
    ctx: &'a Context,
) -> impl FnMut(&ElementSet) -> f64 + 'a {
    let mut memo: HashMap<ElementSet, f64> = HashMap::new();
    move |s: &ElementSet| *memo.entry(s.clone()).or_insert_with(|| oracle.predict(s, ctx))
}

fn squarecb_round(
    oracle: &dyn RegressionOracle,
    ctx: &Context,
    m: &Matroid,
    gamma: f64,
    settings: &RunSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Decision> {
    let mut pred = memo_predict(oracle, ctx);
    let ls = local_optimum(&mut pred, m, SearchMode::Swap, settings.ls_tol, settings.ls_max_iters);
    let nb = m.swap_neighborhood(&ls.set)?;
    let sa = neighborhood_scores(&mut pred, &nb, gamma, settings.schedules.mu)?;
    let idx = igw_sample(&sa, rng);
    Ok(Decision {
        pred: sa.scores[idx],
        chosen: nb.members[idx].clone(),
        local_opt: ls.set,
        converged: ls.converged,
        explored: false,
    })
}

fn epsgreedy_round(
    oracle: &dyn RegressionOracle,
    ctx: &Context,
    m: &Matroid,
    rho: f64,
    table: &WeightTable,
    settings: &RunSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Decision> {
    let mut pred = memo_predict(oracle, ctx);
    let mut failure = None;
    let ls = {
        let score = |s: &ElementSet| match t_value(&mut pred, s, table, &settings.t_config, rng) {
            Ok(est) => est.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        };
        local_optimum(score, m, SearchMode::Base, settings.ls_tol, settings.ls_max_iters)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let explore = rng.random::<f64>() < rho;
    let chosen = if explore {
        let nb = m.base_neighborhood(&ls.set)?;
        let pivot = &nb.members[rng.random_range(0..nb.len())];
        table.distribution(pivot)?.sample(rng)
    } else {
        ls.set.clone()
    };
    Ok(Decision {
        pred: pred(&chosen),
        local_opt: ls.set,
        chosen,
        converged: ls.converged,
        explored: explore,
    })
}

fn uniform_base<R: Rng + ?Sized>(m: &Matroid, bases: Option<&[ElementSet]>, rng: &mut R) -> ElementSet {
    if let Some(b) = bases.filter(|b| !b.is_empty()) {
        return b[rng.random_range(0..b.len())].clone();
    }
    // Too many bases to list: greedy over a random order.
    let mut order: Vec<usize> = (0..m.ground_size()).collect();
    order.shuffle(rng);
    let mut s = ElementSet::empty();
    for e in order {
        let cand = s.with(e);
        if m.independent_unchecked(&cand) {
            s = cand;
        }
    }
    s
}

/// SquareCB with default local-search settings.
pub fn run_squarecb(
    env: &Environment,
    oracle: &mut dyn RegressionOracle,
    schedules: Schedules,
    n: usize,
    seed: u64,
) -> Result<RunLog> {
    let table = WeightTable::compute(env.k().max(1), crate::t_operator::DEFAULT_QUAD_POINTS)?;
    let settings = RunSettings::new(Algorithm::SquareCb, n, schedules);
    simulate(env, oracle, &table, &settings, &mut Streams::new(seed))
}

/// ε-Greedy with default local-search settings.
pub fn run_epsgreedy(
    env: &Environment,
    oracle: &mut dyn RegressionOracle,
    schedules: Schedules,
    n: usize,
    table: &WeightTable,
    seed: u64,
) -> Result<RunLog> {
    let settings = RunSettings::new(Algorithm::EpsGreedy, n, schedules);
    simulate(env, oracle, table, &settings, &mut Streams::new(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::TruthOracle;
    use crate::set_function::{Modular, SharedModel};
    use std::sync::Arc;

    fn modular_env(k: usize) -> Environment {
        let model: SharedModel = Arc::new(Modular::new(vec![0.5, 0.1, 0.3, 0.05]).unwrap());
        Environment::new(
            model,
            ContextSource::Fixed(vec![Context::empty()]),
            MatroidSchedule::Fixed(Matroid::uniform(4, k).unwrap()),
            RewardLaw::Bernoulli,
            k,
        )
        .unwrap()
    }

    #[test]
    fn unique_base_is_played_deterministically() {
        let env = modular_env(4);
        let mut oracle = TruthOracle(env.model().clone());
        let log = run_squarecb(&env, &mut oracle, Schedules::default(), 1, 0).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.records[0].chosen, ElementSet::from([0, 1, 2, 3]));
    }

    #[test]
    fn k1_exact_oracle_greedy_arm_is_the_best_arm() {
        let env = modular_env(1);
        let mut oracle = TruthOracle(env.model().clone());
        let log = run_squarecb(&env, &mut oracle, Schedules::default(), 50, 1).unwrap();
        for r in &log.records {
            assert_eq!(r.local_opt, ElementSet::from([0]));
        }
    }

    #[test]
    fn cumulative_columns_are_prefix_sums() {
        let env = modular_env(2);
        let mut oracle = TruthOracle(env.model().clone());
        let table = WeightTable::compute(2, 64).unwrap();
        let log = run_epsgreedy(&env, &mut oracle, Schedules::default(), 200, &table, 5).unwrap();
        let mut acc = 0.0;
        for r in &log.records {
            acc += r.inst_regret_half;
            assert!((acc - r.cum_regret_half).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_rho_always_plays_the_local_optimum() {
        let env = modular_env(2);
        let mut oracle = TruthOracle(env.model().clone());
        let table = WeightTable::compute(2, 64).unwrap();
        let sched = Schedules {
            c_rho: 1e-12,
            rho_min: 1e-12,
            ..Schedules::default()
        };
        let log = run_epsgreedy(&env, &mut oracle, sched, 300, &table, 2).unwrap();
        assert_eq!(log.local_opt_frequency(), 1.0);
    }

    #[test]
    fn truth_baseline_has_nonpositive_half_regret() {
        let env = modular_env(2);
        let mut oracle = TruthOracle(env.model().clone());
        let table = WeightTable::compute(2, 64).unwrap();
        let settings = RunSettings::new(Algorithm::OracleTruth, 100, Schedules::default());
        let log = simulate(&env, &mut oracle, &table, &settings, &mut Streams::new(0)).unwrap();
        assert!(log.records.iter().all(|r| r.inst_regret_half <= 0.0));
    }
}
