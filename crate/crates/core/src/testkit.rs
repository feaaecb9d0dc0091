//! Brute-force oracles for desk-scale instances: random submodular
//! functions and matroids, exhaustive maximization, exchange bijections and
//! numerical checks of the local-optimality inequalities.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::bandit::ONE_MINUS_INV_E;
use crate::error::{Error, Result};
use crate::igw::{igw_distribution, ScoredActions};
use crate::matroid::{Matroid, DEFAULT_ENUMERATION_BUDGET};
use crate::rng::indexed_stream;
use crate::set::ElementSet;
use crate::set_function::{
    Concave, ConcaveModular, Context, SetFunction, SharedModel, WeightedCoverage, WidthBaseline,
    WidthModel,
};
use crate::t_operator::{t_value_exact, WeightTable};

/// Inequalities count as violated below this slack.
pub const SLACK_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Coverage,
    /// Origin-baseline Gaussian width over a shared noise panel.
    Width,
    ConcaveModular,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] = [
        GeneratorKind::Coverage,
        GeneratorKind::Width,
        GeneratorKind::ConcaveModular,
    ];
}

/// Random monotone submodular functions on `[ground]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSubmodularGen {
    pub kind: GeneratorKind,
    pub ground: usize,
}

impl RandomSubmodularGen {
    pub fn new(kind: GeneratorKind, ground: usize) -> Self {
        RandomSubmodularGen { kind, ground }
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> SharedModel {
        let a = self.ground;
        match self.kind {
            GeneratorKind::Coverage => {
                let topics = a + 3;
                let covers = (0..a)
                    .map(|_| (0..topics).filter(|_| rng.random::<f64>() < 0.4).collect())
                    .collect();
                let weights = (0..topics).map(|_| rng.random::<f64>()).collect();
                Arc::new(WeightedCoverage::new(covers, weights).expect("valid coverage"))
            }
            GeneratorKind::Width => {
                let d = 3;
                let vectors = (0..a)
                    .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                Arc::new(
                    WidthModel::sample(vectors, 32, None, WidthBaseline::Origin, rng)
                        .expect("valid width model"),
                )
            }
            GeneratorKind::ConcaveModular => {
                if rng.random::<bool>() {
                    let w = (0..a).map(|_| rng.random::<f64>()).collect();
                    Arc::new(ConcaveModular::new(w, Concave::Sqrt).expect("valid weights"))
                } else {
                    let w = (0..a).map(|_| 0.5 * rng.random::<f64>()).collect();
                    Arc::new(ConcaveModular::new(w, Concave::Saturate).expect("valid weights"))
                }
            }
        }
    }
}

/// A random uniform, partition or two-level laminar matroid on `[a]` with
/// rank at most `max_rank`.
pub fn random_matroid<R: Rng + ?Sized>(a: usize, max_rank: usize, rng: &mut R) -> Matroid {
    let max_rank = max_rank.min(a).max(1);
    let mut order: Vec<usize> = (0..a).collect();
    order.shuffle(rng);
    match rng.random_range(0..3) {
        0 => Matroid::uniform(a, rng.random_range(1..=max_rank)).expect("valid uniform"),
        1 => {
            let b = rng.random_range(1..=max_rank);
            let mut blocks: Vec<ElementSet> = order[..b].iter().map(|&e| ElementSet::singleton(e)).collect();
            for &e in &order[b..] {
                // Occasionally leave an element outside every block.
                if rng.random::<f64>() < 0.9 {
                    blocks[rng.random_range(0..b)].insert(e);
                }
            }
            let mut caps = vec![1; b];
            let mut spare = max_rank - b;
            for (i, blk) in blocks.iter().enumerate() {
                if spare > 0 && caps[i] < blk.len() && rng.random::<bool>() {
                    caps[i] += 1;
                    spare -= 1;
                }
            }
            Matroid::partition(a, blocks, caps).expect("valid partition")
        }
        _ => {
            let inner_size = rng.random_range(1..=a);
            let inner: ElementSet = order[..inner_size].iter().copied().collect();
            let outer: ElementSet = (0..a).collect();
            let top = rng.random_range(1..=max_rank);
            let inner_cap = rng.random_range(1..=top.min(inner_size));
            Matroid::laminar(a, vec![(inner, inner_cap), (outer, top)]).expect("valid laminar")
        }
    }
}

/// `max_{S ∈ I} f(S)` over every independent set.
pub fn exhaustive_max<F>(mut f: F, m: &Matroid, budget: usize) -> Result<(ElementSet, f64)>
where
    F: FnMut(&ElementSet) -> f64,
{
    let mut best = (ElementSet::empty(), f64::NEG_INFINITY);
    for s in m.enumerate_independent(budget)? {
        let v = f(&s);
        if v > best.1 {
            best = (s, v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Audit {
    pub checks: usize,
    pub monotone_violations: usize,
    pub submodular_violations: usize,
}

impl Audit {
    pub fn clean(&self) -> bool {
        self.monotone_violations == 0 && self.submodular_violations == 0
    }
}

/// Every `S`, `a ∉ S`, `b ∉ S + a`: `f(S + a) >= f(S)` and
/// `f(S + a) - f(S) >= f(S + a + b) - f(S + b)`, up to `tol`.
pub fn audit_monotone_submodular<F>(f: F, ground: usize, tol: f64) -> Audit
where
    F: Fn(&ElementSet) -> f64,
{
    assert!(ground <= 16, "exhaustive audit is limited to 16 elements");
    let values: Vec<f64> = (0u64..1 << ground).map(|m| f(&ElementSet::from_mask(m))).collect();
    let mut audit = Audit::default();
    for s in 0u64..1 << ground {
        for a in (0..ground).filter(|a| s & (1 << a) == 0) {
            let sa = s | 1 << a;
            audit.checks += 1;
            if values[sa as usize] < values[s as usize] - tol {
                audit.monotone_violations += 1;
            }
            for b in (0..ground).filter(|b| sa & (1 << b) == 0) {
                let sb = s | 1 << b;
                let gain_small = values[sa as usize] - values[s as usize];
                let gain_big = values[(sa | 1 << b) as usize] - values[sb as usize];
                audit.checks += 1;
                if gain_small < gain_big - tol {
                    audit.submodular_violations += 1;
                }
            }
        }
    }
    audit
}

/// Pairs `(t, π(t))` for `t ∈ T ∖ S` such that `S - π(t) + t` is
/// independent, or `None` if no such bijection exists. Candidates are tried
/// in increasing order, so the lexicographically first matching is returned.
pub fn find_exchange_bijection(
    m: &Matroid,
    s: &ElementSet,
    t: &ElementSet,
) -> Result<Option<Vec<(usize, usize)>>> {
    if !m.is_base(s)? || !m.is_base(t)? {
        return Err(Error::Precondition("exchange bijection needs two bases".into()));
    }
    let ts: Vec<usize> = t.difference(s).iter().collect();
    let ss: Vec<usize> = s.difference(t).iter().collect();
    let feasible: Vec<Vec<bool>> = ts
        .iter()
        .map(|&te| ss.iter().map(|&se| m.independent_unchecked(&s.swap(se, te))).collect())
        .collect();
    let mut assign = vec![usize::MAX; ts.len()];
    let mut used = vec![false; ss.len()];
    fn go(i: usize, feasible: &[Vec<bool>], assign: &mut [usize], used: &mut [bool]) -> bool {
        if i == assign.len() {
            return true;
        }
        for j in 0..used.len() {
            if !used[j] && feasible[i][j] {
                used[j] = true;
                assign[i] = j;
                if go(i + 1, feasible, assign, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    if !go(0, &feasible, &mut assign, &mut used) {
        return Ok(None);
    }
    Ok(Some(ts.iter().zip(&assign).map(|(&te, &j)| (te, ss[j])).collect()))
}

/// Smallest total `u` over tuples whose total gap is at most `budget`.
/// Each round offers `(gap, u)` options; dominated partial sums are pruned.
fn min_value_within_gap(rounds: &[Vec<(f64, f64)>], budget: f64) -> f64 {
    let mut frontier = vec![(0.0f64, 0.0f64)];
    for options in rounds {
        let mut next: Vec<(f64, f64)> = frontier
            .iter()
            .flat_map(|&(g, u)| options.iter().map(move |&(og, ou)| (g + og, u + ou)))
            .filter(|&(g, _)| g <= budget)
            .collect();
        next.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut pruned: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for p in next {
            if pruned.last().is_none_or(|q| p.1 < q.1) {
                pruned.push(p);
            }
        }
        frontier = pruned;
    }
    frontier.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
}

/// One round of a joint-optimality instance.
#[derive(Debug, Clone)]
pub struct LemmaRound {
    pub model: SharedModel,
    pub matroid: Matroid,
}

/// Worst case of a joint local-optimality inequality over all qualifying
/// tuples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `min Σ u_j(S_j) - c (Σ OPT_j - n k ε)`.
    pub slack: f64,
    /// `min Σ u_j(S_j) / Σ OPT_j`.
    pub ratio: f64,
}

fn rank_k(rounds: &[LemmaRound]) -> Result<usize> {
    let k = rounds
        .first()
        .ok_or_else(|| Error::Precondition("no rounds".into()))?
        .matroid
        .rank();
    if rounds.iter().any(|r| r.matroid.rank() != k) {
        return Err(Error::Precondition("all rounds need the same rank".into()));
    }
    Ok(k)
}

/// Joint local ε-optima over swap neighborhoods `I_j(S_j)` of size-`k` sets
/// against the `1/2` bound.
pub fn verify_lemma1(rounds: &[LemmaRound], eps: f64) -> Result<LemmaCheck> {
    let k = rank_k(rounds)?;
    let ctx = Context::empty();
    let mut options = Vec::with_capacity(rounds.len());
    let mut opt_total = 0.0;
    for r in rounds {
        let u = |s: &ElementSet| r.model.value(s, &ctx);
        let sets = r.matroid.independent_sets_of_size(k, DEFAULT_ENUMERATION_BUDGET)?;
        let mut opts = Vec::with_capacity(sets.len());
        for s in &sets {
            let here = u(s);
            let best = r
                .matroid
                .swap_neighborhood(s)?
                .iter()
                .map(u)
                .fold(f64::NEG_INFINITY, f64::max);
            opts.push((best - here, here));
        }
        options.push(opts);
        opt_total += exhaustive_max(u, &r.matroid, DEFAULT_ENUMERATION_BUDGET)?.1;
    }
    Ok(finish(&options, opt_total, rounds.len(), k, eps, 0.5))
}

/// Joint local ε-optima of the T-potentials over base neighborhoods against
/// the `1 - 1/e` bound.
pub fn verify_lemma2(rounds: &[LemmaRound], eps: f64, table: &WeightTable) -> Result<LemmaCheck> {
    let k = rank_k(rounds)?;
    let ctx = Context::empty();
    let mut options = Vec::with_capacity(rounds.len());
    let mut opt_total = 0.0;
    for r in rounds {
        let u = |s: &ElementSet| r.model.value(s, &ctx);
        let bases = r.matroid.enumerate_bases(DEFAULT_ENUMERATION_BUDGET)?;
        let mut t_of = std::collections::HashMap::new();
        for b in &bases {
            t_of.insert(b.clone(), t_value_exact(u, b, table)?);
        }
        let mut opts = Vec::with_capacity(bases.len());
        for b in &bases {
            let best = r
                .matroid
                .base_neighborhood(b)?
                .iter()
                .map(|n| t_of[n])
                .fold(f64::NEG_INFINITY, f64::max);
            opts.push((best - t_of[b], u(b)));
        }
        options.push(opts);
        opt_total += bases.iter().map(u).fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(finish(&options, opt_total, rounds.len(), k, eps, ONE_MINUS_INV_E))
}

fn finish(options: &[Vec<(f64, f64)>], opt_total: f64, n: usize, k: usize, eps: f64, c: f64) -> LemmaCheck {
    let budget = n as f64 * eps;
    let worst = min_value_within_gap(options, budget);
    LemmaCheck {
        slack: worst - c * (opt_total - n as f64 * k as f64 * eps),
        ratio: if opt_total > 0.0 { worst / opt_total } else { 1.0 },
    }
}

/// `u(S) - (1-1/e) u(T) - (1-1/e) Σ_i [Tu(S) - Tu(S - π(t_i) + t_i)]`.
pub fn filmus_ward_slack(
    u: &dyn Fn(&ElementSet) -> f64,
    m: &Matroid,
    s: &ElementSet,
    t: &ElementSet,
    table: &WeightTable,
) -> Result<f64> {
    let pi = find_exchange_bijection(m, s, t)?.ok_or_else(|| {
        Error::Precondition(format!("no exchange bijection between {{{s}}} and {{{t}}}"))
    })?;
    let ts = t_value_exact(u, s, table)?;
    let mut gaps = 0.0;
    for (te, se) in pi {
        gaps += ts - t_value_exact(u, &s.swap(se, te), table)?;
    }
    Ok(u(s) - ONE_MINUS_INV_E * u(t) - ONE_MINUS_INV_E * gaps)
}

/// Minimum Filmus–Ward slack over `trials` random base pairs plus `S = T`.
pub fn verify_filmus_ward<R: Rng + ?Sized>(
    model: &dyn SetFunction,
    m: &Matroid,
    table: &WeightTable,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let ctx = Context::empty();
    let u = |s: &ElementSet| model.value(s, &ctx);
    let bases = m.enumerate_bases(DEFAULT_ENUMERATION_BUDGET)?;
    let mut worst = filmus_ward_slack(&u, m, &bases[0], &bases[0], table)?;
    for _ in 0..trials {
        let s = &bases[rng.random_range(0..bases.len())];
        let t = &bases[rng.random_range(0..bases.len())];
        worst = worst.min(filmus_ward_slack(&u, m, s, t, table)?);
    }
    Ok(worst)
}

/// `2K/γ - Σ_a p(a) [max f* - f*(a) - (γ/4)(ŷ(a) - f*(a))²]` under IGW.
pub fn igw_slack(yhat: &[f64], fstar: &[f64], gamma: f64) -> Result<f64> {
    let sa = ScoredActions::new(yhat.to_vec(), gamma)?;
    let p = igw_distribution(&sa);
    let top = fstar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lhs: f64 = p
        .iter()
        .zip(yhat.iter().zip(fstar))
        .map(|(pa, (y, f))| pa * (top - f - gamma / 4.0 * (y - f) * (y - f)))
        .sum();
    Ok(2.0 * yhat.len() as f64 / gamma - lhs)
}

/// Outcome of one verification battery.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub instances: usize,
    pub min_slack: f64,
    pub failures: usize,
}

impl VerifyReport {
    fn from_slacks(name: &str, slacks: Vec<f64>) -> Self {
        VerifyReport {
            name: name.to_string(),
            instances: slacks.len(),
            min_slack: slacks.iter().cloned().fold(f64::INFINITY, f64::min),
            failures: slacks.iter().filter(|s| !(**s >= SLACK_TOL)).count(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

const EPS_GRID: [f64; 4] = [0.0, 1e-3, 1e-2, 5e-2];

fn random_rounds<R: Rng + ?Sized>(rng: &mut R) -> Vec<LemmaRound> {
    let a = rng.random_range(2..=6);
    let n = rng.random_range(1..=5);
    let first = random_matroid(a, 3, rng);
    let k = first.rank();
    let mut rounds = Vec::with_capacity(n);
    let mut m = first;
    for j in 0..n {
        if j > 0 {
            m = (0..20)
                .map(|_| random_matroid(a, 3, rng))
                .find(|c| c.rank() == k)
                .unwrap_or_else(|| Matroid::uniform(a, k).expect("k <= a"));
        }
        let kind = GeneratorKind::ALL[rng.random_range(0..3)];
        rounds.push(LemmaRound {
            model: RandomSubmodularGen::new(kind, a).generate(rng),
            matroid: m.clone(),
        });
    }
    rounds
}

fn battery<F>(name: &str, instances: usize, seed: u64, one: F) -> Result<VerifyReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync,
{
    let slacks = (0..instances)
        .into_par_iter()
        .map(|i| one(&mut indexed_stream(seed, i as u64)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(VerifyReport::from_slacks(name, slacks))
}

pub fn lemma1_battery(instances: usize, seed: u64) -> Result<VerifyReport> {
    battery("lemma1", instances, seed, |rng| {
        let rounds = random_rounds(rng);
        let eps = EPS_GRID[rng.random_range(0..EPS_GRID.len())];
        Ok(verify_lemma1(&rounds, eps)?.slack)
    })
}

pub fn lemma2_battery(instances: usize, seed: u64, table: &WeightTable) -> Result<VerifyReport> {
    battery("lemma2", instances, seed, |rng| {
        let rounds = random_rounds(rng);
        let eps = EPS_GRID[rng.random_range(0..EPS_GRID.len())];
        Ok(verify_lemma2(&rounds, eps, table)?.slack)
    })
}

pub fn filmus_ward_battery(instances: usize, seed: u64, table: &WeightTable) -> Result<VerifyReport> {
    battery("filmus-ward", instances, seed, |rng| {
        let a = rng.random_range(2..=6);
        let m = random_matroid(a, 3, rng);
        let kind = GeneratorKind::ALL[rng.random_range(0..3)];
        let u = RandomSubmodularGen::new(kind, a).generate(rng);
        verify_filmus_ward(&*u, &m, table, 10, rng)
    })
}

/// IGW regret-to-error slack for random `(ŷ, f*, γ)`; `p(greedy) < 1/2` counts as a
/// failure through a slack of `-inf`.
pub fn igw_battery(trials: usize, seed: u64) -> Result<VerifyReport> {
    battery("igw", trials, seed, |rng| {
        let k = rng.random_range(2..=50);
        let gamma = 10f64.powf(rng.random_range(0.0..4.0));
        let yhat: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let fstar: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let sa = ScoredActions::new(yhat.clone(), gamma)?;
        if igw_distribution(&sa)[sa.greedy()] < 0.5 {
            return Ok(f64::NEG_INFINITY);
        }
        igw_slack(&yhat, &fstar, gamma)
    })
}

/// Exhaustive monotone-submodular audit of random shared-noise width models;
/// the slack is minus the violation count.
pub fn width_battery(instances: usize, seed: u64) -> Result<VerifyReport> {
    battery("width", instances, seed, |rng| {
        let a = rng.random_range(2..=6);
        let u = RandomSubmodularGen::new(GeneratorKind::Width, a).generate(rng);
        let audit = audit_monotone_submodular(|s| u.value(s, &Context::empty()), a, 1e-12);
        Ok(-((audit.monotone_violations + audit.submodular_violations) as f64))
    })
}

pub const BATTERIES: [&str; 5] = ["lemma1", "lemma2", "filmus-ward", "igw", "width"];

/// Runs a named battery with its default size.
pub fn run_battery(name: &str, seed: u64, table: &WeightTable) -> Result<VerifyReport> {
    match name {
        "lemma1" => lemma1_battery(1000, seed),
        "lemma2" => lemma2_battery(1000, seed, table),
        "filmus-ward" => filmus_ward_battery(1000, seed, table),
        "igw" => igw_battery(10_000, seed),
        "width" => width_battery(200, seed),
        other => Err(Error::Config(format!(
            "unknown battery {other:?}; expected one of {}",
            BATTERIES.join(", ")
        ))),
    }
}
