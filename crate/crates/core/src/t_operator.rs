//! The non-oblivious potential `T v(S) = Σ_{∅≠T⊆S} w_{|S|,|T|} v(T)` of
//! non-oblivious local search, its normalizer `τ(s)`, and the subset law
//! `D_S(T) = w_{|S|,|T|} / τ(|S|)` used for exploration.

use std::io::Write;

use gauss_quad::GaussLegendre;
use rand::Rng;

use crate::error::{Error, Result};
use crate::set::{binomial, ElementSet};

pub const DEFAULT_QUAD_POINTS: usize = 64;

/// Which integrand defines the subset weights.
///
/// Both use `e^p / (e-1)` against a Bernstein-type factor on `[0, 1]`;
/// they differ in the power of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightFamily {
    /// `w_{s,t} = ∫ e^p/(e-1) p^{t-1} (1-p)^{s-t} dp`. These weights give the
    /// `1 - 1/e` local-optimum guarantee and `τ(s) <= e/(e-1) H_s`.
    #[default]
    FilmusWard,
    /// `w_{s,t} = ∫ e^p/(e-1) p^{s-1} (1-p)^{s-t} dp`. Agrees with
    /// `FilmusWard` on the diagonal `t = s` only.
    Literal,
}

impl WeightFamily {
    fn p_power(self, s: usize, t: usize) -> i32 {
        match self {
            WeightFamily::FilmusWard => t as i32 - 1,
            WeightFamily::Literal => s as i32 - 1,
        }
    }
}

/// `w[s][t]` for `1 <= t <= s <= k_max` together with `τ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    family: WeightFamily,
    // w[s][t]; row 0 and column 0 unused
    w: Vec<Vec<f64>>,
    tau: Vec<f64>,
}

impl WeightTable {
    pub fn compute(k_max: usize, quad_points: usize) -> Result<Self> {
        Self::compute_family(k_max, quad_points, WeightFamily::default())
    }

    pub fn compute_family(k_max: usize, quad_points: usize, family: WeightFamily) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        let rule = GaussLegendre::new(quad_points)
            .map_err(|e| Error::Domain(format!("quadrature rule: {e}")))?;
        let em1 = std::f64::consts::E - 1.0;
        let mut w = vec![vec![0.0; k_max + 1]; k_max + 1];
        let mut tau = vec![0.0; k_max + 1];
        for s in 1..=k_max {
            for t in 1..=s {
                let a = family.p_power(s, t);
                let b = (s - t) as i32;
                w[s][t] = rule.integrate(0.0, 1.0, |p| p.exp() / em1 * p.powi(a) * (1.0 - p).powi(b));
            }
            tau[s] = (1..=s).map(|t| binomial(s, t) * w[s][t]).sum();
        }
        Ok(WeightTable { family, w, tau })
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn k_max(&self) -> usize {
        self.w.len() - 1
    }

    /// Panics unless `1 <= t <= s <= k_max`.
    pub fn w(&self, s: usize, t: usize) -> f64 {
        assert!(t >= 1 && t <= s && s <= self.k_max(), "w[{s}][{t}] out of range");
        self.w[s][t]
    }

    /// `τ(s)`, with `τ(0) = 0`.
    pub fn tau(&self, s: usize) -> f64 {
        self.tau[s]
    }

    /// `τ(s) <= e/(e-1) · H_s`, with a relative slack for quadrature error.
    pub fn tau_bound_ok(&self, s: usize) -> bool {
        self.tau(s) <= tau_bound(s) * (1.0 + 1e-12)
    }

    pub fn distribution(&self, base: &ElementSet) -> Result<SubsetDistribution> {
        let s = base.len();
        if s == 0 {
            return Err(Error::Precondition("D_S needs a nonempty base set".into()));
        }
        if s > self.k_max() {
            return Err(Error::Domain(format!(
                "|S| = {s} exceeds weight table size {}",
                self.k_max()
            )));
        }
        let q = (1..=s)
            .map(|t| binomial(s, t) * self.w[s][t] / self.tau[s])
            .collect();
        Ok(SubsetDistribution {
            base: base.clone(),
            q,
            tau: self.tau[s],
            w: self.w[s][1..=s].to_vec(),
        })
    }

    /// CSV dump with columns `s,t,w,tau`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["s", "t", "w", "tau"])?;
        for s in 1..=self.k_max() {
            for t in 1..=s {
                wr.write_record([
                    s.to_string(),
                    t.to_string(),
                    format!("{:.17e}", self.w[s][t]),
                    format!("{:.17e}", self.tau[s]),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// `D_S`: cardinality `t` with probability `q[t-1] = C(s,t) w_{s,t} / τ(s)`,
/// then a uniform `t`-subset of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetDistribution {
    base: ElementSet,
    q: Vec<f64>,
    tau: f64,
    w: Vec<f64>,
}

impl SubsetDistribution {
    pub fn base(&self) -> &ElementSet {
        &self.base
    }

    /// Cardinality law, indexed by `t - 1`.
    pub fn cardinality_probs(&self) -> &[f64] {
        &self.q
    }

    /// Exact probability of drawing `subset`.
    pub fn probability(&self, subset: &ElementSet) -> f64 {
        if subset.is_empty() || !subset.is_subset(&self.base) {
            return 0.0;
        }
        self.w[subset.len() - 1] / self.tau
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ElementSet {
        let s = self.base.len();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut t = s;
        for (i, q) in self.q.iter().enumerate() {
            acc += q;
            if u < acc {
                t = i + 1;
                break;
            }
        }
        let picks = rand::seq::index::sample(rng, s, t);
        picks.iter().map(|i| self.base.as_slice()[i]).collect()
    }
}

/// Draw from `D_S`.
/// `e/(e-1) · H_s`.
pub fn tau_bound(s: usize) -> f64 {
    let h: f64 = (1..=s).map(|i| 1.0 / i as f64).sum();
    std::f64::consts::E / (std::f64::consts::E - 1.0) * h
}

pub fn sample_subset<R: Rng + ?Sized>(dist: &SubsetDistribution, rng: &mut R) -> ElementSet {
    dist.sample(rng)
}

/// Result of evaluating `T v(S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEstimate {
    pub value: f64,
    /// 0 for exact evaluation.
    pub std_error: f64,
    pub exact: bool,
}

/// When to enumerate subsets and when to sample them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TConfig {
    /// Largest `|S|` evaluated by full enumeration of its `2^|S| - 1` subsets.
    pub exact_max: usize,
    /// Draw count for Monte Carlo; `None` turns larger sets into an error.
    pub mc_draws: Option<usize>,
}

impl Default for TConfig {
    fn default() -> Self {
        TConfig {
            exact_max: 15,
            mc_draws: Some(10_000),
        }
    }
}

/// `Σ_{∅≠T⊆S} w_{|S|,|T|} v(T)` by enumeration. `T v(∅) = 0`.
pub fn t_value_exact<F>(mut v: F, set: &ElementSet, table: &WeightTable) -> Result<f64>
where
    F: FnMut(&ElementSet) -> f64,
{
    let s = set.len();
    if s == 0 {
        return Ok(0.0);
    }
    if s > table.k_max() {
        return Err(Error::Domain(format!(
            "|S| = {s} exceeds weight table size {}",
            table.k_max()
        )));
    }
    if s >= 40 {
        return Err(Error::Capacity(format!("2^{s} subsets is too many to enumerate")));
    }
    let mut total = 0.0;
    for mask in 1u64..(1u64 << s) {
        let sub = set.sub_by_mask(mask);
        total += table.w[s][sub.len()] * v(&sub);
    }
    Ok(total)
}

/// `τ(|S|) · mean v(T)` over `draws` samples `T ~ D_S`.
pub fn t_value_mc<F, R>(
    mut v: F,
    set: &ElementSet,
    table: &WeightTable,
    draws: usize,
    rng: &mut R,
) -> Result<TEstimate>
where
    F: FnMut(&ElementSet) -> f64,
    R: Rng + ?Sized,
{
    if set.is_empty() {
        return Ok(TEstimate {
            value: 0.0,
            std_error: 0.0,
            exact: true,
        });
    }
    if draws < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two draws".into()));
    }
    let dist = table.distribution(set)?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let x = v(&dist.sample(rng));
        sum += x;
        sum_sq += x * x;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(TEstimate {
        value: dist.tau * mean,
        std_error: dist.tau * (var / n).sqrt(),
        exact: false,
    })
}

/// `T v(S)`: exact up to `cfg.exact_max`, Monte Carlo beyond.
pub fn t_value<F, R>(
    v: F,
    set: &ElementSet,
    table: &WeightTable,
    cfg: &TConfig,
    rng: &mut R,
) -> Result<TEstimate>
where
    F: FnMut(&ElementSet) -> f64,
    R: Rng + ?Sized,
{
    if set.len() <= cfg.exact_max {
        return Ok(TEstimate {
            value: t_value_exact(v, set, table)?,
            std_error: 0.0,
            exact: true,
        });
    }
    match cfg.mc_draws {
        Some(draws) => t_value_mc(v, set, table, draws, rng),
        None => Err(Error::Capacity(format!(
            "|S| = {} above exact limit {} and Monte Carlo disabled",
            set.len(),
            cfg.exact_max
        ))),
    }
}
