use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::ElementSet;
use crate::set_function::{Context, SharedModel};

/// Where each round's context comes from.
#[derive(Debug, Clone)]
pub enum ContextSource {
    /// Cycles through the list in order; also serves as a fixed script.
    Fixed(Vec<Context>),
    /// Uniform i.i.d. draws from the pool. With `symmetric`, each draw is
    /// negated with probability 1/2 and gets id `pool.len() + index`.
    Sampled { pool: Vec<Context>, symmetric: bool },
    /// `scale · N(0, I_d)` projected into the unit ball; symmetric.
    Gaussian { dim: usize, scale: f64 },
}

impl ContextSource {
    fn check(&self) -> Result<()> {
        let pool = match self {
            ContextSource::Fixed(p) | ContextSource::Sampled { pool: p, .. } => p,
            ContextSource::Gaussian { scale, .. } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::Config("gaussian context scale must be positive".into()));
                }
                return Ok(());
            }
        };
        if pool.is_empty() {
            return Err(Error::Config("context list is empty".into()));
        }
        if pool.iter().flat_map(|c| c.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::Config("contexts must be finite".into()));
        }
        Ok(())
    }

    /// Whether context ids repeat, so per-id caching pays off.
    pub fn is_finite(&self) -> bool {
        !matches!(self, ContextSource::Gaussian { .. })
    }

    fn draw<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> (usize, Context) {
        match self {
            ContextSource::Fixed(p) => {
                let i = t % p.len();
                (i, p[i].clone())
            }
            ContextSource::Sampled { pool, symmetric } => {
                let i = rng.random_range(0..pool.len());
                if *symmetric && rng.random::<bool>() {
                    let neg = pool[i].as_slice().iter().map(|v| -v).collect();
                    (pool.len() + i, Context::new(neg))
                } else {
                    (i, pool[i].clone())
                }
            }
            ContextSource::Gaussian { dim, scale } => {
                let mut x: Vec<f64> = (0..*dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1.0 {
                    for v in &mut x {
                        *v /= norm;
                    }
                }
                (t, Context::new(x))
            }
        }
    }
}

/// Which matroid constrains each round.
#[derive(Debug, Clone)]
pub enum MatroidSchedule {
    Fixed(Matroid),
    /// Round `t` uses `list[t mod len]`.
    Cycle(Vec<Matroid>),
    /// Uniform i.i.d. choice from the list.
    Sampled(Vec<Matroid>),
}

impl MatroidSchedule {
    pub fn matroids(&self) -> &[Matroid] {
        match self {
            MatroidSchedule::Fixed(m) => std::slice::from_ref(m),
            MatroidSchedule::Cycle(l) | MatroidSchedule::Sampled(l) => l,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> usize {
        match self {
            MatroidSchedule::Fixed(_) => 0,
            MatroidSchedule::Cycle(l) => t % l.len(),
            MatroidSchedule::Sampled(l) => rng.random_range(0..l.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardLaw {
    /// `r ~ Bernoulli(u*)`, unbiased.
    Bernoulli,
    /// `clip(u* + sd · N(0, 1), 0, 1)`.
    ClippedGaussian { sd: f64 },
}

/// What a round reveals before the learner acts.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub context_id: usize,
    pub context: Context,
    pub matroid_id: usize,
    pub matroid: &'a Matroid,
}

/// Simulated world: the true model, context and matroid processes and the
/// reward law. Rewards are `u*` normalized into `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Environment {
    model: SharedModel,
    contexts: ContextSource,
    matroids: MatroidSchedule,
    reward: RewardLaw,
    k: usize,
}

impl Environment {
    /// All matroids must share one ground set and have rank `k`.
    pub fn new(
        model: SharedModel,
        contexts: ContextSource,
        matroids: MatroidSchedule,
        reward: RewardLaw,
        k: usize,
    ) -> Result<Self> {
        contexts.check()?;
        let list = matroids.matroids();
        if list.is_empty() {
            return Err(Error::Config("matroid schedule is empty".into()));
        }
        let a = list[0].ground_size();
        for (i, m) in list.iter().enumerate() {
            if m.ground_size() != a {
                return Err(Error::Config(format!(
                    "matroid {i} has ground size {} but matroid 0 has {a}",
                    m.ground_size()
                )));
            }
            if m.rank() != k {
                return Err(Error::Config(format!(
                    "matroid {i} has rank {} but k = {k}",
                    m.rank()
                )));
            }
        }
        if let RewardLaw::ClippedGaussian { sd } = reward {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::Config("reward sd must be nonnegative".into()));
            }
        }
        Ok(Environment {
            model,
            contexts,
            matroids,
            reward,
            k,
        })
    }

    pub fn model(&self) -> &SharedModel {
        &self.model
    }

    pub fn contexts(&self) -> &ContextSource {
        &self.contexts
    }

    pub fn matroid_schedule(&self) -> &MatroidSchedule {
        &self.matroids
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ground_size(&self) -> usize {
        self.matroids.matroids()[0].ground_size()
    }

    /// Context and matroid for round `t` (0-based), drawn before any decision.
    pub fn observe<R1, R2>(&self, t: usize, ctx_rng: &mut R1, mat_rng: &mut R2) -> Observation<'_>
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let (context_id, context) = self.contexts.draw(t, ctx_rng);
        let matroid_id = self.matroids.draw(t, mat_rng);
        Observation {
            context_id,
            context,
            matroid_id,
            matroid: &self.matroids.matroids()[matroid_id],
        }
    }

    /// `u*(S, x)` normalized into `[0, 1]`.
    pub fn mean_reward(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.model.normalized(set, ctx)
    }

    /// Draws `r` and returns it with its mean.
    pub fn reward<R: Rng + ?Sized>(&self, set: &ElementSet, ctx: &Context, rng: &mut R) -> (f64, f64) {
        let mean = self.mean_reward(set, ctx);
        let r = match self.reward {
            RewardLaw::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardLaw::ClippedGaussian { sd } => {
                (mean + sd * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0)
            }
        };
        (r, mean)
    }
}
