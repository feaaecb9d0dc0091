//! Nonnegative monotone submodular utility models `u(S, x)`.
//!
//! Every model reports a raw value plus an upper bound `U_max`; the engine
//! works with [`SetFunction::normalized`], which divides by the bound so that
//! mean rewards live in `[0, 1]`.

mod glm;
mod ranking;
mod width;

pub(crate) use glm::check_terms;
pub use glm::{glm_value, GlmModel, GlmTerm, Link, SumGlmModel};
pub use ranking::{PositionTerm, PositionWeight, RankingModel};
pub use width::{WidthBaseline, WidthModel};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::set::ElementSet;

/// Observed context vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Context(pub Vec<f64>);

impl Context {
    pub fn new(x: Vec<f64>) -> Self {
        Context(x)
    }

    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A set function `u(S, x)`, monotone submodular in `S` for every context.
pub trait SetFunction: Send + Sync + fmt::Debug {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64;

    /// `U_max`: no value exceeds this constant.
    fn upper_bound(&self) -> f64 {
        1.0
    }

    /// `false` for Monte Carlo estimates of an underlying expectation.
    fn is_exact(&self) -> bool {
        true
    }

    /// `value / U_max`, clamped into `[0, 1]`.
    fn normalized(&self, set: &ElementSet, ctx: &Context) -> f64 {
        let ub = self.upper_bound();
        if ub <= 0.0 {
            return 0.0;
        }
        (self.value(set, ctx) / ub).clamp(0.0, 1.0)
    }
}

pub type SharedModel = Arc<dyn SetFunction>;

impl<T: SetFunction + ?Sized> SetFunction for Arc<T> {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        (**self).value(set, ctx)
    }
    fn upper_bound(&self) -> f64 {
        (**self).upper_bound()
    }
    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }
    fn normalized(&self, set: &ElementSet, ctx: &Context) -> f64 {
        (**self).normalized(set, ctx)
    }
}

fn check_weights(weights: &[f64], what: &str) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::Domain(format!("{what} must be finite and nonnegative, got {w}")));
    }
    Ok(())
}

/// `Σ_{a ∈ S} weights[a]`; ids without a weight count as zero.
pub fn modular_value(weights: &[f64], set: &ElementSet) -> f64 {
    set.iter().map(|a| weights.get(a).copied().unwrap_or(0.0)).sum()
}

/// Additive utility with per-element nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Modular {
    weights: Vec<f64>,
    bound: f64,
}

impl Modular {
    /// The bound defaults to the total weight.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, "modular weights")?;
        let bound = weights.iter().sum();
        Ok(Modular { weights, bound })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl SetFunction for Modular {
    fn value(&self, set: &ElementSet, _ctx: &Context) -> f64 {
        modular_value(&self.weights, set)
    }
    fn upper_bound(&self) -> f64 {
        self.bound
    }
}

/// Weighted coverage: element `a` covers topics `covers[a]`; the value is the
/// total weight of covered topics.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoverage {
    covers: Vec<ElementSet>,
    topic_weights: Vec<f64>,
}

impl WeightedCoverage {
    pub fn new(covers: Vec<ElementSet>, topic_weights: Vec<f64>) -> Result<Self> {
        check_weights(&topic_weights, "topic weights")?;
        for (a, c) in covers.iter().enumerate() {
            if c.max_element().is_some_and(|t| t >= topic_weights.len()) {
                return Err(Error::Domain(format!(
                    "element {a} covers a topic outside 0..{}",
                    topic_weights.len()
                )));
            }
        }
        Ok(WeightedCoverage {
            covers,
            topic_weights,
        })
    }
}

impl SetFunction for WeightedCoverage {
    fn value(&self, set: &ElementSet, _ctx: &Context) -> f64 {
        let mut covered = vec![false; self.topic_weights.len()];
        for a in set.iter() {
            if let Some(c) = self.covers.get(a) {
                for t in c.iter() {
                    covered[t] = true;
                }
            }
        }
        covered
            .iter()
            .zip(&self.topic_weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum()
    }
    fn upper_bound(&self) -> f64 {
        self.topic_weights.iter().sum()
    }
}

/// Concave transforms used by [`ConcaveModular`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concave {
    Sqrt,
    /// `min(x, 1)`
    Saturate,
}

impl Concave {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Concave::Sqrt => x.max(0.0).sqrt(),
            Concave::Saturate => x.min(1.0),
        }
    }
}

/// `φ(Σ_{a∈S} w_a)` for concave nondecreasing `φ` with `φ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveModular {
    weights: Vec<f64>,
    phi: Concave,
}

impl ConcaveModular {
    pub fn new(weights: Vec<f64>, phi: Concave) -> Result<Self> {
        check_weights(&weights, "weights")?;
        Ok(ConcaveModular { weights, phi })
    }
}

impl SetFunction for ConcaveModular {
    fn value(&self, set: &ElementSet, _ctx: &Context) -> f64 {
        self.phi.apply(modular_value(&self.weights, set))
    }
    fn upper_bound(&self) -> f64 {
        self.phi.apply(self.weights.iter().sum())
    }
}

/// `v(S ∩ C)` for a fixed category `C`.
#[derive(Debug, Clone)]
pub struct Restricted {
    inner: SharedModel,
    category: ElementSet,
}

impl Restricted {
    pub fn new(inner: SharedModel, category: ElementSet) -> Self {
        Restricted { inner, category }
    }
}

impl SetFunction for Restricted {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.inner.value(&set.intersection(&self.category), ctx)
    }
    fn upper_bound(&self) -> f64 {
        self.inner.upper_bound()
    }
    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }
}

/// Adapter turning a closure into a [`SetFunction`].
pub struct FnSetFunction<F> {
    f: F,
    bound: f64,
}

impl<F> FnSetFunction<F>
where
    F: Fn(&ElementSet, &Context) -> f64 + Send + Sync,
{
    pub fn new(f: F, bound: f64) -> Self {
        FnSetFunction { f, bound }
    }
}

impl<F> fmt::Debug for FnSetFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSetFunction").field("bound", &self.bound).finish()
    }
}

impl<F> SetFunction for FnSetFunction<F>
where
    F: Fn(&ElementSet, &Context) -> f64 + Send + Sync,
{
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        (self.f)(set, ctx)
    }
    fn upper_bound(&self) -> f64 {
        self.bound
    }
}
