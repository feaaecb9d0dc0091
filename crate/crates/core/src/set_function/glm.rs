use nalgebra::{DMatrix, DVector};

use super::{dot, Context, SetFunction, SharedModel};
use crate::error::{Error, Result};
use crate::set::ElementSet;

const BALL_SLACK: f64 = 1e-12;

/// Nondecreasing 1-Lipschitz link functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logistic,
    /// `min(max(a, 0), 1)`
    ClippedLinear,
    /// `max(a, 0)`
    Relu,
}

impl Link {
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Link::Logistic => 1.0 / (1.0 + (-a).exp()),
            Link::ClippedLinear => a.clamp(0.0, 1.0),
            Link::Relu => a.max(0.0),
        }
    }
}

pub(crate) fn check_unit_ball(theta: &[f64]) -> Result<()> {
    let norm = dot(theta, theta).sqrt();
    if !norm.is_finite() || norm > 1.0 + BALL_SLACK {
        return Err(Error::Domain(format!("parameter norm {norm} exceeds 1")));
    }
    Ok(())
}

/// `v(S, x) · σ(<θ, x>)` with `v` normalized into `[0, 1]`.
pub fn glm_value(
    v: &dyn SetFunction,
    theta: &[f64],
    link: Link,
    set: &ElementSet,
    ctx: &Context,
) -> Result<f64> {
    check_unit_ball(theta)?;
    Ok(v.normalized(set, ctx) * link.apply(ctx.dot(theta)))
}

/// Single-index model `v(S, x) σ(<θ, x>)`, `‖θ‖ <= 1`.
#[derive(Debug, Clone)]
pub struct GlmModel {
    base: SharedModel,
    theta: Vec<f64>,
    link: Link,
}

impl GlmModel {
    pub fn new(base: SharedModel, theta: Vec<f64>, link: Link) -> Result<Self> {
        check_unit_ball(&theta)?;
        Ok(GlmModel { base, theta, link })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

impl SetFunction for GlmModel {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.base.normalized(set, ctx) * self.link.apply(ctx.dot(&self.theta))
    }
    fn is_exact(&self) -> bool {
        self.base.is_exact()
    }
}

/// One summand `v_i(S, x) σ(θᵀ P_i x)` of a [`SumGlmModel`].
#[derive(Debug, Clone)]
pub struct GlmTerm {
    pub base: SharedModel,
    pub projection: DMatrix<f64>,
}

impl GlmTerm {
    /// `P_i x`
    pub fn project(&self, ctx: &Context) -> DVector<f64> {
        &self.projection * DVector::from_column_slice(ctx.as_slice())
    }
}

pub(crate) fn check_terms(terms: &[GlmTerm], dim: usize) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::Config("sum-of-GLMs model needs at least one term".into()));
    }
    for (i, t) in terms.iter().enumerate() {
        if t.projection.nrows() != dim || t.projection.ncols() != dim {
            return Err(Error::Config(format!(
                "term {i}: projection is {}x{} but parameter dimension is {dim}",
                t.projection.nrows(),
                t.projection.ncols()
            )));
        }
    }
    Ok(())
}

/// `Σ_i v_i(S, x) σ(θᵀ P_i x)`, `‖θ‖ <= 1`.
///
/// Values are assumed to stay within `[0, 1]`; the default bound is 1.
#[derive(Debug, Clone)]
pub struct SumGlmModel {
    terms: Vec<GlmTerm>,
    theta: Vec<f64>,
    link: Link,
    bound: f64,
}

impl SumGlmModel {
    pub fn new(terms: Vec<GlmTerm>, theta: Vec<f64>, link: Link) -> Result<Self> {
        check_unit_ball(&theta)?;
        check_terms(&terms, theta.len())?;
        Ok(SumGlmModel {
            terms,
            theta,
            link,
            bound: 1.0,
        })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn terms(&self) -> &[GlmTerm] {
        &self.terms
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

impl SetFunction for SumGlmModel {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let px = t.project(ctx);
                t.base.normalized(set, ctx) * self.link.apply(dot(&self.theta, px.as_slice()))
            })
            .sum()
    }
    fn upper_bound(&self) -> f64 {
        self.bound
    }
    fn is_exact(&self) -> bool {
        self.terms.iter().all(|t| t.base.is_exact())
    }
}
