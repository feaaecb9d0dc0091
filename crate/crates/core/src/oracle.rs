//! Online regression oracles: exponentially weighted aggregation over a
//! finite model class, projected GLMtron for a single GLM, and its
//! sum-of-GLMs ReLU variant.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::set::ElementSet;
use crate::set_function::{Context, GlmTerm, Link, SetFunction, SharedModel};

/// Learning rate for aggregation; square loss on `[0, 1]` is 1/2-exp-concave.
pub const DEFAULT_ETA_AGG: f64 = 0.5;

/// Flag threshold for the condition (30) signal-strength monitor.
pub const SIGNAL_FLAG_THRESHOLD: f64 = 1e-3;

/// Sequential square-loss regressor over `(S, x)` pairs.
pub trait RegressionOracle: Send + Sync + fmt::Debug {
    /// Prediction in `[0, 1]`; deterministic between updates.
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64;

    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64);

    /// Empirical minimum eigenvalue of the design second moment, for
    /// oracles that track one.
    fn signal_strength(&self) -> Option<f64> {
        None
    }
}

impl<T: RegressionOracle + ?Sized> RegressionOracle for Box<T> {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        (**self).predict(set, ctx)
    }
    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64) {
        (**self).update(set, ctx, reward)
    }
    fn signal_strength(&self) -> Option<f64> {
        (**self).signal_strength()
    }
}

/// Exponential weights over a finite list of models, in log domain.
#[derive(Debug, Clone)]
pub struct FiniteClassOracle {
    experts: Vec<SharedModel>,
    log_w: Vec<f64>,
    eta_agg: f64,
}

impl FiniteClassOracle {
    pub fn new(experts: Vec<SharedModel>, eta_agg: f64) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::Config("finite-class oracle needs at least one expert".into()));
        }
        if !(eta_agg.is_finite() && eta_agg > 0.0) {
            return Err(Error::Config(format!("eta_agg must be positive, got {eta_agg}")));
        }
        let n = experts.len();
        Ok(FiniteClassOracle {
            experts,
            log_w: vec![0.0; n],
            eta_agg,
        })
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    /// Normalized weights.
    pub fn weights(&self) -> Vec<f64> {
        let top = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_w.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / z).collect()
    }
}

impl RegressionOracle for FiniteClassOracle {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.weights()
            .iter()
            .zip(&self.experts)
            .map(|(w, e)| w * e.normalized(set, ctx))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64) {
        for (l, e) in self.log_w.iter_mut().zip(&self.experts) {
            let d = e.normalized(set, ctx) - reward;
            *l -= self.eta_agg * d * d;
        }
        let top = self.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for l in &mut self.log_w {
            *l -= top;
        }
    }
}

fn project_unit_ball(theta: &mut [f64]) {
    let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm > 1.0 {
        for t in theta {
            *t /= norm;
        }
    }
}

/// Projected GLMtron for `v(S, x) σ(<θ, x>)` with known `v`, `σ`.
#[derive(Debug, Clone)]
pub struct GlmOracle {
    base: SharedModel,
    link: Link,
    theta: Vec<f64>,
    eta: f64,
}

impl GlmOracle {
    /// Starts at `θ = 0`.
    pub fn new(base: SharedModel, link: Link, dim: usize, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {eta}")));
        }
        Ok(GlmOracle {
            base,
            link,
            theta: vec![0.0; dim],
            eta,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `g = v (v σ(<θ, x>) - r) x`
    pub fn gradient(&self, set: &ElementSet, ctx: &Context, reward: f64) -> Vec<f64> {
        let v = self.base.normalized(set, ctx);
        let pred = v * self.link.apply(ctx.dot(&self.theta));
        let scale = v * (pred - reward);
        ctx.as_slice().iter().map(|x| scale * x).collect()
    }
}

impl RegressionOracle for GlmOracle {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        (self.base.normalized(set, ctx) * self.link.apply(ctx.dot(&self.theta))).clamp(0.0, 1.0)
    }

    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64) {
        let g = self.gradient(set, ctx, reward);
        for (t, gi) in self.theta.iter_mut().zip(&g) {
            *t -= self.eta * gi;
        }
        project_unit_ball(&mut self.theta);
    }
}

/// Running minimum-eigenvalue estimate of `(1/n) Σ_t z_t z_tᵀ` with
/// `z_t = Σ_i v_i P_i x_t`.
#[derive(Debug, Clone)]
pub struct SignalMonitor {
    second_moment: DMatrix<f64>,
    count: usize,
}

impl SignalMonitor {
    pub fn new(dim: usize) -> Self {
        SignalMonitor {
            second_moment: DMatrix::zeros(dim, dim),
            count: 0,
        }
    }

    pub fn observe(&mut self, z: &DVector<f64>) {
        self.second_moment += z * z.transpose();
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.count == 0 || self.second_moment.nrows() == 0 {
            return 0.0;
        }
        let m = &self.second_moment / self.count as f64;
        m.symmetric_eigenvalues().min()
    }

    pub fn flagged(&self) -> bool {
        self.min_eigenvalue() < SIGNAL_FLAG_THRESHOLD
    }
}

/// Projected gradient learner for `Σ_i v_i(S, x) ReLU(θᵀ P_i x)`.
///
/// The rate guarantee presumes i.i.d. symmetric contexts and symmetric
/// `v_i(S, x) = v_i(S, -x)`; both are the caller's responsibility.
#[derive(Debug, Clone)]
pub struct MultiGlmOracle {
    terms: Vec<GlmTerm>,
    theta: DVector<f64>,
    eta: f64,
    monitor: SignalMonitor,
}

impl MultiGlmOracle {
    pub fn new(terms: Vec<GlmTerm>, dim: usize, eta: f64) -> Result<Self> {
        crate::set_function::check_terms(&terms, dim)?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {eta}")));
        }
        Ok(MultiGlmOracle {
            terms,
            theta: DVector::zeros(dim),
            eta,
            monitor: SignalMonitor::new(dim),
        })
    }

    pub fn theta(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn monitor(&self) -> &SignalMonitor {
        &self.monitor
    }

    fn raw_prediction(&self, set: &ElementSet, ctx: &Context) -> (f64, DVector<f64>) {
        let x = DVector::from_column_slice(ctx.as_slice());
        let mut pred = 0.0;
        let mut z = DVector::zeros(self.theta.len());
        for t in &self.terms {
            let v = t.base.normalized(set, ctx);
            let px = &t.projection * &x;
            pred += v * Link::Relu.apply(self.theta.dot(&px));
            z.axpy(v, &px, 1.0);
        }
        (pred, z)
    }

    /// `g = (Σ_i v_i ReLU(θᵀ P_i x) - r) (Σ_j v_j P_j) x`
    pub fn gradient(&self, set: &ElementSet, ctx: &Context, reward: f64) -> Vec<f64> {
        let (pred, z) = self.raw_prediction(set, ctx);
        (z * (pred - reward)).as_slice().to_vec()
    }
}

impl RegressionOracle for MultiGlmOracle {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.raw_prediction(set, ctx).0.clamp(0.0, 1.0)
    }

    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64) {
        let (pred, z) = self.raw_prediction(set, ctx);
        self.theta.axpy(-self.eta * (pred - reward), &z, 1.0);
        project_unit_ball(self.theta.as_mut_slice());
        self.monitor.observe(&z);
    }

    fn signal_strength(&self) -> Option<f64> {
        Some(self.monitor.min_eigenvalue())
    }
}

/// Builds a fresh oracle tuned for a given horizon.
pub type OracleFactory = Box<dyn Fn(usize) -> Box<dyn RegressionOracle> + Send + Sync>;

/// Doubling trick: epoch `m` lasts `2^m` rounds and runs a fresh oracle built
/// for horizon `2^m`.
pub struct Doubling {
    factory: OracleFactory,
    current: Box<dyn RegressionOracle>,
    epoch_len: usize,
    seen: usize,
}

impl Doubling {
    pub fn new(factory: OracleFactory) -> Self {
        let current = factory(1);
        Doubling {
            factory,
            current,
            epoch_len: 1,
            seen: 0,
        }
    }

    pub fn epoch_len(&self) -> usize {
        self.epoch_len
    }
}

impl fmt::Debug for Doubling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Doubling")
            .field("current", &self.current)
            .field("epoch_len", &self.epoch_len)
            .field("seen", &self.seen)
            .finish()
    }
}

impl RegressionOracle for Doubling {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.current.predict(set, ctx)
    }

    fn update(&mut self, set: &ElementSet, ctx: &Context, reward: f64) {
        self.current.update(set, ctx, reward);
        self.seen += 1;
        if self.seen == self.epoch_len {
            self.epoch_len *= 2;
            self.seen = 0;
            self.current = (self.factory)(self.epoch_len);
        }
    }

    fn signal_strength(&self) -> Option<f64> {
        self.current.signal_strength()
    }
}

/// Wraps the true model as an oracle that never learns.
#[derive(Debug, Clone)]
pub struct TruthOracle(pub SharedModel);

impl RegressionOracle for TruthOracle {
    fn predict(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.0.normalized(set, ctx)
    }
    fn update(&mut self, _set: &ElementSet, _ctx: &Context, _reward: f64) {}
}

/// Exposes an oracle's current predictions as a set function.
#[derive(Debug)]
pub struct OracleModel<'a>(pub &'a dyn RegressionOracle);

impl SetFunction for OracleModel<'_> {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.0.predict(set, ctx)
    }
}

/// `n^{-1/2}`, the default GLM step size for a known horizon.
pub fn default_eta(horizon: usize) -> f64 {
    1.0 / (horizon.max(1) as f64).sqrt()
}
