//! Inverse gap weighting with a `2K` denominator, so that the greedy action
//! always keeps at least half of the mass.

use rand::Rng;

use crate::error::{Error, Result};

/// Scores `ŷ` for `K` actions together with the exploration parameter `γ`
/// and the multiplier `μ` on the `2K` term.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredActions {
    pub scores: Vec<f64>,
    pub gamma: f64,
    pub mu: f64,
}

impl ScoredActions {
    pub fn new(scores: Vec<f64>, gamma: f64) -> Result<Self> {
        Self::with_mu(scores, gamma, 1.0)
    }

    pub fn with_mu(scores: Vec<f64>, gamma: f64, mu: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Domain("IGW needs at least one action".into()));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("score {s} is not finite")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be finite and positive, got {gamma}")));
        }
        if !(mu.is_finite() && mu >= 1.0) {
            return Err(Error::Domain(format!("mu must be finite and at least 1, got {mu}")));
        }
        Ok(ScoredActions { scores, gamma, mu })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Index of the largest score; ties go to the lowest index.
    pub fn greedy(&self) -> usize {
        let mut b = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[b] {
                b = i;
            }
        }
        b
    }
}

/// `p(a) = 1 / (μ 2K + γ (ŷ(b) - ŷ(a)))` for `a ≠ b`, remainder on `b`.
pub fn igw_distribution(sa: &ScoredActions) -> Vec<f64> {
    let k = sa.len();
    let b = sa.greedy();
    let top = sa.scores[b];
    let mut p = vec![0.0; k];
    if k == 1 {
        p[0] = 1.0;
        return p;
    }
    let denom0 = sa.mu * 2.0 * k as f64;
    let mut rest = 0.0;
    for (i, &s) in sa.scores.iter().enumerate() {
        if i != b {
            p[i] = 1.0 / (denom0 + sa.gamma * (top - s));
            rest += p[i];
        }
    }
    p[b] = 1.0 - rest;
    p
}

/// Draw an action index from [`igw_distribution`].
pub fn igw_sample<R: Rng + ?Sized>(sa: &ScoredActions, rng: &mut R) -> usize {
    sample_index(&igw_distribution(sa), rng)
}

/// Inverse-CDF draw from a probability vector; falls back to the last index
/// when rounding leaves the cumulative sum short of `u`.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &q) in p.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_scores_put_the_remainder_on_index_zero() {
        let p = igw_distribution(&ScoredActions::new(vec![0.4, 0.4], 10.0).unwrap());
        assert_eq!(p, vec![0.75, 0.25]);
    }

    #[test]
    fn hand_evaluated_pair() {
        let p = igw_distribution(&ScoredActions::new(vec![0.5, 1.0], 4.0).unwrap());
        assert!((p[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((p[1] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_action_is_a_point_mass() {
        let sa = ScoredActions::new(vec![0.2], 3.0).unwrap();
        assert_eq!(igw_distribution(&sa), vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(igw_sample(&sa, &mut rng), 0);
        }
    }

    #[test]
    fn rejects_bad_gamma_and_mu() {
        assert!(ScoredActions::new(vec![0.1, 0.2], 0.0).is_err());
        assert!(ScoredActions::new(vec![0.1, 0.2], -1.0).is_err());
        assert!(ScoredActions::new(vec![0.1, 0.2], f64::NAN).is_err());
        assert!(ScoredActions::with_mu(vec![0.1], 1.0, 0.5).is_err());
        assert!(ScoredActions::new(vec![], 1.0).is_err());
    }

    #[test]
    fn mu_shrinks_off_greedy_mass() {
        let p1 = igw_distribution(&ScoredActions::new(vec![0.0, 0.0, 0.0], 1.0).unwrap());
        let p2 = igw_distribution(&ScoredActions::with_mu(vec![0.0, 0.0, 0.0], 1.0, 2.0).unwrap());
        assert!((p1[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((p2[1] - 1.0 / 12.0).abs() < 1e-15);
    }
}
