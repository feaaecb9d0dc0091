use super::{Context, SetFunction, SharedModel};
use crate::error::{Error, Result};
use crate::set::ElementSet;

/// Position weight `λ_i(x) = base · logistic(<θ, x>)`, or the constant
/// `base` when no `θ` is given.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionWeight {
    pub base: f64,
    pub theta: Option<Vec<f64>>,
}

impl PositionWeight {
    pub fn constant(base: f64) -> Self {
        PositionWeight { base, theta: None }
    }

    pub fn eval(&self, ctx: &Context) -> f64 {
        match &self.theta {
            None => self.base,
            Some(t) => self.base / (1.0 + (-ctx.dot(t)).exp()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PositionTerm {
    pub weight: PositionWeight,
    /// Click model over items given that positions up to this one are seen.
    pub f: SharedModel,
}

/// Ranking utility over the positions × items ground set:
/// `u(S, x) = Σ_i λ_i(x) f_i(T_i, x)` with `T_i` the items placed at
/// positions `0..=i`. Element `(i, j)` is encoded as `i * items + j`.
#[derive(Debug, Clone)]
pub struct RankingModel {
    items: usize,
    positions: Vec<PositionTerm>,
}

impl RankingModel {
    /// Base weights must be nonnegative and nonincreasing in position.
    pub fn new(items: usize, positions: Vec<PositionTerm>) -> Result<Self> {
        if items == 0 || positions.is_empty() {
            return Err(Error::Config("ranking model needs items and positions".into()));
        }
        for w in positions.windows(2) {
            if w[1].weight.base > w[0].weight.base {
                return Err(Error::Config("position weights must be nonincreasing".into()));
            }
        }
        if positions.iter().any(|p| !(p.weight.base >= 0.0)) {
            return Err(Error::Config("position weights must be nonnegative".into()));
        }
        Ok(RankingModel { items, positions })
    }

    pub fn ground_size(&self) -> usize {
        self.items * self.positions.len()
    }

    /// `T_i = {j : (k, j) ∈ S for some k <= i}` for every position `i`.
    pub fn prefixes(&self, set: &ElementSet) -> Vec<ElementSet> {
        let mut out = Vec::with_capacity(self.positions.len());
        let mut acc = ElementSet::empty();
        for i in 0..self.positions.len() {
            for e in set.iter() {
                if e / self.items == i {
                    acc.insert(e % self.items);
                }
            }
            out.push(acc.clone());
        }
        out
    }

    /// Unnormalized `Σ_i λ_i(x) f_i(T_i, x)` with each `f_i` normalized.
    pub fn ranking_value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.prefixes(set)
            .iter()
            .zip(&self.positions)
            .map(|(t, p)| p.weight.eval(ctx) * p.f.normalized(t, ctx))
            .sum()
    }
}

impl SetFunction for RankingModel {
    fn value(&self, set: &ElementSet, ctx: &Context) -> f64 {
        self.ranking_value(set, ctx)
    }

    fn upper_bound(&self) -> f64 {
        let total: f64 = self.positions.iter().map(|p| p.weight.base).sum();
        if total > 0.0 {
            total
        } else {
            1.0
        }
    }

    fn is_exact(&self) -> bool {
        self.positions.iter().all(|p| p.f.is_exact())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set_function::WeightedCoverage;
    use std::sync::Arc;

    fn one_item_coverage() -> SharedModel {
        // Item 1 covers the only topic; item 0 covers nothing.
        Arc::new(
            WeightedCoverage::new(vec![ElementSet::empty(), ElementSet::from([0])], vec![1.0])
                .unwrap(),
        )
    }

    fn two_positions(l1: f64, l2: f64) -> RankingModel {
        RankingModel::new(
            2,
            vec![
                PositionTerm {
                    weight: PositionWeight::constant(l1),
                    f: one_item_coverage(),
                },
                PositionTerm {
                    weight: PositionWeight::constant(l2),
                    f: one_item_coverage(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_ranking_is_zero() {
        let m = two_positions(1.0, 0.5);
        assert_eq!(m.value(&ElementSet::empty(), &Context::empty()), 0.0);
    }

    #[test]
    fn prefix_sets_accumulate() {
        let m = two_positions(1.0, 0.5);
        // (0,1) -> 1 and (1,0) -> 2
        let t = m.prefixes(&ElementSet::from([1, 2]));
        assert_eq!(t, vec![ElementSet::from([1]), ElementSet::from([0, 1])]);
    }

    #[test]
    fn hand_evaluated_two_position_instance() {
        // λ = (1, 0); item 1 at position 0 contributes λ_1 f_1({1}) = 1.
        let m = two_positions(1.0, 0.0);
        let ctx = Context::empty();
        assert_eq!(m.value(&ElementSet::from([1]), &ctx), 1.0);
        // Item 1 at position 1 is invisible to the first prefix.
        assert_eq!(m.value(&ElementSet::from([3]), &ctx), 0.0);
        // Item 0 covers nothing.
        assert_eq!(m.value(&ElementSet::from([0]), &ctx), 0.0);
    }

    #[test]
    fn adding_a_placement_never_decreases_value() {
        let m = two_positions(0.7, 0.3);
        let ctx = Context::empty();
        for mask in 0u64..16 {
            let s = ElementSet::from_mask(mask);
            for e in 0..4 {
                assert!(m.value(&s.with(e), &ctx) >= m.value(&s, &ctx) - 1e-15);
            }
        }
    }

    #[test]
    fn rejects_increasing_weights() {
        let terms = vec![
            PositionTerm {
                weight: PositionWeight::constant(0.1),
                f: one_item_coverage(),
            },
            PositionTerm {
                weight: PositionWeight::constant(0.2),
                f: one_item_coverage(),
            },
        ];
        assert!(RankingModel::new(2, terms).is_err());
    }

    #[test]
    fn contextual_position_weight() {
        let w = PositionWeight {
            base: 2.0,
            theta: Some(vec![1.0]),
        };
        assert_eq!(w.eval(&Context::new(vec![0.0])), 1.0);
    }
}
