//! Best-improvement single-swap local search over a matroid.

use std::collections::HashMap;

use crate::error::Result;
use crate::igw::ScoredActions;
use crate::matroid::{Matroid, SwapNeighborhood};
use crate::set::ElementSet;

pub const DEFAULT_LS_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Moves within `I(S)`.
    #[default]
    Swap,
    /// Moves within `B(S)`.
    Base,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult {
    pub set: ElementSet,
    pub score: f64,
    /// Improving moves taken after the greedy start.
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
}

/// Marginal-gain greedy up to a base; ties go to the smallest element id.
pub fn greedy_base<F>(mut score: F, m: &Matroid) -> ElementSet
where
    F: FnMut(&ElementSet) -> f64,
{
    let mut s = ElementSet::empty();
    while s.len() < m.rank() {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..m.ground_size()).filter(|&e| !s.contains(e)) {
            let cand = s.with(e);
            if !m.independent_unchecked(&cand) {
                continue;
            }
            let v = score(&cand);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((e, v));
            }
        }
        match best {
            Some((e, _)) => {
                s.insert(e);
            }
            None => break,
        }
    }
    s
}

/// Greedy start, then repeated moves to the best neighbor while it beats
/// the incumbent by more than `tol`. Scores are cached per set.
pub fn local_optimum<F>(
    mut score: F,
    m: &Matroid,
    mode: SearchMode,
    tol: f64,
    max_iters: usize,
) -> LocalSearchResult
where
    F: FnMut(&ElementSet) -> f64,
{
    let mut cache: HashMap<ElementSet, f64> = HashMap::new();
    let mut eval = |s: &ElementSet| -> f64 {
        if let Some(v) = cache.get(s) {
            return *v;
        }
        let v = score(s);
        cache.insert(s.clone(), v);
        v
    };
    let mut set = greedy_base(&mut eval, m);
    let mut current = eval(&set);
    if m.rank() == 0 {
        return LocalSearchResult {
            set,
            score: current,
            iterations: 0,
            converged: true,
            tol,
        };
    }
    let mut iterations = 0;
    loop {
        let nb = neighborhood(m, &set, mode);
        let mut best: Option<(usize, f64)> = None;
        for (i, cand) in nb.members.iter().enumerate().skip(1) {
            let v = eval(cand);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, v)) if v > current + tol => {
                if iterations == max_iters {
                    return LocalSearchResult {
                        set,
                        score: current,
                        iterations,
                        converged: false,
                        tol,
                    };
                }
                set = nb.members[i].clone();
                current = v;
                iterations += 1;
            }
            _ => {
                return LocalSearchResult {
                    set,
                    score: current,
                    iterations,
                    converged: true,
                    tol,
                }
            }
        }
    }
}

fn neighborhood(m: &Matroid, set: &ElementSet, mode: SearchMode) -> SwapNeighborhood {
    let nb = match mode {
        SearchMode::Swap => m.swap_neighborhood(set),
        SearchMode::Base => m.base_neighborhood(set),
    };
    nb.expect("local search only visits bases")
}

/// Scores of every neighborhood member in order, clamped into `[0, 1]`.
pub fn neighborhood_scores<F>(
    mut score: F,
    nb: &SwapNeighborhood,
    gamma: f64,
    mu: f64,
) -> Result<ScoredActions>
where
    F: FnMut(&ElementSet) -> f64,
{
    let scores = nb.iter().map(|s| score(s).clamp(0.0, 1.0)).collect();
    ScoredActions::with_mu(scores, gamma, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set_function::modular_value;

    #[test]
    fn modular_uniform_finds_top_two() {
        let m = Matroid::uniform(4, 2).unwrap();
        let w = [4.0, 3.0, 2.0, 1.0];
        let r = local_optimum(|s| modular_value(&w, s), &m, SearchMode::Swap, DEFAULT_LS_TOL, 100);
        assert_eq!(r.set, ElementSet::from([0, 1]));
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert_eq!(r.score, 7.0);
    }

    #[test]
    fn unique_base_is_returned_immediately() {
        let m = Matroid::uniform(3, 3).unwrap();
        let r = local_optimum(|s| s.len() as f64, &m, SearchMode::Base, DEFAULT_LS_TOL, 100);
        assert_eq!(r.set, ElementSet::from([0, 1, 2]));
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn rank_zero_returns_empty() {
        let m = Matroid::uniform(3, 0).unwrap();
        let r = local_optimum(|_| 1.0, &m, SearchMode::Swap, DEFAULT_LS_TOL, 100);
        assert!(r.set.is_empty());
        assert!(r.converged);
    }

    #[test]
    fn escapes_a_greedy_trap() {
        // Greedy takes 0 first ({0} alone is best) but {1, 2} beats every
        // set containing 0.
        let m = Matroid::uniform(3, 2).unwrap();
        let score = |s: &ElementSet| match s.as_slice() {
            [0] => 0.6,
            [1] | [2] => 0.5,
            [0, 1] | [0, 2] => 0.7,
            [1, 2] => 1.0,
            _ => 0.0,
        };
        let r = local_optimum(score, &m, SearchMode::Swap, DEFAULT_LS_TOL, 100);
        assert_eq!(r.set, ElementSet::from([1, 2]));
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn max_iters_reports_non_convergence() {
        let m = Matroid::uniform(3, 2).unwrap();
        let score = |s: &ElementSet| match s.as_slice() {
            [0] => 0.6,
            [1, 2] => 1.0,
            _ => 0.5,
        };
        let r = local_optimum(score, &m, SearchMode::Swap, DEFAULT_LS_TOL, 0);
        assert!(!r.converged);
        assert!(r.set.contains(0));
    }

    #[test]
    fn neighborhood_scores_clamp_and_keep_order() {
        let m = Matroid::uniform(3, 2).unwrap();
        let nb = m.swap_neighborhood(&ElementSet::from([0, 1])).unwrap();
        let sa = neighborhood_scores(|s| s.as_slice()[1] as f64 - 0.5, &nb, 2.0, 1.0).unwrap();
        assert_eq!(sa.scores, vec![0.5, 1.0, 1.0]);
    }
}
