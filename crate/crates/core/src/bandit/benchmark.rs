use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::matroid::Matroid;
use crate::set::ElementSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkMethod {
    /// Maximum over all bases.
    Exact,
    /// Lazy greedy; a lower bound on the true maximum.
    Greedy,
}

impl BenchmarkMethod {
    pub fn tag(self) -> &'static str {
        match self {
            BenchmarkMethod::Exact => "exact",
            BenchmarkMethod::Greedy => "greedy-(1-1/e)",
        }
    }
}

impl fmt::Display for BenchmarkMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `max_{S ∈ I} u(S)`, by base enumeration within `budget` and lazy greedy
/// beyond it. The score is assumed monotone, so bases suffice.
pub fn benchmark_value<F>(mut score: F, m: &Matroid, budget: usize) -> (f64, BenchmarkMethod)
where
    F: FnMut(&ElementSet) -> f64,
{
    match m.enumerate_bases(budget) {
        Ok(bases) => {
            let best = bases.iter().map(&mut score).fold(f64::NEG_INFINITY, f64::max);
            (best, BenchmarkMethod::Exact)
        }
        Err(e) => {
            log::warn!("{e}; falling back to greedy benchmark");
            let s = lazy_greedy(&mut score, m);
            (score(&s), BenchmarkMethod::Greedy)
        }
    }
}

struct Bound {
    gain: f64,
    elem: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // Larger gain first, then smaller element id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.elem.cmp(&self.elem))
    }
}

/// Marginal-gain greedy with stale upper bounds kept in a heap.
pub fn lazy_greedy<F>(mut score: F, m: &Matroid) -> ElementSet
where
    F: FnMut(&ElementSet) -> f64,
{
    let mut s = ElementSet::empty();
    let mut current = score(&s);
    let mut heap: BinaryHeap<Bound> = (0..m.ground_size())
        .filter(|&e| m.independent_unchecked(&ElementSet::singleton(e)))
        .map(|e| Bound {
            gain: score(&ElementSet::singleton(e)) - current,
            elem: e,
        })
        .collect();
    while s.len() < m.rank() {
        let Some(top) = heap.pop() else { break };
        let cand = s.with(top.elem);
        // Dependence persists as `s` grows, so the element is gone for good.
        if !m.independent_unchecked(&cand) {
            continue;
        }
        let v = score(&cand);
        let gain = v - current;
        if heap.peek().is_none_or(|next| gain >= next.gain) {
            s = cand;
            current = v;
        } else {
            heap.push(Bound { gain, elem: top.elem });
        }
    }
    s
}
