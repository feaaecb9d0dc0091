//! Matroids over a dense ground set `0..A`: uniform, partition and laminar
//! constraints, plus the single-swap neighborhoods the bandit algorithms
//! randomize over.

use crate::error::{Error, Result};
use crate::set::{binomial, Combinations, ElementSet};

/// Default cap on the number of candidate sets any exhaustive enumeration
/// may visit.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 1_000_000;

/// Ground set `{0, ..., size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundSet {
    size: usize,
}

impl GroundSet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Domain("ground set must be nonempty".into()));
        }
        Ok(GroundSet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn check(&self, s: &ElementSet) -> Result<()> {
        match s.max_element() {
            Some(a) if a >= self.size => Err(Error::Domain(format!(
                "element {a} outside ground set of size {}",
                self.size
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatroidKind {
    /// All sets of cardinality at most `k`.
    Uniform { k: usize },
    /// Sets inside the union of the blocks with at most `capacities[i]`
    /// elements from block `i`.
    Partition {
        blocks: Vec<ElementSet>,
        capacities: Vec<usize>,
    },
    /// Capacity constraints `|S ∩ M| <= cap` over a laminar family (any two
    /// members nested or disjoint). Elements outside every member are free.
    Laminar { family: Vec<(ElementSet, usize)> },
}

/// An immutable matroid with cached rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Matroid {
    ground: GroundSet,
    kind: MatroidKind,
    rank: usize,
    // partition only: block index of each element
    block_of: Vec<Option<usize>>,
}

impl Matroid {
    pub fn uniform(ground_size: usize, k: usize) -> Result<Self> {
        Self::build(GroundSet::new(ground_size)?, MatroidKind::Uniform { k }, Vec::new())
    }

    pub fn partition(
        ground_size: usize,
        blocks: Vec<ElementSet>,
        capacities: Vec<usize>,
    ) -> Result<Self> {
        let ground = GroundSet::new(ground_size)?;
        if blocks.len() != capacities.len() {
            return Err(Error::Config(format!(
                "partition matroid has {} blocks but {} capacities",
                blocks.len(),
                capacities.len()
            )));
        }
        let mut block_of = vec![None; ground_size];
        for (i, (b, &c)) in blocks.iter().zip(&capacities).enumerate() {
            ground.check(b)?;
            if c > b.len() {
                return Err(Error::Config(format!(
                    "block {i} has capacity {c} above its size {}",
                    b.len()
                )));
            }
            for a in b.iter() {
                if block_of[a].replace(i).is_some() {
                    return Err(Error::Config(format!("element {a} lies in two blocks")));
                }
            }
        }
        Self::build(ground, MatroidKind::Partition { blocks, capacities }, block_of)
    }

    pub fn laminar(ground_size: usize, family: Vec<(ElementSet, usize)>) -> Result<Self> {
        let ground = GroundSet::new(ground_size)?;
        for (m, _) in &family {
            ground.check(m)?;
        }
        for (i, (a, _)) in family.iter().enumerate() {
            for (b, _) in &family[i + 1..] {
                let meet = a.intersection(b);
                if !(meet.is_empty() || meet == *a || meet == *b) {
                    return Err(Error::Config(format!(
                        "family members {a} and {b} are neither nested nor disjoint"
                    )));
                }
            }
        }
        Self::build(ground, MatroidKind::Laminar { family }, Vec::new())
    }

    /// The ranking matroid over positions × items with `positions = items =
    /// a`: element `(i, j)` (item `j` shown at position `i`) is encoded as
    /// `i * a + j`, and prefix `M_s` (positions `0..s`) holds at most `s`
    /// elements.
    pub fn ranking(a: usize) -> Result<Self> {
        let family = (1..=a)
            .map(|s| ((0..s * a).collect::<ElementSet>(), s))
            .collect();
        Self::laminar(a * a, family)
    }

    fn build(ground: GroundSet, kind: MatroidKind, block_of: Vec<Option<usize>>) -> Result<Self> {
        let mut m = Matroid {
            ground,
            kind,
            rank: 0,
            block_of,
        };
        // Greedy construction yields a base of any matroid.
        let mut s = ElementSet::empty();
        for a in 0..ground.size() {
            let t = s.with(a);
            if m.independent_unchecked(&t) {
                s = t;
            }
        }
        m.rank = s.len();
        Ok(m)
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn ground_size(&self) -> usize {
        self.ground.size()
    }

    pub fn kind(&self) -> &MatroidKind {
        &self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_independent(&self, s: &ElementSet) -> Result<bool> {
        self.ground.check(s)?;
        Ok(self.independent_unchecked(s))
    }

    pub(crate) fn independent_unchecked(&self, s: &ElementSet) -> bool {
        match &self.kind {
            MatroidKind::Uniform { k } => s.len() <= *k,
            MatroidKind::Partition { capacities, .. } => {
                let mut counts = vec![0usize; capacities.len()];
                for a in s.iter() {
                    match self.block_of[a] {
                        None => return false,
                        Some(b) => {
                            counts[b] += 1;
                            if counts[b] > capacities[b] {
                                return false;
                            }
                        }
                    }
                }
                true
            }
            MatroidKind::Laminar { family } => family
                .iter()
                .all(|(m, cap)| s.iter().filter(|&a| m.contains(a)).count() <= *cap),
        }
    }

    pub fn is_base(&self, s: &ElementSet) -> Result<bool> {
        Ok(s.len() == self.rank && self.is_independent(s)?)
    }

    /// `I(S)`: `S` itself followed by every independent single swap
    /// `S - out + in`, ordered by removed element then added element.
    pub fn swap_neighborhood(&self, s: &ElementSet) -> Result<SwapNeighborhood> {
        if !self.is_independent(s)? {
            return Err(Error::Precondition(format!("{{{s}}} is not independent")));
        }
        Ok(self.swaps_unchecked(s))
    }

    /// `B(S)`: bases within one swap of the base `S`, with `S` first.
    pub fn base_neighborhood(&self, s: &ElementSet) -> Result<SwapNeighborhood> {
        if !self.is_base(s)? {
            return Err(Error::Precondition(format!("{{{s}}} is not a base")));
        }
        // Equal-cardinality swaps of a base that stay independent are bases.
        Ok(self.swaps_unchecked(s))
    }

    fn swaps_unchecked(&self, s: &ElementSet) -> SwapNeighborhood {
        let mut members = vec![s.clone()];
        for out in s.iter() {
            for inn in (0..self.ground_size()).filter(|&b| !s.contains(b)) {
                let cand = s.swap(out, inn);
                if self.independent_unchecked(&cand) {
                    members.push(cand);
                }
            }
        }
        SwapNeighborhood {
            center: s.clone(),
            members,
        }
    }

    /// All bases in lexicographic order.
    pub fn enumerate_bases(&self, budget: usize) -> Result<Vec<ElementSet>> {
        let count = binomial(self.ground_size(), self.rank);
        if count > budget as f64 {
            return Err(Error::Capacity(format!(
                "C({}, {}) = {count} candidate bases exceeds budget {budget}; use the greedy benchmark",
                self.ground_size(),
                self.rank
            )));
        }
        Ok(Combinations::new(self.ground_size(), self.rank)
            .filter(|s| self.independent_unchecked(s))
            .collect())
    }

    /// All independent sets of cardinality `k`, lexicographic.
    pub fn independent_sets_of_size(&self, k: usize, budget: usize) -> Result<Vec<ElementSet>> {
        let count = binomial(self.ground_size(), k);
        if count > budget as f64 {
            return Err(Error::Capacity(format!(
                "C({}, {k}) = {count} candidate sets exceeds budget {budget}",
                self.ground_size()
            )));
        }
        Ok(Combinations::new(self.ground_size(), k)
            .filter(|s| self.independent_unchecked(s))
            .collect())
    }

    /// Every independent set, ordered by cardinality then lexicographically.
    pub fn enumerate_independent(&self, budget: usize) -> Result<Vec<ElementSet>> {
        let a = self.ground_size();
        if a >= 63 || (1u64 << a) > budget as u64 {
            return Err(Error::Capacity(format!(
                "2^{a} subsets exceeds budget {budget}"
            )));
        }
        let mut out = Vec::new();
        for k in 0..=self.rank {
            out.extend(
                Combinations::new(a, k).filter(|s| self.independent_unchecked(s)),
            );
        }
        Ok(out)
    }
}

/// A set together with its single-swap neighbors; `members[0]` is the center.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapNeighborhood {
    pub center: ElementSet,
    pub members: Vec<ElementSet>,
}

impl SwapNeighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementSet> {
        self.members.iter()
    }
}
