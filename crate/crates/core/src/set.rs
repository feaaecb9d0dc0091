//! Sorted, duplicate-free element sets over a dense ground set `0..A`.

use std::fmt;

/// A finite set of ground-set element ids, stored sorted and deduplicated.
///
/// The derived ordering is lexicographic on the sorted id sequence, which is
/// the ordering used whenever sets are enumerated.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementSet(Vec<usize>);

impl ElementSet {
    pub fn empty() -> Self {
        ElementSet(Vec::new())
    }

    pub fn singleton(a: usize) -> Self {
        ElementSet(vec![a])
    }

    /// Decode a bitmask (bit `i` set means element `i` present).
    pub fn from_mask(mask: u64) -> Self {
        let mut ids = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            ids.push(i);
            m &= m - 1;
        }
        ElementSet(ids)
    }

    /// Bitmask encoding; only valid when every id is below 64.
    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &i| m | (1u64 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max_element(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Returns `true` if `a` was not already present.
    pub fn insert(&mut self, a: usize) -> bool {
        match self.0.binary_search(&a) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, a);
                true
            }
        }
    }

    pub fn remove(&mut self, a: usize) -> bool {
        match self.0.binary_search(&a) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, a: usize) -> Self {
        let mut s = self.clone();
        s.insert(a);
        s
    }

    pub fn without(&self, a: usize) -> Self {
        let mut s = self.clone();
        s.remove(a);
        s
    }

    /// `S - out + inn`.
    pub fn swap(&self, out: usize, inn: usize) -> Self {
        let mut s = self.without(out);
        s.insert(inn);
        s
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.0.iter().all(|&a| other.contains(a))
    }

    pub fn union(&self, other: &ElementSet) -> Self {
        let mut s = self.clone();
        for a in other.iter() {
            s.insert(a);
        }
        s
    }

    pub fn intersection(&self, other: &ElementSet) -> Self {
        ElementSet(self.0.iter().copied().filter(|&a| other.contains(a)).collect())
    }

    pub fn difference(&self, other: &ElementSet) -> Self {
        ElementSet(self.0.iter().copied().filter(|&a| !other.contains(a)).collect())
    }

    /// The subset selected by the low `len()` bits of `mask`, indexing this
    /// set's elements in sorted order.
    pub fn sub_by_mask(&self, mask: u64) -> Self {
        ElementSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &a)| a)
                .collect(),
        )
    }

    /// Parse the `-`-joined CSV encoding; the empty string is the empty set.
    pub fn parse_joined(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(ElementSet::empty());
        }
        s.split('-')
            .map(|p| p.parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()
            .map(ElementSet::from_iter)
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ElementSet(v)
    }
}

impl From<&[usize]> for ElementSet {
    fn from(ids: &[usize]) -> Self {
        ids.iter().copied().collect()
    }
}

impl<const N: usize> From<[usize; N]> for ElementSet {
    fn from(ids: [usize; N]) -> Self {
        ids.into_iter().collect()
    }
}

/// `-`-joined sorted ids, e.g. `0-3-5`; the empty set prints as an empty string.
impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Lexicographic iterator over all `k`-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = ElementSet;

    fn next(&mut self) -> Option<ElementSet> {
        if self.done {
            return None;
        }
        let out = ElementSet(self.idx.clone());
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// `C(n, k)` as a float (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
