use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{dot, Context, SetFunction};
use crate::error::{Error, Result};
use crate::set::ElementSet;

/// How the empty-set value enters the width estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthBaseline {
    /// Each draw's maximum also ranges over the origin:
    /// `max(0, max_{s∈S} <s, Ση_j>)`. Equals the width of `S ∪ {0}`, so
    /// the estimate is exactly monotone, submodular and nonnegative with
    /// value 0 on the empty set.
    #[default]
    Origin,
    /// The plain width estimate, clamped at 0 after averaging. Matches the
    /// expectation `E max_{s∈S} <s, η>` (0 on singletons) but is not
    /// submodular once the empty set is included.
    Raw,
}

/// Monte Carlo Gaussian width `W(S, Σ) = E max_{s∈S} <s, Ση>` over a fixed
/// panel of standard normal draws shared by every evaluation.
#[derive(Debug, Clone)]
pub struct WidthModel {
    vectors: Vec<Vec<f64>>,
    // scores[a * draws + j] = <vectors[a], Σ η_j>
    scores: Vec<f64>,
    draws: usize,
    baseline: WidthBaseline,
    bound: f64,
}

impl WidthModel {
    /// Draw a fresh panel of `draws` standard normal vectors from `rng`.
    pub fn sample<R: Rng + ?Sized>(
        vectors: Vec<Vec<f64>>,
        draws: usize,
        sigma: Option<&DMatrix<f64>>,
        baseline: WidthBaseline,
        rng: &mut R,
    ) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        let noise: Vec<Vec<f64>> = (0..draws)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        Self::from_noise(vectors, noise, sigma, baseline)
    }

    pub fn from_noise(
        vectors: Vec<Vec<f64>>,
        noise: Vec<Vec<f64>>,
        sigma: Option<&DMatrix<f64>>,
        baseline: WidthBaseline,
    ) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Domain("width model needs at least one vector".into()));
        }
        if noise.is_empty() {
            return Err(Error::Domain("width model needs at least one noise draw".into()));
        }
        let d = vectors[0].len();
        if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
            return Err(Error::Domain(format!(
                "vector {bad} has dimension {} but expected {d}",
                vectors[bad].len()
            )));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("element vectors must be finite".into()));
        }
        if let Some(s) = sigma {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::Domain(format!(
                    "scaling matrix is {}x{} but vectors have dimension {d}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        let draws = noise.len();
        let mut panel = Vec::with_capacity(draws);
        for eta in &noise {
            if eta.len() != d {
                return Err(Error::Domain("noise draw dimension mismatch".into()));
            }
            panel.push(match sigma {
                Some(s) => (s * DVector::from_column_slice(eta)).as_slice().to_vec(),
                None => eta.clone(),
            });
        }
        let mut scores = Vec::with_capacity(vectors.len() * draws);
        for v in &vectors {
            scores.extend(panel.iter().map(|z| dot(v, z)));
        }
        let mut model = WidthModel {
            vectors,
            scores,
            draws,
            baseline,
            bound: 1.0,
        };
        // Monotone, so the full ground set attains the maximum.
        let full: ElementSet = (0..model.vectors.len()).collect();
        let top = model.estimate(&full);
        model.bound = if top > 0.0 { top } else { 1.0 };
        Ok(model)
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn baseline(&self) -> WidthBaseline {
        self.baseline
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Checked evaluation: elements without a vector are a domain error.
    /// The empty set has width 0.
    pub fn width(&self, set: &ElementSet) -> Result<f64> {
        if let Some(a) = set.max_element() {
            if a >= self.vectors.len() {
                return Err(Error::Domain(format!("element {a} has no vector")));
            }
        }
        Ok(self.estimate(set))
    }

    fn estimate(&self, set: &ElementSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let floor = match self.baseline {
            WidthBaseline::Origin => 0.0,
            WidthBaseline::Raw => f64::NEG_INFINITY,
        };
        let mut total = 0.0;
        for j in 0..self.draws {
            let mut m = floor;
            for a in set.iter() {
                m = m.max(self.scores[a * self.draws + j]);
            }
            total += m;
        }
        (total / self.draws as f64).max(0.0)
    }

    /// Largest pairwise distance between the vectors of `set`.
    pub fn diameter(&self, set: &ElementSet) -> f64 {
        let ids: Vec<usize> = set.iter().collect();
        let mut best: f64 = 0.0;
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let d2: f64 = self.vectors[a]
                    .iter()
                    .zip(&self.vectors[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                best = best.max(d2.sqrt());
            }
        }
        best
    }
}

impl SetFunction for WidthModel {
    fn value(&self, set: &ElementSet, _ctx: &Context) -> f64 {
        let clipped: ElementSet = set.iter().filter(|&a| a < self.vectors.len()).collect();
        self.estimate(&clipped)
    }
    fn upper_bound(&self) -> f64 {
        self.bound
    }
    fn is_exact(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_set_is_zero_and_missing_vectors_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = WidthModel::sample(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            50,
            None,
            WidthBaseline::Origin,
            &mut rng,
        )
        .unwrap();
        assert_eq!(m.width(&ElementSet::empty()).unwrap(), 0.0);
        assert!(matches!(m.width(&ElementSet::from([2])), Err(Error::Domain(_))));
    }

    #[test]
    fn raw_singleton_averages_to_zero() {
        // E<s, η> = 0; with a symmetric panel {η, -η} the raw estimate is exact.
        let noise = vec![vec![0.3, -1.2], vec![-0.3, 1.2]];
        let m = WidthModel::from_noise(vec![vec![1.0, 2.0]], noise, None, WidthBaseline::Raw)
            .unwrap();
        assert_eq!(m.width(&ElementSet::from([0])).unwrap(), 0.0);
    }

    #[test]
    fn two_point_set_is_mean_absolute_coordinate() {
        let noise = vec![vec![0.5, 9.0], vec![-2.0, 0.1], vec![1.5, -3.0]];
        for baseline in [WidthBaseline::Origin, WidthBaseline::Raw] {
            let m = WidthModel::from_noise(
                vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
                noise.clone(),
                None,
                baseline,
            )
            .unwrap();
            let w = m.width(&ElementSet::from([0, 1])).unwrap();
            assert!((w - (0.5 + 2.0 + 1.5) / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_rescales_noise() {
        let noise = vec![vec![1.0, 1.0]];
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let m = WidthModel::from_noise(
            vec![vec![1.0, 5.0]],
            noise,
            Some(&sigma),
            WidthBaseline::Origin,
        )
        .unwrap();
        assert_eq!(m.width(&ElementSet::from([0])).unwrap(), 2.0);
    }

    #[test]
    fn diameter_of_two_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = WidthModel::sample(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            4,
            None,
            WidthBaseline::Origin,
            &mut rng,
        )
        .unwrap();
        assert_eq!(m.diameter(&ElementSet::from([0, 1])), 2.0);
    }
}
