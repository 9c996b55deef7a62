use crate::error::{Error, Result};
use crate::rng::SeededRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Discrete grid of ground-truth factors of variation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpace {
    cardinalities: Vec<usize>,
}

impl FactorSpace {
    pub fn new(cardinalities: Vec<usize>) -> Result<Self> {
        if cardinalities.len() < 2 {
            return Err(Error::config("need at least 2 factors of variation"));
        }
        if cardinalities.iter().any(|&c| c < 2) {
            return Err(Error::config("every factor needs at least 2 levels"));
        }
        Ok(FactorSpace { cardinalities })
    }

    pub fn num_factors(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, k: usize) -> usize {
        self.cardinalities[k]
    }

    /// Total number of grid points.
    pub fn grid_size(&self) -> usize {
        self.cardinalities.iter().product()
    }

    pub fn contains(&self, z: &FactorVector) -> bool {
        z.values.len() == self.cardinalities.len()
            && z.values
                .iter()
                .zip(&self.cardinalities)
                .all(|(&v, &c)| v < c)
    }

    /// One uniform draw from the grid.
    pub fn sample(&self, rng: &mut SeededRng) -> FactorVector {
        FactorVector {
            values: self
                .cardinalities
                .iter()
                .map(|&c| rng.gen_range(0..c))
                .collect(),
        }
    }

    /// `n` i.i.d. uniform draws.
    pub fn sample_n(&self, n: usize, rng: &mut SeededRng) -> Vec<FactorVector> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Uniform draws with `values[factor_index]` clamped to `value`.
    pub fn sample_fixed(
        &self,
        n: usize,
        factor_index: usize,
        value: usize,
        rng: &mut SeededRng,
    ) -> Result<Vec<FactorVector>> {
        if factor_index >= self.num_factors() {
            return Err(Error::input(format!(
                "factor index {factor_index} out of range (K={})",
                self.num_factors()
            )));
        }
        if value >= self.cardinalities[factor_index] {
            return Err(Error::input(format!(
                "value {value} out of range for factor {factor_index} (cardinality {})",
                self.cardinalities[factor_index]
            )));
        }
        Ok((0..n)
            .map(|_| {
                let mut z = self.sample(rng);
                z.values[factor_index] = value;
                z
            })
            .collect())
    }

    /// Iterate the whole grid in row-major order.
    pub fn enumerate(&self) -> GridIter {
        GridIter {
            space: self,
            next: Some(FactorVector {
                values: vec![0; self.num_factors()],
            }),
        }
    }

    /// Row-major linear index of a point, for caching.
    pub fn linear_index(&self, z: &FactorVector) -> usize {
        let mut idx = 0;
        for (v, &c) in z.values.iter().zip(&self.cardinalities) {
            idx = idx * c + v;
        }
        idx
    }
}

/// One point on the factor grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorVector {
    pub values: Vec<usize>,
}

impl FactorVector {
    pub fn new(values: Vec<usize>) -> Self {
        FactorVector { values }
    }
}

pub struct GridIter<'a> {
    space: &'a FactorSpace,
    next: Option<FactorVector>,
}

impl Iterator for GridIter<'_> {
    type Item = FactorVector;

    fn next(&mut self) -> Option<FactorVector> {
        let current = self.next.clone()?;
        let mut succ = current.clone();
        let cards = self.space.cardinalities();
        let mut k = cards.len();
        loop {
            if k == 0 {
                self.next = None;
                break;
            }
            k -= 1;
            succ.values[k] += 1;
            if succ.values[k] < cards[k] {
                self.next = Some(succ);
                break;
            }
            succ.values[k] = 0;
        }
        Some(current)
    }
}
