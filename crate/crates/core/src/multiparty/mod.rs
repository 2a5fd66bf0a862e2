//! Product correlations of several dichotomic data sequences.
//!
//! For `N × M` cells of ±1 outcomes the mean of the per-cell products can
//! only take the `NM + 1` values `−1 + 2k/(NM)`. A mean of exactly −1 (or
//! +1) forces every cell product to −1 (or +1). The [`parity`] submodule
//! decides systems of such forced products.

pub mod gf2;
pub mod parity;

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::sign::Sign;

pub use parity::{
    build_ghz_parity_system, enumerate_parity, enumerate_parity_with_workers, solve_parity,
    Constraint, ParityError, ParitySystem, ParityVerdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultipartyError {
    #[error("need at least 2 parties, got {0}")]
    TooFewParties(usize),
    #[error("array dimensions must be positive, got {n} x {m}")]
    Empty { n: usize, m: usize },
    #[error("expected {expected} outcomes, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("expected {expected} settings (one per party after the first), got {got}")]
    WrongSettings { expected: usize, got: usize },
    #[error("outcome {index} is {value}, not ±1")]
    NotDichotomic { index: usize, value: i64 },
}

/// ±1 outcomes for `parties` observers over an `N × M` grid of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeArray {
    parties: usize,
    n: usize,
    m: usize,
    /// party-major: index `(p · N + j) · M + k`
    outcomes: Vec<Sign>,
    settings: Vec<f64>,
}

impl OutcomeArray {
    pub fn new(
        parties: usize,
        n: usize,
        m: usize,
        outcomes: Vec<Sign>,
        settings: Vec<f64>,
    ) -> Result<Self, MultipartyError> {
        if parties < 2 {
            return Err(MultipartyError::TooFewParties(parties));
        }
        if n == 0 || m == 0 {
            return Err(MultipartyError::Empty { n, m });
        }
        let expected = parties * n * m;
        if outcomes.len() != expected {
            return Err(MultipartyError::WrongLength {
                expected,
                got: outcomes.len(),
            });
        }
        if settings.len() != parties - 1 {
            return Err(MultipartyError::WrongSettings {
                expected: parties - 1,
                got: settings.len(),
            });
        }
        Ok(Self {
            parties,
            n,
            m,
            outcomes,
            settings,
        })
    }

    /// Builds an array from integer outcomes, rejecting anything but ±1.
    pub fn from_values(
        parties: usize,
        n: usize,
        m: usize,
        values: &[i64],
        settings: Vec<f64>,
    ) -> Result<Self, MultipartyError> {
        let outcomes = values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                Sign::try_from(value).map_err(|_| MultipartyError::NotDichotomic { index, value })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parties, n, m, outcomes, settings)
    }

    pub fn from_fn(
        parties: usize,
        n: usize,
        m: usize,
        settings: Vec<f64>,
        mut outcome: impl FnMut(usize, usize, usize) -> Sign,
    ) -> Result<Self, MultipartyError> {
        let mut outcomes = Vec::with_capacity(parties * n * m);
        for p in 0..parties {
            for j in 0..n {
                for k in 0..m {
                    outcomes.push(outcome(p, j, k));
                }
            }
        }
        Self::new(parties, n, m, outcomes, settings)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn settings(&self) -> &[f64] {
        &self.settings
    }

    pub fn cells(&self) -> usize {
        self.n * self.m
    }

    pub fn get(&self, party: usize, j: usize, k: usize) -> Sign {
        self.outcomes[(party * self.n + j) * self.m + k]
    }

    pub fn set(&mut self, party: usize, j: usize, k: usize, value: Sign) {
        self.outcomes[(party * self.n + j) * self.m + k] = value;
    }

    /// Product of all parties' outcomes in cell `(j, k)`.
    pub fn cell_product(&self, j: usize, k: usize) -> Sign {
        (0..self.parties).map(|p| self.get(p, j, k)).product()
    }

    /// Sum of the per-cell products, an integer in `[−NM, NM]`.
    pub fn product_sum(&self) -> i64 {
        self.cell_iter()
            .map(|(j, k)| self.cell_product(j, k).value())
            .sum()
    }

    fn cell_iter(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.m;
        (0..self.n).flat_map(move |j| (0..m).map(move |k| (j, k)))
    }
}

/// Exact mean `(1/NM) Σ_{j,k} ∏_p outcome(p, j, k)` for any party count.
pub fn triple_mean(arr: &OutcomeArray) -> Ratio<i64> {
    Ratio::new(arr.product_sum(), arr.cells() as i64)
}

/// The means reachable by `NM` products of ±1: `{−1 + 2k/(NM) : k = 0..NM}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueLattice {
    cells: u64,
}

impl ValueLattice {
    pub fn cells(&self) -> u64 {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, k: u64) -> Ratio<i64> {
        let cells = self.cells as i64;
        Ratio::new(2 * k as i64 - cells, cells)
    }

    pub fn values(&self) -> Vec<Ratio<i64>> {
        (0..=self.cells).map(|k| self.value(k)).collect()
    }

    /// Lattice index of `x`, if it is a lattice point.
    pub fn index_of(&self, x: Ratio<i64>) -> Option<u64> {
        let cells = self.cells as i64;
        let scaled = (x + 1) * Ratio::from_integer(cells) / 2;
        (scaled.is_integer() && (0..=cells).contains(&scaled.to_integer()))
            .then(|| scaled.to_integer() as u64)
    }

    pub fn contains(&self, x: Ratio<i64>) -> bool {
        self.index_of(x).is_some()
    }

    /// Nearest lattice point to a real target and its distance.
    pub fn nearest(&self, target: f64) -> (Ratio<i64>, f64) {
        let cells = self.cells as f64;
        let k = ((target + 1.0) * cells / 2.0).round().clamp(0.0, cells) as u64;
        let value = self.value(k);
        (value, (ratio_to_f64(value) - target).abs())
    }
}

pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn achievable_values(n: usize, m: usize) -> Result<ValueLattice, MultipartyError> {
    if n == 0 || m == 0 {
        return Err(MultipartyError::Empty { n, m });
    }
    Ok(ValueLattice {
        cells: (n * m) as u64,
    })
}

/// Whether an array is perfectly (anti)correlated, with the cells that
/// break it.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectCorrelationReport {
    pub target: Sign,
    pub mean: Ratio<i64>,
    pub holds: bool,
    /// Cells `(j, k)` whose product differs from the target.
    pub violating_cells: Vec<(usize, usize)>,
}

impl fmt::Display for PerfectCorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds {
            write!(
                f,
                "mean = {} forces every cell product to equal {}, and each one does",
                self.mean, self.target
            )
        } else {
            write!(
                f,
                "mean = {} != {}: a mean of {} requires every cell product to be {}, \
                 but {} cell(s) differ: {:?}",
                self.mean,
                self.target,
                self.target,
                self.target,
                self.violating_cells.len(),
                self.violating_cells
            )
        }
    }
}

pub fn perfect_correlation_witness(arr: &OutcomeArray, target: Sign) -> PerfectCorrelationReport {
    let mean = triple_mean(arr);
    let violating_cells: Vec<(usize, usize)> = arr
        .cell_iter()
        .filter(|&(j, k)| arr.cell_product(j, k) != target)
        .collect();
    let holds = mean == Ratio::from_integer(target.value());
    debug_assert_eq!(holds, violating_cells.is_empty());
    PerfectCorrelationReport {
        target,
        mean,
        holds,
        violating_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_mean_examples() {
        let a = OutcomeArray::from_values(3, 1, 1, &[1, 1, -1], vec![0.0, 0.0]).unwrap();
        assert_eq!(triple_mean(&a), Ratio::from_integer(-1));

        let a = OutcomeArray::from_values(3, 2, 2, &[1; 12], vec![0.0, 0.0]).unwrap();
        assert_eq!(triple_mean(&a), Ratio::from_integer(1));

        // cell products (+1, +1, -1, -1): flip party C in the last two cells
        let mut a = a;
        a.set(2, 1, 0, Sign::Minus);
        a.set(2, 1, 1, Sign::Minus);
        assert_eq!(triple_mean(&a), Ratio::from_integer(0));
    }

    #[test]
    fn array_validation() {
        assert_eq!(
            OutcomeArray::from_values(1, 1, 1, &[1], vec![]),
            Err(MultipartyError::TooFewParties(1))
        );
        assert_eq!(
            OutcomeArray::from_values(2, 0, 1, &[], vec![0.0]),
            Err(MultipartyError::Empty { n: 0, m: 1 })
        );
        assert_eq!(
            OutcomeArray::from_values(2, 1, 1, &[1, 0], vec![0.0]),
            Err(MultipartyError::NotDichotomic { index: 1, value: 0 })
        );
        assert_eq!(
            OutcomeArray::from_values(2, 1, 1, &[1], vec![0.0]),
            Err(MultipartyError::WrongLength {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            OutcomeArray::from_values(3, 1, 1, &[1, 1, 1], vec![0.0]),
            Err(MultipartyError::WrongSettings {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn lattice_examples() {
        let l = achievable_values(1, 1).unwrap();
        assert_eq!(
            l.values(),
            vec![Ratio::from_integer(-1), Ratio::from_integer(1)]
        );

        let l = achievable_values(2, 2).unwrap();
        let expected: Vec<Ratio<i64>> = [(-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1)]
            .into_iter()
            .map(|(p, q)| Ratio::new(p, q))
            .collect();
        assert_eq!(l.values(), expected);

        let l = achievable_values(3, 1).unwrap();
        let expected: Vec<Ratio<i64>> = [(-1, 1), (-1, 3), (1, 3), (1, 1)]
            .into_iter()
            .map(|(p, q)| Ratio::new(p, q))
            .collect();
        assert_eq!(l.values(), expected);
        assert_eq!(l.len(), 4);
        assert!(!l.contains(Ratio::from_integer(0)));
        assert_eq!(l.index_of(Ratio::new(1, 3)), Some(2));

        assert!(achievable_values(0, 3).is_err());
    }

    #[test]
    fn nearest_lattice_point() {
        let l = achievable_values(3, 1).unwrap();
        let (v, d) = l.nearest(0.0);
        assert!(v == Ratio::new(1, 3) || v == Ratio::new(-1, 3));
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.nearest(-1.0), (Ratio::from_integer(-1), 0.0));
        assert_eq!(l.nearest(5.0).0, Ratio::from_integer(1));
    }

    #[test]
    fn perfect_correlation_examples() {
        let all_minus = OutcomeArray::from_fn(3, 2, 2, vec![0.0, 0.0], |p, _, _| {
            if p == 0 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        })
        .unwrap();
        let r = perfect_correlation_witness(&all_minus, Sign::Minus);
        assert!(r.holds);
        assert!(r.violating_cells.is_empty());

        let mut one_flipped = all_minus.clone();
        one_flipped.set(1, 1, 0, Sign::Minus);
        let r = perfect_correlation_witness(&one_flipped, Sign::Minus);
        assert!(!r.holds);
        assert_eq!(r.mean, Ratio::new(-1, 2));
        assert_eq!(r.violating_cells, vec![(1, 0)]);
        assert!(r.to_string().contains("(1, 0)"));

        let all_plus = OutcomeArray::from_values(3, 2, 2, &[1; 12], vec![0.0, 0.0]).unwrap();
        assert!(perfect_correlation_witness(&all_plus, Sign::Plus).holds);
    }
}
