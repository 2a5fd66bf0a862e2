//! Polarization coincidences: the defined correlation coefficient, the
//! quantum coincidence probabilities, and click-level classical sources
//! obeying Malus' law.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dichotomic::wrap;
use crate::montecarlo::{run_chunked, Estimate, MonteCarloError};

/// Tolerance on the normalization of coincidence probabilities.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticalError {
    #[error("probability {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("no coincidences recorded")]
    ZeroTotal,
    #[error("unknown source model {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
}

/// Joint detection probabilities for the four outcome pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceProbabilities {
    p_pp: f64,
    p_mm: f64,
    p_pm: f64,
    p_mp: f64,
}

impl CoincidenceProbabilities {
    pub fn new(p_pp: f64, p_mm: f64, p_pm: f64, p_mp: f64) -> Result<Self, OpticalError> {
        for (name, value) in [
            ("p_pp", p_pp),
            ("p_mm", p_mm),
            ("p_pm", p_pm),
            ("p_mp", p_mp),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(OpticalError::OutOfRange { name, value });
            }
        }
        let total = p_pp + p_mm + p_pm + p_mp;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(OpticalError::NotNormalized(total));
        }
        Ok(Self {
            p_pp,
            p_mm,
            p_pm,
            p_mp,
        })
    }

    pub fn p_pp(&self) -> f64 {
        self.p_pp
    }
    pub fn p_mm(&self) -> f64 {
        self.p_mm
    }
    pub fn p_pm(&self) -> f64 {
        self.p_pm
    }
    pub fn p_mp(&self) -> f64 {
        self.p_mp
    }

    pub fn sum(&self) -> f64 {
        self.p_pp + self.p_mm + self.p_pm + self.p_mp
    }
}

/// `P₊₊ = P₋₋ = cos²(a − b)/2`, `P₊₋ = P₋₊ = sin²(a − b)/2`.
pub fn coincidence_probabilities(a: f64, b: f64) -> CoincidenceProbabilities {
    let (s, c) = (a - b).sin_cos();
    let same = 0.5 * c * c;
    let diff = 0.5 * s * s;
    CoincidenceProbabilities::new(same, same, diff, diff).expect("cos² + sin² = 1 within rounding")
}

/// `E = P₊₊ + P₋₋ − P₊₋ − P₋₊`.
pub fn correlation_coefficient(p: &CoincidenceProbabilities) -> f64 {
    p.p_pp + p.p_mm - p.p_pm - p.p_mp
}

/// `cos 2(a − b)`.
pub fn optical_correlation(a: f64, b: f64) -> f64 {
    (2.0 * (a - b)).cos()
}

/// Probability that light polarized along `axis` passes an analyzer at
/// `analyzer`: `cos²(axis − analyzer)`. Both angles are axes, taken mod π.
pub fn malus_click_probability(axis: f64, analyzer: f64) -> f64 {
    let d = wrap(axis, PI) - wrap(analyzer, PI);
    d.cos().powi(2).clamp(0.0, 1.0)
}

/// Correlation of the shared-axis source: `(1/2) cos 2δ`.
pub fn classical_shared_lambda_e(delta: f64) -> f64 {
    0.5 * (2.0 * delta).cos()
}

/// How a classical source polarizes the two photons of a pair, given a
/// hidden axis `λ` uniform on `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    /// Both photons polarized along `λ`.
    SharedAxis,
    /// Photons polarized along `λ` and `λ + π/2`.
    Anticorrelated,
}

impl SourceModel {
    pub const ALL: [SourceModel; 2] = [SourceModel::SharedAxis, SourceModel::Anticorrelated];

    pub fn name(self) -> &'static str {
        match self {
            SourceModel::SharedAxis => "shared_axis",
            SourceModel::Anticorrelated => "anticorrelated",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, OpticalError> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| OpticalError::UnknownModel(name.to_string()))
    }

    /// Polarization axes of the two photons, each in `[0, π)`.
    pub fn axes(self, lambda: f64) -> (f64, f64) {
        let first = wrap(lambda, PI);
        match self {
            SourceModel::SharedAxis => (first, first),
            SourceModel::Anticorrelated => (first, wrap(lambda + FRAC_PI_2, PI)),
        }
    }

    /// Exact correlation `±(1/2) cos 2δ` of the model.
    pub fn closed_form_e(self, delta: f64) -> f64 {
        match self {
            SourceModel::SharedAxis => classical_shared_lambda_e(delta),
            SourceModel::Anticorrelated => -classical_shared_lambda_e(delta),
        }
    }
}

impl fmt::Display for SourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tallies of the four joint outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceCounts {
    pub n_pp: u64,
    pub n_mm: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_total: u64,
    pub seed: u64,
    pub model: String,
}

impl CoincidenceCounts {
    pub fn new(
        n_pp: u64,
        n_mm: u64,
        n_pm: u64,
        n_mp: u64,
        seed: u64,
        model: impl Into<String>,
    ) -> Self {
        Self {
            n_pp,
            n_mm,
            n_pm,
            n_mp,
            n_total: n_pp + n_mm + n_pm + n_mp,
            seed,
            model: model.into(),
        }
    }
}

/// Simulates `n` photon pairs: draw `λ`, polarize both photons by the
/// source law, and let each side click `+` with its Malus probability using
/// an independent uniform draw.
pub fn simulate_coincidences(
    model: SourceModel,
    a: f64,
    b: f64,
    n: u64,
    seed: u64,
) -> Result<CoincidenceCounts, OpticalError> {
    simulate_coincidences_with_workers(model, a, b, n, seed, None)
}

pub fn simulate_coincidences_with_workers(
    model: SourceModel,
    a: f64,
    b: f64,
    n: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<CoincidenceCounts, OpticalError> {
    let partials = run_chunked(n, seed, workers, |rng, len| {
        let mut tally = [0u64; 4]; // ++, --, +-, -+
        for _ in 0..len {
            let lambda = PI * rng.random::<f64>();
            let (axis1, axis2) = model.axes(lambda);
            let plus1 = rng.random::<f64>() < malus_click_probability(axis1, a);
            let plus2 = rng.random::<f64>() < malus_click_probability(axis2, b);
            let slot = match (plus1, plus2) {
                (true, true) => 0,
                (false, false) => 1,
                (true, false) => 2,
                (false, true) => 3,
            };
            tally[slot] += 1;
        }
        tally
    })?;
    let mut total = [0u64; 4];
    for t in partials {
        for (acc, x) in total.iter_mut().zip(t) {
            *acc += x;
        }
    }
    Ok(CoincidenceCounts::new(
        total[0],
        total[1],
        total[2],
        total[3],
        seed,
        model.name(),
    ))
}

/// Empirical correlation coefficient with its ±1-estimator standard error.
pub fn estimate_e_from_counts(c: &CoincidenceCounts) -> Result<Estimate, OpticalError> {
    let total = c.n_pp + c.n_mm + c.n_pm + c.n_mp;
    if total == 0 {
        return Err(OpticalError::ZeroTotal);
    }
    let sum = (c.n_pp + c.n_mm) as i64 - (c.n_pm + c.n_mp) as i64;
    Ok(Estimate::from_product_sum(sum, total, c.seed))
}

/// Largest `|cos 2δ − model(δ)|` over `n` uniform `δ` in `[0, π)`.
pub fn max_model_gap(model: SourceModel, n: usize) -> f64 {
    (0..n.max(1))
        .map(|i| {
            let delta = i as f64 * PI / n.max(1) as f64;
            (optical_correlation(delta, 0.0) - model.closed_form_e(delta)).abs()
        })
        .fold(0.0, f64::max)
}
