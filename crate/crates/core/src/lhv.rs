//! Local hidden-variable correlation experiments.
//!
//! A model draws `λ` from a density on `[0, 2π)` and lets each side answer
//! ±1 from its own setting and `λ` alone. The correlation
//! `E(a, b) = ∫ ρ(λ) A(a, λ) B(b, λ) dλ` is evaluated by quadrature or by
//! seeded Monte Carlo, and compared with the quantum value `−cos(a − b)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::dichotomic::wrap;
use crate::montecarlo::{run_chunked, Estimate, MonteCarloError};
use crate::quadrature;
use crate::sign::Sign;

/// Normalization tolerance checked when a model is built.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// Midpoint panels used when a model does not publish its sign changes.
pub const MIDPOINT_PANELS: usize = 1 << 17;

const NORMALIZATION_PANELS: usize = 4096;
const SEGMENT_PANELS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LhvError {
    #[error("density integrates to {0}, expected 1")]
    NotNormalized(f64),
    #[error("density is negative or not finite at λ = {0}")]
    BadDensity(f64),
    #[error("rejection bound {bound} is below the density value {value} at λ = {lambda}")]
    BoundTooLow { bound: f64, value: f64, lambda: f64 },
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ResponseFn = Arc<dyn Fn(f64, f64) -> Sign + Send + Sync>;
pub type SignChangeFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// Distribution of the hidden variable over `[0, 2π)`.
#[derive(Clone)]
pub enum Density {
    Uniform,
    /// Smooth density with an upper bound used for rejection sampling.
    Custom {
        pdf: DensityFn,
        bound: f64,
    },
}

impl Density {
    pub fn at(&self, lambda: f64) -> f64 {
        match self {
            Density::Uniform => 1.0 / TAU,
            Density::Custom { pdf, .. } => pdf(lambda),
        }
    }

    /// Probability mass of `[lo, hi] ⊂ [0, 2π]`.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Density::Uniform => (hi - lo) / TAU,
            Density::Custom { pdf, .. } => {
                quadrature::gauss_legendre(|x| pdf(x), lo, hi, SEGMENT_PANELS)
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            // inverse CDF
            Density::Uniform => TAU * rng.random::<f64>(),
            Density::Custom { pdf, bound } => loop {
                let lambda = TAU * rng.random::<f64>();
                if rng.random::<f64>() * bound <= pdf(lambda) {
                    break lambda;
                }
            },
        }
    }
}

/// A local hidden-variable model `(ρ, A, B)`.
#[derive(Clone)]
pub struct HiddenVariableModel {
    name: String,
    density: Density,
    response_a: ResponseFn,
    response_b: ResponseFn,
    sign_changes: Option<SignChangeFn>,
}

impl fmt::Debug for HiddenVariableModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HiddenVariableModel")
            .field("name", &self.name)
            .field("publishes_sign_changes", &self.sign_changes.is_some())
            .finish_non_exhaustive()
    }
}

impl HiddenVariableModel {
    /// Builds a model, checking that the density is non-negative, below its
    /// rejection bound and normalized on `[0, 2π)`.
    pub fn new(
        name: impl Into<String>,
        density: Density,
        response_a: ResponseFn,
        response_b: ResponseFn,
    ) -> Result<Self, LhvError> {
        if let Density::Custom { pdf, bound } = &density {
            let h = TAU / NORMALIZATION_PANELS as f64;
            for i in 0..=NORMALIZATION_PANELS {
                let lambda = (i as f64 * h).min(TAU);
                let value = pdf(lambda);
                if !(value.is_finite() && value >= 0.0) {
                    return Err(LhvError::BadDensity(lambda));
                }
                if value > *bound {
                    return Err(LhvError::BoundTooLow {
                        bound: *bound,
                        value,
                        lambda,
                    });
                }
            }
            let total = quadrature::gauss_legendre(|x| pdf(x), 0.0, TAU, NORMALIZATION_PANELS);
            if (total - 1.0).abs() > DENSITY_TOLERANCE {
                return Err(LhvError::NotNormalized(total));
            }
        }
        Ok(Self {
            name: name.into(),
            density,
            response_a,
            response_b,
            sign_changes: None,
        })
    }

    /// Publishes the `λ` values where `A(a, ·)` or `B(b, ·)` may flip, so the
    /// exact correlation can integrate segment by segment.
    pub fn with_sign_changes(mut self, sign_changes: SignChangeFn) -> Self {
        self.sign_changes = Some(sign_changes);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn response_a(&self, a: f64, lambda: f64) -> Sign {
        (self.response_a)(a, lambda)
    }

    pub fn response_b(&self, b: f64, lambda: f64) -> Sign {
        (self.response_b)(b, lambda)
    }

    fn product(&self, a: f64, b: f64, lambda: f64) -> Sign {
        self.response_a(a, lambda) * self.response_b(b, lambda)
    }
}

/// The quantum singlet correlation `−cos(a − b)`.
pub fn qm_correlation(a: f64, b: f64) -> f64 {
    -(a - b).cos()
}

/// `λ` uniform, `A = sign(cos(λ − a))`, `B = −sign(cos(λ − b))`.
pub fn bell_sgn_model() -> HiddenVariableModel {
    bell_sgn_family(0.0, 0.0)
}

/// [`bell_sgn_model`] with the two response axes rotated by fixed phases.
pub fn bell_sgn_family(phase_a: f64, phase_b: f64) -> HiddenVariableModel {
    let response_a: ResponseFn = Arc::new(move |a, lambda| Sign::of((lambda - a - phase_a).cos()));
    let response_b: ResponseFn = Arc::new(move |b, lambda| -Sign::of((lambda - b - phase_b).cos()));
    let sign_changes: SignChangeFn = Arc::new(move |a, b| {
        let (ca, cb) = (a + phase_a, b + phase_b);
        vec![
            ca - FRAC_PI_2,
            ca + FRAC_PI_2,
            cb - FRAC_PI_2,
            cb + FRAC_PI_2,
        ]
    });
    HiddenVariableModel::new("bell_sgn", Density::Uniform, response_a, response_b)
        .expect("uniform density is normalized")
        .with_sign_changes(sign_changes)
}

/// Closed form of the bell_sgn correlation: `−1 + 2|Δ̃|/π` with `Δ̃` the
/// angle difference wrapped to `[−π, π]`.
pub fn bell_sgn_closed_form(delta: f64) -> f64 {
    let mut d = wrap(delta, TAU);
    if d > PI {
        d = TAU - d;
    }
    -1.0 + 2.0 * d / PI
}

/// `∫ ρ(λ) A(a, λ) B(b, λ) dλ` by quadrature.
///
/// With published sign changes each constant segment is integrated
/// separately (exact for uniform densities, Gauss-Legendre otherwise).
/// Without them a composite midpoint rule with [`MIDPOINT_PANELS`] panels
/// is used; its error grows with the number of sign changes, roughly
/// `count / MIDPOINT_PANELS`.
pub fn lhv_correlation_exact(model: &HiddenVariableModel, a: f64, b: f64) -> f64 {
    let value = match &model.sign_changes {
        Some(changes) => {
            let mut cuts: Vec<f64> = changes(a, b).into_iter().map(|x| wrap(x, TAU)).collect();
            cuts.push(0.0);
            cuts.push(TAU);
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    model.product(a, b, mid).as_f64() * model.density.mass(w[0], w[1])
                })
                .sum::<f64>()
        }
        None => quadrature::midpoint(
            |lambda| model.density.at(lambda) * model.product(a, b, lambda).as_f64(),
            0.0,
            TAU,
            MIDPOINT_PANELS,
        ),
    };
    value.clamp(-1.0, 1.0)
}

/// Monte Carlo estimate of `E(a, b)` from `n` sampled hidden variables.
pub fn lhv_correlation_mc(
    model: &HiddenVariableModel,
    a: f64,
    b: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate, LhvError> {
    lhv_correlation_mc_with_workers(model, a, b, n, seed, None)
}

/// As [`lhv_correlation_mc`] on a pool of `workers` threads; the result is
/// bit-identical for every worker count.
pub fn lhv_correlation_mc_with_workers(
    model: &HiddenVariableModel,
    a: f64,
    b: f64,
    n: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Estimate, LhvError> {
    let partials = run_chunked(n, seed, workers, |rng, len| {
        (0..len)
            .map(|_| {
                let lambda = model.density.sample(rng);
                model.product(a, b, lambda).value()
            })
            .sum::<i64>()
    })?;
    Ok(Estimate::from_product_sum(
        partials.into_iter().sum(),
        n,
        seed,
    ))
}

/// CHSH combination `E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)`.
pub fn chsh<E: Fn(f64, f64) -> f64>(e: E, a: f64, a2: f64, b: f64, b2: f64) -> f64 {
    e(a, b) + e(a, b2) + e(a2, b) - e(a2, b2)
}
