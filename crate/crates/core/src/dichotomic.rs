//! Periodic ±1 step functions and their exact correlation.
//!
//! A [`DichotomicFunction`] is stored as its sign-change points on one
//! period. The correlation `C(τ) = (1/T) ∫₀ᵀ f(x − τ) g(x) dx` of two such
//! functions is computed exactly by merging the shifted breakpoints of `f`
//! with those of `g`: on each resulting interval the integrand is constant.
//! `C` is piecewise linear in `τ`, with kinks where a shifted breakpoint of
//! `f` crosses a breakpoint of `g`, and its slope is always an even integer
//! divided by the period.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::sign::Sign;

/// Relative distance below which two breakpoints are considered coincident.
pub const BREAKPOINT_TOLERANCE: f64 = 1e-12;

/// Relative distance from a kink within which the slope is undefined.
pub const KINK_EXCLUSION: f64 = 1e-9;

/// Minimum sample count accepted by [`cosine_gap`].
pub const MIN_GAP_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DichotomicError {
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("breakpoint count must be even and at least 2, got {0}")]
    BadBreakpointCount(usize),
    #[error("breakpoint {index} ({value}) is not finite or outside [0, period)")]
    OutOfRange { index: usize, value: f64 },
    #[error("breakpoints {index} and {next} are not strictly increasing with separation above tolerance")]
    NotSeparated { index: usize, next: usize },
    #[error("periods differ: {left} vs {right}")]
    PeriodMismatch { left: f64, right: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("shift {tau} lies on kink {kink}; only one-sided slopes exist there")]
    AtKink { tau: f64, kink: f64 },
    #[error("comparison with -cos requires period 2π, got {0}")]
    PeriodNotTau(f64),
    #[error("value {0} is not finite")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, DichotomicError>;

/// Reduces `x` into `[0, period)`.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Distance between `x` and `y` on the circle of circumference `period`.
fn circular_distance(x: f64, y: f64, period: f64) -> f64 {
    let d = wrap(x - y, period);
    d.min(period - d)
}

/// A periodic function taking only the values +1 and -1.
///
/// The value on `[breakpoints[k], breakpoints[k + 1])` is
/// `initial_sign · (−1)^k`; the function is right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicFunction {
    period: f64,
    breakpoints: Vec<f64>,
    initial_sign: Sign,
}

impl DichotomicFunction {
    /// Builds a function from already-normalized breakpoints.
    pub fn new(period: f64, breakpoints: Vec<f64>, initial_sign: Sign) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(DichotomicError::InvalidPeriod(period));
        }
        let n = breakpoints.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(DichotomicError::BadBreakpointCount(n));
        }
        for (index, &value) in breakpoints.iter().enumerate() {
            if !(value.is_finite() && (0.0..period).contains(&value)) {
                return Err(DichotomicError::OutOfRange { index, value });
            }
        }
        let min_gap = BREAKPOINT_TOLERANCE * period;
        for index in 0..n {
            let next = (index + 1) % n;
            let gap = if next == 0 {
                breakpoints[0] + period - breakpoints[index]
            } else {
                breakpoints[next] - breakpoints[index]
            };
            if gap <= min_gap {
                return Err(DichotomicError::NotSeparated { index, next });
            }
        }
        Ok(Self {
            period,
            breakpoints,
            initial_sign,
        })
    }

    /// Builds a function from arbitrary sign-change points.
    ///
    /// Points are reduced modulo `period` and sorted; points closer than the
    /// breakpoint tolerance cancel pairwise. `sign_at_origin` is the value on
    /// the interval starting at `x = 0`.
    pub fn from_sign_changes(period: f64, points: &[f64], sign_at_origin: Sign) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(DichotomicError::InvalidPeriod(period));
        }
        if let Some(&bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(DichotomicError::NonFinite(bad));
        }
        let tol = BREAKPOINT_TOLERANCE * period;
        let mut sorted: Vec<f64> = points.iter().map(|&p| wrap(p, period)).collect();
        sorted.sort_by(f64::total_cmp);

        let mut merged: Vec<f64> = Vec::with_capacity(sorted.len());
        for p in sorted {
            match merged.last() {
                Some(&last) if p - last <= tol => {
                    merged.pop();
                }
                _ => merged.push(p),
            }
        }
        if merged.len() >= 2 && merged[0] + period - merged[merged.len() - 1] <= tol {
            merged.pop();
            merged.remove(0);
        }

        let n = merged.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(DichotomicError::BadBreakpointCount(n));
        }
        let initial_sign = if merged[0] == 0.0 {
            sign_at_origin
        } else {
            -sign_at_origin
        };
        Self::new(period, merged, initial_sign)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn initial_sign(&self) -> Sign {
        self.initial_sign
    }

    /// Value at `x`, reduced modulo the period.
    pub fn eval(&self, x: f64) -> Sign {
        let r = wrap(x, self.period);
        let k = self.breakpoints.partition_point(|&b| b <= r);
        // k == 0 falls in the wrap-around interval, whose sign is -initial
        self.initial_sign * Sign::parity(k + 1)
    }

    /// Value on the interval starting at breakpoint `k`.
    fn sign_after(&self, k: usize) -> Sign {
        self.initial_sign * Sign::parity(k)
    }
}

/// Balanced square wave: +1 on `[phase, phase + period/2)`, -1 elsewhere.
pub fn make_square_wave(period: f64, phase: f64) -> Result<DichotomicFunction> {
    if !(period.is_finite() && period > 0.0) {
        return Err(DichotomicError::InvalidPeriod(period));
    }
    if !phase.is_finite() {
        return Err(DichotomicError::NonFinite(phase));
    }
    let rise = wrap(phase, period);
    let fall = wrap(phase + period / 2.0, period);
    if rise < fall {
        DichotomicFunction::new(period, vec![rise, fall], Sign::Plus)
    } else {
        DichotomicFunction::new(period, vec![fall, rise], Sign::Minus)
    }
}

/// A jump of ±2 at a breakpoint of a dichotomic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub location: f64,
    /// Direction of the jump: `Plus` for -1 → +1.
    pub jump: Sign,
}

impl Impulse {
    pub fn weight(&self) -> i64 {
        2 * self.jump.value()
    }
}

/// The distributional derivative of a dichotomic function: a train of
/// Dirac impulses of weight ±2.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseTrain {
    pub period: f64,
    pub impulses: Vec<Impulse>,
}

pub fn derivative_impulses(f: &DichotomicFunction) -> ImpulseTrain {
    let impulses = f
        .breakpoints
        .iter()
        .enumerate()
        .map(|(k, &location)| Impulse {
            location,
            jump: f.sign_after(k),
        })
        .collect();
    ImpulseTrain {
        period: f.period,
        impulses,
    }
}

/// Sampled correlation together with the shifts where its slope changes.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub shifts: Vec<f64>,
    pub values: Vec<f64>,
    pub kinks: Vec<f64>,
}

fn check_periods(f: &DichotomicFunction, g: &DichotomicFunction) -> Result<()> {
    let scale = f.period.max(g.period);
    if (f.period - g.period).abs() > BREAKPOINT_TOLERANCE * scale {
        return Err(DichotomicError::PeriodMismatch {
            left: f.period,
            right: g.period,
        });
    }
    Ok(())
}

/// Exact value of `(1/T) ∫₀ᵀ f(x − τ) g(x) dx`.
pub fn correlate_exact(f: &DichotomicFunction, g: &DichotomicFunction, tau: f64) -> Result<f64> {
    check_periods(f, g)?;
    if !tau.is_finite() {
        return Err(DichotomicError::NonFinite(tau));
    }
    let period = g.period;
    let shift = wrap(tau, f.period);

    let mut cuts = Vec::with_capacity(f.breakpoints.len() + g.breakpoints.len() + 2);
    cuts.push(0.0);
    cuts.extend(f.breakpoints.iter().map(|&b| wrap(b + shift, period)));
    cuts.extend_from_slice(&g.breakpoints);
    cuts.sort_by(f64::total_cmp);
    cuts.push(period);

    // Accumulating only the discordant measure keeps C(f, f, 0) exactly 1.
    let mut discordant = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = w[0] + 0.5 * len;
        if f.eval(mid - shift) != g.eval(mid) {
            discordant += len;
        }
    }
    Ok((1.0 - 2.0 * discordant / period).clamp(-1.0, 1.0))
}

/// Shifts in `[0, period)` where the correlation of `f` and `g` may change
/// slope: every `(x_g − x_f) mod period`, sorted and deduplicated.
pub fn kinks(f: &DichotomicFunction, g: &DichotomicFunction) -> Result<Vec<f64>> {
    check_periods(f, g)?;
    let period = g.period;
    let tol = BREAKPOINT_TOLERANCE * period;
    let mut out: Vec<f64> = g
        .breakpoints
        .iter()
        .flat_map(|&xg| f.breakpoints.iter().map(move |&xf| wrap(xg - xf, period)))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|later, earlier| *later - *earlier <= tol);
    if out.len() > 1 && out[0] + period - out[out.len() - 1] <= tol {
        out.pop();
    }
    Ok(out)
}

/// Samples [`correlate_exact`] on `n_samples` uniform shifts `i · T / n`.
pub fn correlation_curve(
    f: &DichotomicFunction,
    g: &DichotomicFunction,
    n_samples: usize,
) -> Result<CorrelationCurve> {
    check_periods(f, g)?;
    if n_samples < 2 {
        return Err(DichotomicError::TooFewSamples {
            got: n_samples,
            min: 2,
        });
    }
    let period = g.period;
    let shifts: Vec<f64> = (0..n_samples)
        .map(|i| i as f64 * period / n_samples as f64)
        .collect();
    let values = shifts
        .iter()
        .map(|&tau| correlate_exact(f, g, tau))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        shifts,
        values,
        kinks: kinks(f, g)?,
    })
}

/// Integer `k` such that `dC/dτ = k / T` at a non-kink shift.
///
/// Differentiating under the integral turns `f(x − τ)` into a train of
/// impulses at `x_n + τ`; with the chain-rule sign this gives
/// `k = −Σ w_n · g(x_n + τ)` with `w_n = ±2`, so `k` is always even.
pub fn slope_numerator(f: &DichotomicFunction, g: &DichotomicFunction, tau: f64) -> Result<i64> {
    check_periods(f, g)?;
    if !tau.is_finite() {
        return Err(DichotomicError::NonFinite(tau));
    }
    let period = g.period;
    let exclusion = KINK_EXCLUSION * period;
    for kink in kinks(f, g)? {
        if circular_distance(tau, kink, period) <= exclusion {
            return Err(DichotomicError::AtKink { tau, kink });
        }
    }
    let sum: i64 = derivative_impulses(f)
        .impulses
        .iter()
        .map(|imp| imp.weight() * g.eval(imp.location + tau).value())
        .sum();
    Ok(-sum)
}

/// `dC/dτ` at a non-kink shift; always an even integer over the period.
pub fn correlation_slope(f: &DichotomicFunction, g: &DichotomicFunction, tau: f64) -> Result<f64> {
    let k = slope_numerator(f, g, tau)?;
    Ok(k as f64 / g.period)
}

/// Largest sampled `|C(τ) − (−cos τ)|` over `n_samples` uniform shifts.
pub fn cosine_gap(f: &DichotomicFunction, g: &DichotomicFunction, n_samples: usize) -> Result<f64> {
    check_periods(f, g)?;
    for p in [f.period, g.period] {
        if (p - TAU).abs() > BREAKPOINT_TOLERANCE * TAU {
            return Err(DichotomicError::PeriodNotTau(p));
        }
    }
    if n_samples < MIN_GAP_SAMPLES {
        return Err(DichotomicError::TooFewSamples {
            got: n_samples,
            min: MIN_GAP_SAMPLES,
        });
    }
    let mut gap: f64 = 0.0;
    for i in 0..n_samples {
        let tau = i as f64 * TAU / n_samples as f64;
        let c = correlate_exact(f, g, tau)?;
        gap = gap.max((c + tau.cos()).abs());
    }
    Ok(gap)
}

/// Correlation of a balanced square wave with itself: `1 − 2|τ̃|/π`, where
/// `τ̃` is `τ` wrapped to `[−π, π]` (period 2π).
pub fn square_autocorrelation(tau: f64) -> f64 {
    let mut t = wrap(tau, TAU);
    if t > PI {
        t = TAU - t;
    }
    1.0 - 2.0 * t / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(phase: f64) -> DichotomicFunction {
        make_square_wave(TAU, phase).unwrap()
    }

    #[test]
    fn square_wave_breakpoints() {
        let f = square(0.0);
        assert_eq!(f.breakpoints(), &[0.0, PI]);
        assert_eq!(f.initial_sign(), Sign::Plus);

        let f = square(PI / 2.0);
        assert_eq!(f.breakpoints(), &[PI / 2.0, 3.0 * PI / 2.0]);

        let f = make_square_wave(1.0, 0.75).unwrap();
        assert_eq!(f.breakpoints(), &[0.25, 0.75]);
        // +1 on its first half-period [0.75, 1.25)
        assert_eq!(f.eval(0.8), Sign::Plus);
        assert_eq!(f.eval(0.1), Sign::Plus);
        assert_eq!(f.eval(0.5), Sign::Minus);
    }

    #[test]
    fn square_wave_rejects_bad_period() {
        assert_eq!(
            make_square_wave(0.0, 0.0),
            Err(DichotomicError::InvalidPeriod(0.0))
        );
        assert!(make_square_wave(-1.0, 0.0).is_err());
        assert!(make_square_wave(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn eval_examples() {
        let f = square(0.0);
        assert_eq!(f.eval(0.1), Sign::Plus);
        assert_eq!(f.eval(PI + 0.1), Sign::Minus);
        assert_eq!(f.eval(TAU + 0.1), Sign::Plus);
        assert_eq!(f.eval(-0.1), Sign::Minus);
        // right-continuous
        assert_eq!(f.eval(0.0), Sign::Plus);
        assert_eq!(f.eval(PI), Sign::Minus);
    }

    #[test]
    fn constructor_invariants() {
        assert_eq!(
            DichotomicFunction::new(1.0, vec![0.5], Sign::Plus),
            Err(DichotomicError::BadBreakpointCount(1))
        );
        assert_eq!(
            DichotomicFunction::new(1.0, vec![], Sign::Plus),
            Err(DichotomicError::BadBreakpointCount(0))
        );
        assert!(matches!(
            DichotomicFunction::new(1.0, vec![0.5, 0.2], Sign::Plus),
            Err(DichotomicError::NotSeparated { .. })
        ));
        assert!(matches!(
            DichotomicFunction::new(1.0, vec![0.2, 1.0], Sign::Plus),
            Err(DichotomicError::OutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            DichotomicFunction::new(1.0, vec![0.2, 0.2 + 1e-13], Sign::Plus),
            Err(DichotomicError::NotSeparated { .. })
        ));
    }

    #[test]
    fn sign_changes_merge_and_cancel() {
        let f =
            DichotomicFunction::from_sign_changes(1.0, &[0.7, 0.3, 0.5, 0.5 + 1e-14], Sign::Plus)
                .unwrap();
        assert_eq!(f.breakpoints(), &[0.3, 0.7]);
        assert_eq!(f.eval(0.0), Sign::Plus);
        assert_eq!(f.eval(0.4), Sign::Minus);

        let f = DichotomicFunction::from_sign_changes(1.0, &[1.25, 0.5], Sign::Minus).unwrap();
        assert_eq!(f.breakpoints(), &[0.25, 0.5]);
        assert_eq!(f.eval(0.1), Sign::Minus);
        assert_eq!(f.eval(0.3), Sign::Plus);

        assert!(DichotomicFunction::from_sign_changes(1.0, &[0.5, 0.5], Sign::Plus).is_err());
    }

    #[test]
    fn correlate_examples() {
        let f = square(0.0);
        assert_eq!(correlate_exact(&f, &f, 0.0).unwrap(), 1.0);
        assert!((correlate_exact(&f, &f, PI).unwrap() + 1.0).abs() < 1e-15);
        // midpoint quadrature with 10^6 samples gives 0 at τ = π/2
        assert!(correlate_exact(&f, &f, PI / 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn correlate_period_mismatch() {
        let f = square(0.0);
        let g = make_square_wave(1.0, 0.0).unwrap();
        assert!(matches!(
            correlate_exact(&f, &g, 0.0),
            Err(DichotomicError::PeriodMismatch { .. })
        ));
    }

    #[test]
    fn kinks_of_square_with_itself() {
        let f = square(0.0);
        assert_eq!(kinks(&f, &f).unwrap(), vec![0.0, PI]);
    }

    #[test]
    fn curve_needs_two_samples() {
        let f = square(0.0);
        assert!(matches!(
            correlation_curve(&f, &f, 1),
            Err(DichotomicError::TooFewSamples { got: 1, min: 2 })
        ));
    }

    #[test]
    fn curve_matches_triangle() {
        let f = square(0.0);
        let curve = correlation_curve(&f, &f, 4).unwrap();
        let expected = [1.0, 0.0, -1.0, 0.0];
        for (v, e) in curve.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        assert_eq!(curve.kinks, vec![0.0, PI]);
    }

    #[test]
    fn impulses_of_square() {
        let train = derivative_impulses(&square(0.0));
        assert_eq!(train.impulses.len(), 2);
        assert_eq!(train.impulses[0].location, 0.0);
        assert_eq!(train.impulses[0].weight(), 2);
        assert_eq!(train.impulses[1].location, PI);
        assert_eq!(train.impulses[1].weight(), -2);
    }

    #[test]
    fn slope_examples() {
        let f = square(0.0);
        let s = correlation_slope(&f, &f, PI / 4.0).unwrap();
        assert!((s + 2.0 / PI).abs() < 1e-15);
        let s = correlation_slope(&f, &f, 3.0 * PI / 2.0).unwrap();
        assert!((s - 2.0 / PI).abs() < 1e-15);
        assert!(matches!(
            correlation_slope(&f, &f, 0.0),
            Err(DichotomicError::AtKink { .. })
        ));
        assert!(matches!(
            correlation_slope(&f, &f, TAU - 1e-12),
            Err(DichotomicError::AtKink { .. })
        ));
    }

    #[test]
    fn gap_examples() {
        let f = square(0.0);
        let g = square(PI);
        let gap = cosine_gap(&f, &g, 1000).unwrap();
        assert!((0.2..0.2106).contains(&gap), "gap {gap}");
        let self_gap = cosine_gap(&f, &f, 100).unwrap();
        assert!((self_gap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_preconditions() {
        let f = square(0.0);
        assert!(matches!(
            cosine_gap(&f, &f, 99),
            Err(DichotomicError::TooFewSamples { .. })
        ));
        let h = make_square_wave(1.0, 0.0).unwrap();
        assert!(matches!(
            cosine_gap(&h, &h, 100),
            Err(DichotomicError::PeriodNotTau(_))
        ));
    }
}
