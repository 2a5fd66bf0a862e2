//! Generators and independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::sync::Arc;

use dichotomic_bell::dichotomic::DichotomicFunction;
use dichotomic_bell::lhv::{Density, DensityFn, HiddenVariableModel, ResponseFn, SignChangeFn};
use dichotomic_bell::multiparty::{Constraint, OutcomeArray, ParitySystem};
use dichotomic_bell::Sign;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sign<R: Rng>(rng: &mut R) -> Sign {
    if rng.random::<bool>() {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Random period-2π dichotomic function with 2..=max_breakpoints breakpoints.
pub fn random_dichotomic<R: Rng>(rng: &mut R, max_breakpoints: usize) -> DichotomicFunction {
    loop {
        let count = 2 * rng.random_range(1..=max_breakpoints / 2);
        let mut pts: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..TAU)).collect();
        pts.sort_by(f64::total_cmp);
        let separated =
            pts.windows(2).all(|w| w[1] - w[0] > 1e-3) && pts[0] + TAU - pts[count - 1] > 1e-3;
        if separated {
            return DichotomicFunction::new(TAU, pts, random_sign(rng)).unwrap();
        }
    }
}

/// Value of a dichotomic function computed directly from its breakpoint
/// list, without the library's evaluation routine.
pub fn oracle_eval(f: &DichotomicFunction, x: f64) -> f64 {
    let t = f.period();
    let mut r = x % t;
    if r < 0.0 {
        r += t;
    }
    let flips = f.breakpoints().iter().filter(|&&b| b <= r).count();
    let s = f.initial_sign().as_f64();
    // before the first breakpoint we are in the last interval
    let k = if flips == 0 {
        f.breakpoints().len() - 1
    } else {
        flips - 1
    };
    if k % 2 == 0 {
        s
    } else {
        -s
    }
}

/// `(1/T) ∫₀ᵀ f(x − τ) g(x) dx` by the composite midpoint rule.
pub fn midpoint_correlation(
    f: &DichotomicFunction,
    g: &DichotomicFunction,
    tau: f64,
    points: usize,
) -> f64 {
    let t = f.period();
    let h = t / points as f64;
    let mut sum = 0.0;
    for i in 0..points {
        let x = (i as f64 + 0.5) * h;
        sum += oracle_eval(f, x - tau) * oracle_eval(g, x);
    }
    sum / points as f64
}

/// Whether `tau` is at least `margin` away from every kink (circularly).
pub fn clear_of_kinks(kinks: &[f64], tau: f64, margin: f64) -> bool {
    kinks.iter().all(|&k| {
        let d = (tau - k).rem_euclid(TAU);
        d.min(TAU - d) > margin
    })
}

/// Non-uniform hidden-variable model: `ρ ∝ 1 + ½cos λ`,
/// `A = sign(cos(λ − a))`, `B = −sign(cos 2(λ − b))`.
pub fn tilted_model() -> HiddenVariableModel {
    let pdf: DensityFn = Arc::new(|l: f64| (1.0 + 0.5 * l.cos()) / TAU);
    let a: ResponseFn = Arc::new(|a, l| Sign::of((l - a).cos()));
    let b: ResponseFn = Arc::new(|b, l| -Sign::of((2.0 * (l - b)).cos()));
    let changes: SignChangeFn = Arc::new(|a, b| {
        let mut v = vec![a - FRAC_PI_2, a + FRAC_PI_2];
        v.extend((0..4).map(|k| b + FRAC_PI_4 + k as f64 * FRAC_PI_2));
        v
    });
    HiddenVariableModel::new(
        "tilted",
        Density::Custom {
            pdf,
            bound: 1.5 / TAU,
        },
        a,
        b,
    )
    .unwrap()
    .with_sign_changes(changes)
}

pub fn random_array<R: Rng>(rng: &mut R, parties: usize, n: usize, m: usize) -> OutcomeArray {
    let settings = (1..parties).map(|_| rng.random_range(0.0..TAU)).collect();
    OutcomeArray::from_fn(parties, n, m, settings, |_, _, _| random_sign(rng)).unwrap()
}

/// Random parity system with `vars` variables and `constraints` constraints
/// of 1..=4 distinct variables each.
pub fn random_system<R: Rng>(rng: &mut R, vars: usize, constraints: usize) -> ParitySystem {
    let names: Vec<String> = (0..vars).map(|i| format!("v{i}")).collect();
    let cs = (0..constraints)
        .map(|_| {
            let k = rng.random_range(1..=vars.min(4));
            let mut chosen: Vec<usize> = Vec::new();
            while chosen.len() < k {
                let v = rng.random_range(0..vars);
                if !chosen.contains(&v) {
                    chosen.push(v);
                }
            }
            Constraint::new(chosen.iter().map(|&i| names[i].clone()), random_sign(rng))
        })
        .collect();
    ParitySystem::new(names, cs).unwrap()
}

/// Brute-force satisfiability over all ±1 assignments, independent of the
/// library's enumerator.
pub fn brute_force_sat(system: &ParitySystem) -> bool {
    let n = system.variables().len();
    (0u64..1 << n).any(|bits| {
        let assignment: Vec<Sign> = (0..n).map(|j| Sign::from_bit(bits >> j & 1 == 1)).collect();
        system.is_satisfied_by(&assignment)
    })
}
