//! Product constraints on ±1 observables, decided over GF(2).
//!
//! Writing each observable as `v = (−1)^s` turns a constraint
//! `v₁·v₂·…·v_k = ±1` into the linear equation `s₁ ⊕ … ⊕ s_k = r` with
//! `r = 1` exactly when the required product is −1. A system is
//! unsatisfiable iff some set of constraints sums to `0 = 1`: every variable
//! occurs an even number of times while an odd number of the required
//! products is −1.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gf2::BitRow;
use crate::sign::Sign;

/// Largest variable count accepted by [`enumerate_parity`].
pub const MAX_ENUMERATION_VARIABLES: usize = 24;
/// Largest constraint count for which [`enumerate_parity`] searches for a
/// certificate.
pub const MAX_CERTIFICATE_CONSTRAINTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParityError {
    #[error("constraint {constraint} uses undeclared variable {name:?}")]
    UndeclaredVariable { constraint: usize, name: String },
    #[error("constraint {0} has no variables")]
    EmptyConstraint(usize),
    #[error("variable {0:?} declared twice")]
    DuplicateVariable(String),
    #[error("{count} variables exceed the enumeration cap of {max}")]
    TooManyVariables { count: usize, max: usize },
    #[error("{count} constraints exceed the certificate search cap of {max}")]
    TooManyConstraints { count: usize, max: usize },
    #[error("verdict failed verification: {0}")]
    VerificationFailed(String),
}

/// `∏ vars = product`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub vars: Vec<String>,
    pub product: Sign,
}

impl Constraint {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = S>, product: Sign) -> Self {
        Self {
            vars: vars.into_iter().map(Into::into).collect(),
            product,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParitySystem {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
}

/// A validated set of product constraints.
///
/// JSON form: `{"variables": [...], "constraints": [{"vars": [...], "product": 1|-1}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParitySystem")]
pub struct ParitySystem {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<RawParitySystem> for ParitySystem {
    type Error = ParityError;

    fn try_from(raw: RawParitySystem) -> Result<Self, ParityError> {
        ParitySystem::new(raw.variables, raw.constraints)
    }
}

impl ParitySystem {
    pub fn new(variables: Vec<String>, constraints: Vec<Constraint>) -> Result<Self, ParityError> {
        let mut index = HashMap::with_capacity(variables.len());
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(ParityError::DuplicateVariable(v.clone()));
            }
        }
        for (ci, c) in constraints.iter().enumerate() {
            if c.vars.is_empty() {
                return Err(ParityError::EmptyConstraint(ci));
            }
            if let Some(name) = c.vars.iter().find(|v| !index.contains_key(*v)) {
                return Err(ParityError::UndeclaredVariable {
                    constraint: ci,
                    name: name.clone(),
                });
            }
        }
        Ok(Self {
            variables,
            constraints,
            index,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn with_constraint(&self, c: Constraint) -> Result<Self, ParityError> {
        let mut constraints = self.constraints.clone();
        constraints.push(c);
        Self::new(self.variables.clone(), constraints)
    }

    fn var_index(&self, name: &str) -> usize {
        self.index[name]
    }

    /// Coefficient row of a constraint; repeated variables cancel.
    fn row(&self, c: &Constraint) -> BitRow {
        let mut row = BitRow::zeros(self.variables.len());
        for v in &c.vars {
            row.toggle(self.var_index(v));
        }
        row
    }

    /// Whether `assignment` (aligned with `variables`) meets every constraint.
    pub fn is_satisfied_by(&self, assignment: &[Sign]) -> bool {
        assignment.len() == self.variables.len()
            && self.constraints.iter().all(|c| {
                c.vars
                    .iter()
                    .map(|v| assignment[self.var_index(v)])
                    .product::<Sign>()
                    == c.product
            })
    }

    /// Number of occurrences of each variable across the selected
    /// constraints, in declaration order.
    pub fn multiplicities(&self, selection: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.variables.len()];
        for &ci in selection {
            for v in &self.constraints[ci].vars {
                counts[self.var_index(v)] += 1;
            }
        }
        counts
    }

    /// Whether `selection` multiplies out to `+1 = −1`: every variable occurs
    /// an even number of times and the required products multiply to −1.
    pub fn is_contradiction(&self, selection: &[usize]) -> bool {
        !selection.is_empty()
            && selection.iter().all(|&ci| ci < self.constraints.len())
            && self.multiplicities(selection).iter().all(|m| m % 2 == 0)
            && selection
                .iter()
                .map(|&ci| self.constraints[ci].product)
                .product::<Sign>()
                == Sign::Minus
    }
}

/// Outcome of deciding a [`ParitySystem`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityVerdict {
    pub satisfiable: bool,
    /// Satisfying assignment aligned with the system's variables.
    pub witness: Option<Vec<Sign>>,
    /// Constraint indices whose product reads `+1 = −1`.
    pub certificate: Option<Vec<usize>>,
}

impl ParityVerdict {
    fn sat(witness: Vec<Sign>) -> Self {
        Self {
            satisfiable: true,
            witness: Some(witness),
            certificate: None,
        }
    }

    fn unsat(certificate: Vec<usize>) -> Self {
        Self {
            satisfiable: false,
            witness: None,
            certificate: Some(certificate),
        }
    }

    pub fn witness_map(&self, system: &ParitySystem) -> Option<BTreeMap<String, Sign>> {
        self.witness.as_ref().map(|w| {
            system
                .variables
                .iter()
                .cloned()
                .zip(w.iter().copied())
                .collect()
        })
    }

    fn verify(self, system: &ParitySystem) -> Result<Self, ParityError> {
        match (&self.witness, &self.certificate) {
            (Some(w), None) if system.is_satisfied_by(w) => Ok(self),
            (None, Some(c)) if system.is_contradiction(c) => Ok(self),
            _ => Err(ParityError::VerificationFailed(format!("{self:?}"))),
        }
    }
}

/// The three-party contradiction in Mermin's form.
///
/// Variables `Ax, Ay, Bx, By, Cx, Cy`; constraints
/// `Ax·By·Cy = Ay·Bx·Cy = Ay·By·Cx = +1` and `Ax·Bx·Cx = −1`.
pub fn build_ghz_parity_system() -> ParitySystem {
    let variables = ["Ax", "Ay", "Bx", "By", "Cx", "Cy"]
        .into_iter()
        .map(String::from)
        .collect();
    let constraints = vec![
        Constraint::new(["Ax", "By", "Cy"], Sign::Plus),
        Constraint::new(["Ay", "Bx", "Cy"], Sign::Plus),
        Constraint::new(["Ay", "By", "Cx"], Sign::Plus),
        Constraint::new(["Ax", "Bx", "Cx"], Sign::Minus),
    ];
    ParitySystem::new(variables, constraints).expect("GHZ system is well formed")
}

/// Decides `system` by Gauss-Jordan elimination over GF(2).
///
/// Pivots are taken from the last variable backwards and free variables set
/// to +1, which yields the lexicographically first witness (variable order,
/// +1 before −1). An unsatisfiable system returns the constraints whose
/// GF(2) sum is `0 = 1`.
pub fn solve_parity(system: &ParitySystem) -> Result<ParityVerdict, ParityError> {
    let n = system.variables.len();
    let m = system.constraints.len();

    struct Row {
        coeffs: BitRow,
        rhs: bool,
        combo: BitRow,
    }

    let mut rows: Vec<Row> = system
        .constraints
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let mut combo = BitRow::zeros(m);
            combo.set(ci, true);
            Row {
                coeffs: system.row(c),
                rhs: c.product.to_bit(),
                combo,
            }
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (column, row)
    let mut rank = 0;
    for col in (0..n).rev() {
        let Some(found) = (rank..m).find(|&r| rows[r].coeffs.get(col)) else {
            continue;
        };
        rows.swap(rank, found);
        let (head, tail) = rows.split_at_mut(rank);
        let (pivot, rest) = tail.split_first_mut().expect("rank < m");
        for other in head.iter_mut().chain(rest.iter_mut()) {
            if other.coeffs.get(col) {
                other.coeffs.xor_assign(&pivot.coeffs);
                other.rhs ^= pivot.rhs;
                other.combo.xor_assign(&pivot.combo);
            }
        }
        pivots.push((col, rank));
        rank += 1;
    }

    let verdict = match rows[rank..].iter().find(|r| r.rhs) {
        Some(bad) => ParityVerdict::unsat(bad.combo.ones().collect()),
        None => {
            // Each pivot row holds its pivot plus free columns only.
            let mut witness = vec![Sign::Plus; n];
            for &(col, r) in &pivots {
                witness[col] = Sign::from_bit(rows[r].rhs);
            }
            ParityVerdict::sat(witness)
        }
    };
    verdict.verify(system)
}

/// Decides `system` by trying all `2^n` assignments in lexicographic order.
///
/// An unsatisfiable verdict carries the smallest contradictory subset of
/// constraints, found by exhaustive search over constraint subsets.
pub fn enumerate_parity(system: &ParitySystem) -> Result<ParityVerdict, ParityError> {
    enumerate_parity_with_workers(system, None)
}

pub fn enumerate_parity_with_workers(
    system: &ParitySystem,
    workers: Option<usize>,
) -> Result<ParityVerdict, ParityError> {
    let n = system.variables.len();
    if n > MAX_ENUMERATION_VARIABLES {
        return Err(ParityError::TooManyVariables {
            count: n,
            max: MAX_ENUMERATION_VARIABLES,
        });
    }
    // Variable j is bit n-1-j, so integer order is lexicographic order.
    let masks: Vec<(u32, bool)> = system
        .constraints
        .iter()
        .map(|c| {
            let mask = c
                .vars
                .iter()
                .fold(0u32, |acc, v| acc ^ (1 << (n - 1 - system.var_index(v))));
            (mask, c.product.to_bit())
        })
        .collect();
    let satisfies = |s: u32| {
        masks
            .iter()
            .all(|&(mask, rhs)| ((s & mask).count_ones() % 2 == 1) == rhs)
    };

    let search = || {
        (0..(1u64 << n))
            .into_par_iter()
            .find_first(|&s| satisfies(s as u32))
    };
    let first = match workers {
        None => search(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| ParityError::VerificationFailed(e.to_string()))?
            .install(search),
    };

    let verdict = match first {
        Some(s) => {
            let witness = (0..n)
                .map(|j| Sign::from_bit((s >> (n - 1 - j)) & 1 == 1))
                .collect();
            ParityVerdict::sat(witness)
        }
        None => ParityVerdict::unsat(smallest_contradiction(&masks)?),
    };
    verdict.verify(system)
}

/// Smallest subset of constraint rows summing to `0 = 1`; ties go to the
/// lowest subset bitmask. Walks all subsets in Gray-code order.
fn smallest_contradiction(masks: &[(u32, bool)]) -> Result<Vec<usize>, ParityError> {
    let m = masks.len();
    if m > MAX_CERTIFICATE_CONSTRAINTS {
        return Err(ParityError::TooManyConstraints {
            count: m,
            max: MAX_CERTIFICATE_CONSTRAINTS,
        });
    }
    let mut acc = (0u32, false);
    let mut best: Option<u64> = None;
    for i in 1u64..(1u64 << m) {
        let flip = i.trailing_zeros() as usize;
        acc.0 ^= masks[flip].0;
        acc.1 ^= masks[flip].1;
        if acc.0 == 0 && acc.1 {
            let subset = i ^ (i >> 1);
            let better = match best {
                None => true,
                Some(b) => (subset.count_ones(), subset) < (b.count_ones(), b),
            };
            if better {
                best = Some(subset);
            }
        }
    }
    let best = best.ok_or_else(|| {
        ParityError::VerificationFailed(
            "no satisfying assignment and no contradictory subset".into(),
        )
    })?;
    Ok((0..m).filter(|&ci| best >> ci & 1 == 1).collect())
}
