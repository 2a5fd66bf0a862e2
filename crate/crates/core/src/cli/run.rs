//! Experiment execution and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{
    ChshParams, CorrelateParams, ExperimentConfig, GhzParams, OpticalParams, Params,
};
use crate::dichotomic::{correlate_exact, cosine_gap, kinks};
use crate::lhv::{
    bell_sgn_family, chsh, lhv_correlation_exact, lhv_correlation_mc, qm_correlation,
};
use crate::multiparty::parity::ParityError;
use crate::multiparty::{
    achievable_values, build_ghz_parity_system, enumerate_parity, ratio_to_f64, solve_parity,
    ParitySystem, ParityVerdict,
};
use crate::optical::{
    coincidence_probabilities, correlation_coefficient, estimate_e_from_counts, max_model_gap,
    optical_correlation, simulate_coincidences, SourceModel,
};

pub const SCHEMA_VERSION: &str = "1";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(e: impl std::fmt::Display) -> RunError {
    RunError::Invalid(e.to_string())
}

/// One emitted CSV file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: String,
    pub experiment: String,
    pub inputs: Value,
    pub results: Value,
    pub manifest: Vec<ManifestEntry>,
}

impl RunSummary {
    /// Pretty JSON with every object's keys in alphabetical order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("summary serializes");
        let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
        text.push('\n');
        text
    }
}

/// A CSV cell; floats are written with 17 significant digits.
enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct Artifacts {
    dir: PathBuf,
    manifest: Vec<ManifestEntry>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<(), RunError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                match cell {
                    Cell::F(x) => text.push_str(&format_float(*x)),
                    Cell::I(x) => write!(text, "{x}").expect("write to string"),
                    Cell::S(s) => text.push_str(s),
                }
            }
            text.push('\n');
        }
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
        self.manifest.push(ManifestEntry {
            path: name.to_string(),
            rows: rows.len(),
        });
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }
}

/// Runs a validated experiment, writes its CSV files and `summary.json`
/// into `config.out_dir`, and returns the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let mut out = Artifacts {
        dir: config.out_dir.clone(),
        manifest: Vec::new(),
    };
    let results = match &config.params {
        Params::Correlate(p) => run_correlate(config, p, &mut out)?,
        Params::Chsh(p) => run_chsh(config, p, &mut out)?,
        Params::Ghz(p) => run_ghz(p, &mut out)?,
        Params::Optical(p) => run_optical(config, p, &mut out)?,
    };
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION.into(),
        experiment: config.experiment.tag().into(),
        inputs: serde_json::to_value(config).expect("config serializes"),
        results,
        manifest: out.manifest,
    };
    let path = config.out_dir.join(SUMMARY_FILE);
    fs::write(&path, summary.to_json()).map_err(io_err(&path))?;
    Ok(summary)
}

fn run_correlate(
    config: &ExperimentConfig,
    p: &CorrelateParams,
    out: &mut Artifacts,
) -> Result<Value, RunError> {
    let f = p.f.build().map_err(invalid)?;
    let g = p.g.build().map_err(invalid)?;

    let mut rows = Vec::with_capacity(p.sweep.count);
    let mut sweep_gap: f64 = 0.0;
    for tau in p.sweep.points() {
        let c = correlate_exact(&f, &g, tau).map_err(invalid)?;
        let reference = -tau.cos();
        let gap = (c - reference).abs();
        sweep_gap = sweep_gap.max(gap);
        rows.push(vec![tau.into(), c.into(), reference.into(), gap.into()]);
    }
    out.csv(
        "correlate.csv",
        &["tau", "correlation", "neg_cos", "gap"],
        rows,
    )?;

    let kink_list = kinks(&f, &g).map_err(invalid)?;
    out.csv(
        "kinks.csv",
        &["kink"],
        kink_list.iter().map(|&k| vec![k.into()]).collect(),
    )?;

    let gap = cosine_gap(&f, &g, config.samples as usize).map_err(invalid)?;
    Ok(json!({
        "cosine_gap": gap,
        "cosine_gap_samples": config.samples,
        "sweep_max_gap": sweep_gap,
        "kinks": kink_list,
    }))
}

fn run_chsh(
    config: &ExperimentConfig,
    p: &ChshParams,
    out: &mut Artifacts,
) -> Result<Value, RunError> {
    let model = bell_sgn_family(p.phase_a, p.phase_b);
    let ang = p.angles;
    let exact = |x: f64, y: f64| lhv_correlation_exact(&model, x, y);
    let s_qm = chsh(qm_correlation, ang.a, ang.a2, ang.b, ang.b2);
    let s_lhv = chsh(exact, ang.a, ang.a2, ang.b, ang.b2);

    let pairs = [
        ("a,b", ang.a, ang.b, 1.0),
        ("a,b2", ang.a, ang.b2, 1.0),
        ("a2,b", ang.a2, ang.b, 1.0),
        ("a2,b2", ang.a2, ang.b2, -1.0),
    ];
    let mut rows = Vec::new();
    let mut pair_results = Vec::new();
    let mut s_mc = 0.0;
    let mut var_mc = 0.0;
    for (i, &(label, x, y, coeff)) in pairs.iter().enumerate() {
        let seed = config.seed.wrapping_add(i as u64);
        let est = lhv_correlation_mc(&model, x, y, config.samples, seed).map_err(invalid)?;
        s_mc += coeff * est.value;
        var_mc += est.std_error * est.std_error;
        let (e_qm, e_lhv) = (qm_correlation(x, y), exact(x, y));
        rows.push(vec![
            label.to_string().into(),
            x.into(),
            y.into(),
            e_qm.into(),
            e_lhv.into(),
            est.value.into(),
            est.std_error.into(),
            (seed as i64).into(),
        ]);
        pair_results.push(json!({
            "pair": label,
            "E_qm": e_qm,
            "E_lhv": e_lhv,
            "E_lhv_mc": est,
        }));
    }
    out.csv(
        "chsh_pairs.csv",
        &[
            "pair",
            "a",
            "b",
            "E_qm",
            "E_lhv",
            "E_lhv_mc",
            "std_error",
            "seed",
        ],
        rows,
    )?;

    let curve = p
        .sweep
        .points()
        .into_iter()
        .map(|d| {
            vec![
                d.into(),
                qm_correlation(d, 0.0).into(),
                exact(d, 0.0).into(),
            ]
        })
        .collect();
    out.csv("lhv_curve.csv", &["delta", "E_qm", "E_lhv"], curve)?;

    Ok(json!({
        "model": p.model,
        "S_qm": s_qm,
        "S_lhv": s_lhv,
        "S_lhv_mc": s_mc,
        "S_lhv_mc_std_error": var_mc.sqrt(),
        "lhv_bound_holds": s_lhv.abs() <= 2.0 + 1e-6,
        "pairs": pair_results,
    }))
}

fn verdict_json(system: &ParitySystem, v: &ParityVerdict) -> Value {
    let multiplicities = v.certificate.as_ref().map(|c| {
        system
            .variables()
            .iter()
            .cloned()
            .zip(system.multiplicities(c))
            .collect::<std::collections::BTreeMap<_, _>>()
    });
    json!({
        "satisfiable": v.satisfiable,
        "witness": v.witness_map(system),
        "certificate": v.certificate,
        "certificate_multiplicities": multiplicities,
    })
}

fn run_ghz(p: &GhzParams, out: &mut Artifacts) -> Result<Value, RunError> {
    let system = p.system.clone().unwrap_or_else(build_ghz_parity_system);
    let solved = solve_parity(&system).map_err(invalid)?;
    let enumerated = match enumerate_parity(&system) {
        Ok(v) => Some(v),
        Err(ParityError::TooManyVariables { .. } | ParityError::TooManyConstraints { .. }) => None,
        Err(e) => return Err(invalid(e)),
    };

    let lattice = achievable_values(p.n, p.m).map_err(invalid)?;
    let values = lattice.values();
    out.csv(
        "lattice.csv",
        &["k", "numerator", "denominator", "value"],
        values
            .iter()
            .enumerate()
            .map(|(k, r)| {
                vec![
                    k.into(),
                    (*r.numer()).into(),
                    (*r.denom()).into(),
                    ratio_to_f64(*r).into(),
                ]
            })
            .collect(),
    )?;

    let rows = p
        .sweep
        .points()
        .into_iter()
        .map(|phase| {
            let target = -phase.cos();
            let (nearest, distance) = lattice.nearest(target);
            vec![
                phase.into(),
                target.into(),
                ratio_to_f64(nearest).into(),
                distance.into(),
            ]
        })
        .collect();
    out.csv(
        "target_gap.csv",
        &["phase_sum", "target", "nearest", "distance"],
        rows,
    )?;

    let mut result = verdict_json(&system, &solved);
    let obj = result.as_object_mut().expect("object");
    obj.insert(
        "system".into(),
        serde_json::to_value(&system).expect("serializable"),
    );
    obj.insert(
        "enumeration".into(),
        enumerated
            .as_ref()
            .map_or(Value::Null, |v| verdict_json(&system, v)),
    );
    obj.insert(
        "routes_agree".into(),
        enumerated.as_ref().map_or(Value::Null, |v| {
            Value::Bool(v.satisfiable == solved.satisfiable)
        }),
    );
    obj.insert(
        "lattice".into(),
        json!({
            "n": p.n,
            "m": p.m,
            "size": lattice.len(),
            "values": values.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        }),
    );
    Ok(result)
}

fn run_optical(
    config: &ExperimentConfig,
    p: &OpticalParams,
    out: &mut Artifacts,
) -> Result<Value, RunError> {
    let rows = p
        .sweep
        .points()
        .into_iter()
        .map(|d| {
            let probs = coincidence_probabilities(d, 0.0);
            vec![
                d.into(),
                probs.p_pp().into(),
                probs.p_mm().into(),
                probs.p_pm().into(),
                probs.p_mp().into(),
                correlation_coefficient(&probs).into(),
                optical_correlation(d, 0.0).into(),
                SourceModel::SharedAxis.closed_form_e(d).into(),
                SourceModel::Anticorrelated.closed_form_e(d).into(),
            ]
        })
        .collect();
    out.csv(
        "optical.csv",
        &[
            "delta",
            "p_pp",
            "p_mm",
            "p_pm",
            "p_mp",
            "E_coefficient",
            "E_optical",
            "E_shared_axis",
            "E_anticorrelated",
        ],
        rows,
    )?;

    let counts =
        simulate_coincidences(p.model, p.a, p.b, config.samples, config.seed).map_err(invalid)?;
    out.json("counts.json", &counts)?;
    let est = estimate_e_from_counts(&counts).map_err(invalid)?;
    let delta = p.a - p.b;
    let closed = p.model.closed_form_e(delta);
    Ok(json!({
        "model": p.model,
        "counts": counts,
        "counts_file": "counts.json",
        "E_empirical": est,
        "E_closed_form": closed,
        "E_optical": optical_correlation(p.a, p.b),
        "z_score": est.z_score(closed),
        "model_gap": max_model_gap(p.model, 10_000),
    }))
}
