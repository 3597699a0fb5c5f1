//! JSON experiment configs.
//!
//! ```json
//! {"seed": 7, "out": "results", "experiment": {"kind": "wrga-rate", "params": {"p": 3.0}}}
//! ```
//!
//! Missing parameters take their defaults; unknown fields are rejected with
//! the path of the offending field.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::greedy::{recursion_check, wrga_run, GreedyTrace, SelectionPolicy, WeaknessSequence};
use crate::harness::criteria::{
    ball_net_outcome, entropy_study, hull_rate_study, multiscale_outcome, recursion_study, sigma_outcome,
    wrga_rate_study, EntropyParams, HullRateParams, MultiscaleParams, Outcome, RecursionParams, SystemKind,
    WrgaRateParams,
};
use crate::harness::verify::verify_all;
use crate::rng::substream;
use crate::space::LpSpace;
use crate::systems::{sample_hull, SymmetricSystem};

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    WrgaRate(WrgaRateParams),
    RecursionSuite(RecursionParams),
    HullRate(HullRateParams),
    SigmaBound(SigmaParams),
    EntropyCurve(EntropyParams),
    BallNet(BallNetParams),
    Multiscale(MultiscaleParams),
    Trace(TraceParams),
    VerifyAll,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaParams {
    pub agreement_seeds: usize,
    pub tail_samples: usize,
}

impl Default for SigmaParams {
    fn default() -> Self {
        Self {
            agreement_seeds: 100,
            tail_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallNetParams {
    pub d_max: usize,
    pub k_max: usize,
    pub stress_points: usize,
}

impl Default for BallNetParams {
    fn default() -> Self {
        Self {
            d_max: 4,
            k_max: 16,
            stress_points: 100_000,
        }
    }
}

/// A single WRGA run. The target is `f` when given, otherwise a seeded
/// sample from the `hull_q`-hull of the system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceParams {
    pub dim: usize,
    pub p: f64,
    pub system: SystemKind,
    pub n_atoms: usize,
    pub f: Option<Vec<f64>>,
    pub hull_q: f64,
    pub m_max: usize,
    pub tau: WeaknessSequence,
    pub policy: SelectionPolicy,
    pub b: Option<f64>,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            dim: 8,
            p: 2.0,
            system: SystemKind::Canonical,
            n_atoms: 16,
            f: None,
            hull_q: 1.0,
            m_max: 20,
            tau: WeaknessSequence::greedy(),
            policy: SelectionPolicy::Exact,
            b: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: format!("experiment.params.{path}"),
                message: message.into(),
            })
        };
        match &self.experiment {
            Experiment::WrgaRate(p) => {
                LpSpace::new(p.dim, p.p)?;
                p.tau.validate()?;
                if p.runs == 0 || p.m_max == 0 {
                    return bad("runs", "runs and m_max must be positive");
                }
            }
            Experiment::RecursionSuite(p) => {
                if p.p_values.is_empty() || p.taus.is_empty() || p.runs_per_group == 0 {
                    return bad("p_values", "need at least one p, one t and one run");
                }
                for &t in &p.taus {
                    WeaknessSequence::constant(t)?;
                }
            }
            Experiment::HullRate(p) => {
                LpSpace::new(p.dim, p.p)?;
                if !(p.hull_q > 0.0 && p.hull_q <= 1.0) {
                    return Err(Error::InvalidHullExponent(p.hull_q));
                }
                if p.m_values.len() < 2 || p.m_values.contains(&0) {
                    return bad("m_values", "need at least two positive m values");
                }
            }
            Experiment::EntropyCurve(p) => {
                if p.samples < 2 {
                    return bad("samples", "need at least two samples");
                }
            }
            Experiment::BallNet(p) => {
                if p.d_max == 0 {
                    return bad("d_max", "must be positive");
                }
            }
            Experiment::Trace(p) => {
                LpSpace::new(p.dim, p.p)?;
                p.tau.validate()?;
                if let Some(f) = &p.f {
                    if f.len() != p.dim {
                        return Err(Error::DimensionMismatch {
                            expected: p.dim,
                            actual: f.len(),
                        });
                    }
                }
            }
            Experiment::SigmaBound(_) | Experiment::Multiscale(_) | Experiment::VerifyAll => {}
        }
        Ok(())
    }
}

/// Runs a single WRGA trace described by `params`.
pub fn run_trace(params: &TraceParams, seed: u64) -> Result<GreedyTrace> {
    let space = LpSpace::new(params.dim, params.p)?;
    let sys = Arc::new(match params.system {
        SystemKind::Canonical => SymmetricSystem::canonical(space),
        SystemKind::Random => SymmetricSystem::random(space, params.n_atoms, substream(seed, "system"))?,
    });
    let f = match &params.f {
        Some(f) => f.clone(),
        None => sample_hull(&sys, params.hull_q, substream(seed, "target"))?.synthesize(),
    };
    wrga_run(&sys, &f, &params.tau, params.m_max, params.policy, params.b, substream(seed, "policy"))
}

fn study(id: &str, name: &str, result: &impl Serialize, passed: bool) -> Result<Outcome> {
    let mut o = Outcome::new(id, name);
    o.passed = passed;
    if let Value::Object(m) = serde_json::to_value(result)? {
        o.metrics = m;
    }
    Ok(o)
}

/// Executes a config and returns its outcomes. Artifacts are written by the
/// caller.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Outcome>> {
    let seed = cfg.seed;
    Ok(match &cfg.experiment {
        Experiment::WrgaRate(p) => {
            let (res, table) = wrga_rate_study(p, seed)?;
            let pass = res.fit.is_some_and(|f| f.pass);
            let mut o = study("wrga-rate", "wrga-rate", &res, pass)?;
            o.summary = format!("slope {:.4}, target {:.4}", res.fit.map_or(f64::NAN, |f| f.slope), res.target);
            o.tables.push(("envelope.csv".into(), table));
            vec![o]
        }
        Experiment::RecursionSuite(p) => {
            let (groups, steps, env) = recursion_study(p, seed)?;
            let violations: usize = groups.iter().map(|g| g.violations).sum();
            let mut o = study("recursion-suite", "recursion-suite", &serde_json::json!({ "groups": groups }), violations == 0)?;
            o.summary = format!("{violations} violations in {} groups", groups.len());
            o.tables.push(("recursion_steps.csv".into(), steps));
            o.tables.push(("rate_envelope.csv".into(), env));
            vec![o]
        }
        Experiment::HullRate(p) => {
            let (res, table) = hull_rate_study(p, seed)?;
            let pass = res.fit.is_some_and(|f| f.pass);
            let mut o = study("hull-rate", "hull-rate", &res, pass)?;
            o.summary = format!("slope {:.4}, target {:.4}", res.fit.map_or(f64::NAN, |f| f.slope), res.target);
            o.tables.push(("errors.csv".into(), table));
            vec![o]
        }
        Experiment::SigmaBound(p) => vec![sigma_outcome(seed, p.agreement_seeds, p.tail_samples)?],
        Experiment::EntropyCurve(p) => {
            let (res, table) = entropy_study(p, seed)?;
            let mut o = study("entropy-curve", "entropy-curve", &res, res.monotone && res.ordered)?;
            o.summary = format!("upper slope {:.4}, shape slope {:.4}", res.slope_upper, res.slope_shape);
            o.tables.push(("entropy.csv".into(), table));
            vec![o]
        }
        Experiment::BallNet(p) => vec![ball_net_outcome(seed, p.d_max, p.k_max, p.stress_points)?],
        Experiment::Multiscale(p) => vec![multiscale_outcome(p, seed)?],
        Experiment::Trace(p) => {
            let trace = run_trace(p, seed)?;
            let mut o = Outcome::new("trace", "trace");
            if let Some(_b) = p.b {
                let space = LpSpace::new(p.dim, p.p)?;
                let report = recursion_check(&trace, &space, &p.tau, 1e-8)?;
                o.passed = report.passed();
                o.metric("recursion_failures", report.failures);
            }
            o.metric("steps", trace.records.len());
            o.metric("final_residual", trace.final_residual());
            o.summary = format!("{} steps, final residual {:.6e}", trace.records.len(), trace.final_residual());
            o.texts.push(("trace.jsonl".into(), trace.to_jsonl()?));
            vec![o]
        }
        Experiment::VerifyAll => verify_all(seed, None)?.outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_params() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": {"kind": "wrga-rate", "params": {"p": 3.0}}}"#).unwrap();
        assert_eq!(cfg.seed, 42);
        match cfg.experiment {
            Experiment::WrgaRate(p) => {
                assert_eq!(p.p, 3.0);
                assert_eq!(p.dim, 40);
            }
            other => panic!("unexpected {other:?}"),
        }
        let cfg = ExperimentConfig::from_json(r#"{"seed": 1, "experiment": {"kind": "verify-all"}}"#).unwrap();
        assert!(matches!(cfg.experiment, Experiment::VerifyAll));
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = ExperimentConfig::from_json(r#"{"experiment": {"kind": "wrga-rate", "params": {"dimm": 3}}}"#)
            .unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "experiment.params.dimm");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_validation() {
        let bad_p = r#"{"experiment": {"kind": "trace", "params": {"p": 0.5}}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad_p), Err(Error::InvalidExponent(_))));
        let bad_f = r#"{"experiment": {"kind": "trace", "params": {"dim": 3, "f": [1.0]}}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad_f), Err(Error::DimensionMismatch { .. })));
        let bad_kind = r#"{"experiment": {"kind": "nope"}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad_kind), Err(Error::Config { .. })));
    }

    #[test]
    fn trace_from_config_matches_worked_example() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": {"kind": "trace", "params": {"dim": 2, "f": [0.5, 0.5], "m_max": 2, "b": 0.0}}}"#,
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert!(out[0].passed);
        assert_eq!(out[0].metric_u64("steps"), Some(2));
        assert!((out[0].metric_f64("final_residual").unwrap() - 0.05f64.sqrt()).abs() < 1e-9);
    }
}
