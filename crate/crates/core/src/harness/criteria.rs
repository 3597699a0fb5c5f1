//! Parameterized studies and the verification criteria built from them.
//!
//! Every study is a pure function of its parameters and seed. Independent
//! runs inside a study execute on the rayon pool and are collected in index
//! order, so outputs do not depend on scheduling.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::entropy::{
    compose_product_net, composed_ball_entropy_bound, empirical_entropy_curve, grid_net_ball, grid_scale_nets,
    multiscale_compose, stress_test_grid, synthetic_hr_member, zero_hr_member, Ambient, EpsNet, MultiscaleBudget,
    Subspace,
};
use crate::error::{Error, Result};
use crate::greedy::{recursion_check, two_stage_mterm, wrga_run, SelectionPolicy, WeaknessSequence};
use crate::harness::csv::Table;
use crate::harness::fit::{fit_rate, RateFit, DEFAULT_SLACK};
use crate::oracle::{sigma_m_bruteforce, sigma_m_canonical, tail_bound_check};
use crate::rng::{seeded, substream};
use crate::space::{dot, lp_norm, LpSpace};
use crate::systems::{hull_distance_l2, sample_hull, sample_hull_flat, sample_hull_sparse, SymmetricSystem};

/// Result of one study or criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: Map<String, Value>,
    /// `(file name, table)` artifacts.
    pub tables: Vec<(String, Table)>,
    /// Extra text artifacts such as JSON lines.
    pub texts: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(id: &str, name: &str) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: true,
            summary: String::new(),
            metrics: Map::new(),
            tables: Vec::new(),
            texts: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.into(), v.into());
    }

    pub fn failed(id: &str, name: &str, err: &Error) -> Self {
        let mut o = Self::new(id, name);
        o.passed = false;
        o.summary = format!("error: {err}");
        o.metric("error", err.to_string());
        o
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn metric_u64(&self, key: &str) -> Option<u64> {
        self.metrics.get(key).and_then(Value::as_u64)
    }
}

fn normal_vec(rng: &mut crate::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Which kind of finite system a study uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Canonical,
    #[default]
    Random,
}

fn build_system(kind: SystemKind, space: LpSpace, n_atoms: usize, seed: u64) -> Result<Arc<SymmetricSystem>> {
    Ok(Arc::new(match kind {
        SystemKind::Canonical => SymmetricSystem::canonical(space),
        SystemKind::Random => SymmetricSystem::random(space, n_atoms, seed)?,
    }))
}

// ---------------------------------------------------------------------------
// 1. duality

pub fn duality_suite(seed: u64, pairs: usize) -> Result<Outcome> {
    let mut o = Outcome::new("1", "duality");
    let ps = [1.5, 2.0, 3.0, 4.0];
    let dims = [2usize, 10, 100];
    let mut rng = seeded(seed);
    let (mut worst_pairing, mut worst_dual, mut worst_bound) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut table = Table::new(&["pair", "p", "dim", "pairing_rel_err", "dual_norm_err", "max_abs_on_unit"]);
    for i in 0..pairs {
        let p = ps[i % ps.len()];
        let dim = dims[(i / ps.len()) % dims.len()];
        let space = LpSpace::new(dim, p)?;
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let f: Vec<f64> = normal_vec(&mut rng, dim).into_iter().map(|v| v * scale).collect();
        let nf = space.norm(&f)?;
        let g = space.norming_functional(&f)?;
        let pairing = (dot(&g, &f) - nf).abs() / nf;
        let dual = (space.dual_norm(&g)? - 1.0).abs();
        let mut bound = 0.0_f64;
        for _ in 0..4 {
            let h = normal_vec(&mut rng, dim);
            let nh = space.norm(&h)?;
            bound = bound.max((dot(&g, &h) / nh).abs());
        }
        worst_pairing = worst_pairing.max(pairing);
        worst_dual = worst_dual.max(dual);
        worst_bound = worst_bound.max(bound);
        table.push(vec![i.into(), p.into(), dim.into(), pairing.into(), dual.into(), bound.into()]);
    }
    o.passed = worst_pairing <= 1e-9 && worst_dual <= 1e-9 && worst_bound <= 1.0 + 1e-9;
    o.metric("pairs", pairs);
    o.metric("max_pairing_rel_err", worst_pairing);
    o.metric("max_dual_norm_err", worst_dual);
    o.metric("max_abs_functional_on_unit", worst_bound);
    o.summary = format!("{pairs} pairs: pairing err {worst_pairing:.2e}, dual norm err {worst_dual:.2e}");
    o.tables.push(("duality.csv".into(), table));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 2. worked example

pub fn worked_example() -> Result<Outcome> {
    let mut o = Outcome::new("2", "worked-example");
    let sys = SymmetricSystem::canonical(LpSpace::new(2, 2.0)?);
    let trace = wrga_run(&sys, &[0.5, 0.5], &WeaknessSequence::greedy(), 2, SelectionPolicy::Exact, Some(0.0), 0)?;
    let res: Vec<f64> = trace.records.iter().map(|r| r.residual_norm).collect();
    let lam: Vec<f64> = trace.records.iter().map(|r| r.lambda).collect();
    let expected_res = [0.5, 0.05f64.sqrt()];
    let expected_lam = [0.5, 0.4];
    let err_res = res.iter().zip(&expected_res).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let err_lam = lam.iter().zip(&expected_lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let report = recursion_check(&trace, sys.space(), &WeaknessSequence::greedy(), 1e-8)?;
    let err_g = (trace.approximant[0] - 0.3).abs().max((trace.approximant[1] - 0.4).abs());
    o.passed = res.len() == 2 && err_res <= 1e-9 && err_lam <= 1e-9 && err_g <= 1e-9 && report.passed();
    o.metric("residual_1", res.first().copied().unwrap_or(f64::NAN));
    o.metric("residual_2", res.get(1).copied().unwrap_or(f64::NAN));
    o.metric("lambda_1", lam.first().copied().unwrap_or(f64::NAN));
    o.metric("lambda_2", lam.get(1).copied().unwrap_or(f64::NAN));
    o.metric("max_residual_err", err_res);
    o.metric("max_lambda_err", err_lam);
    o.metric("recursion_failures", report.failures);
    o.metric("g2_x", trace.approximant[0]);
    o.metric("g2_y", trace.approximant[1]);
    o.summary = format!("residuals {res:?}, lambdas {lam:?}");
    o.texts.push(("trace.jsonl".into(), trace.to_jsonl()?));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 3-4. recursion inequalities and the rate shape

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursionParams {
    pub p_values: Vec<f64>,
    pub taus: Vec<f64>,
    pub dim: usize,
    pub n_atoms: usize,
    pub runs_per_group: usize,
    pub m_max: usize,
    pub tol: f64,
    pub fit_range: (f64, f64),
    pub slack: f64,
}

impl Default for RecursionParams {
    fn default() -> Self {
        Self {
            p_values: vec![1.5, 2.0, 3.0],
            taus: vec![1.0, 0.5],
            dim: 40,
            n_atoms: 80,
            runs_per_group: 50,
            m_max: 60,
            tol: 1e-8,
            fit_range: (8.0, 60.0),
            slack: DEFAULT_SLACK,
        }
    }
}

/// Per `(p, t)` group of the recursion study.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionGroup {
    pub p: f64,
    pub t: f64,
    pub runs: usize,
    pub checked_steps: usize,
    pub violations: usize,
    pub min_smooth_slack: f64,
    pub min_power_slack: f64,
    pub fit: Option<RateFit>,
    /// `−1/p*` with `p* = max(p/(p−1), 2)`.
    pub target: f64,
    /// `slope ≤ target + slack`.
    pub rate_pass: bool,
}

/// Runs WRGA on seeded `f ∈ A₁(𝒟)` (so `b = 0`) and checks every step.
/// With `t < 1` runs alternate between the lazy and random weak policies.
pub fn recursion_study(params: &RecursionParams, seed: u64) -> Result<(Vec<RecursionGroup>, Table, Table)> {
    let mut groups = Vec::new();
    let mut steps_table = Table::new(&["p", "t", "run", "step", "a_prev", "a_m", "smooth_slack", "power_slack", "lambda1"]);
    let mut env_table = Table::new(&["p", "t", "m", "max_a_m"]);
    for &p in &params.p_values {
        for &t in &params.taus {
            let space = LpSpace::new(params.dim, p)?;
            let tau = WeaknessSequence::constant(t)?;
            let group_seed = substream(seed, &format!("recursion/p={p}/t={t}"));
            let runs: Vec<Result<_>> = (0..params.runs_per_group)
                .into_par_iter()
                .map(|run| {
                    let s = substream(group_seed, &format!("run-{run}"));
                    let sys = Arc::new(SymmetricSystem::random(space, params.n_atoms, substream(s, "system"))?);
                    let f = sample_hull(&sys, 1.0, substream(s, "target"))?.synthesize();
                    let policy = if t >= 1.0 {
                        SelectionPolicy::Exact
                    } else if run % 2 == 0 {
                        SelectionPolicy::LazyWeak
                    } else {
                        SelectionPolicy::RandomWeak
                    };
                    let trace = wrga_run(&sys, &f, &tau, params.m_max, policy, Some(0.0), substream(s, "policy"))?;
                    let report = recursion_check(&trace, &space, &tau, params.tol)?;
                    Ok((trace, report))
                })
                .collect();
            let mut envelope = vec![0.0_f64; params.m_max + 1];
            let mut g = RecursionGroup {
                p,
                t,
                runs: params.runs_per_group,
                checked_steps: 0,
                violations: 0,
                min_smooth_slack: f64::INFINITY,
                min_power_slack: f64::INFINITY,
                fit: None,
                target: -1.0 / space.conj_p(),
                rate_pass: false,
            };
            for (run, r) in runs.into_iter().enumerate() {
                let (trace, report) = r?;
                g.violations += report.failures;
                for s in &report.steps {
                    if s.checked {
                        g.checked_steps += 1;
                        g.min_smooth_slack = g.min_smooth_slack.min(s.smooth_slack);
                        g.min_power_slack = g.min_power_slack.min(s.power_slack);
                        steps_table.push(vec![
                            p.into(),
                            t.into(),
                            run.into(),
                            s.step.into(),
                            s.a_prev.into(),
                            s.a_m.into(),
                            s.smooth_slack.into(),
                            s.power_slack.into(),
                            s.lambda1.into(),
                        ]);
                    }
                }
                for (m, a) in trace.residual_norms().into_iter().enumerate() {
                    envelope[m] = envelope[m].max(a);
                }
            }
            let pts: Vec<(f64, f64)> = envelope.iter().enumerate().skip(1).map(|(m, &a)| (m as f64, a)).collect();
            for &(m, a) in &pts {
                env_table.push(vec![p.into(), t.into(), (m as usize).into(), a.into()]);
            }
            g.fit = fit_rate(&pts, g.target, params.slack, Some(params.fit_range)).ok();
            g.rate_pass = g.fit.is_some_and(|f| f.slope <= g.target + params.slack);
            groups.push(g);
        }
    }
    Ok((groups, steps_table, env_table))
}

pub fn recursion_outcomes(seed: u64, params: &RecursionParams) -> Result<(Outcome, Outcome)> {
    let (groups, steps, env) = recursion_study(params, seed)?;
    let mut c3 = Outcome::new("3", "recursion-inequalities");
    let mut c4 = Outcome::new("4", "greedy-rate-shape");
    let violations: usize = groups.iter().map(|g| g.violations).sum();
    let checked: usize = groups.iter().map(|g| g.checked_steps).sum();
    c3.passed = violations == 0 && checked > 0;
    c3.metric("violations", violations);
    c3.metric("checked_steps", checked);
    c3.metric(
        "min_smooth_slack",
        groups.iter().map(|g| g.min_smooth_slack).fold(f64::INFINITY, f64::min),
    );
    c3.metric(
        "min_power_slack",
        groups.iter().map(|g| g.min_power_slack).fold(f64::INFINITY, f64::min),
    );
    c3.summary = format!("{violations} violations over {checked} checked steps");
    c3.tables.push(("recursion_steps.csv".into(), steps));

    c4.passed = groups.iter().all(|g| g.rate_pass);
    let mut worst_margin = f64::INFINITY;
    let mut fits = Vec::new();
    for g in &groups {
        let slope = g.fit.map_or(f64::NAN, |f| f.slope);
        worst_margin = worst_margin.min(g.target + params.slack - slope);
        fits.push(json!({"p": g.p, "t": g.t, "slope": slope, "target": g.target, "pass": g.rate_pass}));
    }
    c4.metric("groups", Value::Array(fits));
    c4.metric("worst_margin", worst_margin);
    c4.summary = format!(
        "slopes {}",
        groups
            .iter()
            .map(|g| format!("p={} t={}: {:.3} (<= {:.3})", g.p, g.t, g.fit.map_or(f64::NAN, |f| f.slope), g.target + params.slack))
            .collect::<Vec<_>>()
            .join("; ")
    );
    c4.tables.push(("rate_envelope.csv".into(), env));
    Ok((c3, c4))
}

// ---------------------------------------------------------------------------
// 5. WRGA rate study in general, Hilbert boundedness in particular

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WrgaRateParams {
    pub dim: usize,
    pub p: f64,
    pub system: SystemKind,
    pub n_atoms: usize,
    pub runs: usize,
    pub m_max: usize,
    pub tau: WeaknessSequence,
    pub policy: SelectionPolicy,
    pub fit_range: (f64, f64),
    pub slack: f64,
}

impl Default for WrgaRateParams {
    fn default() -> Self {
        Self {
            dim: 40,
            p: 2.0,
            system: SystemKind::Random,
            n_atoms: 80,
            runs: 50,
            m_max: 128,
            tau: WeaknessSequence::greedy(),
            policy: SelectionPolicy::Exact,
            fit_range: (8.0, 128.0),
            slack: DEFAULT_SLACK,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WrgaRateResult {
    /// `max_run ‖f_m‖` for `m = 0..=m_max`.
    pub envelope: Vec<f64>,
    pub fit: Option<RateFit>,
    pub target: f64,
    /// `max_{run, m} m ‖f_m‖²`.
    pub max_m_residual_sq: f64,
    /// Weight-reconstruction and hull-membership worst cases.
    pub max_weight_reconstruction_err: f64,
    pub max_weight_total: f64,
    pub max_support_excess: i64,
    pub max_monotonicity_violation: f64,
    pub min_weak_certificate: f64,
}

pub fn wrga_rate_study(params: &WrgaRateParams, seed: u64) -> Result<(WrgaRateResult, Table)> {
    let space = LpSpace::new(params.dim, params.p)?;
    params.tau.validate()?;
    let runs: Vec<Result<_>> = (0..params.runs)
        .into_par_iter()
        .map(|run| {
            let s = substream(seed, &format!("run-{run}"));
            let sys = build_system(params.system, space, params.n_atoms, substream(s, "system"))?;
            let f = sample_hull(&sys, 1.0, substream(s, "target"))?.synthesize();
            let trace = wrga_run(&sys, &f, &params.tau, params.m_max, params.policy, Some(0.0), substream(s, "policy"))?;
            let recon = sys.synthesize(&trace.weights.signed_coefs())?;
            let diff: Vec<f64> = recon.iter().zip(&trace.approximant).map(|(a, b)| a - b).collect();
            Ok((trace, space.norm(&diff)?))
        })
        .collect();
    let mut res = WrgaRateResult {
        envelope: vec![0.0; params.m_max + 1],
        fit: None,
        target: -1.0 / space.conj_p(),
        max_m_residual_sq: 0.0,
        max_weight_reconstruction_err: 0.0,
        max_weight_total: 0.0,
        max_support_excess: i64::MIN,
        max_monotonicity_violation: f64::NEG_INFINITY,
        min_weak_certificate: f64::INFINITY,
    };
    for r in runs {
        let (trace, recon_err) = r?;
        res.max_weight_reconstruction_err = res.max_weight_reconstruction_err.max(recon_err);
        res.max_weight_total = res.max_weight_total.max(trace.weights.total());
        res.max_support_excess = res
            .max_support_excess
            .max(trace.weights.support_size() as i64 - trace.records.len() as i64);
        let norms = trace.residual_norms();
        for (m, &a) in norms.iter().enumerate() {
            res.envelope[m] = res.envelope[m].max(a);
            res.max_m_residual_sq = res.max_m_residual_sq.max(m as f64 * a * a);
            if m > 0 {
                res.max_monotonicity_violation = res.max_monotonicity_violation.max(a - norms[m - 1]);
            }
        }
        for rec in &trace.records {
            res.min_weak_certificate = res.min_weak_certificate.min(rec.weak_value - rec.t_m * rec.sup_value);
        }
    }
    let pts: Vec<(f64, f64)> = res.envelope.iter().enumerate().skip(1).map(|(m, &a)| (m as f64, a)).collect();
    res.fit = fit_rate(&pts, res.target, params.slack, Some(params.fit_range)).ok();
    let mut table = Table::new(&["m", "max_residual", "m_times_residual_sq"]);
    for (m, &a) in res.envelope.iter().enumerate() {
        table.push(vec![m.into(), a.into(), (m as f64 * a * a).into()]);
    }
    Ok((res, table))
}

pub const HILBERT_CONSTANT: f64 = 8.0;

pub fn hilbert_outcome(seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new("5", "hilbert-boundedness");
    let params = WrgaRateParams::default();
    let (res, table) = wrga_rate_study(&params, seed)?;
    o.passed = res.max_m_residual_sq <= HILBERT_CONSTANT
        && res.max_weight_reconstruction_err <= 1e-9
        && res.max_weight_total <= 1.0 + 1e-9
        && res.max_support_excess <= 0
        && res.max_monotonicity_violation <= 1e-12
        && res.min_weak_certificate >= -1e-12;
    o.metric("max_m_residual_sq", res.max_m_residual_sq);
    o.metric("max_weight_reconstruction_err", res.max_weight_reconstruction_err);
    o.metric("max_weight_total", res.max_weight_total);
    o.metric("max_support_excess", res.max_support_excess);
    o.metric("max_monotonicity_violation", res.max_monotonicity_violation);
    o.metric("min_weak_certificate", res.min_weak_certificate);
    o.metric("slope", res.fit.map_or(f64::NAN, |f| f.slope));
    o.summary = format!("max m*|f_m|^2 = {:.4} (bound {HILBERT_CONSTANT})", res.max_m_residual_sq);
    o.tables.push(("hilbert_envelope.csv".into(), table));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 6. offset convergence

pub fn offset_outcome(seed: u64, runs: usize) -> Result<Outcome> {
    let mut o = Outcome::new("6", "offset-convergence");
    let (dim, span_dim, n_atoms, m_max) = (40usize, 30usize, 60usize, 128usize);
    let target_b = 0.3;
    let space = LpSpace::new(dim, 2.0)?;
    let mut table = Table::new(&["run", "b", "final_residual", "gap", "hull_b_lower", "hull_b_upper", "recursion_failures"]);
    let results: Vec<Result<_>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let s = substream(seed, &format!("run-{run}"));
            let mut rng = seeded(substream(s, "system"));
            // atoms live on the first span_dim coordinates, v on the rest
            let atoms: Vec<Vec<f64>> = (0..n_atoms)
                .map(|_| {
                    let mut g = normal_vec(&mut rng, span_dim);
                    let n = lp_norm(&g, 2.0);
                    g.iter_mut().for_each(|v| *v /= n);
                    g.resize(dim, 0.0);
                    g
                })
                .collect();
            let sys = Arc::new(SymmetricSystem::new(space, atoms)?);
            let phi = sample_hull(&sys, 1.0, substream(s, "target"))?.synthesize();
            let mut v = vec![0.0; dim];
            let tail = normal_vec(&mut rng, dim - span_dim);
            let nt = lp_norm(&tail, 2.0);
            for (i, t) in tail.iter().enumerate() {
                v[span_dim + i] = target_b * t / nt;
            }
            let b = lp_norm(&v, 2.0);
            let f: Vec<f64> = phi.iter().zip(&v).map(|(a, c)| a + c).collect();
            let hd = hull_distance_l2(&sys, &f, 1e-10, 50_000)?;
            let tau = WeaknessSequence::greedy();
            let trace = wrga_run(&sys, &f, &tau, m_max, SelectionPolicy::Exact, Some(b), substream(s, "policy"))?;
            let report = recursion_check(&trace, &space, &tau, 1e-8)?;
            Ok((b, trace.final_residual(), hd.b_lower, hd.b_upper, report.failures))
        })
        .collect();
    let (mut worst_gap, mut failures, mut bracket_ok) = (0.0_f64, 0usize, true);
    for (run, r) in results.into_iter().enumerate() {
        let (b, fin, lo, hi, fails) = r?;
        let gap = (fin - b).abs();
        worst_gap = worst_gap.max(gap);
        failures += fails;
        bracket_ok &= lo <= b + 1e-9 && b <= hi + 1e-9;
        table.push(vec![run.into(), b.into(), fin.into(), gap.into(), lo.into(), hi.into(), fails.into()]);
    }
    o.passed = worst_gap <= 0.05 && failures == 0 && bracket_ok;
    o.metric("max_gap", worst_gap);
    o.metric("recursion_failures", failures);
    o.metric("hull_bracket_contains_b", bracket_ok);
    o.summary = format!("max | |f_128| - b | = {worst_gap:.4}, recursion failures {failures}");
    o.tables.push(("offset.csv".into(), table));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 7. σ_m exactness and the sorted-tail inequality

pub fn sigma_outcome(seed: u64, agreement_seeds: usize, tail_samples: usize) -> Result<Outcome> {
    let mut o = Outcome::new("7", "sigma-exactness");
    let mut rng = seeded(substream(seed, "agreement"));
    let mut agree = Table::new(&["seed", "p", "dim", "m", "canonical", "brute_force", "abs_diff"]);
    let (mut worst_l2, mut worst_other) = (0.0_f64, 0.0_f64);
    for i in 0..agreement_seeds {
        for p in [2.0, 1.5, 3.0] {
            // the p = 2 cases are the exact criterion; others are best-effort upper bounds
            if p != 2.0 && i % 5 != 0 {
                continue;
            }
            let dim = rng.gen_range(2..=10usize);
            let m = rng.gen_range(1..=3usize.min(dim));
            let x = normal_vec(&mut rng, dim);
            let sys = SymmetricSystem::canonical(LpSpace::new(dim, p)?);
            let c = sigma_m_canonical(&x, m, p)?;
            let b = sigma_m_bruteforce(&sys, &x, m)?;
            let d = (c.error - b.error).abs();
            if p == 2.0 {
                worst_l2 = worst_l2.max(d);
            } else {
                worst_other = worst_other.max(d);
            }
            agree.push(vec![i.into(), p.into(), dim.into(), m.into(), c.error.into(), b.error.into(), d.into()]);
        }
    }
    let mut tails = Table::new(&["q", "p", "sample", "m", "lhs", "rhs", "pass"]);
    let mut tail_failures = 0usize;
    let mut sigma_bound_failures = 0usize;
    let n = 32;
    let sys = Arc::new(SymmetricSystem::canonical(LpSpace::new(n, 2.0)?));
    for (q, p) in [(1.0, 2.0), (0.5, 2.0), (1.0, 3.0)] {
        for i in 0..tail_samples {
            let s = substream(seed, &format!("tail/q={q}/p={p}/{i}"));
            let repr = if i % 2 == 0 {
                sample_hull(&sys, q, s)?
            } else {
                sample_hull_sparse(&sys, q, 1 + i % n, s)?
            };
            let x = repr.coefs();
            let m = 1 + i % n;
            let t = tail_bound_check(x, m, p, q)?;
            if !t.pass {
                tail_failures += 1;
            }
            let sigma = sigma_m_canonical(x, m, p)?.error;
            if sigma > (m as f64).powf(1.0 / p - 1.0 / q) + 1e-12 {
                sigma_bound_failures += 1;
            }
            tails.push(vec![q.into(), p.into(), i.into(), m.into(), t.lhs.into(), t.rhs.into(), t.pass.into()]);
        }
    }
    o.passed = worst_l2 <= 1e-10 && worst_other <= 1e-8 && tail_failures == 0 && sigma_bound_failures == 0;
    o.metric("max_l2_disagreement", worst_l2);
    o.metric("max_non_hilbert_disagreement", worst_other);
    o.metric("tail_failures", tail_failures);
    o.metric("tail_checks", 3 * tail_samples);
    o.metric("sigma_bound_failures", sigma_bound_failures);
    o.summary = format!(
        "l2 disagreement {worst_l2:.2e}, other p {worst_other:.2e}, tail failures {tail_failures}/{}",
        3 * tail_samples
    );
    o.tables.push(("sigma_agreement.csv".into(), agree));
    o.tables.push(("tail_bound.csv".into(), tails));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 8. two-stage rate for q-hulls

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HullRateParams {
    pub dim: usize,
    pub p: f64,
    pub hull_q: f64,
    pub system: SystemKind,
    pub n_atoms: usize,
    pub samples: usize,
    pub m_values: Vec<usize>,
    pub tau: WeaknessSequence,
    pub policy: SelectionPolicy,
    pub slack: f64,
    pub sampling: HullSampling,
}

/// How hull elements are drawn in the rate study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HullSampling {
    /// Full support, weights uniform on the simplex.
    Full,
    /// Support sizes log-spaced over `1..=n_atoms`.
    LogSparse,
    /// Flat boundary elements with log-spaced support sizes.
    #[default]
    LogFlat,
}

impl Default for HullRateParams {
    fn default() -> Self {
        Self {
            dim: 256,
            p: 2.0,
            hull_q: 1.0,
            system: SystemKind::Canonical,
            n_atoms: 512,
            samples: 200,
            m_values: vec![4, 8, 16, 32, 64],
            tau: WeaknessSequence::greedy(),
            policy: SelectionPolicy::Exact,
            slack: DEFAULT_SLACK,
            sampling: HullSampling::LogFlat,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HullRateResult {
    pub p: f64,
    pub hull_q: f64,
    pub system: SystemKind,
    pub max_error: Vec<(usize, f64)>,
    pub fit: Option<RateFit>,
    /// `−(1/q − max(1/2, 1/p))`.
    pub target: f64,
}

/// Support size of sample `i`: log-spaced over `1..=n`.
fn support_size(i: usize, samples: usize, n: usize) -> usize {
    let frac = (i as f64 + 1.0) / samples as f64;
    ((n as f64).powf(frac).round() as usize).clamp(1, n)
}

/// Max two-stage error over seeded hull samples for each `m`. By default the
/// samples are flat boundary elements with log-spaced support sizes, so the
/// maximum tracks the worst case over the class rather than the typical
/// full-support draw.
pub fn hull_rate_study(params: &HullRateParams, seed: u64) -> Result<(HullRateResult, Table)> {
    let space = LpSpace::new(params.dim, params.p)?;
    params.tau.validate()?;
    let sys = build_system(params.system, space, params.n_atoms, substream(seed, "system"))?;
    let n = sys.len();
    let per_sample: Vec<Result<Vec<f64>>> = (0..params.samples)
        .into_par_iter()
        .map(|i| {
            let s = substream(seed, &format!("sample-{i}"));
            let repr = match params.sampling {
                HullSampling::Full => sample_hull(&sys, params.hull_q, s)?,
                HullSampling::LogSparse => sample_hull_sparse(&sys, params.hull_q, support_size(i, params.samples, n), s)?,
                HullSampling::LogFlat => sample_hull_flat(&sys, params.hull_q, support_size(i, params.samples, n), s)?,
            };
            params
                .m_values
                .iter()
                .map(|&m| Ok(two_stage_mterm(&repr, m, &params.tau, params.policy, substream(s, "policy"))?.error))
                .collect()
        })
        .collect();
    let mut max_error = vec![0.0_f64; params.m_values.len()];
    let mut table = Table::new(&["m", "sample", "error"]);
    for (i, r) in per_sample.into_iter().enumerate() {
        for (k, e) in r?.into_iter().enumerate() {
            max_error[k] = max_error[k].max(e);
            table.push(vec![params.m_values[k].into(), i.into(), e.into()]);
        }
    }
    let target = -(1.0 / params.hull_q - (1.0 / params.p).max(0.5));
    let pts: Vec<(f64, f64)> = params.m_values.iter().zip(&max_error).map(|(&m, &e)| (m as f64, e)).collect();
    let fit = fit_rate(&pts, target, params.slack, None).ok();
    Ok((
        HullRateResult {
            p: params.p,
            hull_q: params.hull_q,
            system: params.system,
            max_error: params.m_values.iter().copied().zip(max_error).collect(),
            fit,
            target,
        },
        table,
    ))
}

pub fn hull_rate_outcome(seed: u64, samples: usize) -> Result<Outcome> {
    let mut o = Outcome::new("8", "two-stage-rate");
    let mut cells = Vec::new();
    let mut summary = Table::new(&["system", "p", "q", "m", "max_error"]);
    let mut fits = Table::new(&["system", "p", "q", "slope", "target", "pass"]);
    let mut all_pass = true;
    let mut worst_dev = 0.0_f64;
    for system in [SystemKind::Canonical, SystemKind::Random] {
        for q in [0.5, 1.0] {
            for p in [2.0, 3.0] {
                let params = HullRateParams {
                    p,
                    hull_q: q,
                    system,
                    samples,
                    ..HullRateParams::default()
                };
                let (res, _) = hull_rate_study(&params, substream(seed, &format!("{system:?}/q={q}/p={p}")))?;
                let name = match system {
                    SystemKind::Canonical => "canonical",
                    SystemKind::Random => "random",
                };
                for &(m, e) in &res.max_error {
                    summary.push(vec![name.into(), p.into(), q.into(), m.into(), e.into()]);
                }
                let slope = res.fit.map_or(f64::NAN, |f| f.slope);
                let pass = res.fit.is_some_and(|f| f.pass);
                all_pass &= pass;
                worst_dev = worst_dev.max((slope - res.target).abs());
                fits.push(vec![name.into(), p.into(), q.into(), slope.into(), res.target.into(), pass.into()]);
                cells.push(json!({"system": name, "p": p, "q": q, "slope": slope, "target": res.target, "pass": pass}));
            }
        }
    }
    o.passed = all_pass && worst_dev.is_finite();
    o.metric("cells", Value::Array(cells));
    o.metric("max_slope_deviation", worst_dev);
    o.summary = format!("max |slope - target| = {worst_dev:.3} (slack {DEFAULT_SLACK})");
    o.tables.push(("two_stage_max_error.csv".into(), summary));
    o.tables.push(("two_stage_fits.csv".into(), fits));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 9. ball nets

pub fn ball_net_outcome(seed: u64, d_max: usize, k_max: usize, stress_points: usize) -> Result<Outcome> {
    let mut o = Outcome::new("9", "ball-nets");
    let mut table = Table::new(&["d", "k", "size", "radius", "bound", "violations", "max_distance"]);
    let cases: Vec<(usize, usize)> = (1..=d_max).flat_map(|d| (0..=k_max).map(move |k| (d, k))).collect();
    let results: Vec<Result<_>> = cases
        .par_iter()
        .map(|&(d, k)| {
            let net = grid_net_ball(d, k)?;
            let report = stress_test_grid(&net, stress_points, substream(seed, &format!("d={d}/k={k}")));
            Ok((d, k, net.len(), net.radius, report))
        })
        .collect();
    let (mut size_ok, mut radius_ok, mut violations) = (true, true, 0usize);
    for r in results {
        let (d, k, size, radius, report) = r?;
        let bound = 3.0 * 2f64.powf(-(k as f64) / d as f64);
        size_ok &= size == 1 << k;
        radius_ok &= radius <= bound;
        violations += report.violations;
        table.push(vec![
            d.into(),
            k.into(),
            size.into(),
            radius.into(),
            bound.into(),
            report.violations.into(),
            report.max_distance.into(),
        ]);
    }
    o.passed = size_ok && radius_ok && violations == 0;
    o.metric("sizes_exact", size_ok);
    o.metric("radius_within_bound", radius_ok);
    o.metric("violations", violations);
    o.metric("nets", cases.len());
    o.summary = format!("{} nets, violations {violations}", cases.len());
    o.tables.push(("ball_nets.csv".into(), table));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 10. product composition

fn l1_ball_samples(dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sys = Arc::new(SymmetricSystem::canonical(LpSpace::new(dim, 2.0)?));
    let mut rng = seeded(substream(seed, "radius"));
    (0..n)
        .map(|i| {
            let r: f64 = rng.gen_range(0.0..=1.0);
            let x = sample_hull(&sys, 1.0, substream(seed, &format!("p-{i}")))?.synthesize();
            Ok(x.into_iter().map(|v| v * r.sqrt()).collect())
        })
        .collect()
}

pub fn composition_outcome(seed: u64, n_points: usize) -> Result<Outcome> {
    let mut o = Outcome::new("10", "product-composition");
    let mut table = Table::new(&["case", "size_a", "size_b", "size", "radius", "expected_radius", "max_observed"]);
    let mut ok = true;
    let mut worst_ratio = 0.0_f64;
    for (case, (d, ka, kb)) in [(2usize, 2usize, 4usize), (3, 3, 6), (1, 1, 1)].into_iter().enumerate() {
        let a = grid_net_ball(d, ka)?;
        let b = grid_net_ball(d, kb)?;
        let c = compose_product_net(&a, &b)?;
        let pts = l1_ball_samples(d, n_points, substream(seed, &format!("case-{case}")))?;
        let observed = c.max_distance(&pts);
        let expected = a.radius * b.radius;
        ok &= c.len() == a.len() * b.len() && c.radius == expected && observed <= c.radius;
        worst_ratio = worst_ratio.max(observed / c.radius);
        table.push(vec![
            format!("grid-d{d}").into(),
            a.len().into(),
            b.len().into(),
            c.len().into(),
            c.radius.into(),
            expected.into(),
            observed.into(),
        ]);
    }
    // a compact inside a 2-dimensional coordinate subspace of l_inf^4
    let coords = [1usize, 3];
    let base = grid_net_ball(2, 2)?;
    let f_net = EpsNet {
        ambient: Ambient::linf(4),
        radius: base.radius,
        certificate: base.certificate.clone(),
        centers: base
            .centers
            .iter()
            .map(|c| {
                let mut x = vec![0.0; 4];
                x[1] = c[0];
                x[3] = c[1];
                x
            })
            .collect(),
    };
    let refined = composed_ball_entropy_bound(&f_net, &coords, 4)?;
    let pts: Vec<Vec<f64>> = l1_ball_samples(2, n_points, substream(seed, "subspace"))?
        .into_iter()
        .map(|x| vec![0.0, x[0], 0.0, x[1]])
        .collect();
    let observed = refined.max_distance(&pts);
    let expected = f_net.radius * 3.0 * 2f64.powf(-2.0);
    ok &= refined.len() == f_net.len() * 16 && (refined.radius - expected).abs() <= 1e-15 && observed <= refined.radius;
    table.push(vec![
        "subspace-refinement".into(),
        f_net.len().into(),
        16usize.into(),
        refined.len().into(),
        refined.radius.into(),
        expected.into(),
        observed.into(),
    ]);
    o.passed = ok;
    o.metric("max_observed_over_radius", worst_ratio);
    o.metric("points_per_case", n_points);
    o.summary = format!("sizes and radii multiply; max observed/radius {worst_ratio:.3}");
    o.tables.push(("composition.csv".into(), table));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 11. multiscale composer

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiscaleParams {
    pub l: usize,
    pub r: f64,
    pub depth: usize,
    pub ambient_dim: usize,
    /// Subspace dimensions per scale `s = 1..=l`.
    pub subspace_dims: Vec<Vec<usize>>,
    pub members: usize,
    /// Members also checked against the fully materialized set.
    pub brute_force_members: usize,
}

impl Default for MultiscaleParams {
    fn default() -> Self {
        Self {
            l: 3,
            r: 1.0,
            depth: 1,
            ambient_dim: 16,
            subspace_dims: vec![vec![4, 4, 4, 4], vec![8, 8], vec![8, 8, 8, 8]],
            members: 200,
            brute_force_members: 20,
        }
    }
}

pub fn multiscale_outcome(params: &MultiscaleParams, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new("11", "multiscale-composer");
    let mut rng = seeded(substream(seed, "collections"));
    let collections: Vec<Vec<Subspace>> = params
        .subspace_dims
        .iter()
        .map(|dims| {
            dims.iter()
                .map(|&d| {
                    let mut idx: Vec<usize> = (0..params.ambient_dim).collect();
                    for i in 0..d.min(idx.len()) {
                        let j = rng.gen_range(i..idx.len());
                        idx.swap(i, j);
                    }
                    idx.truncate(d);
                    idx.sort_unstable();
                    Subspace { coords: idx }
                })
                .collect()
        })
        .collect();
    let budget = MultiscaleBudget::with_depth(params.l, params.r, params.depth, collections)?;
    let nets = grid_scale_nets(&budget)?;
    let bookkeeping: u128 = (1..=budget.depth)
        .map(|s| nets[s - 1].iter().map(|n| n.len() as u128).sum::<u128>())
        .product();
    let net = multiscale_compose(budget, nets, params.r, params.ambient_dim, params.members, substream(seed, "members"))?;
    let cardinality = net.budget.cardinality();

    let mut table = Table::new(&["member", "decoded_distance", "brute_force_distance", "budget"]);
    let members: Vec<_> = (0..params.members)
        .map(|i| synthetic_hr_member(&net.budget, params.ambient_dim, substream(seed, "members").wrapping_add(i as u64)))
        .collect();
    let materialized = if params.brute_force_members > 0 { Some(net.materialize()?) } else { None };
    let mut max_decoded = 0.0_f64;
    let mut brute_ok = true;
    for (i, m) in members.iter().enumerate() {
        let d = net.decode_distance(m)?;
        max_decoded = max_decoded.max(d);
        let bf = match (&materialized, i < params.brute_force_members) {
            (Some(a), true) => {
                let bf = a.nearest(&m.point).1;
                brute_ok &= bf <= d + 1e-15;
                bf
            }
            _ => f64::NAN,
        };
        table.push(vec![i.into(), d.into(), bf.into(), net.radius.into()]);
    }
    let zero = net.decode_distance(&zero_hr_member(&net.budget, params.ambient_dim))?;
    let tail_budget: f64 = net.chain.iter().filter(|t| t.kind != "net").map(|t| t.value).sum();
    let size_ok = cardinality == Some(bookkeeping) && materialized.as_ref().is_none_or(|a| a.len() as u128 == bookkeeping);

    let mut chain = Table::new(&["scale", "kind", "value"]);
    for t in &net.chain {
        chain.push(vec![t.scale.map_or(0, |s| s).into(), t.kind.into(), t.value.into()]);
    }
    o.passed = size_ok && max_decoded <= net.radius && brute_ok && zero <= tail_budget;
    o.metric("cardinality", bookkeeping.to_string());
    o.metric("log2_cardinality", net.budget.log2_cardinality());
    o.metric("n_s", net.budget.n_s.clone());
    o.metric("depth", net.budget.depth);
    o.metric("bit_budget_ok", net.budget.bit_budget_ok);
    o.metric("radius", net.radius);
    o.metric("chain_constant", net.chain_constant());
    o.metric("max_decoded_distance", max_decoded);
    o.metric("zero_member_distance", zero);
    o.metric("brute_force_consistent", brute_ok);
    o.summary = format!(
        "|A| = {bookkeeping}, max distance {max_decoded:.4} <= budget {:.4}",
        net.radius
    );
    o.tables.push(("multiscale_members.csv".into(), table));
    o.tables.push(("multiscale_chain.csv".into(), chain));
    Ok(o)
}

// ---------------------------------------------------------------------------
// 12. entropy brackets

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    pub dim: usize,
    pub p: f64,
    pub hull_q: f64,
    pub samples: usize,
    pub k_max: usize,
    pub fit_range: (f64, f64),
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            dim: 64,
            p: 2.0,
            hull_q: 1.0,
            samples: 1000,
            k_max: 8,
            fit_range: (2.0, 8.0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyResult {
    pub monotone: bool,
    pub ordered: bool,
    pub slope_upper: f64,
    /// Slope of `log((log(2n/k)/k)^{1/q−1/p})` over the same `k` range.
    pub slope_shape: f64,
}

pub fn entropy_study(params: &EntropyParams, seed: u64) -> Result<(EntropyResult, Table)> {
    let space = LpSpace::new(params.dim, 2.0)?;
    let sys = Arc::new(SymmetricSystem::canonical(space));
    let samples: Vec<Vec<f64>> = (0..params.samples)
        .map(|i| Ok(sample_hull(&sys, params.hull_q, substream(seed, &format!("s-{i}")))?.synthesize()))
        .collect::<Result<_>>()?;
    let ambient = Ambient::lp(params.dim, params.p)?;
    let curve = empirical_entropy_curve(&samples, params.k_max, &ambient)?;
    let mut table = Table::new(&["k", "eps_upper", "eps_lower", "shape"]);
    let exponent = 1.0 / params.hull_q - 1.0 / params.p;
    let shape = |k: f64| ((2.0 * params.dim as f64 / k).ln() / k).powf(exponent);
    let mut monotone = true;
    let mut ordered = true;
    for (i, pt) in curve.iter().enumerate() {
        ordered &= pt.eps_lower <= pt.eps_upper;
        if i > 0 {
            monotone &= pt.eps_upper <= curve[i - 1].eps_upper && pt.eps_lower <= curve[i - 1].eps_lower;
        }
        let sh = if pt.k > 0 { shape(pt.k as f64) } else { f64::NAN };
        table.push(vec![pt.k.into(), pt.eps_upper.into(), pt.eps_lower.into(), sh.into()]);
    }
    let up: Vec<(f64, f64)> = curve.iter().filter(|p| p.k > 0).map(|p| (p.k as f64, p.eps_upper)).collect();
    let sh: Vec<(f64, f64)> = curve.iter().filter(|p| p.k > 0).map(|p| (p.k as f64, shape(p.k as f64))).collect();
    let slope_upper = fit_rate(&up, 0.0, f64::INFINITY, Some(params.fit_range)).map_or(f64::NAN, |f| f.slope);
    let slope_shape = fit_rate(&sh, 0.0, f64::INFINITY, Some(params.fit_range)).map_or(f64::NAN, |f| f.slope);
    Ok((
        EntropyResult {
            monotone,
            ordered,
            slope_upper,
            slope_shape,
        },
        table,
    ))
}

pub fn entropy_outcome(seed: u64, samples: usize) -> Result<Outcome> {
    let mut o = Outcome::new("12", "entropy-brackets");
    let mut ok = true;
    let mut report = Vec::new();
    for q in [0.5, 1.0] {
        let params = EntropyParams {
            hull_q: q,
            samples,
            ..EntropyParams::default()
        };
        let (res, table) = entropy_study(&params, substream(seed, &format!("q={q}")))?;
        ok &= res.monotone && res.ordered;
        report.push(json!({"q": q, "monotone": res.monotone, "ordered": res.ordered,
            "slope_upper": res.slope_upper, "slope_shape": res.slope_shape}));
        o.tables.push((format!("entropy_q{q}.csv"), table));
    }
    o.passed = ok;
    o.summary = format!(
        "monotone and ordered: {ok}; upper-curve slopes (report only): {}",
        report
            .iter()
            .map(|r| format!("q={} {:.3} vs shape {:.3}", r["q"], r["slope_upper"].as_f64().unwrap_or(f64::NAN), r["slope_shape"].as_f64().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join(", ")
    );
    o.metric("curves", Value::Array(report));
    Ok(o)
}

// ---------------------------------------------------------------------------

/// Identifiers of the self-checkable criteria, in report order.
pub const CRITERIA: [&str; 12] = [
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12",
];

/// Runs every criterion with its standard parameters. Failures inside one
/// criterion are reported in its outcome and never abort the others.
pub fn run_all(seed: u64) -> Vec<Outcome> {
    let s = |name: &str| substream(seed, name);
    let jobs: Vec<Box<dyn Fn() -> Vec<Outcome> + Send + Sync>> = vec![
        Box::new(move || vec![guard("1", "duality", || duality_suite(s("duality"), 1000))]),
        Box::new(|| vec![guard("2", "worked-example", worked_example)]),
        Box::new(move || match recursion_outcomes(s("recursion"), &RecursionParams::default()) {
            Ok((a, b)) => vec![a, b],
            Err(e) => vec![
                Outcome::failed("3", "recursion-inequalities", &e),
                Outcome::failed("4", "greedy-rate-shape", &e),
            ],
        }),
        Box::new(move || vec![guard("5", "hilbert-boundedness", || hilbert_outcome(s("hilbert")))]),
        Box::new(move || vec![guard("6", "offset-convergence", || offset_outcome(s("offset"), 10))]),
        Box::new(move || vec![guard("7", "sigma-exactness", || sigma_outcome(s("sigma"), 100, 1000))]),
        Box::new(move || vec![guard("8", "two-stage-rate", || hull_rate_outcome(s("hull-rate"), 200))]),
        Box::new(move || vec![guard("9", "ball-nets", || ball_net_outcome(s("ball-nets"), 4, 16, 100_000))]),
        Box::new(move || vec![guard("10", "product-composition", || composition_outcome(s("composition"), 10_000))]),
        Box::new(move || {
            vec![guard("11", "multiscale-composer", || {
                multiscale_outcome(&MultiscaleParams::default(), s("multiscale"))
            })]
        }),
        Box::new(move || vec![guard("12", "entropy-brackets", || entropy_outcome(s("entropy"), 1000))]),
    ];
    jobs.par_iter().flat_map_iter(|job| job()).collect()
}

fn guard(id: &str, name: &str, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    f().unwrap_or_else(|e| Outcome::failed(id, name, &e))
}
