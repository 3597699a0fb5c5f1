//! The Weak Relaxed Greedy Algorithm over a finite symmetric system, the
//! per-step recursion checks that bound its residuals, and the two-stage
//! (truncate, then greedy on the tail) m-term scheme for q-hulls.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};
use crate::space::{dot, LpSpace};
use crate::systems::{CoefRepr, SymmetricSystem};

/// Residual norm at or below which a run stops early.
pub const STOP_RESIDUAL: f64 = 1e-13;

/// Tolerance in λ handed to the segment line search.
pub const LAMBDA_TOL: f64 = 1e-12;

/// Weakness sequence `τ = {t_k}`, `t_k ∈ [0, 1]`, indexed from `k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeaknessSequence {
    Constant { t: f64 },
    /// Values past the end of the list repeat the last entry.
    Explicit { values: Vec<f64> },
    /// `t_k = k^{-exponent}`.
    Decaying { exponent: f64 },
}

impl WeaknessSequence {
    pub fn constant(t: f64) -> Result<Self> {
        let s = WeaknessSequence::Constant { t };
        s.validate()?;
        Ok(s)
    }

    pub fn greedy() -> Self {
        WeaknessSequence::Constant { t: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| (0.0..=1.0).contains(&t);
        match self {
            WeaknessSequence::Constant { t } if ok(*t) => Ok(()),
            WeaknessSequence::Explicit { values } if !values.is_empty() && values.iter().all(|t| ok(*t)) => {
                Ok(())
            }
            WeaknessSequence::Decaying { exponent } if *exponent >= 0.0 && exponent.is_finite() => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid weakness sequence {other:?}"))),
        }
    }

    /// `t_k` for `k ≥ 1`.
    pub fn t(&self, k: usize) -> f64 {
        match self {
            WeaknessSequence::Constant { t } => *t,
            WeaknessSequence::Explicit { values } => values[(k.max(1) - 1).min(values.len() - 1)],
            WeaknessSequence::Decaying { exponent } => (k.max(1) as f64).powf(-exponent),
        }
    }

    /// `Σ_{k ≤ m} t_k^s`.
    pub fn power_sum(&self, m: usize, s: f64) -> f64 {
        (1..=m).map(|k| self.t(k).powf(s)).sum()
    }
}

/// How step (1) picks among atoms meeting the weak threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Argmax; ties go to the smallest index, then to the positive sign.
    #[default]
    Exact,
    /// First qualifying `(index, sign)` in scan order.
    LazyWeak,
    /// Uniform among qualifiers, drawn from the run's seeded generator.
    RandomWeak,
}

/// Outcome of weak atom selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub sign: f64,
    pub weak_value: f64,
    pub sup_value: f64,
}

/// Step (1): pick `φ = ±g_j` with `F(φ − G) ≥ t · sup_{g ∈ 𝒟} F(g − G)`.
pub fn select_weak(
    system: &SymmetricSystem,
    functional: &[f64],
    g_prev: &[f64],
    t_m: f64,
    policy: SelectionPolicy,
    rng: Option<&mut Rng>,
) -> Result<Selection> {
    if system.is_empty() {
        return Err(Error::EmptySystem);
    }
    system.space().check_dim(functional)?;
    system.space().check_dim(g_prev)?;
    if !(0.0..=1.0).contains(&t_m) {
        return Err(Error::InvalidArgument(format!("t_m = {t_m} outside [0, 1]")));
    }
    let offset = dot(functional, g_prev);
    let scores = system.pairings(functional);

    // scan order: (0,+), (0,-), (1,+), ...
    let candidates = scores
        .iter()
        .enumerate()
        .flat_map(|(j, &s)| [(j, 1.0, s - offset), (j, -1.0, -s - offset)]);

    let mut best = (0usize, 1.0f64, f64::NEG_INFINITY);
    for c in candidates.clone() {
        if c.2 > best.2 {
            best = c;
        }
    }
    let sup_value = best.2;
    let threshold = t_m * sup_value;
    let pick = match policy {
        SelectionPolicy::Exact => best,
        SelectionPolicy::LazyWeak => candidates.clone().find(|c| c.2 >= threshold).unwrap_or(best),
        SelectionPolicy::RandomWeak => {
            let qualifiers: Vec<_> = candidates.clone().filter(|c| c.2 >= threshold).collect();
            match (qualifiers.is_empty(), rng) {
                (false, Some(rng)) => qualifiers[rng.gen_range(0..qualifiers.len())],
                (false, None) => qualifiers[0],
                (true, _) => best,
            }
        }
    };
    Ok(Selection {
        index: pick.0,
        sign: pick.1,
        weak_value: pick.2,
        sup_value,
    })
}

/// One WRGA iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub atom_index: usize,
    pub atom_sign: i32,
    pub t_m: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    /// `‖f_m‖ − b`, present when `b` was supplied.
    pub a_m: Option<f64>,
    pub weak_value: f64,
    pub sup_value: f64,
    /// `a_{m−1}(1 − C₅ t_m^{p*} a_{m−1}^{p*})`, present when `b` was supplied.
    pub recursion_rhs: Option<f64>,
}

/// Nonnegative weights of `G_m` on `+g_j` and `−g_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullWeights {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl HullWeights {
    fn zeros(n: usize) -> Self {
        Self {
            pos: vec![0.0; n],
            neg: vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.pos.iter().chain(&self.neg).sum()
    }

    /// Number of signed atoms carrying weight.
    pub fn support_size(&self) -> usize {
        self.pos.iter().chain(&self.neg).filter(|w| **w > 0.0).count()
    }

    /// Signed coefficients `w⁺_j − w⁻_j`.
    pub fn signed_coefs(&self) -> Vec<f64> {
        self.pos.iter().zip(&self.neg).map(|(p, n)| p - n).collect()
    }

    pub fn min_weight(&self) -> f64 {
        self.pos.iter().chain(&self.neg).copied().fold(f64::INFINITY, f64::min)
    }
}

/// Full record of a WRGA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub records: Vec<StepRecord>,
    pub weights: HullWeights,
    pub b_used: Option<f64>,
    pub f0_norm: f64,
    /// The final approximant `G_m`.
    pub approximant: Vec<f64>,
}

impl GreedyTrace {
    /// `‖f_m‖` for `m = 0, 1, …`.
    pub fn residual_norms(&self) -> Vec<f64> {
        std::iter::once(self.f0_norm)
            .chain(self.records.iter().map(|r| r.residual_norm))
            .collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(self.f0_norm, |r| r.residual_norm)
    }

    /// One JSON object per step, newline terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Constants of the per-step recursion for a space with `ρ(u) ≤ γ u^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionConstants {
    pub q: f64,
    pub gamma: f64,
    pub p_star: f64,
    /// `½ (2^{q+2} γ)^{−1/(q−1)}`
    pub c3: f64,
    /// `2^{−p*−1}`
    pub c4: f64,
    pub c5: f64,
}

impl RecursionConstants {
    pub fn for_space(space: &LpSpace) -> Self {
        Self::new(space.smooth_q(), space.gamma())
    }

    pub fn new(q: f64, gamma: f64) -> Self {
        let p_star = q / (q - 1.0);
        let c3 = 0.5 * (2f64.powf(q + 2.0) * gamma).powf(-1.0 / (q - 1.0));
        let c4 = 2f64.powf(-p_star - 1.0);
        Self {
            q,
            gamma,
            p_star,
            c3,
            c4,
            c5: c3.min(c4),
        }
    }

    /// `a (1 − C₅ t^{p*} a^{p*})`.
    pub fn contraction(&self, a_prev: f64, t: f64) -> f64 {
        a_prev * (1.0 - self.c5 * t.powf(self.p_star) * a_prev.powf(self.p_star))
    }
}

/// Runs the WRGA for up to `m_max` steps.
///
/// `G_0 = 0`; each step selects `φ_m` against the norming functional of the
/// current residual, takes the optimal `λ_m ∈ [0,1]` on the segment
/// `[G_{m−1}, φ_m]`, and sets `G_m = (1−λ_m)G_{m−1} + λ_m φ_m`. Stops early
/// once the residual norm drops to [`STOP_RESIDUAL`].
pub fn wrga_run(
    system: &SymmetricSystem,
    f: &[f64],
    tau: &WeaknessSequence,
    m_max: usize,
    policy: SelectionPolicy,
    b: Option<f64>,
    seed: u64,
) -> Result<GreedyTrace> {
    let space = system.space();
    tau.validate()?;
    let f0_norm = space.norm(f)?;
    if let Some(b) = b {
        if !(b >= 0.0) {
            return Err(Error::InvalidArgument(format!("hull distance must be nonnegative, got {b}")));
        }
    }
    let consts = RecursionConstants::for_space(space);
    let mut rng = seeded(seed);
    let dim = space.dim();
    let mut g = vec![0.0; dim];
    let mut weights = HullWeights::zeros(system.len());
    let mut records = Vec::with_capacity(m_max);
    let mut residual = f.to_vec();
    let mut residual_norm = f0_norm;

    for m in 1..=m_max {
        if residual_norm <= STOP_RESIDUAL {
            break;
        }
        let t_m = tau.t(m);
        let functional = space.norming_functional(&residual)?;
        let sel = select_weak(system, &functional, &g, t_m, policy, Some(&mut rng))?;
        let phi: Vec<f64> = system.atom(sel.index).iter().map(|v| sel.sign * v).collect();
        let seg = space.segment_min(f, &g, &phi, LAMBDA_TOL)?;
        let lambda = seg.lambda;

        for (gi, pi) in g.iter_mut().zip(&phi) {
            *gi = (1.0 - lambda) * *gi + lambda * pi;
        }
        weights.pos.iter_mut().chain(weights.neg.iter_mut()).for_each(|w| *w *= 1.0 - lambda);
        if sel.sign > 0.0 {
            weights.pos[sel.index] += lambda;
        } else {
            weights.neg[sel.index] += lambda;
        }
        for ((r, fi), gi) in residual.iter_mut().zip(f).zip(&g) {
            *r = fi - gi;
        }
        let prev_norm = residual_norm;
        residual_norm = space.norm(&residual)?;

        let (a_m, recursion_rhs) = match b {
            Some(b) => (Some(residual_norm - b), Some(consts.contraction(prev_norm - b, t_m))),
            None => (None, None),
        };
        records.push(StepRecord {
            step: m,
            atom_index: sel.index,
            atom_sign: sel.sign as i32,
            t_m,
            lambda,
            residual_norm,
            a_m,
            weak_value: sel.weak_value,
            sup_value: sel.sup_value,
            recursion_rhs,
        });
    }
    Ok(GreedyTrace {
        records,
        weights,
        b_used: b,
        f0_norm,
        approximant: g,
    })
}

/// Check of one step against both recursion inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCheck {
    pub step: usize,
    pub a_prev: f64,
    pub a_m: f64,
    pub t_m: f64,
    /// `false` when `a_{m−1}` was at or below the activity threshold.
    pub checked: bool,
    /// `a_{m−1} inf_λ (1 − λt + 2γ(2λ/a_{m−1})^q)`.
    pub smooth_rhs: f64,
    pub smooth_slack: f64,
    /// `a_{m−1}(1 − C₅ t^{p*} a_{m−1}^{p*})`.
    pub power_rhs: f64,
    pub power_slack: f64,
    /// `(t a^q / (2^{q+2} γ))^{1/(q−1)}`, deciding which case bounds the infimum.
    pub lambda1: f64,
    pub pass_smooth: bool,
    pub pass_power: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionReport {
    pub steps: Vec<StepCheck>,
    pub failures: usize,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

const INF_GRID: usize = 1000;

/// `inf_{λ ∈ [0,1]} (1 − λt + 2γ(2λ/a)^q)` over a uniform grid plus the
/// interior stationary point.
pub fn smooth_infimum(a_prev: f64, t: f64, q: f64, gamma: f64) -> f64 {
    let h = |lam: f64| 1.0 - lam * t + 2.0 * gamma * (2.0 * lam / a_prev).powf(q);
    let mut best = (0..=INF_GRID).map(|i| h(i as f64 / INF_GRID as f64)).fold(f64::INFINITY, f64::min);
    if t > 0.0 {
        let stationary = (t / (2.0 * gamma * q * (2.0 / a_prev).powf(q))).powf(1.0 / (q - 1.0));
        if stationary.is_finite() {
            best = best.min(h(stationary.clamp(0.0, 1.0)));
        }
    }
    best
}

/// Verifies every active step of a trace against the smoothness recursion
/// and its power-type consequence with `C₅ = min(C₃, C₄)`.
///
/// Steps with `a_{m−1} ≤ 10·tol` are reported but not checked.
pub fn recursion_check(
    trace: &GreedyTrace,
    space: &LpSpace,
    tau: &WeaknessSequence,
    tol: f64,
) -> Result<RecursionReport> {
    let b = trace.b_used.ok_or(Error::MissingHullDistance)?;
    let consts = RecursionConstants::for_space(space);
    let (q, gamma) = (consts.q, consts.gamma);
    let mut prev = trace.f0_norm;
    let mut steps = Vec::with_capacity(trace.records.len());
    let mut failures = 0;
    for rec in &trace.records {
        let a_prev = prev - b;
        let a_m = rec.residual_norm - b;
        let t = tau.t(rec.step);
        prev = rec.residual_norm;
        let checked = a_prev > 10.0 * tol;
        let (smooth_rhs, power_rhs, lambda1) = if checked {
            (
                a_prev * smooth_infimum(a_prev, t, q, gamma),
                consts.contraction(a_prev, t),
                (t * a_prev.powf(q) / (2f64.powf(q + 2.0) * gamma)).powf(1.0 / (q - 1.0)),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        let pass_smooth = !checked || a_m <= smooth_rhs + tol;
        let pass_power = !checked || a_m <= power_rhs + tol;
        if !(pass_smooth && pass_power) {
            failures += 1;
        }
        steps.push(StepCheck {
            step: rec.step,
            a_prev,
            a_m,
            t_m: t,
            checked,
            smooth_rhs,
            smooth_slack: smooth_rhs - a_m,
            power_rhs,
            power_slack: power_rhs - a_m,
            lambda1,
            pass_smooth,
            pass_power,
        });
    }
    Ok(RecursionReport { steps, failures })
}

/// Result of the two-stage m-term scheme.
#[derive(Debug, Clone)]
pub struct TwoStage {
    /// Coefficients of the approximant over the atoms (at most `2m` nonzero).
    pub coefs: Vec<f64>,
    pub error: f64,
    /// Indices kept exactly, largest `|c_j|` first.
    pub head: Vec<usize>,
    /// `s₁ = Σ_{tail} |c_j|`.
    pub tail_l1: f64,
    /// `‖T/s₁ − G_m‖`, zero when the tail vanishes.
    pub greedy_error: f64,
}

/// Keeps the `m` largest coefficients, then approximates the normalized tail
/// `T/s₁ ∈ A₁(𝒟)` by `m` WRGA steps.
pub fn two_stage_mterm(
    repr: &CoefRepr,
    m: usize,
    tau: &WeaknessSequence,
    policy: SelectionPolicy,
    seed: u64,
) -> Result<TwoStage> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if !repr.in_hull() {
        return Err(Error::InvalidArgument(format!(
            "representation violates the hull constraint: sum |c|^q = {}",
            repr.hull_sum()
        )));
    }
    let system: &Arc<SymmetricSystem> = repr.system();
    let space = system.space();
    let c = repr.coefs();
    let mut order: Vec<usize> = (0..c.len()).collect();
    // stable: ties keep the smaller index first
    order.sort_by(|&i, &j| c[j].abs().total_cmp(&c[i].abs()));
    let head: Vec<usize> = order.iter().copied().take(m).collect();

    let mut coefs = vec![0.0; c.len()];
    let mut tail = c.to_vec();
    for &j in &head {
        coefs[j] = c[j];
        tail[j] = 0.0;
    }
    let tail_l1: f64 = tail.iter().map(|v| v.abs()).sum();
    let target = repr.synthesize();

    let mut greedy_error = 0.0;
    if tail_l1 > 0.0 {
        let t: Vec<f64> = system.synthesize(&tail)?.into_iter().map(|v| v / tail_l1).collect();
        let trace = wrga_run(system, &t, tau, m, policy, Some(0.0), seed)?;
        greedy_error = trace.final_residual();
        for (cj, w) in coefs.iter_mut().zip(trace.weights.signed_coefs()) {
            *cj += tail_l1 * w;
        }
    }
    let approx = system.synthesize(&coefs)?;
    let diff: Vec<f64> = target.iter().zip(&approx).map(|(a, b)| a - b).collect();
    Ok(TwoStage {
        coefs,
        error: space.norm(&diff)?,
        head,
        tail_l1,
        greedy_error,
    })
}
