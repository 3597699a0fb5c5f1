//! Constructive covering machinery: grid nets of finite-dimensional balls,
//! product composition, empirical entropy brackets and the multiscale net
//! composer for sums of subspace pieces.

use std::collections::HashSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::space::LpSpace;

/// Norm of an ambient space used by nets. Unlike [`LpSpace`], `∞` and
/// `p = 1` are allowed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Norm {
    Lp { p: f64 },
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ambient {
    pub dim: usize,
    pub norm: Norm,
}

impl Ambient {
    pub fn linf(dim: usize) -> Self {
        Self { dim, norm: Norm::Inf }
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self {
            dim,
            norm: if p.is_infinite() { Norm::Inf } else { Norm::Lp { p } },
        })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.norm {
            Norm::Inf => a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())),
            Norm::Lp { p } => {
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                crate::space::lp_norm(&diff, p)
            }
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

impl From<&LpSpace> for Ambient {
    fn from(s: &LpSpace) -> Self {
        Ambient {
            dim: s.dim(),
            norm: Norm::Lp { p: s.lebesgue_p() },
        }
    }
}

/// How a net's radius was established.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Analytic: per-axis grid spacing.
    GridExact,
    /// Checked on finitely many points of the covered set.
    Sampled {
        n_samples: usize,
        max_observed_distance: f64,
    },
    /// Triangle inequality over covering parents.
    Composed { parents: Vec<Certificate> },
}

/// Finite set of centers with a covering radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsNet {
    pub ambient: Ambient,
    pub radius: f64,
    pub certificate: Certificate,
    pub centers: Vec<Vec<f64>>,
}

impl EpsNet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Nearest center by exhaustive scan; ties to the smaller index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = self.ambient.distance(x, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Largest distance from any of `points` to the net.
    pub fn max_distance(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|x| self.nearest(x).1).fold(0.0, f64::max)
    }

    /// Re-certifies the net by sampling; fails if a point lies outside `radius`.
    pub fn certify_sampled(mut self, points: &[Vec<f64>]) -> Result<Self> {
        for x in points {
            self.ambient.check(x)?;
        }
        let observed = self.max_distance(points);
        if observed > self.radius {
            return Err(Error::CoverageViolated {
                observed,
                radius: self.radius,
            });
        }
        self.certificate = Certificate::Sampled {
            n_samples: points.len(),
            max_observed_distance: observed,
        };
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Per-axis exponents `k_i` with `Σ k_i = k`, differing by at most one.
fn axis_exponents(d: usize, k: usize) -> Vec<usize> {
    (0..d).map(|i| k / d + usize::from(i < k % d)).collect()
}

/// Product grid of exactly `2^k` centers covering `[−1, 1]^d` in ℓ_∞.
///
/// Axis `i` carries `2^{k_i}` cell midpoints, so the covering radius is
/// `2^{−⌊k/d⌋} ≤ 2·2^{−k/d}`.
pub fn grid_net_ball(d: usize, k: usize) -> Result<EpsNet> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if k >= usize::BITS as usize - 1 || k > 40 {
        return Err(Error::SizeGuard(format!("grid with 2^{k} centers")));
    }
    let exps = axis_exponents(d, k);
    let axes: Vec<Vec<f64>> = exps
        .iter()
        .map(|&e| {
            let c = 1usize << e;
            (0..c).map(|i| -1.0 + (2 * i + 1) as f64 / c as f64).collect()
        })
        .collect();
    let total = 1usize << k;
    let mut centers = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut x = Vec::with_capacity(d);
        for axis in &axes {
            x.push(axis[idx % axis.len()]);
            idx /= axis.len();
        }
        centers.push(x);
    }
    let radius = 2f64.powi(-((k / d) as i32));
    Ok(EpsNet {
        ambient: Ambient::linf(d),
        radius,
        certificate: Certificate::GridExact,
        centers,
    })
}

/// Outcome of a coverage stress test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressReport {
    pub n_points: usize,
    pub violations: usize,
    pub max_distance: f64,
}

/// Uniform points of `[−1,1]^d` against a grid net.
///
/// Each point is snapped to its nearest grid cell midpoint axis by axis, and
/// the snapped center must be present in the net's center list.
pub fn stress_test_grid(net: &EpsNet, n_points: usize, seed: u64) -> StressReport {
    let d = net.ambient.dim;
    let per_axis: Vec<usize> = (0..d)
        .map(|i| {
            let mut vals: Vec<u64> = net.centers.iter().map(|c| c[i].to_bits()).collect();
            vals.sort_unstable();
            vals.dedup();
            vals.len()
        })
        .collect();
    let members: HashSet<Vec<u64>> = net
        .centers
        .iter()
        .map(|c| c.iter().map(|v| v.to_bits()).collect())
        .collect();
    let mut rng = seeded(seed);
    let mut violations = 0;
    let mut max_distance = 0.0_f64;
    for _ in 0..n_points {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let snapped: Vec<f64> = x
            .iter()
            .zip(&per_axis)
            .map(|(&v, &c)| {
                let cell = (((v + 1.0) / 2.0 * c as f64).floor() as usize).min(c - 1);
                -1.0 + (2 * cell + 1) as f64 / c as f64
            })
            .collect();
        let key: Vec<u64> = snapped.iter().map(|v| v.to_bits()).collect();
        let dist = net.ambient.distance(&x, &snapped);
        max_distance = max_distance.max(dist);
        if !members.contains(&key) || dist > net.radius {
            violations += 1;
        }
    }
    StressReport {
        n_points,
        violations,
        max_distance,
    }
}

/// Centers `y_i + ε_A z_j`: if `net_a` covers `A` at `ε_A` and `net_ball`
/// covers the unit ball at `ε_B`, the result covers `A` at `ε_A ε_B`.
pub fn compose_product_net(net_a: &EpsNet, net_ball: &EpsNet) -> Result<EpsNet> {
    if net_a.ambient != net_ball.ambient {
        return Err(Error::AmbientMismatch(format!("{:?} vs {:?}", net_a.ambient, net_ball.ambient)));
    }
    let eps_a = net_a.radius;
    let mut centers = Vec::with_capacity(net_a.len() * net_ball.len());
    for y in &net_a.centers {
        for z in &net_ball.centers {
            centers.push(y.iter().zip(z).map(|(a, b)| a + eps_a * b).collect());
        }
    }
    Ok(EpsNet {
        ambient: net_a.ambient,
        radius: eps_a * net_ball.radius,
        certificate: Certificate::Composed {
            parents: vec![net_a.certificate.clone(), net_ball.certificate.clone()],
        },
        centers,
    })
}

/// Refines a net of a compact lying in the coordinate subspace `coords`
/// with a `2^{extra_k}`-point ball net of that subspace, giving radius
/// `ε_F · 3 · 2^{−extra_k/n}` for `n = |coords|`.
///
/// The ambient must be ℓ_∞, where the subspace ball is a cube in `coords`.
pub fn composed_ball_entropy_bound(f_net: &EpsNet, coords: &[usize], extra_k: usize) -> Result<EpsNet> {
    if f_net.ambient.norm != Norm::Inf {
        return Err(Error::AmbientMismatch("subspace ball nets require an l_inf ambient".into()));
    }
    let n = coords.len();
    if n == 0 || coords.iter().any(|&c| c >= f_net.ambient.dim) {
        return Err(Error::DimensionMismatch {
            expected: f_net.ambient.dim,
            actual: coords.iter().copied().max().map_or(0, |c| c + 1),
        });
    }
    let unique: HashSet<usize> = coords.iter().copied().collect();
    if unique.len() != n {
        return Err(Error::InvalidArgument("subspace coordinates must be distinct".into()));
    }
    for c in &f_net.centers {
        if c.iter().enumerate().any(|(i, v)| *v != 0.0 && !unique.contains(&i)) {
            return Err(Error::InvalidArgument("net center lies outside the subspace".into()));
        }
    }
    let grid = grid_net_ball(n, extra_k)?;
    let mut ball = embed_net(&grid, coords, f_net.ambient.dim);
    // the bound from the volumetric estimate, at least the grid's own radius
    ball.radius = 3.0 * 2f64.powf(-(extra_k as f64) / n as f64);
    debug_assert!(grid.radius <= ball.radius);
    compose_product_net(f_net, &ball)
}

fn embed(x: &[f64], coords: &[usize], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&c, &v) in coords.iter().zip(x) {
        out[c] = v;
    }
    out
}

fn embed_net(net: &EpsNet, coords: &[usize], dim: usize) -> EpsNet {
    EpsNet {
        ambient: Ambient::linf(dim),
        radius: net.radius,
        certificate: net.certificate.clone(),
        centers: net.centers.iter().map(|c| embed(c, coords, dim)).collect(),
    }
}

/// One point of an empirical entropy curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPoint {
    pub k: usize,
    /// Covering radius of `2^k` farthest-point centers drawn from the samples.
    pub eps_upper: f64,
    /// Half the separation of the largest greedy packing with more than
    /// `2^k` points: no `2^k` balls of smaller radius cover the samples.
    pub eps_lower: f64,
}

const PACKING_MATRIX_LIMIT: usize = 4096;
const PACKING_BISECTIONS: usize = 20;

/// Bracket `[eps_lower, eps_upper]` on `ε_k` of the sample set for
/// `k = 0..=k_max`.
pub fn empirical_entropy_curve(samples: &[Vec<f64>], k_max: usize, ambient: &Ambient) -> Result<Vec<EntropyPoint>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("samples must be nonempty".into()));
    }
    for s in samples {
        ambient.check(s)?;
    }
    let n = samples.len();
    let max_centers = (1usize << k_max.min(40)).saturating_add(1).min(n);

    // farthest-point traversal; radius_after[c] is the covering radius of the first c centers
    let mut min_dist = vec![f64::INFINITY; n];
    let mut radius_after = vec![f64::INFINITY; max_centers + 1];
    let mut next = 0usize;
    for c in 1..=max_centers {
        for (i, s) in samples.iter().enumerate() {
            let d = ambient.distance(s, &samples[next]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
        let (far, r) = min_dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        radius_after[c] = r;
        next = far;
    }

    let matrix = (n <= PACKING_MATRIX_LIMIT).then(|| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ambient.distance(&samples[i], &samples[j]);
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    });
    // greedy packing in sample order; true if more than `limit` points are δ-separated
    let packs_more_than = |delta: f64, limit: usize, m: &[f64]| -> bool {
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..n {
            if chosen.iter().all(|&j| m[i * n + j] >= delta) {
                chosen.push(i);
                if chosen.len() > limit {
                    return true;
                }
            }
        }
        false
    };

    let mut curve = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let budget = 1usize.checked_shl(k as u32).unwrap_or(usize::MAX);
        if budget >= n {
            curve.push(EntropyPoint {
                k,
                eps_upper: 0.0,
                eps_lower: 0.0,
            });
            continue;
        }
        let upper = radius_after[budget];
        // the first budget+1 traversal centers are pairwise ≥ upper apart
        let mut lower = 0.5 * upper;
        if let Some(m) = matrix.as_deref() {
            if upper > 0.0 {
                let (mut lo, mut hi) = (upper, 2.0 * upper);
                if packs_more_than(hi, budget, m) {
                    lo = hi;
                } else {
                    for _ in 0..PACKING_BISECTIONS {
                        let mid = 0.5 * (lo + hi);
                        if packs_more_than(mid, budget, m) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                lower = lower.max(0.5 * lo);
            }
        }
        curve.push(EntropyPoint {
            k,
            eps_upper: upper,
            eps_lower: lower.min(upper),
        });
    }
    // a lower bound on ε_{k+1} also bounds ε_k from below
    for i in (0..curve.len().saturating_sub(1)).rev() {
        let next = curve[i + 1].eps_lower;
        let cur = &mut curve[i];
        cur.eps_lower = cur.eps_lower.max(next).min(cur.eps_upper);
    }
    Ok(curve)
}

/// Coordinate subspace of an ℓ_∞ ambient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    pub coords: Vec<usize>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Bit budgets and depth of the multiscale composition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiscaleBudget {
    pub l: usize,
    pub r: f64,
    /// Number of scales that receive nets, `l(r)`.
    pub depth: usize,
    /// `n_s = ⌊(r+1)(l−s)2^{s+1}⌋` for `s = 1..=depth`.
    pub n_s: Vec<usize>,
    /// Subspace collections for every scale `s = 1..=l`.
    pub collections: Vec<Vec<Subspace>>,
    /// Whether `Σ n_s ≤ 2^{l−1}` holds at this depth.
    pub bit_budget_ok: bool,
}

/// `⌊(r+1)(l−s)2^{s+1}⌋`.
pub fn budget_bits(l: usize, r: f64, s: usize) -> usize {
    ((r + 1.0) * (l as f64 - s as f64) * 2f64.powi(s as i32 + 1)).floor().max(0.0) as usize
}

impl MultiscaleBudget {
    /// Depth `l(r)`: the largest value `≤ l−2` with `Σ n_s ≤ 2^{l−1}`.
    pub fn new(l: usize, r: f64, collections: Vec<Vec<Subspace>>) -> Result<Self> {
        let cap = l.saturating_sub(2);
        let limit = 2f64.powi(l as i32 - 1);
        let mut depth = 0;
        let mut total = 0usize;
        for s in 1..=cap {
            total += budget_bits(l, r, s);
            if total as f64 <= limit {
                depth = s;
            } else {
                break;
            }
        }
        Self::with_depth(l, r, depth, collections)
    }

    /// Explicit depth `≤ l`; the bit-budget condition is recorded, not enforced.
    pub fn with_depth(l: usize, r: f64, depth: usize, collections: Vec<Vec<Subspace>>) -> Result<Self> {
        if l == 0 || !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("need l ≥ 1 and r > 0, got l = {l}, r = {r}")));
        }
        if depth > l {
            return Err(Error::BudgetInconsistency(format!("depth {depth} exceeds l = {l}")));
        }
        if collections.len() != l {
            return Err(Error::BudgetInconsistency(format!(
                "expected {l} subspace collections, got {}",
                collections.len()
            )));
        }
        for (i, coll) in collections.iter().enumerate() {
            let s = i + 1;
            if coll.is_empty() {
                return Err(Error::BudgetInconsistency(format!("scale {s} has no subspaces")));
            }
            for sub in coll {
                if sub.dim() == 0 || sub.dim() > 1 << (s + 1) {
                    return Err(Error::BudgetInconsistency(format!(
                        "scale {s} subspace of dimension {} exceeds 2^{}",
                        sub.dim(),
                        s + 1
                    )));
                }
            }
        }
        let n_s: Vec<usize> = (1..=depth).map(|s| budget_bits(l, r, s)).collect();
        let bit_budget_ok = (n_s.iter().sum::<usize>() as f64) <= 2f64.powi(l as i32 - 1);
        Ok(Self {
            l,
            r,
            depth,
            n_s,
            collections,
            bit_budget_ok,
        })
    }

    /// Weight `2^{−r(s−1)}` of scale `s`.
    pub fn weight(&self, s: usize) -> f64 {
        2f64.powf(-self.r * (s as f64 - 1.0))
    }

    /// `log₂ Π_s M_s` with `M_s = |collection_s| · 2^{n_s}`.
    pub fn log2_cardinality(&self) -> f64 {
        (1..=self.depth)
            .map(|s| (self.collections[s - 1].len() as f64).log2() + self.n_s[s - 1] as f64)
            .sum()
    }

    /// `Π_s M_s`, when it fits in 128 bits.
    pub fn cardinality(&self) -> Option<u128> {
        let mut total: u128 = 1;
        for s in 1..=self.depth {
            let ms = (self.collections[s - 1].len() as u128).checked_mul(1u128.checked_shl(self.n_s[s - 1] as u32)?)?;
            total = total.checked_mul(ms)?;
        }
        Some(total)
    }
}

/// One recorded term of the covering error chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTerm {
    pub scale: Option<usize>,
    pub kind: &'static str,
    pub value: f64,
}

/// An element of the class: `Σ_s t_s + e` with `t_s` in a scale-`s` subspace,
/// `‖t_s‖ ≤ 2^{−r(s−1)}` and `‖e‖ ≤ 2^{−rl}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HrMember {
    pub point: Vec<f64>,
    /// `(subspace index, coordinates of t_s in that subspace)` for each scale.
    pub pieces: Vec<(usize, Vec<f64>)>,
}

/// The composed net `A = {Σ_{s ≤ depth} 2^{−r(s−1)} y^s}`, kept in product
/// form so the count `Π M_s` need not be materialized.
#[derive(Debug, Clone)]
pub struct MultiscaleNet {
    pub budget: MultiscaleBudget,
    pub ambient_dim: usize,
    /// `scale_nets[s−1][i]` covers the unit ball of subspace `i` at scale `s`.
    pub scale_nets: Vec<Vec<EpsNet>>,
    pub chain: Vec<ChainTerm>,
    /// Total of the chain: `C(r) 2^{−r l(r)}`.
    pub radius: f64,
    pub certificate: Certificate,
}

/// Largest composed set [`MultiscaleNet::materialize`] will enumerate.
pub const MATERIALIZE_LIMIT: u128 = 1 << 20;

impl MultiscaleNet {
    /// `C(r) = radius / 2^{−r l(r)}`.
    pub fn chain_constant(&self) -> f64 {
        self.radius / 2f64.powf(-self.budget.r * self.budget.depth as f64)
    }

    /// Element of `A` chosen scale by scale: for each `s ≤ depth`, the net
    /// point nearest to `t_s / 2^{−r(s−1)}`.
    pub fn decode(&self, member: &HrMember) -> Result<Vec<f64>> {
        if member.pieces.len() != self.budget.l {
            return Err(Error::InvalidArgument("member has the wrong number of scales".into()));
        }
        let mut out = vec![0.0; self.ambient_dim];
        for s in 1..=self.budget.depth {
            let (i, t) = &member.pieces[s - 1];
            let w = self.budget.weight(s);
            let scaled: Vec<f64> = t.iter().map(|v| v / w).collect();
            let net = &self.scale_nets[s - 1][*i];
            let (j, _) = net.nearest(&scaled);
            let coords = &self.budget.collections[s - 1][*i].coords;
            for (&c, &v) in coords.iter().zip(&net.centers[j]) {
                out[c] += w * v;
            }
        }
        Ok(out)
    }

    /// Distance from a member to its decoded element of `A`.
    pub fn decode_distance(&self, member: &HrMember) -> Result<f64> {
        let a = self.decode(member)?;
        Ok(Ambient::linf(self.ambient_dim).distance(&member.point, &a))
    }

    /// All `Π M_s` elements of `A`, guarded by [`MATERIALIZE_LIMIT`].
    pub fn materialize(&self) -> Result<EpsNet> {
        let count = self.budget.cardinality().unwrap_or(u128::MAX);
        if count > MATERIALIZE_LIMIT {
            return Err(Error::SizeGuard(format!("composed set of {count} elements exceeds 2^20")));
        }
        let mut centers = vec![vec![0.0; self.ambient_dim]];
        for s in 1..=self.budget.depth {
            let w = self.budget.weight(s);
            let mut ys: Vec<Vec<f64>> = Vec::new();
            for (i, net) in self.scale_nets[s - 1].iter().enumerate() {
                let coords = &self.budget.collections[s - 1][i].coords;
                for c in &net.centers {
                    ys.push(embed(c, coords, self.ambient_dim));
                }
            }
            let mut next = Vec::with_capacity(centers.len() * ys.len());
            for a in &centers {
                for y in &ys {
                    next.push(a.iter().zip(y).map(|(u, v)| u + w * v).collect());
                }
            }
            centers = next;
        }
        Ok(EpsNet {
            ambient: Ambient::linf(self.ambient_dim),
            radius: self.radius,
            certificate: self.certificate.clone(),
            centers,
        })
    }
}

/// Seeded member of the class for the given budget: every coordinate of
/// `t_s` uniform in `[−2^{−r(s−1)}, 2^{−r(s−1)}]`, residual uniform in
/// `[−2^{−rl}, 2^{−rl}]^N`.
pub fn synthetic_hr_member(budget: &MultiscaleBudget, ambient_dim: usize, seed: u64) -> HrMember {
    let mut rng = seeded(seed);
    let mut point = vec![0.0; ambient_dim];
    let mut pieces = Vec::with_capacity(budget.l);
    for s in 1..=budget.l {
        let coll = &budget.collections[s - 1];
        let i = rng.gen_range(0..coll.len());
        let w = budget.weight(s);
        let t: Vec<f64> = coll[i].coords.iter().map(|_| rng.gen_range(-w..=w)).collect();
        for (&c, &v) in coll[i].coords.iter().zip(&t) {
            point[c] += v;
        }
        pieces.push((i, t));
    }
    let tail = 2f64.powf(-budget.r * budget.l as f64);
    for x in point.iter_mut() {
        *x += rng.gen_range(-tail..=tail);
    }
    HrMember { point, pieces }
}

/// Zero member: every piece and the residual vanish.
pub fn zero_hr_member(budget: &MultiscaleBudget, ambient_dim: usize) -> HrMember {
    HrMember {
        point: vec![0.0; ambient_dim],
        pieces: budget
            .collections
            .iter()
            .map(|c| (0, vec![0.0; c[0].dim()]))
            .collect(),
    }
}

/// Builds the multiscale net from per-scale subspace ball nets and verifies
/// it on `n_members` seeded synthetic members.
///
/// `scale_nets[s−1][i]` must have exactly `2^{n_s}` centers in the
/// coordinates of subspace `i`. The radius is the explicit error chain:
/// `2^{−rl}` for the residual, `2^{−r(s−1)}·3·2^{−n_s/2^{s+1}}` for each
/// netted scale and `2^{−r(s−1)}` for each scale past the depth.
pub fn multiscale_compose(
    budget: MultiscaleBudget,
    scale_nets: Vec<Vec<EpsNet>>,
    r: f64,
    ambient_dim: usize,
    n_members: usize,
    seed: u64,
) -> Result<MultiscaleNet> {
    if r != budget.r {
        return Err(Error::BudgetInconsistency(format!("rate {r} differs from budget rate {}", budget.r)));
    }
    for (s, n) in (1..=budget.depth).zip(&budget.n_s) {
        if *n != budget_bits(budget.l, budget.r, s) {
            return Err(Error::BudgetInconsistency(format!("n_{s} = {n} does not match the budget formula")));
        }
    }
    if scale_nets.len() != budget.depth {
        return Err(Error::BudgetInconsistency(format!(
            "expected nets for {} scales, got {}",
            budget.depth,
            scale_nets.len()
        )));
    }
    for (si, nets) in scale_nets.iter().enumerate() {
        let s = si + 1;
        let coll = &budget.collections[si];
        if nets.len() != coll.len() {
            return Err(Error::BudgetInconsistency(format!("scale {s}: one net per subspace required")));
        }
        for (net, sub) in nets.iter().zip(coll) {
            let expected = 1u128 << budget.n_s[si];
            if net.len() as u128 != expected {
                return Err(Error::BudgetInconsistency(format!(
                    "scale {s}: net has {} centers, expected 2^{}",
                    net.len(),
                    budget.n_s[si]
                )));
            }
            if net.ambient.dim != sub.dim() {
                return Err(Error::BudgetInconsistency(format!("scale {s}: net dimension differs from subspace")));
            }
        }
    }
    for coll in &budget.collections {
        for sub in coll {
            if sub.coords.iter().any(|&c| c >= ambient_dim) {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    actual: sub.coords.iter().max().map_or(0, |c| c + 1),
                });
            }
        }
    }

    let mut chain = vec![ChainTerm {
        scale: None,
        kind: "residual",
        value: 2f64.powf(-budget.r * budget.l as f64),
    }];
    for s in 1..=budget.depth {
        let d = 2f64.powi(s as i32 + 1);
        chain.push(ChainTerm {
            scale: Some(s),
            kind: "net",
            value: budget.weight(s) * 3.0 * 2f64.powf(-(budget.n_s[s - 1] as f64) / d),
        });
    }
    for s in (budget.depth + 1)..=budget.l {
        chain.push(ChainTerm {
            scale: Some(s),
            kind: "tail",
            value: budget.weight(s),
        });
    }
    let radius: f64 = chain.iter().map(|t| t.value).sum();

    let mut net = MultiscaleNet {
        budget,
        ambient_dim,
        scale_nets,
        chain,
        radius,
        certificate: Certificate::Composed { parents: Vec::new() },
    };
    let mut observed = 0.0_f64;
    for i in 0..n_members {
        let member = synthetic_hr_member(&net.budget, ambient_dim, seed.wrapping_add(i as u64));
        observed = observed.max(net.decode_distance(&member)?);
    }
    if observed > net.radius {
        return Err(Error::CoverageViolated {
            observed,
            radius: net.radius,
        });
    }
    net.certificate = Certificate::Sampled {
        n_samples: n_members,
        max_observed_distance: observed,
    };
    Ok(net)
}

/// Grid nets with `2^{n_s}` centers for every subspace of every netted scale.
pub fn grid_scale_nets(budget: &MultiscaleBudget) -> Result<Vec<Vec<EpsNet>>> {
    (1..=budget.depth)
        .map(|s| {
            budget.collections[s - 1]
                .iter()
                .map(|sub| grid_net_ball(sub.dim(), budget.n_s[s - 1]))
                .collect()
        })
        .collect()
}
