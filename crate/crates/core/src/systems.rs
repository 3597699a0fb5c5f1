//! Finite symmetric systems, their q-hulls and the Hilbert-case hull distance.
//!
//! Atoms are stored once; every routine treats `±g_j` as members of the
//! system and reports selections as `(index, sign)`.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::space::{dot, LpSpace};

const NORM_TOL: f64 = 1e-12;

/// A finite system `𝒟 = {±g_j}` of elements with `‖g_j‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSystem {
    space: LpSpace,
    atoms: Vec<Vec<f64>>,
    normalized: bool,
}

impl SymmetricSystem {
    /// Validates dimensions and atom norms; `normalized` is set when every
    /// atom has unit norm to within 1e-12.
    pub fn new(space: LpSpace, atoms: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySystem);
        }
        let mut normalized = true;
        for (index, g) in atoms.iter().enumerate() {
            let norm = space.norm(g)?;
            if !norm.is_finite() || norm > 1.0 + NORM_TOL {
                return Err(Error::AtomNormTooLarge { index, norm });
            }
            if (norm - 1.0).abs() > NORM_TOL {
                normalized = false;
            }
        }
        Ok(Self {
            space,
            atoms,
            normalized,
        })
    }

    /// The coordinate vectors `e_1, …, e_n`.
    pub fn canonical(space: LpSpace) -> Self {
        let n = space.dim();
        let atoms = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect();
        Self {
            space,
            atoms,
            normalized: true,
        }
    }

    /// Seeded standard-normal columns rescaled to unit ℓ_p norm.
    pub fn random(space: LpSpace, n_atoms: usize, seed: u64) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::EmptySystem);
        }
        let mut rng = seeded(seed);
        let atoms = (0..n_atoms)
            .map(|_| loop {
                let g: Vec<f64> = (0..space.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let s = space.norm(&g).expect("dimension matches");
                if s > 0.0 {
                    break g.into_iter().map(|v| v / s).collect::<Vec<_>>();
                }
            })
            .collect();
        Self::new(space, atoms)
    }

    pub fn space(&self) -> &LpSpace {
        &self.space
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// `Σ c_j g_j`.
    pub fn synthesize(&self, coefs: &[f64]) -> Result<Vec<f64>> {
        if coefs.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.atoms.len(),
                actual: coefs.len(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        for (c, g) in coefs.iter().zip(&self.atoms) {
            if *c != 0.0 {
                out.iter_mut().zip(g).for_each(|(o, v)| *o += c * v);
            }
        }
        Ok(out)
    }

    /// Pairings `⟨functional, g_j⟩` for every atom.
    pub fn pairings(&self, functional: &[f64]) -> Vec<f64> {
        self.atoms.iter().map(|g| dot(functional, g)).collect()
    }

    /// JSON `{dim, p, atoms}` with every coordinate printed to 17 significant
    /// digits, which round-trips each `f64` exactly.
    pub fn to_json(&self) -> Result<String> {
        let doc = SystemDocOut {
            dim: self.dim(),
            p: Sig17(self.space.lebesgue_p()),
            atoms: self.atoms.iter().map(|g| Sig17Vec(g)).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SystemDocIn = serde_json::from_str(s)?;
        let space = LpSpace::new(doc.dim, doc.p)?;
        Self::new(space, doc.atoms)
    }
}

/// Serializes an `f64` as a JSON number with 17 significant digits.
pub(crate) struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_sig17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub(crate) struct Sig17Vec<'a>(pub &'a [f64]);

impl Serialize for Sig17Vec<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for v in self.0 {
            seq.serialize_element(&Sig17(*v))?;
        }
        seq.end()
    }
}

/// `{:.16e}`: one leading digit plus sixteen fractional digits.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct SystemDocOut<'a> {
    dim: usize,
    p: Sig17,
    atoms: Vec<Sig17Vec<'a>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDocIn {
    dim: usize,
    p: f64,
    atoms: Vec<Vec<f64>>,
}

/// Coefficients `c` over the atoms of a system, tagged with a hull exponent.
#[derive(Debug, Clone)]
pub struct CoefRepr {
    system: Arc<SymmetricSystem>,
    coefs: Vec<f64>,
    hull_q: f64,
}

fn check_hull_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidHullExponent(q))
    }
}

impl CoefRepr {
    pub fn new(system: Arc<SymmetricSystem>, coefs: Vec<f64>, hull_q: f64) -> Result<Self> {
        check_hull_q(hull_q)?;
        if coefs.len() != system.len() {
            return Err(Error::DimensionMismatch {
                expected: system.len(),
                actual: coefs.len(),
            });
        }
        Ok(Self {
            system,
            coefs,
            hull_q,
        })
    }

    pub fn system(&self) -> &Arc<SymmetricSystem> {
        &self.system
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn hull_q(&self) -> f64 {
        self.hull_q
    }

    /// `Σ |c_j|^q`.
    pub fn hull_sum(&self) -> f64 {
        let q = self.hull_q;
        self.coefs.iter().map(|c| c.abs().powf(q)).sum()
    }

    pub fn in_hull(&self) -> bool {
        self.hull_sum() <= 1.0 + NORM_TOL
    }

    pub fn synthesize(&self) -> Vec<f64> {
        self.system.synthesize(&self.coefs).expect("coefficient length checked at construction")
    }
}

/// Draws an element of `A_q(𝒟)` on the boundary `Σ|c_j|^q = 1`.
///
/// Weights are uniform on the probability simplex (normalized exponentials),
/// `|c_j| = w_j^{1/q}`, and signs are independent fair coins.
pub fn sample_hull(system: &Arc<SymmetricSystem>, hull_q: f64, seed: u64) -> Result<CoefRepr> {
    let support: Vec<usize> = (0..system.len()).collect();
    sample_on_support(system, hull_q, &support, seed)
}

/// Like [`sample_hull`], restricted to `support_size` atoms chosen uniformly
/// without replacement. Small supports reach the extremal, nearly flat
/// elements of the hull that full-support simplex draws almost never produce.
pub fn sample_hull_sparse(
    system: &Arc<SymmetricSystem>,
    hull_q: f64,
    support_size: usize,
    seed: u64,
) -> Result<CoefRepr> {
    let idx = random_support(system, support_size, seed)?;
    sample_on_support(system, hull_q, &idx, seed)
}

/// Flat boundary element: `support_size` random atoms, each with
/// `|c_j| = support_size^{−1/q}` and a random sign.
pub fn sample_hull_flat(
    system: &Arc<SymmetricSystem>,
    hull_q: f64,
    support_size: usize,
    seed: u64,
) -> Result<CoefRepr> {
    check_hull_q(hull_q)?;
    let idx = random_support(system, support_size, seed)?;
    let mut rng = seeded(seed);
    let mag = (support_size as f64).powf(-1.0 / hull_q);
    let mut coefs = vec![0.0; system.len()];
    for &j in &idx {
        coefs[j] = if rng.gen::<bool>() { mag } else { -mag };
    }
    CoefRepr::new(Arc::clone(system), coefs, hull_q)
}

fn random_support(system: &SymmetricSystem, support_size: usize, seed: u64) -> Result<Vec<usize>> {
    if support_size == 0 || support_size > system.len() {
        return Err(Error::InvalidArgument(format!(
            "support size {support_size} outside 1..={}",
            system.len()
        )));
    }
    let mut rng = seeded(seed ^ 0x5eed_5a3b_1e5f_0001);
    let mut idx: Vec<usize> = (0..system.len()).collect();
    // partial Fisher-Yates
    for i in 0..support_size {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(support_size);
    idx.sort_unstable();
    Ok(idx)
}

fn sample_on_support(
    system: &Arc<SymmetricSystem>,
    hull_q: f64,
    support: &[usize],
    seed: u64,
) -> Result<CoefRepr> {
    check_hull_q(hull_q)?;
    let mut rng = seeded(seed);
    let e: Vec<f64> = support.iter().map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = e.iter().sum();
    let mut coefs = vec![0.0; system.len()];
    for (&j, ej) in support.iter().zip(&e) {
        let w = ej / total;
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        coefs[j] = sign * w.powf(1.0 / hull_q);
    }
    CoefRepr::new(Arc::clone(system), coefs, hull_q)
}

/// Certified bracket on `b = inf_{φ ∈ A_1(𝒟)} ‖f − φ‖` in the Hilbert case.
#[derive(Debug, Clone)]
pub struct HullDistance {
    pub b_upper: f64,
    pub b_lower: f64,
    pub witness: CoefRepr,
    pub iterations: usize,
    /// `(b_upper, b_lower)` after every iteration.
    pub history: Vec<(f64, f64)>,
}

/// Away-step Frank–Wolfe on `‖f − φ‖²` over `conv(±g_j)`.
///
/// The upper bound is the current objective; the lower bound comes from the
/// Frank–Wolfe duality gap, `b² ≥ ‖f−φ‖² − 2⟨f−φ, s−φ⟩`, and is kept as a
/// running maximum. Stops when `b_upper² − b_lower² ≤ tol`.
pub fn hull_distance_l2(
    system: &Arc<SymmetricSystem>,
    f: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<HullDistance> {
    let space = system.space();
    if !space.is_hilbert() {
        return Err(Error::NotHilbert(space.lebesgue_p()));
    }
    space.check_dim(f)?;
    let n = system.len();
    // vertex 2j is +g_j, vertex 2j+1 is -g_j
    let mut alpha = vec![0.0; 2 * n];
    let vertex = |k: usize| -> (usize, f64) { (k / 2, if k.is_multiple_of(2) { 1.0 } else { -1.0 }) };
    let phi_of = |alpha: &[f64]| -> Vec<f64> {
        let mut phi = vec![0.0; f.len()];
        for (k, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                let (j, s) = vertex(k);
                phi.iter_mut().zip(system.atom(j)).for_each(|(o, g)| *o += a * s * g);
            }
        }
        phi
    };
    let fw_vertex = |resid: &[f64]| -> usize {
        let scores = system.pairings(resid);
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (j, &sc) in scores.iter().enumerate() {
            if sc > best_v {
                best_v = sc;
                best = 2 * j;
            }
            if -sc > best_v {
                best_v = -sc;
                best = 2 * j + 1;
            }
        }
        best
    };
    let vertex_vec = |k: usize| -> Vec<f64> {
        let (j, s) = vertex(k);
        system.atom(j).iter().map(|g| s * g).collect()
    };

    alpha[fw_vertex(f)] = 1.0;
    let mut history = Vec::new();
    let mut b_lower_sq = 0.0_f64;
    let mut best_upper_sq = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let phi = phi_of(&alpha);
        let resid: Vec<f64> = f.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let h = dot(&resid, &resid);
        best_upper_sq = best_upper_sq.min(h);
        let s_idx = fw_vertex(&resid);
        let s = vertex_vec(s_idx);
        let gap_fw = dot(&resid, &s) - dot(&resid, &phi);
        b_lower_sq = b_lower_sq.max(h - 2.0 * gap_fw.max(0.0));
        let b_lower_sq_eff = b_lower_sq.min(best_upper_sq);
        history.push((best_upper_sq.sqrt(), b_lower_sq_eff.max(0.0).sqrt()));
        if best_upper_sq - b_lower_sq_eff <= tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        // away vertex: active vertex with smallest pairing against the residual
        let mut a_idx = None;
        let mut a_score = f64::INFINITY;
        for (k, &w) in alpha.iter().enumerate() {
            if w > 0.0 {
                let (j, sg) = vertex(k);
                let sc = sg * dot(&resid, system.atom(j));
                if sc < a_score {
                    a_score = sc;
                    a_idx = Some(k);
                }
            }
        }
        let a_idx = a_idx.expect("active set is never empty");
        let gap_away = dot(&resid, &phi) - a_score;

        let (dir, gamma_max, fw_step) = if gap_fw >= gap_away || alpha[a_idx] >= 1.0 {
            let d: Vec<f64> = s.iter().zip(&phi).map(|(x, y)| x - y).collect();
            (d, 1.0, true)
        } else {
            let av = vertex_vec(a_idx);
            let d: Vec<f64> = phi.iter().zip(&av).map(|(x, y)| x - y).collect();
            (d, alpha[a_idx] / (1.0 - alpha[a_idx]), false)
        };
        let dd = dot(&dir, &dir);
        if dd == 0.0 {
            break;
        }
        let gamma = (dot(&resid, &dir) / dd).clamp(0.0, gamma_max);
        if gamma == 0.0 {
            break;
        }
        if fw_step {
            alpha.iter_mut().for_each(|w| *w *= 1.0 - gamma);
            alpha[s_idx] += gamma;
        } else {
            alpha.iter_mut().for_each(|w| *w *= 1.0 + gamma);
            alpha[a_idx] -= gamma;
            if gamma >= gamma_max || alpha[a_idx] < 1e-300 {
                alpha[a_idx] = 0.0;
            }
        }
    }
    let coefs: Vec<f64> = (0..n).map(|j| alpha[2 * j] - alpha[2 * j + 1]).collect();
    let witness = CoefRepr::new(Arc::clone(system), coefs, 1.0)?;
    let (b_upper, b_lower) = *history.last().expect("at least one iteration recorded");
    Ok(HullDistance {
        b_upper,
        b_lower,
        witness,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(dim: usize, p: f64) -> LpSpace {
        LpSpace::new(dim, p).unwrap()
    }

    #[test]
    fn canonical_system_is_unit_in_every_lp() {
        for p in [1.5, 2.0, 3.0] {
            let sys = SymmetricSystem::canonical(space(3, p));
            assert_eq!(sys.len(), 3);
            assert!(sys.normalized());
            for (j, g) in sys.atoms().iter().enumerate() {
                assert_eq!(g[j], 1.0);
                assert_eq!(sys.space().norm(g).unwrap(), 1.0);
            }
            // re-validation passes
            SymmetricSystem::new(*sys.space(), sys.atoms().to_vec()).unwrap();
        }
        let one = SymmetricSystem::canonical(space(1, 2.0));
        assert_eq!(one.atoms(), &[vec![1.0]]);
    }

    #[test]
    fn random_system_is_normalized_and_deterministic() {
        let a = SymmetricSystem::random(space(4, 3.0), 8, 1).unwrap();
        let b = SymmetricSystem::random(space(4, 3.0), 8, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.normalized());
        for g in a.atoms() {
            assert!((a.space().norm(g).unwrap() - 1.0).abs() <= 1e-12);
        }
        let one = SymmetricSystem::random(space(2, 2.0), 1, 7).unwrap();
        assert_eq!(one.len(), 1);
        let c = SymmetricSystem::random(space(4, 3.0), 8, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_oversized_atoms() {
        let err = SymmetricSystem::new(space(2, 2.0), vec![vec![1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::AtomNormTooLarge { index: 0, .. }));
        let sub = SymmetricSystem::new(space(2, 2.0), vec![vec![0.5, 0.0]]).unwrap();
        assert!(!sub.normalized());
        assert!(SymmetricSystem::new(space(2, 2.0), vec![]).is_err());
    }

    #[test]
    fn hull_samples_satisfy_constraint() {
        let sys = Arc::new(SymmetricSystem::random(space(5, 2.0), 9, 3).unwrap());
        for seed in 0..20 {
            let r = sample_hull(&sys, 1.0, seed).unwrap();
            let l1: f64 = r.coefs().iter().map(|c| c.abs()).sum();
            assert!((l1 - 1.0).abs() <= 1e-12);
            let r = sample_hull(&sys, 0.5, seed).unwrap();
            assert!((r.hull_sum() - 1.0).abs() <= 1e-12);
            assert!(r.in_hull());
        }
        let single = Arc::new(SymmetricSystem::canonical(space(1, 2.0)));
        let r = sample_hull(&single, 0.3, 4).unwrap();
        assert_eq!(r.coefs()[0].abs(), 1.0);
        assert!(matches!(sample_hull(&sys, 1.5, 0), Err(Error::InvalidHullExponent(_))));
        assert!(matches!(sample_hull(&sys, 0.0, 0), Err(Error::InvalidHullExponent(_))));
    }

    #[test]
    fn sparse_samples_have_requested_support() {
        let sys = Arc::new(SymmetricSystem::canonical(space(16, 2.0)));
        let r = sample_hull_sparse(&sys, 0.5, 5, 9).unwrap();
        assert_eq!(r.coefs().iter().filter(|c| **c != 0.0).count(), 5);
        assert!((r.hull_sum() - 1.0).abs() <= 1e-12);
        assert!(sample_hull_sparse(&sys, 0.5, 17, 9).is_err());
    }

    #[test]
    fn synthesize_examples() {
        let sys = Arc::new(SymmetricSystem::canonical(space(2, 2.0)));
        let first = CoefRepr::new(Arc::clone(&sys), vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(first.synthesize(), vec![1.0, 0.0]);
        let zero = CoefRepr::new(Arc::clone(&sys), vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(zero.synthesize(), vec![0.0, 0.0]);
        let half = CoefRepr::new(Arc::clone(&sys), vec![0.5, -0.5], 1.0).unwrap();
        let n = sys.space().norm(&half.synthesize()).unwrap();
        assert!((n - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(sys.synthesize(&[1.0]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let sys = SymmetricSystem::random(space(3, 2.5), 4, 12).unwrap();
        let s = sys.to_json().unwrap();
        let back = SymmetricSystem::from_json(&s).unwrap();
        assert_eq!(sys, back);
        assert_eq!(back.to_json().unwrap(), s);
        assert!(s.contains("\"dim\":3"));
        assert!(SymmetricSystem::from_json(r#"{"dim":1,"p":2,"atoms":[[1]],"x":0}"#).is_err());
    }

    #[test]
    fn hull_distance_requires_hilbert() {
        let sys = Arc::new(SymmetricSystem::canonical(space(2, 3.0)));
        assert!(matches!(
            hull_distance_l2(&sys, &[1.0, 1.0], 1e-9, 100),
            Err(Error::NotHilbert(_))
        ));
    }

    #[test]
    fn hull_distance_single_atom() {
        let g = vec![0.6, 0.8];
        let sys = Arc::new(SymmetricSystem::new(space(2, 2.0), vec![g.clone()]).unwrap());
        let f: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
        let hd = hull_distance_l2(&sys, &f, 1e-12, 1000).unwrap();
        assert!((hd.b_upper - 1.0).abs() < 1e-9);
        assert!((hd.b_lower - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hull_distance_member_is_zero() {
        let sys = Arc::new(SymmetricSystem::random(space(6, 2.0), 10, 5).unwrap());
        let c = sample_hull(&sys, 1.0, 1).unwrap();
        // shrink slightly into the interior
        let f: Vec<f64> = c.synthesize().iter().map(|v| 0.9 * v).collect();
        let tol = 1e-10;
        let hd = hull_distance_l2(&sys, &f, tol, 100_000).unwrap();
        assert!(hd.b_upper * hd.b_upper <= tol, "{}", hd.b_upper);
        assert!(hd.witness.in_hull());
    }

    #[test]
    fn hull_distance_bounds_are_ordered_and_monotone() {
        let sys = Arc::new(SymmetricSystem::random(space(5, 2.0), 7, 8).unwrap());
        let f = vec![2.0, -1.0, 0.5, 3.0, 0.0];
        let hd = hull_distance_l2(&sys, &f, 1e-12, 5000).unwrap();
        let mut prev = f64::INFINITY;
        for &(u, l) in &hd.history {
            assert!(l <= u);
            assert!(u <= prev);
            prev = u;
        }
    }
}
