//! The ambient space ℓ_p^n: norms, norming functionals, modulus of smoothness
//! and convex line search along segments.
//!
//! Functionals on ℓ_p^n are represented concretely as dual vectors, and the
//! pairing is the Euclidean dot product.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(Σ|x_i|^p)^{1/p}` for any `p > 0` (a quasi-norm below 1), and `max|x_i|`
/// for `p = ∞`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    if p.is_infinite() {
        return scale;
    }
    if p == 2.0 {
        let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
        return scale * s.sqrt();
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let s: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// Euclidean pairing between a dual vector and a point.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Descriptor of ℓ_p^n with `1 < p < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct LpSpace {
    dim: usize,
    lebesgue_p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    dim: usize,
    p: f64,
}

impl TryFrom<RawSpace> for LpSpace {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        LpSpace::new(raw.dim, raw.p)
    }
}

impl From<LpSpace> for RawSpace {
    fn from(s: LpSpace) -> Self {
        RawSpace { dim: s.dim, p: s.lebesgue_p }
    }
}

impl LpSpace {
    /// Rejects `p ≤ 1` and `p = ∞`, where the space is not uniformly smooth.
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self { dim, lebesgue_p: p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lebesgue_p(&self) -> f64 {
        self.lebesgue_p
    }

    /// Power-type smoothness exponent `q = min(p, 2)`.
    pub fn smooth_q(&self) -> f64 {
        self.lebesgue_p.min(2.0)
    }

    /// Constant in `ρ(u) ≤ γ u^q`: `1/p` for `p ≤ 2`, `(p-1)/2` for `p ≥ 2`.
    pub fn gamma(&self) -> f64 {
        let p = self.lebesgue_p;
        if p <= 2.0 {
            1.0 / p
        } else {
            (p - 1.0) / 2.0
        }
    }

    /// Recursion exponent `q/(q-1)`, equal to `max(p/(p-1), 2)`.
    pub fn conj_p(&self) -> f64 {
        let q = self.smooth_q();
        q / (q - 1.0)
    }

    /// Hölder conjugate `p' = p/(p-1)` of the Lebesgue exponent.
    pub fn dual_p(&self) -> f64 {
        self.lebesgue_p / (self.lebesgue_p - 1.0)
    }

    pub fn is_hilbert(&self) -> bool {
        self.lebesgue_p == 2.0
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(lp_norm(x, self.lebesgue_p))
    }

    /// Norm of a dual vector, i.e. its ℓ_{p'} norm.
    pub fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        self.check_dim(g)?;
        Ok(lp_norm(g, self.dual_p()))
    }

    /// Unique norming functional `F_f`: `‖F_f‖ = 1` and `F_f(f) = ‖f‖`.
    pub fn norming_functional(&self, f: &[f64]) -> Result<Vec<f64>> {
        let nf = self.norm(f)?;
        if nf == 0.0 {
            return Err(Error::ZeroFunctional);
        }
        let e = self.lebesgue_p - 1.0;
        Ok(f.iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum() * (v.abs() / nf).powf(e)
                }
            })
            .collect())
    }

    /// The analytic upper bound `γ u^q` on the modulus of smoothness.
    pub fn modulus_bound(&self, u: f64) -> f64 {
        self.gamma() * u.powf(self.smooth_q())
    }

    /// Lower estimate of `ρ(u) = sup ½(‖x+uy‖ + ‖x−uy‖) − 1` over unit `x, y`.
    ///
    /// Each of `n_samples` seeded random unit pairs is improved by 200 sweeps
    /// of coordinate ascent with step halving; the best value is returned.
    pub fn modulus_smoothness_estimate(&self, u: f64, n_samples: usize, seed: u64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::InvalidArgument(format!("u must be positive, got {u}")));
        }
        if n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        let p = self.lebesgue_p;
        let n = self.dim;
        let objective = |x: &[f64], y: &[f64]| -> f64 {
            let mut plus = vec![0.0; n];
            let mut minus = vec![0.0; n];
            for i in 0..n {
                plus[i] = x[i] + u * y[i];
                minus[i] = x[i] - u * y[i];
            }
            0.5 * (lp_norm(&plus, p) + lp_norm(&minus, p)) - 1.0
        };
        let normalize = |v: &mut [f64]| {
            let s = lp_norm(v, p);
            if s > 0.0 {
                v.iter_mut().for_each(|c| *c /= s);
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0_f64;
        for _ in 0..n_samples {
            let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            normalize(&mut x);
            normalize(&mut y);
            let mut value = objective(&x, &y);
            let mut step = 0.5;
            for _ in 0..MODULUS_ASCENT_SWEEPS {
                let mut improved = false;
                for which in 0..2 {
                    for i in 0..n {
                        for dir in [1.0, -1.0] {
                            let (mut cx, mut cy) = (x.clone(), y.clone());
                            let target = if which == 0 { &mut cx } else { &mut cy };
                            target[i] += dir * step;
                            normalize(target);
                            let v = objective(&cx, &cy);
                            if v > value {
                                value = v;
                                x = cx;
                                y = cy;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                    if step < 1e-15 {
                        break;
                    }
                }
            }
            best = best.max(value);
        }
        Ok(best.max(0.0))
    }

    /// Minimizes `φ(λ) = ‖f − ((1−λ)a + λb)‖` over `λ ∈ [0, 1]`.
    pub fn segment_min(&self, f: &[f64], a: &[f64], b: &[f64], tol: f64) -> Result<SegmentMin> {
        self.check_dim(f)?;
        self.check_dim(a)?;
        self.check_dim(b)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
        }
        let r0: Vec<f64> = f.iter().zip(a).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        Ok(segment_min_direction(&r0, &d, self.lebesgue_p, tol))
    }
}

const MODULUS_ASCENT_SWEEPS: usize = 200;

/// Result of a line search on a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMin {
    pub lambda: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `‖r0 − λ d‖_p` over `[0, 1]`.
///
/// Golden-section search narrows the bracket to `tol`, a three-point grid
/// refines it, and the result is polished by bisection on the sign of the
/// one-sided derivative `−F_{r(λ)}(d)`, which resolves the minimizer well
/// below the `√ε` floor that value comparisons alone can reach.
pub(crate) fn segment_min_direction(r0: &[f64], d: &[f64], p: f64, tol: f64) -> SegmentMin {
    let phi = |lam: f64| -> f64 {
        let r: Vec<f64> = r0.iter().zip(d).map(|(x, y)| x - lam * y).collect();
        lp_norm(&r, p)
    };
    let slope = |lam: f64| -> f64 { slope_sign(r0, d, lam, p) };

    // golden section
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = phi(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut golden = (mid, phi(mid));
    for cand in [(mid - tol).max(0.0), (mid + tol).min(1.0)] {
        let v = phi(cand);
        if v < golden.1 {
            golden = (cand, v);
        }
    }

    // derivative-sign polish
    let polished = {
        let s0 = slope(0.0);
        let s1 = slope(1.0);
        if s0 >= 0.0 {
            0.0
        } else if s1 <= 0.0 {
            1.0
        } else {
            let width = 1e-6;
            let (mut a, mut b) = ((golden.0 - width).max(0.0), (golden.0 + width).min(1.0));
            if !(slope(a) < 0.0 && slope(b) > 0.0) {
                a = 0.0;
                b = 1.0;
            }
            let mut out = 0.5 * (a + b);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let s = slope(m);
                if s == 0.0 {
                    out = m;
                    break;
                } else if s < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
                out = 0.5 * (a + b);
            }
            out
        }
    };
    let mut best = SegmentMin {
        lambda: polished,
        value: phi(polished),
    };
    // The polished point wins unless something is clearly smaller.
    if golden.1 < best.value * (1.0 - 1e-14) {
        best = SegmentMin {
            lambda: golden.0,
            value: golden.1,
        };
    }
    for end in [0.0, 1.0] {
        let v = phi(end);
        if v < best.value {
            best = SegmentMin { lambda: end, value: v };
        }
    }
    best
}

/// Sign-carrying derivative of `λ ↦ ‖r0 − λ d‖_p^p` up to a positive factor.
fn slope_sign(r0: &[f64], d: &[f64], lam: f64, p: f64) -> f64 {
    let r: Vec<f64> = r0.iter().zip(d).map(|(x, y)| x - lam * y).collect();
    let scale = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let e = p - 1.0;
    -r.iter()
        .zip(d)
        .map(|(ri, di)| {
            if *ri == 0.0 {
                0.0
            } else {
                ri.signum() * (ri.abs() / scale).powf(e) * di
            }
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_non_smooth_exponents() {
        assert!(matches!(LpSpace::new(3, 1.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(LpSpace::new(3, 0.5), Err(Error::InvalidExponent(_))));
        assert!(LpSpace::new(3, f64::INFINITY).is_err());
        assert!(LpSpace::new(3, f64::NAN).is_err());
        assert!(matches!(LpSpace::new(0, 2.0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn derived_parameters() {
        let s = LpSpace::new(2, 1.5).unwrap();
        assert_eq!(s.smooth_q(), 1.5);
        assert!(close(s.gamma(), 1.0 / 1.5, 1e-15));
        assert!(close(s.conj_p(), 3.0, 1e-12));
        let s = LpSpace::new(2, 3.0).unwrap();
        assert_eq!(s.smooth_q(), 2.0);
        assert_eq!(s.gamma(), 1.0);
        assert_eq!(s.conj_p(), 2.0);
        for p in [1.1, 1.5, 2.0, 3.0, 7.0] {
            let s = LpSpace::new(1, p).unwrap();
            assert!(s.smooth_q() > 1.0 && s.smooth_q() <= 2.0);
            assert!(close(s.conj_p(), (p / (p - 1.0)).max(2.0), 1e-12));
        }
    }

    #[test]
    fn norm_examples() {
        let s2 = LpSpace::new(2, 2.0).unwrap();
        assert!(close(s2.norm(&[3.0, 4.0]).unwrap(), 5.0, 1e-15));
        let s3 = LpSpace::new(2, 3.0).unwrap();
        assert!(close(s3.norm(&[1.0, 1.0]).unwrap(), 1.259_921_049_894_873, 1e-12));
        assert_eq!(s3.norm(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            s3.norm(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn lp_norm_quasi_and_infinite() {
        assert_eq!(lp_norm(&[1.0, -3.0], f64::INFINITY), 3.0);
        // (1 + 1)^{2} for p = 1/2
        assert!(close(lp_norm(&[1.0, 1.0], 0.5), 4.0, 1e-12));
        assert_eq!(lp_norm(&[1.0, -2.0], 1.0), 3.0);
    }

    #[test]
    fn norming_functional_examples() {
        for p in [1.5, 2.0, 4.0] {
            let s = LpSpace::new(3, p).unwrap();
            assert_eq!(s.norming_functional(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        }
        let s = LpSpace::new(2, 2.0).unwrap();
        let g = s.norming_functional(&[3.0, 4.0]).unwrap();
        assert!(close(g[0], 0.6, 1e-15) && close(g[1], 0.8, 1e-15));

        let s = LpSpace::new(2, 4.0).unwrap();
        let g = s.norming_functional(&[1.0, 1.0]).unwrap();
        let expected = 2f64.powf(-0.75);
        assert!(close(g[0], expected, 1e-14) && close(g[1], expected, 1e-14));
        assert!(close(lp_norm(&g, 4.0 / 3.0), 1.0, 1e-12));

        assert_eq!(s.norming_functional(&[0.0, 0.0]), Err(Error::ZeroFunctional));
    }

    #[test]
    fn segment_min_examples() {
        let s = LpSpace::new(2, 2.0).unwrap();
        let f = [0.5, 0.5];
        let r = s.segment_min(&f, &[0.0, 0.0], &[1.0, 0.0], 1e-12).unwrap();
        assert!(close(r.lambda, 0.5, 1e-12), "{r:?}");
        assert!(close(r.value, 0.5, 1e-12));

        let r = s.segment_min(&f, &[0.5, 0.0], &[0.0, 1.0], 1e-12).unwrap();
        assert!(close(r.lambda, 0.4, 1e-12), "{r:?}");
        assert!(close(r.value, 0.05f64.sqrt(), 1e-12));

        let r = s.segment_min(&f, &f, &[1.0, -1.0], 1e-12).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn segment_min_worked_example_against_dense_grid() {
        let s = LpSpace::new(2, 2.0).unwrap();
        let (f, a, b) = ([0.5, 0.5], [0.5, 0.0], [0.0, 1.0]);
        let (mut best_l, mut best_v) = (0.0, f64::INFINITY);
        for i in 0..=100_000 {
            let l = i as f64 / 100_000.0;
            let x = [f[0] - (1.0 - l) * a[0] - l * b[0], f[1] - (1.0 - l) * a[1] - l * b[1]];
            let v = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if v < best_v {
                best_v = v;
                best_l = l;
            }
        }
        let r = s.segment_min(&f, &a, &b, 1e-12).unwrap();
        assert!(close(r.lambda, best_l, 1e-5));
        assert!(r.value <= best_v + 1e-15);
    }

    #[test]
    fn modulus_hilbert_closed_form() {
        let exact = 2f64.sqrt() - 1.0;
        for dim in [2, 3, 5] {
            let s = LpSpace::new(dim, 2.0).unwrap();
            let est = s.modulus_smoothness_estimate(1.0, 4, 11).unwrap();
            assert!(est <= exact + 1e-12, "dim {dim}: {est}");
            assert!(exact - est <= 1e-3, "dim {dim}: {est}");
        }
    }

    #[test]
    fn modulus_respects_power_type_bounds() {
        let s = LpSpace::new(3, 3.0).unwrap();
        let est = s.modulus_smoothness_estimate(0.1, 4, 5).unwrap();
        assert!(est <= 0.01 + 1e-9, "{est}");
        assert!(close(s.modulus_bound(0.1), 0.01, 1e-15));

        let s = LpSpace::new(3, 1.5).unwrap();
        let est = s.modulus_smoothness_estimate(0.1, 4, 5).unwrap();
        let bound = 0.1f64.powf(1.5) / 1.5;
        assert!(close(s.modulus_bound(0.1), bound, 1e-15));
        assert!(est <= bound + 1e-9, "{est} vs {bound}");
        assert!(est > 0.0);
    }

    #[test]
    fn modulus_rejects_bad_arguments() {
        let s = LpSpace::new(2, 2.0).unwrap();
        assert!(s.modulus_smoothness_estimate(0.0, 1, 0).is_err());
        assert!(s.modulus_smoothness_estimate(0.5, 0, 0).is_err());
    }
}
