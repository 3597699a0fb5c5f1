//! Ground truth for best m-term approximation.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::space::{lp_norm, segment_min_direction};
use crate::systems::SymmetricSystem;

/// Largest system [`sigma_m_bruteforce`] accepts.
pub const BRUTE_FORCE_MAX_ATOMS: usize = 12;
pub const BRUTE_FORCE_MAX_M: usize = 4;

/// Best m-term approximation on a support `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MTermResult {
    pub support: Vec<usize>,
    pub coefs: Vec<f64>,
    pub error: f64,
    /// `true` when `error` is the exact optimum rather than an upper bound.
    pub certified: bool,
}

/// Indices of the `m` largest `|x_j|`, ties to the smaller index.
pub fn largest_indices(x: &[f64], m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()));
    order.truncate(m);
    order
}

/// `σ_m(x, {e_j})_p` by coordinate truncation, exactly optimal for the
/// canonical system. `p ∈ (0, ∞]`; below 1 the tail is measured in the
/// quasi-norm.
pub fn sigma_m_canonical(x: &[f64], m: usize, p: f64) -> Result<MTermResult> {
    if m > x.len() {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds dimension {}", x.len())));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    let support = largest_indices(x, m);
    let mut tail = x.to_vec();
    for &j in &support {
        tail[j] = 0.0;
    }
    Ok(MTermResult {
        coefs: support.iter().map(|&j| x[j]).collect(),
        support,
        error: lp_norm(&tail, p),
        certified: true,
    })
}

/// `σ_m(f, 𝒟)` by enumerating every support of size `m`.
///
/// For `p = 2` each support is solved by least squares and the result is
/// exact. Otherwise the span is searched by coordinate descent from the
/// least-squares solution plus restarts, and the result is an upper bound
/// (`certified = false`). Ties keep the lexicographically smallest support.
pub fn sigma_m_bruteforce(system: &SymmetricSystem, f: &[f64], m: usize) -> Result<MTermResult> {
    let space = system.space();
    space.check_dim(f)?;
    if system.len() > BRUTE_FORCE_MAX_ATOMS || m > BRUTE_FORCE_MAX_M {
        return Err(Error::BruteForceTooLarge {
            atoms: system.len(),
            m,
        });
    }
    let p = space.lebesgue_p();
    let certified = space.is_hilbert();
    let m = m.min(system.len());
    let mut best: Option<MTermResult> = None;
    for support in combinations(system.len(), m) {
        let coefs = if support.is_empty() {
            Vec::new()
        } else {
            let ls = least_squares(system, f, &support);
            if certified {
                ls
            } else {
                span_descent(system, f, &support, ls, p)
            }
        };
        let error = residual_norm(system, f, &support, &coefs, p);
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(MTermResult {
                support,
                coefs,
                error,
                certified,
            });
        }
    }
    Ok(best.expect("at least the empty support is enumerated"))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn least_squares(system: &SymmetricSystem, f: &[f64], support: &[usize]) -> Vec<f64> {
    let dim = system.dim();
    let a = DMatrix::from_fn(dim, support.len(), |i, k| system.atom(support[k])[i]);
    let b = DVector::from_column_slice(f);
    let svd = a.svd(true, true);
    match svd.solve(&b, 1e-13) {
        Ok(c) => c.iter().copied().collect(),
        Err(_) => vec![0.0; support.len()],
    }
}

fn residual(system: &SymmetricSystem, f: &[f64], support: &[usize], coefs: &[f64]) -> Vec<f64> {
    let mut r = f.to_vec();
    for (&j, &c) in support.iter().zip(coefs) {
        r.iter_mut().zip(system.atom(j)).for_each(|(ri, g)| *ri -= c * g);
    }
    r
}

fn residual_norm(system: &SymmetricSystem, f: &[f64], support: &[usize], coefs: &[f64], p: f64) -> f64 {
    lp_norm(&residual(system, f, support, coefs), p)
}

const DESCENT_SWEEPS: usize = 500;
const DESCENT_RESTARTS: usize = 3;

fn span_descent(system: &SymmetricSystem, f: &[f64], support: &[usize], ls: Vec<f64>, p: f64) -> Vec<f64> {
    let mut starts = vec![ls, vec![0.0; support.len()]];
    let mut rng = seeded(0x0b5e_55ed);
    let scale = lp_norm(f, p).max(1e-300);
    for _ in 0..DESCENT_RESTARTS {
        starts.push((0..support.len()).map(|_| rng.gen_range(-scale..scale)).collect());
    }
    let mut best = (f64::INFINITY, Vec::new());
    for start in starts {
        let c = coordinate_descent(system, f, support, start, p);
        let e = residual_norm(system, f, support, &c, p);
        if e < best.0 {
            best = (e, c);
        }
    }
    best.1
}

fn coordinate_descent(system: &SymmetricSystem, f: &[f64], support: &[usize], mut c: Vec<f64>, p: f64) -> Vec<f64> {
    let mut value = residual_norm(system, f, support, &c, p);
    for _ in 0..DESCENT_SWEEPS {
        let before = value;
        for k in 0..support.len() {
            let g = system.atom(support[k]);
            let g_norm = lp_norm(g, p);
            if g_norm == 0.0 {
                continue;
            }
            // residual without coordinate k
            let mut r = residual(system, f, support, &c);
            r.iter_mut().zip(g).for_each(|(ri, gi)| *ri += c[k] * gi);
            // any minimizer t of ‖r − t g‖ has |t| ≤ 2‖r‖/‖g‖
            let bound = 2.0 * lp_norm(&r, p) / g_norm;
            if bound == 0.0 {
                c[k] = 0.0;
                continue;
            }
            let r0: Vec<f64> = r.iter().zip(g).map(|(ri, gi)| ri + bound * gi).collect();
            let d: Vec<f64> = g.iter().map(|gi| 2.0 * bound * gi).collect();
            let seg = segment_min_direction(&r0, &d, p, 1e-12);
            let t = -bound + 2.0 * bound * seg.lambda;
            if seg.value <= value {
                c[k] = t;
                value = seg.value;
            }
        }
        if before - value <= 1e-15 * before.max(1e-300) {
            break;
        }
    }
    c
}

/// Both sides of `(Σ_{j>m} x_j^p)^{1/p} ≤ m^{1/p−1/q} (Σ x_j^q)^{1/q}` for
/// the decreasing rearrangement of `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn tail_bound_check(x: &[f64], m: usize, p: f64, q: f64) -> Result<TailBound> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    if q > p {
        return Err(Error::TailExponentOrder { q, p });
    }
    let mut sorted: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let tail = if m < sorted.len() { &sorted[m..] } else { &[][..] };
    let lhs = lp_norm(tail, p);
    let rhs = (m as f64).powf(1.0 / p - 1.0 / q) * lp_norm(&sorted, q);
    Ok(TailBound {
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::LpSpace;

    #[test]
    fn canonical_examples() {
        let r = sigma_m_canonical(&[1.0, 0.0, 0.0], 1, 3.0).unwrap();
        assert_eq!(r.error, 0.0);
        assert_eq!(r.support, vec![0]);

        let x = [1.0, 0.5, 1.0 / 3.0, 0.25];
        let r = sigma_m_canonical(&x, 2, 2.0).unwrap();
        let expected = (1.0f64 / 9.0 + 1.0 / 16.0).sqrt();
        assert!((r.error - expected).abs() < 1e-15);
        assert!((r.error - 0.416_666_666_666_666_7).abs() < 1e-12);
        assert_eq!(r.support, vec![0, 1]);

        let r = sigma_m_canonical(&x, 0, 2.0).unwrap();
        assert_eq!(r.error, lp_norm(&x, 2.0));
        assert!(sigma_m_canonical(&x, 5, 2.0).is_err());
    }

    #[test]
    fn canonical_ties_prefer_smaller_index() {
        let r = sigma_m_canonical(&[0.5, -0.5, 0.5], 2, 2.0).unwrap();
        assert_eq!(r.support, vec![0, 1]);
    }

    #[test]
    fn canonical_error_decreases_to_zero() {
        let x = [0.3, -1.2, 0.0, 0.7, 0.05];
        let mut prev = f64::INFINITY;
        for m in 0..=5 {
            let e = sigma_m_canonical(&x, m, 1.5).unwrap().error;
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(prev, 0.0);
        assert_eq!(sigma_m_canonical(&x, 1, f64::INFINITY).unwrap().error, 0.7);
    }

    #[test]
    fn brute_force_guard() {
        let sys = SymmetricSystem::canonical(LpSpace::new(13, 2.0).unwrap());
        assert!(matches!(
            sigma_m_bruteforce(&sys, &[0.0; 13], 1),
            Err(Error::BruteForceTooLarge { .. })
        ));
        let sys = SymmetricSystem::canonical(LpSpace::new(6, 2.0).unwrap());
        assert!(sigma_m_bruteforce(&sys, &[0.0; 6], 5).is_err());
    }

    #[test]
    fn brute_force_span_member() {
        for p in [1.5, 2.0, 3.0] {
            let sys = SymmetricSystem::random(LpSpace::new(4, p).unwrap(), 6, 2).unwrap();
            let f: Vec<f64> = sys.atom(3).iter().map(|v| -1.7 * v).collect();
            let r = sigma_m_bruteforce(&sys, &f, 1).unwrap();
            assert!(r.error < 1e-10, "p={p}: {}", r.error);
            assert_eq!(r.support, vec![3]);
            assert_eq!(r.certified, p == 2.0);
        }
    }

    #[test]
    fn brute_force_orthonormal_pair() {
        let s = 0.5f64.sqrt();
        let sys = SymmetricSystem::new(LpSpace::new(2, 2.0).unwrap(), vec![vec![s, s], vec![s, -s]]).unwrap();
        let f = [2.0 * s, 0.0];
        let r = sigma_m_bruteforce(&sys, &f, 1).unwrap();
        assert!((r.error - 1.0).abs() < 1e-12);
        assert!(r.certified);
    }

    #[test]
    fn combinations_enumerate_in_lex_order() {
        let c = combinations(4, 2);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![0, 1]);
        assert_eq!(c[5], vec![2, 3]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn tail_bound_examples() {
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        let t = tail_bound_check(&x, 1, 2.0, 1.0).unwrap();
        assert_eq!(t.lhs, 0.0);
        assert!(t.pass);

        let n = 16;
        let x = vec![1.0 / n as f64; n];
        let t = tail_bound_check(&x, 4, 2.0, 1.0).unwrap();
        assert!((t.lhs - 12f64.sqrt() / 16.0).abs() < 1e-15);
        assert!((t.lhs - 0.216_506_350_946_109_66).abs() < 1e-12);
        assert!((t.rhs - 0.5).abs() < 1e-15);
        assert!(t.pass);

        assert!(matches!(tail_bound_check(&x, 4, 1.0, 2.0), Err(Error::TailExponentOrder { .. })));
    }
}
