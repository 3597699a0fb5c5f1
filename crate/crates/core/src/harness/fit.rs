use serde::Serialize;

use crate::error::{Error, Result};

/// Values at or below this are dropped before taking logs.
pub const LOG_FLOOR: f64 = 1e-13;

/// Default allowed deviation of a fitted exponent from its target.
pub const DEFAULT_SLACK: f64 = 0.15;

/// Least-squares line through `(log m, log v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub m_min: f64,
    pub m_max: f64,
    pub n_points: usize,
    pub target: f64,
    pub slack: f64,
    /// `|slope − target| ≤ slack`.
    pub pass: bool,
}

/// Fits `log v = intercept + slope · log m` over points with `m` in `range`
/// (inclusive) and `v > LOG_FLOOR`.
pub fn fit_rate(values: &[(f64, f64)], target: f64, slack: f64, range: Option<(f64, f64)>) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .filter(|(m, v)| *m > 0.0 && v.is_finite() && *v > LOG_FLOOR)
        .filter(|(m, _)| range.is_none_or(|(lo, hi)| *m >= lo && *m <= hi))
        .map(|(m, v)| (m.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let (m_min, m_max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0.exp()), hi.max(p.0.exp())));
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        m_min,
        m_max,
        n_points: pts.len(),
        target,
        slack,
        pass: (slope - target).abs() <= slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (1..=64).map(|m| (m as f64, f(m as f64))).collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate(&synth(|m| 1.0 / m), -1.0, 0.15, None).unwrap();
        assert!((fit.slope + 1.0).abs() <= 1e-12);
        assert!(fit.pass);

        let fit = fit_rate(&synth(|m| 3.0 * m.powf(-0.5)), -0.5, 0.15, None).unwrap();
        assert!((fit.slope + 0.5).abs() <= 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() <= 1e-12);
        assert!(fit.residual_rms < 1e-12);

        let fit = fit_rate(&synth(|_| 2.0), 0.0, 0.15, None).unwrap();
        assert!(fit.slope.abs() <= 1e-12);
    }

    #[test]
    fn range_and_floor_are_respected() {
        let mut v = synth(|m| m.powf(-2.0));
        v.push((100.0, 0.0));
        let fit = fit_rate(&v, -2.0, 0.1, Some((8.0, 32.0))).unwrap();
        assert_eq!(fit.n_points, 25);
        assert_eq!((fit.m_min.round(), fit.m_max.round()), (8.0, 32.0));
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 0.0)], 0.0, 0.1, None),
            Err(Error::InsufficientPoints(1))
        ));
    }
}
