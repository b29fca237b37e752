use crate::error::{Error, Result};

pub const DEFAULT_SPAN: f64 = 0.2;

/// A series split into a smooth trend and the residual around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub trend: Vec<f64>,
    pub residuals: Vec<f64>,
    pub span: f64,
}

/// Neighbor count for a span, `⌈span·n⌉` capped at `n`.
pub(crate) fn neighbor_count(span: f64, n: usize) -> usize {
    // Guard against 0.2 * 10 = 2.0000000000000004 rounding up to 3.
    let k = (span * n as f64 - 1e-9).ceil().max(0.0) as usize;
    k.min(n)
}

/// Local-linear Lowess on a unit-spaced series.
///
/// Each point is fitted by weighted least squares over its `⌈span·n⌉`
/// nearest neighbors with tricube weights `(1 − (d/h)³)³`, where `h` is
/// the distance to the farthest of those neighbors. No robustness
/// iterations. When only one neighbor carries weight the fit falls back
/// to the weighted mean.
pub fn lowess_smooth(series: &[f64], span: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::contract("lowess needs at least 2 points"));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::contract(format!("span must lie in (0, 1], got {span}")));
    }
    let k = neighbor_count(span, n);
    if k < 2 {
        return Err(Error::contract(format!(
            "span {span} covers fewer than 2 of {n} points"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("lowess input must be finite"));
    }
    let mut trend = Vec::with_capacity(n);
    for i in 0..n {
        let left = i;
        let right = n - 1 - i;
        // Smallest radius r whose closed neighborhood holds k points.
        let mut r = 0usize;
        while 1 + r.min(left) + r.min(right) < k {
            r += 1;
        }
        let h = r as f64;
        let lo = i - r.min(left);
        let hi = i + r.min(right);
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        let mut weights = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let d = (j as f64 - i as f64).abs() / h;
            let w = if d < 1.0 {
                let t = 1.0 - d * d * d;
                t * t * t
            } else {
                0.0
            };
            weights.push(w);
            // x centered on i keeps the normal equations well conditioned.
            let x = j as f64 - i as f64;
            sw += w;
            sx += w * x;
            sy += w * series[j];
        }
        let xm = sx / sw;
        let ym = sy / sw;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (w, j) in weights.iter().zip(lo..=hi) {
            let dx = j as f64 - i as f64 - xm;
            sxx += w * dx * dx;
            sxy += w * dx * (series[j] - ym);
        }
        let fit = if sxx > 1e-12 * sw {
            ym + (sxy / sxx) * (0.0 - xm)
        } else {
            ym
        };
        trend.push(fit);
    }
    Ok(trend)
}

pub fn detrend(series: &[f64], span: f64) -> Result<ResidualSeries> {
    let trend = lowess_smooth(series, span)?;
    let residuals = series.iter().zip(&trend).map(|(y, t)| y - t).collect();
    Ok(ResidualSeries { trend, residuals, span })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_lines() {
        let line: Vec<f64> = (0..57).map(|i| 3.0 - 0.25 * i as f64).collect();
        for span in [0.1, 0.2, 0.5, 1.0] {
            let trend = lowess_smooth(&line, span).unwrap();
            for (a, b) in trend.iter().zip(&line) {
                assert!((a - b).abs() < 1e-9, "span {span}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_stays_constant() {
        let c = vec![4.5; 40];
        let trend = lowess_smooth(&c, 0.2).unwrap();
        assert!(trend.iter().all(|v| (v - 4.5).abs() < 1e-12));
    }

    #[test]
    fn smoothing_removes_low_frequency_power() {
        // Deterministic pseudo-noise keeps the check reproducible.
        let series: Vec<f64> = (0..200)
            .map(|i| {
                let t = i as f64;
                (t * 2.0 * std::f64::consts::PI / 200.0).sin() * 5.0 + ((t * 12.9898).sin() * 43758.5453).fract()
            })
            .collect();
        let r = detrend(&series, 0.2).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&r.residuals) < var(&series));
        for ((t, e), y) in r.trend.iter().zip(&r.residuals).zip(&series) {
            assert!((t + e - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn neighbor_count_rounding() {
        assert_eq!(neighbor_count(0.2, 10), 2);
        assert_eq!(neighbor_count(0.2, 11), 3);
        assert_eq!(neighbor_count(0.25, 500), 125);
        assert_eq!(neighbor_count(1.0, 7), 7);
    }

    #[test]
    fn rejects_short_input() {
        assert!(lowess_smooth(&[1.0], 0.5).is_err());
        assert!(lowess_smooth(&[1.0, 2.0, 3.0], 0.2).is_err());
        assert!(lowess_smooth(&[1.0, 2.0, 3.0], 0.0).is_err());
        assert!(lowess_smooth(&[1.0, f64::NAN, 3.0], 1.0).is_err());
    }
}
