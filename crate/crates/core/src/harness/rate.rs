use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `log distance = slope · log ε + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `(ε, distance)` rows; nonpositive distances are dropped.
pub fn fit_rate(rows: &[(f64, f64)]) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(e, d)| {
            let ok = *d > 0.0 && *e > 0.0 && d.is_finite();
            if !ok {
                log::warn!("dropping row ({e}, {d}) from the rate fit");
            }
            ok
        })
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    if kept.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs 3 positive rows, got {}",
            kept.len()
        )));
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / m;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs distinct epsilons".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = kept
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: kept.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub epsilon: f64,
    /// Largest distance over the snapshots.
    pub distance: f64,
    /// Space-time `L²` error of the mollified solution, where measured.
    pub l2_error: Option<f64>,
    pub method: String,
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub experiment: String,
    pub rows: Vec<RateRow>,
    pub fit: Option<RateFit>,
    /// Slope the measured rate must reach.
    pub target: f64,
    pub tolerance: f64,
    pub decreasing: bool,
    pub flags: Vec<String>,
    pub passed: bool,
}

impl RateReport {
    /// Fits the rows and decides the pass flag: strictly decreasing distances
    /// and `slope ≥ target − tolerance`. Identical solutions pass with a flag.
    pub fn assemble(experiment: &str, rows: Vec<RateRow>, target: f64, tolerance: f64) -> Self {
        let mut flags = Vec::new();
        let decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
        let scale = rows.iter().map(|r| r.epsilon).fold(0.0, f64::max).max(1.0);
        let identical = !rows.is_empty() && rows.iter().all(|r| r.distance <= 1e-12 * scale);
        let mut fit = None;
        let passed = if identical {
            flags.push("identical solutions; slope fit skipped".to_string());
            true
        } else if rows.len() < 3 {
            flags.push(format!(
                "need at least 3 epsilons for a slope, got {}",
                rows.len()
            ));
            false
        } else {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.distance)).collect();
            match fit_rate(&pairs) {
                Ok(f) => {
                    fit = Some(f);
                    if !decreasing {
                        flags.push("distances are not strictly decreasing in epsilon".into());
                    }
                    decreasing && f.slope >= target - tolerance
                }
                Err(e) => {
                    flags.push(e.to_string());
                    false
                }
            }
        };
        RateReport {
            experiment: experiment.to_string(),
            rows,
            fit,
            target,
            tolerance,
            decreasing,
            flags,
            passed,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn eps() -> Vec<f64> {
        vec![0.2, 0.1, 0.05, 0.025, 0.0125]
    }

    #[test]
    fn exact_power_law() {
        let rows: Vec<(f64, f64)> = eps().into_iter().map(|e| (e, e.sqrt())).collect();
        let f = fit_rate(&rows).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_linear_data() {
        let rows: Vec<(f64, f64)> = eps().into_iter().map(|e| (e, 3.0 * e)).collect();
        let f = fit_rate(&rows).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rows: Vec<(f64, f64)> = eps()
                .into_iter()
                .map(|e| (e, e.sqrt() * (1.0 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0))))
                .collect();
            assert!((fit_rate(&rows).unwrap().slope - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn drops_nonpositive_rows() {
        assert!(fit_rate(&[(0.2, 0.1), (0.1, 0.0), (0.05, 0.02)]).is_err());
        let f = fit_rate(&[(0.2, 0.2), (0.1, 0.1), (0.05, -1.0), (0.025, 0.025)]).unwrap();
        assert_eq!(f.points, 3);
    }

    fn row(e: f64, d: f64) -> RateRow {
        RateRow {
            epsilon: e,
            distance: d,
            l2_error: None,
            method: "quantile1d".into(),
            meta: serde_json::Value::Null,
        }
    }

    #[test]
    fn single_row_is_flagged() {
        let r = RateReport::assemble("rate1d", vec![row(0.1, 0.01)], 0.5, 0.05);
        assert!(!r.passed && r.fit.is_none() && !r.flags.is_empty());
    }

    #[test]
    fn identical_solutions_skip_the_fit() {
        let r = RateReport::assemble(
            "rate1d",
            vec![row(0.2, 0.0), row(0.1, 0.0), row(0.05, 0.0)],
            0.5,
            0.05,
        );
        assert!(r.passed && r.fit.is_none());
        assert!(r.flags[0].contains("identical"));
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(c in 0.01f64..100.0, p in 0.1f64..2.0) {
            let rows: Vec<(f64, f64)> = eps().into_iter().map(|e| (e, c * e.powf(p))).collect();
            let f = fit_rate(&rows).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
