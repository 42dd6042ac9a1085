//! Seeded random trial fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{gradient_spectral, FieldKind, GridField, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialKind {
    Constant,
    Smooth,
    WhiteNoise,
    NoiseDerivative,
    Delta,
    SmoothPositive,
    Bumps,
    ClippedNoise,
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn white_noise(grid: &PeriodicGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s = 3f64.sqrt();
    (0..grid.len()).map(|_| rng.gen_range(-s..s)).collect()
}

/// Random trigonometric polynomial with frequencies `|m_a| ≤ 4`.
fn smooth(grid: &PeriodicGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = grid.dim();
    let modes: Vec<([f64; 3], f64, f64)> = (0..8)
        .map(|_| {
            let mut m = [0.0; 3];
            for c in m.iter_mut().take(d) {
                *c = rng.gen_range(-4i32..=4) as f64;
            }
            (m, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    (0..grid.len())
        .map(|flat| {
            let x = grid.node(flat);
            modes
                .iter()
                .map(|(m, amp, phase)| {
                    let arg: f64 = (0..d).map(|a| m[a] * x[a]).sum();
                    amp * (2.0 * PI * arg + phase).cos()
                })
                .sum()
        })
        .collect()
}

fn scaled(values: Vec<f64>) -> Vec<f64> {
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return values;
    }
    values.into_iter().map(|v| v / peak).collect()
}

fn bumps(grid: &PeriodicGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = grid.dim();
    let centres: Vec<([f64; 3], f64)> = (0..4)
        .map(|_| {
            let mut c = [0.0; 3];
            for v in c.iter_mut().take(d) {
                *v = rng.gen::<f64>();
            }
            (c, rng.gen_range(0.02..0.15))
        })
        .collect();
    (0..grid.len())
        .map(|flat| {
            let x = grid.node(flat);
            centres
                .iter()
                .map(|(c, w)| {
                    let r2 = crate::grid::torus_distance(&x[..d], &c[..d]).powi(2);
                    (-r2 / (2.0 * w * w)).exp()
                })
                .sum()
        })
        .collect()
}

/// One trial field of the given kind.
pub fn trial_field(grid: &PeriodicGrid, kind: TrialKind, rng: &mut ChaCha8Rng) -> GridField {
    let values = match kind {
        TrialKind::Constant => vec![1.0; grid.len()],
        TrialKind::Smooth => scaled(smooth(grid, rng)),
        TrialKind::WhiteNoise => white_noise(grid, rng),
        TrialKind::NoiseDerivative => {
            let mut out = vec![0.0; grid.len()];
            for axis in 0..grid.dim() {
                let f = GridField::new(*grid, white_noise(grid, rng), FieldKind::Scalar)
                    .expect("finite");
                let g = &gradient_spectral(&f)[axis];
                out.iter_mut()
                    .zip(g.values())
                    .for_each(|(o, v)| *o += v * grid.spacing());
            }
            out
        }
        TrialKind::Delta => {
            let flat = rng.gen_range(0..grid.len());
            return GridField::discrete_delta(*grid, flat).with_kind(FieldKind::Scalar);
        }
        TrialKind::SmoothPositive => scaled(smooth(grid, rng))
            .into_iter()
            .map(|v| 1.0 + 0.9 * v)
            .collect(),
        TrialKind::Bumps => bumps(grid, rng),
        TrialKind::ClippedNoise => white_noise(grid, rng)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect(),
    };
    GridField::new(*grid, values, FieldKind::Scalar).expect("trial fields are finite")
}

/// `count` signed fields cycling over constant, smooth, white noise and noise derivative.
pub fn signed_trials(grid: &PeriodicGrid, count: usize, seed: u64) -> Vec<(TrialKind, GridField)> {
    let kinds = [
        TrialKind::Smooth,
        TrialKind::WhiteNoise,
        TrialKind::NoiseDerivative,
    ];
    let mut rng = rng(seed);
    let mut out = vec![(
        TrialKind::Constant,
        trial_field(grid, TrialKind::Constant, &mut rng),
    )];
    out.extend((0..count).map(|i| {
        let kind = kinds[i % kinds.len()];
        (kind, trial_field(grid, kind, &mut rng))
    }));
    out
}

/// `count` nonnegative fields cycling over uniform, delta, smooth positive, bumps, clipped noise.
pub fn nonnegative_trials(
    grid: &PeriodicGrid,
    count: usize,
    seed: u64,
) -> Vec<(TrialKind, GridField)> {
    let kinds = [
        TrialKind::Constant,
        TrialKind::Delta,
        TrialKind::SmoothPositive,
        TrialKind::Bumps,
        TrialKind::ClippedNoise,
    ];
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let kind = kinds[i % kinds.len()];
            (kind, trial_field(grid, kind, &mut rng))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::mass;

    #[test]
    fn nonnegative_trials_are_nonnegative_and_seeded() {
        let grid = PeriodicGrid::new(2, 32).unwrap();
        let a = nonnegative_trials(&grid, 10, 7);
        let b = nonnegative_trials(&grid, 10, 7);
        assert_eq!(a, b);
        for (_, f) in &a {
            assert!(f.min() >= 0.0);
            assert!(mass(f) > 0.0);
        }
    }

    #[test]
    fn noise_derivative_has_zero_mean() {
        let grid = PeriodicGrid::new(1, 128).unwrap();
        let f = trial_field(&grid, TrialKind::NoiseDerivative, &mut rng(1));
        assert!(mass(&f).abs() < 1e-12);
    }
}
