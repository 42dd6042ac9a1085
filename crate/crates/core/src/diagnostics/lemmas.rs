//! Numerical checks of the two spectral inequalities between kernel scales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trials::{nonnegative_trials, signed_trials, TrialKind};
use crate::error::{Error, Result};
use crate::grid::{
    convolve_periodic, forward_transform, gradient_spectral, lp_norm, GridField, PeriodicGrid,
};
use crate::kernels::{realize_on_torus, sqrt_kernel, KernelSpec, TorusKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRatio {
    pub kind: TrialKind,
    pub ratio: f64,
}

/// `‖R_η ⋆ f‖ ≤ C (ε/η)^k ‖R_ε^{1/2} ⋆ f‖` over a set of trial fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateBoundReport {
    pub epsilon: f64,
    pub eta: f64,
    pub k: f64,
    /// `(α + (1 + b²)/a)^{1/2}`.
    pub constant: f64,
    pub trials: Vec<TrialRatio>,
    pub max_ratio: f64,
    pub passed: bool,
}

/// `ε ‖|∇R_ε^{1/2}| ⋆ f‖ / ‖R_ε^{1/2} ⋆ f‖` across scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtGradientReport {
    pub epsilons: Vec<f64>,
    pub trials: Vec<Vec<TrialRatio>>,
    pub max_ratios: Vec<f64>,
    pub spread: f64,
    pub passed: bool,
}

/// `‖K ⋆ f‖_{L²}` through Parseval.
fn filtered_norm(kernel: &TorusKernel, f: &GridField) -> f64 {
    let fh = forward_transform(f);
    fh.coeffs()
        .iter()
        .enumerate()
        .map(|(flat, c)| kernel.multiplier(flat).powi(2) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// The ratio `‖R_η ⋆ f‖ / ((ε/η)^k ‖R_ε^{1/2} ⋆ f‖)` for one field.
pub fn intermediate_ratio(
    r_eta: &TorusKernel,
    half_eps: &TorusKernel,
    k: f64,
    f: &GridField,
) -> f64 {
    let epsilon = half_eps.epsilon();
    let eta = r_eta.epsilon();
    filtered_norm(r_eta, f) / ((epsilon / eta).powf(k) * filtered_norm(half_eps, f))
}

pub fn check_lemma_intermediate1(
    spec: &KernelSpec,
    epsilon: f64,
    eta: f64,
    grid: &PeriodicGrid,
    trials: usize,
    seed: u64,
) -> Result<IntermediateBoundReport> {
    if !(eta > 0.0 && eta < epsilon) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eta < epsilon, got {eta}, {epsilon}"
        )));
    }
    let env = spec.envelope().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} has no declared envelope constants",
            spec.family()
        ))
    })?;
    let constant = (env.alpha + (1.0 + env.b * env.b) / env.a).sqrt();
    let r_eta = realize_on_torus(spec, eta, grid)?;
    let half_eps = sqrt_kernel(&realize_on_torus(spec, epsilon, grid)?)?;
    let ratios: Vec<TrialRatio> = signed_trials(grid, trials, seed)
        .par_iter()
        .map(|(kind, f)| TrialRatio {
            kind: *kind,
            ratio: intermediate_ratio(&r_eta, &half_eps, spec.k(), f),
        })
        .collect();
    let max_ratio = ratios.iter().map(|t| t.ratio).fold(0.0, f64::max);
    Ok(IntermediateBoundReport {
        epsilon,
        eta,
        k: spec.k(),
        constant,
        passed: ratios
            .iter()
            .all(|t| t.ratio.is_finite() && t.ratio <= constant),
        trials: ratios,
        max_ratio,
    })
}

/// `|∇R_ε^{1/2}|` as a spatial field.
pub fn sqrt_gradient_magnitude(half: &TorusKernel) -> GridField {
    let grads = gradient_spectral(half.spatial());
    let grid = *half.grid();
    let values = (0..grid.len())
        .map(|i| {
            grads
                .iter()
                .map(|g| g.values()[i].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    GridField::scalar(grid, values).expect("finite gradient")
}

/// The ratio `ε ‖|∇R½| ⋆ f‖ / ‖R½ ⋆ f‖` for one field.
pub fn sqrt_gradient_ratio(half: &TorusKernel, grad_mag: &GridField, f: &GridField) -> Result<f64> {
    let num = lp_norm(&convolve_periodic(grad_mag, f)?, 2.0);
    Ok(half.epsilon() * num / filtered_norm(half, f))
}

pub fn check_lemma_intermediate2(
    spec: &KernelSpec,
    epsilons: &[f64],
    grid: &PeriodicGrid,
    trials: usize,
    seed: u64,
) -> Result<SqrtGradientReport> {
    let fields = nonnegative_trials(grid, trials, seed);
    let per_eps: Vec<Vec<TrialRatio>> = epsilons
        .par_iter()
        .map(|&eps| -> Result<Vec<TrialRatio>> {
            let half = sqrt_kernel(&realize_on_torus(spec, eps, grid)?)?;
            let mag = sqrt_gradient_magnitude(&half);
            fields
                .iter()
                .map(|(kind, f)| {
                    Ok(TrialRatio {
                        kind: *kind,
                        ratio: sqrt_gradient_ratio(&half, &mag, f)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let max_ratios: Vec<f64> = per_eps
        .iter()
        .map(|t| t.iter().map(|r| r.ratio).fold(0.0, f64::max))
        .collect();
    let lo = max_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = max_ratios.iter().cloned().fold(0.0, f64::max);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(SqrtGradientReport {
        epsilons: epsilons.to_vec(),
        passed: !max_ratios.is_empty() && max_ratios.iter().all(|r| r.is_finite()) && spread <= 2.0,
        trials: per_eps,
        max_ratios,
        spread,
    })
}
