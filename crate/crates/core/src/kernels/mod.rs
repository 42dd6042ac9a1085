//! Mollification kernels and their realisation on the torus.
//!
//! A [`KernelSpec`] is a radial Fourier profile `ξ ↦ R^(|ξ|)` with `R^(0) = 1`.
//! On the torus the periodised kernel `R_ε^T(x) = Σ_m R_ε(x + m)` has Fourier
//! coefficients `R^(ε m)` at every lattice frequency, so a [`TorusKernel`] is
//! stored as those multipliers plus their inverse transform.

mod admissibility;
mod closed_form;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    circle_distance, inverse_transform, FieldKind, GridField, PeriodicGrid, SpectralCoefficients,
};

pub use admissibility::{validate_admissibility, AdmissibilityReport, EtaRule, PropertyFlags};
pub use closed_form::{
    has_closed_form, lattice_sum_spatial, periodized_gradient, periodized_value, MAX_SHIFT,
};

/// Constants of the two-sided Fourier envelope
/// `1/α ≤ R^ ≤ 1` on `|ξ| ≤ 1` and `a|ξ|^{-2k} ≤ R^ ≤ b|ξ|^{-k}` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `R^(ξ) = (1 + |ξ|²)^{-s}`.
    Matern {
        s: f64,
    },
    /// `R(x) = e^{-|x|}/2`, `R^(ξ) = 1/(1 + 4π²ξ²)`.
    Laplace1d,
    Custom {
        name: String,
    },
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Matern { s } => write!(f, "matern(s={s})"),
            KernelFamily::Laplace1d => write!(f, "laplace1d"),
            KernelFamily::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analytic kernel: a radial Fourier profile and its envelope data.
#[derive(Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    profile: Profile,
    k: f64,
    envelope: Option<EnvelopeConstants>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("family", &self.family)
            .field("dim", &self.dim)
            .field("k", &self.k)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl KernelSpec {
    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Decay exponent `k` of the envelope.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Envelope constants known in closed form, if any.
    pub fn envelope(&self) -> Option<EnvelopeConstants> {
        self.envelope
    }

    /// `R^` at radius `|ξ| = r`.
    pub fn profile(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    pub fn profile_at(&self, xi: &[f64]) -> f64 {
        self.profile(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// The `2k > d + 2` smoothness condition for general-dimension use.
    pub fn meets_smoothness_threshold(&self) -> bool {
        2.0 * self.k > self.dim as f64 + 2.0
    }

    /// Kernel with profile `(R^)^{1/2}`.
    pub fn sqrt(&self) -> KernelSpec {
        let family = match &self.family {
            KernelFamily::Matern { s } => KernelFamily::Matern { s: s / 2.0 },
            KernelFamily::Laplace1d => KernelFamily::Custom {
                name: "sqrt(laplace1d)".into(),
            },
            KernelFamily::Custom { name } => KernelFamily::Custom {
                name: format!("sqrt({name})"),
            },
        };
        let inner = self.profile.clone();
        let envelope = self.envelope.map(|e| EnvelopeConstants {
            alpha: e.alpha.sqrt(),
            a: e.a.sqrt(),
            b: e.b.sqrt(),
            k: e.k / 2.0,
        });
        KernelSpec {
            family,
            dim: self.dim,
            profile: Arc::new(move |r| inner(r).sqrt()),
            k: self.k / 2.0,
            envelope,
        }
    }
}

/// Matérn profile `(1 + |ξ|²)^{-s}`; envelope `k = s`, `a = 2^{-s}`, `b = 1`, `α = 2^s`.
pub fn matern_kernel(s: f64, dim: usize) -> Result<KernelSpec> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Matérn exponent s = {s} must be positive"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} not in 1..=3"
        )));
    }
    if 2.0 * s <= dim as f64 + 2.0 {
        log::warn!("matern s = {s} in d = {dim} is below the 2k > d + 2 smoothness threshold");
    }
    Ok(KernelSpec {
        family: KernelFamily::Matern { s },
        dim,
        profile: Arc::new(move |r| (1.0 + r * r).powf(-s)),
        k: s,
        envelope: Some(EnvelopeConstants {
            alpha: 2f64.powf(s),
            a: 2f64.powf(-s),
            b: 1.0,
            k: s,
        }),
    })
}

/// One-dimensional Laplace kernel `e^{-|x|}/2`, convex away from the origin.
pub fn laplace_kernel_1d() -> KernelSpec {
    let c = 1.0 / (1.0 + 4.0 * PI * PI);
    KernelSpec {
        family: KernelFamily::Laplace1d,
        dim: 1,
        profile: Arc::new(|r| 1.0 / (1.0 + 4.0 * PI * PI * r * r)),
        k: 1.0,
        envelope: Some(EnvelopeConstants {
            alpha: 1.0 + 4.0 * PI * PI,
            a: c,
            b: c,
            k: 1.0,
        }),
    }
}

/// The Laplace kernel requested in dimension `dim`; only `dim = 1` exists.
pub fn laplace_kernel(dim: usize) -> Result<KernelSpec> {
    if dim != 1 {
        return Err(Error::KernelDimension {
            family: "laplace1d".into(),
            dim,
        });
    }
    Ok(laplace_kernel_1d())
}

/// Kernel from an arbitrary radial profile with `profile(0) = 1`.
pub fn custom_kernel(
    name: &str,
    dim: usize,
    k: f64,
    profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<KernelSpec> {
    let p0 = profile(0.0);
    if (p0 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "profile({name})(0) = {p0}, expected 1"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} not in 1..=3"
        )));
    }
    Ok(KernelSpec {
        family: KernelFamily::Custom {
            name: name.to_string(),
        },
        dim,
        profile: Arc::new(profile),
        k,
        envelope: None,
    })
}

/// Which scale(s) a torus kernel was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "kebab-case")]
pub enum KernelScale {
    Single { epsilon: f64 },
    Intermediate { epsilon: f64, eta: f64 },
}

/// A kernel realised on a grid at a given scale.
#[derive(Debug, Clone)]
pub struct TorusKernel {
    spec: KernelSpec,
    scale: KernelScale,
    grid: PeriodicGrid,
    multipliers: SpectralCoefficients,
    spatial: GridField,
}

impl TorusKernel {
    fn from_multipliers(
        spec: KernelSpec,
        scale: KernelScale,
        grid: PeriodicGrid,
        mult: Vec<f64>,
    ) -> Self {
        let coeffs = mult.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let multipliers =
            SpectralCoefficients::new(grid, coeffs).expect("multiplier count matches grid");
        let spatial = inverse_transform(&multipliers, FieldKind::Scalar);
        TorusKernel {
            spec,
            scale,
            grid,
            multipliers,
            spatial,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn scale(&self) -> KernelScale {
        self.scale
    }

    /// The scale `ε` (the outer scale for intermediate kernels).
    pub fn epsilon(&self) -> f64 {
        match self.scale {
            KernelScale::Single { epsilon } | KernelScale::Intermediate { epsilon, .. } => epsilon,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn multipliers(&self) -> &SpectralCoefficients {
        &self.multipliers
    }

    /// Real multiplier at a flat spectral index.
    pub fn multiplier(&self, flat: usize) -> f64 {
        self.multipliers.coeffs()[flat].re
    }

    pub fn multiplier_values(&self) -> Vec<f64> {
        self.multipliers.coeffs().iter().map(|c| c.re).collect()
    }

    pub fn spatial(&self) -> &GridField {
        &self.spatial
    }

    /// `K ⋆ f`, applied as a spectral multiplier.
    pub fn apply(&self, f: &GridField) -> Result<GridField> {
        self.grid.check_same(f.grid())?;
        let mut fh = crate::grid::forward_transform(f);
        fh.coeffs_mut()
            .iter_mut()
            .zip(self.multipliers.coeffs())
            .for_each(|(a, m)| *a *= m.re);
        Ok(inverse_transform(&fh, FieldKind::Scalar))
    }

    /// Largest eigenvalue of `-Δ(K ⋆ ·)` on the grid, `max_m 4π²|m|² K^(m)`.
    pub fn laplacian_spectral_radius(&self) -> f64 {
        let dim = self.grid.dim();
        (0..self.grid.len())
            .map(|flat| {
                let m = self.grid.frequencies(flat);
                let m2: f64 = m[..dim].iter().map(|&k| (k * k) as f64).sum();
                4.0 * PI * PI * m2 * self.multiplier(flat)
            })
            .fold(0.0, f64::max)
    }
}

fn check_resolved(epsilon: f64, grid: &PeriodicGrid) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let h = grid.spacing();
    if epsilon < 2.0 * h {
        return Err(Error::UnresolvedKernel {
            epsilon,
            min: 2.0 * h,
        });
    }
    if epsilon < 4.0 * h {
        log::warn!(
            "epsilon = {epsilon} is below 4h = {}; kernel is barely resolved",
            4.0 * h
        );
    }
    Ok(())
}

fn check_dim(spec: &KernelSpec, grid: &PeriodicGrid) -> Result<()> {
    if spec.dim() != grid.dim() {
        return Err(Error::KernelDimension {
            family: spec.family().to_string(),
            dim: grid.dim(),
        });
    }
    Ok(())
}

fn lattice_radius(grid: &PeriodicGrid, flat: usize) -> f64 {
    let m = grid.frequencies(flat);
    m[..grid.dim()]
        .iter()
        .map(|&k| (k * k) as f64)
        .sum::<f64>()
        .sqrt()
}

/// `R_ε^T` on `grid`: multipliers `R^(ε m)` and their inverse transform.
pub fn realize_on_torus(
    spec: &KernelSpec,
    epsilon: f64,
    grid: &PeriodicGrid,
) -> Result<TorusKernel> {
    check_dim(spec, grid)?;
    check_resolved(epsilon, grid)?;
    let mult = (0..grid.len())
        .map(|flat| spec.profile(epsilon * lattice_radius(grid, flat)))
        .collect();
    Ok(TorusKernel::from_multipliers(
        spec.clone(),
        KernelScale::Single { epsilon },
        *grid,
        mult,
    ))
}

/// Square-root kernel with multipliers `(K^)^{1/2}`.
pub fn sqrt_kernel(kernel: &TorusKernel) -> Result<TorusKernel> {
    let mut mult = Vec::with_capacity(kernel.grid.len());
    for (index, c) in kernel.multipliers.coeffs().iter().enumerate() {
        if !(c.re > 0.0) {
            return Err(Error::NonPositiveMultiplier { index, value: c.re });
        }
        mult.push(c.re.sqrt());
    }
    Ok(TorusKernel::from_multipliers(
        kernel.spec.sqrt(),
        kernel.scale,
        kernel.grid,
        mult,
    ))
}

/// Intermediate-scale kernel `L_{ε,η}` with multipliers `R^(ε m) / R^(η m)`.
pub fn intermediate_kernel(
    spec: &KernelSpec,
    epsilon: f64,
    eta: f64,
    grid: &PeriodicGrid,
) -> Result<TorusKernel> {
    check_dim(spec, grid)?;
    if !(eta > 0.0) || eta >= epsilon {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eta < epsilon, got eta = {eta}, epsilon = {epsilon}"
        )));
    }
    check_resolved(epsilon, grid)?;
    let mult = (0..grid.len())
        .map(|flat| {
            let r = lattice_radius(grid, flat);
            spec.profile(epsilon * r) / spec.profile(eta * r)
        })
        .collect();
    Ok(TorusKernel::from_multipliers(
        spec.clone(),
        KernelScale::Intermediate { epsilon, eta },
        *grid,
        mult,
    ))
}

fn radial_moment(field: &GridField, power: i32, absolute: bool) -> f64 {
    let grid = field.grid();
    let dim = grid.dim();
    let sum: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            let x = grid.node(flat);
            let r2: f64 = x[..dim]
                .iter()
                .map(|&c| circle_distance(c, 0.0).powi(2))
                .sum();
            let w = if absolute { v.abs() } else { v };
            r2.sqrt().powi(power) * w
        })
        .sum();
    sum * grid.cell_volume()
}

/// `h^d Σ |x|_T |K(x)|`.
pub fn first_moment(kernel: &TorusKernel) -> f64 {
    radial_moment(&kernel.spatial, 1, true)
}

/// `h^d Σ |x|_T |f(x)|` of an arbitrary field.
pub fn first_moment_of(field: &GridField) -> f64 {
    radial_moment(field, 1, true)
}

/// `h^d Σ |x|_T² K(x)`.
pub fn second_moment(kernel: &TorusKernel) -> f64 {
    radial_moment(&kernel.spatial, 2, false)
}

/// Upper bound on the pointwise truncation error of the realised kernel:
/// the profile mass `∫ R^(ε|ξ|) dξ` outside the radius `n/2 - √d`.
pub fn spectral_tail_bound(spec: &KernelSpec, epsilon: f64, grid: &PeriodicGrid) -> f64 {
    let d = grid.dim() as i32;
    let sphere = match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let r0 = (grid.n() as f64 / 2.0 - (d as f64).sqrt()).max(0.0);
    let f = |r: f64| r.powi(d - 1) * spec.profile(epsilon * r);
    // Simpson on geometrically growing panels
    let mut total = 0.0;
    let mut a = r0;
    let mut width = 1.0f64.max(r0 * 0.05);
    for _ in 0..400 {
        let b = a + width;
        let panel = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        total += panel;
        if panel <= 1e-16 * total.max(1e-300) && a > 10.0 * r0.max(1.0) {
            break;
        }
        a = b;
        width *= 1.25;
    }
    sphere * total
}
