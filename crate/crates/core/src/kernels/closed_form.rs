//! Spatial kernels in closed form and their periodisation by lattice sums.
//!
//! Available forms (unit scale, `a = 2π|x|`):
//!
//! * Laplace, d = 1: `R(x) = e^{-|x|}/2`.
//! * Matérn with integer `s`, d = 1:
//!   `R(x) = π e^{-a} / (2^{2s-2} (s-1)!) · Σ_{j<s} (2s-2-j)! / (j! (s-1-j)!) (2a)^j`.
//! * Matérn `s = 2`, d = 3: `R(x) = π² e^{-a}`.

use std::f64::consts::PI;

use super::{KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::grid::{wrap_displacement, FieldKind, GridField, PeriodicGrid};

/// Largest lattice shift used when periodising.
pub const MAX_SHIFT: i64 = 8;

#[derive(Debug, Clone)]
enum Form {
    Laplace,
    Matern1d { c: f64, poly: Vec<f64> },
    Matern3dS2,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn form_of(spec: &KernelSpec) -> Result<Form> {
    match (spec.family(), spec.dim()) {
        (KernelFamily::Laplace1d, 1) => Ok(Form::Laplace),
        (KernelFamily::Matern { s }, 1) if s.fract() == 0.0 && *s >= 1.0 && *s <= 20.0 => {
            let s = *s as usize;
            let c = PI / (2f64.powi(2 * s as i32 - 2) * factorial(s - 1));
            let poly = (0..s)
                .map(|j| {
                    factorial(2 * s - 2 - j) / (factorial(j) * factorial(s - 1 - j))
                        * 2f64.powi(j as i32)
                })
                .collect();
            Ok(Form::Matern1d { c, poly })
        }
        (KernelFamily::Matern { s }, 3) if *s == 2.0 => Ok(Form::Matern3dS2),
        (family, dim) => Err(Error::NoClosedForm(format!("{family} in d = {dim}"))),
    }
}

impl Form {
    /// Distance beyond which the unit-scale kernel is below `e^{-40}` of its peak.
    fn reach(&self) -> f64 {
        match self {
            Form::Laplace => 40.0,
            _ => 40.0 / (2.0 * PI),
        }
    }

    fn value(&self, r: f64) -> f64 {
        match self {
            Form::Laplace => 0.5 * (-r).exp(),
            Form::Matern1d { c, poly } => {
                let a = 2.0 * PI * r;
                c * horner(poly, a) * (-a).exp()
            }
            Form::Matern3dS2 => PI * PI * (-2.0 * PI * r).exp(),
        }
    }

    fn radial_derivative(&self, r: f64) -> f64 {
        match self {
            Form::Laplace => -0.5 * (-r).exp(),
            Form::Matern1d { c, poly } => {
                let a = 2.0 * PI * r;
                let dpoly: Vec<f64> = poly
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(j, p)| j as f64 * p)
                    .collect();
                2.0 * PI * c * (horner(&dpoly, a) - horner(poly, a)) * (-a).exp()
            }
            Form::Matern3dS2 => -2.0 * PI * PI * PI * (-2.0 * PI * r).exp(),
        }
    }
}

fn horner(poly: &[f64], x: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, p| acc * x + p)
}

/// Shifts `k` along one axis with `|x + k| ≤ reach`, limited to `|k| ≤ MAX_SHIFT`.
fn axis_shifts(x: f64, reach: f64) -> Vec<f64> {
    (-MAX_SHIFT..=MAX_SHIFT)
        .map(|k| x + k as f64)
        .filter(|y| y.abs() <= reach)
        .collect()
}

fn for_each_image(x: &[f64], reach: f64, mut f: impl FnMut(&[f64])) {
    let d = x.len();
    let shifts: Vec<Vec<f64>> = x
        .iter()
        .map(|&c| axis_shifts(wrap_displacement(c), reach))
        .collect();
    let mut y = [0.0; 3];
    let mut idx = [0usize; 3];
    if shifts.iter().any(|s| s.is_empty()) {
        return;
    }
    loop {
        for a in 0..d {
            y[a] = shifts[a][idx[a]];
        }
        f(&y[..d]);
        let mut a = 0;
        loop {
            if a == d {
                return;
            }
            idx[a] += 1;
            if idx[a] < shifts[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Periodised `R_ε^T(x) = Σ_k R_ε(x + k)` from the closed form.
pub fn periodized_value(spec: &KernelSpec, epsilon: f64, x: &[f64]) -> Result<f64> {
    let form = form_of(spec)?;
    Ok(periodized_value_with(&form, spec.dim(), epsilon, x))
}

fn periodized_value_with(form: &Form, d: usize, epsilon: f64, x: &[f64]) -> f64 {
    let scale = epsilon.powi(-(d as i32));
    let mut acc = 0.0;
    for_each_image(&x[..d], form.reach() * epsilon, |y| {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        acc += form.value(r / epsilon);
    });
    acc * scale
}

/// Periodised gradient `∇R_ε^T(x)` from the closed form; zero at the origin.
pub fn periodized_gradient(spec: &KernelSpec, epsilon: f64, x: &[f64]) -> Result<[f64; 3]> {
    let form = form_of(spec)?;
    let d = spec.dim();
    let scale = epsilon.powi(-(d as i32) - 1);
    let mut g = [0.0; 3];
    for_each_image(&x[..d], form.reach() * epsilon, |y| {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            let dr = form.radial_derivative(r / epsilon) / r;
            for a in 0..d {
                g[a] += dr * y[a];
            }
        }
    });
    for v in &mut g {
        *v *= scale;
    }
    Ok(g)
}

/// The periodised kernel on `grid` by direct lattice summation over shifts `|k| ≤ 8`.
pub fn lattice_sum_spatial(
    spec: &KernelSpec,
    epsilon: f64,
    grid: &PeriodicGrid,
) -> Result<GridField> {
    let form = form_of(spec)?;
    if spec.dim() != grid.dim() {
        return Err(Error::KernelDimension {
            family: spec.family().to_string(),
            dim: grid.dim(),
        });
    }
    let d = grid.dim();
    let values = (0..grid.len())
        .map(|flat| periodized_value_with(&form, d, epsilon, &grid.node(flat)[..d]))
        .collect();
    GridField::new(*grid, values, FieldKind::Scalar)
}

/// Whether a closed form exists for this kernel.
pub fn has_closed_form(spec: &KernelSpec) -> bool {
    form_of(spec).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use crate::kernels::{laplace_kernel_1d, matern_kernel, realize_on_torus};

    fn integrate_1d(f: impl Fn(f64) -> f64) -> f64 {
        let m = 200_000;
        let l = 40.0;
        let h = 2.0 * l / m as f64;
        (0..m).map(|i| f(-l + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn closed_forms_have_unit_mass() {
        for s in [1.0, 2.0, 3.0] {
            let spec = matern_kernel(s, 1).unwrap();
            let form = form_of(&spec).unwrap();
            let m = integrate_1d(|x| form.value(x.abs()));
            assert!((m - 1.0).abs() < 1e-6, "s = {s}: {m}");
        }
        let lap = form_of(&laplace_kernel_1d()).unwrap();
        assert!((integrate_1d(|x| lap.value(x.abs())) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn matern_1d_s2_matches_formula() {
        let spec = matern_kernel(2.0, 1).unwrap();
        let form = form_of(&spec).unwrap();
        for r in [0.0, 0.1, 0.37, 1.2] {
            let a = 2.0 * PI * r;
            let want = PI / 2.0 * (1.0 + a) * (-a).exp();
            assert!((form.value(r) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_derivative_matches_difference_quotient() {
        for spec in [
            matern_kernel(3.0, 1).unwrap(),
            matern_kernel(2.0, 3).unwrap(),
            laplace_kernel_1d(),
        ] {
            let form = form_of(&spec).unwrap();
            for r in [0.05, 0.3, 0.8] {
                let dh = 1e-6;
                let fd = (form.value(r + dh) - form.value(r - dh)) / (2.0 * dh);
                assert!((form.radial_derivative(r) - fd).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn laplace_second_derivative_positive_off_origin() {
        let form = form_of(&laplace_kernel_1d()).unwrap();
        for x in [0.01, 0.5, 2.0] {
            let dh = 1e-4;
            let d2 = (form.value(x + dh) - 2.0 * form.value(x) + form.value(x - dh)) / (dh * dh);
            assert!((d2 - 0.5 * (-x).exp()).abs() < 1e-6);
            assert!(d2 > 0.0);
        }
    }

    #[test]
    fn lattice_sum_matches_spectral_on_fine_grid() {
        let spec = matern_kernel(3.0, 1).unwrap();
        let grid = PeriodicGrid::new(1, 4096).unwrap();
        for eps in [0.2, 0.1, 0.05] {
            let spectral = realize_on_torus(&spec, eps, &grid).unwrap();
            let direct = lattice_sum_spatial(&spec, eps, &grid).unwrap();
            let err = lp_norm(
                &direct.difference(spectral.spatial()).unwrap(),
                f64::INFINITY,
            );
            assert!(err < 1e-8, "eps = {eps}: {err}");
        }
    }

    #[test]
    fn no_closed_form_for_2d_matern() {
        let spec = matern_kernel(3.0, 2).unwrap();
        assert!(matches!(
            periodized_value(&spec, 0.1, &[0.0, 0.0]),
            Err(Error::NoClosedForm(_))
        ));
    }
}
