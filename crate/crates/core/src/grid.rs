//! Uniform periodic grids on the unit torus `[0,1)^d` and FFT-based calculus.
//!
//! A grid with `n` cells per axis stores one value per cell, row-major with
//! axis 0 slowest. Cell `j` is centred at the node `x_j = j h`, `h = 1/n`, so
//! the origin is the centre of cell 0. Spectral routines treat the values as
//! samples at those nodes.
//!
//! Fourier coefficients follow `f^(m) = ∫ f(x) e^{-2πi m·x} dx`, discretised as
//! `h^d Σ_j f_j e^{-2πi m·x_j}`; the coefficient at `m = 0` is the mass of the
//! field and the inverse transform is the plain Fourier sum.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative values a density may carry before it is rejected; anything in
/// `[-DENSITY_CLAMP, 0)` is clamped to zero.
pub const DENSITY_CLAMP: f64 = 1e-12;

/// Tolerance on the unit-mass invariant of density fields.
pub const DENSITY_MASS_TOL: f64 = 1e-10;

/// Uniform periodic lattice with `n` cells per axis on `[0,1)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dim: usize,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "{n} cells per axis, need at least 2"
            )));
        }
        Ok(PeriodicGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of cells, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Stride of `axis` in the flat row-major layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Per-axis indices of a flat index; unused axes are 0.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Node coordinates of a flat index.
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h]
    }

    /// Signed lattice frequency stored at FFT index `i`, in `[-n/2, n/2)`.
    pub fn frequency(&self, i: usize) -> i64 {
        if 2 * i < self.n {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        self.n.is_multiple_of(2) && i == self.n / 2
    }

    /// Lattice frequency vector of a flat spectral index.
    pub fn frequencies(&self, flat: usize) -> [i64; 3] {
        let idx = self.unflatten(flat);
        let mut m = [0i64; 3];
        for axis in 0..self.dim {
            m[axis] = self.frequency(idx[axis]);
        }
        m
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left_dim: self.dim,
                left_n: self.n,
                right_dim: other.dim,
                right_n: other.n,
            });
        }
        Ok(())
    }
}

impl fmt::Display for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.n, self.dim)
    }
}

/// Squared and plain periodic distance between two coordinates on the unit circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Torus distance `|x - y|_T` with per-axis wrapping.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| circle_distance(*a, *b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Wraps a coordinate to `[0,1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Wraps a displacement to `(-1/2, 1/2]`.
pub fn wrap_displacement(d: f64) -> f64 {
    let w = d - d.round();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Density,
    Scalar,
    VelocityComponent,
}

/// Real-valued field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    kind: FieldKind,
}

impl GridField {
    /// Wraps raw values; only finiteness and length are checked.
    pub fn new(grid: PeriodicGrid, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at cell {pos}"
            )));
        }
        Ok(GridField { grid, values, kind })
    }

    pub fn scalar(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, FieldKind::Scalar)
    }

    /// Builds a density, clamping tiny negatives and requiring unit mass.
    pub fn density(grid: PeriodicGrid, mut values: Vec<f64>) -> Result<Self> {
        clamp_negatives(&mut values)?;
        let field = Self::new(grid, values, FieldKind::Density)?;
        let m = mass(&field);
        if (m - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidDensity(format!("mass {m} differs from 1")));
        }
        Ok(field)
    }

    pub fn constant(grid: PeriodicGrid, value: f64, kind: FieldKind) -> Self {
        GridField {
            grid,
            values: vec![value; grid.len()],
            kind,
        }
    }

    /// Uniform probability density.
    pub fn uniform(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 1.0, FieldKind::Density)
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: PeriodicGrid, kind: FieldKind, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|flat| {
                let x = grid.node(flat);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::new(grid, values, kind)
    }

    /// Discrete delta of unit mass at the cell containing node `flat`.
    pub fn discrete_delta(grid: PeriodicGrid, flat: usize) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[flat] = 1.0 / grid.cell_volume();
        GridField {
            grid,
            values,
            kind: FieldKind::Density,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Elementwise map keeping grid and kind.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.values.iter().map(|&v| f(v)).collect(),
            self.kind,
        )
    }

    /// Pointwise `self - other` as a scalar field.
    pub fn difference(&self, other: &GridField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.grid, values, FieldKind::Scalar)
    }

    /// Pointwise product as a scalar field.
    pub fn product(&self, other: &GridField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::new(self.grid, values, FieldKind::Scalar)
    }

    /// `h^d Σ f g`.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }
}

fn clamp_negatives(values: &mut [f64]) -> Result<()> {
    for (i, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -DENSITY_CLAMP {
                return Err(Error::InvalidDensity(format!(
                    "value {v} at cell {i} is negative"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// Fourier coefficients of a field, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralCoefficients {
    pub fn new(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a grid of {} cells",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(SpectralCoefficients { grid, coeffs })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at the lattice frequency `m` (each component in `[-n/2, n/2)`).
    pub fn at(&self, m: &[i64]) -> Complex64 {
        let n = self.grid.n() as i64;
        let idx: Vec<usize> = m.iter().map(|&k| k.rem_euclid(n) as usize).collect();
        self.coeffs[self.grid.flatten(&idx)]
    }

    /// Multiplies every coefficient by `mult(m)`, with `m` the frequency vector.
    pub fn apply(&mut self, mult: impl Fn(&[i64], usize) -> Complex64) {
        let dim = self.grid.dim();
        for (flat, c) in self.coeffs.iter_mut().enumerate() {
            let m = self.grid.frequencies(flat);
            *c *= mult(&m[..dim], flat);
        }
    }

    /// `Σ_m |c_m|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> std::sync::Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalised multi-dimensional FFT over every axis, in place.
fn fft_nd(grid: &PeriodicGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                if stride == 1 {
                    fft.process_with_scratch(&mut data[start..start + n], &mut scratch);
                    continue;
                }
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, slot) in line.iter().enumerate() {
                    data[start + k * stride] = *slot;
                }
            }
        }
    }
}

/// Discrete Fourier coefficients of `f`.
pub fn forward_transform(f: &GridField) -> SpectralCoefficients {
    let grid = *f.grid();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&grid, &mut data, false);
    let scale = grid.cell_volume();
    data.iter_mut().for_each(|c| *c *= scale);
    SpectralCoefficients { grid, coeffs: data }
}

/// Fourier sum of the coefficients, real part, tagged with `kind`.
pub fn inverse_transform(c: &SpectralCoefficients, kind: FieldKind) -> GridField {
    let grid = *c.grid();
    let mut data = c.coeffs.clone();
    fft_nd(&grid, &mut data, true);
    GridField {
        grid,
        values: data.iter().map(|z| z.re).collect(),
        kind,
    }
}

/// Periodic convolution `(f ⋆ g)(x) = ∫ f(x-y) g(y) dy`, computed spectrally.
pub fn convolve_periodic(f: &GridField, g: &GridField) -> Result<GridField> {
    f.grid().check_same(g.grid())?;
    let mut fh = forward_transform(f);
    let gh = forward_transform(g);
    fh.coeffs
        .iter_mut()
        .zip(&gh.coeffs)
        .for_each(|(a, b)| *a *= b);
    Ok(inverse_transform(&fh, FieldKind::Scalar))
}

/// Applies a real spectral multiplier `mult(m)` to `f`.
pub fn apply_real_multiplier(
    f: &GridField,
    mult: impl Fn(&[i64]) -> f64,
    kind: FieldKind,
) -> GridField {
    let mut fh = forward_transform(f);
    fh.apply(|m, _| Complex64::new(mult(m), 0.0));
    inverse_transform(&fh, kind)
}

fn derivative_symbol(grid: &PeriodicGrid, flat: usize, axis: usize, shift: f64) -> Complex64 {
    let idx = grid.unflatten(flat);
    if grid.is_nyquist(idx[axis]) {
        return Complex64::new(0.0, 0.0);
    }
    let m = grid.frequency(idx[axis]) as f64;
    let d = Complex64::new(0.0, 2.0 * PI * m);
    if shift == 0.0 {
        d
    } else {
        d * Complex64::from_polar(1.0, 2.0 * PI * m * shift)
    }
}

/// Spectral partial derivative along `axis` from precomputed coefficients,
/// evaluated at nodes shifted by `shift` along that axis.
pub(crate) fn derivative_from(c: &SpectralCoefficients, axis: usize, shift: f64) -> GridField {
    let grid = *c.grid();
    let mut d = c.clone();
    for (flat, z) in d.coeffs.iter_mut().enumerate() {
        *z *= derivative_symbol(&grid, flat, axis, shift);
    }
    inverse_transform(&d, FieldKind::VelocityComponent)
}

/// Spectral gradient, one component per axis; the Nyquist mode is dropped.
pub fn gradient_spectral(f: &GridField) -> Vec<GridField> {
    let c = forward_transform(f);
    (0..f.grid().dim())
        .map(|axis| derivative_from(&c, axis, 0.0))
        .collect()
}

/// Spectral gradient sampled on the faces `x + h/2 e_axis` of each cell.
pub fn gradient_at_faces(f: &GridField) -> Vec<GridField> {
    let c = forward_transform(f);
    let half = 0.5 * f.grid().spacing();
    (0..f.grid().dim())
        .map(|axis| derivative_from(&c, axis, half))
        .collect()
}

/// Spectral divergence of a vector field given by its components.
pub fn divergence_spectral(components: &[GridField]) -> Result<GridField> {
    let grid = *components
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty vector field".into()))?
        .grid();
    let mut out = vec![0.0; grid.len()];
    for (axis, comp) in components.iter().enumerate() {
        grid.check_same(comp.grid())?;
        let d = derivative_from(&forward_transform(comp), axis, 0.0);
        out.iter_mut().zip(d.values()).for_each(|(o, v)| *o += v);
    }
    GridField::scalar(grid, out)
}

/// `h^d Σ f`.
pub fn mass(f: &GridField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Rescales a nonnegative field to unit mass.
pub fn normalize_density(f: &GridField) -> Result<GridField> {
    let mut values = f.values().to_vec();
    clamp_negatives(&mut values)?;
    let m = values.iter().sum::<f64>() * f.grid().cell_volume();
    if !(m > 0.0) {
        return Err(Error::InvalidDensity(format!("mass {m} is not positive")));
    }
    values.iter_mut().for_each(|v| *v /= m);
    GridField::new(*f.grid(), values, FieldKind::Density)
}

/// Discrete `L^p` norm with cell measure `h^d`; `p = ∞` gives the max norm.
pub fn lp_norm(f: &GridField, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    if p.is_infinite() {
        return f.values().iter().fold(0.0, |acc, v| acc.max(v.abs()));
    }
    let vol = f.grid().cell_volume();
    if p == 2.0 {
        return (f.values().iter().map(|v| v * v).sum::<f64>() * vol).sqrt();
    }
    (f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
}

/// Periodic multilinear interpolation between nodes.
pub fn sample_at(f: &GridField, x: &[f64]) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let dim = grid.dim();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for axis in 0..dim {
        let s = wrap_unit(x[axis]) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        base[axis] = i;
        frac[axis] = s - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for axis in 0..dim {
            let up = (corner >> axis) & 1 == 1;
            w *= if up { frac[axis] } else { 1.0 - frac[axis] };
            idx[axis] = if up { (base[axis] + 1) % n } else { base[axis] };
        }
        if w != 0.0 {
            acc += w * f.values()[grid.flatten(&idx[..dim])];
        }
    }
    acc
}

/// Block average onto a coarser grid with `n_coarse` cells per axis; `n_coarse` must divide `n`.
pub fn block_average(f: &GridField, n_coarse: usize) -> Result<GridField> {
    let grid = f.grid();
    if n_coarse == 0 || !grid.n().is_multiple_of(n_coarse) {
        return Err(Error::InvalidGrid(format!(
            "{n_coarse} does not divide {}",
            grid.n()
        )));
    }
    let coarse = PeriodicGrid::new(grid.dim(), n_coarse)?;
    let factor = grid.n() / n_coarse;
    let mut values = vec![0.0; coarse.len()];
    for (flat, v) in f.values().iter().enumerate() {
        let idx = grid.unflatten(flat);
        let c: Vec<usize> = idx[..grid.dim()].iter().map(|i| i / factor).collect();
        values[coarse.flatten(&c)] += v;
    }
    let scale = (factor as f64).powi(-(grid.dim() as i32));
    values.iter_mut().for_each(|v| *v *= scale);
    GridField::new(coarse, values, f.kind())
}

/// Trigonometric interpolation onto a grid with `n_new` cells per axis
/// (zero padding or truncation of the spectrum; Nyquist modes are dropped).
pub fn spectral_resample(f: &GridField, n_new: usize) -> Result<GridField> {
    let grid = f.grid();
    let target = PeriodicGrid::new(grid.dim(), n_new)?;
    let fh = forward_transform(f);
    let half = grid.n().min(n_new) / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); target.len()];
    for (flat, c) in fh.coeffs().iter().enumerate() {
        let m = grid.frequencies(flat);
        if m[..grid.dim()]
            .iter()
            .any(|&k| k.unsigned_abs() as usize >= half)
        {
            continue;
        }
        let idx: Vec<usize> = m[..grid.dim()]
            .iter()
            .map(|&k| {
                if k < 0 {
                    (k + n_new as i64) as usize
                } else {
                    k as usize
                }
            })
            .collect();
        coeffs[target.flatten(&idx)] = *c;
    }
    let out = inverse_transform(
        &SpectralCoefficients {
            grid: target,
            coeffs,
        },
        f.kind(),
    );
    GridField::new(target, out.values, f.kind())
}
