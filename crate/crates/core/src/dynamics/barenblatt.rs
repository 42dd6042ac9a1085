//! Self-similar compactly supported solution of `∂_t u = ½ ∂ₓₓ(u²)` on the line:
//! `u(x, t) = (C t^{-1/3} − (x − x₀)²/(6t))₊`, of mass `(4/3)√6 C^{3/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridField, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barenblatt {
    pub c: f64,
    pub center: f64,
}

impl Barenblatt {
    pub fn from_mass(mass: f64, center: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mass {mass} must be positive"
            )));
        }
        let c = (3.0 * mass / (4.0 * 6f64.sqrt())).powf(2.0 / 3.0);
        Ok(Barenblatt { c, center })
    }

    pub fn mass(&self) -> f64 {
        4.0 / 3.0 * 6f64.sqrt() * self.c.powf(1.5)
    }

    /// Half-width of the support at time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        (6.0 * self.c).sqrt() * t.cbrt()
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        let y = x - self.center;
        (self.c * t.powf(-1.0 / 3.0) - y * y / (6.0 * t)).max(0.0)
    }

    /// Nodal values on a one-dimensional grid; the support must fit in the torus.
    pub fn field(&self, grid: &PeriodicGrid, t: f64) -> Result<GridField> {
        if grid.dim() != 1 {
            return Err(Error::InvalidArgument("profile is one-dimensional".into()));
        }
        let r = self.support_radius(t);
        if self.center - r < 0.0 || self.center + r > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "support radius {r} leaves the unit cell at t = {t}"
            )));
        }
        GridField::from_fn(*grid, FieldKind::Density, |x| self.value(x[0], t))
            .map(|f| f.with_kind(FieldKind::Density))
    }

    /// `∂_t u − ½ ∂ₓₓ(u²)` by centred differences with step `delta`.
    pub fn residual(&self, x: f64, t: f64, delta: f64) -> f64 {
        let ut = (self.value(x, t + delta) - self.value(x, t - delta)) / (2.0 * delta);
        let w = |y: f64| 0.5 * self.value(y, t).powi(2);
        let wxx = (w(x + delta) - 2.0 * w(x) + w(x - delta)) / (delta * delta);
        ut - wxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_matches_constant() {
        let b = Barenblatt::from_mass(0.015, 0.5).unwrap();
        assert!((b.c - 0.02765).abs() < 1e-4);
        assert!((b.mass() - 0.015).abs() < 1e-15);
        let m = 200_000;
        let integral: f64 = (0..m)
            .map(|i| b.value((i as f64 + 0.5) / m as f64, 0.7))
            .sum::<f64>()
            / m as f64;
        assert!((integral - 0.015).abs() < 1e-9);
    }

    #[test]
    fn satisfies_the_equation_inside_the_support() {
        let b = Barenblatt::from_mass(0.015, 0.5).unwrap();
        for t in [0.25, 0.6, 1.25] {
            let r = b.support_radius(t);
            for k in 1..10 {
                let x = 0.5 + r * (k as f64 / 10.0 - 0.5) * 1.8;
                assert!(b.residual(x, t, 1e-4).abs() < 1e-6, "t = {t}, x = {x}");
            }
        }
    }
}
