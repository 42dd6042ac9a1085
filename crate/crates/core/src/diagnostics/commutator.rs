//! The one-dimensional decomposition `D = G − C` of the distance derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_transform, gradient_spectral, inverse_transform, FieldKind, GridField};
use crate::kernels::TorusKernel;
use crate::transport::w2_circle_1d;

/// Tolerance on the sign of `G`.
pub const CONVEXITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorEntry {
    pub time: f64,
    pub w2: f64,
    /// `∫ v₁ (−∂ₓR_ε⋆ũ) ũ − ∫ v₀ (−∂ₓu) u`.
    pub d: f64,
    /// `−∫ ∂ₓ(u v₀) (R_ε⋆u − u)`.
    pub c: f64,
    /// `D + C`.
    pub g: f64,
    /// Centred difference of `½W2²` in time, where neighbours exist.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dw2_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorLedger1D {
    pub epsilon: f64,
    pub entries: Vec<CommutatorEntry>,
    pub max_g: f64,
    pub max_abs_c: f64,
    /// Largest `|D − (G − C)|`.
    pub identity_residual: f64,
    pub convex: bool,
}

impl CommutatorLedger1D {
    pub const CSV_HEADER: &'static str = "time,w2,d,c,g,dw2_half";

    pub fn from_entries(epsilon: f64, mut entries: Vec<CommutatorEntry>) -> Self {
        let half_sq: Vec<(f64, f64)> = entries
            .iter()
            .map(|e| (e.time, 0.5 * e.w2 * e.w2))
            .collect();
        for i in 1..entries.len().saturating_sub(1) {
            let (t0, a) = half_sq[i - 1];
            let (t1, b) = half_sq[i + 1];
            if t1 > t0 {
                entries[i].dw2_half = Some((b - a) / (t1 - t0));
            }
        }
        let max_g = entries
            .iter()
            .map(|e| e.g)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_abs_c = entries.iter().map(|e| e.c.abs()).fold(0.0, f64::max);
        let identity_residual = entries
            .iter()
            .map(|e| (e.d - (e.g - e.c)).abs())
            .fold(0.0, f64::max);
        CommutatorLedger1D {
            epsilon,
            entries,
            max_g,
            max_abs_c,
            identity_residual,
            convex: max_g <= CONVEXITY_TOL,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let fd = e.dw2_half.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.time, e.w2, e.d, e.c, e.g, fd
            ));
        }
        out
    }
}

/// `D`, `C` and `G` between the diffusion solution `u` and the aggregation solution `ut`.
pub fn commutator_decomposition_1d(
    u: &GridField,
    ut: &GridField,
    kernel: &TorusKernel,
    time: f64,
) -> Result<CommutatorEntry> {
    let grid = *u.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument(
            "commutator decomposition is one-dimensional".into(),
        ));
    }
    grid.check_same(ut.grid())?;
    kernel.grid().check_same(&grid)?;
    let res = w2_circle_1d(u, ut)?;
    let geo = res.geodesic.expect("circle method returns geodesic data");
    let h = grid.spacing();

    let du = &gradient_spectral(u)[0];
    let phi_t = kernel.apply(ut)?;
    let dphi_t = &gradient_spectral(&phi_t)[0];
    let d: f64 = (0..grid.len())
        .map(|j| {
            geo.v1[j] * (-dphi_t.values()[j]) * ut.values()[j]
                - geo.v0[j] * (-du.values()[j]) * u.values()[j]
        })
        .sum::<f64>()
        * h;

    let flux = GridField::new(
        grid,
        u.values().iter().zip(&geo.v0).map(|(a, b)| a * b).collect(),
        FieldKind::Scalar,
    )?;
    let div = inverse_transform(
        &forward_transform(&gradient_spectral(&flux)[0]),
        FieldKind::Scalar,
    );
    let phi = kernel.apply(u)?;
    let c: f64 = -(0..grid.len())
        .map(|j| div.values()[j] * (phi.values()[j] - u.values()[j]))
        .sum::<f64>()
        * h;
    Ok(CommutatorEntry {
        time,
        w2: res.distance,
        d,
        c,
        g: d + c,
        dw2_half: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::kernels::{laplace_kernel_1d, realize_on_torus};
    use std::f64::consts::PI;

    fn setup() -> (PeriodicGrid, TorusKernel) {
        let grid = PeriodicGrid::new(1, 256).unwrap();
        (
            grid,
            realize_on_torus(&laplace_kernel_1d(), 0.1, &grid).unwrap(),
        )
    }

    #[test]
    fn identical_densities_vanish() {
        let (grid, k) = setup();
        let u = GridField::from_fn(grid, FieldKind::Density, |x| {
            1.0 + 0.5 * (2.0 * PI * x[0]).sin()
        })
        .unwrap();
        let e = commutator_decomposition_1d(&u, &u, &k, 0.0).unwrap();
        assert!(
            e.d.abs() < 1e-12 && e.g.abs() < 1e-12 && e.w2 < 1e-12,
            "{e:?}"
        );
    }

    #[test]
    fn uniform_u_drops_its_terms() {
        let (grid, k) = setup();
        let u = GridField::uniform(grid);
        let ut = GridField::from_fn(grid, FieldKind::Density, |x| {
            1.0 + 0.3 * (2.0 * PI * x[0]).cos()
        })
        .unwrap();
        let e = commutator_decomposition_1d(&u, &ut, &k, 0.0).unwrap();
        assert!(e.c.abs() < 1e-12);
        let geo = w2_circle_1d(&u, &ut).unwrap().geodesic.unwrap();
        let dphi = &gradient_spectral(&k.apply(&ut).unwrap())[0];
        let want: f64 = (0..256)
            .map(|j| geo.v1[j] * (-dphi.values()[j]) * ut.values()[j])
            .sum::<f64>()
            / 256.0;
        assert!((e.d - want).abs() < 1e-14);
    }

    #[test]
    fn ledger_identity_and_difference() {
        let entries = (0..4)
            .map(|i| CommutatorEntry {
                time: i as f64,
                w2: i as f64,
                d: -1.0,
                c: 0.5,
                g: -0.5,
                dw2_half: None,
            })
            .collect();
        let ledger = CommutatorLedger1D::from_entries(0.1, entries);
        assert!(ledger.identity_residual < 1e-15);
        assert_eq!(ledger.entries[1].dw2_half, Some(1.0));
        assert!(ledger.entries[0].dw2_half.is_none());
        assert!(ledger.convex);
    }
}
