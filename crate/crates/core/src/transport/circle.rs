//! Exact W2 on the circle through lifted quantile functions.
//!
//! For measures `μ, ν` on `[0,1)` with lifted quantiles `Q(t + 1) = Q(t) + 1`,
//! `W2²(μ, ν) = min_θ ∫₀¹ (Q_ν(t + θ) − Q_μ(t))² dt`, and the objective is
//! convex in `θ`. Piecewise-constant densities give piecewise-linear
//! quantiles, atoms give piecewise-constant ones; the integral is exact on
//! the merged breakpoints.

use serde::{Deserialize, Serialize};

use super::{AtomicMeasure, TransportMeta, TransportMethod, TransportResult};
use crate::dynamics::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::grid::{mass, wrap_displacement, wrap_unit, GridField, DENSITY_MASS_TOL};

/// Coarse cut candidates on `[-1, 1]` before golden-section refinement.
const COARSE_CANDIDATES: usize = 64;
const CUT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    t1: f64,
    x0: f64,
    x1: f64,
}

impl Segment {
    fn at(&self, t: f64) -> f64 {
        if self.x1 == self.x0 {
            return self.x0;
        }
        self.x0 + (t - self.t0) * (self.x1 - self.x0) / (self.t1 - self.t0)
    }
}

/// Lifted quantile function of a measure on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantile {
    segs: Vec<Segment>,
    starts: Vec<f64>,
    lows: Vec<f64>,
}

impl Quantile {
    fn from_segments(mut segs: Vec<Segment>) -> Result<Self> {
        if segs.is_empty() {
            return Err(Error::InvalidDensity("measure has no mass".into()));
        }
        let last = segs.len() - 1;
        segs[last].t1 = 1.0;
        let starts = segs.iter().map(|s| s.t0).collect();
        let lows = segs.iter().map(|s| s.x0).collect();
        Ok(Quantile { segs, starts, lows })
    }

    /// Cell `j` of a 1D density spreads its mass uniformly over `[(j - 1/2)h, (j + 1/2)h)`.
    pub fn from_density(u: &GridField) -> Result<Self> {
        let grid = u.grid();
        if grid.dim() != 1 {
            return Err(Error::InvalidArgument(
                "circle quantiles need a 1D field".into(),
            ));
        }
        if u.min() < 0.0 {
            return Err(Error::InvalidDensity("negative density".into()));
        }
        let h = grid.spacing();
        let total: f64 = u.values().iter().sum();
        let mut t = 0.0;
        let mut segs = Vec::new();
        for (j, &v) in u.values().iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            let w = v / total;
            let x = (j as f64 - 0.5) * h;
            segs.push(Segment {
                t0: t,
                t1: t + w,
                x0: x,
                x1: x + h,
            });
            t += w;
        }
        Self::from_segments(segs)
    }

    /// Atoms sorted on `[0, 1)`; zero weights are dropped.
    pub fn from_atoms(points: &[f64], weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let mut order: Vec<(f64, f64)> = points
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, w)| (wrap_unit(*p), w / total))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut t = 0.0;
        let segs = order
            .into_iter()
            .map(|(x, w)| {
                let s = Segment {
                    t0: t,
                    t1: t + w,
                    x0: x,
                    x1: x,
                };
                t += w;
                s
            })
            .collect();
        Self::from_segments(segs)
    }

    pub fn from_measure(m: &AtomicMeasure) -> Result<Self> {
        if m.dim() != 1 {
            return Err(Error::InvalidArgument(
                "circle quantiles need a 1D measure".into(),
            ));
        }
        let pts: Vec<f64> = m.points().iter().map(|p| p[0]).collect();
        Self::from_atoms(&pts, m.weights())
    }

    /// Segment containing `s` and the lift `k` with `s - k ∈ [0, 1)`.
    fn locate(&self, s: f64) -> (&Segment, f64) {
        let k = s.floor();
        let r = s - k;
        let i = self.starts.partition_point(|&t0| t0 <= r).saturating_sub(1);
        (&self.segs[i], k)
    }

    /// `Q(s)` for any real `s`.
    pub fn eval(&self, s: f64) -> f64 {
        let (seg, k) = self.locate(s);
        seg.at(s - k) + k
    }

    /// Lifted CDF `F(x)`, the generalised inverse of `Q`.
    pub fn cdf(&self, x: f64) -> f64 {
        let base = self.segs[0].x0;
        let k = (x - base).floor();
        let r = x - k;
        let i = self.lows.partition_point(|&x0| x0 <= r).saturating_sub(1);
        let seg = &self.segs[i];
        if r >= seg.x1 || seg.x1 == seg.x0 {
            return seg.t1 + k;
        }
        seg.t0 + (r - seg.x0) / (seg.x1 - seg.x0) * (seg.t1 - seg.t0) + k
    }

    fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.starts.iter().copied()
    }
}

/// `J(θ) = ∫₀¹ (Q_v(t + θ) − Q_u(t))² dt`, integrated exactly.
pub fn circle_objective(qu: &Quantile, qv: &Quantile, theta: f64) -> f64 {
    let mut shifted: Vec<f64> = qv
        .breakpoints()
        .map(|t| (t - theta).rem_euclid(1.0))
        .collect();
    if let Some(pos) = shifted
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    {
        shifted.rotate_left(pos);
    }
    let mut cuts = Vec::with_capacity(qu.starts.len() + shifted.len() + 2);
    let (mut i, mut j) = (0, 0);
    let a = &qu.starts;
    while i < a.len() || j < shifted.len() {
        if j >= shifted.len() || (i < a.len() && a[i] <= shifted[j]) {
            cuts.push(a[i]);
            i += 1;
        } else {
            cuts.push(shifted[j]);
            j += 1;
        }
    }
    cuts.push(1.0);
    let mut total = 0.0;
    let mut prev = 0.0;
    for &b in &cuts {
        if b <= prev {
            continue;
        }
        let mid = 0.5 * (prev + b);
        let (su, ku) = qu.locate(mid);
        let (sv, kv) = qv.locate(mid + theta);
        let da = sv.at(prev + theta - kv) + kv - (su.at(prev - ku) + ku);
        let db = sv.at(b + theta - kv) + kv - (su.at(b - ku) + ku);
        total += (b - prev) * (da * da + da * db + db * db) / 3.0;
        prev = b;
    }
    total
}

struct CutSearch {
    theta: f64,
    value: f64,
    evaluations: usize,
}

fn search_cut(qu: &Quantile, qv: &Quantile) -> CutSearch {
    let f = |t: f64| circle_objective(qu, qv, t);
    let step = 2.0 / COARSE_CANDIDATES as f64;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..=COARSE_CANDIDATES {
        let t = -1.0 + step * i as f64;
        let v = f(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let mut evaluations = COARSE_CANDIDATES + 1;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    evaluations += 2;
    while hi - lo > CUT_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        evaluations += 1;
    }
    for (t, v) in [(x1, f1), (x2, f2)] {
        if v < best {
            best = v;
            best_t = t;
        }
    }
    CutSearch {
        theta: best_t,
        value: best.max(0.0),
        evaluations,
    }
}

/// Monotone map and geodesic end velocities of a 1D optimal transport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicData1D {
    /// Optimal quantile offset `θ*`.
    pub cut: f64,
    /// Lifted map `T(x_j) = Q_v(F_u(x_j) + θ*)` at the nodes of `u`.
    pub map: Vec<f64>,
    /// `v₀(x_j) = T(x_j) − x_j`, wrapped to `(−1/2, 1/2]`.
    pub v0: Vec<f64>,
    /// `v₁(y_j) = y_j − T^{-1}(y_j)` at the nodes of `v`, wrapped.
    pub v1: Vec<f64>,
}

fn check_density(u: &GridField) -> Result<()> {
    if u.grid().dim() != 1 {
        return Err(Error::InvalidArgument("circle W2 needs 1D fields".into()));
    }
    let m = mass(u);
    if u.min() < 0.0 || (m - 1.0).abs() > DENSITY_MASS_TOL {
        return Err(Error::InvalidDensity(format!(
            "expected a probability density, mass {m}"
        )));
    }
    Ok(())
}

fn result(search: CutSearch, geodesic: Option<GeodesicData1D>) -> TransportResult {
    TransportResult {
        distance: search.value.sqrt(),
        method: TransportMethod::Quantile1d,
        meta: TransportMeta {
            cut: Some(search.theta),
            evaluations: Some(search.evaluations),
            ..Default::default()
        },
        geodesic,
        plan: None,
    }
}

/// W2 between two 1D densities with the monotone map and geodesic velocities.
pub fn w2_circle_1d(u: &GridField, v: &GridField) -> Result<TransportResult> {
    check_density(u)?;
    check_density(v)?;
    let qu = Quantile::from_density(u)?;
    let qv = Quantile::from_density(v)?;
    let search = search_cut(&qu, &qv);
    let theta = search.theta;
    let gu = u.grid();
    let gv = v.grid();
    let map: Vec<f64> = (0..gu.len())
        .map(|j| qv.eval(qu.cdf(gu.node(j)[0]) + theta))
        .collect();
    let v0 = map
        .iter()
        .enumerate()
        .map(|(j, t)| wrap_displacement(t - gu.node(j)[0]))
        .collect();
    let v1 = (0..gv.len())
        .map(|j| {
            let y = gv.node(j)[0];
            wrap_displacement(y - qu.eval(qv.cdf(y) - theta))
        })
        .collect();
    Ok(result(
        search,
        Some(GeodesicData1D {
            cut: theta,
            map,
            v0,
            v1,
        }),
    ))
}

/// W2 between two atomic measures on the circle.
pub fn w2_circle_atomic(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<TransportResult> {
    let search = search_cut(&Quantile::from_measure(a)?, &Quantile::from_measure(b)?);
    Ok(result(search, None))
}

/// W2 between a 1D density and the empirical measure of an ensemble.
pub fn w2_circle_particles(u: &GridField, ens: &ParticleEnsemble) -> Result<TransportResult> {
    check_density(u)?;
    if ens.dim() != 1 {
        return Err(Error::InvalidArgument(
            "circle W2 needs a 1D ensemble".into(),
        ));
    }
    let qu = Quantile::from_density(u)?;
    let qv = Quantile::from_atoms(&ens.line(), &vec![ens.weight(); ens.count()])?;
    Ok(result(search_cut(&qu, &qv), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use proptest::prelude::*;

    fn bump(n: usize, centre: f64, width: usize) -> GridField {
        let grid = PeriodicGrid::new(1, n).unwrap();
        let c = (centre * n as f64).round() as i64;
        let mut values = vec![0.0; n];
        for k in 0..width as i64 {
            let j = (c + k - width as i64 / 2).rem_euclid(n as i64) as usize;
            values[j] = n as f64 / width as f64;
        }
        GridField::density(grid, values).unwrap()
    }

    fn random_density(n: usize, seed: u64) -> GridField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = PeriodicGrid::new(1, n).unwrap();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum::<f64>() / n as f64;
        GridField::density(grid, raw.iter().map(|v| v / total).collect()).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let u = random_density(64, 1);
        let r = w2_circle_1d(&u, &u).unwrap();
        assert!(r.distance < 1e-9, "{}", r.distance);
    }

    #[test]
    fn narrow_bumps_recover_geodesic_distance() {
        for n in [256, 1024] {
            let h = 1.0 / n as f64;
            let r = w2_circle_1d(&bump(n, 0.1, 1), &bump(n, 0.4, 1)).unwrap();
            assert!((r.distance - 0.3).abs() <= 2.0 * h, "{}", r.distance);
            let wrap = w2_circle_1d(&bump(n, 0.05, 1), &bump(n, 0.85, 1)).unwrap();
            assert!((wrap.distance - 0.2).abs() <= 2.0 * h);
        }
    }

    #[test]
    fn quantile_and_cdf_are_inverse() {
        let u = random_density(32, 4);
        let q = Quantile::from_density(&u).unwrap();
        for t in [0.0, 0.1, 0.5, 0.93, 1.3, -0.2] {
            assert!((q.cdf(q.eval(t)) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_velocities_are_bounded() {
        let u = bump(128, 0.1, 8);
        let v = random_density(128, 9);
        let g = w2_circle_1d(&u, &v).unwrap().geodesic.unwrap();
        assert!(g.v0.iter().chain(&g.v1).all(|x| x.abs() <= 0.5));
    }

    #[test]
    fn returned_cut_beats_every_coarse_candidate() {
        let u = random_density(64, 2);
        let v = bump(64, 0.7, 5);
        let qu = Quantile::from_density(&u).unwrap();
        let qv = Quantile::from_density(&v).unwrap();
        let r = w2_circle_1d(&u, &v).unwrap();
        let best = r.distance.powi(2);
        for i in 0..=COARSE_CANDIDATES {
            let t = -1.0 + 2.0 * i as f64 / COARSE_CANDIDATES as f64;
            assert!(circle_objective(&qu, &qv, t) >= best - 1e-14);
        }
    }

    #[test]
    fn uniform_particles_against_uniform_field() {
        let grid = PeriodicGrid::new(1, 64).unwrap();
        let u = GridField::uniform(grid);
        for n in [10, 100, 1000] {
            let ens = ParticleEnsemble::from_line(
                &(0..n)
                    .map(|i| (i as f64 + 0.5) / n as f64)
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let d = w2_circle_particles(&u, &ens).unwrap().distance;
            assert!(d <= 0.5 / n as f64 + 1e-12, "{d}");
        }
        let single = ParticleEnsemble::from_line(&[0.25]).unwrap();
        let delta = GridField::discrete_delta(grid, 16);
        assert!(w2_circle_particles(&delta, &single).unwrap().distance <= 2.0 / 64.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn symmetric_and_triangle(sa in 0u64..1000, sb in 0u64..1000, sc in 0u64..1000) {
            let (a, b, c) = (random_density(48, sa), random_density(48, sb), random_density(48, sc));
            let ab = w2_circle_1d(&a, &b).unwrap().distance;
            let ba = w2_circle_1d(&b, &a).unwrap().distance;
            let bc = w2_circle_1d(&b, &c).unwrap().distance;
            let ac = w2_circle_1d(&a, &c).unwrap().distance;
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn translation_is_bounded_by_shift(shift in 0usize..=32) {
            let n = 64;
            let u = random_density(n, 17);
            let mut vals = u.values().to_vec();
            vals.rotate_right(shift);
            let v = GridField::density(*u.grid(), vals).unwrap();
            let d = w2_circle_1d(&u, &v).unwrap().distance;
            prop_assert!(d <= shift as f64 / n as f64 + 1e-9);
        }
    }
}
