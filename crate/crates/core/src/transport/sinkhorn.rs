//! Debiased entropic transport on the grid, in the log domain.
//!
//! The cost `d_𝕋(x, y)² = Σ_a c(x_a, y_a)` is separable, so every kernel
//! application is a sequence of one-dimensional circulant log-sum-exp sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TransportMeta, TransportMethod, TransportResult};
use crate::error::{Error, Result};
use crate::grid::{block_average, circle_distance, mass, GridField, PeriodicGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    /// Target entropic regularisation.
    pub reg: f64,
    /// Iteration cap per annealing stage.
    pub max_iter: usize,
    /// Marginal violation at which the final stage stops.
    pub tol: f64,
    /// First regularisation of the annealing schedule.
    pub reg_start: f64,
    pub anneal_factor: f64,
    /// Marginal violation at which intermediate stages stop.
    pub stage_tol: f64,
    /// In d ≥ 2, block-average inputs to at most this many cells per axis.
    pub max_cells_per_axis: Option<usize>,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            reg: 5e-4,
            max_iter: 5000,
            tol: 1e-9,
            reg_start: 1e-2,
            anneal_factor: 0.5,
            stage_tol: 1e-5,
            max_cells_per_axis: Some(64),
        }
    }
}

impl SinkhornOptions {
    pub fn with_reg(mut self, reg: f64) -> Self {
        self.reg = reg;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn schedule(&self) -> Vec<f64> {
        let mut regs = Vec::new();
        let mut r = self.reg_start;
        while r > self.reg {
            regs.push(r);
            r *= self.anneal_factor;
        }
        regs.push(self.reg);
        regs
    }
}

/// Kernel tables for one regularisation.
struct Tables {
    grid: PeriodicGrid,
    reg: f64,
    /// `exp(-c(k h)/reg)`
    kernel: Vec<f64>,
    /// `-c(k h)/reg`
    log_kernel: Vec<f64>,
    /// `ln c(k h) - c(k h)/reg`
    log_cost_kernel: Vec<f64>,
}

impl Tables {
    fn new(grid: PeriodicGrid, reg: f64) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let cost: Vec<f64> = (0..n)
            .map(|k| circle_distance(0.0, k as f64 * h).powi(2))
            .collect();
        let log_kernel: Vec<f64> = cost.iter().map(|c| -c / reg).collect();
        Tables {
            grid,
            reg,
            kernel: log_kernel.iter().map(|l| l.exp()).collect(),
            log_cost_kernel: cost.iter().map(|c| c.ln() - c / reg).collect(),
            log_kernel,
        }
    }
}

fn line_bases(grid: &PeriodicGrid, axis: usize) -> Vec<usize> {
    (0..grid.len())
        .filter(|&f| grid.unflatten(f)[axis] == 0)
        .collect()
}

fn exact_lse(line: &[f64], log_kernel: &[f64], i: usize) -> f64 {
    let n = line.len();
    let term = |j: usize| line[j] + log_kernel[(i + n - j) % n];
    let m = (0..n).map(term).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (0..n).map(|j| (term(j) - m).exp()).sum::<f64>().ln()
}

/// `out_i = ln Σ_j exp(line_j + L(i - j))` along one line.
fn line_lse(line: &[f64], log_kernel: &[f64], kernel: Option<&[f64]>) -> Vec<f64> {
    let n = line.len();
    let m = line.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return vec![f64::NEG_INFINITY; n];
    }
    let e: Vec<f64> = line.iter().map(|w| (w - m).exp()).collect();
    (0..n)
        .map(|i| {
            let s = match kernel {
                Some(k) => (0..n).map(|j| k[(i + n - j) % n] * e[j]).sum::<f64>(),
                None => (0..n)
                    .map(|j| (log_kernel[(i + n - j) % n]).exp() * e[j])
                    .sum::<f64>(),
            };
            if s > 1e-280 {
                m + s.ln()
            } else {
                exact_lse(line, log_kernel, i)
            }
        })
        .collect()
}

/// Separable log-convolution; `weighted_axis` swaps in the cost-weighted table on that axis.
fn log_convolve(t: &Tables, input: &[f64], weighted_axis: Option<usize>) -> Vec<f64> {
    let grid = &t.grid;
    let n = grid.n();
    let mut cur = input.to_vec();
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let (log_k, k) = if weighted_axis == Some(axis) {
            (&t.log_cost_kernel, None)
        } else {
            (&t.log_kernel, Some(t.kernel.as_slice()))
        };
        let results: Vec<(usize, Vec<f64>)> = line_bases(grid, axis)
            .into_par_iter()
            .map(|base| {
                let line: Vec<f64> = (0..n).map(|k| cur[base + k * stride]).collect();
                (base, line_lse(&line, log_k, k))
            })
            .collect();
        for (base, out) in results {
            for (k, v) in out.into_iter().enumerate() {
                cur[base + k * stride] = v;
            }
        }
    }
    cur
}

fn log_weights(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// `T(p)_i = -reg · LSE_j(log w_j + (p_j - C_ij)/reg)`.
fn c_transform(t: &Tables, log_w: &[f64], p: &[f64]) -> Vec<f64> {
    let input: Vec<f64> = log_w
        .iter()
        .zip(p)
        .map(|(lw, pj)| lw + pj / t.reg)
        .collect();
    log_convolve(t, &input, None)
        .into_iter()
        .map(|v| -t.reg * v)
        .collect()
}

fn violation(w: &[f64], old: &[f64], new: &[f64], reg: f64) -> f64 {
    w.iter()
        .zip(old.iter().zip(new))
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, (o, n))| x * (((o - n) / reg).exp() - 1.0).abs())
        .sum()
}

fn dot(w: &[f64], p: &[f64]) -> f64 {
    w.iter()
        .zip(p)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * y)
        .sum()
}

struct Stage {
    iterations: usize,
    error: f64,
}

/// Alternating updates for the pair `(f, g)`.
fn solve_pair(
    t: &Tables,
    a: &[f64],
    b: &[f64],
    f: &mut Vec<f64>,
    g: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Stage {
    let (la, lb) = (log_weights(a), log_weights(b));
    let mut error = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        *f = c_transform(t, &lb, g);
        let g_new = c_transform(t, &la, f);
        error = violation(b, g, &g_new, t.reg);
        *g = g_new;
        it += 1;
        if error <= tol {
            break;
        }
    }
    Stage {
        iterations: it,
        error,
    }
}

/// Averaged fixed point for the symmetric self-transport potential.
fn solve_self(t: &Tables, a: &[f64], p: &mut [f64], tol: f64, max_iter: usize) -> Stage {
    let la = log_weights(a);
    let mut error = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        let tp = c_transform(t, &la, p);
        error = violation(a, p, &tp, t.reg);
        for (x, y) in p.iter_mut().zip(&tp) {
            *x = 0.5 * (*x + y);
        }
        it += 1;
        if error <= tol {
            break;
        }
    }
    Stage {
        iterations: it,
        error,
    }
}

/// `Σ π_ij C_ij` of the plan defined by `(f, g)`.
fn plan_cost(t: &Tables, a: &[f64], b: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let lb = log_weights(b);
    let input: Vec<f64> = lb.iter().zip(g).map(|(lw, gj)| lw + gj / t.reg).collect();
    (0..t.grid.dim())
        .map(|axis| {
            let r = log_convolve(t, &input, Some(axis));
            a.iter()
                .zip(f.iter().zip(&r))
                .filter(|(x, _)| **x > 0.0)
                .map(|(x, (fi, ri))| x * (fi / t.reg + ri).exp())
                .sum::<f64>()
        })
        .sum()
}

fn cell_weights(u: &GridField) -> Vec<f64> {
    let total = mass(u);
    let vol = u.grid().cell_volume();
    u.values()
        .iter()
        .map(|v| v.max(0.0) * vol / total)
        .collect()
}

/// Debiased Sinkhorn estimate of `W2(u, v)` between two grid densities.
///
/// Reports `√max(S, 0)` with `S = OT(u,v) - ½OT(u,u) - ½OT(v,v)`; the plan
/// cost of the regularised coupling goes in `meta.raw_cost`.
pub fn w2_sinkhorn(
    u: &GridField,
    v: &GridField,
    opts: &SinkhornOptions,
) -> Result<TransportResult> {
    u.grid().check_same(v.grid())?;
    if !(opts.reg > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "reg must be positive and max_iter at least 1".into(),
        ));
    }
    if mass(u) <= 0.0 || mass(v) <= 0.0 {
        return Err(Error::InvalidDensity("zero total mass".into()));
    }
    let (u, v) = match opts.max_cells_per_axis {
        Some(c) if u.grid().dim() >= 2 && u.grid().n() > c && u.grid().n().is_multiple_of(c) => {
            (block_average(u, c)?, block_average(v, c)?)
        }
        _ => (u.clone(), v.clone()),
    };
    let grid = *u.grid();
    let (a, b) = (cell_weights(&u), cell_weights(&v));
    let len = grid.len();
    let (mut f, mut g, mut pa, mut pb) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    let schedule = opts.schedule();
    let mut iterations = 0;
    let mut error = f64::INFINITY;
    let mut tables = None;
    for (k, &reg) in schedule.iter().enumerate() {
        let last = k + 1 == schedule.len();
        let tol = if last { opts.tol } else { opts.stage_tol };
        let t = Tables::new(grid, reg);
        let (s1, (s2, s3)) = rayon::join(
            || solve_pair(&t, &a, &b, &mut f, &mut g, tol, opts.max_iter),
            || {
                rayon::join(
                    || solve_self(&t, &a, &mut pa, tol, opts.max_iter),
                    || solve_self(&t, &b, &mut pb, tol, opts.max_iter),
                )
            },
        );
        iterations += s1.iterations;
        error = s1.error.max(s2.error).max(s3.error);
        if last {
            tables = Some(t);
        }
    }
    let t = tables.expect("schedule is nonempty");
    let ot_ab = dot(&a, &f) + dot(&b, &g);
    let ot_aa = 2.0 * dot(&a, &pa);
    let ot_bb = 2.0 * dot(&b, &pb);
    let divergence = ot_ab - 0.5 * ot_aa - 0.5 * ot_bb;
    let raw = plan_cost(&t, &a, &b, &f, &g);
    Ok(TransportResult {
        distance: divergence.max(0.0).sqrt(),
        method: TransportMethod::Sinkhorn,
        meta: TransportMeta {
            iterations: Some(iterations),
            converged: Some(error <= opts.tol),
            marginal_error: Some(error),
            reg: Some(opts.reg),
            raw_cost: Some(raw),
            solver: Some(format!(
                "log-domain, {} stages on n = {}",
                schedule.len(),
                grid.n()
            )),
            ..Default::default()
        },
        geodesic: None,
        plan: None,
    })
}
