//! Exact discrete optimal transport for small atomic measures.

use super::{AtomicMeasure, PlanEntry, TransportMeta, TransportMethod, TransportResult};
use crate::error::{Error, Result};

/// Largest total atom count accepted by [`lp_oracle`].
pub const ORACLE_ATOM_LIMIT: usize = 64;
const EXHAUSTIVE_LIMIT: usize = 8;

/// Minimum-cost permutation by enumeration (Heap's algorithm); `n ≤ 8`.
pub fn exhaustive_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    let mut best = (eval(&perm), perm.clone());
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = eval(&perm);
            if v < best.0 {
                best = (v, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Hungarian method with potentials, `O(n³)`; returns the cost and `row → column`.
pub fn hungarian(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (total, assign)
}

/// Transportation simplex: northwest-corner start, `u + v = c` potentials on
/// the basis tree, entering cell of most negative reduced cost, pivot along
/// the basis cycle. Returns the optimal cost and the plan.
pub fn transport_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &[Vec<f64>],
) -> (f64, Vec<PlanEntry>) {
    let m = supply.len();
    let n = demand.len();
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let total_s: f64 = s.iter().sum();
    let total_d: f64 = d.iter().sum();
    d[n - 1] += total_s - total_d;

    // basis: list of (i, j, flow)
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        basis.push((i, j, x));
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            d[j] -= x;
            s[i] -= x;
            i += 1;
        } else {
            s[i] -= x;
            d[j] -= x;
            j += 1;
        }
    }

    let scale = cost
        .iter()
        .flatten()
        .fold(0.0f64, |a, c| a.max(c.abs()))
        .max(1e-300);
    let max_pivots = 50 * (m + n) * (m + n);
    for pivot in 0..max_pivots {
        // potentials over the tree: nodes 0..m rows, m..m+n columns
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
        for (k, &(bi, bj, _)) in basis.iter().enumerate() {
            adj[bi].push((m + bj, k));
            adj[m + bj].push((bi, k));
        }
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            for &(next, k) in &adj[node] {
                if pot[next].is_nan() {
                    let (bi, bj, _) = basis[k];
                    pot[next] = cost[bi][bj] - pot[node];
                    stack.push(next);
                }
            }
        }
        // entering cell
        let bland = pivot > 10 * (m + n);
        let mut enter = None;
        let mut best = -1e-12 * scale;
        'scan: for (ri, row) in cost.iter().enumerate() {
            for (cj, &c) in row.iter().enumerate() {
                let r = c - pot[ri] - pot[m + cj];
                if r < best {
                    enter = Some((ri, cj));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        // path in the tree from column ej to row ei
        let mut parent = vec![usize::MAX; m + n];
        let mut parent_edge = vec![usize::MAX; m + n];
        let start = m + ej;
        parent[start] = start;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == ei {
                break;
            }
            for &(next, k) in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    parent_edge[next] = k;
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = ei;
        while node != start {
            path.push(parent_edge[node]);
            node = parent[node];
        }
        // walking from the row ei back to column ej, edges alternate -, +, -, ...
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let plus: Vec<usize> = path.iter().skip(1).step_by(2).copied().collect();
        let (leave, theta) = minus
            .iter()
            .map(|&k| (k, basis[k].2))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("cycle has a decreasing edge");
        for &k in &minus {
            basis[k].2 -= theta;
        }
        for &k in &plus {
            basis[k].2 += theta;
        }
        basis[leave] = (ei, ej, theta);
    }
    let plan: Vec<PlanEntry> = basis.into_iter().filter(|e| e.2 > 0.0).collect();
    let total = plan.iter().map(|&(i, j, x)| x * cost[i][j]).sum();
    (total, plan)
}

/// Exact optimal transport between two small atomic measures with the
/// squared torus distance cost.
pub fn lp_oracle(u: &AtomicMeasure, v: &AtomicMeasure) -> Result<TransportResult> {
    let atoms = u.len() + v.len();
    if atoms > ORACLE_ATOM_LIMIT {
        return Err(Error::SizeLimit {
            atoms,
            limit: ORACLE_ATOM_LIMIT,
        });
    }
    if u.dim() != v.dim() {
        return Err(Error::InvalidArgument(
            "measures live in different dimensions".into(),
        ));
    }
    let cost: Vec<Vec<f64>> = (0..u.len())
        .map(|i| (0..v.len()).map(|j| u.cost(i, v, j)).collect())
        .collect();
    let equal = u.len() == v.len() && {
        let w = 1.0 / u.len() as f64;
        u.weights()
            .iter()
            .chain(v.weights())
            .all(|x| (x - w).abs() <= 1e-14)
    };
    let (total, plan, solver) = if equal {
        let (c, assign) = if u.len() <= EXHAUSTIVE_LIMIT {
            exhaustive_assignment(&cost)
        } else {
            hungarian(&cost)
        };
        let w = 1.0 / u.len() as f64;
        let name = if u.len() <= EXHAUSTIVE_LIMIT {
            "exhaustive"
        } else {
            "hungarian"
        };
        (
            c * w,
            assign
                .into_iter()
                .enumerate()
                .map(|(i, j)| (i, j, w))
                .collect(),
            name,
        )
    } else {
        let (c, plan) = transport_simplex(u.weights(), v.weights(), &cost);
        (c, plan, "network-simplex")
    };
    Ok(TransportResult {
        distance: total.max(0.0).sqrt(),
        method: TransportMethod::LpOracle,
        meta: TransportMeta {
            solver: Some(solver.into()),
            ..Default::default()
        },
        geodesic: None,
        plan: Some(plan),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn line(points: &[f64]) -> AtomicMeasure {
        AtomicMeasure::uniform(1, points.iter().map(|&x| [x, 0.0, 0.0]).collect()).unwrap()
    }

    #[test]
    fn single_atoms() {
        let r = lp_oracle(&line(&[0.1]), &line(&[0.35])).unwrap();
        assert!((r.distance - 0.25).abs() < 1e-15);
        let wrap = lp_oracle(&line(&[0.05]), &line(&[0.9])).unwrap();
        assert!((wrap.distance - 0.15).abs() < 1e-15);
    }

    #[test]
    fn two_point_assignment() {
        let a = line(&[0.1, 0.6]);
        let b = line(&[0.2, 0.5]);
        let identity = 0.5 * (a.cost(0, &b, 0) + a.cost(1, &b, 1));
        let crossed = 0.5 * (a.cost(0, &b, 1) + a.cost(1, &b, 0));
        let r = lp_oracle(&a, &b).unwrap();
        assert!((r.distance.powi(2) - identity.min(crossed)).abs() < 1e-15);
    }

    #[test]
    fn hungarian_and_simplex_agree_with_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..=7);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
                .collect();
            let (e, _) = exhaustive_assignment(&cost);
            let (h, _) = hungarian(&cost);
            let w = vec![1.0 / n as f64; n];
            let (s, _) = transport_simplex(&w, &w, &cost);
            assert!((e - h).abs() < 1e-12);
            assert!((e / n as f64 - s).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_plan_has_right_marginals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let a: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..13).map(|_| rng.gen::<f64>()).collect();
        let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
        let a: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let b: Vec<f64> = b.iter().map(|x| x / sb).collect();
        let cost: Vec<Vec<f64>> = (0..9)
            .map(|_| (0..13).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let (_, plan) = transport_simplex(&a, &b, &cost);
        let mut ra = [0.0; 9];
        let mut rb = [0.0; 13];
        for (i, j, x) in plan {
            ra[i] += x;
            rb[j] += x;
        }
        for (x, y) in ra.iter().zip(&a).chain(rb.iter().zip(&b)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn size_limit() {
        let big = line(&(0..40).map(|i| i as f64 / 40.0).collect::<Vec<_>>());
        assert!(matches!(
            lp_oracle(&big, &big),
            Err(Error::SizeLimit { .. })
        ));
    }
}
