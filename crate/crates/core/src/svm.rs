//! Soft-margin RBF-kernel SVM solved with SMO.
//!
//! The dual `min ½αᵀQα − eᵀα` s.t. `yᵀα = 0`, `0 ≤ αᵢ ≤ Cᵢ`, with
//! `Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)`, is solved by sequential minimal optimization using
//! second-order working-set selection. Iteration stops when the maximal KKT
//! violation `m(α) − M(α)` drops below `eps`. Kernel rows are computed on demand
//! (in parallel under [`Exec::Parallel`]) and kept in a bounded cache.

use std::collections::VecDeque;

use crate::exec::Exec;
use crate::{Error, Result};

const TAU: f64 = 1e-12;

/// `exp(−gamma·‖a − b‖²)`.
#[inline]
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Full `n × n` RBF kernel matrix of row-major `x` (rows of width `dim`).
pub fn kernel_matrix(x: &[f64], dim: usize, gamma: f64, exec: Exec) -> Vec<f64> {
    let n = x.len() / dim;
    let mut k = vec![0.0; n * n];
    exec.for_each_row(&mut k, n, |i, row| {
        let xi = &x[i * dim..(i + 1) * dim];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = rbf(xi, &x[j * dim..(j + 1) * dim], gamma);
        }
    });
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub eps: f64,
    pub max_iter: usize,
    /// Kernel cache budget in bytes.
    pub cache_bytes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { eps: 1e-3, max_iter: 10_000_000, cache_bytes: 256 << 20 }
    }
}

/// Binary problem over standardized rows.
pub struct BinaryProblem<'a> {
    pub x: &'a [f64],
    pub dim: usize,
    /// `true` for the positive class.
    pub y: &'a [bool],
    /// Per-sample box constraint.
    pub c: Vec<f64>,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(x: &'a [f64], dim: usize, y: &'a [bool], c: f64) -> Self {
        BinaryProblem { x, dim, y, c: vec![c; y.len()] }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ αᵢyᵢK(xᵢ, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    /// Final maximal KKT violation `m(α) − M(α)`.
    pub kkt_gap: f64,
    pub converged: bool,
}

struct KernelCache<'p, 'a> {
    problem: &'p BinaryProblem<'a>,
    gamma: f64,
    exec: Exec,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'p, 'a> KernelCache<'p, 'a> {
    fn new(problem: &'p BinaryProblem<'a>, gamma: f64, exec: Exec, cache_bytes: usize) -> Self {
        let n = problem.n();
        let capacity = (cache_bytes / (8 * n.max(1))).max(2);
        KernelCache { problem, gamma, exec, rows: vec![None; n], order: VecDeque::new(), capacity }
    }

    /// Row `i` of the kernel matrix (not multiplied by labels).
    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            if self.order.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows[old] = None;
                }
            }
            let p = self.problem;
            let xi = p.row(i);
            let gamma = self.gamma;
            let row = self.exec.map_range(p.n(), |j| rbf(xi, p.row(j), gamma));
            self.rows[i] = Some(row);
            self.order.push_back(i);
        }
        self.rows[i].as_deref().expect("row just cached")
    }
}

fn sign(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// Solves the binary dual. Requires both classes present and `gamma > 0`.
pub fn solve(problem: &BinaryProblem<'_>, gamma: f64, params: &SolverParams, exec: Exec) -> Result<BinarySolution> {
    let n = problem.n();
    if problem.x.len() != n * problem.dim {
        return Err(Error::validation("feature rows and labels disagree in length"));
    }
    if !problem.y.iter().any(|&b| b) || problem.y.iter().all(|&b| b) {
        return Err(Error::validation("binary SVM needs both classes"));
    }
    if !(gamma > 0.0) || problem.c.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::validation("gamma and C must be positive"));
    }
    let y: Vec<f64> = problem.y.iter().map(|&b| sign(b)).collect();
    let c = &problem.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = KernelCache::new(problem, gamma, exec, params.cache_bytes);
    // RBF diagonal is exactly 1.
    let qd = 1.0;

    let upper = |a: &[f64], t: usize| a[t] >= c[t];
    let lower = |a: &[f64], t: usize| a[t] <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(&alpha, t) } else { !lower(&alpha, t) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            gap = 0.0;
            break;
        };
        let ki: Vec<f64> = cache.row(i).to_vec();
        // j: second-order selection in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(&alpha, t) } else { !upper(&alpha, t) };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = qd + qd - 2.0 * ki[t];
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        gap = gmax + gmax2;
        let Some(j) = j_sel.filter(|_| gap >= params.eps) else { break };
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let kj: Vec<f64> = cache.row(j).to_vec();
        let (ci, cj) = (c[i], c[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let quad = (qd + qd + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (qd + qd - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (yi, yj) = (y[i], y[j]);
        exec.for_each_mut(&mut grad, |t, g| {
            *g += y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        });
    }

    let rho = compute_rho(&alpha, &grad, &y, c);
    Ok(BinarySolution { converged: gap < params.eps, alpha, rho, iterations, kkt_gap: gap })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Maximal KKT violation of `alpha` for `problem`, recomputed from scratch.
/// Returns `m(α) − M(α)`; the dual optimality conditions hold to `eps` iff it is `< eps`.
pub fn kkt_violation(problem: &BinaryProblem<'_>, alpha: &[f64], gamma: f64) -> f64 {
    let n = problem.n();
    let y: Vec<f64> = problem.y.iter().map(|&b| sign(b)).collect();
    let grad: Vec<f64> = (0..n)
        .map(|t| {
            let xt = problem.row(t);
            (0..n)
                .filter(|&s| alpha[s] != 0.0)
                .map(|s| y[t] * y[s] * rbf(xt, problem.row(s), gamma) * alpha[s])
                .sum::<f64>()
                - 1.0
        })
        .collect();
    let c = &problem.c;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let in_up = if y[t] > 0.0 { alpha[t] < c[t] } else { alpha[t] > 0.0 };
        let in_low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c[t] };
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    up - low
}
