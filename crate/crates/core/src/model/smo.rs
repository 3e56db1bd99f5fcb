//! Binary C-SVC dual solved by sequential minimal optimisation with the
//! maximal-violating-pair working set.

use std::rc::Rc;

const TAU: f64 = 1e-12;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

/// Least-recently-used cache of rows of `Q_ij = y_i y_j K(x_i, x_j)`.
struct RowCache<'a> {
    x: &'a [f64],
    dim: usize,
    y: &'a [f64],
    gamma: f64,
    rows: Vec<Option<Rc<Vec<f64>>>>,
    last_use: Vec<u64>,
    clock: u64,
    live: usize,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [f64], dim: usize, y: &'a [f64], gamma: f64, cache_bytes: usize) -> Self {
        let n = y.len();
        let row_bytes = (n * std::mem::size_of::<f64>()).max(1);
        RowCache {
            x,
            dim,
            y,
            gamma,
            rows: vec![None; n],
            last_use: vec![0; n],
            clock: 0,
            live: 0,
            capacity: (cache_bytes / row_bytes).max(2),
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.last_use[i] = self.clock;
        if let Some(row) = &self.rows[i] {
            return Rc::clone(row);
        }
        if self.live >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some() && k != i)
                .min_by_key(|&k| self.last_use[k])
                .expect("cache holds at least one row");
            self.rows[victim] = None;
            self.live -= 1;
        }
        let xi = self.point(i);
        let row: Vec<f64> = (0..self.y.len())
            .map(|j| self.y[i] * self.y[j] * rbf(xi, self.point(j), self.gamma))
            .collect();
        let row = Rc::new(row);
        self.rows[i] = Some(Rc::clone(&row));
        self.live += 1;
        row
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SmoOutput {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_bytes: usize,
}

/// `x` is row-major `n × dim`, `y` holds ±1.
pub(crate) fn solve(x: &[f64], dim: usize, y: &[f64], p: &SmoParams) -> SmoOutput {
    let n = y.len();
    let c = p.c;
    let mut cache = RowCache::new(x, dim, y, p.gamma, p.cache_bytes);
    // RBF has K(x, x) = 1, so the diagonal of Q is 1 everywhere.
    let qd = 1.0;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < p.max_iter {
        // i maximises -y G over I_up, j minimises it over I_low; ties go to the lowest index.
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            let low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
            if up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || g_max - g_min < p.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let q_i = cache.row(i);
        let q_j = cache.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = (qd + qd + 2.0 * q_i[j]).max(TAU);
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
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd + qd - 2.0 * q_i[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += q_i[k] * d_i + q_j[k] * d_j;
        }
    }

    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    SmoOutput {
        alpha,
        rho,
        iterations,
        converged,
    }
}
