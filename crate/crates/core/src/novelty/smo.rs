//! Dual solver for the one-class objective
//!
//! ```text
//! min_a  1/2 a^T Q a   s.t.  0 <= a_i <= 1,  sum(a) = nu * n
//! ```
//!
//! by sequential minimal optimization with second-order working-set
//! selection. The decision function is `sum_i a_i K(x_i, x) - rho`.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq)]
pub struct OneClassSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

const TAU: f64 = 1e-12;

/// `kernel` is the dense `n x n` Gram matrix. `seed` picks which rows carry
/// the initial feasible mass.
pub fn solve_one_class(
    kernel: &[f64],
    n: usize,
    nu: f64,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<OneClassSolution> {
    assert_eq!(kernel.len(), n * n);
    let upper = 1.0;
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));
    let mut mass = nu * n as f64;
    for &i in &order {
        if mass <= 0.0 {
            break;
        }
        alpha[i] = mass.min(upper);
        mass -= alpha[i];
    }

    let q = |i: usize, j: usize| kernel[i * n + j];
    let mut grad = vec![0.0; n];
    for (i, g) in grad.iter_mut().enumerate() {
        *g = (0..n).filter(|&j| alpha[j] > 0.0).map(|j| q(i, j) * alpha[j]).sum();
    }

    let mut iterations = 0;
    loop {
        // i: most violating index that can still grow.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if alpha[t] < upper && -grad[t] >= g_max {
                g_max = -grad[t];
                i_sel = t;
            }
        }
        // j: among indices that can shrink, the best second-order gain.
        let mut g_max2 = f64::NEG_INFINITY;
        let mut best_obj = f64::INFINITY;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            if alpha[t] > 0.0 {
                g_max2 = g_max2.max(grad[t]);
                if i_sel == usize::MAX {
                    continue;
                }
                let b = g_max + grad[t];
                if b > 0.0 {
                    let a = q(i_sel, i_sel) + q(t, t) - 2.0 * q(i_sel, t);
                    let obj = -b * b / a.max(TAU);
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = t;
                    }
                }
            }
        }
        if g_max + g_max2 < tolerance || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        if iterations >= max_iterations {
            return Err(Error::Solver { iterations });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
        let sum = alpha[i] + alpha[j];
        let old_i = alpha[i];
        let old_j = alpha[j];
        let new_i = (old_i + (grad[j] - grad[i]) / quad).clamp((sum - upper).max(0.0), sum.min(upper));
        alpha[i] = new_i;
        alpha[j] = sum - new_i;
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    Ok(OneClassSolution {
        rho: compute_rho(&alpha, &grad, upper),
        alpha,
        iterations,
    })
}

fn compute_rho(alpha: &[f64], grad: &[f64], upper: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        if a >= upper {
            lb = lb.max(g);
        } else if a <= 0.0 {
            ub = ub.min(g);
        } else {
            free += 1;
            free_sum += g;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(points: &[f64], gamma: f64) -> Vec<f64> {
        let n = points.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = (-gamma * (points[i] - points[j]).powi(2)).exp();
            }
        }
        k
    }

    #[test]
    fn constraints_hold_at_solution() {
        let pts: Vec<f64> = (0..40).map(|i| ((i * 37) % 40) as f64 / 10.0).collect();
        let k = gram(&pts, 0.5);
        for nu in [0.05, 0.3, 1.0] {
            let s = solve_one_class(&k, 40, nu, 1e-8, 100_000, 1).unwrap();
            assert!((s.alpha.iter().sum::<f64>() - nu * 40.0).abs() < 1e-9);
            assert!(s.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        }
    }

    #[test]
    fn kkt_conditions() {
        let pts: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let k = gram(&pts, 1.0);
        let tol = 1e-8;
        let s = solve_one_class(&k, 30, 0.2, tol, 100_000, 2).unwrap();
        for i in 0..30 {
            let f: f64 = (0..30).map(|j| s.alpha[j] * k[i * 30 + j]).sum::<f64>() - s.rho;
            if s.alpha[i] <= 0.0 {
                assert!(f >= -tol * 10.0, "inactive point {i} inside margin: {f}");
            } else if s.alpha[i] >= 1.0 {
                assert!(f <= tol * 10.0, "bounded point {i} outside: {f}");
            } else {
                assert!(f.abs() <= tol * 10.0, "free point {i}: {f}");
            }
        }
    }

    #[test]
    fn iteration_cap_reports_solver_error() {
        let pts: Vec<f64> = (0..50).map(|i| i as f64 / 7.0).collect();
        let k = gram(&pts, 0.3);
        assert!(matches!(
            solve_one_class(&k, 50, 0.25, 1e-12, 1, 0),
            Err(Error::Solver { iterations: 1 })
        ));
    }
}
