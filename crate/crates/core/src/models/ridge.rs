//! L2-regularised linear ERM with a scaled logistic loss.
//!
//! Objective on a coalition `S`:
//! `(1/|S|) * sum_i s * ln(1 + exp(-y_i <theta, psi_i>)) + (mu/2) * ||theta||^2`
//! with `y_i` in `{-1, +1}`. The loss is nonnegative, `s`-Lipschitz in the
//! prediction and equals `s * ln 2` at zero, so every minimiser satisfies
//! `||theta|| <= sqrt(2 * s * ln 2 / mu)`.

use alloc::vec;
use alloc::vec::Vec;

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Loss of prediction `a` against sign label `y`.
pub fn loss(scale: f64, a: f64, y: f64) -> f64 {
    scale * softplus(-y * a)
}

fn objective(rows: &[(&[f64], f64)], theta: &[f64], mu: f64, scale: f64) -> f64 {
    let m = rows.len() as f64;
    let data: f64 = rows
        .iter()
        .map(|(x, y)| loss(scale, crate::data::dot(theta, x), *y))
        .sum::<f64>()
        / m;
    data + 0.5 * mu * theta.iter().map(|t| t * t).sum::<f64>()
}

/// Minimiser of the regularised objective by damped Newton iterations.
/// An empty coalition returns the zero vector.
pub fn fit(rows: &[(&[f64], f64)], dim: usize, mu: f64, scale: f64) -> Vec<f64> {
    let mut theta = vec![0.0; dim];
    if rows.is_empty() {
        return theta;
    }
    let m = rows.len() as f64;
    for _ in 0..100 {
        let mut grad: Vec<f64> = theta.iter().map(|t| mu * t).collect();
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            hess[i * dim + i] = mu;
        }
        for (x, y) in rows {
            let a = crate::data::dot(&theta, x);
            let g = -scale * y * sigmoid(-y * a) / m;
            let h = scale * sigmoid(a) * sigmoid(-a) / m;
            for i in 0..dim {
                grad[i] += g * x[i];
                for j in 0..dim {
                    hess[i * dim + j] += h * x[i] * x[j];
                }
            }
        }
        let gnorm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        if gnorm < 1e-13 {
            break;
        }
        let step = cholesky_solve(&hess, &grad, dim);
        let f0 = objective(rows, &theta, mu, scale);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            if objective(rows, &cand, mu, scale) <= f0 || t < 1e-10 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    theta
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major).
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                l[i * n + i] = libm::sqrt(s.max(1e-300));
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}
