//! L2-regularised logistic regression fitted by damped Newton steps.

use nalgebra::{DMatrix, DVector};

use super::params::{LinearParams, Penalty};
use crate::dataspace::Dataset;

const MAX_ITER: usize = 100;
const RIDGE: f64 = 1e-10;

/// Feature rows of every point, centred and scaled with statistics of `rows`.
/// Constant columns are left centred but unscaled.
pub(super) fn standardize(dataset: &Dataset, rows: &[usize]) -> Vec<Vec<f64>> {
    let d = dataset.n_features();
    let m = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in rows {
        for (j, x) in dataset.point(i).features.iter().enumerate() {
            mean[j] += x / m;
        }
    }
    let mut sd = vec![0.0; d];
    for &i in rows {
        for (j, x) in dataset.point(i).features.iter().enumerate() {
            sd[j] += (x - mean[j]).powi(2) / m;
        }
    }
    let sd: Vec<f64> = sd.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
    dataset
        .points()
        .iter()
        .map(|p| p.features.iter().enumerate().map(|(j, x)| (x - mean[j]) / sd[j]).collect())
        .collect()
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(super) fn fit_predict(
    dataset: &Dataset,
    rows: &[usize],
    y: &[bool],
    w: &[f64],
    p: &LinearParams,
) -> Vec<bool> {
    let x = standardize(dataset, rows);
    let d = dataset.n_features() + 1;
    let reg = match p.penalty {
        Penalty::L2 => 1.0 / p.c,
        Penalty::None => 0.0,
    };
    let margin = |beta: &DVector<f64>, xi: &[f64]| -> f64 {
        beta[0] + xi.iter().zip(beta.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>()
    };
    let objective = |beta: &DVector<f64>| -> f64 {
        let loss: f64 = rows
            .iter()
            .map(|&i| {
                let z = margin(beta, &x[i]);
                w[i] * if y[i] { log1pexp(-z) } else { log1pexp(z) }
            })
            .sum();
        loss + 0.5 * reg * beta.iter().skip(1).map(|b| b * b).sum::<f64>()
    };

    let mut beta = DVector::<f64>::zeros(d);
    let mut f = objective(&beta);
    for _ in 0..MAX_ITER {
        let mut grad = DVector::<f64>::zeros(d);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for &i in rows {
            let pi = sigmoid(margin(&beta, &x[i]));
            let r = w[i] * (pi - if y[i] { 1.0 } else { 0.0 });
            let s = w[i] * pi * (1.0 - pi);
            let xi = std::iter::once(1.0).chain(x[i].iter().copied()).collect::<Vec<_>>();
            for a in 0..d {
                grad[a] += r * xi[a];
                for b in a..d {
                    hess[(a, b)] += s * xi[a] * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
            hess[(a, a)] += RIDGE;
            if a > 0 {
                grad[a] += reg * beta[a];
                hess[(a, a)] += reg;
            }
        }
        if grad.amax() < 1e-10 {
            break;
        }
        let Some(chol) = hess.clone().cholesky() else { break };
        let step = chol.solve(&grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-10 {
            let cand = &beta - t * &step;
            let fc = objective(&cand);
            if fc <= f - 1e-4 * t * slope {
                beta = cand;
                improved = f - fc > 1e-14 * f.abs().max(1.0);
                f = fc;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x.iter().map(|xi| margin(&beta, xi) > 0.0).collect()
}
