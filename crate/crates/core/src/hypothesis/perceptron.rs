use rand::seq::SliceRandom;

use super::linear::standardize;
use super::params::{Penalty, PerceptronParams};
use crate::dataspace::Dataset;
use crate::seed;

/// Perceptron updates with constant step 1 and multiplicative L2 decay.
/// Visit order is reshuffled every epoch from `seed`.
pub(super) fn fit_predict(
    dataset: &Dataset,
    rows: &[usize],
    y: &[bool],
    w: &[f64],
    p: &PerceptronParams,
    seed: u64,
) -> Vec<bool> {
    let x = standardize(dataset, rows);
    let d = dataset.n_features();
    let decay = match p.penalty {
        Penalty::L2 => 1.0 - p.alpha,
        Penalty::None => 1.0,
    };
    let mut coef = vec![0.0; d];
    let mut bias = 0.0;
    let mut order = rows.to_vec();
    let mut rng = seed::rng(seed);
    let score = |coef: &[f64], bias: f64, xi: &[f64]| -> f64 {
        bias + xi.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()
    };
    // Best weights by weighted training error, so a non-separable run does not
    // end on an arbitrary iterate.
    let mut best = (f64::INFINITY, coef.clone(), bias);
    for _ in 0..p.max_iter {
        order.shuffle(&mut rng);
        let mut mistakes = 0usize;
        for &i in &order {
            let t = if y[i] { 1.0 } else { -1.0 };
            if decay < 1.0 {
                coef.iter_mut().for_each(|c| *c *= decay);
            }
            if t * score(&coef, bias, &x[i]) <= 0.0 {
                mistakes += 1;
                for (c, xv) in coef.iter_mut().zip(&x[i]) {
                    *c += w[i] * t * xv;
                }
                bias += w[i] * t;
            }
        }
        let err: f64 = rows
            .iter()
            .filter(|&&i| (score(&coef, bias, &x[i]) > 0.0) != y[i])
            .map(|&i| w[i])
            .sum();
        if err < best.0 {
            best = (err, coef.clone(), bias);
        }
        if mistakes == 0 || err == 0.0 {
            break;
        }
    }
    let (_, coef, bias) = best;
    x.iter().map(|xi| score(&coef, bias, xi) > 0.0).collect()
}
