//! Empirical Rademacher complexity and the capacity of a hypothesis class.
//!
//! Outputs are mapped to ±1 (h̃ = 2h − 1) before correlating with the random
//! signs, so a class that fits every sign pattern reaches capacity 1.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataspace::{Dataset, PointSet};
use crate::error::{AuditError, Result};
use crate::hypothesis::{HypothesisClass, Labeling, TrainSpec};
use crate::stats::mean_stderr;
use crate::{par, seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RademacherDraw {
    pub sample: Vec<usize>,
    pub sigma: Vec<i8>,
    /// Best correlation (1/m) Σ σ_i h̃(x_i) found.
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
    pub restarts: usize,
    /// Mean achieved correlation per sample size.
    pub per_m: BTreeMap<usize, f64>,
    /// Per-draw values in draw order.
    pub samples: Vec<f64>,
}

fn correlation(sigma: &[i8], sample: &[usize], h: &Labeling) -> f64 {
    let s: i64 = sample
        .iter()
        .zip(sigma)
        .map(|(&i, &s)| if h.get(i) { s as i64 } else { -(s as i64) })
        .sum();
    s as f64 / sample.len() as f64
}

fn draw_with(
    class: &HypothesisClass,
    dataset: &Dataset,
    m: usize,
    rng: &mut seed::Rng,
    fit_seed: u64,
    restarts: usize,
) -> Result<RademacherDraw> {
    let n = dataset.n();
    if m == 0 || m > n {
        return Err(AuditError::InvalidArgument(format!("sample size {m} outside 1..={n}")));
    }
    if restarts == 0 {
        return Err(AuditError::InvalidArgument("restarts must be >= 1".into()));
    }
    let sample: Vec<usize> = index::sample(rng, n, m).into_vec();
    let sigma: Vec<i8> = (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let positives = sigma.iter().filter(|&&s| s > 0).count();
    let achieved = match class {
        HypothesisClass::Exhaustive => 1.0,
        HypothesisClass::Dictionary { memory } => {
            1.0 - 2.0 * positives.saturating_sub(*memory) as f64 / m as f64
        }
        HypothesisClass::Trained(t) => {
            let mut targets = Labeling::zeros(n);
            for (&i, &s) in sample.iter().zip(&sigma) {
                targets.set(i, s > 0);
            }
            let mask = PointSet::new(sample.iter().copied());
            let mut best = f64::NEG_INFINITY;
            for r in 0..restarts {
                let spec = TrainSpec::uniform(targets.clone(), mask.clone(), seed::derive(fit_seed, &[r as u64]));
                let h = t.train(dataset, &spec)?;
                best = best.max(correlation(&sigma, &sample, &h));
            }
            best
        }
    };
    Ok(RademacherDraw { sample, sigma, achieved })
}

/// One draw of D (size `m`, without replacement) and σ, with the best
/// correlation the class attains: exact for the exhaustive and dictionary
/// classes, best of `restarts` fits for trained classes.
pub fn rademacher_draw(
    class: &HypothesisClass,
    dataset: &Dataset,
    m: usize,
    seed: u64,
    restarts: usize,
) -> Result<RademacherDraw> {
    let mut rng = seed::rng(seed);
    draw_with(class, dataset, m, &mut rng, seed, restarts)
}

/// Averages the achieved correlation over `n_draws` draws with
/// m ~ Uniform{1..n}. Draw `i` is seeded with `seed ^ i`.
pub fn capacity(
    class: &HypothesisClass,
    dataset: &Dataset,
    n_draws: usize,
    restarts: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if n_draws == 0 {
        return Err(AuditError::InvalidArgument("n_draws must be >= 1".into()));
    }
    let n = dataset.n();
    let draws = par::try_map_indexed(n_draws, |i| {
        let draw_seed = seed ^ i as u64;
        let mut rng = seed::rng(draw_seed);
        let m = rng.random_range(1..=n);
        draw_with(class, dataset, m, &mut rng, draw_seed, restarts).map(|d| (m, d.achieved))
    })?;
    let samples: Vec<f64> = draws.iter().map(|&(_, a)| a).collect();
    let (mean, stderr) = mean_stderr(&samples);
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(m, a) in &draws {
        let e = acc.entry(m).or_default();
        e.0 += a;
        e.1 += 1;
    }
    Ok(CapacityEstimate {
        mean,
        stderr,
        draws: n_draws,
        restarts,
        per_m: acc.into_iter().map(|(m, (s, k))| (m, s / k as f64)).collect(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_is_one() {
        let ds = Dataset::from_group_sizes(3, 5).unwrap();
        let c = capacity(&HypothesisClass::Exhaustive, &ds, 50, 1, 9).unwrap();
        assert_eq!((c.mean, c.stderr), (1.0, 0.0));
    }

    #[test]
    fn dictionary_zero_is_minus_mean_sigma() {
        let ds = Dataset::from_group_sizes(3, 5).unwrap();
        let d = rademacher_draw(&HypothesisClass::dictionary(0), &ds, 6, 4, 1).unwrap();
        let mean_sigma = d.sigma.iter().map(|&s| s as f64).sum::<f64>() / 6.0;
        assert!((d.achieved + mean_sigma).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_sizes() {
        let ds = Dataset::from_group_sizes(3, 5).unwrap();
        assert!(rademacher_draw(&HypothesisClass::Exhaustive, &ds, 0, 0, 1).is_err());
        assert!(rademacher_draw(&HypothesisClass::Exhaustive, &ds, 9, 0, 1).is_err());
        assert!(capacity(&HypothesisClass::Exhaustive, &ds, 0, 1, 0).is_err());
    }
}
