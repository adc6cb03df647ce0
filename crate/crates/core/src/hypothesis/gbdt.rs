//! Second-order gradient boosted trees for the logistic loss, grown depthwise
//! with exact greedy split search.

use rand::Rng as _;

use super::params::GbdtParams;
use crate::dataspace::Dataset;
use crate::seed;

const EPS: f64 = 1e-16;
const MIN_GAIN: f64 = 1e-6;

#[derive(Debug, Clone)]
enum Tree {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<Tree>, right: Box<Tree> },
}

impl Tree {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Tree::Leaf(v) => *v,
            Tree::Split { feature, threshold, left, right } => {
                if x[*feature] < *threshold {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

struct Booster<'a> {
    x: Vec<&'a [f64]>,
    p: &'a GbdtParams,
    /// rows of each feature, sorted by value
    order: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// A node under construction and its gradient sums.
struct Open {
    slot: usize,
    stats: Stats,
}

enum Proto {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

impl Booster<'_> {
    fn score(&self, s: Stats) -> f64 {
        let den = s.h + self.p.reg_lambda;
        if den < EPS {
            return 0.0;
        }
        let t = soft_threshold(s.g, self.p.reg_alpha);
        t * t / den
    }

    fn leaf_weight(&self, s: Stats) -> f64 {
        let den = s.h + self.p.reg_lambda;
        if den < EPS {
            return 0.0;
        }
        let mut v = -soft_threshold(s.g, self.p.reg_alpha) / den;
        if self.p.max_delta_step > 0.0 {
            v = v.clamp(-self.p.max_delta_step, self.p.max_delta_step);
        }
        v * self.p.learning_rate
    }

    /// Best split of every open node in one sweep per feature.
    fn find_splits(&self, open: &[Open], node_of: &[usize], stats: &[Stats]) -> Vec<Option<Candidate>> {
        let k = open.len();
        let mut best: Vec<Option<Candidate>> = vec![None; k];
        let parent: Vec<f64> = open.iter().map(|o| self.score(o.stats)).collect();
        for (f, rows) in self.order.iter().enumerate() {
            let mut acc = vec![Stats::default(); k];
            let mut last: Vec<Option<f64>> = vec![None; k];
            for &i in rows {
                let node = node_of[i];
                if node == usize::MAX {
                    continue;
                }
                let v = self.x[i][f];
                if let Some(prev) = last[node] {
                    if v > prev {
                        let l = acc[node];
                        let tot = open[node].stats;
                        let r = Stats { g: tot.g - l.g, h: tot.h - l.h };
                        if l.h >= self.p.min_child_weight && r.h >= self.p.min_child_weight {
                            let gain = self.score(l) + self.score(r) - parent[node];
                            if best[node].is_none_or(|b| gain > b.gain) {
                                let mut threshold = prev + (v - prev) / 2.0;
                                if threshold <= prev {
                                    threshold = v;
                                }
                                best[node] = Some(Candidate { gain, feature: f, threshold });
                            }
                        }
                    }
                }
                acc[node].g += stats[i].g;
                acc[node].h += stats[i].h;
                last[node] = Some(v);
            }
        }
        best.into_iter()
            .map(|c| c.filter(|c| c.gain > MIN_GAIN && c.gain >= self.p.gamma))
            .collect()
    }

    fn grow(&self, rows: &[usize], stats: &[Stats]) -> Tree {
        let n = self.x.len();
        let mut node_of = vec![usize::MAX; n];
        let mut protos: Vec<Option<Proto>> = vec![None];
        let root = rows.iter().fold(Stats::default(), |a, &i| Stats { g: a.g + stats[i].g, h: a.h + stats[i].h });
        for &i in rows {
            node_of[i] = 0;
        }
        let mut open = vec![Open { slot: 0, stats: root }];
        let mut leaves = 1usize;
        for _depth in 0..self.p.max_depth {
            if open.is_empty() {
                break;
            }
            let found = self.find_splits(&open, &node_of, stats);
            let mut next_open = Vec::new();
            let mut remap: Vec<Option<(usize, usize, usize, f64)>> = vec![None; open.len()];
            for (k, cand) in found.into_iter().enumerate() {
                let allowed = self.p.max_leaves == 0 || leaves < self.p.max_leaves;
                match cand {
                    Some(c) if allowed => {
                        leaves += 1;
                        let (l, r) = (protos.len(), protos.len() + 1);
                        protos.push(None);
                        protos.push(None);
                        protos[open[k].slot] =
                            Some(Proto::Split { feature: c.feature, threshold: c.threshold, left: l, right: r });
                        let idx = next_open.len();
                        next_open.push(Open { slot: l, stats: Stats::default() });
                        next_open.push(Open { slot: r, stats: Stats::default() });
                        remap[k] = Some((idx, c.feature, idx + 1, c.threshold));
                    }
                    _ => protos[open[k].slot] = Some(Proto::Leaf(self.leaf_weight(open[k].stats))),
                }
            }
            for &i in rows {
                let k = node_of[i];
                if k == usize::MAX {
                    continue;
                }
                node_of[i] = match remap[k] {
                    Some((l, f, r, thr)) => {
                        let child = if self.x[i][f] < thr { l } else { r };
                        next_open[child].stats.g += stats[i].g;
                        next_open[child].stats.h += stats[i].h;
                        child
                    }
                    None => usize::MAX,
                };
            }
            open = next_open;
        }
        for o in &open {
            protos[o.slot] = Some(Proto::Leaf(self.leaf_weight(o.stats)));
        }
        build(&protos, 0)
    }
}

fn build(protos: &[Option<Proto>], slot: usize) -> Tree {
    match protos[slot].as_ref().expect("every slot is closed") {
        Proto::Leaf(v) => Tree::Leaf(*v),
        Proto::Split { feature, threshold, left, right } => Tree::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(build(protos, *left)),
            right: Box::new(build(protos, *right)),
        },
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
    p: &GbdtParams,
    seed: u64,
) -> Vec<bool> {
    let x: Vec<&[f64]> = dataset.points().iter().map(|pt| pt.features.as_slice()).collect();
    let order = (0..dataset.n_features())
        .map(|f| {
            let mut r = rows.to_vec();
            r.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            r
        })
        .collect();
    let booster = Booster { x, p, order };
    let n = dataset.n();
    let mut margin = vec![0.0; n];
    let mut stats = vec![Stats::default(); n];
    let mut rng = seed::rng(seed);
    for _ in 0..p.n_estimators {
        for &i in rows {
            let pi = sigmoid(margin[i]);
            let t = if y[i] { 1.0 } else { 0.0 };
            stats[i] = Stats { g: w[i] * (pi - t), h: w[i] * pi * (1.0 - pi) };
        }
        let sampled: Vec<usize> = if p.subsample < 1.0 {
            rows.iter().copied().filter(|_| rng.random::<f64>() < p.subsample).collect()
        } else {
            rows.to_vec()
        };
        if sampled.is_empty() {
            continue;
        }
        let tree = booster.grow(&sampled, &stats);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += tree.eval(booster.x[i]);
        }
    }
    margin.into_iter().map(|m| m > 0.0).collect()
}
