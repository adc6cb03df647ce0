//! Weighted CART with Gini impurity and minimal cost-complexity pruning.

use super::params::TreeParams;
use crate::dataspace::Dataset;

#[derive(Debug, Clone)]
struct Node {
    w: f64,
    w1: f64,
    split: Option<(usize, f64, usize, usize)>,
}

impl Node {
    fn gini(&self) -> f64 {
        gini(self.w, self.w1)
    }

    fn value(&self) -> bool {
        self.w1 > self.w - self.w1
    }
}

struct Builder<'a> {
    x: Vec<&'a [f64]>,
    y: &'a [bool],
    w: &'a [f64],
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let w: f64 = rows.iter().map(|&i| self.w[i]).sum();
        let w1: f64 = rows.iter().filter(|&&i| self.y[i]).map(|&i| self.w[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node { w, w1, split: None });
        let impure = w1 > 0.0 && w1 < w;
        if !impure || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some((f, thr)) = self.best_split(&rows, w, w1) else { return id };
        let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| self.x[i][f] <= thr);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id].split = Some((f, thr, l, r));
        id
    }

    /// Minimises W_L·gini_L + W_R·gini_R; ties go to the lowest feature and
    /// then the lowest threshold.
    fn best_split(&self, rows: &[usize], w: f64, w1: f64) -> Option<(usize, f64)> {
        let d = self.x.first().map_or(0, |r| r.len());
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..d {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let (mut lw, mut lw1) = (0.0, 0.0);
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                lw += self.w[i];
                if self.y[i] {
                    lw1 += self.w[i];
                }
                let (v, next) = (self.x[i][f], self.x[sorted[k + 1]][f]);
                if next <= v {
                    continue;
                }
                let (rw, rw1) = (w - lw, w1 - lw1);
                let cost = lw * gini(lw, lw1) + rw * gini(rw, rw1);
                if best.is_none_or(|(c, _, _)| cost < c - 1e-12 * w) {
                    let mut thr = v + (next - v) / 2.0;
                    if thr >= next {
                        thr = v;
                    }
                    best = Some((cost, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn gini(w: f64, w1: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let p = w1 / w;
    2.0 * p * (1.0 - p)
}

/// Post-order pass over the live tree: returns the subtree cost and leaf
/// count at `id`, recording the weakest internal link seen so far.
fn scan(nodes: &[Node], id: usize, total: f64, weakest: &mut Option<(f64, usize)>) -> (f64, usize) {
    let own = nodes[id].w / total * nodes[id].gini();
    match nodes[id].split {
        None => (own, 1),
        Some((_, _, l, r)) => {
            let (cl, nl) = scan(nodes, l, total, weakest);
            let (cr, nr) = scan(nodes, r, total, weakest);
            let (sub, leaves) = (cl + cr, nl + nr);
            let alpha = (own - sub) / (leaves as f64 - 1.0);
            // ties go to the earliest node id
            if weakest.is_none_or(|(a, w)| alpha < a || (alpha == a && id < w)) {
                *weakest = Some((alpha, id));
            }
            (sub, leaves)
        }
    }
}

/// Repeatedly collapses the weakest link while its effective alpha is at most
/// `ccp_alpha`.
fn prune(nodes: &mut [Node], ccp_alpha: f64) {
    let total = nodes[0].w;
    loop {
        let mut weakest = None;
        scan(nodes, 0, total, &mut weakest);
        match weakest {
            Some((alpha, id)) if alpha <= ccp_alpha => nodes[id].split = None,
            _ => break,
        }
    }
}

pub(super) fn fit_predict(
    dataset: &Dataset,
    rows: &[usize],
    y: &[bool],
    w: &[f64],
    p: &TreeParams,
) -> Vec<bool> {
    let mut b = Builder {
        x: dataset.points().iter().map(|pt| pt.features.as_slice()).collect(),
        y,
        w,
        max_depth: p.max_depth,
        nodes: Vec::new(),
    };
    b.grow(rows.to_vec(), 0);
    let x = b.x;
    let mut nodes = b.nodes;
    if p.ccp_alpha > 0.0 {
        prune(&mut nodes, p.ccp_alpha);
    }
    x.iter()
        .map(|xi| {
            let mut id = 0;
            while let Some((f, thr, l, r)) = nodes[id].split {
                id = if xi[f] <= thr { l } else { r };
            }
            nodes[id].value()
        })
        .collect()
}
