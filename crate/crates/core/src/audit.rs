//! The auditor: random sampling audits, consistency of candidate models with
//! recorded answers, the exact adaptive audit cost, and audit reports.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataspace::{measure_mu, Dataset, PointSet};
use crate::error::{AuditError, Result};
use crate::hypothesis::{HypothesisClass, Labeling};
use crate::seed;

/// Queried points in query order, and the platform's answers once recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSet {
    queries: Vec<usize>,
    answers: Option<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct AuditLine {
    query: usize,
    answer: Option<bool>,
}

impl AuditSet {
    pub fn new(queries: Vec<usize>) -> Result<Self> {
        let set = PointSet::new(queries.iter().copied());
        if set.len() != queries.len() {
            return Err(AuditError::InvalidArgument("duplicate point id in audit set".into()));
        }
        Ok(AuditSet { queries, answers: None })
    }

    pub fn queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn answers(&self) -> Option<&[bool]> {
        self.answers.as_deref()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn point_set(&self) -> PointSet {
        PointSet::new(self.queries.iter().copied())
    }

    /// One JSON object per line: `{"query": id, "answer": bool | null}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, &q) in self.queries.iter().enumerate() {
            let line = AuditLine { query: q, answer: self.answers.as_ref().map(|a| a[k]) };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut queries = Vec::new();
        let mut answers = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let l: AuditLine = serde_json::from_str(&line)?;
            queries.push(l.query);
            answers.push(l.answer);
        }
        let mut set = AuditSet::new(queries)?;
        match (answers.iter().all(Option::is_some), answers.iter().all(Option::is_none)) {
            (true, _) if !answers.is_empty() => {
                set.answers = Some(answers.into_iter().map(|a| a.unwrap_or_default()).collect())
            }
            (_, true) => {}
            _ => return Err(AuditError::Data("audit lines mix answered and unanswered queries".into())),
        }
        Ok(set)
    }
}

/// `floor(beta·size)`, robust to the rounding of `beta` itself (0.29·100 is
/// 29, not 28).
pub fn quota(beta: f64, size: usize) -> usize {
    let x = beta * size as f64;
    let r = x.round();
    let q = if (x - r).abs() < 1e-9 * size.max(1) as f64 { r } else { x.floor() };
    (q.max(0.0) as usize).min(size)
}

/// Random sampling audit: `floor(beta1·n_A)` points of X_A and
/// `floor(beta2·n_¬A)` points of ¬X_A, each drawn uniformly without replacement.
pub fn random_audit(dataset: &Dataset, beta1: f64, beta2: f64, seed: u64) -> Result<AuditSet> {
    for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
        if !(0.0..=1.0).contains(&b) {
            return Err(AuditError::InvalidArgument(format!("{name} = {b} outside [0, 1]")));
        }
    }
    let s_plus = quota(beta1, dataset.n_a());
    let s_minus = quota(beta2, dataset.n_not_a());
    log::debug!("random audit: s+ = {s_plus}, s- = {s_minus}, s = {}", s_plus + s_minus);
    let mut rng = seed::rng(seed);
    let mut queries = Vec::with_capacity(s_plus + s_minus);
    for (group, k) in [(true, s_plus), (false, s_minus)] {
        let ids = dataset.group_ids(group);
        queries.extend(index::sample(&mut rng, ids.len(), k).into_iter().map(|j| ids[j]));
    }
    AuditSet::new(queries)
}

/// Queries the platform model on every point of the audit set.
pub fn record_answers(mut audit: AuditSet, h_star: &Labeling) -> Result<AuditSet> {
    if audit.answers.is_some() {
        return Err(AuditError::AlreadyRecorded);
    }
    if let Some(&bad) = audit.queries.iter().find(|&&q| q >= h_star.len()) {
        return Err(AuditError::InvalidArgument(format!("query {bad} out of range")));
    }
    audit.answers = Some(audit.queries.iter().map(|&q| h_star.get(q)).collect());
    Ok(audit)
}

/// Whether `h_prime` reproduces every recorded answer.
pub fn check_consistency(h_prime: &Labeling, audit: &AuditSet) -> Result<bool> {
    let answers = audit.answers.as_ref().ok_or(AuditError::NotRecorded)?;
    Ok(audit
        .queries
        .iter()
        .zip(answers)
        .all(|(&q, &a)| q < h_prime.len() && h_prime.get(q) == a))
}

/// Default node budget of [`exact_cost`].
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

struct CostSolver {
    n: usize,
    /// μ coefficients scaled by nA·n¬A so diameters are exact integers.
    coef: Vec<i64>,
    scale: f64,
    /// `None` = exhaustive; otherwise the dictionary memory.
    memory: Option<usize>,
    epsilon: f64,
    cap: usize,
    memo: HashMap<(u64, u64), u32>,
}

impl CostSolver {
    /// μ-diameter of {h in class : h = answers on queried}. The maximiser sets
    /// the largest positive free coefficients to one, the minimiser the most
    /// negative ones, both within the remaining memory.
    fn diam(&self, queried: u64, answers: u64) -> i64 {
        let left = match self.memory {
            None => self.n,
            Some(m) => match m.checked_sub(answers.count_ones() as usize) {
                Some(l) => l,
                None => return 0,
            },
        };
        let mut pos: Vec<i64> = Vec::new();
        let mut neg: Vec<i64> = Vec::new();
        for i in 0..self.n {
            if queried >> i & 1 == 0 {
                if self.coef[i] > 0 {
                    pos.push(self.coef[i]);
                } else {
                    neg.push(-self.coef[i]);
                }
            }
        }
        let top = |mut v: Vec<i64>| -> i64 {
            v.sort_unstable_by(|a, b| b.cmp(a));
            v.into_iter().take(left).sum()
        };
        top(pos) + top(neg)
    }

    fn feasible(&self, answers: u64) -> bool {
        self.memory.is_none_or(|m| answers.count_ones() as usize <= m)
    }

    fn cost(&mut self, queried: u64, answers: u64) -> Result<u32> {
        if !self.feasible(answers) || (self.diam(queried, answers) as f64) < self.epsilon * self.scale {
            return Ok(0);
        }
        if let Some(&c) = self.memo.get(&(queried, answers)) {
            return Ok(c);
        }
        if self.memo.len() >= self.cap {
            return Err(AuditError::NodeBudgetExceeded { cap: self.cap, frontier: self.memo.len() });
        }
        let mut best = u32::MAX;
        for x in 0..self.n {
            if queried >> x & 1 == 1 {
                continue;
            }
            let q = queried | 1 << x;
            let c0 = self.cost(q, answers)?;
            if c0 >= best {
                continue;
            }
            let c1 = self.cost(q, answers | 1 << x)?;
            best = best.min(c0.max(c1));
        }
        // every point queried: the version space is a single labeling
        let c = if best == u32::MAX { 0 } else { 1 + best };
        self.memo.insert((queried, answers), c);
        Ok(c)
    }
}

/// Worst-case number of adaptive queries needed before the version space of
/// `class` has μ-diameter below `epsilon`. Memoized on (queried set, answers).
pub fn exact_cost(class: &HypothesisClass, dataset: &Dataset, epsilon: f64, cap: usize) -> Result<u32> {
    let n = dataset.n();
    if n > 64 {
        return Err(AuditError::CapExceeded { required: 1u128 << n.min(127), cap: 1 << 64 });
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(AuditError::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let memory = match class {
        HypothesisClass::Exhaustive => None,
        HypothesisClass::Dictionary { memory } if *memory <= n => Some(*memory),
        HypothesisClass::Dictionary { memory } => {
            return Err(AuditError::InvalidArgument(format!("dictionary memory {memory} exceeds n = {n}")))
        }
        HypothesisClass::Trained(_) => return Err(AuditError::MembershipUndecidable),
    };
    let mut solver = CostSolver {
        n,
        coef: (0..n)
            .map(|i| if dataset.sensitive(i) { dataset.n_not_a() as i64 } else { -(dataset.n_a() as i64) })
            .collect(),
        scale: (dataset.n_a() * dataset.n_not_a()) as f64,
        memory,
        epsilon,
        cap,
        memo: HashMap::new(),
    };
    solver.cost(0, 0)
}

/// Fidelity and manipulation-proofness of one audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mu_hat: f64,
    pub mu_true: f64,
    pub fidelity_gap: f64,
    pub diameter: f64,
    pub epsilon_audit: f64,
    pub fidelity_ok: bool,
    pub mp_ok: bool,
}

pub fn audit_report(
    h_star: &Labeling,
    audit: &AuditSet,
    diameter: f64,
    epsilon: f64,
    dataset: &Dataset,
) -> Result<AuditReport> {
    let mu_hat = measure_mu(h_star, &audit.point_set(), dataset)?;
    let mu_true = measure_mu(h_star, &PointSet::full(dataset.n()), dataset)?;
    let fidelity_gap = (mu_hat - mu_true).abs();
    Ok(AuditReport {
        mu_hat,
        mu_true,
        fidelity_gap,
        diameter,
        epsilon_audit: epsilon,
        fidelity_ok: fidelity_gap < epsilon,
        mp_ok: diameter < epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportions_give_floor_counts() {
        let ds = Dataset::from_group_sizes(300, 700).unwrap();
        let a = random_audit(&ds, 0.1, 0.1, 3).unwrap();
        let c = ds.group_counts(&a.point_set());
        assert_eq!((c.s_a, c.s_not_a), (30, 70));
        assert_eq!(random_audit(&ds, 1.0, 1.0, 0).unwrap().len(), 1000);
        assert!(random_audit(&ds, 0.0, 0.0, 0).unwrap().is_empty());
        assert!(random_audit(&ds, 1.5, 0.0, 0).is_err());
        assert_eq!(quota(0.29, 100), 29);
        assert_eq!(quota(0.1, 7), 0);
    }

    #[test]
    fn answers_round_trip() {
        let h = Labeling::from_bits(vec![false, false, false, true]);
        let a = record_answers(AuditSet::new(vec![3]).unwrap(), &h).unwrap();
        assert_eq!(a.answers(), Some(&[true][..]));
        assert!(matches!(record_answers(a.clone(), &h), Err(AuditError::AlreadyRecorded)));
        let empty = record_answers(AuditSet::new(vec![]).unwrap(), &h).unwrap();
        assert_eq!(empty.answers(), Some(&[][..]));
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "{\"query\":3,\"answer\":true}\n");
        assert_eq!(AuditSet::read_jsonl(&buf[..]).unwrap(), a);
    }

    #[test]
    fn consistency_touches_only_queried_points() {
        let h = Labeling::from_bits(vec![true, false, true, false]);
        let a = record_answers(AuditSet::new(vec![0, 1]).unwrap(), &h).unwrap();
        assert!(check_consistency(&h, &a).unwrap());
        let mut flip_q = h.clone();
        flip_q.set(1, true);
        assert!(!check_consistency(&flip_q, &a).unwrap());
        let mut flip_u = h.clone();
        flip_u.set(2, false);
        flip_u.set(3, true);
        assert!(check_consistency(&flip_u, &a).unwrap());
    }

    #[test]
    fn worked_cost_example() {
        let ds = Dataset::from_group_sizes(2, 2).unwrap();
        let c = exact_cost(&HypothesisClass::Exhaustive, &ds, 0.6, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(c, 3);
        assert_eq!(exact_cost(&HypothesisClass::Exhaustive, &ds, 2.5, DEFAULT_NODE_BUDGET).unwrap(), 0);
    }

    #[test]
    fn node_budget_is_enforced() {
        let ds = Dataset::from_group_sizes(4, 4).unwrap();
        let err = exact_cost(&HypothesisClass::Exhaustive, &ds, 0.1, 10).unwrap_err();
        assert!(matches!(err, AuditError::NodeBudgetExceeded { cap: 10, .. }));
    }

    #[test]
    fn report_thresholds() {
        let ds = Dataset::from_group_sizes(2, 4).unwrap();
        let h = ds.sensitive_labeling();
        let full = AuditSet::new((0..6).collect()).unwrap();
        let r = audit_report(&h, &full, 2.0, 0.1, &ds).unwrap();
        assert_eq!((r.mu_hat, r.mu_true, r.fidelity_gap), (1.0, 1.0, 0.0));
        assert!(r.fidelity_ok && !r.mp_ok);
        let one_group = AuditSet::new(vec![0, 1]).unwrap();
        assert!(matches!(
            audit_report(&h, &one_group, 0.0, 0.1, &ds),
            Err(AuditError::MeasureUndefined(_))
        ));
    }
}
