//! Batch-specified LP benchmark built from a batched policy's execution.

use super::AnalysisError;
use crate::choice::ChoiceModel;
use crate::engine::SimTrace;
use crate::instance::Instance;
use serde::{Deserialize, Serialize};

pub const MAX_PRODUCTS: usize = 4;
pub const MAX_HORIZON: usize = 40;
pub const MAX_READY_BATCHES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// One decision variable: period and (product, batch) pairs offered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpVar {
    pub t: usize,
    pub assortment: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub vars: Vec<LpVar>,
}

impl LpProblem {
    pub fn from_parts(objective: Vec<f64>, rows: Vec<Row>) -> Self {
        Self {
            vars: Vec::new(),
            objective,
            rows,
        }
    }
}

fn subsets(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1u32..(1 << items.len())).map(move |mask| {
        (0..items.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| items[b])
            .collect()
    })
}

/// Every way of picking one ready batch per product of `set`.
fn batch_choices(set: &[usize], ready: &[Vec<usize>]) -> Vec<Vec<(usize, usize)>> {
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for &i in set {
        let mut next = Vec::with_capacity(out.len() * ready[i].len());
        for partial in &out {
            for &j in &ready[i] {
                let mut p = partial.clone();
                p.push((i, j));
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn build_lp(trace: &SimTrace, inst: &Instance, gamma: u64) -> Result<LpProblem, AnalysisError> {
    if trace.policy.gamma() != Some(gamma) {
        return Err(AnalysisError::Contract(format!(
            "trace was produced by {} rather than a batched policy with gamma {gamma}",
            trace.policy.name()
        )));
    }
    if inst.negative_shocks || inst.duration_override.is_some() {
        return Err(AnalysisError::Contract(
            "the benchmark needs nonnegative shocks and fixed durations".into(),
        ));
    }
    let n = inst.n();
    let horizon = inst.horizon;
    let total_batches: usize = trace.batches.iter().map(Vec::len).sum();
    if n > MAX_PRODUCTS || horizon > MAX_HORIZON || total_batches > MAX_READY_BATCHES {
        return Err(AnalysisError::TooLarge(format!(
            "n = {n}, T = {horizon}, ready batches = {total_batches}"
        )));
    }
    let prices = inst.prices();
    let mut vars = Vec::new();
    let mut objective = Vec::new();
    // (product, batch, t, φ) for each variable, for the capacity rows.
    let mut uses: Vec<Vec<(usize, usize, f64)>> = Vec::new();
    for t in 1..=horizon {
        let model: &ChoiceModel = &inst.consumers[t - 1];
        let ready: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..trace.batches[i].len())
                    .filter(|&j| trace.batches[i][j].ready_at <= t)
                    .collect()
            })
            .collect();
        let cands: Vec<usize> = model.candidates().collect();
        for set in subsets(&cands) {
            if !inst.feasible.allows(set.len()) {
                continue;
            }
            let phi: Vec<f64> = set.iter().map(|&i| model.choice_probability(&set, i)).collect();
            let value: f64 = set.iter().zip(&phi).map(|(&i, p)| prices[i] * p).sum();
            if value <= 0.0 {
                continue;
            }
            for choice in batch_choices(&set, &ready) {
                objective.push(value);
                uses.push(choice.iter().zip(&phi).map(|(&(i, j), &p)| (i, j, p)).collect());
                vars.push(LpVar { t, assortment: choice });
            }
        }
    }
    let mut rows = Vec::new();
    for i in 0..n {
        if inst.products[i].initial_inventory.is_infinite() {
            continue;
        }
        let c = inst.products[i].initial_inventory.finite().unwrap_or(0);
        let d = inst.products[i].duration.finite().map(|d| d as usize);
        for (j, batch) in trace.batches[i].iter().enumerate() {
            let rhs = if j == 0 { (c + gamma) as f64 } else { gamma as f64 };
            let start = batch.ready_at;
            for from in start..=horizon {
                let end = d.map_or(horizon, |d| (from + d - 1).min(horizon));
                let dominated = from > start && d.is_none_or(|d| from + d - 2 >= horizon);
                if dominated {
                    continue;
                }
                let coeffs: Vec<(usize, f64)> = vars
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.t >= from && v.t <= end)
                    .filter_map(|(k, _)| {
                        uses[k]
                            .iter()
                            .find(|&&(pi, pj, _)| pi == i && pj == j)
                            .map(|&(_, _, p)| (k, p))
                    })
                    .collect();
                if !coeffs.is_empty() {
                    rows.push(Row { coeffs, rhs });
                }
            }
        }
    }
    for t in 1..=horizon {
        let coeffs: Vec<(usize, f64)> = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.t == t)
            .map(|(k, _)| (k, 1.0))
            .collect();
        if !coeffs.is_empty() {
            rows.push(Row { coeffs, rhs: 1.0 });
        }
    }
    Ok(LpProblem { objective, rows, vars })
}
