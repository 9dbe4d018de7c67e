//! Per-path dual certificates for batched runs.
//!
//! Each sale of a ready batch becomes an interval running from the sale to
//! the period before the unit is back. Interval labels turn into transformed
//! levels g, and from those the θ duals follow.

use super::bound::{gamma_bound, GammaBound};
use super::AnalysisError;
use crate::choice::ChoiceModel;
use crate::engine::{run, SimTrace};
use crate::iap::{solve, IapInstance};
use crate::instance::Instance;
use crate::penalty::Penalty;
use crate::policy::PolicyKind;
use serde::{Deserialize, Serialize};

/// Absolute slack allowed in the pointwise inequality.
pub const POINTWISE_TOL: f64 = 1e-9;
/// Relative slack allowed in the primal-versus-dual comparison.
pub const RATIO_TOL: f64 = 1e-9;

/// Right endpoint used for units that never come back.
const NEVER: i64 = i64::MAX / 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub product: usize,
    pub batch: usize,
    pub t: usize,
    pub label: usize,
    pub g: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// λ_t indexed by period − 1.
    pub lambda: Vec<f64>,
    pub theta: Vec<ThetaEntry>,
    pub gamma_bound: f64,
    pub primal: f64,
    pub dual_objective: f64,
    /// Smallest value of lhs − r over all checked (i, j, t).
    pub worst_pointwise_slack: f64,
    pub pointwise_ok: bool,
    pub ratio_ok: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.pointwise_ok && self.ratio_ok
    }
}

struct Sale {
    t: usize,
    back: Option<usize>,
}

/// Certificate with Γ computed at c0 = smallest finite initial inventory.
pub fn certify_run(trace: &SimTrace, inst: &Instance, psi: &Penalty, gamma: u64) -> Result<Certificate, AnalysisError> {
    let c0 = inst
        .min_inventory()
        .ok_or_else(|| AnalysisError::Contract("no product has finite inventory".into()))?;
    let bound = gamma_bound(psi, gamma, c0)?;
    certify_with_bound(trace, inst, &bound)
}

pub fn certify_with_bound(trace: &SimTrace, inst: &Instance, bound: &GammaBound) -> Result<Certificate, AnalysisError> {
    let psi = &bound.psi;
    let gamma = bound.gamma;
    match &trace.policy {
        PolicyKind::Bib { penalty, gamma: g } if penalty == psi && *g == gamma => {}
        PolicyKind::Usib { penalty } if penalty == psi && gamma == 1 => {}
        other => {
            return Err(AnalysisError::Contract(format!(
                "trace from {} does not match the batched policy being certified",
                other.name()
            )))
        }
    }
    if inst.negative_shocks {
        return Err(AnalysisError::Contract("certification needs nonnegative shocks".into()));
    }
    let horizon = trace.horizon();
    let mut lambda = vec![0.0; horizon];
    for a in &trace.allocations {
        lambda[a.t - 1] = a.price * psi.at(a.level);
    }
    let mut theta = Vec::new();
    let mut dual = lambda.iter().sum::<f64>();
    let mut worst = f64::INFINITY;
    for (i, batches) in trace.batches.iter().enumerate() {
        let product = &inst.products[i];
        if product.initial_inventory.is_infinite() {
            continue;
        }
        let r = product.price;
        let c = product.initial_inventory.finite().unwrap_or(0);
        for (j, batch) in batches.iter().enumerate() {
            let size = batch.members;
            let sales: Vec<Sale> = trace
                .allocations
                .iter()
                .filter(|a| a.product == i && a.batch == Some(j))
                .map(|a| Sale {
                    t: a.t,
                    back: a.returns_at,
                })
                .collect();
            let mut thetas = Vec::with_capacity(sales.len());
            if !sales.is_empty() {
                let intervals = sales
                    .iter()
                    .map(|s| (s.t as i64, s.back.map_or(NEVER, |b| b as i64 - 1)))
                    .collect();
                let iap =
                    IapInstance::new(intervals).map_err(|e| AnalysisError::Contract(format!("sale intervals: {e}")))?;
                let labels = solve(&iap).labels;
                for (s, &label) in sales.iter().zip(&labels) {
                    if label as u64 > size {
                        return Err(AnalysisError::Contract(format!(
                            "label {label} exceeds batch size {size} for product {i} batch {j}"
                        )));
                    }
                    let g = 1.0 - (label as f64 - 1.0) / size as f64;
                    let below = (size - label as u64) as f64 / size as f64;
                    let th = r * (psi.at(g.clamp(0.0, 1.0)) - psi.at(below));
                    thetas.push(th);
                    theta.push(ThetaEntry {
                        product: i,
                        batch: j,
                        t: s.t,
                        label,
                        g,
                        theta: th,
                    });
                }
            }
            let weight = if j == 0 { (c + gamma) as f64 } else { gamma as f64 };
            dual += weight * thetas.iter().sum::<f64>();
            worst = worst.min(pointwise_slack(r, size, batch.ready_at, horizon, &sales, &thetas, psi));
        }
    }
    let primal = trace.total_revenue;
    let scaled = bound.gamma_min * dual;
    Ok(Certificate {
        lambda,
        theta,
        gamma_bound: bound.gamma_min,
        primal,
        dual_objective: dual,
        worst_pointwise_slack: worst,
        pointwise_ok: worst >= -POINTWISE_TOL,
        ratio_ok: primal >= scaled - RATIO_TOL * scaled.abs().max(1.0),
    })
}

/// min over t ≥ ready_at of r Ψ(f_t) + Σ_{outstanding at t} θ − r.
fn pointwise_slack(
    r: f64,
    size: u64,
    ready_at: usize,
    horizon: usize,
    sales: &[Sale],
    thetas: &[f64],
    psi: &Penalty,
) -> f64 {
    if size == 0 {
        return f64::INFINITY;
    }
    let mut d_count = vec![0i64; horizon + 2];
    let mut d_theta = vec![0.0f64; horizon + 2];
    for (s, &th) in sales.iter().zip(thetas) {
        let from = s.t + 1;
        let to = s.back.unwrap_or(horizon + 1).min(horizon + 1);
        if from < to {
            d_count[from] += 1;
            d_count[to] -= 1;
            d_theta[from] += th;
            d_theta[to] -= th;
        }
    }
    let mut worst = f64::INFINITY;
    let (mut out, mut sum) = (0i64, 0.0f64);
    for t in 1..=horizon {
        out += d_count[t];
        sum += d_theta[t];
        if t < ready_at {
            continue;
        }
        let f = (size as i64 - out) as f64 / size as f64;
        worst = worst.min(r * psi.at(f.clamp(0.0, 1.0)) + sum - r);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSample {
    pub t: usize,
    pub assortment: Vec<(usize, usize)>,
    pub mean_lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Monte-Carlo check that every dual constraint of a tiny instance holds in
/// expectation, within three standard errors.
pub fn dual_expectation_check(
    inst: &Instance,
    psi: &Penalty,
    gamma: u64,
    replications: usize,
    base_seed: u64,
) -> Result<Vec<ConstraintSample>, AnalysisError> {
    if inst.n() > 3 || inst.horizon > 15 {
        return Err(AnalysisError::TooLarge(
            "expectation check needs n ≤ 3 and T ≤ 15".into(),
        ));
    }
    let kind = PolicyKind::Bib {
        penalty: psi.clone(),
        gamma,
    };
    let c0 = inst
        .min_inventory()
        .ok_or_else(|| AnalysisError::Contract("no product has finite inventory".into()))?;
    let bound = gamma_bound(psi, gamma, c0)?;
    let prices = inst.prices();
    let first = run(inst, &kind, base_seed)?;
    let constraints = enumerate_constraints(inst, &first);
    let mut sums = vec![(0.0f64, 0.0f64); constraints.len()];
    for k in 0..replications {
        let seed = base_seed + k as u64;
        let tr = if k == 0 { first.clone() } else { run(inst, &kind, seed)? };
        let cert = certify_with_bound(&tr, inst, &bound)?;
        let theta_at = |i: usize, j: usize, t: usize| -> f64 {
            cert.theta
                .iter()
                .filter(|e| e.product == i && e.batch == j && e.t == t)
                .map(|e| e.theta)
                .sum()
        };
        for (idx, (t, l)) in constraints.iter().enumerate() {
            let model = &inst.consumers[t - 1];
            let set: Vec<usize> = l.iter().map(|e| e.0).collect();
            let mut lhs = cert.lambda[t - 1];
            for &(i, j) in l {
                let phi = model.choice_probability(&set, i);
                let start = tr.batches[i][j].ready_at;
                let lo = match inst.products[i].duration.finite() {
                    Some(d) => (*t + 1).saturating_sub(d as usize).max(start),
                    None => start,
                };
                let window: f64 = (lo..=*t).map(|s| theta_at(i, j, s)).sum();
                lhs += phi * window;
            }
            sums[idx].0 += lhs;
            sums[idx].1 += lhs * lhs;
        }
    }
    let n = replications as f64;
    Ok(constraints
        .into_iter()
        .zip(sums)
        .map(|((t, l), (s, s2))| {
            let model = &inst.consumers[t - 1];
            let set: Vec<usize> = l.iter().map(|e| e.0).collect();
            let rhs: f64 = set.iter().map(|&i| prices[i] * model.choice_probability(&set, i)).sum();
            let mean = s / n;
            let var = if replications > 1 {
                ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            let stderr = (var / n).sqrt();
            ConstraintSample {
                t,
                pass: mean >= rhs - 3.0 * stderr - POINTWISE_TOL,
                assortment: l,
                mean_lhs: mean,
                rhs,
                stderr,
            }
        })
        .collect())
}

fn enumerate_constraints(inst: &Instance, trace: &SimTrace) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut out = Vec::new();
    for t in 1..=inst.horizon {
        let model: &ChoiceModel = &inst.consumers[t - 1];
        let cands: Vec<usize> = model
            .candidates()
            .filter(|&i| !inst.products[i].initial_inventory.is_infinite())
            .collect();
        out.push((t, Vec::new()));
        for mask in 1u32..(1 << cands.len()) {
            let set: Vec<usize> = (0..cands.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| cands[b])
                .collect();
            if !inst.feasible.allows(set.len()) {
                continue;
            }
            let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
            for &i in &set {
                let ready: Vec<usize> = (0..trace.batches[i].len())
                    .filter(|&j| trace.batches[i][j].ready_at <= t)
                    .collect();
                combos = combos
                    .into_iter()
                    .flat_map(|p| {
                        ready.iter().map(move |&j| {
                            let mut q = p.clone();
                            q.push((i, j));
                            q
                        })
                    })
                    .collect();
            }
            out.extend(combos.into_iter().map(|l| (t, l)));
        }
    }
    out
}
