//! Discrete-time simulation loop and Monte-Carlo replication harness.

use crate::choice::{ChoiceModel, FeasibleCollection};
use crate::instance::{Count, DurationLaw, Instance, InstanceError, Product};
use crate::policy::{Designation, Policy, PolicyError, PolicyKind};
use crate::rng::{uniform, CHOICE_DRAW, DURATION_DRAW};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl EngineError {
    /// True when the failure is a broken internal invariant rather than bad input.
    pub fn is_invariant(&self) -> bool {
        matches!(self, EngineError::Policy(PolicyError::Invariant { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    /// Applied (product, amount) shocks after clamping.
    pub shocks: Vec<(usize, i64)>,
    /// (product, units a negative shock failed to remove).
    pub clamps: Vec<(usize, i64)>,
    pub returns: usize,
    pub offered: Vec<usize>,
    pub designated: Vec<Designation>,
    pub choice: Option<usize>,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub t: usize,
    pub product: usize,
    pub batch: Option<usize>,
    /// Level of the designated batch (or scalar level) just before the sale.
    pub level: f64,
    pub price: f64,
    /// Period at which the unit is back; `None` if it never returns.
    pub returns_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub ready_at: usize,
    pub members: u64,
    /// Periods at which a unit of this batch was sold.
    pub allocations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub policy: PolicyKind,
    pub seed: u64,
    pub periods: Vec<PeriodRecord>,
    pub allocations: Vec<Allocation>,
    /// Final ready batches per product (batched policies only).
    pub batches: Vec<Vec<BatchRecord>>,
    pub total_revenue: f64,
}

impl SimTrace {
    /// Per-period summary with 1-based product ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,chosen,revenue,cumulative_revenue\n");
        let mut cum = 0.0;
        for p in &self.periods {
            cum += p.revenue;
            let chosen = p.choice.map(|i| (i + 1).to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{:.6},{:.6}", p.t, chosen, p.revenue, cum);
        }
        out
    }

    pub fn horizon(&self) -> usize {
        self.periods.len()
    }
}

/// Incremental simulator. The stylized generators drive it one period at a
/// time while deciding what comes next.
pub struct Simulation {
    policy: Policy,
    products: Vec<Product>,
    seed: u64,
    duration_law: Option<DurationLaw>,
    returns: BTreeMap<usize, Vec<(usize, Option<usize>)>>,
    t: usize,
    periods: Vec<PeriodRecord>,
    allocations: Vec<Allocation>,
    revenue: f64,
}

impl Simulation {
    pub fn new(kind: &PolicyKind, inst: &Instance, seed: u64) -> Result<Self, EngineError> {
        let policy = Policy::new(kind, inst)?;
        Ok(Self::with_policy(
            policy,
            inst.products.clone(),
            seed,
            inst.duration_override,
        ))
    }

    /// Simulator over a product list that may grow; skips the γ range check.
    pub fn open(kind: &PolicyKind, products: &[Product], seed: u64) -> Result<Self, EngineError> {
        let policy = Policy::for_products(kind, products)?;
        Ok(Self::with_policy(policy, products.to_vec(), seed, None))
    }

    fn with_policy(policy: Policy, products: Vec<Product>, seed: u64, duration_law: Option<DurationLaw>) -> Self {
        Self {
            policy,
            products,
            seed,
            duration_law,
            returns: BTreeMap::new(),
            t: 0,
            periods: Vec::new(),
            allocations: Vec::new(),
            revenue: 0.0,
        }
    }

    pub fn add_product(&mut self, p: Product) {
        self.policy.add_product(&p);
        self.products.push(p);
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn period(&self) -> usize {
        self.t
    }

    pub fn revenue(&self) -> f64 {
        self.revenue
    }

    /// Runs the next period: returns, shocks, assortment, choice, allocation.
    pub fn step(
        &mut self,
        shocks: &[(usize, i64)],
        model: &ChoiceModel,
        feasible: FeasibleCollection,
    ) -> Result<&PeriodRecord, EngineError> {
        self.t += 1;
        let t = self.t;
        let mut returns = 0;
        if let Some(due) = self.returns.remove(&t) {
            returns = due.len();
            for (i, b) in due {
                self.policy.on_return(i, b);
            }
        }
        let mut applied = Vec::new();
        let mut clamps = Vec::new();
        for &(i, xi) in shocks {
            let out = self.policy.apply_shock(i, xi, t);
            if out.applied != 0 {
                applied.push((i, out.applied));
            }
            if out.shortfall != 0 {
                clamps.push((i, out.shortfall));
            }
        }
        let sel = self.policy.select(model, feasible)?;
        let u = uniform(self.seed, t, CHOICE_DRAW);
        let choice = model.choose_with_uniform(&sel.offered, u);
        let mut revenue = 0.0;
        if let Some(i) = choice {
            let d = sel
                .designated
                .iter()
                .find(|d| d.product == i)
                .expect("chosen product was offered");
            self.policy.on_choice(d, t)?;
            let price = self.products[i].price;
            revenue = price;
            self.revenue += price;
            let duration = match self.duration_law {
                Some(law) => Count::Finite(law.sample(uniform(self.seed, t, DURATION_DRAW))),
                None => self.products[i].duration,
            };
            let returns_at = duration.finite().map(|d| t + d as usize);
            if let Some(r) = returns_at {
                if !self.policy.is_unlimited(i) {
                    self.returns.entry(r).or_default().push((i, d.batch));
                }
            }
            self.allocations.push(Allocation {
                t,
                product: i,
                batch: d.batch,
                level: d.level,
                price,
                returns_at,
            });
        }
        self.periods.push(PeriodRecord {
            t,
            shocks: applied,
            clamps,
            returns,
            offered: sel.offered,
            designated: sel.designated,
            choice,
            revenue,
        });
        Ok(self.periods.last().expect("just pushed"))
    }

    pub fn finish(self) -> SimTrace {
        let n = self.products.len();
        let mut batches: Vec<Vec<BatchRecord>> = (0..n)
            .map(|i| {
                self.policy
                    .batches(i)
                    .iter()
                    .map(|b| BatchRecord {
                        ready_at: b.ready_at,
                        members: b.members,
                        allocations: Vec::new(),
                    })
                    .collect()
            })
            .collect();
        for a in &self.allocations {
            if let Some(j) = a.batch {
                batches[a.product][j].allocations.push(a.t);
            }
        }
        SimTrace {
            policy: self.policy.kind().clone(),
            seed: self.seed,
            periods: self.periods,
            allocations: self.allocations,
            batches,
            total_revenue: self.revenue,
        }
    }
}

pub fn run(inst: &Instance, kind: &PolicyKind, seed: u64) -> Result<SimTrace, EngineError> {
    let mut sim = Simulation::new(kind, inst, seed)?;
    for t in 1..=inst.horizon {
        sim.step(inst.shocks.at(t), &inst.consumers[t - 1], inst.feasible)?;
    }
    Ok(sim.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub policy: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl RunStats {
    pub fn from_values(policy: &str, values: Vec<f64>, seeds: Vec<u64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            policy: policy.to_string(),
            mean,
            sd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values,
            seeds,
        }
    }

    pub fn stderr(&self) -> f64 {
        self.sd / (self.values.len() as f64).sqrt()
    }
}

/// Replication k regenerates the instance with seed `base_seed + k` and runs
/// every policy on it with that same seed.
pub fn monte_carlo<F>(
    generate: F,
    policies: &[PolicyKind],
    replications: usize,
    base_seed: u64,
) -> Result<Vec<RunStats>, EngineError>
where
    F: Fn(u64) -> Result<Instance, EngineError> + Sync,
{
    assert!(replications >= 1, "replications must be at least 1");
    let seeds: Vec<u64> = (0..replications as u64).map(|k| base_seed + k).collect();
    let per_rep: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let inst = generate(seed)?;
            policies
                .iter()
                .map(|p| run(&inst, p, seed).map(|tr| tr.total_revenue))
                .collect::<Result<Vec<f64>, EngineError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(policies
        .iter()
        .enumerate()
        .map(|(k, p)| RunStats::from_values(p.name(), per_rep.iter().map(|r| r[k]).collect(), seeds.clone()))
        .collect())
}
