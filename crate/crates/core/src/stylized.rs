//! Adversarial stylized instances built by co-simulating a target policy.

use crate::choice::{ChoiceModel, FeasibleCollection, ProductSet};
use crate::engine::{EngineError, Simulation};
use crate::instance::{Count, Instance, Product, Shocks};
use crate::penalty::{Penalty, PenaltyError};
use crate::policy::PolicyKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StylizedError {
    #[error("invalid stylized parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    G,
    Ghat,
    Gbar,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::G => "G",
            Family::Ghat => "Ghat",
            Family::Gbar => "Gbar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StylizedParams {
    pub family: Family,
    #[serde(default)]
    pub stages: usize,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub n0: usize,
    pub c: u64,
    #[serde(default)]
    pub eps: f64,
    /// Penalty used in the product-count formula.
    #[serde(default = "exponential")]
    pub penalty: Penalty,
}

fn exponential() -> Penalty {
    Penalty::Exponential
}

impl StylizedParams {
    pub fn g(stages: usize, r: f64, s: f64, n0: usize, c: u64) -> Self {
        Self {
            family: Family::G,
            stages,
            r,
            s,
            n0,
            c,
            eps: 0.0,
            penalty: Penalty::Exponential,
        }
    }

    pub fn ghat(stages: usize, r: f64, s: f64, n0: usize, c: u64) -> Self {
        Self {
            family: Family::Ghat,
            ..Self::g(stages, r, s, n0, c)
        }
    }

    pub fn gbar(eps: f64, c: u64) -> Self {
        Self {
            family: Family::Gbar,
            eps,
            ..Self::g(0, 0.0, 0.0, 0, c)
        }
    }

    /// The policy the construction adapts to.
    pub fn default_target(&self) -> PolicyKind {
        match self.family {
            Family::Ghat => PolicyKind::Dcib {
                penalty: self.penalty.clone(),
            },
            _ => PolicyKind::Scib {
                penalty: self.penalty.clone(),
            },
        }
    }

    fn validate(&self) -> Result<(), StylizedError> {
        let bad = |m: &str| Err(StylizedError::Invalid(m.to_string()));
        if self.c == 0 {
            return bad("c must be positive");
        }
        match self.family {
            Family::Gbar => {
                if !(0.0..=1.0).contains(&self.eps) || self.eps >= 1.0 {
                    return bad("eps must lie in [0,1)");
                }
            }
            _ => {
                if !(0.0..=1.0).contains(&self.r) || !(0.0..=1.0).contains(&self.s) || self.r == 0.0 {
                    return bad("r must lie in (0,1] and s in [0,1]");
                }
                if self.family == Family::Ghat && self.s >= 1.0 {
                    return bad("s must be below 1 for Ghat");
                }
                if self.n0 == 0 {
                    return bad("n0 must be positive");
                }
                let ratio = self.penalty.eval(self.s)? / self.r;
                if !(0.0..=1.0).contains(&ratio) {
                    return bad("psi(s)/r must lie in [0,1]");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizedMeta {
    pub family: Family,
    /// Product counts n_0..n_N.
    pub n: Vec<usize>,
    /// Shock totals ξ_1..ξ_N.
    pub xi: Vec<u64>,
    /// Period at which each stage's shocks arrive.
    pub shock_periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stylized {
    pub instance: Instance,
    pub meta: StylizedMeta,
}

struct Builder {
    sim: Simulation,
    products: Vec<Product>,
    consumers: Vec<ChoiceModel>,
    shocks: Vec<Vec<(usize, i64)>>,
}

impl Builder {
    fn add_products(&mut self, count: usize, price: f64, c: u64) -> usize {
        let first = self.products.len();
        for k in 0..count {
            let p = Product::new(first + k, price, Count::Finite(c), Count::Infinite);
            self.sim.add_product(p.clone());
            self.products.push(p);
        }
        first
    }

    fn consumer(&mut self, shocks: Vec<(usize, i64)>, model: ChoiceModel) -> Result<(), StylizedError> {
        self.sim.step(&shocks, &model, FeasibleCollection::All)?;
        self.shocks.push(shocks);
        self.consumers.push(model);
        Ok(())
    }

    /// c·count consumers; the k-th accepts the first count − ⌊k/c⌋ products of the group.
    fn nested(&mut self, first: usize, count: usize, c: u64) -> Result<(), StylizedError> {
        for k in 0..c as usize * count {
            let hi = first + count - k / c as usize;
            self.consumer(
                Vec::new(),
                ChoiceModel::Singleton {
                    accepts: ProductSet::range(first, hi),
                },
            )?;
        }
        Ok(())
    }

    fn finish(self) -> Instance {
        let n = self.products.len();
        let horizon = self.consumers.len();
        let mut shocks = Shocks::zeros(n, horizon);
        for (t, list) in self.shocks.iter().enumerate() {
            for &(i, v) in list {
                shocks.add(i, t + 1, v);
            }
        }
        Instance {
            products: self.products,
            horizon,
            shocks,
            consumers: self.consumers,
            feasible: FeasibleCollection::All,
            negative_shocks: false,
            duration_override: None,
        }
    }
}

pub fn gen_stylized(params: &StylizedParams, target: &PolicyKind) -> Result<Stylized, StylizedError> {
    params.validate()?;
    match params.family {
        Family::Gbar => Ok(gbar(params)),
        _ => adaptive(params, target),
    }
}

fn adaptive(params: &StylizedParams, target: &PolicyKind) -> Result<Stylized, StylizedError> {
    let c = params.c;
    let s_c = params.s * c as f64;
    let factor = c as f64 * (1.0 - params.penalty.inverse(params.penalty.eval(params.s)? / params.r)?);
    let mut b = Builder {
        sim: Simulation::open(target, &[], 0)?,
        products: Vec::new(),
        consumers: Vec::new(),
        shocks: Vec::new(),
    };
    let mut group = (b.add_products(params.n0, 1.0, c), params.n0);
    b.nested(group.0, group.1, c)?;
    let mut meta = StylizedMeta {
        family: params.family,
        n: vec![params.n0],
        xi: Vec::new(),
        shock_periods: Vec::new(),
    };
    for stage in 1..=params.stages {
        let mut per_product = Vec::with_capacity(group.1);
        for i in group.0..group.0 + group.1 {
            let x = b.sim.policy().on_hand(i).finite().unwrap_or(0) as f64;
            let raw = match params.family {
                Family::G => s_c - x,
                _ => (s_c - x) / (1.0 - params.s),
            };
            per_product.push((i, raw.max(0.0).round_ties_even() as i64));
        }
        let total: u64 = per_product.iter().map(|e| e.1 as u64).sum();
        let count = if factor > 0.0 {
            ((total as f64 / factor).round_ties_even() as usize).max(1)
        } else {
            1
        };
        let fresh = b.add_products(count, params.r.powi(stage as i32), c);
        meta.xi.push(total);
        meta.n.push(count);
        meta.shock_periods.push(b.consumers.len() + 1);
        let mut pending: Vec<(usize, i64)> = per_product.iter().copied().filter(|e| e.1 > 0).collect();
        let mut k = 0;
        for &(i, units) in &per_product {
            for _ in 0..units {
                let partner = fresh + k % count;
                b.consumer(std::mem::take(&mut pending), ChoiceModel::singleton([i, partner]))?;
                k += 1;
            }
        }
        b.nested(fresh, count, c)?;
        group = (fresh, count);
    }
    Ok(Stylized {
        instance: b.finish(),
        meta,
    })
}

fn gbar(params: &StylizedParams) -> Stylized {
    let c = params.c as usize;
    let horizon = c + 2 * c * c;
    let products = vec![
        Product::new(0, 1.0, Count::Finite(params.c), Count::Infinite),
        Product::new(1, 1.0 - params.eps, Count::Infinite, Count::Infinite),
    ];
    let mut shocks = Shocks::zeros(2, horizon);
    let mut consumers = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        if t > c && (t - c) % 2 == 1 {
            shocks.add(0, t, 1);
            consumers.push(ChoiceModel::singleton([0, 1]));
        } else {
            consumers.push(ChoiceModel::singleton([0]));
        }
    }
    Stylized {
        instance: Instance {
            products,
            horizon,
            shocks,
            consumers,
            feasible: FeasibleCollection::All,
            negative_shocks: false,
            duration_override: None,
        },
        meta: StylizedMeta {
            family: Family::Gbar,
            n: Vec::new(),
            xi: Vec::new(),
            shock_periods: Vec::new(),
        },
    }
}
