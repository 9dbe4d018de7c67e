//! Online balancing policies and their inventory books.

use crate::choice::{assortment_oracle, ChoiceError, ChoiceModel, FeasibleCollection};
use crate::instance::{Count, Instance, Product};
use crate::penalty::Penalty;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("invalid policy: {0}")]
    Invalid(String),
    #[error("invariant violated at period {period}: {msg}")]
    Invariant { period: usize, msg: String },
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicyKind {
    Bib { penalty: Penalty, gamma: u64 },
    Scib { penalty: Penalty },
    Dcib { penalty: Penalty },
    Usib { penalty: Penalty },
    Greed,
}

impl PolicyKind {
    pub fn bib_exp(gamma: u64) -> Self {
        PolicyKind::Bib {
            penalty: Penalty::Exponential,
            gamma,
        }
    }

    /// The five policies compared in the experiments, exponential penalty.
    pub fn standard_set(gamma: u64) -> Vec<PolicyKind> {
        let p = Penalty::Exponential;
        vec![
            PolicyKind::bib_exp(gamma),
            PolicyKind::Scib { penalty: p.clone() },
            PolicyKind::Dcib { penalty: p.clone() },
            PolicyKind::Usib { penalty: p },
            PolicyKind::Greed,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Bib { .. } => "BIB",
            PolicyKind::Scib { .. } => "SCIB",
            PolicyKind::Dcib { .. } => "DCIB",
            PolicyKind::Usib { .. } => "USIB",
            PolicyKind::Greed => "GREED",
        }
    }

    /// Batch threshold for batched policies.
    pub fn gamma(&self) -> Option<u64> {
        match self {
            PolicyKind::Bib { gamma, .. } => Some(*gamma),
            PolicyKind::Usib { .. } => Some(1),
            _ => None,
        }
    }

    pub fn penalty(&self) -> Penalty {
        match self {
            PolicyKind::Bib { penalty, .. }
            | PolicyKind::Scib { penalty }
            | PolicyKind::Dcib { penalty }
            | PolicyKind::Usib { penalty } => penalty.clone(),
            PolicyKind::Greed => Penalty::Step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub members: u64,
    pub available: u64,
    /// Period at which the batch became ready.
    pub ready_at: usize,
}

#[derive(Debug, Clone)]
struct BatchBook {
    unlimited: bool,
    ready: Vec<Batch>,
    charging: u64,
}

impl BatchBook {
    fn new(stock: Count) -> Self {
        let c = stock.finite().unwrap_or(0);
        Self {
            unlimited: stock.is_infinite(),
            ready: vec![Batch {
                members: c,
                available: c,
                ready_at: 1,
            }],
            charging: 0,
        }
    }

    fn level(&self, j: usize) -> f64 {
        if self.unlimited && j == 0 {
            return 1.0;
        }
        let b = &self.ready[j];
        if b.members == 0 {
            0.0
        } else {
            b.available as f64 / b.members as f64
        }
    }

    /// Best ready batch and its level; ties go to the smallest index.
    fn best(&self) -> (usize, f64) {
        let mut best = (0, self.level(0));
        for j in 1..self.ready.len() {
            let f = self.level(j);
            if f > best.1 {
                best = (j, f);
            }
        }
        best
    }

    fn on_hand(&self) -> Count {
        if self.unlimited {
            return Count::Infinite;
        }
        Count::Finite(self.ready.iter().map(|b| b.available).sum::<u64>() + self.charging)
    }
}

#[derive(Debug, Clone)]
struct ScalarBook {
    initial: Count,
    inventory: u64,
    cumulative_shock: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarRule {
    Static,
    Dynamic,
    Greedy,
}

#[derive(Debug, Clone)]
enum Books {
    Batched { gamma: u64, books: Vec<BatchBook> },
    Scalar { rule: ScalarRule, books: Vec<ScalarBook> },
}

/// Per offered product: the batch a sale would draw from and its level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Designation {
    pub product: usize,
    pub batch: Option<usize>,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection {
    pub offered: Vec<usize>,
    pub designated: Vec<Designation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShockOutcome {
    pub applied: i64,
    /// Units a negative shock could not remove.
    pub shortfall: i64,
    pub flips: usize,
}

#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    psi: Penalty,
    prices: Vec<f64>,
    books: Books,
    reduced: Vec<f64>,
}

impl Policy {
    pub fn new(kind: &PolicyKind, inst: &Instance) -> Result<Self, PolicyError> {
        let mut p = Self::for_products(kind, &inst.products)?;
        if let Some(gamma) = kind.gamma() {
            if gamma == 0 {
                return Err(PolicyError::Invalid("gamma must be at least 1".into()));
            }
            if let Some(c0) = inst.min_inventory() {
                if gamma > c0 {
                    return Err(PolicyError::Invalid(format!(
                        "gamma {gamma} exceeds the smallest initial inventory {c0}"
                    )));
                }
            }
        }
        p.reduced.resize(inst.n(), 0.0);
        Ok(p)
    }

    /// Policy over a product list that may grow later; no γ range check.
    pub fn for_products(kind: &PolicyKind, products: &[Product]) -> Result<Self, PolicyError> {
        let books = match kind {
            PolicyKind::Bib { gamma, .. } if *gamma == 0 => {
                return Err(PolicyError::Invalid("gamma must be at least 1".into()))
            }
            PolicyKind::Bib { .. } | PolicyKind::Usib { .. } => Books::Batched {
                gamma: kind.gamma().unwrap_or(1),
                books: Vec::new(),
            },
            PolicyKind::Scib { .. } => Books::Scalar {
                rule: ScalarRule::Static,
                books: Vec::new(),
            },
            PolicyKind::Dcib { .. } => Books::Scalar {
                rule: ScalarRule::Dynamic,
                books: Vec::new(),
            },
            PolicyKind::Greed => Books::Scalar {
                rule: ScalarRule::Greedy,
                books: Vec::new(),
            },
        };
        let mut p = Self {
            kind: kind.clone(),
            psi: kind.penalty(),
            prices: Vec::new(),
            books,
            reduced: Vec::new(),
        };
        for prod in products {
            p.add_product(prod);
        }
        Ok(p)
    }

    pub fn add_product(&mut self, prod: &Product) {
        self.prices.push(prod.price);
        self.reduced.push(0.0);
        match &mut self.books {
            Books::Batched { books, .. } => books.push(BatchBook::new(prod.initial_inventory)),
            Books::Scalar { books, .. } => books.push(ScalarBook {
                initial: prod.initial_inventory,
                inventory: prod.initial_inventory.finite().unwrap_or(0),
                cumulative_shock: 0,
            }),
        }
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.prices.len()
    }

    /// Units physically present (charging units included).
    pub fn on_hand(&self, i: usize) -> Count {
        match &self.books {
            Books::Batched { books, .. } => books[i].on_hand(),
            Books::Scalar { books, .. } => match books[i].initial {
                Count::Infinite => Count::Infinite,
                Count::Finite(_) => Count::Finite(books[i].inventory),
            },
        }
    }

    /// Ready batches of product `i` (empty for scalar policies).
    pub fn batches(&self, i: usize) -> &[Batch] {
        match &self.books {
            Books::Batched { books, .. } => &books[i].ready,
            Books::Scalar { .. } => &[],
        }
    }

    pub fn charging(&self, i: usize) -> u64 {
        match &self.books {
            Books::Batched { books, .. } => books[i].charging,
            Books::Scalar { .. } => 0,
        }
    }

    pub fn is_unlimited(&self, i: usize) -> bool {
        match &self.books {
            Books::Batched { books, .. } => books[i].unlimited,
            Books::Scalar { books, .. } => books[i].initial.is_infinite(),
        }
    }

    pub fn on_return(&mut self, i: usize, batch: Option<usize>) {
        match &mut self.books {
            Books::Batched { books, .. } => {
                let book = &mut books[i];
                if !book.unlimited || batch != Some(0) {
                    book.ready[batch.expect("batched return carries a batch")].available += 1;
                }
            }
            Books::Scalar { books, .. } => {
                if !books[i].initial.is_infinite() {
                    books[i].inventory += 1;
                }
            }
        }
    }

    /// Applies ξ_{i,t}; negative values remove available units and clamp at zero.
    pub fn apply_shock(&mut self, i: usize, xi: i64, t: usize) -> ShockOutcome {
        let mut out = ShockOutcome::default();
        if xi == 0 || self.is_unlimited(i) {
            return out;
        }
        match &mut self.books {
            Books::Batched { gamma, books } => {
                let book = &mut books[i];
                if xi > 0 {
                    for _ in 0..xi {
                        book.charging += 1;
                        if book.charging == *gamma {
                            book.ready.push(Batch {
                                members: *gamma,
                                available: *gamma,
                                ready_at: t,
                            });
                            book.charging = 0;
                            out.flips += 1;
                        }
                    }
                    out.applied = xi;
                } else {
                    let mut left = xi.unsigned_abs();
                    let take = left.min(book.charging);
                    book.charging -= take;
                    left -= take;
                    for b in book.ready.iter_mut().rev() {
                        let take = left.min(b.available);
                        b.available -= take;
                        b.members -= take;
                        left -= take;
                    }
                    out.applied = xi + left as i64;
                    out.shortfall = left as i64;
                }
            }
            Books::Scalar { books, .. } => {
                let book = &mut books[i];
                if xi > 0 {
                    book.inventory += xi as u64;
                    out.applied = xi;
                } else {
                    let want = xi.unsigned_abs();
                    let take = want.min(book.inventory);
                    book.inventory -= take;
                    out.applied = -(take as i64);
                    out.shortfall = (want - take) as i64;
                }
                book.cumulative_shock += out.applied;
            }
        }
        out
    }

    fn level_of(&self, i: usize) -> (Option<usize>, f64) {
        match &self.books {
            Books::Batched { books, .. } => {
                let (j, f) = books[i].best();
                (Some(j), f)
            }
            Books::Scalar { rule, books } => {
                let b = &books[i];
                let c = match b.initial {
                    Count::Infinite => return (None, 1.0),
                    Count::Finite(c) => c,
                };
                let inv = b.inventory as f64;
                let f = match rule {
                    ScalarRule::Static | ScalarRule::Greedy => {
                        if b.inventory == 0 {
                            0.0
                        } else if c == 0 {
                            1.0
                        } else {
                            (inv / c as f64).min(1.0)
                        }
                    }
                    ScalarRule::Dynamic => {
                        let den = c as i64 + b.cumulative_shock;
                        if den <= 0 || b.inventory == 0 {
                            0.0
                        } else {
                            (inv / den as f64).clamp(0.0, 1.0)
                        }
                    }
                };
                (None, f)
            }
        }
    }

    /// Reduced price r_i Ψ(level) of product `i`.
    pub fn reduced_price(&self, i: usize) -> f64 {
        let (_, f) = self.level_of(i);
        self.prices[i] * self.psi.at(f)
    }

    pub fn select(&mut self, model: &ChoiceModel, feasible: FeasibleCollection) -> Result<Selection, PolicyError> {
        let cands: Vec<usize> = model.candidates().filter(|&i| i < self.n()).collect();
        for &i in &cands {
            self.reduced[i] = self.reduced_price(i);
        }
        let offered = assortment_oracle(model, &self.reduced, feasible);
        for &i in &cands {
            self.reduced[i] = 0.0;
        }
        let offered = offered?;
        let designated = offered
            .iter()
            .map(|&i| {
                let (batch, level) = self.level_of(i);
                Designation {
                    product: i,
                    batch,
                    level,
                }
            })
            .collect();
        Ok(Selection { offered, designated })
    }

    /// Allocates one unit of `i` from its designated batch.
    pub fn on_choice(&mut self, d: &Designation, t: usize) -> Result<(), PolicyError> {
        let i = d.product;
        let fail = |msg: String| Err(PolicyError::Invariant { period: t, msg });
        match &mut self.books {
            Books::Batched { books, .. } => {
                let book = &mut books[i];
                let j = d.batch.expect("batched designation carries a batch");
                if book.unlimited && j == 0 {
                    return Ok(());
                }
                let b = &mut book.ready[j];
                if b.available == 0 {
                    return fail(format!("allocation of product {i} from empty batch {j}"));
                }
                b.available -= 1;
            }
            Books::Scalar { books, .. } => {
                let b = &mut books[i];
                if b.initial.is_infinite() {
                    return Ok(());
                }
                if b.inventory == 0 {
                    return fail(format!("allocation of product {i} with no inventory"));
                }
                b.inventory -= 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Shocks;

    fn one_product(c: u64, d: Count) -> Instance {
        Instance {
            products: vec![Product::new(0, 2.0, Count::Finite(c), d)],
            horizon: 5,
            shocks: Shocks::zeros(1, 5),
            consumers: vec![ChoiceModel::singleton([0]); 5],
            feasible: FeasibleCollection::All,
            negative_shocks: true,
            duration_override: None,
        }
    }

    #[test]
    fn charging_batch_flips_at_threshold() {
        let inst = one_product(5, Count::Infinite);
        let mut p = Policy::new(&PolicyKind::bib_exp(3), &inst).unwrap();
        p.apply_shock(0, 2, 2);
        assert_eq!(p.batches(0).len(), 1);
        assert_eq!(p.charging(0), 2);
        let out = p.apply_shock(0, 1, 3);
        assert_eq!(out.flips, 1);
        assert_eq!(p.batches(0).len(), 2);
        assert_eq!(
            p.batches(0)[1],
            Batch {
                members: 3,
                available: 3,
                ready_at: 3
            }
        );
        assert_eq!(p.charging(0), 0);
        assert_eq!(p.apply_shock(0, 0, 4), ShockOutcome::default());
    }

    #[test]
    fn fresh_and_exhausted_reduced_prices() {
        let inst = one_product(2, Count::Infinite);
        let mut p = Policy::new(&PolicyKind::bib_exp(1), &inst).unwrap();
        assert_eq!(p.reduced_price(0), 2.0);
        let sel = p.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
        assert_eq!(sel.offered, vec![0]);
        p.on_choice(&sel.designated[0], 1).unwrap();
        p.on_choice(&sel.designated[0], 2).unwrap();
        assert_eq!(p.reduced_price(0), 0.0);
        let sel = p.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
        assert!(sel.offered.is_empty());
        assert!(p
            .on_choice(
                &Designation {
                    product: 0,
                    batch: Some(0),
                    level: 0.0
                },
                3
            )
            .is_err());
    }

    #[test]
    fn return_restores_level() {
        let inst = one_product(5, Count::Finite(4));
        let mut p = Policy::new(&PolicyKind::bib_exp(2), &inst).unwrap();
        let sel = p.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
        p.on_choice(&sel.designated[0], 1).unwrap();
        assert_eq!(p.batches(0)[0].available, 4);
        p.on_return(0, Some(0));
        assert_eq!(p.batches(0)[0].available, 5);
        assert_eq!(p.reduced_price(0), 2.0);
    }

    #[test]
    fn designated_batch_prefers_highest_level_then_oldest() {
        let inst = one_product(2, Count::Infinite);
        let mut p = Policy::new(&PolicyKind::bib_exp(2), &inst).unwrap();
        p.apply_shock(0, 2, 1);
        let sel = p.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
        assert_eq!(sel.designated[0].batch, Some(0));
        p.on_choice(&sel.designated[0], 1).unwrap();
        let sel = p.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
        assert_eq!(sel.designated[0].batch, Some(1));
        assert_eq!(sel.designated[0].level, 1.0);
    }

    #[test]
    fn dcib_matches_scib_without_shocks() {
        let inst = one_product(4, Count::Infinite);
        let mut s = Policy::new(
            &PolicyKind::Scib {
                penalty: Penalty::Exponential,
            },
            &inst,
        )
        .unwrap();
        let mut d = Policy::new(
            &PolicyKind::Dcib {
                penalty: Penalty::Exponential,
            },
            &inst,
        )
        .unwrap();
        for t in 1..=3 {
            assert_eq!(s.reduced_price(0), d.reduced_price(0));
            let a = s.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
            let b = d.select(&inst.consumers[0], FeasibleCollection::All).unwrap();
            s.on_choice(&a.designated[0], t).unwrap();
            d.on_choice(&b.designated[0], t).unwrap();
        }
        s.apply_shock(0, 3, 4);
        d.apply_shock(0, 3, 4);
        assert!(s.reduced_price(0) > d.reduced_price(0));
    }

    #[test]
    fn negative_shock_clamps() {
        let inst = one_product(3, Count::Infinite);
        let mut p = Policy::new(&PolicyKind::bib_exp(2), &inst).unwrap();
        p.apply_shock(0, 3, 1);
        let out = p.apply_shock(0, -10, 2);
        assert_eq!(out.applied, -6);
        assert_eq!(out.shortfall, 4);
        assert_eq!(p.on_hand(0), Count::Finite(0));
        let mut g = Policy::new(&PolicyKind::Greed, &inst).unwrap();
        let out = g.apply_shock(0, -5, 1);
        assert_eq!((out.applied, out.shortfall), (-3, 2));
        assert_eq!(g.reduced_price(0), 0.0);
    }

    #[test]
    fn gamma_range_enforced() {
        let inst = one_product(3, Count::Infinite);
        assert!(Policy::new(&PolicyKind::bib_exp(4), &inst).is_err());
        assert!(Policy::new(&PolicyKind::bib_exp(0), &inst).is_err());
        assert!(Policy::new(&PolicyKind::bib_exp(3), &inst).is_ok());
    }

    #[test]
    fn policy_json() {
        let k: PolicyKind =
            serde_json::from_str(r#"{"kind":"bib","penalty":{"kind":"exponential"},"gamma":10}"#).unwrap();
        assert_eq!(k, PolicyKind::bib_exp(10));
        let g: PolicyKind = serde_json::from_str(r#"{"kind":"greed"}"#).unwrap();
        assert_eq!(g.name(), "GREED");
    }
}
