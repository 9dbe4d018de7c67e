//! Problem instances and their JSON form.

use crate::choice::{ChoiceError, ChoiceModel, FeasibleCollection};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Choice(#[from] ChoiceError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, InstanceError> {
    Err(InstanceError::Invalid(msg.into()))
}

/// A count that may be unbounded; serialized as an integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Count {
    Finite(u64),
    Infinite,
}

impl Count {
    pub fn finite(self) -> Option<u64> {
        match self {
            Count::Finite(v) => Some(v),
            Count::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Count::Infinite)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CountRepr {
    Num(u64),
    Text(String),
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Count::Finite(v) => s.serialize_u64(*v),
            Count::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match CountRepr::deserialize(d)? {
            CountRepr::Num(v) => Ok(Count::Finite(v)),
            CountRepr::Text(t) if t == "inf" => Ok(Count::Infinite),
            CountRepr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected integer or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub id: usize,
    pub price: f64,
    pub initial_inventory: Count,
    pub duration: Count,
}

impl Product {
    pub fn new(id: usize, price: f64, initial_inventory: Count, duration: Count) -> Self {
        Self {
            id,
            price,
            initial_inventory,
            duration,
        }
    }
}

/// Per-sale usage durations drawn at the time of sale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DurationLaw {
    /// Geometric on {1,2,...} with success probability `p`.
    Geometric { p: f64 },
}

impl DurationLaw {
    pub fn sample(&self, u: f64) -> u64 {
        match *self {
            DurationLaw::Geometric { p } => geometric_from_uniform(p, u) + 1,
        }
    }
}

/// Failures before the first success, from one uniform by inverse CDF.
pub fn geometric_from_uniform(p: f64, u: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let k = ((1.0 - u).ln() / (1.0 - p).ln()).floor();
    if k.is_finite() && k >= 0.0 {
        k as u64
    } else {
        0
    }
}

/// Exogenous shocks stored sparsely per period (0-based period index).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Shocks {
    products: usize,
    by_period: Vec<Vec<(usize, i64)>>,
}

impl Shocks {
    pub fn zeros(products: usize, horizon: usize) -> Self {
        Self {
            products,
            by_period: vec![Vec::new(); horizon],
        }
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Result<Self, InstanceError> {
        let horizon = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != horizon) {
            return invalid("shock rows must all have length T");
        }
        let mut s = Self::zeros(rows.len(), horizon);
        for (i, row) in rows.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                if v != 0 {
                    s.by_period[t].push((i, v));
                }
            }
        }
        Ok(s)
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut rows = vec![vec![0i64; self.by_period.len()]; self.products];
        for (t, list) in self.by_period.iter().enumerate() {
            for &(i, v) in list {
                rows[i][t] += v;
            }
        }
        rows
    }

    pub fn horizon(&self) -> usize {
        self.by_period.len()
    }

    pub fn products(&self) -> usize {
        self.products
    }

    /// Nonzero shocks of period `t` (1-based).
    pub fn at(&self, t: usize) -> &[(usize, i64)] {
        &self.by_period[t - 1]
    }

    pub fn get(&self, i: usize, t: usize) -> i64 {
        self.at(t).iter().filter(|(k, _)| *k == i).map(|(_, v)| v).sum()
    }

    /// Adds `v` to ξ_{i,t} (1-based `t`).
    pub fn add(&mut self, i: usize, t: usize, v: i64) {
        if v == 0 {
            return;
        }
        let list = &mut self.by_period[t - 1];
        match list.iter_mut().find(|(k, _)| *k == i) {
            Some(e) => e.1 += v,
            None => list.push((i, v)),
        }
        list.retain(|(_, v)| *v != 0);
        list.sort_unstable_by_key(|e| e.0);
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.by_period
            .iter()
            .enumerate()
            .flat_map(|(t, l)| l.iter().map(move |&(i, v)| (i, t + 1, v)))
    }

    pub fn map_nonzero(&mut self, mut f: impl FnMut(usize, usize, i64) -> i64) {
        for (t, list) in self.by_period.iter_mut().enumerate() {
            for e in list.iter_mut() {
                e.1 = f(e.0, t + 1, e.1);
            }
            list.retain(|(_, v)| *v != 0);
        }
    }
}

impl Serialize for Shocks {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_dense().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Shocks {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        Shocks::from_dense(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub products: Vec<Product>,
    pub horizon: usize,
    /// Dense n×T matrix in JSON.
    pub shocks: Shocks,
    pub consumers: Vec<ChoiceModel>,
    #[serde(default)]
    pub feasible: FeasibleCollection,
    #[serde(default)]
    pub negative_shocks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_override: Option<DurationLaw>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.products.len()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.products.iter().map(|p| p.price).collect()
    }

    /// Smallest finite initial inventory, if any product has one.
    pub fn min_inventory(&self) -> Option<u64> {
        self.products.iter().filter_map(|p| p.initial_inventory.finite()).min()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.horizon == 0 {
            return invalid("horizon must be positive");
        }
        for (k, p) in self.products.iter().enumerate() {
            if p.id != k {
                return invalid(format!("product at position {k} has id {}", p.id));
            }
            if !(p.price > 0.0 && p.price.is_finite()) {
                return invalid(format!("product {k} price must be positive"));
            }
            if p.duration == Count::Finite(0) {
                return invalid(format!("product {k} duration must be at least 1"));
            }
        }
        if self.consumers.len() != self.horizon {
            return invalid(format!(
                "expected {} consumers, found {}",
                self.horizon,
                self.consumers.len()
            ));
        }
        if self.shocks.horizon() != self.horizon || self.shocks.products() != self.n() {
            return invalid("shock matrix must be n × T");
        }
        if !self.negative_shocks && self.shocks.iter_nonzero().any(|(_, _, v)| v < 0) {
            return invalid("negative shocks require negative_shocks = true");
        }
        for (t, c) in self.consumers.iter().enumerate() {
            c.validate()?;
            if c.max_product().is_some_and(|m| m >= self.n()) {
                return invalid(format!("consumer {} references an unknown product", t + 1));
            }
        }
        if let Some(DurationLaw::Geometric { p }) = self.duration_override {
            if !(p > 0.0 && p <= 1.0) {
                return invalid("geometric duration probability must lie in (0,1]");
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let mut inst: Instance = serde_json::from_str(text).map_err(|e| InstanceError::Invalid(e.to_string()))?;
        if inst.shocks.horizon() == 0 && inst.shocks.products() == 0 {
            inst.shocks = Shocks::zeros(inst.n(), inst.horizon);
        }
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }
}
