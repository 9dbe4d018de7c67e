//! Consumer choice models, feasible assortment collections and the offline
//! assortment oracle.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Largest product count for which subsets are enumerated.
pub const ENUMERATION_LIMIT: usize = 20;
/// Relative tolerance under which two assortment values count as tied.
pub const VALUE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChoiceError {
    #[error("assortment enumeration over {0} products exceeds the limit of {ENUMERATION_LIMIT}")]
    InstanceTooLarge(usize),
    #[error("invalid choice model: {0}")]
    Invalid(String),
}

/// Sorted set of product ids stored as disjoint half-open ranges.
///
/// Nested accept sets in the stylized instances are single ranges, so this
/// keeps a few hundred thousand consumers cheap.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProductSet {
    ranges: Vec<(usize, usize)>,
}

impl ProductSet {
    pub fn range(lo: usize, hi: usize) -> Self {
        if lo >= hi {
            return Self::default();
        }
        Self { ranges: vec![(lo, hi)] }
    }

    pub fn len(&self) -> usize {
        self.ranges.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        let idx = self.ranges.partition_point(|&(_, hi)| hi <= i);
        idx < self.ranges.len() && self.ranges[idx].0 <= i
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranges.iter().flat_map(|&(a, b)| a..b)
    }

    pub fn max_id(&self) -> Option<usize> {
        self.ranges.last().map(|&(_, hi)| hi - 1)
    }
}

impl FromIterator<usize> for ProductSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut ids: Vec<usize> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        for i in ids {
            match ranges.last_mut() {
                Some(last) if last.1 == i => last.1 += 1,
                _ => ranges.push((i, i + 1)),
            }
        }
        Self { ranges }
    }
}

impl From<Vec<usize>> for ProductSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl From<ProductSet> for Vec<usize> {
    fn from(s: ProductSet) -> Self {
        s.iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChoiceModel {
    /// Multinomial logit whose outside weight is recomputed per offered set
    /// so the no-purchase probability is exactly `outside`.
    Mnl { alpha: Vec<f64>, outside: f64 },
    /// Purchases only when offered exactly one accepted product.
    Singleton { accepts: ProductSet },
}

impl ChoiceModel {
    pub fn mnl(alpha: Vec<f64>, outside: f64) -> Result<Self, ChoiceError> {
        let m = ChoiceModel::Mnl { alpha, outside };
        m.validate()?;
        Ok(m)
    }

    pub fn singleton<I: IntoIterator<Item = usize>>(accepts: I) -> Self {
        ChoiceModel::Singleton {
            accepts: accepts.into_iter().collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ChoiceError> {
        if let ChoiceModel::Mnl { alpha, outside } = self {
            if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(ChoiceError::Invalid("weights must be finite and nonnegative".into()));
            }
            if !(0.0..1.0).contains(outside) {
                return Err(ChoiceError::Invalid("outside probability must lie in [0,1)".into()));
            }
        }
        Ok(())
    }

    /// Largest product id this model can ever choose.
    pub fn max_product(&self) -> Option<usize> {
        match self {
            ChoiceModel::Mnl { alpha, .. } => alpha.iter().rposition(|a| *a > 0.0),
            ChoiceModel::Singleton { accepts } => accepts.max_id(),
        }
    }

    /// Products with a chance of being chosen from some assortment.
    pub fn candidates(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            ChoiceModel::Mnl { alpha, .. } => {
                Box::new(alpha.iter().enumerate().filter(|(_, a)| **a > 0.0).map(|(i, _)| i))
            }
            ChoiceModel::Singleton { accepts } => Box::new(accepts.iter()),
        }
    }

    fn alpha(alpha: &[f64], i: usize) -> f64 {
        alpha.get(i).copied().unwrap_or(0.0)
    }

    /// φ(S, i) for an offered set sorted by id.
    pub fn choice_probability(&self, offered: &[usize], i: usize) -> f64 {
        if !offered.contains(&i) {
            return 0.0;
        }
        match self {
            ChoiceModel::Mnl { alpha, outside } => {
                let total: f64 = offered.iter().map(|&k| Self::alpha(alpha, k)).sum();
                if total <= 0.0 {
                    return 0.0;
                }
                (1.0 - outside) * Self::alpha(alpha, i) / total
            }
            ChoiceModel::Singleton { accepts } => {
                if offered.len() == 1 && accepts.contains(i) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse-CDF choice from one uniform, scanning products by id.
    pub fn choose_with_uniform(&self, offered: &[usize], u: f64) -> Option<usize> {
        let mut cum = 0.0;
        for &i in offered {
            let p = self.choice_probability(offered, i);
            if p <= 0.0 {
                continue;
            }
            cum += p;
            if u < cum {
                return Some(i);
            }
        }
        None
    }

    pub fn sample_choice<R: rand::Rng + ?Sized>(&self, offered: &[usize], rng: &mut R) -> Option<usize> {
        let u: f64 = rng.gen();
        self.choose_with_uniform(offered, u)
    }

    /// Σ_i prices_i φ(S, i).
    pub fn value(&self, offered: &[usize], prices: &[f64]) -> f64 {
        offered
            .iter()
            .map(|&i| prices.get(i).copied().unwrap_or(0.0) * self.choice_probability(offered, i))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeasibleCollection {
    #[default]
    All,
    Cap {
        k: usize,
    },
}

impl FeasibleCollection {
    pub fn allows(&self, size: usize) -> bool {
        match self {
            FeasibleCollection::All => true,
            FeasibleCollection::Cap { k } => size <= *k,
        }
    }
}

fn strictly_better(v: f64, best: f64) -> bool {
    v > best + VALUE_TIE_TOL * best.abs().max(1.0)
}

fn ties(v: f64, best: f64) -> bool {
    !strictly_better(v, best) && !strictly_better(best, v)
}

/// Is `a` preferred over `b` under value, then cardinality, then lexicographic order.
fn preferred(va: f64, a: &[usize], vb: f64, b: &[usize]) -> bool {
    if strictly_better(va, vb) {
        return true;
    }
    if !ties(va, vb) {
        return false;
    }
    match a.len().cmp(&b.len()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a < b,
    }
}

/// Offline assortment oracle: a reward-maximizing feasible assortment of
/// smallest cardinality, then lexicographically smallest.
pub fn assortment_oracle(
    model: &ChoiceModel,
    reduced_prices: &[f64],
    feasible: FeasibleCollection,
) -> Result<Vec<usize>, ChoiceError> {
    let price = |i: usize| reduced_prices.get(i).copied().unwrap_or(0.0);
    match model {
        ChoiceModel::Singleton { accepts } => {
            let mut best: Option<(usize, f64)> = None;
            if feasible.allows(1) {
                for i in accepts.iter() {
                    let v = price(i);
                    if v <= 0.0 {
                        continue;
                    }
                    match best {
                        Some((_, bv)) if !strictly_better(v, bv) => {}
                        _ => best = Some((i, v)),
                    }
                }
            }
            Ok(best.map(|(i, _)| vec![i]).unwrap_or_default())
        }
        ChoiceModel::Mnl { .. } => {
            let cands: Vec<usize> = model.candidates().filter(|&i| price(i) > 0.0).collect();
            if feasible == FeasibleCollection::All {
                Ok(revenue_ordered(model, &cands, reduced_prices))
            } else {
                if cands.len() > ENUMERATION_LIMIT {
                    return Err(ChoiceError::InstanceTooLarge(cands.len()));
                }
                Ok(enumerate_best(model, &cands, reduced_prices, feasible))
            }
        }
    }
}

fn revenue_ordered(model: &ChoiceModel, cands: &[usize], prices: &[f64]) -> Vec<usize> {
    let mut order = cands.to_vec();
    order.sort_by(|&a, &b| prices[b].total_cmp(&prices[a]).then(a.cmp(&b)));
    let mut best: Vec<usize> = Vec::new();
    let mut best_v = 0.0;
    let mut prefix: Vec<usize> = Vec::with_capacity(order.len());
    for &i in &order {
        let pos = prefix.partition_point(|&k| k < i);
        prefix.insert(pos, i);
        let v = model.value(&prefix, prices);
        if preferred(v, &prefix, best_v, &best) {
            best = prefix.clone();
            best_v = v;
        }
    }
    best
}

/// Exhaustive search over subsets of `cands` allowed by `feasible`.
pub fn enumerate_best(
    model: &ChoiceModel,
    cands: &[usize],
    prices: &[f64],
    feasible: FeasibleCollection,
) -> Vec<usize> {
    let m = cands.len();
    let mut best: Vec<usize> = Vec::new();
    let mut best_v = 0.0;
    let mut set = Vec::with_capacity(m);
    for mask in 1u64..(1u64 << m) {
        if !feasible.allows(mask.count_ones() as usize) {
            continue;
        }
        set.clear();
        set.extend((0..m).filter(|b| mask >> b & 1 == 1).map(|b| cands[b]));
        let v = model.value(&set, prices);
        if preferred(v, &set, best_v, &best) {
            best = set.clone();
            best_v = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_probabilities() {
        let m = ChoiceModel::singleton([1]);
        assert_eq!(m.choice_probability(&[1], 1), 1.0);
        assert_eq!(m.choice_probability(&[1, 2], 1), 0.0);
        assert_eq!(m.choice_probability(&[], 1), 0.0);
        assert_eq!(m.choose_with_uniform(&[1], 0.999), Some(1));
        assert_eq!(m.choose_with_uniform(&[], 0.0), None);
    }

    #[test]
    fn mnl_outside_mass() {
        let m = ChoiceModel::mnl(vec![1.0, 1.0], 0.1).unwrap();
        assert!((m.choice_probability(&[0, 1], 0) - 0.45).abs() < 1e-15);
        let total: f64 = [0, 1].iter().map(|&i| m.choice_probability(&[0, 1], i)).sum();
        assert!(total < 1.0);
        let plain = ChoiceModel::mnl(vec![1.0, 3.0], 0.0).unwrap();
        assert!((plain.choice_probability(&[0, 1], 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sampling_frequency() {
        let m = ChoiceModel::mnl(vec![1.0, 1.0], 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| m.sample_choice(&[0, 1], &mut rng) == Some(0)).count();
        assert!((hits as f64 / n as f64 - 0.45).abs() < 0.002);
    }

    #[test]
    fn oracle_examples() {
        let m = ChoiceModel::singleton([1, 2]);
        let s = assortment_oracle(&m, &[5.0, 7.0, 1.0], FeasibleCollection::All).unwrap();
        assert_eq!(s, vec![1]);
        let z = assortment_oracle(&m, &[0.0; 3], FeasibleCollection::All).unwrap();
        assert!(z.is_empty());
        let mnl = ChoiceModel::mnl(vec![1.0; 3], 0.0).unwrap();
        let p = [3.0, 2.0, 1.0];
        let fast = assortment_oracle(&mnl, &p, FeasibleCollection::All).unwrap();
        let brute = enumerate_best(&mnl, &[0, 1, 2], &p, FeasibleCollection::All);
        assert_eq!(fast, brute);
        assert_eq!(fast, vec![0]);
        let zero = assortment_oracle(&mnl, &[0.0; 3], FeasibleCollection::All).unwrap();
        assert!(zero.is_empty());
    }

    #[test]
    fn singleton_ties_prefer_smallest_id() {
        let m = ChoiceModel::singleton([0, 1, 2]);
        let s = assortment_oracle(&m, &[2.0, 3.0, 3.0], FeasibleCollection::All).unwrap();
        assert_eq!(s, vec![1]);
        let none = assortment_oracle(&m, &[2.0, 3.0, 3.0], FeasibleCollection::Cap { k: 0 }).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn oracle_matches_enumeration_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=8);
            let alpha: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.1..2.0)
                    }
                })
                .collect();
            let outside = if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..0.9)
            };
            let m = ChoiceModel::mnl(alpha, outside).unwrap();
            let prices: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.0..10.0)
                    }
                })
                .collect();
            let all: Vec<usize> = (0..n).collect();
            for feas in [FeasibleCollection::All, FeasibleCollection::Cap { k: 2 }] {
                let got = assortment_oracle(&m, &prices, feas).unwrap();
                let brute = enumerate_best(&m, &all, &prices, feas);
                assert_eq!(m.value(&got, &prices), m.value(&brute, &prices));
                assert_eq!(got, brute);
            }
        }
    }

    #[test]
    fn weak_substitutability_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8usize {
            let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let models = [
                ChoiceModel::mnl(alpha, 0.1).unwrap(),
                ChoiceModel::singleton((0..n).filter(|i| i % 2 == 0)),
            ];
            for m in &models {
                for mask in 0u32..(1 << n) {
                    let s: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
                    let mass: f64 = s.iter().map(|&i| m.choice_probability(&s, i)).sum();
                    assert!(mass <= 1.0 + 1e-12);
                    for j in (0..n).filter(|b| mask >> b & 1 == 0) {
                        let mut big = s.clone();
                        big.push(j);
                        big.sort_unstable();
                        for &i in &s {
                            assert!(m.choice_probability(&s, i) + 1e-15 >= m.choice_probability(&big, i));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dropping_zero_price_product_never_hurts() {
        let m = ChoiceModel::mnl(vec![1.0, 2.0, 1.5], 0.1).unwrap();
        let prices = [4.0, 0.0, 3.0];
        let with = m.value(&[0, 1, 2], &prices);
        let without = m.value(&[0, 2], &prices);
        assert!(without >= with);
        let s = assortment_oracle(&m, &prices, FeasibleCollection::All).unwrap();
        assert!(!s.contains(&1));
    }

    #[test]
    fn product_set_ranges() {
        let s: ProductSet = [5, 1, 2, 3, 9].into_iter().collect();
        assert_eq!(s.len(), 5);
        assert!(s.contains(2) && s.contains(9) && !s.contains(4));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 2, 3, 5, 9]);
        let json = serde_json::to_string(&ChoiceModel::Singleton { accepts: s }).unwrap();
        assert_eq!(json, r#"{"kind":"singleton","accepts":[1,2,3,5,9]}"#);
    }
}
