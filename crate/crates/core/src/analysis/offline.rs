//! Exact offline optimum for tiny deterministic-choice instances.

use super::AnalysisError;
use crate::choice::ChoiceModel;
use crate::instance::Instance;
use std::collections::HashMap;

pub const MAX_PRODUCTS: usize = 4;
pub const MAX_HORIZON: usize = 24;

const UNLIMITED: u32 = u32::MAX;

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    t: usize,
    avail: Vec<u32>,
    /// (return period, product), sorted.
    pending: Vec<(usize, usize)>,
}

struct Search<'a> {
    inst: &'a Instance,
    memo: HashMap<State, f64>,
}

impl Search<'_> {
    fn best(&mut self, mut s: State) -> f64 {
        let inst = self.inst;
        if s.t > inst.horizon {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&s) {
            return v;
        }
        let key = s.clone();
        let t = s.t;
        while let Some(&(when, i)) = s.pending.first() {
            if when != t {
                break;
            }
            s.pending.remove(0);
            s.avail[i] += 1;
        }
        for &(i, v) in inst.shocks.at(t) {
            if s.avail[i] != UNLIMITED {
                s.avail[i] = (s.avail[i] as i64 + v).max(0) as u32;
            }
        }
        let ChoiceModel::Singleton { accepts } = &inst.consumers[t - 1] else {
            unreachable!("checked by offline_optimum")
        };
        let mut next = s.clone();
        next.t += 1;
        let mut value = self.best(next);
        for i in accepts.iter() {
            if s.avail[i] == 0 {
                continue;
            }
            let mut n = s.clone();
            n.t += 1;
            if n.avail[i] != UNLIMITED {
                n.avail[i] -= 1;
                if let Some(d) = inst.products[i].duration.finite() {
                    let back = t + d as usize;
                    if back <= inst.horizon {
                        let pos = n.pending.partition_point(|e| *e < (back, i));
                        n.pending.insert(pos, (back, i));
                    }
                }
            }
            value = value.max(inst.products[i].price + self.best(n));
        }
        self.memo.insert(key, value);
        value
    }
}

/// Best total revenue over all feasible allocation schedules, with every
/// consumer served only through single-product offers.
pub fn offline_optimum(inst: &Instance) -> Result<f64, AnalysisError> {
    if inst.n() > MAX_PRODUCTS || inst.horizon > MAX_HORIZON {
        return Err(AnalysisError::TooLarge(format!(
            "n = {}, T = {}",
            inst.n(),
            inst.horizon
        )));
    }
    if inst.duration_override.is_some() {
        return Err(AnalysisError::Contract("offline optimum needs fixed durations".into()));
    }
    if !inst
        .consumers
        .iter()
        .all(|c| matches!(c, ChoiceModel::Singleton { .. }))
    {
        return Err(AnalysisError::Contract(
            "offline optimum needs deterministic single-product choice".into(),
        ));
    }
    let avail = inst
        .products
        .iter()
        .map(|p| p.initial_inventory.finite().map_or(UNLIMITED, |c| c as u32))
        .collect();
    let mut search = Search {
        inst,
        memo: HashMap::new(),
    };
    Ok(search.best(State {
        t: 1,
        avail,
        pending: Vec::new(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::FeasibleCollection;
    use crate::instance::{Count, Product, Shocks};

    #[test]
    fn prefers_high_price_when_capacity_binds() {
        let inst = Instance {
            products: vec![
                Product::new(0, 1.0, Count::Finite(1), Count::Infinite),
                Product::new(1, 5.0, Count::Finite(1), Count::Infinite),
            ],
            horizon: 3,
            shocks: Shocks::zeros(2, 3),
            consumers: vec![
                ChoiceModel::singleton([1]),
                ChoiceModel::singleton([0, 1]),
                ChoiceModel::singleton([0]),
            ],
            feasible: FeasibleCollection::All,
            negative_shocks: false,
            duration_override: None,
        };
        assert_eq!(offline_optimum(&inst).unwrap(), 6.0);
    }

    #[test]
    fn reuse_and_shocks() {
        let mut shocks = Shocks::zeros(1, 4);
        shocks.add(0, 3, 1);
        let inst = Instance {
            products: vec![Product::new(0, 2.0, Count::Finite(1), Count::Finite(3))],
            horizon: 4,
            shocks,
            consumers: vec![ChoiceModel::singleton([0]); 4],
            feasible: FeasibleCollection::All,
            negative_shocks: false,
            duration_override: None,
        };
        // Sale at 1 (back at 4), shock unit sold at 3, returned unit sold at 4.
        assert_eq!(offline_optimum(&inst).unwrap(), 6.0);
    }
}
