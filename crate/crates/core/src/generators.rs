//! Random MNL instances with a time-varying mix of consumer types, plus the
//! negative-shock and stochastic-duration variants.

use crate::choice::{ChoiceModel, FeasibleCollection};
use crate::instance::{Count, DurationLaw, Instance, Product, Shocks};
use rand::distributions::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomMnlParams {
    pub products: usize,
    pub horizon: usize,
    pub inventory: u64,
    pub price_range: [f64; 2],
    pub alpha_range: [f64; 2],
    pub outside: f64,
    /// Success probability of the per-period shock law on {0,1,...}.
    pub shock_q: f64,
    /// Usage duration; `None` means T/3.
    pub duration: Option<u64>,
    pub kappa: f64,
    pub seed: u64,
}

impl Default for RandomMnlParams {
    fn default() -> Self {
        Self {
            products: 6,
            horizon: 3000,
            inventory: 30,
            price_range: [10.0, 25.0],
            alpha_range: [0.9, 1.1],
            outside: 0.1,
            shock_q: 0.98,
            duration: None,
            kappa: 0.0,
            seed: 0,
        }
    }
}

impl RandomMnlParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.products == 0 || self.horizon < 3 {
            return Err("need at least one product and a horizon of at least 3".into());
        }
        if !(self.price_range[0] > 0.0 && self.price_range[0] <= self.price_range[1]) {
            return Err("price range must be positive and ordered".into());
        }
        if !(self.alpha_range[0] >= 0.0 && self.alpha_range[0] <= self.alpha_range[1]) {
            return Err("alpha range must be nonnegative and ordered".into());
        }
        if !(0.0..1.0).contains(&self.outside) {
            return Err("outside probability must lie in [0,1)".into());
        }
        if !(self.shock_q > 0.0 && self.shock_q <= 1.0) {
            return Err("shock law parameter must lie in (0,1]".into());
        }
        if self.kappa < 0.0 || !self.kappa.is_finite() {
            return Err("kappa must be nonnegative".into());
        }
        if self.duration == Some(0) {
            return Err("duration must be positive".into());
        }
        Ok(())
    }

    pub fn period_duration(&self) -> u64 {
        self.duration.unwrap_or((self.horizon / 3).max(1) as u64)
    }

    /// Arrival weights of the consumer types (type j is index j-1) at period t.
    pub fn type_weights(&self, t: usize) -> Vec<f64> {
        let cycle = (self.horizon / 3).max(1);
        let tp = ((t - 1) % cycle + 1) as f64;
        let spacing = self.horizon as f64 / 18.0;
        (1..=self.products)
            .map(|j| {
                let center = (self.products - j) as f64 * spacing + 1.0;
                (-0.001 * self.kappa * (tp - center).abs()).exp()
            })
            .collect()
    }
}

pub fn gen_random_mnl(params: &RandomMnlParams) -> Instance {
    let n = params.products;
    let horizon = params.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut prices: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(params.price_range[0]..=params.price_range[1]))
        .collect();
    prices.sort_by(|a, b| b.total_cmp(a));
    let types: Vec<ChoiceModel> = (1..=n)
        .map(|j| {
            let alpha = (0..n)
                .map(|i| {
                    if i < j {
                        rng.gen_range(params.alpha_range[0]..=params.alpha_range[1])
                    } else {
                        0.0
                    }
                })
                .collect();
            ChoiceModel::Mnl {
                alpha,
                outside: params.outside,
            }
        })
        .collect();
    let shock_law = Geometric::new(params.shock_q).expect("validated shock law");
    let mut consumers = Vec::with_capacity(horizon);
    let mut shocks = Shocks::zeros(n, horizon);
    for t in 1..=horizon {
        let w = WeightedIndex::new(params.type_weights(t)).expect("positive weights");
        consumers.push(types[w.sample(&mut rng)].clone());
        for i in 0..n {
            let xi = shock_law.sample(&mut rng) as i64;
            shocks.add(i, t, xi);
        }
    }
    let d = params.period_duration();
    Instance {
        products: prices
            .into_iter()
            .enumerate()
            .map(|(i, r)| Product::new(i, r, Count::Finite(params.inventory), Count::Finite(d)))
            .collect(),
        horizon,
        shocks,
        consumers,
        feasible: FeasibleCollection::All,
        negative_shocks: false,
        duration_override: None,
    }
}

/// Flips the sign of each nonzero shock independently with probability `flip_prob`.
pub fn apply_negative_shocks(inst: &Instance, flip_prob: f64, seed: u64) -> Instance {
    let mut out = inst.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e65_6761_7469_7665);
    out.shocks
        .map_nonzero(|_, _, v| if rng.gen_bool(flip_prob) { -v } else { v });
    out.negative_shocks = true;
    out
}

/// Replaces fixed durations with i.i.d. geometric durations of mean `mean`.
pub fn with_geometric_durations(inst: &Instance, mean: f64) -> Instance {
    let mut out = inst.clone();
    out.duration_override = Some(DurationLaw::Geometric { p: 1.0 / mean });
    out
}

/// Shape of the small random instances used by the LP and certification checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TinyParams {
    pub max_products: usize,
    pub min_horizon: usize,
    pub max_horizon: usize,
    pub inventory: [u64; 2],
    /// Total exogenous units across all products and periods.
    pub max_shock_units: u64,
    /// MNL consumers instead of single-product ones.
    pub mnl: bool,
    pub allow_infinite_duration: bool,
}

impl Default for TinyParams {
    fn default() -> Self {
        Self {
            max_products: 3,
            min_horizon: 4,
            max_horizon: 20,
            inventory: [1, 3],
            max_shock_units: 3,
            mnl: false,
            allow_infinite_duration: true,
        }
    }
}

pub fn gen_tiny(params: &TinyParams, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6e79);
    let n = rng.gen_range(1..=params.max_products.max(1));
    let horizon = rng.gen_range(params.min_horizon.max(1)..=params.max_horizon.max(params.min_horizon).max(1));
    let products: Vec<Product> = (0..n)
        .map(|i| {
            let price = rng.gen_range(1..=10) as f64;
            let c = rng.gen_range(params.inventory[0]..=params.inventory[1]);
            let d = if params.allow_infinite_duration && rng.gen_bool(0.2) {
                Count::Infinite
            } else {
                Count::Finite(rng.gen_range(1..=horizon as u64))
            };
            Product::new(i, price, Count::Finite(c), d)
        })
        .collect();
    let mut shocks = Shocks::zeros(n, horizon);
    let units = rng.gen_range(0..=params.max_shock_units);
    for _ in 0..units {
        let i = rng.gen_range(0..n);
        let t = rng.gen_range(1..=horizon);
        shocks.add(i, t, 1);
    }
    let consumers = (0..horizon)
        .map(|_| {
            if params.mnl {
                let alpha = (0..n)
                    .map(|_| {
                        if rng.gen_bool(0.8) {
                            rng.gen_range(0.2..2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                ChoiceModel::Mnl {
                    alpha,
                    outside: rng.gen_range(0.05..0.5),
                }
            } else {
                let accepts: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
                ChoiceModel::singleton(accepts)
            }
        })
        .collect();
    Instance {
        products,
        horizon,
        shocks,
        consumers,
        feasible: FeasibleCollection::All,
        negative_shocks: false,
        duration_override: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kappa: f64, seed: u64) -> RandomMnlParams {
        RandomMnlParams {
            horizon: 300,
            kappa,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn tiny_instances_are_valid() {
        for seed in 0..200 {
            let inst = gen_tiny(&TinyParams::default(), seed);
            inst.validate().unwrap();
            assert!(inst.n() <= 3 && (4..=20).contains(&inst.horizon));
            let units: i64 = inst.shocks.iter_nonzero().map(|e| e.2).sum();
            assert!(units <= 3);
        }
        let m = gen_tiny(
            &TinyParams {
                mnl: true,
                ..TinyParams::default()
            },
            1,
        );
        assert!(matches!(m.consumers[0], ChoiceModel::Mnl { .. }));
    }

    #[test]
    fn deterministic_and_valid() {
        let a = gen_random_mnl(&small(2.0, 4));
        let b = gen_random_mnl(&small(2.0, 4));
        assert_eq!(a.to_json(), b.to_json());
        a.validate().unwrap();
        assert_ne!(a.to_json(), gen_random_mnl(&small(2.0, 5)).to_json());
    }

    #[test]
    fn prices_sorted_and_in_range() {
        let inst = gen_random_mnl(&small(1.0, 9));
        let p = inst.prices();
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert!(p.iter().all(|r| (10.0..=25.0).contains(r)));
        assert!(inst.products.iter().all(|q| q.duration == Count::Finite(100)));
    }

    #[test]
    fn consideration_sets_are_prefixes() {
        let inst = gen_random_mnl(&small(3.0, 1));
        for c in &inst.consumers {
            let ChoiceModel::Mnl { alpha, outside } = c else {
                panic!()
            };
            assert_eq!(*outside, 0.1);
            let k = alpha.iter().take_while(|a| **a > 0.0).count();
            assert!(k >= 1);
            assert!(alpha[k..].iter().all(|a| *a == 0.0));
            assert!(alpha[..k].iter().all(|a| (0.9..=1.1).contains(a)));
        }
    }

    #[test]
    fn kappa_zero_is_uniform() {
        let p = small(0.0, 0);
        for t in [1, 50, 299] {
            assert!(p.type_weights(t).iter().all(|w| *w == 1.0));
        }
        let q = small(3.0, 0);
        let w = q.type_weights(1);
        assert!(w[5] > w[0]);
    }

    #[test]
    fn shock_mean_matches_law() {
        let p = RandomMnlParams {
            products: 1,
            horizon: 1_000_000,
            ..Default::default()
        };
        let inst = gen_random_mnl(&p);
        let total: i64 = inst.shocks.iter_nonzero().map(|(_, _, v)| v).sum();
        let mean = total as f64 / 1e6;
        assert!((mean - 0.02 / 0.98).abs() < 0.001, "mean {mean}");
    }

    #[test]
    fn sign_flips() {
        let base = gen_random_mnl(&small(0.0, 2));
        let same = apply_negative_shocks(&base, 0.0, 1);
        assert_eq!(same.shocks, base.shocks);
        let all = apply_negative_shocks(&base, 1.0, 1);
        assert!(all.negative_shocks);
        let a: Vec<_> = base.shocks.iter_nonzero().collect();
        let b: Vec<_> = all.shocks.iter_nonzero().collect();
        assert!(a.iter().zip(&b).all(|(x, y)| x.2 == -y.2 && x.0 == y.0 && x.1 == y.1));
    }

    #[test]
    fn flip_fraction() {
        let mut s = Shocks::zeros(1, 100_000);
        for t in 1..=100_000 {
            s.add(0, t, 1);
        }
        let inst = Instance {
            products: vec![Product::new(0, 1.0, Count::Finite(1), Count::Finite(1))],
            horizon: 100_000,
            shocks: s,
            consumers: vec![ChoiceModel::singleton([0]); 100_000],
            feasible: FeasibleCollection::All,
            negative_shocks: false,
            duration_override: None,
        };
        let out = apply_negative_shocks(&inst, 0.2, 3);
        let neg = out.shocks.iter_nonzero().filter(|e| e.2 < 0).count();
        assert!((neg as f64 / 1e5 - 0.2).abs() < 0.005);
    }
}
