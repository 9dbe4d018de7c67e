//! Online assortment with reusable, replenished inventory: balancing
//! policies, a simulator, and the analysis tools around them.

pub mod analysis;
pub mod choice;
pub mod engine;
pub mod generators;
pub mod iap;
pub mod instance;
pub mod penalty;
pub mod policy;
pub mod rng;
pub mod stylized;

pub use choice::{ChoiceModel, FeasibleCollection};
pub use engine::{monte_carlo, run, RunStats, SimTrace};
pub use instance::{Count, Instance, Product};
pub use penalty::Penalty;
pub use policy::PolicyKind;
