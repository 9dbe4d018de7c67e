//! Competitive-ratio bound, LP benchmark, dual certification and offline
//! reference values.

pub mod bound;
pub mod certify;
pub mod lp;
pub mod offline;
pub mod simplex;

use crate::engine::EngineError;
use crate::penalty::PenaltyError;
use crate::stylized::{Family, StylizedMeta, StylizedParams};
use thiserror::Error;

pub use bound::{gamma_bound, GammaBound};
pub use certify::{certify_run, Certificate};
pub use lp::{build_lp, LpProblem};
pub use simplex::{solve_lp, LpSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("penalty function is not concave")]
    NonConcave,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Offline optimum of a stylized instance, from its generation record.
pub fn analytic_opt(params: &StylizedParams, meta: &StylizedMeta) -> Result<f64, AnalysisError> {
    if params.family != meta.family {
        return Err(AnalysisError::Contract(format!(
            "parameters describe {} but metadata describes {}",
            params.family.label(),
            meta.family.label()
        )));
    }
    let c = params.c as f64;
    Ok(match params.family {
        Family::Gbar => c + 2.0 * c * c - c * c * params.eps,
        Family::G | Family::Ghat => {
            let groups: f64 = meta
                .n
                .iter()
                .enumerate()
                .map(|(l, &n)| params.r.powi(l as i32) * c * n as f64)
                .sum();
            let shocks: f64 = meta
                .xi
                .iter()
                .enumerate()
                .map(|(l, &x)| params.r.powi(l as i32) * x as f64)
                .sum();
            groups + shocks
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stylized::gen_stylized;

    #[test]
    fn gbar_closed_form() {
        let p = StylizedParams::gbar(0.1, 50);
        let g = gen_stylized(&p, &p.default_target()).unwrap();
        assert!((analytic_opt(&p, &g.meta).unwrap() - 4800.0).abs() < 1e-9);
    }

    #[test]
    fn no_stage_value() {
        let p = StylizedParams::g(0, 0.5, 0.32, 7, 4);
        let g = gen_stylized(&p, &p.default_target()).unwrap();
        assert_eq!(analytic_opt(&p, &g.meta).unwrap(), 28.0);
    }

    #[test]
    fn family_mismatch() {
        let p = StylizedParams::g(0, 0.5, 0.32, 7, 4);
        let q = StylizedParams::gbar(0.1, 4);
        let g = gen_stylized(&q, &q.default_target()).unwrap();
        assert!(matches!(analytic_opt(&p, &g.meta), Err(AnalysisError::Contract(_))));
    }

    #[test]
    fn usib_ratio_limit() {
        let ratio = |eps: f64, c: f64| (c + c * c) / (c + 2.0 * c * c - c * c * eps);
        assert!((ratio(1e-6, 1e6) - 0.5).abs() < 1e-5);
    }
}
