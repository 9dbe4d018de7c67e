//! Penalty functions mapping a normalized inventory level to a price discount.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use thiserror::Error;

/// Grid size used by [`Penalty::check_concave`] callers throughout the crate.
pub const CONCAVITY_GRID: usize = 1001;
/// Largest second difference tolerated on the concavity grid.
pub const CONCAVITY_TOL: f64 = 1e-12;
/// Boundary tolerance for tabulated knots.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Absolute tolerance of the bisection inverse.
pub const INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("penalty argument {0} outside [0,1]")]
    Domain(f64),
    #[error("penalty function is not invertible")]
    NotInvertible,
    #[error("invalid tabulated knots: {0}")]
    InvalidKnots(String),
}

/// Piecewise-linear concave penalty given by knots on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Tabulated {
    knots: Vec<[f64; 2]>,
}

impl Tabulated {
    pub fn new(knots: Vec<[f64; 2]>) -> Result<Self, PenaltyError> {
        let bad = |m: &str| Err(PenaltyError::InvalidKnots(m.to_string()));
        if knots.len() < 2 {
            return bad("need at least two knots");
        }
        if knots.iter().any(|k| !k[0].is_finite() || !k[1].is_finite()) {
            return bad("non-finite knot");
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if first[0].abs() > BOUNDARY_TOL || first[1].abs() > BOUNDARY_TOL {
            return bad("first knot must be (0,0)");
        }
        if (last[0] - 1.0).abs() > BOUNDARY_TOL || (last[1] - 1.0).abs() > BOUNDARY_TOL {
            return bad("last knot must be (1,1)");
        }
        let mut prev_slope = f64::INFINITY;
        for w in knots.windows(2) {
            let dx = w[1][0] - w[0][0];
            if dx <= 0.0 {
                return bad("x coordinates must be strictly increasing");
            }
            let slope = (w[1][1] - w[0][1]) / dx;
            if slope < 0.0 {
                return bad("knots must be non-decreasing");
            }
            if slope > prev_slope + CONCAVITY_TOL {
                return bad("knots must be concave");
            }
            prev_slope = slope;
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[[f64; 2]] {
        &self.knots
    }

    fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let idx = k.partition_point(|p| p[0] < x);
        if idx == 0 {
            return k[0][1];
        }
        if idx >= k.len() {
            return k[k.len() - 1][1];
        }
        let (a, b) = (k[idx - 1], k[idx]);
        a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
    }

    fn strictly_increasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[1][1] > w[0][1])
    }
}

impl TryFrom<Vec<[f64; 2]>> for Tabulated {
    type Error = PenaltyError;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Tabulated::new(v)
    }
}

impl From<Tabulated> for Vec<[f64; 2]> {
    fn from(t: Tabulated) -> Self {
        t.knots
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Penalty {
    Exponential,
    Identity,
    Step,
    Tabulated { knots: Tabulated },
}

impl Penalty {
    pub fn tabulated(knots: Vec<[f64; 2]>) -> Result<Self, PenaltyError> {
        Ok(Penalty::Tabulated {
            knots: Tabulated::new(knots)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Penalty::Exponential => "exponential",
            Penalty::Identity => "identity",
            Penalty::Step => "step",
            Penalty::Tabulated { .. } => "tabulated",
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, PenaltyError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(PenaltyError::Domain(x));
        }
        Ok(self.at(x))
    }

    /// Unchecked evaluation; callers guarantee `x` lies in [0,1].
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x), "penalty argument {x}");
        match self {
            Penalty::Exponential => ((1.0 - x).exp() - E) / (1.0 - E),
            Penalty::Identity => x,
            Penalty::Step => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Penalty::Tabulated { knots } => knots.eval(x),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64, PenaltyError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(PenaltyError::Domain(y));
        }
        match self {
            Penalty::Exponential => Ok((1.0 - (E + y * (1.0 - E)).ln()).clamp(0.0, 1.0)),
            Penalty::Identity => Ok(y),
            Penalty::Step => Err(PenaltyError::NotInvertible),
            Penalty::Tabulated { knots } => {
                if !knots.strictly_increasing() {
                    return Err(PenaltyError::NotInvertible);
                }
                Ok(self.bisect(y))
            }
        }
    }

    fn bisect(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.at(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Boundary, monotonicity and concavity on a uniform grid.
    ///
    /// The step kind is reported as non-concave: it jumps at 0, so it is
    /// neither continuous nor differentiable there.
    pub fn check_concave(&self, grid_points: usize) -> bool {
        if matches!(self, Penalty::Step) || grid_points < 3 {
            return false;
        }
        let h = 1.0 / (grid_points - 1) as f64;
        let v: Vec<f64> = (0..grid_points).map(|k| self.at((k as f64 * h).min(1.0))).collect();
        if v[0].abs() > BOUNDARY_TOL || (v[grid_points - 1] - 1.0).abs() > BOUNDARY_TOL {
            return false;
        }
        if v.windows(2).any(|w| w[1] < w[0] - CONCAVITY_TOL) {
            return false;
        }
        v.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= CONCAVITY_TOL)
    }
}
