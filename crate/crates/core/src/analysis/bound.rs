//! Evaluates the two-part competitive-ratio bound Γ(Ψ, γ) = min(Γ1, Γ2).

use super::AnalysisError;
use crate::penalty::{Penalty, CONCAVITY_GRID};
use serde::{Deserialize, Serialize};

/// Simpson panels over [0,1] for the tail integral table.
pub const SIMPSON_PANELS: usize = 20_000;
/// Uniform grid points for the first minimization pass.
pub const GRID_POINTS: usize = 10_000;
/// Width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-8;
/// Panels used for the short piece between `a` and the next table node.
const LOCAL_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub grid: usize,
    pub panels: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            grid: GRID_POINTS,
            panels: SIMPSON_PANELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaBound {
    pub psi: Penalty,
    pub gamma: u64,
    pub c0: u64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_min: f64,
    pub x1: f64,
    pub x2: f64,
}

/// ∫_a^1 Ψ from a cumulative Simpson table plus a short local piece.
struct TailIntegral<'a> {
    psi: &'a Penalty,
    h: f64,
    tail: Vec<f64>,
}

impl<'a> TailIntegral<'a> {
    fn new(psi: &'a Penalty, panels: usize) -> Self {
        let m = panels + panels % 2;
        let h = 1.0 / m as f64;
        let node = |k: usize| psi.at((k as f64 * h).min(1.0));
        let mut tail = vec![0.0; m / 2 + 1];
        for p in (0..m / 2).rev() {
            let k = 2 * p;
            let piece = h / 3.0 * (node(k) + 4.0 * node(k + 1) + node(k + 2));
            tail[p] = tail[p + 1] + piece;
        }
        Self { psi, h, tail }
    }

    fn eval(&self, a: f64) -> f64 {
        if a >= 1.0 {
            return 0.0;
        }
        let a = a.max(0.0);
        let pair = 2.0 * self.h;
        let p = ((a / pair).ceil() as usize).min(self.tail.len() - 1);
        let node = (p as f64 * pair).min(1.0);
        self.tail[p] + simpson(self.psi, a, node, LOCAL_PANELS)
    }
}

fn simpson(psi: &Penalty, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut s = psi.at(a) + psi.at(b.min(1.0));
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * psi.at((a + k as f64 * h).min(1.0));
    }
    s * h / 3.0
}

fn minimize(f: impl Fn(f64) -> f64, upper: f64, grid: usize) -> (f64, f64) {
    if upper <= 0.0 {
        return (0.0, f(0.0));
    }
    let step = upper / (grid - 1) as f64;
    let mut best = (0usize, f(0.0));
    for k in 1..grid {
        let v = f((k as f64 * step).min(upper));
        if v < best.1 {
            best = (k, v);
        }
    }
    let mut lo = best.0.saturating_sub(1) as f64 * step;
    let mut hi = ((best.0 + 1) as f64 * step).min(upper);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    let grid_x = best.0 as f64 * step;
    if v < best.1 {
        (x, v)
    } else {
        (grid_x.min(upper), best.1)
    }
}

pub fn gamma_bound(psi: &Penalty, gamma: u64, c0: u64) -> Result<GammaBound, AnalysisError> {
    gamma_bound_at(psi, gamma, c0, Resolution::default())
}

pub fn gamma_bound_at(psi: &Penalty, gamma: u64, c0: u64, res: Resolution) -> Result<GammaBound, AnalysisError> {
    if !psi.check_concave(CONCAVITY_GRID) {
        return Err(AnalysisError::NonConcave);
    }
    if gamma == 0 || c0 == 0 {
        return Err(AnalysisError::Domain("gamma and c0 must be positive".into()));
    }
    if gamma > c0 {
        return Err(AnalysisError::Domain(format!("gamma {gamma} exceeds c0 {c0}")));
    }
    let tail = TailIntegral::new(psi, res.panels);
    let (g, c) = (gamma as f64, c0 as f64);
    let f1 = |x: f64| (1.0 - x) / (1.0 / c + (1.0 + g / c) * (1.0 - psi.at(x)) + tail.eval(x + 1.0 / c));
    let f2 = |x: f64| (1.0 - x) / (1.0 / g + 1.0 - psi.at(x) + tail.eval(x + 1.0 / g));
    let (x1, gamma1) = minimize(f1, 1.0 - 1.0 / c, res.grid);
    let (x2, gamma2) = minimize(f2, 1.0 - 1.0 / g, res.grid);
    Ok(GammaBound {
        psi: psi.clone(),
        gamma,
        c0,
        gamma1,
        gamma2,
        gamma_min: gamma1.min(gamma2),
        x1,
        x2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_point() {
        let b = gamma_bound(&Penalty::Exponential, 1, 1).unwrap();
        assert!((b.gamma1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((b.gamma2 - 0.5).abs() < 1e-12);
        assert!((b.gamma_min - 1.0 / 3.0).abs() < 1e-12);
        let id = gamma_bound(&Penalty::Identity, 1, 1).unwrap();
        assert!(id.gamma_min.is_finite());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(gamma_bound(&Penalty::Step, 1, 1), Err(AnalysisError::NonConcave));
        assert!(matches!(
            gamma_bound(&Penalty::Exponential, 5, 4),
            Err(AnalysisError::Domain(_))
        ));
        assert!(matches!(
            gamma_bound(&Penalty::Exponential, 0, 4),
            Err(AnalysisError::Domain(_))
        ));
    }

    #[test]
    fn tail_integral_accuracy() {
        let t = TailIntegral::new(&Penalty::Identity, 1000);
        for a in [0.0, 0.1234, 0.5, 0.99999, 1.0, 1.5] {
            let exact = if a >= 1.0 { 0.0 } else { 0.5 * (1.0 - a * a) };
            assert!((t.eval(a) - exact).abs() < 1e-12, "{a}");
        }
        let e = TailIntegral::new(&Penalty::Exponential, 2000);
        let exact = |a: f64| {
            let ee = std::f64::consts::E;
            ((1.0 - a).exp() - 1.0 - ee * (1.0 - a)) / (1.0 - ee)
        };
        for a in [0.0, 0.3, 0.77] {
            assert!((e.eval(a) - exact(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn moderate_capacity_bound_is_sane() {
        let b = gamma_bound(&Penalty::Exponential, 10, 100).unwrap();
        assert!(b.gamma_min > 0.4 && b.gamma_min < 1.0 - (-1f64).exp());
        assert_eq!(b.gamma_min, b.gamma1.min(b.gamma2));
    }
}
