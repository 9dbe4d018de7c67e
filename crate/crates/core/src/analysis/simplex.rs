//! Dense primal simplex for max c·x subject to Ax ≤ b, x ≥ 0, b ≥ 0.

use super::lp::LpProblem;
use super::AnalysisError;
use serde::{Deserialize, Serialize};

pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const ITERATION_CAP: usize = 1_000_000;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    /// Objective row holds negated reduced costs; its last entry is the value.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.at(pr, pc);
        for v in &mut self.a[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f != 0.0 {
                for (v, pv) in self.a[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[pr] = pc;
    }
}

pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution, AnalysisError> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    if lp.rows.iter().any(|r| r.rhs < 0.0 || !r.rhs.is_finite()) {
        return Err(AnalysisError::Contract(
            "right-hand sides must be finite and nonnegative".into(),
        ));
    }
    let cols = n + m;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * w],
        obj: vec![0.0; w],
        basis: (n..n + m).collect(),
    };
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            t.a[r * w + j] += v;
        }
        t.a[r * w + n + r] = 1.0;
        t.a[r * w + cols] = row.rhs;
    }
    for (j, &c) in lp.objective.iter().enumerate() {
        t.obj[j] = -c;
    }
    let mut iterations = 0;
    while let Some(pc) = (0..cols).find(|&j| t.obj[j] < -OPTIMALITY_TOL) {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let v = t.at(r, pc);
            if v > PIVOT_TOL {
                let ratio = t.rhs(r) / v;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lv)) => {
                        if ratio < lv || (ratio == lv && t.basis[r] < t.basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lv))
                        }
                    }
                };
            }
        }
        let Some((pr, _)) = leave else {
            return Err(AnalysisError::Unbounded);
        };
        t.pivot(pr, pc);
        iterations += 1;
        if iterations > ITERATION_CAP {
            return Err(AnalysisError::Numerical("simplex iteration cap exceeded".into()));
        }
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r);
        }
    }
    verify(lp, &x)?;
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x, iterations })
}

fn verify(lp: &LpProblem, x: &[f64]) -> Result<(), AnalysisError> {
    if let Some(v) = x.iter().find(|v| **v < -FEASIBILITY_TOL) {
        return Err(AnalysisError::Numerical(format!("negative primal value {v}")));
    }
    for (r, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        if lhs > row.rhs + FEASIBILITY_TOL {
            return Err(AnalysisError::Numerical(format!(
                "row {r} violated: {lhs} > {}",
                row.rhs
            )));
        }
    }
    Ok(())
}

/// Brute-force optimum over all basic solutions; for tiny dense problems only.
pub fn vertex_enumeration(lp: &LpProblem) -> Option<f64> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    // Constraint k < m is a row, k ≥ m is x_{k−m} ≥ 0 written as −x ≤ 0.
    let dense = |k: usize| -> (Vec<f64>, f64) {
        let mut v = vec![0.0; n];
        if k < m {
            for &(j, c) in &lp.rows[k].coeffs {
                v[j] += c;
            }
            (v, lp.rows[k].rhs)
        } else {
            v[k - m] = -1.0;
            (v, 0.0)
        }
    };
    let total = n + m;
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let (mat, rhs): (Vec<Vec<f64>>, Vec<f64>) = pick.iter().map(|&k| dense(k)).unzip();
        if let Some(x) = solve_dense(mat, rhs) {
            let feasible = x.iter().all(|v| *v >= -1e-9)
                && lp
                    .rows
                    .iter()
                    .all(|r| r.coeffs.iter().map(|&(j, c)| c * x[j]).sum::<f64>() <= r.rhs + 1e-9);
            if feasible {
                let v: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // Next n-combination of 0..total.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::lp::Row;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(obj: Vec<f64>, rows: Vec<(Vec<(usize, f64)>, f64)>) -> LpProblem {
        LpProblem::from_parts(obj, rows.into_iter().map(|(coeffs, rhs)| Row { coeffs, rhs }).collect())
    }

    #[test]
    fn single_variable() {
        let p = lp(vec![1.0], vec![(vec![(0, 1.0)], 1.0)]);
        let s = solve_lp(&p).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_redundant_rows_terminate() {
        let p = lp(
            vec![1.0, 1.0],
            vec![
                (vec![(0, 1.0), (1, 1.0)], 1.0),
                (vec![(0, 1.0), (1, 1.0)], 1.0),
                (vec![(0, 2.0), (1, 2.0)], 2.0),
                (vec![(0, 1.0)], 0.0),
                (vec![(1, 1.0)], 1.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let p = lp(vec![1.0, 1.0], vec![(vec![(0, 1.0)], 1.0)]);
        assert_eq!(solve_lp(&p), Err(AnalysisError::Unbounded));
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let p = lp(
            vec![3.0, 5.0],
            vec![
                (vec![(0, 1.0)], 4.0),
                (vec![(1, 2.0)], 12.0),
                (vec![(0, 3.0), (1, 2.0)], 18.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert!((s.value - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((vertex_enumeration(&p).unwrap() - 36.0).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=5);
            let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            let mut rows: Vec<(Vec<(usize, f64)>, f64)> = (0..m)
                .map(|_| {
                    let c = (0..n).map(|j| (j, rng.gen_range(0.0..3.0))).collect();
                    (c, rng.gen_range(0.0..10.0))
                })
                .collect();
            rows.push(((0..n).map(|j| (j, 1.0)).collect(), 5.0));
            let p = lp(obj, rows);
            let s = solve_lp(&p).unwrap();
            let v = vertex_enumeration(&p).unwrap();
            assert!((s.value - v).abs() < 1e-6, "{} vs {v}", s.value);
        }
    }
}
