//! Dense two-phase tableau simplex for `min cᵀx  s.t.  A x = b, x >= 0`.
//!
//! Phase I starts from an all-artificial basis and minimizes the sum of the
//! artificials. Phase II optimizes the real cost from the feasible basis.
//! Both phases use Bland's rule: the lowest-index improving column enters,
//! and ratio-test ties leave by lowest basic variable index.

#![allow(clippy::needless_range_loop)]

use serde::Serialize;

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status == Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Basic variable per remaining constraint row (redundant rows dropped).
    pub basis: Vec<usize>,
    /// Final reduced costs `c_j - c_Bᵀ B⁻¹ A_j` of the original variables.
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Smallest pivot magnitude accepted.
    pub pivot_tol: f64,
    /// A column enters only if its reduced cost is below `-cost_tol`.
    pub cost_tol: f64,
    /// Phase I optimum above `feasibility_tol * max(1, ||b||_inf)` means infeasible.
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            pivot_tol: 1e-11,
            cost_tol: 1e-9,
            feasibility_tol: 1e-9,
        }
    }
}

pub fn simplex_solve(lp: &LpProblem, max_iters: usize) -> LpSolution {
    simplex_solve_with(
        lp,
        &SimplexOptions {
            max_iters,
            ..Default::default()
        },
    )
}

struct Tableau {
    /// Constraint rows, each `width + 1` long; last entry is the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry is `-objective`.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn price(&mut self, c: &[f64]) {
        let w = self.width;
        let mut r: Vec<f64> = c.to_vec();
        r.push(0.0);
        for (row, &bi) in self.rows.iter().zip(&self.basis) {
            let cb = c[bi];
            if cb != 0.0 {
                for j in 0..=w {
                    r[j] -= cb * row[j];
                }
            }
        }
        self.cost = r;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let piv = self.rows[pr][pc];
        for x in self.rows[pr].iter_mut() {
            *x /= piv;
        }
        let prow = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[pc];
            if f != 0.0 {
                for j in 0..=w {
                    row[j] -= f * prow[j];
                }
                row[pc] = 0.0;
            }
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for j in 0..=w {
                self.cost[j] -= f * prow[j];
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn run(&mut self, allowed: usize, opts: &SimplexOptions, iters: &mut usize) -> PhaseEnd {
        let w = self.width;
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.cost[j] < -opts.cost_tol) else {
                return PhaseEnd::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a <= opts.pivot_tol {
                    continue;
                }
                let ratio = row[w].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let eps = 1e-12 * (1.0 + br.abs());
                        if ratio < br - eps || (ratio <= br + eps && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((pr, _)) = leave else {
                return PhaseEnd::Unbounded;
            };
            if *iters >= opts.max_iters {
                return PhaseEnd::IterationLimit;
            }
            *iters += 1;
            self.pivot(pr, enter);
        }
    }
}

pub fn simplex_solve_with(lp: &LpProblem, opts: &SimplexOptions) -> LpSolution {
    let a = &lp.constraints;
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(lp.cost.len(), n, "cost length must match columns");
    assert_eq!(lp.rhs.len(), m, "rhs length must match rows");

    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = a.row(i).iter().map(|x| sign * x).collect();
        row.extend((0..m).map(|j| if j == i { 1.0 } else { 0.0 }));
        row.push(sign * lp.rhs[i]);
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        width,
    };
    let mut iters = 0;

    let fail = |status, iters, t: &Tableau| LpSolution {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        iterations: iters,
        basis: t.basis.clone(),
        reduced_costs: Vec::new(),
    };

    // phase I
    let phase1_cost: Vec<f64> = (0..width).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    t.price(&phase1_cost);
    match t.run(width, opts, &mut iters) {
        PhaseEnd::Optimal => {}
        PhaseEnd::IterationLimit => return fail(LpStatus::IterationLimit, iters, &t),
        // the phase I objective is bounded below by zero
        PhaseEnd::Unbounded => unreachable!("phase I cannot be unbounded"),
    }
    let b_scale = lp.rhs.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let infeasibility: f64 = t
        .rows
        .iter()
        .zip(&t.basis)
        .filter(|(_, &bi)| bi >= n)
        .map(|(row, _)| row[width])
        .sum();
    if infeasibility > opts.feasibility_tol * b_scale {
        return fail(LpStatus::Infeasible, iters, &t);
    }

    // drive remaining artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            let col = (0..n)
                .filter(|&j| t.rows[i][j].abs() > opts.pivot_tol)
                .max_by(|&x, &y| t.rows[i][x].abs().total_cmp(&t.rows[i][y].abs()));
            match col {
                Some(j) => {
                    t.pivot(i, j);
                    iters += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // phase II over the original columns only
    let mut phase2_cost = lp.cost.clone();
    phase2_cost.resize(width, 0.0);
    t.price(&phase2_cost);
    let status = match t.run(n, opts, &mut iters) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return fail(status, iters, &t);
    }
    let mut x = vec![0.0; n];
    for (row, &bi) in t.rows.iter().zip(&t.basis) {
        x[bi] = row[width];
    }
    let objective = lp.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpSolution {
        status,
        x,
        objective,
        iterations: iters,
        basis: t.basis.clone(),
        reduced_costs: t.cost[..n].to_vec(),
    }
}
