//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Sized for the small LPs of this crate (a few hundred columns at most):
//! the whole tableau is kept in one row-major buffer.

use crate::error::{Error, Result};

/// Pivoting and feasibility tolerance.
pub const TOLERANCE: f64 = 1e-9;

/// Iteration cap shared by both phases.
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `minimize c.x  subject to  rows, x >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint { coeffs, kind, rhs });
    }

    /// Largest constraint violation of `x` (including negativity).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    structural: usize,
    first_artificial: usize,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();
        let mut slack_count = 0;
        let mut art_count = 0;
        for row in &lp.constraints {
            let kind = normalised_kind(row);
            if kind != RowKind::Eq {
                slack_count += 1;
            }
            if kind != RowKind::Le {
                art_count += 1;
            }
        }
        let first_artificial = n + slack_count;
        let cols = first_artificial + art_count;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, row) in lp.constraints.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            let kind = normalised_kind(row);
            let line = &mut data[i * width..(i + 1) * width];
            for (dst, &a) in line.iter_mut().zip(&row.coeffs) {
                *dst = sign * a;
            }
            line[cols] = sign * row.rhs;
            match kind {
                RowKind::Le => {
                    line[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                RowKind::Ge => {
                    line[next_slack] = -1.0;
                    next_slack += 1;
                    line[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                RowKind::Eq => {
                    line[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Self {
            rows: m,
            cols,
            data,
            obj: vec![0.0; width],
            basis,
            structural: n,
            first_artificial,
            iterations: 0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Loads the reduced-cost row for `costs` (length `cols`).
    fn price(&mut self, costs: &[f64]) {
        let width = self.cols + 1;
        self.obj[..self.cols].copy_from_slice(costs);
        self.obj[self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let line = &self.data[r * width..(r + 1) * width];
                for (o, &a) in self.obj.iter_mut().zip(line) {
                    *o -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.at(r, c);
        for v in &mut self.data[r * width..(r + 1) * width] {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * width);
        let (pivot_row, after) = rest.split_at_mut(width);
        for line in before
            .chunks_exact_mut(width)
            .chain(after.chunks_exact_mut(width))
        {
            let f = line[c];
            if f != 0.0 {
                for (v, &pv) in line.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pv;
                }
                line[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, &pv) in self.obj.iter_mut().zip(pivot_row.iter()) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations over columns `< allowed`. Returns false when
    /// the objective is unbounded below.
    fn iterate(&mut self, allowed: usize) -> Result<bool> {
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::NumericalFailure(format!(
                    "no convergence after {MAX_ITERATIONS} pivots"
                )));
            }
            // Bland: lowest-index improving column
            let Some(enter) = (0..allowed).find(|&j| self.obj[j] < -TOLERANCE) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > TOLERANCE {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - TOLERANCE
                                || (ratio <= lratio + TOLERANCE && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, enter);
            self.iterations += 1;
        }
    }

    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.at(r, j).abs() > TOLERANCE);
                match col {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => self.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let width = self.cols + 1;
        self.data.drain(r * width..(r + 1) * width);
        self.basis.remove(r);
        self.rows -= 1;
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        if self.first_artificial < self.cols {
            let mut costs = vec![0.0; self.cols];
            for c in &mut costs[self.first_artificial..] {
                *c = 1.0;
            }
            self.price(&costs);
            self.iterate(self.cols)?;
            let scale = 1.0
                + lp
                    .constraints
                    .iter()
                    .map(|c| c.rhs.abs())
                    .fold(0.0, f64::max);
            if -self.obj[self.cols] > TOLERANCE * scale {
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut costs = vec![0.0; self.cols];
        costs[..self.structural].copy_from_slice(&lp.objective);
        self.price(&costs);
        if !self.iterate(self.first_artificial)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; self.structural];
        for r in 0..self.rows {
            if self.basis[r] < self.structural {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}

fn normalised_kind(row: &Constraint) -> RowKind {
    match (row.kind, row.rhs < 0.0) {
        (RowKind::Le, true) => RowKind::Ge,
        (RowKind::Ge, true) => RowKind::Le,
        (k, _) => k,
    }
}
