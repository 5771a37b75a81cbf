//! Dense two-phase tableau simplex for
//!
//! ```text
//! minimize cᵀx  subject to  A x ≤ b,  x ≥ 0
//! ```
//!
//! with `b` of either sign. Rows with a negative right-hand side get an
//! artificial variable and phase one drives those to zero. Pivoting uses
//! Dantzig's rule and falls back to Bland's rule after a run of degenerate
//! pivots so the method cannot cycle. The final basic solution is recomputed
//! from the original data with an LU solve, which removes the round-off the
//! tableau accumulates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) × (cols + 1)`, row-major; the last row is the objective,
    /// the last column the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let piv = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= piv;
        }
        let pivot_row: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                let row = &mut self.t[r * w..(r + 1) * w];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Loads objective `cost` (length `cols`) into the last row, expressed in
    /// terms of the non-basic variables.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let obj = self.rows * w;
        self.t[obj..obj + self.cols].copy_from_slice(&cost[..self.cols]);
        self.t[obj + self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..w {
                    self.t[obj + c] -= cb * self.t[r * w + c];
                }
            }
        }
    }

    /// Runs simplex iterations on the current objective row restricted to
    /// columns `0..allowed`.
    fn optimize(&mut self, allowed: usize, max_iter: usize, iters: &mut usize) -> Result<(), LpFailure> {
        let mut degenerate_run = 0usize;
        loop {
            let obj = self.rows;
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut enter = None;
            let mut best = -PIVOT_EPS;
            for c in 0..allowed {
                let rc = self.at(obj, c);
                if rc < -PIVOT_EPS {
                    if bland {
                        enter = Some(c);
                        break;
                    }
                    if rc < best {
                        best = rc;
                        enter = Some(c);
                    }
                }
            }
            let Some(pc) = enter else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else { return Err(LpFailure::Unbounded) };
            if ratio.abs() <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
            *iters += 1;
            if *iters >= max_iter {
                return Err(LpFailure::IterationLimit);
            }
        }
    }
}

/// Solves `min cᵀx` s.t. `Ax ≤ b`, `x ≥ 0`.
pub fn solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    max_iter: usize,
) -> Result<LpSolution, LpFailure> {
    let (m, nv) = a.shape();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), nv);
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    let cols = nv + m + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    let mut art_idx = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nv {
            t[i * w + j] = sign * a[(i, j)];
        }
        t[i * w + nv + i] = sign;
        t[i * w + cols] = sign * b[i];
        if sign < 0.0 {
            let col = nv + m + art_idx;
            t[i * w + col] = 1.0;
            basis[i] = col;
            art_idx += 1;
        } else {
            basis[i] = nv + i;
        }
    }
    let mut tab = Tableau { rows: m, cols, t, basis };
    let mut iters = 0;

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for v in phase1.iter_mut().skip(nv + m) {
            *v = 1.0;
        }
        tab.set_objective(&phase1);
        tab.optimize(cols, max_iter, &mut iters)?;
        let infeasibility = -tab.at(m, cols);
        if infeasibility > 1e-9 {
            return Err(LpFailure::Infeasible);
        }
        // drive zero-level artificials out of the basis
        for r in 0..m {
            if tab.basis[r] >= nv + m {
                if let Some(pc) = (0..nv + m).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, pc);
                }
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..nv].copy_from_slice(c.as_slice());
    tab.set_objective(&phase2);
    tab.optimize(nv + m, max_iter, &mut iters)?;

    let x = polish(a, b, &tab.basis, nv).unwrap_or_else(|| {
        let mut x = DVector::zeros(nv);
        for (r, &bv) in tab.basis.iter().enumerate() {
            if bv < nv {
                x[bv] = tab.rhs(r).max(0.0);
            }
        }
        x
    });
    let objective = c.dot(&x);
    Ok(LpSolution { x, objective, iterations: iters })
}

/// Recomputes the basic solution from the original constraint columns.
fn polish(a: &DMatrix<f64>, b: &DVector<f64>, basis: &[usize], nv: usize) -> Option<DVector<f64>> {
    let m = a.nrows();
    if basis.iter().any(|&v| v >= nv + m) {
        return None;
    }
    let bmat = DMatrix::from_fn(m, m, |i, k| {
        let col = basis[k];
        if col < nv {
            a[(i, col)]
        } else if col - nv == i {
            1.0
        } else {
            0.0
        }
    });
    let xb = bmat.lu().solve(b)?;
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-7) {
        return None;
    }
    let mut x = DVector::zeros(nv);
    for (k, &col) in basis.iter().enumerate() {
        if col < nv {
            x[col] = xb[k].max(0.0);
        }
    }
    Some(x)
}

impl From<LpFailure> for Error {
    fn from(f: LpFailure) -> Self {
        match f {
            LpFailure::Infeasible => Error::numerical("linear program is infeasible"),
            LpFailure::Unbounded => Error::numerical("linear program is unbounded"),
            LpFailure::IterationLimit => Error::numerical("linear program exceeded its iteration cap"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), value 36
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
        let b = DVector::from_vec(vec![4.0, 12.0, 18.0]);
        let c = DVector::from_vec(vec![-3.0, -5.0]);
        let s = solve(&a, &b, &c, 100).unwrap();
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, -36.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_one_handles_lower_bounds() {
        // min x + y s.t. x + y ≥ 2 (−x − y ≤ −2), x ≤ 3
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![-2.0, 3.0]);
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let s = solve(&a, &b, &c, 100).unwrap();
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        // x ≤ 1 and x ≥ 2
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, -2.0]);
        let c = DVector::from_vec(vec![1.0]);
        assert_eq!(solve(&a, &b, &c, 100).unwrap_err(), LpFailure::Infeasible);
        // min −x s.t. −x ≤ 0
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let b = DVector::from_vec(vec![0.0]);
        let c = DVector::from_vec(vec![-1.0]);
        assert_eq!(solve(&a, &b, &c, 100).unwrap_err(), LpFailure::Unbounded);
    }
}
