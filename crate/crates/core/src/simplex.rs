//! Dense simplex with Bland's anti-cycling rule: phase-1 feasibility with
//! Farkas certificates, and inequality-form minimization from a slack basis.

use crate::error::{Error, Result};
use crate::scalar::{tol, Scalar};

/// Outcome of the phase-1 feasibility solve for Ax = b, x ≥ 0 (b ≥ 0).
pub(crate) enum Phase1Outcome<S> {
    Feasible {
        /// Structural solution, length = number of columns of A.
        x: Vec<S>,
    },
    Infeasible {
        /// Farkas vector y with yᵀA ≤ 0 (within tolerance) and yᵀb > 0.
        farkas: Vec<S>,
        /// Residual infeasibility (phase-1 optimum).
        infeasibility: S,
    },
}

pub(crate) enum MinOutcome<S> {
    Optimal { x: Vec<S> },
    Unbounded,
}

struct Tableau<S: Scalar> {
    m: usize,
    n: usize,
    /// m constraint rows, each of length n+1 (rhs last).
    rows: Vec<Vec<S>>,
    /// Reduced-cost row of length n+1; last entry is −objective.
    cost: Vec<S>,
    /// Basic column per row.
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = S::one() / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = other[col];
            if factor.is_zero() {
                continue;
            }
            for (v, &p) in other.iter_mut().zip(pivot_row.iter()) {
                *v -= factor * p;
            }
        }
        let factor = self.cost[col];
        if !factor.is_zero() {
            for (v, &p) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *v -= factor * p;
            }
        }
        self.basis[row] = col;
    }

    /// Run Bland-rule minimization to optimality. Returns `None` on an
    /// unbounded ray.
    fn run(&mut self) -> Result<Option<()>> {
        let gate = S::real(tol::LP);
        // Bland's rule terminates; the cap only guards NaN poisoning.
        let max_iters = 1000 * (self.m + self.n) + 1000;
        for _ in 0..max_iters {
            let entering = (0..self.n).find(|&j| self.cost[j] < -gate);
            let Some(col) = entering else {
                return Ok(Some(()));
            };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.m {
                let coeff = self.rows[r][col];
                if coeff > gate {
                    let ratio = self.rows[r][self.n] / coeff;
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio - gate
                                || ((ratio - *lratio).abs() <= gate
                                    && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(None);
            };
            if !self.rows[row][col].is_finite() {
                return Err(Error::Numerical("simplex tableau is not finite".into()));
            }
            self.pivot(row, col);
        }
        Err(Error::Numerical("simplex iteration cap reached".into()))
    }

    fn solution(&self, structural: usize) -> Vec<S> {
        let mut x = vec![S::zero(); structural];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < structural {
                x[b] = self.rows[r][self.n];
            }
        }
        x
    }
}

/// Phase-1 simplex for Ax = b, x ≥ 0 with b ≥ 0, given as dense rows.
///
/// On infeasibility the Farkas vector is read off the final reduced costs of
/// the artificial columns.
pub(crate) fn phase1_feasibility<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Result<Phase1Outcome<S>> {
    let m = a.len();
    if m == 0 || b.len() != m {
        return Err(Error::DimensionMismatch(
            "phase-1 needs matching constraint rows and right-hand sides".into(),
        ));
    }
    let cols = a[0].len();
    debug_assert!(b.iter().all(|v| *v >= S::zero()));

    let n = cols + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch("ragged constraint matrix".into()));
        }
        let mut full = vec![S::zero(); n + 1];
        full[..cols].copy_from_slice(row);
        full[cols + i] = S::one();
        full[n] = b[i];
        rows.push(full);
    }
    // reduced costs for min Σ artificials with the artificial basis:
    // r_j = −Σ_i a_ij on structural columns, 0 on artificials.
    let mut cost = vec![S::zero(); n + 1];
    for j in 0..cols {
        let mut sum = S::zero();
        for row in &rows {
            sum += row[j];
        }
        cost[j] = -sum;
    }
    let mut rhs_sum = S::zero();
    for &v in b {
        rhs_sum += v;
    }
    cost[n] = -rhs_sum; // −objective = −Σ b at the artificial basis

    let mut tableau = Tableau {
        m,
        n,
        rows,
        cost,
        basis: (cols..cols + m).collect(),
    };
    if tableau.run()?.is_none() {
        return Err(Error::Numerical(
            "phase-1 objective cannot be unbounded".into(),
        ));
    }

    let objective = -tableau.cost[n];
    if objective <= S::real(tol::LP) {
        Ok(Phase1Outcome::Feasible {
            x: tableau.solution(cols),
        })
    } else {
        // y_i = 1 − reduced cost of artificial column i
        let farkas = (0..m).map(|i| S::one() - tableau.cost[cols + i]).collect();
        Ok(Phase1Outcome::Infeasible {
            farkas,
            infeasibility: objective,
        })
    }
}

/// Minimize cᵀx subject to Ax ≤ b, x ≥ 0 with b ≥ 0 (so the slack basis is
/// feasible).
pub(crate) fn minimize_with_slack_start<S: Scalar>(
    c: &[S],
    a: &[Vec<S>],
    b: &[S],
) -> Result<MinOutcome<S>> {
    let m = a.len();
    if m == 0 || b.len() != m {
        return Err(Error::DimensionMismatch(
            "minimization needs matching rows and right-hand sides".into(),
        ));
    }
    let cols = c.len();
    debug_assert!(b.iter().all(|v| *v >= S::zero()));

    let n = cols + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch("ragged constraint matrix".into()));
        }
        let mut full = vec![S::zero(); n + 1];
        full[..cols].copy_from_slice(row);
        full[cols + i] = S::one();
        full[n] = b[i];
        rows.push(full);
    }
    let mut cost = vec![S::zero(); n + 1];
    cost[..cols].copy_from_slice(c);

    let mut tableau = Tableau {
        m,
        n,
        rows,
        cost,
        basis: (cols..cols + m).collect(),
    };
    match tableau.run()? {
        Some(()) => Ok(MinOutcome::Optimal {
            x: tableau.solution(cols),
        }),
        None => Ok(MinOutcome::Unbounded),
    }
}
