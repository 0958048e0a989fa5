//! Dense primal simplex for small linear programs of the form
//! `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! With a nonnegative right-hand side the origin is feasible, so a single
//! phase starting from the slack basis suffices. Bland's rule picks entering
//! and leaving variables, which rules out cycling on degenerate pivots.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("LP dimensions disagree".into()));
    }
    if let Some(bad) = b.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "LP right-hand side must be finite and nonnegative, got {bad}"
        )));
    }

    // Row-major tableau: m constraint rows, then the objective row.
    // Columns: n structural, m slack, 1 rhs.
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for (r, row) in a.iter().enumerate() {
        t[r * width..r * width + n].copy_from_slice(row);
        t[r * width + n + r] = 1.0;
        t[r * width + width - 1] = b[r];
    }
    for (j, cj) in c.iter().enumerate() {
        t[m * width + j] = -cj;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_iters = 50 * (n + m + 1) * (n + m + 1);
    for _ in 0..max_iters {
        let entering = (0..n + m).find(|&j| t[m * width + j] < -PIVOT_TOL);
        let Some(col) = entering else {
            let mut x = vec![0.0; n];
            for (r, &var) in basis.iter().enumerate() {
                if var < n {
                    x[var] = t[r * width + width - 1];
                }
            }
            return Ok(LpOutcome::Optimal {
                value: t[m * width + width - 1],
                x,
            });
        };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = t[r * width + col];
            if coef > PIVOT_TOL {
                let ratio = t[r * width + width - 1] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - PIVOT_TOL
                            || (ratio <= lratio + PIVOT_TOL && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Ok(LpOutcome::Unbounded);
        };

        let piv = t[row * width + col];
        for v in &mut t[row * width..(row + 1) * width] {
            *v /= piv;
        }
        for r in 0..=m {
            if r == row {
                continue;
            }
            let factor = t[r * width + col];
            if factor != 0.0 {
                for k in 0..width {
                    t[r * width + k] -= factor * t[row * width + k];
                }
            }
        }
        basis[row] = col;
    }
    Err(Error::InvalidParameter(
        "simplex exceeded its iteration limit".into(),
    ))
}
