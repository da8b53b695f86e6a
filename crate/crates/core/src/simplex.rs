//! Self-contained dense two-phase simplex with Bland's rule. Problems here
//! are desk scale (tens of rows, at most a few thousand columns), so a
//! full tableau with anti-cycling pivoting is plenty and keeps every
//! solve deterministic.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal {
        objective: f64,
        x: Vec<f64>,
        /// One shadow price per input constraint (0 for redundant rows).
        dual: Vec<f64>,
    },
    Infeasible,
    Unbounded,
}

const TOL: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Basic column per row.
    basis: Vec<usize>,
    /// Original constraint index per current row.
    row_of: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.rows.len();
        let piv = self.rows[row][col];
        for j in 0..self.ncols {
            self.rows[row][j] /= piv;
        }
        self.rhs[row] /= piv;
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                self.rows[i][j] -= f * self.rows[row][j];
            }
            self.rhs[i] -= f * self.rhs[row];
            if self.rhs[i].abs() < 1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes over the current basis with Bland's rule; `allowed`
    /// filters the columns that may enter. Returns false on unboundedness.
    fn optimize(&mut self, costs: &[f64], allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            // Reduced costs r_j = c_j - c_B . T_j; entering column is the
            // lowest index with r_j > TOL.
            let cb: Vec<f64> = self.basis.iter().map(|&b| costs[b]).collect();
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut z = 0.0;
                for (i, row) in self.rows.iter().enumerate() {
                    z += cb[i] * row[j];
                }
                if costs[j] - z > TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else { return true };
            // Ratio test; Bland ties by the smallest basic column index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > TOL {
                    let ratio = self.rhs[i] / a;
                    match leave {
                        Some((li, lr)) => {
                            if ratio < lr - TOL
                                || (ratio < lr + TOL && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                        None => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((row, _)) = leave else { return false };
            self.pivot(row, e);
        }
    }
}

/// Maximizes `objective . x` over `x >= 0` subject to `constraints`.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> LpOutcome {
    let nv = objective.len();
    let m = constraints.len();

    // Column layout: structural | one slack or surplus per inequality |
    // one artificial per Ge/Eq row. Every row keeps a +1 unit column
    // (slack or artificial), which later yields its dual value.
    // Normalize rhs >= 0 first so the artificial pattern is known.
    let mut rows_in: Vec<(Vec<f64>, Cmp, f64)> = Vec::with_capacity(m);
    for c in constraints {
        assert_eq!(c.coeffs.len(), nv, "constraint arity mismatch");
        if c.rhs < 0.0 {
            let coeffs: Vec<f64> = c.coeffs.iter().map(|v| -v).collect();
            let cmp = match c.cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
            rows_in.push((coeffs, cmp, -c.rhs));
        } else {
            rows_in.push((c.coeffs.clone(), c.cmp, c.rhs));
        }
    }
    let n_slack = rows_in
        .iter()
        .filter(|(_, cmp, _)| matches!(cmp, Cmp::Le | Cmp::Ge))
        .count();
    let n_art = rows_in
        .iter()
        .filter(|(_, cmp, _)| matches!(cmp, Cmp::Ge | Cmp::Eq))
        .count();
    let ncols = nv + n_slack + n_art;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        row_of: (0..m).collect(),
        ncols,
    };
    // `unit_col[r]` is the +1 unit column of input row r (slack for Le,
    // artificial otherwise) used for dual extraction.
    let mut unit_col = vec![usize::MAX; m];
    let mut slack_idx = nv;
    let mut art_idx = nv + n_slack;
    let art_start = nv + n_slack;
    for (r, (coeffs, cmp, rhs)) in rows_in.iter().enumerate() {
        let mut row = vec![0.0; ncols];
        row[..nv].copy_from_slice(coeffs);
        let basic;
        match cmp {
            Cmp::Le => {
                row[slack_idx] = 1.0;
                basic = slack_idx;
                unit_col[r] = slack_idx;
                slack_idx += 1;
            }
            Cmp::Ge => {
                row[slack_idx] = -1.0;
                slack_idx += 1;
                row[art_idx] = 1.0;
                basic = art_idx;
                unit_col[r] = art_idx;
                art_idx += 1;
            }
            Cmp::Eq => {
                row[art_idx] = 1.0;
                basic = art_idx;
                unit_col[r] = art_idx;
                art_idx += 1;
            }
        }
        tab.rows.push(row);
        tab.rhs.push(*rhs);
        tab.basis.push(basic);
    }

    // Phase 1: maximize minus the artificial mass.
    if n_art > 0 {
        let mut c1 = vec![0.0; ncols];
        for j in art_start..ncols {
            c1[j] = -1.0;
        }
        if !tab.optimize(&c1, |_| true) {
            // Phase-1 objective is bounded by 0; this cannot trigger.
            return LpOutcome::Unbounded;
        }
        let art_mass: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= art_start)
            .map(|(_, &v)| v)
            .sum();
        if art_mass > 1e-7 {
            return LpOutcome::Infeasible;
        }
        // Drive leftover zero-value artificials out of the basis; rows
        // with no pivot candidate are redundant and dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                let mut pivoted = false;
                for j in 0..art_start {
                    if tab.rows[r][j].abs() > TOL {
                        tab.pivot(r, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                    tab.row_of.remove(r);
                    continue;
                }
            }
            r += 1;
        }
    }

    // Phase 2 with artificial columns banned.
    let mut c2 = vec![0.0; ncols];
    c2[..nv].copy_from_slice(objective);
    if !tab.optimize(&c2, |j| j < art_start) {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; nv];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < nv {
            x[b] = tab.rhs[i];
        }
    }
    let objective_value: f64 = x.iter().zip(objective).map(|(a, b)| a * b).sum();
    // Duals: y_r = -(reduced cost of row r's unit column).
    let cb: Vec<f64> = tab.basis.iter().map(|&b| c2[b]).collect();
    let mut dual = vec![0.0; m];
    for r0 in 0..m {
        if let Some(i_now) = tab.row_of.iter().position(|&orig| orig == r0) {
            let _ = i_now;
            let j = unit_col[r0];
            let mut z = 0.0;
            for (i, row) in tab.rows.iter().enumerate() {
                z += cb[i] * row[j];
            }
            dual[r0] = z - c2[j];
            if rows_in[r0].1 != constraints[r0].cmp || constraints[r0].rhs < 0.0 {
                // Row was sign-flipped during normalization.
                dual[r0] = -dual[r0];
            }
        }
    }
    LpOutcome::Optimal {
        objective: objective_value,
        x,
        dual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_covering_problem() {
        // min x1 + x2 s.t. x1 >= 0.5, x2 >= 0.5  (as maximize -sum)
        let out = maximize(
            &[-1.0, -1.0],
            &[
                Constraint {
                    coeffs: vec![1.0, 0.0],
                    cmp: Cmp::Ge,
                    rhs: 0.5,
                },
                Constraint {
                    coeffs: vec![0.0, 1.0],
                    cmp: Cmp::Ge,
                    rhs: 0.5,
                },
            ],
        );
        match out {
            LpOutcome::Optimal { objective, x, .. } => {
                assert!((objective + 1.0).abs() < 1e-9);
                assert!((x[0] - 0.5).abs() < 1e-9);
                assert!((x[1] - 0.5).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn equality_and_bounded_max() {
        // max x1 + 2 x2 s.t. x1 + x2 = 1
        let out = maximize(
            &[1.0, 2.0],
            &[Constraint {
                coeffs: vec![1.0, 1.0],
                cmp: Cmp::Eq,
                rhs: 1.0,
            }],
        );
        match out {
            LpOutcome::Optimal { objective, x, dual } => {
                assert!((objective - 2.0).abs() < 1e-9);
                assert!((x[1] - 1.0).abs() < 1e-9);
                assert!((dual[0] - 2.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn infeasible_system_detected() {
        // x1 <= 1 and x1 >= 2
        let out = maximize(
            &[1.0],
            &[
                Constraint {
                    coeffs: vec![1.0],
                    cmp: Cmp::Le,
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![1.0],
                    cmp: Cmp::Ge,
                    rhs: 2.0,
                },
            ],
        );
        assert!(matches!(out, LpOutcome::Infeasible));
    }

    #[test]
    fn unbounded_detected() {
        let out = maximize(
            &[1.0],
            &[Constraint {
                coeffs: vec![-1.0],
                cmp: Cmp::Le,
                rhs: 1.0,
            }],
        );
        assert!(matches!(out, LpOutcome::Unbounded));
    }

    #[test]
    fn mixed_problem_with_degenerate_rows() {
        // max 3a + 2b s.t. a + b <= 4, a - b >= 0, a + b >= 1, b <= 1.5,
        // plus a redundant equality a + b + 0c = a + b.
        let out = maximize(
            &[3.0, 2.0],
            &[
                Constraint {
                    coeffs: vec![1.0, 1.0],
                    cmp: Cmp::Le,
                    rhs: 4.0,
                },
                Constraint {
                    coeffs: vec![1.0, -1.0],
                    cmp: Cmp::Ge,
                    rhs: 0.0,
                },
                Constraint {
                    coeffs: vec![1.0, 1.0],
                    cmp: Cmp::Ge,
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![0.0, 1.0],
                    cmp: Cmp::Le,
                    rhs: 1.5,
                },
            ],
        );
        match out {
            LpOutcome::Optimal { objective, x, .. } => {
                // 3a + 2b = 3(a+b) - b, so push a to the cap: (4, 0).
                assert!((x[0] - 4.0).abs() < 1e-9, "{x:?}");
                assert!(x[1].abs() < 1e-9);
                assert!((objective - 12.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
