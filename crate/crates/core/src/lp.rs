//! Dense two-phase simplex.
//!
//! The solver works on the standard form
//!
//! ```text
//! minimize  c^T x   subject to  A x = b,  x >= 0
//! ```
//!
//! and [`LinearProgram`] lowers problems over free variables with inequality
//! and equality rows onto it. Entering columns are chosen by the most negative
//! reduced cost; as soon as a pivot makes no progress the solver falls back to
//! Bland's smallest-index rule until it leaves the degenerate vertex, which
//! rules out cycling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Phase-one residual below which a problem is declared feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1), last column is the right-hand side
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[pc] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        let f = cost[pc];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on the reduced-cost row `cost` (length cols+1,
    /// last entry is minus the objective value). Columns with `allowed[c] ==
    /// false` never enter. Returns false on unboundedness.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool]) -> Result<bool> {
        let max_iter = 50 * (self.rows + self.cols) + 1000;
        let mut bland = false;
        for _ in 0..max_iter {
            let entering = if bland {
                (0..self.cols).find(|&c| allowed[c] && cost[c] < -COST_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..self.cols {
                    if allowed[c] && cost[c] < -COST_TOL {
                        match best {
                            Some((_, v)) if cost[c] >= v => {}
                            _ => best = Some((c, cost[c])),
                        }
                    }
                }
                best.map(|(c, _)| c)
            };
            let Some(pc) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lv)) => {
                            if ratio < lv - 1e-12
                                || (ratio <= lv + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, step)) = leave else {
                return Ok(false);
            };
            bland = step <= 1e-12;
            self.pivot(pr, pc, cost);
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }
}

/// Solves `min c^T x  s.t.  A x = b, x >= 0`.
pub fn solve_standard(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LpOutcome> {
    solve_standard_inner(c, a, b, false)
}

/// Phase one only: is `{x >= 0 : A x = b}` nonempty?
pub fn standard_is_feasible(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<bool> {
    let c = DVector::zeros(a.ncols());
    Ok(solve_standard_inner(&c, a, b, true)?.is_feasible())
}

fn solve_standard_inner(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    phase_one_only: bool,
) -> Result<LpOutcome> {
    let (m, n) = a.shape();
    if c.len() != n || b.len() != m {
        return Err(Error::Dimension(format!(
            "LP shapes disagree: A is {m}x{n}, b has {}, c has {}",
            b.len(),
            c.len()
        )));
    }

    // Rows are sign-normalized so b >= 0. A column that is already a unit
    // vector for some row seeds the basis there; the remaining rows get
    // artificials.
    let signs: Vec<f64> = (0..m).map(|r| if b[r] < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut seed_col: Vec<Option<usize>> = vec![None; m];
    for j in 0..n {
        let mut hit = None;
        let mut unit = true;
        for r in 0..m {
            let v = a[(r, j)];
            if v != 0.0 {
                if hit.is_some() || signs[r] * v != 1.0 {
                    unit = false;
                    break;
                }
                hit = Some(r);
            }
        }
        if let (true, Some(r)) = (unit, hit) {
            if seed_col[r].is_none() {
                seed_col[r] = Some(j);
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&r| seed_col[r].is_none()).collect();
    let cols = n + artificial_rows.len();
    let w = cols + 1;
    let mut data = vec![0.0; m * w];
    let mut basis = vec![0; m];
    for r in 0..m {
        for j in 0..n {
            data[r * w + j] = signs[r] * a[(r, j)];
        }
        data[r * w + cols] = signs[r] * b[r];
        if let Some(j) = seed_col[r] {
            basis[r] = j;
        }
    }
    for (k, &r) in artificial_rows.iter().enumerate() {
        data[r * w + n + k] = 1.0;
        basis[r] = n + k;
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis,
    };

    // Phase one: minimize the sum of artificials.
    let mut cost = vec![0.0; w];
    for &r in &artificial_rows {
        for j in 0..n {
            cost[j] -= t.at(r, j);
        }
        cost[cols] -= t.rhs(r);
    }
    let allowed_all = vec![true; cols];
    t.optimize(&mut cost, &allowed_all)?;
    let infeasibility = -cost[cols];
    if infeasibility > FEASIBILITY_TOL {
        return Ok(LpOutcome::Infeasible);
    }
    if phase_one_only {
        return Ok(LpOutcome::Optimal {
            x: extract(&t, n),
            value: 0.0,
        });
    }

    // Drive remaining artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(pc) = (0..n).find(|&j| t.at(r, j).abs() > PIVOT_TOL) {
                let mut dummy = vec![0.0; w];
                t.pivot(r, pc, &mut dummy);
            }
            // otherwise the row is redundant and its artificial stays at zero
        }
    }

    // Phase two on the original objective, artificials barred from entering.
    let mut cost = vec![0.0; w];
    for j in 0..n {
        cost[j] = c[j];
    }
    for r in 0..m {
        let bj = t.basis[r];
        let cb = if bj < n { c[bj] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                cost[j] -= cb * t.at(r, j);
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < n).collect();
    if !t.optimize(&mut cost, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let x = extract(&t, n);
    let value = c.dot(&x);
    Ok(LpOutcome::Optimal { x, value })
}

fn extract(t: &Tableau, n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for r in 0..t.rows {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    x
}

/// A linear program over free variables:
///
/// ```text
/// minimize c^T y  s.t.  G y <= h,  E y = f
/// ```
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

impl LinearProgram {
    pub fn feasibility(
        ineq_matrix: DMatrix<f64>,
        ineq_rhs: DVector<f64>,
        eq_matrix: DMatrix<f64>,
        eq_rhs: DVector<f64>,
    ) -> Self {
        let n = ineq_matrix.ncols().max(eq_matrix.ncols());
        LinearProgram {
            objective: DVector::zeros(n),
            ineq_matrix,
            ineq_rhs,
            eq_matrix,
            eq_rhs,
        }
    }

    fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn lower(&self) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
        let n = self.num_vars();
        let mi = self.ineq_matrix.nrows();
        let me = self.eq_matrix.nrows();
        if (mi > 0 && self.ineq_matrix.ncols() != n)
            || (me > 0 && self.eq_matrix.ncols() != n)
            || self.ineq_rhs.len() != mi
            || self.eq_rhs.len() != me
        {
            return Err(Error::Dimension("LP constraint shapes disagree".into()));
        }
        // variables: y+ (n), y- (n), slacks (mi)
        let cols = 2 * n + mi;
        let mut a = DMatrix::zeros(mi + me, cols);
        let mut b = DVector::zeros(mi + me);
        for r in 0..mi {
            for j in 0..n {
                let v = self.ineq_matrix[(r, j)];
                a[(r, j)] = v;
                a[(r, n + j)] = -v;
            }
            a[(r, 2 * n + r)] = 1.0;
            b[r] = self.ineq_rhs[r];
        }
        for r in 0..me {
            for j in 0..n {
                let v = self.eq_matrix[(r, j)];
                a[(mi + r, j)] = v;
                a[(mi + r, n + j)] = -v;
            }
            b[mi + r] = self.eq_rhs[r];
        }
        let mut c = DVector::zeros(cols);
        for j in 0..n {
            c[j] = self.objective[j];
            c[n + j] = -self.objective[j];
        }
        Ok((c, a, b))
    }

    fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.num_vars();
        DVector::from_fn(n, |j, _| x[j] - x[n + j])
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let (c, a, b) = self.lower()?;
        Ok(match solve_standard(&c, &a, &b)? {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal {
                x: self.lift(&x),
                value,
            },
            other => other,
        })
    }

    pub fn is_feasible(&self) -> Result<bool> {
        let (_, a, b) = self.lower()?;
        standard_is_feasible(&a, &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let lp = LinearProgram {
            objective: dvector![-3.0, -5.0],
            ineq_matrix: dmatrix![1.0, 0.0; 0.0, 2.0; 3.0, 2.0; -1.0, 0.0; 0.0, -1.0],
            ineq_rhs: dvector![4.0, 12.0, 18.0, 0.0, 0.0],
            eq_matrix: DMatrix::zeros(0, 2),
            eq_rhs: DVector::zeros(0),
        };
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value + 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_system() {
        // x + y = 3 with |x|, |y| <= 1
        let lp = LinearProgram::feasibility(
            dmatrix![1.0, 0.0; -1.0, 0.0; 0.0, 1.0; 0.0, -1.0],
            dvector![1.0, 1.0, 1.0, 1.0],
            dmatrix![1.0, 1.0],
            dvector![3.0],
        );
        assert!(!lp.is_feasible().unwrap());
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LinearProgram {
            objective: dvector![-1.0],
            ineq_matrix: dmatrix![-1.0],
            ineq_rhs: dvector![0.0],
            eq_matrix: DMatrix::zeros(0, 1),
            eq_rhs: DVector::zeros(0),
        };
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // many redundant constraints through the same optimal vertex
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 1..=12 {
            let a = k as f64;
            rows.extend_from_slice(&[a, a]);
            rhs.push(0.0);
        }
        rows.extend_from_slice(&[-1.0, 0.0, 0.0, -1.0]);
        rhs.extend_from_slice(&[1.0, 1.0]);
        let g = DMatrix::from_row_slice(14, 2, &rows);
        let lp = LinearProgram {
            objective: dvector![-1.0, -1.0],
            ineq_matrix: g,
            ineq_rhs: DVector::from_vec(rhs),
            eq_matrix: DMatrix::zeros(0, 2),
            eq_rhs: DVector::zeros(0),
        };
        match lp.solve().unwrap() {
            LpOutcome::Optimal { value, .. } => assert!(value.abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equality_with_redundant_rows() {
        let lp = LinearProgram {
            objective: dvector![1.0, 2.0],
            ineq_matrix: dmatrix![-1.0, 0.0; 0.0, -1.0],
            ineq_rhs: dvector![0.0, 0.0],
            eq_matrix: dmatrix![1.0, 1.0; 2.0, 2.0],
            eq_rhs: dvector![1.0, 2.0],
        };
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 1.0).abs() < 1e-9);
                assert!((x[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
