//! Local optimizers: L-BFGS for smooth unconstrained minimization and an
//! active-set gradient-projection ascent for maximization over `A u <= b`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::embedding::Polytope;
use crate::linalg::pinv;

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub memory: usize,
    pub grad_tol: f64,
    pub rel_f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iter: 200,
            memory: 8,
            grad_tol: 1e-6,
            rel_f_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
}

/// Minimizes `f`, which returns `None` where it cannot be evaluated (treated
/// as +inf by the line search). Returns `None` only if `f(x0)` fails.
pub fn lbfgs_minimize<F>(mut f: F, x0: DVector<f64>, opts: &LbfgsOptions) -> Option<Minimum>
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let (mut fx, mut g) = f(&x0).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite()))?;
    let mut x = x0;
    let mut hist: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut stalls = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        if g.amax() < opts.grad_tol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        let gamma = hist
            .back()
            .map(|(s, y, _)| s.dot(y) / y.dot(y))
            .unwrap_or_else(|| 1.0 / g.norm().max(1.0));
        q *= gamma;
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        let mut dir = -q;
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            hist.clear();
            dir = -g.clone() / g.norm().max(1.0);
            slope = g.dot(&dir);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn = &x + &dir * t;
            if let Some((fv, gv)) = f(&xn) {
                if fv.is_finite() && gv.iter().all(|c| c.is_finite()) && fv <= fx + 1e-4 * t * slope {
                    accepted = Some((xn, fv, gv));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fv, gv)) = accepted else {
            break;
        };
        let s = &xn - &x;
        let y = &gv - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - fv).abs() / fx.abs().max(fv.abs()).max(1.0);
        x = xn;
        fx = fv;
        g = gv;
        if rel < opts.rel_f_tol {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Some(Minimum {
        x,
        value: fx,
        gradient: g,
        iterations,
    })
}

#[derive(Debug, Clone)]
pub struct AscentOptions {
    pub max_iter: usize,
    pub rel_f_tol: f64,
    pub grad_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_iter: 100,
            rel_f_tol: 1e-9,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
}

const ACTIVE_TOL: f64 = 1e-9;

/// Maximizes `f` over the polytope starting from a feasible `x0`.
///
/// Each step moves along the gradient projected onto the null space of the
/// active constraints, with a Barzilai-Borwein trial length cut by the ratio
/// test and Armijo backtracking. When the projected gradient vanishes the
/// constraint with the most negative multiplier is released.
pub fn maximize_in_polytope<F>(
    mut f: F,
    polytope: &Polytope,
    x0: DVector<f64>,
    opts: &AscentOptions,
) -> Option<Maximum>
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let a = &polytope.a_matrix;
    let b = &polytope.b_vector;
    let m = a.nrows();
    let n = a.ncols();
    let (mut fx, mut g) = f(&x0).filter(|(v, _)| v.is_finite())?;
    let mut x = x0;
    let mut slack = b - a * &x;
    let mut active: Vec<usize> = (0..m).filter(|&i| slack[i] <= ACTIVE_TOL).collect();
    let mut trial = 1.0 / g.norm().max(1e-12);
    let mut iterations = 0;
    let mut stalls = 0;
    let mut releases = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let dir = loop {
            let d = if active.is_empty() {
                g.clone()
            } else {
                let aw = DMatrix::from_fn(active.len(), n, |r, c| a[(active[r], c)]);
                let aw_pinv = pinv(&aw);
                let d = &g - &aw_pinv * (&aw * &g);
                if d.norm() > opts.grad_tol * (1.0 + g.norm()) {
                    d
                } else {
                    // multipliers of g = A_W^T lambda
                    let lambda = aw_pinv.transpose() * &g;
                    let (worst, val) = lambda
                        .iter()
                        .enumerate()
                        .fold((usize::MAX, 0.0), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
                    if worst == usize::MAX || val > -1e-12 || releases > 4 * m {
                        DVector::zeros(n)
                    } else {
                        releases += 1;
                        active.remove(worst);
                        continue;
                    }
                }
            };
            break d;
        };
        let slope = g.dot(&dir);
        if slope <= 0.0 || dir.norm() <= opts.grad_tol {
            break;
        }

        // ratio test over inactive rows
        let ad = a * &dir;
        let mut t_max = f64::INFINITY;
        let mut blocking = None;
        for i in 0..m {
            if ad[i] > 1e-14 && !active.contains(&i) {
                let t = slack[i].max(0.0) / ad[i];
                if t < t_max {
                    t_max = t;
                    blocking = Some(i);
                }
            }
        }
        if t_max <= 1e-14 {
            if let Some(i) = blocking {
                active.push(i);
                continue;
            }
        }
        let mut t = trial.min(t_max);
        let mut accepted = None;
        for _ in 0..30 {
            let xn = &x + &dir * t;
            if let Some((fv, gv)) = f(&xn) {
                if fv.is_finite() && fv >= fx + 1e-4 * t * slope {
                    accepted = Some((xn, fv, gv, t));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fv, gv, t_used)) = accepted else {
            break;
        };
        let s = &xn - &x;
        let yv = &gv - &g;
        let sy = s.dot(&yv);
        trial = if sy < -1e-16 {
            (s.dot(&s) / -sy).clamp(1e-8, 1e8)
        } else {
            (2.0 * t_used).min(1e8)
        };
        let improvement = fv - fx;
        x = xn;
        fx = fv;
        g = gv;
        slack = b - a * &x;
        if t_used >= t_max * (1.0 - 1e-12) {
            if let Some(i) = blocking {
                active.push(i);
            }
        }
        active.retain(|&i| slack[i] <= ACTIVE_TOL.max(1e-7 * b[i].abs()));
        for i in 0..m {
            if slack[i] <= ACTIVE_TOL && !active.contains(&i) {
                active.push(i);
            }
        }
        if improvement <= opts.rel_f_tol * fx.abs().max(1e-12) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Some(Maximum {
        x,
        value: fx,
        iterations,
    })
}
