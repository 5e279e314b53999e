//! Damped least squares (Levenberg-Marquardt with Marquardt diagonal scaling).
//!
//! The damping factor multiplies the diagonal of `JᵀJ`; it is divided by 10
//! after an accepted step and multiplied by 10 after a rejected one.
//! Iteration stops when an accepted step changes the cost by less than
//! `ftol` (relative), when the step length drops below `xtol` relative to
//! the parameter vector, or at `max_iter`.

use crate::fit::linalg::{invert, solve, Matrix};
use crate::scalar::Real;

pub trait LeastSquaresProblem<T: Real> {
    fn num_params(&self) -> usize;

    fn residuals(&self, params: &[T]) -> Vec<T>;

    /// Rows are residuals, columns parameters.
    fn jacobian(&self, params: &[T]) -> Matrix<T> {
        central_difference_jacobian(|p| self.residuals(p), params, T::lit(1e-6))
    }
}

/// Central-difference Jacobian with per-parameter step `rel_step·max(|p|, 1)`.
pub fn central_difference_jacobian<T: Real, F>(f: F, params: &[T], rel_step: T) -> Matrix<T>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let base = f(params);
    let mut jac = Matrix::zeros(base.len(), params.len());
    let mut p = params.to_vec();
    for c in 0..params.len() {
        let h = rel_step * params[c].abs().max(T::one());
        p[c] = params[c] + h;
        let up = f(&p);
        p[c] = params[c] - h;
        let dn = f(&p);
        p[c] = params[c];
        for r in 0..base.len() {
            jac[(r, c)] = (up[r] - dn[r]) / (h + h);
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig<T> {
    pub max_iter: usize,
    pub initial_lambda: T,
    pub ftol: T,
    pub xtol: T,
}

impl<T: Real> Default for LmConfig<T> {
    fn default() -> Self {
        Self {
            max_iter: 200,
            initial_lambda: T::lit(1e-3),
            ftol: T::lit(1e-10),
            xtol: T::lit(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Accepted step changed the cost by less than `ftol`.
    CostConverged,
    /// Step became negligible relative to the parameters.
    StepConverged,
    /// Residuals vanished.
    ExactFit,
    /// Iteration cap reached; best iterate returned.
    MaxIterations,
    /// Normal equations could not be solved at any damping.
    Singular,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Termination::CostConverged | Termination::StepConverged | Termination::ExactFit
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<T> {
    pub params: Vec<T>,
    pub residuals: Vec<T>,
    /// Half the sum of squared residuals after each accepted step,
    /// starting with the initial cost.
    pub cost_history: Vec<T>,
    pub iterations: usize,
    pub termination: Termination,
    /// Standard errors from `s²·(JᵀJ)⁻¹`, `s² = Σr²/(m - n)`; NaN when the
    /// normal matrix is singular.
    pub standard_errors: Vec<T>,
}

impl<T: Real> LmReport<T> {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }

    pub fn residual_norm(&self) -> T {
        self.residuals.iter().map(|r| *r * *r).sum::<T>().sqrt()
    }
}

fn cost<T: Real>(r: &[T]) -> T {
    r.iter().map(|x| *x * *x).sum::<T>() / T::lit(2.0)
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

pub fn minimize<T: Real, P: LeastSquaresProblem<T> + ?Sized>(problem: &P, x0: &[T], cfg: &LmConfig<T>) -> LmReport<T> {
    let n = problem.num_params();
    assert_eq!(x0.len(), n, "initial guess has wrong dimension");
    let mut x = x0.to_vec();
    let mut r = problem.residuals(&x);
    let mut f = cost(&r);
    let mut history = vec![f];
    let mut lambda = cfg.initial_lambda;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    if f == T::zero() {
        termination = Termination::ExactFit;
    } else {
        'outer: while iterations < cfg.max_iter {
            iterations += 1;
            let jac = problem.jacobian(&x);
            let a = jac.gram();
            let g = jac.transpose_mul(&r);
            let diag = a.diagonal();
            let diag_floor = diag.iter().copied().fold(T::zero(), T::max) * T::lit(1e-15);
            // inner loop: raise damping until a step lowers the cost
            loop {
                let mut damped = a.clone();
                for (i, d) in diag.iter().enumerate() {
                    damped[(i, i)] += lambda * d.max(diag_floor).max(T::min_positive_value());
                }
                let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();
                let Some(step) = solve(&damped, &neg_g) else {
                    lambda *= T::lit(10.0);
                    if lambda > T::lit(1e20) {
                        termination = Termination::Singular;
                        break 'outer;
                    }
                    continue;
                };
                let trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
                let small_step = norm(&step) <= cfg.xtol * (norm(&x) + cfg.xtol);
                let r_trial = problem.residuals(&trial);
                let f_trial = cost(&r_trial);
                if f_trial.is_finite() && f_trial < f {
                    let rel_change = (f - f_trial) / f;
                    x = trial;
                    r = r_trial;
                    f = f_trial;
                    history.push(f);
                    lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                    if f == T::zero() {
                        termination = Termination::ExactFit;
                        break 'outer;
                    }
                    if rel_change < cfg.ftol {
                        termination = Termination::CostConverged;
                        break 'outer;
                    }
                    if small_step {
                        termination = Termination::StepConverged;
                        break 'outer;
                    }
                    break;
                }
                if small_step {
                    termination = Termination::StepConverged;
                    break 'outer;
                }
                lambda *= T::lit(10.0);
                if lambda > T::lit(1e20) {
                    termination = Termination::StepConverged;
                    break 'outer;
                }
            }
        }
    }

    let standard_errors = standard_errors(&problem.jacobian(&x), &r);
    LmReport {
        params: x,
        residuals: r,
        cost_history: history,
        iterations,
        termination,
        standard_errors,
    }
}

pub(crate) fn standard_errors<T: Real>(jac: &Matrix<T>, residuals: &[T]) -> Vec<T> {
    let (m, n) = (jac.rows, jac.cols);
    let dof = if m > n { m - n } else { 1 };
    let s2 = residuals.iter().map(|r| *r * *r).sum::<T>() / T::from_usize_lossy(dof);
    match invert(&jac.gram()) {
        Some(cov) => (0..n).map(|i| (cov[(i, i)].abs() * s2).sqrt()).collect(),
        None => vec![T::nan(); n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquaresProblem<f64> for Rosenbrock {
        fn num_params(&self) -> usize {
            2
        }
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
        }
        fn jacobian(&self, p: &[f64]) -> Matrix<f64> {
            Matrix {
                rows: 2,
                cols: 2,
                data: vec![-20.0 * p[0], 10.0, -1.0, 0.0],
            }
        }
    }

    struct Exponential {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquaresProblem<f64> for Exponential {
        fn num_params(&self) -> usize {
            2
        }
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.t.iter().zip(&self.y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect()
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let rep = minimize(&Rosenbrock, &[-1.2, 1.0], &LmConfig::default());
        assert!(rep.converged(), "{:?}", rep.termination);
        assert!((rep.params[0] - 1.0).abs() < 1e-8);
        assert!((rep.params[1] - 1.0).abs() < 1e-8);
        assert!(rep.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn finite_difference_default_jacobian() {
        let t: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.2).collect();
        let y = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let p = Exponential { t, y };
        let rep = minimize(&p, &[1.0, 0.1], &LmConfig::default());
        assert!(rep.converged());
        assert!((rep.params[0] - 3.0).abs() < 1e-7);
        assert!((rep.params[1] - 0.7).abs() < 1e-7);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let cfg = LmConfig {
            max_iter: 2,
            ..LmConfig::default()
        };
        let rep = minimize(&Rosenbrock, &[-1.2, 1.0], &cfg);
        assert_eq!(rep.termination, Termination::MaxIterations);
        assert!(!rep.converged());
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn standard_errors_of_line_fit() {
        struct Line {
            x: Vec<f64>,
            y: Vec<f64>,
        }
        impl LeastSquaresProblem<f64> for Line {
            fn num_params(&self) -> usize {
                2
            }
            fn residuals(&self, p: &[f64]) -> Vec<f64> {
                self.x.iter().zip(&self.y).map(|(x, y)| p[0] + p[1] * x - y).collect()
            }
        }
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let noise = [0.1, -0.2, 0.05, 0.0, -0.1, 0.15, -0.05, 0.1, -0.1, 0.05];
        let y = x.iter().zip(noise).map(|(x, e)| 1.0 + 2.0 * x + e).collect();
        let rep = minimize(&Line { x, y }, &[0.0, 0.0], &LmConfig::default());
        assert!(rep.standard_errors.iter().all(|s| *s > 0.0 && *s < 0.2));
    }
}
