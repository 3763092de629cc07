use std::collections::VecDeque;

use crate::error::Result;

use super::{finite_difference_gradient, Minimizer, Objective};

/// Limited-memory BFGS driven by central finite differences, with box bounds
/// handled by projecting each trial point.
///
/// Each iteration costs `2·dim` evaluations for the gradient plus the
/// backtracking line search. Converges when an accepted step improves f by at
/// most `tol` or the projected gradient falls below `gtol`.
#[derive(Clone, Debug)]
pub struct FdLbfgs {
    pub memory: usize,
    /// Finite-difference step.
    pub h: f64,
    pub gtol: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for FdLbfgs {
    fn default() -> Self {
        Self { memory: 10, h: 1e-6, gtol: 1e-6, c1: 1e-4, max_backtracks: 30 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FdLbfgs {
    /// Two-loop recursion: returns −H·g.
    fn direction(&self, grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (alpha - beta) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    fn projected_gradient_norm(&self, obj: &Objective<'_>, x: &[f64], grad: &[f64]) -> f64 {
        let mut moved: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - g).collect();
        obj.clamp(&mut moved);
        moved.iter().zip(x).map(|(m, a)| (m - a).abs()).fold(0.0, f64::max)
    }
}

impl Minimizer for FdLbfgs {
    fn run(&self, obj: &mut Objective<'_>, x0: &[f64], tol: f64) -> Result<bool> {
        let mut x = x0.to_vec();
        obj.clamp(&mut x);
        let mut fx = obj.eval(&x)?;
        let mut grad = finite_difference_gradient(obj, &x, self.h)?;
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(self.memory);

        loop {
            if self.projected_gradient_norm(obj, &x, &grad) <= self.gtol {
                return Ok(true);
            }
            let mut dir = self.direction(&grad, &history);
            if dot(&dir, &grad) >= 0.0 {
                history.clear();
                dir = grad.iter().map(|g| -g).collect();
            }
            // first step along steepest descent is limited to unit length
            let mut t = if history.is_empty() {
                let norm = dot(&dir, &dir).sqrt();
                if norm > 1.0 { 1.0 / norm } else { 1.0 }
            } else {
                1.0
            };

            let mut accepted = None;
            for _ in 0..self.max_backtracks {
                let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                obj.clamp(&mut trial);
                let decrease: f64 = trial.iter().zip(&x).zip(&grad).map(|((n, o), g)| g * (n - o)).sum();
                let f_trial = obj.eval(&trial)?;
                if f_trial <= fx + self.c1 * decrease && f_trial <= fx {
                    accepted = Some((trial, f_trial));
                    break;
                }
                t *= 0.5;
            }
            let Some((x_new, f_new)) = accepted else {
                obj.end_iteration();
                return Ok(false);
            };

            let grad_new = finite_difference_gradient(obj, &x_new, self.h)?;
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                if history.len() == self.memory {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            let improvement = fx - f_new;
            x = x_new;
            fx = f_new;
            grad = grad_new;
            obj.end_iteration();
            if improvement <= tol {
                return Ok(true);
            }
        }
    }
}
