//! Classical optimization layer.
//!
//! Minimizers see the problem only through [`Objective`], which counts every
//! call, enforces the evaluation budget, projects onto box bounds and keeps the
//! best point seen. Because the best point is recorded at evaluation time,
//! `f_best` is always the value the objective actually returned at `x_best`.

mod lbfgs;
mod nelder_mead;
mod powell;
mod qaoa;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lbfgs::FdLbfgs;
pub use nelder_mead::NelderMead;
pub use powell::Powell;
pub use qaoa::{baseline_optimize, lotus_descent, lotus_optimize, BaselineRun, LotusInitConfig, LotusRun, RunSettings};

/// Default absolute f-tolerance with exact expectations.
pub const EXACT_TOL: f64 = 1e-6;
/// Default absolute f-tolerance with shot-sampled expectations.
pub const SAMPLED_TOL: f64 = 1e-3;
/// Default objective evaluations per optimizer run (per restart for LOTUS).
pub const DEFAULT_BUDGET: usize = 2000;

/// Box bound for one coordinate; either side may be infinite.
pub type Bound = (f64, f64);

type ObjectiveFn<'a> = Box<dyn FnMut(&[f64]) -> f64 + 'a>;

/// Black-box objective with evaluation accounting.
pub struct Objective<'a> {
    f: ObjectiveFn<'a>,
    dimension: usize,
    bounds: Option<Vec<Bound>>,
    budget: usize,
    evaluations: usize,
    iterations: usize,
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<f64>,
    eval_trace: Vec<f64>,
}

impl fmt::Debug for Objective<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dimension", &self.dimension)
            .field("evaluations", &self.evaluations)
            .field("best_f", &self.best_f)
            .finish_non_exhaustive()
    }
}

impl<'a> Objective<'a> {
    pub fn new(dimension: usize, f: impl FnMut(&[f64]) -> f64 + 'a) -> Self {
        Self {
            f: Box::new(f),
            dimension,
            bounds: None,
            budget: usize::MAX,
            evaluations: 0,
            iterations: 0,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            trace: Vec::new(),
            eval_trace: Vec::new(),
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Result<Self> {
        if bounds.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: bounds.len() });
        }
        if bounds.iter().any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
            return Err(Error::InvalidParameter("bounds must satisfy lo <= hi".into()));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> Option<&[Bound]> {
        self.bounds.as_deref()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evaluations)
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.best_x, self.best_f)
    }

    /// Best-so-far value after each evaluation.
    pub fn eval_trace(&self) -> &[f64] {
        &self.eval_trace
    }

    pub fn clamp(&self, x: &mut [f64]) {
        if let Some(bounds) = &self.bounds {
            for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
                *v = v.clamp(lo, hi);
            }
        }
    }

    /// Evaluates at the projection of `x` onto the bounds.
    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        if self.evaluations >= self.budget {
            return Err(Error::BudgetExhausted);
        }
        let mut point = x.to_vec();
        self.clamp(&mut point);
        let value = (self.f)(&point);
        self.evaluations += 1;
        if !value.is_finite() {
            return Err(Error::NonFinite { value, evaluation: self.evaluations });
        }
        if value < self.best_f {
            self.best_f = value;
            self.best_x = point;
        }
        self.eval_trace.push(self.best_f);
        Ok(value)
    }

    /// Marks the end of one major iteration of the running optimizer.
    pub fn end_iteration(&mut self) {
        self.iterations += 1;
        self.trace.push(self.best_f);
    }

    /// Initial simplex / line-search scale for coordinate `i`.
    pub(crate) fn scale(&self, i: usize) -> f64 {
        match self.bounds.as_ref().map(|b| b[i]) {
            Some((lo, hi)) if lo.is_finite() && hi.is_finite() && hi > lo => 0.1 * (hi - lo),
            _ => 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOutcome {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    /// Major iterations reported by the optimizer.
    pub iterations: usize,
    /// Objective calls.
    pub evaluations: usize,
    pub converged: bool,
    /// Best-so-far value after each major iteration.
    pub trace: Vec<f64>,
}

/// A minimization method. Implementations drive [`Objective::eval`] and call
/// [`Objective::end_iteration`] once per major iteration.
///
/// Returning `Err(Error::BudgetExhausted)` is a normal way to stop.
pub trait Minimizer: Send + Sync {
    /// Returns whether the method's convergence test was met.
    fn run(&self, obj: &mut Objective<'_>, x0: &[f64], tol: f64) -> Result<bool>;
}

/// Minimizers by stable string id.
#[derive(Clone)]
pub struct Registry {
    methods: BTreeMap<String, Arc<dyn Minimizer>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.methods.keys()).finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("nelder-mead", NelderMead::default());
        r.register("powell", Powell::default());
        r.register("fd-lbfgs", FdLbfgs::default());
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self { methods: BTreeMap::new() }
    }

    /// Adds or replaces a method.
    pub fn register(&mut self, id: impl Into<String>, method: impl Minimizer + 'static) {
        self.methods.insert(id.into(), Arc::new(method));
    }

    pub fn get(&self, id: &str) -> Result<&dyn Minimizer> {
        self.methods.get(id).map(|m| m.as_ref()).ok_or_else(|| Error::UnknownMethod(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.methods.keys().map(String::as_str)
    }

    /// Runs `method` from `x0` with at most `budget` objective calls.
    pub fn minimize(&self, method: &str, obj: &mut Objective<'_>, x0: &[f64], budget: usize, tol: f64) -> Result<OptimizerOutcome> {
        let m = self.get(method)?;
        if x0.len() != obj.dimension {
            return Err(Error::DimensionMismatch { expected: obj.dimension, got: x0.len() });
        }
        if budget < obj.dimension + 2 {
            return Err(Error::InvalidParameter(format!(
                "budget {budget} is below dimension + 2 = {}",
                obj.dimension + 2
            )));
        }
        obj.budget = obj.evaluations.saturating_add(budget);
        let converged = match m.run(obj, x0, tol) {
            Ok(c) => c,
            Err(Error::BudgetExhausted) => false,
            Err(e) => return Err(e),
        };
        if obj.best_x.is_empty() {
            return Err(Error::InvalidParameter("optimizer made no evaluations".into()));
        }
        Ok(OptimizerOutcome {
            x_best: obj.best_x.clone(),
            f_best: obj.best_f,
            iterations: obj.iterations.max(1),
            evaluations: obj.evaluations,
            converged,
            trace: obj.trace.clone(),
        })
    }
}

/// [`Registry::minimize`] against the built-in methods.
pub fn minimize(method: &str, obj: &mut Objective<'_>, x0: &[f64], budget: usize, tol: f64) -> Result<OptimizerOutcome> {
    Registry::default().minimize(method, obj, x0, budget, tol)
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h`; costs `2·dim`
/// evaluations.
pub fn finite_difference_gradient(obj: &mut Objective<'_>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = obj.eval(&probe)?;
        probe[i] = x[i] - h;
        let down = obj.eval(&probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    const METHODS: [&str; 3] = ["nelder-mead", "powell", "fd-lbfgs"];

    #[test]
    fn sphere_smoke() {
        for method in METHODS {
            for d in [2usize, 5, 8] {
                let x0: Vec<f64> = (0..d).map(|i| 1.5 - 0.7 * i as f64).collect();
                let mut obj = Objective::new(d, sphere);
                let out = minimize(method, &mut obj, &x0, 500 * d, EXACT_TOL).unwrap();
                assert!(out.f_best < 1e-6, "{method} d={d}: {}", out.f_best);
                assert!(out.evaluations <= 500 * d);
                assert!(out.evaluations >= out.iterations && out.iterations >= 1);
            }
        }
    }

    #[test]
    fn rosenbrock_progress() {
        for method in METHODS {
            let mut obj = Objective::new(2, rosenbrock);
            let out = minimize(method, &mut obj, &[-1.2, 1.0], 5000, 1e-10).unwrap();
            assert!(out.f_best < 1e-4, "{method}: {}", out.f_best);
        }
    }

    #[test]
    fn tiny_budget_is_respected() {
        for method in METHODS {
            let d = 6;
            let mut obj = Objective::new(d, sphere);
            let out = minimize(method, &mut obj, &[1.0; 6], d + 2, EXACT_TOL).unwrap();
            assert!(out.evaluations <= d + 2, "{method}: {}", out.evaluations);
            assert!(!out.converged);
        }
        let mut obj = Objective::new(6, sphere);
        assert!(minimize("powell", &mut obj, &[1.0; 6], 7, EXACT_TOL).is_err());
    }

    #[test]
    fn deterministic() {
        for method in METHODS {
            let run = || {
                let mut obj = Objective::new(4, rosenbrock);
                minimize(method, &mut obj, &[0.3, -0.2, 0.9, 1.4], 800, EXACT_TOL).unwrap()
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn best_value_matches_objective() {
        for method in METHODS {
            let mut obj = Objective::new(3, rosenbrock);
            let out = minimize(method, &mut obj, &[2.0, 2.0, 2.0], 300, EXACT_TOL).unwrap();
            assert_eq!(out.f_best, rosenbrock(&out.x_best));
            assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn bounds_are_respected() {
        for method in METHODS {
            // unconstrained optimum at (-1, -1) lies outside the box
            let f = |x: &[f64]| (x[0] + 1.0).powi(2) + (x[1] + 1.0).powi(2);
            let mut obj = Objective::new(2, f).with_bounds(vec![(0.0, 2.0), (0.5, 2.0)]).unwrap();
            let out = minimize(method, &mut obj, &[1.5, 1.5], 1000, EXACT_TOL).unwrap();
            assert!(out.x_best[0] >= 0.0 && out.x_best[1] >= 0.5);
            assert!((out.f_best - 3.25).abs() < 1e-4, "{method}: {out:?}");
        }
    }

    #[test]
    fn errors() {
        let mut obj = Objective::new(2, sphere);
        assert!(matches!(minimize("cobyla", &mut obj, &[0.0, 0.0], 100, 1e-6), Err(Error::UnknownMethod(_))));
        assert!(matches!(minimize("powell", &mut obj, &[0.0], 100, 1e-6), Err(Error::DimensionMismatch { .. })));

        let mut nan = Objective::new(2, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] });
        assert!(matches!(minimize("nelder-mead", &mut nan, &[0.45, 0.0], 100, 1e-6), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn plugin_methods() {
        struct FirstPoint;
        impl Minimizer for FirstPoint {
            fn run(&self, obj: &mut Objective<'_>, x0: &[f64], _tol: f64) -> Result<bool> {
                obj.eval(x0)?;
                obj.end_iteration();
                Ok(true)
            }
        }
        let mut r = Registry::default();
        r.register("first-point", FirstPoint);
        assert_eq!(r.ids().collect::<Vec<_>>(), ["fd-lbfgs", "first-point", "nelder-mead", "powell"]);
        let mut obj = Objective::new(2, sphere);
        let out = r.minimize("first-point", &mut obj, &[1.0, 2.0], 10, 1e-6).unwrap();
        assert_eq!(out.f_best, 5.0);
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn gradient_examples() {
        let mut obj = Objective::new(2, sphere);
        let g = finite_difference_gradient(&mut obj, &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
        assert_eq!(obj.evaluations(), 4);

        let mut flat = Objective::new(3, |_: &[f64]| 7.0);
        assert_eq!(finite_difference_gradient(&mut flat, &[0.1, 0.2, 0.3], 1e-3).unwrap(), vec![0.0; 3]);
        assert!(finite_difference_gradient(&mut flat, &[0.1, 0.2, 0.3], 0.0).is_err());

        let mut inf = Objective::new(1, |x: &[f64]| 1.0 / (x[0] - 1e-4));
        assert!(matches!(finite_difference_gradient(&mut inf, &[0.0], 1e-4), Err(Error::NonFinite { .. })));
    }
}
