use crate::error::Result;

use super::{Minimizer, Objective};

/// Nelder–Mead simplex with reflection 1, expansion 2, contraction ½ and
/// shrink ½.
///
/// The initial simplex steps `0.1·(hi − lo)` along bounded coordinates and
/// `0.25` along unbounded ones. Converges when the simplex f-spread is within
/// `tol` and every vertex is within `xtol` of the best one.
#[derive(Clone, Debug)]
pub struct NelderMead {
    pub xtol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { xtol: 1e-4 }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn affine(centroid: &[f64], toward: &[f64], t: f64) -> Vec<f64> {
    centroid.iter().zip(toward).map(|(c, p)| c + t * (p - c)).collect()
}

impl Minimizer for NelderMead {
    fn run(&self, obj: &mut Objective<'_>, x0: &[f64], tol: f64) -> Result<bool> {
        let n = x0.len();
        let mut start = x0.to_vec();
        obj.clamp(&mut start);

        let mut simplex = vec![start.clone()];
        for i in 0..n {
            let mut v = start.clone();
            let step = obj.scale(i);
            v[i] += step;
            if let Some(&(lo, hi)) = obj.bounds().map(|b| &b[i]) {
                if v[i] > hi {
                    v[i] = (start[i] - step).max(lo);
                }
            }
            simplex.push(v);
        }
        let mut values = Vec::with_capacity(n + 1);
        for v in &simplex {
            values.push(obj.eval(v)?);
        }

        loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let f_spread = values[n] - values[0];
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if f_spread <= tol && x_spread <= self.xtol {
                return Ok(true);
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }

            let mut reflected = affine(&centroid, &simplex[n], -REFLECT);
            obj.clamp(&mut reflected);
            let f_r = obj.eval(&reflected)?;

            if f_r < values[0] {
                let mut expanded = affine(&centroid, &simplex[n], -REFLECT * EXPAND);
                obj.clamp(&mut expanded);
                let f_e = obj.eval(&expanded)?;
                if f_e < f_r {
                    simplex[n] = expanded;
                    values[n] = f_e;
                } else {
                    simplex[n] = reflected;
                    values[n] = f_r;
                }
            } else if f_r < values[n - 1] {
                simplex[n] = reflected;
                values[n] = f_r;
            } else {
                // outside contraction if the reflection beat the worst vertex
                let toward = if f_r < values[n] { &reflected } else { &simplex[n] };
                let candidate = affine(&centroid, toward, CONTRACT);
                let f_c = obj.eval(&candidate)?;
                if f_c < f_r.min(values[n]) {
                    simplex[n] = candidate;
                    values[n] = f_c;
                } else {
                    for i in 1..=n {
                        simplex[i] = affine(&simplex[0], &simplex[i], SHRINK);
                        values[i] = obj.eval(&simplex[i])?;
                    }
                }
            }
            obj.end_iteration();
        }
    }
}
