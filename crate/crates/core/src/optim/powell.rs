use crate::error::Result;

use super::{Minimizer, Objective};

/// Powell's conjugate-direction method with Brent line searches.
///
/// Starts from the scaled coordinate directions; after each sweep the direction
/// of largest decrease may be replaced by the net displacement. One sweep over
/// all directions is one iteration. Converges when a sweep improves f by at
/// most `tol`.
#[derive(Clone, Debug)]
pub struct Powell {
    /// Relative bracket tolerance of the line searches.
    pub line_tol: f64,
    pub line_max_iter: usize,
}

impl Default for Powell {
    fn default() -> Self {
        Self { line_tol: 1e-4, line_max_iter: 50 }
    }
}

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;
const GLIMIT: f64 = 100.0;
const TINY: f64 = 1e-20;
const ZEPS: f64 = 1e-7;

/// The objective restricted to the ray `x + t·d`.
struct Line<'o, 'a> {
    obj: &'o mut Objective<'a>,
    origin: &'o [f64],
    dir: &'o [f64],
    point: Vec<f64>,
}

impl Line<'_, '_> {
    fn at(&mut self, t: f64) -> Result<f64> {
        for ((p, x), d) in self.point.iter_mut().zip(self.origin).zip(self.dir) {
            *p = x + t * d;
        }
        self.obj.clamp(&mut self.point);
        self.obj.eval(&self.point)
    }
}

impl Powell {
    /// Minimizes along `dir` from `x` (where f = `fx`); returns `(t, f(t))`.
    fn line_minimize(&self, obj: &mut Objective<'_>, x: &[f64], dir: &[f64], fx: f64) -> Result<(f64, f64)> {
        let mut line = Line { obj, origin: x, dir, point: vec![0.0; x.len()] };

        // bracket a minimum
        let (mut a, mut b) = (0.0, 1.0);
        let (mut fa, mut fb) = (fx, line.at(b)?);
        if fb > fa {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        let mut c = b + GOLD * (b - a);
        let mut fc = line.at(c)?;
        let mut guard = 0;
        while fb > fc && guard < 50 {
            guard += 1;
            let r = (b - a) * (fb - fc);
            let q = (b - c) * (fb - fa);
            let denom = (q - r).abs().max(TINY).copysign(q - r);
            let mut u = b - ((b - c) * q - (b - a) * r) / (2.0 * denom);
            let ulim = b + GLIMIT * (c - b);
            let fu;
            if (b - u) * (u - c) > 0.0 {
                let f = line.at(u)?;
                if f < fc {
                    a = b;
                    b = u;
                    fb = f;
                    break;
                } else if f > fb {
                    c = u;
                    break;
                }
                u = c + GOLD * (c - b);
                fu = line.at(u)?;
            } else if (c - u) * (u - ulim) > 0.0 {
                let f = line.at(u)?;
                if f < fc {
                    b = c;
                    fb = fc;
                    c = u;
                    fc = f;
                    u = c + GOLD * (c - b);
                    fu = line.at(u)?;
                } else {
                    fu = f;
                }
            } else if (u - ulim) * (ulim - c) >= 0.0 {
                u = ulim;
                fu = line.at(u)?;
            } else {
                u = c + GOLD * (c - b);
                fu = line.at(u)?;
            }
            a = b;
            b = c;
            c = u;
            fa = fb;
            fb = fc;
            fc = fu;
        }

        // Brent on the bracket (a, b, c)
        let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
        let (mut x_min, mut w, mut v) = (b, b, b);
        let (mut f_min, mut fw, mut fv) = (fb, fb, fb);
        let mut d: f64 = 0.0;
        let mut e: f64 = 0.0;
        for _ in 0..self.line_max_iter {
            let xm = 0.5 * (lo + hi);
            let tol1 = self.line_tol * x_min.abs() + ZEPS;
            let tol2 = 2.0 * tol1;
            if (x_min - xm).abs() <= tol2 - 0.5 * (hi - lo) {
                break;
            }
            if e.abs() > tol1 {
                let r = (x_min - w) * (f_min - fv);
                let mut q = (x_min - v) * (f_min - fw);
                let mut p = (x_min - v) * q - (x_min - w) * r;
                q = 2.0 * (q - r);
                if q > 0.0 {
                    p = -p;
                }
                q = q.abs();
                let e_prev = e;
                e = d;
                if p.abs() >= (0.5 * q * e_prev).abs() || p <= q * (lo - x_min) || p >= q * (hi - x_min) {
                    e = if x_min >= xm { lo - x_min } else { hi - x_min };
                    d = CGOLD * e;
                } else {
                    d = p / q;
                    let u = x_min + d;
                    if u - lo < tol2 || hi - u < tol2 {
                        d = tol1.copysign(xm - x_min);
                    }
                }
            } else {
                e = if x_min >= xm { lo - x_min } else { hi - x_min };
                d = CGOLD * e;
            }
            let u = if d.abs() >= tol1 { x_min + d } else { x_min + tol1.copysign(d) };
            let fu = line.at(u)?;
            if fu <= f_min {
                if u >= x_min {
                    lo = x_min;
                } else {
                    hi = x_min;
                }
                v = w;
                fv = fw;
                w = x_min;
                fw = f_min;
                x_min = u;
                f_min = fu;
            } else {
                if u < x_min {
                    lo = u;
                } else {
                    hi = u;
                }
                if fu <= fw || w == x_min {
                    v = w;
                    fv = fw;
                    w = u;
                    fw = fu;
                } else if fu <= fv || v == x_min || v == w {
                    v = u;
                    fv = fu;
                }
            }
        }
        if f_min < fx {
            Ok((x_min, f_min))
        } else {
            Ok((0.0, fx))
        }
    }
}

fn step(obj: &Objective<'_>, x: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
    obj.clamp(&mut out);
    out
}

impl Minimizer for Powell {
    fn run(&self, obj: &mut Objective<'_>, x0: &[f64], tol: f64) -> Result<bool> {
        let n = x0.len();
        let mut dirs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut d = vec![0.0; n];
                d[i] = obj.scale(i);
                d
            })
            .collect();
        let mut x = x0.to_vec();
        obj.clamp(&mut x);
        let mut fx = obj.eval(&x)?;

        loop {
            let f_start = fx;
            let x_start = x.clone();
            let mut biggest = (0, 0.0);
            for (i, dir) in dirs.iter().enumerate() {
                let before = fx;
                let (t, ft) = self.line_minimize(obj, &x, dir, fx)?;
                x = step(obj, &x, dir, t);
                fx = ft;
                if before - fx > biggest.1 {
                    biggest = (i, before - fx);
                }
            }
            obj.end_iteration();
            if f_start - fx <= tol {
                return Ok(true);
            }

            let displacement: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
            let extrapolated = step(obj, &x, &displacement, 1.0);
            let fe = obj.eval(&extrapolated)?;
            if fe < f_start {
                let (big_i, delta) = biggest;
                let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - delta).powi(2) - delta * (f_start - fe).powi(2);
                if t < 0.0 {
                    let (s, fs) = self.line_minimize(obj, &x, &displacement, fx)?;
                    x = step(obj, &x, &displacement, s);
                    fx = fs;
                    dirs[big_i] = dirs[n - 1].clone();
                    dirs[n - 1] = displacement;
                }
            }
        }
    }
}
