//! Projected limited-memory quasi-Newton descent with central-difference
//! gradients.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct PolishOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Finite-difference step.
    pub h: f64,
    /// Stop after this many consecutive iterations improving by less than
    /// `f_tol`.
    pub f_tol: f64,
    pub patience: usize,
}

impl Default for PolishOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            memory: 12,
            h: 1e-6,
            f_tol: 1e-13,
            patience: 3,
        }
    }
}

pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences, one-sided at the faces of the box.
pub fn gradient<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x: &[f64],
    lo: &[f64],
    hi: &[f64],
    h: f64,
    evals: &mut usize,
) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let up = (x[i] + h).min(hi[i]);
        let down = (x[i] - h).max(lo[i]);
        if up - down <= 0.0 {
            continue;
        }
        y[i] = up;
        let fu = f(&y);
        y[i] = down;
        let fd = f(&y);
        y[i] = x[i];
        *evals += 2;
        g[i] = (fu - fd) / (up - down);
    }
    g
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &PolishOptions,
) -> Outcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut evals = 1;
    let mut fx = f(&x);
    let mut g = gradient(&mut f, &x, lo, hi, opts.h, &mut evals);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalled = 0;
    let mut iters = 0;

    while iters < opts.max_iters {
        iters += 1;
        // coordinates pinned at a face with the gradient pushing outward
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&free).map(|(a, &m)| if m { *a } else { 0.0 }).collect()
        };
        let gm = masked(&g);
        if dot(&gm, &gm).sqrt() < 1e-14 {
            break;
        }
        // two-loop recursion
        let mut d = gm.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let scale = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = masked(&d).iter().map(|v| -v).collect();
        if dot(&d, &gm) >= 0.0 {
            memory.clear();
            d = gm.iter().map(|v| -v).collect();
        }

        let mut step = 1.0;
        if memory.is_empty() {
            // first step or reset: cap the move to a modest length
            let norm = dot(&d, &d).sqrt();
            if norm > 0.0 {
                step = (0.1 / norm).min(1.0);
            }
        }
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            project(&mut xn, lo, hi);
            let fxn = f(&xn);
            evals += 1;
            let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if fxn.is_finite() && fxn <= fx + 1e-4 * dot(&g, &moved) {
                accepted = Some((xn, fxn, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn, s)) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        let gn = gradient(&mut f, &xn, lo, hi, opts.h, &mut evals);
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).max(1e-300) && sy > 0.0 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        if fx - fxn < opts.f_tol * (1.0 + fx.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = xn;
        fx = fxn;
        g = gn;
        if stalled >= opts.patience {
            break;
        }
    }
    Outcome { x, f: fx, iters, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(
            f,
            &[-1.2, 1.0],
            &[-5.0; 2],
            &[5.0; 2],
            &PolishOptions {
                max_iters: 500,
                ..Default::default()
            },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn active_face() {
        // minimum of the unconstrained problem lies outside the box
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 0.5).powi(2);
        let r = minimize(f, &[0.0, 0.0], &[-1.0; 2], &[1.0; 2], &PolishOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!((r.x[1] + 0.5).abs() < 1e-5);
    }
}
