//! Free coordinates of the search.
//!
//! `alpha` on the 22 components that appear in C3 is `x_i y_j y_k` (so every
//! C3 equation holds identically); `008`, `800`, `701` are free. Slot weights
//! are raw positive numbers rescaled to satisfy D2, and for `233`/`323` the
//! third slot is `g1 sqrt(g4 / g2)` so D4 holds identically. All coordinates
//! are logarithms. Mirrors come from the canonical entries, and `alpha` is
//! rescaled to unit mass, so the linear conditions never need a penalty.

use std::collections::BTreeMap;

use crate::combinatorics::{canonical_components, enumerate, slot_count, t, IndexSet, TripleIndex, S8_LEN};
use crate::params::{Expanded, ParameterSet};
use crate::value_terms::slot_normalisation;

const X_LEN: usize = 7;
const Y_LEN: usize = 8;
const FREE_ALPHA: [TripleIndex; 3] = [t(0, 0, 8), t(7, 0, 1), t(8, 0, 0)];

/// Box on the `x`, `y` and free `alpha` logarithms.
pub const ALPHA_LOG_RANGE: (f64, f64) = (-40.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq)]
enum AlphaSource {
    Product(usize, usize, usize),
    Free(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SlotSource {
    Unit,
    Var(usize),
    /// `g1 sqrt(g4 / g2)` from the variables of slots 1, 2, 4.
    Balanced(usize, usize, usize),
}

#[derive(Debug, Clone)]
struct ComponentLayout {
    component: TripleIndex,
    alpha: AlphaSource,
    slots: Vec<SlotSource>,
}

/// Maps a coordinate vector to a full assignment and back.
#[derive(Debug, Clone)]
pub struct Layout {
    pub q: u32,
    pub kappa: f64,
    lower_bound: f64,
    components: Vec<ComponentLayout>,
    /// Canonical index of each member of `S8`.
    canonical_of: [usize; S8_LEN],
    b_var: usize,
    dim: usize,
}

impl Layout {
    pub fn new(q: u32, kappa: f64, lower_bound: f64) -> Self {
        let mut next = X_LEN + Y_LEN + FREE_ALPHA.len();
        let mut components = Vec::new();
        for tr in canonical_components() {
            let alpha = match FREE_ALPHA.iter().position(|&f| f == tr) {
                Some(n) => AlphaSource::Free(X_LEN + Y_LEN + n),
                None => AlphaSource::Product(
                    tr.i as usize,
                    X_LEN + tr.j as usize,
                    X_LEN + tr.k as usize,
                ),
            };
            let n = slot_count(tr);
            let balanced = tr == t(2, 3, 3) || tr == t(3, 2, 3);
            let mut slots = Vec::with_capacity(n);
            for l in 0..n {
                if n == 1 {
                    slots.push(SlotSource::Unit);
                } else if balanced && l == 2 {
                    slots.push(SlotSource::Unit);
                } else {
                    slots.push(SlotSource::Var(next));
                    next += 1;
                }
            }
            if let [SlotSource::Var(a), SlotSource::Var(b), _, SlotSource::Var(d)] = slots[..] {
                if balanced {
                    slots[2] = SlotSource::Balanced(a, b, d);
                }
            }
            components.push(ComponentLayout {
                component: tr,
                alpha,
                slots,
            });
        }
        let mut canonical_of = [0; S8_LEN];
        for tr in enumerate(IndexSet::S8) {
            let c = tr.canonical_yz();
            canonical_of[tr.s8_position()] = components
                .iter()
                .position(|l| l.component == c)
                .expect("canonical component");
        }
        Self {
            q,
            kappa,
            lower_bound,
            components,
            canonical_of,
            b_var: next,
            dim: next + 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-coordinate box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lb = self.lower_bound.ln();
        let split = X_LEN + Y_LEN + FREE_ALPHA.len();
        let lo = (0..self.dim)
            .map(|n| if n < split { ALPHA_LOG_RANGE.0 } else { lb })
            .collect();
        let hi = (0..self.dim)
            .map(|n| if n < split { ALPHA_LOG_RANGE.1 } else { 0.0 })
            .collect();
        (lo, hi)
    }

    /// Whether coordinate `n` is an `alpha` logarithm.
    pub fn is_alpha_coordinate(&self, n: usize) -> bool {
        n < X_LEN + Y_LEN + FREE_ALPHA.len()
    }

    fn canonical_values(&self, u: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut alpha: Vec<f64> = self
            .components
            .iter()
            .map(|c| match c.alpha {
                AlphaSource::Product(i, j, k) => (u[i] + u[j] + u[k]).exp(),
                AlphaSource::Free(n) => u[n].exp(),
            })
            .collect();
        let mass: f64 = self
            .components
            .iter()
            .zip(&alpha)
            .map(|(c, a)| if c.component.j == c.component.k { *a } else { 2.0 * a })
            .sum();
        alpha.iter_mut().for_each(|a| *a /= mass);
        let g = self
            .components
            .iter()
            .map(|c| {
                let mut w: Vec<f64> = c
                    .slots
                    .iter()
                    .map(|s| match *s {
                        SlotSource::Unit => 1.0,
                        SlotSource::Var(n) => u[n].exp(),
                        SlotSource::Balanced(a, b, d) => (u[a] + 0.5 * (u[d] - u[b])).exp(),
                    })
                    .collect();
                let z = slot_normalisation(c.component, &w);
                w.iter_mut().for_each(|v| *v /= z);
                w
            })
            .collect();
        (alpha, g)
    }

    pub fn decode(&self, u: &[f64]) -> Expanded {
        let (alpha, g) = self.canonical_values(u);
        let mut e = Expanded {
            q: self.q,
            kappa: self.kappa,
            b: u[self.b_var].exp(),
            btilde: u[self.b_var + 1].exp(),
            alpha: [0.0; S8_LEN],
            g: [[0.0; 4]; S8_LEN],
        };
        for n in 0..S8_LEN {
            let c = self.canonical_of[n];
            e.alpha[n] = alpha[c];
            e.g[n][..g[c].len()].copy_from_slice(&g[c]);
        }
        e
    }

    pub fn to_params(&self, u: &[f64]) -> ParameterSet {
        let (alpha, g) = self.canonical_values(u);
        let mut am = BTreeMap::new();
        let mut gm = BTreeMap::new();
        for (n, c) in self.components.iter().enumerate() {
            am.insert(c.component, alpha[n].clamp(0.0, 1.0));
            for (l, v) in g[n].iter().enumerate() {
                gm.insert((c.component, l as u8 + 1), v.clamp(0.0, 1.0));
            }
        }
        let b = u[self.b_var].exp().clamp(0.0, 1.0);
        let bt = u[self.b_var + 1].exp().clamp(0.0, 1.0);
        ParameterSet::new(self.q, self.kappa, b, bt, am, gm).expect("decoded values are in range")
    }

    /// Coordinates that reproduce `p` as closely as the parametrization
    /// allows: exact on the free entries, least squares in the log domain on
    /// the product entries.
    pub fn encode(&self, p: &ParameterSet) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let floor = |v: f64| v.max(1e-300).ln();
        let mut u = vec![0.0; self.dim];
        let mut eqs = Vec::new();
        for c in &self.components {
            match c.alpha {
                AlphaSource::Product(i, j, k) => eqs.push((i, j, k, floor(p.alpha(c.component)))),
                AlphaSource::Free(n) => u[n] = floor(p.alpha(c.component)),
            }
        }
        fit_product(&mut u, &eqs);
        // Gauge moves that keep every product: y + d with x - 2d, then a
        // common shift of x and the free entries (a rescaling of alpha).
        let max_of = |r: std::ops::Range<usize>, u: &[f64]| r.map(|n| u[n]).fold(f64::NEG_INFINITY, f64::max);
        let d = (max_of(0..X_LEN, &u) - max_of(X_LEN..X_LEN + Y_LEN, &u)) / 3.0;
        for n in 0..X_LEN {
            u[n] -= 2.0 * d;
        }
        for n in X_LEN..X_LEN + Y_LEN {
            u[n] += d;
        }
        let split = X_LEN + Y_LEN + FREE_ALPHA.len();
        let shift = -max_of(0..split, &u);
        for n in (0..X_LEN).chain(X_LEN + Y_LEN..split) {
            u[n] += shift;
        }
        for c in &self.components {
            let vals: Vec<f64> = (1..=c.slots.len())
                .map(|l| p.g(c.component, l as u8))
                .collect();
            // raw weights are the slot values scaled so the largest is 1
            let m = vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
            for (s, v) in c.slots.iter().zip(&vals) {
                if let SlotSource::Var(n) = *s {
                    u[n] = floor(v / m);
                }
            }
        }
        u[self.b_var] = floor(p.b);
        u[self.b_var + 1] = floor(p.btilde);
        for n in 0..self.dim {
            u[n] = u[n].clamp(lo[n], hi[n]);
        }
        u
    }
}

/// Least squares for `X_i + Y_j + Y_k = l` by cyclic coordinate descent.
fn fit_product(u: &mut [f64], eqs: &[(usize, usize, usize, f64)]) {
    for _ in 0..4000 {
        let mut change: f64 = 0.0;
        for v in 0..X_LEN + Y_LEN {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(i, j, k, l) in eqs {
                let c = (i == v) as u8 as f64 + (j == v) as u8 as f64 + (k == v) as u8 as f64;
                if c > 0.0 {
                    let rest = u[i] + u[j] + u[k] - c * u[v];
                    num += c * (l - rest);
                    den += c * c;
                }
            }
            if den > 0.0 {
                let new = num / den;
                change = change.max((new - u[v]).abs());
                u[v] = new;
            }
        }
        if change < 1e-13 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Evaluation, Tolerances};
    use crate::value_terms::normalisation_failures;

    fn table(n: u8) -> ParameterSet {
        let text = match n {
            5 => include_str!("../../../../data/table5.cert"),
            6 => include_str!("../../../../data/table6.cert"),
            _ => include_str!("../../../../data/table7.cert"),
        };
        ParameterSet::parse(text).unwrap()
    }

    #[test]
    fn dimension() {
        // 7 + 8 product factors, 3 free alpha, 57 slot weights, b, btilde
        assert_eq!(Layout::new(5, 2.0, 1e-7).dim(), 77);
    }

    #[test]
    fn decoded_points_satisfy_the_equalities() {
        use rand::{Rng, SeedableRng};
        let layout = Layout::new(5, 2.0, 1e-7);
        let (lo, hi) = layout.bounds();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u: Vec<f64> = (0..layout.dim())
                .map(|n| rng.gen_range(lo[n].max(-10.0)..hi[n].min(0.0) + 1e-9))
                .collect();
            let e = layout.decode(&u);
            assert!(normalisation_failures(&e, 1e-12).is_empty());
            let ev = Evaluation::new(e);
            for r in ev.c3_residuals() {
                assert!(r.abs() < 1e-10, "{r}");
            }
            for (_, r) in ev.d4_residuals() {
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn encode_round_trips_the_tables() {
        let layout = Layout::new(5, 2.0, 1e-7);
        for n in [5, 6, 7] {
            let p = table(n);
            let back = layout.to_params(&layout.encode(&p));
            for (tr, v) in p.alpha_map() {
                let w = back.alpha(*tr);
                assert!((v - w).abs() <= 1e-5 * v.max(1e-7), "table {n} alpha {tr}: {v} vs {w}");
            }
            for ((tr, l), v) in p.g_map() {
                assert!((v - back.g(*tr, *l)).abs() < 1e-8, "table {n} g {tr} {l}");
            }
            let a = Evaluation::of(&p).raw_bound();
            let b = Evaluation::of(&back).raw_bound();
            assert!((a - b).abs() < 1e-6);
            let _ = Tolerances::default();
        }
    }
}
