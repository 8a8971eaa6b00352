//! The scalars entering the bound: `lambda`, `R`/`W` of the components with a
//! zero coordinate, and the aggregate exponents `Gamma`, `Delta_x`, `Delta_y`,
//! `Delta_z`. All logarithms are base 2; `W` is kept as `log2 W`.

use crate::combinatorics::{enumerate, t, IndexSet, TripleIndex};
use crate::error::Error;
use crate::marginals::{entropy_bits, sorted_marginals, ComponentTables};
use crate::params::{Expanded, ParameterSet};
use crate::sum::NeumaierSum;

/// `log2((2 beta)^beta (1 - beta)^(1 - beta))`, continuous at both ends.
pub fn lambda(beta: f64) -> f64 {
    let head = if beta > 0.0 { beta * (2.0 * beta).log2() } else { 0.0 };
    let tail = if beta < 1.0 {
        (1.0 - beta) * (1.0 - beta).log2()
    } else {
        0.0
    };
    head + tail
}

/// `(R_t, log2 W_t)` for a component with a zero coordinate, from its slots.
pub fn rw_log_terms(tr: TripleIndex, g: &[f64], q: f64) -> (f64, f64) {
    let sorted = tr.sorted();
    let l2q = (2.0 * q).log2();
    let lq2 = (q * q + 2.0).log2();
    let r = entropy_bits(&sorted_marginals(sorted, g)[1]);
    let log_w = match sorted.coords() {
        [0, 0, 8] => 0.0,
        [0, 1, 7] => l2q,
        [0, 2, 6] => 2.0 * g[1] * l2q + g[0] * lq2,
        [0, 3, 5] => l2q + g[1] * lq2,
        [0, 4, 4] => 2.0 * g[1] * l2q + 2.0 * g[2] * lq2,
        _ => unreachable!("{tr} has no zero coordinate"),
    };
    (r, log_w)
}

/// `(R_t, W_t)` for a component with a zero coordinate.
pub fn rw_terms(tr: TripleIndex, p: &ParameterSet) -> Result<(f64, f64), Error> {
    if !tr.in_s8() || !tr.has_zero() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S8 \\ S8bar",
        });
    }
    let e = p.expand();
    let (r, log_w) = rw_log_terms(tr, e.g(tr), p.q as f64);
    Ok((r, log_w.exp2()))
}

/// Contribution of one component to each aggregate (already weighted by
/// `alpha`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentContribution {
    pub component: TripleIndex,
    pub gamma: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub delta_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueBreakdown {
    pub gamma_total: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub delta_z: f64,
    pub lambda_b: f64,
    pub lambda_btilde: f64,
    pub per_component: Vec<ComponentContribution>,
    /// Rounding-error bound of the compensated sums behind `gamma_total` and
    /// `delta_x`.
    pub rounding_budget: f64,
}

/// Evaluates the breakdown without checking any precondition.
pub fn breakdown(e: &Expanded, tables: &ComponentTables) -> ValueBreakdown {
    let q = e.qf();
    let l2q = (2.0 * q).log2();
    let lq2 = (q * q + 2.0).log2();
    let lq = q.log2();
    let lambda_b = lambda(e.b);
    let lambda_bt = lambda(e.btilde);
    let bt = e.btilde;

    let mut gamma = NeumaierSum::new();
    let mut dx = NeumaierSum::new();
    let mut dy = NeumaierSum::new();
    let mut dz = NeumaierSum::new();
    let mut per_component = Vec::with_capacity(45);

    for tr in enumerate(IndexSet::S8) {
        let a = e.alpha(tr);
        let mut c = ComponentContribution {
            component: tr,
            gamma: 0.0,
            delta_x: 0.0,
            delta_y: 0.0,
            delta_z: 0.0,
        };
        if tr.has_zero() {
            let (r, log_w) = rw_log_terms(tr, e.g(tr), q);
            let v = (r + log_w) * a;
            if tr.j == 0 {
                c.delta_x = v;
            }
            if tr.k == 0 {
                c.delta_y = v;
            }
            if tr.i == 0 {
                c.delta_z = v;
            }
        } else {
            let phi = |f: TripleIndex| tables.phi_at(tr, f);
            let h_b = entropy_bits(&tables.marginals(tr)[1]);
            let p112 = phi(t(1, 1, 2));
            let p121 = phi(t(1, 2, 1));
            let p211 = phi(t(2, 1, 1));
            c.gamma = a * (h_b + 2.0 * p112 + (1.0 - lambda_bt) * p211);
            c.delta_x = a
                * ((phi(t(1, 0, 3)) + phi(t(3, 0, 1))) * l2q
                    + phi(t(2, 0, 2)) * lq2
                    + (p112 + p211 * bt) * lq);
            c.delta_y = a
                * ((phi(t(1, 3, 0)) + phi(t(3, 1, 0))) * l2q
                    + phi(t(2, 2, 0)) * lq2
                    + (p121 + p211 * bt) * lq);
            c.delta_z = a
                * ((phi(t(0, 1, 3)) + phi(t(0, 3, 1))) * l2q
                    + phi(t(0, 2, 2)) * lq2
                    + (2.0 * p112 * e.b + p211 * (1.0 - bt)) * lq);
        }
        gamma += c.gamma;
        dx += c.delta_x;
        dy += c.delta_y;
        dz += c.delta_z;
        per_component.push(c);
    }

    ValueBreakdown {
        gamma_total: gamma.value(),
        delta_x: dx.value(),
        delta_y: dy.value(),
        delta_z: dz.value(),
        lambda_b,
        lambda_btilde: lambda_bt,
        per_component,
        rounding_budget: gamma.error_bound() + dx.error_bound(),
    }
}

/// Tolerance for the linear normalisations checked before evaluating.
pub const PRECONDITION_TOLERANCE: f64 = 1e-6;

/// Names of the normalisation conditions that `e` violates.
pub fn normalisation_failures(e: &Expanded, tol: f64) -> Vec<String> {
    let mut failed = Vec::new();
    let total: f64 = crate::sum::csum(e.alpha.iter().copied());
    if (total - 1.0).abs() > tol {
        failed.push("C1".to_string());
    }
    for tr in crate::combinatorics::canonical_components() {
        if (slot_normalisation(tr, e.g(tr)) - 1.0).abs() > tol {
            failed.push(format!("D2[{tr}]"));
        }
    }
    failed
}

/// Weighted sum of the slots of `tr` (1 when normalised).
pub fn slot_normalisation(tr: TripleIndex, g: &[f64]) -> f64 {
    let weights: &[f64] = match tr.sorted().coords() {
        [2, 2, 4] => &[1.0, 2.0, 1.0, 1.0],
        [2, 3, 3] => &[2.0, 1.0, 1.0, 1.0],
        _ => &[1.0, 1.0, 1.0, 1.0],
    };
    g.iter().zip(weights).map(|(a, w)| a * w).sum()
}

/// `Gamma`, `Delta_x`, `Delta_y`, `Delta_z` for a parameter set whose `alpha`
/// mass and slot normalisations hold.
pub fn value_breakdown(p: &ParameterSet) -> Result<ValueBreakdown, Error> {
    let e = p.expand();
    let failed = normalisation_failures(&e, PRECONDITION_TOLERANCE);
    if !failed.is_empty() {
        return Err(Error::ConditionsViolated(failed));
    }
    Ok(breakdown(&e, &ComponentTables::new(&e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn lambda_values() {
        assert_eq!(lambda(1.0), 1.0);
        assert_eq!(lambda(0.5), -0.5);
        assert_eq!(lambda(0.0), 0.0);
        // continuity at the ends
        assert!((lambda(1.0 - 1e-12) - 1.0).abs() < 1e-9);
        assert!(lambda(1e-12).abs() < 1e-9);
    }

    #[test]
    fn rw_examples() {
        assert_eq!(rw_log_terms(t(0, 0, 8), &[1.0], 5.0), (0.0, 0.0));
        let (r, lw) = rw_log_terms(t(0, 1, 7), &[1.0], 5.0);
        assert_eq!(r, 1.0);
        assert!((lw.exp2() - 10.0).abs() < 1e-12);
        let g = [0.3506234219, 0.6493765781];
        let (_, lw) = rw_log_terms(t(0, 2, 6), &g, 5.0);
        let direct = 10f64.powf(2.0 * g[1]) * 27f64.powf(g[0]);
        assert!((lw.exp2() - direct).abs() < 1e-12 * direct);
    }

    // log W read off the layout: the non-unit dimension of every factor.
    #[test]
    fn log_w_matches_layout_dimensions() {
        let q = 5.0f64;
        let dim = |f: TripleIndex| -> f64 {
            match f.sorted().coords() {
                [0, 0, 4] => 0.0,
                [0, 1, 3] => (2.0 * q).log2(),
                [0, 2, 2] => (q * q + 2.0).log2(),
                _ => panic!("{f} is not a matrix product"),
            }
        };
        for tr in enumerate(IndexSet::S8).into_iter().filter(|x| x.has_zero()) {
            let tpl = crate::combinatorics::subcomponent_template(tr).unwrap();
            let mult = tpl.multiplicities();
            let mut g: Vec<f64> = (0..mult.len()).map(|n| 1.0 + n as f64).collect();
            let z: f64 = g.iter().zip(&mult).map(|(a, m)| a * m).sum();
            g.iter_mut().for_each(|v| *v /= z);
            let layout: f64 = tpl
                .entries
                .iter()
                .map(|e| e.share * g[e.slot as usize - 1] * (dim(e.left) + dim(e.right)))
                .sum();
            let (_, lw) = rw_log_terms(tr, &g, q);
            assert!((lw - layout).abs() < 1e-12, "{tr}");
        }
    }

    #[test]
    fn w_017_increases_with_q() {
        let mut prev = 0.0;
        for q in 1..10 {
            let (_, lw) = rw_log_terms(t(0, 1, 7), &[1.0], q as f64);
            assert!(lw > prev || q == 1);
            prev = lw;
        }
    }

    fn corner_mass() -> ParameterSet {
        let mut alpha = BTreeMap::new();
        for tr in crate::combinatorics::canonical_components() {
            alpha.insert(tr, 0.0);
        }
        alpha.insert(t(0, 0, 8), 1.0 / 3.0);
        alpha.insert(t(8, 0, 0), 1.0 / 3.0);
        let mut g = BTreeMap::new();
        for (tr, l) in crate::combinatorics::canonical_slots() {
            let n = crate::combinatorics::slot_count(tr) as f64;
            let w = slot_normalisation(tr, &vec![1.0; n as usize]);
            g.insert((tr, l), 1.0 / w);
        }
        ParameterSet::new(5, 2.0, 0.5, 0.5, alpha, g).unwrap()
    }

    #[test]
    fn corner_mass_has_no_value() {
        // alpha_008 = alpha_080 = alpha_800 = 1/3
        let v = value_breakdown(&corner_mass()).unwrap();
        assert_eq!(v.gamma_total, 0.0);
        assert_eq!(v.delta_x, 0.0);
        assert_eq!(v.delta_z, 0.0);
    }

    #[test]
    fn rejects_unnormalised_alpha() {
        let mut p = corner_mass();
        p.set_alpha(t(0, 0, 8), 0.5);
        assert_eq!(
            value_breakdown(&p),
            Err(Error::ConditionsViolated(vec!["C1".into()]))
        );
    }
}
