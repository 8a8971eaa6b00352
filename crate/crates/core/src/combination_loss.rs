//! Combination loss: the outer term `chi` over the whole distribution and the
//! per-component terms `chi_ijk`.

use crate::combinatorics::{enumerate, IndexSet, TripleIndex};
use crate::error::Error;
use crate::marginals::{entropy_bits, global_marginal_vectors, ComponentTables, Distribution};
use crate::params::{Expanded, ParameterSet};
use crate::sum::NeumaierSum;
use crate::value_terms::{normalisation_failures, PRECONDITION_TOLERANCE};

/// Distribution of the first half of the x-variables of a second-power factor.
pub fn d_rst(tr: TripleIndex, btilde: f64, q: f64) -> [f64; 3] {
    debug_assert!(tr.in_s4());
    match tr.i {
        0 => [1.0, 0.0, 0.0],
        1 => [0.5, 0.5, 0.0],
        2 if tr.j == 1 => [(1.0 - btilde) / 2.0, btilde, (1.0 - btilde) / 2.0],
        2 => {
            let z = q * q + 2.0;
            [1.0 / z, q * q / z, 1.0 / z]
        }
        3 => [0.0, 0.5, 0.5],
        _ => [0.0, 0.0, 1.0],
    }
}

/// `d_rst` as a checked [`Distribution`].
pub fn d_rst_distribution(tr: TripleIndex, btilde: f64, q: f64) -> Result<Distribution, Error> {
    if !tr.in_s4() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S4",
        });
    }
    Distribution::new(d_rst(tr, btilde, q).to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterLoss {
    /// `gamma(c, d)` at `[c][d]`.
    pub gamma_dist: [[f64; 5]; 5],
    pub alpha_iplus: [f64; 9],
    pub alpha_iplus_bar: [Option<[f64; 5]>; 9],
    pub chi: f64,
}

pub(crate) fn outer_loss_expanded(e: &Expanded, tables: &ComponentTables) -> OuterLoss {
    let mut gamma_dist = [[0.0; 5]; 5];
    let mut alpha_iplus = [0.0; 9];
    let mut weighted = [[0.0; 5]; 9];
    let mut edge = NeumaierSum::new();
    for tr in enumerate(IndexSet::S8) {
        let a = e.alpha(tr);
        let m = &tables.marginals(tr)[0];
        let i = tr.i as usize;
        for (c, &mc) in m.iter().enumerate() {
            if mc > 0.0 && c <= i && i - c <= 4 {
                gamma_dist[c][i - c] += a * mc;
            }
        }
        if tr.j == 0 || tr.k == 0 {
            edge += a * entropy_bits(m);
        } else {
            alpha_iplus[i] += a;
            for (w, mc) in weighted[i].iter_mut().zip(m) {
                *w += a * mc;
            }
        }
    }
    let mut alpha_iplus_bar = [None; 9];
    let mut inner = NeumaierSum::new();
    for i in 0..9 {
        if alpha_iplus[i] > 0.0 {
            let bar = weighted[i].map(|w| w / alpha_iplus[i]);
            inner += alpha_iplus[i] * entropy_bits(&bar);
            alpha_iplus_bar[i] = Some(bar);
        }
    }
    let h_a = entropy_bits(&global_marginal_vectors(e)[0]);
    let flat: Vec<f64> = gamma_dist.iter().flatten().copied().collect();
    let chi = h_a - entropy_bits(&flat) + edge.value() + inner.value();
    OuterLoss {
        gamma_dist,
        alpha_iplus,
        alpha_iplus_bar,
        chi,
    }
}

fn check_normalised(e: &Expanded) -> Result<(), Error> {
    let failed = normalisation_failures(e, PRECONDITION_TOLERANCE);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::ConditionsViolated(failed))
    }
}

pub fn outer_loss(p: &ParameterSet) -> Result<OuterLoss, Error> {
    let e = p.expand();
    check_normalised(&e)?;
    Ok(outer_loss_expanded(&e, &ComponentTables::new(&e)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLoss {
    pub component: TripleIndex,
    /// `gamma_ijk(a, b, c, d)` at `((a * 3 + b) * 3 + c) * 3 + d`.
    pub gamma_ijk: [f64; 81],
    pub beta: [f64; 5],
    pub beta_bar: [Option<[f64; 3]>; 5],
    pub chi_ijk: f64,
}

impl ComponentLoss {
    pub fn gamma(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.gamma_ijk[((a * 3 + b) * 3 + c) * 3 + d]
    }
}

pub(crate) fn component_loss_expanded(
    tr: TripleIndex,
    e: &Expanded,
    tables: &ComponentTables,
) -> ComponentLoss {
    let q = e.qf();
    let bt = e.btilde;
    let phi = tables.phi(tr);
    let mut gamma = [0.0; 81];
    let mut beta = [0.0; 5];
    let mut mixed = [[0.0; 3]; 5];
    let mut edge = NeumaierSum::new();
    for f in enumerate(IndexSet::S4) {
        let w = phi[f.s4_position()];
        if w == 0.0 {
            continue;
        }
        let d = d_rst(f, bt, q);
        if f.j == 0 || f.k == 0 {
            edge += w * entropy_bits(&d);
        } else {
            let r = f.i as usize;
            beta[r] += w / 2.0;
            for (m, dv) in mixed[r].iter_mut().zip(&d) {
                *m += w / 2.0 * dv;
            }
        }
        let Some(other) = tr.minus(f).filter(|o| o.in_s4()) else {
            continue;
        };
        let d2 = d_rst(other, bt, q);
        let (r, r2) = (f.i as usize, other.i as usize);
        for (a, &da) in d.iter().enumerate() {
            for (c, &dc) in d2.iter().enumerate() {
                if da * dc > 0.0 {
                    let idx = ((a * 3 + (r - a)) * 3 + c) * 3 + (r2 - c);
                    gamma[idx] += w / 2.0 * da * dc;
                }
            }
        }
    }
    let mut beta_bar = [None; 5];
    let mut inner = NeumaierSum::new();
    for r in 0..5 {
        if beta[r] > 0.0 {
            let bar = mixed[r].map(|m| m / beta[r]);
            inner += 2.0 * beta[r] * entropy_bits(&bar);
            beta_bar[r] = Some(bar);
        }
    }
    let h_a = entropy_bits(&tables.marginals(tr)[0]);
    let chi_ijk = h_a - entropy_bits(&gamma) + edge.value() + inner.value();
    ComponentLoss {
        component: tr,
        gamma_ijk: gamma,
        beta,
        beta_bar,
        chi_ijk,
    }
}

pub fn component_loss(tr: TripleIndex, p: &ParameterSet) -> Result<ComponentLoss, Error> {
    if !tr.in_s8_bar() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S8bar",
        });
    }
    let e = p.expand();
    let failed: Vec<String> = normalisation_failures(&e, PRECONDITION_TOLERANCE)
        .into_iter()
        .filter(|n| n != "C1")
        .collect();
    if !failed.is_empty() {
        return Err(Error::ConditionsViolated(failed));
    }
    Ok(component_loss_expanded(tr, &e, &ComponentTables::new(&e)))
}

/// `sum over S8bar of alpha_t * chi_t`.
pub(crate) fn weighted_component_loss(e: &Expanded, tables: &ComponentTables) -> f64 {
    crate::sum::csum(
        enumerate(IndexSet::S8Bar)
            .into_iter()
            .map(|tr| e.alpha(tr) * component_loss_expanded(tr, e, tables).chi_ijk),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::t;

    fn table(name: &str) -> ParameterSet {
        let text = match name {
            "5" => include_str!("../../../data/table5.cert"),
            "6" => include_str!("../../../data/table6.cert"),
            _ => include_str!("../../../data/table7.cert"),
        };
        ParameterSet::parse(text).unwrap()
    }

    #[test]
    fn d_rst_examples() {
        assert_eq!(d_rst(t(4, 0, 0), 0.3, 5.0), [0.0, 0.0, 1.0]);
        let d = d_rst(t(2, 2, 0), 0.3, 5.0);
        assert!((d[0] - 1.0 / 27.0).abs() < 1e-15);
        assert!((d[1] - 25.0 / 27.0).abs() < 1e-15);
        assert_eq!(d_rst(t(2, 1, 1), 1.0, 5.0), [0.0, 1.0, 0.0]);
        assert_eq!(d_rst(t(3, 0, 1), 0.3, 5.0), [0.0, 0.5, 0.5]);
        assert_eq!(d_rst(t(1, 2, 1), 0.3, 5.0), [0.5, 0.5, 0.0]);
        assert_eq!(d_rst(t(0, 2, 2), 0.3, 5.0), [1.0, 0.0, 0.0]);
        assert!(d_rst_distribution(t(2, 2, 1), 0.3, 5.0).is_err());
    }

    #[test]
    fn gamma_116_is_uniform_on_four_points() {
        let l = component_loss(t(1, 1, 6), &table("7")).unwrap();
        for (a, b, c, d) in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)] {
            assert!((l.gamma(a, b, c, d) - 0.25).abs() < 1e-12);
        }
        let s: f64 = l.gamma_ijk.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_33_sums_the_listed_components() {
        let p = table("6");
        let e = p.expand();
        let tables = ComponentTables::new(&e);
        let o = outer_loss(&p).unwrap();
        let direct: f64 = [t(6, 1, 1), t(6, 0, 2), t(6, 2, 0)]
            .iter()
            .map(|&x| e.alpha(x) * tables.marginals(x)[0][3])
            .sum();
        assert!((o.gamma_dist[3][3] - direct).abs() < 1e-15);
        let s: f64 = o.gamma_dist.iter().flatten().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn outer_chi_tables_6_and_7() {
        let chi6 = outer_loss(&table("6")).unwrap().chi;
        let chi7 = outer_loss(&table("7")).unwrap().chi;
        assert!((chi6 + 0.00322).abs() < 1e-4, "{chi6}");
        assert!((chi7 + 0.00383).abs() < 1e-4, "{chi7}");
    }

    #[test]
    fn weighted_component_chi_table_7() {
        let p = table("7");
        let e = p.expand();
        let s = weighted_component_loss(&e, &ComponentTables::new(&e));
        assert!((s + 0.01500).abs() < 1e-4, "{s}");
    }

    #[test]
    fn alpha_iplus_bar_present_iff_positive() {
        let o = outer_loss(&table("5")).unwrap();
        for i in 0..9 {
            assert_eq!(o.alpha_iplus[i] > 0.0, o.alpha_iplus_bar[i].is_some());
        }
        // 800 is the only component with i = 8
        assert_eq!(o.alpha_iplus[8], 0.0);
        let bar0 = o.alpha_iplus_bar[0].unwrap();
        assert!((bar0[0] - 1.0).abs() < 1e-9 && bar0[1..].iter().all(|&v| v == 0.0));
    }

    // Symbolic rows for j <= k, written with slot indices 1..=4 and the
    // distributions D0, D1, D2.
    #[test]
    fn beta_matches_symbolic_table() {
        let p = table("7");
        let bt = p.btilde;
        let d0 = [1.0, 0.0, 0.0];
        let d1 = [0.5, 0.5, 0.0];
        let d2 = [(1.0 - bt) / 2.0, bt, (1.0 - bt) / 2.0];
        type Row = (TripleIndex, [&'static [(u8, f64)]; 3]);
        const H: f64 = 0.5;
        let rows: [Row; 12] = [
            (t(1, 1, 6), [&[(2, H)], &[(1, H)], &[]]),
            (t(1, 2, 5), [&[(2, H), (3, H)], &[(1, H), (2, H)], &[]]),
            (t(1, 3, 4), [&[(2, H), (3, H), (4, H)], &[(2, H), (4, H)], &[]]),
            (t(2, 1, 5), [&[(3, H)], &[(2, H)], &[(1, H)]]),
            (t(2, 2, 4), [&[(2, H), (3, H)], &[(2, H), (4, 1.0)], &[(2, H)]]),
            (t(2, 3, 3), [&[(1, 1.0), (3, H)], &[(4, 1.0)], &[(3, H)]]),
            (t(3, 1, 4), [&[(3, H)], &[(4, H)], &[(2, H)]]),
            (t(3, 2, 3), [&[(2, H), (1, H)], &[(3, H), (4, H)], &[(4, H)]]),
            (t(4, 1, 3), [&[(1, H)], &[(2, H)], &[(4, H)]]),
            (t(4, 2, 2), [&[(1, H)], &[(2, 1.0)], &[(4, 1.0)]]),
            (t(5, 1, 2), [&[], &[(1, H)], &[(2, H)]]),
            (t(6, 1, 1), [&[], &[], &[(1, H)]]),
        ];
        for (tr, cols) in rows {
            let l = component_loss(tr, &p).unwrap();
            for (r, terms) in cols.iter().enumerate() {
                let want: f64 = terms.iter().map(|&(s, c)| c * p.g(tr, s)).sum();
                assert!((l.beta[r] - want).abs() < 1e-14, "{tr} r={r}");
                let bar = [d0, d1, d2][r];
                match l.beta_bar[r] {
                    Some(b) => {
                        for n in 0..3 {
                            assert!((b[n] - bar[n]).abs() < 1e-12, "{tr} r={r}");
                        }
                    }
                    None => assert_eq!(want, 0.0, "{tr} r={r}"),
                }
            }
            assert_eq!(l.beta[3], 0.0);
            assert_eq!(l.beta[4], 0.0);
        }
    }

    #[test]
    fn chi_signs_on_tables() {
        for name in ["5", "6", "7"] {
            let p = table(name);
            assert!(outer_loss(&p).unwrap().chi <= 1e-9);
            for tr in enumerate(IndexSet::S8Bar) {
                let l = component_loss(tr, &p).unwrap();
                assert!(l.chi_ijk <= 1e-9, "table {name} {tr}: {}", l.chi_ijk);
                let s: f64 = l.gamma_ijk.iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn component_loss_rejects_zero_components() {
        assert!(component_loss(t(0, 2, 6), &table("7")).is_err());
    }

    // All phi mass on factors with a zero coordinate: the beta terms vanish.
    #[test]
    fn degenerate_edge_only_phi() {
        let mut e = table("7").expand();
        let mut seen = 0;
        for tr in enumerate(IndexSet::S8Bar) {
            for slot in 0..crate::combinatorics::slot_count(tr) {
                let n = tr.s8_position();
                e.g[n] = [0.0; 4];
                e.g[n][slot] = 1.0;
                let tables = ComponentTables::new(&e);
                let w = tables.phi(tr);
                let edge_only = enumerate(IndexSet::S4)
                    .into_iter()
                    .all(|f| f.j == 0 || f.k == 0 || w[f.s4_position()] == 0.0);
                if !edge_only {
                    continue;
                }
                seen += 1;
                let l = component_loss_expanded(tr, &e, &tables);
                assert_eq!(l.beta, [0.0; 5]);
                let edge: f64 = enumerate(IndexSet::S4)
                    .into_iter()
                    .map(|f| w[f.s4_position()] * entropy_bits(&d_rst(f, e.btilde, 5.0)))
                    .sum();
                let h_a = entropy_bits(&tables.marginals(tr)[0]);
                let want = h_a - entropy_bits(&l.gamma_ijk) + edge;
                assert!((l.chi_ijk - want).abs() < 1e-12, "{tr}");
            }
        }
        assert!(seen > 0);
    }
}
