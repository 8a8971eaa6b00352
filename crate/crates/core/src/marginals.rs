//! Distributions, entropies, and the per-component weight tables.
//!
//! The marginals of each component and the `phi` weight of each second-power
//! factor are written out as closed forms for the sorted components and
//! carried to the other components by the role permutation. The same
//! quantities can be read off the subcomponent layout by summation; both
//! routes are kept and compared in tests.

use crate::combinatorics::{
    enumerate, subcomponent_template, IndexSet, RolePermutation, TripleIndex, S4_LEN, S8_LEN,
};
use crate::error::Error;
use crate::params::{Expanded, ParameterSet};

/// Sum tolerance for [`Distribution::new`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A finite probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    values: Vec<f64>,
}

impl Distribution {
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        Self::with_tolerance(values, DISTRIBUTION_TOLERANCE)
    }

    pub fn with_tolerance(values: Vec<f64>, tol: f64) -> Result<Self, Error> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative or NaN entry {v}")));
        }
        let s = crate::sum::csum(values.iter().copied());
        if (s - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {s}, not 1"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.values)
    }
}

/// `-sum p log2 p` over the positive entries.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -crate::sum::csum(p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()))
}

pub fn entropy(d: &Distribution) -> f64 {
    d.entropy()
}

/// Marginals of one component: `[x, y, z]`, each over `{0, .., 4}`.
pub type RoleMarginals = [[f64; 5]; 3];

/// Closed-form marginals of a sorted component in terms of its own slots.
pub(crate) fn sorted_marginals(sorted: TripleIndex, g: &[f64]) -> RoleMarginals {
    let h = 0.5;
    let one = [1.0, 0.0, 0.0, 0.0, 0.0];
    // slot sums rather than 1 keep these exact for slightly unnormalised input
    let total: f64 = g.iter().sum();
    let e0 = [total, 0.0, 0.0, 0.0, 0.0];
    let half01 = [total / 2.0, total / 2.0, 0.0, 0.0, 0.0];
    match sorted.coords() {
        [0, 0, 8] => [one, one, [0.0, 0.0, 0.0, 0.0, 1.0]],
        [0, 1, 7] => [one, [h, h, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, h, h]],
        [0, 2, 6] => [
            e0,
            [g[0] / 2.0, g[1], g[0] / 2.0, 0.0, 0.0],
            [0.0, 0.0, g[0] / 2.0, g[1], g[0] / 2.0],
        ],
        [0, 3, 5] => [
            e0,
            [g[0] / 2.0, g[1] / 2.0, g[1] / 2.0, g[0] / 2.0, 0.0],
            [0.0, g[0] / 2.0, g[1] / 2.0, g[1] / 2.0, g[0] / 2.0],
        ],
        [0, 4, 4] => {
            let m = [g[0] / 2.0, g[1] / 2.0, g[2], g[1] / 2.0, g[0] / 2.0];
            [e0, m, m]
        }
        [1, 1, 6] => [half01, half01, [0.0, 0.0, g[0] / 2.0, g[1], g[0] / 2.0]],
        [1, 2, 5] => {
            let s13 = (g[0] + g[2]) / 2.0;
            let s23 = (g[1] + g[2]) / 2.0;
            [
                half01,
                [s13, g[1], s13, 0.0, 0.0],
                [0.0, g[0] / 2.0, s23, s23, g[0] / 2.0],
            ]
        }
        [1, 3, 4] => {
            let s13 = (g[0] + g[2]) / 2.0;
            let s24 = (g[1] + g[3]) / 2.0;
            let s23 = (g[1] + g[2]) / 2.0;
            [
                half01,
                [s13, s24, s24, s13, 0.0],
                [g[0] / 2.0, s23, g[3], s23, g[0] / 2.0],
            ]
        }
        [2, 2, 4] => {
            let s = (g[0] + g[1] + g[2]) / 2.0;
            let m = [s, g[1] + g[3], s, 0.0, 0.0];
            [m, m, [g[0] / 2.0, g[1], g[2] + g[3], g[1], g[0] / 2.0]]
        }
        [2, 3, 3] => {
            let a = g[0] + g[2] / 2.0;
            let s12 = (g[0] + g[1]) / 2.0;
            let s134 = (g[0] + g[2] + g[3]) / 2.0;
            let m = [s12, s134, s134, s12, 0.0];
            [[a, g[1] + g[3], a, 0.0, 0.0], m, m]
        }
        _ => unreachable!("{sorted} is not a sorted member of S8"),
    }
}

/// Closed-form marginals of any member of `S8` given its slot values.
pub fn role_marginals(tr: TripleIndex, g: &[f64]) -> RoleMarginals {
    let perm = RolePermutation::sorting(tr);
    let sorted = sorted_marginals(tr.sorted(), g);
    let mut out = [[0.0; 5]; 3];
    for (r, slot) in out.iter_mut().enumerate() {
        *slot = sorted[perm.source_of(r)];
    }
    out
}

/// Marginals obtained by summing the subcomponent layout:
/// `A(c) = sum of share * g over entries whose left factor has x-index c`.
pub fn template_marginals(tr: TripleIndex, g: &[f64]) -> RoleMarginals {
    let tpl = subcomponent_template(tr).expect("member of S8");
    let mut out = [[0.0; 5]; 3];
    for e in &tpl.entries {
        let w = e.share * g[e.slot as usize - 1];
        for (r, &c) in e.left.coords().iter().enumerate() {
            out[r][c as usize] += w;
        }
    }
    out
}

/// `phi` weights of one component over `S4`, indexed by `s4_position`.
pub type PhiWeights = [f64; S4_LEN];

// (factor, slot, coefficient) for the sorted components with positive
// coordinates.
type PhiTerm = (TripleIndex, usize, f64);
use crate::combinatorics::t;

const PHI_116: &[PhiTerm] = &[
    (t(0, 0, 4), 1, 1.0),
    (t(0, 1, 3), 2, 1.0),
    (t(1, 0, 3), 2, 1.0),
    (t(1, 1, 2), 1, 1.0),
];
const PHI_125: &[PhiTerm] = &[
    (t(0, 0, 4), 1, 1.0),
    (t(0, 1, 3), 2, 1.0),
    (t(1, 0, 3), 3, 1.0),
    (t(0, 2, 2), 3, 1.0),
    (t(1, 1, 2), 2, 1.0),
    (t(1, 2, 1), 1, 1.0),
];
const PHI_134: &[PhiTerm] = &[
    (t(0, 0, 4), 1, 1.0),
    (t(0, 1, 3), 2, 1.0),
    (t(1, 0, 3), 3, 1.0),
    (t(0, 3, 1), 3, 1.0),
    (t(1, 3, 0), 1, 1.0),
    (t(0, 2, 2), 4, 1.0),
    (t(1, 1, 2), 4, 1.0),
    (t(1, 2, 1), 2, 1.0),
];
const PHI_224: &[PhiTerm] = &[
    (t(0, 0, 4), 1, 1.0),
    (t(0, 1, 3), 2, 1.0),
    (t(1, 0, 3), 2, 1.0),
    (t(0, 2, 2), 3, 1.0),
    (t(2, 0, 2), 3, 1.0),
    (t(2, 2, 0), 1, 1.0),
    (t(1, 1, 2), 4, 2.0),
    (t(1, 2, 1), 2, 1.0),
    (t(2, 1, 1), 2, 1.0),
];
// Column 130 carries slot 2 (the y/z mirror of column 103).
const PHI_233: &[PhiTerm] = &[
    (t(0, 1, 3), 1, 1.0),
    (t(1, 0, 3), 2, 1.0),
    (t(0, 3, 1), 1, 1.0),
    (t(1, 3, 0), 2, 1.0),
    (t(0, 2, 2), 3, 1.0),
    (t(2, 0, 2), 1, 1.0),
    (t(2, 2, 0), 1, 1.0),
    (t(1, 1, 2), 4, 1.0),
    (t(1, 2, 1), 4, 1.0),
    (t(2, 1, 1), 3, 1.0),
];

fn sorted_phi_terms(sorted: TripleIndex) -> &'static [PhiTerm] {
    match sorted.coords() {
        [1, 1, 6] => PHI_116,
        [1, 2, 5] => PHI_125,
        [1, 3, 4] => PHI_134,
        [2, 2, 4] => PHI_224,
        [2, 3, 3] => PHI_233,
        _ => unreachable!("{sorted} is not a sorted member of S8bar"),
    }
}

/// Closed-form `phi` weights of a member of `S8bar`.
pub fn phi_weights(tr: TripleIndex, g: &[f64]) -> PhiWeights {
    let perm = RolePermutation::sorting(tr);
    let mut w = [0.0; S4_LEN];
    for &(factor, slot, coef) in sorted_phi_terms(tr.sorted()) {
        w[perm.apply(factor).s4_position()] += coef * g[slot - 1];
    }
    w
}

/// `phi` weights summed from the layout: each subcomponent adds its weight to
/// both of its factors.
pub fn template_phi(tr: TripleIndex, g: &[f64]) -> PhiWeights {
    let tpl = subcomponent_template(tr).expect("member of S8");
    let mut w = [0.0; S4_LEN];
    for e in &tpl.entries {
        let v = e.share * g[e.slot as usize - 1];
        w[e.left.s4_position()] += v;
        w[e.right.s4_position()] += v;
    }
    w
}

/// The `phi` weights of one component together with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    pub component: TripleIndex,
    pub weights: PhiWeights,
}

impl PhiTable {
    pub fn get(&self, factor: TripleIndex) -> f64 {
        self.weights[factor.s4_position()]
    }

    pub fn total(&self) -> f64 {
        crate::sum::csum(self.weights.iter().copied())
    }
}

pub fn phi(tr: TripleIndex, p: &ParameterSet) -> Result<PhiTable, Error> {
    if !tr.in_s8_bar() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S8bar",
        });
    }
    let e = p.expand();
    Ok(PhiTable {
        component: tr,
        weights: phi_weights(tr, e.g(tr)),
    })
}

/// Global marginals `A, B, C` over `{0, .., 8}` as raw vectors.
pub fn global_marginal_vectors(e: &Expanded) -> [[f64; 9]; 3] {
    let mut out = [[0.0; 9]; 3];
    for tr in enumerate(IndexSet::S8) {
        let a = e.alpha(tr);
        for (r, &c) in tr.coords().iter().enumerate() {
            out[r][c as usize] += a;
        }
    }
    out
}

/// Global marginals `(A, B, C)`; requires the `alpha` mass to be 1.
pub fn global_marginals(p: &ParameterSet) -> Result<(Distribution, Distribution, Distribution), Error> {
    let [a, b, c] = global_marginal_vectors(&p.expand());
    Ok((
        Distribution::new(a.to_vec())?,
        Distribution::new(b.to_vec())?,
        Distribution::new(c.to_vec())?,
    ))
}

/// `(A_t, B_t, C_t)` for a member of `S8`; requires the slot normalisation of
/// `t` to hold.
pub fn component_marginals(
    tr: TripleIndex,
    p: &ParameterSet,
) -> Result<(Distribution, Distribution, Distribution), Error> {
    if !tr.in_s8() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S8",
        });
    }
    let e = p.expand();
    // check the layout sums, which do not assume normalisation
    let raw = template_marginals(tr, e.g(tr));
    let [a, b, c] = role_marginals(tr, e.g(tr));
    for m in &raw {
        Distribution::new(m.to_vec())?;
    }
    Ok((
        Distribution::new(a.to_vec())?,
        Distribution::new(b.to_vec())?,
        Distribution::new(c.to_vec())?,
    ))
}

/// Per-component marginals and `phi` weights for a whole assignment.
#[derive(Debug, Clone)]
pub struct ComponentTables {
    pub marginals: [RoleMarginals; S8_LEN],
    /// Zero rows for components with a zero coordinate.
    pub phi: [PhiWeights; S8_LEN],
}

impl ComponentTables {
    pub fn new(e: &Expanded) -> Self {
        let mut marginals = [[[0.0; 5]; 3]; S8_LEN];
        let mut phi = [[0.0; S4_LEN]; S8_LEN];
        for tr in enumerate(IndexSet::S8) {
            let n = tr.s8_position();
            marginals[n] = role_marginals(tr, e.g(tr));
            if tr.in_s8_bar() {
                phi[n] = phi_weights(tr, e.g(tr));
            }
        }
        Self { marginals, phi }
    }

    pub fn marginals(&self, tr: TripleIndex) -> &RoleMarginals {
        &self.marginals[tr.s8_position()]
    }

    pub fn phi(&self, tr: TripleIndex) -> &PhiWeights {
        &self.phi[tr.s8_position()]
    }

    pub fn phi_at(&self, tr: TripleIndex, factor: TripleIndex) -> f64 {
        self.phi[tr.s8_position()][factor.s4_position()]
    }
}
