//! Signed residuals of every named condition and the per-mode report.

use std::fmt;
use std::str::FromStr;

use crate::combination_loss::{outer_loss_expanded, weighted_component_loss};
use crate::combinatorics::{canonical_components, enumerate, slot_count, t, IndexSet, TripleIndex};
use crate::error::Error;
use crate::marginals::{entropy_bits, global_marginal_vectors, ComponentTables};
use crate::params::{Expanded, ParameterSet};
use crate::sum::{csum, NeumaierSum};
use crate::value_terms::{breakdown, slot_normalisation, ValueBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// C4 and D3.
    Legacy,
    /// C4' and D3.
    LossOuter,
    /// C4' and D3'.
    LossRecursive,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Legacy, Mode::LossOuter, Mode::LossRecursive];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Legacy => "legacy",
            Mode::LossOuter => "loss_outer",
            Mode::LossRecursive => "loss_recursive",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "legacy" => Ok(Mode::Legacy),
            "loss_outer" | "loss-outer" => Ok(Mode::LossOuter),
            "loss_recursive" | "loss-recursive" => Ok(Mode::LossRecursive),
            _ => Err(Error::InvalidConfig(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// C1 and D2.
    pub eq_linear: f64,
    /// C3 and D4, in the log domain.
    pub eq_entropy: f64,
    pub ineq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq_linear: 1e-6,
            eq_entropy: 1e-4,
            ineq: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Equality,
    Inequality,
}

/// Theorem-validity conditions are the maximum-entropy requirements; loosening
/// their tolerance weakens the certificate itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Standard,
    TheoremValidity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEntry {
    pub name: String,
    pub kind: Kind,
    pub class: Class,
    pub linear: bool,
    pub residual: f64,
    pub satisfied: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub mode: Mode,
    pub entries: Vec<ConstraintEntry>,
    /// Conditions that hold by the storage layout and are not evaluated.
    pub structural: Vec<String>,
}

impl ConstraintReport {
    pub fn satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn failing(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !e.satisfied)
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.get(name).map(|e| e.residual)
    }

    pub fn nonlinear_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.linear).count()
    }
}

/// The ten C3 equations as (left, right) factor lists. The eighth and ninth
/// coincide; both are kept so the numbering follows the listing. In the fifth,
/// `503` sits on the right and `512` on the left: the other placement is not
/// an identity of the maximum-entropy form and fails on every shipped table.
pub const C3_EQUATIONS: [(&[TripleIndex], &[TripleIndex]); 10] = [
    (&[t(0, 2, 6), t(1, 0, 7), t(2, 1, 5)], &[t(0, 1, 7), t(1, 2, 5), t(2, 0, 6)]),
    (&[t(0, 2, 6), t(1, 0, 7), t(6, 1, 1)], &[t(0, 1, 7), t(1, 1, 6), t(6, 0, 2)]),
    (&[t(0, 3, 5), t(1, 0, 7), t(3, 1, 4)], &[t(0, 1, 7), t(1, 3, 4), t(3, 0, 5)]),
    (&[t(0, 4, 4), t(1, 0, 7), t(4, 1, 3)], &[t(0, 1, 7), t(1, 3, 4), t(4, 0, 4)]),
    (&[t(0, 3, 5), t(1, 0, 7), t(5, 1, 2)], &[t(0, 1, 7), t(1, 2, 5), t(5, 0, 3)]),
    (
        &[t(0, 3, 5), t(1, 0, 7), t(1, 1, 6), t(2, 2, 4)],
        &[t(0, 1, 7), t(1, 2, 5), t(1, 3, 4), t(2, 0, 6)],
    ),
    (
        &[t(0, 4, 4), t(1, 0, 7), t(1, 1, 6), t(2, 3, 3)],
        &[t(0, 1, 7), t(1, 3, 4), t(1, 3, 4), t(2, 0, 6)],
    ),
    (
        &[t(0, 3, 5), t(0, 4, 4), t(1, 0, 7), t(1, 1, 6), t(3, 2, 3)],
        &[t(0, 1, 7), t(0, 2, 6), t(1, 3, 4), t(1, 3, 4), t(3, 0, 5)],
    ),
    (
        &[t(0, 4, 4), t(0, 3, 5), t(1, 0, 7), t(1, 1, 6), t(3, 2, 3)],
        &[t(0, 1, 7), t(0, 2, 6), t(1, 3, 4), t(1, 3, 4), t(3, 0, 5)],
    ),
    (
        &[t(0, 4, 4), t(0, 3, 5), t(1, 0, 7), t(1, 1, 6), t(4, 2, 2)],
        &[t(0, 1, 7), t(0, 2, 6), t(1, 3, 4), t(1, 2, 5), t(4, 0, 4)],
    ),
];

/// `sum ln(left) - sum ln(right)`; zero when both products vanish.
pub fn log_product_residual(left: &[f64], right: &[f64]) -> f64 {
    let side = |v: &[f64]| -> f64 {
        if v.iter().any(|&x| x <= 0.0) {
            f64::NEG_INFINITY
        } else {
            csum(v.iter().map(|x| x.ln()))
        }
    };
    let (l, r) = (side(left), side(right));
    if l == f64::NEG_INFINITY && r == f64::NEG_INFINITY {
        0.0
    } else {
        l - r
    }
}

/// Everything derived from one assignment that the constraints and the bound
/// need.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub expanded: Expanded,
    pub tables: ComponentTables,
    pub values: ValueBreakdown,
    pub h_a: f64,
    pub h_b: f64,
    /// Outer combination loss.
    pub chi: f64,
    pub sum_alpha_h_a: f64,
    pub sum_alpha_h_b: f64,
    /// `sum over S8bar of alpha_t * chi_t`; NaN when skipped.
    pub sum_alpha_chi: f64,
}

impl Evaluation {
    pub fn new(expanded: Expanded) -> Self {
        Self::with_component_loss(expanded, true)
    }

    /// As [`Evaluation::new`]; the per-component losses, needed only for
    /// D3', are skipped unless asked for.
    pub fn with_component_loss(expanded: Expanded, component_loss: bool) -> Self {
        let tables = ComponentTables::new(&expanded);
        let values = breakdown(&expanded, &tables);
        let [a, b, _] = global_marginal_vectors(&expanded);
        let chi = outer_loss_expanded(&expanded, &tables).chi;
        let mut sa = NeumaierSum::new();
        let mut sb = NeumaierSum::new();
        for tr in enumerate(IndexSet::S8Bar) {
            let m = tables.marginals(tr);
            let w = expanded.alpha(tr);
            sa += w * entropy_bits(&m[0]);
            sb += w * entropy_bits(&m[1]);
        }
        let sum_alpha_chi = if component_loss {
            weighted_component_loss(&expanded, &tables)
        } else {
            f64::NAN
        };
        Self {
            h_a: entropy_bits(&a),
            h_b: entropy_bits(&b),
            chi,
            sum_alpha_h_a: sa.value(),
            sum_alpha_h_b: sb.value(),
            sum_alpha_chi,
            expanded,
            tables,
            values,
        }
    }

    pub fn of(p: &ParameterSet) -> Self {
        Self::new(p.expand())
    }

    /// `4 log2(q + 2)`.
    pub fn rhs(&self) -> f64 {
        4.0 * (self.expanded.qf() + 2.0).log2()
    }

    /// `(rhs - Gamma - H(B)) / Delta_x`, without any feasibility check.
    pub fn raw_bound(&self) -> f64 {
        (self.rhs() - self.values.gamma_total - self.h_b) / self.values.delta_x
    }

    pub fn c4(&self) -> f64 {
        self.h_a - self.h_b
    }

    pub fn c4_prime(&self) -> f64 {
        self.h_a - self.chi - self.h_b
    }

    pub fn d3(&self) -> f64 {
        self.sum_alpha_h_a - self.sum_alpha_h_b
    }

    pub fn d3_prime(&self) -> f64 {
        self.sum_alpha_h_a - self.sum_alpha_chi - self.sum_alpha_h_b
    }

    pub fn e1(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for tr in enumerate(IndexSet::S8Bar) {
            let a = self.expanded.alpha(tr);
            s += self.tables.phi_at(tr, t(2, 1, 1)) * a * self.values.lambda_btilde;
            s += -self.tables.phi_at(tr, t(1, 1, 2)) * a * self.values.lambda_b;
        }
        s.value()
    }

    pub fn e2(&self) -> f64 {
        self.values.delta_z - self.expanded.kappa * self.values.delta_x
    }

    /// The mode's entropy inequality on the global marginals.
    pub fn global_condition(&self, mode: Mode) -> (&'static str, f64) {
        match mode {
            Mode::Legacy => ("C4", self.c4()),
            _ => ("C4'", self.c4_prime()),
        }
    }

    /// The mode's entropy inequality on the component marginals.
    pub fn component_condition(&self, mode: Mode) -> (&'static str, f64) {
        match mode {
            Mode::LossRecursive => ("D3'", self.d3_prime()),
            _ => ("D3", self.d3()),
        }
    }

    pub fn c3_residuals(&self) -> [f64; 10] {
        C3_EQUATIONS.map(|(l, r)| {
            let lv: Vec<f64> = l.iter().map(|&x| self.expanded.alpha(x)).collect();
            let rv: Vec<f64> = r.iter().map(|&x| self.expanded.alpha(x)).collect();
            log_product_residual(&lv, &rv)
        })
    }

    /// D4 for 233 and 323: `g3 sqrt(g2) = g1 sqrt(g4)` in the log domain.
    pub fn d4_residuals(&self) -> [(TripleIndex, f64); 2] {
        [t(2, 3, 3), t(3, 2, 3)].map(|tr| {
            let g = self.expanded.g(tr);
            let l = [g[2], g[1].sqrt()];
            let r = [g[0], g[3].sqrt()];
            (tr, log_product_residual(&l, &r))
        })
    }

    pub fn report(&self, mode: Mode, tol: &Tolerances) -> ConstraintReport {
        let mut entries = Vec::with_capacity(37);
        let mut eq = |name: String, class, linear, residual: f64, tolerance: f64| {
            entries.push(ConstraintEntry {
                name,
                kind: Kind::Equality,
                class,
                linear,
                residual,
                satisfied: residual.abs() <= tolerance,
                tolerance,
            })
        };
        eq(
            "C1".into(),
            Class::Standard,
            true,
            csum(self.expanded.alpha.iter().copied()) - 1.0,
            tol.eq_linear,
        );
        for tr in canonical_components() {
            if slot_count(tr) > 1 {
                let r = slot_normalisation(tr, self.expanded.g(tr)) - 1.0;
                eq(format!("D2[{tr}]"), Class::Standard, true, r, tol.eq_linear);
            }
        }
        for (n, r) in self.c3_residuals().into_iter().enumerate() {
            eq(
                format!("C3[{}]", n + 1),
                Class::TheoremValidity,
                false,
                r,
                tol.eq_entropy,
            );
        }
        for (tr, r) in self.d4_residuals() {
            eq(format!("D4[{tr}]"), Class::TheoremValidity, false, r, tol.eq_entropy);
        }
        let (gname, g) = self.global_condition(mode);
        let (cname, c) = self.component_condition(mode);
        for (name, residual) in [(gname, g), (cname, c), ("E1", self.e1()), ("E2", self.e2())] {
            entries.push(ConstraintEntry {
                name: name.into(),
                kind: Kind::Inequality,
                class: Class::Standard,
                linear: false,
                residual,
                satisfied: residual >= -tol.ineq,
                tolerance: tol.ineq,
            });
        }
        let mut structural = vec!["C2".to_string(), "D1".to_string()];
        structural.extend(
            canonical_components()
                .into_iter()
                .filter(|&tr| slot_count(tr) == 1)
                .map(|tr| format!("D2[{tr}]")),
        );
        ConstraintReport {
            mode,
            entries,
            structural,
        }
    }
}

pub fn evaluate(p: &ParameterSet, mode: Mode, tol: &Tolerances) -> ConstraintReport {
    Evaluation::of(p).report(mode, tol)
}
