//! Index bookkeeping for the fourth tensor power.
//!
//! Components of the fourth power are labelled by triples summing to 8, and
//! each component splits into subcomponents that are tensor products of two
//! second-power blocks labelled by triples summing to 4. Only ten component
//! layouts are written down explicitly (those with `i <= j <= k`); every
//! other component is obtained by permuting roles.

use std::fmt;

use crate::error::Error;

/// A triple `(i, j, k)` of small non-negative integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleIndex {
    pub i: u8,
    pub j: u8,
    pub k: u8,
}

impl TripleIndex {
    pub const fn new(i: u8, j: u8, k: u8) -> Self {
        Self { i, j, k }
    }

    pub const fn from_coords(c: [u8; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    pub const fn coords(self) -> [u8; 3] {
        [self.i, self.j, self.k]
    }

    pub const fn sum(self) -> u8 {
        self.i + self.j + self.k
    }

    pub fn has_zero(self) -> bool {
        self.i == 0 || self.j == 0 || self.k == 0
    }

    pub fn in_s4(self) -> bool {
        self.sum() == 4
    }

    pub fn in_s8(self) -> bool {
        self.sum() == 8
    }

    pub fn in_s8_bar(self) -> bool {
        self.in_s8() && !self.has_zero()
    }

    pub fn swap_yz(self) -> Self {
        Self::new(self.i, self.k, self.j)
    }

    /// `(i, min(j, k), max(j, k))`, the representative under the y/z symmetry.
    pub fn canonical_yz(self) -> Self {
        canonicalize_yz(self)
    }

    pub fn is_canonical_yz(self) -> bool {
        self.j <= self.k
    }

    /// Coordinates sorted non-decreasingly.
    pub fn sorted(self) -> Self {
        let mut c = self.coords();
        c.sort_unstable();
        Self::from_coords(c)
    }

    /// Coordinate-wise sum.
    pub fn plus(self, other: Self) -> Self {
        Self::new(self.i + other.i, self.j + other.j, self.k + other.k)
    }

    /// Coordinate-wise difference, `None` if any coordinate would be negative.
    pub fn minus(self, other: Self) -> Option<Self> {
        Some(Self::new(
            self.i.checked_sub(other.i)?,
            self.j.checked_sub(other.j)?,
            self.k.checked_sub(other.k)?,
        ))
    }

    /// Position in the lexicographic enumeration of `S8`.
    ///
    /// # Panics
    /// If the triple does not sum to 8.
    pub fn s8_position(self) -> usize {
        assert!(self.in_s8(), "{self} is not in S8");
        lex_position(self, 8)
    }

    /// Position in the lexicographic enumeration of `S4`.
    ///
    /// # Panics
    /// If the triple does not sum to 4.
    pub fn s4_position(self) -> usize {
        assert!(self.in_s4(), "{self} is not in S4");
        lex_position(self, 4)
    }
}

fn lex_position(t: TripleIndex, n: u8) -> usize {
    let n = n as usize;
    let i = t.i as usize;
    // rows for i' < i hold (n - i' + 1) triples each
    let before: usize = (0..i).map(|r| n - r + 1).sum();
    before + t.j as usize
}

impl fmt::Display for TripleIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.i, self.j, self.k)
    }
}

/// Shorthand used by the transcribed tables.
pub(crate) const fn t(i: u8, j: u8, k: u8) -> TripleIndex {
    TripleIndex::new(i, j, k)
}

/// The index sets used throughout the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSet {
    /// `i + j + k = 4`.
    S4,
    /// `i + j + k = 8`.
    S8,
    /// `i + j + k = 8` with all coordinates positive.
    S8Bar,
    /// `i + j + k = 8` with `i <= j <= k`.
    S8Prec,
    /// `S8Bar` with `i <= j <= k`.
    S8BarPrec,
}

pub const S4_LEN: usize = 15;
pub const S8_LEN: usize = 45;

/// Lists the members of `set` in lexicographic order.
pub fn enumerate(set: IndexSet) -> Vec<TripleIndex> {
    let n = match set {
        IndexSet::S4 => 4,
        _ => 8,
    };
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let tr = TripleIndex::new(i, j, n - i - j);
            let keep = match set {
                IndexSet::S4 | IndexSet::S8 => true,
                IndexSet::S8Bar => !tr.has_zero(),
                IndexSet::S8Prec => tr.i <= tr.j && tr.j <= tr.k,
                IndexSet::S8BarPrec => !tr.has_zero() && tr.i <= tr.j && tr.j <= tr.k,
            };
            if keep {
                out.push(tr);
            }
        }
    }
    out
}

pub fn canonicalize_yz(tr: TripleIndex) -> TripleIndex {
    if tr.j <= tr.k {
        tr
    } else {
        tr.swap_yz()
    }
}

/// The 25 members of `S8` with `j <= k`; these carry the free `alpha` values.
pub fn canonical_components() -> Vec<TripleIndex> {
    enumerate(IndexSet::S8)
        .into_iter()
        .filter(|tr| tr.is_canonical_yz())
        .collect()
}

/// A permutation of the three roles `x, y, z`.
///
/// `roles[m]` is the role of the component that receives the `m`-th
/// coordinate of the sorted representative. Sorting is stable, so ties keep
/// their original role order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RolePermutation {
    roles: [usize; 3],
}

impl RolePermutation {
    pub const IDENTITY: Self = Self { roles: [0, 1, 2] };

    pub fn new(roles: [usize; 3]) -> Result<Self, Error> {
        let mut seen = [false; 3];
        for &r in &roles {
            if r > 2 || seen[r] {
                return Err(Error::InvalidPermutation(roles));
            }
            seen[r] = true;
        }
        Ok(Self { roles })
    }

    /// The permutation that sorts `tr` non-decreasingly (stable).
    pub fn sorting(tr: TripleIndex) -> Self {
        let c = tr.coords();
        let mut roles = [0usize, 1, 2];
        roles.sort_by_key(|&r| c[r]);
        Self { roles }
    }

    pub fn roles(&self) -> [usize; 3] {
        self.roles
    }

    /// Role of the target that holds sorted coordinate `m`.
    pub fn role_of(&self, m: usize) -> usize {
        self.roles[m]
    }

    /// Sorted-coordinate index that lands on role `r`.
    pub fn source_of(&self, r: usize) -> usize {
        self.roles.iter().position(|&x| x == r).expect("bijective")
    }

    /// Moves a triple expressed in sorted-representative coordinates into the
    /// roles of the target component.
    pub fn apply(&self, canonical: TripleIndex) -> TripleIndex {
        let c = canonical.coords();
        let mut out = [0u8; 3];
        for m in 0..3 {
            out[self.roles[m]] = c[m];
        }
        TripleIndex::from_coords(out)
    }

    /// Inverse of [`apply`](Self::apply).
    pub fn unapply(&self, tr: TripleIndex) -> TripleIndex {
        let c = tr.coords();
        let mut out = [0u8; 3];
        for m in 0..3 {
            out[m] = c[self.roles[m]];
        }
        TripleIndex::from_coords(out)
    }
}

/// One subcomponent `T_left (x) T_right` of a component, with the share of
/// its slot parameter it receives (`1` or `1/2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateEntry {
    pub left: TripleIndex,
    pub right: TripleIndex,
    /// 1-based slot number `l` of the parameter `g_{ijkl}`.
    pub slot: u8,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcomponentTemplate {
    pub component: TripleIndex,
    pub entries: Vec<TemplateEntry>,
}

impl SubcomponentTemplate {
    pub fn slot_count(&self) -> usize {
        self.entries.iter().map(|e| e.slot as usize).max().unwrap_or(0)
    }

    /// Sum of shares per slot; these are the coefficients of the slot
    /// normalisation constraint.
    pub fn multiplicities(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.slot_count()];
        for e in &self.entries {
            m[e.slot as usize - 1] += e.share;
        }
        m
    }
}

const H: f64 = 0.5;
const W: f64 = 1.0;

type RawEntry = (TripleIndex, TripleIndex, u8, f64);

// Subcomponent layouts for the ten sorted components. Left factor, right
// factor, slot, share.
const TEMPLATE_008: &[RawEntry] = &[(t(0, 0, 4), t(0, 0, 4), 1, W)];
const TEMPLATE_017: &[RawEntry] = &[
    (t(0, 0, 4), t(0, 1, 3), 1, H),
    (t(0, 1, 3), t(0, 0, 4), 1, H),
];
const TEMPLATE_026: &[RawEntry] = &[
    (t(0, 0, 4), t(0, 2, 2), 1, H),
    (t(0, 2, 2), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(0, 1, 3), 2, W),
];
const TEMPLATE_035: &[RawEntry] = &[
    (t(0, 0, 4), t(0, 3, 1), 1, H),
    (t(0, 3, 1), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(0, 2, 2), 2, H),
    (t(0, 2, 2), t(0, 1, 3), 2, H),
];
const TEMPLATE_044: &[RawEntry] = &[
    (t(0, 0, 4), t(0, 4, 0), 1, H),
    (t(0, 4, 0), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(0, 3, 1), 2, H),
    (t(0, 3, 1), t(0, 1, 3), 2, H),
    (t(0, 2, 2), t(0, 2, 2), 3, W),
];
const TEMPLATE_116: &[RawEntry] = &[
    (t(0, 0, 4), t(1, 1, 2), 1, H),
    (t(1, 1, 2), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(1, 0, 3), 2, H),
    (t(1, 0, 3), t(0, 1, 3), 2, H),
];
const TEMPLATE_125: &[RawEntry] = &[
    (t(0, 0, 4), t(1, 2, 1), 1, H),
    (t(1, 2, 1), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(1, 1, 2), 2, H),
    (t(1, 1, 2), t(0, 1, 3), 2, H),
    (t(1, 0, 3), t(0, 2, 2), 3, H),
    (t(0, 2, 2), t(1, 0, 3), 3, H),
];
const TEMPLATE_134: &[RawEntry] = &[
    (t(0, 0, 4), t(1, 3, 0), 1, H),
    (t(1, 3, 0), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(1, 2, 1), 2, H),
    (t(1, 2, 1), t(0, 1, 3), 2, H),
    (t(1, 0, 3), t(0, 3, 1), 3, H),
    (t(0, 3, 1), t(1, 0, 3), 3, H),
    (t(0, 2, 2), t(1, 1, 2), 4, H),
    (t(1, 1, 2), t(0, 2, 2), 4, H),
];
const TEMPLATE_224: &[RawEntry] = &[
    (t(0, 0, 4), t(2, 2, 0), 1, H),
    (t(2, 2, 0), t(0, 0, 4), 1, H),
    (t(0, 1, 3), t(2, 1, 1), 2, H),
    (t(2, 1, 1), t(0, 1, 3), 2, H),
    (t(1, 0, 3), t(1, 2, 1), 2, H),
    (t(1, 2, 1), t(1, 0, 3), 2, H),
    (t(0, 2, 2), t(2, 0, 2), 3, H),
    (t(2, 0, 2), t(0, 2, 2), 3, H),
    (t(1, 1, 2), t(1, 1, 2), 4, W),
];
const TEMPLATE_233: &[RawEntry] = &[
    (t(0, 1, 3), t(2, 2, 0), 1, H),
    (t(2, 2, 0), t(0, 1, 3), 1, H),
    (t(1, 0, 3), t(1, 3, 0), 2, H),
    (t(1, 3, 0), t(1, 0, 3), 2, H),
    (t(0, 2, 2), t(2, 1, 1), 3, H),
    (t(2, 1, 1), t(0, 2, 2), 3, H),
    (t(2, 0, 2), t(0, 3, 1), 1, H),
    (t(0, 3, 1), t(2, 0, 2), 1, H),
    (t(1, 1, 2), t(1, 2, 1), 4, H),
    (t(1, 2, 1), t(1, 1, 2), 4, H),
];

fn canonical_raw(sorted: TripleIndex) -> &'static [RawEntry] {
    match sorted.coords() {
        [0, 0, 8] => TEMPLATE_008,
        [0, 1, 7] => TEMPLATE_017,
        [0, 2, 6] => TEMPLATE_026,
        [0, 3, 5] => TEMPLATE_035,
        [0, 4, 4] => TEMPLATE_044,
        [1, 1, 6] => TEMPLATE_116,
        [1, 2, 5] => TEMPLATE_125,
        [1, 3, 4] => TEMPLATE_134,
        [2, 2, 4] => TEMPLATE_224,
        [2, 3, 3] => TEMPLATE_233,
        _ => unreachable!("{sorted} is not a sorted member of S8"),
    }
}

/// Number of `g` slots of component `tr`.
pub fn slot_count(tr: TripleIndex) -> usize {
    match tr.sorted().coords() {
        [0, 0, 8] | [0, 1, 7] => 1,
        [0, 2, 6] | [0, 3, 5] | [1, 1, 6] => 2,
        [0, 4, 4] | [1, 2, 5] => 3,
        _ => 4,
    }
}

/// The subcomponent layout of component `tr`, permuted from its sorted
/// representative.
pub fn subcomponent_template(tr: TripleIndex) -> Result<SubcomponentTemplate, Error> {
    if !tr.in_s8() {
        return Err(Error::NotInSet {
            triple: tr,
            set: "S8",
        });
    }
    let perm = RolePermutation::sorting(tr);
    let entries = canonical_raw(tr.sorted())
        .iter()
        .map(|&(left, right, slot, share)| TemplateEntry {
            left: perm.apply(left),
            right: perm.apply(right),
            slot,
            share,
        })
        .collect();
    Ok(SubcomponentTemplate {
        component: tr,
        entries,
    })
}

/// All `(i, j, k, l)` keys of the free `g` parameters, in lexicographic order.
pub fn canonical_slots() -> Vec<(TripleIndex, u8)> {
    canonical_components()
        .into_iter()
        .flat_map(|tr| (1..=slot_count(tr) as u8).map(move |l| (tr, l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn brute(n: u8, pred: impl Fn(u8, u8, u8) -> bool) -> Vec<TripleIndex> {
        let mut v = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    if i + j + k == n && pred(i, j, k) {
                        v.push(t(i, j, k));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn set_sizes_match_enumeration() {
        assert_eq!(enumerate(IndexSet::S4), brute(4, |_, _, _| true));
        assert_eq!(enumerate(IndexSet::S8).len(), 45);
        assert_eq!(enumerate(IndexSet::S8Bar).len(), 21);
        assert_eq!(
            enumerate(IndexSet::S8Bar),
            brute(8, |i, j, k| i > 0 && j > 0 && k > 0)
        );
        assert_eq!(enumerate(IndexSet::S8BarPrec).len(), 5);
        let prec: Vec<String> = enumerate(IndexSet::S8Prec)
            .iter()
            .map(|x| x.to_string())
            .collect();
        assert_eq!(
            prec,
            ["008", "017", "026", "035", "044", "116", "125", "134", "224", "233"]
        );
    }

    #[test]
    fn positions_follow_enumeration_order() {
        for (n, tr) in enumerate(IndexSet::S8).into_iter().enumerate() {
            assert_eq!(tr.s8_position(), n);
        }
        for (n, tr) in enumerate(IndexSet::S4).into_iter().enumerate() {
            assert_eq!(tr.s4_position(), n);
        }
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize_yz(t(0, 7, 1)), t(0, 1, 7));
        assert_eq!(canonicalize_yz(t(1, 1, 6)), t(1, 1, 6));
        assert_eq!(canonicalize_yz(t(5, 0, 3)), t(5, 0, 3));
        for tr in enumerate(IndexSet::S8) {
            let c = canonicalize_yz(tr);
            assert_eq!(canonicalize_yz(c), c);
        }
        assert_eq!(canonical_components().len(), 25);
        assert_eq!(canonical_slots().len(), 64);
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(RolePermutation::new([0, 0, 2]).is_err());
        assert!(RolePermutation::new([2, 0, 1]).is_ok());
    }

    #[test]
    fn sorting_permutation_round_trips() {
        for tr in enumerate(IndexSet::S8) {
            let p = RolePermutation::sorting(tr);
            assert_eq!(p.unapply(tr), tr.sorted());
            assert_eq!(p.apply(tr.sorted()), tr);
        }
    }

    #[test]
    fn template_017() {
        let tpl = subcomponent_template(t(0, 1, 7)).unwrap();
        assert_eq!(
            tpl.entries,
            vec![
                TemplateEntry { left: t(0, 0, 4), right: t(0, 1, 3), slot: 1, share: 0.5 },
                TemplateEntry { left: t(0, 1, 3), right: t(0, 0, 4), slot: 1, share: 0.5 },
            ]
        );
    }

    #[test]
    fn template_503_matches_worked_example() {
        let tpl = subcomponent_template(t(5, 0, 3)).unwrap();
        let got: Vec<_> = tpl
            .entries
            .iter()
            .map(|e| (e.left, e.right, e.slot, e.share))
            .collect();
        assert_eq!(
            got,
            vec![
                (t(4, 0, 0), t(1, 0, 3), 1, 0.5),
                (t(1, 0, 3), t(4, 0, 0), 1, 0.5),
                (t(3, 0, 1), t(2, 0, 2), 2, 0.5),
                (t(2, 0, 2), t(3, 0, 1), 2, 0.5),
            ]
        );
    }

    #[test]
    fn template_233_slot_pattern() {
        let tpl = subcomponent_template(t(2, 3, 3)).unwrap();
        let slots: Vec<u8> = tpl.entries.iter().map(|e| e.slot).collect();
        assert_eq!(slots, [1, 1, 2, 2, 3, 3, 1, 1, 4, 4]);
        assert!(tpl.entries.iter().all(|e| e.share == 0.5));
    }

    #[test]
    fn template_rejects_non_s8() {
        assert!(subcomponent_template(t(1, 1, 1)).is_err());
    }

    // Every pair of S4 factors adding up to the component must appear exactly
    // once, and nothing else.
    #[test]
    fn templates_cover_all_factor_pairs() {
        let s4 = enumerate(IndexSet::S4);
        for tr in enumerate(IndexSet::S8) {
            let tpl = subcomponent_template(tr).unwrap();
            let mut expected = BTreeSet::new();
            for &l in &s4 {
                for &r in &s4 {
                    if l.plus(r) == tr {
                        expected.insert((l, r));
                    }
                }
            }
            let got: BTreeSet<_> = tpl.entries.iter().map(|e| (e.left, e.right)).collect();
            assert_eq!(got.len(), tpl.entries.len(), "duplicate entry in {tr}");
            assert_eq!(got, expected, "layout of {tr}");
            for e in &tpl.entries {
                assert_eq!(e.left.plus(e.right), tr);
            }
        }
    }

    #[test]
    fn multiplicities_match_normalisation_weights() {
        let m = |a, b, c| subcomponent_template(t(a, b, c)).unwrap().multiplicities();
        assert_eq!(m(0, 0, 8), vec![1.0]);
        assert_eq!(m(0, 2, 6), vec![1.0, 1.0]);
        assert_eq!(m(4, 4, 0), vec![1.0, 1.0, 1.0]);
        assert_eq!(m(4, 2, 2), vec![1.0, 2.0, 1.0, 1.0]);
        assert_eq!(m(3, 2, 3), vec![2.0, 1.0, 1.0, 1.0]);
        for tr in enumerate(IndexSet::S8) {
            assert_eq!(m(tr.i, tr.j, tr.k).len(), slot_count(tr));
        }
    }

    // Swapping y and z of a component swaps y and z in its layout, slot for
    // slot.
    #[test]
    fn yz_swap_commutes_with_templates() {
        for tr in enumerate(IndexSet::S8) {
            let a = subcomponent_template(tr).unwrap();
            let b = subcomponent_template(tr.swap_yz()).unwrap();
            let sa: BTreeSet<_> = a
                .entries
                .iter()
                .map(|e| (e.left.swap_yz(), e.right.swap_yz(), e.slot))
                .collect();
            let sb: BTreeSet<_> = b.entries.iter().map(|e| (e.left, e.right, e.slot)).collect();
            assert_eq!(sa, sb, "component {tr}");
        }
    }
}
