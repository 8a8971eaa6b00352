//! Parameter assignments and the line-oriented certificate file format.
//!
//! ```text
//! # comment
//! q = 5
//! kappa = 2
//! b = 0.9365556371
//! btilde = 0.9966910575
//! alpha[0,1,7] = 0.0001862683
//! g[0,2,6,1] = 0.3506501120
//! ```
//!
//! Only the `j <= k` half of the `alpha` and `g` keys is stored. A mirrored
//! key (`j > k`) is accepted when it agrees with its partner, or stands in for
//! it when the partner is absent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::combinatorics::{
    canonical_components, canonical_slots, slot_count, TripleIndex, S8_LEN,
};
use crate::error::Error;

/// Default floor of the search box for every variable.
pub const DEFAULT_LOWER_BOUND: f64 = 1e-7;

/// Mirror values may differ by at most this much.
const MIRROR_TOLERANCE: f64 = 1e-12;

/// A complete variable assignment: `q`, `kappa`, `b`, `b~`, one `alpha` per
/// component and one `g` per subcomponent slot, stored under the y/z
/// symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub q: u32,
    pub kappa: f64,
    pub b: f64,
    pub btilde: f64,
    alpha: BTreeMap<TripleIndex, f64>,
    g: BTreeMap<(TripleIndex, u8), f64>,
}

impl ParameterSet {
    /// Builds a parameter set from canonical (`j <= k`) keys only.
    pub fn new(
        q: u32,
        kappa: f64,
        b: f64,
        btilde: f64,
        alpha: BTreeMap<TripleIndex, f64>,
        g: BTreeMap<(TripleIndex, u8), f64>,
    ) -> Result<Self, Error> {
        if q == 0 {
            return Err(Error::Syntax {
                line: 0,
                message: "q must be a positive integer".into(),
            });
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Syntax {
                line: 0,
                message: format!("kappa must be a non-negative real, got {kappa}"),
            });
        }
        check_unit("b", b, 0)?;
        check_unit("btilde", btilde, 0)?;
        for tr in canonical_components() {
            let v = *alpha
                .get(&tr)
                .ok_or_else(|| Error::MissingKey(alpha_key(tr)))?;
            check_unit(&alpha_key(tr), v, 0)?;
        }
        if let Some(extra) = alpha.keys().find(|tr| !(tr.in_s8() && tr.is_canonical_yz())) {
            return Err(Error::UnknownKey {
                line: 0,
                key: alpha_key(*extra),
            });
        }
        for (tr, l) in canonical_slots() {
            let v = *g
                .get(&(tr, l))
                .ok_or_else(|| Error::MissingKey(g_key(tr, l)))?;
            check_unit(&g_key(tr, l), v, 0)?;
        }
        if let Some(&(tr, l)) = g.keys().find(|(tr, l)| {
            !(tr.in_s8() && tr.is_canonical_yz() && *l >= 1 && (*l as usize) <= slot_count(*tr))
        }) {
            return Err(Error::UnknownKey {
                line: 0,
                key: g_key(tr, l),
            });
        }
        Ok(Self {
            q,
            kappa,
            b,
            btilde,
            alpha,
            g,
        })
    }

    /// `alpha` of any member of `S8`, mirrored keys included.
    pub fn alpha(&self, tr: TripleIndex) -> f64 {
        self.alpha[&tr.canonical_yz()]
    }

    /// `g` of any member of `S8` and slot `l` (1-based).
    pub fn g(&self, tr: TripleIndex, l: u8) -> f64 {
        self.g[&(tr.canonical_yz(), l)]
    }

    pub fn alpha_map(&self) -> &BTreeMap<TripleIndex, f64> {
        &self.alpha
    }

    pub fn g_map(&self) -> &BTreeMap<(TripleIndex, u8), f64> {
        &self.g
    }

    pub fn set_alpha(&mut self, tr: TripleIndex, v: f64) {
        self.alpha.insert(tr.canonical_yz(), v);
    }

    pub fn set_g(&mut self, tr: TripleIndex, l: u8, v: f64) {
        self.g.insert((tr.canonical_yz(), l), v);
    }

    /// Names of the variables at or below `lower_bound`.
    pub fn boundary_active(&self, lower_bound: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (n, v) in [("b", self.b), ("btilde", self.btilde)] {
            if v <= lower_bound {
                out.push(n.to_string());
            }
        }
        out.extend(
            self.alpha
                .iter()
                .filter(|(_, &v)| v <= lower_bound)
                .map(|(tr, _)| alpha_key(*tr)),
        );
        out.extend(
            self.g
                .iter()
                .filter(|(_, &v)| v <= lower_bound)
                .map(|((tr, l), _)| g_key(*tr, *l)),
        );
        out
    }

    /// Dense view over all 45 components.
    pub fn expand(&self) -> Expanded {
        let mut alpha = [0.0; S8_LEN];
        let mut g = [[0.0; 4]; S8_LEN];
        for tr in crate::combinatorics::enumerate(crate::combinatorics::IndexSet::S8) {
            let n = tr.s8_position();
            alpha[n] = self.alpha(tr);
            for l in 1..=slot_count(tr) {
                g[n][l - 1] = self.g(tr, l as u8);
            }
        }
        Expanded {
            q: self.q,
            kappa: self.kappa,
            b: self.b,
            btilde: self.btilde,
            alpha,
            g,
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        parse(text)
    }

    pub fn serialize(&self) -> String {
        serialize(self)
    }
}

/// Every parameter mapped onto all of `S8`, including the mirrored
/// components, in lexicographic component order.
#[derive(Debug, Clone, PartialEq)]
pub struct Expanded {
    pub q: u32,
    pub kappa: f64,
    pub b: f64,
    pub btilde: f64,
    pub alpha: [f64; S8_LEN],
    /// `g[n][l - 1]`; unused slots are zero.
    pub g: [[f64; 4]; S8_LEN],
}

impl Expanded {
    pub fn alpha(&self, tr: TripleIndex) -> f64 {
        self.alpha[tr.s8_position()]
    }

    pub fn g(&self, tr: TripleIndex) -> &[f64] {
        &self.g[tr.s8_position()][..slot_count(tr)]
    }

    pub fn qf(&self) -> f64 {
        self.q as f64
    }
}

fn check_unit(key: &str, v: f64, line: usize) -> Result<(), Error> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            line,
            key: key.to_string(),
            value: v,
        })
    }
}

pub fn alpha_key(tr: TripleIndex) -> String {
    format!("alpha[{},{},{}]", tr.i, tr.j, tr.k)
}

pub fn g_key(tr: TripleIndex, l: u8) -> String {
    format!("g[{},{},{},{}]", tr.i, tr.j, tr.k, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Q,
    Kappa,
    B,
    Btilde,
    Alpha(TripleIndex),
    G(TripleIndex, u8),
}

fn parse_indices(body: &str, line: usize) -> Result<Vec<u8>, Error> {
    body.split(',')
        .map(|s| {
            s.trim().parse::<u8>().map_err(|_| Error::Syntax {
                line,
                message: format!("bad index `{}`", s.trim()),
            })
        })
        .collect()
}

fn parse_key(raw: &str, line: usize) -> Result<Key, Error> {
    let raw = raw.trim();
    match raw {
        "q" => return Ok(Key::Q),
        "kappa" => return Ok(Key::Kappa),
        "b" => return Ok(Key::B),
        "btilde" => return Ok(Key::Btilde),
        _ => {}
    }
    let (name, rest) = raw.split_once('[').ok_or_else(|| Error::UnknownKey {
        line,
        key: raw.to_string(),
    })?;
    let body = rest.strip_suffix(']').ok_or_else(|| Error::Syntax {
        line,
        message: format!("unterminated index in `{raw}`"),
    })?;
    let idx = parse_indices(body, line)?;
    let bad = || Error::UnknownKey {
        line,
        key: raw.to_string(),
    };
    match (name.trim(), idx.as_slice()) {
        ("alpha", &[i, j, k]) => {
            let tr = TripleIndex::new(i, j, k);
            if i.checked_add(j).and_then(|s| s.checked_add(k)) != Some(8) {
                return Err(bad());
            }
            Ok(Key::Alpha(tr))
        }
        ("g", &[i, j, k, l]) => {
            let tr = TripleIndex::new(i, j, k);
            if i.checked_add(j).and_then(|s| s.checked_add(k)) != Some(8)
                || l == 0
                || l as usize > slot_count(tr)
            {
                return Err(bad());
            }
            Ok(Key::G(tr, l))
        }
        _ => Err(bad()),
    }
}

fn key_name(k: Key) -> String {
    match k {
        Key::Q => "q".into(),
        Key::Kappa => "kappa".into(),
        Key::B => "b".into(),
        Key::Btilde => "btilde".into(),
        Key::Alpha(tr) => alpha_key(tr),
        Key::G(tr, l) => g_key(tr, l),
    }
}

fn mirror(k: Key) -> Key {
    match k {
        Key::Alpha(tr) => Key::Alpha(tr.canonical_yz()),
        Key::G(tr, l) => Key::G(tr.canonical_yz(), l),
        other => other,
    }
}

/// Parses a certificate file.
pub fn parse(text: &str) -> Result<ParameterSet, Error> {
    // canonical key -> (value, line, literal key)
    let mut seen: BTreeMap<Key, (f64, usize, Key)> = BTreeMap::new();
    let mut literal_keys: BTreeMap<Key, usize> = BTreeMap::new();
    let mut q: Option<u32> = None;

    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (lhs, rhs) = content.split_once('=').ok_or_else(|| Error::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = parse_key(lhs, line)?;
        if literal_keys.insert(key, line).is_some() {
            return Err(Error::DuplicateKey {
                line,
                key: key_name(key),
            });
        }
        let rhs = rhs.trim();
        if key == Key::Q {
            let v = rhs.parse::<u32>().map_err(|_| Error::Syntax {
                line,
                message: format!("q must be a positive integer, got `{rhs}`"),
            })?;
            if v == 0 {
                return Err(Error::Syntax {
                    line,
                    message: "q must be a positive integer".into(),
                });
            }
            q = Some(v);
            continue;
        }
        let value = rhs.parse::<f64>().map_err(|_| Error::Syntax {
            line,
            message: format!("bad number `{rhs}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::Syntax {
                line,
                message: format!("bad number `{rhs}`"),
            });
        }
        match key {
            Key::Kappa => {
                if value < 0.0 {
                    return Err(Error::Syntax {
                        line,
                        message: format!("kappa must be non-negative, got {value}"),
                    });
                }
            }
            _ => check_unit(&key_name(key), value, line)?,
        }
        let canon = mirror(key);
        if let Some(&(prev, prev_line, prev_key)) = seen.get(&canon) {
            if (prev - value).abs() > MIRROR_TOLERANCE {
                return Err(Error::MirrorConflict {
                    line: line.max(prev_line),
                    key: key_name(key),
                    value,
                    mirror: key_name(prev_key),
                    mirror_value: prev,
                });
            }
            // keep the value written under the canonical key
            if key == canon {
                seen.insert(canon, (value, line, key));
            }
        } else {
            seen.insert(canon, (value, line, key));
        }
    }

    let scalar = |k: Key| {
        seen.get(&k)
            .map(|v| v.0)
            .ok_or_else(|| Error::MissingKey(key_name(k)))
    };
    let q = q.ok_or_else(|| Error::MissingKey("q".into()))?;
    let kappa = scalar(Key::Kappa)?;
    let b = scalar(Key::B)?;
    let btilde = scalar(Key::Btilde)?;
    let mut alpha = BTreeMap::new();
    for tr in canonical_components() {
        alpha.insert(tr, scalar(Key::Alpha(tr))?);
    }
    let mut g = BTreeMap::new();
    for (tr, l) in canonical_slots() {
        g.insert((tr, l), scalar(Key::G(tr, l))?);
    }
    ParameterSet::new(q, kappa, b, btilde, alpha, g)
}

/// Formats `v` so that it parses back to the same double, with at least 12
/// significant digits.
pub fn format_value(v: f64) -> String {
    let mut s = format!("{v}");
    let digits: usize = s
        .chars()
        .filter(|c| c.is_ascii_digit())
        .collect::<String>()
        .trim_start_matches('0')
        .len();
    if digits < 12 {
        if !s.contains('.') {
            s.push('.');
        }
        // a zero value has no significant digits to anchor; pad anyway
        s.extend(std::iter::repeat('0').take(12 - digits.max(if v == 0.0 { 1 } else { 0 })));
    }
    s
}

/// Writes the certificate file format, keys in lexicographic order.
pub fn serialize(p: &ParameterSet) -> String {
    let mut out = String::new();
    writeln!(out, "q = {}", p.q).unwrap();
    writeln!(out, "kappa = {}", format_value(p.kappa)).unwrap();
    writeln!(out, "b = {}", format_value(p.b)).unwrap();
    writeln!(out, "btilde = {}", format_value(p.btilde)).unwrap();
    for (tr, v) in &p.alpha {
        writeln!(out, "{} = {}", alpha_key(*tr), format_value(*v)).unwrap();
    }
    for ((tr, l), v) in &p.g {
        writeln!(out, "{} = {}", g_key(*tr, *l), format_value(*v)).unwrap();
    }
    out
}
