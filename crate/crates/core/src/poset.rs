//! Finite posets, their upset lattices and filters over them.
//!
//! A poset has at most 64 elements; subsets are `u64` bitmasks over the
//! declaration order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mask = u64;

pub const MAX_POINTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poset {
    names: Vec<String>,
    /// `up[x]` is the principal upset of `x`.
    up: Vec<Mask>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPoset {
    pub elements: Vec<String>,
    #[serde(default)]
    pub le: Vec<(String, String)>,
}

fn bit(i: usize) -> Mask {
    1u64 << i
}

pub fn members(mask: Mask) -> impl Iterator<Item = usize> {
    (0..MAX_POINTS).filter(move |&i| mask & bit(i) != 0)
}

impl Poset {
    fn check_names(names: &[String]) -> Result<()> {
        if names.is_empty() {
            return Err(Error::Poset("no elements".into()));
        }
        if names.len() > MAX_POINTS {
            return Err(Error::TooLarge(format!(
                "{} poset elements (at most {MAX_POINTS})",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Poset(format!("element `{n}` listed twice")));
            }
        }
        Ok(())
    }

    fn index_pairs(names: &[String], pairs: &[(String, String)]) -> Result<Vec<(usize, usize)>> {
        let idx = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::Poset(format!("unknown element `{s}`")))
        };
        pairs.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect()
    }

    /// Takes the full order relation and checks the axioms as given.
    pub fn from_order(names: Vec<String>, le: &[(String, String)]) -> Result<Poset> {
        Poset::check_names(&names)?;
        let n = names.len();
        let mut up = vec![0 as Mask; n];
        for (a, b) in Poset::index_pairs(&names, le)? {
            up[a] |= bit(b);
        }
        for (x, &u) in up.iter().enumerate() {
            if u & bit(x) == 0 {
                return Err(Error::Poset(format!(
                    "missing reflexive pair ({0},{0})",
                    names[x]
                )));
            }
        }
        for x in 0..n {
            for y in members(up[x]) {
                if x != y && up[y] & bit(x) != 0 {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    return Err(Error::Poset(format!(
                        "antisymmetry violation ({},{})",
                        names[a], names[b]
                    )));
                }
            }
        }
        for x in 0..n {
            for y in members(up[x]) {
                for z in members(up[y]) {
                    if up[x] & bit(z) == 0 {
                        return Err(Error::Poset(format!(
                            "transitivity gap ({},{},{})",
                            names[x], names[y], names[z]
                        )));
                    }
                }
            }
        }
        Ok(Poset { names, up })
    }

    /// Reflexive-transitive closure of the given pairs; fails on cycles.
    pub fn from_cover(names: Vec<String>, le: &[(String, String)]) -> Result<Poset> {
        Poset::check_names(&names)?;
        let n = names.len();
        let mut up: Vec<Mask> = (0..n).map(bit).collect();
        for (a, b) in Poset::index_pairs(&names, le)? {
            up[a] |= bit(b);
        }
        loop {
            let mut changed = false;
            for x in 0..n {
                let mut acc = up[x];
                for y in members(up[x]) {
                    acc |= up[y];
                }
                if acc != up[x] {
                    up[x] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for x in 0..n {
            for y in members(up[x]) {
                if x < y && up[y] & bit(x) != 0 {
                    return Err(Error::Poset(format!(
                        "antisymmetry violation ({},{})",
                        names[x], names[y]
                    )));
                }
            }
        }
        Ok(Poset { names, up })
    }

    /// The discrete order on `names`.
    pub fn id_poset(names: Vec<String>) -> Result<Poset> {
        Poset::from_cover(names, &[])
    }

    /// The chain `names[0] < names[1] < ...`.
    pub fn chain(names: Vec<String>) -> Result<Poset> {
        let pairs: Vec<(String, String)> = names
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        Poset::from_cover(names, &pairs)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn element_or_err(&self, name: &str) -> Result<usize> {
        self.element(name)
            .ok_or_else(|| Error::Poset(format!("unknown element `{name}`")))
    }

    #[inline]
    pub fn le(&self, x: usize, y: usize) -> bool {
        self.up[x] & bit(y) != 0
    }

    pub fn up_of(&self, x: usize) -> Mask {
        self.up[x]
    }

    pub fn down_of(&self, x: usize) -> Mask {
        (0..self.len())
            .filter(|&y| self.le(y, x))
            .fold(0, |acc, y| acc | bit(y))
    }

    pub fn full(&self) -> Mask {
        if self.len() == 64 {
            u64::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    pub fn is_upset(&self, v: Mask) -> bool {
        v & !self.full() == 0 && members(v).all(|x| self.up[x] & !v == 0)
    }

    pub fn upset_closure(&self, v: Mask) -> Mask {
        members(v).fold(0, |acc, x| acc | self.up[x])
    }

    /// Minimal elements of a subset, in index order.
    pub fn minimal(&self, v: Mask) -> Vec<usize> {
        members(v)
            .filter(|&x| members(v).all(|y| y == x || !self.le(y, x)))
            .collect()
    }

    /// Maximal elements of a subset, in index order.
    pub fn maximal(&self, v: Mask) -> Vec<usize> {
        members(v)
            .filter(|&x| members(v).all(|y| y == x || !self.le(x, y)))
            .collect()
    }

    fn is_chain_mask(&self, v: Mask) -> bool {
        members(v).all(|x| members(v).all(|y| self.le(x, y) || self.le(y, x)))
    }

    pub fn is_chain(&self) -> bool {
        self.is_chain_mask(self.full())
    }

    /// Every principal downset is a chain (finiteness gives well-order).
    pub fn is_wellfounded_forest(&self) -> bool {
        (0..self.len()).all(|x| self.is_chain_mask(self.down_of(x)))
    }

    /// A point whose principal downset is not a chain, with two incomparable
    /// elements below it.
    pub fn forest_violation(&self) -> Option<(usize, usize, usize)> {
        for x in 0..self.len() {
            let d = self.down_of(x);
            for a in members(d) {
                for b in members(d) {
                    if a < b && !self.le(a, b) && !self.le(b, a) {
                        return Some((x, a, b));
                    }
                }
            }
        }
        None
    }

    /// Immediate predecessor of `x` in a forest, if any.
    pub fn parent(&self, x: usize) -> Option<usize> {
        let below = self.down_of(x) & !bit(x);
        self.maximal(below).into_iter().next()
    }

    /// All upsets, ordered by bitmask value.
    pub fn upsets(&self) -> Vec<Mask> {
        fn go(p: &Poset, i: usize, inn: Mask, out: Mask, acc: &mut Vec<Mask>) {
            if i == p.len() {
                acc.push(inn);
                return;
            }
            let above_out = p.up[i] & out != 0;
            let below_in = members(inn).any(|y| p.le(y, i));
            if !above_out {
                go(p, i + 1, inn | bit(i), out, acc);
            }
            if !below_in {
                go(p, i + 1, inn, out | bit(i), acc);
            }
        }
        let mut acc = Vec::new();
        go(self, 0, 0, 0, &mut acc);
        acc.sort_unstable();
        acc
    }

    pub fn format_set(&self, v: Mask) -> String {
        let parts: Vec<&str> = members(v).map(|x| self.name(x)).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn to_raw(&self) -> RawPoset {
        let mut le = Vec::new();
        for x in 0..self.len() {
            for y in members(self.up[x]) {
                if x != y && self.parent(y).is_none_or(|_| self.covers(x, y)) {
                    le.push((self.names[x].clone(), self.names[y].clone()));
                }
            }
        }
        RawPoset {
            elements: self.names.clone(),
            le,
        }
    }

    /// `x < y` with nothing strictly between.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        x != y
            && self.le(x, y)
            && !(0..self.len()).any(|z| z != x && z != y && self.le(x, z) && self.le(z, y))
    }
}

pub fn validate_poset(raw: &RawPoset) -> Result<Poset> {
    Poset::from_cover(raw.elements.clone(), &raw.le)
}

/// A family of upsets, kept sorted by bitmask.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Filter {
    members: Vec<Mask>,
}

impl Filter {
    /// Sorts and deduplicates; membership checks are the caller's concern.
    pub fn from_masks(mut masks: Vec<Mask>) -> Filter {
        masks.sort_unstable();
        masks.dedup();
        Filter { members: masks }
    }

    /// `{ V in Up(P) : w ⊆ V }`.
    pub fn principal(p: &Poset, w: Mask) -> Filter {
        Filter::from_masks(p.upsets().into_iter().filter(|v| v & w == w).collect())
    }

    pub fn members(&self) -> &[Mask] {
        &self.members
    }

    pub fn contains(&self, v: Mask) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The intersection of all members.
    pub fn least(&self) -> Option<Mask> {
        self.members.iter().copied().reduce(|a, b| a & b)
    }

    pub fn is_proper(&self) -> bool {
        !self.contains(0)
    }

    pub fn to_lists(&self, p: &Poset) -> Vec<Vec<String>> {
        self.members
            .iter()
            .map(|&v| members(v).map(|x| p.name(x).to_string()).collect())
            .collect()
    }

    /// `F_x` for point filters, `improper`, or `up{...}` with the least member.
    pub fn label(&self, p: &Poset) -> String {
        match self.least() {
            None => "empty".into(),
            Some(0) => "improper".into(),
            Some(w) => {
                let mins = p.minimal(w);
                if mins.len() == 1 && p.up_of(mins[0]) == w {
                    format!("F_{}", p.name(mins[0]))
                } else {
                    format!("up{}", p.format_set(w))
                }
            }
        }
    }

    pub fn format(&self, p: &Poset) -> String {
        let parts: Vec<String> = self.members.iter().map(|&v| p.format_set(v)).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.members)
    }
}

fn check_upsets(p: &Poset, family: &[Mask]) -> Result<()> {
    if let Some(&v) = family.iter().find(|&&v| !p.is_upset(v)) {
        return Err(Error::NotUpset(p.format_set(v & p.full())));
    }
    Ok(())
}

/// Why `family` fails to be a filter, if it does.
pub fn filter_violation(p: &Poset, family: &[Mask]) -> Result<Option<String>> {
    check_upsets(p, family)?;
    let f = Filter::from_masks(family.to_vec());
    if f.is_empty() {
        return Ok(Some("empty family".into()));
    }
    for &v in f.members() {
        for w in p.upsets() {
            if w & v == v && !f.contains(w) {
                return Ok(Some(format!(
                    "{} contains {} but is missing its superset {}",
                    f.format(p),
                    p.format_set(v),
                    p.format_set(w)
                )));
            }
        }
    }
    for &v in f.members() {
        for &w in f.members() {
            if !f.contains(v & w) {
                return Ok(Some(format!(
                    "{} ∩ {} missing",
                    p.format_set(v),
                    p.format_set(w)
                )));
            }
        }
    }
    Ok(None)
}

pub fn is_filter(p: &Poset, family: &[Mask]) -> Result<bool> {
    Ok(filter_violation(p, family)?.is_none())
}

/// Why `family` fails to be a prime filter, if it does.
pub fn prime_violation(p: &Poset, family: &[Mask]) -> Result<Option<String>> {
    if let Some(v) = filter_violation(p, family)? {
        return Ok(Some(v));
    }
    let f = Filter::from_masks(family.to_vec());
    if !f.is_proper() {
        return Ok(Some("improper: contains the empty upset".into()));
    }
    let ups = p.upsets();
    for (i, &v) in ups.iter().enumerate() {
        for &w in &ups[i..] {
            if f.contains(v | w) && !f.contains(v) && !f.contains(w) {
                return Ok(Some(format!(
                    "{} ∪ {} is a member but neither part is",
                    p.format_set(v),
                    p.format_set(w)
                )));
            }
        }
    }
    Ok(None)
}

pub fn is_prime_filter(p: &Poset, family: &[Mask]) -> Result<bool> {
    Ok(prime_violation(p, family)?.is_none())
}

/// Sort key: indices of the minimal elements of the least member.
fn canonical_key(p: &Poset, f: &Filter) -> Vec<usize> {
    p.minimal(f.least().unwrap_or(0))
}

/// Every filter, the improper one included. Each is principal, generated by
/// its least member.
pub fn enumerate_filters(p: &Poset) -> Vec<Filter> {
    let mut out: Vec<Filter> = p
        .upsets()
        .into_iter()
        .map(|w| Filter::principal(p, w))
        .collect();
    out.sort_by_cached_key(|f| canonical_key(p, f));
    out
}

pub fn enumerate_prime_filters(p: &Poset) -> Vec<Filter> {
    enumerate_filters(p)
        .into_iter()
        .filter(|f| is_prime_filter(p, f.members()).unwrap_or(false))
        .collect()
}

/// `{ V in Up(P) : x in V }`.
pub fn point_filter(p: &Poset, x: usize) -> Filter {
    Filter::from_masks(p.upsets().into_iter().filter(|v| v & bit(x) != 0).collect())
}

/// The filter generated by the principal upsets of a chain.
pub fn principal_upset_filter(p: &Poset) -> Result<Filter> {
    if !p.is_chain() {
        return Err(Error::NotChain(
            "principal upset filter needs a linear order".into(),
        ));
    }
    let top_up = (0..p.len())
        .map(|x| p.up_of(x))
        .min_by_key(|m| m.count_ones())
        .unwrap_or(0);
    Ok(Filter::principal(p, top_up))
}

/// Reads a filter given as lists of element names and checks it.
pub fn parse_filter(p: &Poset, lists: &[Vec<String>]) -> Result<Filter> {
    let mut masks = Vec::new();
    for l in lists {
        let mut m = 0;
        for name in l {
            m |= bit(p.element_or_err(name)?);
        }
        masks.push(m);
    }
    if let Some(v) = filter_violation(p, &masks)? {
        return Err(Error::NotFilter(v));
    }
    Ok(Filter::from_masks(masks))
}
