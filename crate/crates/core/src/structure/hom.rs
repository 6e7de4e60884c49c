use std::ops::ControlFlow;

use serde::Serialize;

use super::{index_tuple, Elem, Structure};
use crate::error::{Error, Result};

/// A total map between universes. Which structures it relates is up to the
/// caller; [`is_homomorphism`] checks it against a concrete pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Hom {
    pub map: Vec<Elem>,
}

impl Hom {
    pub fn new(map: Vec<Elem>) -> Self {
        Hom { map }
    }

    pub fn identity(n: usize) -> Self {
        Hom {
            map: (0..n).collect(),
        }
    }

    #[inline]
    pub fn apply(&self, e: Elem) -> Elem {
        self.map[e]
    }

    /// Renders the map as `u->a, v->b` using element names.
    pub fn describe(&self, source: &Structure, target: &Structure) -> String {
        self.map
            .iter()
            .enumerate()
            .map(|(i, &j)| format!("{}->{}", source.name(i), target.name(j)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.map.iter().max().map_or(0, |m| m + 1)];
        self.map
            .iter()
            .all(|&e| !std::mem::replace(&mut seen[e], true))
    }

    pub fn image(&self) -> Vec<Elem> {
        let mut img = self.map.clone();
        img.sort_unstable();
        img.dedup();
        img
    }
}

/// `second ∘ first`.
pub fn compose(first: &Hom, second: &Hom) -> Hom {
    Hom {
        map: first.map.iter().map(|&e| second.map[e]).collect(),
    }
}

fn check_shape(m: &Structure, n: &Structure, h: &Hom) -> Result<()> {
    if !m.same_signature(n) {
        return Err(Error::SignatureMismatch);
    }
    if h.map.len() != m.len() {
        return Err(Error::PartialMap(format!(
            "map has {} entries for {} elements",
            h.map.len(),
            m.len()
        )));
    }
    if let Some(&bad) = h.map.iter().find(|&&e| e >= n.len()) {
        return Err(Error::PartialMap(format!(
            "value #{bad} outside the target"
        )));
    }
    Ok(())
}

/// First violated condition, if any.
pub(crate) fn hom_violation(m: &Structure, n: &Structure, h: &Hom) -> Result<Option<String>> {
    check_shape(m, n, h)?;
    let sig = m.signature();
    for (r, (name, _)) in sig.relations().iter().enumerate() {
        for t in m.tuples(r) {
            let img: Vec<Elem> = t.iter().map(|&e| h.map[e]).collect();
            if !n.holds(r, &img) {
                let src: Vec<&str> = t.iter().map(|&e| m.name(e)).collect();
                return Ok(Some(format!("{name}({}) not preserved", src.join(","))));
            }
        }
    }
    for (f, (name, arity)) in sig.functions().iter().enumerate() {
        for (i, &v) in m.function_table(f).iter().enumerate() {
            let args = index_tuple(m.len(), *arity, i);
            let img: Vec<Elem> = args.iter().map(|&e| h.map[e]).collect();
            if h.map[v] != n.apply(f, &img) {
                let src: Vec<&str> = args.iter().map(|&e| m.name(e)).collect();
                return Ok(Some(format!("{name}({}) does not commute", src.join(","))));
            }
        }
    }
    for (c, name) in sig.constants().iter().enumerate() {
        if h.map[m.constant(c)] != n.constant(c) {
            return Ok(Some(format!("constant {name} not preserved")));
        }
    }
    Ok(None)
}

pub fn is_homomorphism(m: &Structure, n: &Structure, h: &Hom) -> Result<bool> {
    Ok(hom_violation(m, n, h)?.is_none())
}

enum Constraint {
    Rel(usize, Vec<Elem>),
    Fun(usize, Vec<Elem>, Elem),
}

struct Search<'a> {
    m: &'a Structure,
    n: &'a Structure,
    /// Constraints that become checkable once element `i` is assigned.
    at: Vec<Vec<Constraint>>,
    /// Allowed targets per source element.
    candidates: Vec<Vec<Elem>>,
    injective: bool,
    map: Vec<Elem>,
    used: Vec<bool>,
    scratch: Vec<Elem>,
}

impl<'a> Search<'a> {
    fn new(m: &'a Structure, n: &'a Structure, injective: bool) -> Option<Self> {
        let sig = m.signature();
        for (r, (_, arity)) in sig.relations().iter().enumerate() {
            if *arity == 0 && m.holds(r, &[]) && !n.holds(r, &[]) {
                return None;
            }
        }
        let mut at: Vec<Vec<Constraint>> = (0..m.len()).map(|_| Vec::new()).collect();
        for (r, (_, arity)) in sig.relations().iter().enumerate() {
            if *arity == 0 {
                continue;
            }
            for t in m.tuples(r) {
                let last = *t.iter().max().expect("nonempty tuple");
                at[last].push(Constraint::Rel(r, t));
            }
        }
        for (f, (_, arity)) in sig.functions().iter().enumerate() {
            for (i, &v) in m.function_table(f).iter().enumerate() {
                let args = index_tuple(m.len(), *arity, i);
                let last = (*args.iter().max().expect("nonempty args")).max(v);
                at[last].push(Constraint::Fun(f, args, v));
            }
        }
        let mut candidates: Vec<Vec<Elem>> = vec![(0..n.len()).collect(); m.len()];
        for c in 0..sig.constants().len() {
            let src = m.constant(c);
            let tgt = n.constant(c);
            candidates[src].retain(|&e| e == tgt);
        }
        // A loop at a forces a loop at its image.
        for (r, (_, arity)) in sig.relations().iter().enumerate() {
            if *arity == 0 {
                continue;
            }
            for (a, cands) in candidates.iter_mut().enumerate() {
                if m.holds(r, &vec![a; *arity]) {
                    cands.retain(|&b| n.holds(r, &vec![b; *arity]));
                }
            }
        }
        if injective {
            let pm = profiles(m);
            let pn = profiles(n);
            for (a, cands) in candidates.iter_mut().enumerate() {
                cands.retain(|&b| pm[a] == pn[b]);
            }
        }
        Some(Search {
            m,
            n,
            at,
            candidates,
            injective,
            map: vec![0; m.len()],
            used: vec![false; n.len()],
            scratch: Vec::new(),
        })
    }

    fn consistent(&mut self, i: usize) -> bool {
        for c in &self.at[i] {
            match c {
                Constraint::Rel(r, t) => {
                    self.scratch.clear();
                    self.scratch.extend(t.iter().map(|&e| self.map[e]));
                    if !self.n.holds(*r, &self.scratch) {
                        return false;
                    }
                }
                Constraint::Fun(f, args, v) => {
                    self.scratch.clear();
                    self.scratch.extend(args.iter().map(|&e| self.map[e]));
                    if self.n.apply(*f, &self.scratch) != self.map[*v] {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn run<F: FnMut(&[Elem]) -> ControlFlow<()>>(
        &mut self,
        i: usize,
        visit: &mut F,
    ) -> ControlFlow<()> {
        if i == self.m.len() {
            return visit(&self.map);
        }
        for k in 0..self.candidates[i].len() {
            let b = self.candidates[i][k];
            if self.injective && self.used[b] {
                continue;
            }
            self.map[i] = b;
            if !self.consistent(i) {
                continue;
            }
            if self.injective {
                self.used[b] = true;
            }
            let flow = self.run(i + 1, visit);
            if self.injective {
                self.used[b] = false;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Per-element occurrence counts: for each relation and argument position,
/// how many tuples have the element there.
fn profiles(s: &Structure) -> Vec<Vec<usize>> {
    let sig = s.signature();
    let width: usize = sig.relations().iter().map(|(_, a)| *a).sum();
    let mut out = vec![vec![0; width]; s.len()];
    let mut offset = 0;
    for (r, (_, arity)) in sig.relations().iter().enumerate() {
        for t in s.tuples(r) {
            for (p, &e) in t.iter().enumerate() {
                out[e][offset + p] += 1;
            }
        }
        offset += arity;
    }
    out
}

/// Visits every homomorphism `m -> n` in lexicographic order of the map.
/// The visitor may stop the search early by returning `Break`.
pub fn for_each_hom<F: FnMut(&[Elem]) -> ControlFlow<()>>(
    m: &Structure,
    n: &Structure,
    mut visit: F,
) -> Result<()> {
    if !m.same_signature(n) {
        return Err(Error::SignatureMismatch);
    }
    if let Some(mut search) = Search::new(m, n, false) {
        let _ = search.run(0, &mut visit);
    }
    Ok(())
}

pub fn enumerate_homs(m: &Structure, n: &Structure, limit: Option<usize>) -> Result<Vec<Hom>> {
    let mut out = Vec::new();
    if limit == Some(0) {
        return Ok(out);
    }
    for_each_hom(m, n, |map| {
        out.push(Hom::new(map.to_vec()));
        if Some(out.len()) == limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(out)
}

pub fn find_hom(m: &Structure, n: &Structure) -> Result<Option<Hom>> {
    Ok(enumerate_homs(m, n, Some(1))?.pop())
}

/// First isomorphism `m -> n` in search order.
pub fn find_isomorphism(m: &Structure, n: &Structure) -> Result<Option<Hom>> {
    if !m.same_signature(n) {
        return Err(Error::SignatureMismatch);
    }
    if m.len() != n.len() {
        return Ok(None);
    }
    let sig = m.signature();
    for r in 0..sig.relations().len() {
        if m.tuples(r).count() != n.tuples(r).count() {
            return Ok(None);
        }
    }
    // An injective hom between equal-size structures with equally many tuples
    // per relation is onto each relation, so its inverse is a hom as well.
    let mut found = None;
    if let Some(mut search) = Search::new(m, n, true) {
        let _ = search.run(0, &mut |map: &[Elem]| {
            found = Some(Hom::new(map.to_vec()));
            ControlFlow::Break(())
        });
    }
    Ok(found)
}
