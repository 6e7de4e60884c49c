//! Bounded enumeration of positive formulas up to equivalence on a fixed list
//! of probe structures.
//!
//! Every formula is represented by its truth table: one bit per probe and per
//! full assignment of the variable pool `v1..vk`. Formulas are generated by
//! size level (atoms have size 0, each connective or quantifier adds 1) and a
//! formula is kept only if its table is new. The set of tables reachable
//! within a budget is therefore computed exactly, each with a smallest
//! witness.

use std::fmt;
use std::hash::Hasher;
use std::ops::Range;

use rustc_hash::{FxHashMap, FxHasher};
use serde::Serialize;

use super::syntax::{Formula, Term};
use crate::error::{Error, Result};
use crate::structure::{Elem, Signature, Structure};

/// Truth of an atom on a probe under an assignment of the pool.
type AtomTest<'a> = Box<dyn Fn(&Structure, &[Elem]) -> bool + 'a>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Budget {
    pub size: usize,
    pub vars: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { size: 5, vars: 2 }
    }
}

impl Budget {
    pub fn new(size: usize, vars: usize) -> Self {
        Budget { size, vars }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "size={} vars={}", self.size, self.vars)
    }
}

/// Variable names of the pool, `v1..vk`.
pub fn var_name(j: usize) -> String {
    format!("v{}", j + 1)
}

#[derive(Clone, Debug)]
pub enum Recipe {
    Bottom,
    Top,
    Atom(Formula),
    And(u32, u32),
    Or(u32, u32),
    Exists(u8, u32),
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    n: usize,
    offset: usize,
    assignments: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SpaceOptions {
    /// Distinguish formulas with equal tables but different free variables.
    pub key_free_vars: bool,
    pub max_entries: usize,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        SpaceOptions {
            key_free_vars: false,
            max_entries: 3_000_000,
        }
    }
}

#[derive(Clone, Debug)]
enum ATerm {
    Var(usize),
    Const(usize),
    App(usize, Vec<ATerm>),
}

impl ATerm {
    fn value(&self, m: &Structure, env: &[Elem]) -> Elem {
        match self {
            ATerm::Var(j) => env[*j],
            ATerm::Const(c) => m.constant(*c),
            ATerm::App(f, args) => {
                let vals: Vec<Elem> = args.iter().map(|a| a.value(m, env)).collect();
                m.apply(*f, &vals)
            }
        }
    }

    fn mask(&self) -> u32 {
        match self {
            ATerm::Var(j) => 1 << j,
            ATerm::Const(_) => 0,
            ATerm::App(_, args) => args.iter().fold(0, |acc, a| acc | a.mask()),
        }
    }

    fn syntax(&self, sig: &Signature) -> Term {
        match self {
            ATerm::Var(j) => Term::Var(var_name(*j)),
            ATerm::Const(c) => Term::Const(sig.constants()[*c].clone()),
            ATerm::App(f, args) => Term::App(
                sig.functions()[*f].0.clone(),
                args.iter().map(|a| a.syntax(sig)).collect(),
            ),
        }
    }
}

/// Variables, constants, and one function application over those.
fn pool_terms(sig: &Signature, vars: usize) -> Vec<ATerm> {
    let mut base: Vec<ATerm> = (0..vars).map(ATerm::Var).collect();
    base.extend((0..sig.constants().len()).map(ATerm::Const));
    let mut out = base.clone();
    if !base.is_empty() {
        for (f, (_, arity)) in sig.functions().iter().enumerate() {
            let mut idx = vec![0usize; *arity];
            loop {
                out.push(ATerm::App(
                    f,
                    idx.iter().map(|&i| base[i].clone()).collect(),
                ));
                if !advance(&mut idx, base.len()) {
                    break;
                }
            }
        }
    }
    out
}

pub struct FormulaSpace {
    sig: Signature,
    budget: Budget,
    options: SpaceOptions,
    layouts: Vec<Layout>,
    width: usize,
    arena: Vec<u64>,
    recipes: Vec<Recipe>,
    sizes: Vec<u8>,
    free: Vec<u32>,
    levels: Vec<Range<usize>>,
    index: FxHashMap<u64, u32>,
    chain: Vec<u32>,
}

const NO_ENTRY: u32 = u32::MAX;

impl FormulaSpace {
    pub fn build(probes: &[&Structure], budget: Budget, options: SpaceOptions) -> Result<Self> {
        let first = probes
            .first()
            .ok_or_else(|| Error::Precondition("formula space needs at least one probe".into()))?;
        if probes.iter().any(|p| !p.same_signature(first)) {
            return Err(Error::SignatureMismatch);
        }
        if budget.vars > 16 || budget.size > 255 {
            return Err(Error::TooLarge(format!("budget {budget}")));
        }
        let mut layouts = Vec::with_capacity(probes.len());
        let mut offset = 0usize;
        for p in probes {
            let assignments = (0..budget.vars)
                .try_fold(1usize, |acc, _| acc.checked_mul(p.len()))
                .filter(|&a| a <= 1 << 24)
                .ok_or_else(|| {
                    Error::TooLarge(format!(
                        "{} elements with {} variables",
                        p.len(),
                        budget.vars
                    ))
                })?;
            layouts.push(Layout {
                n: p.len(),
                offset,
                assignments,
            });
            offset += assignments.div_ceil(64);
        }
        let width = offset;
        let mut space = FormulaSpace {
            sig: first.signature().clone(),
            budget,
            options,
            layouts,
            width,
            arena: Vec::new(),
            recipes: Vec::new(),
            sizes: Vec::new(),
            free: Vec::new(),
            levels: Vec::new(),
            index: FxHashMap::default(),
            chain: Vec::new(),
        };
        let zeros = vec![0u64; width];
        space.push_unindexed(Recipe::Bottom, &zeros);
        let mut ones = vec![0u64; width];
        for l in &space.layouts {
            for i in 0..l.assignments {
                set_bit(&mut ones, l.offset, i);
            }
        }
        space.push_unindexed(Recipe::Top, &ones);
        space.atoms(probes)?;
        for s in 1..=budget.size {
            space.level(s)?;
        }
        Ok(space)
    }

    fn push_unindexed(&mut self, recipe: Recipe, bits: &[u64]) {
        self.arena.extend_from_slice(bits);
        self.recipes.push(recipe);
        self.sizes.push(0);
        self.free.push(0);
        self.chain.push(NO_ENTRY);
    }

    fn key_hash(&self, bits: &[u64], free: u32) -> u64 {
        let mut h = FxHasher::default();
        for &w in bits {
            h.write_u64(w);
        }
        if self.options.key_free_vars {
            h.write_u32(free);
        }
        h.finish()
    }

    /// Adds an entry unless an equal key exists. Returns whether it was new.
    fn insert(&mut self, recipe: Recipe, bits: &[u64], size: usize, free: u32) -> Result<bool> {
        let h = self.key_hash(bits, free);
        let mut cur = self.index.get(&h).copied().unwrap_or(NO_ENTRY);
        while cur != NO_ENTRY {
            let c = cur as usize;
            if self.bits(c) == bits && (!self.options.key_free_vars || self.free[c] == free) {
                return Ok(false);
            }
            cur = self.chain[c];
        }
        if self.recipes.len() >= self.options.max_entries {
            return Err(Error::TooLarge(format!(
                "more than {} formula classes within budget {}",
                self.options.max_entries, self.budget
            )));
        }
        let id = self.recipes.len() as u32;
        let prev = self.index.insert(h, id).unwrap_or(NO_ENTRY);
        self.chain.push(prev);
        self.arena.extend_from_slice(bits);
        self.recipes.push(recipe);
        self.sizes.push(size as u8);
        self.free.push(free);
        Ok(true)
    }

    fn atoms(&mut self, probes: &[&Structure]) -> Result<()> {
        let start = self.recipes.len();
        let k = self.budget.vars;
        let terms = pool_terms(&self.sig, k);
        let sig = self.sig.clone();
        let mut atoms: Vec<(Formula, u32, AtomTest<'_>)> = Vec::new();
        for (r, (name, arity)) in sig.relations().iter().enumerate() {
            let mut idx = vec![0usize; *arity];
            loop {
                if terms.is_empty() && *arity > 0 {
                    break;
                }
                let args: Vec<ATerm> = idx.iter().map(|&i| terms[i].clone()).collect();
                let mask = args.iter().fold(0, |acc, a| acc | a.mask());
                let phi = Formula::Rel(name.clone(), args.iter().map(|a| a.syntax(&sig)).collect());
                atoms.push((
                    phi,
                    mask,
                    Box::new(move |m: &Structure, env: &[Elem]| {
                        let vals: Vec<Elem> = args.iter().map(|a| a.value(m, env)).collect();
                        m.holds(r, &vals)
                    }),
                ));
                if !advance(&mut idx, terms.len()) {
                    break;
                }
            }
        }
        for i in 0..terms.len() {
            for j in i..terms.len() {
                let (a, b) = (terms[i].clone(), terms[j].clone());
                let mask = a.mask() | b.mask();
                let phi = Formula::Eq(a.syntax(&sig), b.syntax(&sig));
                atoms.push((
                    phi,
                    mask,
                    Box::new(move |m: &Structure, env: &[Elem]| a.value(m, env) == b.value(m, env)),
                ));
            }
        }
        let mut bits = vec![0u64; self.width];
        let mut env = vec![0; k];
        for (phi, mask, test) in atoms {
            bits.iter_mut().for_each(|w| *w = 0);
            for (p, l) in probes.iter().zip(&self.layouts) {
                for i in 0..l.assignments {
                    decode(i, l.n, &mut env);
                    if test(p, &env) {
                        set_bit(&mut bits, l.offset, i);
                    }
                }
            }
            self.insert(Recipe::Atom(phi), &bits, 0, mask)?;
        }
        self.levels.push(start..self.recipes.len());
        Ok(())
    }

    fn level(&mut self, s: usize) -> Result<()> {
        let start = self.recipes.len();
        let mut scratch = vec![0u64; self.width];
        for a in 0..s {
            let b = s - 1 - a;
            if a > b {
                break;
            }
            let ra = self.levels[a].clone();
            let rb = self.levels[b].clone();
            for i in ra.clone() {
                let j_start = if a == b { i + 1 } else { rb.start };
                for j in j_start..rb.end {
                    let free = self.free[i] | self.free[j];
                    {
                        let (x, y) = (self.bits(i), self.bits(j));
                        for w in 0..scratch.len() {
                            scratch[w] = x[w] & y[w];
                        }
                    }
                    self.insert(Recipe::And(i as u32, j as u32), &scratch, s, free)?;
                    {
                        let (x, y) = (self.bits(i), self.bits(j));
                        for w in 0..scratch.len() {
                            scratch[w] = x[w] | y[w];
                        }
                    }
                    self.insert(Recipe::Or(i as u32, j as u32), &scratch, s, free)?;
                }
            }
        }
        for i in self.levels[s - 1].clone() {
            for v in 0..self.budget.vars {
                if self.free[i] & (1 << v) == 0 {
                    continue;
                }
                scratch.copy_from_slice(self.bits(i));
                for l in &self.layouts {
                    cylindrify(&mut scratch, l, v);
                }
                let free = self.free[i] & !(1 << v);
                self.insert(Recipe::Exists(v as u8, i as u32), &scratch, s, free)?;
            }
        }
        self.levels.push(start..self.recipes.len());
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn probe_count(&self) -> usize {
        self.layouts.len()
    }

    pub fn size(&self, id: usize) -> usize {
        self.sizes[id] as usize
    }

    /// Syntactic free variables as a bitmask over the pool.
    pub fn free_mask(&self, id: usize) -> u32 {
        self.free[id]
    }

    pub fn recipe(&self, id: usize) -> &Recipe {
        &self.recipes[id]
    }

    pub fn bits(&self, id: usize) -> &[u64] {
        &self.arena[id * self.width..(id + 1) * self.width]
    }

    /// Entries of a given size level; `⊥` and `⊤` belong to none.
    pub fn level_range(&self, s: usize) -> Range<usize> {
        self.levels.get(s).cloned().unwrap_or(0..0)
    }

    /// Index of a full assignment of the pool in probe `p`.
    pub fn assignment_index(&self, p: usize, values: &[Elem]) -> usize {
        let n = self.layouts[p].n;
        values.iter().rev().fold(0, |acc, &e| acc * n + e)
    }

    pub fn assignments(&self, p: usize) -> usize {
        self.layouts[p].assignments
    }

    /// Decodes an assignment index of probe `p` into values of `v1..vk`.
    pub fn assignment(&self, p: usize, index: usize) -> Vec<Elem> {
        let mut env = vec![0; self.budget.vars];
        decode(index, self.layouts[p].n, &mut env);
        env
    }

    #[inline]
    pub fn holds(&self, id: usize, p: usize, index: usize) -> bool {
        let l = &self.layouts[p];
        let bit = l.offset * 64 + index;
        self.arena[id * self.width + bit / 64] >> (bit % 64) & 1 == 1
    }

    /// Whether entry `id` holds somewhere in probe `p`.
    pub fn satisfiable_in(&self, id: usize, p: usize) -> bool {
        let l = &self.layouts[p];
        let words = l.assignments.div_ceil(64);
        self.bits(id)[l.offset..l.offset + words]
            .iter()
            .any(|&w| w != 0)
    }

    /// Sentences within the budget in canonical order: `⊥`, `⊤`, then by
    /// size level and generation order.
    pub fn sentences(&self) -> Vec<usize> {
        (0..self.len()).filter(|&id| self.free[id] == 0).collect()
    }

    pub fn formula(&self, id: usize) -> Formula {
        match &self.recipes[id] {
            Recipe::Bottom => Formula::False,
            Recipe::Top => Formula::True,
            Recipe::Atom(phi) => phi.clone(),
            Recipe::And(a, b) => Formula::and(self.formula(*a as usize), self.formula(*b as usize)),
            Recipe::Or(a, b) => Formula::or(self.formula(*a as usize), self.formula(*b as usize)),
            Recipe::Exists(v, a) => {
                Formula::Exists(var_name(*v as usize), Box::new(self.formula(*a as usize)))
            }
        }
    }
}

fn advance(idx: &mut [usize], base: usize) -> bool {
    for p in (0..idx.len()).rev() {
        idx[p] += 1;
        if idx[p] < base {
            return true;
        }
        idx[p] = 0;
    }
    false
}

#[inline]
fn decode(mut index: usize, n: usize, env: &mut [Elem]) {
    for slot in env.iter_mut() {
        *slot = index % n;
        index /= n;
    }
}

#[inline]
fn set_bit(bits: &mut [u64], offset: usize, i: usize) {
    let b = offset * 64 + i;
    bits[b / 64] |= 1 << (b % 64);
}

#[inline]
fn get_bit(bits: &[u64], offset: usize, i: usize) -> bool {
    let b = offset * 64 + i;
    bits[b / 64] >> (b % 64) & 1 == 1
}

#[inline]
fn clear_bit(bits: &mut [u64], offset: usize, i: usize) {
    let b = offset * 64 + i;
    bits[b / 64] &= !(1 << (b % 64));
}

/// Replaces the table by its existential projection along variable `v`.
fn cylindrify(bits: &mut [u64], l: &Layout, v: usize) {
    let stride = l.n.pow(v as u32);
    let block = stride * l.n;
    let mut base = 0;
    while base < l.assignments {
        for low in 0..stride {
            let first = base + low;
            let any = (0..l.n).any(|t| get_bit(bits, l.offset, first + t * stride));
            for t in 0..l.n {
                if any {
                    set_bit(bits, l.offset, first + t * stride);
                } else {
                    clear_bit(bits, l.offset, first + t * stride);
                }
            }
        }
        base += block;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{classify, evaluate, Assignment, FragmentTag};

    fn graphs() -> Vec<Structure> {
        vec![
            Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap(),
            Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap(),
            Structure::graph(&["p", "q"], &[("p", "p"), ("p", "q")]).unwrap(),
        ]
    }

    #[test]
    fn tables_match_direct_evaluation() {
        let gs = graphs();
        let probes: Vec<&Structure> = gs.iter().collect();
        let space =
            FormulaSpace::build(&probes, Budget::new(3, 2), SpaceOptions::default()).unwrap();
        assert!(space.len() > 20);
        for id in 0..space.len() {
            let phi = space.formula(id);
            assert!(classify(&phi).is_positive());
            assert!(phi.size() <= 3);
            assert_eq!(phi.size(), space.size(id));
            for (p, m) in gs.iter().enumerate() {
                for idx in 0..space.assignments(p) {
                    let env = space.assignment(p, idx);
                    let alpha: Assignment = env
                        .iter()
                        .enumerate()
                        .map(|(j, &e)| (var_name(j), e))
                        .collect();
                    assert_eq!(
                        evaluate(m, &phi, &alpha).unwrap(),
                        space.holds(id, p, idx),
                        "{phi} at {env:?} in probe {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_budget() {
        let g = Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap();
        let space = FormulaSpace::build(
            &[&g],
            Budget::new(0, 0),
            SpaceOptions {
                key_free_vars: true,
                ..Default::default()
            },
        )
        .unwrap();
        let s: Vec<Formula> = space
            .sentences()
            .into_iter()
            .map(|i| space.formula(i))
            .collect();
        assert_eq!(s, vec![Formula::False, Formula::True]);
    }

    #[test]
    fn function_terms_are_generated() {
        let raw = r#"{"signature": {"functions":[["s",1]], "constants":["z"]},
            "universe":["0","1"], "functions":{"s":[["0","1"],["1","0"]]}, "constants":{"z":"0"}}"#;
        let m = crate::structure::validate_structure(&serde_json::from_str(raw).unwrap()).unwrap();
        let space = FormulaSpace::build(&[&m], Budget::new(1, 1), SpaceOptions::default()).unwrap();
        let texts: Vec<String> = (0..space.len())
            .map(|i| space.formula(i).to_string())
            .collect();
        assert!(texts.iter().any(|t| t == "v1 = s(v1)"), "{texts:?}");
        assert!(classify(&space.formula(space.len() - 1)) <= FragmentTag::Positive);
    }
}
