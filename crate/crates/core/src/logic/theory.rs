use std::collections::BTreeMap;
use std::hash::Hasher;
use std::sync::Arc;

use rustc_hash::FxHasher;
use serde::Serialize;

use super::classify::is_positive;
use super::closure::{var_name, Budget, FormulaSpace, SpaceOptions};
use super::eval::CompiledFormula;
use super::syntax::{Formula, Term};
use crate::error::{Error, Result};
use crate::structure::{small_structures, Signature, Structure};

/// Largest size of the generic probe structures.
pub const PROBE_SIZE: usize = 2;

/// A canonical list of positive sentences within a budget, deduplicated up
/// to equivalence on its probe structures: every structure with at most
/// [`PROBE_SIZE`] elements plus any extra structures supplied.
pub struct SentenceCatalog {
    budget: Budget,
    probes: Vec<Structure>,
    space: FormulaSpace,
    sentences: Vec<usize>,
    digest: u64,
}

impl SentenceCatalog {
    pub fn new(sig: &Signature, budget: Budget, extra: &[&Structure]) -> Result<Self> {
        let shared = Arc::new(sig.clone());
        let mut probes = small_structures(&shared, PROBE_SIZE)?;
        for s in extra {
            if s.signature() != sig {
                return Err(Error::SignatureMismatch);
            }
            probes.push((*s).clone());
        }
        let refs: Vec<&Structure> = probes.iter().collect();
        let space = FormulaSpace::build(
            &refs,
            budget,
            SpaceOptions {
                key_free_vars: true,
                ..SpaceOptions::default()
            },
        )?;
        let sentences = space.sentences();
        let mut h = FxHasher::default();
        h.write_usize(budget.size);
        h.write_usize(budget.vars);
        for &id in &sentences {
            h.write(space.formula(id).to_string().as_bytes());
            h.write_u8(0);
        }
        Ok(SentenceCatalog {
            budget,
            probes,
            space,
            sentences,
            digest: h.finish(),
        })
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn sentences(&self) -> Vec<Formula> {
        self.sentences
            .iter()
            .map(|&id| self.space.formula(id))
            .collect()
    }

    pub fn sentence(&self, k: usize) -> Formula {
        self.space.formula(self.sentences[k])
    }

    /// Positions (in catalog order) of the sentences true in `m`.
    fn satisfied_positions(&self, m: &Structure) -> Result<Vec<usize>> {
        if let Some(p) = self.probes.iter().position(|q| q == m) {
            return Ok((0..self.sentences.len())
                .filter(|&k| self.space.holds(self.sentences[k], p, 0))
                .collect());
        }
        if m.signature() != self.space.signature() {
            return Err(Error::SignatureMismatch);
        }
        let mut out = Vec::new();
        for (k, &id) in self.sentences.iter().enumerate() {
            let c = CompiledFormula::new(&self.space.formula(id), m.signature(), &[])?;
            if c.holds(m, &[]) {
                out.push(k);
            }
        }
        Ok(out)
    }

    pub fn fingerprint(&self, m: &Structure) -> Result<TheoryFingerprint> {
        let positions = self.satisfied_positions(m)?;
        Ok(TheoryFingerprint {
            budget: self.budget,
            catalog: self.digest,
            satisfied: positions.iter().map(|&k| self.sentence(k)).collect(),
            positions,
        })
    }
}

/// The positive sentences of a catalog that hold in a structure.
/// Fingerprints compare equal only when taken against the same catalog.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryFingerprint {
    pub budget: Budget,
    pub catalog: u64,
    #[serde(serialize_with = "crate::ser::formulas")]
    pub satisfied: Vec<Formula>,
    #[serde(skip)]
    positions: Vec<usize>,
}

impl PartialEq for TheoryFingerprint {
    fn eq(&self, other: &Self) -> bool {
        self.budget == other.budget
            && self.catalog == other.catalog
            && self.positions == other.positions
    }
}

impl Eq for TheoryFingerprint {}

impl TheoryFingerprint {
    /// Catalog sentences true in `self` but false in `other`.
    pub fn missing_from(&self, other: &TheoryFingerprint) -> Vec<Formula> {
        self.satisfied
            .iter()
            .zip(&self.positions)
            .filter(|(_, k)| other.positions.binary_search(k).is_err())
            .map(|(f, _)| f.clone())
            .collect()
    }
}

/// Canonical positive sentences within a budget over the generic probes.
pub fn enumerate_positive_sentences(sig: &Signature, budget: Budget) -> Result<Vec<Formula>> {
    Ok(SentenceCatalog::new(sig, budget, &[])?.sentences())
}

/// Fingerprint of `m` against the catalog probed by `m` itself.
pub fn positive_theory(m: &Structure, budget: Budget) -> Result<TheoryFingerprint> {
    SentenceCatalog::new(m.signature(), budget, &[m])?.fingerprint(m)
}

/// Fingerprints of several structures against one shared catalog.
pub fn joint_positive_theories(
    structures: &[&Structure],
    budget: Budget,
) -> Result<Vec<TheoryFingerprint>> {
    let first = structures.first().ok_or(Error::EmptyClass)?;
    let catalog = SentenceCatalog::new(first.signature(), budget, structures)?;
    structures.iter().map(|m| catalog.fingerprint(m)).collect()
}

fn rename_term(t: &Term, map: &BTreeMap<String, String>) -> Term {
    match t {
        Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Term::Const(c) => Term::Const(c.clone()),
        Term::App(g, args) => Term::App(
            g.clone(),
            args.iter().map(|a| rename_term(a, map)).collect(),
        ),
    }
}

/// Renames variables, bound and free alike.
pub fn rename_vars(phi: &Formula, map: &BTreeMap<String, String>) -> Formula {
    let r = |f: &Formula| rename_vars(f, map);
    match phi {
        Formula::False => Formula::False,
        Formula::True => Formula::True,
        Formula::Rel(n, args) => Formula::Rel(
            n.clone(),
            args.iter().map(|a| rename_term(a, map)).collect(),
        ),
        Formula::Eq(a, b) => Formula::Eq(rename_term(a, map), rename_term(b, map)),
        Formula::And(a, b) => Formula::and(r(a), r(b)),
        Formula::Or(a, b) => Formula::or(r(a), r(b)),
        Formula::Implies(a, b) => Formula::implies(r(a), r(b)),
        Formula::Not(a) => Formula::not(r(a)),
        Formula::Exists(v, a) => Formula::Exists(
            map.get(v).cloned().unwrap_or_else(|| v.clone()),
            Box::new(r(a)),
        ),
        Formula::Forall(v, a) => Formula::Forall(
            map.get(v).cloned().unwrap_or_else(|| v.clone()),
            Box::new(r(a)),
        ),
    }
}

/// Positive formulas within the budget that no member of `class` satisfies
/// together with `phi`. The free variables of `phi`, in order of first
/// occurrence, play the roles of `v1, v2, ...`; results use `phi`'s names.
pub fn resultant(phi: &Formula, class: &[&Structure], budget: Budget) -> Result<Vec<Formula>> {
    if !is_positive(phi) {
        return Err(Error::NotPositive(phi.to_string()));
    }
    let first = class.first().ok_or(Error::EmptyClass)?;
    let resolved = super::parse::resolve(phi, first.signature())?;
    let free = resolved.free_vars_ordered();
    let vars = budget.vars.max(free.len());
    let pool: Vec<String> = (0..vars).map(var_name).collect();
    for v in &free {
        if pool[free.len()..].contains(v) {
            return Err(Error::Input(format!(
                "variable `{v}` clashes with the formula pool; rename it"
            )));
        }
    }
    let space = FormulaSpace::build(
        class,
        Budget::new(budget.size, vars),
        SpaceOptions::default(),
    )?;
    let compiled = CompiledFormula::new(&resolved, first.signature(), &free)?;
    let mut phi_sat: Vec<Vec<usize>> = Vec::with_capacity(class.len());
    for (p, m) in class.iter().enumerate() {
        let mut idxs = Vec::new();
        for i in 0..space.assignments(p) {
            let env = space.assignment(p, i);
            if compiled.holds(m, &env[..free.len()]) {
                idxs.push(i);
            }
        }
        phi_sat.push(idxs);
    }
    let back: BTreeMap<String, String> = free
        .iter()
        .enumerate()
        .map(|(j, v)| (var_name(j), v.clone()))
        .collect();
    let mut out = Vec::new();
    for id in 0..space.len() {
        let compatible = phi_sat
            .iter()
            .enumerate()
            .any(|(p, idxs)| idxs.iter().any(|&i| space.holds(id, p, i)));
        if !compatible {
            out.push(rename_vars(&space.formula(id), &back));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn k2() -> Structure {
        Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
    }
    fn k3() -> Structure {
        Structure::undirected(&["x", "y", "z"], &[("x", "y"), ("y", "z"), ("x", "z")]).unwrap()
    }
    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }

    #[test]
    fn sentence_lists() {
        let graph = Signature::graph();
        let s = enumerate_positive_sentences(&graph, Budget::new(4, 1)).unwrap();
        assert!(s.contains(&parse_formula("exists v1. E(v1,v1)").unwrap()));
        assert!(s.contains(&Formula::False));
        let s = enumerate_positive_sentences(&Signature::empty(), Budget::new(3, 1)).unwrap();
        assert!(s.contains(&parse_formula("exists v1. v1 = v1").unwrap()));
        let s = enumerate_positive_sentences(&graph, Budget::new(0, 2)).unwrap();
        assert_eq!(s, vec![Formula::False, Formula::True]);
        assert!(s.iter().all(|f| f.is_sentence()));
    }

    #[test]
    fn theories() {
        let b = Budget::new(5, 3);
        let fps = joint_positive_theories(&[&k2(), &p3(), &k3()], b).unwrap();
        assert_eq!(fps[0], fps[1]);
        assert_ne!(fps[0], fps[2]);
        let extra = fps[2].missing_from(&fps[0]);
        assert!(extra.iter().any(|f| f.size() == 5), "{extra:?}");
        assert_eq!(
            positive_theory(&k2(), b).unwrap(),
            positive_theory(&k2(), b).unwrap()
        );
    }

    #[test]
    fn resultants() {
        let b = Budget::new(2, 2);
        let r = resultant(&parse_formula("E(x,y)").unwrap(), &[&k2()], b).unwrap();
        assert!(r.contains(&parse_formula("E(x,x)").unwrap()));
        assert!(r.contains(&parse_formula("x = y").unwrap()));
        let all = resultant(&Formula::False, &[&k2()], b).unwrap();
        let r = resultant(&parse_formula("x = x").unwrap(), &[&k2()], b).unwrap();
        assert!(r.contains(&parse_formula("E(x,x)").unwrap()));
        assert!(!r.contains(&parse_formula("x = x").unwrap()));
        assert!(all.len() > r.len());
        assert!(matches!(
            resultant(&parse_formula("~E(x,x)").unwrap(), &[&k2()], b),
            Err(Error::NotPositive(_))
        ));
    }
}
