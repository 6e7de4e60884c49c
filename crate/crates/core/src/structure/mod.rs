//! Finite first-order structures over a signature of relations, total
//! functions and constants, plus homomorphism machinery.
//!
//! Elements are stored as indices into the universe; the declaration order of
//! the universe is the canonical order used by every deterministic search.

mod enumerate;
mod hom;
mod immersion;

pub use enumerate::{all_structures, element_names, small_structures};
pub(crate) use hom::hom_violation;
pub use hom::{
    compose, enumerate_homs, find_hom, find_isomorphism, for_each_hom, is_homomorphism, Hom,
};
pub(crate) use immersion::first_reflection_failure;
pub use immersion::{is_immersion, ImmersionReport, ReflectionWitness};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an element in a structure's universe.
pub type Elem = usize;

/// Upper bound on the number of table cells a single relation or function
/// may occupy.
const MAX_TABLE: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    functions: Vec<(String, usize)>,
    constants: Vec<String>,
}

impl Signature {
    pub fn new(
        relations: Vec<(String, usize)>,
        functions: Vec<(String, usize)>,
        constants: Vec<String>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let names = relations
            .iter()
            .map(|(n, _)| n)
            .chain(functions.iter().map(|(n, _)| n))
            .chain(constants.iter());
        for name in names {
            if name.is_empty() {
                return Err(Error::Signature("empty symbol name".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Signature(format!("symbol `{name}` declared twice")));
            }
        }
        if let Some((name, _)) = functions.iter().find(|(_, a)| *a == 0) {
            return Err(Error::Signature(format!(
                "function `{name}` has arity 0; declare it as a constant"
            )));
        }
        Ok(Signature {
            relations,
            functions,
            constants,
        })
    }

    /// One binary relation `E`.
    pub fn graph() -> Self {
        Signature {
            relations: vec![("E".into(), 2)],
            functions: vec![],
            constants: vec![],
        }
    }

    /// The pure equality language.
    pub fn empty() -> Self {
        Signature {
            relations: vec![],
            functions: vec![],
            constants: vec![],
        }
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn functions(&self) -> &[(String, usize)] {
        &self.functions
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relation(&self, name: &str) -> Option<(usize, usize)> {
        self.relations
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| (i, self.relations[i].1))
    }

    pub fn function(&self, name: &str) -> Option<(usize, usize)> {
        self.functions
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| (i, self.functions[i].1))
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|n| n == name)
    }
}

fn table_len(n: usize, arity: usize) -> Result<usize> {
    let arity32 = u32::try_from(arity).map_err(|_| Error::TooLarge(format!("arity {arity}")))?;
    match n.checked_pow(arity32) {
        Some(len) if len <= MAX_TABLE => Ok(len),
        _ => Err(Error::TooLarge(format!(
            "{n} elements at arity {arity} exceeds {MAX_TABLE} table cells"
        ))),
    }
}

/// Mixed-radix index of a tuple, first coordinate most significant, so that
/// index order is lexicographic tuple order.
#[inline]
pub(crate) fn tuple_index(n: usize, tuple: &[Elem]) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * n + e)
}

/// Inverse of [`tuple_index`].
pub(crate) fn index_tuple(n: usize, arity: usize, mut index: usize) -> Vec<Elem> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

/// A finite structure. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Structure {
    signature: Arc<Signature>,
    names: Vec<String>,
    relations: Vec<Vec<bool>>,
    functions: Vec<Vec<Elem>>,
    constants: Vec<Elem>,
}

impl Structure {
    /// Builds a structure from element names, relation tuples (one list per
    /// relation, in signature order), dense function tables (indexed by
    /// [`tuple_index`]) and constant interpretations.
    pub fn new(
        signature: Arc<Signature>,
        names: Vec<String>,
        relation_tuples: Vec<Vec<Vec<Elem>>>,
        function_tables: Vec<Vec<Elem>>,
        constants: Vec<Elem>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::EmptyUniverse);
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateElement(name.clone()));
            }
        }
        if relation_tuples.len() != signature.relations.len()
            || function_tables.len() != signature.functions.len()
            || constants.len() != signature.constants.len()
        {
            return Err(Error::SignatureMismatch);
        }
        let mut relations = Vec::with_capacity(relation_tuples.len());
        for ((name, arity), tuples) in signature.relations.iter().zip(relation_tuples) {
            let mut table = vec![false; table_len(n, *arity)?];
            for t in tuples {
                if t.len() != *arity {
                    return Err(Error::Arity {
                        symbol: name.clone(),
                        expected: *arity,
                        found: t.len(),
                    });
                }
                if let Some(bad) = t.iter().find(|&&e| e >= n) {
                    return Err(Error::TupleOutOfRange(format!(
                        "{name} tuple references element #{bad}"
                    )));
                }
                table[tuple_index(n, &t)] = true;
            }
            relations.push(table);
        }
        for ((name, arity), table) in signature.functions.iter().zip(&function_tables) {
            let len = table_len(n, *arity)?;
            if table.len() != len {
                return Err(Error::PartialFunction {
                    function: name.clone(),
                    args: format!("table has {} of {len} entries", table.len()),
                });
            }
            if table.iter().any(|&e| e >= n) {
                return Err(Error::TupleOutOfRange(format!("{name} value out of range")));
            }
        }
        if constants.iter().any(|&c| c >= n) {
            return Err(Error::TupleOutOfRange("constant out of range".into()));
        }
        Ok(Structure {
            signature,
            names,
            relations,
            functions: function_tables,
            constants,
        })
    }

    /// Builds a structure from already-checked dense tables.
    pub(crate) fn from_tables(
        signature: Arc<Signature>,
        names: Vec<String>,
        relations: Vec<Vec<bool>>,
        functions: Vec<Vec<Elem>>,
        constants: Vec<Elem>,
    ) -> Self {
        debug_assert_eq!(relations.len(), signature.relations.len());
        debug_assert_eq!(functions.len(), signature.functions.len());
        debug_assert_eq!(constants.len(), signature.constants.len());
        Structure {
            signature,
            names,
            relations,
            functions,
            constants,
        }
    }

    /// A graph over the signature with a single binary relation `E`.
    pub fn graph(names: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let lookup = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::UnknownElement(s.to_string()))
        };
        let tuples = edges
            .iter()
            .map(|(a, b)| Ok(vec![lookup(a)?, lookup(b)?]))
            .collect::<Result<Vec<_>>>()?;
        Structure::new(
            Arc::new(Signature::graph()),
            names,
            vec![tuples],
            vec![],
            vec![],
        )
    }

    /// An undirected loopless graph: every listed edge is added both ways.
    pub fn undirected(names: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let both: Vec<(&str, &str)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        Structure::graph(names, &both)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub(crate) fn signature_arc(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn same_signature(&self, other: &Structure) -> bool {
        Arc::ptr_eq(&self.signature, &other.signature) || self.signature == other.signature
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

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn holds(&self, relation: usize, tuple: &[Elem]) -> bool {
        self.relations[relation][tuple_index(self.len(), tuple)]
    }

    pub(crate) fn function_table(&self, function: usize) -> &[Elem] {
        &self.functions[function]
    }

    #[inline]
    pub fn apply(&self, function: usize, args: &[Elem]) -> Elem {
        self.functions[function][tuple_index(self.len(), args)]
    }

    pub fn constant(&self, c: usize) -> Elem {
        self.constants[c]
    }

    /// Tuples of a relation in lexicographic order.
    pub fn tuples(&self, relation: usize) -> impl Iterator<Item = Vec<Elem>> + '_ {
        let n = self.len();
        let arity = self.signature.relations[relation].1;
        self.relations[relation]
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| index_tuple(n, arity, i))
    }

    /// The substructure induced on `keep` (sorted, closed under functions and
    /// containing the constants), with elements in `keep` order.
    pub fn induced(&self, keep: &[Elem]) -> Result<Structure> {
        let mut position = vec![usize::MAX; self.len()];
        for (i, &e) in keep.iter().enumerate() {
            position[e] = i;
        }
        let m = keep.len();
        if m == 0 {
            return Err(Error::EmptyUniverse);
        }
        let relations = self
            .signature
            .relations
            .iter()
            .enumerate()
            .map(|(r, (_, arity))| {
                let len = table_len(m, *arity)?;
                Ok((0..len)
                    .map(|i| {
                        let t: Vec<Elem> = index_tuple(m, *arity, i)
                            .into_iter()
                            .map(|j| keep[j])
                            .collect();
                        self.holds(r, &t)
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<bool>>>>()?;
        let mut functions = Vec::with_capacity(self.functions.len());
        for (f, (name, arity)) in self.signature.functions.iter().enumerate() {
            let len = table_len(m, *arity)?;
            let mut table = Vec::with_capacity(len);
            for i in 0..len {
                let t: Vec<Elem> = index_tuple(m, *arity, i)
                    .into_iter()
                    .map(|j| keep[j])
                    .collect();
                let v = position[self.apply(f, &t)];
                if v == usize::MAX {
                    return Err(Error::PartialFunction {
                        function: name.clone(),
                        args: "subset not closed under the function".into(),
                    });
                }
                table.push(v);
            }
            functions.push(table);
        }
        let constants = self
            .constants
            .iter()
            .map(|&c| {
                let p = position[c];
                if p == usize::MAX {
                    Err(Error::MissingConstant("subset omits a constant".into()))
                } else {
                    Ok(p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Structure::from_tables(
            self.signature.clone(),
            keep.iter().map(|&e| self.names[e].clone()).collect(),
            relations,
            functions,
            constants,
        ))
    }

    /// Copy with renamed elements.
    pub fn renamed(&self, names: Vec<String>) -> Result<Structure> {
        if names.len() != self.len() {
            return Err(Error::Input("rename list has the wrong length".into()));
        }
        let mut s = self.clone();
        s.names = names;
        Ok(s)
    }

    pub fn to_raw(&self) -> RawStructure {
        let sig = &self.signature;
        let relations = sig
            .relations
            .iter()
            .enumerate()
            .map(|(r, (name, _))| {
                let tuples = self
                    .tuples(r)
                    .map(|t| t.into_iter().map(|e| self.names[e].clone()).collect())
                    .collect();
                (name.clone(), tuples)
            })
            .collect();
        let functions = sig
            .functions
            .iter()
            .enumerate()
            .map(|(f, (name, arity))| {
                let entries = self.functions[f]
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let mut row: Vec<String> = index_tuple(self.len(), *arity, i)
                            .into_iter()
                            .map(|e| self.names[e].clone())
                            .collect();
                        row.push(self.names[v].clone());
                        row
                    })
                    .collect();
                (name.clone(), entries)
            })
            .collect();
        let constants = sig
            .constants
            .iter()
            .zip(&self.constants)
            .map(|(c, &e)| (c.clone(), self.names[e].clone()))
            .collect();
        RawStructure {
            signature: RawSignature {
                relations: sig.relations.iter().map(|(n, a)| (n.clone(), *a)).collect(),
                functions: sig.functions.iter().map(|(n, a)| (n.clone(), *a)).collect(),
                constants: sig.constants.clone(),
            },
            universe: self.names.clone(),
            relations,
            functions,
            constants,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(", "))?;
        for (r, (name, _)) in self.signature.relations.iter().enumerate() {
            let tuples: Vec<String> = self
                .tuples(r)
                .map(|t| {
                    let parts: Vec<&str> = t.iter().map(|&e| self.name(e)).collect();
                    format!("({})", parts.join(","))
                })
                .collect();
            write!(f, " {name}={{{}}}", tuples.join(" "))?;
        }
        for (c, name) in self.signature.constants.iter().enumerate() {
            write!(f, " {name}={}", self.name(self.constants[c]))?;
        }
        if !self.signature.functions.is_empty() {
            let fs: Vec<&str> = self
                .signature
                .functions
                .iter()
                .map(|(n, _)| n.as_str())
                .collect();
            write!(f, " functions: {}", fs.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSignature {
    #[serde(default)]
    pub relations: Vec<(String, usize)>,
    #[serde(default)]
    pub functions: Vec<(String, usize)>,
    #[serde(default)]
    pub constants: Vec<String>,
}

/// On-disk structure description. Function entries are rows
/// `[arg1, ..., argN, value]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStructure {
    pub signature: RawSignature,
    pub universe: Vec<String>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
}

impl RawSignature {
    pub fn validate(&self) -> Result<Signature> {
        Signature::new(
            self.relations.clone(),
            self.functions.clone(),
            self.constants.clone(),
        )
    }
}

/// Checks a raw description and builds the structure it denotes.
pub fn validate_structure(raw: &RawStructure) -> Result<Structure> {
    let sig = Arc::new(raw.signature.validate()?);
    validate_structure_with(raw, sig)
}

/// As [`validate_structure`], sharing an already validated signature when the
/// declared one matches it.
pub(crate) fn validate_structure_with(
    raw: &RawStructure,
    sig: Arc<Signature>,
) -> Result<Structure> {
    if raw.signature.validate()? != *sig {
        return Err(Error::SignatureMismatch);
    }
    let n = raw.universe.len();
    if n == 0 {
        return Err(Error::EmptyUniverse);
    }
    let lookup = |s: &str| -> Result<Elem> {
        raw.universe
            .iter()
            .position(|u| u == s)
            .ok_or_else(|| Error::TupleOutOfRange(format!("`{s}` is not in the universe")))
    };
    for name in raw.relations.keys() {
        if sig.relation(name).is_none() {
            return Err(Error::UnknownSymbol(name.clone()));
        }
    }
    for name in raw.functions.keys() {
        if sig.function(name).is_none() {
            return Err(Error::UnknownSymbol(name.clone()));
        }
    }
    for name in raw.constants.keys() {
        if sig.constant(name).is_none() {
            return Err(Error::UnknownSymbol(name.clone()));
        }
    }
    let mut relation_tuples = Vec::new();
    for (name, arity) in &sig.relations {
        let mut tuples = Vec::new();
        for t in raw.relations.get(name).map(Vec::as_slice).unwrap_or(&[]) {
            if t.len() != *arity {
                return Err(Error::Arity {
                    symbol: name.clone(),
                    expected: *arity,
                    found: t.len(),
                });
            }
            let idx = t
                .iter()
                .map(|s| lookup(s))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| match e {
                    Error::TupleOutOfRange(m) => {
                        Error::TupleOutOfRange(format!("{name}({}): {m}", t.join(",")))
                    }
                    other => other,
                })?;
            tuples.push(idx);
        }
        relation_tuples.push(tuples);
    }
    let mut function_tables = Vec::new();
    for (name, arity) in &sig.functions {
        let len = table_len(n, *arity)?;
        let mut table: Vec<Option<Elem>> = vec![None; len];
        for row in raw.functions.get(name).map(Vec::as_slice).unwrap_or(&[]) {
            if row.len() != arity + 1 {
                return Err(Error::Arity {
                    symbol: name.clone(),
                    expected: *arity,
                    found: row.len().saturating_sub(1),
                });
            }
            let idx = row.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?;
            let slot = &mut table[tuple_index(n, &idx[..*arity])];
            match slot {
                Some(prev) if *prev != idx[*arity] => {
                    return Err(Error::Input(format!(
                        "function `{name}` has two values at ({})",
                        row[..*arity].join(",")
                    )))
                }
                _ => *slot = Some(idx[*arity]),
            }
        }
        let mut dense = Vec::with_capacity(len);
        for (i, v) in table.into_iter().enumerate() {
            match v {
                Some(v) => dense.push(v),
                None => {
                    let args: Vec<&str> = index_tuple(n, *arity, i)
                        .into_iter()
                        .map(|e| raw.universe[e].as_str())
                        .collect();
                    return Err(Error::PartialFunction {
                        function: name.clone(),
                        args: args.join(","),
                    });
                }
            }
        }
        function_tables.push(dense);
    }
    let mut constants = Vec::new();
    for c in &sig.constants {
        let v = raw
            .constants
            .get(c)
            .ok_or_else(|| Error::MissingConstant(c.clone()))?;
        constants.push(lookup(v)?);
    }
    Structure::new(
        sig,
        raw.universe.clone(),
        relation_tuples,
        function_tables,
        constants,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(json: &str) -> RawStructure {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn k2_description_is_valid() {
        let s = validate_structure(&raw(
            r#"{"signature": {"relations":[["E",2]], "functions":[], "constants":[]},
                "universe":["a","b"], "relations":{"E":[["a","b"],["b","a"]]},
                "functions":{}, "constants":{}}"#,
        ))
        .unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.holds(0, &[0, 1]) && s.holds(0, &[1, 0]));
        assert!(!s.holds(0, &[0, 0]));
    }

    #[test]
    fn tuple_out_of_range() {
        let err = validate_structure(&raw(
            r#"{"signature": {"relations":[["E",2]]}, "universe":["a","b"],
                "relations":{"E":[["a","c"]]}}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, Error::TupleOutOfRange(_)), "{err}");
        assert!(err.to_string().contains("tuple out of range"));
    }

    #[test]
    fn partial_function() {
        let err = validate_structure(&raw(
            r#"{"signature": {"functions":[["g",1]]}, "universe":["a","b"],
                "functions":{"g":[["a","b"]]}}"#,
        ))
        .unwrap_err();
        assert!(
            matches!(err, Error::PartialFunction { ref args, .. } if args == "b"),
            "{err}"
        );
        assert!(err.to_string().contains("partial function"));
    }

    #[test]
    fn unknown_symbol_and_unknown_key() {
        let err = validate_structure(&raw(
            r#"{"signature": {"relations":[["E",2]]}, "universe":["a"], "relations":{"F":[]}}"#,
        ))
        .unwrap_err();
        assert_eq!(err, Error::UnknownSymbol("F".into()));
        let bad: std::result::Result<RawStructure, _> =
            serde_json::from_str(r#"{"signature": {}, "universe":["a"], "extra": 1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn empty_universe_rejected() {
        let err = validate_structure(&raw(r#"{"signature": {}, "universe":[]}"#)).unwrap_err();
        assert_eq!(err, Error::EmptyUniverse);
    }

    #[test]
    fn nullary_relation_and_constants() {
        let s = validate_structure(&raw(
            r#"{"signature": {"relations":[["P",0]], "functions":[["s",1]], "constants":["z"]},
                "universe":["0","1"], "relations":{"P":[[]]},
                "functions":{"s":[["0","1"],["1","0"]]}, "constants":{"z":"0"}}"#,
        ))
        .unwrap();
        assert!(s.holds(0, &[]));
        assert_eq!(s.apply(0, &[1]), 0);
        assert_eq!(s.constant(0), 0);
        let back = validate_structure(&s.to_raw()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn signature_rejects_duplicates() {
        assert!(Signature::new(vec![("E".into(), 2)], vec![], vec!["E".into()]).is_err());
        assert!(Signature::new(vec![], vec![("f".into(), 0)], vec![]).is_err());
    }

    #[test]
    fn induced_substructure() {
        let p3 = Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap();
        let sub = p3.induced(&[0, 1]).unwrap();
        assert_eq!(sub.names(), &["u".to_string(), "v".to_string()]);
        assert_eq!(sub.tuples(0).count(), 2);
    }
}
