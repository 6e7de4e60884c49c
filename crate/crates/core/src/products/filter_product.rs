use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::poset::{filter_violation, members, prime_violation, Filter, Mask};
use crate::structure::{index_tuple, Elem, Structure};
use crate::systems::{OrderedSystem, Section};

/// The quotient `S_F / ≡_F` with its induced structure.
#[derive(Clone, Debug)]
pub struct FilterProduct {
    system: OrderedSystem,
    filter: Filter,
    prime: bool,
    /// `S_F`, sorted by (domain, values).
    sections: Vec<Section>,
    lookup: FxHashMap<Section, usize>,
    /// Class of each section.
    class_of: Vec<usize>,
    /// Least section of each class.
    reps: Vec<usize>,
    structure: Structure,
}

impl FilterProduct {
    pub fn system(&self) -> &OrderedSystem {
        &self.system
    }

    pub fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn is_prime(&self) -> bool {
        self.prime
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Canonical representative of a product element.
    pub fn representative(&self, class: usize) -> &Section {
        &self.sections[self.reps[class]]
    }

    /// Every section in a class.
    pub fn class_members(&self, class: usize) -> Vec<&Section> {
        self.sections
            .iter()
            .zip(&self.class_of)
            .filter(|(_, &c)| c == class)
            .map(|(s, _)| s)
            .collect()
    }

    /// The product element of a section of `S_F`.
    pub fn class_of(&self, a: &Section) -> Option<usize> {
        self.lookup.get(a).map(|&i| self.class_of[i])
    }

    /// `⟦a = b⟧`.
    pub fn agreement(&self, a: &Section, b: &Section) -> Mask {
        members(a.domain & b.domain)
            .filter(|&x| a.value(x) == b.value(x))
            .fold(0, |acc, x| acc | 1 << x)
    }

    /// `a ≡_F b`.
    pub fn equivalent(&self, a: &Section, b: &Section) -> bool {
        self.filter.contains(self.agreement(a, b))
    }

    /// `⟦R(ā)⟧`.
    pub fn relation_denotation(&self, r: usize, args: &[&Section]) -> Mask {
        let common = args
            .iter()
            .fold(self.system.index().full(), |acc, a| acc & a.domain);
        let mut vals = vec![0; args.len()];
        members(common)
            .filter(|&x| {
                for (v, a) in vals.iter_mut().zip(args) {
                    *v = a.value(x);
                }
                self.system.structure(x).holds(r, &vals)
            })
            .fold(0, |acc, x| acc | 1 << x)
    }

    /// `g` computed pointwise on the common domain of the arguments.
    pub fn apply_pointwise(&self, g: usize, args: &[&Section]) -> Section {
        let common = args
            .iter()
            .fold(self.system.index().full(), |acc, a| acc & a.domain);
        let n = self.system.index().len();
        let mut values = vec![None; n];
        let mut vals = vec![0; args.len()];
        for x in members(common) {
            for (v, a) in vals.iter_mut().zip(args) {
                *v = a.value(x);
            }
            values[x] = Some(self.system.structure(x).apply(g, &vals));
        }
        Section {
            domain: common,
            values,
        }
    }

    /// Renders an element's representative.
    pub fn describe(&self, class: usize) -> String {
        self.system.format_section(self.representative(class))
    }
}

/// `∏ M_x / F` for any filter `F` over the system's index.
pub fn filter_product(sys: &OrderedSystem, f: &Filter) -> Result<FilterProduct> {
    build(sys, f, false)
}

/// As [`filter_product`], requiring `F` to be prime.
pub fn prime_product(sys: &OrderedSystem, f: &Filter) -> Result<FilterProduct> {
    if let Some(v) = prime_violation(sys.index(), f.members())? {
        return Err(Error::NotPrime(v));
    }
    build(sys, f, true)
}

fn build(sys: &OrderedSystem, f: &Filter, prime: bool) -> Result<FilterProduct> {
    if f.is_empty() {
        return Err(Error::NotFilter("empty family".into()));
    }
    if let Some(v) = filter_violation(sys.index(), f.members())? {
        return Err(Error::NotFilter(v));
    }
    let mut sections = Vec::new();
    for &v in f.members() {
        sections.extend(sys.sections(v)?);
    }
    sections.sort();
    let lookup: FxHashMap<Section, usize> = sections
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut fp = FilterProduct {
        system: sys.clone(),
        filter: f.clone(),
        prime,
        sections,
        lookup,
        class_of: Vec::new(),
        reps: Vec::new(),
        structure: sys.structure(0).clone(),
    };
    let mut class_of = Vec::with_capacity(fp.sections.len());
    let mut reps: Vec<usize> = Vec::new();
    for (i, a) in fp.sections.iter().enumerate() {
        match reps.iter().position(|&r| fp.equivalent(&fp.sections[r], a)) {
            Some(c) => class_of.push(c),
            None => {
                class_of.push(reps.len());
                reps.push(i);
            }
        }
    }
    fp.class_of = class_of;
    fp.reps = reps;
    fp.structure = quotient_structure(&fp)?;
    Ok(fp)
}

fn quotient_structure(fp: &FilterProduct) -> Result<Structure> {
    let sys = &fp.system;
    let sig = sys.signature_arc();
    let k = fp.reps.len();
    let names: Vec<String> = (0..k).map(|c| format!("cls{c}")).collect();
    let mut relations = Vec::new();
    for (r, (_, arity)) in sig.relations().iter().enumerate() {
        let cells = k.pow(*arity as u32);
        let mut table = Vec::with_capacity(cells);
        for i in 0..cells {
            let tuple = index_tuple(k, *arity, i);
            let args: Vec<&Section> = tuple.iter().map(|&c| fp.representative(c)).collect();
            table.push(fp.filter.contains(fp.relation_denotation(r, &args)));
        }
        relations.push(table);
    }
    let mut functions = Vec::new();
    for (g, (name, arity)) in sig.functions().iter().enumerate() {
        let cells = k.pow(*arity as u32);
        let mut table = Vec::with_capacity(cells);
        for i in 0..cells {
            let tuple = index_tuple(k, *arity, i);
            let args: Vec<&Section> = tuple.iter().map(|&c| fp.representative(c)).collect();
            let value = fp.apply_pointwise(g, &args);
            let c = fp.class_of(&value).ok_or_else(|| {
                Error::System(format!("{name} left S_F at {}", sys.format_section(&value)))
            })?;
            table.push(c);
        }
        functions.push(table);
    }
    let full = sys.index().full();
    let mut constants = Vec::new();
    for (c, name) in sig.constants().iter().enumerate() {
        let values = (0..sys.index().len())
            .map(|x| Some(sys.structure(x).constant(c)))
            .collect();
        let s = Section {
            domain: full,
            values,
        };
        constants.push(
            fp.class_of(&s)
                .ok_or_else(|| Error::System(format!("constant {name} has no global section")))?,
        );
    }
    Ok(Structure::from_tables(
        sig, names, relations, functions, constants,
    ))
}

/// The element of `prime_product(sys, point_filter(x))` that `m ∈ M_x`
/// goes to: the class of `y ↦ f_xy(m)` over `↑x`.
pub fn point_section(sys: &OrderedSystem, x: usize, m: Elem) -> Section {
    let up = sys.index().up_of(x);
    let values = (0..sys.index().len())
        .map(|y| (up & (1 << y) != 0).then(|| sys.map(x, y).apply(m)))
        .collect();
    Section { domain: up, values }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::poset::{enumerate_prime_filters, point_filter, principal_upset_filter, Poset};
    use crate::structure::{find_isomorphism, Hom};

    fn k2() -> Structure {
        Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
    }
    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }
    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }
    fn tree3() -> Poset {
        Poset::from_cover(
            names(&["x", "y", "z"]),
            &[("x".into(), "y".into()), ("x".into(), "z".into())],
        )
        .unwrap()
    }
    fn chain_sys() -> OrderedSystem {
        let idx = Poset::chain(names(&["0", "1"])).unwrap();
        OrderedSystem::new(
            idx,
            vec![p3(), k2()],
            [((0, 1), Hom::new(vec![0, 1, 0]))].into(),
        )
        .unwrap()
    }

    #[test]
    fn power_set_filter_collapses() {
        let id = Poset::id_poset(names(&["0", "1"])).unwrap();
        let sys = OrderedSystem::constant(id.clone(), &k2()).unwrap();
        let improper = Filter::from_masks(id.upsets());
        let fp = filter_product(&sys, &improper).unwrap();
        assert_eq!(fp.len(), 1);
        let full = Filter::from_masks(vec![0b11]);
        let fp = filter_product(&sys, &full).unwrap();
        assert_eq!(fp.len(), 4);
        assert_eq!(fp.structure().tuples(0).count(), 4);
    }

    #[test]
    fn point_filters_collapse_to_the_component() {
        let sys = chain_sys();
        let fp = filter_product(&sys, &point_filter(sys.index(), 1)).unwrap();
        assert!(find_isomorphism(fp.structure(), &k2()).unwrap().is_some());
        let lim = prime_product(&sys, &principal_upset_filter(sys.index()).unwrap()).unwrap();
        assert!(find_isomorphism(lim.structure(), &k2()).unwrap().is_some());
        let fp0 = prime_product(&sys, &point_filter(sys.index(), 0)).unwrap();
        assert!(find_isomorphism(fp0.structure(), &p3()).unwrap().is_some());
        for m in 0..3 {
            assert!(fp0.class_of(&point_section(&sys, 0, m)).is_some());
        }
    }

    #[test]
    fn tree_products() {
        let sys = OrderedSystem::constant(tree3(), &k2()).unwrap();
        for f in enumerate_prime_filters(sys.index()) {
            let fp = prime_product(&sys, &f).unwrap();
            assert!(find_isomorphism(fp.structure(), &k2()).unwrap().is_some());
        }
        let bad = Filter::from_masks(vec![0b110, 0b111]);
        assert!(matches!(prime_product(&sys, &bad), Err(Error::NotPrime(_))));
        assert!(filter_product(&sys, &bad).is_ok());
        let not_filter = Filter::from_masks(vec![0b010]);
        assert!(matches!(
            filter_product(&sys, &not_filter),
            Err(Error::NotFilter(_))
        ));
    }

    #[test]
    fn functions_and_constants() {
        let raw = r#"{"signature": {"functions":[["s",1]], "constants":["z"]},
            "universe":["0","1","2"], "functions":{"s":[["0","1"],["1","2"],["2","0"]]},
            "constants":{"z":"0"}}"#;
        let m = crate::structure::validate_structure(&serde_json::from_str(raw).unwrap()).unwrap();
        let id = Poset::id_poset(names(&["p", "q"])).unwrap();
        let sys = OrderedSystem::new(id, vec![m.clone(), m.clone()], BTreeMap::new()).unwrap();
        let fp = filter_product(&sys, &Filter::from_masks(vec![0b11])).unwrap();
        assert_eq!(fp.len(), 9);
        let z = fp.structure().constant(0);
        let s = |e| fp.structure().apply(0, &[e]);
        assert_eq!(s(s(s(z))), z);
        assert_ne!(s(z), z);
    }
}
