//! Ordered systems of structures over finite forests, sections and
//! denotation sets, and ω-chains given by a prefix and a repeating
//! endomorphism.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{CompiledFormula, Formula};
use crate::poset::{members, Mask, Poset, RawPoset};
use crate::structure::{
    compose, hom_violation, validate_structure, Elem, Hom, RawStructure, Signature, Structure,
};

#[derive(Clone, Debug)]
pub struct OrderedSystem {
    index: Poset,
    structures: Vec<Structure>,
    /// `maps[x][y]` is `f_xy` for `x <= y`.
    maps: Vec<Vec<Option<Hom>>>,
}

/// Reads a name-to-name map as a hom between two structures' universes.
pub fn hom_from_names(m: &Structure, n: &Structure, map: &BTreeMap<String, String>) -> Result<Hom> {
    let mut out = vec![usize::MAX; m.len()];
    for (a, b) in map {
        let i = m
            .element(a)
            .ok_or_else(|| Error::UnknownElement(a.clone()))?;
        let j = n
            .element(b)
            .ok_or_else(|| Error::UnknownElement(b.clone()))?;
        out[i] = j;
    }
    if let Some(i) = out.iter().position(|&e| e == usize::MAX) {
        return Err(Error::PartialMap(format!("no image for `{}`", m.name(i))));
    }
    Ok(Hom::new(out))
}

pub fn hom_to_names(h: &Hom, m: &Structure, n: &Structure) -> BTreeMap<String, String> {
    h.map
        .iter()
        .enumerate()
        .map(|(i, &j)| (m.name(i).to_string(), n.name(j).to_string()))
        .collect()
}

impl OrderedSystem {
    /// Builds a system from one structure per index point and connecting
    /// homs keyed by `(x, y)` with `x < y`. Every covering pair needs a hom;
    /// the others are optional and must agree with the composites.
    pub fn new(
        index: Poset,
        structures: Vec<Structure>,
        homs: BTreeMap<(usize, usize), Hom>,
    ) -> Result<Self> {
        if let Some((x, a, b)) = index.forest_violation() {
            return Err(Error::NotForest(format!(
                "downset of {} contains incomparable {} and {}",
                index.name(x),
                index.name(a),
                index.name(b)
            )));
        }
        if structures.len() != index.len() {
            return Err(Error::System(format!(
                "{} structures for {} index points",
                structures.len(),
                index.len()
            )));
        }
        if structures.iter().any(|s| !s.same_signature(&structures[0])) {
            return Err(Error::SignatureMismatch);
        }
        let n = index.len();
        for (&(x, y), h) in &homs {
            if !index.le(x, y) {
                return Err(Error::System(format!(
                    "hom {}->{} between incomparable points",
                    index.name(x),
                    index.name(y)
                )));
            }
            if x == y && *h != Hom::identity(structures[x].len()) {
                return Err(Error::System(format!(
                    "identity failure: f_{0}{0} is not the identity",
                    index.name(x)
                )));
            }
            if let Some(v) = hom_violation(&structures[x], &structures[y], h)? {
                return Err(Error::System(format!(
                    "f_{}{} is not a homomorphism: {v}",
                    index.name(x),
                    index.name(y)
                )));
            }
        }
        let mut maps: Vec<Vec<Option<Hom>>> = vec![vec![None; n]; n];
        for x in 0..n {
            maps[x][x] = Some(Hom::identity(structures[x].len()));
        }
        // Points in order of depth so parents come first.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| index.down_of(x).count_ones());
        for &y in &order {
            let Some(p) = index.parent(y) else { continue };
            let cover = homs.get(&(p, y)).ok_or_else(|| {
                Error::System(format!("missing hom {}->{}", index.name(p), index.name(y)))
            })?;
            for x in members(index.down_of(p)) {
                let via = maps[x][p]
                    .clone()
                    .expect("parent composites computed first");
                maps[x][y] = Some(compose(&via, cover));
            }
        }
        for (&(x, y), h) in &homs {
            let expected = maps[x][y].as_ref().expect("comparable pair");
            if h != expected {
                let z = index.parent(y).unwrap_or(x);
                return Err(Error::System(format!(
                    "functoriality failure at ({},{},{}): f_{}{} differs from the composite",
                    index.name(x),
                    index.name(z),
                    index.name(y),
                    index.name(x),
                    index.name(y)
                )));
            }
        }
        Ok(OrderedSystem {
            index,
            structures,
            maps,
        })
    }

    /// All structures equal to `m`, identities as connecting maps.
    pub fn constant(index: Poset, m: &Structure) -> Result<Self> {
        let mut homs = BTreeMap::new();
        for y in 0..index.len() {
            if let Some(p) = index.parent(y) {
                homs.insert((p, y), Hom::identity(m.len()));
            }
        }
        let structures = vec![m.clone(); index.len()];
        OrderedSystem::new(index, structures, homs)
    }

    pub fn index(&self) -> &Poset {
        &self.index
    }

    pub fn structure(&self, x: usize) -> &Structure {
        &self.structures[x]
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn signature(&self) -> &Signature {
        self.structures[0].signature()
    }

    pub(crate) fn signature_arc(&self) -> Arc<Signature> {
        Arc::new(self.signature().clone())
    }

    /// `f_xy`; panics unless `x <= y`.
    pub fn map(&self, x: usize, y: usize) -> &Hom {
        self.maps[x][y].as_ref().expect("f_xy needs x <= y")
    }

    pub fn sections(&self, v: Mask) -> Result<Vec<Section>> {
        if !self.index.is_upset(v) {
            return Err(Error::NotUpset(
                self.index.format_set(v & self.index.full()),
            ));
        }
        let mins = self.index.minimal(v);
        let mut out = Vec::new();
        let mut digits = vec![0usize; mins.len()];
        let n = self.index.len();
        'outer: loop {
            let mut values = vec![None; n];
            for (&m, &d) in mins.iter().zip(&digits) {
                for y in members(v & self.index.up_of(m)) {
                    values[y] = Some(self.map(m, y).apply(d));
                }
            }
            out.push(Section { domain: v, values });
            for k in (0..mins.len()).rev() {
                digits[k] += 1;
                if digits[k] < self.structures[mins[k]].len() {
                    continue 'outer;
                }
                digits[k] = 0;
            }
            break;
        }
        out.sort();
        Ok(out)
    }

    /// Whether `a` is a coherent section over an upset.
    pub fn is_section(&self, a: &Section) -> bool {
        let v = a.domain;
        if !self.index.is_upset(v) || a.values.len() != self.index.len() {
            return false;
        }
        for x in 0..self.index.len() {
            let inside = v & (1 << x) != 0;
            match a.values[x] {
                Some(e) if inside && e < self.structures[x].len() => {}
                None if !inside => {}
                _ => return false,
            }
        }
        members(v).all(|y| {
            members(v & self.index.up_of(y)).all(|z| self.map(y, z).apply(a.value(y)) == a.value(z))
        })
    }

    /// `⟦φ(a1,…,an)⟧`: the points in every parameter's domain where the
    /// component satisfies `φ`. Parameters bind the free variables of `φ` in
    /// order of first occurrence.
    pub fn denotation(&self, phi: &Formula, params: &[Section]) -> Result<Mask> {
        let free = crate::logic::resolve(phi, self.signature())?.free_vars_ordered();
        if free.len() != params.len() {
            return Err(Error::Arity {
                symbol: "parameters".into(),
                expected: free.len(),
                found: params.len(),
            });
        }
        let c = CompiledFormula::new(phi, self.signature(), &free)?;
        Ok(self.denotation_compiled(&c, params))
    }

    pub(crate) fn denotation_compiled(&self, c: &CompiledFormula, params: &[Section]) -> Mask {
        let common = params
            .iter()
            .fold(self.index.full(), |acc, a| acc & a.domain);
        let mut out = 0;
        let mut args = vec![0; params.len()];
        for x in members(common) {
            for (slot, a) in args.iter_mut().zip(params) {
                *slot = a.value(x);
            }
            if c.holds(&self.structures[x], &args) {
                out |= 1 << x;
            }
        }
        out
    }

    pub fn format_section(&self, a: &Section) -> String {
        let parts: Vec<String> = members(a.domain)
            .map(|x| {
                format!(
                    "{}:{}",
                    self.index.name(x),
                    self.structures[x].name(a.value(x))
                )
            })
            .collect();
        format!("<{}>", parts.join(" "))
    }
}

/// A coherent family over an upset: `values[x]` is set exactly on the domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Section {
    pub domain: Mask,
    pub values: Vec<Option<Elem>>,
}

impl Section {
    #[inline]
    pub fn value(&self, x: usize) -> Elem {
        self.values[x].expect("point in the section's domain")
    }

    pub fn restrict(&self, v: Mask) -> Result<Section> {
        if v & !self.domain != 0 {
            return Err(Error::Restriction(format!(
                "{v:#b} is not inside {:#b}",
                self.domain
            )));
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(x, e)| if v & (1 << x) != 0 { *e } else { None })
            .collect();
        Ok(Section { domain: v, values })
    }
}

/// Restriction with an upset check against the system's index.
pub fn restrict(sys: &OrderedSystem, a: &Section, v: Mask) -> Result<Section> {
    if !sys.index().is_upset(v) {
        return Err(Error::NotUpset(sys.index().format_set(v)));
    }
    a.restrict(v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    pub poset: RawPoset,
    pub structures: BTreeMap<String, RawStructure>,
    #[serde(default)]
    pub homs: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn validate_system(raw: &RawSystem) -> Result<OrderedSystem> {
    let index = crate::poset::validate_poset(&raw.poset)?;
    if let Some((x, a, b)) = index.forest_violation() {
        return Err(Error::NotForest(format!(
            "downset of {} contains incomparable {} and {}",
            index.name(x),
            index.name(a),
            index.name(b)
        )));
    }
    for key in raw.structures.keys() {
        index.element_or_err(key)?;
    }
    let mut structures = Vec::with_capacity(index.len());
    for name in index.names() {
        let r = raw
            .structures
            .get(name)
            .ok_or_else(|| Error::System(format!("no structure at index point `{name}`")))?;
        structures.push(validate_structure(r)?);
    }
    let mut homs = BTreeMap::new();
    for (key, map) in &raw.homs {
        let (a, b) = key
            .split_once("->")
            .ok_or_else(|| Error::System(format!("hom key `{key}` is not of the form x->y")))?;
        let x = index.element_or_err(a.trim())?;
        let y = index.element_or_err(b.trim())?;
        let h = hom_from_names(&structures[x], &structures[y], map)?;
        homs.insert((x, y), h);
    }
    OrderedSystem::new(index, structures, homs)
}

pub fn system_to_raw(sys: &OrderedSystem) -> RawSystem {
    let p = sys.index();
    let mut homs = BTreeMap::new();
    for y in 0..p.len() {
        if let Some(x) = p.parent(y) {
            homs.insert(
                format!("{}->{}", p.name(x), p.name(y)),
                hom_to_names(sys.map(x, y), sys.structure(x), sys.structure(y)),
            );
        }
    }
    RawSystem {
        poset: p.to_raw(),
        structures: p
            .names()
            .iter()
            .zip(sys.structures())
            .map(|(n, s)| (n.clone(), s.to_raw()))
            .collect(),
        homs,
    }
}

/// `M_0 -> … -> M_{p-1} -> M -> M -> …`: a finite prefix whose last link
/// enters the tail `M`, which then repeats under the endomorphism `e`.
#[derive(Clone, Debug)]
pub struct OmegaChain {
    pub prefix: Vec<(Structure, Hom)>,
    pub tail: Structure,
    pub endo: Hom,
}

impl OmegaChain {
    pub fn new(prefix: Vec<(Structure, Hom)>, tail: Structure, endo: Hom) -> Result<Self> {
        for (i, (s, link)) in prefix.iter().enumerate() {
            let next = prefix.get(i + 1).map(|(t, _)| t).unwrap_or(&tail);
            if let Some(v) = hom_violation(s, next, link)? {
                return Err(Error::System(format!(
                    "prefix link {i} is not a homomorphism: {v}"
                )));
            }
        }
        if let Some(v) = hom_violation(&tail, &tail, &endo)? {
            return Err(Error::System(format!(
                "endomorphism is not a homomorphism: {v}"
            )));
        }
        Ok(OmegaChain { prefix, tail, endo })
    }

    pub fn repeating(tail: Structure, endo: Hom) -> Result<Self> {
        OmegaChain::new(vec![], tail, endo)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPrefixStage {
    pub structure: RawStructure,
    pub link: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOmegaChain {
    #[serde(default)]
    pub prefix: Vec<RawPrefixStage>,
    pub tail: RawStructure,
    pub endo: BTreeMap<String, String>,
}

pub fn validate_omega_chain(raw: &RawOmegaChain) -> Result<OmegaChain> {
    let tail = validate_structure(&raw.tail)?;
    let stages: Vec<Structure> = raw
        .prefix
        .iter()
        .map(|p| validate_structure(&p.structure))
        .collect::<Result<_>>()?;
    let mut prefix = Vec::new();
    for (i, s) in stages.iter().enumerate() {
        let next = stages.get(i + 1).unwrap_or(&tail);
        let link = hom_from_names(s, next, &raw.prefix[i].link)?;
        prefix.push((s.clone(), link));
    }
    let endo = hom_from_names(&tail, &tail, &raw.endo)?;
    OmegaChain::new(prefix, tail, endo)
}

/// The direct limit of an ω-chain with its canonical stage maps.
#[derive(Clone, Debug)]
pub struct OmegaColimit {
    /// The substructure of the tail induced on the eventual image of `e`.
    pub structure: Structure,
    /// Tail elements forming the eventual image, in order.
    pub image: Vec<Elem>,
    /// `e^k = e^(k + period)` for all `k >= cycle_start`.
    pub cycle_start: usize,
    pub period: usize,
    prefix_len: usize,
    /// `e^K` as a table, K the cycle start.
    power: Vec<Elem>,
    /// Inverse of `σ = e` on the image, as tail elements.
    sigma_inv: Vec<Elem>,
    prefix_links: Vec<Hom>,
}

/// Direct limit of a repeating chain, computed by stabilizing powers of `e`.
pub fn omega_colimit(ch: &OmegaChain) -> Result<OmegaColimit> {
    let n = ch.tail.len();
    let e = &ch.endo.map;
    let mut powers: Vec<Vec<Elem>> = vec![(0..n).collect()];
    let (cycle_start, period) = loop {
        let last = powers.last().expect("nonempty");
        let next: Vec<Elem> = last.iter().map(|&a| e[a]).collect();
        if let Some(j) = powers.iter().position(|p| *p == next) {
            break (j, powers.len() - j);
        }
        powers.push(next);
    };
    let power = powers[cycle_start].clone();
    let mut image = power.clone();
    image.sort_unstable();
    image.dedup();
    let mut sigma_inv = vec![usize::MAX; n];
    for &b in &image {
        sigma_inv[e[b]] = b;
    }
    let structure = ch.tail.induced(&image)?;
    Ok(OmegaColimit {
        structure,
        image,
        cycle_start,
        period,
        prefix_len: ch.prefix.len(),
        power,
        sigma_inv,
        prefix_links: ch.prefix.iter().map(|(_, l)| l.clone()).collect(),
    })
}

impl OmegaColimit {
    /// Position in the colimit universe of a tail element of the image.
    fn position(&self, b: Elem) -> Elem {
        self.image
            .binary_search(&b)
            .expect("element of the eventual image")
    }

    /// `ψ_t` for tail stage `t` (stage `prefix_len + t` of the chain).
    pub fn tail_stage_map(&self, t: usize) -> Hom {
        // σ has order dividing the period, so only the residue matters.
        let steps = (t + self.cycle_start) % self.period;
        Hom::new(
            self.power
                .iter()
                .map(|&a| {
                    let mut b = a;
                    for _ in 0..steps {
                        b = self.sigma_inv[b];
                    }
                    self.position(b)
                })
                .collect(),
        )
    }

    /// The canonical map from chain stage `j`.
    pub fn stage_map(&self, j: usize) -> Hom {
        if j >= self.prefix_len {
            return self.tail_stage_map(j - self.prefix_len);
        }
        let mut h = self.tail_stage_map(0);
        for link in self.prefix_links[j..].iter().rev() {
            h = compose(link, &h);
        }
        h
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    /// Tail elements representing each colimit element at tail stage 0.
    pub fn representatives(&self) -> &[Elem] {
        &self.image
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::poset::Poset;
    use crate::structure::find_isomorphism;

    fn k2() -> Structure {
        Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
    }
    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }

    fn chain_system(f: Vec<Elem>) -> Result<OrderedSystem> {
        let idx = Poset::chain(vec!["0".into(), "1".into()]).unwrap();
        OrderedSystem::new(idx, vec![p3(), k2()], [((0, 1), Hom::new(f))].into())
    }

    #[test]
    fn validation_examples() {
        assert!(chain_system(vec![0, 1, 0]).is_ok());
        let err = chain_system(vec![0, 0, 0]).unwrap_err();
        assert!(err.to_string().contains("E(u,v) not preserved"), "{err}");
        let diamond = Poset::from_cover(
            ["b", "l", "r", "t"].iter().map(|s| s.to_string()).collect(),
            &[("b", "l"), ("b", "r"), ("l", "t"), ("r", "t")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let err = OrderedSystem::constant(diamond, &k2()).unwrap_err();
        assert!(matches!(err, Error::NotForest(_)));
    }

    #[test]
    fn functoriality_is_checked() {
        let idx = Poset::chain(vec!["0".into(), "1".into(), "2".into()]).unwrap();
        let homs: BTreeMap<(usize, usize), Hom> = [
            ((0, 1), Hom::new(vec![0, 1])),
            ((1, 2), Hom::new(vec![1, 0])),
            ((0, 2), Hom::new(vec![0, 1])),
        ]
        .into();
        let err = OrderedSystem::new(idx, vec![k2(), k2(), k2()], homs).unwrap_err();
        assert!(
            err.to_string().contains("functoriality failure at (0,1,2)"),
            "{err}"
        );
    }

    #[test]
    fn section_examples() {
        let sys = chain_system(vec![0, 1, 0]).unwrap();
        let all = sys.sections(0b11).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.iter().all(|a| sys.is_section(a)));
        assert_eq!(sys.sections(0b10).unwrap().len(), 2);
        assert_eq!(sys.sections(0).unwrap().len(), 1);
        assert!(matches!(sys.sections(0b01), Err(Error::NotUpset(_))));
        let a = &all[1];
        assert_eq!(a.restrict(0b10).unwrap().values, vec![None, Some(1)]);
        assert_eq!(&a.restrict(a.domain).unwrap(), a);
        let top = &sys.sections(0b10).unwrap()[0];
        assert!(matches!(top.restrict(0b11), Err(Error::Restriction(_))));
    }

    #[test]
    fn denotation_examples() {
        let sys = chain_system(vec![0, 1, 0]).unwrap();
        let loops = parse_formula("exists v. E(v,v)").unwrap();
        assert_eq!(sys.denotation(&loops, &[]).unwrap(), 0);
        let edge = parse_formula("exists v. exists w. E(v,w)").unwrap();
        assert_eq!(sys.denotation(&edge, &[]).unwrap(), 0b11);
        let all = sys.sections(0b11).unwrap();
        let through_u = all.iter().find(|a| a.value(0) == 0).unwrap().clone();
        let through_w = all.iter().find(|a| a.value(0) == 2).unwrap().clone();
        let e12 = parse_formula("E(v1,v2)").unwrap();
        assert_eq!(sys.denotation(&e12, &[through_u, through_w]).unwrap(), 0);
    }

    #[test]
    fn colimit_examples() {
        let ch = OmegaChain::repeating(p3(), Hom::new(vec![0, 1, 0])).unwrap();
        let lim = omega_colimit(&ch).unwrap();
        assert!(find_isomorphism(&lim.structure, &k2()).unwrap().is_some());
        let id = OmegaChain::repeating(p3(), Hom::identity(3)).unwrap();
        let lim = omega_colimit(&id).unwrap();
        assert_eq!(lim.structure, p3());
        let swap = OmegaChain::repeating(k2(), Hom::new(vec![1, 0])).unwrap();
        let lim = omega_colimit(&swap).unwrap();
        assert_eq!((lim.cycle_start, lim.period), (0, 2));
        // ψ_{t+1} ∘ e = ψ_t
        for t in 0..4 {
            let lhs = compose(&swap.endo, &lim.tail_stage_map(t + 1));
            assert_eq!(lhs, lim.tail_stage_map(t));
        }
    }

    #[test]
    fn prefix_stages_compose() {
        let ch = OmegaChain::new(
            vec![(p3(), Hom::new(vec![0, 1, 0]))],
            k2(),
            Hom::identity(2),
        )
        .unwrap();
        let lim = omega_colimit(&ch).unwrap();
        assert_eq!(lim.stage_map(0), Hom::new(vec![0, 1, 0]));
        assert_eq!(lim.stage_map(1), Hom::identity(2));
    }

    /// A unary predicate is carried forward by every endomorphism, so "map
    /// everything into the non-P part" is only a homomorphism when P is empty.
    #[test]
    fn unary_predicates_persist_along_the_tail() {
        let sig = Arc::new(Signature::new(vec![("P".into(), 1)], vec![], vec![]).unwrap());
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let with_p = Structure::new(sig.clone(), names.clone(), vec![vec![vec![0]]], vec![], vec![]).unwrap();
        assert!(OmegaChain::repeating(with_p, Hom::new(vec![1, 2, 2])).is_err());
        let without = Structure::new(sig, names, vec![vec![]], vec![], vec![]).unwrap();
        let lim = omega_colimit(&OmegaChain::repeating(without, Hom::new(vec![1, 2, 2])).unwrap()).unwrap();
        assert_eq!(lim.structure.len(), 1);
        assert_eq!(lim.structure.tuples(0).count(), 0);
        assert_eq!(lim.cycle_start, 2);
    }
}
