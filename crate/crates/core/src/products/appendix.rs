use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::classical::{ultrafilter_violation, ReducedProduct};
use super::filter_product::{prime_product, FilterProduct};
use crate::error::{Error, Result};
use crate::poset::{is_prime_filter, Filter, Mask, Poset, RawPoset};
use crate::structure::{is_homomorphism, Elem, Hom, RawStructure, Signature, Structure};
use crate::systems::{OrderedSystem, Section};

/// A family of finite chains of structures with an ultrafilter over the
/// family, assembled into one system over the disjoint union of the chains.
#[derive(Clone, Debug)]
pub struct AppendixBundle {
    pub chains: Vec<OrderedSystem>,
    /// Members of `U` as subsets of the chain indices.
    pub ultrafilter: Vec<Mask>,
    pub system: OrderedSystem,
    /// Union-poset points of each chain, bottom first.
    pub chain_points: Vec<Vec<usize>>,
    pub filter: Filter,
    pub ultraproduct: ReducedProduct,
    pub product: FilterProduct,
    /// `ĝ`: ultraproduct element to prime product element.
    pub g_hat: Vec<usize>,
    pub checks: AppendixChecks,
}

/// Outcome of each step of the verification.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct AppendixChecks {
    /// `F` is a prime filter.
    pub filter_prime: bool,
    /// `g(a)` is a section with domain `Y_a` and `Y_a ∈ F`.
    pub sections_in_s_f: bool,
    /// `≡_U`-equal tuples go to `≡_F`-equal sections.
    pub well_defined: bool,
    /// `ĝ` and its inverse are homomorphisms.
    pub embedding: bool,
    /// Every product element is hit through the `b`, `y_α` construction.
    pub surjective: bool,
    /// Presenting each element at its top stage instead gives `≡_F`-equal
    /// sections.
    pub choice_independent: bool,
}

impl AppendixChecks {
    pub fn all(&self) -> bool {
        self.filter_prime
            && self.sections_in_s_f
            && self.well_defined
            && self.embedding
            && self.surjective
            && self.choice_independent
    }
}

impl AppendixBundle {
    pub fn verified(&self) -> bool {
        self.checks.all()
    }

    fn top(&self, alpha: usize) -> usize {
        *self.chain_points[alpha].last().expect("nonempty chain")
    }

    fn chain_of(&self, x: usize) -> usize {
        self.chain_points
            .iter()
            .position(|c| c.contains(&x))
            .expect("point of some chain")
    }

    /// `(z_a, m_a)`: the least stage presenting `e` in the colimit of chain
    /// `alpha`, and the least element there presenting it.
    pub fn presentation(&self, alpha: usize, e: Elem) -> (usize, Elem) {
        let top = self.top(alpha);
        for &z in &self.chain_points[alpha] {
            let f = self.system.map(z, top);
            if let Some(m) = (0..self.system.structure(z).len()).find(|&m| f.apply(m) == e) {
                return (z, m);
            }
        }
        unreachable!("the top stage presents every element")
    }

    /// `g(a)`, with each coordinate presented by `present`.
    fn g_with(&self, a: &[Elem], present: impl Fn(usize, Elem) -> (usize, Elem)) -> Section {
        let n = self.system.index().len();
        let mut values = vec![None; n];
        let mut domain = 0;
        for (alpha, &e) in a.iter().enumerate() {
            let (z, m) = present(alpha, e);
            for &x in &self.chain_points[alpha] {
                if self.system.index().le(z, x) {
                    values[x] = Some(self.system.map(z, x).apply(m));
                    domain |= 1 << x;
                }
            }
        }
        Section { domain, values }
    }

    /// `g(a)` with the least presentations.
    pub fn g(&self, a: &[Elem]) -> Section {
        self.g_with(a, |alpha, e| self.presentation(alpha, e))
    }

    /// `Y_a`.
    pub fn y(&self, a: &[Elem]) -> Mask {
        self.g(a).domain
    }

    pub fn to_raw(&self) -> RawBundle {
        let idx = self.system.index();
        let ultra = &self.ultraproduct.structure;
        let prod = self.product.structure();
        RawBundle {
            poset: idx.to_raw(),
            filter: self.filter.to_lists(idx),
            ultraproduct: ultra.to_raw(),
            product: prod.to_raw(),
            g_hat: self
                .g_hat
                .iter()
                .enumerate()
                .map(|(i, &j)| (ultra.name(i).to_string(), prod.name(j).to_string()))
                .collect(),
            checks: self.checks.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RawBundle {
    pub poset: RawPoset,
    pub filter: Vec<Vec<String>>,
    pub ultraproduct: RawStructure,
    pub product: RawStructure,
    pub g_hat: BTreeMap<String, String>,
    pub checks: AppendixChecks,
}

/// Points of a chain poset, bottom first.
fn chain_order(p: &Poset) -> Vec<usize> {
    let mut pts: Vec<usize> = (0..p.len()).collect();
    pts.sort_by_key(|&x| p.down_of(x).count_ones());
    pts
}

/// Assembles the union system and filter, builds `ĝ` and checks each claim
/// of the construction.
pub fn appendix_transform(chains: &[OrderedSystem], u: &[Mask]) -> Result<AppendixBundle> {
    let first = chains.first().ok_or(Error::EmptyClass)?;
    let kappa = chains.len();
    if kappa > 16 {
        return Err(Error::TooLarge(format!("{kappa} chains")));
    }
    if let Some(v) = ultrafilter_violation(u, (1 << kappa) - 1)? {
        return Err(Error::Precondition(format!("not an ultrafilter: {v}")));
    }
    let sig: &Signature = first.signature();
    let mut names: Vec<String> = Vec::new();
    let mut covers: Vec<(String, String)> = Vec::new();
    let mut structures = Vec::new();
    let mut chain_points = Vec::new();
    let mut homs = BTreeMap::new();
    for (alpha, ch) in chains.iter().enumerate() {
        if ch.signature() != sig {
            return Err(Error::SignatureMismatch);
        }
        if !ch.index().is_chain() {
            return Err(Error::NotChain(format!("index of chain {alpha}")));
        }
        let order = chain_order(ch.index());
        let base = names.len();
        let mut pts = Vec::new();
        for (k, &x) in order.iter().enumerate() {
            let name = ch.index().name(x).to_string();
            if names.contains(&name) {
                return Err(Error::Precondition(format!(
                    "chains share the index name `{name}`"
                )));
            }
            names.push(name);
            structures.push(ch.structure(x).clone());
            pts.push(base + k);
            if k > 0 {
                covers.push((names[base + k - 1].clone(), names[base + k].clone()));
                homs.insert((base + k - 1, base + k), ch.map(order[k - 1], x).clone());
            }
        }
        chain_points.push(pts);
    }
    if names.len() > 64 {
        return Err(Error::TooLarge(format!("{} index points", names.len())));
    }
    let index = Poset::from_cover(names, &covers)?;
    let system = OrderedSystem::new(index, structures, homs)?;

    let mut u_sorted = u.to_vec();
    u_sorted.sort_unstable();
    u_sorted.dedup();
    let in_u = |s: Mask| u_sorted.binary_search(&s).is_ok();
    let touched = |v: Mask| {
        chain_points
            .iter()
            .enumerate()
            .filter(|(_, pts)| pts.iter().any(|&x| v & (1 << x) != 0))
            .fold(0, |acc: Mask, (alpha, _)| acc | 1 << alpha)
    };
    let f_members: Vec<Mask> = system
        .index()
        .upsets()
        .into_iter()
        .filter(|&v| in_u(touched(v)))
        .collect();
    let filter = Filter::from_masks(f_members);
    let filter_prime = is_prime_filter(system.index(), filter.members())?;
    if !filter_prime {
        // Without primeness the product below is refused, so report here.
        return Err(Error::NotPrime("assembled filter".into()));
    }

    let tops: Vec<Structure> = chain_points
        .iter()
        .map(|pts| system.structure(*pts.last().expect("nonempty")).clone())
        .collect();
    let ultraproduct = ReducedProduct::new(&tops, &u_sorted)?;
    let product = prime_product(&system, &filter)?;
    let mut bundle = AppendixBundle {
        chains: chains.to_vec(),
        ultrafilter: u_sorted.clone(),
        system,
        chain_points,
        filter,
        ultraproduct,
        product,
        g_hat: Vec::new(),
        checks: AppendixChecks {
            filter_prime,
            ..AppendixChecks::default()
        },
    };

    // g on representatives, then the remaining checks over every tuple.
    let b = &bundle;
    let mut sections_ok = true;
    let mut g_hat = Vec::new();
    for rep in &b.ultraproduct.representatives {
        let s = b.g(rep);
        sections_ok &= b.system.is_section(&s) && b.filter.contains(s.domain);
        sections_ok &= s.domain == expected_y(b, rep);
        match b.product.class_of(&s) {
            Some(c) => g_hat.push(c),
            None => {
                sections_ok = false;
                g_hat.push(usize::MAX);
            }
        }
    }
    let mut well_defined = sections_ok;
    let mut choice_independent = sections_ok;
    if sections_ok {
        for t in b.ultraproduct.tuples() {
            let s = b.g(&t);
            let cls = b.product.class_of(&s);
            well_defined &= cls == Some(g_hat[b.ultraproduct.class_of(&t)]);
            let alt = b.g_with(&t, |alpha, e| (b.top(alpha), e));
            choice_independent &= b.product.class_of(&alt) == cls && b.product.equivalent(&alt, &s);
        }
    }
    let mut embedding = false;
    let mut surjective = false;
    if well_defined {
        let h = Hom::new(g_hat.clone());
        let n = b.product.len();
        let bijective = g_hat.len() == n && h.is_injective();
        embedding =
            bijective && is_homomorphism(&b.ultraproduct.structure, b.product.structure(), &h)?;
        if embedding {
            let mut inv = vec![0; n];
            for (i, &j) in g_hat.iter().enumerate() {
                inv[j] = i;
            }
            embedding = is_homomorphism(
                b.product.structure(),
                &b.ultraproduct.structure,
                &Hom::new(inv),
            )?;
        }
        surjective = (0..n).all(|c| {
            let rep = b.product.representative(c);
            let a: Vec<Elem> = b
                .chain_points
                .iter()
                .map(
                    |pts| match pts.iter().find(|&&y| rep.domain & (1 << y) != 0) {
                        Some(&y) => b
                            .system
                            .map(y, *pts.last().expect("nonempty"))
                            .apply(rep.value(y)),
                        None => 0,
                    },
                )
                .collect();
            g_hat[b.ultraproduct.class_of(&a)] == c
        });
    }
    bundle.checks.sections_in_s_f = sections_ok;
    bundle.checks.well_defined = well_defined;
    bundle.checks.embedding = embedding;
    bundle.checks.surjective = surjective;
    bundle.checks.choice_independent = choice_independent;
    bundle.g_hat = g_hat;
    Ok(bundle)
}

/// `Y_a` straight from its definition: the points above `z_{a(α)}` in each
/// chain `X_α`.
fn expected_y(b: &AppendixBundle, a: &[Elem]) -> Mask {
    let mut y = 0;
    for x in 0..b.system.index().len() {
        let alpha = b.chain_of(x);
        let (z, _) = b.presentation(alpha, a[alpha]);
        if b.system.index().le(z, x) {
            y |= 1 << x;
        }
    }
    y
}

/// A random digraph with `1..=max_size` elements.
fn random_graph(rng: &mut impl Rng, max_size: usize, prefix: &str) -> Structure {
    let n = rng.gen_range(1..=max_size);
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(0.35) {
                edges.push((refs[a], refs[b]));
            }
        }
    }
    Structure::graph(&refs, &edges).expect("valid graph")
}

/// A random chain of `1..=max_len` digraphs: each link is a random map and
/// the next stage gains the edges needed to make it a homomorphism.
pub fn random_chain(
    rng: &mut impl Rng,
    tag: &str,
    max_len: usize,
    max_size: usize,
) -> Result<OrderedSystem> {
    let len = rng.gen_range(1..=max_len);
    let mut structures = vec![random_graph(rng, max_size, "e")];
    let mut homs = BTreeMap::new();
    for k in 1..len {
        let prev = &structures[k - 1];
        let next = random_graph(rng, max_size, "e");
        let map: Vec<Elem> = (0..prev.len())
            .map(|_| rng.gen_range(0..next.len()))
            .collect();
        let mut edges: Vec<(String, String)> = next
            .tuples(0)
            .map(|t| (next.name(t[0]).to_string(), next.name(t[1]).to_string()))
            .collect();
        for t in prev.tuples(0) {
            edges.push((
                next.name(map[t[0]]).to_string(),
                next.name(map[t[1]]).to_string(),
            ));
        }
        let refs: Vec<&str> = next.names().iter().map(|s| s.as_str()).collect();
        let e: Vec<(&str, &str)> = edges
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        structures.push(Structure::graph(&refs, &e)?);
        homs.insert((k - 1, k), Hom::new(map));
    }
    let names = (0..len).map(|k| format!("{tag}{k}")).collect();
    OrderedSystem::new(Poset::chain(names)?, structures, homs)
}

/// A random bundle: up to `max_kappa` chains and a principal ultrafilter
/// at a random chain.
pub fn random_bundle(
    rng: &mut impl Rng,
    max_kappa: usize,
    max_len: usize,
    max_size: usize,
) -> Result<(Vec<OrderedSystem>, Vec<Mask>)> {
    let kappa = rng.gen_range(1..=max_kappa);
    let chains = (0..kappa)
        .map(|alpha| random_chain(rng, &format!("c{alpha}."), max_len, max_size))
        .collect::<Result<Vec<_>>>()?;
    let at = rng.gen_range(0..kappa);
    Ok((chains, principal_ultrafilter(kappa, at)))
}

/// `{S ⊆ κ : at ∈ S}`.
pub fn principal_ultrafilter(kappa: usize, at: usize) -> Vec<Mask> {
    (0..1u64 << kappa).filter(|s| s & (1 << at) != 0).collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::structure::find_isomorphism;

    fn k2() -> Structure {
        Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
    }
    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }
    fn single(name: &str, m: Structure) -> OrderedSystem {
        OrderedSystem::constant(Poset::chain(vec![name.into()]).unwrap(), &m).unwrap()
    }
    fn folding(a: &str, b: &str) -> OrderedSystem {
        let idx = Poset::chain(vec![a.into(), b.into()]).unwrap();
        OrderedSystem::new(
            idx,
            vec![p3(), k2()],
            [((0, 1), Hom::new(vec![0, 1, 0]))].into(),
        )
        .unwrap()
    }

    #[test]
    fn two_chains_principal_at_the_folding_one() {
        let chains = vec![single("s", p3()), folding("p", "q")];
        let b = appendix_transform(&chains, &principal_ultrafilter(2, 1)).unwrap();
        assert!(b.verified(), "{:?}", b.checks);
        assert!(find_isomorphism(&b.ultraproduct.structure, &k2())
            .unwrap()
            .is_some());
        assert!(find_isomorphism(b.product.structure(), &k2())
            .unwrap()
            .is_some());
        let b0 = appendix_transform(&chains, &principal_ultrafilter(2, 0)).unwrap();
        assert!(b0.verified());
        assert!(find_isomorphism(b0.product.structure(), &p3())
            .unwrap()
            .is_some());
    }

    #[test]
    fn single_chain_is_its_limit() {
        let b = appendix_transform(&[folding("0", "1")], &[0b1]).unwrap();
        assert!(b.verified());
        assert_eq!(b.product.len(), 2);
    }

    #[test]
    fn bad_inputs() {
        let chains = vec![folding("p", "q"), folding("p", "r")];
        assert!(matches!(
            appendix_transform(&chains, &principal_ultrafilter(2, 0)),
            Err(Error::Precondition(_))
        ));
        let chains = vec![folding("p", "q"), folding("s", "t")];
        assert!(appendix_transform(&chains, &[0b11]).is_err());
    }

    #[test]
    fn random_bundles_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let (chains, u) = random_bundle(&mut rng, 3, 3, 3).unwrap();
            let b = appendix_transform(&chains, &u).unwrap();
            assert!(b.verified(), "{:?}", b.checks);
        }
    }
}
