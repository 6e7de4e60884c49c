//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use posmodel::logic::Formula;
use posmodel::poset::{Mask, Poset};
use posmodel::structure::{find_isomorphism, small_structures, Elem, Hom, Signature, Structure};
use posmodel::systems::OrderedSystem;
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn graph_sig() -> Arc<Signature> {
    Arc::new(Signature::graph())
}

pub fn k2() -> Structure {
    Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
}

pub fn k3() -> Structure {
    Structure::undirected(
        &["x1", "x2", "x3"],
        &[("x1", "x2"), ("x2", "x3"), ("x1", "x3")],
    )
    .unwrap()
}

pub fn p3() -> Structure {
    Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
}

/// Digraphs with at most `n` elements, up to isomorphism.
pub fn digraphs(n: usize) -> Vec<Structure> {
    small_structures(&graph_sig(), n).unwrap()
}

/// Simple loopless undirected graphs on `1..=max_n` vertices, up to
/// isomorphism, found by brute force over edge sets.
pub fn simple_graphs(max_n: usize) -> Vec<Structure> {
    let mut out: Vec<Structure> = Vec::new();
    for n in 1..=max_n {
        let names: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let start = out.len();
        for set in 0..1u32 << pairs.len() {
            let edges: Vec<(&str, &str)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| set & (1 << k) != 0)
                .map(|(_, &(i, j))| (refs[i], refs[j]))
                .collect();
            let g = Structure::undirected(&refs, &edges).unwrap();
            if !out[start..]
                .iter()
                .any(|h| find_isomorphism(h, &g).unwrap().is_some())
            {
                out.push(g);
            }
        }
    }
    out
}

/// Every map `m -> n` preserving all relations, by exhaustive enumeration
/// in lexicographic order of the value tables.
pub fn brute_homs(m: &Structure, n: &Structure) -> Vec<Vec<Elem>> {
    let k = m.len();
    let mut map = vec![0; k];
    let mut out = Vec::new();
    loop {
        if preserves(m, n, &map) {
            out.push(map.clone());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            map[i] += 1;
            if map[i] < n.len() {
                break;
            }
            map[i] = 0;
        }
    }
}

pub fn preserves(m: &Structure, n: &Structure, map: &[Elem]) -> bool {
    let sig = m.signature();
    let rel_ok = (0..sig.relations().len()).all(|r| {
        m.tuples(r).all(|t| {
            let image: Vec<Elem> = t.iter().map(|&e| map[e]).collect();
            n.holds(r, &image)
        })
    });
    let fun_ok = sig.functions().iter().enumerate().all(|(g, (_, arity))| {
        all_tuples(m.len(), *arity).iter().all(|t| {
            let image: Vec<Elem> = t.iter().map(|&e| map[e]).collect();
            map[m.apply(g, t)] == n.apply(g, &image)
        })
    });
    let const_ok = (0..sig.constants().len()).all(|c| map[m.constant(c)] == n.constant(c));
    rel_ok && fun_ok && const_ok
}

pub fn all_tuples(n: usize, arity: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Forests on `n` points given by parent arrays with `parent[i] < i`.
pub fn parent_arrays(n: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<Option<usize>>| {
                std::iter::once(None).chain((0..i).map(Some)).map(move |c| {
                    let mut p = p.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn forest(parents: &[Option<usize>]) -> Poset {
    let names: Vec<String> = (0..parents.len()).map(|i| format!("p{i}")).collect();
    let covers: Vec<(String, String)> = parents
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|j| (names[j].clone(), names[i].clone())))
        .collect();
    Poset::from_cover(names, &covers).unwrap()
}

/// Calls `f` on every system over the forest with components drawn from
/// `pool` and every choice of connecting homs.
pub fn for_each_system(
    parents: &[Option<usize>],
    pool: &[Structure],
    f: &mut impl FnMut(&OrderedSystem),
) {
    let index = forest(parents);
    let n = parents.len();
    let mut choice = vec![0usize; n];
    loop {
        let comps: Vec<Structure> = choice.iter().map(|&c| pool[c].clone()).collect();
        let options: Vec<Vec<Vec<Elem>>> = (0..n)
            .map(|i| match parents[i] {
                Some(j) => brute_homs(&comps[j], &comps[i]),
                None => vec![Vec::new()],
            })
            .collect();
        if options.iter().all(|o| !o.is_empty()) {
            let mut pick = vec![0usize; n];
            loop {
                let homs: BTreeMap<(usize, usize), Hom> = (0..n)
                    .filter_map(|i| {
                        parents[i].map(|j| ((j, i), Hom::new(options[i][pick[i]].clone())))
                    })
                    .collect();
                let sys = OrderedSystem::new(index.clone(), comps.clone(), homs).unwrap();
                f(&sys);
                if !odometer(&mut pick, |i| options[i].len()) {
                    break;
                }
            }
        }
        if !odometer(&mut choice, |_| pool.len()) {
            return;
        }
    }
}

/// Advances a mixed-radix counter; false once it wraps around.
pub fn odometer(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix(i) {
            return true;
        }
        digits[i] = 0;
    }
    false
}

pub fn random_digraph(rng: &mut impl Rng, max_size: usize, density: f64) -> Structure {
    let n = rng.gen_range(1..=max_size);
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                edges.push((refs[a], refs[b]));
            }
        }
    }
    Structure::graph(&refs, &edges).unwrap()
}

/// Adds to `target` the edges needed for `map: source -> target` to be a
/// homomorphism.
pub fn close_under(source: &Structure, target: &Structure, map: &[Elem]) -> Structure {
    let mut edges: Vec<(Elem, Elem)> = target.tuples(0).map(|t| (t[0], t[1])).collect();
    edges.extend(source.tuples(0).map(|t| (map[t[0]], map[t[1]])));
    let refs: Vec<&str> = target.names().iter().map(|s| s.as_str()).collect();
    let named: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (refs[a], refs[b])).collect();
    Structure::graph(&refs, &named).unwrap()
}

/// A random forest of `1..=max_points` points with random digraph
/// components; each child is made a target of a random map from its parent.
pub fn random_system(
    rng: &mut impl Rng,
    max_points: usize,
    max_size: usize,
    density: f64,
) -> OrderedSystem {
    let n = rng.gen_range(1..=max_points);
    let parents: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if i == 0 || rng.gen_bool(0.3) {
                None
            } else {
                Some(rng.gen_range(0..i))
            }
        })
        .collect();
    let mut comps: Vec<Structure> = Vec::new();
    let mut homs = BTreeMap::new();
    for (i, parent) in parents.iter().enumerate() {
        let fresh = random_digraph(rng, max_size, density);
        match *parent {
            None => comps.push(fresh),
            Some(j) => {
                let map: Vec<Elem> = (0..comps[j].len())
                    .map(|_| rng.gen_range(0..fresh.len()))
                    .collect();
                comps.push(close_under(&comps[j], &fresh, &map));
                homs.insert((j, i), Hom::new(map));
            }
        }
    }
    OrderedSystem::new(forest(&parents), comps, homs).unwrap()
}

/// A random poset on `1..=max_n` points: a random relation compatible with
/// the index order, closed reflexively and transitively.
pub fn random_poset(rng: &mut impl Rng, max_n: usize) -> Poset {
    let n = rng.gen_range(1..=max_n);
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.35) {
                pairs.push((names[a].clone(), names[b].clone()));
            }
        }
    }
    Poset::from_cover(names, &pairs).unwrap()
}

/// Filters on the upset lattice by brute force over all families of
/// upsets, each returned as a sorted list.
pub fn brute_filters(p: &Poset) -> Vec<Vec<Mask>> {
    let ups: Vec<Mask> = (0..1u64 << p.len()).filter(|&v| p.is_upset(v)).collect();
    assert!(ups.len() <= 20, "oracle limited to small lattices");
    let mut out = Vec::new();
    for fam in 1..1u64 << ups.len() {
        let members: Vec<Mask> = (0..ups.len())
            .filter(|k| fam & (1 << k) != 0)
            .map(|k| ups[k])
            .collect();
        let meet = members
            .iter()
            .all(|&a| members.iter().all(|&b| members.contains(&(a & b))));
        let up = members
            .iter()
            .all(|&a| ups.iter().all(|&b| b & a != a || members.contains(&b)));
        if meet && up {
            let mut m = members;
            m.sort_unstable();
            out.push(m);
        }
    }
    out.sort();
    out
}

/// Prime filters by brute force over principal families `{V : V ⊇ W}`,
/// which exhaust the filters of a finite lattice.
pub fn brute_prime_filters(p: &Poset) -> Vec<Vec<Mask>> {
    let ups: Vec<Mask> = (0..1u64 << p.len()).filter(|&v| p.is_upset(v)).collect();
    let mut out: Vec<Vec<Mask>> = ups
        .iter()
        .map(|&w| {
            ups.iter()
                .copied()
                .filter(|&v| v & w == w)
                .collect::<Vec<Mask>>()
        })
        .filter(|f| brute_is_prime(p, f))
        .collect();
    out.sort();
    out
}

pub fn brute_is_prime(p: &Poset, filter: &[Mask]) -> bool {
    let ups: Vec<Mask> = (0..1u64 << p.len()).filter(|&v| p.is_upset(v)).collect();
    !filter.contains(&0)
        && ups.iter().all(|&a| {
            ups.iter()
                .all(|&b| !filter.contains(&(a | b)) || filter.contains(&a) || filter.contains(&b))
        })
}

const RELS: [(&str, usize); 3] = [("E", 2), ("P", 1), ("R", 3)];
const VARS: [&str; 4] = ["x", "y", "z", "v1"];

fn random_term(rng: &mut impl Rng) -> posmodel::logic::Term {
    use posmodel::logic::Term;
    if rng.gen_bool(0.15) {
        let arity = rng.gen_range(1..=2);
        Term::App(
            "f".into(),
            (0..arity)
                .map(|_| Term::var(VARS[rng.gen_range(0..VARS.len())]))
                .collect(),
        )
    } else {
        Term::var(VARS[rng.gen_range(0..VARS.len())])
    }
}

/// An arbitrary formula with at most `size` connectives and quantifiers.
pub fn random_formula(rng: &mut impl Rng, size: usize) -> Formula {
    if size == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Formula::False,
            1 => Formula::True,
            2 => Formula::Eq(random_term(rng), random_term(rng)),
            _ => {
                let (name, arity) = RELS[rng.gen_range(0..RELS.len())];
                Formula::Rel(name.into(), (0..arity).map(|_| random_term(rng)).collect())
            }
        };
    }
    let rest = size - 1;
    match rng.gen_range(0..6) {
        0..=2 => {
            let left = rng.gen_range(0..=rest);
            let a = random_formula(rng, left);
            let b = random_formula(rng, rest - left);
            match rng.gen_range(0..3) {
                0 => Formula::and(a, b),
                1 => Formula::or(a, b),
                _ => Formula::implies(a, b),
            }
        }
        3 => Formula::not(random_formula(rng, rest)),
        4 => Formula::exists(
            VARS[rng.gen_range(0..VARS.len())],
            random_formula(rng, rest),
        ),
        _ => Formula::forall(
            VARS[rng.gen_range(0..VARS.len())],
            random_formula(rng, rest),
        ),
    }
}

/// A random positive formula in the graph signature over `vars`.
pub fn random_positive(rng: &mut impl Rng, size: usize, vars: &[&str]) -> Formula {
    let v = |rng: &mut dyn rand::RngCore| vars[rng.gen_range(0..vars.len())];
    if size == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..8) {
            0 => Formula::False,
            1 => Formula::True,
            2 => Formula::eq_vars(v(rng), v(rng)),
            _ => Formula::rel("E", &[v(rng), v(rng)]),
        };
    }
    let rest = size - 1;
    match rng.gen_range(0..3) {
        0 => {
            let left = rng.gen_range(0..=rest);
            let a = random_positive(rng, left, vars);
            Formula::and(a, random_positive(rng, rest - left, vars))
        }
        1 => {
            let left = rng.gen_range(0..=rest);
            let a = random_positive(rng, left, vars);
            Formula::or(a, random_positive(rng, rest - left, vars))
        }
        _ => Formula::exists(v(rng), random_positive(rng, rest, vars)),
    }
}

/// A random h-inductive sentence: a conjunction of one or two sentences of
/// the form `∀x∀y (φ -> ψ)` with `φ`, `ψ` positive (`ψ` possibly `⊥`).
pub fn random_h_inductive(rng: &mut impl Rng, max_size: usize) -> Formula {
    loop {
        let parts = rng.gen_range(1..=2);
        let mut conj: Option<Formula> = None;
        for _ in 0..parts {
            let body_size = rng.gen_range(0..=3);
            let left = rng.gen_range(0..=body_size);
            let phi = random_positive(rng, left, &["x", "y"]);
            let psi = if rng.gen_bool(0.25) {
                Formula::False
            } else {
                random_positive(rng, body_size - left, &["x", "y"])
            };
            let basic = Formula::forall("x", Formula::forall("y", Formula::implies(phi, psi)));
            conj = Some(match conj {
                None => basic,
                Some(c) => Formula::and(c, basic),
            });
        }
        let f = conj.unwrap();
        if f.size() <= max_size {
            return f;
        }
    }
}
