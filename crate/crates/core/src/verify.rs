//! Executable checks: the Positive Łoś biconditional, persistence of
//! h-inductive sentences, positive equivalence, cores, pec models and the
//! transfer of pec along immersions.

use std::fmt;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::{
    classify, evaluate, h_inductive_conjuncts, resolve, var_name, Assignment, Budget, Formula,
    FormulaSpace, SpaceOptions,
};
use crate::poset::{members, Filter, Mask};
use crate::products::{prime_product, FilterProduct, OmegaView};
use crate::structure::{
    enumerate_homs, find_hom, find_isomorphism, first_reflection_failure, for_each_hom,
    is_immersion, Elem, Hom, ReflectionWitness, Structure,
};
use crate::systems::{OmegaChain, OrderedSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    /// No violation among the formulas the budget admits.
    HoldsWithinBudget,
    Counterexample,
}

/// The data of a failing instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    /// Bindings, rendered `var=element`.
    pub elements: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub budget: Option<Budget>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(claim: &str, budget: Option<Budget>, witness: Option<Witness>) -> Self {
        let verdict = match (&witness, budget) {
            (Some(_), _) => Verdict::Counterexample,
            (None, Some(_)) => Verdict::HoldsWithinBudget,
            (None, None) => Verdict::Holds,
        };
        VerificationReport {
            claim: claim.to_string(),
            budget,
            verdict,
            witness,
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict != Verdict::Counterexample
    }

    /// One line: the verdict, with the budget whenever one applies.
    pub fn summary(&self) -> String {
        let word = match self.verdict {
            Verdict::Holds | Verdict::HoldsWithinBudget => "holds",
            Verdict::Counterexample => "counterexample",
        };
        match self.budget {
            Some(b) => format!("{word} (budget {b})"),
            None => word.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable text followed by the fenced machine block.
    pub fn render(&self) -> String {
        let mut out = format!("{}\nclaim: {}\n", self.summary(), self.claim);
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        if let Some(w) = &self.witness {
            if let Some(f) = &w.formula {
                out.push_str(&format!("formula: {f}\n"));
            }
            if !w.elements.is_empty() {
                out.push_str(&format!("elements: {}\n", w.elements.join(", ")));
            }
            if let Some(p) = &w.point {
                out.push_str(&format!("point: {p}\n"));
            }
            out.push_str(&format!("detail: {}\n", w.detail));
        }
        out.push_str("---json---\n");
        out.push_str(&self.to_json());
        out.push_str("\n---end---\n");
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn bind_names(space: &FormulaSpace, id: usize, name: impl Fn(usize) -> String) -> Vec<String> {
    let mask = space.free_mask(id);
    (0..space.budget().vars)
        .filter(|j| mask & (1 << j) != 0)
        .map(|j| format!("{}={}", var_name(j), name(j)))
        .collect()
}

/// Checks `fp ⊨ φ(ā/≡_F) ⇔ ⟦φ(ā)⟧ ∈ F` for every positive formula within the
/// budget and every tuple of product elements. For a non-prime filter the
/// same sweep searches for a failure of the biconditional, which is then
/// reported as a counterexample rather than a defect.
pub fn verify_los(fp: &FilterProduct, budget: Budget) -> Result<VerificationReport> {
    let sys = fp.system();
    let n = sys.index().len();
    let mut probes: Vec<&Structure> = vec![fp.structure()];
    probes.extend(sys.structures());
    let space = FormulaSpace::build(
        &probes,
        budget,
        SpaceOptions {
            key_free_vars: true,
            ..SpaceOptions::default()
        },
    )?;
    let k = budget.vars;
    let mut witness = None;
    'sweep: for idx in 0..space.assignments(0) {
        let classes = space.assignment(0, idx);
        let reps: Vec<_> = classes.iter().map(|&c| fp.representative(c)).collect();
        let comp: Vec<usize> = (0..n)
            .map(|x| {
                let env: Vec<Elem> = reps
                    .iter()
                    .map(|s| {
                        if s.domain & (1 << x) != 0 {
                            s.value(x)
                        } else {
                            0
                        }
                    })
                    .collect();
                space.assignment_index(x + 1, &env)
            })
            .collect();
        for id in 0..space.len() {
            let free = space.free_mask(id);
            let common = (0..k)
                .filter(|j| free & (1 << j) != 0)
                .fold(sys.index().full(), |acc, j| acc & reps[j].domain);
            let den: Mask = members(common)
                .filter(|&x| space.holds(id, x + 1, comp[x]))
                .fold(0, |acc, x| acc | 1 << x);
            let lhs = space.holds(id, 0, idx);
            let rhs = fp.filter().contains(den);
            if lhs != rhs {
                witness = Some(Witness {
                    formula: Some(space.formula(id).to_string()),
                    elements: bind_names(&space, id, |j| {
                        format!(
                            "{} {}",
                            fp.structure().name(classes[j]),
                            fp.describe(classes[j])
                        )
                    }),
                    point: None,
                    detail: format!(
                        "product {} the formula; denotation {} is {}in the filter",
                        if lhs { "satisfies" } else { "refutes" },
                        sys.index().format_set(den),
                        if rhs { "" } else { "not " }
                    ),
                });
                break 'sweep;
            }
        }
    }
    let claim = if fp.is_prime() {
        "positive Łoś"
    } else {
        "positive Łoś (counterexample search: filter not prime)"
    };
    let mut r = VerificationReport::new(claim, Some(budget), witness);
    if !fp.is_prime() && r.holds() {
        r.notes
            .push("no violation exists for this instance within the budget".into());
    }
    Ok(r)
}

/// Łoś for an ω-chain: the colimit satisfies `φ(ψ_j(ā))` iff `φ(ā)` holds
/// from some stage on, for tuples at every stage up to one full period into
/// the tail.
pub fn verify_los_omega(view: &OmegaView, budget: Budget) -> Result<VerificationReport> {
    let p = view.chain.prefix.len();
    let tail_probe = p + 1;
    let mut probes: Vec<&Structure> = vec![view.structure()];
    for j in 0..=p {
        probes.push(view.stage(j));
    }
    let space = FormulaSpace::build(
        &probes,
        budget,
        SpaceOptions {
            key_free_vars: true,
            ..SpaceOptions::default()
        },
    )?;
    let col = &view.colimit;
    let e = &view.chain.endo;
    let mut witness = None;
    'sweep: for j in 0..p + col.period {
        let probe = j.min(p) + 1;
        let psi = view.stage_map(j);
        for idx in 0..space.assignments(probe) {
            let a = space.assignment(probe, idx);
            let image: Vec<Elem> = a.iter().map(|&x| psi.apply(x)).collect();
            let at_limit = space.assignment_index(0, &image);
            let mut b = a.clone();
            for (_, link) in view.chain.prefix.iter().skip(j) {
                b.iter_mut().for_each(|x| *x = link.apply(*x));
            }
            for _ in 0..col.cycle_start {
                b.iter_mut().for_each(|x| *x = e.apply(*x));
            }
            let mut window = Vec::with_capacity(col.period);
            for _ in 0..col.period {
                window.push(space.assignment_index(tail_probe, &b));
                b.iter_mut().for_each(|x| *x = e.apply(*x));
            }
            for id in 0..space.len() {
                let lhs = space.holds(id, 0, at_limit);
                let rhs = window.iter().all(|&w| space.holds(id, tail_probe, w));
                if lhs != rhs {
                    let stage = view.stage(j);
                    witness = Some(Witness {
                        formula: Some(space.formula(id).to_string()),
                        elements: bind_names(&space, id, |v| stage.name(a[v]).to_string()),
                        point: Some(format!("stage {j}")),
                        detail: format!(
                            "colimit {} the formula but it is {}eventually true",
                            if lhs { "satisfies" } else { "refutes" },
                            if rhs { "" } else { "not " }
                        ),
                    });
                    break 'sweep;
                }
            }
        }
    }
    Ok(VerificationReport::new(
        "positive Łoś (ω-chain, eventual truth)",
        Some(budget),
        witness,
    ))
}

/// Strips a prefix of universal quantifiers.
fn universal_prefix(phi: &Formula) -> (Vec<String>, &Formula) {
    let mut vars = Vec::new();
    let mut body = phi;
    while let Formula::Forall(v, b) = body {
        vars.push(v.clone());
        body = b;
    }
    (vars, body)
}

/// A tuple falsifying the body of a universal sentence, if any.
fn falsifying_tuple(m: &Structure, phi: &Formula) -> Result<Option<Assignment>> {
    let (vars, body) = universal_prefix(phi);
    let n = m.len();
    let total = n.checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
    if total > 1 << 20 {
        return Err(Error::TooLarge(format!("{total} tuples")));
    }
    for i in 0..total {
        let mut alpha = Assignment::new();
        let mut rest = i;
        for v in &vars {
            alpha.insert(v.clone(), rest % n);
            rest /= n;
        }
        if !evaluate(m, body, &alpha)? {
            return Ok(Some(alpha));
        }
    }
    Ok(None)
}

/// Checks that an h-inductive sentence true in every component is true in
/// the prime product.
pub fn verify_h_inductive_persistence(
    sys: &OrderedSystem,
    f: &Filter,
    phi: &Formula,
) -> Result<VerificationReport> {
    let phi = resolve(phi, sys.signature())?;
    if !classify(&phi).is_h_inductive() {
        return Err(Error::NotHInductive(phi.to_string()));
    }
    if !phi.is_sentence() {
        return Err(Error::Precondition(format!("`{phi}` has free variables")));
    }
    let none = Assignment::new();
    for x in 0..sys.index().len() {
        if !evaluate(sys.structure(x), &phi, &none)? {
            return Err(Error::Precondition(format!(
                "component {} does not satisfy `{phi}`",
                sys.index().name(x)
            )));
        }
    }
    let fp = prime_product(sys, f)?;
    let m = fp.structure();
    let mut witness = None;
    for c in h_inductive_conjuncts(&phi) {
        if evaluate(m, &c, &none)? {
            continue;
        }
        let alpha = falsifying_tuple(m, &c)?;
        witness = Some(Witness {
            formula: Some(c.to_string()),
            elements: alpha
                .unwrap_or_default()
                .iter()
                .map(|(v, &e)| format!("{v}={} {}", m.name(e), fp.describe(e)))
                .collect(),
            point: None,
            detail: "conjunct fails in the prime product".into(),
        });
        break;
    }
    Ok(VerificationReport::new(
        "h-inductive persistence",
        None,
        witness,
    ))
}

/// `M` satisfies the positive theory of `N`: for finite structures, exactly
/// when some homomorphism `N -> M` exists.
pub fn satisfies_positive_theory(m: &Structure, n: &Structure) -> Result<bool> {
    Ok(find_hom(n, m)?.is_some())
}

pub fn positively_equivalent(m: &Structure, n: &Structure) -> Result<bool> {
    Ok(satisfies_positive_theory(m, n)? && satisfies_positive_theory(n, m)?)
}

/// The first homs `m -> n` and `n -> m`, where they exist.
pub fn hom_witnesses(m: &Structure, n: &Structure) -> Result<(Option<Hom>, Option<Hom>)> {
    Ok((find_hom(m, n)?, find_hom(n, m)?))
}

/// A minimum retract with its maps and a chain presenting it.
#[derive(Clone, Debug)]
pub struct Core {
    pub structure: Structure,
    /// `ι: C -> M`.
    pub inclusion: Hom,
    /// `r: M -> C` with `r ∘ ι = id`.
    pub retraction: Hom,
    /// `ι ∘ r`, an idempotent endomorphism of `M`.
    pub endo: Hom,
    /// `M -> M -> …` along `endo`; its colimit is the core.
    pub chain: OmegaChain,
}

/// The core of a finite structure: the image of an endomorphism of least
/// image size, made idempotent by taking a power.
pub fn core(m: &Structure) -> Result<Core> {
    let mut best: Option<(usize, Vec<Elem>)> = None;
    for_each_hom(m, m, |map| {
        let mut img = map.to_vec();
        img.sort_unstable();
        img.dedup();
        if best.as_ref().is_none_or(|(s, _)| img.len() < *s) {
            best = Some((img.len(), map.to_vec()));
        }
        if img.len() == 1 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    let (_, e0) = best.expect("the identity is an endomorphism");
    let mut p = e0.clone();
    loop {
        let pp: Vec<Elem> = p.iter().map(|&a| p[a]).collect();
        if pp == p {
            break;
        }
        p = p.iter().map(|&a| e0[a]).collect();
    }
    let mut image = p.clone();
    image.sort_unstable();
    image.dedup();
    let structure = m.induced(&image)?;
    let retraction = Hom::new(
        p.iter()
            .map(|b| image.binary_search(b).expect("in the image"))
            .collect(),
    );
    let endo = Hom::new(p);
    Ok(Core {
        structure,
        inclusion: Hom::new(image),
        retraction,
        chain: OmegaChain::repeating(m.clone(), endo.clone())?,
        endo,
    })
}

/// The two pec verdicts and their witnesses.
#[derive(Clone, Debug)]
pub struct PecReport {
    pub budget: Budget,
    /// Every hom into a member of the class is an immersion.
    pub direct: bool,
    /// Every failing positive formula is covered by a resultant.
    pub via_resultants: bool,
    /// Class member, hom, and the formula it fails to reflect.
    pub direct_witness: Option<(usize, Hom, ReflectionWitness)>,
    /// A formula and tuple false in `M` with no resultant true there.
    pub resultant_witness: Option<(Formula, Vec<(String, Elem)>)>,
}

impl PecReport {
    pub fn agree(&self) -> bool {
        self.direct == self.via_resultants
    }

    pub fn to_report(&self, m: &Structure, class: &[Structure]) -> VerificationReport {
        let witness = self.direct_witness.as_ref().map(|(i, h, w)| Witness {
            formula: Some(w.formula.to_string()),
            elements: w
                .tuple
                .iter()
                .map(|(v, e)| format!("{v}={}", m.name(*e)))
                .collect(),
            point: None,
            detail: format!(
                "hom {} into class member {} is not an immersion",
                h.describe(m, &class[*i]),
                i
            ),
        });
        let mut r = VerificationReport::new("pec", Some(self.budget), witness);
        r.notes.push(format!(
            "direct criterion: {}; resultant criterion: {}",
            verdict_word(self.direct),
            verdict_word(self.via_resultants)
        ));
        if !self.agree() {
            r.notes.push("criteria disagree: budget artifact".into());
            if let Some((f, t)) = &self.resultant_witness {
                let elems: Vec<String> = t
                    .iter()
                    .map(|(v, e)| format!("{v}={}", m.name(*e)))
                    .collect();
                r.notes.push(format!(
                    "uncovered by resultants: {f} at {}",
                    elems.join(", ")
                ));
            }
        }
        r
    }
}

fn verdict_word(b: bool) -> &'static str {
    if b {
        "pec"
    } else {
        "not pec"
    }
}

/// Decides whether `m` is pec relative to the class, once through
/// immersions and once through resultants, at the same budget.
pub fn is_pec(m: &Structure, class: &[Structure], budget: Budget) -> Result<PecReport> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if class.iter().any(|n| !n.same_signature(m)) {
        return Err(Error::SignatureMismatch);
    }
    let mut probes: Vec<&Structure> = vec![m];
    probes.extend(class);
    let space = FormulaSpace::build(&probes, budget, SpaceOptions::default())?;

    let mut direct_witness = None;
    'outer: for (i, n) in class.iter().enumerate() {
        for h in enumerate_homs(m, n, None)? {
            if let Some(w) = first_reflection_failure(&space, 0, i + 1, &h) {
                direct_witness = Some((i, h, w));
                break 'outer;
            }
        }
    }

    let split = space.assignments(0).div_ceil(64);
    let total_m = space.assignments(0);
    let mut resultant_witness = None;
    'phi: for phi in 0..space.len() {
        let fk = &space.bits(phi)[split..];
        let mut cover = vec![0u64; split];
        for psi in 0..space.len() {
            let row = space.bits(psi);
            if row[split..].iter().zip(fk).all(|(a, b)| a & b == 0) {
                for (c, w) in cover.iter_mut().zip(&row[..split]) {
                    *c |= w;
                }
            }
        }
        for i in 0..total_m {
            let covered = cover[i / 64] >> (i % 64) & 1 == 1;
            if !space.holds(phi, 0, i) && !covered {
                let env = space.assignment(0, i);
                let mask = space.free_mask(phi);
                let tuple = env
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(k, &e)| (var_name(k), e))
                    .collect();
                resultant_witness = Some((space.formula(phi), tuple));
                break 'phi;
            }
        }
    }
    Ok(PecReport {
        budget,
        direct: direct_witness.is_none(),
        via_resultants: resultant_witness.is_none(),
        direct_witness,
        resultant_witness,
    })
}

/// Given an immersion `f: N -> M` with `M` pec relative to the class,
/// checks that `N` is pec relative to the class with `N` added.
pub fn transfer_check(
    n: &Structure,
    m: &Structure,
    f: &Hom,
    class: &[Structure],
    budget: Budget,
) -> Result<VerificationReport> {
    if !is_immersion(n, m, f, budget)?.immersion {
        return Err(Error::Precondition(
            "the map is not an immersion within the budget".into(),
        ));
    }
    if !is_pec(m, class, budget)?.direct {
        return Err(Error::Precondition(
            "the target is not pec within the budget".into(),
        ));
    }
    let mut extended = class.to_vec();
    extended.push(n.clone());
    let report = is_pec(n, &extended, budget)?;
    let mut r = report.to_report(n, &extended);
    r.claim = "transfer of pec along an immersion".into();
    if !r.holds() {
        r.notes.push("budget artifact: inspect the witness".into());
    }
    Ok(r)
}

/// The finite analog of characterizing positive equivalence by common
/// prime powers: `M` and `N` are positively equivalent iff their cores are
/// isomorphic, and then each core is the colimit of an idempotent chain.
#[derive(Clone, Debug)]
pub struct PrimePowerEquivalence {
    pub equivalent: bool,
    pub cores_isomorphic: bool,
    pub core_m: Core,
    pub core_n: Core,
    /// `core(M) -> core(N)` when the cores are isomorphic.
    pub iso: Option<Hom>,
    pub report: VerificationReport,
}

pub fn prime_power_equivalence(m: &Structure, n: &Structure) -> Result<PrimePowerEquivalence> {
    let equivalent = positively_equivalent(m, n)?;
    let core_m = core(m)?;
    let core_n = core(n)?;
    let iso = find_isomorphism(&core_m.structure, &core_n.structure)?;
    let cores_isomorphic = iso.is_some();
    let witness = (equivalent != cores_isomorphic).then(|| Witness {
        formula: None,
        elements: Vec::new(),
        point: None,
        detail: format!(
            "positively equivalent: {equivalent}; cores isomorphic: {cores_isomorphic}"
        ),
    });
    let mut report = VerificationReport::new(
        "prime-power equivalence (desk-scale analog via cores)",
        None,
        witness,
    );
    report.notes.push(
        "finite structures are isomorphic to their ultrapowers; that stage is omitted".into(),
    );
    report.notes.push(format!(
        "positively equivalent: {}; cores isomorphic: {}",
        equivalent, cores_isomorphic
    ));
    Ok(PrimePowerEquivalence {
        equivalent,
        cores_isomorphic,
        core_m,
        core_n,
        iso,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::poset::{enumerate_prime_filters, point_filter, Poset};
    use crate::products::{filter_product, omega_prime_power};

    fn k2() -> Structure {
        Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap()
    }
    fn k3() -> Structure {
        Structure::undirected(
            &["x1", "x2", "x3"],
            &[("x1", "x2"), ("x2", "x3"), ("x1", "x3")],
        )
        .unwrap()
    }
    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }
    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
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
    fn tree_sys() -> OrderedSystem {
        let idx = Poset::from_cover(
            names(&["x", "y", "z"]),
            &[("x".into(), "y".into()), ("x".into(), "z".into())],
        )
        .unwrap();
        OrderedSystem::constant(idx, &k2()).unwrap()
    }

    #[test]
    fn los_on_examples() {
        let sys = chain_sys();
        let fp = prime_product(&sys, &point_filter(sys.index(), 1)).unwrap();
        let r = verify_los(&fp, Budget::default()).unwrap();
        assert_eq!(r.summary(), "holds (budget size=5 vars=2)");
        let tree = tree_sys();
        for f in enumerate_prime_filters(tree.index()) {
            let fp = prime_product(&tree, &f).unwrap();
            assert!(verify_los(&fp, Budget::default()).unwrap().holds());
        }
        let bad = Filter::from_masks(vec![0b110, 0b111]);
        let fp = filter_product(&tree, &bad).unwrap();
        let r = verify_los(&fp, Budget::default()).unwrap();
        assert!(r.claim.contains("not prime"));
    }

    fn unary(universe: &str, p: &str, q: &str) -> Structure {
        let raw = format!(
            r#"{{"signature": {{"relations": [["P",1],["Q",1]]}}, "universe": {universe},
                "relations": {{"P": {p}, "Q": {q}}}}}"#
        );
        crate::structure::validate_structure(&serde_json::from_str(&raw).unwrap()).unwrap()
    }

    #[test]
    fn non_prime_disjunction_failure_is_found() {
        // P only at y and Q only at z: the disjunction of their existential
        // closures has denotation {y,z}, yet neither disjunct holds in the
        // product over {{y,z},X}.
        let idx = Poset::from_cover(
            names(&["x", "y", "z"]),
            &[("x".into(), "y".into()), ("x".into(), "z".into())],
        )
        .unwrap();
        let u = r#"["p"]"#;
        let sys = OrderedSystem::new(
            idx,
            vec![
                unary(u, "[]", "[]"),
                unary(u, r#"[["p"]]"#, "[]"),
                unary(u, "[]", r#"[["p"]]"#),
            ],
            [((0, 1), Hom::identity(1)), ((0, 2), Hom::identity(1))].into(),
        )
        .unwrap();
        let fp = filter_product(&sys, &Filter::from_masks(vec![0b110, 0b111])).unwrap();
        let r = verify_los(&fp, Budget::new(3, 1)).unwrap();
        assert_eq!(r.verdict, Verdict::Counterexample);
        assert!(r.to_json().contains("\"verdict\": \"counterexample\""));
        assert!(r.witness.unwrap().formula.unwrap().contains('|'));
    }

    #[test]
    fn omega_los() {
        let ch = OmegaChain::repeating(p3(), Hom::new(vec![0, 1, 0])).unwrap();
        let view = omega_prime_power(&ch).unwrap();
        assert!(verify_los_omega(&view, Budget::default()).unwrap().holds());
        // A prefix stage feeding a tail that swaps two loops.
        let m = Structure::graph(
            &["a", "b", "c"],
            &[
                ("a", "a"),
                ("b", "b"),
                ("a", "c"),
                ("c", "a"),
                ("b", "c"),
                ("c", "b"),
            ],
        )
        .unwrap();
        let ch = OmegaChain::new(
            vec![(k2(), Hom::new(vec![0, 2]))],
            m,
            Hom::new(vec![1, 0, 2]),
        )
        .unwrap();
        let view = omega_prime_power(&ch).unwrap();
        assert!(verify_los_omega(&view, Budget::new(4, 2)).unwrap().holds());
    }

    #[test]
    fn persistence_examples() {
        let sys = chain_sys();
        let f = point_filter(sys.index(), 1);
        for s in [
            "forall v. (E(v,v) -> false)",
            "forall v. forall w. (E(v,w) -> exists z. E(w,z))",
            "forall v. (false -> false)",
        ] {
            let r = verify_h_inductive_persistence(&sys, &f, &parse_formula(s).unwrap()).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "{s}");
        }
        let loop_free = parse_formula("exists v. E(v,v)").unwrap();
        assert!(matches!(
            verify_h_inductive_persistence(&sys, &f, &loop_free),
            Err(Error::Precondition(_))
        ));
        let general = parse_formula("exists v. ~E(v,v)").unwrap();
        assert!(matches!(
            verify_h_inductive_persistence(&sys, &f, &general),
            Err(Error::NotHInductive(_))
        ));
    }

    #[test]
    fn equivalence_and_cores() {
        assert!(positively_equivalent(&k2(), &p3()).unwrap());
        assert!(satisfies_positive_theory(&k3(), &k2()).unwrap());
        assert!(!satisfies_positive_theory(&k2(), &k3()).unwrap());
        assert!(positively_equivalent(&k3(), &k3()).unwrap());
        let c = core(&p3()).unwrap();
        assert_eq!(c.structure.len(), 2);
        assert_eq!(compose_check(&c), Hom::identity(2));
        assert_eq!(core(&k3()).unwrap().structure.len(), 3);
        let lp = Structure::graph(&["o"], &[("o", "o")]).unwrap();
        assert_eq!(core(&lp).unwrap().structure.len(), 1);
        let ppe = prime_power_equivalence(&k2(), &p3()).unwrap();
        assert!(ppe.equivalent && ppe.cores_isomorphic && ppe.report.holds());
        let ppe = prime_power_equivalence(&k2(), &k3()).unwrap();
        assert!(!ppe.equivalent && !ppe.cores_isomorphic && ppe.report.holds());
    }

    fn compose_check(c: &Core) -> Hom {
        crate::structure::compose(&c.inclusion, &c.retraction)
    }

    #[test]
    fn pec_examples() {
        let class = vec![k2(), p3()];
        let r = is_pec(&k2(), &class, Budget::new(4, 2)).unwrap();
        assert!(r.direct && r.via_resultants);
        let r = is_pec(&p3(), &class, Budget::new(1, 2)).unwrap();
        assert!(!r.direct);
        let (_, h, w) = r.direct_witness.clone().unwrap();
        assert_eq!(h.map[0], h.map[2]);
        assert_eq!(w.formula.to_string(), "v1 = v2");
        assert!(is_pec(&k2(), &[], Budget::default()).is_err());
    }

    #[test]
    fn transfer() {
        let class = vec![k2(), p3()];
        let r = transfer_check(&k2(), &k2(), &Hom::identity(2), &class, Budget::new(4, 2)).unwrap();
        assert!(r.holds());
        let bad = transfer_check(
            &k2(),
            &k3(),
            &Hom::new(vec![0, 1]),
            &[k3()],
            Budget::new(3, 3),
        );
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }
}
