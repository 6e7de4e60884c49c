use crate::error::{Error, Result};
use crate::poset::Mask;
use crate::structure::{index_tuple, Elem, Structure};

/// Textbook reduced product `∏ M_i / D` over a finite set `I = {0..k}`.
///
/// `d` lists the members of `D` as subsets of `I`. Elements are classes of
/// full tuples under agreement on a member of `D`, each named `t<k>` after
/// its least tuple (last coordinate varying fastest).
pub fn classical_reduced_product(family: &[Structure], d: &[Mask]) -> Result<Structure> {
    Ok(ReducedProduct::new(family, d)?.structure)
}

/// The reduced product together with its tuple-level data.
#[derive(Clone, Debug)]
pub struct ReducedProduct {
    pub structure: Structure,
    /// Least tuple of each class.
    pub representatives: Vec<Vec<Elem>>,
    sizes: Vec<usize>,
    d: Vec<Mask>,
    class_of: Vec<usize>,
}

impl ReducedProduct {
    pub fn new(family: &[Structure], d: &[Mask]) -> Result<Self> {
        let first = family.first().ok_or(Error::EmptyClass)?;
        if family.iter().any(|m| !m.same_signature(first)) {
            return Err(Error::SignatureMismatch);
        }
        let k = family.len();
        if k > 16 {
            return Err(Error::TooLarge(format!("{k} factors")));
        }
        let full: Mask = (1 << k) - 1;
        set_filter_check(d, full)?;
        let sizes: Vec<usize> = family.iter().map(|m| m.len()).collect();
        let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        let total = match total {
            Some(t) if t <= 1 << 20 => t,
            _ => return Err(Error::TooLarge("product has too many tuples".into())),
        };
        let mut d_sorted = d.to_vec();
        d_sorted.sort_unstable();
        d_sorted.dedup();
        let in_d = |s: Mask| d_sorted.binary_search(&s).is_ok();
        let tuples: Vec<Vec<Elem>> = (0..total).map(|i| decode(&sizes, i)).collect();
        let agree = |a: &[Elem], b: &[Elem]| {
            (0..k)
                .filter(|&i| a[i] == b[i])
                .fold(0, |acc, i| acc | 1 << i)
        };
        let mut reps: Vec<usize> = Vec::new();
        let mut class_of = Vec::with_capacity(total);
        for (t, tuple) in tuples.iter().enumerate() {
            match reps.iter().position(|&r| in_d(agree(&tuples[r], tuple))) {
                Some(c) => class_of.push(c),
                None => {
                    class_of.push(reps.len());
                    reps.push(t);
                }
            }
        }
        let n = reps.len();
        let sig = first.signature_arc().clone();
        let mut relations = Vec::new();
        for (r, (_, arity)) in sig.relations().iter().enumerate() {
            let mut table = Vec::new();
            for cell in 0..n.pow(*arity as u32) {
                let args: Vec<&Vec<Elem>> = index_tuple(n, *arity, cell)
                    .iter()
                    .map(|&c| &tuples[reps[c]])
                    .collect();
                let truth = (0..k)
                    .filter(|&i| {
                        let at: Vec<Elem> = args.iter().map(|a| a[i]).collect();
                        family[i].holds(r, &at)
                    })
                    .fold(0, |acc, i| acc | 1 << i);
                table.push(in_d(truth));
            }
            relations.push(table);
        }
        let encode = |t: &[Elem]| t.iter().zip(&sizes).fold(0, |acc, (&e, &s)| acc * s + e);
        let mut functions = Vec::new();
        for (g, (_, arity)) in sig.functions().iter().enumerate() {
            let mut table = Vec::new();
            for cell in 0..n.pow(*arity as u32) {
                let args: Vec<&Vec<Elem>> = index_tuple(n, *arity, cell)
                    .iter()
                    .map(|&c| &tuples[reps[c]])
                    .collect();
                let value: Vec<Elem> = (0..k)
                    .map(|i| {
                        let at: Vec<Elem> = args.iter().map(|a| a[i]).collect();
                        family[i].apply(g, &at)
                    })
                    .collect();
                table.push(class_of[encode(&value)]);
            }
            functions.push(table);
        }
        let constants = (0..sig.constants().len())
            .map(|c| {
                let value: Vec<Elem> = family.iter().map(|m| m.constant(c)).collect();
                class_of[encode(&value)]
            })
            .collect();
        let names = (0..n).map(|c| format!("t{c}")).collect();
        let structure = Structure::from_tables(sig, names, relations, functions, constants);
        Ok(ReducedProduct {
            structure,
            representatives: reps.iter().map(|&r| tuples[r].clone()).collect(),
            sizes,
            d: d_sorted,
            class_of,
        })
    }

    /// The class of a full tuple.
    pub fn class_of(&self, tuple: &[Elem]) -> usize {
        let i = tuple
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&e, &s)| acc * s + e);
        self.class_of[i]
    }

    /// Every full tuple, in enumeration order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        let total: usize = self.sizes.iter().product();
        (0..total).map(|i| decode(&self.sizes, i))
    }

    pub fn in_filter(&self, s: Mask) -> bool {
        self.d.binary_search(&s).is_ok()
    }
}

fn decode(sizes: &[usize], mut i: usize) -> Vec<Elem> {
    let mut out = vec![0; sizes.len()];
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = i % s;
        i /= s;
    }
    out
}

/// Why `u` is not an ultrafilter on the subsets of `full`, if it is not.
pub(crate) fn ultrafilter_violation(u: &[Mask], full: Mask) -> Result<Option<String>> {
    if let Err(Error::NotFilter(v)) = set_filter_check(u, full) {
        return Ok(Some(v));
    }
    if u.contains(&0) {
        return Ok(Some("contains the empty set".into()));
    }
    let mut s = full;
    loop {
        if !u.contains(&s) && !u.contains(&(full & !s)) {
            return Ok(Some(format!(
                "neither {s:#b} nor its complement is a member"
            )));
        }
        if s == 0 {
            return Ok(None);
        }
        s = (s - 1) & full;
    }
}

/// Filter axioms on the power set of `full`, checked directly.
fn set_filter_check(d: &[Mask], full: Mask) -> Result<()> {
    if d.is_empty() {
        return Err(Error::NotFilter("empty family".into()));
    }
    if let Some(s) = d.iter().find(|&&s| s & !full != 0) {
        return Err(Error::NotFilter(format!(
            "{s:#b} is not a subset of the index set"
        )));
    }
    let has = |s: Mask| d.contains(&s);
    for &a in d {
        for &b in d {
            if !has(a & b) {
                return Err(Error::NotFilter(format!(
                    "{a:#b} and {b:#b} are members but their intersection is not"
                )));
            }
        }
        let mut sup = full;
        loop {
            if sup & a == a && !has(sup) {
                return Err(Error::NotFilter(format!(
                    "{sup:#b} contains the member {a:#b} but is missing"
                )));
            }
            if sup == 0 {
                break;
            }
            sup = (sup - 1) & full;
        }
    }
    Ok(())
}
