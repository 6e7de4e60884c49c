use crate::error::Result;
use crate::logic::{CompiledFormula, Formula};
use crate::structure::{Elem, Hom, Structure};
use crate::systems::{omega_colimit, OmegaChain, OmegaColimit};

/// The prime power of an ω-chain over the filter of principal upsets of ω,
/// presented by its colimit together with eventual truth: a formula's
/// denotation lies in the filter iff it holds from some stage onward.
#[derive(Clone, Debug)]
pub struct OmegaView {
    pub chain: OmegaChain,
    pub colimit: OmegaColimit,
}

pub fn omega_prime_power(ch: &OmegaChain) -> Result<OmegaView> {
    Ok(OmegaView {
        chain: ch.clone(),
        colimit: omega_colimit(ch)?,
    })
}

impl OmegaView {
    pub fn structure(&self) -> &Structure {
        &self.colimit.structure
    }

    /// Number of stages with distinct structures: the prefix plus one tail.
    pub fn stage_count(&self) -> usize {
        self.chain.prefix.len() + 1
    }

    /// Structure at stage `j`; every tail stage is the same structure.
    pub fn stage(&self, j: usize) -> &Structure {
        self.chain
            .prefix
            .get(j)
            .map(|(s, _)| s)
            .unwrap_or(&self.chain.tail)
    }

    /// Moves a tuple at stage `j` forward to the first tail stage or later,
    /// returning the tail stage reached.
    fn to_tail(&self, j: usize, tuple: &[Elem]) -> (usize, Vec<Elem>) {
        let p = self.chain.prefix.len();
        if j >= p {
            return (j - p, tuple.to_vec());
        }
        let mut t = tuple.to_vec();
        for (_, link) in &self.chain.prefix[j..] {
            t.iter_mut().for_each(|e| *e = link.apply(*e));
        }
        (0, t)
    }

    /// Whether `φ(ā)` holds at every stage from some point on, `ā` living
    /// at stage `j`.
    pub fn eventually(&self, c: &CompiledFormula, j: usize, tuple: &[Elem]) -> bool {
        let (_, mut b) = self.to_tail(j, tuple);
        let e = &self.chain.endo;
        for _ in 0..self.colimit.cycle_start {
            b.iter_mut().for_each(|x| *x = e.apply(*x));
        }
        // From the cycle start on, positions repeat with the period.
        for _ in 0..self.colimit.period {
            if !c.holds(&self.chain.tail, &b) {
                return false;
            }
            b.iter_mut().for_each(|x| *x = e.apply(*x));
        }
        true
    }

    /// Eventual truth of a formula with free variables bound in order of
    /// first occurrence.
    pub fn eventually_formula(&self, phi: &Formula, j: usize, tuple: &[Elem]) -> Result<bool> {
        let free = phi.free_vars_ordered();
        let c = CompiledFormula::new(phi, self.structure().signature(), &free)?;
        Ok(self.eventually(&c, j, tuple))
    }

    /// Canonical map from stage `j` into the colimit.
    pub fn stage_map(&self, j: usize) -> Hom {
        self.colimit.stage_map(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::structure::find_isomorphism;

    fn p3() -> Structure {
        Structure::undirected(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap()
    }

    #[test]
    fn folding_p3_gives_k2() {
        let ch = OmegaChain::repeating(p3(), Hom::new(vec![0, 1, 0])).unwrap();
        let view = omega_prime_power(&ch).unwrap();
        let k2 = Structure::undirected(&["a", "b"], &[("a", "b")]).unwrap();
        assert!(find_isomorphism(view.structure(), &k2).unwrap().is_some());
        let loop_ = parse_formula("exists v. E(v,v)").unwrap();
        assert!(!view.eventually_formula(&loop_, 0, &[]).unwrap());
        let edge = parse_formula("E(x,y)").unwrap();
        assert!(view.eventually_formula(&edge, 0, &[2, 1]).unwrap());
        assert!(!view.eventually_formula(&edge, 0, &[0, 2]).unwrap());
    }

    #[test]
    fn identity_endomorphism_keeps_the_structure() {
        let ch = OmegaChain::repeating(p3(), Hom::identity(3)).unwrap();
        let view = omega_prime_power(&ch).unwrap();
        assert!(find_isomorphism(view.structure(), &p3()).unwrap().is_some());
    }

    #[test]
    fn swaps_need_the_whole_period() {
        // Two isolated points with one loop, swapped each step: the loop is
        // never eventually on a fixed element.
        let m = Structure::graph(&["a", "b"], &[("a", "a")]).unwrap();
        let ch = OmegaChain::repeating(m, Hom::new(vec![1, 0]));
        assert!(ch.is_err());
        let m = Structure::graph(&["a", "b"], &[("a", "a"), ("b", "b")]).unwrap();
        let ch = OmegaChain::repeating(m, Hom::new(vec![1, 0])).unwrap();
        let view = omega_prime_power(&ch).unwrap();
        assert_eq!(view.colimit.period, 2);
        let loop_ = parse_formula("E(x,x)").unwrap();
        assert!(view.eventually_formula(&loop_, 0, &[0]).unwrap());
    }
}
