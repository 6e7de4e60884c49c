use serde::Serialize;

use super::hom::hom_violation;
use super::{Elem, Hom, Structure};
use crate::error::{Error, Result};
use crate::logic::{var_name, Budget, Formula, FormulaSpace, SpaceOptions};

/// A positive formula and source tuple on which a hom fails to reflect truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReflectionWitness {
    #[serde(serialize_with = "crate::ser::formula")]
    pub formula: Formula,
    /// Values of the formula's free variables, in pool order.
    pub tuple: Vec<(String, Elem)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImmersionReport {
    pub budget: Budget,
    /// No witness within the budget. A `true` here is budget-bounded.
    pub immersion: bool,
    pub witness: Option<ReflectionWitness>,
}

/// Searches for a positive formula within the budget that is true at the
/// image of a source tuple but false at the tuple itself.
pub fn is_immersion(
    m: &Structure,
    n: &Structure,
    h: &Hom,
    budget: Budget,
) -> Result<ImmersionReport> {
    if let Some(v) = hom_violation(m, n, h)? {
        return Err(Error::NotHomomorphism(v));
    }
    let space = FormulaSpace::build(&[m, n], budget, SpaceOptions::default())?;
    let witness = first_reflection_failure(&space, 0, 1, h);
    Ok(ImmersionReport {
        budget,
        immersion: witness.is_none(),
        witness,
    })
}

/// First entry and source assignment (in space order) where probe `tgt`
/// holds at the image but probe `src` fails.
pub(crate) fn first_reflection_failure(
    space: &FormulaSpace,
    src: usize,
    tgt: usize,
    h: &Hom,
) -> Option<ReflectionWitness> {
    let images: Vec<usize> = (0..space.assignments(src))
        .map(|i| {
            let env: Vec<Elem> = space
                .assignment(src, i)
                .iter()
                .map(|&e| h.apply(e))
                .collect();
            space.assignment_index(tgt, &env)
        })
        .collect();
    for id in 0..space.len() {
        for (i, &j) in images.iter().enumerate() {
            if space.holds(id, tgt, j) && !space.holds(id, src, i) {
                let env = space.assignment(src, i);
                let mask = space.free_mask(id);
                let tuple = env
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(k, &e)| (var_name(k), e))
                    .collect();
                return Some(ReflectionWitness {
                    formula: space.formula(id),
                    tuple,
                });
            }
        }
    }
    None
}
