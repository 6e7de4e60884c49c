use std::fmt;

use serde::Serialize;

use super::syntax::Formula;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FragmentTag {
    Atomic,
    Positive,
    BasicHInductive,
    HInductive,
    General,
}

impl fmt::Display for FragmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FragmentTag::Atomic => "atomic",
            FragmentTag::Positive => "positive",
            FragmentTag::BasicHInductive => "basic-h-inductive",
            FragmentTag::HInductive => "h-inductive",
            FragmentTag::General => "general",
        })
    }
}

impl FragmentTag {
    /// Whether a formula with this tag may be used where an h-inductive one
    /// is expected. Positive formulas qualify as `true -> phi`.
    pub fn is_h_inductive(self) -> bool {
        self != FragmentTag::General
    }

    pub fn is_positive(self) -> bool {
        matches!(self, FragmentTag::Atomic | FragmentTag::Positive)
    }
}

pub fn is_atomic(phi: &Formula) -> bool {
    matches!(
        phi,
        Formula::False | Formula::True | Formula::Rel(..) | Formula::Eq(..)
    )
}

pub fn is_positive(phi: &Formula) -> bool {
    match phi {
        Formula::False | Formula::True | Formula::Rel(..) | Formula::Eq(..) => true,
        Formula::And(a, b) | Formula::Or(a, b) => is_positive(a) && is_positive(b),
        Formula::Exists(_, a) => is_positive(a),
        Formula::Implies(..) | Formula::Not(_) | Formula::Forall(..) => false,
    }
}

/// Rewrites every `~phi` as `phi -> false`.
pub fn normalize_negation(phi: &Formula) -> Formula {
    match phi {
        Formula::Not(a) => Formula::implies(normalize_negation(a), Formula::False),
        Formula::And(a, b) => Formula::and(normalize_negation(a), normalize_negation(b)),
        Formula::Or(a, b) => Formula::or(normalize_negation(a), normalize_negation(b)),
        Formula::Implies(a, b) => Formula::implies(normalize_negation(a), normalize_negation(b)),
        Formula::Exists(v, a) => Formula::Exists(v.clone(), Box::new(normalize_negation(a))),
        Formula::Forall(v, a) => Formula::Forall(v.clone(), Box::new(normalize_negation(a))),
        other => other.clone(),
    }
}

/// A universal prefix over an implication between positive formulas, or over
/// a positive formula. Expects negations already normalized.
fn is_basic(phi: &Formula) -> bool {
    match phi {
        Formula::Forall(_, a) => is_basic(a),
        Formula::Implies(a, b) => is_positive(a) && is_positive(b),
        other => is_positive(other),
    }
}

fn is_conjunction_of_basic(phi: &Formula) -> bool {
    match phi {
        Formula::And(a, b) => is_conjunction_of_basic(a) && is_conjunction_of_basic(b),
        other => is_basic(other),
    }
}

/// The most specific fragment containing `phi`.
pub fn classify(phi: &Formula) -> FragmentTag {
    if is_atomic(phi) {
        return FragmentTag::Atomic;
    }
    if is_positive(phi) {
        return FragmentTag::Positive;
    }
    let normal = normalize_negation(phi);
    if is_basic(&normal) {
        FragmentTag::BasicHInductive
    } else if is_conjunction_of_basic(&normal) {
        FragmentTag::HInductive
    } else {
        FragmentTag::General
    }
}

/// The conjuncts of an h-inductive formula after normalization.
pub fn h_inductive_conjuncts(phi: &Formula) -> Vec<Formula> {
    fn go(phi: &Formula, out: &mut Vec<Formula>) {
        match phi {
            Formula::And(a, b) if !is_positive(phi) => {
                go(a, out);
                go(b, out);
            }
            other => out.push(other.clone()),
        }
    }
    let mut out = Vec::new();
    go(&normalize_negation(phi), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn tag(s: &str) -> FragmentTag {
        classify(&parse_formula(s).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(tag("E(x,y)"), FragmentTag::Atomic);
        assert_eq!(
            tag("forall x. (E(x,x) -> false)"),
            FragmentTag::BasicHInductive
        );
        assert_eq!(tag("exists x. ~E(x,x)"), FragmentTag::General);
    }

    #[test]
    fn fragments() {
        assert_eq!(tag("false"), FragmentTag::Atomic);
        assert_eq!(tag("exists x. E(x,x) | x = x"), FragmentTag::Positive);
        assert_eq!(tag("~exists x. E(x,x)"), FragmentTag::BasicHInductive);
        assert_eq!(
            tag("(forall x. (E(x,x) -> false)) & (forall x. forall y. (E(x,y) -> E(y,x)))"),
            FragmentTag::HInductive
        );
        assert_eq!(tag("(exists x. E(x,x)) & ~E(y,y)"), FragmentTag::HInductive);
        assert_eq!(
            tag("forall x. forall y. E(x,y)"),
            FragmentTag::BasicHInductive
        );
        assert_eq!(tag("(E(x,x) -> false) -> false"), FragmentTag::General);
        assert_eq!(
            tag("forall x. (E(x,x) & (E(x,x) -> false))"),
            FragmentTag::General
        );
    }

    #[test]
    fn conjuncts_split() {
        let phi = parse_formula("(forall x. (E(x,x) -> false)) & ~P").unwrap();
        assert_eq!(h_inductive_conjuncts(&phi).len(), 2);
    }
}
