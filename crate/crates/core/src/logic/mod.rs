//! First-order syntax, parsing, fragment classification, evaluation on
//! finite structures and bounded enumeration of positive formulas.

mod classify;
pub mod closure;
mod eval;
mod parse;
mod syntax;
mod theory;

pub use classify::{
    classify, h_inductive_conjuncts, is_atomic, is_positive, normalize_negation, FragmentTag,
};
pub use closure::{var_name, Budget, FormulaSpace, SpaceOptions};
pub use eval::{evaluate, Assignment, CompiledFormula};
pub use parse::{parse_formula, parse_formula_with, resolve};
pub use syntax::{Formula, Term};
pub use theory::{
    enumerate_positive_sentences, joint_positive_theories, positive_theory, rename_vars, resultant,
    SentenceCatalog, TheoryFingerprint, PROBE_SIZE,
};
