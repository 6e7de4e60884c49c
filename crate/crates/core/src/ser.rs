//! Serde helpers that render formulas in concrete syntax.

use serde::Serializer;

use crate::logic::Formula;

pub fn formula<S: Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(f)
}

pub fn formulas<S: Serializer>(v: &[Formula], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|f| f.to_string()))
}
