use std::sync::Arc;

use super::{find_isomorphism, Elem, Signature, Structure};
use crate::error::{Error, Result};

/// Refuse enumerations with more raw candidates than this.
const MAX_CANDIDATES: u128 = 1 << 12;

/// Default element names: `a`, `b`, ... then `e26`, `e27`, ...
pub fn element_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("e{i}")
            }
        })
        .collect()
}

/// Every structure on `n` elements over `sig`, up to isomorphism, in
/// generation order.
pub fn all_structures(sig: &Arc<Signature>, n: usize) -> Result<Vec<Structure>> {
    if n == 0 {
        return Ok(vec![]);
    }
    let mut radices: Vec<u128> = Vec::new();
    let mut total: u128 = 1;
    let too_large = || {
        Error::TooLarge(format!(
            "more than {MAX_CANDIDATES} candidate structures on {n} elements"
        ))
    };
    let mut cells = Vec::new();
    for (_, arity) in sig.relations() {
        let c = n.checked_pow(*arity as u32).ok_or_else(too_large)?;
        cells.push(c);
        radices.extend(std::iter::repeat_n(2, c));
    }
    let mut fcells = Vec::new();
    for (_, arity) in sig.functions() {
        let c = n.checked_pow(*arity as u32).ok_or_else(too_large)?;
        fcells.push(c);
        for _ in 0..c {
            radices.push(n as u128);
        }
    }
    for _ in sig.constants() {
        radices.push(n as u128);
    }
    for r in &radices {
        total = total.checked_mul(*r).ok_or_else(too_large)?;
        if total > MAX_CANDIDATES {
            return Err(too_large());
        }
    }
    let names = element_names(n);
    let mut kept: Vec<Structure> = Vec::new();
    let mut digits = vec![0u128; radices.len()];
    for _ in 0..total {
        let mut pos = 0;
        let mut relations = Vec::new();
        for &c in &cells {
            relations.push(
                digits[pos..pos + c]
                    .iter()
                    .map(|&d| d == 1)
                    .collect::<Vec<bool>>(),
            );
            pos += c;
        }
        let mut functions = Vec::new();
        for &c in &fcells {
            functions.push(
                digits[pos..pos + c]
                    .iter()
                    .map(|&d| d as Elem)
                    .collect::<Vec<Elem>>(),
            );
            pos += c;
        }
        let constants: Vec<Elem> = digits[pos..].iter().map(|&d| d as Elem).collect();
        let s = Structure::from_tables(sig.clone(), names.clone(), relations, functions, constants);
        let mut fresh = true;
        for k in &kept {
            if find_isomorphism(k, &s)?.is_some() {
                fresh = false;
                break;
            }
        }
        if fresh {
            kept.push(s);
        }
        for (d, r) in digits.iter_mut().zip(&radices) {
            *d += 1;
            if *d < *r {
                break;
            }
            *d = 0;
        }
    }
    Ok(kept)
}

/// Every structure with at most `max_n` elements, up to isomorphism.
pub fn small_structures(sig: &Arc<Signature>, max_n: usize) -> Result<Vec<Structure>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.extend(all_structures(sig, n)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digraph_counts() {
        let sig = Arc::new(Signature::graph());
        assert_eq!(all_structures(&sig, 1).unwrap().len(), 2);
        assert_eq!(all_structures(&sig, 2).unwrap().len(), 10);
        assert_eq!(small_structures(&sig, 2).unwrap().len(), 12);
    }

    #[test]
    fn pure_equality_and_unary_functions() {
        let sig = Arc::new(Signature::empty());
        assert_eq!(small_structures(&sig, 3).unwrap().len(), 3);
        let sig = Arc::new(Signature::new(vec![], vec![("f".into(), 1)], vec![]).unwrap());
        assert_eq!(all_structures(&sig, 2).unwrap().len(), 3);
    }

    #[test]
    fn huge_signatures_are_refused() {
        let sig = Arc::new(Signature::new(vec![("R".into(), 5)], vec![], vec![]).unwrap());
        assert!(matches!(all_structures(&sig, 2), Err(Error::TooLarge(_))));
    }
}
