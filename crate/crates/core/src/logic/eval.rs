use std::collections::BTreeMap;

use super::parse::resolve;
use super::syntax::{Formula, Term};
use crate::error::{Error, Result};
use crate::structure::{Elem, Signature, Structure};

pub type Assignment = BTreeMap<String, Elem>;

#[derive(Clone, Debug)]
enum CTerm {
    Var(usize),
    Const(usize),
    App(usize, Vec<CTerm>),
}

#[derive(Clone, Debug)]
enum CForm {
    False,
    True,
    Rel(usize, Vec<CTerm>),
    Eq(CTerm, CTerm),
    And(Box<CForm>, Box<CForm>),
    Or(Box<CForm>, Box<CForm>),
    Implies(Box<CForm>, Box<CForm>),
    Not(Box<CForm>),
    Exists(usize, Box<CForm>),
    Forall(usize, Box<CForm>),
}

/// A formula compiled against a signature, with its parameters bound to
/// positional slots.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    params: usize,
    slots: usize,
    body: CForm,
}

struct Compiler<'a> {
    sig: &'a Signature,
    scope: Vec<(String, usize)>,
    slots: usize,
}

impl Compiler<'_> {
    fn term(&self, t: &Term) -> Result<CTerm> {
        Ok(match t {
            Term::Var(v) => CTerm::Var(
                self.scope
                    .iter()
                    .rev()
                    .find(|(n, _)| n == v)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
            ),
            Term::Const(c) => CTerm::Const(
                self.sig
                    .constant(c)
                    .ok_or_else(|| Error::UnknownSymbol(c.clone()))?,
            ),
            Term::App(g, args) => CTerm::App(
                self.sig
                    .function(g)
                    .ok_or_else(|| Error::UnknownSymbol(g.clone()))?
                    .0,
                args.iter().map(|a| self.term(a)).collect::<Result<_>>()?,
            ),
        })
    }

    fn formula(&mut self, phi: &Formula) -> Result<CForm> {
        Ok(match phi {
            Formula::False => CForm::False,
            Formula::True => CForm::True,
            Formula::Rel(r, args) => CForm::Rel(
                self.sig
                    .relation(r)
                    .ok_or_else(|| Error::UnknownSymbol(r.clone()))?
                    .0,
                args.iter().map(|a| self.term(a)).collect::<Result<_>>()?,
            ),
            Formula::Eq(a, b) => CForm::Eq(self.term(a)?, self.term(b)?),
            Formula::And(a, b) => {
                CForm::And(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            Formula::Or(a, b) => CForm::Or(Box::new(self.formula(a)?), Box::new(self.formula(b)?)),
            Formula::Implies(a, b) => {
                CForm::Implies(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            Formula::Not(a) => CForm::Not(Box::new(self.formula(a)?)),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let slot = self.slots;
                self.slots += 1;
                self.scope.push((v.clone(), slot));
                let body = self.formula(a);
                self.scope.pop();
                let body = Box::new(body?);
                if matches!(phi, Formula::Exists(..)) {
                    CForm::Exists(slot, body)
                } else {
                    CForm::Forall(slot, body)
                }
            }
        })
    }
}

impl CompiledFormula {
    /// Compiles `phi` with the named parameters in order. Every free variable
    /// must be among them.
    pub fn new(phi: &Formula, sig: &Signature, params: &[String]) -> Result<Self> {
        let resolved = resolve(phi, sig)?;
        let mut c = Compiler {
            sig,
            scope: params
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, n)| (n, i))
                .collect(),
            slots: params.len(),
        };
        let body = c.formula(&resolved)?;
        Ok(CompiledFormula {
            params: params.len(),
            slots: c.slots,
            body,
        })
    }

    pub fn holds(&self, m: &Structure, args: &[Elem]) -> bool {
        assert_eq!(args.len(), self.params, "wrong number of arguments");
        let mut env = vec![0; self.slots];
        env[..args.len()].copy_from_slice(args);
        eval(m, &self.body, &mut env)
    }
}

fn term_value(m: &Structure, t: &CTerm, env: &[Elem]) -> Elem {
    match t {
        CTerm::Var(s) => env[*s],
        CTerm::Const(c) => m.constant(*c),
        CTerm::App(g, args) => {
            let vals: Vec<Elem> = args.iter().map(|a| term_value(m, a, env)).collect();
            m.apply(*g, &vals)
        }
    }
}

fn eval(m: &Structure, phi: &CForm, env: &mut Vec<Elem>) -> bool {
    match phi {
        CForm::False => false,
        CForm::True => true,
        CForm::Rel(r, args) => {
            let vals: Vec<Elem> = args.iter().map(|a| term_value(m, a, env)).collect();
            m.holds(*r, &vals)
        }
        CForm::Eq(a, b) => term_value(m, a, env) == term_value(m, b, env),
        CForm::And(a, b) => eval(m, a, env) && eval(m, b, env),
        CForm::Or(a, b) => eval(m, a, env) || eval(m, b, env),
        CForm::Implies(a, b) => !eval(m, a, env) || eval(m, b, env),
        CForm::Not(a) => !eval(m, a, env),
        CForm::Exists(s, a) => {
            let saved = env[*s];
            let found = (0..m.len()).any(|e| {
                env[*s] = e;
                eval(m, a, env)
            });
            env[*s] = saved;
            found
        }
        CForm::Forall(s, a) => {
            let saved = env[*s];
            let all = (0..m.len()).all(|e| {
                env[*s] = e;
                eval(m, a, env)
            });
            env[*s] = saved;
            all
        }
    }
}

/// Tarskian satisfaction of `phi` in `m` under `alpha`, which must cover the
/// free variables of `phi`. Identifiers that are declared constants and not
/// bound by a quantifier denote those constants.
pub fn evaluate(m: &Structure, phi: &Formula, alpha: &Assignment) -> Result<bool> {
    let resolved = resolve(phi, m.signature())?;
    let free: Vec<String> = resolved.free_vars_ordered();
    let mut args = Vec::with_capacity(free.len());
    for v in &free {
        let e = *alpha
            .get(v)
            .ok_or_else(|| Error::UnboundVariable(v.clone()))?;
        if e >= m.len() {
            return Err(Error::UnknownElement(format!("#{e} assigned to {v}")));
        }
        args.push(e);
    }
    Ok(CompiledFormula::new(&resolved, m.signature(), &free)?.holds(m, &args))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn k(n: usize) -> Structure {
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((refs[i], refs[j]));
            }
        }
        Structure::undirected(&refs, &edges).unwrap()
    }

    fn sat(m: &Structure, s: &str) -> bool {
        evaluate(m, &parse_formula(s).unwrap(), &Assignment::new()).unwrap()
    }

    #[test]
    fn examples() {
        assert!(sat(&k(2), "exists x. exists y. E(x,y)"));
        assert!(!sat(&k(2), "exists x. E(x,x)"));
        let tri = "exists x. exists y. exists z. (E(x,y) & E(y,z) & E(z,x))";
        assert!(sat(&k(3), tri));
        assert!(!sat(&k(2), tri));
    }

    #[test]
    fn free_variables_need_values() {
        let phi = parse_formula("E(x,y)").unwrap();
        assert_eq!(
            evaluate(&k(2), &phi, &Assignment::new()),
            Err(Error::UnboundVariable("x".into()))
        );
        let alpha: Assignment = [("x".to_string(), 0), ("y".to_string(), 1)].into();
        assert!(evaluate(&k(2), &phi, &alpha).unwrap());
    }

    #[test]
    fn shadowing_and_connectives() {
        assert!(sat(&k(2), "forall x. exists x. E(x,x) -> false"));
        assert!(sat(&k(3), "forall x. forall y. (E(x,y) -> ~x = y)"));
        assert!(!sat(&k(1), "true -> false"));
    }

    #[test]
    fn constants_and_functions() {
        let raw = r#"{"signature": {"functions":[["s",1]], "constants":["z"]},
            "universe":["0","1","2"], "functions":{"s":[["0","1"],["1","2"],["2","0"]]},
            "constants":{"z":"0"}}"#;
        let m = crate::structure::validate_structure(&serde_json::from_str(raw).unwrap()).unwrap();
        assert!(sat(&m, "s(s(s(z))) = z"));
        assert!(!sat(&m, "exists x. s(x) = x"));
        assert!(sat(&m, "forall z. exists y. s(y) = z"));
    }
}
