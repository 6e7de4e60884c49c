use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    False,
    True,
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

impl Formula {
    pub fn rel(name: &str, args: &[&str]) -> Formula {
        Formula::Rel(
            name.to_string(),
            args.iter().map(|a| Term::var(a)).collect(),
        )
    }

    pub fn eq_vars(a: &str, b: &str) -> Formula {
        Formula::Eq(Term::var(a), Term::var(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn exists(v: &str, a: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(a))
    }

    pub fn forall(v: &str, a: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(a))
    }

    /// Free variables in name order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    /// Free variables in order of first occurrence, left to right.
    pub fn free_vars_ordered(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free_ordered(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut ordered = Vec::new();
        self.collect_free_ordered(bound, &mut ordered);
        out.extend(ordered);
    }

    fn collect_free_ordered(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let push_terms = |terms: &[&Term], bound: &Vec<String>, out: &mut Vec<String>| {
            for t in terms {
                let mut vs = Vec::new();
                term_vars_ordered(t, &mut vs);
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        };
        match self {
            Formula::False | Formula::True => {}
            Formula::Rel(_, args) => push_terms(&args.iter().collect::<Vec<_>>(), bound, out),
            Formula::Eq(a, b) => push_terms(&[a, b], bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free_ordered(bound, out);
                b.collect_free_ordered(bound, out);
            }
            Formula::Not(a) => a.collect_free_ordered(bound, out),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                bound.push(v.clone());
                a.collect_free_ordered(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of connective and quantifier nodes. Atoms, `true` and `false`
    /// weigh nothing.
    pub fn size(&self) -> usize {
        match self {
            Formula::False | Formula::True | Formula::Rel(..) | Formula::Eq(..) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.size(),
        }
    }

    /// All variable names occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_vars(&mut out);
        out
    }

    fn walk_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::False | Formula::True => {}
            Formula::Rel(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            Formula::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.walk_vars(out);
                b.walk_vars(out);
            }
            Formula::Not(a) => a.walk_vars(out),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                out.insert(v.clone());
                a.walk_vars(out);
            }
        }
    }
}

fn term_vars_ordered(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Term::Const(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| term_vars_ordered(a, out)),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

/// `open_ok` says whether the text may run to the end of the enclosing
/// expression; a quantifier needs that, since its scope extends rightwards.
fn render(phi: &Formula, ctx: u8, open_ok: bool, out: &mut String) {
    let wrap = |prec: u8, out: &mut String, body: &dyn Fn(bool, &mut String)| {
        if prec < ctx {
            out.push('(');
            body(true, out);
            out.push(')');
        } else {
            body(open_ok, out);
        }
    };
    match phi {
        Formula::False => out.push_str("false"),
        Formula::True => out.push_str("true"),
        Formula::Rel(r, args) => {
            out.push_str(r);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&a.to_string());
                }
                out.push(')');
            }
        }
        Formula::Eq(a, b) => {
            out.push_str(&format!("{a} = {b}"));
        }
        Formula::Not(a) => {
            out.push('~');
            render(a, PREC_UNARY, open_ok, out);
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (prec, op) = if matches!(phi, Formula::And(..)) {
                (PREC_AND, " & ")
            } else {
                (PREC_OR, " | ")
            };
            wrap(prec, out, &|open, out: &mut String| {
                render(a, prec, false, out);
                out.push_str(op);
                render(b, prec + 1, open, out);
            });
        }
        Formula::Implies(a, b) => wrap(PREC_IMPLIES, out, &|open, out: &mut String| {
            render(a, PREC_IMPLIES + 1, false, out);
            out.push_str(" -> ");
            render(b, PREC_IMPLIES, open, out);
        }),
        Formula::Exists(v, a) | Formula::Forall(v, a) => {
            let kw = if matches!(phi, Formula::Exists(..)) {
                "exists"
            } else {
                "forall"
            };
            let body = |out: &mut String| {
                out.push_str(&format!("{kw} {v}. "));
                render(a, PREC_IMPLIES, true, out);
            };
            if open_ok {
                body(out);
            } else {
                out.push('(');
                body(out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        render(self, PREC_IMPLIES, true, &mut s);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_parenthesizes_by_precedence() {
        let phi = Formula::and(
            Formula::or(Formula::rel("P", &["x"]), Formula::rel("Q", &["x"])),
            Formula::rel("R", &["x"]),
        );
        assert_eq!(phi.to_string(), "(P(x) | Q(x)) & R(x)");
        let q = Formula::and(
            Formula::exists("x", Formula::rel("P", &["x"])),
            Formula::True,
        );
        assert_eq!(q.to_string(), "(exists x. P(x)) & true");
        let r = Formula::and(
            Formula::True,
            Formula::exists("x", Formula::rel("P", &["x"])),
        );
        assert_eq!(r.to_string(), "true & exists x. P(x)");
    }

    #[test]
    fn free_variables_and_size() {
        let phi = Formula::exists(
            "z",
            Formula::and(
                Formula::rel("E", &["v1", "z"]),
                Formula::rel("E", &["v2", "z"]),
            ),
        );
        assert_eq!(
            phi.free_vars_ordered(),
            vec!["v1".to_string(), "v2".to_string()]
        );
        assert_eq!(phi.size(), 2);
        assert!(!phi.is_sentence());
    }
}
