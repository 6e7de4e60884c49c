use super::syntax::{Formula, Term};
use crate::error::{Error, Result};
use crate::structure::Signature;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Not,
    And,
    Or,
    Arrow,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'=' => Tok::Eq,
            b'~' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["exists", "forall", "true", "false"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Not => "`~`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Arrow => "`->`".into(),
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                let open = self.offset();
                self.bump();
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return self.unclosed(open);
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(word) if word == "exists" || word == "forall" => {
                self.bump();
                let var = match self.bump() {
                    Tok::Ident(v) if !KEYWORDS.contains(&v.as_str()) => v,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected a variable after the quantifier");
                    }
                };
                if *self.peek() != Tok::Dot {
                    return self.err(format!(
                        "expected `.` after `{word} {var}`, found {}",
                        self.describe()
                    ));
                }
                self.bump();
                let body = self.implication()?;
                Ok(if word == "exists" {
                    Formula::Exists(var, Box::new(body))
                } else {
                    Formula::Forall(var, Box::new(body))
                })
            }
            Tok::Ident(word) if word == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(word) if word == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let open = self.offset();
                    self.bump();
                    let args = self.arguments(open)?;
                    if *self.peek() == Tok::Eq {
                        self.bump();
                        let rhs = self.term()?;
                        return Ok(Formula::Eq(Term::App(name, args), rhs));
                    }
                    return Ok(Formula::Rel(name, args));
                }
                if *self.peek() == Tok::Eq {
                    self.bump();
                    let rhs = self.term()?;
                    return Ok(Formula::Eq(Term::Var(name), rhs));
                }
                Ok(Formula::Rel(name, vec![]))
            }
            _ => self.err(format!("expected a formula, found {}", self.describe())),
        }
    }

    fn unclosed<T>(&self, open: usize) -> Result<T> {
        Err(Error::Syntax {
            offset: open,
            message: format!("unbalanced `(`: expected `)`, found {}", self.describe()),
        })
    }

    /// Arguments after an opening parenthesis at `open`, through the `)`.
    fn arguments(&mut self, open: usize) -> Result<Vec<Term>> {
        let mut args = vec![self.term_or_unclosed(open)?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    args.push(self.term_or_unclosed(open)?);
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return self.unclosed(open),
            }
        }
    }

    fn term_or_unclosed(&mut self, open: usize) -> Result<Term> {
        if *self.peek() == Tok::End {
            return self.unclosed(open);
        }
        self.term()
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let open = self.offset();
                    self.bump();
                    let args = self.arguments(open)?;
                    return Ok(Term::App(name, args));
                }
                Ok(Term::Var(name))
            }
            _ => self.err(format!("expected a term, found {}", self.describe())),
        }
    }
}

/// Parses concrete syntax. Bare identifiers in term position become
/// variables; [`resolve`] turns declared constants into constants.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let phi = p.implication()?;
    if *p.peek() != Tok::End {
        return p.err(format!(
            "unexpected {} after a complete formula",
            p.describe()
        ));
    }
    Ok(phi)
}

/// Parses and checks symbols and arities against a signature.
pub fn parse_formula_with(text: &str, sig: &Signature) -> Result<Formula> {
    resolve(&parse_formula(text)?, sig)
}

/// Resolves identifiers against a signature: bound names stay variables,
/// otherwise declared constants become constants. Checks every symbol.
pub fn resolve(phi: &Formula, sig: &Signature) -> Result<Formula> {
    fn term(t: &Term, sig: &Signature, bound: &mut Vec<String>) -> Result<Term> {
        match t {
            Term::Var(v) | Term::Const(v) => {
                if bound.contains(v) {
                    Ok(Term::Var(v.clone()))
                } else if sig.constant(v).is_some() {
                    Ok(Term::Const(v.clone()))
                } else if matches!(t, Term::Const(_)) {
                    Err(Error::UnknownSymbol(v.clone()))
                } else {
                    Ok(Term::Var(v.clone()))
                }
            }
            Term::App(g, args) => {
                let (_, arity) = sig
                    .function(g)
                    .ok_or_else(|| Error::UnknownSymbol(g.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity {
                        symbol: g.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                Ok(Term::App(
                    g.clone(),
                    args.iter()
                        .map(|a| term(a, sig, bound))
                        .collect::<Result<_>>()?,
                ))
            }
        }
    }
    fn go(phi: &Formula, sig: &Signature, bound: &mut Vec<String>) -> Result<Formula> {
        Ok(match phi {
            Formula::False => Formula::False,
            Formula::True => Formula::True,
            Formula::Rel(r, args) => {
                let (_, arity) = sig
                    .relation(r)
                    .ok_or_else(|| Error::UnknownSymbol(r.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity {
                        symbol: r.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                Formula::Rel(
                    r.clone(),
                    args.iter()
                        .map(|a| term(a, sig, bound))
                        .collect::<Result<_>>()?,
                )
            }
            Formula::Eq(a, b) => Formula::Eq(term(a, sig, bound)?, term(b, sig, bound)?),
            Formula::And(a, b) => Formula::and(go(a, sig, bound)?, go(b, sig, bound)?),
            Formula::Or(a, b) => Formula::or(go(a, sig, bound)?, go(b, sig, bound)?),
            Formula::Implies(a, b) => Formula::implies(go(a, sig, bound)?, go(b, sig, bound)?),
            Formula::Not(a) => Formula::not(go(a, sig, bound)?),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                bound.push(v.clone());
                let body = go(a, sig, bound);
                bound.pop();
                let body = Box::new(body?);
                if matches!(phi, Formula::Exists(..)) {
                    Formula::Exists(v.clone(), body)
                } else {
                    Formula::Forall(v.clone(), body)
                }
            }
        })
    }
    go(phi, sig, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse_formula("exists x. exists y. E(x,y)").unwrap(),
            Formula::exists("x", Formula::exists("y", Formula::rel("E", &["x", "y"])))
        );
        assert_eq!(
            parse_formula("forall x. (E(x,x) -> false)").unwrap(),
            Formula::forall(
                "x",
                Formula::implies(Formula::rel("E", &["x", "x"]), Formula::False)
            )
        );
        let err = parse_formula("exists x. E(x").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                offset: 11,
                message: "unbalanced `(`: expected `)`, found end of input".into()
            }
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let phi = parse_formula("A | B & C -> D -> E").unwrap();
        assert_eq!(phi.to_string(), "A | B & C -> D -> E");
        assert_eq!(
            phi,
            Formula::implies(
                Formula::or(
                    Formula::Rel("A".into(), vec![]),
                    Formula::and(
                        Formula::Rel("B".into(), vec![]),
                        Formula::Rel("C".into(), vec![])
                    )
                ),
                Formula::implies(
                    Formula::Rel("D".into(), vec![]),
                    Formula::Rel("E".into(), vec![])
                )
            )
        );
        let q = parse_formula("exists x. P(x) & Q(x)").unwrap();
        assert_eq!(
            q,
            Formula::exists(
                "x",
                Formula::and(Formula::rel("P", &["x"]), Formula::rel("Q", &["x"]))
            )
        );
        let n = parse_formula("~P(x) & Q(x)").unwrap();
        assert!(matches!(n, Formula::And(..)));
    }

    #[test]
    fn equality_and_function_terms() {
        let phi = parse_formula("f(x, c) = y").unwrap();
        assert_eq!(
            phi,
            Formula::Eq(
                Term::App("f".into(), vec![Term::var("x"), Term::var("c")]),
                Term::var("y")
            )
        );
        let sig = Signature::new(vec![], vec![("f".into(), 2)], vec!["c".into()]).unwrap();
        let r = resolve(&phi, &sig).unwrap();
        assert_eq!(r.to_string(), "f(x,c) = y");
        assert!(
            matches!(r, Formula::Eq(Term::App(_, ref a), _) if a[1] == Term::Const("c".into()))
        );
    }

    #[test]
    fn signature_checks() {
        let sig = Signature::graph();
        assert!(matches!(
            parse_formula_with("E(x)", &sig),
            Err(Error::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert_eq!(
            parse_formula_with("F(x,y)", &sig),
            Err(Error::UnknownSymbol("F".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(
            parse_formula("E(x,y) &"),
            Err(Error::Syntax { offset: 8, .. })
        ));
        assert!(matches!(
            parse_formula("exists . E(x,x)"),
            Err(Error::Syntax { offset: 7, .. })
        ));
        assert!(matches!(
            parse_formula("E(x,y))"),
            Err(Error::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            parse_formula("E(x,y) $"),
            Err(Error::Syntax { offset: 7, .. })
        ));
    }
}
