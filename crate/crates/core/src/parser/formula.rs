//! Recursive-descent parser for constraint formulas and terms.
//!
//! Precedence, loosest first: quantifier body, `implies` (right-assoc),
//! `or`, `and`, `not`, comparison. Comparison chains `a <= b <= c`
//! desugar to a conjunction of adjacent comparisons.

use super::lexer::Tok;
use super::{Cursor, ParseError};
use crate::model::{CmpOp, Formula, Literal, Term};

const KEYWORDS: [&str; 9] = [
    "forall", "exists", "in", "and", "or", "not", "implies", "is", "null",
];

pub fn formula(c: &mut Cursor) -> Result<Formula, ParseError> {
    implies(c)
}

fn implies(c: &mut Cursor) -> Result<Formula, ParseError> {
    let lhs = or(c)?;
    if c.eat_kw("implies") {
        let rhs = implies(c)?;
        return Ok(Formula::implies(lhs, rhs));
    }
    Ok(lhs)
}

fn or(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = and(c)?;
    while c.eat_kw("or") {
        lhs = Formula::or(lhs, and(c)?);
    }
    Ok(lhs)
}

fn and(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = not(c)?;
    while c.eat_kw("and") {
        lhs = Formula::and(lhs, not(c)?);
    }
    Ok(lhs)
}

fn not(c: &mut Cursor) -> Result<Formula, ParseError> {
    if c.eat_kw("not") {
        return Ok(Formula::negate(not(c)?));
    }
    atom(c)
}

fn atom(c: &mut Cursor) -> Result<Formula, ParseError> {
    if c.at_kw("forall") || c.at_kw("exists") {
        return quantifier(c);
    }
    if c.at_sym("(") {
        let save = c.pos;
        c.next();
        if let Ok(f) = formula(c) {
            if c.eat_sym(")") && !at_term_continuation(c) {
                return Ok(f);
            }
        }
        c.pos = save;
    }
    comparison(c)
}

fn at_term_continuation(c: &Cursor) -> bool {
    c.at_kw("is") || c.at_sym("+") || c.at_sym("-") || cmp_op(c).is_some()
}

fn quantifier(c: &mut Cursor) -> Result<Formula, ParseError> {
    let universal = c.eat_kw("forall");
    if !universal {
        c.expect_kw("exists")?;
    }
    let mut vars = vec![variable(c)?];
    while c.eat_sym(",") {
        vars.push(variable(c)?);
    }
    c.expect_kw("in")?;
    let (set, _) = c.expect_ident()?;
    c.expect_sym(":")?;
    let body = Box::new(formula(c)?);
    Ok(if universal {
        Formula::Forall { vars, set, body }
    } else {
        Formula::Exists { vars, set, body }
    })
}

fn variable(c: &mut Cursor) -> Result<String, ParseError> {
    let (name, span) = c.expect_ident()?;
    if KEYWORDS.contains(&name.as_str()) {
        return Err(ParseError::new(span, format!("`{name}` cannot be used as a variable")));
    }
    Ok(name)
}

fn cmp_op(c: &Cursor) -> Option<CmpOp> {
    match c.peek() {
        Tok::Sym("=") => Some(CmpOp::Eq),
        Tok::Sym("<>") => Some(CmpOp::Ne),
        Tok::Sym("<") => Some(CmpOp::Lt),
        Tok::Sym("<=") => Some(CmpOp::Le),
        Tok::Sym(">") => Some(CmpOp::Gt),
        Tok::Sym(">=") => Some(CmpOp::Ge),
        _ => None,
    }
}

fn comparison(c: &mut Cursor) -> Result<Formula, ParseError> {
    let lhs = term(c)?;
    if c.eat_kw("is") {
        let negated = c.eat_kw("not");
        c.expect_kw("null")?;
        let f = Formula::IsNull(lhs);
        return Ok(if negated { Formula::negate(f) } else { f });
    }
    let Some(op) = cmp_op(c) else {
        return Err(c.error_here(format!(
            "expected a comparison or `is null`, found {}",
            c.peek().describe()
        )));
    };
    c.next();
    let mut rhs = term(c)?;
    let mut out = Formula::cmp(op, lhs, rhs.clone());
    while let Some(op) = cmp_op(c) {
        c.next();
        let next = term(c)?;
        out = Formula::and(out, Formula::cmp(op, rhs, next.clone()));
        rhs = next;
    }
    Ok(out)
}

pub fn term(c: &mut Cursor) -> Result<Term, ParseError> {
    let mut lhs = primary(c)?;
    loop {
        if c.eat_sym("+") {
            lhs = Term::Add(Box::new(lhs), Box::new(primary(c)?));
        } else if c.eat_sym("-") {
            lhs = Term::Sub(Box::new(lhs), Box::new(primary(c)?));
        } else {
            return Ok(lhs);
        }
    }
}

fn primary(c: &mut Cursor) -> Result<Term, ParseError> {
    let tok = c.next();
    match tok.tok {
        Tok::Int(v) => Ok(Term::Lit(Literal::Int(v))),
        Tok::Sym("-") => match c.next().tok {
            Tok::Int(v) => Ok(Term::Lit(Literal::Int(-v))),
            other => Err(ParseError::new(
                tok.span,
                format!("expected a number after `-`, found {}", other.describe()),
            )),
        },
        Tok::Str(s) => Ok(Term::Lit(Literal::Str(s))),
        Tok::Sym("(") => {
            let t = term(c)?;
            c.expect_sym(")")?;
            Ok(t)
        }
        Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
            if !c.eat_sym("(") {
                return Ok(Term::Var(name));
            }
            let t = match name.as_str() {
                "currentYear" => Term::CurrentYear,
                "isNull" => {
                    let a = term(c)?;
                    c.expect_sym(",")?;
                    let b = term(c)?;
                    Term::Coalesce(Box::new(a), Box::new(b))
                }
                _ => Term::apply(name, term(c)?),
            };
            c.expect_sym(")")?;
            Ok(t)
        }
        other => Err(ParseError::new(
            tok.span,
            format!("expected a term, found {}", other.describe()),
        )),
    }
}
