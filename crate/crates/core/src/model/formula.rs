//! Constraint formula AST and its surface-syntax printer.
//!
//! The printer emits the same language the parser accepts, inserting
//! parentheses only where precedence requires them, so that printing and
//! re-parsing yields a structurally equal tree.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Str(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    if c == '\'' {
                        f.write_str("''")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                f.write_str("'")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Application of the mapping named `func`; resolved against the type of `arg`.
    Apply {
        func: String,
        arg: Box<Term>,
    },
    Lit(Literal),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// `isNull(a, b)`: `a` unless it is null, else `b`.
    Coalesce(Box<Term>, Box<Term>),
    CurrentYear,
}

impl Term {
    pub fn apply(func: impl Into<String>, arg: Term) -> Term {
        Term::Apply {
            func: func.into(),
            arg: Box::new(arg),
        }
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn uses_current_year(&self) -> bool {
        match self {
            Term::CurrentYear => true,
            Term::Var(_) | Term::Lit(_) => false,
            Term::Apply { arg, .. } => arg.uses_current_year(),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Coalesce(a, b) => {
                a.uses_current_year() || b.uses_current_year()
            }
        }
    }

    fn is_additive(&self) -> bool {
        matches!(self, Term::Add(..) | Term::Sub(..))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Apply { func, arg } => write!(f, "{func}({arg})"),
            Term::Lit(l) => write!(f, "{l}"),
            Term::Add(a, b) | Term::Sub(a, b) => {
                let op = if matches!(self, Term::Add(..)) { "+" } else { "-" };
                // left-associative: only a right operand that is itself additive needs parens
                if b.is_additive() {
                    write!(f, "{a} {op} ({b})")
                } else {
                    write!(f, "{a} {op} {b}")
                }
            }
            Term::Coalesce(a, b) => write!(f, "isNull({a}, {b})"),
            Term::CurrentYear => f.write_str("currentYear()"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Forall {
        vars: Vec<String>,
        set: String,
        body: Box<Formula>,
    },
    Exists {
        vars: Vec<String>,
        set: String,
        body: Box<Formula>,
    },
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Compare { op: CmpOp, lhs: Term, rhs: Term },
    IsNull(Term),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn cmp(op: CmpOp, lhs: Term, rhs: Term) -> Formula {
        Formula::Compare { op, lhs, rhs }
    }

    /// Conjuncts of a right- or left-nested chain of `And`.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::And(a, b) = f {
                walk(a, out);
                walk(b, out);
            } else {
                out.push(f);
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn uses_current_year(&self) -> bool {
        let mut found = false;
        self.visit_terms(&mut |t| found |= t.uses_current_year());
        found
    }

    pub fn has_implication(&self) -> bool {
        match self {
            Formula::Implies(..) => true,
            Formula::Forall { body, .. } | Formula::Exists { body, .. } => body.has_implication(),
            Formula::And(a, b) | Formula::Or(a, b) => a.has_implication() || b.has_implication(),
            Formula::Not(a) => a.has_implication(),
            Formula::Compare { .. } | Formula::IsNull(_) => false,
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::Forall { .. } | Formula::Exists { .. } => true,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.has_quantifier() || b.has_quantifier()
            }
            Formula::Not(a) => a.has_quantifier(),
            Formula::Compare { .. } | Formula::IsNull(_) => false,
        }
    }

    /// Visits every top-level term of every atom, in left-to-right order.
    pub fn visit_terms(&self, visit: &mut impl FnMut(&Term)) {
        match self {
            Formula::Forall { body, .. } | Formula::Exists { body, .. } => body.visit_terms(visit),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_terms(visit);
                b.visit_terms(visit);
            }
            Formula::Not(a) => a.visit_terms(visit),
            Formula::Compare { lhs, rhs, .. } => {
                visit(lhs);
                visit(rhs);
            }
            Formula::IsNull(t) => visit(t),
        }
    }

    /// Free variables of the formula.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn term_vars(t: &Term, bound: &[String], out: &mut BTreeSet<String>) {
            match t {
                Term::Var(v) => {
                    if !bound.contains(v) {
                        out.insert(v.clone());
                    }
                }
                Term::Apply { arg, .. } => term_vars(arg, bound, out),
                Term::Add(a, b) | Term::Sub(a, b) | Term::Coalesce(a, b) => {
                    term_vars(a, bound, out);
                    term_vars(b, bound, out);
                }
                Term::Lit(_) | Term::CurrentYear => {}
            }
        }
        fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::Forall { vars, body, .. } | Formula::Exists { vars, body, .. } => {
                    let n = bound.len();
                    bound.extend(vars.iter().cloned());
                    walk(body, bound, out);
                    bound.truncate(n);
                }
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    walk(a, bound, out);
                    walk(b, bound, out);
                }
                Formula::Not(a) => walk(a, bound, out),
                Formula::Compare { lhs, rhs, .. } => {
                    term_vars(lhs, bound, out);
                    term_vars(rhs, bound, out);
                }
                Formula::IsNull(t) => term_vars(t, bound, out),
            }
        }
        let mut out = BTreeSet::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Forall { .. } | Formula::Exists { .. } => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            Formula::Compare { .. } | Formula::IsNull(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        // quantifier bodies extend to the right as far as possible
        let parens = own < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Formula::Forall { vars, set, body } | Formula::Exists { vars, set, body } => {
                let q = if matches!(self, Formula::Forall { .. }) {
                    "forall"
                } else {
                    "exists"
                };
                write!(f, "{q} {} in {set}: ", vars.join(", "))?;
                body.fmt_prec(f, 0)?;
            }
            Formula::Implies(a, b) => {
                // right-associative
                a.fmt_prec(f, 2)?;
                f.write_str(" implies ")?;
                b.fmt_prec(f, 1)?;
            }
            Formula::Or(a, b) => {
                // parser builds left-nested chains
                a.fmt_prec(f, 2)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 3)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 3)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, 4)?;
            }
            Formula::Not(a) => {
                if let Formula::IsNull(t) = a.as_ref() {
                    write!(f, "{t} is not null")?;
                } else {
                    f.write_str("not ")?;
                    a.fmt_prec(f, 5)?;
                }
            }
            Formula::Compare { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol())?,
            Formula::IsNull(t) => write!(f, "{t} is null")?,
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
