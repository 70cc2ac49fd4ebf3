//! SQL renderings of row-local terms and formulas.

use crate::model::{CmpOp, Formula, Literal, Term};

const RESERVED: [&str; 24] = [
    "ALL", "AND", "AS", "BETWEEN", "BY", "CHECK", "COLUMN", "CONSTRAINT", "CREATE", "DEFAULT",
    "FROM", "GROUP", "IN", "KEY", "NOT", "NULL", "OR", "ORDER", "SELECT", "TABLE", "UNIQUE",
    "USER", "VALUE", "WHERE",
];

/// The identifier as is when it is a plain, non-reserved word; double-quoted otherwise.
pub fn quote_ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name.to_ascii_uppercase().as_str());
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

/// A term over the current row: `f(x)` is column `f`, `x` the identifier column.
pub fn term_sql(t: &Term) -> String {
    match t {
        Term::Var(_) => crate::model::OBJECT_ID.to_string(),
        Term::Apply { func, .. } => quote_ident(func),
        Term::Lit(Literal::Int(v)) => v.to_string(),
        Term::Lit(Literal::Str(s)) => format!("'{}'", s.replace('\'', "''")),
        Term::CurrentYear => "EXTRACT(YEAR FROM CURRENT_DATE)".to_string(),
        Term::Coalesce(a, b) => format!("COALESCE({}, {})", term_sql(a), term_sql(b)),
        Term::Add(a, b) => format!("{} + {}", term_sql(a), operand(b)),
        Term::Sub(a, b) => format!("{} - {}", term_sql(a), operand(b)),
    }
}

fn operand(t: &Term) -> String {
    match t {
        Term::Add(..) | Term::Sub(..) => format!("({})", term_sql(t)),
        Term::Lit(Literal::Int(v)) if *v < 0 => format!("({v})"),
        _ => term_sql(t),
    }
}

fn op_sql(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "<>",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

/// A row-local formula as a check condition. Implications become
/// `NOT (a) OR b`; quantifiers are dropped (row-local bodies only).
pub fn formula_sql(f: &Formula) -> String {
    render(f, 0)
}

fn level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) | Formula::Or(..) => 1,
        Formula::And(..) => 2,
        _ => 3,
    }
}

fn render(f: &Formula, min: u8) -> String {
    let s = match f {
        Formula::Forall { body, .. } | Formula::Exists { body, .. } => return render(body, min),
        Formula::Implies(a, b) => format!("NOT ({}) OR {}", render(a, 0), render(b, 1)),
        Formula::Or(a, b) => format!("{} OR {}", render(a, 1), render(b, 2)),
        Formula::And(a, b) => format!("{} AND {}", render(a, 2), render(b, 3)),
        Formula::Not(a) => match a.as_ref() {
            Formula::IsNull(t) => format!("{} IS NOT NULL", term_sql(t)),
            inner => format!("NOT ({})", render(inner, 0)),
        },
        Formula::IsNull(t) => format!("{} IS NULL", term_sql(t)),
        Formula::Compare { op, lhs, rhs } => format!("{} {} {}", term_sql(lhs), op_sql(*op), term_sql(rhs)),
    };
    if level(f) < min {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula_syntax;

    fn sql(src: &str) -> String {
        formula_sql(&parse_formula_syntax(src).unwrap())
    }

    #[test]
    fn identifiers() {
        assert_eq!(quote_ident("Capital"), "Capital");
        assert_eq!(quote_ident("user"), "\"user\"");
        assert_eq!(quote_ident("C.pk"), "\"C.pk\"");
        assert_eq!(quote_ident("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn precedence_is_preserved() {
        assert_eq!(sql("(a(x) = 1 or b(x) = 2) and c(x) = 3"), "(a = 1 OR b = 2) AND c = 3");
        assert_eq!(sql("a(x) = 1 or b(x) = 2 and c(x) = 3"), "a = 1 OR b = 2 AND c = 3");
        assert_eq!(sql("a(x) = 1 implies b(x) = 2 or c(x) = 3"), "NOT (a = 1) OR b = 2 OR c = 3");
        assert_eq!(sql("(a(x) = 1 implies b(x) = 2) and c(x) is null"), "(NOT (a = 1) OR b = 2) AND c IS NULL");
    }

    #[test]
    fn terms() {
        let t = crate::parser::parse_formula_syntax("isNull(p(x), currentYear()) - b(x) >= 0 - (1 - -2)").unwrap();
        assert_eq!(
            formula_sql(&t),
            "COALESCE(p, EXTRACT(YEAR FROM CURRENT_DATE)) - b >= 0 - (1 - (-2))"
        );
    }
}
