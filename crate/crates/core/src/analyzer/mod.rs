//! Pruning of unique keys implied by residual constraints.
//!
//! Two rules are implemented:
//!
//! * a null-reflexive composition `outer ° inner` makes `inner` one-to-one,
//!   so a unique key on `inner` alone is redundant;
//! * an interval no-overlap constraint makes `group + distinct + lo` and
//!   `group + distinct + hi` unique, provided every stored interval is
//!   well formed (`lo <= hi` is a check of the table) and, for the `lo`
//!   key, open intervals cannot start after the current year.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::{
    Bound, CheckKind, CmpOp, ColumnType, ConstraintKind, Formula, Literal, RelationalSchema,
    Table, Term, ValueType,
};
use crate::translator::NonRelationalOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ImplicationRule {
    #[serde(rename = "null-reflexive")]
    NullReflexive,
    #[serde(rename = "no-overlap")]
    NoOverlap,
}

impl fmt::Display for ImplicationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImplicationRule::NullReflexive => "null-reflexive",
            ImplicationRule::NoOverlap => "no-overlap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrunedKey {
    pub table: String,
    pub key: String,
    pub columns: Vec<String>,
    #[serde(rename = "impliedBy")]
    pub implied_by: String,
    pub rule: ImplicationRule,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ImplicationReport {
    pub pruned: Vec<PrunedKey>,
    /// Advisory notes: implications found but not acted upon.
    #[serde(rename = "keptImplied")]
    pub kept_implied: Vec<String>,
}

/// Removes the unique keys implied by `residual` constraints.
pub fn analyze(schema: &RelationalSchema, residual: &NonRelationalOutput) -> (RelationalSchema, ImplicationReport) {
    let mut out = schema.clone();
    let mut report = ImplicationReport::default();
    for entry in &residual.entries {
        let c = &entry.constraint;
        match &c.kind {
            ConstraintKind::NullReflexive { inner, .. } => {
                if let Some(t) = out.table_mut(&inner.set) {
                    prune(t, std::slice::from_ref(&inner.name), &c.label, ImplicationRule::NullReflexive, &mut report);
                }
            }
            ConstraintKind::NoOverlap {
                set,
                distinct,
                group,
                lo,
                hi,
            } => {
                let Some(t) = out.table_mut(set) else {
                    continue;
                };
                let mut base: Vec<String> = group.clone();
                base.push(distinct.clone());
                if !has_interval_check(t, lo, hi) {
                    report.kept_implied.push(format!(
                        "{}: keys on {} with {lo} or {hi} kept; {set} has no check {lo}(x) <= {hi}(x)",
                        c.label,
                        base.join(", ")
                    ));
                    continue;
                }
                let with = |b: &str| {
                    let mut k = base.clone();
                    k.push(b.to_string());
                    k
                };
                if starts_no_later_than_now(t, lo) {
                    prune(t, &with(lo), &c.label, ImplicationRule::NoOverlap, &mut report);
                } else {
                    report.kept_implied.push(format!(
                        "{}: key on {} kept; {lo} is not bounded by the current year",
                        c.label,
                        with(lo).join(", ")
                    ));
                }
                prune(t, &with(hi), &c.label, ImplicationRule::NoOverlap, &mut report);
            }
            ConstraintKind::Tuple { .. } | ConstraintKind::ObjectFormula(_) => {
                if let Some(f) = c.to_formula() {
                    note_lifespan_implications(&out, &c.label, &f, &mut report);
                }
            }
            _ => {}
        }
    }
    (out, report)
}

fn prune(table: &mut Table, columns: &[String], by: &str, rule: ImplicationRule, report: &mut ImplicationReport) {
    let want: BTreeSet<&str> = columns.iter().map(String::as_str).collect();
    let Some(i) = table
        .unique_keys
        .iter()
        .position(|u| u.columns.iter().map(String::as_str).collect::<BTreeSet<_>>() == want)
    else {
        return;
    };
    let key = table.unique_keys.remove(i);
    report.pruned.push(PrunedKey {
        table: table.name.clone(),
        key: key.id,
        columns: key.columns,
        implied_by: by.to_string(),
        rule,
    });
}

/// Whether `table` carries the check `lo(x) <= hi(x)` (or its mirror).
fn has_interval_check(table: &Table, lo: &str, hi: &str) -> bool {
    table.checks.iter().any(|c| match &c.kind {
        CheckKind::Tuple { var, body } => {
            let l = Term::apply(lo, Term::var(var.as_str()));
            let h = Term::apply(hi, Term::var(var.as_str()));
            *body == Formula::cmp(CmpOp::Le, l.clone(), h.clone())
                || *body == Formula::cmp(CmpOp::Ge, h, l)
        }
        _ => false,
    })
}

fn starts_no_later_than_now(table: &Table, lo: &str) -> bool {
    let dynamic_type = table.column(lo).is_some_and(|c| {
        matches!(
            &c.sql_type,
            ColumnType::Value(ValueType::IntRange { hi: Bound::CurrentYear, .. })
        )
    });
    dynamic_type
        || table.checks.iter().any(|c| {
            matches!(&c.kind, CheckKind::Range { column, hi: Bound::CurrentYear, .. } if column == lo)
        })
}

/// Notes checks `g(x) <= f(x)` made redundant, where the constraint's
/// guard holds, by `0 <= c(x)` with `c = isNull(f(x), _) - g(x)`.
fn note_lifespan_implications(schema: &RelationalSchema, label: &str, f: &Formula, report: &mut ImplicationReport) {
    let Formula::Forall { vars, set, body } = f else {
        return;
    };
    if vars.len() != 1 {
        return;
    }
    let Some(table) = schema.table(set) else {
        return;
    };
    let mut lower_bounded = Vec::new();
    collect_nonnegative(body, &mut lower_bounded);
    for col in lower_bounded {
        let Some(Term::Sub(a, b)) = table.column(&col).and_then(|c| c.computed_expr.clone()) else {
            continue;
        };
        let Term::Coalesce(upper, _) = *a else {
            continue;
        };
        let implied = Formula::cmp(CmpOp::Le, *b, *upper);
        for check in &table.checks {
            if let CheckKind::Tuple { body, .. } = &check.kind {
                if *body == implied {
                    report.kept_implied.push(format!(
                        "{label} implies {} ({implied}) where its guard holds; kept as a table check",
                        check.id
                    ));
                }
            }
        }
    }
}

/// Columns `c` for which the formula contains `0 <= c(x)` or `c(x) >= 0`.
fn collect_nonnegative(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::Compare { op, lhs, rhs } => {
            let zero = Term::Lit(Literal::Int(0));
            let col = match (op, lhs, rhs) {
                (CmpOp::Le, l, Term::Apply { func, arg }) if *l == zero => Some((func, arg)),
                (CmpOp::Ge, Term::Apply { func, arg }, r) if *r == zero => Some((func, arg)),
                _ => None,
            };
            if let Some((func, arg)) = col {
                if matches!(arg.as_ref(), Term::Var(_)) && !out.contains(func) {
                    out.push(func.clone());
                }
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_nonnegative(a, out);
            collect_nonnegative(b, out);
        }
        Formula::Not(_) | Formula::IsNull(_) | Formula::Forall { .. } | Formula::Exists { .. } => {}
    }
}
