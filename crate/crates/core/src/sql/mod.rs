//! SQL DDL generation under dialect capability profiles.
//!
//! Tables are created in translation order with everything that cannot
//! dangle inline; deferred foreign keys and unique keys follow as table
//! alterations, then views.

mod expr;

use std::fmt::{self, Write};

use serde::Serialize;

use crate::model::{
    Bound, Check, CheckKind, Column, ColumnType, ForeignKey, Literal, RelationalSchema, Table,
    Term, UniqueKey, ValueType, MAX_CARD_EXPONENT,
};

pub use expr::{formula_sql, quote_ident, term_sql};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialectProfile {
    pub name: &'static str,
    /// Unique keys may hold many rows with nulls in their columns.
    #[serde(rename = "nullsDistinctUnique")]
    pub nulls_distinct_unique: bool,
    /// Checks may refer to the current date.
    #[serde(rename = "dynamicCheckExpr")]
    pub dynamic_check_expr: bool,
    /// Computed columns may be persisted even when non-deterministic.
    #[serde(rename = "persistedNondeterministicComputed")]
    pub persisted_nondeterministic_computed: bool,
    /// Checks may contain implications.
    #[serde(rename = "conditionalCheckExpr")]
    pub conditional_check_expr: bool,
}

impl DialectProfile {
    pub fn ansi() -> Self {
        DialectProfile {
            name: "ansi",
            nulls_distinct_unique: true,
            dynamic_check_expr: true,
            persisted_nondeterministic_computed: true,
            conditional_check_expr: true,
        }
    }

    pub fn strict() -> Self {
        DialectProfile {
            name: "strict",
            nulls_distinct_unique: false,
            dynamic_check_expr: false,
            persisted_nondeterministic_computed: false,
            conditional_check_expr: false,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "ansi" => Some(Self::ansi()),
            "strict" => Some(Self::strict()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemotionReason {
    NullableUniqueKey,
    DynamicCheck,
    ConditionalCheck,
    NondeterministicComputed,
}

impl fmt::Display for DemotionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemotionReason::NullableUniqueKey => "unique key over nullable columns",
            DemotionReason::DynamicCheck => "check depends on the current year",
            DemotionReason::ConditionalCheck => "check contains an implication",
            DemotionReason::NondeterministicComputed => "non-deterministic computed column",
        })
    }
}

/// A schema element the dialect cannot carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Demoted {
    UniqueKey(UniqueKey),
    Check(Check),
    Computed { column: String, expr: Term },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demotion {
    /// Constraint id, or `TABLE.column.computed` for computed columns.
    pub id: String,
    pub table: String,
    pub description: String,
    pub reason: DemotionReason,
    pub demoted: Demoted,
}

impl Demotion {
    /// Whether the demoted element is a relational constraint (rather than a column definition).
    pub fn is_constraint(&self) -> bool {
        !matches!(self.demoted, Demoted::Computed { .. })
    }

    /// Strategy the enforcement plan uses instead.
    pub fn strategy(&self) -> &'static str {
        match self.demoted {
            Demoted::UniqueKey(_) => "unique-nulls-distinct",
            Demoted::Check(_) => "reject-check",
            Demoted::Computed { .. } => "propagate-update",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ddl {
    pub sql: String,
    pub demotions: Vec<Demotion>,
    /// Ids of the relational constraints present in `sql`.
    pub emitted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("{table}.{column}: {reason} is not supported by dialect {dialect}")]
    Unsupported {
        table: String,
        column: String,
        reason: String,
        dialect: &'static str,
    },
}

const INT32_MAX: i64 = i32::MAX as i64;

pub fn emit_ddl(schema: &RelationalSchema, profile: &DialectProfile) -> Result<Ddl, EmitError> {
    let mut e = Emitter {
        profile,
        sql: String::new(),
        demotions: Vec::new(),
        emitted: Vec::new(),
        later: Vec::new(),
    };
    writeln!(e.sql, "-- dialect: {}", profile.name).unwrap();
    for t in &schema.tables {
        e.table(t)?;
    }
    let later = std::mem::take(&mut e.later);
    if !later.is_empty() {
        e.sql.push('\n');
        for stmt in later {
            e.sql.push_str(&stmt);
            e.sql.push('\n');
        }
    }
    for v in &schema.views {
        write!(e.sql, "\nCREATE VIEW {} AS\n{};\n", quote_ident(&v.name), v.body.trim_end_matches(';')).unwrap();
    }
    Ok(Ddl {
        sql: e.sql,
        demotions: e.demotions,
        emitted: e.emitted,
    })
}

struct Emitter<'p> {
    profile: &'p DialectProfile,
    sql: String,
    demotions: Vec<Demotion>,
    emitted: Vec<String>,
    /// Phase two statements.
    later: Vec<String>,
}

impl Emitter<'_> {
    fn table(&mut self, t: &Table) -> Result<(), EmitError> {
        let mut items = Vec::new();
        for c in &t.columns {
            items.push(self.column(t, c)?);
        }
        items.push(format!(
            "CONSTRAINT {} PRIMARY KEY ({})",
            quote_ident(&t.primary_key.id),
            quote_ident(&t.primary_key.column)
        ));
        self.emitted.push(t.primary_key.id.clone());
        for c in &t.checks {
            if let Some(item) = self.check(t, c) {
                items.push(item);
            }
        }
        for fk in &t.foreign_keys {
            self.emitted.push(fk.id.clone());
            if fk.deferred {
                self.later.push(format!(
                    "ALTER TABLE {} ADD {};",
                    quote_ident(&t.name),
                    foreign_key(fk)
                ));
            } else {
                items.push(foreign_key(fk));
            }
        }
        for u in &t.unique_keys {
            let nullable = u.columns.iter().any(|c| !t.is_not_null(c));
            if nullable && !self.profile.nulls_distinct_unique {
                self.demotions.push(Demotion {
                    id: u.id.clone(),
                    table: t.name.clone(),
                    description: format!("unique ({}) in {}", u.columns.join(", "), t.name),
                    reason: DemotionReason::NullableUniqueKey,
                    demoted: Demoted::UniqueKey(u.clone()),
                });
                continue;
            }
            self.emitted.push(u.id.clone());
            let cols: Vec<String> = u.columns.iter().map(|c| quote_ident(c)).collect();
            self.later.push(format!(
                "ALTER TABLE {} ADD CONSTRAINT {} UNIQUE ({});",
                quote_ident(&t.name),
                quote_ident(&u.id),
                cols.join(", ")
            ));
        }
        write!(self.sql, "\nCREATE TABLE {} (\n", quote_ident(&t.name)).unwrap();
        for (i, item) in items.iter().enumerate() {
            let sep = if i + 1 < items.len() { "," } else { "" };
            writeln!(self.sql, "    {item}{sep}").unwrap();
        }
        self.sql.push_str(");\n");
        Ok(())
    }

    fn column(&mut self, t: &Table, c: &Column) -> Result<String, EmitError> {
        let unsupported = |reason: String| EmitError::Unsupported {
            table: t.name.clone(),
            column: c.name.clone(),
            reason,
            dialect: self.profile.name,
        };
        let mut s = format!("{} {}", quote_ident(&c.name), sql_type(&c.sql_type).map_err(unsupported)?);
        if matches!(c.sql_type, ColumnType::Autonumber { .. }) {
            s.push_str(" GENERATED BY DEFAULT AS IDENTITY");
        }
        if let Some(expr) = &c.computed_expr {
            if expr.uses_current_year() && !self.profile.persisted_nondeterministic_computed {
                self.demotions.push(Demotion {
                    id: format!("{}.{}.computed", t.name, c.name),
                    table: t.name.clone(),
                    description: format!("{}.{} = {expr}", t.name, c.name),
                    reason: DemotionReason::NondeterministicComputed,
                    demoted: Demoted::Computed {
                        column: c.name.clone(),
                        expr: expr.clone(),
                    },
                });
            } else {
                write!(s, " GENERATED ALWAYS AS ({})", term_sql(expr)).unwrap();
            }
        }
        if let Some(d) = t.defaults.iter().find(|d| d.column == c.name) {
            write!(s, " CONSTRAINT {} DEFAULT {}", quote_ident(&d.id), literal_sql(&d.value)).unwrap();
            self.emitted.push(d.id.clone());
        }
        for n in t.not_null.iter().filter(|n| n.column == c.name) {
            write!(s, " CONSTRAINT {} NOT NULL", quote_ident(&n.id)).unwrap();
            self.emitted.push(n.id.clone());
        }
        Ok(s)
    }

    fn check(&mut self, t: &Table, c: &Check) -> Option<String> {
        let reason = if c.uses_current_year() && !self.profile.dynamic_check_expr {
            Some(DemotionReason::DynamicCheck)
        } else if matches!(&c.kind, CheckKind::Tuple { body, .. } if body.has_implication())
            && !self.profile.conditional_check_expr
        {
            Some(DemotionReason::ConditionalCheck)
        } else {
            None
        };
        if let Some(reason) = reason {
            self.demotions.push(Demotion {
                id: c.id.clone(),
                table: t.name.clone(),
                description: check_description(c),
                reason,
                demoted: Demoted::Check(c.clone()),
            });
            return None;
        }
        self.emitted.push(c.id.clone());
        let body = match &c.kind {
            // `None`: realized by the column type
            CheckKind::Domain { column, domain } => domain_sql(column, domain)?,
            CheckKind::Range { column, lo, hi } => between(column, *lo, *hi),
            CheckKind::Tuple { body, .. } => formula_sql(body),
        };
        Some(format!("CONSTRAINT {} CHECK ({body})", quote_ident(&c.id)))
    }
}

fn check_description(c: &Check) -> String {
    match &c.kind {
        CheckKind::Domain { column, domain } => {
            domain_sql(column, domain).unwrap_or_else(|| format!("{column} in its type"))
        }
        CheckKind::Range { column, lo, hi } => between(column, *lo, *hi),
        CheckKind::Tuple { body, .. } => body.to_string(),
    }
}

fn foreign_key(fk: &ForeignKey) -> String {
    format!(
        "CONSTRAINT {} FOREIGN KEY ({}) REFERENCES {} ({})",
        quote_ident(&fk.id),
        quote_ident(&fk.column),
        quote_ident(&fk.ref_table),
        quote_ident(&fk.ref_column)
    )
}

fn int_type(max_abs: i64) -> &'static str {
    if max_abs <= INT32_MAX {
        "INTEGER"
    } else {
        "BIGINT"
    }
}

fn bound_abs(b: Bound) -> i64 {
    match b {
        Bound::Int(v) => v.saturating_abs(),
        Bound::CurrentYear => 9999,
    }
}

fn natural_max(digits: u32) -> Option<i64> {
    (digits <= MAX_CARD_EXPONENT).then(|| 10i64.pow(digits) - 1)
}

fn sql_type(t: &ColumnType) -> Result<String, String> {
    Ok(match t {
        ColumnType::Autonumber { max } | ColumnType::Reference { max } => int_type(*max).into(),
        ColumnType::Coded { values } => int_type(values.len() as i64).into(),
        ColumnType::Value(v) => match v {
            ValueType::Text { max_len } => {
                if *max_len == 0 {
                    return Err("zero-length text".into());
                }
                format!("VARCHAR({max_len})")
            }
            ValueType::Natural { max_digits } => {
                int_type(natural_max(*max_digits).ok_or(format!("nat({max_digits})"))?).into()
            }
            ValueType::IntRange { lo, hi } => int_type(bound_abs(*lo).max(bound_abs(*hi))).into(),
            ValueType::Enum(values) => {
                format!("VARCHAR({})", values.iter().map(|v| v.chars().count()).max().unwrap_or(1).max(1))
            }
            ValueType::Autonumber { card_exponent } => int_type(crate::model::max_surrogate(*card_exponent)).into(),
        },
    })
}

fn bound_sql(b: Bound) -> String {
    match b {
        Bound::Int(v) => v.to_string(),
        Bound::CurrentYear => term_sql(&Term::CurrentYear),
    }
}

fn between(column: &str, lo: Bound, hi: Bound) -> String {
    format!("{} BETWEEN {} AND {}", quote_ident(column), bound_sql(lo), bound_sql(hi))
}

/// Check body of a column's codomain, or `None` when the type says it all.
fn domain_sql(column: &str, domain: &ColumnType) -> Option<String> {
    let c = quote_ident(column);
    match domain {
        ColumnType::Autonumber { max } | ColumnType::Reference { max } => Some(format!("{c} BETWEEN 1 AND {max}")),
        ColumnType::Coded { values } => Some(format!("{c} BETWEEN 1 AND {}", values.len())),
        ColumnType::Value(v) => match v {
            ValueType::Text { .. } => None,
            ValueType::Natural { max_digits } => {
                Some(format!("{c} BETWEEN 0 AND {}", natural_max(*max_digits).unwrap_or(i64::MAX)))
            }
            ValueType::IntRange { lo, hi } => Some(between(column, *lo, *hi)),
            ValueType::Enum(values) => {
                let lits: Vec<String> = values.iter().map(|v| literal_sql(&Literal::Str(v.clone()))).collect();
                Some(format!("{c} IN ({})", lits.join(", ")))
            }
            ValueType::Autonumber { card_exponent } => Some(format!(
                "{c} BETWEEN 1 AND {}",
                crate::model::max_surrogate(*card_exponent)
            )),
        },
    }
}

fn literal_sql(l: &Literal) -> String {
    match l {
        Literal::Int(v) => v.to_string(),
        Literal::Str(s) => format!("'{}'", s.replace('\'', "''")),
    }
}
