//! Relational IR produced by the translator.

use serde::Serialize;

use super::{Formula, Literal, Term, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelationalSchema {
    pub tables: Vec<Table>,
    pub views: Vec<View>,
}

impl RelationalSchema {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut Table> {
        self.tables.iter_mut().find(|t| t.name == name)
    }

    /// Number of relational constraints carried by all tables.
    pub fn constraint_count(&self) -> usize {
        self.tables.iter().map(|t| t.tally().total()).sum()
    }

    /// Ids of every relational constraint, in table order.
    pub fn constraint_ids(&self) -> Vec<String> {
        self.tables.iter().flat_map(|t| t.constraint_ids()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnType {
    /// Surrogate primary key generated by the engine, `1..=max`.
    Autonumber { max: i64 },
    /// Foreign key or identifier copied from another table, `1..=max`.
    Reference { max: i64 },
    /// Numerically coded static value set, `1..=n`.
    Coded { values: Vec<String> },
    Value(ValueType),
}

impl ColumnType {
    pub fn is_integer(&self) -> bool {
        match self {
            ColumnType::Value(v) => v.is_integer(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub sql_type: ColumnType,
    /// Defining term of a computed column; `x` denotes the current row.
    pub computed_expr: Option<Term>,
    /// Upper bound inherited from a referenced set's cardinality.
    pub max_value: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimaryKey {
    pub id: String,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueKey {
    pub id: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKey {
    pub id: String,
    pub column: String,
    pub ref_table: String,
    pub ref_column: String,
    pub max_value: i64,
    /// Emitted after all tables exist (cyclic or forward reference).
    pub deferred: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckKind {
    /// Codomain of a column, including surrogate ranges of identifiers.
    Domain { column: String, domain: ColumnType },
    /// Declared range restriction.
    Range {
        column: String,
        lo: super::Bound,
        hi: super::Bound,
    },
    /// Row-local formula; `var` denotes the current row.
    Tuple { var: String, body: Formula },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub id: String,
    pub kind: CheckKind,
}

impl Check {
    pub fn is_pk_domain(&self) -> bool {
        matches!(&self.kind, CheckKind::Domain { column, .. } if column == super::OBJECT_ID)
    }

    pub fn uses_current_year(&self) -> bool {
        match &self.kind {
            CheckKind::Domain { domain, .. } => {
                matches!(domain, ColumnType::Value(v) if v.uses_current_year())
            }
            CheckKind::Range { lo, hi, .. } => lo.is_dynamic() || hi.is_dynamic(),
            CheckKind::Tuple { body, .. } => body.uses_current_year(),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        match &self.kind {
            CheckKind::Domain { column, .. } | CheckKind::Range { column, .. } => {
                vec![column.clone()]
            }
            CheckKind::Tuple { body, .. } => {
                let mut cols = Vec::new();
                body.visit_terms(&mut |t| collect_row_columns(t, &mut cols));
                cols
            }
        }
    }
}

fn collect_row_columns(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Apply { func, arg } => {
            if matches!(arg.as_ref(), Term::Var(_)) {
                if !out.contains(func) {
                    out.push(func.clone());
                }
            } else {
                collect_row_columns(arg, out);
            }
        }
        Term::Add(a, b) | Term::Sub(a, b) | Term::Coalesce(a, b) => {
            collect_row_columns(a, out);
            collect_row_columns(b, out);
        }
        Term::Var(_) | Term::Lit(_) | Term::CurrentYear => {}
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotNull {
    pub id: String,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefaultValue {
    pub id: String,
    pub column: String,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub primary_key: PrimaryKey,
    pub unique_keys: Vec<UniqueKey>,
    pub foreign_keys: Vec<ForeignKey>,
    pub checks: Vec<Check>,
    pub not_null: Vec<NotNull>,
    pub defaults: Vec<DefaultValue>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        Table {
            primary_key: PrimaryKey {
                id: format!("{name}.pk"),
                column: super::OBJECT_ID.to_string(),
            },
            name,
            columns: Vec::new(),
            unique_keys: Vec::new(),
            foreign_keys: Vec::new(),
            checks: Vec::new(),
            not_null: Vec::new(),
            defaults: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn is_not_null(&self, column: &str) -> bool {
        self.not_null.iter().any(|n| n.column == column)
    }

    pub fn foreign_key(&self, column: &str) -> Option<&ForeignKey> {
        self.foreign_keys.iter().find(|f| f.column == column)
    }

    pub fn tally(&self) -> ConstraintTally {
        let mut t = ConstraintTally {
            primary_keys: 1,
            ..ConstraintTally::default()
        };
        for c in &self.checks {
            match &c.kind {
                CheckKind::Domain { column, .. } if column == super::OBJECT_ID => t.pk_domains += 1,
                CheckKind::Domain { .. } => t.domains += 1,
                CheckKind::Range { .. } => t.ranges += 1,
                CheckKind::Tuple { .. } => t.tuples += 1,
            }
        }
        for n in &self.not_null {
            if n.column == super::OBJECT_ID {
                t.pk_not_nulls += 1;
            } else {
                t.not_nulls += 1;
            }
        }
        t.foreign_keys = self.foreign_keys.len();
        t.unique_keys = self.unique_keys.len();
        t.defaults = self.defaults.len();
        t
    }

    pub fn constraint_ids(&self) -> Vec<String> {
        let mut ids = vec![self.primary_key.id.clone()];
        ids.extend(self.not_null.iter().map(|n| n.id.clone()));
        ids.extend(self.checks.iter().map(|c| c.id.clone()));
        ids.extend(self.defaults.iter().map(|d| d.id.clone()));
        ids.extend(self.foreign_keys.iter().map(|f| f.id.clone()));
        ids.extend(self.unique_keys.iter().map(|u| u.id.clone()));
        ids
    }
}

/// Relational constraint counts of one table (or a whole schema), by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintTally {
    pub primary_keys: usize,
    pub pk_domains: usize,
    pub pk_not_nulls: usize,
    pub not_nulls: usize,
    pub domains: usize,
    pub foreign_keys: usize,
    pub unique_keys: usize,
    pub tuples: usize,
    pub ranges: usize,
    pub defaults: usize,
}

impl ConstraintTally {
    pub fn total(&self) -> usize {
        self.primary_keys
            + self.pk_domains
            + self.pk_not_nulls
            + self.not_nulls
            + self.domains
            + self.foreign_keys
            + self.unique_keys
            + self.tuples
            + self.ranges
            + self.defaults
    }
}

impl std::ops::Add for ConstraintTally {
    type Output = ConstraintTally;

    fn add(self, o: ConstraintTally) -> ConstraintTally {
        ConstraintTally {
            primary_keys: self.primary_keys + o.primary_keys,
            pk_domains: self.pk_domains + o.pk_domains,
            pk_not_nulls: self.pk_not_nulls + o.pk_not_nulls,
            not_nulls: self.not_nulls + o.not_nulls,
            domains: self.domains + o.domains,
            foreign_keys: self.foreign_keys + o.foreign_keys,
            unique_keys: self.unique_keys + o.unique_keys,
            tuples: self.tuples + o.tuples,
            ranges: self.ranges + o.ranges,
            defaults: self.defaults + o.defaults,
        }
    }
}

impl std::iter::Sum for ConstraintTally {
    fn sum<I: Iterator<Item = ConstraintTally>>(iter: I) -> Self {
        iter.fold(ConstraintTally::default(), |a, b| a + b)
    }
}

/// Step accounting of one translation.
///
/// `steps = e + r + a + f + rc + nrc`, where `a` counts object identifiers
/// and attributes, `f` counts functions between sets, `rc` the relational
/// constraints emitted into tables and `nrc` the residual ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TranslationReport {
    pub e: usize,
    pub r: usize,
    pub a: usize,
    pub f: usize,
    pub rc: usize,
    pub nrc: usize,
    pub steps: usize,
    #[serde(rename = "perTable")]
    pub per_table: Vec<(String, ConstraintTally)>,
}

impl TranslationReport {
    pub fn totals(&self) -> ConstraintTally {
        self.per_table.iter().map(|(_, t)| *t).sum()
    }
}
