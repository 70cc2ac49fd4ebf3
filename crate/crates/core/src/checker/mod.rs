//! Instance data, constraint evaluation, and event simulation.

mod check;
mod eval;
mod io;
mod runtime;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::model::{
    ColumnType, Constraint, MappingKind, MdmScheme, RelationalSchema, SchemeIndex, ValueType,
    OBJECT_ID,
};
use crate::translator::NonRelationalOutput;

pub use eval::Verdict;
pub use io::{parse_cell, write_instance, LoadError};
pub use runtime::{parse_events, Event, EventError, EventOutcome, Mutation, Op, Staged};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

pub type Cell = Option<Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableData {
    pub name: String,
    pub columns: Vec<String>,
    /// Rows keyed by `x`; cells are aligned with `columns` (`x` included).
    pub rows: BTreeMap<i64, Vec<Cell>>,
}

impl TableData {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, x: i64, column: &str) -> Option<&Cell> {
        let i = self.column_index(column)?;
        self.rows.get(&x).map(|r| &r[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub current_year: i64,
    /// One entry per schema table, in schema order.
    pub tables: Vec<TableData>,
}

impl Instance {
    pub fn empty(schema: &RelationalSchema, current_year: i64) -> Self {
        Instance {
            current_year,
            tables: schema
                .tables
                .iter()
                .map(|t| TableData {
                    name: t.name.clone(),
                    columns: t.columns.iter().map(|c| c.name.clone()).collect(),
                    rows: BTreeMap::new(),
                })
                .collect(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&TableData> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut TableData> {
        self.tables.iter_mut().find(|t| t.name == name)
    }

    pub fn get(&self, table: &str, x: i64, column: &str) -> Option<&Cell> {
        self.table(table)?.get(x, column)
    }

    /// Sets one cell of an existing row; returns the previous value.
    pub fn set(&mut self, table: &str, x: i64, column: &str, value: Cell) -> Option<Cell> {
        let t = self.table_mut(table)?;
        let i = t.column_index(column)?;
        let row = t.rows.get_mut(&x)?;
        Some(std::mem::replace(&mut row[i], value))
    }

    pub fn row_count(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub constraint_id: String,
    pub table: String,
    /// The violating row, or the pair of rows of a two-variable binding.
    pub rows: Vec<i64>,
    pub message: String,
    pub severity: Severity,
}

/// How a mapping applied to an object of its domain is read from the instance.
#[derive(Debug, Clone, Copy)]
struct Access {
    table: Option<usize>,
    /// `None`: the value is the object's own `x`.
    column: Option<usize>,
    /// Set position of the codomain, for set-valued mappings.
    target: Option<usize>,
}

/// Evaluation context: the scheme, its translation, and precomputed lookups.
pub struct Checker<'a> {
    scheme: &'a MdmScheme,
    idx: SchemeIndex<'a>,
    schema: &'a RelationalSchema,
    residual: &'a NonRelationalOutput,
    constraints: HashMap<String, Constraint>,
    /// Table index per set position.
    set_table: Vec<Option<usize>>,
    access: HashMap<String, HashMap<String, Access>>,
}

impl<'a> Checker<'a> {
    pub fn new(scheme: &'a MdmScheme, schema: &'a RelationalSchema, residual: &'a NonRelationalOutput) -> Self {
        let idx = SchemeIndex::new(scheme);
        let table_of = |name: &str| schema.tables.iter().position(|t| t.name == name);
        let set_table = scheme.sets.iter().map(|s| table_of(&s.name)).collect();
        let mut access: HashMap<String, HashMap<String, Access>> = HashMap::new();
        for m in &scheme.mappings {
            let table = table_of(&m.domain);
            let column = table.and_then(|t| schema.tables[t].column_index(&m.name));
            let column = match (m.kind, column) {
                (_, Some(c)) => Some(c),
                (MappingKind::ObjectIdentifier | MappingKind::CanonicalInclusion, None) => None,
                _ => continue,
            };
            let target = m.codomain_set().and_then(|s| idx.set_position(s));
            access
                .entry(m.domain.clone())
                .or_default()
                .insert(m.name.clone(), Access { table, column, target });
        }
        let constraints = scheme
            .expanded_constraints()
            .into_iter()
            .map(|c| (c.label.clone(), c))
            .collect();
        Checker {
            scheme,
            idx,
            schema,
            residual,
            constraints,
            set_table,
            access,
        }
    }

    pub fn schema(&self) -> &RelationalSchema {
        self.schema
    }

    pub fn residual(&self) -> &NonRelationalOutput {
        self.residual
    }

    pub fn empty_instance(&self, current_year: i64) -> Instance {
        Instance::empty(self.schema, current_year)
    }

    fn table_index(&self, name: &str) -> Option<usize> {
        self.schema.tables.iter().position(|t| t.name == name)
    }

    fn table_set(&self, table: usize) -> usize {
        self.idx
            .set_position(&self.schema.tables[table].name)
            .expect("every table realizes a set")
    }

    /// First non-null text column of the row, else `TABLE #x`.
    pub fn row_label(&self, inst: &Instance, table: &str, x: i64) -> String {
        let found = self.table_index(table).and_then(|t| {
            let row = inst.tables[t].rows.get(&x)?;
            self.schema.tables[t]
                .columns
                .iter()
                .zip(row)
                .find_map(|(c, v)| match (&c.sql_type, v) {
                    (ColumnType::Value(ValueType::Text { .. }), Some(Value::Str(s))) => Some(s.clone()),
                    _ => None,
                })
        });
        found.unwrap_or_else(|| format!("{table} #{x}"))
    }

    /// Recomputes every computed column; returns the rows whose values changed.
    pub fn recompute_derived(&self, inst: &mut Instance) -> Vec<(usize, i64)> {
        let mut changed = Vec::new();
        for (ti, t) in self.schema.tables.iter().enumerate() {
            let set = self.table_set(ti);
            for (ci, col) in t.columns.iter().enumerate() {
                let Some(expr) = &col.computed_expr else {
                    continue;
                };
                let xs: Vec<i64> = inst.tables[ti].rows.keys().copied().collect();
                for x in xs {
                    let v = self
                        .eval_term(inst, expr, &[(OBJECT_ID, eval::Obj { set, x })])
                        .into_cell();
                    let slot = &mut inst.tables[ti].rows.get_mut(&x).expect("row exists")[ci];
                    if *slot != v {
                        *slot = v;
                        changed.push((ti, x));
                    }
                }
            }
        }
        changed
    }
}

/// Fills `{row}`, `{binding}`, `{value}`, `{constraint}` and `{table}`.
pub(crate) fn render_message(template: &str, parts: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in parts {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}
