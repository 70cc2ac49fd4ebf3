//! Insert, update and delete events driven by an enforcement plan.

use serde::{Deserialize, Serialize};

use super::eval::Obj;
use super::{render_message, Cell, Checker, Instance, Severity, Value, Violation};
use crate::model::{ColumnType, ConstraintKind, OBJECT_ID};
use crate::planner::{EnforcementPlan, Trigger, PlanEntry, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Insert,
    Update,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub op: Op,
    pub table: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<i64>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub values: serde_json::Map<String, serde_json::Value>,
}

impl Event {
    pub fn insert(table: &str, x: Option<i64>) -> Self {
        Event {
            op: Op::Insert,
            table: table.to_string(),
            x,
            values: serde_json::Map::new(),
        }
    }

    pub fn update(table: &str, x: i64) -> Self {
        Event {
            op: Op::Update,
            x: Some(x),
            ..Event::insert(table, None)
        }
    }

    pub fn delete(table: &str, x: i64) -> Self {
        Event {
            op: Op::Delete,
            x: Some(x),
            ..Event::insert(table, None)
        }
    }

    pub fn set(mut self, column: &str, value: impl Into<serde_json::Value>) -> Self {
        self.values.insert(column.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("{table} has no row x = {x}")]
    UnknownRow { table: String, x: i64 },
    #[error("{table} already has a row x = {x}")]
    DuplicateRow { table: String, x: i64 },
    #[error("{0} events need x")]
    MissingX(&'static str),
    #[error("{table} has no column {column}")]
    UnknownColumn { table: String, column: String },
    #[error("{table}.{column} cannot be assigned: {reason}")]
    BadValue {
        table: String,
        column: String,
        reason: String,
    },
}

/// Parses line-delimited JSON events; blank lines are skipped.
pub fn parse_events(text: &str) -> Result<Vec<Event>, EventError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EventError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Mutation {
    pub table: String,
    pub x: i64,
    pub column: String,
    pub old: Cell,
    pub new: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EventOutcome {
    pub accepted: bool,
    pub x: i64,
    pub messages: Vec<Violation>,
    pub mutations: Vec<Mutation>,
    /// Plan constraints evaluated for the event, in plan order.
    pub checked: Vec<String>,
}

/// An event applied to a copy of the instance, repairs and recomputation included,
/// before any constraint is checked.
#[derive(Debug, Clone)]
pub struct Staged {
    pub instance: Instance,
    pub op: Op,
    pub table: usize,
    pub x: i64,
    /// Columns of the event row written by the event or its repairs.
    pub changed: Vec<String>,
    pub mutations: Vec<Mutation>,
    pub warnings: Vec<Violation>,
    /// Rows whose computed columns changed.
    pub recomputed: Vec<(usize, i64)>,
}

fn json_cell(ty: &ColumnType, v: &serde_json::Value) -> Result<Cell, String> {
    match v {
        serde_json::Value::Null => Ok(None),
        serde_json::Value::String(s) => super::parse_cell(ty, s),
        serde_json::Value::Number(n) if ty.is_integer() => n
            .as_i64()
            .map(|i| Some(Value::Int(i)))
            .ok_or_else(|| format!("{n} is not an integer")),
        other => Err(format!("{other} does not fit the column type")),
    }
}

impl Checker<'_> {
    /// Applies `ev` to a copy of `inst`, then runs the plan's repairs
    /// (nullify-and-warn) and recomputes derived columns.
    pub fn stage_event(&self, inst: &Instance, ev: &Event, plan: &EnforcementPlan) -> Result<Staged, EventError> {
        let ti = self
            .table_index(&ev.table)
            .ok_or_else(|| EventError::UnknownTable(ev.table.clone()))?;
        let t = &self.schema.tables[ti];
        let mut values = Vec::new();
        for (name, v) in &ev.values {
            let bad = |reason: String| EventError::BadValue {
                table: t.name.clone(),
                column: name.clone(),
                reason,
            };
            let ci = t.column_index(name).ok_or_else(|| EventError::UnknownColumn {
                table: t.name.clone(),
                column: name.clone(),
            })?;
            let col = &t.columns[ci];
            if name == OBJECT_ID {
                return Err(bad("identifiers are immutable".into()));
            }
            if col.computed_expr.is_some() {
                return Err(bad("the column is computed".into()));
            }
            values.push((ci, json_cell(&col.sql_type, v).map_err(bad)?));
        }
        let mut next = inst.clone();
        let rows = &mut next.tables[ti].rows;
        let unknown = |x| EventError::UnknownRow {
            table: t.name.clone(),
            x,
        };
        let (x, mut changed) = match ev.op {
            Op::Insert => {
                let x = ev.x.unwrap_or_else(|| rows.keys().next_back().map_or(1, |m| m + 1));
                if rows.contains_key(&x) {
                    return Err(EventError::DuplicateRow {
                        table: t.name.clone(),
                        x,
                    });
                }
                let mut row: Vec<Cell> = vec![None; t.columns.len()];
                row[t.column_index(OBJECT_ID).expect("x column")] = Some(Value::Int(x));
                for d in &t.defaults {
                    if let Some(ci) = t.column_index(&d.column) {
                        row[ci] = Some(match &d.value {
                            crate::model::Literal::Int(v) => Value::Int(*v),
                            crate::model::Literal::Str(s) => Value::Str(s.clone()),
                        });
                    }
                }
                for (ci, v) in values {
                    row[ci] = v;
                }
                rows.insert(x, row);
                (x, t.columns.iter().map(|c| c.name.clone()).collect())
            }
            Op::Update => {
                let x = ev.x.ok_or(EventError::MissingX("update"))?;
                let row = rows.get_mut(&x).ok_or_else(|| unknown(x))?;
                let mut changed = Vec::new();
                for (ci, v) in values {
                    row[ci] = v;
                    changed.push(t.columns[ci].name.clone());
                }
                (x, changed)
            }
            Op::Delete => {
                let x = ev.x.ok_or(EventError::MissingX("delete"))?;
                rows.remove(&x).ok_or_else(|| unknown(x))?;
                (x, Vec::new())
            }
        };
        let mut mutations = Vec::new();
        let mut warnings = Vec::new();
        if ev.op == Op::Update {
            for e in plan.entries_for(&t.name) {
                let (Strategy::NullifyAndWarn { columns, guard }, Trigger::ColumnAfterUpdate(trigger)) =
                    (&e.strategy, &e.event)
                else {
                    continue;
                };
                if !changed.contains(trigger) {
                    continue;
                }
                let var = OBJECT_ID;
                let bound = [(var, t.name.as_str(), x)];
                if self.eval_formula(&next, guard, &bound) != super::Verdict::True {
                    continue;
                }
                let mut nulled = false;
                for col in columns {
                    if let Some(old @ Some(_)) = next.set(&t.name, x, col, None) {
                        mutations.push(Mutation {
                            table: t.name.clone(),
                            x,
                            column: col.clone(),
                            old,
                            new: None,
                        });
                        if !changed.contains(col) {
                            changed.push(col.clone());
                        }
                        nulled = true;
                    }
                }
                if nulled {
                    let row = self.row_label(&next, &t.name, x);
                    warnings.push(Violation {
                        constraint_id: e.constraint_id.clone(),
                        table: t.name.clone(),
                        rows: vec![x],
                        message: render_message(
                            &e.message,
                            &[
                                ("row", &row),
                                ("binding", &row),
                                ("value", ""),
                                ("constraint", &e.constraint_id),
                                ("table", &t.name),
                            ],
                        ),
                        severity: Severity::Warning,
                    });
                }
            }
        }
        let recomputed = self.recompute_derived(&mut next);
        for &(rt, rx) in &recomputed {
            if rt == ti && rx == x {
                for c in &t.columns {
                    if c.computed_expr.is_some() && !changed.contains(&c.name) {
                        changed.push(c.name.clone());
                    }
                }
            }
        }
        Ok(Staged {
            instance: next,
            op: ev.op,
            table: ti,
            x,
            changed,
            mutations,
            warnings,
            recomputed,
        })
    }

    /// Simulates `ev`: relational checks of the touched rows first, then the
    /// plan entries the event triggers, in plan order. A rejected event
    /// leaves `inst` unchanged.
    pub fn apply_event(&self, inst: &mut Instance, ev: &Event, plan: &EnforcementPlan) -> Result<EventOutcome, EventError> {
        let staged = self.stage_event(inst, ev, plan)?;
        let (ti, x) = (staged.table, staged.x);
        let table = &self.schema.tables[ti].name;
        let mut checked = Vec::new();
        let rejected = |v: Violation, checked: Vec<String>| EventOutcome {
            accepted: false,
            x,
            messages: vec![v],
            mutations: Vec::new(),
            checked,
        };
        if let Some(v) = self.relational_rejection(inst, &staged) {
            return Ok(rejected(v, checked));
        }
        for e in plan.entries() {
            if e.table != *table || e.advisory || !triggered(e, &staged) {
                continue;
            }
            if matches!(e.strategy, Strategy::NullifyAndWarn { .. } | Strategy::PropagateUpdate { .. }) {
                continue;
            }
            if !checked.contains(&e.constraint_id) {
                checked.push(e.constraint_id.clone());
            }
            if let Some(binding) = self.entry_violation(&staged, e) {
                let v = self.entry_message(inst, &staged, ev, e, &binding);
                return Ok(rejected(v, checked));
            }
        }
        let Staged {
            instance,
            mutations,
            warnings,
            ..
        } = staged;
        *inst = instance;
        Ok(EventOutcome {
            accepted: true,
            x,
            messages: warnings,
            mutations,
            checked,
        })
    }

    fn relational_rejection(&self, before: &Instance, s: &Staged) -> Option<Violation> {
        let name = &self.schema.tables[s.table].name;
        if s.op == Op::Delete {
            for (tj, t) in self.schema.tables.iter().enumerate() {
                for fk in t.foreign_keys.iter().filter(|f| f.ref_table == *name) {
                    let ci = t.column_index(&fk.column)?;
                    let referencing = s.instance.tables[tj]
                        .rows
                        .iter()
                        .find(|(_, r)| r[ci] == Some(Value::Int(s.x)));
                    if let Some((&r, _)) = referencing {
                        let mut v = self.violation(&fk.id, &t.name, vec![r], before, &s.x.to_string());
                        v.message = format!(
                            "{} cannot be deleted: {} refers to it",
                            self.row_label(before, name, s.x),
                            self.row_label(before, &t.name, r)
                        );
                        return Some(v);
                    }
                }
            }
            return None;
        }
        let mut rows = vec![(s.table, s.x)];
        rows.extend(s.recomputed.iter().filter(|r| **r != (s.table, s.x)));
        rows.into_iter()
            .find_map(|(t, x)| self.table_violations(&s.instance, t, Some(&[x])).into_iter().next())
    }

    /// The violating binding of the entry's constraint on the staged instance.
    fn entry_violation(&self, s: &Staged, e: &PlanEntry) -> Option<Vec<Obj>> {
        let inst = &s.instance;
        if let Some(r) = self.residual.get(&e.constraint_id) {
            let c = &r.constraint;
            if let ConstraintKind::Acyclic(m) = &c.kind {
                let set = self.idx.set_position(&m.set)?;
                return self
                    .detect_cycle(inst, &m.set, &m.name, s.x)
                    .map(|_| vec![Obj { set, x: s.x }]);
            }
            let f = c.to_formula()?;
            if self.eval(inst, &f, &mut Vec::new()) != super::Verdict::False {
                return None;
            }
            return self.violating_bindings(inst, &f).into_iter().next();
        }
        let t = &self.schema.tables[s.table];
        let set = self.table_set(s.table);
        if let Some(u) = t.unique_keys.iter().find(|u| u.id == e.constraint_id) {
            let (a, b) = *self.duplicate_pairs(inst, s.table, &u.columns, None).first()?;
            return Some(vec![Obj { set, x: a }, Obj { set, x: b }]);
        }
        let c = t.checks.iter().find(|c| c.id == e.constraint_id)?;
        let x = inst.tables[s.table]
            .rows
            .keys()
            .copied()
            .find(|&x| self.check_fails(inst, s.table, c, x).is_some())?;
        Some(vec![Obj { set, x }])
    }

    fn entry_message(&self, before: &Instance, s: &Staged, ev: &Event, e: &PlanEntry, binding: &[Obj]) -> Violation {
        let labels_from = if s.op == Op::Delete { before } else { &s.instance };
        let table = &self.schema.tables[s.table].name;
        let row = self.row_label(labels_from, table, s.x);
        let names: Vec<String> = binding
            .iter()
            .map(|o| {
                let set = &self.scheme.sets[o.set].name;
                self.row_label(labels_from, set, o.x)
            })
            .collect();
        let mut values: Vec<String> = ev
            .values
            .iter()
            .filter(|(k, _)| e.tracked_columns.contains(k))
            .map(|(_, v)| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        if values.is_empty() {
            values = ev.values.values().map(|v| v.to_string()).collect();
        }
        Violation {
            constraint_id: e.constraint_id.clone(),
            table: table.clone(),
            rows: binding.iter().map(|o| o.x).collect(),
            message: render_message(
                &e.message,
                &[
                    ("row", &row),
                    ("binding", &names.join(", ")),
                    ("value", &values.join(", ")),
                    ("constraint", &e.constraint_id),
                    ("table", table),
                ],
            ),
            severity: Severity::Error,
        }
    }
}

fn triggered(e: &PlanEntry, s: &Staged) -> bool {
    match s.op {
        Op::Delete => e.event == Trigger::BeforeDelete,
        Op::Insert => e.event != Trigger::BeforeDelete && !e.skip_new_rows,
        Op::Update => {
            e.event != Trigger::BeforeDelete && e.tracked_columns.iter().any(|c| s.changed.contains(c))
        }
    }
}
