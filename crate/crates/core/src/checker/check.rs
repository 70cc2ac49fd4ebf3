//! Full evaluation of relational and residual constraints.

use std::collections::{HashMap, HashSet};

use super::eval::{Env, Obj};
use super::{render_message, Checker, Instance, Severity, Value, Violation};
use crate::planner::default_message;
use crate::model::{max_surrogate, CheckKind, ColumnType, Constraint, ConstraintKind, Formula, ValueType};

/// Whether a stored value belongs to a column domain.
pub(crate) fn in_domain(v: &Value, domain: &ColumnType, current_year: i64) -> bool {
    let int_in = |lo: i64, hi: i64| matches!(v, Value::Int(i) if (lo..=hi).contains(i));
    match domain {
        ColumnType::Autonumber { max } | ColumnType::Reference { max } => int_in(1, *max),
        ColumnType::Coded { values } => int_in(1, values.len() as i64),
        ColumnType::Value(t) => match t {
            ValueType::Text { max_len } => {
                matches!(v, Value::Str(s) if s.chars().count() <= *max_len as usize)
            }
            ValueType::Natural { max_digits } => int_in(0, max_surrogate(*max_digits)),
            ValueType::IntRange { lo, hi } => int_in(lo.resolve(current_year), hi.resolve(current_year)),
            ValueType::Enum(values) => matches!(v, Value::Str(s) if values.contains(s)),
            ValueType::Autonumber { card_exponent } => int_in(1, max_surrogate(*card_exponent)),
        },
    }
}

impl Checker<'_> {
    /// Every violation of the schema's relational constraints and of the
    /// residual constraints. Only FALSE violates; UNKNOWN does not.
    pub fn check_all(&self, inst: &Instance) -> Vec<Violation> {
        let mut out = Vec::new();
        for t in 0..self.schema.tables.len() {
            out.extend(self.table_violations(inst, t, None));
        }
        for e in &self.residual.entries {
            out.extend(self.residual_violations(inst, &e.constraint));
        }
        out
    }

    pub(crate) fn message(&self, id: &str, table: &str, parts: &[(&str, &str)]) -> String {
        let template = match self.constraints.get(id) {
            Some(c) => c
                .message_for(table)
                .map(str::to_string)
                .unwrap_or_else(|| default_message(&c.description)),
            None => default_message(""),
        };
        let mut all = vec![("constraint", id), ("table", table)];
        all.extend_from_slice(parts);
        render_message(&template, &all)
    }

    pub(crate) fn violation(&self, id: &str, table: &str, rows: Vec<i64>, inst: &Instance, value: &str) -> Violation {
        let labels: Vec<String> = rows.iter().map(|x| self.row_label(inst, table, *x)).collect();
        let binding = labels.join(", ");
        Violation {
            constraint_id: id.to_string(),
            table: table.to_string(),
            message: self.message(
                id,
                table,
                &[("row", &labels[0]), ("binding", &binding), ("value", value)],
            ),
            rows,
            severity: Severity::Error,
        }
    }

    /// Relational violations of one table; with `only`, those involving the given rows.
    pub(crate) fn table_violations(&self, inst: &Instance, ti: usize, only: Option<&[i64]>) -> Vec<Violation> {
        let t = &self.schema.tables[ti];
        let data = &inst.tables[ti];
        let rows: Vec<i64> = match only {
            Some(xs) => xs.iter().copied().filter(|x| data.rows.contains_key(x)).collect(),
            None => data.rows.keys().copied().collect(),
        };
        let cell = |x: i64, col: &str| data.get(x, col).and_then(|c| c.as_ref());
        let mut out = Vec::new();
        for n in &t.not_null {
            for &x in &rows {
                if cell(x, &n.column).is_none() {
                    out.push(self.violation(&n.id, &t.name, vec![x], inst, ""));
                }
            }
        }
        for c in &t.checks {
            for &x in &rows {
                if let Some(value) = self.check_fails(inst, ti, c, x) {
                    out.push(self.violation(&c.id, &t.name, vec![x], inst, &value));
                }
            }
        }
        for fk in &t.foreign_keys {
            let target = &inst.table(&fk.ref_table).expect("referenced table").rows;
            for &x in &rows {
                if let Some(Value::Int(v)) = cell(x, &fk.column) {
                    if !target.contains_key(v) {
                        out.push(self.violation(&fk.id, &t.name, vec![x], inst, &v.to_string()));
                    }
                }
            }
        }
        for u in &t.unique_keys {
            for (a, b) in self.duplicate_pairs(inst, ti, &u.columns, only) {
                let value = self.values_of(inst, ti, a, &u.columns);
                out.push(self.violation(&u.id, &t.name, vec![a, b], inst, &value));
            }
        }
        out
    }

    pub(crate) fn values_of(&self, inst: &Instance, ti: usize, x: i64, columns: &[String]) -> String {
        columns
            .iter()
            .map(|c| match inst.tables[ti].get(x, c) {
                Some(Some(v)) => v.to_string(),
                _ => "null".to_string(),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The offending value when check `c` is FALSE on row `x`.
    pub(crate) fn check_fails(&self, inst: &Instance, ti: usize, c: &crate::model::Check, x: i64) -> Option<String> {
        let data = &inst.tables[ti];
        match &c.kind {
            CheckKind::Domain { column, domain } => match data.get(x, column)? {
                Some(v) if !in_domain(v, domain, inst.current_year) => Some(v.to_string()),
                _ => None,
            },
            CheckKind::Range { column, lo, hi } => match data.get(x, column)? {
                Some(v @ Value::Int(i))
                    if !(lo.resolve(inst.current_year)..=hi.resolve(inst.current_year)).contains(i) =>
                {
                    Some(v.to_string())
                }
                _ => None,
            },
            CheckKind::Tuple { var, body } => {
                let mut env: Env = vec![(var.as_str(), Obj { set: self.table_set(ti), x })];
                (self.eval(inst, body, &mut env) == super::Verdict::False)
                    .then(|| self.values_of(inst, ti, x, &c.columns()))
            }
        }
    }

    /// Pairs `(a, b)`, `a < b`, agreeing on non-null `columns`.
    pub(crate) fn duplicate_pairs(&self, inst: &Instance, ti: usize, columns: &[String], only: Option<&[i64]>) -> Vec<(i64, i64)> {
        let data = &inst.tables[ti];
        let idx: Vec<usize> = columns.iter().filter_map(|c| data.column_index(c)).collect();
        let mut groups: HashMap<Vec<&Value>, Vec<i64>> = HashMap::new();
        for (x, row) in &data.rows {
            let key: Option<Vec<&Value>> = idx.iter().map(|&i| row[i].as_ref()).collect();
            if let Some(key) = key {
                groups.entry(key).or_default().push(*x);
            }
        }
        let mut pairs = Vec::new();
        for xs in groups.values().filter(|xs| xs.len() > 1) {
            for (i, &a) in xs.iter().enumerate() {
                for &b in &xs[i + 1..] {
                    if only.is_none_or(|o| o.contains(&a) || o.contains(&b)) {
                        pairs.push((a, b));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    /// Follows `mapping` from `start`; returns the path from the first
    /// repeated node back to itself, e.g. `[x, x]` for a self-loop.
    pub fn detect_cycle(&self, inst: &Instance, table: &str, mapping: &str, start: i64) -> Option<Vec<i64>> {
        let t = inst.table(table)?;
        let ci = t.column_index(mapping)?;
        let mut path = vec![start];
        let mut cur = start;
        for _ in 0..=t.rows.len() {
            let next = match t.rows.get(&cur).and_then(|r| r[ci].as_ref()) {
                Some(Value::Int(v)) => *v,
                _ => return None,
            };
            if let Some(pos) = path.iter().position(|&p| p == next) {
                let mut cycle = path[pos..].to_vec();
                cycle.push(next);
                return Some(cycle);
            }
            path.push(next);
            cur = next;
        }
        None
    }

    fn obj_label(&self, inst: &Instance, o: Obj) -> (String, String) {
        let set = &self.scheme.sets[o.set];
        match self.set_table[o.set] {
            Some(_) => (set.name.clone(), self.row_label(inst, &set.name, o.x)),
            None => {
                let v = usize::try_from(o.x - 1)
                    .ok()
                    .and_then(|i| set.static_values.get(i))
                    .cloned()
                    .unwrap_or_else(|| format!("{} #{}", set.name, o.x));
                (set.name.clone(), v)
            }
        }
    }

    pub(crate) fn residual_violations(&self, inst: &Instance, c: &Constraint) -> Vec<Violation> {
        if let ConstraintKind::Acyclic(r) = &c.kind {
            let Some(pos) = self.idx.set_position(&r.set) else {
                return Vec::new();
            };
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            for x in self.members(inst, pos) {
                if let Some(cycle) = self.detect_cycle(inst, &r.set, &r.name, x) {
                    let min = *cycle.iter().min().expect("non-empty cycle");
                    if seen.insert(min) {
                        out.push(self.binding_violation(inst, c, &[Obj { set: pos, x: min }]));
                    }
                }
            }
            return out;
        }
        let Some(f) = c.to_formula() else {
            return Vec::new();
        };
        self.violating_bindings(inst, &f)
            .iter()
            .map(|b| self.binding_violation(inst, c, b))
            .collect()
    }

    pub(crate) fn binding_violation(&self, inst: &Instance, c: &Constraint, binding: &[Obj]) -> Violation {
        let labelled: Vec<(String, String)> = binding.iter().map(|o| self.obj_label(inst, *o)).collect();
        let table = labelled.first().map(|(t, _)| t.clone()).unwrap_or_default();
        let row = labelled.first().map(|(_, l)| l.clone()).unwrap_or_default();
        let names: Vec<&str> = labelled.iter().map(|(_, l)| l.as_str()).collect();
        let template = c
            .message_for(&table)
            .map(str::to_string)
            .unwrap_or_else(|| default_message(&c.description));
        let message = render_message(
            &template,
            &[
                ("constraint", &c.label),
                ("table", &table),
                ("row", &row),
                ("binding", &names.join(", ")),
                ("value", ""),
            ],
        );
        Violation {
            constraint_id: c.label.clone(),
            table,
            rows: binding.iter().map(|o| o.x).collect(),
            message,
            severity: Severity::Error,
        }
    }

    /// Bindings of the leading universal quantifiers under which the body
    /// is FALSE; one per unordered tuple, the lexicographically smallest.
    pub(crate) fn violating_bindings(&self, inst: &Instance, f: &Formula) -> Vec<Vec<Obj>> {
        let mut raw = Vec::new();
        let mut env = Vec::new();
        self.peel(inst, f, &mut env, &mut raw);
        let mut seen = HashSet::new();
        raw.into_iter()
            .filter(|b: &Vec<Obj>| {
                let mut key = b.clone();
                key.sort();
                seen.insert(key)
            })
            .collect()
    }

    fn peel<'v>(&self, inst: &'v Instance, f: &'v Formula, env: &mut Env<'v>, out: &mut Vec<Vec<Obj>>) {
        match f {
            Formula::Forall { vars, set, body } => {
                let Some(pos) = self.idx.set_position(set) else {
                    return;
                };
                let members = self.members(inst, pos);
                self.peel_vars(inst, vars, pos, &members, body, env, out);
            }
            _ => {
                if self.eval(inst, f, env) == super::Verdict::False {
                    out.push(env.iter().map(|(_, o)| *o).collect());
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn peel_vars<'v>(
        &self,
        inst: &'v Instance,
        vars: &'v [String],
        set: usize,
        members: &[i64],
        body: &'v Formula,
        env: &mut Env<'v>,
        out: &mut Vec<Vec<Obj>>,
    ) {
        let Some((var, rest)) = vars.split_first() else {
            self.peel(inst, body, env, out);
            return;
        };
        for &x in members {
            env.push((var, Obj { set, x }));
            self.peel_vars(inst, rest, set, members, body, env, out);
            env.pop();
        }
    }
}
