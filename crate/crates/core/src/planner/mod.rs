//! Declarative enforcement plans for constraints the schema cannot carry.
//!
//! Each residual or demoted constraint is classified by the first matching
//! rule below and yields entries on every table whose columns it reads:
//!
//! 1. `forall x in T: a(f(x)) op literal` filters the choices of `f`;
//! 2. null-reflexive compositions filter the inner column and guard the outer one;
//! 3. `guard implies f1(x) is null and ...` locks and nullifies;
//! 4. one column of a table: checked before that column changes;
//! 5. several columns of a table: checked before the row is saved;
//! 6. existence constraints;
//! 7. acyclicity;
//! 8. several rows at once (pairs, no-overlap, demoted keys);
//! 9. existential sub-formulas also guard deletions.

mod render;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::model::{
    CmpOp, Constraint, ConstraintKind, Formula, MappingKind, MdmScheme, SchemeIndex, Term,
    TypeEnv, OBJECT_ID,
};
use crate::sql::{Demoted, Demotion};
use crate::translator::NonRelationalOutput;

pub use render::{render_plan, PlanFormat};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trigger {
    RowCurrent,
    ColumnBeforeUpdate(String),
    RowBeforeUpdate,
    ColumnAfterUpdate(String),
    RowAfterUpdate,
    BeforeDelete,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::RowCurrent => f.write_str("row-current"),
            Trigger::ColumnBeforeUpdate(c) => write!(f, "column-before-update({c})"),
            Trigger::RowBeforeUpdate => f.write_str("row-before-update"),
            Trigger::ColumnAfterUpdate(c) => write!(f, "column-after-update({c})"),
            Trigger::RowAfterUpdate => f.write_str("row-after-update"),
            Trigger::BeforeDelete => f.write_str("before-delete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Offer only values of `column` satisfying `predicate`; on save, a reject check.
    FilterDomain { column: String, predicate: String },
    RejectCheck,
    LockColumns { columns: Vec<String>, guard: Formula },
    NullifyAndWarn { columns: Vec<String>, guard: Formula },
    PropagateUpdate { column: String, assignment: String },
    CycleCheck { mapping: String },
    ExistenceCheck { if_column: String, then_column: String },
    CrossRowCheck,
    UniqueNullsDistinct { columns: Vec<String> },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FilterDomain { .. } => "filter-domain",
            Strategy::RejectCheck => "reject-check",
            Strategy::LockColumns { .. } => "lock-columns",
            Strategy::NullifyAndWarn { .. } => "nullify-and-warn",
            Strategy::PropagateUpdate { .. } => "propagate-update",
            Strategy::CycleCheck { .. } => "cycle-check",
            Strategy::ExistenceCheck { .. } => "existence-check",
            Strategy::CrossRowCheck => "cross-row-check",
            Strategy::UniqueNullsDistinct { .. } => "unique-nulls-distinct",
        }
    }

    /// Columns the strategy acts upon.
    pub fn target(&self) -> Vec<String> {
        match self {
            Strategy::FilterDomain { column, .. } | Strategy::PropagateUpdate { column, .. } => {
                vec![column.clone()]
            }
            Strategy::LockColumns { columns, .. }
            | Strategy::NullifyAndWarn { columns, .. }
            | Strategy::UniqueNullsDistinct { columns } => columns.clone(),
            Strategy::CycleCheck { mapping } => vec![mapping.clone()],
            Strategy::ExistenceCheck {
                if_column,
                then_column,
            } => vec![if_column.clone(), then_column.clone()],
            Strategy::RejectCheck | Strategy::CrossRowCheck => Vec::new(),
        }
    }

    /// Predicate, guard, or assignment text shown with the entry.
    pub fn predicate(&self) -> Option<String> {
        match self {
            Strategy::FilterDomain { predicate, .. } => Some(predicate.clone()),
            Strategy::LockColumns { guard, .. } | Strategy::NullifyAndWarn { guard, .. } => {
                Some(guard.to_string())
            }
            Strategy::PropagateUpdate { assignment, .. } => Some(assignment.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanEntry {
    pub constraint_id: String,
    pub table: String,
    pub event: Trigger,
    pub strategy: Strategy,
    /// Columns of `table` whose changes trigger the entry.
    pub tracked_columns: Vec<String>,
    pub message: String,
    /// Rows inserted into `table` cannot violate the constraint.
    pub skip_new_rows: bool,
    /// Intent only; the runtime does not act on it.
    pub advisory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedConstraint {
    pub id: String,
    pub description: String,
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnforcementPlan {
    pub constraints: Vec<PlannedConstraint>,
    /// Constraints no rule matched; they fell through to a cross-row check.
    pub warnings: Vec<String>,
}

impl EnforcementPlan {
    pub fn entries(&self) -> impl Iterator<Item = &PlanEntry> {
        self.constraints.iter().flat_map(|c| c.entries.iter())
    }

    pub fn entries_for<'a>(&'a self, table: &'a str) -> impl Iterator<Item = &'a PlanEntry> + 'a {
        self.entries().filter(move |e| e.table == table)
    }

    pub fn constraint(&self, id: &str) -> Option<&PlannedConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    /// Constraint id to its entries.
    pub fn coverage(&self) -> BTreeMap<&str, Vec<&PlanEntry>> {
        self.constraints
            .iter()
            .map(|c| (c.id.as_str(), c.entries.iter().collect()))
            .collect()
    }
}

/// Builds the plan for the residual constraints and the dialect demotions.
pub fn plan(residual: &NonRelationalOutput, demotions: &[Demotion], scheme: &MdmScheme) -> EnforcementPlan {
    let idx = SchemeIndex::new(scheme);
    let mut out = EnforcementPlan::default();
    for e in &residual.entries {
        let mut p = Planner::new(&idx, &e.constraint);
        p.classify(&mut out.warnings);
        out.constraints.push(PlannedConstraint {
            id: e.constraint.label.clone(),
            description: e.constraint.description.clone(),
            entries: p.entries,
        });
    }
    for d in demotions {
        out.constraints.push(plan_demotion(&idx, d));
    }
    out
}

/// Message template used when a constraint has no override.
pub fn default_message(description: &str) -> String {
    if description.is_empty() {
        "{constraint} violated by {row}".to_string()
    } else {
        format!("{{constraint}} violated by {{row}}: {description}")
    }
}

struct Planner<'a, 'b> {
    idx: &'b SchemeIndex<'a>,
    c: &'b Constraint,
    formula: Option<Formula>,
    /// Columns read per table, in first-use order.
    columns: Vec<(String, Vec<String>)>,
    quantified: HashSet<String>,
    existential: Vec<String>,
    entries: Vec<PlanEntry>,
}

impl<'a, 'b> Planner<'a, 'b> {
    fn new(idx: &'b SchemeIndex<'a>, c: &'b Constraint) -> Self {
        let formula = c.to_formula();
        let mut p = Planner {
            idx,
            c,
            formula: formula.clone(),
            columns: Vec::new(),
            quantified: HashSet::new(),
            existential: Vec::new(),
            entries: Vec::new(),
        };
        match (&c.kind, &formula) {
            (ConstraintKind::Acyclic(r), _) => {
                p.read(&r.set, &r.name);
                p.quantified.insert(r.set.clone());
            }
            (_, Some(f)) => {
                p.scan_quantifiers(f);
                let mut used = Vec::new();
                let _ = idx.check_formula_with(f, &TypeEnv::new(), &mut |m| {
                    used.push((m.domain.clone(), m.name.clone()))
                });
                for (set, name) in used {
                    p.read(&set, &name);
                }
                for q in p.quantified.clone() {
                    if !p.columns.iter().any(|(t, _)| *t == q) {
                        p.columns.push((q, Vec::new()));
                    }
                }
                p.columns
                    .sort_by_key(|(t, _)| idx.set_position(t).unwrap_or(usize::MAX));
            }
            _ => {}
        }
        p
    }

    /// Records that `set.name` is read, plus the inputs of computed columns.
    fn read(&mut self, set: &str, name: &str) {
        let Some(m) = self.idx.mapping(set, name) else {
            return;
        };
        if m.kind == MappingKind::ObjectIdentifier {
            return;
        }
        let pos = match self.columns.iter().position(|(t, _)| t == set) {
            Some(p) => p,
            None => {
                self.columns.push((set.to_string(), Vec::new()));
                self.columns.len() - 1
            }
        };
        if self.columns[pos].1.iter().any(|c| c == name) {
            return;
        }
        self.columns[pos].1.push(name.to_string());
        if let Some(t) = &m.compute {
            let mut inputs = Vec::new();
            let _ = self
                .idx
                .type_of_with(t, &TypeEnv::with("x", set), &mut |m| {
                    inputs.push((m.domain.clone(), m.name.clone()))
                });
            for (s, n) in inputs {
                self.read(&s, &n);
            }
        }
    }

    fn scan_quantifiers(&mut self, f: &Formula) {
        match f {
            Formula::Forall { set, body, .. } => {
                self.quantified.insert(set.clone());
                self.scan_quantifiers(body);
            }
            Formula::Exists { set, body, .. } => {
                self.quantified.insert(set.clone());
                if !self.existential.contains(set) {
                    self.existential.push(set.clone());
                }
                self.scan_quantifiers(body);
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                self.scan_quantifiers(a);
                self.scan_quantifiers(b);
            }
            Formula::Not(a) => self.scan_quantifiers(a),
            Formula::Compare { .. } | Formula::IsNull(_) => {}
        }
    }

    fn tracked(&self, table: &str) -> Vec<String> {
        self.columns
            .iter()
            .find(|(t, _)| t == table)
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }

    fn push(&mut self, table: &str, event: Trigger, strategy: Strategy, tracked: Vec<String>) {
        let message = match &strategy {
            // an override may be phrased for the repair, not for a rejection
            Strategy::LockColumns { .. } => default_message(&self.c.description),
            _ => self
                .c
                .message_for(table)
                .map(str::to_string)
                .unwrap_or_else(|| default_message(&self.c.description)),
        };
        let advisory = matches!(strategy, Strategy::PropagateUpdate { .. });
        self.entries.push(PlanEntry {
            constraint_id: self.c.label.clone(),
            table: table.to_string(),
            event,
            strategy,
            tracked_columns: tracked,
            message,
            skip_new_rows: !self.quantified.contains(table),
            advisory,
        });
    }

    /// Rules 4 and 5 on `table`, for the columns it reads.
    fn per_column_or_row(&mut self, table: &str) {
        let cols = self.tracked(table);
        let event = match cols.as_slice() {
            [one] => Trigger::ColumnBeforeUpdate(one.clone()),
            _ => Trigger::RowBeforeUpdate,
        };
        self.push(table, event, Strategy::RejectCheck, cols);
    }

    fn classify(&mut self, warnings: &mut Vec<String>) {
        match self.c.kind.clone() {
            ConstraintKind::NullReflexive { outer, inner } => self.null_reflexive(&outer, &inner),
            ConstraintKind::Existence {
                if_mapping,
                then_mapping,
            } => {
                let set = if_mapping.set.clone();
                let cols = self.tracked(&set);
                self.push(
                    &set,
                    Trigger::RowBeforeUpdate,
                    Strategy::ExistenceCheck {
                        if_column: if_mapping.name,
                        then_column: then_mapping.name,
                    },
                    cols,
                );
            }
            ConstraintKind::Acyclic(r) => {
                self.push(
                    &r.set,
                    Trigger::ColumnBeforeUpdate(r.name.clone()),
                    Strategy::CycleCheck {
                        mapping: r.name.clone(),
                    },
                    vec![r.name.clone()],
                );
            }
            ConstraintKind::NoOverlap { .. } => self.cross_row(),
            ConstraintKind::Tuple { .. } | ConstraintKind::ObjectFormula(_) => {
                let Some(f) = self.formula.clone() else {
                    return;
                };
                if self.filter_pattern(&f) || self.nullify_pattern(&f) {
                    return;
                }
                if is_multi_row(&f) {
                    self.cross_row();
                } else if matches!(f, Formula::Forall { .. }) {
                    for (t, _) in self.columns.clone() {
                        self.per_column_or_row(&t);
                    }
                    self.guard_deletions();
                } else {
                    warnings.push(format!(
                        "{}: no enforcement rule matches; checked across rows",
                        self.c.label
                    ));
                    self.cross_row();
                }
            }
            _ => {
                warnings.push(format!(
                    "{}: no enforcement rule matches; checked across rows",
                    self.c.label
                ));
                self.cross_row();
            }
        }
    }

    fn cross_row(&mut self) {
        for (t, cols) in self.columns.clone() {
            self.push(&t, Trigger::RowBeforeUpdate, Strategy::CrossRowCheck, cols);
        }
        self.guard_deletions();
    }

    fn guard_deletions(&mut self) {
        for s in self.existential.clone() {
            let cols = self.tracked(&s);
            self.push(&s, Trigger::BeforeDelete, Strategy::CrossRowCheck, cols);
        }
    }

    fn null_reflexive(&mut self, outer: &crate::model::MappingRef, inner: &crate::model::MappingRef) {
        let outer_total = self
            .idx
            .mapping(&outer.set, &outer.name)
            .is_some_and(|m| m.total);
        let predicate = if outer_total {
            format!("{} = x", outer.name)
        } else {
            format!("{0} = x or {0} is null", outer.name)
        };
        self.push(
            &inner.set,
            Trigger::RowCurrent,
            Strategy::FilterDomain {
                column: inner.name.clone(),
                predicate,
            },
            vec![inner.name.clone()],
        );
        self.push(
            &outer.set,
            Trigger::ColumnBeforeUpdate(outer.name.clone()),
            Strategy::RejectCheck,
            vec![outer.name.clone()],
        );
        if !outer_total {
            self.push(
                &inner.set,
                Trigger::RowAfterUpdate,
                Strategy::PropagateUpdate {
                    column: inner.name.clone(),
                    assignment: format!("{}({}(x)) := x", outer.name, inner.name),
                },
                vec![inner.name.clone()],
            );
        }
    }

    /// Rule 1: `forall x in T: a(f(x)) op literal`.
    fn filter_pattern(&mut self, f: &Formula) -> bool {
        let Formula::Forall { vars, set, body } = f else {
            return false;
        };
        let [var] = vars.as_slice() else {
            return false;
        };
        let Formula::Compare { op, lhs, rhs } = body.as_ref() else {
            return false;
        };
        let (attr_term, lit, op) = match (lhs, rhs) {
            (t, Term::Lit(l)) => (t, l, *op),
            (Term::Lit(l), t) => (t, l, flip(*op)),
            _ => return false,
        };
        let Term::Apply { func: attr, arg } = attr_term else {
            return false;
        };
        let Term::Apply { func: fk, arg: inner } = arg.as_ref() else {
            return false;
        };
        if !matches!(inner.as_ref(), Term::Var(v) if v == var) {
            return false;
        }
        let Some(target) = self
            .idx
            .mapping(set, fk)
            .filter(|m| m.kind.is_set_valued())
            .and_then(|m| m.codomain_set())
            .map(str::to_string)
        else {
            return false;
        };
        if self
            .idx
            .mapping(&target, attr)
            .is_none_or(|m| !matches!(m.kind, MappingKind::Attribute | MappingKind::ComputedAttribute))
        {
            return false;
        }
        let predicate = format!("{attr} {} {lit}", op.symbol());
        self.push(
            set,
            Trigger::RowCurrent,
            Strategy::FilterDomain {
                column: fk.clone(),
                predicate,
            },
            vec![fk.clone()],
        );
        self.push(set, Trigger::ColumnBeforeUpdate(fk.clone()), Strategy::RejectCheck, vec![fk.clone()]);
        let mut target_cols = self.tracked(&target);
        target_cols.retain(|c| !(target == *set && c == fk));
        let event = match target_cols.as_slice() {
            [one] => Trigger::ColumnBeforeUpdate(one.clone()),
            _ => Trigger::RowBeforeUpdate,
        };
        self.push(&target, event, Strategy::RejectCheck, target_cols);
        // the target side is reached only through `fk`: new rows are unreferenced
        if let Some(e) = self.entries.last_mut() {
            e.skip_new_rows = true;
        }
        true
    }

    /// Rule 3: `forall x in T: guard implies f1(x) is null and ...`.
    fn nullify_pattern(&mut self, f: &Formula) -> bool {
        let Formula::Forall { vars, set, body } = f else {
            return false;
        };
        let [var] = vars.as_slice() else {
            return false;
        };
        let Formula::Implies(guard, conclusion) = body.as_ref() else {
            return false;
        };
        let mut nulled = Vec::new();
        for c in conclusion.conjuncts() {
            match c {
                Formula::IsNull(Term::Apply { func, arg })
                    if matches!(arg.as_ref(), Term::Var(v) if v == var) =>
                {
                    nulled.push(func.clone())
                }
                _ => return false,
            }
        }
        if !crate::translator::is_row_local(self.idx, set, var, guard) {
            return false;
        }
        let guard_cols: Vec<String> = {
            let mut cols = Vec::new();
            guard.visit_terms(&mut |t| {
                if let Term::Apply { func, .. } = t {
                    if func != OBJECT_ID && !cols.contains(func) {
                        cols.push(func.clone());
                    }
                }
            });
            cols
        };
        let g = guard.as_ref().clone();
        self.push(
            set,
            Trigger::RowCurrent,
            Strategy::LockColumns {
                columns: nulled.clone(),
                guard: g.clone(),
            },
            nulled.clone(),
        );
        for col in &guard_cols {
            self.push(
                set,
                Trigger::ColumnAfterUpdate(col.clone()),
                Strategy::NullifyAndWarn {
                    columns: nulled.clone(),
                    guard: g.clone(),
                },
                vec![col.clone()],
            );
        }
        true
    }
}

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        o => o,
    }
}

/// Whether some universal quantifier binds two or more rows at once.
fn is_multi_row(f: &Formula) -> bool {
    match f {
        Formula::Forall { vars, body, .. } => vars.len() > 1 || matches!(body.as_ref(), Formula::Forall { .. }),
        _ => false,
    }
}

fn plan_demotion(idx: &SchemeIndex, d: &Demotion) -> PlannedConstraint {
    let message = default_message(&d.description);
    let entry = |event, strategy, tracked: Vec<String>| PlanEntry {
        constraint_id: d.id.clone(),
        table: d.table.clone(),
        event,
        strategy,
        tracked_columns: tracked,
        message: message.clone(),
        skip_new_rows: false,
        advisory: false,
    };
    let entries = match &d.demoted {
        Demoted::UniqueKey(u) => vec![entry(
            Trigger::RowBeforeUpdate,
            Strategy::UniqueNullsDistinct {
                columns: u.columns.clone(),
            },
            u.columns.clone(),
        )],
        Demoted::Check(c) => {
            let cols = c.columns();
            let event = match cols.as_slice() {
                [one] => Trigger::ColumnBeforeUpdate(one.clone()),
                _ => Trigger::RowBeforeUpdate,
            };
            vec![entry(event, Strategy::RejectCheck, cols)]
        }
        Demoted::Computed { column, expr } => {
            let mut inputs = Vec::new();
            let _ = idx.type_of_with(expr, &TypeEnv::with("x", d.table.as_str()), &mut |m| {
                if m.domain == d.table && !inputs.contains(&m.name) {
                    inputs.push(m.name.clone())
                }
            });
            vec![entry(
                Trigger::RowAfterUpdate,
                Strategy::PropagateUpdate {
                    column: column.clone(),
                    assignment: format!("{column} := {expr}"),
                },
                inputs,
            )]
        }
    };
    PlannedConstraint {
        id: d.id.clone(),
        description: d.description.clone(),
        entries,
    }
}
