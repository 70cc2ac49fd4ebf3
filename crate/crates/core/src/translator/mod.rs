//! Translation of a scheme into a relational schema plus the residual set
//! of constraints that tables cannot express.

mod order;

use std::collections::{HashMap, HashSet};

use crate::model::{
    max_surrogate, validate_scheme, Check, CheckKind, Column, ColumnType, Constraint,
    ConstraintKind, DefaultValue, Diagnostic, ForeignKey, Formula, Mapping, MappingKind,
    MdmScheme, NotNull, ObjectSet, RelationalSchema, SchemeIndex, SetKind, Severity, Table,
    Term, TranslationReport, TypeEnv, UniqueKey, View, OBJECT_ID,
};

pub use order::{order_sets, SetOrder};

/// A constraint left for procedural enforcement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualEntry {
    pub constraint: Constraint,
    /// Sets whose functions or quantifiers occur in the constraint, in declaration order.
    pub host_sets: Vec<String>,
    /// Why the constraint could not be placed in a table.
    pub provenance: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NonRelationalOutput {
    pub entries: Vec<ResidualEntry>,
}

impl NonRelationalOutput {
    pub fn get(&self, label: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.constraint.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.constraint.label.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub schema: RelationalSchema,
    pub residual: NonRelationalOutput,
    pub report: TranslationReport,
    pub order: SetOrder,
}

/// Runs the translation. Fails only when the scheme has validation errors.
pub fn translate(scheme: &MdmScheme) -> Result<Translation, Vec<Diagnostic>> {
    let errors: Vec<Diagnostic> = validate_scheme(scheme)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Translator::new(scheme).run())
}

/// Column for an attribute or computed attribute.
pub fn add_column(table: &mut Table, mapping: &Mapping) {
    let Some(vt) = mapping.value_type() else {
        return;
    };
    table.columns.push(Column {
        name: mapping.name.clone(),
        sql_type: ColumnType::Value(vt.clone()),
        computed_expr: mapping.compute.clone(),
        max_value: None,
    });
}

/// Numeric column `column` referring to `target`: surrogates up to the
/// target's cardinality when it is a table, codes `1..=n` when it is a
/// coded value set.
pub fn add_foreign_key(table: &mut Table, column: &str, target: &ObjectSet, coded: bool) {
    let (sql_type, max) = if coded {
        let n = target.static_values.len() as i64;
        (
            ColumnType::Coded {
                values: target.static_values.clone(),
            },
            n,
        )
    } else {
        let max = max_surrogate(target.card_exponent);
        (ColumnType::Reference { max }, max)
    };
    table.columns.push(Column {
        name: column.to_string(),
        sql_type,
        computed_expr: None,
        max_value: Some(max),
    });
}

struct Translator<'a> {
    idx: SchemeIndex<'a>,
    order: SetOrder,
    /// Position of each set in table creation order.
    created_at: HashMap<&'a str, usize>,
    scc_of: HashMap<String, usize>,
    expanded: Vec<Constraint>,
    used: Vec<bool>,
    by_host: HashMap<String, Vec<usize>>,
}

impl<'a> Translator<'a> {
    fn new(scheme: &'a MdmScheme) -> Self {
        let idx = SchemeIndex::new(scheme);
        let order = order_sets(scheme);
        let mut scc_of = HashMap::new();
        for (i, group) in order.components.iter().enumerate() {
            for s in group {
                scc_of.insert(s.clone(), i);
            }
        }
        let expanded = scheme.expanded_constraints();
        let mut by_host: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in expanded.iter().enumerate() {
            if let Some(h) = relational_host(&c.kind) {
                by_host.entry(h.to_string()).or_default().push(i);
            }
        }
        let used = vec![false; expanded.len()];
        Translator {
            idx,
            order,
            created_at: HashMap::new(),
            scc_of,
            expanded,
            used,
            by_host,
        }
    }

    /// Entity-type sets bottom-up (views become views), then relationship sets.
    fn processing_order(&self) -> Vec<&'a ObjectSet> {
        let sets: Vec<&'a ObjectSet> = self
            .order
            .order
            .iter()
            .filter_map(|n| self.idx.set(n))
            .collect();
        let mut out: Vec<&'a ObjectSet> = sets
            .iter()
            .copied()
            .filter(|s| s.kind != SetKind::Relationship)
            .collect();
        out.extend(sets.iter().copied().filter(|s| s.kind == SetKind::Relationship));
        out
    }

    fn run(mut self) -> Translation {
        let scheme = self.idx.scheme;
        let mut schema = RelationalSchema::default();
        let sets = self.processing_order();
        let materialized: Vec<&ObjectSet> = sets
            .iter()
            .copied()
            .filter(|s| !s.is_view() && !self.idx.is_coded(&s.name))
            .collect();
        for (i, s) in materialized.iter().enumerate() {
            self.created_at.insert(s.name.as_str(), i);
        }
        for set in sets {
            if set.is_view() {
                schema.views.push(View {
                    name: set.name.clone(),
                    body: set.view_body.clone().unwrap_or_default(),
                });
            } else if let Some(table) = self.create_table(set) {
                schema.tables.push(table);
            }
        }
        let residual = self.residual();

        let mut report = TranslationReport::default();
        for s in &scheme.sets {
            match s.kind {
                SetKind::Relationship => report.r += 1,
                _ => report.e += 1,
            }
        }
        for m in &scheme.mappings {
            if m.kind.is_attribute_like() {
                report.a += 1;
            } else if m.kind.is_set_valued() {
                report.f += 1;
            }
        }
        report.per_table = schema
            .tables
            .iter()
            .map(|t| (t.name.clone(), t.tally()))
            .collect();
        report.rc = schema.constraint_count();
        report.nrc = residual.len();
        report.steps = report.e + report.r + report.a + report.f + report.rc + report.nrc;

        Translation {
            schema,
            residual,
            report,
            order: self.order,
        }
    }

    /// Creates the table of `set`, or `None` when it is a coded value set.
    fn create_table(&mut self, set: &'a ObjectSet) -> Option<Table> {
        if self.idx.is_coded(&set.name) {
            return None;
        }
        let mut table = Table::new(&set.name);
        match set.supersets.first().and_then(|s| self.idx.set(s)) {
            Some(sup) => {
                let coded = self.idx.is_coded(&sup.name);
                add_foreign_key(&mut table, OBJECT_ID, sup, coded);
                for other in set.supersets.iter().skip(1).filter_map(|s| self.idx.set(s)) {
                    let coded = self.idx.is_coded(&other.name);
                    add_foreign_key(&mut table, &crate::model::inclusion_name(&other.name), other, coded);
                }
            }
            None => {
                let max = max_surrogate(set.card_exponent);
                table.columns.push(Column {
                    name: OBJECT_ID.to_string(),
                    sql_type: ColumnType::Autonumber { max },
                    computed_expr: None,
                    max_value: Some(max),
                });
            }
        }
        self.complete_scheme(&mut table, set);
        if set.kind == SetKind::Relationship {
            for role in self
                .idx
                .mappings_on(&set.name)
                .filter(|m| m.kind == MappingKind::CanonicalProjection)
            {
                self.add_reference_column(&mut table, role);
            }
        }
        self.place_constraints(&mut table, set);
        Some(table)
    }

    fn add_reference_column(&self, table: &mut Table, m: &Mapping) {
        if let Some(target) = m.codomain_set().and_then(|s| self.idx.set(s)) {
            add_foreign_key(table, &m.name, target, self.idx.is_coded(&target.name));
        }
    }

    /// Columns of structural functions, then of attributes.
    fn complete_scheme(&self, table: &mut Table, set: &ObjectSet) {
        for m in self.idx.mappings_on(&set.name) {
            if m.kind == MappingKind::Structural {
                self.add_reference_column(table, m);
            }
        }
        for m in self.idx.mappings_on(&set.name) {
            if matches!(m.kind, MappingKind::Attribute | MappingKind::ComputedAttribute) {
                add_column(table, m);
            }
        }
    }

    /// Moves every constraint of `set` that the table can carry into it.
    fn place_constraints(&mut self, table: &mut Table, set: &ObjectSet) {
        let Some(ids) = self.by_host.get(&set.name).cloned() else {
            return;
        };
        for i in ids {
            let c = &self.expanded[i];
            let placed = match &c.kind {
                ConstraintKind::Key { mappings, .. } => {
                    if mappings.len() == 1 && mappings[0] == OBJECT_ID {
                        table.primary_key.id = c.label.clone();
                    } else {
                        table.unique_keys.push(UniqueKey {
                            id: c.label.clone(),
                            columns: mappings.clone(),
                        });
                    }
                    true
                }
                ConstraintKind::Domain(r) => match table.column(&r.name) {
                    Some(col) => {
                        table.checks.push(Check {
                            id: c.label.clone(),
                            kind: CheckKind::Domain {
                                column: col.name.clone(),
                                domain: col.sql_type.clone(),
                            },
                        });
                        true
                    }
                    None => false,
                },
                ConstraintKind::Totality(r) => {
                    table.not_null.push(NotNull {
                        id: c.label.clone(),
                        column: r.name.clone(),
                    });
                    true
                }
                ConstraintKind::Referential(r) => {
                    let primary_inclusion = set
                        .supersets
                        .first()
                        .is_some_and(|s| crate::model::inclusion_name(s) == r.name);
                    let column = if primary_inclusion { OBJECT_ID } else { &r.name };
                    self.place_reference(table, c, column, &r.name)
                }
                ConstraintKind::Range { mapping, lo, hi } => {
                    table.checks.push(Check {
                        id: c.label.clone(),
                        kind: CheckKind::Range {
                            column: mapping.name.clone(),
                            lo: *lo,
                            hi: *hi,
                        },
                    });
                    true
                }
                ConstraintKind::Default { mapping, value } => {
                    table.defaults.push(DefaultValue {
                        id: c.label.clone(),
                        column: mapping.name.clone(),
                        value: value.clone(),
                    });
                    true
                }
                ConstraintKind::Tuple { set, var, body } if is_row_local(&self.idx, set, var, body) => {
                    table.checks.push(Check {
                        id: c.label.clone(),
                        kind: CheckKind::Tuple {
                            var: var.clone(),
                            body: body.clone(),
                        },
                    });
                    true
                }
                _ => false,
            };
            self.used[i] = placed;
        }
    }

    fn place_reference(&self, table: &mut Table, c: &Constraint, column: &str, mapping: &str) -> bool {
        let Some(col) = table.column(column) else {
            return false;
        };
        let Some(m) = self.idx.mapping(&table.name, mapping) else {
            return false;
        };
        let Some(target) = m.codomain_set() else {
            return false;
        };
        match &col.sql_type {
            ColumnType::Coded { .. } => {
                let domain = col.sql_type.clone();
                table.checks.push(Check {
                    id: c.label.clone(),
                    kind: CheckKind::Domain {
                        column: column.to_string(),
                        domain,
                    },
                });
            }
            _ => {
                let here = self.created_at.get(table.name.as_str());
                let there = self.created_at.get(target);
                let same_scc = self.scc_of.get(&table.name) == self.scc_of.get(target);
                let deferred = same_scc || there.is_none() || there >= here;
                table.foreign_keys.push(ForeignKey {
                    id: c.label.clone(),
                    column: column.to_string(),
                    ref_table: target.to_string(),
                    ref_column: OBJECT_ID.to_string(),
                    max_value: col.max_value.unwrap_or(i64::MAX),
                    deferred,
                });
            }
        }
        true
    }

    fn residual(&self) -> NonRelationalOutput {
        let entries = self
            .expanded
            .iter()
            .zip(&self.used)
            .filter(|(_, used)| !**used)
            .map(|(c, _)| ResidualEntry {
                host_sets: host_sets(&self.idx, c),
                provenance: provenance(&c.kind).to_string(),
                constraint: c.clone(),
            })
            .collect();
        NonRelationalOutput { entries }
    }
}

/// Set whose table would carry `kind` if it is relational.
fn relational_host(kind: &ConstraintKind) -> Option<&str> {
    match kind {
        ConstraintKind::Key { set, .. } | ConstraintKind::Tuple { set, .. } => Some(set),
        ConstraintKind::Totality(r)
        | ConstraintKind::Domain(r)
        | ConstraintKind::Referential(r)
        | ConstraintKind::Range { mapping: r, .. }
        | ConstraintKind::Default { mapping: r, .. } => Some(&r.set),
        _ => None,
    }
}

fn provenance(kind: &ConstraintKind) -> &'static str {
    match kind {
        ConstraintKind::Tuple { .. } => "tuple constraint beyond stored attributes of one row",
        ConstraintKind::ObjectFormula(_) => "object constraint",
        ConstraintKind::NullReflexive { .. } => "null-reflexive composition",
        ConstraintKind::Acyclic(_) => "acyclicity",
        ConstraintKind::Existence { .. } => "existence",
        ConstraintKind::NoOverlap { .. } => "interval no-overlap",
        _ => "no table to carry it",
    }
}

/// A tuple body stays relational iff it has no quantifier and applies only
/// stored attributes of the host set directly to the row variable.
pub fn is_row_local(idx: &SchemeIndex, set: &str, var: &str, body: &Formula) -> bool {
    if body.has_quantifier() {
        return false;
    }
    let mut ok = true;
    body.visit_terms(&mut |t| ok &= term_is_row_local(idx, set, var, t));
    ok
}

fn term_is_row_local(idx: &SchemeIndex, set: &str, var: &str, t: &Term) -> bool {
    match t {
        Term::Apply { func, arg } => {
            matches!(arg.as_ref(), Term::Var(v) if v == var)
                && idx
                    .mapping(set, func)
                    .is_some_and(|m| m.kind == MappingKind::Attribute)
        }
        Term::Add(a, b) | Term::Sub(a, b) | Term::Coalesce(a, b) => {
            term_is_row_local(idx, set, var, a) && term_is_row_local(idx, set, var, b)
        }
        Term::Var(v) => v == var,
        Term::Lit(_) | Term::CurrentYear => true,
    }
}

/// Sets quantified over or hosting a function used by `c`, in declaration order.
pub fn host_sets(idx: &SchemeIndex, c: &Constraint) -> Vec<String> {
    let mut sets: HashSet<String> = HashSet::new();
    match &c.kind {
        ConstraintKind::Acyclic(r) => {
            sets.insert(r.set.clone());
        }
        kind => {
            if let Some(s) = relational_host(kind) {
                sets.insert(s.to_string());
            }
            if let Some(f) = c.to_formula() {
                collect_formula_sets(&f, &mut sets);
                let _ = idx.check_formula_with(&f, &TypeEnv::new(), &mut |m| {
                    sets.insert(m.domain.clone());
                });
            }
        }
    }
    let mut out: Vec<String> = sets.into_iter().collect();
    out.sort_by_key(|s| idx.set_position(s).unwrap_or(usize::MAX));
    out
}

fn collect_formula_sets(f: &Formula, out: &mut HashSet<String>) {
    match f {
        Formula::Forall { set, body, .. } | Formula::Exists { set, body, .. } => {
            out.insert(set.clone());
            collect_formula_sets(body, out);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_formula_sets(a, out);
            collect_formula_sets(b, out);
        }
        Formula::Not(a) => collect_formula_sets(a, out),
        Formula::Compare { .. } | Formula::IsNull(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_scheme;

    fn tr(src: &str) -> Translation {
        translate(&parse_scheme(src).unwrap_or_else(|e| panic!("{e:?}"))).unwrap()
    }

    #[test]
    fn empty_scheme_translates_to_nothing() {
        let t = tr("");
        assert!(t.schema.tables.is_empty() && t.schema.views.is_empty());
        assert_eq!(t.report, TranslationReport::default());
    }

    #[test]
    fn autonumber_key_bounded_by_cardinality() {
        let t = tr("set COUNTRIES entity card 3;");
        let c = t.schema.table("COUNTRIES").unwrap();
        assert_eq!(c.columns[0].sql_type, ColumnType::Autonumber { max: 999 });
        assert_eq!(c.tally().total(), 3);
        assert_eq!(t.report.steps, 1 + 1 + 3);
    }

    #[test]
    fn subset_identifier_is_foreign_key_to_superset() {
        let t = tr("set PERSONS entity card 5; set EMPLOYEES entity card 4 subset-of PERSONS;");
        let e = t.schema.table("EMPLOYEES").unwrap();
        assert_eq!(e.primary_key.column, "x");
        let fk = e.foreign_key("x").unwrap();
        assert_eq!(fk.ref_table, "PERSONS");
        assert_eq!(fk.max_value, 99_999);
        assert!(!fk.deferred);
        assert!(t.residual.is_empty());
    }

    #[test]
    fn additional_supersets_get_unique_mandatory_columns() {
        let t = tr("set A entity; set B entity; set C entity subset-of A, B;");
        let c = t.schema.table("C").unwrap();
        assert!(c.foreign_key("xB").is_some());
        assert!(c.is_not_null("xB"));
        assert!(c.unique_keys.iter().any(|u| u.columns == ["xB"]));
        assert!(t.residual.is_empty());
    }

    #[test]
    fn static_attribute_free_set_becomes_coded_domain() {
        let t = tr(
            "set WEEKDAYS static card 1 { 'Mon', 'Tue', 'Wed', 'Thu', 'Fri', 'Sat', 'Sun' };
             set SHIFTS entity; fun Day: SHIFTS -> WEEKDAYS total;",
        );
        assert!(t.schema.table("WEEKDAYS").is_none());
        let s = t.schema.table("SHIFTS").unwrap();
        assert!(s.foreign_keys.is_empty());
        let check = s.checks.iter().find(|c| c.id == "SHIFTS.Day.fk").unwrap();
        let CheckKind::Domain { domain: ColumnType::Coded { values }, .. } = &check.kind else {
            panic!("{check:?}")
        };
        assert_eq!(values.len(), 7);
        assert_eq!(s.column("Day").unwrap().max_value, Some(7));
    }

    #[test]
    fn static_set_with_attributes_is_a_table() {
        let t = tr("set W static { 'a' }; fun Label: W -> ascii(9);");
        assert!(t.schema.table("W").is_some());
    }

    #[test]
    fn relationship_roles_become_mandatory_foreign_keys() {
        let t = tr(
            "set P entity; set Q entity; set R relationship;
             fun p: R -> P role; fun q: R -> Q role; fun w: R -> nat(2);",
        );
        let r = t.schema.tables.last().unwrap();
        assert_eq!(r.name, "R");
        let names: Vec<_> = r.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["x", "w", "p", "q"]);
        assert!(r.is_not_null("p") && r.is_not_null("q"));
        assert_eq!(r.foreign_keys.len(), 2);
        assert_eq!((t.report.e, t.report.r, t.report.f), (2, 1, 2));
    }

    #[test]
    fn relationship_sets_follow_entity_sets() {
        let t = tr(
            "set R relationship; set P entity; fun p1: R -> P role; fun p2: R -> P role;
             set Z entity;",
        );
        let names: Vec<_> = t.schema.tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["P", "Z", "R"]);
    }

    #[test]
    fn computed_sets_become_views() {
        let t = tr("set A entity; set V computed view \"SELECT x FROM A\";");
        assert_eq!(t.schema.views, vec![View { name: "V".into(), body: "SELECT x FROM A".into() }]);
        assert_eq!(t.report.e, 2);
        assert_eq!(t.report.a, 1);
    }

    #[test]
    fn tuple_routing() {
        let t = tr(
            "set P entity; fun a: P -> nat(2); fun b: P -> nat(2);
             fun c: P -> nat(3) computed \"a(x) + b(x)\"; fun boss: P -> P;
             constraint T1 tuple P \"a(x) <= b(x)\";
             constraint T2 tuple P \"c(x) <= 10\";
             constraint T3 tuple P \"a(boss(x)) <= a(x)\";",
        );
        let p = t.schema.table("P").unwrap();
        assert!(p.checks.iter().any(|c| c.id == "T1"));
        assert_eq!(t.residual.labels(), ["T2", "T3"]);
        assert_eq!(t.residual.get("T3").unwrap().host_sets, ["P"]);
    }

    #[test]
    fn forward_and_cyclic_references_are_deferred() {
        let t = tr("set A entity; set B entity; fun b: A -> B; fun a: B -> A; fun s: B -> B;
                    set C entity; fun c: C -> A;");
        let a = t.schema.table("A").unwrap();
        let b = t.schema.table("B").unwrap();
        let c = t.schema.table("C").unwrap();
        assert!(a.foreign_key("b").unwrap().deferred);
        assert!(b.foreign_key("a").unwrap().deferred);
        assert!(b.foreign_key("s").unwrap().deferred);
        assert!(!c.foreign_key("c").unwrap().deferred);
    }

    #[test]
    fn invalid_scheme_is_rejected() {
        let mut s = parse_scheme("set A entity;").unwrap();
        s.sets[0].supersets.push("A".into());
        assert!(translate(&s).is_err());
    }
}
