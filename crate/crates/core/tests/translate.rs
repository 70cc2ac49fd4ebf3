mod common;

use std::collections::{BTreeMap, BTreeSet};

use mdmrel_core::model::{CheckKind, ColumnType, ConstraintTally, MappingKind, ValueType};
use mdmrel_core::parser::{parse_scheme, serialize_scheme};
use mdmrel_core::translator::{order_sets, translate};

#[test]
fn fixture_parses_to_expected_shape() {
    let s = common::genealogy();
    assert_eq!(s.sets.len(), 7);
    assert_eq!(s.mappings.len(), 38);
    let synthesized = s.mappings.iter().filter(|m| m.kind == MappingKind::ObjectIdentifier).count();
    assert_eq!(synthesized, 7);
    assert_eq!(s.expanded_constraints().len(), 105);
    assert!(mdmrel_core::model::validate_scheme(&s).is_empty());
}

#[test]
fn fixture_round_trips_through_text() {
    let s = common::genealogy();
    let text = serialize_scheme(&s);
    assert_eq!(parse_scheme(&text).unwrap(), s);
}

#[test]
fn report_counts() {
    let t = translate(&common::genealogy()).unwrap();
    let r = &t.report;
    assert_eq!((r.e, r.r, r.a, r.f, r.rc, r.nrc, r.steps), (7, 0, 21, 17, 82, 23, 150));
    assert_eq!(t.schema.tables.len(), 7);
    assert!(t.schema.views.is_empty());
}

#[test]
fn relational_constraint_decomposition() {
    let t = translate(&common::genealogy()).unwrap();
    let want = ConstraintTally {
        primary_keys: 7,
        pk_domains: 7,
        pk_not_nulls: 7,
        not_nulls: 13,
        domains: 14,
        foreign_keys: 17,
        unique_keys: 14,
        tuples: 3,
        ranges: 0,
        defaults: 0,
    };
    assert_eq!(t.report.totals(), want);
}

#[test]
fn residual_set_is_the_23_object_constraints() {
    let t = translate(&common::genealogy()).unwrap();
    let got: BTreeSet<&str> = t.residual.labels().into_iter().collect();
    let want: BTreeSet<&str> = [
        "C2", "C27", "C28", "C29", "C4", "C5", "C6", "C7", "C8", "C9", "C12", "C13", "C14", "C18",
        "C19", "C20", "C21", "C30", "C31", "C32", "C25", "C26", "C33",
    ]
    .into_iter()
    .collect();
    assert_eq!(got, want);
    assert_eq!(
        t.residual.get("C26").unwrap().host_sets,
        ["RULERS", "MARRIAGES", "REIGNS"]
    );
    assert_eq!(t.residual.get("C2").unwrap().host_sets, ["COUNTRIES", "CITIES"]);
}

#[test]
fn partition_is_complete() {
    let s = common::genealogy();
    let t = translate(&s).unwrap();
    let mut ids: Vec<String> = t.schema.constraint_ids();
    ids.extend(t.residual.labels().into_iter().map(String::from));
    let mut expected: Vec<String> = s.expanded_constraints().into_iter().map(|c| c.label).collect();
    ids.sort();
    expected.sort();
    assert_eq!(ids, expected);
}

#[test]
fn translation_is_deterministic() {
    let a = translate(&common::genealogy()).unwrap();
    let b = translate(&common::genealogy()).unwrap();
    assert_eq!(a, b);
}

/// Reachability closure over set-valued functions, computed naively.
fn reaches(s: &mdmrel_core::model::MdmScheme) -> BTreeMap<String, BTreeSet<String>> {
    let mut r: BTreeMap<String, BTreeSet<String>> = s
        .sets
        .iter()
        .map(|x| (x.name.clone(), BTreeSet::new()))
        .collect();
    for m in &s.mappings {
        if let Some(c) = m.codomain_set() {
            r.get_mut(&m.domain).unwrap().insert(c.to_string());
        }
    }
    loop {
        let mut changed = false;
        let snapshot = r.clone();
        for out in r.values_mut() {
            for via in out.clone() {
                for z in &snapshot[&via] {
                    changed |= out.insert(z.clone());
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

#[test]
fn set_order_agrees_with_reachability() {
    let s = common::genealogy();
    let o = order_sets(&s);
    let r = reaches(&s);
    let pos = |n: &str| o.position(n).unwrap();
    for a in &o.order {
        for b in &r[a] {
            let mutual = r[b].contains(a);
            if !mutual {
                assert!(pos(b) < pos(a), "{b} must precede {a}");
            }
        }
    }
    assert!(pos("TITLES") < pos("CITIES") && pos("COUNTRIES") < pos("CITIES"));
    let groups: Vec<Vec<String>> = o.scc_groups().into_iter().map(|g| g.to_vec()).collect();
    assert_eq!(groups, [vec!["COUNTRIES", "CITIES"], vec!["DYNASTIES", "RULERS"]]);
    assert_eq!(&o.order[5..], ["MARRIAGES", "REIGNS"]);
}

#[test]
fn table_details() {
    let t = translate(&common::genealogy()).unwrap();
    let countries = t.schema.table("COUNTRIES").unwrap();
    assert_eq!(countries.column("x").unwrap().sql_type, ColumnType::Autonumber { max: 999 });

    let rulers = t.schema.table("RULERS").unwrap();
    assert!(rulers.checks.iter().any(|c| matches!(&c.kind,
        CheckKind::Tuple { body, .. } if body.to_string() == "BirthYear(x) <= PassedAwayYear(x)")));
    let age = rulers.column("Age").unwrap();
    assert_eq!(
        age.computed_expr.as_ref().unwrap().to_string(),
        "isNull(PassedAwayYear(x), currentYear()) - BirthYear(x)"
    );
    assert_eq!(
        rulers.column("Sex").unwrap().sql_type,
        ColumnType::Value(ValueType::Enum(vec!["M".into(), "F".into(), "N".into()]))
    );
    assert!(rulers.is_not_null("Sex"));
    let by = rulers.checks.iter().find(|c| c.id == "RULERS.BirthYear.domain").unwrap();
    assert!(by.uses_current_year());
    let mother = rulers.foreign_key("Mother").unwrap();
    assert_eq!((mother.ref_table.as_str(), mother.max_value), ("RULERS", 10i64.pow(16) - 1));
    assert!(mother.deferred);

    let marriages = t.schema.table("MARRIAGES").unwrap();
    let keys: Vec<Vec<String>> = marriages.unique_keys.iter().map(|u| u.columns.clone()).collect();
    assert_eq!(
        keys,
        [vec!["Husband", "Wife", "MarriageYear"], vec!["Husband", "Wife", "DivorceYear"]]
    );
    assert!(marriages.foreign_key("Husband").is_some() && marriages.is_not_null("Husband"));

    let fks: usize = t.schema.tables.iter().map(|t| t.foreign_keys.len()).sum();
    assert_eq!(fks, 17);
    assert!(countries.foreign_key("Capital").unwrap().deferred);
}
