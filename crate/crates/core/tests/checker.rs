mod common;

use std::collections::BTreeSet;

use common::{insert_row, mutation_base, set_cell, Pipeline, YEAR};
use mdmrel_core::checker::{Event, EventError, Value, Verdict};
use mdmrel_core::parser::parse_formula_syntax;

fn violated(p: &Pipeline, inst: &mdmrel_core::checker::Instance) -> BTreeSet<String> {
    p.checker().check_all(inst).into_iter().map(|v| v.constraint_id).collect()
}

#[test]
fn fixture_loads_with_table_sizes() {
    let p = Pipeline::genealogy();
    let inst = p.fixture();
    let sizes: Vec<(&str, usize)> = inst.tables.iter().map(|t| (t.name.as_str(), t.rows.len())).collect();
    assert_eq!(
        sizes,
        [("TITLES", 5), ("COUNTRIES", 3), ("CITIES", 5), ("DYNASTIES", 1), ("RULERS", 8), ("MARRIAGES", 5), ("REIGNS", 2)]
    );
}

#[test]
fn empty_directory_gives_empty_instance() {
    let p = Pipeline::genealogy();
    let dir = std::env::temp_dir().join(format!("mdmrel-empty-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (inst, dangling) = p.checker().load_instance(&dir, YEAR).unwrap();
    assert_eq!(inst.row_count(), 0);
    assert!(dangling.is_empty());
    assert!(p.checker().check_all(&inst).is_empty());
}

#[test]
fn dangling_reference_is_a_violation_not_an_error() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let dir = std::env::temp_dir().join(format!("mdmrel-dangling-{}", std::process::id()));
    let mut inst = p.fixture();
    set_cell(&c, &mut inst, "RULERS", 8, "Dynasty", "9");
    mdmrel_core::checker::write_instance(&inst, &dir).unwrap();
    let (loaded, dangling) = c.load_instance(&dir, YEAR).unwrap();
    assert_eq!(loaded, inst);
    assert_eq!(dangling.len(), 1);
    let fk = &p.analyzed.table("RULERS").unwrap().foreign_key("Dynasty").unwrap().id;
    assert_eq!(&dangling[0].constraint_id, fk);
    assert_eq!(dangling[0].rows, [8]);
}

#[test]
fn unparseable_cell_is_an_error() {
    let p = Pipeline::genealogy();
    let dir = std::env::temp_dir().join(format!("mdmrel-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("TITLES.csv"), "x,Title\none,King\n").unwrap();
    let err = p.checker().load_instance(&dir, YEAR).unwrap_err();
    assert!(err.to_string().contains("not an integer"), "{err}");
    std::fs::write(dir.join("TITLES.csv"), "x,Title,Extra\n1,King,2\n").unwrap();
    assert!(p.checker().load_instance(&dir, YEAR).is_err());
}

#[test]
fn ages_are_recomputed() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    let age = |inst: &mdmrel_core::checker::Instance, x| inst.get("RULERS", x, "Age").unwrap().clone();
    // Diana: 1997 - 1961; Charles III: 2026 - 1948
    assert_eq!(age(&inst, 2), Some(Value::Int(36)));
    assert_eq!(age(&inst, 1), Some(Value::Int(78)));
    set_cell(&c, &mut inst, "RULERS", 1, "BirthYear", "");
    assert_eq!(age(&inst, 1), None);
    let once = inst.clone();
    assert!(c.recompute_derived(&mut inst).is_empty());
    assert_eq!(inst, once);
}

#[test]
fn fixture_is_clean_in_2026() {
    let p = Pipeline::genealogy();
    assert_eq!(p.checker().check_all(&p.fixture()), []);
    assert_eq!(p.checker().check_all(&mutation_base(&p)), []);
}

#[test]
fn formula_examples() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let inst = p.fixture();
    let f = |src: &str| parse_formula_syntax(src).unwrap();
    let c6 = f("Sex(x) <> 'N' implies 0 <= Age(x) <= 140");
    let c18 = f("Sex(Wife(x)) = 'F'");
    let c14 = f("KilledBy(x) is not null and BirthYear(KilledBy(x)) is not null and Sex(x) <> 'N' implies BirthYear(KilledBy(x)) <= PassedAwayYear(x)");
    assert_eq!(c.eval_formula(&inst, &c6, &[("x", "RULERS", 2)]), Verdict::True);
    assert_eq!(c.eval_formula(&inst, &c18, &[("x", "MARRIAGES", 3)]), Verdict::True);
    assert_eq!(c.eval_formula(&inst, &c14, &[("x", "RULERS", 1)]), Verdict::True);
    let cmp_null = f("PassedAwayYear(x) > 1900");
    assert_eq!(c.eval_formula(&inst, &cmp_null, &[("x", "RULERS", 1)]), Verdict::Unknown);
    let is_null = f("PassedAwayYear(x) is null");
    assert_eq!(c.eval_formula(&inst, &is_null, &[("x", "RULERS", 1)]), Verdict::True);
}

#[test]
fn null_guards_change_the_verdict() {
    // Mary has no birth year: the guard of C12 makes her row TRUE, the unguarded body UNKNOWN
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = mutation_base(&p);
    set_cell(&c, &mut inst, "RULERS", 10, "Mother", "7");
    let guarded = parse_formula_syntax(
        "BirthYear(x) is not null and Mother(x) is not null and BirthYear(Mother(x)) is not null and Sex(x) <> 'N' implies 5 <= BirthYear(x) - BirthYear(Mother(x)) <= 75",
    )
    .unwrap();
    let unguarded = parse_formula_syntax(
        "Mother(x) is not null and BirthYear(Mother(x)) is not null and Sex(x) <> 'N' implies 5 <= BirthYear(x) - BirthYear(Mother(x)) <= 75",
    )
    .unwrap();
    assert_eq!(c.eval_formula(&inst, &guarded, &[("x", "RULERS", 10)]), Verdict::True);
    assert_eq!(c.eval_formula(&inst, &unguarded, &[("x", "RULERS", 10)]), Verdict::Unknown);
    assert!(!violated(&p, &inst).contains("C12"));
}

#[test]
fn wife_swap_violates_wives_sex_and_sibling_marriage() {
    // William (3) is male and Harry's (4) brother: C18 and C32 both fail
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    set_cell(&c, &mut inst, "MARRIAGES", 4, "Wife", "3");
    let all = c.check_all(&inst);
    let ids: BTreeSet<&str> = all.iter().map(|v| v.constraint_id.as_str()).collect();
    assert_eq!(ids, BTreeSet::from(["C18", "C32"]));
    assert!(all.iter().all(|v| v.rows == [4]));
}

#[test]
fn mother_cycle_is_detected() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let inst = p.fixture();
    assert_eq!(c.detect_cycle(&inst, "RULERS", "Mother", 3), None);
    let mut two = inst.clone();
    set_cell(&c, &mut two, "RULERS", 2, "Mother", "3");
    assert_eq!(c.detect_cycle(&two, "RULERS", "Mother", 3), Some(vec![3, 2, 3]));
    // the cycle also breaks the sex and age rules for mothers
    assert_eq!(violated(&p, &two), BTreeSet::from(["C12".into(), "C27".into(), "C7".into()]));
    let mut self_loop = inst.clone();
    set_cell(&c, &mut self_loop, "RULERS", 5, "Mother", "5");
    assert_eq!(c.detect_cycle(&self_loop, "RULERS", "Mother", 5), Some(vec![5, 5]));
}

#[test]
fn three_cycle_on_synthetic_rows() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = c.empty_instance(YEAR);
    for (x, m) in [(1, "2"), (2, "3"), (3, "1"), (4, "1")] {
        insert_row(&c, &mut inst, "RULERS", x, &[("Name", "A"), ("Sex", "F"), ("Mother", m)]);
    }
    let cycle = c.detect_cycle(&inst, "RULERS", "Mother", 4).unwrap();
    assert_eq!(cycle, [1, 2, 3, 1]);
    assert_eq!(cycle.len() - 1, 3);
    let c27: Vec<_> = c.check_all(&inst).into_iter().filter(|v| v.constraint_id == "C27").collect();
    assert_eq!(c27.len(), 1);
    assert_eq!(c27[0].rows, [1]);
}

#[test]
fn capital_change_is_rejected_with_city_and_country() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    let before = inst.clone();
    let out = c.apply_event(&mut inst, &Event::update("CITIES", 1).set("Country", 2), &p.plan).unwrap();
    assert!(!out.accepted);
    let msg = &out.messages[0].message;
    assert!(msg.contains("London") && msg.contains("U.K."), "{msg}");
    assert_eq!(inst, before);
}

#[test]
fn neutral_sex_nullifies_and_warns() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = mutation_base(&p);
    let mut louis = Event::insert("RULERS", Some(11));
    for (k, v) in [("Name", "Louis II"), ("Sex", "M")] {
        louis = louis.set(k, v);
    }
    for (k, v) in [("BirthYear", 2018), ("Mother", 5), ("Father", 3), ("Dynasty", 1), ("KilledBy", 8)] {
        louis = louis.set(k, v);
    }
    // KilledBy needs a death year
    louis = louis.set("PassedAwayYear", 2020);
    assert!(c.apply_event(&mut inst, &louis, &p.plan).unwrap().accepted);
    let out = c.apply_event(&mut inst, &Event::update("RULERS", 11).set("Sex", "N"), &p.plan).unwrap();
    assert!(out.accepted, "{out:?}");
    let nulled: Vec<&str> = out.mutations.iter().map(|m| m.column.as_str()).collect();
    assert_eq!(nulled, ["Mother", "Father", "Dynasty", "KilledBy"]);
    assert_eq!(out.messages.len(), 1);
    assert!(out.messages[0].message.contains("has been automatically deleted"));
    assert!(out.messages[0].message.contains("Louis II"));
    for col in nulled {
        assert_eq!(inst.get("RULERS", 11, col), Some(&None));
    }
}

#[test]
fn married_man_cannot_become_neutral() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    let out = c.apply_event(&mut inst, &Event::update("RULERS", 8).set("Sex", "N"), &p.plan).unwrap();
    assert!(!out.accepted);
    assert_eq!(out.messages[0].constraint_id, "C19");
}

#[test]
fn new_city_skips_capital_check() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    let ev = Event::insert("CITIES", None).set("City", "Lyon").set("Country", 2);
    let out = c.apply_event(&mut inst, &ev, &p.plan).unwrap();
    assert!(out.accepted);
    assert!(!out.checked.contains(&"C2".to_string()));
    assert_eq!(out.x, 6);
    let moved = c.apply_event(&mut inst, &Event::update("CITIES", 6).set("Country", 1), &p.plan).unwrap();
    assert!(moved.accepted && moved.checked.contains(&"C2".to_string()));
}

#[test]
fn deletes_respect_references_and_existentials() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = mutation_base(&p);
    let before = inst.clone();
    let out = c.apply_event(&mut inst, &Event::delete("RULERS", 2), &p.plan).unwrap();
    assert!(!out.accepted);
    assert_eq!(inst, before);
    // Zoe's parents are known, so co-reigning with Louis needs their marriage
    insert_row(&c, &mut inst, "RULERS", 11, &[
        ("Name", "Zoe"), ("Sex", "F"), ("BirthYear", "2019"), ("Mother", "6"), ("Father", "4"),
    ]);
    insert_row(&c, &mut inst, "MARRIAGES", 6, &[("Husband", "9"), ("Wife", "11")]);
    insert_row(&c, &mut inst, "REIGNS", 5, &[("Ruler", "11"), ("Country", "2"), ("FromY", "2025")]);
    assert_eq!(c.check_all(&inst), []);
    let out = c.apply_event(&mut inst, &Event::delete("MARRIAGES", 6), &p.plan).unwrap();
    assert!(!out.accepted);
    assert_eq!(out.messages[0].constraint_id, "C26");
    // Camilla's parents are unknown: C26 is UNKNOWN without the marriage, not FALSE
    let out = c.apply_event(&mut inst, &Event::delete("MARRIAGES", 2), &p.plan).unwrap();
    assert!(out.accepted);
}

#[test]
fn event_errors() {
    let p = Pipeline::genealogy();
    let c = p.checker();
    let mut inst = p.fixture();
    let err = |ev: Event, inst: &mut mdmrel_core::checker::Instance| c.apply_event(inst, &ev, &p.plan).unwrap_err();
    assert_eq!(err(Event::update("NOPE", 1), &mut inst), EventError::UnknownTable("NOPE".into()));
    assert!(matches!(err(Event::update("CITIES", 99), &mut inst), EventError::UnknownRow { .. }));
    assert!(matches!(err(Event::update("CITIES", 1).set("x", 3), &mut inst), EventError::BadValue { .. }));
    assert!(matches!(err(Event::update("RULERS", 1).set("Age", 3), &mut inst), EventError::BadValue { .. }));
    assert!(matches!(err(Event::update("CITIES", 1).set("Mayor", 3), &mut inst), EventError::UnknownColumn { .. }));
    assert!(matches!(err(Event::insert("CITIES", Some(1)), &mut inst), EventError::DuplicateRow { .. }));
    let events = mdmrel_core::checker::parse_events("{\"op\":\"update\",\"table\":\"CITIES\",\"x\":1,\"values\":{\"Country\":2}}\n\n").unwrap();
    assert_eq!(events, [Event::update("CITIES", 1).set("Country", 2)]);
    assert!(matches!(mdmrel_core::checker::parse_events("{}"), Err(EventError::Parse { line: 1, .. })));
}
