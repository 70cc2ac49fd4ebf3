#![allow(dead_code)]

pub mod mutations;
pub mod oracle;
pub mod scaling;
pub mod streams;

use std::path::PathBuf;

use mdmrel_core::model::MdmScheme;
use mdmrel_core::parser::parse_scheme_named;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn genealogy_source() -> String {
    std::fs::read_to_string(fixtures().join("genealogy.mdm")).unwrap()
}

pub fn genealogy() -> MdmScheme {
    parse_scheme_named(&genealogy_source(), "genealogy.mdm")
        .unwrap_or_else(|e| panic!("fixture does not parse: {e:?}"))
}

pub fn instance_dir() -> PathBuf {
    fixtures().join("genealogy")
}

use mdmrel_core::analyzer::analyze;
use mdmrel_core::checker::{parse_cell, Checker, Instance};
use mdmrel_core::model::RelationalSchema;
use mdmrel_core::planner::{plan, EnforcementPlan};
use mdmrel_core::sql::{emit_ddl, DialectProfile};
use mdmrel_core::translator::{translate, Translation};

pub const YEAR: i64 = 2026;

/// The genealogy scheme through translation, analysis and planning (ansi).
pub struct Pipeline {
    pub scheme: MdmScheme,
    pub translation: Translation,
    pub analyzed: RelationalSchema,
    pub plan: EnforcementPlan,
}

impl Pipeline {
    pub fn genealogy() -> Self {
        Self::with_dialect(DialectProfile::ansi())
    }

    pub fn with_dialect(profile: DialectProfile) -> Self {
        let scheme = genealogy();
        let translation = translate(&scheme).unwrap();
        let (analyzed, _) = analyze(&translation.schema, &translation.residual);
        let ddl = emit_ddl(&analyzed, &profile).unwrap();
        let plan = plan(&translation.residual, &ddl.demotions, &scheme);
        Pipeline {
            scheme,
            translation,
            analyzed,
            plan,
        }
    }

    pub fn checker(&self) -> Checker<'_> {
        Checker::new(&self.scheme, &self.analyzed, &self.translation.residual)
    }

    pub fn fixture(&self) -> Instance {
        let (inst, dangling) = self.checker().load_instance(&instance_dir(), YEAR).unwrap();
        assert!(dangling.is_empty());
        inst
    }
}

/// Inserts a row given as `column=value` pairs (CSV cell syntax), then recomputes.
pub fn insert_row(checker: &Checker, inst: &mut Instance, table: &str, x: i64, cells: &[(&str, &str)]) {
    let schema = checker.schema().table(table).unwrap();
    let mut row = vec![None; schema.columns.len()];
    row[schema.column_index("x").unwrap()] = parse_cell(&schema.column("x").unwrap().sql_type, &x.to_string()).unwrap();
    for (c, v) in cells {
        let i = schema.column_index(c).unwrap_or_else(|| panic!("no column {c}"));
        row[i] = parse_cell(&schema.columns[i].sql_type, v).unwrap();
    }
    inst.table_mut(table).unwrap().rows.insert(x, row);
    checker.recompute_derived(inst);
}

/// Sets one cell (CSV cell syntax) and recomputes derived columns.
pub fn set_cell(checker: &Checker, inst: &mut Instance, table: &str, x: i64, column: &str, value: &str) {
    let ty = checker.schema().table(table).unwrap().column(column).unwrap().sql_type.clone();
    inst.set(table, x, column, parse_cell(&ty, value).unwrap()).expect("row and column exist");
    checker.recompute_derived(inst);
}

/// The fixture plus Louis (child of William and Catherine), Mary (killed,
/// birth year unknown), and reigns of Harry in the U.S.A. and Louis in France.
pub fn mutation_base(p: &Pipeline) -> Instance {
    let c = p.checker();
    let mut inst = p.fixture();
    insert_row(&c, &mut inst, "RULERS", 9, &[
        ("Name", "Louis"), ("Sex", "M"), ("BirthYear", "2018"), ("Mother", "5"), ("Father", "3"),
        ("Dynasty", "1"), ("Title", "3"), ("BirthPlace", "1"), ("Nationality", "1"),
    ]);
    insert_row(&c, &mut inst, "RULERS", 10, &[
        ("Name", "Mary"), ("Sex", "F"), ("PassedAwayYear", "1950"), ("KilledBy", "8"),
    ]);
    insert_row(&c, &mut inst, "REIGNS", 3, &[("Ruler", "4"), ("Country", "3"), ("FromY", "2020")]);
    insert_row(&c, &mut inst, "REIGNS", 4, &[("Ruler", "9"), ("Country", "2"), ("FromY", "2024")]);
    inst
}
