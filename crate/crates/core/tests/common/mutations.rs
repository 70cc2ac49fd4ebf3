//! Single-cell mutations of the mutation base, each breaking one constraint.

use super::Pipeline;

pub struct Mutation {
    pub table: &'static str,
    pub x: i64,
    pub column: &'static str,
    pub value: &'static str,
    /// Constraint id, or `fk:TABLE.column` / `key:TABLE.column` for relational ones.
    pub target: &'static str,
}

pub const SUITE: &[Mutation] = &[
    // London moves to France while still the U.K.'s capital
    Mutation { table: "CITIES", x: 1, column: "Country", value: "2", target: "C2" },
    Mutation { table: "RULERS", x: 8, column: "BirthYear", value: "1850", target: "C6" },
    Mutation { table: "RULERS", x: 9, column: "Sex", value: "N", target: "C9" },
    // Diana would have been a mother at one
    Mutation { table: "RULERS", x: 3, column: "BirthYear", value: "1962", target: "C12" },
    Mutation { table: "MARRIAGES", x: 4, column: "Wife", value: "8", target: "C18" },
    Mutation { table: "RULERS", x: 10, column: "Mother", value: "10", target: "C27" },
    Mutation { table: "RULERS", x: 10, column: "PassedAwayYear", value: "", target: "C29" },
    Mutation { table: "REIGNS", x: 2, column: "Ruler", value: "1", target: "C33" },
    Mutation { table: "RULERS", x: 8, column: "Dynasty", value: "9", target: "fk:RULERS.Dynasty" },
    Mutation { table: "COUNTRIES", x: 3, column: "Country", value: "France", target: "key:COUNTRIES.Country" },
    Mutation { table: "RULERS", x: 9, column: "Mother", value: "1", target: "C7" },
    Mutation { table: "RULERS", x: 10, column: "Sex", value: "4", target: "domain:RULERS.Sex" },
    // Louis would co-rule with his unrelated, unmarried uncle
    Mutation { table: "REIGNS", x: 4, column: "Country", value: "3", target: "C26" },
    Mutation { table: "MARRIAGES", x: 4, column: "Husband", value: "3", target: "C31" },
];

/// Resolves a relational target to the id the translator gave it.
pub fn target_id(p: &Pipeline, target: &str) -> String {
    let Some((kind, rest)) = target.split_once(':') else {
        return target.to_string();
    };
    let (table, column) = rest.split_once('.').unwrap();
    let t = p.analyzed.table(table).unwrap();
    match kind {
        "fk" => t.foreign_keys.iter().find(|f| f.column == column).unwrap().id.clone(),
        "key" => t.unique_keys.iter().find(|u| u.columns == [column]).unwrap().id.clone(),
        "domain" => t.checks.iter().find(|c| c.columns() == [column]).unwrap().id.clone(),
        _ => unreachable!("{target}"),
    }
}
