//! JSON and text renderings of an enforcement plan.

use std::fmt::Write;

use serde::Serialize;

use super::{EnforcementPlan, PlanEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanFormat {
    Json,
    Human,
}

impl PlanFormat {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "json" => Some(PlanFormat::Json),
            "human" => Some(PlanFormat::Human),
            _ => None,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonPlan<'a> {
    plan_version: u32,
    constraints: Vec<JsonConstraint<'a>>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct JsonConstraint<'a> {
    id: &'a str,
    description: &'a str,
    entries: Vec<JsonEntry<'a>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonEntry<'a> {
    table: &'a str,
    event: String,
    strategy: &'static str,
    target: Vec<String>,
    columns: &'a [String],
    predicate: Option<String>,
    message: &'a str,
    skip_new_rows: bool,
    advisory: bool,
}

impl<'a> From<&'a PlanEntry> for JsonEntry<'a> {
    fn from(e: &'a PlanEntry) -> Self {
        JsonEntry {
            table: &e.table,
            event: e.event.to_string(),
            strategy: e.strategy.name(),
            target: e.strategy.target(),
            columns: &e.tracked_columns,
            predicate: e.strategy.predicate(),
            message: &e.message,
            skip_new_rows: e.skip_new_rows,
            advisory: e.advisory,
        }
    }
}

pub fn render_plan(plan: &EnforcementPlan, format: PlanFormat) -> String {
    match format {
        PlanFormat::Json => {
            let doc = JsonPlan {
                plan_version: 1,
                constraints: plan
                    .constraints
                    .iter()
                    .map(|c| JsonConstraint {
                        id: &c.id,
                        description: &c.description,
                        entries: c.entries.iter().map(JsonEntry::from).collect(),
                    })
                    .collect(),
                warnings: &plan.warnings,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("plan serializes");
            s.push('\n');
            s
        }
        PlanFormat::Human => human(plan),
    }
}

/// Entries grouped by table, in order of first appearance.
fn human(plan: &EnforcementPlan) -> String {
    let mut tables: Vec<&str> = Vec::new();
    for e in plan.entries() {
        if !tables.contains(&e.table.as_str()) {
            tables.push(&e.table);
        }
    }
    let mut out = String::new();
    for t in tables {
        let _ = writeln!(out, "{t}");
        for e in plan.entries_for(t) {
            let target = e.strategy.target();
            let strategy = if target.is_empty() {
                e.strategy.name().to_string()
            } else {
                format!("{}({})", e.strategy.name(), target.join(", "))
            };
            let _ = write!(out, "  {:<8} {:<32} {strategy}", e.constraint_id, e.event.to_string());
            if let Some(p) = e.strategy.predicate() {
                let _ = write!(out, " where {p}");
            }
            let mut flags = Vec::new();
            if e.skip_new_rows {
                flags.push("existing rows");
            }
            if e.advisory {
                flags.push("advisory");
            }
            if !flags.is_empty() {
                let _ = write!(out, " [{}]", flags.join(", "));
            }
            out.push('\n');
        }
    }
    for w in &plan.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
