//! Random event streams over the genealogy fixture and the full-recheck oracle.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use mdmrel_core::checker::{Checker, Event, Instance, Value};
use mdmrel_core::model::{ColumnType, RelationalSchema, ValueType};
use mdmrel_core::planner::EnforcementPlan;

fn candidates(schema: &RelationalSchema, inst: &Instance, table: &str, column: &str) -> Vec<Json> {
    let t = schema.table(table).unwrap();
    let col = t.column(column).unwrap();
    let mut pool = vec![Json::Null];
    let data = inst.table(table).unwrap();
    for row in data.rows.values() {
        if let Some(v) = &row[data.column_index(column).unwrap()] {
            pool.push(match v {
                Value::Int(i) => json!(i),
                Value::Str(s) => json!(s),
            });
        }
    }
    if let Some(fk) = t.foreign_key(column) {
        let target = inst.table(&fk.ref_table).unwrap();
        pool.extend(target.rows.keys().map(|x| json!(x)));
        pool.push(json!(target.rows.keys().max().copied().unwrap_or(0) + 1));
        return pool;
    }
    match &col.sql_type {
        ColumnType::Value(ValueType::Enum(vs)) => pool.extend(vs.iter().map(|v| json!(v))),
        ColumnType::Value(ValueType::Text { .. }) => pool.push(json!("Anon")),
        ColumnType::Value(v) if v.is_integer() => {
            let ints: Vec<i64> = pool.iter().filter_map(Json::as_i64).collect();
            for i in ints {
                pool.extend([json!(i - 1), json!(i + 1), json!(i + 30), json!(i - 60)]);
            }
            pool.extend([json!(1950), json!(2026), json!(2030)]);
        }
        _ => {}
    }
    pool
}

fn writable(schema: &RelationalSchema, table: &str) -> Vec<String> {
    schema
        .table(table)
        .unwrap()
        .columns
        .iter()
        .filter(|c| c.name != "x" && c.computed_expr.is_none())
        .map(|c| c.name.clone())
        .collect()
}

pub fn random_event(rng: &mut ChaCha8Rng, schema: &RelationalSchema, inst: &Instance) -> Event {
    let table = &schema.tables[rng.random_range(0..schema.tables.len())].name;
    let rows: Vec<i64> = inst.table(table).unwrap().rows.keys().copied().collect();
    let cols = writable(schema, table);
    let roll = rng.random_range(0..100);
    if rows.is_empty() || roll < 15 {
        let mut ev = Event::insert(table, None);
        for c in &cols {
            if rng.random_bool(0.8) {
                let pool = candidates(schema, inst, table, c);
                ev = ev.set(c, pool.choose(rng).unwrap().clone());
            }
        }
        return ev;
    }
    let x = *rows.choose(rng).unwrap();
    if roll < 27 {
        return Event::delete(table, x);
    }
    let mut ev = Event::update(table, x);
    let n = if rng.random_bool(0.8) { 1 } else { 2 };
    for _ in 0..n {
        let c = cols.choose(rng).unwrap();
        let pool = candidates(schema, inst, table, c);
        ev = ev.set(c, pool.choose(rng).unwrap().clone());
    }
    ev
}

#[derive(Debug, Default)]
pub struct StreamStats {
    pub events: usize,
    pub accepted: usize,
    pub divergences: Vec<String>,
}

/// Replays seeded random streams; each event is applied through the plan and,
/// independently, accepted by the oracle iff the staged instance has no violation.
pub fn run_streams(checker: &Checker, plan: &EnforcementPlan, base: &Instance, streams: u64, max_len: usize) -> StreamStats {
    let mut stats = StreamStats::default();
    for seed in 0..streams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.random_range(1..=max_len);
        let mut incremental = base.clone();
        let mut oracle = base.clone();
        for step in 0..len {
            let ev = random_event(&mut rng, checker.schema(), &incremental);
            stats.events += 1;
            let staged = checker.stage_event(&oracle, &ev, plan);
            let outcome = checker.apply_event(&mut incremental, &ev, plan);
            let (staged, outcome) = match (staged, outcome) {
                (Ok(s), Ok(o)) => (s, o),
                (Err(a), Err(b)) if a == b => continue,
                (a, b) => {
                    stats.divergences.push(format!("seed {seed} step {step}: {ev:?}: {a:?} vs {b:?}"));
                    break;
                }
            };
            let violations = checker.check_all(&staged.instance);
            let oracle_accepts = violations.is_empty();
            if oracle_accepts {
                oracle = staged.instance;
                stats.accepted += 1;
            }
            if oracle_accepts != outcome.accepted || oracle != incremental {
                stats.divergences.push(format!(
                    "seed {seed} step {step}: {}: plan {} ({:?}), oracle {} ({:?})",
                    serde_json::to_string(&ev).unwrap(),
                    outcome.accepted,
                    outcome.messages.first().map(|m| &m.constraint_id),
                    oracle_accepts,
                    violations.iter().map(|v| &v.constraint_id).collect::<Vec<_>>()
                ));
                break;
            }
        }
    }
    stats
}
