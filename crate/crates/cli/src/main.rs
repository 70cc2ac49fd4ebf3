use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Datelike;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mdmrel_core::analyzer::{analyze, ImplicationReport};
use mdmrel_core::checker::{parse_events, write_instance, Checker, Op, Severity};
use mdmrel_core::model::{validate_scheme, MdmScheme, RelationalSchema};
use mdmrel_core::parser::parse_scheme_named;
use mdmrel_core::planner::{plan, render_plan, EnforcementPlan, PlanFormat};
use mdmrel_core::sql::{emit_ddl, Ddl, DialectProfile};
use mdmrel_core::translator::{translate, Translation};

/// Translate (E)MDM schemes into relational schemas, SQL DDL and enforcement
/// plans, and check instances against them.
#[derive(Parser)]
#[command(name = "mdmrel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scheme; print diagnostics
    Validate(Common),
    /// Print the translation report and the residual constraints
    Translate(Common),
    /// Emit SQL DDL and list the dialect demotions
    EmitSql(Common),
    /// Print the enforcement plan
    Plan(Common),
    /// Check an instance directory for violations
    Check(Common),
    /// Replay an event stream onto an instance
    Simulate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dialect {
    Ansi,
    Strict,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Args)]
struct Common {
    /// Scheme source file
    scheme: PathBuf,
    #[arg(long, value_name = "DIR")]
    instance: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ansi")]
    dialect: Dialect,
    /// Defaults to the current calendar year
    #[arg(long = "current-year", value_name = "N")]
    current_year: Option<i64>,
    #[arg(long, value_enum, default_value = "on")]
    analyzer: Switch,
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Defaults to json for `plan`, human otherwise
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Outcome of a subcommand: exit 0, 1 (violations found) or 2 (usage or input error).
enum Failure {
    Violations,
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Translate(a) => run_translate(a),
        Command::EmitSql(a) => emit_sql(a),
        Command::Plan(a) => run_plan(a),
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn profile(d: Dialect) -> DialectProfile {
    match d {
        Dialect::Ansi => DialectProfile::ansi(),
        Dialect::Strict => DialectProfile::strict(),
    }
}

fn load_scheme(path: &Path) -> Result<MdmScheme, Failure> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    parse_scheme_named(&text, &path.display().to_string()).map_err(|errs| {
        Failure::Input(errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
    })
}

/// The scheme through translation, optional analysis, DDL emission and planning.
struct Built {
    scheme: MdmScheme,
    translation: Translation,
    schema: RelationalSchema,
    implications: ImplicationReport,
    ddl: Ddl,
    plan: EnforcementPlan,
}

impl Built {
    fn checker(&self) -> Checker<'_> {
        Checker::new(&self.scheme, &self.schema, &self.translation.residual)
    }
}

fn build(a: &Common) -> Result<Built, Failure> {
    let scheme = load_scheme(&a.scheme)?;
    let translation = translate(&scheme).map_err(|diags| {
        Failure::Input(diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
    })?;
    let (schema, implications) = match a.analyzer {
        Switch::On => analyze(&translation.schema, &translation.residual),
        Switch::Off => (translation.schema.clone(), ImplicationReport::default()),
    };
    let ddl = emit_ddl(&schema, &profile(a.dialect)).map_err(input("emit-sql"))?;
    let plan = plan(&translation.residual, &ddl.demotions, &scheme);
    Ok(Built {
        scheme,
        translation,
        schema,
        implications,
        ddl,
        plan,
    })
}

fn current_year(a: &Common) -> i64 {
    a.current_year.unwrap_or_else(|| i64::from(chrono::Local::now().year()))
}

fn format(a: &Common, default: Format) -> Format {
    a.format.unwrap_or(default)
}

fn write_out(dir: &Path, name: &str, text: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(input(dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(input(path.display()))
}

fn require<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    v.as_deref()
        .ok_or_else(|| Failure::Input(format!("{flag} is required for this subcommand")))
}

fn validate(a: &Common) -> Outcome {
    let scheme = load_scheme(&a.scheme)?;
    let diags = validate_scheme(&scheme);
    let errors = diags
        .iter()
        .filter(|d| d.severity == mdmrel_core::model::Severity::Error)
        .count();
    match format(a, Format::Human) {
        Format::Json => {
            for d in &diags {
                println!("{}", serde_json::to_string(d).expect("diagnostic serializes"));
            }
        }
        Format::Human => {
            for d in &diags {
                println!("{d}");
            }
            println!(
                "{}: {} sets, {} functions, {} constraints, {errors} errors",
                a.scheme.display(),
                scheme.sets.len(),
                scheme.mappings.len(),
                scheme.constraints.len()
            );
        }
    }
    if errors > 0 {
        Err(Failure::Violations)
    } else {
        Ok(())
    }
}

fn run_translate(a: &Common) -> Outcome {
    let b = build(a)?;
    let r = &b.translation.report;
    let text = match format(a, Format::Human) {
        Format::Json => {
            let residual: Vec<_> = b
                .translation
                .residual
                .entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "id": e.constraint.label,
                        "description": e.constraint.description,
                        "hostSets": e.host_sets,
                        "provenance": e.provenance,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "report": r,
                "relationalConstraints": b.schema.constraint_count(),
                "implications": b.implications,
                "residual": residual,
            });
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "steps={} rc={} nrc={}", r.steps, r.rc, r.nrc);
            let _ = writeln!(s, "e={} r={} a={} f={}", r.e, r.r, r.a, r.f);
            for p in &b.implications.pruned {
                let _ = writeln!(
                    s,
                    "pruned key {}({}) implied by {} ({})",
                    p.table,
                    p.columns.join(", "),
                    p.implied_by,
                    p.rule
                );
            }
            for note in &b.implications.kept_implied {
                let _ = writeln!(s, "note: {note}");
            }
            if a.analyzer == Switch::On {
                let _ = writeln!(s, "relational constraints to enforce: {}", b.schema.constraint_count());
            }
            for e in &b.translation.residual.entries {
                let _ = writeln!(
                    s,
                    "{:<6} [{}] {}: {}",
                    e.constraint.label,
                    e.host_sets.join(", "),
                    e.provenance,
                    e.constraint.description
                );
            }
            s
        }
    };
    match &a.out_dir {
        Some(dir) => write_out(dir, "translation.txt", &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_sql(a: &Common) -> Outcome {
    let b = build(a)?;
    let mut demotions = String::new();
    for d in &b.ddl.demotions {
        let _ = writeln!(demotions, "demoted {} on {}: {} -> {}", d.id, d.table, d.reason, d.strategy());
    }
    match &a.out_dir {
        Some(dir) => {
            write_out(dir, "schema.sql", &b.ddl.sql)?;
            print!("{demotions}");
            println!("wrote {}", dir.join("schema.sql").display());
        }
        None => {
            print!("{}", b.ddl.sql);
            eprint!("{demotions}");
        }
    }
    Ok(())
}

fn run_plan(a: &Common) -> Outcome {
    let b = build(a)?;
    let fmt = match format(a, Format::Json) {
        Format::Json => PlanFormat::Json,
        Format::Human => PlanFormat::Human,
    };
    let text = render_plan(&b.plan, fmt);
    match &a.out_dir {
        Some(dir) => write_out(dir, if fmt == PlanFormat::Json { "plan.json" } else { "plan.txt" }, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check(a: &Common) -> Outcome {
    let dir = require(&a.instance, "--instance")?;
    let b = build(a)?;
    let c = b.checker();
    let (inst, _) = c.load_instance(dir, current_year(a)).map_err(input("--instance"))?;
    let violations = c.check_all(&inst);
    let jsonl: String = violations
        .iter()
        .map(|v| serde_json::to_string(v).expect("violation serializes") + "\n")
        .collect();
    match (&a.out_dir, format(a, Format::Human)) {
        (Some(out), _) => write_out(out, "violations.jsonl", &jsonl)?,
        (None, Format::Json) => print!("{jsonl}"),
        (None, Format::Human) => {
            for v in &violations {
                println!("{} {} {:?}: {}", v.constraint_id, v.table, v.rows, v.message);
            }
        }
    }
    if a.format != Some(Format::Json) || a.out_dir.is_some() {
        println!("{} rows checked, {} violations", inst.row_count(), violations.len());
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn simulate(a: &Common) -> Outcome {
    let dir = require(&a.instance, "--instance")?;
    let events_path = require(&a.events, "--events")?;
    let b = build(a)?;
    let c = b.checker();
    let (mut inst, _) = c.load_instance(dir, current_year(a)).map_err(input("--instance"))?;
    let text = fs::read_to_string(events_path).map_err(input(events_path.display()))?;
    let events = parse_events(&text).map_err(input(events_path.display()))?;
    let json = format(a, Format::Human) == Format::Json;
    let mut log = String::new();
    let mut rejected = 0;
    for (i, ev) in events.iter().enumerate() {
        let n = i + 1;
        match c.apply_event(&mut inst, ev, &b.plan) {
            Ok(out) => {
                if !out.accepted {
                    rejected += 1;
                }
                if json {
                    let mut j = serde_json::to_value(&out).expect("outcome serializes");
                    j["event"] = serde_json::json!(n);
                    let _ = writeln!(log, "{j}");
                    continue;
                }
                let verdict = if out.accepted { "accepted" } else { "rejected" };
                let op = match ev.op {
                    Op::Insert => "insert",
                    Op::Update => "update",
                    Op::Delete => "delete",
                };
                let _ = writeln!(log, "#{n} {op} {} x={}: {verdict}", ev.table, out.x);
                for m in &out.messages {
                    let tag = match m.severity {
                        Severity::Error => "error",
                        Severity::Warning => "warning",
                    };
                    let _ = writeln!(log, "  {tag} {}: {}", m.constraint_id, m.message);
                }
                for m in &out.mutations {
                    let _ = writeln!(log, "  set {}.{} of x={} to null", m.table, m.column, m.x);
                }
            }
            Err(e) => {
                rejected += 1;
                if json {
                    let _ = writeln!(log, "{}", serde_json::json!({"event": n, "accepted": false, "error": e.to_string()}));
                } else {
                    let _ = writeln!(log, "#{n} error: {e}");
                }
            }
        }
    }
    print!("{log}");
    if !json {
        println!("{} events, {} accepted, {rejected} rejected", events.len(), events.len() - rejected);
    }
    if let Some(out) = &a.out_dir {
        write_instance(&inst, &out.join("instance")).map_err(input("--out-dir"))?;
    }
    if rejected == 0 {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}
