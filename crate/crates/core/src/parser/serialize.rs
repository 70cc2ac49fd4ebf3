//! Canonical text rendering of schemes.

use std::fmt::Write;

use super::lexer::quote_text;
use super::scheme::{default_description, default_label, DEFAULT_CARD};
use crate::model::{Codomain, Constraint, ConstraintKind, Literal, MappingKind, MdmScheme, ValueType};

/// Renders `scheme` in the DSL. Synthesized identifiers and inclusions are
/// left implicit; parsing the output yields a structurally equal scheme.
pub fn serialize_scheme(scheme: &MdmScheme) -> String {
    let mut out = String::new();
    for s in &scheme.sets {
        write!(out, "set {} {}", s.name, s.kind.keyword()).unwrap();
        if s.card_exponent != DEFAULT_CARD {
            write!(out, " card {}", s.card_exponent).unwrap();
        }
        if !s.supersets.is_empty() {
            write!(out, " subset-of {}", s.supersets.join(", ")).unwrap();
        }
        if let Some(v) = &s.view_body {
            write!(out, " view {}", quote_text(v)).unwrap();
        }
        if !s.static_values.is_empty() {
            write!(out, " {}", ValueType::Enum(s.static_values.clone())).unwrap();
        }
        out.push_str(";\n");
    }
    for m in scheme.mappings.iter().filter(|m| !m.kind.is_synthesized()) {
        let codomain = match &m.codomain {
            Codomain::Set(s) => s.clone(),
            Codomain::Value(v) => v.to_string(),
        };
        write!(out, "fun {}: {} -> {codomain}", m.name, m.domain).unwrap();
        if m.kind == MappingKind::CanonicalProjection {
            out.push_str(" role");
        } else if m.total {
            out.push_str(" total");
        }
        if let Some(t) = &m.compute {
            write!(out, " computed {}", quote_text(&t.to_string())).unwrap();
        }
        out.push_str(";\n");
    }
    for c in &scheme.constraints {
        constraint(&mut out, c);
    }
    out
}

fn constraint(out: &mut String, c: &Constraint) {
    let label = if default_label(&c.kind).as_deref() == Some(c.label.as_str()) {
        String::new()
    } else {
        format!("{}: ", c.label)
    };
    match &c.kind {
        ConstraintKind::Key { set, mappings } => {
            write!(out, "key {label}{set}({})", mappings.join(" . ")).unwrap();
        }
        ConstraintKind::Range { mapping, lo, hi } => {
            write!(out, "range {label}{mapping} [{lo}, {hi}]").unwrap();
        }
        ConstraintKind::Default { mapping, value } => {
            let v = match value {
                Literal::Int(v) => v.to_string(),
                s => s.to_string(),
            };
            write!(out, "default {label}{mapping} {v}").unwrap();
        }
        kind => {
            write!(out, "constraint {} ", c.label).unwrap();
            match kind {
                ConstraintKind::Tuple { set, body, .. } => {
                    write!(out, "tuple {set} {}", quote_text(&body.to_string())).unwrap()
                }
                ConstraintKind::ObjectFormula(f) => {
                    write!(out, "object {}", quote_text(&f.to_string())).unwrap()
                }
                ConstraintKind::NullReflexive { outer, inner } => {
                    write!(out, "null-reflexive {outer} o {inner}").unwrap()
                }
                ConstraintKind::Acyclic(f) => write!(out, "acyclic {f}").unwrap(),
                ConstraintKind::Existence {
                    if_mapping,
                    then_mapping,
                } => write!(out, "existence {if_mapping} -> {then_mapping}").unwrap(),
                ConstraintKind::NoOverlap {
                    set,
                    distinct,
                    group,
                    lo,
                    hi,
                } => {
                    write!(out, "no-overlap {set} distinct {distinct}").unwrap();
                    if !group.is_empty() {
                        write!(out, " group {}", group.join(", ")).unwrap();
                    }
                    write!(out, " interval {lo}, {hi}").unwrap();
                }
                // implicit kinds are never declared; validation rejects them
                other => write!(out, "object {}", quote_text(&format!("{other:?}"))).unwrap(),
            }
        }
    }
    if c.description != default_description(&c.kind) {
        write!(out, " {}", quote_text(&c.description)).unwrap();
    }
    for m in &c.messages {
        out.push_str(" message ");
        if let Some(t) = &m.table {
            write!(out, "{t} ").unwrap();
        }
        out.push_str(&quote_text(&m.template));
    }
    out.push_str(";\n");
}

#[cfg(test)]
mod tests {
    use super::super::parse_scheme;
    use super::*;

    #[test]
    fn empty_scheme_serializes_to_nothing() {
        assert_eq!(serialize_scheme(&MdmScheme::default()), "");
    }

    #[test]
    fn static_literals_keep_declaration_order() {
        let src = "set WEEKDAYS static card 1 { 'Mon', 'Tue', 'Wed' };\n";
        let s = parse_scheme(src).unwrap();
        assert_eq!(s.sets[0].static_values, vec!["Mon", "Tue", "Wed"]);
        assert_eq!(serialize_scheme(&s), src);
    }

    #[test]
    fn round_trip_covers_every_construct() {
        let src = r#"set P entity card 4;
set E entity subset-of P;
set W static card 1 { 'a', 'b''c' };
set V computed view "SELECT x FROM P";
set L relationship card 5;
fun n: P -> ascii(40) total;
fun y: P -> int[-10, currentYear()];
fun z: P -> int[0, 9];
fun s: P -> { 'M', 'F' };
fun age: P -> nat(3) computed "isNull(z(x), currentYear()) - y(x)";
fun boss: P -> P;
fun l1: L -> P role;
fun l2: L -> E role;
fun wd: L -> W;
fun since: L -> int[0, 99] total;
fun until: L -> int[0, 99];
key P(n . y);
key K9: P(boss);
range P.z [1, 8] "z small" message P "z of {row} is {value}";
default P.s 'M';
constraint T1 tuple P "y(x) <= z(x)";
constraint C1 object "forall x in P: boss(x) is not null implies s(boss(x)) = 'M'" "bosses are men";
constraint C2 acyclic boss "no loops";
constraint C3 existence boss -> y;
constraint C4 no-overlap L distinct l1 group l2 interval since, until;
"#;
        let s = parse_scheme(src).unwrap_or_else(|e| panic!("{e:?}"));
        let text = serialize_scheme(&s);
        let again = parse_scheme(&text).unwrap_or_else(|e| panic!("{e:?}\n{text}"));
        assert_eq!(s, again);
        assert_eq!(text, serialize_scheme(&again));
    }
}
