//! Scheme well-formedness validation.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{
    Bound, Codomain, Constraint, ConstraintKind, MappingKind, MappingRef, MdmScheme, SchemeIndex,
    SetKind, TypeEnv, ValueType, MAX_CARD_EXPONENT, OBJECT_ID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Scheme element the diagnostic is about, e.g. `set RULERS` or `constraint C6`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

/// Checks every structural and typing invariant of the scheme.
///
/// The result is sorted, so it does not depend on declaration order.
pub fn validate_scheme(scheme: &MdmScheme) -> Vec<Diagnostic> {
    let idx = SchemeIndex::new(scheme);
    let mut out = Vec::new();

    check_sets(scheme, &idx, &mut out);
    check_mappings(scheme, &idx, &mut out);
    check_superset_cycles(scheme, &idx, &mut out);

    let mut labels = HashSet::new();
    for c in &scheme.constraints {
        let loc = format!("constraint {}", c.label);
        if !labels.insert(c.label.as_str()) {
            out.push(Diagnostic::error(&loc, "duplicate constraint label"));
        }
        check_constraint(c, &idx, &loc, &mut out);
    }

    out.sort();
    out.dedup();
    out
}

fn check_sets(scheme: &MdmScheme, idx: &SchemeIndex<'_>, out: &mut Vec<Diagnostic>) {
    let mut names = HashSet::new();
    for s in &scheme.sets {
        let loc = format!("set {}", s.name);
        if !names.insert(s.name.as_str()) {
            out.push(Diagnostic::error(&loc, "duplicate set declaration"));
        }
        if !s.is_view() && !(1..=MAX_CARD_EXPONENT).contains(&s.card_exponent) {
            out.push(Diagnostic::error(
                &loc,
                format!("cardinality exponent must be within 1..={MAX_CARD_EXPONENT}"),
            ));
        }
        for sup in &s.supersets {
            if idx.set(sup).is_none() {
                out.push(Diagnostic::error(&loc, format!("unknown superset {sup}")));
            }
        }
        match s.kind {
            SetKind::ComputedView => {
                if s.view_body.is_none() {
                    out.push(Diagnostic::error(&loc, "computed set without view body"));
                }
                if idx.mapping(&s.name, OBJECT_ID).is_some() {
                    out.push(Diagnostic::error(&loc, "computed set must not carry an object identifier"));
                }
            }
            _ => {
                let ids = idx
                    .mappings_on(&s.name)
                    .filter(|m| m.kind == MappingKind::ObjectIdentifier)
                    .count();
                if ids != 1 {
                    out.push(Diagnostic::error(
                        &loc,
                        format!("expected exactly one object identifier, found {ids}"),
                    ));
                }
            }
        }
        if s.kind == SetKind::StaticEnum {
            check_literals(&s.static_values, &loc, out);
            if idx
                .mappings_on(&s.name)
                .any(|m| m.kind.is_set_valued())
            {
                out.push(Diagnostic::error(
                    &loc,
                    "static sets may not have structural functions",
                ));
            }
        }
        if s.kind == SetKind::Relationship {
            let roles = idx
                .mappings_on(&s.name)
                .filter(|m| m.kind == MappingKind::CanonicalProjection)
                .count();
            if roles < 2 {
                out.push(Diagnostic::error(
                    &loc,
                    format!("relationship set needs at least 2 canonical projections, found {roles}"),
                ));
            }
        }
    }
}

fn check_literals(values: &[String], loc: &str, out: &mut Vec<Diagnostic>) {
    if values.is_empty() {
        out.push(Diagnostic::error(loc, "empty literal list"));
    }
    let mut seen = HashSet::new();
    for v in values {
        if !seen.insert(v) {
            out.push(Diagnostic::error(loc, format!("duplicate literal '{v}'")));
        }
    }
}

fn check_value_type(v: &ValueType, loc: &str, out: &mut Vec<Diagnostic>) {
    match v {
        ValueType::IntRange {
            lo: Bound::Int(lo),
            hi: Bound::Int(hi),
        } if lo > hi => {
            out.push(Diagnostic::error(loc, format!("empty range [{lo}, {hi}]")));
        }
        ValueType::Enum(values) => check_literals(values, loc, out),
        ValueType::Autonumber { card_exponent } if *card_exponent < 1 => {
            out.push(Diagnostic::error(loc, "autonumber exponent must be at least 1"));
        }
        ValueType::Text { max_len: 0 } => {
            out.push(Diagnostic::error(loc, "text length must be positive"));
        }
        ValueType::Natural { max_digits: 0 } => {
            out.push(Diagnostic::error(loc, "natural digit count must be positive"));
        }
        _ => {}
    }
}

fn check_mappings(scheme: &MdmScheme, idx: &SchemeIndex<'_>, out: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for m in &scheme.mappings {
        let loc = format!("function {}.{}", m.domain, m.name);
        if !seen.insert((m.domain.as_str(), m.name.as_str())) {
            out.push(Diagnostic::error(&loc, "duplicate function declaration"));
        }
        let Some(domain) = idx.set(&m.domain) else {
            out.push(Diagnostic::error(&loc, format!("unknown domain {}", m.domain)));
            continue;
        };
        match (&m.codomain, m.kind) {
            (Codomain::Set(s), k) if k.is_set_valued() => {
                if idx.set(s).is_none() {
                    out.push(Diagnostic::error(&loc, format!("unknown codomain {s}")));
                } else if idx.set(s).is_some_and(|t| t.is_view()) {
                    out.push(Diagnostic::error(&loc, format!("codomain {s} is a computed set")));
                }
            }
            (Codomain::Value(v), k) if !k.is_set_valued() => check_value_type(v, &loc, out),
            _ => out.push(Diagnostic::error(
                &loc,
                "codomain kind does not match function kind",
            )),
        }
        match m.kind {
            MappingKind::CanonicalProjection => {
                if !m.total {
                    out.push(Diagnostic::error(&loc, "canonical projections are always total"));
                }
                if domain.kind != SetKind::Relationship {
                    out.push(Diagnostic::error(
                        &loc,
                        "canonical projections are only defined on relationship sets",
                    ));
                }
            }
            MappingKind::ObjectIdentifier if m.name != OBJECT_ID => {
                out.push(Diagnostic::error(&loc, "object identifiers must be named x"));
            }
            MappingKind::ComputedAttribute => match &m.compute {
                None => out.push(Diagnostic::error(&loc, "computed attribute without expression")),
                Some(t) => {
                    let env = TypeEnv::with("x", m.domain.clone());
                    match idx.type_of(t, &env) {
                        Ok(ty) => {
                            let want = m.value_type().map(super::Ty::of_value_type);
                            if want.is_some_and(|w| w != ty && ty != super::Ty::Any) {
                                out.push(Diagnostic::error(
                                    &loc,
                                    format!("computed expression has type {ty}"),
                                ));
                            }
                        }
                        Err(e) => out.push(Diagnostic::error(&loc, e.to_string())),
                    }
                }
            },
            _ => {}
        }
        if m.name != OBJECT_ID && domain.is_view() {
            // views carry no functions in the relational output
            out.push(Diagnostic::error(&loc, "functions on computed sets are not supported"));
        }
    }
}

fn check_superset_cycles(scheme: &MdmScheme, idx: &SchemeIndex<'_>, out: &mut Vec<Diagnostic>) {
    // iterative three-colour DFS over set inclusions
    let n = scheme.sets.len();
    let mut colour = vec![0u8; n];
    let mut reported = HashSet::new();
    for start in 0..n {
        if colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some((node, i)) = stack.pop() {
            let sups = &scheme.sets[node].supersets;
            if i < sups.len() {
                stack.push((node, i + 1));
                let Some(next) = idx.set_position(&sups[i]) else {
                    continue;
                };
                match colour[next] {
                    0 => {
                        colour[next] = 1;
                        stack.push((next, 0));
                    }
                    1 if reported.insert(next) => {
                        out.push(Diagnostic::error(
                            format!("set {}", scheme.sets[next].name),
                            "superset cycle",
                        ));
                    }
                    _ => {}
                }
            } else {
                colour[node] = 2;
            }
        }
    }
}

fn require_mapping<'a>(
    idx: &SchemeIndex<'a>,
    r: &MappingRef,
    loc: &str,
    out: &mut Vec<Diagnostic>,
) -> Option<&'a super::Mapping> {
    let m = idx.mapping(&r.set, &r.name);
    if m.is_none() {
        out.push(Diagnostic::error(loc, format!("unknown function {r}")));
    }
    m
}

fn check_constraint(c: &Constraint, idx: &SchemeIndex<'_>, loc: &str, out: &mut Vec<Diagnostic>) {
    match &c.kind {
        ConstraintKind::Totality(_) | ConstraintKind::Domain(_) | ConstraintKind::Referential(_) => {
            out.push(Diagnostic::error(
                loc,
                "totality, domain and referential constraints are implied by function declarations",
            ));
        }
        ConstraintKind::Key { set, mappings } => {
            if idx.set(set).is_none() {
                out.push(Diagnostic::error(loc, format!("unknown set {set}")));
                return;
            }
            if mappings.is_empty() {
                out.push(Diagnostic::error(loc, "empty key"));
            }
            let mut seen = HashSet::new();
            for m in mappings {
                if !seen.insert(m) {
                    out.push(Diagnostic::error(loc, format!("{m} repeated in key")));
                }
                require_mapping(idx, &MappingRef::new(set, m), loc, out);
            }
        }
        ConstraintKind::Range { mapping, lo, hi } => {
            if let Some(m) = require_mapping(idx, mapping, loc, out) {
                if m.value_type().is_none_or(|v| !v.is_integer()) {
                    out.push(Diagnostic::error(loc, "range restriction on a non-integer function"));
                }
            }
            if let (Bound::Int(l), Bound::Int(h)) = (lo, hi) {
                if l > h {
                    out.push(Diagnostic::error(loc, format!("empty range [{l}, {h}]")));
                }
            }
        }
        ConstraintKind::Default { mapping, value } => {
            if let Some(m) = require_mapping(idx, mapping, loc, out) {
                let ok = match (m.value_type(), value) {
                    (Some(v), super::Literal::Int(_)) => v.is_integer(),
                    (Some(v), super::Literal::Str(_)) => !v.is_integer(),
                    (None, _) => false,
                };
                if !ok {
                    out.push(Diagnostic::error(loc, "default literal does not match codomain"));
                }
            }
        }
        ConstraintKind::Tuple { set, var, body } => {
            if idx.set(set).is_none() {
                out.push(Diagnostic::error(loc, format!("unknown set {set}")));
                return;
            }
            let f = super::Formula::Forall {
                vars: vec![var.clone()],
                set: set.clone(),
                body: Box::new(body.clone()),
            };
            if let Err(e) = idx.check_closed(&f) {
                out.push(Diagnostic::error(loc, e.to_string()));
            }
        }
        ConstraintKind::ObjectFormula(f) => {
            if let Err(e) = idx.check_closed(f) {
                out.push(Diagnostic::error(loc, e.to_string()));
            }
        }
        ConstraintKind::NullReflexive { outer, inner } => {
            let o = require_mapping(idx, outer, loc, out);
            let i = require_mapping(idx, inner, loc, out);
            if let (Some(o), Some(i)) = (o, i) {
                let ok = i.codomain_set() == Some(o.domain.as_str())
                    && o.codomain_set() == Some(i.domain.as_str());
                if !ok {
                    out.push(Diagnostic::error(
                        loc,
                        format!(
                            "{} ° {} does not compose into an endomap of {}",
                            outer.name, inner.name, inner.set
                        ),
                    ));
                }
            }
        }
        ConstraintKind::Acyclic(r) => {
            if let Some(m) = require_mapping(idx, r, loc, out) {
                if m.codomain_set() != Some(m.domain.as_str()) {
                    out.push(Diagnostic::error(loc, "acyclic function must map a set into itself"));
                }
            }
        }
        ConstraintKind::Existence {
            if_mapping,
            then_mapping,
        } => {
            require_mapping(idx, if_mapping, loc, out);
            require_mapping(idx, then_mapping, loc, out);
            if if_mapping.set != then_mapping.set {
                out.push(Diagnostic::error(loc, "existence functions must share a domain"));
            }
        }
        ConstraintKind::NoOverlap {
            set,
            distinct,
            group,
            lo,
            hi,
        } => {
            if idx.set(set).is_none() {
                out.push(Diagnostic::error(loc, format!("unknown set {set}")));
                return;
            }
            let mut resolved = HashMap::new();
            for name in std::iter::once(distinct)
                .chain(group.iter())
                .chain([lo, hi])
            {
                if let Some(m) = require_mapping(idx, &MappingRef::new(set, name), loc, out) {
                    resolved.insert(name.as_str(), m);
                }
            }
            if let Some(m) = resolved.get(lo.as_str()) {
                if !m.total {
                    out.push(Diagnostic::error(loc, format!("interval start {lo} must be total")));
                }
            }
            for bound in [lo, hi] {
                if let Some(m) = resolved.get(bound.as_str()) {
                    if m.value_type().is_none_or(|v| !v.is_integer()) {
                        out.push(Diagnostic::error(loc, format!("interval bound {bound} must be an integer")));
                    }
                }
            }
        }
    }
}
