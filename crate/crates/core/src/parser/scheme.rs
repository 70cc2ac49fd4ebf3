//! Scheme declarations: syntax first, then name resolution and typing.

use std::collections::{HashMap, HashSet};

use super::lexer::{Lexer, Tok, Token};
use super::{Cursor, ParseError, SourceSpan};
use crate::model::{
    key_label, validate_scheme, Bound, Codomain, Constraint, ConstraintKind, Formula, Literal,
    Mapping, MappingKind, MappingRef, MdmScheme, MessageOverride, ObjectSet, SchemeIndex, SetKind,
    Severity, Term, TypeEnv, ValueType, OBJECT_ID,
};

/// Cardinality exponent of a set declared without `card`.
pub const DEFAULT_CARD: u32 = 16;

type Named = (String, SourceSpan);

#[derive(Debug)]
struct RawRef {
    set: Option<String>,
    name: String,
    span: SourceSpan,
}

#[derive(Debug)]
enum RawCodomain {
    Set(Named),
    Value(ValueType),
}

#[derive(Debug)]
enum RawKind {
    Key { set: Named, mappings: Vec<Named> },
    Range { target: RawRef, lo: Bound, hi: Bound },
    Default { target: RawRef, value: Literal },
    Tuple { set: Named, body: Formula },
    NullReflexive { outer: RawRef, inner: RawRef },
    Acyclic(RawRef),
    Existence(RawRef, RawRef),
    NoOverlap {
        set: Named,
        distinct: Named,
        group: Vec<Named>,
        lo: Named,
        hi: Named,
    },
    Object(Formula),
}

#[derive(Debug)]
enum Decl {
    Set {
        set: ObjectSet,
        span: SourceSpan,
        supersets: Vec<SourceSpan>,
    },
    Fun {
        name: Named,
        domain: Named,
        codomain: RawCodomain,
        total: bool,
        role: bool,
        computed: Option<Term>,
        span: SourceSpan,
    },
    Constraint {
        label: Option<Named>,
        kind: RawKind,
        description: Option<String>,
        messages: Vec<MessageOverride>,
        span: SourceSpan,
    },
}

pub fn parse(text: &str, file: &str) -> Result<MdmScheme, Vec<ParseError>> {
    let (toks, mut errors) = Lexer::new(file, text, 1, 1, true).tokenize();
    let mut c = Cursor::new(toks);
    let mut decls = Vec::new();
    while !c.at_eof() {
        let start = c.pos;
        match declaration(&mut c, file) {
            Ok(d) => decls.push(d),
            Err(e) => {
                errors.push(e);
                recover(&mut c, start);
            }
        }
    }
    let scheme = resolve(decls, file, &mut errors);
    if errors.is_empty() {
        Ok(scheme)
    } else {
        errors.sort_by_key(|e| (e.span.line_start, e.span.col_start));
        Err(errors)
    }
}

/// Skips past the next `;`, always making progress.
fn recover(c: &mut Cursor, start: usize) {
    if c.pos == start && !c.at_eof() && !c.at_sym(";") {
        c.next();
    }
    while !c.at_eof() {
        if c.next().tok == Tok::Sym(";") {
            return;
        }
    }
}

fn declaration(c: &mut Cursor, file: &str) -> Result<Decl, ParseError> {
    let (kw, span) = c.expect_ident()?;
    let decl = match kw.as_str() {
        "set" => set_decl(c, span)?,
        "fun" => fun_decl(c, file, span)?,
        "key" => {
            let label = opt_label(c);
            let set = c.expect_ident()?;
            c.expect_sym("(")?;
            let mut mappings = vec![c.expect_ident()?];
            while c.eat_sym(".") {
                mappings.push(c.expect_ident()?);
            }
            c.expect_sym(")")?;
            constraint_tail(c, label, RawKind::Key { set, mappings }, span)?
        }
        "range" => {
            let label = opt_label(c);
            let target = mapping_ref(c)?;
            c.expect_sym("[")?;
            let lo = bound(c)?;
            c.expect_sym(",")?;
            let hi = bound(c)?;
            c.expect_sym("]")?;
            constraint_tail(c, label, RawKind::Range { target, lo, hi }, span)?
        }
        "default" => {
            let label = opt_label(c);
            let target = mapping_ref(c)?;
            let value = literal(c)?;
            constraint_tail(c, label, RawKind::Default { target, value }, span)?
        }
        "constraint" => {
            let label = c.expect_ident()?;
            let kind = constraint_kind(c, file)?;
            constraint_tail(c, Some(label), kind, span)?
        }
        other => {
            return Err(ParseError::new(
                span,
                format!("unknown declaration `{other}`; expected set, fun, key, range, default or constraint"),
            ))
        }
    };
    Ok(decl)
}

fn set_decl(c: &mut Cursor, span: SourceSpan) -> Result<Decl, ParseError> {
    let (name, _) = c.expect_ident()?;
    let (kw, kw_span) = c.expect_ident()?;
    let kind = match kw.as_str() {
        "entity" => SetKind::Entity,
        "relationship" => SetKind::Relationship,
        "static" => SetKind::StaticEnum,
        "computed" => SetKind::ComputedView,
        other => {
            return Err(ParseError::new(
                kw_span,
                format!("unknown set kind `{other}`; expected entity, relationship, static or computed"),
            ))
        }
    };
    let mut set = ObjectSet::new(name, kind, DEFAULT_CARD);
    let mut superset_spans = Vec::new();
    loop {
        if c.eat_kw("card") {
            let v = c.expect_int()?;
            set.card_exponent = u32::try_from(v)
                .map_err(|_| ParseError::new(c.prev_span(), format!("invalid cardinality {v}")))?;
        } else if c.eat_kw("subset-of") {
            loop {
                let (s, sp) = c.expect_ident()?;
                set.supersets.push(s);
                superset_spans.push(sp);
                if !c.eat_sym(",") {
                    break;
                }
            }
        } else if c.eat_kw("view") {
            set.view_body = Some(c.expect_text()?.0);
        } else if c.at_sym("{") {
            set.static_values = literal_list(c)?;
        } else {
            break;
        }
    }
    let end = c.expect_sym(";")?;
    Ok(Decl::Set {
        set,
        span: span.to(&end),
        supersets: superset_spans,
    })
}

fn fun_decl(c: &mut Cursor, file: &str, span: SourceSpan) -> Result<Decl, ParseError> {
    let name = c.expect_ident()?;
    c.expect_sym(":")?;
    let domain = c.expect_ident()?;
    c.expect_sym("->")?;
    let codomain = codomain(c)?;
    let (mut total, mut role, mut computed) = (false, false, None);
    loop {
        if c.eat_kw("total") {
            total = true;
        } else if c.eat_kw("role") {
            role = true;
        } else if c.eat_kw("computed") {
            let (text, tok) = c.expect_text()?;
            computed = Some(super::parse_term_at(file, &text, tok.inner.0, tok.inner.1)?);
        } else {
            break;
        }
    }
    let end = c.expect_sym(";")?;
    Ok(Decl::Fun {
        name,
        domain,
        codomain,
        total,
        role,
        computed,
        span: span.to(&end),
    })
}

fn codomain(c: &mut Cursor) -> Result<RawCodomain, ParseError> {
    if c.at_sym("{") {
        return Ok(RawCodomain::Value(ValueType::Enum(literal_list(c)?)));
    }
    let (name, span) = c.expect_ident()?;
    let v = match name.as_str() {
        "ascii" => ValueType::Text {
            max_len: paren_u32(c)?,
        },
        "nat" => ValueType::Natural {
            max_digits: paren_u32(c)?,
        },
        "auto" => ValueType::Autonumber {
            card_exponent: paren_u32(c)?,
        },
        "int" => {
            c.expect_sym("[")?;
            let lo = bound(c)?;
            c.expect_sym(",")?;
            let hi = bound(c)?;
            c.expect_sym("]")?;
            ValueType::IntRange { lo, hi }
        }
        _ => return Ok(RawCodomain::Set((name, span))),
    };
    Ok(RawCodomain::Value(v))
}

fn paren_u32(c: &mut Cursor) -> Result<u32, ParseError> {
    c.expect_sym("(")?;
    let v = c.expect_int()?;
    let v = u32::try_from(v).map_err(|_| ParseError::new(c.prev_span(), format!("invalid size {v}")))?;
    c.expect_sym(")")?;
    Ok(v)
}

fn bound(c: &mut Cursor) -> Result<Bound, ParseError> {
    if c.eat_kw("currentYear") {
        c.expect_sym("(")?;
        c.expect_sym(")")?;
        return Ok(Bound::CurrentYear);
    }
    Ok(Bound::Int(c.expect_int()?))
}

fn literal(c: &mut Cursor) -> Result<Literal, ParseError> {
    if let Tok::Str(s) = c.peek().clone() {
        c.next();
        return Ok(Literal::Str(s));
    }
    Ok(Literal::Int(c.expect_int()?))
}

fn literal_list(c: &mut Cursor) -> Result<Vec<String>, ParseError> {
    c.expect_sym("{")?;
    let mut out = Vec::new();
    if c.eat_sym("}") {
        return Ok(out);
    }
    loop {
        match c.next() {
            Token {
                tok: Tok::Str(s), ..
            } => out.push(s),
            t => {
                return Err(ParseError::new(
                    t.span,
                    format!("expected a quoted literal, found {}", t.tok.describe()),
                ))
            }
        }
        if !c.eat_sym(",") {
            break;
        }
    }
    c.expect_sym("}")?;
    Ok(out)
}

fn opt_label(c: &mut Cursor) -> Option<Named> {
    if matches!(c.peek(), Tok::Ident(_)) && matches!(c.peek_at(1), Tok::Sym(":")) {
        let label = c.expect_ident().ok();
        c.next();
        return label;
    }
    None
}

fn mapping_ref(c: &mut Cursor) -> Result<RawRef, ParseError> {
    let (first, span) = c.expect_ident()?;
    if c.eat_sym(".") {
        let (name, end) = c.expect_ident()?;
        return Ok(RawRef {
            set: Some(first),
            name,
            span: span.to(&end),
        });
    }
    Ok(RawRef {
        set: None,
        name: first,
        span,
    })
}

fn constraint_kind(c: &mut Cursor, file: &str) -> Result<RawKind, ParseError> {
    let (kw, span) = c.expect_ident()?;
    let embedded = |c: &mut Cursor| -> Result<Formula, ParseError> {
        let (text, tok) = c.expect_text()?;
        super::parse_formula_at(file, &text, tok.inner.0, tok.inner.1)
    };
    Ok(match kw.as_str() {
        "tuple" => {
            let set = c.expect_ident()?;
            RawKind::Tuple {
                set,
                body: embedded(c)?,
            }
        }
        "object" => RawKind::Object(embedded(c)?),
        "null-reflexive" => {
            let outer = mapping_ref(c)?;
            c.expect_kw("o")?;
            let inner = mapping_ref(c)?;
            RawKind::NullReflexive { outer, inner }
        }
        "acyclic" => RawKind::Acyclic(mapping_ref(c)?),
        "existence" => {
            let f = mapping_ref(c)?;
            c.expect_sym("->")?;
            RawKind::Existence(f, mapping_ref(c)?)
        }
        "no-overlap" => {
            let set = c.expect_ident()?;
            c.expect_kw("distinct")?;
            let distinct = c.expect_ident()?;
            let mut group = Vec::new();
            if c.eat_kw("group") {
                group.push(c.expect_ident()?);
                while c.eat_sym(",") {
                    group.push(c.expect_ident()?);
                }
            }
            c.expect_kw("interval")?;
            let lo = c.expect_ident()?;
            c.expect_sym(",")?;
            let hi = c.expect_ident()?;
            RawKind::NoOverlap {
                set,
                distinct,
                group,
                lo,
                hi,
            }
        }
        other => {
            return Err(ParseError::new(
                span,
                format!(
                    "unknown constraint kind `{other}`; expected tuple, object, null-reflexive, acyclic, existence or no-overlap"
                ),
            ))
        }
    })
}

fn constraint_tail(
    c: &mut Cursor,
    label: Option<Named>,
    kind: RawKind,
    span: SourceSpan,
) -> Result<Decl, ParseError> {
    let description = match c.peek() {
        Tok::Text(_) => Some(c.expect_text()?.0),
        _ => None,
    };
    let mut messages = Vec::new();
    while c.eat_kw("message") {
        let table = match c.peek() {
            Tok::Ident(_) => Some(c.expect_ident()?.0),
            _ => None,
        };
        messages.push(MessageOverride {
            table,
            template: c.expect_text()?.0,
        });
    }
    let end = c.expect_sym(";")?;
    Ok(Decl::Constraint {
        label,
        kind,
        description,
        messages,
        span: span.to(&end),
    })
}

/// Label given to keys, ranges and defaults declared without one.
pub fn default_label(kind: &ConstraintKind) -> Option<String> {
    match kind {
        ConstraintKind::Key { set, mappings } => Some(key_label(set, mappings)),
        ConstraintKind::Range { mapping, .. } => Some(format!("{mapping}.range")),
        ConstraintKind::Default { mapping, .. } => Some(format!("{mapping}.default")),
        _ => None,
    }
}

/// Description given to keys, ranges and defaults declared without one.
pub fn default_description(kind: &ConstraintKind) -> String {
    match kind {
        ConstraintKind::Key { set, mappings } => {
            format!("{} must be unique in {set}", mappings.join(" . "))
        }
        ConstraintKind::Range { mapping, lo, hi } => {
            format!("{mapping} must lie within [{lo}, {hi}]")
        }
        ConstraintKind::Default { mapping, value } => format!("{mapping} defaults to {value}"),
        _ => String::new(),
    }
}

struct Resolver<'a> {
    file: &'a str,
    errors: &'a mut Vec<ParseError>,
    locations: HashMap<String, SourceSpan>,
}

impl Resolver<'_> {
    fn err(&mut self, span: &SourceSpan, message: impl Into<String>) {
        self.errors.push(ParseError::new(span.clone(), message));
    }
}

fn resolve(decls: Vec<Decl>, file: &str, errors: &mut Vec<ParseError>) -> MdmScheme {
    let mut r = Resolver {
        file,
        errors,
        locations: HashMap::new(),
    };
    let mut scheme = MdmScheme::default();
    let before = r.errors.len();

    let mut set_names = HashSet::new();
    for d in &decls {
        if let Decl::Set { set, span, .. } = d {
            if !set_names.insert(set.name.clone()) {
                r.err(span, format!("duplicate declaration of set {}", set.name));
                continue;
            }
            r.locations.insert(format!("set {}", set.name), span.clone());
        }
    }
    for d in &decls {
        if let Decl::Set {
            set,
            span,
            supersets,
        } = d
        {
            if scheme.set(&set.name).is_some() {
                continue;
            }
            for (s, sp) in set.supersets.iter().zip(supersets) {
                if !set_names.contains(s) {
                    r.err(sp, format!("unknown set {s}"));
                }
            }
            let _ = span;
            scheme.push_set(set.clone());
        }
    }

    let mut computed = Vec::new();
    for d in &decls {
        let Decl::Fun {
            name,
            domain,
            codomain,
            total,
            role,
            computed: term,
            span,
        } = d
        else {
            continue;
        };
        let mut ok = true;
        if !set_names.contains(&domain.0) {
            r.err(&domain.1, format!("unknown set {}", domain.0));
            ok = false;
        }
        if name.0 == OBJECT_ID {
            r.err(&name.1, "x is reserved for synthesized object identifiers");
            ok = false;
        }
        let loc = format!("function {}.{}", domain.0, name.0);
        if r.locations.contains_key(&loc) {
            r.err(span, format!("duplicate declaration of function {}.{}", domain.0, name.0));
            ok = false;
        }
        let (codomain, kind) = match codomain {
            RawCodomain::Set((s, sp)) => {
                if !set_names.contains(s) {
                    r.err(sp, format!("unknown set {s}"));
                    ok = false;
                }
                if term.is_some() {
                    r.err(span, "only value-typed functions can be computed");
                    ok = false;
                }
                let kind = if *role {
                    MappingKind::CanonicalProjection
                } else {
                    MappingKind::Structural
                };
                (Codomain::Set(s.clone()), kind)
            }
            RawCodomain::Value(v) => {
                if *role {
                    r.err(span, "roles must map into object sets");
                    ok = false;
                }
                let kind = if term.is_some() {
                    MappingKind::ComputedAttribute
                } else {
                    MappingKind::Attribute
                };
                (Codomain::Value(v.clone()), kind)
            }
        };
        if !ok {
            continue;
        }
        r.locations.insert(loc, span.clone());
        if let Some(t) = term {
            computed.push((domain.0.clone(), t.clone(), span.clone()));
        }
        scheme.mappings.push(Mapping {
            name: name.0.clone(),
            domain: domain.0.clone(),
            codomain,
            kind,
            total: *total || *role,
            compute: term.clone(),
        });
    }

    let mut constraints = Vec::new();
    {
        let idx = SchemeIndex::new(&scheme);
        for (set, t, span) in &computed {
            if let Err(e) = idx.type_of(t, &TypeEnv::with("x", set.as_str())) {
                r.err(span, e.to_string());
            }
        }
        let mut labels = HashSet::new();
        for d in decls {
            let Decl::Constraint {
                label,
                kind,
                description,
                messages,
                span,
            } = d
            else {
                continue;
            };
            let Some(kind) = resolve_kind(&mut r, &idx, kind, &span) else {
                continue;
            };
            let label = match label {
                Some((l, _)) => l,
                None => default_label(&kind).expect("only keys, ranges and defaults omit labels"),
            };
            if !labels.insert(label.clone()) {
                r.err(&span, format!("duplicate constraint label {label}"));
                continue;
            }
            r.locations.insert(format!("constraint {label}"), span.clone());
            let description = description.unwrap_or_else(|| default_description(&kind));
            constraints.push(Constraint {
                label,
                kind,
                description,
                messages,
            });
        }
    }
    scheme.constraints = constraints;

    if r.errors.len() == before {
        for d in validate_scheme(&scheme) {
            if d.severity != Severity::Error {
                continue;
            }
            let span = r
                .locations
                .get(&d.location)
                .cloned()
                .unwrap_or_else(|| SourceSpan::point(r.file, 1, 1));
            r.err(&span, format!("{}: {}", d.location, d.message));
        }
    }
    scheme
}

fn resolve_kind(
    r: &mut Resolver<'_>,
    idx: &SchemeIndex<'_>,
    kind: RawKind,
    span: &SourceSpan,
) -> Option<ConstraintKind> {
    let known_set = |r: &mut Resolver<'_>, (s, sp): &Named| -> bool {
        if idx.set(s).is_none() {
            r.err(sp, format!("unknown set {s}"));
            return false;
        }
        true
    };
    let on_set = |r: &mut Resolver<'_>, set: &str, (m, sp): &Named| -> bool {
        if idx.mapping(set, m).is_none() {
            r.err(sp, format!("unknown function {set}.{m}"));
            return false;
        }
        true
    };
    match kind {
        RawKind::Key { set, mappings } => {
            if !known_set(r, &set) {
                return None;
            }
            // every mapping is resolved so each one gets its diagnostic
            let unresolved = mappings.iter().filter(|m| !on_set(r, &set.0, m)).count();
            let ok = unresolved == 0;
            ok.then(|| ConstraintKind::Key {
                set: set.0,
                mappings: mappings.into_iter().map(|m| m.0).collect(),
            })
        }
        RawKind::Range { target, lo, hi } => Some(ConstraintKind::Range {
            mapping: unique_ref(r, idx, &target)?,
            lo,
            hi,
        }),
        RawKind::Default { target, value } => Some(ConstraintKind::Default {
            mapping: unique_ref(r, idx, &target)?,
            value,
        }),
        RawKind::Tuple { set, body } => {
            if !known_set(r, &set) {
                return None;
            }
            let extra: Vec<_> = body.free_vars().into_iter().filter(|v| v != "x").collect();
            if let Some(v) = extra.first() {
                r.err(span, format!("formula is not closed: free variable {v}"));
                return None;
            }
            if let Err(e) = idx.check_formula(&body, &TypeEnv::with("x", set.0.as_str())) {
                r.err(span, e.to_string());
                return None;
            }
            Some(ConstraintKind::Tuple {
                set: set.0,
                var: "x".to_string(),
                body,
            })
        }
        RawKind::Object(f) => {
            if let Err(e) = idx.check_closed(&f) {
                r.err(span, e.to_string());
                return None;
            }
            Some(ConstraintKind::ObjectFormula(f))
        }
        RawKind::NullReflexive { outer, inner } => {
            let outers = candidates(r, idx, &outer)?;
            let inners = candidates(r, idx, &inner)?;
            let pairs: Vec<_> = outers
                .iter()
                .flat_map(|o| inners.iter().map(move |i| (o, i)))
                .filter(|(o, i)| {
                    i.codomain_set() == Some(o.domain.as_str())
                        && o.codomain_set() == Some(i.domain.as_str())
                })
                .collect();
            match pairs.as_slice() {
                [(o, i)] => Some(ConstraintKind::NullReflexive {
                    outer: o.reference(),
                    inner: i.reference(),
                }),
                [] => {
                    r.err(
                        span,
                        format!("{} o {} does not compose into an endomap", outer.name, inner.name),
                    );
                    None
                }
                _ => {
                    r.err(span, "ambiguous null-reflexive composition; qualify the functions");
                    None
                }
            }
        }
        RawKind::Acyclic(f) => Some(ConstraintKind::Acyclic(unique_ref(r, idx, &f)?)),
        RawKind::Existence(f, g) => {
            let f = unique_ref(r, idx, &f);
            let g = unique_ref(r, idx, &g);
            Some(ConstraintKind::Existence {
                if_mapping: f?,
                then_mapping: g?,
            })
        }
        RawKind::NoOverlap {
            set,
            distinct,
            group,
            lo,
            hi,
        } => {
            if !known_set(r, &set) {
                return None;
            }
            let mut ok = true;
            for m in std::iter::once(&distinct).chain(&group).chain([&lo, &hi]) {
                ok &= on_set(r, &set.0, m);
            }
            ok.then(|| ConstraintKind::NoOverlap {
                set: set.0,
                distinct: distinct.0,
                group: group.into_iter().map(|g| g.0).collect(),
                lo: lo.0,
                hi: hi.0,
            })
        }
    }
}

fn candidates<'a>(
    r: &mut Resolver<'_>,
    idx: &SchemeIndex<'a>,
    f: &RawRef,
) -> Option<Vec<&'a Mapping>> {
    let found: Vec<&Mapping> = match &f.set {
        Some(s) => idx.mapping(s, &f.name).into_iter().collect(),
        None => idx
            .mappings_named(&f.name)
            .filter(|m| !m.kind.is_synthesized())
            .collect(),
    };
    if found.is_empty() {
        let shown = match &f.set {
            Some(s) => format!("{s}.{}", f.name),
            None => f.name.clone(),
        };
        r.err(&f.span, format!("unknown function {shown}"));
        return None;
    }
    Some(found)
}

fn unique_ref(r: &mut Resolver<'_>, idx: &SchemeIndex<'_>, f: &RawRef) -> Option<MappingRef> {
    let found = candidates(r, idx, f)?;
    if let [m] = found.as_slice() {
        return Some(m.reference());
    }
    let domains: Vec<_> = found.iter().map(|m| m.domain.as_str()).collect();
    r.err(
        &f.span,
        format!(
            "ambiguous function {} (defined on {}); qualify it as SET.{}",
            f.name,
            domains.join(", "),
            f.name
        ),
    );
    None
}
