//! (E)MDM domain model: object sets, mappings, constraints, and the
//! relational IR produced by translation.

mod formula;
mod relational;
mod typing;
mod validate;

pub use formula::{CmpOp, Formula, Literal, Term};
pub use relational::{
    Check, CheckKind, Column, ColumnType, ConstraintTally, DefaultValue, ForeignKey, NotNull,
    PrimaryKey, RelationalSchema, Table, TranslationReport, UniqueKey, View,
};
pub use typing::{SchemeIndex, Ty, TypeError, TypeEnv};
pub use validate::{validate_scheme, Diagnostic, Severity};

use std::fmt;

/// Name of the synthesized object identifier of every non-view set.
pub const OBJECT_ID: &str = "x";

/// Largest `auto(k)` exponent whose surrogate range fits a signed 64-bit integer.
pub const MAX_CARD_EXPONENT: u32 = 18;

/// A bound of an integer range: either static or the current year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Int(i64),
    CurrentYear,
}

impl Bound {
    pub fn resolve(self, current_year: i64) -> i64 {
        match self {
            Bound::Int(v) => v,
            Bound::CurrentYear => current_year,
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Bound::CurrentYear)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Int(v) => write!(f, "{v}"),
            Bound::CurrentYear => f.write_str("currentYear()"),
        }
    }
}

/// Value codomain of an attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueType {
    /// `ascii(n)`: text of at most `max_len` characters.
    Text { max_len: u32 },
    /// `nat(k)`: naturals with at most `max_digits` decimal digits.
    Natural { max_digits: u32 },
    /// `int[lo, hi]`.
    IntRange { lo: Bound, hi: Bound },
    /// `{ 'a', 'b' }`: enumerated string literals, kept as literals.
    Enum(Vec<String>),
    /// `auto(k)`: surrogate values in `[1, 10^k - 1]`.
    Autonumber { card_exponent: u32 },
}

impl ValueType {
    pub fn is_integer(&self) -> bool {
        matches!(
            self,
            ValueType::Natural { .. } | ValueType::IntRange { .. } | ValueType::Autonumber { .. }
        )
    }

    pub fn uses_current_year(&self) -> bool {
        matches!(self, ValueType::IntRange { lo, hi } if lo.is_dynamic() || hi.is_dynamic())
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Text { max_len } => write!(f, "ascii({max_len})"),
            ValueType::Natural { max_digits } => write!(f, "nat({max_digits})"),
            ValueType::IntRange { lo, hi } => write!(f, "int[{lo}, {hi}]"),
            ValueType::Enum(values) => {
                f.write_str("{ ")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", Literal::Str(v.clone()))?;
                }
                f.write_str(" }")
            }
            ValueType::Autonumber { card_exponent } => write!(f, "auto({card_exponent})"),
        }
    }
}

/// `10^k - 1`, the largest surrogate of a set declared `auto(k)`.
pub fn max_surrogate(card_exponent: u32) -> i64 {
    10i64
        .checked_pow(card_exponent.min(MAX_CARD_EXPONENT))
        .map(|v| v - 1)
        .unwrap_or(i64::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetKind {
    Entity,
    Relationship,
    StaticEnum,
    ComputedView,
}

impl SetKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SetKind::Entity => "entity",
            SetKind::Relationship => "relationship",
            SetKind::StaticEnum => "static",
            SetKind::ComputedView => "computed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectSet {
    pub name: String,
    pub kind: SetKind,
    pub card_exponent: u32,
    /// Declared set inclusions, first one being the primary superset.
    pub supersets: Vec<String>,
    /// Query text of a computed set.
    pub view_body: Option<String>,
    /// Values of a static set, in declaration order.
    pub static_values: Vec<String>,
}

impl ObjectSet {
    pub fn new(name: impl Into<String>, kind: SetKind, card_exponent: u32) -> Self {
        ObjectSet {
            name: name.into(),
            kind,
            card_exponent,
            supersets: Vec::new(),
            view_body: None,
            static_values: Vec::new(),
        }
    }

    pub fn is_view(&self) -> bool {
        self.kind == SetKind::ComputedView
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Codomain {
    Set(String),
    Value(ValueType),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingKind {
    ObjectIdentifier,
    Attribute,
    Structural,
    CanonicalProjection,
    CanonicalInclusion,
    ComputedAttribute,
}

impl MappingKind {
    /// Attributes in the counting sense: object identifiers, plain and computed attributes.
    pub fn is_attribute_like(self) -> bool {
        matches!(
            self,
            MappingKind::ObjectIdentifier | MappingKind::Attribute | MappingKind::ComputedAttribute
        )
    }

    /// Functions between object sets.
    pub fn is_set_valued(self) -> bool {
        matches!(
            self,
            MappingKind::Structural
                | MappingKind::CanonicalProjection
                | MappingKind::CanonicalInclusion
        )
    }

    pub fn is_synthesized(self) -> bool {
        matches!(
            self,
            MappingKind::ObjectIdentifier | MappingKind::CanonicalInclusion
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    pub name: String,
    pub domain: String,
    pub codomain: Codomain,
    pub kind: MappingKind,
    pub total: bool,
    /// Defining term of a computed attribute; the variable `x` denotes the argument.
    pub compute: Option<Term>,
}

impl Mapping {
    pub fn reference(&self) -> MappingRef {
        MappingRef::new(&self.domain, &self.name)
    }

    pub fn codomain_set(&self) -> Option<&str> {
        match &self.codomain {
            Codomain::Set(s) => Some(s),
            Codomain::Value(_) => None,
        }
    }

    pub fn value_type(&self) -> Option<&ValueType> {
        match &self.codomain {
            Codomain::Value(v) => Some(v),
            Codomain::Set(_) => None,
        }
    }
}

/// A mapping qualified by its domain set; names are only unique per domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MappingRef {
    pub set: String,
    pub name: String,
}

impl MappingRef {
    pub fn new(set: impl Into<String>, name: impl Into<String>) -> Self {
        MappingRef {
            set: set.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for MappingRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.set, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintKind {
    Totality(MappingRef),
    Key {
        set: String,
        mappings: Vec<String>,
    },
    Range {
        mapping: MappingRef,
        lo: Bound,
        hi: Bound,
    },
    Default {
        mapping: MappingRef,
        value: Literal,
    },
    /// Row-local formula over `set` with the single universally quantified variable `var`.
    Tuple {
        set: String,
        var: String,
        body: Formula,
    },
    /// `outer ° inner` null-reflexive: `inner: A -> B`, `outer: B -> A`.
    NullReflexive {
        outer: MappingRef,
        inner: MappingRef,
    },
    Acyclic(MappingRef),
    /// `if_mapping |— then_mapping`.
    Existence {
        if_mapping: MappingRef,
        then_mapping: MappingRef,
    },
    /// Rows sharing `group` with overlapping `[lo, hi]` intervals must differ on `distinct`.
    NoOverlap {
        set: String,
        distinct: String,
        group: Vec<String>,
        lo: String,
        hi: String,
    },
    ObjectFormula(Formula),
    /// Codomain (data type and range) of an attribute or object identifier. Implicit.
    Domain(MappingRef),
    /// Referential integrity of a function between object sets. Implicit.
    Referential(MappingRef),
}

impl ConstraintKind {
    pub fn is_implicit(&self) -> bool {
        matches!(
            self,
            ConstraintKind::Domain(_) | ConstraintKind::Referential(_)
        )
    }
}

/// Per-table override of the message template rendered for a violated constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageOverride {
    pub table: Option<String>,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub kind: ConstraintKind,
    pub description: String,
    pub messages: Vec<MessageOverride>,
}

impl Constraint {
    pub fn new(label: impl Into<String>, kind: ConstraintKind, description: impl Into<String>) -> Self {
        Constraint {
            label: label.into(),
            kind,
            description: description.into(),
            messages: Vec::new(),
        }
    }

    /// Message template for entries hosted on `table`, if overridden.
    pub fn message_for(&self, table: &str) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.table.as_deref() == Some(table))
            .or_else(|| self.messages.iter().find(|m| m.table.is_none()))
            .map(|m| m.template.as_str())
    }

    /// The constraint as a closed first-order formula, where one exists.
    ///
    /// Acyclicity is not first-order expressible and yields `None`, as do the
    /// purely structural kinds (keys, domains, references, defaults).
    pub fn to_formula(&self) -> Option<Formula> {
        match &self.kind {
            ConstraintKind::Tuple { set, var, body } => Some(Formula::Forall {
                vars: vec![var.clone()],
                set: set.clone(),
                body: Box::new(body.clone()),
            }),
            ConstraintKind::ObjectFormula(f) => Some(f.clone()),
            ConstraintKind::Existence {
                if_mapping,
                then_mapping,
            } => {
                let x = || Box::new(Term::Var("x".into()));
                Some(Formula::Forall {
                    vars: vec!["x".into()],
                    set: if_mapping.set.clone(),
                    body: Box::new(Formula::Implies(
                        Box::new(Formula::Not(Box::new(Formula::IsNull(Term::Apply {
                            func: if_mapping.name.clone(),
                            arg: x(),
                        })))),
                        Box::new(Formula::Not(Box::new(Formula::IsNull(Term::Apply {
                            func: then_mapping.name.clone(),
                            arg: x(),
                        })))),
                    )),
                })
            }
            ConstraintKind::NullReflexive { outer, inner } => {
                let inner_x = Term::Apply {
                    func: inner.name.clone(),
                    arg: Box::new(Term::Var("x".into())),
                };
                Some(Formula::Forall {
                    vars: vec!["x".into()],
                    set: inner.set.clone(),
                    body: Box::new(Formula::Implies(
                        Box::new(Formula::Not(Box::new(Formula::IsNull(inner_x.clone())))),
                        Box::new(Formula::Compare {
                            op: CmpOp::Eq,
                            lhs: Term::Apply {
                                func: outer.name.clone(),
                                arg: Box::new(inner_x),
                            },
                            rhs: Term::Var("x".into()),
                        }),
                    )),
                })
            }
            ConstraintKind::NoOverlap {
                set,
                distinct,
                group,
                lo,
                hi,
            } => Some(no_overlap_formula(set, distinct, group, lo, hi)),
            ConstraintKind::Range { mapping, lo, hi } => {
                let t = Term::Apply {
                    func: mapping.name.clone(),
                    arg: Box::new(Term::Var("x".into())),
                };
                Some(Formula::Forall {
                    vars: vec!["x".into()],
                    set: mapping.set.clone(),
                    body: Box::new(Formula::And(
                        Box::new(Formula::Compare {
                            op: CmpOp::Le,
                            lhs: bound_term(*lo),
                            rhs: t.clone(),
                        }),
                        Box::new(Formula::Compare {
                            op: CmpOp::Le,
                            lhs: t,
                            rhs: bound_term(*hi),
                        }),
                    )),
                })
            }
            _ => None,
        }
    }
}

fn bound_term(b: Bound) -> Term {
    match b {
        Bound::Int(v) => Term::Lit(Literal::Int(v)),
        Bound::CurrentYear => Term::CurrentYear,
    }
}

/// FOPC expansion of the no-overlap macro:
///
/// `forall x, y in S: x <> y and G(x) = G(y) and ... and (overlap) implies D(x) <> D(y)`
/// where intervals are `[lo, isNull(hi, currentYear())]`.
pub fn no_overlap_formula(set: &str, distinct: &str, group: &[String], lo: &str, hi: &str) -> Formula {
    let app = |f: &str, v: &str| Term::Apply {
        func: f.to_string(),
        arg: Box::new(Term::Var(v.to_string())),
    };
    let cmp = |op, lhs, rhs| Formula::Compare { op, lhs, rhs };
    let and = |a, b| Formula::And(Box::new(a), Box::new(b));
    let starts_within = |a: &str, b: &str| {
        and(
            cmp(CmpOp::Ge, app(lo, a), app(lo, b)),
            cmp(
                CmpOp::Le,
                app(lo, a),
                Term::Coalesce(Box::new(app(hi, b)), Box::new(Term::CurrentYear)),
            ),
        )
    };
    let overlap = Formula::Or(Box::new(starts_within("y", "x")), Box::new(starts_within("x", "y")));
    let mut antecedent = cmp(CmpOp::Ne, Term::Var("x".into()), Term::Var("y".into()));
    for g in group {
        antecedent = and(antecedent, cmp(CmpOp::Eq, app(g, "x"), app(g, "y")));
    }
    antecedent = and(antecedent, overlap);
    Formula::Forall {
        vars: vec!["x".into(), "y".into()],
        set: set.to_string(),
        body: Box::new(Formula::Implies(
            Box::new(antecedent),
            Box::new(cmp(CmpOp::Ne, app(distinct, "x"), app(distinct, "y"))),
        )),
    }
}

/// An (E)MDM scheme: the translator's input.
///
/// `mappings` holds declared and synthesized functions (object identifiers
/// and canonical inclusions); `constraints` holds declared constraints only.
/// Implicit constraints come from [`MdmScheme::expanded_constraints`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MdmScheme {
    pub sets: Vec<ObjectSet>,
    pub mappings: Vec<Mapping>,
    pub constraints: Vec<Constraint>,
}

impl MdmScheme {
    pub fn set(&self, name: &str) -> Option<&ObjectSet> {
        self.sets.iter().find(|s| s.name == name)
    }

    /// Adds a set together with its synthesized object identifier and
    /// canonical inclusion functions.
    pub fn push_set(&mut self, set: ObjectSet) {
        if !set.is_view() {
            self.mappings.push(Mapping {
                name: OBJECT_ID.to_string(),
                domain: set.name.clone(),
                codomain: Codomain::Value(ValueType::Autonumber {
                    card_exponent: set.card_exponent,
                }),
                kind: MappingKind::ObjectIdentifier,
                total: true,
                compute: None,
            });
        }
        for sup in &set.supersets {
            self.mappings.push(Mapping {
                name: inclusion_name(sup),
                domain: set.name.clone(),
                codomain: Codomain::Set(sup.clone()),
                kind: MappingKind::CanonicalInclusion,
                total: true,
                compute: None,
            });
        }
        self.sets.push(set);
    }

    /// Whether a static set is realized as a numerically coded value domain
    /// rather than a table: static, attribute-free, and non-referencing.
    pub fn is_coded(&self, set: &ObjectSet) -> bool {
        set.kind == SetKind::StaticEnum
            && !self.mappings.iter().any(|m| {
                m.domain == set.name
                    && m.kind != MappingKind::ObjectIdentifier
            })
    }

    /// Declared constraints plus the implicit ones induced by identifiers,
    /// codomains, totality flags, and set-valued functions.
    ///
    /// Order: per set in declaration order, the identifier's key, domain and
    /// totality; then per mapping in declaration order its domain or
    /// reference and totality; then declared constraints.
    pub fn expanded_constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        for set in &self.sets {
            if set.is_view() || self.is_coded(set) {
                continue;
            }
            let x = MappingRef::new(&set.name, OBJECT_ID);
            out.push(Constraint::new(
                format!("{}.pk", set.name),
                ConstraintKind::Key {
                    set: set.name.clone(),
                    mappings: vec![OBJECT_ID.to_string()],
                },
                format!("primary key of {}", set.name),
            ));
            out.push(Constraint::new(
                format!("{}.x.domain", set.name),
                ConstraintKind::Domain(x.clone()),
                format!("surrogate range of {}.x", set.name),
            ));
            out.push(Constraint::new(
                format!("{}.x.notnull", set.name),
                ConstraintKind::Totality(x),
                format!("{}.x is mandatory", set.name),
            ));
        }
        for m in &self.mappings {
            if m.kind == MappingKind::ObjectIdentifier {
                continue;
            }
            let Some(domain) = self.set(&m.domain) else {
                continue;
            };
            if domain.is_view() {
                continue;
            }
            let r = m.reference();
            let primary_inclusion = m.kind == MappingKind::CanonicalInclusion
                && domain.supersets.first().map(|s| inclusion_name(s)) == Some(m.name.clone());
            match m.kind {
                MappingKind::Attribute | MappingKind::ComputedAttribute => {
                    out.push(Constraint::new(
                        format!("{r}.domain"),
                        ConstraintKind::Domain(r.clone()),
                        format!("domain of {r}"),
                    ));
                }
                _ => {
                    out.push(Constraint::new(
                        format!("{r}.fk"),
                        ConstraintKind::Referential(r.clone()),
                        format!("reference {r} -> {}", m.codomain_set().unwrap_or("?")),
                    ));
                }
            }
            let forced_total = m.kind == MappingKind::CanonicalProjection
                || (m.kind == MappingKind::CanonicalInclusion && !primary_inclusion);
            if m.total || forced_total {
                if primary_inclusion {
                    // realized by the identifier column itself
                    continue;
                }
                out.push(Constraint::new(
                    format!("{r}.notnull"),
                    ConstraintKind::Totality(r.clone()),
                    format!("{r} is mandatory"),
                ));
            }
            if m.kind == MappingKind::CanonicalInclusion && !primary_inclusion {
                out.push(Constraint::new(
                    format!("{}.key({})", m.domain, m.name),
                    ConstraintKind::Key {
                        set: m.domain.clone(),
                        mappings: vec![m.name.clone()],
                    },
                    format!("{r} is one-to-one"),
                ));
            }
        }
        out.extend(self.constraints.iter().cloned());
        out
    }
}

/// Name of the synthesized canonical inclusion into `superset`.
pub fn inclusion_name(superset: &str) -> String {
    format!("x{superset}")
}

/// Default label of a declared key.
pub fn key_label(set: &str, mappings: &[String]) -> String {
    format!("{set}.key({})", mappings.join("."))
}
