//! Name resolution and type checking of formulas against a scheme.

use std::collections::HashMap;

use super::{Codomain, Formula, Literal, Mapping, MdmScheme, ObjectSet, Term, ValueType};

/// Hash-indexed view of a scheme, built once per pass so lookups stay O(1).
pub struct SchemeIndex<'a> {
    pub scheme: &'a MdmScheme,
    sets: HashMap<&'a str, usize>,
    mappings: HashMap<(&'a str, &'a str), usize>,
    by_domain: HashMap<&'a str, Vec<usize>>,
}

impl<'a> SchemeIndex<'a> {
    pub fn new(scheme: &'a MdmScheme) -> Self {
        let mut sets = HashMap::with_capacity(scheme.sets.len());
        for (i, s) in scheme.sets.iter().enumerate() {
            sets.entry(s.name.as_str()).or_insert(i);
        }
        let mut mappings = HashMap::with_capacity(scheme.mappings.len());
        let mut by_domain: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, m) in scheme.mappings.iter().enumerate() {
            mappings.entry((m.domain.as_str(), m.name.as_str())).or_insert(i);
            by_domain.entry(m.domain.as_str()).or_default().push(i);
        }
        SchemeIndex {
            scheme,
            sets,
            mappings,
            by_domain,
        }
    }

    pub fn set(&self, name: &str) -> Option<&'a ObjectSet> {
        self.sets.get(name).map(|&i| &self.scheme.sets[i])
    }

    pub fn set_position(&self, name: &str) -> Option<usize> {
        self.sets.get(name).copied()
    }

    pub fn mapping(&self, set: &str, name: &str) -> Option<&'a Mapping> {
        self.mappings.get(&(set, name)).map(|&i| &self.scheme.mappings[i])
    }

    /// Mappings defined on `set`, in declaration order.
    pub fn mappings_on(&self, set: &str) -> impl Iterator<Item = &'a Mapping> + '_ {
        self.by_domain
            .get(set)
            .into_iter()
            .flatten()
            .map(|&i| &self.scheme.mappings[i])
    }

    /// All mappings named `name`, across domains.
    pub fn mappings_named<'b>(&'b self, name: &'b str) -> impl Iterator<Item = &'a Mapping> + 'b {
        self.scheme.mappings.iter().filter(move |m| m.name == name)
    }

    pub fn is_coded(&self, set: &str) -> bool {
        self.set(set).is_some_and(|s| {
            s.kind == super::SetKind::StaticEnum
                && self
                    .mappings_on(set)
                    .all(|m| m.kind == super::MappingKind::ObjectIdentifier)
        })
    }
}

/// Static type of a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    /// Object (surrogate) of a set.
    Object(String),
    Int,
    Str,
    /// Type of a null-only term; unifies with anything.
    Any,
}

impl Ty {
    pub fn of_value_type(v: &ValueType) -> Ty {
        match v {
            ValueType::Text { .. } | ValueType::Enum(_) => Ty::Str,
            ValueType::Natural { .. } | ValueType::IntRange { .. } | ValueType::Autonumber { .. } => {
                Ty::Int
            }
        }
    }

    fn of_codomain(c: &Codomain) -> Ty {
        match c {
            Codomain::Set(s) => Ty::Object(s.clone()),
            Codomain::Value(v) => Ty::of_value_type(v),
        }
    }

    fn unify(&self, other: &Ty) -> Option<Ty> {
        match (self, other) {
            (Ty::Any, t) | (t, Ty::Any) => Some(t.clone()),
            (a, b) if a == b => Some(a.clone()),
            _ => None,
        }
    }
}

impl std::fmt::Display for Ty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ty::Object(s) => write!(f, "object of {s}"),
            Ty::Int => f.write_str("integer"),
            Ty::Str => f.write_str("string"),
            Ty::Any => f.write_str("any"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("unknown set {0}")]
    UnknownSet(String),
    #[error("{func} is not defined on {set}{}", hint_domains(.domains))]
    NotDefinedOn {
        func: String,
        set: String,
        domains: Vec<String>,
    },
    #[error("{func} applied to a {found}, expected an object")]
    NotAnObject { func: String, found: Ty },
    #[error("type mismatch: {lhs} vs {rhs}")]
    Mismatch { lhs: Ty, rhs: Ty },
    #[error("arithmetic on {0}")]
    NotNumeric(Ty),
    #[error("formula is not closed: free variable {0}")]
    NotClosed(String),
}

fn hint_domains(domains: &[String]) -> String {
    if domains.is_empty() {
        String::new()
    } else {
        format!(" (its domain is {})", domains.join(", "))
    }
}

/// Variable environment: innermost binding last.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    vars: Vec<(String, String)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn with(var: impl Into<String>, set: impl Into<String>) -> Self {
        TypeEnv {
            vars: vec![(var.into(), set.into())],
        }
    }

    pub fn lookup(&self, var: &str) -> Option<&str> {
        self.vars
            .iter()
            .rev()
            .find(|(v, _)| v == var)
            .map(|(_, s)| s.as_str())
    }
}

impl SchemeIndex<'_> {
    pub fn type_of(&self, term: &Term, env: &TypeEnv) -> Result<Ty, TypeError> {
        self.type_of_with(term, env, &mut |_| {})
    }

    /// Types `term`, reporting every mapping application to `used`.
    pub fn type_of_with(
        &self,
        term: &Term,
        env: &TypeEnv,
        used: &mut dyn FnMut(&Mapping),
    ) -> Result<Ty, TypeError> {
        match term {
            Term::Var(v) => env
                .lookup(v)
                .map(|s| Ty::Object(s.to_string()))
                .ok_or_else(|| TypeError::UnboundVariable(v.clone())),
            Term::Apply { func, arg } => match self.type_of_with(arg, env, used)? {
                Ty::Object(set) => match self.mapping(&set, func) {
                    Some(m) => {
                        used(m);
                        Ok(Ty::of_codomain(&m.codomain))
                    }
                    None => Err(TypeError::NotDefinedOn {
                        func: func.clone(),
                        set,
                        domains: self.mappings_named(func).map(|m| m.domain.clone()).collect(),
                    }),
                },
                found => Err(TypeError::NotAnObject {
                    func: func.clone(),
                    found,
                }),
            },
            Term::Lit(Literal::Int(_)) | Term::CurrentYear => Ok(Ty::Int),
            Term::Lit(Literal::Str(_)) => Ok(Ty::Str),
            Term::Add(a, b) | Term::Sub(a, b) => {
                for t in [a, b] {
                    let ty = self.type_of_with(t, env, used)?;
                    if ty != Ty::Int {
                        return Err(TypeError::NotNumeric(ty));
                    }
                }
                Ok(Ty::Int)
            }
            Term::Coalesce(a, b) => {
                let ta = self.type_of_with(a, env, used)?;
                let tb = self.type_of_with(b, env, used)?;
                ta.unify(&tb)
                    .ok_or(TypeError::Mismatch { lhs: ta, rhs: tb })
            }
        }
    }

    /// Checks that `formula` is well typed under `env`.
    pub fn check_formula(&self, formula: &Formula, env: &TypeEnv) -> Result<(), TypeError> {
        self.check_formula_with(formula, env, &mut |_| {})
    }

    pub fn check_formula_with(
        &self,
        formula: &Formula,
        env: &TypeEnv,
        used: &mut dyn FnMut(&Mapping),
    ) -> Result<(), TypeError> {
        match formula {
            Formula::Forall { vars, set, body } | Formula::Exists { vars, set, body } => {
                if self.set(set).is_none() {
                    return Err(TypeError::UnknownSet(set.clone()));
                }
                let mut inner = env.clone();
                inner
                    .vars
                    .extend(vars.iter().map(|v| (v.clone(), set.clone())));
                self.check_formula_with(body, &inner, used)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                self.check_formula_with(a, env, used)?;
                self.check_formula_with(b, env, used)
            }
            Formula::Not(a) => self.check_formula_with(a, env, used),
            Formula::Compare { lhs, rhs, .. } => {
                let tl = self.type_of_with(lhs, env, used)?;
                let tr = self.type_of_with(rhs, env, used)?;
                tl.unify(&tr)
                    .map(|_| ())
                    .ok_or(TypeError::Mismatch { lhs: tl, rhs: tr })
            }
            Formula::IsNull(t) => self.type_of_with(t, env, used).map(|_| ()),
        }
    }

    /// Type checks a closed formula.
    pub fn check_closed(&self, formula: &Formula) -> Result<(), TypeError> {
        if let Some(v) = formula.free_vars().into_iter().next() {
            return Err(TypeError::NotClosed(v));
        }
        self.check_formula(formula, &TypeEnv::new())
    }
}
