//! Three-valued evaluation of terms and formulas over an instance.

use std::cmp::Ordering;

use serde::Serialize;

use super::{Cell, Checker, Instance, Value};
use crate::model::{CmpOp, Formula, Literal, Term};

/// Kleene's strong three-valued truth values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    pub fn implies(self, other: Verdict) -> Verdict {
        self.not().or(other)
    }

    fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Obj {
    /// Position of the set in the scheme.
    pub set: usize,
    pub x: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tv<'v> {
    Null,
    Int(i64),
    Str(&'v str),
    Obj(Obj),
}

impl Tv<'_> {
    pub fn into_cell(self) -> Cell {
        match self {
            Tv::Null => None,
            Tv::Int(v) => Some(Value::Int(v)),
            Tv::Str(s) => Some(Value::Str(s.to_string())),
            Tv::Obj(o) => Some(Value::Int(o.x)),
        }
    }
}

pub(crate) type Env<'v> = Vec<(&'v str, Obj)>;

fn lookup(env: &[(&str, Obj)], var: &str) -> Option<Obj> {
    env.iter().rev().find(|(v, _)| *v == var).map(|(_, o)| *o)
}

impl Checker<'_> {
    /// Evaluates `formula` with free variables bound as `(variable, set, x)`.
    pub fn eval_formula(&self, inst: &Instance, formula: &Formula, bindings: &[(&str, &str, i64)]) -> Verdict {
        let mut env: Env = bindings
            .iter()
            .filter_map(|(v, s, x)| Some((*v, Obj { set: self.idx.set_position(s)?, x: *x })))
            .collect();
        self.eval(inst, formula, &mut env)
    }

    /// Object ids of a set: table rows, or the codes of a coded static set.
    pub(crate) fn members(&self, inst: &Instance, set: usize) -> Vec<i64> {
        match self.set_table[set] {
            Some(t) => inst.tables[t].rows.keys().copied().collect(),
            None if self.scheme.is_coded(&self.scheme.sets[set]) => {
                (1..=self.scheme.sets[set].static_values.len() as i64).collect()
            }
            None => Vec::new(),
        }
    }

    pub(crate) fn eval<'v>(&self, inst: &'v Instance, f: &'v Formula, env: &mut Env<'v>) -> Verdict {
        match f {
            Formula::Forall { vars, set, body } | Formula::Exists { vars, set, body } => {
                let Some(pos) = self.idx.set_position(set) else {
                    return Verdict::Unknown;
                };
                let members = self.members(inst, pos);
                let universal = matches!(f, Formula::Forall { .. });
                self.quantify(inst, vars, pos, &members, body, env, universal)
            }
            Formula::And(a, b) => {
                let l = self.eval(inst, a, env);
                if l == Verdict::False {
                    return l;
                }
                l.and(self.eval(inst, b, env))
            }
            Formula::Or(a, b) => {
                let l = self.eval(inst, a, env);
                if l == Verdict::True {
                    return l;
                }
                l.or(self.eval(inst, b, env))
            }
            Formula::Implies(a, b) => {
                let l = self.eval(inst, a, env);
                if l == Verdict::False {
                    return Verdict::True;
                }
                l.implies(self.eval(inst, b, env))
            }
            Formula::Not(a) => self.eval(inst, a, env).not(),
            Formula::IsNull(t) => Verdict::from_bool(self.eval_term(inst, t, env) == Tv::Null),
            Formula::Compare { op, lhs, rhs } => {
                compare(*op, self.eval_term(inst, lhs, env), self.eval_term(inst, rhs, env))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn quantify<'v>(
        &self,
        inst: &'v Instance,
        vars: &'v [String],
        set: usize,
        members: &[i64],
        body: &'v Formula,
        env: &mut Env<'v>,
        universal: bool,
    ) -> Verdict {
        let Some((var, rest)) = vars.split_first() else {
            return self.eval(inst, body, env);
        };
        let mut acc = if universal { Verdict::True } else { Verdict::False };
        for &x in members {
            env.push((var, Obj { set, x }));
            let v = self.quantify(inst, rest, set, members, body, env, universal);
            env.pop();
            acc = if universal { acc.and(v) } else { acc.or(v) };
            if (universal && acc == Verdict::False) || (!universal && acc == Verdict::True) {
                break;
            }
        }
        acc
    }

    pub(crate) fn eval_term<'v>(&self, inst: &'v Instance, t: &'v Term, env: &[(&str, Obj)]) -> Tv<'v> {
        match t {
            Term::Var(v) => lookup(env, v).map_or(Tv::Null, Tv::Obj),
            Term::Lit(Literal::Int(v)) => Tv::Int(*v),
            Term::Lit(Literal::Str(s)) => Tv::Str(s),
            Term::CurrentYear => Tv::Int(inst.current_year),
            Term::Coalesce(a, b) => match self.eval_term(inst, a, env) {
                Tv::Null => self.eval_term(inst, b, env),
                v => v,
            },
            Term::Add(a, b) | Term::Sub(a, b) => {
                match (self.eval_term(inst, a, env), self.eval_term(inst, b, env)) {
                    (Tv::Int(l), Tv::Int(r)) => {
                        let v = if matches!(t, Term::Add(..)) { l.checked_add(r) } else { l.checked_sub(r) };
                        v.map_or(Tv::Null, Tv::Int)
                    }
                    _ => Tv::Null,
                }
            }
            Term::Apply { func, arg } => match self.eval_term(inst, arg, env) {
                Tv::Obj(o) => self.apply(inst, func, o),
                _ => Tv::Null,
            },
        }
    }

    fn apply<'v>(&self, inst: &'v Instance, func: &str, o: Obj) -> Tv<'v> {
        let set_name = &self.scheme.sets[o.set].name;
        let Some(a) = self.access.get(set_name).and_then(|m| m.get(func)) else {
            return Tv::Null;
        };
        let wrap = |v: i64| match a.target {
            Some(set) => Tv::Obj(Obj { set, x: v }),
            None => Tv::Int(v),
        };
        let Some(col) = a.column else {
            return wrap(o.x);
        };
        let Some(row) = a.table.and_then(|t| inst.tables[t].rows.get(&o.x)) else {
            return Tv::Null;
        };
        match &row[col] {
            None => Tv::Null,
            Some(Value::Int(v)) => wrap(*v),
            Some(Value::Str(s)) => Tv::Str(s),
        }
    }
}

fn compare(op: CmpOp, l: Tv, r: Tv) -> Verdict {
    let ord: Ordering = match (l, r) {
        (Tv::Null, _) | (_, Tv::Null) => return Verdict::Unknown,
        (Tv::Int(a), Tv::Int(b)) => a.cmp(&b),
        (Tv::Str(a), Tv::Str(b)) => a.cmp(b),
        (Tv::Obj(a), Tv::Obj(b)) if a.set == b.set => a.x.cmp(&b.x),
        (Tv::Obj(_), Tv::Obj(_)) => match op {
            CmpOp::Eq => return Verdict::False,
            CmpOp::Ne => return Verdict::True,
            _ => return Verdict::Unknown,
        },
        _ => return Verdict::Unknown,
    };
    Verdict::from_bool(op.holds(ord))
}

#[cfg(test)]
mod tests {
    use super::Verdict::{self, *};

    const ALL: [Verdict; 3] = [True, False, Unknown];

    #[test]
    fn kleene_tables() {
        for a in ALL {
            for b in ALL {
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.or(b), b.or(a));
                assert_eq!(a.and(b).not(), a.not().or(b.not()));
                assert_eq!(a.implies(b), a.not().or(b));
            }
        }
        assert_eq!(Unknown.and(False), False);
        assert_eq!(Unknown.or(True), True);
        assert_eq!(Unknown.and(True), Unknown);
        assert_eq!(False.implies(Unknown), True);
    }
}
