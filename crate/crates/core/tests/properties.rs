mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::streams::random_event;
use common::{mutation_base, Pipeline};
use mdmrel_core::analyzer::analyze;
use mdmrel_core::checker::{Instance, Verdict};
use mdmrel_core::model::{validate_scheme, ConstraintKind, Formula};
use mdmrel_core::parser::{parse_scheme, serialize_scheme};
use mdmrel_core::translator::translate;

/// Declarations of a random scheme: sets, attributes, references between
/// sets, and constraints over them.
fn scheme_statements() -> impl Strategy<Value = Vec<String>> {
    (1usize..5)
        .prop_flat_map(|n| {
            let refs = prop::collection::vec((0..n, 0..n, any::<bool>()), 0..6);
            let flags = prop::collection::vec((any::<bool>(), any::<bool>(), 1u32..4), n);
            (Just(n), refs, flags)
        })
        .prop_map(|(_, refs, flags)| {
            let mut out = Vec::new();
            for (i, (keyed, checked, card)) in flags.iter().enumerate() {
                out.push(format!("set S{i} entity card {card};"));
                out.push(format!("fun N{i}: S{i} -> ascii(8) total;"));
                out.push(format!("fun A{i}: S{i} -> int[0, 100];"));
                out.push(format!("fun B{i}: S{i} -> int[0, currentYear()];"));
                if *keyed {
                    out.push(format!("key S{i}(N{i}) \"Names of S{i} are unique.\";"));
                    out.push(format!("key S{i}(A{i} . B{i});"));
                }
                if *checked {
                    out.push(format!("constraint T{i} tuple S{i} \"A{i}(x) <= B{i}(x)\";"));
                    out.push(format!("constraint O{i} object \"forall x in S{i}: A{i}(x) <= 50 or B{i}(x) is null\";"));
                }
            }
            for (k, (from, to, total)) in refs.iter().enumerate() {
                let total = if *total { " total" } else { "" };
                out.push(format!("fun R{k}: S{from} -> S{to}{total};"));
                if from == to {
                    out.push(format!("constraint Y{k} acyclic S{from}.R{k};"));
                }
                if k % 2 == 1 {
                    out.push(format!("key S{from}(R{k});"));
                }
                let back = refs[..k].iter().position(|(f, t, _)| f == to && t == from && from != to);
                if let Some(m) = back {
                    out.push(format!("constraint NR{k} null-reflexive R{m} o R{k};"));
                    out.push(format!("key S{from}(R{k} . N{from});"));
                }
            }
            out
        })
}

fn report_line(text: &str) -> Option<(usize, usize, usize, usize)> {
    let s = parse_scheme(text).ok()?;
    let t = translate(&s).ok()?;
    Some((t.report.rc, t.report.nrc, t.report.steps, t.schema.constraint_count()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialized_schemes_parse_back(stmts in scheme_statements()) {
        let s = parse_scheme(&stmts.join("\n")).unwrap();
        let text = serialize_scheme(&s);
        prop_assert_eq!(parse_scheme(&text).unwrap(), s);
    }

    #[test]
    fn declaration_order_does_not_matter(stmts in scheme_statements(), seed in any::<u64>()) {
        let mut shuffled = stmts.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = parse_scheme(&stmts.join("\n")).unwrap();
        let b = parse_scheme(&shuffled.join("\n")).unwrap();
        let diags = |s| validate_scheme(s).into_iter().map(|d| d.to_string()).collect::<BTreeSet<_>>();
        prop_assert_eq!(diags(&a), diags(&b));
        prop_assert_eq!(report_line(&stmts.join("\n")), report_line(&shuffled.join("\n")));
    }

    #[test]
    fn step_count_is_the_sum_of_its_parts(stmts in scheme_statements()) {
        let t = translate(&parse_scheme(&stmts.join("\n")).unwrap()).unwrap();
        let r = &t.report;
        prop_assert_eq!(r.steps, r.e + r.r + r.a + r.f + r.rc + r.nrc);
        prop_assert_eq!(r.rc, t.schema.constraint_count());
        prop_assert_eq!(r.nrc, t.residual.len());
    }

    #[test]
    fn analysis_is_idempotent_and_only_removes_keys(stmts in scheme_statements()) {
        let t = translate(&parse_scheme(&stmts.join("\n")).unwrap()).unwrap();
        let (once, report) = analyze(&t.schema, &t.residual);
        let (twice, again) = analyze(&once, &t.residual);
        prop_assert_eq!(&once, &twice);
        prop_assert!(again.pruned.is_empty());
        prop_assert_eq!(once.constraint_count() + report.pruned.len(), t.schema.constraint_count());
        for p in &report.pruned {
            let kind = t.residual.get(&p.implied_by).map(|e| &e.constraint.kind);
            let implying = matches!(kind, Some(ConstraintKind::NullReflexive { .. } | ConstraintKind::NoOverlap { .. }));
            prop_assert!(implying, "{} pruned by {}", p.key, p.implied_by);
        }
    }
}

/// An instance reached by applying random events without any checking.
fn scrambled(p: &Pipeline, seed: u64, steps: usize) -> Instance {
    let c = p.checker();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = mutation_base(p);
    for _ in 0..steps {
        let ev = random_event(&mut rng, c.schema(), &inst);
        if let Ok(staged) = c.stage_event(&inst, &ev, &p.plan) {
            inst = staged.instance;
        }
    }
    inst
}

/// Violating bindings by direct enumeration of the leading universal variables.
fn false_bindings(p: &Pipeline, inst: &Instance, f: &Formula) -> BTreeSet<Vec<i64>> {
    let Formula::Forall { vars, set, body } = f else {
        panic!("not universal");
    };
    let xs: Vec<i64> = inst.table(set).unwrap().rows.keys().copied().collect();
    let c = p.checker();
    let mut out = BTreeSet::new();
    let mut tuple = vec![0; vars.len()];
    let mut odometer = vec![0; vars.len()];
    if xs.is_empty() {
        return out;
    }
    loop {
        for (slot, &i) in tuple.iter_mut().zip(&odometer) {
            *slot = xs[i];
        }
        let bindings: Vec<(&str, &str, i64)> = vars.iter().zip(&tuple).map(|(v, x)| (v.as_str(), set.as_str(), *x)).collect();
        if c.eval_formula(inst, body, &bindings) == Verdict::False {
            let mut key = tuple.clone();
            key.sort_unstable();
            out.insert(key);
        }
        let mut k = 0;
        while k < odometer.len() {
            odometer[k] += 1;
            if odometer[k] < xs.len() {
                break;
            }
            odometer[k] = 0;
            k += 1;
        }
        if k == odometer.len() {
            return out;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn only_false_bindings_are_reported(seed in any::<u64>(), steps in 0usize..40) {
        let p = Pipeline::genealogy();
        let c = p.checker();
        let inst = scrambled(&p, seed, steps);
        let reported = c.check_all(&inst);
        for e in &p.translation.residual.entries {
            let Some(f) = e.constraint.to_formula() else { continue };
            if !matches!(f, Formula::Forall { .. }) || matches!(e.constraint.kind, ConstraintKind::Acyclic(_)) {
                continue;
            }
            let got: BTreeSet<Vec<i64>> = reported
                .iter()
                .filter(|v| v.constraint_id == e.constraint.label)
                .map(|v| {
                    let mut r = v.rows.clone();
                    r.sort_unstable();
                    r
                })
                .collect();
            prop_assert_eq!(got, false_bindings(&p, &inst, &f), "{}", e.constraint.label);
        }
    }

    #[test]
    fn recompute_is_idempotent(seed in any::<u64>(), steps in 0usize..40) {
        let p = Pipeline::genealogy();
        let c = p.checker();
        let mut inst = scrambled(&p, seed, steps);
        let mut once = inst.clone();
        c.recompute_derived(&mut once);
        prop_assert!(c.recompute_derived(&mut once).is_empty());
        c.recompute_derived(&mut inst);
        prop_assert_eq!(inst, once);
    }

    #[test]
    fn cycle_search_is_bounded_and_sound(links in prop::collection::vec(prop::option::of(1i64..9), 1..9)) {
        let p = Pipeline::genealogy();
        let c = p.checker();
        let mut inst = c.empty_instance(common::YEAR);
        for x in 1..=links.len() as i64 {
            common::insert_row(&c, &mut inst, "RULERS", x, &[("Name", "R"), ("Sex", "F")]);
        }
        let n = links.len() as i64;
        for (i, l) in links.iter().enumerate() {
            let target = l.filter(|t| *t <= n).map(|t| t.to_string()).unwrap_or_default();
            common::set_cell(&c, &mut inst, "RULERS", i as i64 + 1, "Mother", &target);
        }
        let mother = |x: i64| links[(x - 1) as usize].filter(|t| *t <= n);
        for start in 1..=n {
            // independent oracle: walk n steps; a cycle exists iff we never fall off
            let mut cur = Some(start);
            for _ in 0..n {
                cur = cur.and_then(mother);
            }
            let found = c.detect_cycle(&inst, "RULERS", "Mother", start);
            prop_assert_eq!(found.is_some(), cur.is_some());
            if let Some(path) = found {
                prop_assert!(path.len() as i64 <= n + 1);
                prop_assert_eq!(path.first(), path.last());
                for w in path.windows(2) {
                    prop_assert_eq!(mother(w[0]), Some(w[1]));
                }
                let inner: BTreeSet<_> = path[..path.len() - 1].iter().collect();
                prop_assert_eq!(inner.len(), path.len() - 1);
            }
        }
    }

    #[test]
    fn rejected_events_leave_the_instance_untouched(seed in any::<u64>()) {
        let p = Pipeline::genealogy();
        let c = p.checker();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = mutation_base(&p);
        for _ in 0..30 {
            let ev = random_event(&mut rng, c.schema(), &inst);
            let before = inst.clone();
            match c.apply_event(&mut inst, &ev, &p.plan) {
                Ok(out) if out.accepted => {}
                _ => prop_assert_eq!(&inst, &before),
            }
        }
    }
}
