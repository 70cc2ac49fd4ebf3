//! Exhaustive search for instances that satisfy an implying constraint
//! but violate the unique key it is claimed to imply. Rows are at most 3,
//! value domains at most 3 values; `None` is null.

/// `outer ° inner` null-reflexive against the key `{inner}`.
pub fn null_reflexive_counterexamples() -> usize {
    let mut found = 0;
    for na in 0..=3usize {
        for nb in 0..=3usize {
            for inner in assignments(na, nb) {
                for outer in assignments(nb, na) {
                    let holds = (0..na).all(|a| match inner[a] {
                        None => true,
                        Some(b) => outer[b] == Some(a),
                    });
                    let key_ok = (0..na).all(|a| {
                        (0..na).all(|c| a == c || inner[a].is_none() || inner[a] != inner[c])
                    });
                    if holds && !key_ok {
                        found += 1;
                    }
                }
            }
        }
    }
    found
}

/// Every function from `n` rows into `m` targets or null.
fn assignments(n: usize, m: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for partial in &out {
            for v in std::iter::once(None).chain((0..m).map(Some)) {
                let mut p = partial.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Copy)]
struct Row {
    d: i64,
    g: i64,
    lo: i64,
    hi: Option<i64>,
}

pub struct NoOverlapCase {
    pub grouped: bool,
    /// The table checks `lo <= hi`.
    pub interval_check: bool,
    pub current_year: i64,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct NoOverlapCounts {
    pub lo_key: usize,
    pub hi_key: usize,
}

/// No-overlap (distinct `d`, group `g`, interval `lo`, `hi`) against the
/// keys `{g, d, lo}` and `{g, d, hi}`; `lo` is total with values 1..=3.
pub fn no_overlap_counterexamples(case: &NoOverlapCase) -> NoOverlapCounts {
    let groups: &[i64] = if case.grouped { &[1, 2, 3] } else { &[1] };
    let mut rows = Vec::new();
    for d in 1..=3 {
        for &g in groups {
            for lo in 1..=3 {
                for hi in [None, Some(1), Some(2), Some(3)] {
                    rows.push(Row { d, g, lo, hi });
                }
            }
        }
    }
    let mut counts = NoOverlapCounts::default();
    let mut inst = Vec::with_capacity(3);
    search(&rows, &mut inst, case, &mut counts);
    counts
}

fn search(rows: &[Row], inst: &mut Vec<Row>, case: &NoOverlapCase, counts: &mut NoOverlapCounts) {
    if admissible(inst, case) {
        let pairs = || {
            (0..inst.len()).flat_map(|i| (0..inst.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        };
        let same = |a: &Row, b: &Row| a.g == b.g && a.d == b.d;
        if pairs().any(|(i, j)| same(&inst[i], &inst[j]) && inst[i].lo == inst[j].lo) {
            counts.lo_key += 1;
        }
        if pairs().any(|(i, j)| same(&inst[i], &inst[j]) && inst[i].hi.is_some() && inst[i].hi == inst[j].hi) {
            counts.hi_key += 1;
        }
    }
    if inst.len() == 3 {
        return;
    }
    for r in rows {
        inst.push(*r);
        search(rows, inst, case, counts);
        inst.pop();
    }
}

fn admissible(inst: &[Row], case: &NoOverlapCase) -> bool {
    if case.interval_check && inst.iter().any(|r| r.hi.is_some_and(|h| r.lo > h)) {
        return false;
    }
    let end = |r: &Row| r.hi.unwrap_or(case.current_year);
    let starts_within = |a: &Row, b: &Row| a.lo >= b.lo && a.lo <= end(b);
    for (i, x) in inst.iter().enumerate() {
        for (j, y) in inst.iter().enumerate() {
            if i != j && x.g == y.g && (starts_within(y, x) || starts_within(x, y)) && x.d == y.d {
                return false;
            }
        }
    }
    true
}
