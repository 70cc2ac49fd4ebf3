//! Synthetic schemes made of renamed copies of the genealogy scheme.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

/// The genealogy scheme repeated `copies` times with every set, function
/// and constraint name suffixed by the copy number.
pub fn scaled_source(copies: usize) -> String {
    let base = super::genealogy_source();
    let scheme = super::genealogy();
    let mut renamed: BTreeSet<String> = scheme.sets.iter().map(|s| s.name.clone()).collect();
    renamed.extend(scheme.constraints.iter().map(|c| c.label.clone()));
    renamed.extend(scheme.mappings.iter().map(|m| m.name.clone()).filter(|n| n != "x"));
    let mut out = String::new();
    for k in 0..copies {
        let mut word = String::new();
        for ch in base.chars().chain(std::iter::once('\n')) {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                word.push(ch);
                continue;
            }
            if renamed.contains(&word) {
                word.push_str(&format!("_{k}"));
            }
            out.push_str(&word);
            word.clear();
            out.push(ch);
        }
    }
    out
}

pub fn best_of(runs: usize, f: impl Fn()) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

/// Coefficient of determination of the least-squares line through `points`.
pub fn r_squared(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Translation time (best of 5) at ×1, ×10 and ×100, and the R² of a linear fit.
pub fn translation_scaling() -> (Vec<(f64, f64)>, f64) {
    let mut points = Vec::new();
    for copies in [1, 10, 100] {
        let s = mdmrel_core::parser::parse_scheme(&scaled_source(copies)).unwrap();
        let elapsed = best_of(5, || {
            mdmrel_core::translator::translate(&s).unwrap();
        });
        points.push((copies as f64, elapsed.as_secs_f64()));
    }
    let r2 = r_squared(&points);
    (points, r2)
}
