//! Enumeration of the lattice `{k/N : Σ k = N}` on the probability simplex.
//!
//! These are the method-of-types lattices used by every grid oracle. Scans
//! are split on the first coordinate so they can run in parallel while the
//! reduction stays in lexicographic order.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of compositions of `n` into `m` non-negative parts, `C(n+m-1, m-1)`.
pub fn composition_count(m: usize, n: usize) -> u128 {
    if m == 0 {
        return 0;
    }
    let k = (m - 1) as u128;
    let top = (n + m - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (top - i) / (i + 1);
    }
    c
}

/// Calls `f` on every composition of `n` into `m` parts whose first part is
/// `first`, in lexicographic order.
pub fn for_each_with_first<F: FnMut(&[usize])>(m: usize, n: usize, first: usize, mut f: F) {
    assert!(m >= 1 && first <= n);
    let mut parts = vec![0usize; m];
    parts[0] = first;
    if m == 1 {
        if first == n {
            f(&parts);
        }
        return;
    }
    recurse(&mut parts, 1, n - first, &mut f);
}

fn recurse<F: FnMut(&[usize])>(parts: &mut [usize], pos: usize, remaining: usize, f: &mut F) {
    if pos == parts.len() - 1 {
        parts[pos] = remaining;
        f(parts);
        return;
    }
    for k in 0..=remaining {
        parts[pos] = k;
        recurse(parts, pos + 1, remaining - k, f);
    }
}

/// Calls `f` on every composition of `n` into `m` parts, lexicographically.
pub fn for_each_composition<F: FnMut(&[usize])>(m: usize, n: usize, mut f: F) {
    for first in 0..=n {
        for_each_with_first(m, n, first, &mut f);
    }
}

/// Maximizes `score` over the simplex lattice of resolution `n`.
///
/// Returns the best score and its point as probabilities. Ties go to the
/// lexicographically first composition. Points scoring `-inf` or NaN never win.
pub fn grid_argmax<F>(m: usize, n: usize, score: F) -> Option<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(n >= 1, "grid resolution must be positive");
    let best_per_first: Vec<Option<(f64, Vec<f64>)>> = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            let mut q = vec![0.0; m];
            for_each_with_first(m, n, first, |parts| {
                for (qi, &k) in q.iter_mut().zip(parts) {
                    *qi = k as f64 / n as f64;
                }
                let v = score(&q);
                if v.is_nan() || v == f64::NEG_INFINITY {
                    return;
                }
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((v, q.clone()));
                }
            });
            best
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cand in best_per_first.into_iter().flatten() {
        if best.as_ref().map_or(true, |(b, _)| cand.0 > *b) {
            best = Some(cand);
        }
    }
    best
}

/// Rejects lattices with more than `limit` points.
pub fn check_grid_size(m: usize, n: usize, limit: usize) -> Result<()> {
    let count = composition_count(m, n);
    if count > limit as u128 {
        return Err(Error::TooLarge {
            what: "simplex grid",
            size: usize::try_from(count).unwrap_or(usize::MAX),
            limit,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_enumeration() {
        for m in 1..=4 {
            for n in 0..=7 {
                let mut c = 0u128;
                for_each_composition(m, n, |parts| {
                    assert_eq!(parts.iter().sum::<usize>(), n);
                    c += 1;
                });
                assert_eq!(c, composition_count(m, n), "m={m} n={n}");
            }
        }
        assert_eq!(composition_count(3, 600), 180_901);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let mut seen = Vec::new();
        for_each_composition(3, 2, |p| seen.push(p.to_vec()));
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn argmax_finds_center_and_breaks_ties_low() {
        let (v, q) = grid_argmax(3, 30, |q| -q.iter().map(|x| (x - 1.0 / 3.0).powi(2)).sum::<f64>()).unwrap();
        assert!(v.abs() < 1e-12);
        assert_eq!(q, vec![10.0 / 30.0; 3]);
        let (_, q) = grid_argmax(2, 4, |_| 1.0).unwrap();
        assert_eq!(q, vec![0.0, 1.0]);
    }
}
