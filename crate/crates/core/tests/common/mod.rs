//! Oracles shared by the integration tests.

#![allow(dead_code)]

use urllc::matching::BipartiteGraph;

/// Exhaustive optimum of a small bipartite graph, enumerating for every
/// right vertex which left (if any) it takes.
pub fn exhaustive_optimum(g: &BipartiteGraph) -> u64 {
    let mut w = vec![vec![0u64; g.n_right]; g.n_left];
    for &(l, r, x) in &g.edges {
        w[l][r] = x;
    }
    fn go(r: usize, w: &[Vec<u64>], n_right: usize, used_left: u32) -> u64 {
        if r == n_right {
            return 0;
        }
        let mut best = go(r + 1, w, n_right, used_left);
        for (l, row) in w.iter().enumerate() {
            if row[r] > 0 && used_left & (1 << l) == 0 {
                best = best.max(row[r] + go(r + 1, w, n_right, used_left | (1 << l)));
            }
        }
        best
    }
    go(0, &w, g.n_right, 0)
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided KS critical value at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
