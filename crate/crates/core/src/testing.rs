//! Independent numerical oracles shared by unit tests.

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // Split into panels first so narrow peaks are not missed.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            recurse(f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, 50)
        })
        .sum()
}

/// Exhaustive maximum-weight matching. Returns the optimal weight and the
/// lexicographically smallest sorted pair list attaining it.
pub fn brute_force_matching(g: &crate::matching::BipartiteGraph) -> (u64, Vec<(usize, usize)>) {
    let mut w = vec![0u64; g.n_left * g.n_right];
    for &(l, r, x) in &g.edges {
        w[l * g.n_right + r] = x;
    }
    let mut best = (0u64, Vec::new());
    let mut used = vec![false; g.n_right];
    let mut cur = Vec::new();
    fn go(
        l: usize,
        g: &crate::matching::BipartiteGraph,
        w: &[u64],
        used: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        total: u64,
        best: &mut (u64, Vec<(usize, usize)>),
    ) {
        if l == g.n_left {
            if total > best.0 || (total == best.0 && *cur < best.1) {
                *best = (total, cur.clone());
            }
            return;
        }
        for r in 0..g.n_right {
            let x = w[l * g.n_right + r];
            if x > 0 && !used[r] {
                used[r] = true;
                cur.push((l, r));
                go(l + 1, g, w, used, cur, total + x, best);
                cur.pop();
                used[r] = false;
            }
        }
        go(l + 1, g, w, used, cur, total, best);
    }
    go(0, g, &w, &mut used, &mut cur, 0, &mut best);
    best
}
