//! Maximum-weight bipartite matching with integer weights.
//!
//! The solver pads the smaller side conceptually with zero-weight non-edges
//! and runs the shortest-augmenting-path Hungarian method on the rectangular
//! cost matrix, `O(n^2 m)` for `n <= m`. Among all optimal matchings it
//! returns the lexicographically smallest sorted pair list. That choice is
//! made exactly: every optimal matching uses only edges that are tight under
//! the final dual potentials, so the solver walks the left vertices in order
//! and moves each onto its smallest feasible right partner by alternating
//! paths inside the tight subgraph.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub n_left: usize,
    pub n_right: usize,
    /// `(left, right, weight)`, weights at least 1.
    pub edges: Vec<(usize, usize, u64)>,
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        Self {
            n_left,
            n_right,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, left: usize, right: usize, weight: u64) {
        self.edges.push((left, right, weight));
    }

    /// Dense weight matrix, `0` for non-edges. Rejects malformed graphs.
    fn weight_matrix(&self) -> Result<Vec<u64>> {
        let mut w = vec![0u64; self.n_left * self.n_right];
        for &(l, r, weight) in &self.edges {
            if l >= self.n_left || r >= self.n_right {
                return Err(Error::param(
                    "edges",
                    format!("edge ({l}, {r}) outside {}x{}", self.n_left, self.n_right),
                ));
            }
            if weight == 0 || weight > i64::MAX as u64 / 4 {
                return Err(Error::param(
                    "edges",
                    format!("edge ({l}, {r}) has weight {weight}"),
                ));
            }
            let cell = &mut w[l * self.n_right + r];
            if *cell != 0 {
                return Err(Error::param("edges", format!("duplicate edge ({l}, {r})")));
            }
            *cell = weight;
        }
        Ok(w)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    /// Pairs sorted by left index.
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_weight(&self, g: &BipartiteGraph) -> u64 {
        self.pairs
            .iter()
            .map(|&(l, r)| {
                g.edges
                    .iter()
                    .find(|&&(el, er, _)| el == l && er == r)
                    .map_or(0, |e| e.2)
            })
            .sum()
    }
}

/// Min-cost assignment of every row to a distinct column, `rows <= cols`.
/// Returns `(col_to_row, u, v)` with 1-based row indices (0 = unassigned)
/// and potentials satisfying `u[i] + v[j] <= cost[i][j]`, equality on the
/// assignment and `v[j] <= 0`, nonzero only on assigned columns.
fn hungarian(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> i64,
) -> (Vec<usize>, Vec<i64>, Vec<i64>) {
    debug_assert!(rows <= cols);
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![inf; cols + 1];
    let mut used = vec![false; cols + 1];

    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (p, u, v)
}

/// Perfect matching of the padded square instance restricted to tight edges.
struct TightAssignment<'a> {
    n: usize,
    n_left: usize,
    n_right: usize,
    weights: &'a [u64],
    pot_left: Vec<i64>,
    pot_right: Vec<i64>,
    mate_left: Vec<usize>,
    mate_right: Vec<usize>,
}

impl TightAssignment<'_> {
    fn weight(&self, l: usize, r: usize) -> u64 {
        if l < self.n_left && r < self.n_right {
            self.weights[l * self.n_right + r]
        } else {
            0
        }
    }

    fn tight(&self, l: usize, r: usize) -> bool {
        self.pot_left[l] + self.pot_right[r] == -(self.weight(l, r) as i64)
    }

    /// Re-match left `i` to right `j` via an alternating path from `j`'s
    /// current partner to `i`'s current partner. Locked lefts keep their
    /// partner; lefts pinned as unmatched may only slide between zero-weight
    /// partners. Returns false if no such path exists.
    fn try_move(&mut self, i: usize, j: usize, pins: &[Pin]) -> bool {
        let start = self.mate_right[j];
        let target = self.mate_left[i];
        if pins[start] == Pin::Locked {
            return false;
        }
        let mut parent = vec![usize::MAX; self.n]; // right -> left it was reached from
        let mut seen_left = vec![false; self.n];
        seen_left[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut found = false;
        'bfs: while let Some(x) = queue.pop_front() {
            for y in 0..self.n {
                if y == j || parent[y] != usize::MAX || !self.tight(x, y) {
                    continue;
                }
                if pins[x] == Pin::Unmatched && self.weight(x, y) > 0 {
                    continue;
                }
                if y == target {
                    parent[y] = x;
                    found = true;
                    break 'bfs;
                }
                let next = self.mate_right[y];
                if next == i || pins[next] == Pin::Locked || seen_left[next] {
                    continue;
                }
                parent[y] = x;
                seen_left[next] = true;
                queue.push_back(next);
            }
        }
        if !found {
            return false;
        }
        // flip the path, walking back from the freed right
        let mut y = target;
        loop {
            let x = parent[y];
            let prev = self.mate_left[x];
            self.mate_left[x] = y;
            self.mate_right[y] = x;
            if x == start {
                break;
            }
            y = prev;
        }
        self.mate_left[i] = j;
        self.mate_right[j] = i;
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pin {
    Free,
    Locked,
    Unmatched,
}

/// Maximum-weight matching; ties resolved to the lexicographically smallest
/// sorted pair list.
pub fn max_weight_matching(g: &BipartiteGraph) -> Result<Matching> {
    let weights = g.weight_matrix()?;
    if g.edges.is_empty() {
        return Ok(Matching::default());
    }
    let (n_left, n_right) = (g.n_left, g.n_right);
    let n = n_left.max(n_right);
    let transposed = n_left > n_right;
    let w_at = |l: usize, r: usize| weights[l * n_right + r] as i64;

    let mut pot_left = vec![0i64; n];
    let mut pot_right = vec![0i64; n];
    let mut mate_left = vec![usize::MAX; n];
    let mut mate_right = vec![usize::MAX; n];

    if !transposed {
        let (p, u, v) = hungarian(n_left, n_right, |r, c| -w_at(r, c));
        pot_left[..n_left].copy_from_slice(&u[1..]);
        pot_right[..n_right].copy_from_slice(&v[1..]);
        for col in 0..n_right {
            if p[col + 1] != 0 {
                mate_right[col] = p[col + 1] - 1;
                mate_left[p[col + 1] - 1] = col;
            }
        }
    } else {
        let (p, u, v) = hungarian(n_right, n_left, |r, c| -w_at(c, r));
        pot_right[..n_right].copy_from_slice(&u[1..]);
        pot_left[..n_left].copy_from_slice(&v[1..]);
        for col in 0..n_left {
            if p[col + 1] != 0 {
                mate_left[col] = p[col + 1] - 1;
                mate_right[p[col + 1] - 1] = col;
            }
        }
    }
    // pair the leftovers with dummies; dummy potentials are zero and the
    // leftover real vertices carry zero potential, so these edges are tight
    let mut free_left = (0..n)
        .filter(|&l| mate_left[l] == usize::MAX)
        .collect::<Vec<_>>()
        .into_iter();
    for r in 0..n {
        if mate_right[r] == usize::MAX {
            let l = free_left.next().expect("square instance");
            mate_left[l] = r;
            mate_right[r] = l;
        }
    }

    let mut state = TightAssignment {
        n,
        n_left,
        n_right,
        weights: &weights,
        pot_left,
        pot_right,
        mate_left,
        mate_right,
    };
    debug_assert!((0..n).all(|l| state.tight(l, state.mate_left[l])));

    let mut pins = vec![Pin::Free; n];
    for i in 0..n_left {
        let current = state.mate_left[i];
        let limit = if state.weight(i, current) > 0 {
            current
        } else {
            n_right
        };
        for j in 0..limit {
            if state.weight(i, j) > 0 && state.tight(i, j) && state.try_move(i, j, &pins) {
                break;
            }
        }
        pins[i] = if state.weight(i, state.mate_left[i]) > 0 {
            Pin::Locked
        } else {
            Pin::Unmatched
        };
    }

    let pairs = (0..n_left)
        .filter_map(|l| {
            let r = state.mate_left[l];
            (state.weight(l, r) > 0).then_some((l, r))
        })
        .collect();
    Ok(Matching { pairs })
}
