//! Transportation simplex (MODI / u-v method) on a dense cost matrix.
//!
//! The basis is a spanning tree of `n + m - 1` cells over the bipartite graph
//! of sources and sinks, started from the northwest-corner rule. The entering
//! cell has the most negative reduced cost; after a run of degenerate pivots
//! the rule switches to the first negative cell in row-major order, which
//! together with lowest-cell leaving ties rules out cycling. Ties everywhere
//! go to the lowest `(i, j)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Optimal vertex of a transportation problem.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    /// Basic cells `(i, j, flow)` in row-major order; flows may be zero.
    pub basis: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
    pub pivots: usize,
}

pub(crate) struct Transport<'a> {
    pub supply: &'a [f64],
    pub demand: &'a [f64],
    /// Row-major `supply.len() x demand.len()` costs.
    pub cost: &'a [f64],
}

struct State<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    cells: Vec<(usize, usize)>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> State<'a> {
    fn northwest_corner(t: &Transport<'a>) -> Self {
        let n = t.supply.len();
        let m = t.demand.len();
        let mut flow = vec![0.0; n * m];
        let mut basic = vec![false; n * m];
        let mut cells = Vec::with_capacity(n + m - 1);
        let (mut i, mut j) = (0, 0);
        let mut rem_s = t.supply[0];
        let mut rem_d = t.demand[0];
        loop {
            let x = rem_s.min(rem_d).max(0.0);
            flow[i * m + j] = x;
            basic[i * m + j] = true;
            cells.push((i, j));
            if i == n - 1 && j == m - 1 {
                break;
            }
            // on a simultaneous exhaustion advance the row; the next cell
            // then carries a degenerate zero and keeps the tree spanning
            if j == m - 1 || (i < n - 1 && rem_s <= rem_d) {
                rem_d -= x;
                i += 1;
                rem_s = t.supply[i];
            } else {
                rem_s -= x;
                j += 1;
                rem_d = t.demand[j];
            }
        }
        State {
            n,
            m,
            cost: t.cost,
            flow,
            basic,
            cells,
            u: vec![0.0; n],
            v: vec![0.0; m],
        }
    }

    /// Adjacency of the basis tree; nodes `0..n` are rows, `n..n+m` columns.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for &(i, j) in &self.cells {
            adj[i].push(self.n + j);
            adj[self.n + j].push(i);
        }
        adj
    }

    fn compute_duals(&mut self, adj: &[Vec<usize>]) -> Result<()> {
        let total = self.n + self.m;
        let mut seen = vec![false; total];
        let mut queue = VecDeque::new();
        self.u[0] = 0.0;
        seen[0] = true;
        queue.push_back(0);
        let mut visited = 1;
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                visited += 1;
                if node < self.n {
                    let j = next - self.n;
                    self.v[j] = self.cost[node * self.m + j] - self.u[node];
                } else {
                    let j = node - self.n;
                    self.u[next] = self.cost[next * self.m + j] - self.v[j];
                }
                queue.push_back(next);
            }
        }
        if visited != total {
            return Err(Error::numerical("transportation basis is not a spanning tree"));
        }
        Ok(())
    }

    /// Tree path from row `i` to column `j`, as a node list.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let target = self.n + j;
        let mut parent = vec![usize::MAX; total];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != i {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    fn cell_of(&self, a: usize, b: usize) -> (usize, usize) {
        if a < self.n {
            (a, b - self.n)
        } else {
            (b, a - self.n)
        }
    }
}

/// Solves the transportation problem to optimality.
///
/// `tol` is the reduced-cost threshold below which a cell is considered
/// improving.
pub(crate) fn solve(t: &Transport<'_>, tol: f64) -> Result<Solution> {
    let n = t.supply.len();
    let m = t.demand.len();
    if n == 0 || m == 0 {
        return Err(Error::invalid("transportation problem with empty side"));
    }
    debug_assert_eq!(t.cost.len(), n * m);
    let mut st = State::northwest_corner(t);
    let max_pivots = 100 * n * m + 1000;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    loop {
        let adj = st.adjacency();
        st.compute_duals(&adj)?;

        let bland = degenerate_run > n + m;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..n {
            for j in 0..m {
                let c = i * m + j;
                if st.basic[c] {
                    continue;
                }
                let r = st.cost[c] - st.u[i] - st.v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break;
        };
        if pivots >= max_pivots {
            return Err(Error::numerical(format!(
                "transportation simplex did not converge in {max_pivots} pivots"
            )));
        }
        pivots += 1;

        // path alternates row, col, row, ...; edges at even positions from
        // the row end lose flow, odd ones gain
        let path = st.path(&adj, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leaving = (usize::MAX, usize::MAX);
        for (e, w) in path.windows(2).enumerate() {
            if e % 2 == 0 {
                let (i, j) = st.cell_of(w[0], w[1]);
                let f = st.flow[i * m + j];
                if f < theta || (f == theta && (i, j) < leaving) {
                    theta = f;
                    leaving = (i, j);
                }
            }
        }
        for (e, w) in path.windows(2).enumerate() {
            let (i, j) = st.cell_of(w[0], w[1]);
            let c = i * m + j;
            if e % 2 == 0 {
                st.flow[c] -= theta;
            } else {
                st.flow[c] += theta;
            }
        }
        st.flow[ei * m + ej] = theta;
        st.flow[leaving.0 * m + leaving.1] = 0.0;
        st.basic[leaving.0 * m + leaving.1] = false;
        st.basic[ei * m + ej] = true;
        let pos = st
            .cells
            .iter()
            .position(|&c| c == leaving)
            .expect("leaving cell is basic");
        st.cells[pos] = (ei, ej);

        if theta == 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }

    st.cells.sort_unstable();
    let basis: Vec<(usize, usize, f64)> = st
        .cells
        .iter()
        .map(|&(i, j)| (i, j, st.flow[i * m + j]))
        .collect();
    let cost = crate::stats::neumaier_sum(basis.iter().map(|&(i, j, f)| f * t.cost[i * m + j]));
    Ok(Solution {
        basis,
        cost,
        row_duals: st.u,
        col_duals: st.v,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // supplies 20/30/25, demands 10/25/40; optimum 290 by hand enumeration
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 25.0, 40.0];
        let cost = [8.0, 6.0, 10.0, 9.0, 12.0, 13.0, 14.0, 9.0, 16.0];
        let sol = solve(
            &Transport {
                supply: &supply,
                demand: &demand,
                cost: &cost,
            },
            1e-12,
        )
        .unwrap();
        assert_eq!(sol.basis.len(), 5);
        let brute = brute_force_3x3(&supply, &demand, &cost);
        assert!((sol.cost - brute).abs() < 1e-9, "{} vs {brute}", sol.cost);
    }

    // enumerate integer plans on a 3x3 grid with integral marginals
    fn brute_force_3x3(s: &[f64; 3], d: &[f64; 3], c: &[f64; 9]) -> f64 {
        let mut best = f64::INFINITY;
        let (s0, s1) = (s[0] as i64, s[1] as i64);
        let (d0, d1) = (d[0] as i64, d[1] as i64);
        for x00 in 0..=s0.min(d0) {
            for x01 in 0..=(s0 - x00).min(d1) {
                let x02 = s0 - x00 - x01;
                for x10 in 0..=s1.min(d0 - x00) {
                    for x11 in 0..=(s1 - x10).min(d1 - x01) {
                        let x12 = s1 - x10 - x11;
                        let x20 = d0 - x00 - x10;
                        let x21 = d1 - x01 - x11;
                        let x22 = d[2] as i64 - x02 - x12;
                        if x02 < 0 || x12 < 0 || x20 < 0 || x21 < 0 || x22 < 0 {
                            continue;
                        }
                        let x = [x00, x01, x02, x10, x11, x12, x20, x21, x22];
                        let v: f64 = x.iter().zip(c).map(|(&a, &b)| a as f64 * b).sum();
                        best = best.min(v);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn degenerate_equal_marginals() {
        let supply = [0.25; 4];
        let demand = [0.25; 4];
        // cyclic shift is optimal with cost 0
        let mut cost = [1.0; 16];
        for i in 0..4 {
            cost[i * 4 + (i + 1) % 4] = 0.0;
        }
        let sol = solve(
            &Transport {
                supply: &supply,
                demand: &demand,
                cost: &cost,
            },
            1e-12,
        )
        .unwrap();
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.basis.len(), 7);
    }
}
