//! Exact minimum-cost perfect matching on a square integer cost matrix.
//!
//! Shortest augmenting paths with row/column potentials (the Hungarian
//! method in its O(m^3) Dijkstra-like form). Costs stay integral throughout,
//! so the returned optimum is exact.

/// Returns `(assignment, total)` where `assignment[r]` is the column matched
/// to row `r` and `total` is the minimum of `sum_r cost(r, assignment[r])`.
///
/// `cost(r, c)` must be defined for `r, c < size`.
pub fn min_cost_assignment(size: usize, cost: impl Fn(usize, usize) -> i64) -> (Vec<usize>, i64) {
    if size == 0 {
        return (Vec::new(), 0);
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut row_of_col = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    let mut min_slack = vec![INF; size + 1];
    let mut used = vec![false; size + 1];

    for r in 1..=size {
        row_of_col[0] = r;
        let mut col = 0usize;
        min_slack.fill(INF);
        used.fill(false);
        loop {
            used[col] = true;
            let row = row_of_col[col];
            let mut delta = INF;
            let mut next = 0usize;
            for c in 1..=size {
                if used[c] {
                    continue;
                }
                let reduced = cost(row - 1, c - 1) - u[row] - v[c];
                if reduced < min_slack[c] {
                    min_slack[c] = reduced;
                    way[c] = col;
                }
                if min_slack[c] < delta {
                    delta = min_slack[c];
                    next = c;
                }
            }
            for c in 0..=size {
                if used[c] {
                    u[row_of_col[c]] += delta;
                    v[c] -= delta;
                } else {
                    min_slack[c] -= delta;
                }
            }
            col = next;
            if row_of_col[col] == 0 {
                break;
            }
        }
        // Flip the augmenting path back to the source.
        loop {
            let prev = way[col];
            row_of_col[col] = row_of_col[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; size];
    for c in 1..=size {
        assignment[row_of_col[c] - 1] = c - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| cost(r, c))
        .sum();
    (assignment, total)
}
