//! Minimum-cost assignment (Hungarian method with potentials).

/// Marks a row/column pair that may not be matched.
pub(super) const FORBIDDEN: u64 = u64::MAX;

/// Cheapest way to give every row its own column, or `None` when no such
/// matching avoids forbidden cells. Needs `rows <= cols`.
pub(super) fn min_cost_assignment(cost: &[Vec<u64>], cols: usize) -> Option<u64> {
    let n = cost.len();
    if n == 0 {
        return Some(0);
    }
    if n > cols {
        return None;
    }
    // Forbidden cells get a cost no real matching can reach.
    let big: i64 = 1 << 50;
    let c = |i: usize, j: usize| -> i64 {
        match cost[i][j] {
            FORBIDDEN => big,
            v => v as i64,
        }
    };
    // 1-based arrays, column 0 is a sentinel.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; cols + 1];
    let mut matched = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0i64;
    for j in 1..=cols {
        if matched[j] != 0 {
            let x = c(matched[j] - 1, j - 1);
            if x >= big {
                return None;
            }
            total += x;
        }
    }
    Some(total as u64)
}
