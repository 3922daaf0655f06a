use super::{DistanceMatrix, Tour, TspError};

/// Largest instance the Held-Karp solver accepts.
pub const EXACT_LIMIT: usize = 20;

const NO_PARENT: u8 = u8::MAX;

/// Optimal closed tour by Held-Karp dynamic programming, `O(n^2 2^n)`.
///
/// Node 0 is the fixed start; `cost[mask][j]` is the cheapest path from 0
/// through the nodes of `mask` (bits over nodes `1..n`) ending at `j`.
pub fn solve_exact(dist: &DistanceMatrix) -> Result<Tour, TspError> {
    let n = dist.len();
    if n == 0 {
        return Err(TspError::InvalidInput("empty instance".into()));
    }
    if n > EXACT_LIMIT {
        return Err(TspError::ExactLimit(n));
    }
    if n <= 3 {
        // Every ordering of three or fewer nodes is the same cycle.
        return Ok(Tour::new((0..n).collect(), dist).canonicalize());
    }

    let m = n - 1;
    let states = 1usize << m;
    let mut cost = vec![f64::INFINITY; states * m];
    let mut parent = vec![NO_PARENT; states * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = dist.get(0, j + 1);
    }
    for mask in 1..states {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let here = cost[mask * m + last];
            if !here.is_finite() {
                continue;
            }
            let mut free = !mask & (states - 1);
            while free != 0 {
                let next = free.trailing_zeros() as usize;
                free &= free - 1;
                let to = mask | (1 << next);
                let cand = here + dist.get(last + 1, next + 1);
                if cand < cost[to * m + next] {
                    cost[to * m + next] = cand;
                    parent[to * m + next] = last as u8;
                }
            }
        }
    }

    let full = states - 1;
    let mut best = f64::INFINITY;
    let mut last = 0;
    for j in 0..m {
        let c = cost[full * m + j] + dist.get(j + 1, 0);
        if c < best {
            best = c;
            last = j;
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut cur = last;
    loop {
        order.push(cur + 1);
        let p = parent[mask * m + cur];
        mask &= !(1 << cur);
        if p == NO_PARENT {
            break;
        }
        cur = p as usize;
    }
    order.push(0);
    order.reverse();
    Ok(Tour::new(order, dist).canonicalize())
}
