use super::{DistanceMatrix, Tour};

/// Nearest-neighbour construction from node 0 refined by 2-opt until no
/// segment reversal shortens the tour.
pub fn solve_heuristic(dist: &DistanceMatrix) -> Tour {
    let n = dist.len();
    if n <= 3 {
        return Tour::new((0..n).collect(), dist).canonicalize();
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut cur = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| dist.get(cur, a).total_cmp(&dist.get(cur, b)))
            .expect("unvisited node remains");
        visited[next] = true;
        order.push(next);
        cur = next;
    }

    two_opt(&mut order, dist);
    Tour::new(order, dist).canonicalize()
}

fn two_opt(order: &mut [usize], dist: &DistanceMatrix) {
    let n = order.len();
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                let delta = dist.get(a, c) + dist.get(b, d) - dist.get(a, b) - dist.get(c, d);
                if delta < -1e-10 {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}
