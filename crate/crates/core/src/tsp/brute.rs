use itertools::Itertools;

use super::{DistanceMatrix, Tour, TspError};

/// Largest instance the permutation oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Enumerates the `(n-1)!/2` distinct closed tours through node 0 and keeps
/// the shortest. Test oracle only.
pub fn brute_force_oracle(dist: &DistanceMatrix) -> Result<Tour, TspError> {
    let n = dist.len();
    if n == 0 {
        return Err(TspError::InvalidInput("empty instance".into()));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::OracleLimit(n));
    }
    if n <= 3 {
        return Ok(Tour::new((0..n).collect(), dist).canonicalize());
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    // Fixing order[1] < order[n-1] skips each tour's mirror image.
    for perm in (1..n).permutations(n - 1).filter(|p| p[0] < p[n - 2]) {
        let mut len = dist.get(0, perm[0]) + dist.get(perm[n - 2], 0);
        for w in perm.windows(2) {
            len += dist.get(w[0], w[1]);
        }
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, perm));
        }
    }
    let (_, perm) = best.expect("at least one permutation");
    let order = std::iter::once(0).chain(perm).collect();
    Ok(Tour::new(order, dist).canonicalize())
}
