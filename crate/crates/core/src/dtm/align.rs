//! Optimal topic alignment for comparing fitted topics against a reference.
//!
//! Minimum-cost perfect matching on the pairwise L1 distance matrix, solved
//! exactly by dynamic programming over reference subsets. Exponential in K,
//! which is fine for the model-comparison scales this is meant for (K <= 20).

/// L1 distance between two distributions.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Returns `perm` such that `estimated[i]` is matched to `reference[perm[i]]`
/// and the total L1 cost over pairs is minimal.
pub fn align_topics(estimated: &[Vec<f64>], reference: &[Vec<f64>]) -> Vec<usize> {
    let k = estimated.len();
    assert_eq!(k, reference.len(), "need equally many topics on both sides");
    assert!(k <= 20, "alignment is exponential in K; got K = {k}");
    if k == 0 {
        return Vec::new();
    }

    let cost: Vec<Vec<f64>> = estimated
        .iter()
        .map(|e| reference.iter().map(|r| l1_distance(e, r)).collect())
        .collect();

    // dp[mask]: min cost of matching estimated[0..popcount(mask)] to the
    // reference topics in `mask`.
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 1..full {
        let i = (mask as u32).count_ones() as usize - 1;
        for j in 0..k {
            let bit = 1usize << j;
            if mask & bit == 0 {
                continue;
            }
            let c = dp[mask ^ bit] + cost[i][j];
            if c < dp[mask] {
                dp[mask] = c;
                choice[mask] = j;
            }
        }
    }

    let mut perm = vec![0usize; k];
    let mut mask = full - 1;
    for i in (0..k).rev() {
        let j = choice[mask];
        perm[i] = j;
        mask ^= 1 << j;
    }
    perm
}
