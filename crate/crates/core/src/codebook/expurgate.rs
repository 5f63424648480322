use alloc::vec;
use alloc::vec::Vec;

use crate::bhatt::DistanceMatrix;
use crate::fsm::FeasiblePairSet;
use crate::math::log_sum_exp;
use crate::{Error, Result};

/// Result of expurgation: indices of the kept candidates (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kept: Vec<usize>,
    pub rho: f64,
    pub min_pair_distance: f64,
    /// `ln B_m(rho)` for every candidate.
    pub log_scores: Vec<f64>,
}

/// Symmetric matrix of `sum_t d(pair_a(t), pair_b(t))` between closed paths.
pub fn pair_distances(paths: &[Vec<usize>], pairs: &FeasiblePairSet, d: &DistanceMatrix) -> Result<Vec<f64>> {
    let seqs = paths.iter().map(|p| pairs.path_pairs(p)).collect::<Result<Vec<_>>>()?;
    let c = paths.len();
    let mut out = vec![0.0; c * c];
    for a in 0..c {
        for b in a + 1..c {
            if seqs[a].len() != seqs[b].len() {
                return Err(Error::InvalidArgument("candidate lengths differ".into()));
            }
            let v: f64 = seqs[a].iter().zip(&seqs[b]).map(|(&i, &j)| d.get(i, j)).sum();
            out[a * c + b] = v;
            out[b * c + a] = v;
        }
    }
    Ok(out)
}

/// Keeps the `m` candidates with the smallest
/// `B_m(rho) = sum_{m' != m} exp(-D(m, m') / rho)` (ties to the lower
/// index). Without `rho`, the largest of `1, 2, 4, ..., 1024` maximizing the
/// kept set's minimum distance is used.
pub fn expurgate(paths: &[Vec<usize>], pairs: &FeasiblePairSet, d: &DistanceMatrix, m: usize, rho: Option<f64>) -> Result<Selection> {
    let needed = (2 * m).saturating_sub(1).max(1);
    if m == 0 || paths.len() < needed {
        return Err(Error::TooFewCandidates { needed, got: paths.len() });
    }
    let dist = pair_distances(paths, pairs, d)?;
    match rho {
        Some(r) if r > 0.0 => Ok(select(&dist, paths.len(), m, r)),
        Some(r) => Err(Error::InvalidArgument(alloc::format!("rho must be positive, got {r}"))),
        None => {
            let mut best: Option<Selection> = None;
            for k in 0..=10 {
                let s = select(&dist, paths.len(), m, (1u32 << k) as f64);
                if best.as_ref().is_none_or(|b| s.min_pair_distance >= b.min_pair_distance) {
                    best = Some(s);
                }
            }
            Ok(best.unwrap_or_else(|| unreachable!()))
        }
    }
}

fn select(dist: &[f64], c: usize, m: usize, rho: f64) -> Selection {
    let log_scores: Vec<f64> = (0..c)
        .map(|a| log_sum_exp((0..c).filter(move |&b| b != a).map(move |b| -dist[a * c + b] / rho)))
        .collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| log_scores[a].total_cmp(&log_scores[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order[..m].to_vec();
    kept.sort_unstable();
    let mut min_pair_distance = f64::INFINITY;
    for (i, &a) in kept.iter().enumerate() {
        for &b in &kept[i + 1..] {
            min_pair_distance = min_pair_distance.min(dist[a * c + b]);
        }
    }
    Selection {
        kept,
        rho,
        min_pair_distance,
        log_scores,
    }
}
