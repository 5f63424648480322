use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::MarkovTypeSpec;
use crate::exponent::support_is_connected;
use crate::fsm::FeasiblePairSet;
use crate::graph;
use crate::math::floor;
use crate::{Error, Result};

const SUPPORT_EPS: f64 = 1e-12;

/// Rounds `n q` to a balanced integer type on the support of `q`.
///
/// Every support arc first gets `max(1, floor(n q))`. Imbalances are then
/// repaired by unit paths from states with excess in-count to states with
/// excess out-count, preferring arcs with large residual `n q - count`.
/// Finally whole cycles are added (through the largest-residual arc) or
/// removed (through the smallest-residual arc with count at least 2) until
/// the total is `n`. Ties follow the canonical arc order. If that overshoots
/// and no cycle can be removed, the start is rescaled to `(n - k) q` for
/// `k = 1, 2, ...` and the total filled up with cycles instead.
pub fn round_type(q: &[f64], pairs: &FeasiblePairSet, n: usize) -> Result<MarkovTypeSpec> {
    if q.len() != pairs.len() {
        return Err(Error::Dimension {
            expected: pairs.len(),
            got: q.len(),
        });
    }
    let support: Vec<bool> = q.iter().map(|&v| v > SUPPORT_EPS).collect();
    let size = support.iter().filter(|&&s| s).count();
    if size == 0 {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if n < size {
        return Err(Error::BlockTooShort { n, min_n: size });
    }
    let first = round_from(q, pairs, n, n, &support);
    if !matches!(first, Err(Error::InvalidType(_))) || support_disconnected(&first) {
        return first;
    }
    (1..n)
        .find_map(|k| round_from(q, pairs, n, n - k, &support).ok())
        .ok_or_else(|| first.unwrap_err())
}

fn support_disconnected(r: &Result<MarkovTypeSpec>) -> bool {
    matches!(r, Err(Error::InvalidType(m)) if m.contains("not strongly connected"))
}

fn round_from(q: &[f64], pairs: &FeasiblePairSet, n: usize, scale: usize, support: &[bool]) -> Result<MarkovTypeSpec> {
    let target: Vec<f64> = q.iter().map(|&v| v * n as f64).collect();
    let mut counts: Vec<usize> = (0..q.len())
        .map(|e| {
            if support[e] {
                (floor(q[e] * scale as f64) as usize).max(1)
            } else {
                0
            }
        })
        .collect();
    let arcs: Vec<(usize, usize)> = pairs.pairs().iter().map(|p| (p.from, p.to)).collect();
    let states = pairs.num_states();
    let disconnected = || Error::InvalidType("support of q is not strongly connected".into());

    loop {
        let mut gap = vec![0i64; states];
        for (e, &c) in counts.iter().enumerate() {
            gap[arcs[e].0] += c as i64;
            gap[arcs[e].1] -= c as i64;
        }
        let (Some(src), Some(dst)) = (gap.iter().position(|&g| g < 0), gap.iter().position(|&g| g > 0)) else {
            break;
        };
        let path = graph::cheapest_path(
            states,
            &arcs,
            |e| (1.0 - (target[e] - counts[e] as f64)).max(0.0),
            |e| support[e],
            src,
            dst,
        )
        .ok_or_else(disconnected)?;
        for e in path {
            counts[e] += 1;
        }
    }

    let residual = |counts: &[usize], e: usize| target[e] - counts[e] as f64;
    loop {
        let total: usize = counts.iter().sum();
        if total == n {
            break;
        }
        let mut order: Vec<usize> = (0..counts.len()).filter(|&e| support[e]).collect();
        let adding = total < n;
        if adding {
            order.sort_by(|&a, &b| residual(&counts, b).total_cmp(&residual(&counts, a)).then(a.cmp(&b)));
        } else {
            order.retain(|&e| counts[e] >= 2);
            order.sort_by(|&a, &b| residual(&counts, a).total_cmp(&residual(&counts, b)).then(a.cmp(&b)));
        }
        let room = if adding { n - total } else { total - n };
        let mut applied = false;
        for &e in &order {
            let snapshot = counts.clone();
            let back = if adding {
                graph::cheapest_path(
                    states,
                    &arcs,
                    |f| (1.0 - residual(&snapshot, f)).max(0.0),
                    |f| support[f],
                    arcs[e].1,
                    arcs[e].0,
                )
            } else {
                graph::cheapest_path(
                    states,
                    &arcs,
                    |f| (1.0 + residual(&snapshot, f)).max(0.0),
                    |f| f != e && snapshot[f] >= 2,
                    arcs[e].1,
                    arcs[e].0,
                )
            };
            let Some(back) = back else { continue };
            if back.len() + 1 > room {
                continue;
            }
            for f in core::iter::once(e).chain(back) {
                if adding {
                    counts[f] += 1;
                } else {
                    counts[f] -= 1;
                }
            }
            applied = true;
            break;
        }
        if !applied {
            return Err(Error::InvalidType(format!(
                "cannot reach block length {n} with whole cycles on the support (current total {total})"
            )));
        }
    }
    Ok(MarkovTypeSpec { counts, n })
}

/// Returns `q` unchanged if its support is strongly connected and touches
/// `anchor`; otherwise mixes in `eps` of a closed walk that starts at the
/// anchor and visits every strongly connected piece of the support.
pub fn connect_support(q: &[f64], pairs: &FeasiblePairSet, anchor: usize, eps: f64) -> Result<Vec<f64>> {
    if q.len() != pairs.len() {
        return Err(Error::Dimension {
            expected: pairs.len(),
            got: q.len(),
        });
    }
    let support: Vec<usize> = (0..q.len()).filter(|&e| q[e] > SUPPORT_EPS).collect();
    let touches_anchor = support.iter().any(|&e| pairs.get(e).from == anchor);
    if touches_anchor && support_is_connected(pairs, &support) {
        return Ok(q.to_vec());
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    let states = pairs.num_states();
    let adj = graph::adjacency(states, support.iter().map(|&e| (pairs.get(e).from, pairs.get(e).to)));
    let mut targets = Vec::new();
    for piece in graph::sccs(&adj) {
        let has_arc = support
            .iter()
            .any(|&e| piece.contains(&pairs.get(e).from) && piece.contains(&pairs.get(e).to));
        if has_arc && !piece.contains(&anchor) {
            targets.push(piece[0]);
        }
    }
    targets.push(anchor);
    let arcs: Vec<(usize, usize)> = pairs.pairs().iter().map(|p| (p.from, p.to)).collect();
    let mut walk = vec![0usize; pairs.len()];
    let mut at = anchor;
    for &t in &targets {
        let leg = graph::cheapest_path(states, &arcs, |_| 1.0, |_| true, at, t)
            .ok_or_else(|| Error::InvalidArgument(format!("state {t} is not reachable from {at}")))?;
        for e in leg {
            walk[e] += 1;
        }
        at = t;
    }
    if walk.iter().all(|&c| c == 0) {
        // anchor isolated from the support but sits on a self-loop only
        let e = (0..pairs.len())
            .find(|&e| arcs[e] == (anchor, anchor))
            .ok_or_else(|| Error::InvalidArgument(format!("anchor {anchor} lies on no cycle")))?;
        walk[e] = 1;
    }
    let len: usize = walk.iter().sum();
    Ok(q.iter()
        .zip(&walk)
        .map(|(v, &c)| (1.0 - eps) * v + eps * c as f64 / len as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::{feasible_pairs, shift_register};

    fn register() -> FeasiblePairSet {
        feasible_pairs(&shift_register(&[-1.0, 1.0], 1).unwrap()).unwrap()
    }

    #[test]
    fn exact_rationals() {
        let pairs = register();
        assert_eq!(round_type(&[0.25; 4], &pairs, 8).unwrap().counts, vec![2; 4]);
        assert_eq!(round_type(&[0.3, 0.2, 0.2, 0.3], &pairs, 10).unwrap().counts, vec![3, 2, 2, 3]);
    }

    #[test]
    fn half_integers_round_to_balanced_type() {
        let pairs = register();
        let spec = round_type(&[0.35, 0.15, 0.15, 0.35], &pairs, 10).unwrap();
        spec.validate(&pairs).unwrap();
        assert_eq!(spec.counts, vec![4, 1, 1, 4]);
    }

    #[test]
    fn too_short_blocks_report_minimum() {
        let pairs = register();
        assert_eq!(round_type(&[0.25; 4], &pairs, 3), Err(Error::BlockTooShort { n: 3, min_n: 4 }));
    }

    #[test]
    fn connecting_a_split_support() {
        let pairs = register();
        let q = connect_support(&[0.5, 0.0, 0.0, 0.5], &pairs, 0, 1e-3).unwrap();
        assert!(q.iter().all(|&v| v > 0.0));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(q[1], q[2]);
        let kept = connect_support(&[0.25; 4], &pairs, 1, 1e-3).unwrap();
        assert_eq!(kept, vec![0.25; 4]);
    }

    #[test]
    fn moving_to_an_unvisited_anchor() {
        let pairs = register();
        // support is the self-loop at state 1, anchor is state 0
        let q = connect_support(&[0.0, 0.0, 0.0, 1.0], &pairs, 0, 0.1).unwrap();
        let spec = round_type(&q, &pairs, 6).unwrap();
        spec.validate(&pairs).unwrap();
        assert!(spec.counts[1] >= 1 && spec.counts[2] >= 1);
    }
}
