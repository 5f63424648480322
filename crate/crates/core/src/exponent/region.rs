//! One strongly connected component viewed as a polytope of circulations:
//! projection (Dykstra over simplex, balance subspace and cost halfspace)
//! and projected-gradient ascent of `v' D v`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use super::Scc;
use crate::bhatt::DistanceMatrix;
use crate::fsm::FeasiblePairSet;
use crate::graph;
use crate::linalg::{inf_norm, psd_pinv};
use crate::{Error, Result};

use super::SolverOptions;

const DYKSTRA_SWEEPS: usize = 20_000;
const DYKSTRA_TOL: f64 = 1e-15;
/// Largest disagreement allowed between the two sets' projections.
const DYKSTRA_GAP: f64 = 1e-13;
const COST_SLACK: f64 = 1e-12;

pub(crate) struct Region {
    /// Global pair index of each local arc.
    pub arcs: Vec<usize>,
    pub l: usize,
    d: Vec<f64>,
    d_norm: f64,
    pub cost: Vec<f64>,
    pub gamma: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// Orthogonal projector onto the balance subspace; `None` when every
    /// arc is a self-loop.
    null_proj: Option<Vec<f64>>,
    /// Cost vector projected onto the balance subspace; on balanced points
    /// it prices exactly like the cost itself.
    cost_dir: Vec<f64>,
    cost_norm2: f64,
    /// Number of states in the component.
    pub ns: usize,
}

impl Region {
    pub fn new(d: &DistanceMatrix, pairs: &FeasiblePairSet, scc: &Scc, costs: &[f64], gamma: f64) -> Result<Self> {
        let arcs = scc.arcs.clone();
        let l = arcs.len();
        let mut local = vec![0.0; l * l];
        for (a, &i) in arcs.iter().enumerate() {
            for (b, &j) in arcs.iter().enumerate() {
                let v = d.get(i, j);
                if v.is_infinite() {
                    return Err(Error::InfiniteDistance(i.min(j), i.max(j)));
                }
                local[a * l + b] = v;
            }
        }
        let mut node = vec![usize::MAX; pairs.num_states()];
        for (k, &s) in scc.states.iter().enumerate() {
            node[s] = k;
        }
        let ns = scc.states.len();
        let ends: Vec<(usize, usize)> = arcs
            .iter()
            .map(|&i| {
                let p = pairs.get(i);
                (node[p.from], node[p.to])
            })
            .collect();
        let cost: Vec<f64> = arcs.iter().map(|&i| costs[i]).collect();
        let weighted = |sign: f64| -> Vec<(usize, usize, f64)> { ends.iter().zip(&cost).map(|(&(a, b), &c)| (a, b, sign * c)).collect() };
        let c_min = graph::min_mean_cycle(ns, &weighted(1.0)).unwrap_or(f64::INFINITY);
        let c_max = graph::min_mean_cycle(ns, &weighted(-1.0)).map_or(f64::NEG_INFINITY, |v| -v);
        let null_proj = balance_projector(ns, &ends);
        let cost_dir: Vec<f64> = match &null_proj {
            Some(p) => (0..l).map(|a| (0..l).map(|b| p[a * l + b] * cost[b]).sum()).collect(),
            None => cost.clone(),
        };
        Ok(Region {
            l,
            d_norm: inf_norm(&local, l),
            d: local,
            cost_norm2: cost_dir.iter().map(|c| c * c).sum(),
            cost_dir,
            cost,
            gamma,
            c_min,
            c_max,
            null_proj,
            arcs,
            ns,
        })
    }

    pub fn cost_feasible(&self) -> bool {
        self.c_min <= self.gamma + COST_SLACK
    }

    /// Whether a budget cuts into the polytope.
    pub fn binding(&self, budget: f64) -> bool {
        self.c_max > budget + COST_SLACK
    }

    pub fn local_distances(&self) -> DistanceMatrix {
        DistanceMatrix::new(self.l, self.d.clone()).unwrap_or_else(|_| unreachable!("restriction of a valid matrix"))
    }

    pub fn globalize(&self, v: &[f64], len: usize) -> Vec<f64> {
        let mut q = vec![0.0; len];
        for (a, &i) in self.arcs.iter().enumerate() {
            q[i] = v[a];
        }
        q
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        let l = self.l;
        (0..l).map(|a| v[a] * (0..l).map(|b| self.d[a * l + b] * v[b]).sum::<f64>()).sum()
    }

    pub fn cost_of(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.cost).map(|(a, b)| a * b).sum()
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.l as f64; self.l]
    }

    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.l).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    /// Projects stacked components `v` (one block of `l` per weight) onto
    /// the product of per-component polytopes intersected with
    /// `sum_u w_u c'v_u <= budget`, in the `w`-weighted metric. Dykstra
    /// alternates between the simplices and the balanced points within
    /// budget.
    pub fn project(&self, v: &mut [f64], w: &[f64], budget: Option<f64>) {
        let l = self.l;
        let budget = budget.filter(|&b| self.binding(b) && self.cost_norm2 > 1e-300);
        let total_w: f64 = w.iter().sum();
        let mut inc_simplex = vec![0.0; v.len()];
        let mut inc_half = vec![0.0; v.len()];
        let mut before = vec![0.0; v.len()];
        let mut scratch = vec![0.0; l];
        for _ in 0..DYKSTRA_SWEEPS {
            before.copy_from_slice(v);
            for (x, p) in v.iter_mut().zip(&inc_simplex) {
                *x += p;
            }
            let shifted = v.to_vec();
            for block in v.chunks_mut(l) {
                project_simplex(block);
            }
            for ((p, s), x) in inc_simplex.iter_mut().zip(&shifted).zip(v.iter()) {
                *p = s - x;
            }
            if self.null_proj.is_none() && budget.is_none() {
                break;
            }
            let on_simplex = v.to_vec();
            for (x, p) in v.iter_mut().zip(&inc_half) {
                *x += p;
            }
            let shifted = v.to_vec();
            if let Some(pr) = &self.null_proj {
                for block in v.chunks_mut(l) {
                    for a in 0..l {
                        scratch[a] = (0..l).map(|b| pr[a * l + b] * block[b]).sum();
                    }
                    block.copy_from_slice(&scratch);
                }
            }
            if let Some(b) = budget {
                let spent: f64 = v.chunks(l).zip(w).map(|(blk, wu)| wu * self.cost_of(blk)).sum();
                if spent > b {
                    let lambda = (spent - b) / (total_w * self.cost_norm2);
                    for blk in v.chunks_mut(l) {
                        blk.iter_mut().zip(&self.cost_dir).for_each(|(x, c)| *x -= lambda * c);
                    }
                }
            }
            for ((p, s), x) in inc_half.iter_mut().zip(&shifted).zip(v.iter()) {
                *p = s - x;
            }
            let change = v.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let gap = v.iter().zip(&on_simplex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < DYKSTRA_TOL && gap < DYKSTRA_GAP {
                break;
            }
        }
    }

    /// Projected-gradient ascent of `sum_u w_u E0(v_u)` from `v`, monotone
    /// for any `D`. Returns the objective.
    pub fn ascend(&self, v: &mut [f64], w: &[f64], budget: Option<f64>, opts: &SolverOptions) -> f64 {
        let l = self.l;
        self.project(v, w, budget);
        if self.d_norm > 0.0 {
            let step = 1.0 / (2.0 * self.d_norm);
            let mut next = v.to_vec();
            for _ in 0..opts.max_iter {
                for (blk, out) in v.chunks(l).zip(next.chunks_mut(l)) {
                    for a in 0..l {
                        let g: f64 = (0..l).map(|b| self.d[a * l + b] * blk[b]).sum();
                        out[a] = blk[a] + step * 2.0 * g;
                    }
                }
                self.project(&mut next, w, budget);
                let change = next.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v.copy_from_slice(&next);
                if change < opts.tol {
                    break;
                }
            }
        }
        for blk in v.chunks_mut(l) {
            clean(blk);
        }
        v.chunks(l).zip(w).map(|(blk, wu)| wu * self.value(blk)).sum()
    }

    /// Global maximum of a concave `E0` under the region's budget.
    pub fn maximize_single(&self, opts: &SolverOptions) -> Vec<f64> {
        let mut v = self.uniform();
        self.ascend(&mut v, &[1.0], Some(self.gamma), opts);
        v
    }

    /// The balance projector, if any.
    pub fn null_projector(&self) -> Option<&[f64]> {
        self.null_proj.as_deref()
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    pub fn norm(&self) -> f64 {
        self.d_norm
    }
}

/// `I - A' (A A')^+ A` for the node-arc balance matrix `A`.
fn balance_projector(ns: usize, ends: &[(usize, usize)]) -> Option<Vec<f64>> {
    let l = ends.len();
    if ends.iter().all(|(a, b)| a == b) {
        return None;
    }
    let mut a = vec![0.0; ns * l];
    for (e, &(from, to)) in ends.iter().enumerate() {
        a[from * l + e] += 1.0;
        a[to * l + e] -= 1.0;
    }
    let mut gram = vec![0.0; ns * ns];
    for i in 0..ns {
        for j in 0..ns {
            gram[i * ns + j] = (0..l).map(|e| a[i * l + e] * a[j * l + e]).sum();
        }
    }
    let g_inv = psd_pinv(&gram, ns, 1e-10);
    // t = G^+ A  (ns x l)
    let mut t = vec![0.0; ns * l];
    for i in 0..ns {
        for e in 0..l {
            t[i * l + e] = (0..ns).map(|k| g_inv[i * ns + k] * a[k * l + e]).sum();
        }
    }
    let mut p = vec![0.0; l * l];
    for e in 0..l {
        for f in 0..l {
            let at: f64 = (0..ns).map(|i| a[i * l + e] * t[i * l + f]).sum();
            p[e * l + f] = if e == f { 1.0 } else { 0.0 } - at;
        }
    }
    Some(p)
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Clamps round-off negatives and renormalizes.
pub(crate) fn clean(v: &mut [f64]) {
    v.iter_mut().for_each(|x| {
        if *x < 1e-15 {
            *x = 0.0
        }
    });
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut v = [0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut v = [2.0, 0.0, -1.0];
        project_simplex(&mut v);
        assert_eq!(v, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn balance_projector_annihilates_imbalance() {
        // 0 -> 1 -> 0 plus a self-loop at 0
        let p = balance_projector(2, &[(0, 0), (0, 1), (1, 0)]).unwrap();
        let x = [0.2, 0.5, 0.1];
        let y: Vec<f64> = (0..3).map(|a| (0..3).map(|b| p[a * 3 + b] * x[b]).sum()).collect();
        assert!((y[1] - y[2]).abs() < 1e-12);
        assert!((y[0] - 0.2).abs() < 1e-12);
    }
}
