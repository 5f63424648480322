//! The quadratic exponent functional `E0(q) = q' D q` over distributions on
//! feasible state pairs, its concavity test, and its maximization over the
//! equal-marginal, cost-constrained class, including the upper concave
//! envelope realized by time-sharing.

mod region;
mod uce;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bhatt::DistanceMatrix;
use crate::fsm::FeasiblePairSet;
use crate::graph;
use crate::linalg::sym_eigen;
use crate::math::abs;
use crate::{Error, Result};

pub(crate) use region::Region;

const SUM_TOL: f64 = 1e-10;
const MARGINAL_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-9;

/// A probability vector over feasible pairs with equal in/out marginals at
/// every state.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    q: Vec<f64>,
}

impl PairDistribution {
    pub fn new(q: Vec<f64>, pairs: &FeasiblePairSet) -> Result<Self> {
        if q.len() != pairs.len() {
            return Err(Error::Dimension {
                expected: pairs.len(),
                got: q.len(),
            });
        }
        if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDistribution("negative or non-finite entry".into()));
        }
        let total: f64 = q.iter().sum();
        if abs(total - 1.0) > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        let imbalance = imbalance(&q, pairs);
        if let Some((s, gap)) = imbalance
            .iter()
            .enumerate()
            .map(|(s, g)| (s, abs(*g)))
            .find(|(_, g)| *g > MARGINAL_TOL)
        {
            return Err(Error::InvalidDistribution(format!("marginals differ by {gap} at state {s}")));
        }
        Ok(PairDistribution { q })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.q
    }

    /// State marginal `pi(s) = sum_{s+} q(s, s+)`.
    pub fn stationary(&self, pairs: &FeasiblePairSet) -> Vec<f64> {
        let mut pi = vec![0.0; pairs.num_states()];
        for (p, v) in pairs.pairs().iter().zip(&self.q) {
            pi[p.from] += v;
        }
        pi
    }

    /// Pair indices carrying mass above `eps`.
    pub fn support(&self, eps: f64) -> Vec<usize> {
        (0..self.q.len()).filter(|&i| self.q[i] > eps).collect()
    }
}

/// Out-mass minus in-mass at every state.
pub(crate) fn imbalance(q: &[f64], pairs: &FeasiblePairSet) -> Vec<f64> {
    let mut gap = vec![0.0; pairs.num_states()];
    for (p, v) in pairs.pairs().iter().zip(q) {
        gap[p.from] += v;
        gap[p.to] -= v;
    }
    gap
}

/// Per-symbol cost `phi` and the average budget `gamma`. A pair `(s, s+)`
/// costs `phi(g(s+))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub phi: Vec<f64>,
    pub gamma: f64,
}

impl CostModel {
    /// Zero cost, zero budget: never binding.
    pub fn free(num_symbols: usize) -> Self {
        CostModel {
            phi: vec![0.0; num_symbols],
            gamma: 0.0,
        }
    }

    pub fn pair_costs(&self, pairs: &FeasiblePairSet) -> Result<Vec<f64>> {
        pairs
            .pairs()
            .iter()
            .map(|p| {
                self.phi.get(p.symbol).copied().ok_or(Error::Dimension {
                    expected: p.symbol + 1,
                    got: self.phi.len(),
                })
            })
            .collect()
    }
}

/// A mixture `sum_u w(u) v(.|u)` of pair distributions whose segments all
/// pass through the anchor state.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSharingPlan {
    pub weights: Vec<f64>,
    /// One full-length vector over feasible pairs per component.
    pub components: Vec<Vec<f64>>,
    pub anchor: usize,
}

impl TimeSharingPlan {
    pub fn mixture(&self) -> Vec<f64> {
        let l = self.components.first().map_or(0, Vec::len);
        let mut q = vec![0.0; l];
        for (w, v) in self.weights.iter().zip(&self.components) {
            q.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
        }
        q
    }

    /// `sum_u w(u) E0(v_u)`.
    pub fn value(&self, d: &DistanceMatrix) -> Result<f64> {
        let mut total = 0.0;
        for (w, v) in self.weights.iter().zip(&self.components) {
            total += w * e0(v, d)?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Argmax {
    Single(PairDistribution),
    TimeSharing(TimeSharingPlan),
}

impl Argmax {
    /// The (mixture) pair distribution.
    pub fn distribution(&self) -> Vec<f64> {
        match self {
            Argmax::Single(q) => q.as_slice().to_vec(),
            Argmax::TimeSharing(p) => p.mixture(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentResult {
    pub value: f64,
    pub argmax: Argmax,
    /// Whether `E0` is concave on the hosting component, making the
    /// envelope step redundant.
    pub concave: bool,
    pub scc_id: usize,
    /// Whether the support of the argmax is itself strongly connected.
    pub support_connected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    /// Constrain only the mixture (not each component) to equal marginals.
    pub relaxed_uce: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 100_000,
            starts: 32,
            seed: 0,
            relaxed_uce: false,
        }
    }
}

/// `q' D q`. Infinite distances on the support of `q` are an error.
pub fn e0(q: &[f64], d: &DistanceMatrix) -> Result<f64> {
    let n = d.len();
    if q.len() != n {
        return Err(Error::Dimension { expected: n, got: q.len() });
    }
    let mut total = 0.0;
    for i in (0..n).filter(|&i| q[i] > 0.0) {
        for j in (0..n).filter(|&j| q[j] > 0.0) {
            let v = d.get(i, j);
            if v.is_infinite() {
                return Err(Error::InfiniteDistance(i.min(j), i.max(j)));
            }
            total += q[i] * q[j] * v;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub concave: bool,
    /// `(L-1) x (L-1)` row-major matrix with entries
    /// `d(i, L) + d(L, j) - d(i, j)`, last pair as reference.
    pub reduced: Vec<f64>,
    pub min_eigenvalue: f64,
}

/// `E0` is concave on the simplex iff the reduced matrix is positive
/// semidefinite (smallest eigenvalue at least `-1e-9`).
pub fn concavity_test(d: &DistanceMatrix) -> Result<ConcavityReport> {
    let n = d.len();
    if d.has_infinite() {
        return Err(Error::Unsupported("infinite distances".into()));
    }
    if n < 2 {
        return Ok(ConcavityReport {
            concave: true,
            reduced: Vec::new(),
            min_eigenvalue: 0.0,
        });
    }
    let m = n - 1;
    let r = m;
    let mut reduced = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            reduced[i * m + j] = d.get(i, r) + d.get(r, j) - d.get(i, j);
        }
    }
    let min_eigenvalue = sym_eigen(&reduced, m).values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConcavityReport {
        concave: min_eigenvalue >= -PSD_TOL,
        reduced,
        min_eigenvalue,
    })
}

/// A strongly connected component of the feasibility digraph together with
/// the feasible pairs (arcs) inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scc {
    pub states: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// Components carrying at least one arc, ordered by smallest state. Arcs
/// between different components belong to none.
pub fn feasibility_sccs(pairs: &FeasiblePairSet) -> Vec<Scc> {
    let adj = graph::adjacency(pairs.num_states(), pairs.pairs().iter().map(|p| (p.from, p.to)));
    let comps = graph::sccs(&adj);
    let mut label = vec![0; pairs.num_states()];
    for (c, states) in comps.iter().enumerate() {
        for &s in states {
            label[s] = c;
        }
    }
    let mut arcs = vec![Vec::new(); comps.len()];
    for (i, p) in pairs.pairs().iter().enumerate() {
        if label[p.from] == label[p.to] {
            arcs[label[p.from]].push(i);
        }
    }
    comps
        .into_iter()
        .zip(arcs)
        .filter(|(_, a)| !a.is_empty())
        .map(|(states, arcs)| Scc { states, arcs })
        .collect()
}

/// Whether the arcs in `support` form a strongly connected graph on the
/// states they touch.
pub fn support_is_connected(pairs: &FeasiblePairSet, support: &[usize]) -> bool {
    let mut touched = vec![false; pairs.num_states()];
    for &i in support {
        let p = pairs.get(i);
        touched[p.from] = true;
        touched[p.to] = true;
    }
    let nodes: Vec<usize> = (0..touched.len()).filter(|&s| touched[s]).collect();
    if nodes.is_empty() {
        return false;
    }
    let mut local = vec![usize::MAX; touched.len()];
    for (k, &s) in nodes.iter().enumerate() {
        local[s] = k;
    }
    let adj = graph::adjacency(
        nodes.len(),
        support.iter().map(|&i| {
            let p = pairs.get(i);
            (local[p.from], local[p.to])
        }),
    );
    graph::strongly_connected(&adj)
}

/// Maximizes `E0` (or its upper concave envelope where `E0` is not concave)
/// over the cost-feasible equal-marginal polytope of every component and
/// returns the best component's optimum (ties go to the lower index).
pub fn maximize_e0(d: &DistanceMatrix, pairs: &FeasiblePairSet, cost: &CostModel, opts: &SolverOptions) -> Result<ExponentResult> {
    check_inputs(d, pairs)?;
    let costs = cost.pair_costs(pairs)?;
    let mut best: Option<ExponentResult> = None;
    let mut saw_finite = false;
    for (id, scc) in feasibility_sccs(pairs).iter().enumerate() {
        let region = match Region::new(d, pairs, scc, &costs, cost.gamma) {
            Ok(r) => r,
            Err(Error::InfiniteDistance(..)) => continue,
            Err(e) => return Err(e),
        };
        saw_finite = true;
        if !region.cost_feasible() {
            continue;
        }
        let anchor = scc.states[0];
        let res = solve_region(&region, d, pairs, anchor, id, opts)?;
        if best.as_ref().is_none_or(|b| res.value > b.value) {
            best = Some(res);
        }
    }
    match best {
        Some(b) => Ok(b),
        None if !saw_finite => Err(Error::Unsupported("every component has infinite distances".into())),
        None => Err(Error::Infeasible(format!(
            "no component admits a stationary distribution with cost <= {}",
            cost.gamma
        ))),
    }
}

/// Time-sharing optimum on the component containing `anchor`. Returns a
/// lower bound on the envelope value (the best plan found) and the plan.
pub fn maximize_uce(
    d: &DistanceMatrix,
    pairs: &FeasiblePairSet,
    cost: &CostModel,
    anchor: usize,
    opts: &SolverOptions,
) -> Result<(f64, TimeSharingPlan)> {
    check_inputs(d, pairs)?;
    let costs = cost.pair_costs(pairs)?;
    let sccs = feasibility_sccs(pairs);
    let (id, scc) = sccs
        .iter()
        .enumerate()
        .find(|(_, s)| s.states.contains(&anchor))
        .ok_or_else(|| Error::InvalidArgument(format!("anchor state {anchor} lies on no cycle")))?;
    let region = Region::new(d, pairs, scc, &costs, cost.gamma)?;
    if !region.cost_feasible() {
        return Err(Error::Infeasible(format!(
            "no stationary distribution on the anchor's component has cost <= {}",
            cost.gamma
        )));
    }
    let res = solve_region(&region, d, pairs, anchor, id, opts)?;
    let plan = match res.argmax {
        Argmax::TimeSharing(p) => p,
        Argmax::Single(q) => TimeSharingPlan {
            weights: vec![1.0],
            components: vec![q.into_vec()],
            anchor,
        },
    };
    Ok((res.value, plan))
}

fn check_inputs(d: &DistanceMatrix, pairs: &FeasiblePairSet) -> Result<()> {
    if d.len() != pairs.len() {
        return Err(Error::Dimension {
            expected: pairs.len(),
            got: d.len(),
        });
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no feasible pairs".into()));
    }
    Ok(())
}

fn solve_region(
    region: &Region,
    d: &DistanceMatrix,
    pairs: &FeasiblePairSet,
    anchor: usize,
    id: usize,
    opts: &SolverOptions,
) -> Result<ExponentResult> {
    let concave = concavity_test(&region.local_distances())?.concave;
    let (value, argmax) = if concave {
        let v = region.maximize_single(opts);
        let q = PairDistribution::new(region.globalize(&v, pairs.len()), pairs)?;
        (e0(q.as_slice(), d)?, Argmax::Single(q))
    } else {
        let plan = uce::search(region, opts, id)?;
        let mut comps: Vec<Vec<f64>> = plan.components.iter().map(|v| region.globalize(v, pairs.len())).collect();
        if comps.len() == 1 && !opts.relaxed_uce {
            let q = PairDistribution::new(comps.pop().unwrap_or_default(), pairs)?;
            (e0(q.as_slice(), d)?, Argmax::Single(q))
        } else {
            let plan = TimeSharingPlan {
                weights: plan.weights,
                components: comps,
                anchor,
            };
            (plan.value(d)?, Argmax::TimeSharing(plan))
        }
    };
    let support: Vec<usize> = {
        let q = argmax.distribution();
        (0..q.len()).filter(|&i| q[i] > 1e-12).collect()
    };
    Ok(ExponentResult {
        value,
        concave,
        scc_id: id,
        support_connected: support_is_connected(pairs, &support),
        argmax,
    })
}
