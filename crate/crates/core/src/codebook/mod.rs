//! Zero-rate codebooks: integer Markov types, Eulerian circuits through the
//! type's multigraph, codeword emission through the recover map, and
//! expurgation of a random ensemble.

mod expurgate;
mod rounding;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bhatt::DistanceMatrix;
use crate::exponent::{Argmax, CostModel};
use crate::fsm::{FeasiblePairSet, StateMachine};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub use expurgate::{expurgate, pair_distances, Selection};
pub use rounding::{connect_support, round_type};

/// Integer transition counts over feasible pairs, balanced at every state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovTypeSpec {
    pub counts: Vec<usize>,
    pub n: usize,
}

impl MarkovTypeSpec {
    /// Checks length, total and the circulation property.
    pub fn validate(&self, pairs: &FeasiblePairSet) -> Result<()> {
        if self.counts.len() != pairs.len() {
            return Err(Error::Dimension {
                expected: pairs.len(),
                got: self.counts.len(),
            });
        }
        if self.counts.iter().sum::<usize>() != self.n {
            return Err(Error::InvalidType("counts do not sum to n".into()));
        }
        let mut gap = vec![0i64; pairs.num_states()];
        for (p, &c) in pairs.pairs().iter().zip(&self.counts) {
            gap[p.from] += c as i64;
            gap[p.to] -= c as i64;
        }
        if gap.iter().any(|&g| g != 0) {
            return Err(Error::InvalidType("in- and out-counts differ".into()));
        }
        Ok(())
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&e| self.counts[e] > 0).collect()
    }

    /// `sum_e counts(e) * cost(e)`.
    pub fn total_cost(&self, pair_costs: &[f64]) -> f64 {
        self.counts.iter().zip(pair_costs).map(|(&c, k)| c as f64 * k).sum()
    }

    /// Cyclic transition counts of a closed state path.
    pub fn of_path(path: &[usize], pairs: &FeasiblePairSet) -> Result<Self> {
        let mut counts = vec![0; pairs.len()];
        for e in pairs.path_pairs(path)? {
            counts[e] += 1;
        }
        Ok(MarkovTypeSpec { counts, n: path.len() })
    }
}

/// Closed walk from `anchor` using every pair exactly `counts` times, with
/// the outgoing arcs at each state shuffled by the seeded generator
/// (randomized Hierholzer). Returns the `n` visited states; the walk closes
/// back to `anchor`.
pub fn euler_circuit(spec: &MarkovTypeSpec, pairs: &FeasiblePairSet, anchor: usize, seed: u64) -> Result<Vec<usize>> {
    spec.validate(pairs)?;
    if anchor >= pairs.num_states() {
        return Err(Error::InvalidArgument("anchor out of range".into()));
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); pairs.num_states()];
    for (e, &c) in spec.counts.iter().enumerate() {
        out[pairs.get(e).from].extend(core::iter::repeat_n(e, c));
    }
    if out[anchor].is_empty() {
        return Err(Error::InvalidType("anchor is not in the support".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for arcs in out.iter_mut() {
        arcs.shuffle(&mut rng);
    }
    let mut next = vec![0usize; out.len()];
    let mut stack = vec![anchor];
    let mut circuit = Vec::with_capacity(spec.n + 1);
    while let Some(&v) = stack.last() {
        if next[v] < out[v].len() {
            let e = out[v][next[v]];
            next[v] += 1;
            stack.push(pairs.get(e).to);
        } else {
            circuit.push(v);
            stack.pop();
        }
    }
    if circuit.len() != spec.n + 1 {
        return Err(Error::InvalidType("support is not connected to the anchor".into()));
    }
    circuit.reverse();
    circuit.pop();
    Ok(circuit)
}

/// `x_t = g(s_{t+1})` with cyclic indexing; fails unless
/// `s_{t+1} = f(s_t, x_t)` holds everywhere.
pub fn emit_codeword(path: &[usize], machine: &StateMachine) -> Result<Vec<usize>> {
    let g = machine.recover_table().ok_or(Error::MissingRecover)?;
    let n = path.len();
    let mut word = Vec::with_capacity(n);
    for t in 0..n {
        let (s, s_next) = (path[t], path[(t + 1) % n]);
        if s >= machine.num_states() || s_next >= machine.num_states() {
            return Err(Error::InconsistentPath(t));
        }
        let x = g[s_next];
        if machine.next(s, x) != s_next {
            return Err(Error::InconsistentPath(t));
        }
        word.push(x);
    }
    Ok(word)
}

/// Largest-remainder apportionment of `n` according to `weights`.
pub fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut lengths: Vec<usize> = exact.iter().map(|x| *x as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - lengths[b] as f64)
            .total_cmp(&(exact[a] - lengths[a] as f64))
            .then(a.cmp(&b))
    });
    let missing = n.saturating_sub(lengths.iter().sum());
    for &u in order.iter().cycle().take(missing) {
        lengths[u] += 1;
    }
    lengths
}

/// `2m - 1` candidate state paths. Candidate `i` concatenates one circuit
/// per segment, each drawn with seed `derive_seed(seed, [i, u])` and each
/// starting and ending at `anchor`.
pub fn build_ensemble(segments: &[MarkovTypeSpec], pairs: &FeasiblePairSet, anchor: usize, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::InvalidArgument("codebook size must be positive".into()));
    }
    (0..2 * m - 1)
        .map(|i| {
            let mut path = Vec::new();
            for (u, seg) in segments.iter().enumerate() {
                path.extend(euler_circuit(seg, pairs, anchor, derive_seed(seed, &[i as u64, u as u64]))?);
            }
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub anchor: usize,
    /// Symbol indices into the machine's alphabet.
    pub codewords: Vec<Vec<usize>>,
    pub state_paths: Vec<Vec<usize>>,
    /// One type per time-sharing segment, in order.
    pub type_certificate: Vec<MarkovTypeSpec>,
    /// Minimum over codeword pairs of the summed pair distances; `+inf`
    /// for a single codeword.
    pub min_pair_distance: f64,
    pub rho: f64,
    pub seed: u64,
    /// Mass placed on connecting arcs, when the target needed them.
    pub connect_eps: Option<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeParams {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub anchor: usize,
    /// Expurgation parameter; `None` sweeps `1, 2, 4, ..., 1024`.
    pub rho: Option<f64>,
    /// Mass moved onto connecting arcs when the target's support is not
    /// strongly connected through the anchor. `None` sweeps
    /// `{1e-6, 0.005, 0.01, ..., 0.1}` and keeps the codebook with the
    /// largest minimum distance (ties to the smaller value).
    pub eps: Option<f64>,
}

impl CodeParams {
    pub fn new(n: usize, m: usize, anchor: usize) -> Self {
        CodeParams {
            n,
            m,
            seed: 0,
            anchor,
            rho: None,
            eps: None,
        }
    }
}

/// Full construction: type rounding per segment, strict cost check, random
/// ensemble, codeword emission and expurgation.
pub fn build_codebook(
    machine: &StateMachine,
    pairs: &FeasiblePairSet,
    d: &DistanceMatrix,
    cost: &CostModel,
    target: &Argmax,
    params: &CodeParams,
) -> Result<Codebook> {
    let parts: Vec<(f64, Vec<f64>)> = match target {
        Argmax::Single(q) => vec![(1.0, q.as_slice().to_vec())],
        Argmax::TimeSharing(p) => p.weights.iter().copied().zip(p.components.iter().cloned()).collect(),
    };
    let needs = parts.iter().any(|(_, v)| needs_connection(v, pairs, params.anchor));
    if !needs {
        return build_with(machine, pairs, d, cost, &parts, params, None);
    }
    if let Some(eps) = params.eps {
        return build_with(machine, pairs, d, cost, &parts, params, Some(eps));
    }
    let grid = core::iter::once(1e-6).chain((1..=20).map(|k| 0.005 * k as f64));
    let mut best: Option<Codebook> = None;
    let mut last_err = None;
    for eps in grid {
        match build_with(machine, pairs, d, cost, &parts, params, Some(eps)) {
            Ok(cb) => {
                if best.as_ref().is_none_or(|b| cb.min_pair_distance > b.min_pair_distance) {
                    best = Some(cb);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidArgument("empty sweep".into())))
}

fn needs_connection(q: &[f64], pairs: &FeasiblePairSet, anchor: usize) -> bool {
    let support: Vec<usize> = (0..q.len()).filter(|&e| q[e] > 1e-12).collect();
    !(support.iter().any(|&e| pairs.get(e).from == anchor) && crate::exponent::support_is_connected(pairs, &support))
}

fn build_with(
    machine: &StateMachine,
    pairs: &FeasiblePairSet,
    d: &DistanceMatrix,
    cost: &CostModel,
    parts: &[(f64, Vec<f64>)],
    params: &CodeParams,
    eps: Option<f64>,
) -> Result<Codebook> {
    let weights: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let lengths = apportion(&weights, params.n);
    let mut segments = Vec::new();
    for ((_, v), &len) in parts.iter().zip(&lengths) {
        if len == 0 {
            continue;
        }
        let v = match eps {
            Some(e) => connect_support(v, pairs, params.anchor, e)?,
            None => v.clone(),
        };
        segments.push(round_type(&v, pairs, len)?);
    }
    let costs = cost.pair_costs(pairs)?;
    let spent: f64 = segments.iter().map(|s| s.total_cost(&costs)).sum();
    if spent > params.n as f64 * cost.gamma + 1e-9 * (1.0 + spent.abs()) {
        return Err(Error::Infeasible(alloc::format!(
            "rounded type costs {spent}, budget is {}",
            params.n as f64 * cost.gamma
        )));
    }
    let paths = build_ensemble(&segments, pairs, params.anchor, params.m, params.seed)?;
    let sel = expurgate(&paths, pairs, d, params.m, params.rho)?;
    let state_paths: Vec<Vec<usize>> = sel.kept.iter().map(|&i| paths[i].clone()).collect();
    let codewords = state_paths.iter().map(|p| emit_codeword(p, machine)).collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        n: params.n,
        anchor: params.anchor,
        codewords,
        state_paths,
        type_certificate: segments,
        min_pair_distance: sel.min_pair_distance,
        rho: sel.rho,
        seed: params.seed,
        connect_eps: eps,
    })
}
