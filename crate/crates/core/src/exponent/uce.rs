//! Time-sharing search for the upper concave envelope on one component.
//!
//! With component-level constraints the cost is the only coupling, so an
//! optimal plan needs at most two components: local optima are collected
//! over a grid of budgets, the linear program in the weights is solved
//! exactly over singles and pairs, and the chosen components are then
//! refined jointly with the weights held fixed.

use alloc::vec;
use alloc::vec::Vec;

use super::region::{clean, Region};
use super::SolverOptions;
use crate::rng::stream;
use crate::Result;

const BUDGET_GRID: usize = 9;
const MAX_ROUNDS: usize = 100;
const ROUND_TOL: f64 = 1e-9;
const SLACK: f64 = 1e-12;

pub(crate) struct LocalPlan {
    pub weights: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

struct Candidate {
    v: Vec<f64>,
    value: f64,
    cost: f64,
}

struct Mixture {
    value: f64,
    parts: Vec<(usize, f64)>,
}

pub(crate) fn search(region: &Region, opts: &SolverOptions, id: usize) -> Result<LocalPlan> {
    let mut pool = local_optima(region, opts, id);
    let mut best = best_mixture(&pool, region.gamma);
    for _ in 0..MAX_ROUNDS {
        let weights: Vec<f64> = best.parts.iter().map(|p| p.1).collect();
        let mut stacked: Vec<f64> = best.parts.iter().flat_map(|p| pool[p.0].v.iter().copied()).collect();
        region.ascend(&mut stacked, &weights, Some(region.gamma), opts);
        for blk in stacked.chunks(region.l) {
            pool.push(candidate(region, blk.to_vec()));
        }
        let next = best_mixture(&pool, region.gamma);
        let gain = next.value - best.value;
        if gain > 0.0 {
            best = next;
        }
        if gain < ROUND_TOL {
            break;
        }
    }
    let mut plan = LocalPlan {
        weights: best.parts.iter().map(|p| p.1).collect(),
        components: best.parts.iter().map(|p| pool[p.0].v.clone()).collect(),
    };
    if opts.relaxed_uce {
        let (value, relaxed) = mixture_only(region, &plan, opts, id);
        if value > best.value {
            plan = relaxed;
        }
    }
    Ok(plan)
}

fn candidate(region: &Region, v: Vec<f64>) -> Candidate {
    Candidate {
        value: region.value(&v),
        cost: region.cost_of(&v),
        v,
    }
}

/// Multistart local maxima of `E0` at a grid of budgets spanning the
/// component's cost range, plus the actual budget.
fn local_optima(region: &Region, opts: &SolverOptions, id: usize) -> Vec<Candidate> {
    let mut budgets: Vec<(Option<f64>, usize)> = Vec::new();
    let starts = opts.starts.max(1);
    if region.binding(region.gamma) {
        let span = region.c_max - region.c_min;
        for k in 0..BUDGET_GRID {
            let b = region.c_min + span * k as f64 / (BUDGET_GRID - 1) as f64;
            budgets.push((Some(b), (starts / 4).max(2)));
        }
        budgets.push((Some(region.gamma), starts));
    } else {
        budgets.push((None, starts));
    }
    let mut pool = Vec::new();
    for (bi, &(budget, count)) in budgets.iter().enumerate() {
        for s in 0..count {
            let mut v = if s == 0 {
                region.uniform()
            } else {
                region.random_point(&mut stream(opts.seed, &[id as u64, bi as u64, s as u64]))
            };
            region.ascend(&mut v, &[1.0], budget, opts);
            pool.push(candidate(region, v));
        }
    }
    pool
}

/// Exact solution of `max sum w_u e_u` s.t. `sum w_u c_u <= gamma` over the
/// pool; an optimal vertex has at most two nonzero weights.
fn best_mixture(pool: &[Candidate], gamma: f64) -> Mixture {
    let mut best = Mixture {
        value: f64::NEG_INFINITY,
        parts: Vec::new(),
    };
    for (a, ca) in pool.iter().enumerate().filter(|(_, c)| c.cost <= gamma + SLACK) {
        if ca.value > best.value {
            best = Mixture {
                value: ca.value,
                parts: vec![(a, 1.0)],
            };
        }
        for (b, cb) in pool.iter().enumerate().filter(|(_, c)| c.cost > gamma + SLACK) {
            if cb.value <= ca.value {
                continue;
            }
            let wb = (gamma - ca.cost) / (cb.cost - ca.cost);
            let value = (1.0 - wb) * ca.value + wb * cb.value;
            if value > best.value {
                best = Mixture {
                    value,
                    parts: vec![(a, 1.0 - wb), (b, wb)],
                };
            }
        }
    }
    best
}

/// Mixture-only constraints: components are arbitrary distributions on the
/// component's arcs and only their mixture must balance and meet the
/// budget. Parametrized by unnormalized parts `y_u = w_u v_u`, whose sum is
/// the mixture; the objective is `sum_u y_u' D y_u / 1'y_u`.
fn mixture_only(region: &Region, warm: &LocalPlan, opts: &SolverOptions, id: usize) -> (f64, LocalPlan) {
    let l = region.l;
    let u = (region.ns + 2).min(l).max(2);
    let mut best: (f64, Vec<f64>) = (f64::NEG_INFINITY, Vec::new());
    let tries = opts.starts.clamp(1, 8);
    for t in 0..=tries {
        let mut rng = stream(opts.seed, &[id as u64, u64::MAX, t as u64]);
        let mut y = vec![0.0; u * l];
        for blk in y.chunks_mut(l) {
            let p = region.random_point(&mut rng);
            let scale = if t == 0 { 1e-3 } else { 1.0 / u as f64 };
            blk.iter_mut().zip(p).for_each(|(a, b)| *a = scale * b);
        }
        if t == 0 {
            for (blk, (w, v)) in y.chunks_mut(l).zip(warm.weights.iter().zip(&warm.components)) {
                blk.iter_mut().zip(v).for_each(|(a, b)| *a = w * b);
            }
        }
        let value = ascend_parts(region, &mut y, u, opts);
        if value > best.0 {
            best = (value, y);
        }
    }
    let (value, y) = best;
    let mut plan = LocalPlan {
        weights: Vec::new(),
        components: Vec::new(),
    };
    for blk in y.chunks(l) {
        let s: f64 = blk.iter().sum();
        if s > SLACK {
            let mut v = blk.to_vec();
            clean(&mut v);
            plan.weights.push(s);
            plan.components.push(v);
        }
    }
    let total: f64 = plan.weights.iter().sum();
    plan.weights.iter_mut().for_each(|w| *w /= total);
    (value, plan)
}

fn parts_objective(region: &Region, y: &[f64]) -> f64 {
    y.chunks(region.l)
        .map(|blk| {
            let s: f64 = blk.iter().sum();
            if s > SLACK {
                region.value(blk) / s
            } else {
                0.0
            }
        })
        .sum()
}

fn ascend_parts(region: &Region, y: &mut Vec<f64>, u: usize, opts: &SolverOptions) -> f64 {
    let l = region.l;
    let d = region.distances();
    project_parts(region, y, u);
    let mut value = parts_objective(region, y);
    if region.norm() == 0.0 {
        return value;
    }
    let base = 1.0 / (2.0 * region.norm());
    let mut step = base;
    let mut grad = vec![0.0; y.len()];
    for _ in 0..opts.max_iter {
        for (blk, g) in y.chunks(l).zip(grad.chunks_mut(l)) {
            let s: f64 = blk.iter().sum();
            if s <= SLACK {
                g.iter_mut().for_each(|x| *x = 0.0);
                continue;
            }
            let quad = region.value(blk) / (s * s);
            for a in 0..l {
                let dv: f64 = (0..l).map(|b| d[a * l + b] * blk[b]).sum();
                g[a] = 2.0 * dv / s - quad;
            }
        }
        let mut accepted = None;
        while step > 1e-14 * base {
            let mut next: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            project_parts(region, &mut next, u);
            let v = parts_objective(region, &next);
            if v >= value - 1e-15 {
                accepted = Some((next, v));
                break;
            }
            step *= 0.5;
        }
        let Some((next, v)) = accepted else { break };
        let change = next.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        *y = next;
        value = v;
        step = (step * 2.0).min(64.0 * base);
        if change < opts.tol {
            break;
        }
    }
    value
}

/// Dykstra projection onto `{y >= 0, sum_u y_u in balanced simplex, cost of
/// sum <= gamma}`. The second set is the affine plane of balanced unit-mass
/// vectors cut by the budget, projected onto exactly.
fn project_parts(region: &Region, y: &mut [f64], u: usize) {
    let l = region.l;
    let within = |v: &[f64]| -> Vec<f64> {
        match region.null_projector() {
            Some(pr) => (0..l).map(|a| (0..l).map(|b| pr[a * l + b] * v[b]).sum()).collect(),
            None => v.to_vec(),
        }
    };
    let ones = within(&vec![1.0; l]);
    let ones_mass: f64 = ones.iter().sum();
    let pc = within(&region.cost);
    let pc_mass: f64 = pc.iter().sum();
    let dir: Vec<f64> = pc.iter().zip(&ones).map(|(c, o)| c - pc_mass / ones_mass * o).collect();
    let dir_norm2: f64 = dir.iter().map(|c| c * c).sum();
    let binding = region.binding(region.gamma) && dir_norm2 > 1e-300;
    let mut inc_orth = vec![0.0; y.len()];
    let mut inc_aff = vec![0.0; y.len()];
    let mut before = vec![0.0; y.len()];
    for _ in 0..20_000 {
        before.copy_from_slice(y);
        for (x, p) in y.iter_mut().zip(inc_orth.iter_mut()) {
            let shifted = *x + *p;
            *x = shifted.max(0.0);
            *p = shifted - *x;
        }
        let in_orthant = y.to_vec();
        for (x, p) in y.iter_mut().zip(&inc_aff) {
            *x += p;
        }
        let shifted = y.to_vec();
        let mut s = vec![0.0; l];
        for blk in y.chunks(l) {
            s.iter_mut().zip(blk).for_each(|(a, b)| *a += b);
        }
        let mut t = within(&s);
        let fix = (1.0 - t.iter().sum::<f64>()) / ones_mass;
        t.iter_mut().zip(&ones).for_each(|(x, o)| *x += fix * o);
        if binding {
            let spent = region.cost_of(&t);
            if spent > region.gamma {
                let lambda = (spent - region.gamma) / dir_norm2;
                t.iter_mut().zip(&dir).for_each(|(x, c)| *x -= lambda * c);
            }
        }
        for blk in y.chunks_mut(l) {
            for a in 0..l {
                blk[a] += (t[a] - s[a]) / u as f64;
            }
        }
        for ((p, s), x) in inc_aff.iter_mut().zip(&shifted).zip(y.iter()) {
            *p = s - x;
        }
        let change = y.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gap = y.iter().zip(&in_orthant).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-15 && gap < 1e-13 {
            break;
        }
    }
    y.iter_mut().for_each(|x| *x = x.max(0.0));
}
