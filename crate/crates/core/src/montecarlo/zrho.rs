//! `Z(rho) = min_w rho * Delta(w) - <w, d>` over joint laws of two coupled
//! pair sequences with both pair marginals fixed to `q` and the stationarity
//! of the state-pair chain.
//!
//! `Delta(w) = H(S+|S) + H(S+'|S') - H(S+ S+'|S S')`. With the marginals
//! fixed the first two terms are constants, the third is concave in `w`,
//! and the stationarity condition is linear in `w`, so the problem is a
//! convex program; it is solved by projected gradient with backtracking.

use alloc::vec;
use alloc::vec::Vec;

use crate::bhatt::DistanceMatrix;
use crate::exponent::{e0, PairDistribution};
use crate::fsm::FeasiblePairSet;
use crate::linalg::psd_pinv;
use crate::math::{ln, xlnx};
use crate::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const MAX_STATES: usize = 8;
const SUPPORT_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct ZOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ZOptions {
    fn default() -> Self {
        ZOptions {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

/// Joint law `w(i, j)` over feasible pair indices, row-major `L x L`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleDistribution {
    pub l: usize,
    pub w: Vec<f64>,
}

impl QuadrupleDistribution {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.l + j]
    }
}

/// `Delta(w)` with every entropy taken from `w` itself.
pub fn delta(w: &QuadrupleDistribution, pairs: &FeasiblePairSet) -> f64 {
    let l = w.l;
    let s = pairs.num_states();
    let mut row = vec![0.0; l];
    let mut col = vec![0.0; l];
    for (i, r) in row.iter_mut().enumerate() {
        for (j, c) in col.iter_mut().enumerate() {
            *r += w.get(i, j);
            *c += w.get(i, j);
        }
    }
    let cond = |m: &[f64]| {
        let mut pi = vec![0.0; s];
        for (p, v) in pairs.pairs().iter().zip(m) {
            pi[p.from] += v;
        }
        m.iter().map(|&v| xlnx(v)).sum::<f64>() - pi.iter().map(|&v| xlnx(v)).sum::<f64>()
    };
    let mut block = vec![0.0; s * s];
    for i in 0..l {
        for j in 0..l {
            block[pairs.get(i).from * s + pairs.get(j).from] += w.get(i, j);
        }
    }
    let joint = w.w.iter().map(|&v| xlnx(v)).sum::<f64>() - block.iter().map(|&v| xlnx(v)).sum::<f64>();
    // H(A|C) + H(B|D) - H(AB|CD) = -cond(row) - cond(col) + joint
    joint - cond(&row) - cond(&col)
}

struct Problem<'a> {
    sup: Vec<usize>,
    k: usize,
    s: usize,
    /// State-pair block of every variable.
    block: Vec<usize>,
    d: Vec<f64>,
    /// `B' (B B')^+`, `k^2 x r`, and `B`, `r x k^2`.
    corr: Vec<f64>,
    b_mat: Vec<f64>,
    rhs: Vec<f64>,
    rows: usize,
    /// `2 H_q(S+|S)`.
    h_const: f64,
    pairs: &'a FeasiblePairSet,
}

impl<'a> Problem<'a> {
    fn new(q: &[f64], pairs: &'a FeasiblePairSet, d: &DistanceMatrix) -> Self {
        let sup: Vec<usize> = (0..q.len()).filter(|&i| q[i] > SUPPORT_EPS).collect();
        let k = sup.len();
        let s = pairs.num_states();
        let n = k * k;
        let rows = 2 * k + s * s;
        let mut b_mat = vec![0.0; rows * n];
        let mut rhs = vec![0.0; rows];
        let mut block = vec![0; n];
        for a in 0..k {
            for b in 0..k {
                let x = a * k + b;
                let (pa, pb) = (pairs.get(sup[a]), pairs.get(sup[b]));
                b_mat[a * n + x] = 1.0;
                b_mat[(k + b) * n + x] = 1.0;
                b_mat[(2 * k + pa.to * s + pb.to) * n + x] += 1.0;
                b_mat[(2 * k + pa.from * s + pb.from) * n + x] -= 1.0;
                block[x] = pa.from * s + pb.from;
            }
            rhs[a] = q[sup[a]];
            rhs[k + a] = q[sup[a]];
        }
        let mut gram = vec![0.0; rows * rows];
        for r1 in 0..rows {
            for r2 in r1..rows {
                let v: f64 = (0..n).map(|x| b_mat[r1 * n + x] * b_mat[r2 * n + x]).sum();
                gram[r1 * rows + r2] = v;
                gram[r2 * rows + r1] = v;
            }
        }
        let g_inv = psd_pinv(&gram, rows, 1e-10);
        let mut corr = vec![0.0; n * rows];
        for x in 0..n {
            for r in 0..rows {
                corr[x * rows + r] = (0..rows).map(|t| b_mat[t * n + x] * g_inv[t * rows + r]).sum();
            }
        }
        let mut pi = vec![0.0; s];
        for (p, v) in pairs.pairs().iter().zip(q) {
            pi[p.from] += v;
        }
        let h_cond = -(q.iter().map(|&v| xlnx(v)).sum::<f64>() - pi.iter().map(|&v| xlnx(v)).sum::<f64>());
        let dl = (0..n).map(|x| d.get(sup[x / k], sup[x % k])).collect();
        Problem {
            sup,
            k,
            s,
            block,
            d: dl,
            corr,
            b_mat,
            rhs,
            rows,
            h_const: 2.0 * h_cond,
            pairs,
        }
    }

    fn blocks(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.s * self.s];
        for (v, &b) in x.iter().zip(&self.block) {
            w[b] += v.max(0.0);
        }
        w
    }

    fn objective(&self, x: &[f64], rho: f64) -> f64 {
        let neg_joint = x.iter().map(|&v| xlnx(v.max(0.0))).sum::<f64>() - self.blocks(x).iter().map(|&v| xlnx(v)).sum::<f64>();
        let linear: f64 = x.iter().zip(&self.d).map(|(a, b)| a * b).sum();
        rho * (self.h_const + neg_joint) - linear
    }

    fn gradient(&self, x: &[f64], rho: f64, out: &mut [f64]) {
        let w = self.blocks(x);
        for (i, g) in out.iter_mut().enumerate() {
            let v = x[i].max(1e-300);
            let blk = w[self.block[i]].max(1e-300);
            *g = rho * ln(v / blk) - self.d[i];
        }
    }

    fn project(&self, x: &mut [f64]) {
        let n = x.len();
        let mut inc = vec![0.0; n];
        let mut before = vec![0.0; n];
        let mut resid = vec![0.0; self.rows];
        for _ in 0..10_000 {
            before.copy_from_slice(x);
            for (v, p) in x.iter_mut().zip(inc.iter_mut()) {
                let shifted = *v + *p;
                *v = shifted.max(0.0);
                *p = shifted - *v;
            }
            let in_orthant = x.to_vec();
            for (r, res) in resid.iter_mut().enumerate() {
                *res = dot(&self.b_mat[r * n..(r + 1) * n], x) - self.rhs[r];
            }
            for (t, xt) in x.iter_mut().enumerate() {
                *xt -= dot(&self.corr[t * self.rows..(t + 1) * self.rows], &resid);
            }
            let change = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let gap = x.iter().zip(&in_orthant).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change < 1e-16 && gap < 1e-14 {
                break;
            }
        }
    }

    fn product(&self, q: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k * k).map(|x| q[self.sup[x / k]] * q[self.sup[x % k]]).collect()
    }

    /// Monotone projected gradient from `x`.
    fn minimize(&self, x: &mut Vec<f64>, rho: f64, opts: &ZOptions) -> f64 {
        let n = x.len();
        let mut value = self.objective(x, rho);
        let mut grad = vec![0.0; n];
        let mut step = 1.0 / rho.max(1.0);
        for _ in 0..opts.max_iter {
            self.gradient(x, rho, &mut grad);
            let mut accepted = None;
            while step > 1e-18 {
                let mut next: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                self.project(&mut next);
                let v = self.objective(&next, rho);
                let lin: f64 = grad.iter().zip(next.iter().zip(x.iter())).map(|(g, (a, b))| g * (a - b)).sum();
                let sq: f64 = next.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if v <= value + lin + sq / (2.0 * step) && v <= value {
                    accepted = Some((next, v));
                    break;
                }
                step *= 0.5;
            }
            let Some((next, v)) = accepted else { break };
            let change = next.iter().zip(x.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let gain = value - v;
            *x = next;
            value = v;
            step *= 2.0;
            if change < opts.tol || gain < 1e-15 * (1.0 + value.abs()) {
                break;
            }
        }
        value
    }

    fn embed(&self, x: &[f64]) -> QuadrupleDistribution {
        let l = self.pairs.len();
        let k = self.k;
        let mut w = vec![0.0; l * l];
        for (t, &v) in x.iter().enumerate() {
            w[self.sup[t / k] * l + self.sup[t % k]] = v.max(0.0);
        }
        QuadrupleDistribution { l, w }
    }
}

fn check(q: &PairDistribution, pairs: &FeasiblePairSet, d: &DistanceMatrix) -> Result<()> {
    if pairs.num_states() > MAX_STATES {
        return Err(Error::Unsupported(alloc::format!(
            "Z(rho) needs at most {MAX_STATES} states, machine has {}",
            pairs.num_states()
        )));
    }
    if d.len() != pairs.len() || q.as_slice().len() != pairs.len() {
        return Err(Error::Dimension {
            expected: pairs.len(),
            got: d.len(),
        });
    }
    e0(q.as_slice(), d).map(|_| ())
}

/// `Z(rho)` and its minimizer, started from the product law
/// `w = q (x) q`, where the objective equals `-E0(q)`.
pub fn z_rho(
    q: &PairDistribution,
    pairs: &FeasiblePairSet,
    d: &DistanceMatrix,
    rho: f64,
    opts: &ZOptions,
) -> Result<(f64, QuadrupleDistribution)> {
    let mut sweep = z_rho_sweep(q, pairs, d, &[rho], opts)?;
    let (_, v, w) = sweep.pop().unwrap_or_else(|| unreachable!());
    Ok((v, w))
}

/// `Z(rho)` for several values, solved in decreasing `rho` with each
/// solution warm-starting the next; results follow the input order as
/// `(rho, value, argmin)`.
pub fn z_rho_sweep(
    q: &PairDistribution,
    pairs: &FeasiblePairSet,
    d: &DistanceMatrix,
    rhos: &[f64],
    opts: &ZOptions,
) -> Result<Vec<(f64, f64, QuadrupleDistribution)>> {
    check(q, pairs, d)?;
    if let Some(bad) = rhos.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(alloc::format!("rho must be positive, got {bad}")));
    }
    let qs = q.as_slice();
    let prob = Problem::new(qs, pairs, d);
    let product = prob.product(qs);
    let mut order: Vec<usize> = (0..rhos.len()).collect();
    order.sort_by(|&a, &b| rhos[b].total_cmp(&rhos[a]));
    let mut out: Vec<Option<(f64, f64, QuadrupleDistribution)>> = vec![None; rhos.len()];
    let mut warm: Option<Vec<f64>> = None;
    for idx in order {
        let rho = rhos[idx];
        let mut x = product.clone();
        if let Some(prev) = &warm {
            if prob.objective(prev, rho) < prob.objective(&x, rho) {
                x = prev.clone();
            }
        }
        let value = prob.minimize(&mut x, rho, opts);
        out[idx] = Some((rho, value, prob.embed(&x)));
        warm = Some(x);
    }
    Ok(out.into_iter().map(|o| o.unwrap_or_else(|| unreachable!())).collect())
}
