//! Monte Carlo validation: maximum-likelihood decoding of codebooks over
//! the pair-indexed memoryless channel, pairwise error checks against the
//! Bhattacharyya bound, and the `Z(rho)` oracle.

mod zrho;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::bhatt::{ChannelKernel, DistanceMatrix};
use crate::math::{exp, ln, sqrt};
use crate::rng::stream;
use crate::{Error, Result};

pub use zrho::{delta, z_rho, z_rho_sweep, QuadrupleDistribution, ZOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub n: usize,
    /// Trials per codeword.
    pub trials: u64,
    pub errors: Vec<u64>,
    pub pe: Vec<f64>,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub stderr: Vec<f64>,
    /// `-ln(max_m pe_m) / n`; `None` when no errors were observed.
    pub empirical_exponent: Option<f64>,
    /// Exponent at `max pe -/+ one standard error` (lower end first); an
    /// upper end of `None` means the band reaches zero error probability.
    pub exponent_band: (Option<f64>, Option<f64>),
}

impl SimulationReport {
    pub fn from_counts(n: usize, trials: u64, errors: Vec<u64>) -> Self {
        let t = trials as f64;
        let pe: Vec<f64> = errors.iter().map(|&e| e as f64 / t).collect();
        let stderr: Vec<f64> = pe.iter().map(|&p| sqrt(p * (1.0 - p) / t)).collect();
        let worst = (0..pe.len()).max_by(|&a, &b| pe[a].total_cmp(&pe[b]).then(b.cmp(&a)));
        let expo = |p: f64| if p > 0.0 { Some(-ln(p.min(1.0)) / n as f64) } else { None };
        let (empirical_exponent, exponent_band) = match worst {
            Some(m) if pe[m] > 0.0 => (expo(pe[m]), (expo(pe[m] + stderr[m]), expo(pe[m] - stderr[m]))),
            _ => (None, (None, None)),
        };
        SimulationReport {
            n,
            trials,
            errors,
            pe,
            stderr,
            empirical_exponent,
            exponent_band,
        }
    }
}

fn check_codebook(kernel: &ChannelKernel, codewords: &[Vec<usize>]) -> Result<usize> {
    let n = codewords.first().map_or(0, Vec::len);
    for cw in codewords {
        if cw.len() != n {
            return Err(Error::InvalidArgument("codewords differ in length".into()));
        }
        if let Some(&bad) = cw.iter().find(|&&e| e >= kernel.len()) {
            return Err(Error::Dimension {
                expected: kernel.len(),
                got: bad + 1,
            });
        }
    }
    Ok(n)
}

/// One transmission of codeword `m` (given as its pair-index sequence)
/// with the stream for `(seed, m, trial)`. Returns whether ML decoding
/// failed; a tie with another codeword counts as a failure.
pub fn simulate_trial(kernel: &ChannelKernel, codewords: &[Vec<usize>], m: usize, trial: u64, seed: u64) -> Result<bool> {
    let mut rng = stream(seed, &[m as u64, trial]);
    let sent = &codewords[m];
    let mut scores = vec![0.0; codewords.len()];
    for t in 0..sent.len() {
        let y = kernel.sample(sent[t], &mut rng);
        for (s, cw) in scores.iter_mut().zip(codewords) {
            *s += kernel.likelihood(cw[t], y)?;
        }
    }
    let own = scores[m];
    Ok(scores.iter().enumerate().any(|(k, &s)| k != m && s >= own))
}

/// ML decoding simulation of every codeword, `trials` times each.
pub fn simulate(kernel: &ChannelKernel, codewords: &[Vec<usize>], trials: u64, seed: u64) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let n = check_codebook(kernel, codewords)?;
    let mut errors = vec![0u64; codewords.len()];
    for (m, err) in errors.iter_mut().enumerate() {
        for trial in 0..trials {
            if simulate_trial(kernel, codewords, m, trial, seed)? {
                *err += 1;
            }
        }
    }
    Ok(SimulationReport::from_counts(n, trials, errors))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub p_hat: f64,
    pub stderr: f64,
    /// `exp(-sum_t d(a_t, b_t))`.
    pub bound: f64,
    /// `p_hat <= bound + 3 stderr`.
    pub within_bound: bool,
}

/// Two-codeword ML error with `a` sent; ties are broken by a fair coin.
pub fn pairwise_check(
    kernel: &ChannelKernel,
    d: &DistanceMatrix,
    a: &[usize],
    b: &[usize],
    trials: u64,
    seed: u64,
) -> Result<PairwiseReport> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("paths differ in length".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    check_codebook(kernel, &[a.to_vec(), b.to_vec()])?;
    let total: f64 = a.iter().zip(b).map(|(&i, &j)| d.get(i, j)).sum();
    let mut errors = 0u64;
    for trial in 0..trials {
        let mut rng = stream(seed, &[trial]);
        let mut margin = 0.0;
        for (&i, &j) in a.iter().zip(b) {
            let y = kernel.sample(i, &mut rng);
            margin += kernel.likelihood(i, y)? - kernel.likelihood(j, y)?;
        }
        let wrong = if margin == 0.0 { rng.random::<bool>() } else { margin < 0.0 };
        errors += wrong as u64;
    }
    let p_hat = errors as f64 / trials as f64;
    let stderr = sqrt(p_hat * (1.0 - p_hat) / trials as f64);
    let bound = exp(-total);
    Ok(PairwiseReport {
        p_hat,
        stderr,
        bound,
        within_bound: p_hat <= bound + 3.0 * stderr,
    })
}
