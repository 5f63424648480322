//! Gaussian inter-symbol interference `y_t = sum_i h_i x_{t-i} + w_t`:
//! the shift-register channel, the closed-form exponent, the spectral upper
//! bound, and the quantized-sinusoid lower bound.

mod gray;

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::bhatt::ChannelKernel;
use crate::exponent::{CostModel, PairDistribution};
use crate::fsm::{augment, feasible_pairs, shift_register, tuple_digits, FeasiblePairSet, StateMachine};
use crate::math::{abs, cos, sin, PI};
use crate::{Error, Result};

pub use gray::{
    amplitude_for_power, bessel_j, choose_omega0, exact_moments, gray_stats, harmonic_sums, loss_curve, power_identity_check,
    quantization_loss, uniform_levels, GrayOptions, LossReport, PowerReport, QuantizedSinusoidStats,
};

const MAX_STATES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct IsiSpec {
    /// `h_0, ..., h_k`.
    pub h: Vec<f64>,
    pub sigma2: f64,
    pub levels: Vec<f64>,
    /// Average power budget; the cost is `x^2`.
    pub gamma: f64,
}

impl IsiSpec {
    pub fn validate(&self) -> Result<()> {
        if self.h.is_empty() || self.h.iter().all(|&v| v == 0.0) || self.h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("impulse response needs a nonzero finite tap".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::InvalidArgument("need at least two input levels".into()));
        }
        Ok(())
    }

    /// Memory `k`.
    pub fn memory(&self) -> usize {
        self.h.len() - 1
    }

    pub fn cost(&self) -> CostModel {
        CostModel {
            phi: self.levels.iter().map(|x| x * x).collect(),
            gamma: self.gamma,
        }
    }

    /// `|H(e^{i w})|^2`.
    pub fn response(&self, omega: f64) -> f64 {
        response(&self.h, omega)
    }
}

pub(crate) fn response(h: &[f64], omega: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (l, &c) in h.iter().enumerate() {
        re += c * cos(omega * l as f64);
        im -= c * sin(omega * l as f64);
    }
    re * re + im * im
}

/// The channel as a state machine with its feasible pairs and Gaussian
/// kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct IsiChannel {
    pub machine: StateMachine,
    pub pairs: FeasiblePairSet,
    pub kernel: ChannelKernel,
}

/// States hold the last `k` inputs, oldest first; the recover map returns
/// the newest. For `k = 0` a single-state machine is augmented, so states
/// carry the previous input. The mean on pair `(s, s+)` is
/// `h_0 g(s+) + sum_{i >= 1} h_i x_{t-i}` with `x_{t-i}` read from `s`.
pub fn build_isi_machine(spec: &IsiSpec) -> Result<IsiChannel> {
    spec.validate()?;
    let k = spec.memory();
    let base = spec.levels.len();
    let states = base.checked_pow(k as u32).filter(|&s| s <= MAX_STATES);
    if states.is_none() {
        return Err(Error::Unsupported(format!("{base}^{k} states exceed the limit of {MAX_STATES}")));
    }
    let machine = if k == 0 {
        let single = StateMachine::new(vec!["0".to_string()], spec.levels.clone(), vec![0; base], None)?;
        augment(&single)?.machine
    } else {
        shift_register(&spec.levels, k)?
    };
    let pairs = feasible_pairs(&machine)?;
    let means = pairs
        .pairs()
        .iter()
        .map(|p| {
            let mut mu = spec.h[0] * spec.levels[p.symbol];
            if k > 0 {
                let past = tuple_digits(p.from, base, k);
                for i in 1..=k {
                    mu += spec.h[i] * spec.levels[past[k - i]];
                }
            }
            mu
        })
        .collect();
    let kernel = ChannelKernel::gaussian(means, spec.sigma2)?;
    Ok(IsiChannel { machine, pairs, kernel })
}

/// Checks that the first-`k` and last-`k` marginals of a law on
/// `(k+1)`-tuples (base-`K` index, oldest digit first) agree.
fn check_shift_consistent(q: &[f64], base: usize, k: usize) -> Result<()> {
    let total: f64 = q.iter().sum();
    if q.iter().any(|&v| v < 0.0) || abs(total - 1.0) > 1e-10 {
        return Err(Error::InvalidDistribution("not a probability vector".into()));
    }
    if k == 0 {
        return Ok(());
    }
    let cells = base.pow(k as u32);
    let mut head = vec![0.0; cells];
    let mut tail = vec![0.0; cells];
    for (code, &v) in q.iter().enumerate() {
        head[code / base] += v;
        tail[code % cells] += v;
    }
    if let Some(c) = (0..cells).find(|&c| abs(head[c] - tail[c]) > 1e-9) {
        return Err(Error::InvalidDistribution(format!(
            "tuple marginals are not shift-consistent at {c}"
        )));
    }
    Ok(())
}

/// `E0` from input correlations:
/// `(1/(4 sigma^2)) [sum_{i,j} h_i h_j R(|i-j|) - (m sum_i h_i)^2]`, where
/// `q` is a law on `(k+1)`-tuples of levels indexed in base `K`, oldest
/// digit first.
pub fn e0_isi(q: &[f64], spec: &IsiSpec) -> Result<f64> {
    spec.validate()?;
    let k = spec.memory();
    let base = spec.levels.len();
    let len = base.pow(k as u32 + 1);
    if q.len() != len {
        return Err(Error::Dimension {
            expected: len,
            got: q.len(),
        });
    }
    check_shift_consistent(q, base, k)?;
    let mut corr = vec![0.0; k + 1];
    let mut mean = 0.0;
    for (code, &v) in q.iter().enumerate().filter(|(_, v)| **v > 0.0) {
        let x: Vec<f64> = tuple_digits(code, base, k + 1).iter().map(|&d| spec.levels[d]).collect();
        mean += v * x[k];
        for (lag, c) in corr.iter_mut().enumerate() {
            *c += v * x[k] * x[k - lag];
        }
    }
    let mut quad = 0.0;
    for i in 0..=k {
        for j in 0..=k {
            quad += spec.h[i] * spec.h[j] * corr[i.abs_diff(j)];
        }
    }
    let dc: f64 = spec.h.iter().sum::<f64>() * mean;
    Ok((quad - dc * dc) / (4.0 * spec.sigma2))
}

/// The pair distribution on [`build_isi_machine`]'s pairs induced by a law
/// on `(k+1)`-tuples. For `k = 0` consecutive inputs are taken independent.
pub fn induced_pair_distribution(q: &[f64], spec: &IsiSpec, channel: &IsiChannel) -> Result<PairDistribution> {
    spec.validate()?;
    let k = spec.memory();
    let base = spec.levels.len();
    let len = base.pow(k as u32 + 1);
    if q.len() != len {
        return Err(Error::Dimension {
            expected: len,
            got: q.len(),
        });
    }
    check_shift_consistent(q, base, k)?;
    let mut out = vec![0.0; channel.pairs.len()];
    for (code, &v) in q.iter().enumerate() {
        if k == 0 {
            for (prev, &w) in q.iter().enumerate() {
                let i = channel
                    .pairs
                    .index_of(prev, channel.machine.next(prev, code))
                    .ok_or(Error::InconsistentPath(code))?;
                out[i] += w * v;
            }
        } else {
            let from = code / base;
            let to = channel.machine.next(from, code % base);
            let i = channel.pairs.index_of(from, to).ok_or(Error::InconsistentPath(code))?;
            out[i] += v;
        }
    }
    PairDistribution::new(out, &channel.pairs)
}

const GRID: usize = 4096;
const GOLDEN_TOL: f64 = 1e-10;

/// `Gamma max_w |H(e^{iw})|^2 / (4 sigma^2)` and the maximizing frequency
/// in `[0, pi]` (grid search then golden-section refinement).
pub fn spectral_bound(spec: &IsiSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let (omega, hmax) = max_response(&spec.h);
    Ok((spec.gamma * hmax / (4.0 * spec.sigma2), omega))
}

pub(crate) fn max_response(h: &[f64]) -> (f64, f64) {
    let at = |i: usize| PI * i as f64 / (GRID - 1) as f64;
    let best = (0..GRID)
        .max_by(|&a, &b| response(h, at(a)).total_cmp(&response(h, at(b))).then(b.cmp(&a)))
        .unwrap_or(0);
    let (mut lo, mut hi) = (at(best.saturating_sub(1)), at((best + 1).min(GRID - 1)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    while hi - lo > GOLDEN_TOL {
        if response(h, c) > response(h, d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    let mut omega = at(best);
    for cand in [0.5 * (lo + hi), lo, hi] {
        if response(h, cand) > response(h, omega) {
            omega = cand;
        }
    }
    (omega, response(h, omega))
}
