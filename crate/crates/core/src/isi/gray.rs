//! Second-order statistics of a uniformly quantized sinusoid
//! `Q(A sin(w0 t + phi))` and the exponent loss they cause.
//!
//! With `a = A / Delta` the quantization error is
//! `e(theta) = sum_m (2 Delta S_{2m-1} / pi) sin((2m-1) theta)`, where
//! `S_n = sum_l J_n(2 pi l a) / l`. `S_n` is evaluated in closed form by
//! integrating the sawtooth piece by piece between the crossings
//! `theta_k = asin(k / a)`; [`bessel_j`] gives the Bessel-series route for
//! cross-checks. Sums over `m` run over all integers and are folded onto
//! `m >= 1`, so `R_ee(0) = 2 sum_{m >= 1} eps_m`.

use alloc::format;
use alloc::vec::Vec;

use super::{max_response, response, IsiSpec};
use crate::math::{abs, asin, cos, floor, round, sin, sqrt, PI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayOptions {
    /// Stop once the unexplained error power is below this fraction of the
    /// total.
    pub rel_tol: f64,
    pub max_terms: usize,
    pub bessel_tol: f64,
}

impl Default for GrayOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 100_000,
            bessel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSinusoidStats {
    pub amplitude: f64,
    pub delta: f64,
    pub omega0: f64,
    /// `Delta S_1`; `R_xe(l) = A B cos(w0 l) / pi`.
    pub b: f64,
    /// `eps_m` for `m = 1..=terms`.
    pub eps: Vec<f64>,
    /// Fractional part of `(2m - 1) w0 / (2 pi)`.
    pub lambdas: Vec<f64>,
    pub r_ee: Vec<f64>,
    pub r_xe: Vec<f64>,
    /// `R_ee(0)` from the exact error power.
    pub error_power: f64,
    /// Error power not captured by the truncated series.
    pub tail_power: f64,
    /// The term cap was reached before `rel_tol`.
    pub degraded: bool,
}

impl QuantizedSinusoidStats {
    pub fn terms(&self) -> usize {
        self.eps.len()
    }
}

/// `J_m(z) = (1/pi) int_0^pi cos(m t - z sin t) dt` by adaptive Simpson.
pub fn bessel_j(m: i32, z: f64, tol: f64) -> f64 {
    let f = |t: f64| cos(m as f64 * t - z * sin(t));
    // Split so each panel sees a bounded number of oscillations.
    let panels = (abs(z) + abs(m as f64)).max(1.0) as usize;
    let h = PI / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson(&f, a, b, fa, fm, fb, whole, tol / panels as f64, 40);
    }
    total / PI
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || abs(diff) <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Crossing angles `asin(k / a)` for `k = 0..=floor(a)` followed by `pi/2`.
fn crossings(a: f64) -> Vec<f64> {
    let top = floor(a) as usize;
    let mut out: Vec<f64> = (0..=top).map(|k| asin((k as f64 / a).min(1.0))).collect();
    out.push(PI / 2.0);
    out
}

fn integral_cos(m: f64, lo: f64, hi: f64) -> f64 {
    if m == 0.0 {
        hi - lo
    } else {
        (sin(m * hi) - sin(m * lo)) / m
    }
}

fn s_odd(n: usize, cuts: &[f64], a: f64) -> f64 {
    let nf = n as f64;
    let mut acc = 0.0;
    for k in 0..cuts.len() - 1 {
        let (lo, hi) = (cuts[k], cuts[k + 1]);
        if hi <= lo {
            continue;
        }
        let c = k as f64 + 0.5;
        acc += PI * c * (cos(nf * lo) - cos(nf * hi)) / nf;
        acc -= PI * a * 0.5 * (integral_cos(nf - 1.0, lo, hi) - integral_cos(nf + 1.0, lo, hi));
    }
    acc * 2.0 / PI
}

/// `S_n(a) = sum_l J_n(2 pi l a) / l` for `n = 1, 3, ..., 2 count - 1`.
pub fn harmonic_sums(a: f64, count: usize) -> Vec<f64> {
    let cuts = crossings(a);
    (1..=count).map(|m| s_odd(2 * m - 1, &cuts, a)).collect()
}

/// Exact `(R_xe(0), R_ee(0))` of the unclamped midrise quantizer driven by
/// `A sin(theta)` with `theta` uniform.
pub fn exact_moments(amplitude: f64, delta: f64) -> (f64, f64) {
    let a = amplitude / delta;
    let cuts = crossings(a);
    let prim = |t: f64| t / 2.0 - sin(2.0 * t) / 4.0;
    let (mut xe, mut ee) = (0.0, 0.0);
    for k in 0..cuts.len() - 1 {
        let (lo, hi) = (cuts[k], cuts[k + 1]);
        if hi <= lo {
            continue;
        }
        let c = k as f64 + 0.5;
        let sin2 = prim(hi) - prim(lo);
        let dcos = cos(lo) - cos(hi);
        xe += a * c * dcos - a * a * sin2;
        ee += c * c * (hi - lo) - 2.0 * c * a * dcos + a * a * sin2;
    }
    let scale = 2.0 / PI * delta * delta;
    (xe * scale, ee * scale)
}

pub fn gray_stats(amplitude: f64, delta: f64, omega0: f64, lags: usize, opts: GrayOptions) -> Result<QuantizedSinusoidStats> {
    if !(amplitude > 0.0 && delta > 0.0 && amplitude.is_finite() && delta.is_finite()) {
        return Err(Error::InvalidArgument("amplitude and step must be positive".into()));
    }
    if !(omega0 > 0.0 && omega0 < PI) {
        return Err(Error::InvalidArgument("omega0 must lie in (0, pi)".into()));
    }
    let a = amplitude / delta;
    let cuts = crossings(a);
    let (_, error_power) = exact_moments(amplitude, delta);
    let mut eps = Vec::new();
    let mut captured = 0.0;
    let mut degraded = true;
    for m in 1..=opts.max_terms {
        let s = s_odd(2 * m - 1, &cuts, a);
        let e = (delta * s / PI) * (delta * s / PI);
        eps.push(e);
        captured += 2.0 * e;
        if error_power - captured <= opts.rel_tol * error_power {
            degraded = false;
            break;
        }
    }
    let two_pi = 2.0 * PI;
    let lambdas: Vec<f64> = (1..=eps.len())
        .map(|m| {
            let x = (2 * m - 1) as f64 * omega0 / two_pi;
            x - floor(x)
        })
        .collect();
    let r_ee = (0..=lags)
        .map(|l| {
            2.0 * eps
                .iter()
                .zip(&lambdas)
                .map(|(e, lam)| e * cos(two_pi * l as f64 * lam))
                .sum::<f64>()
        })
        .collect();
    let b = delta * s_odd(1, &cuts, a);
    let r_xe = (0..=lags).map(|l| amplitude * b * cos(omega0 * l as f64) / PI).collect();
    Ok(QuantizedSinusoidStats {
        amplitude,
        delta,
        omega0,
        b,
        eps,
        lambdas,
        r_ee,
        r_xe,
        error_power,
        tail_power: (error_power - captured).max(0.0),
        degraded,
    })
}

/// Time averages of a quantized sinusoid against the power decomposition
/// `A^2/2 + 2 R_xe(0) + R_ee(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub time_power: f64,
    pub time_r_ee: f64,
    pub time_r_xe: f64,
    pub series_r_ee: f64,
    pub series_r_xe: f64,
    pub decomposition: f64,
    pub rel_error: f64,
}

fn quantize(x: f64, delta: f64) -> f64 {
    delta * (floor(x / delta) + 0.5)
}

pub fn power_identity_check(
    amplitude: f64,
    delta: f64,
    omega0: f64,
    phase: f64,
    n_samples: usize,
    opts: GrayOptions,
) -> Result<PowerReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let stats = gray_stats(amplitude, delta, omega0, 0, opts)?;
    let (mut p, mut ee, mut xe) = (0.0, 0.0, 0.0);
    for t in 0..n_samples {
        let x = amplitude * sin(omega0 * t as f64 + phase);
        let q = quantize(x, delta);
        let e = q - x;
        p += q * q;
        ee += e * e;
        xe += x * e;
    }
    let n = n_samples as f64;
    let decomposition = amplitude * amplitude / 2.0 + 2.0 * stats.r_xe[0] + stats.r_ee[0];
    let time_power = p / n;
    Ok(PowerReport {
        time_power,
        time_r_ee: ee / n,
        time_r_xe: xe / n,
        series_r_ee: stats.r_ee[0],
        series_r_xe: stats.r_xe[0],
        decomposition,
        rel_error: abs(time_power - decomposition) / time_power,
    })
}

/// Largest amplitude up to `max_amplitude` whose quantized power
/// `A^2/2 + 2 R_xe(0) + R_ee(0)` stays within `gamma` (bisection).
pub fn amplitude_for_power(delta: f64, max_amplitude: f64, gamma: f64) -> f64 {
    let power = |amp: f64| {
        let (xe, ee) = exact_moments(amp, delta);
        amp * amp / 2.0 + 2.0 * xe + ee
    };
    if power(max_amplitude) <= gamma {
        return max_amplitude;
    }
    let (mut lo, mut hi) = (0.0, max_amplitude);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) <= gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `K` midrise levels `+-(i - 1/2) Delta` with the top level at
/// `sqrt(2 Gamma)`; returns the levels and `Delta`.
pub fn uniform_levels(k: usize, gamma: f64) -> (Vec<f64>, f64) {
    let delta = 2.0 * sqrt(2.0 * gamma) / (k as f64 - 1.0);
    let levels = (0..k).map(|i| (i as f64 - (k as f64 - 1.0) / 2.0) * delta).collect();
    (levels, delta)
}

const PERTURBATION: f64 = 2.0 * PI * core::f64::consts::SQRT_2 * 1e-3;

/// The sinusoid frequency: `omega_star` itself unless `omega_star / (2 pi)`
/// is (numerically) a fraction with a small denominator, in which case it is
/// moved by `2 pi sqrt(2) 1e-3`, inward at `pi`. Returns the frequency and
/// whether it was moved.
pub fn choose_omega0(omega_star: f64) -> (f64, bool) {
    let x = omega_star / (2.0 * PI);
    let rational = (1..=64u32).any(|q| abs(x * q as f64 - round(x * q as f64)) < 1e-9 * q as f64);
    if !rational {
        return (omega_star, false);
    }
    if omega_star + PERTURBATION < PI {
        (omega_star + PERTURBATION, true)
    } else {
        (omega_star - PERTURBATION, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub levels: usize,
    pub delta: f64,
    pub amplitude: f64,
    pub omega_star: f64,
    pub omega0: f64,
    pub perturbed: bool,
    pub hmax: f64,
    pub spectral_bound: f64,
    /// `sum_m eps_m [Hmax - |H((2m-1) w0)|^2]` over all integer `m`.
    pub lambda: f64,
    /// Upper bound on the part of `lambda` lost to truncation.
    pub lambda_tail: f64,
    /// `(Gamma Hmax - lambda) / (4 sigma^2)`.
    pub lower_bound: f64,
    /// Exponent of the quantized sinusoid itself: actual power, the response
    /// at `w0` for the fundamental, truncated harmonics.
    pub achieved: f64,
    pub terms: usize,
    pub degraded: bool,
}

pub fn quantization_loss(spec: &IsiSpec, omega_star: f64, stats: &QuantizedSinusoidStats) -> Result<LossReport> {
    spec.validate()?;
    let hmax = response(&spec.h, omega_star);
    let mut lambda = 0.0;
    let mut harmonics = 0.0;
    for (m, e) in stats.eps.iter().enumerate() {
        let gain = response(&spec.h, (2 * m + 1) as f64 * stats.omega0);
        lambda += 2.0 * e * (hmax - gain).max(0.0);
        harmonics += 2.0 * e * gain;
    }
    let four_s2 = 4.0 * spec.sigma2;
    let fundamental = stats.amplitude * stats.amplitude / 2.0 + 2.0 * stats.r_xe[0];
    Ok(LossReport {
        levels: spec.levels.len(),
        delta: stats.delta,
        amplitude: stats.amplitude,
        omega_star,
        omega0: stats.omega0,
        perturbed: stats.omega0 != omega_star,
        hmax,
        spectral_bound: spec.gamma * hmax / four_s2,
        lambda,
        lambda_tail: hmax * stats.tail_power,
        lower_bound: (spec.gamma * hmax - lambda) / four_s2,
        achieved: (fundamental * response(&spec.h, stats.omega0) + harmonics) / four_s2,
        terms: stats.terms(),
        degraded: stats.degraded,
    })
}

/// Loss for each level count in `ks`: uniform midrise levels, amplitude by
/// bisection, frequency from the spectral optimum.
pub fn loss_curve(h: &[f64], sigma2: f64, gamma: f64, ks: &[usize], opts: GrayOptions) -> Result<Vec<LossReport>> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidArgument("power budget must be positive".into()));
    }
    let (omega_star, _) = max_response(h);
    let (omega0, _) = choose_omega0(omega_star);
    ks.iter()
        .map(|&k| {
            if k < 2 {
                return Err(Error::InvalidArgument("need at least two levels".into()));
            }
            let (levels, delta) = uniform_levels(k, gamma);
            let spec = IsiSpec {
                h: h.to_vec(),
                sigma2,
                levels,
                gamma,
            };
            let amplitude = amplitude_for_power(delta, sqrt(2.0 * gamma), gamma);
            if amplitude <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "no sinusoid amplitude keeps {k} quantized levels within the budget"
                )));
            }
            let stats = gray_stats(amplitude, delta, omega0, 0, opts)?;
            quantization_loss(&spec, omega_star, &stats)
        })
        .collect()
}
