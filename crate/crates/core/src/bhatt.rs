//! Output kernels indexed by feasible state pair and the Bhattacharyya
//! distance matrix between them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::fsm::FeasiblePairSet;
use crate::math::{abs, ln, sqrt, PI};
use crate::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Output law `p(y | s, s+)` for every feasible pair, in pair-index order.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKernel {
    /// One pmf row per pair over a finite output alphabet `0..outputs`.
    Discrete { outputs: usize, rows: Vec<Vec<f64>> },
    /// Gaussian output with a per-pair mean and shared variance.
    Gaussian { means: Vec<f64>, variance: f64 },
}

/// A channel output: an index into the discrete alphabet or a real sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Index(usize),
    Real(f64),
}

impl ChannelKernel {
    /// Rows deviating from unit sum by less than `1e-12` are renormalized;
    /// larger deviations and negative entries are rejected.
    pub fn discrete(rows: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if outputs == 0 {
            return Err(Error::InvalidKernel("empty output alphabet".into()));
        }
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() != outputs {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidKernel(format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if abs(total - 1.0) > ROW_TOL {
                return Err(Error::InvalidKernel(format!("row {i} sums to {total}")));
            }
            row.iter_mut().for_each(|p| *p /= total);
        }
        Ok(ChannelKernel::Discrete { outputs, rows })
    }

    pub fn gaussian(means: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidKernel(format!("variance must be positive, got {variance}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidKernel("non-finite mean".into()));
        }
        Ok(ChannelKernel::Gaussian { means, variance })
    }

    /// Number of pairs the kernel covers.
    pub fn len(&self) -> usize {
        match self {
            ChannelKernel::Discrete { rows, .. } => rows.len(),
            ChannelKernel::Gaussian { means, .. } => means.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ln p(y | pair)`.
    pub fn likelihood(&self, pair: usize, y: Output) -> Result<f64> {
        self.check_pair(pair)?;
        match (self, y) {
            (ChannelKernel::Discrete { outputs, rows }, Output::Index(k)) => {
                if k >= *outputs {
                    return Err(Error::OutputOutOfRange(k));
                }
                Ok(ln(rows[pair][k]))
            }
            (ChannelKernel::Gaussian { means, variance }, Output::Real(v)) => {
                let r = v - means[pair];
                Ok(-r * r / (2.0 * variance) - 0.5 * ln(2.0 * PI * variance))
            }
            _ => Err(Error::InvalidArgument("output kind does not match the kernel".into())),
        }
    }

    /// Draws one output from `p(. | pair)`.
    pub fn sample<R: Rng + ?Sized>(&self, pair: usize, rng: &mut R) -> Output {
        match self {
            ChannelKernel::Discrete { rows, .. } => {
                let u: f64 = rng.random();
                let row = &rows[pair];
                let mut acc = 0.0;
                for (k, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Output::Index(k);
                    }
                }
                // rounding left u above the last partial sum
                Output::Index(row.iter().rposition(|&p| p > 0.0).unwrap_or(0))
            }
            ChannelKernel::Gaussian { means, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                Output::Real(means[pair] + sqrt(*variance) * z)
            }
        }
    }

    fn check_pair(&self, pair: usize) -> Result<()> {
        if pair >= self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: pair + 1,
            });
        }
        Ok(())
    }
}

/// Symmetric `L x L` matrix of Bhattacharyya distances in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Accepts any symmetric, nonnegative matrix with a zero diagonal
    /// (`+inf` allowed off the diagonal), given row-major.
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: d.len(),
            });
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if v.is_nan() || v < 0.0 || v != d[j * n + i] {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is negative or asymmetric")));
                }
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self::new(n, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    /// Unordered pairs `(i, j)`, `i < j`, whose distance is infinite.
    pub fn infinite_entries(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.d[i * n + j].is_infinite())
            .collect()
    }

    pub fn has_infinite(&self) -> bool {
        self.d.iter().any(|v| v.is_infinite())
    }

    /// Principal submatrix on `idx`.
    pub fn restrict(&self, idx: &[usize]) -> DistanceMatrix {
        let m = idx.len();
        let d = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        DistanceMatrix { n: m, d }
    }

    pub fn scaled(&self, c: f64) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            d: self.d.iter().map(|v| v * c).collect(),
        }
    }
}

/// Bhattacharyya distance matrix of `kernel` over `pairs`. Disjoint output
/// supports yield `+inf` entries; see [`DistanceMatrix::infinite_entries`].
pub fn bhattacharyya(kernel: &ChannelKernel, pairs: &FeasiblePairSet) -> Result<DistanceMatrix> {
    let l = pairs.len();
    if kernel.len() != l {
        return Err(Error::InvalidKernel(format!(
            "kernel covers {} pairs, the machine has {l}",
            kernel.len()
        )));
    }
    let mut d = vec![0.0; l * l];
    for i in 0..l {
        for j in i + 1..l {
            let v = pair_distance(kernel, i, j);
            d[i * l + j] = v;
            d[j * l + i] = v;
        }
    }
    Ok(DistanceMatrix { n: l, d })
}

fn pair_distance(kernel: &ChannelKernel, i: usize, j: usize) -> f64 {
    match kernel {
        ChannelKernel::Discrete { rows, .. } => {
            let (a, b) = (&rows[i], &rows[j]);
            if a == b {
                return 0.0;
            }
            let bc: f64 = a.iter().zip(b).map(|(p, q)| sqrt(p * q)).sum();
            if bc <= 0.0 {
                f64::INFINITY
            } else {
                (-ln(bc)).max(0.0)
            }
        }
        ChannelKernel::Gaussian { means, variance } => {
            let dm = means[i] - means[j];
            dm * dm / (8.0 * variance)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::{feasible_pairs, shift_register};

    fn two_pairs() -> FeasiblePairSet {
        FeasiblePairSet::from_arcs(2, &[(0, 0, 0), (0, 1, 1)]).unwrap()
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let k = ChannelKernel::discrete(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(bhattacharyya(&k, &two_pairs()).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn gaussian_means_zero_and_two() {
        let k = ChannelKernel::gaussian(vec![0.0, 2.0], 1.0).unwrap();
        assert!((bhattacharyya(&k, &two_pairs()).unwrap().get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crossover_rows() {
        let k = ChannelKernel::discrete(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let d = bhattacharyya(&k, &two_pairs()).unwrap();
        let expected = -libm::log(2.0 * libm::sqrt(0.09));
        assert!((d.get(0, 1) - expected).abs() < 1e-14);
        assert!((d.get(1, 0) - 0.510_825_623_765_990_7).abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports_are_flagged() {
        let k = ChannelKernel::discrete(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = bhattacharyya(&k, &two_pairs()).unwrap();
        assert!(d.get(0, 1).is_infinite());
        assert_eq!(d.infinite_entries(), vec![(0, 1)]);
    }

    #[test]
    fn row_normalization_rule() {
        let k = ChannelKernel::discrete(vec![vec![0.5, 0.5 + 5e-13]]).unwrap();
        if let ChannelKernel::Discrete { rows, .. } = k {
            assert!((rows[0].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(ChannelKernel::discrete(vec![vec![0.5, 0.5 + 1e-9]]).is_err());
        assert!(ChannelKernel::discrete(vec![vec![-0.1, 1.1]]).is_err());
        assert!(ChannelKernel::gaussian(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn likelihood_values() {
        let k = ChannelKernel::discrete(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(k.likelihood(0, Output::Index(0)).unwrap(), 0.0);
        assert_eq!(k.likelihood(1, Output::Index(1)).unwrap(), libm::log(0.5));
        assert_eq!(k.likelihood(1, Output::Index(2)), Err(Error::OutputOutOfRange(2)));
        let g = ChannelKernel::gaussian(vec![0.0], 1.0).unwrap();
        let v = g.likelihood(0, Output::Real(0.0)).unwrap();
        assert!((v + 0.5 * libm::log(2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn kernel_must_cover_every_pair() {
        let m = shift_register(&[-1.0, 1.0], 1).unwrap();
        let pairs = feasible_pairs(&m).unwrap();
        let k = ChannelKernel::gaussian(vec![0.0; 3], 1.0).unwrap();
        assert!(matches!(bhattacharyya(&k, &pairs), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn sampled_bhattacharyya_coefficient() {
        use rand::SeedableRng;
        let k = ChannelKernel::discrete(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
        let d = bhattacharyya(&k, &two_pairs()).unwrap().get(0, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let trials = 200_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let y = k.sample(0, &mut rng);
            let r = k.likelihood(1, y).unwrap() - k.likelihood(0, y).unwrap();
            acc += libm::exp(0.5 * r);
        }
        let est = acc / trials as f64;
        assert!((est - libm::exp(-d)).abs() < 5e-3, "{est} vs {}", libm::exp(-d));
    }
}
