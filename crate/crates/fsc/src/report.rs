//! Serializable summaries. Core types stay serde-free; these mirror them
//! with state and pair names resolved.

use serde::Serialize;

use crate::document::ChannelSpecDocument;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub inputs: ChannelSpecDocument,
    pub params: Params,
    pub seeds: Seeds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uce: Option<PlanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<CodebookSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isi: Option<IsiSummary>,
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub n: usize,
    pub codewords: usize,
    pub trials: u64,
    pub tol: f64,
    pub starts: usize,
    pub threads: usize,
    pub anchor: Option<String>,
    pub rho: Option<f64>,
    pub eps: Option<f64>,
    pub relaxed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub base: u64,
    pub solver: u64,
    pub codebook: u64,
    pub simulation: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureSummary {
    pub num_states: usize,
    pub num_symbols: usize,
    pub num_pairs: usize,
    pub augmented: bool,
    pub irreducible: bool,
    pub doubly_irreducible: bool,
    pub approach_state: Option<ApproachState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproachState {
    pub state: String,
    pub r: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentSummary {
    pub value: f64,
    pub concave: bool,
    pub scc_id: usize,
    pub support_connected: bool,
    /// Pair labels `from>to`, the index set of every distribution below.
    pub pairs: Vec<String>,
    pub argmax: ArgmaxSummary,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgmaxSummary {
    Single { q: Vec<f64> },
    TimeSharing(PlanSummary),
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub value: f64,
    pub anchor: String,
    pub weights: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub mixture: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CodebookSummary {
    pub n: usize,
    pub m: usize,
    pub anchor: String,
    pub target_exponent: f64,
    pub min_pair_distance: f64,
    pub min_pair_distance_per_symbol: f64,
    pub rho: f64,
    pub connect_eps: Option<f64>,
    pub seed: u64,
    /// Input levels.
    pub codewords: Vec<Vec<f64>>,
    /// State indices, one per time step.
    pub state_paths: Vec<Vec<usize>>,
    /// Transition counts per pair, one entry per time-sharing segment.
    pub type_certificate: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub n: usize,
    pub trials: u64,
    pub errors: Vec<u64>,
    pub pe: Vec<f64>,
    pub stderr: Vec<f64>,
    pub empirical_exponent: Option<f64>,
    pub exponent_band: (Option<f64>, Option<f64>),
    /// `(M - 1) exp(-min pair distance)`.
    pub union_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsiSummary {
    pub h: Vec<f64>,
    pub sigma2: f64,
    pub gamma: f64,
    pub levels: Vec<f64>,
    pub spectral_bound: f64,
    pub omega_star: f64,
    /// Optimum over inputs restricted to `levels`.
    pub discrete_optimum: f64,
    /// Quantized-sinusoid bound with `|levels|` uniform levels topped at
    /// `sqrt(2 gamma)`; absent when no amplitude meets the budget.
    pub quantized: Option<QuantizedSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantized_note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantizedSummary {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub delta: f64,
    pub omega0: f64,
    pub perturbed: bool,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub lambda_tail: f64,
    pub lower_bound: f64,
    pub eps_truncation_m: usize,
    pub degraded: bool,
}
