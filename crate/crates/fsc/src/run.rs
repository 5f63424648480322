use std::time::Instant;

use fsc_core::bhatt::{bhattacharyya, ChannelKernel, DistanceMatrix};
use fsc_core::codebook::{build_codebook, CodeParams, Codebook};
use fsc_core::derive_seed;
use fsc_core::exponent::{
    feasibility_sccs, maximize_e0, maximize_uce, Argmax, ExponentResult, PairDistribution, SolverOptions, TimeSharingPlan,
};
use fsc_core::fsm::{check_structure, default_max_r};
use fsc_core::isi::{loss_curve, spectral_bound, GrayOptions, LossReport};
use fsc_core::montecarlo::{delta, simulate_trial, z_rho_sweep, SimulationReport, ZOptions};
use rayon::prelude::*;

use crate::document::{Channel, ChannelSpecDocument};
use crate::report::*;
use crate::{Args, Cli, CliError, Command};

/// What a command produced, ready to be written out.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(String),
    Csv(String),
}

impl Output {
    pub fn text(&self) -> &str {
        match self {
            Output::Json(s) | Output::Csv(s) => s,
        }
    }
}

struct Context {
    doc: ChannelSpecDocument,
    channel: Channel,
    d: DistanceMatrix,
    args: Args,
    started: Instant,
    command: Command,
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let started = Instant::now();
    let path = cli
        .args
        .spec
        .as_ref()
        .ok_or_else(|| CliError::Validation("--spec is required".into()))?;
    let doc = ChannelSpecDocument::read(path)?;
    let channel = doc.channel()?;
    let d = bhattacharyya(&channel.kernel, &channel.pairs)?;
    let ctx = Context {
        doc,
        channel,
        d,
        args: cli.args.clone(),
        started,
        command: cli.command,
    };
    match cli.command {
        Command::Check => ctx.check(),
        Command::Distances => ctx.distances(),
        Command::Optimize => ctx.optimize(),
        Command::Uce => ctx.uce(),
        Command::BuildCode => ctx.build_code(),
        Command::Simulate => ctx.simulate(),
        Command::Zrho => ctx.zrho(),
        Command::IsiBound => ctx.isi_bound(),
        Command::IsiLoss => ctx.isi_loss(),
    }
}

/// Error counts per codeword over `trials` trials each. Trials run in
/// parallel; each has its own random stream and the counts are summed as
/// integers, so the result does not depend on the thread count.
pub fn simulate_parallel(kernel: &ChannelKernel, codewords: &[Vec<usize>], trials: u64, seed: u64) -> Result<SimulationReport, CliError> {
    let n = codewords.first().map_or(0, Vec::len);
    let errors = (0..codewords.len())
        .map(|m| {
            (0..trials)
                .into_par_iter()
                .map(|t| simulate_trial(kernel, codewords, m, t, seed).map(u64::from))
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(SimulationReport::from_counts(n, trials, errors))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Output, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Validation(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("csv: {e}")))?;
    Ok(Output::Csv(
        String::from_utf8(bytes).map_err(|e| CliError::Validation(e.to_string()))?,
    ))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Check => "check",
        Command::Distances => "distances",
        Command::Optimize => "optimize",
        Command::Uce => "uce",
        Command::BuildCode => "build-code",
        Command::Simulate => "simulate",
        Command::Zrho => "zrho",
        Command::IsiBound => "isi-bound",
        Command::IsiLoss => "isi-loss",
    }
}

impl Context {
    fn seeds(&self) -> Seeds {
        let base = self.args.seed;
        Seeds {
            base,
            solver: derive_seed(base, &[0]),
            codebook: derive_seed(base, &[1]),
            simulation: derive_seed(base, &[2]),
        }
    }

    fn report(&self) -> RunReport {
        let a = &self.args;
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command_name(self.command).to_string(),
            inputs: self.doc.clone(),
            params: Params {
                n: a.n,
                codewords: a.codewords,
                trials: a.trials,
                tol: a.tol,
                starts: a.starts,
                threads: rayon::current_num_threads(),
                anchor: a.anchor.clone(),
                rho: a.rho,
                eps: a.eps,
                relaxed: a.relaxed,
            },
            seeds: self.seeds(),
            structure: Some(self.structure()),
            exponent: None,
            uce: None,
            codebook: None,
            simulation: None,
            isi: None,
            wall_clock_ms: 0.0,
        }
    }

    fn finish(&self, mut report: RunReport) -> Result<Output, CliError> {
        report.wall_clock_ms = self.started.elapsed().as_secs_f64() * 1e3;
        serde_json::to_string_pretty(&report)
            .map(Output::Json)
            .map_err(|e| CliError::Validation(format!("json: {e}")))
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.args.tol,
            starts: self.args.starts.max(1),
            seed: self.seeds().solver,
            relaxed_uce: self.args.relaxed,
            ..SolverOptions::default()
        }
    }

    fn structure(&self) -> StructureSummary {
        let m = &self.channel.machine;
        let r = check_structure(m, default_max_r(m));
        StructureSummary {
            num_states: m.num_states(),
            num_symbols: m.num_symbols(),
            num_pairs: self.channel.pairs.len(),
            augmented: self.channel.augmented,
            irreducible: r.irreducible,
            doubly_irreducible: r.doubly_irreducible,
            approach_state: r.approach_state.map(|(s, r)| ApproachState {
                state: m.states()[s].clone(),
                r,
            }),
        }
    }

    fn state_name(&self, s: usize) -> String {
        self.channel.machine.states()[s].clone()
    }

    fn plan_summary(&self, value: f64, plan: &TimeSharingPlan) -> PlanSummary {
        PlanSummary {
            value,
            anchor: self.state_name(plan.anchor),
            weights: plan.weights.clone(),
            components: plan.components.clone(),
            mixture: plan.mixture(),
        }
    }

    fn exponent(&self) -> Result<ExponentResult, CliError> {
        Ok(maximize_e0(
            &self.d,
            &self.channel.pairs,
            &self.channel.cost,
            &self.solver_options(),
        )?)
    }

    fn exponent_summary(&self, res: &ExponentResult) -> ExponentSummary {
        ExponentSummary {
            value: res.value,
            concave: res.concave,
            scc_id: res.scc_id,
            support_connected: res.support_connected,
            pairs: (0..self.channel.pairs.len()).map(|i| self.channel.pair_label(i)).collect(),
            argmax: match &res.argmax {
                Argmax::Single(q) => ArgmaxSummary::Single { q: q.as_slice().to_vec() },
                Argmax::TimeSharing(p) => ArgmaxSummary::TimeSharing(self.plan_summary(res.value, p)),
            },
        }
    }

    fn check(&self) -> Result<Output, CliError> {
        self.finish(self.report())
    }

    fn distances(&self) -> Result<Output, CliError> {
        let l = self.channel.pairs.len();
        let labels: Vec<String> = (0..l).map(|i| self.channel.pair_label(i)).collect();
        let mut header = vec!["pair"];
        header.extend(labels.iter().map(String::as_str));
        let rows = (0..l).map(|i| {
            let mut row = vec![labels[i].clone()];
            row.extend((0..l).map(|j| format!("{}", self.d.get(i, j))));
            row
        });
        csv_text(&header, rows)
    }

    fn optimize(&self) -> Result<Output, CliError> {
        let res = self.exponent()?;
        let mut report = self.report();
        report.exponent = Some(self.exponent_summary(&res));
        self.finish(report)
    }

    fn default_anchor(&self) -> Result<usize, CliError> {
        if let Some(name) = &self.args.anchor {
            return self.channel.state_by_name(name);
        }
        feasibility_sccs(&self.channel.pairs)
            .first()
            .and_then(|s| s.states.first().copied())
            .ok_or_else(|| CliError::Validation("channel has no cycles".into()))
    }

    fn uce(&self) -> Result<Output, CliError> {
        let anchor = self.default_anchor()?;
        let (value, plan) = maximize_uce(&self.d, &self.channel.pairs, &self.channel.cost, anchor, &self.solver_options())?;
        let mut report = self.report();
        report.uce = Some(self.plan_summary(value, &plan));
        self.finish(report)
    }

    /// The anchor for a codebook: the flag, the plan's anchor, or the
    /// origin of the most likely pair of the target.
    fn code_anchor(&self, res: &ExponentResult) -> Result<usize, CliError> {
        if let Some(name) = &self.args.anchor {
            return self.channel.state_by_name(name);
        }
        Ok(match &res.argmax {
            Argmax::TimeSharing(p) => p.anchor,
            Argmax::Single(q) => {
                let q = q.as_slice();
                let best = (0..q.len()).max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a))).unwrap_or(0);
                self.channel.pairs.get(best).from
            }
        })
    }

    fn codebook(&self) -> Result<(ExponentResult, Codebook), CliError> {
        let res = self.exponent()?;
        let params = CodeParams {
            seed: self.seeds().codebook,
            rho: self.args.rho,
            eps: self.args.eps,
            ..CodeParams::new(self.args.n, self.args.codewords, self.code_anchor(&res)?)
        };
        let cb = build_codebook(
            &self.channel.machine,
            &self.channel.pairs,
            &self.d,
            &self.channel.cost,
            &res.argmax,
            &params,
        )?;
        Ok((res, cb))
    }

    fn codebook_summary(&self, res: &ExponentResult, cb: &Codebook) -> CodebookSummary {
        let alphabet = self.channel.machine.alphabet();
        CodebookSummary {
            n: cb.n,
            m: cb.len(),
            anchor: self.state_name(cb.anchor),
            target_exponent: res.value,
            min_pair_distance: cb.min_pair_distance,
            min_pair_distance_per_symbol: cb.min_pair_distance / cb.n as f64,
            rho: cb.rho,
            connect_eps: cb.connect_eps,
            seed: cb.seed,
            codewords: cb.codewords.iter().map(|w| w.iter().map(|&x| alphabet[x]).collect()).collect(),
            state_paths: cb.state_paths.clone(),
            type_certificate: cb.type_certificate.iter().map(|t| t.counts.clone()).collect(),
        }
    }

    fn build_code(&self) -> Result<Output, CliError> {
        let (res, cb) = self.codebook()?;
        let mut report = self.report();
        report.exponent = Some(self.exponent_summary(&res));
        report.codebook = Some(self.codebook_summary(&res, &cb));
        self.finish(report)
    }

    fn simulate(&self) -> Result<Output, CliError> {
        if self.args.trials == 0 {
            return Err(CliError::Validation("--trials must be positive".into()));
        }
        let (res, cb) = self.codebook()?;
        let words = cb
            .state_paths
            .iter()
            .map(|p| self.channel.pairs.path_pairs(p))
            .collect::<Result<Vec<_>, _>>()?;
        let sim = simulate_parallel(&self.channel.kernel, &words, self.args.trials, self.seeds().simulation)?;
        let mut report = self.report();
        report.exponent = Some(self.exponent_summary(&res));
        report.simulation = Some(SimulationSummary {
            n: sim.n,
            trials: sim.trials,
            errors: sim.errors.clone(),
            pe: sim.pe.clone(),
            stderr: sim.stderr.clone(),
            empirical_exponent: sim.empirical_exponent,
            exponent_band: sim.exponent_band,
            union_bound: (cb.len() as f64 - 1.0) * (-cb.min_pair_distance).exp(),
        });
        report.codebook = Some(self.codebook_summary(&res, &cb));
        self.finish(report)
    }

    fn zrho(&self) -> Result<Output, CliError> {
        if self.args.rho_max.is_nan() || self.args.rho_max < 0.01 {
            return Err(CliError::Validation("--rho-max must be at least 0.01".into()));
        }
        let res = self.exponent()?;
        let q = PairDistribution::new(res.argmax.distribution(), &self.channel.pairs)?;
        let mut rhos: Vec<f64> = (-2..=12)
            .map(|k| 10f64.powi(k))
            .filter(|&r| r <= self.args.rho_max * (1.0 + 1e-12))
            .collect();
        if rhos.last().is_some_and(|&r| (r - self.args.rho_max).abs() > 1e-12 * r) {
            rhos.push(self.args.rho_max);
        }
        let opts = ZOptions {
            tol: self.args.tol.min(1e-10),
            ..ZOptions::default()
        };
        let sweep = z_rho_sweep(&q, &self.channel.pairs, &self.d, &rhos, &opts)?;
        let rows = sweep.iter().map(|(rho, z, w)| {
            vec![
                format!("{rho}"),
                format!("{z}"),
                format!("{}", res.value),
                format!("{}", z + res.value),
                format!("{}", delta(w, &self.channel.pairs)),
            ]
        });
        csv_text(&["rho", "z", "e0", "z_plus_e0", "delta"], rows)
    }

    fn isi_block(&self) -> Result<&crate::document::IsiBlock, CliError> {
        self.doc
            .isi
            .as_ref()
            .ok_or_else(|| CliError::Validation("this command needs an \"isi\" spec".into()))
    }

    fn loss(&self, ks: &[usize]) -> Result<Vec<LossReport>, CliError> {
        let b = self.isi_block()?;
        Ok(loss_curve(&b.h, b.sigma2, b.gamma, ks, GrayOptions::default())?)
    }

    fn isi_bound(&self) -> Result<Output, CliError> {
        let b = self.isi_block()?;
        let spec = b.spec();
        let (bound, omega_star) = spectral_bound(&spec)?;
        let res = self.exponent()?;
        let (quantized, quantized_note) = match self.loss(&[spec.levels.len()]) {
            Ok(mut v) => {
                let r = v.remove(0);
                let q = QuantizedSummary {
                    amplitude: r.amplitude,
                    delta: r.delta,
                    omega0: r.omega0,
                    perturbed: r.perturbed,
                    lambda: r.lambda,
                    lambda_tail: r.lambda_tail,
                    lower_bound: r.lower_bound,
                    eps_truncation_m: r.terms,
                    degraded: r.degraded,
                };
                (Some(q), None)
            }
            Err(CliError::Infeasible(why)) => (None, Some(why)),
            Err(e) => return Err(e),
        };
        let mut report = self.report();
        report.exponent = Some(self.exponent_summary(&res));
        report.isi = Some(IsiSummary {
            h: spec.h.clone(),
            sigma2: spec.sigma2,
            gamma: spec.gamma,
            levels: spec.levels.clone(),
            spectral_bound: bound,
            omega_star,
            discrete_optimum: res.value,
            quantized,
            quantized_note,
        });
        self.finish(report)
    }

    fn isi_loss(&self) -> Result<Output, CliError> {
        let curve = self.loss(&self.args.ks)?;
        let rows = curve.iter().map(|r| {
            vec![
                r.levels.to_string(),
                format!("{}", r.lambda),
                format!("{}", r.lower_bound),
                format!("{}", r.delta),
                format!("{}", r.amplitude),
                format!("{}", r.omega0),
                format!("{}", r.spectral_bound),
                format!("{}", r.achieved),
                r.terms.to_string(),
                r.degraded.to_string(),
            ]
        });
        csv_text(
            &[
                "K",
                "Lambda",
                "lower_bound",
                "delta",
                "A",
                "omega0",
                "spectral_bound",
                "achieved",
                "terms",
                "degraded",
            ],
            rows,
        )
    }
}
