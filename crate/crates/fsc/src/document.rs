//! The JSON channel description and its conversion into core objects.

use std::fs;
use std::path::Path;

use fsc_core::bhatt::ChannelKernel;
use fsc_core::exponent::CostModel;
use fsc_core::fsm::{augment, feasible_pairs, FeasiblePairSet, StateMachine};
use fsc_core::isi::{build_isi_machine, IsiSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Exactly one of `fsc` and `isi` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsc: Option<FscBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isi: Option<IsiBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FscBlock {
    /// Input levels; symbols are referred to by position.
    pub alphabet: Vec<f64>,
    pub states: Vec<String>,
    /// `next_state[s][x]`, state indices.
    pub next_state: Vec<Vec<usize>>,
    /// Symbol index recovered from each state. Absent means the machine is
    /// augmented with the last input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recover: Option<Vec<usize>>,
    pub kernel: KernelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostBlock>,
}

/// Which index the kernel's rows or means follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelIndex {
    /// Feasible pairs in canonical `(from, to)` order.
    #[default]
    Pair,
    /// The recovered input symbol of the pair.
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelBlock {
    Discrete {
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        by: KernelIndex,
    },
    Gaussian {
        means: Vec<f64>,
        variance: f64,
        #[serde(default)]
        by: KernelIndex,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBlock {
    pub phi: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsiBlock {
    pub h: Vec<f64>,
    pub sigma2: f64,
    pub levels: Vec<f64>,
    pub gamma: f64,
}

impl IsiBlock {
    pub fn spec(&self) -> IsiSpec {
        IsiSpec {
            h: self.h.clone(),
            sigma2: self.sigma2,
            levels: self.levels.clone(),
            gamma: self.gamma,
        }
    }
}

/// A validated channel ready for the core routines.
#[derive(Debug, Clone)]
pub struct Channel {
    pub machine: StateMachine,
    pub pairs: FeasiblePairSet,
    pub kernel: ChannelKernel,
    pub cost: CostModel,
    /// The machine had no recover map and was augmented on load.
    pub augmented: bool,
    pub isi: Option<IsiSpec>,
}

impl Channel {
    pub fn pair_label(&self, i: usize) -> String {
        let p = self.pairs.get(i);
        let names = self.machine.states();
        format!("{}>{}", names[p.from], names[p.to])
    }

    pub fn state_by_name(&self, name: &str) -> Result<usize, CliError> {
        self.machine
            .state_index(name)
            .ok_or_else(|| CliError::Validation(format!("unknown state {name:?}")))
    }
}

impl ChannelSpecDocument {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("bad spec: {e}")))?;
        match (&doc.fsc, &doc.isi) {
            (Some(_), None) | (None, Some(_)) => Ok(doc),
            _ => Err(CliError::Validation("spec needs exactly one of \"fsc\" and \"isi\"".into())),
        }
    }

    pub fn channel(&self) -> Result<Channel, CliError> {
        if let Some(isi) = &self.isi {
            let spec = isi.spec();
            let ch = build_isi_machine(&spec)?;
            return Ok(Channel {
                machine: ch.machine,
                pairs: ch.pairs,
                kernel: ch.kernel,
                cost: spec.cost(),
                augmented: spec.memory() == 0,
                isi: Some(spec),
            });
        }
        let block = self
            .fsc
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing channel block".into()))?;
        let k = block.alphabet.len();
        if block.next_state.len() != block.states.len() || block.next_state.iter().any(|row| row.len() != k) {
            return Err(CliError::Validation(format!(
                "next_state must be {} rows of {k} entries",
                block.states.len()
            )));
        }
        let table: Vec<usize> = block.next_state.iter().flatten().copied().collect();
        let base = StateMachine::new(block.states.clone(), block.alphabet.clone(), table, block.recover.clone())?;
        let (machine, augmented) = if base.recover_table().is_some() {
            (base, false)
        } else {
            (augment(&base)?.machine, true)
        };
        let pairs = feasible_pairs(&machine)?;
        let index = |by: KernelIndex, len: usize| -> Result<Vec<usize>, CliError> {
            let idx: Vec<usize> = match by {
                KernelIndex::Pair => (0..pairs.len()).collect(),
                KernelIndex::Symbol => pairs.pairs().iter().map(|p| p.symbol).collect(),
            };
            let need = match by {
                KernelIndex::Pair => pairs.len(),
                KernelIndex::Symbol => k,
            };
            if len != need {
                return Err(CliError::Validation(format!("kernel has {len} entries, expected {need}")));
            }
            Ok(idx)
        };
        let kernel = match &block.kernel {
            KernelBlock::Discrete { rows, by } => {
                let idx = index(*by, rows.len())?;
                ChannelKernel::discrete(idx.iter().map(|&i| rows[i].clone()).collect())?
            }
            KernelBlock::Gaussian { means, variance, by } => {
                let idx = index(*by, means.len())?;
                ChannelKernel::gaussian(idx.iter().map(|&i| means[i]).collect(), *variance)?
            }
        };
        let cost = match &block.cost {
            Some(c) => {
                if c.phi.len() != k {
                    return Err(CliError::Validation(format!("cost.phi has {} entries, expected {k}", c.phi.len())));
                }
                CostModel {
                    phi: c.phi.clone(),
                    gamma: c.gamma,
                }
            }
            None => CostModel::free(k),
        };
        Ok(Channel {
            machine,
            pairs,
            kernel,
            cost,
            augmented,
            isi: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSC: &str = r#"{"fsc": {"alphabet": [0, 1], "states": ["0"], "next_state": [[0, 0]],
        "kernel": {"discrete": {"rows": [[0.9, 0.1], [0.1, 0.9]], "by": "symbol"}}}}"#;

    #[test]
    fn bsc_is_augmented() {
        let ch = ChannelSpecDocument::parse(BSC).unwrap().channel().unwrap();
        assert!(ch.augmented);
        assert_eq!(ch.pairs.len(), 4);
        assert_eq!(ch.pair_label(1), "0|0>0|1");
    }

    #[test]
    fn round_trip() {
        let doc = ChannelSpecDocument::parse(BSC).unwrap();
        let again = ChannelSpecDocument::parse(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn both_blocks_rejected() {
        let text = r#"{"fsc": null, "isi": null}"#;
        assert!(matches!(ChannelSpecDocument::parse(text), Err(CliError::Validation(_))));
    }

    #[test]
    fn wrong_kernel_length() {
        let text = BSC.replace(r#""by": "symbol""#, r#""by": "pair""#);
        assert!(ChannelSpecDocument::parse(&text).unwrap().channel().is_err());
    }
}
