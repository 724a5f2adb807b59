//! Chain description files.

use std::io::Read;

use serde::{Deserialize, Serialize};
use ssd_core::chain::{InitialLaw, RateGenerator, TransitionKernel};
use ssd_core::error::Error;
use ssd_core::nalgebra::DMatrix;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    Discrete,
    Continuous,
}

/// JSON chain description. `matrix` is a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpecFile {
    pub mode: TimeMode,
    pub matrix: Vec<Vec<f64>>,
    /// Initial law; unit mass at state 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Target state; the last state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A validated chain with its target moved last.
#[derive(Debug, Clone)]
pub enum Chain {
    Discrete(TransitionKernel),
    Continuous(RateGenerator),
}

#[derive(Debug, Clone)]
pub struct LoadedChain {
    pub chain: Chain,
    /// Initial law in the relabeled order.
    pub m0: InitialLaw,
    /// Name of each relabeled state.
    pub labels: Vec<String>,
}

impl LoadedChain {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn class(&self) -> &ssd_core::chain::ChainClass {
        match &self.chain {
            Chain::Discrete(p) => p.class(),
            Chain::Continuous(g) => g.class(),
        }
    }
}

impl ChainSpecFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("cannot parse chain file: {e}")))
    }

    /// Reads a file, or standard input when `path` is `-`.
    pub fn read(path: &str) -> Result<Self, CliError> {
        let text = if path == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?
        };
        Self::parse(&text)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Validates the description through the core constructors.
    pub fn load(&self) -> Result<LoadedChain, CliError> {
        let n = self.matrix.len();
        if n < 2 {
            return Err(Error::TooFewStates(n).into());
        }
        if let Some(row) = self.matrix.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: row.len() }.into());
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        let raw = DMatrix::from_row_slice(n, n, &flat);
        let target = self.target.unwrap_or(n - 1);
        let (chain, order) = match self.mode {
            TimeMode::Discrete => {
                let p = TransitionKernel::new(raw, target)?;
                let order = p.labels().to_vec();
                (Chain::Discrete(p), order)
            }
            TimeMode::Continuous => {
                let g = RateGenerator::new(raw, target)?;
                let order = g.labels().to_vec();
                (Chain::Continuous(g), order)
            }
        };
        let m0 = match &self.initial {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() }.into());
                }
                InitialLaw::new(v.clone())?
            }
            None => InitialLaw::delta(n, 0),
        };
        let m0 = m0.relabeled(&order)?;
        let names: Vec<String> = match &self.labels {
            Some(l) if l.len() != n => return Err(Error::DimensionMismatch { expected: n, got: l.len() }.into()),
            Some(l) => l.clone(),
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let labels = order.iter().map(|&i| names[i].clone()).collect();
        Ok(LoadedChain { chain, m0, labels })
    }
}
