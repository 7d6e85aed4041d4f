pub mod audit;
pub mod calibrate;
pub mod rank;
pub mod topk;
pub mod utility;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config;
use crate::failure::CliResult;
use crate::record::{Provenance, ResultRecord};

/// Settings shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub file: Map<String, Value>,
}

impl Ctx {
    pub fn resolve<T: Serialize + DeserializeOwned>(&self, flags: &T) -> CliResult<T> {
        config::merge(flags, &self.file)
    }

    /// A record whose provenance carries the fully resolved config.
    pub fn record<T: Serialize>(&self, command: &str, resolved: &T) -> ResultRecord {
        let config = serde_json::to_value(resolved).expect("configs serialize");
        ResultRecord::new(command, Provenance::new(command, self.seed, config))
    }
}

pub struct Outcome {
    pub record: ResultRecord,
    pub code: u8,
    /// Printed to stderr after the record.
    pub diagnostic: Option<String>,
}

impl Outcome {
    pub fn ok(record: ResultRecord) -> Self {
        Self { record, code: 0, diagnostic: None }
    }

    pub fn failed(record: ResultRecord, diagnostic: String) -> Self {
        Self { record, code: crate::failure::EXIT_FAILED, diagnostic: Some(diagnostic) }
    }
}

/// 0-based indices to the 1-based form used in all output.
pub fn one_based(indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    indices.into_iter().map(|i| i + 1).collect()
}

pub fn set_label(indices: &[usize]) -> String {
    indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}
