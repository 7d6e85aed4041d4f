use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config;

pub const BUILD_ID: &str = env!("ONESHOT_BUILD_ID");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub build: String,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        let hashed = serde_json::json!({ "command": command, "seed": seed, "config": config });
        Self { config_hash: config::hash(&hashed), seed, build: BUILD_ID.to_owned(), config }
    }
}

/// Per-trial or per-grid-point rows.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| (*c).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub command: String,
    pub metrics: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub provenance: Provenance,
}

impl ResultRecord {
    pub fn new(command: &str, provenance: Provenance) -> Self {
        Self { command: command.to_owned(), metrics: BTreeMap::new(), table: None, provenance }
    }

    pub fn metric(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(name.to_owned(), serde_json::to_value(value).expect("metrics serialize"));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("records serialize");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    /// Provenance as leading `#` lines, then the table if there is one,
    /// else `metric,value` rows.
    fn to_csv(&self) -> String {
        let p = &self.provenance;
        let mut out =
            format!("# command={} seed={} config_hash={} build={}\n", self.command, p.seed, p.config_hash, p.build);
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.table {
            Some(table) => {
                w.write_record(&table.columns).expect("in-memory write");
                for row in &table.rows {
                    w.write_record(row.iter().map(cell)).expect("in-memory write");
                }
            }
            None => {
                w.write_record(["metric", "value"]).expect("in-memory write");
                for (name, value) in &self.metrics {
                    w.write_record([name.clone(), cell(value)]).expect("in-memory write");
                }
            }
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }
}

/// Scalars print as in JSON (strings unquoted); arrays join with `;`.
fn cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record() -> ResultRecord {
        let mut r = ResultRecord::new("calibrate", Provenance::new("calibrate", 7, json!({"k": 1})));
        r.metric("lambda", 0.1 + 0.2).metric("selection", [1, 3]);
        r
    }

    #[test]
    fn json_round_trips_floats_exactly() {
        let text = record().render(Format::Json);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["metrics"]["lambda"].as_f64().unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back["provenance"]["seed"], 7);
    }

    #[test]
    fn csv_metrics_and_tables() {
        let text = record().render(Format::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# command=calibrate seed=7 config_hash="));
        assert_eq!(lines[1], "metric,value");
        assert_eq!(lines[2], "lambda,0.30000000000000004");
        assert_eq!(lines[3], "selection,1;3");

        let mut r = record();
        let mut t = Table::new(&["trial", "note"]);
        t.push(vec![json!(0), json!("a,b")]);
        r.table = Some(t);
        assert!(r.render(Format::Csv).ends_with("trial,note\n0,\"a,b\"\n"));
    }

    #[test]
    fn hash_depends_on_seed_and_config() {
        let a = Provenance::new("topk", 1, json!({"k": 1}));
        assert_eq!(a.config_hash, Provenance::new("topk", 1, json!({"k": 1})).config_hash);
        assert_ne!(a.config_hash, Provenance::new("topk", 2, json!({"k": 1})).config_hash);
        assert_ne!(a.config_hash, Provenance::new("topk", 1, json!({"k": 2})).config_hash);
    }
}
