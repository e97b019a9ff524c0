//! Rendering of command results as CSV or as a JSON envelope.

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"), "-", env!("TODA_TWISTOR_GIT_DESCRIBE"));

/// Ordered summary fields, printed to stderr and embedded in JSON output.
#[derive(Default, Debug)]
pub struct Summary(Vec<(String, Value)>);

impl Summary {
    pub fn add(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.0.push((key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null)));
        self
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    pub fn print(&self) {
        for (k, v) in &self.0 {
            eprintln!("{k}: {v}");
        }
    }
}

pub enum Data {
    Csv(Vec<u8>),
    Json(Value),
}

pub struct Output {
    pub summary: Summary,
    pub data: Data,
    /// Names of failed properties, if any.
    pub failure: Option<String>,
}

pub fn rows<T: Serialize>(format: Format, rows: &[T]) -> Result<Data, CliError> {
    Ok(match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
            }
            Data::Csv(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
        }
        Format::Json => Data::Json(serde_json::to_value(rows)?),
    })
}

/// Header plus numeric rows, as CSV or as `{"columns": [...], "rows": [[...]]}`.
pub fn table(format: Format, header: &[String], body: &[Vec<f64>]) -> Result<Data, CliError> {
    Ok(match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
            for r in body {
                w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| CliError::Output(e.to_string()))?;
            }
            Data::Csv(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
        }
        Format::Json => Data::Json(json!({ "columns": header, "rows": body })),
    })
}

pub fn write(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    out.summary.print();
    let bytes = match &out.data {
        Data::Csv(b) => b.clone(),
        Data::Json(data) => {
            let env = json!({
                "tool": "toda-twistor",
                "version": VERSION,
                "command": cfg.command,
                "config": cfg,
                "summary": out.summary.to_json(),
                "data": data,
            });
            let mut b = serde_json::to_vec_pretty(&env)?;
            b.push(b'\n');
            b
        }
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}
