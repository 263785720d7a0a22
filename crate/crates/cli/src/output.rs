use std::fmt;
use std::process::ExitCode;

use artiflow_core::catalog::CatalogError;
use artiflow_core::executor::ExecError;
use artiflow_core::kgraph::KgError;
use artiflow_core::model::{BindError, DataflowError, ParseGidError, SchemaError};
use artiflow_core::optimizer::OptimizerError;
use artiflow_core::provenance::ProvenanceError;
use artiflow_core::scheduler::SchedulerError;
use serde_json::Value as Json;

/// A mistake in the invocation: bad arguments, files or identifiers.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

/// Result of a command, rendered as JSON or as text.
pub struct Report {
    pub json: Json,
    pub text: String,
}

impl Report {
    pub fn new(json: Json, text: impl Into<String>) -> Report {
        Report { json, text: text.into() }
    }

    pub fn print(&self, as_json: bool) {
        if as_json {
            println!("{}", serde_json::to_string_pretty(&self.json).expect("reports serialize"));
        } else if !self.text.is_empty() {
            println!("{}", self.text.trim_end());
        }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let mut out = vec![line(header.to_vec())];
    out.extend(rows.iter().map(|r| line(r.iter().map(String::as_str).collect())));
    out.join("\n")
}

fn catalog_code(e: &CatalogError) -> u8 {
    match e {
        CatalogError::Io(_) | CatalogError::Corrupt { .. } => 2,
        _ => 1,
    }
}

/// 1 for user errors, 2 for internal failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<ParseGidError>() || cause.is::<serde_json::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<CatalogError>() {
            return catalog_code(e);
        }
        if let Some(e) = cause.downcast_ref::<ExecError>() {
            return match e {
                ExecError::Io(_) => 2,
                ExecError::Catalog(c) => catalog_code(c),
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<SchedulerError>() {
            return match e {
                SchedulerError::Catalog(c) => catalog_code(c),
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<ProvenanceError>() {
            return match e {
                ProvenanceError::Catalog(c) => catalog_code(c),
                _ => 1,
            };
        }
        if cause.is::<OptimizerError>()
            || cause.is::<BindError>()
            || cause.is::<DataflowError>()
            || cause.is::<KgError>()
            || cause.is::<SchemaError>()
        {
            return 1;
        }
    }
    2
}

pub fn fail(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(exit_code(err))
}
