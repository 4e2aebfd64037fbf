//! CSV/JSON table writers and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::args::Format;
use crate::error::CliError;

/// Serializes `rows` as CSV (header from the field names) or a JSON array.
pub fn render<R: Serialize>(rows: &[R], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows)?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

pub fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Manifest path for an output file: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub format: Format,
    pub rows: usize,
    /// How the numbers were produced.
    pub provenance: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputRecord>,
    pub extra: serde_json::Value,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Everything a command produces besides its table.
pub struct Table<R> {
    pub rows: Vec<R>,
    pub provenance: String,
    pub seed: Option<u64>,
    pub extra: serde_json::Value,
}

pub struct RunContext {
    pub command: &'static str,
    pub argv: Vec<String>,
    pub started: f64,
}

/// Writes the table and, when it goes to a file, its manifest.
pub fn emit<R: Serialize, C: Serialize>(
    ctx: &RunContext,
    config: &C,
    out: Option<&Path>,
    format: Format,
    table: Table<R>,
) -> Result<(), CliError> {
    let bytes = render(&table.rows, format)?;
    write_bytes(out, &bytes)?;
    if let Some(p) = out {
        let manifest = RunManifest {
            tool: "opo",
            version: env!("CARGO_PKG_VERSION"),
            command: ctx.command.to_string(),
            argv: ctx.argv.clone(),
            config: serde_json::to_value(config)?,
            seed: table.seed,
            started_unix: ctx.started,
            finished_unix: unix_now(),
            outputs: vec![OutputRecord {
                path: p.display().to_string(),
                format,
                rows: table.rows.len(),
                provenance: table.provenance,
            }],
            extra: table.extra,
        };
        let mut v = serde_json::to_vec_pretty(&manifest)?;
        v.push(b'\n');
        fs::write(manifest_path(p), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rows::SpectraRow;
    use opo_core::quantum::SpectrumValue;
    use proptest::prelude::*;

    fn parse(bytes: &[u8]) -> Vec<SpectraRow> {
        csv::Reader::from_reader(bytes).deserialize().collect::<Result<_, _>>().unwrap()
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("/tmp/x.csv")), PathBuf::from("/tmp/x.csv.manifest.json"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_bit_exact(
            sigma in 0.0..10.0f64,
            omega in prop::num::f64::NORMAL,
            v in prop::option::of(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL),
        ) {
            let row = SpectraRow {
                sigma,
                delta: 0.2,
                point: "hb".into(),
                intensity: sigma / 3.0,
                mode: "phi-psi+".into(),
                quadrature: "X".into(),
                omega,
                v: v.map(SpectrumValue::Finite).unwrap_or(SpectrumValue::Infinite),
            };
            let bytes = render(std::slice::from_ref(&row), Format::Csv).unwrap();
            let back = parse(&bytes);
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].omega.to_bits(), row.omega.to_bits());
            prop_assert_eq!(&back[0], &row);
            let again = render(&back, Format::Csv).unwrap();
            prop_assert_eq!(again, bytes);
        }
    }
}
