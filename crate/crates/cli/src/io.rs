//! File reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use nalgebra::DVector;
use sse_core::linmodel::stack_window;
use sse_core::{StackedWindow, SystemModel};

use crate::{CliResult, Failure};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(anyhow!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> CliResult<SystemModel> {
    read_json(path)
}

/// Write to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, content)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Other),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Failure::Other(e.into()))
        }
    }
}

pub fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.into()))?;
    s.push('\n');
    emit(out, &s)
}

/// Outputs and inputs of a trace CSV, one entry per row.
#[derive(Debug)]
pub struct TraceData {
    pub outputs: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
}

/// Columns `y1..yp` and `u1..um`; a lone `u` column stands for `u1` when `m = 1`.
pub fn read_trace(path: &Path, p: usize, m: usize) -> CliResult<TraceData> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    let headers = rdr
        .headers()
        .map_err(|e| Failure::Input(anyhow!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let y_cols: Vec<usize> = (1..=p)
        .map(|i| {
            find(&format!("y{i}"))
                .ok_or_else(|| Failure::Input(anyhow!("{}: missing column y{i}", path.display())))
        })
        .collect::<CliResult<_>>()?;
    let u_cols: Vec<usize> = (1..=m)
        .map(|i| {
            find(&format!("u{i}"))
                .or_else(|| if m == 1 { find("u") } else { None })
                .ok_or_else(|| Failure::Input(anyhow!("{}: missing column u{i}", path.display())))
        })
        .collect::<CliResult<_>>()?;
    let mut data = TraceData {
        outputs: Vec::new(),
        inputs: Vec::new(),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Failure::Input(anyhow!("{}: {e}", path.display())))?;
        let field = |col: usize| -> CliResult<f64> {
            let raw = rec.get(col).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| {
                Failure::Input(anyhow!(
                    "{}: row {} column {}: cannot parse {raw:?}",
                    path.display(),
                    row + 1,
                    &headers[col]
                ))
            })
        };
        let y = y_cols
            .iter()
            .map(|&c| field(c))
            .collect::<CliResult<Vec<f64>>>()?;
        let u = u_cols
            .iter()
            .map(|&c| field(c))
            .collect::<CliResult<Vec<f64>>>()?;
        data.outputs.push(DVector::from_vec(y));
        data.inputs.push(DVector::from_vec(u));
    }
    Ok(data)
}

/// The `tau` rows ending at `end_row` (the last row when absent).
pub fn window_from_trace(
    model: &SystemModel,
    data: &TraceData,
    end_row: Option<usize>,
) -> CliResult<StackedWindow> {
    let tau = model.tau();
    let rows = data.outputs.len();
    let end = end_row.unwrap_or(rows.saturating_sub(1));
    if rows < tau || end >= rows || end + 1 < tau {
        return Err(Failure::Input(anyhow!(
            "trace has {rows} rows; a window needs {tau} rows ending at row {end}"
        )));
    }
    let start = end + 1 - tau;
    Ok(stack_window(
        model,
        &data.outputs[start..=end],
        &data.inputs[start..=end],
    )?)
}

/// Round-trip exact formatting of a double.
pub fn fmt_f64(v: f64) -> String {
    sse_core::attacksim::closed_loop::fmt_f64(v)
}
