//! Grid function files: a JSON header next to a data file holding the values
//! row-major (last coordinate fastest), as CSV or little-endian f64.

use std::fs;
use std::path::{Path, PathBuf};

use cvxlab_core::pshlab::GridFn;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Csv,
    F64le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
    /// Redundant with lo, hi and shape; checked on read.
    pub spacing: Vec<f64>,
    pub format: DataFormat,
    /// Data file, relative to the header's directory.
    pub data: String,
}

impl GridHeader {
    pub fn describe(g: &GridFn, format: DataFormat, data: String) -> Self {
        GridHeader {
            lo: g.lo.clone(),
            hi: g.hi.clone(),
            shape: g.shape.clone(),
            spacing: (0..g.shape.len()).map(|a| g.spacing(a)).collect(),
            format,
            data,
        }
    }
}

pub type IoResult<T> = Result<T, String>;

fn data_path(header: &Path, format: DataFormat) -> PathBuf {
    header.with_extension(match format {
        DataFormat::Csv => "csv",
        DataFormat::F64le => "bin",
    })
}

/// Writes `header` (JSON) and its data file beside it; returns the header.
pub fn write_grid(header: &Path, g: &GridFn, format: DataFormat) -> IoResult<GridHeader> {
    let data = data_path(header, format);
    if data == header {
        return Err(format!("grid header `{}` would overwrite its own data file", header.display()));
    }
    let name = data.file_name().and_then(|s| s.to_str()).ok_or("grid path has no file name")?.to_string();
    let h = GridHeader::describe(g, format, name);
    match format {
        DataFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&data).map_err(|e| e.to_string())?;
            for v in &g.values {
                w.write_record([v.to_string()]).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
        DataFormat::F64le => {
            let bytes: Vec<u8> = g.values.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(&data, bytes).map_err(|e| format!("{}: {e}", data.display()))?;
        }
    }
    let text = serde_json::to_string_pretty(&h).map_err(|e| e.to_string())? + "\n";
    fs::write(header, text).map_err(|e| format!("{}: {e}", header.display()))?;
    Ok(h)
}

pub fn read_grid(header: &Path) -> IoResult<GridFn> {
    let text = fs::read_to_string(header).map_err(|e| format!("{}: {e}", header.display()))?;
    let h: GridHeader = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", header.display()))?;
    let data = header.parent().unwrap_or(Path::new(".")).join(&h.data);
    let values = match h.format {
        DataFormat::Csv => {
            let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(&data).map_err(|e| e.to_string())?;
            let mut out = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(|e| e.to_string())?;
                for field in rec.iter() {
                    out.push(
                        field.trim().parse::<f64>().map_err(|_| format!("{}: bad value `{field}`", data.display()))?,
                    );
                }
            }
            out
        }
        DataFormat::F64le => {
            let bytes = fs::read(&data).map_err(|e| format!("{}: {e}", data.display()))?;
            if bytes.len() % 8 != 0 {
                return Err(format!("{}: length is not a multiple of 8", data.display()));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
        }
    };
    let g = GridFn::new(h.lo, h.hi, h.shape, values).map_err(|e| format!("{}: {e}", header.display()))?;
    if h.spacing.len() != g.shape.len() {
        return Err(format!("{}: spacing needs one entry per axis", header.display()));
    }
    for (a, s) in h.spacing.iter().enumerate() {
        if (g.spacing(a) - s).abs() > 1e-12 * s.abs().max(1.0) {
            return Err(format!("{}: spacing {s} disagrees with the box and shape", header.display()));
        }
    }
    Ok(g)
}
