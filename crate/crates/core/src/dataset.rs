//! In-memory point sets and their CSV / JSON sidecar file formats.
//!
//! CSV layout: header `x0,…,x{D-1}` with an optional trailing `y` column for
//! responses, one point per row, `.` decimal separator, LF line endings.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator name, seed and parameters of a synthetic dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// `n` points in `R^D`, stored row-major, with optional per-point responses.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
    responses: Option<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("point dimension must be at least 1"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::param(format!(
                "{} values do not form a nonempty set of {dim}-dimensional points",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(PointSet {
            dim,
            data,
            responses: None,
            meta: DatasetMeta::default(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn with_responses(mut self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.len() {
            return Err(Error::param(format!(
                "{} responses for {} points",
                responses.len(),
                self.len()
            )));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite response"));
        }
        self.responses = Some(responses);
        Ok(self)
    }

    pub fn with_meta(mut self, meta: DatasetMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn rows(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.point(i)).collect()
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    /// Copies the selected points (and responses) into a new set.
    pub fn subset(&self, indices: &[usize]) -> Result<PointSet> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        let mut out = PointSet::new(self.dim, data)?;
        out.responses = self
            .responses
            .as_ref()
            .map(|r| indices.iter().map(|&i| r[i]).collect());
        out.meta = self.meta.clone();
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        if self.responses.is_some() {
            header.push("y".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.iter().enumerate() {
            let mut line = String::with_capacity(row.len() * 20);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            if let Some(r) = &self.responses {
                line.push(',');
                line.push_str(&r[i].to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<PointSet> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(e.to_string()))?
            .clone();
        let has_y = headers.iter().next_back() == Some("y");
        let dim = headers.len() - usize::from(has_y);
        for (j, h) in headers.iter().take(dim).enumerate() {
            if h != format!("x{j}") {
                return Err(parse_err(format!("header column {j} is `{h}`, expected `x{j}`")));
            }
        }
        let mut data = Vec::new();
        let mut ys = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    parse_err(format!("row {}: column {j}: bad number `{field}`", line + 1))
                })?;
                if has_y && j == dim {
                    ys.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        if data.is_empty() {
            return Err(parse_err("no data rows".into()));
        }
        let set = PointSet::new(dim, data).map_err(|e| parse_err(e.to_string()))?;
        if has_y {
            set.with_responses(ys).map_err(|e| parse_err(e.to_string()))
        } else {
            Ok(set)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PointSet> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut set = Self::read_csv(file, path)?;
        let meta_path = meta_path_for(path);
        if let Ok(text) = std::fs::read_to_string(&meta_path) {
            set.meta = serde_json::from_str(&text)?;
        }
        Ok(set)
    }

    /// Writes the CSV and its `<stem>.meta.json` sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
        let meta_path = meta_path_for(path);
        let mut text = serde_json::to_string_pretty(&self.meta)?;
        text.push('\n');
        std::fs::write(&meta_path, text).map_err(|e| Error::io(meta_path, e))
    }
}

/// `data.csv` → `data.meta.json`.
pub fn meta_path_for(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}
