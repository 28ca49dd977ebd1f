use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mse::mean_std;
use crate::numerics::Matrix;
use crate::reducers::Method;
use crate::{Error, Result};

/// Result of one (method, known size, repeat) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: Method,
    pub known_size: usize,
    pub repeat: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub n_test: usize,
    pub seed: u64,
    #[serde(default)]
    pub epochs: usize,
    #[serde(default)]
    pub best_epoch: usize,
    #[serde(skip)]
    pub reconstructions: Option<Matrix>,
}

/// Across-repeat summary of one (method, known size) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: Method,
    pub known_size: usize,
    pub repeats: usize,
    /// Mean of the per-repeat mean MSEs.
    pub mse_mean: f64,
    /// Population standard deviation of the per-repeat mean MSEs.
    pub mse_std_across_repeats: f64,
    /// Average within-repeat standard deviation.
    pub mse_std_within: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttackReport {
    pub cells: Vec<CellResult>,
}

const CELL_HEADER: &str = "method,known_size,repeat,mse_mean,mse_std,n_test,seed";
const AGGREGATE_HEADER: &str = "method,known_size,repeats,mse_mean,mse_std_across_repeats,mse_std_within";

impl AttackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.cells).expect("cells serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cells: Vec<CellResult> = serde_json::from_str(text).map_err(|e| {
            Error::format(
                0,
                format!("invalid report JSON at line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        Ok(AttackReport { cells })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CELL_HEADER}")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.method.name(),
                c.known_size,
                c.repeat,
                c.mse_mean,
                c.mse_std,
                c.n_test,
                c.seed
            )?;
        }
        Ok(())
    }

    /// One row per (method, known size), ordered by method then size.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut groups: BTreeMap<(Method, usize), Vec<&CellResult>> = BTreeMap::new();
        for c in &self.cells {
            groups.entry((c.method, c.known_size)).or_default().push(c);
        }
        groups
            .into_iter()
            .map(|((method, known_size), cells)| {
                let means: Vec<f64> = cells.iter().map(|c| c.mse_mean).collect();
                let stds: Vec<f64> = cells.iter().map(|c| c.mse_std).collect();
                let (mse_mean, mse_std_across_repeats) = mean_std(&means);
                AggregateRow {
                    method,
                    known_size,
                    repeats: cells.len(),
                    mse_mean,
                    mse_std_across_repeats,
                    mse_std_within: stds.iter().sum::<f64>() / stds.len() as f64,
                }
            })
            .collect()
    }

    pub fn write_aggregate_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{AGGREGATE_HEADER}")?;
        for r in self.aggregate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method.name(),
                r.known_size,
                r.repeats,
                r.mse_mean,
                r.mse_std_across_repeats,
                r.mse_std_within
            )?;
        }
        Ok(())
    }

    /// Grid with methods as rows and known sizes as columns, entries
    /// `mean±std` across repeats. Missing cells are left empty.
    pub fn grid_table(&self) -> String {
        let rows = self.aggregate();
        let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
        methods.dedup();
        let mut sizes: Vec<usize> = rows.iter().map(|r| r.known_size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut out = String::from("method");
        for s in &sizes {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
        for m in methods {
            out.push_str(m.name());
            for s in &sizes {
                out.push(',');
                if let Some(r) = rows.iter().find(|r| r.method == m && r.known_size == *s) {
                    out.push_str(&format!("{:.6}±{:.6}", r.mse_mean, r.mse_std_across_repeats));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Mean of the cell means for `method`, over all sizes and repeats.
    pub fn method_mean(&self, method: Method) -> Option<f64> {
        let v: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.method == method)
            .map(|c| c.mse_mean)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Raw little-endian f32 dump of a matrix, row-major.
pub fn write_f32_tensor<W: Write>(m: &Matrix, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(4 * m.as_slice().len());
    for v in m.as_slice() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_f32_tensor(bytes: &[u8], cols: usize) -> Result<Matrix> {
    if cols == 0 || !bytes.len().is_multiple_of(4 * cols) {
        return Err(Error::format(
            bytes.len() as u64,
            format!("{} bytes is not a whole number of {cols}-wide f32 rows", bytes.len()),
        ));
    }
    let vals = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Matrix::from_vec(bytes.len() / (4 * cols), cols, vals)
}
