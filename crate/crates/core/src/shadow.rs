//! Shadow corpora: the reducer is rerun once per public record with that
//! record appended to the known members, pairing each embedding with the
//! record that produced it.

use std::io::{Read, Write};

use crate::numerics::{child_seed, Matrix};
use crate::par::map_indexed;
use crate::reconnet::Samples;
use crate::reducers::{fit, Method, ReducerConfig};
use crate::{Error, Result};

pub const SHADOW_MAGIC: &[u8; 4] = b"DRSH";
pub const SHADOW_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 4 + 4;

/// Seed for shadow record `j`; identical to [`child_seed`].
pub fn record_seed(base_seed: u64, j: usize) -> u64 {
    child_seed(base_seed, j as u64)
}

/// Flattens an `n x 2` embedding whose target is the LAST row into a
/// `2n` vector with the target's coordinates first.
pub fn flatten_target_first(coords: &Matrix) -> Vec<f64> {
    let n = coords.rows();
    let mut out = Vec::with_capacity(2 * n);
    if n == 0 {
        return out;
    }
    out.extend_from_slice(coords.row(n - 1));
    for i in 0..n - 1 {
        out.extend_from_slice(coords.row(i));
    }
    out
}

/// Known members followed by `target` as the last row.
pub fn with_target_last(known: &Matrix, target: &[f64]) -> Result<Matrix> {
    if target.len() != known.cols() {
        return Err(Error::validation(format!(
            "target has dimension {}, known members have {}",
            target.len(),
            known.cols()
        )));
    }
    let mut data = Vec::with_capacity((known.rows() + 1) * known.cols());
    data.extend_from_slice(known.as_slice());
    data.extend_from_slice(target);
    Matrix::from_vec(known.rows() + 1, known.cols(), data)
}

/// Per-coordinate mean and variance of flattened embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl Standardization {
    pub fn from_rows<'a>(width: usize, rows: impl Iterator<Item = &'a [f32]> + Clone) -> Self {
        let count = rows.clone().count().max(1) as f64;
        let mut mean = vec![0.0; width];
        for r in rows.clone() {
            for (m, &v) in mean.iter_mut().zip(r) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, &v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v as f64 - m).powi(2);
            }
        }
        var.iter_mut().for_each(|s| *s /= count);
        Standardization { mean, var }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / sqrt(var)`; coordinates with zero variance are only
    /// centred.
    pub fn apply(&self, flat: &[f64]) -> Result<Vec<f64>> {
        if flat.len() != self.width() {
            return Err(Error::validation(format!(
                "embedding has length {}, standardization expects {}",
                flat.len(),
                self.width()
            )));
        }
        Ok(flat
            .iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(&x, (&m, &v))| if v > 0.0 { (x - m) / v.sqrt() } else { x - m })
            .collect())
    }
}

/// A shadow corpus. Records are held in single precision, as on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    pub n_points: usize,
    pub dim: usize,
    pub method: Method,
    pub stats: Standardization,
    embeddings: Vec<f32>,
    targets: Vec<f32>,
}

impl ShadowSet {
    pub fn from_records(
        method: Method,
        n_points: usize,
        dim: usize,
        embeddings: Vec<f32>,
        targets: Vec<f32>,
    ) -> Result<Self> {
        let width = 2 * n_points;
        if width == 0 || dim == 0 || !embeddings.len().is_multiple_of(width) || !targets.len().is_multiple_of(dim) {
            return Err(Error::validation("record buffers do not match n_points and dim"));
        }
        if embeddings.len() / width != targets.len() / dim {
            return Err(Error::validation("embedding and target counts differ"));
        }
        let stats = Standardization::from_rows(width, embeddings.chunks(width));
        Ok(ShadowSet {
            n_points,
            dim,
            method,
            stats,
            embeddings,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.embeddings.len() / (2 * self.n_points)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn embedding(&self, j: usize) -> &[f32] {
        let w = 2 * self.n_points;
        &self.embeddings[j * w..(j + 1) * w]
    }

    pub fn target(&self, j: usize) -> &[f32] {
        &self.targets[j * self.dim..(j + 1) * self.dim]
    }

    pub fn targets(&self) -> Matrix {
        Matrix::from_vec(self.len(), self.dim, self.targets.iter().map(|&v| v as f64).collect())
            .expect("sizes checked at construction")
    }

    /// Network samples standardized with `stats`, normally those of the
    /// training corpus.
    pub fn samples(&self, stats: &Standardization) -> Result<Samples> {
        let mut inputs = Vec::with_capacity(self.embeddings.len());
        for j in 0..self.len() {
            let raw: Vec<f64> = self.embedding(j).iter().map(|&v| v as f64).collect();
            inputs.extend(stats.apply(&raw)?);
        }
        Samples::new(Matrix::from_vec(self.len(), 2 * self.n_points, inputs)?, self.targets())
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(SHADOW_MAGIC)?;
        out.write_all(&SHADOW_VERSION.to_le_bytes())?;
        out.write_all(&[self.method.id()])?;
        for v in [self.n_points, self.dim, self.len()] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
        for v in self.stats.mean.iter().chain(&self.stats.var) {
            out.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(4 * (2 * self.n_points + self.dim));
        for j in 0..self.len() {
            buf.clear();
            for v in self.embedding(j).iter().chain(self.target(j)) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != SHADOW_MAGIC {
            return Err(Error::format(0, "bad magic, expected DRSH"));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(
                bytes.len() as u64,
                format!("truncated header: expected {HEADER_LEN} bytes, found {}", bytes.len()),
            ));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != SHADOW_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let method =
            Method::from_id(bytes[6]).ok_or_else(|| Error::format(6, format!("unknown method id {}", bytes[6])))?;
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
        let (n, d, m) = (word(7), word(11), word(15));
        if n == 0 || d == 0 {
            return Err(Error::format(
                7,
                format!("n and d must be positive, found n={n}, d={d}"),
            ));
        }
        let width = 2 * n;
        let stats_len = 2 * width * 8;
        let record_len = (width + d) * 4;
        let expected = (HEADER_LEN as u128) + stats_len as u128 + (m as u128) * record_len as u128;
        if (bytes.len() as u128) != expected {
            let kind = if (bytes.len() as u128) < expected {
                "truncated"
            } else {
                "oversized"
            };
            return Err(Error::format(
                bytes.len().min(expected as usize) as u64,
                format!("{kind} file: expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        let mut pos = HEADER_LEN;
        let mut reals = |count: usize| {
            let out: Vec<f64> = bytes[pos..pos + 8 * count]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            pos += 8 * count;
            out
        };
        let mean = reals(width);
        let var = reals(width);
        let mut embeddings = Vec::with_capacity(m * width);
        let mut targets = Vec::with_capacity(m * d);
        for rec in bytes[pos..].chunks_exact(record_len) {
            let vals = rec
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")));
            let vals: Vec<f32> = vals.collect();
            embeddings.extend_from_slice(&vals[..width]);
            targets.extend_from_slice(&vals[width..]);
        }
        Ok(ShadowSet {
            n_points: n,
            dim: d,
            method,
            stats: Standardization { mean, var },
            embeddings,
            targets,
        })
    }

    /// One CSV row per record: embedding coordinates, then target values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header: Vec<String> = (0..2 * self.n_points).map(|i| format!("e{i}")).collect();
        header.extend((0..self.dim).map(|i| format!("t{i}")));
        writeln!(out, "{}", header.join(","))?;
        for j in 0..self.len() {
            let row: Vec<String> = self
                .embedding(j)
                .iter()
                .chain(self.target(j))
                .map(|v| v.to_string())
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Fits the reducer on `known` plus public row `j` (appended last) for every
/// `j`. Randomized methods use seed [`record_seed`]`(base_seed, j)`.
pub fn build_shadow_set(known: &Matrix, public: &Matrix, reducer: &ReducerConfig, base_seed: u64) -> Result<ShadowSet> {
    if public.rows() == 0 {
        return Err(Error::validation("public pool is empty"));
    }
    if known.cols() != public.cols() {
        return Err(Error::validation(format!(
            "known members have dimension {}, public records have {}",
            known.cols(),
            public.cols()
        )));
    }
    let n_points = known.rows() + 1;
    let results = map_indexed(public.rows(), |j| -> Result<Vec<f64>> {
        let z = with_target_last(known, public.row(j))?;
        let cfg = reducer.with_seed(record_seed(base_seed, j));
        let emb = fit(&z, &cfg).map_err(|e| e.context(format!("shadow record {j}")))?;
        Ok(flatten_target_first(&emb.coords))
    });
    let mut embeddings = Vec::with_capacity(public.rows() * 2 * n_points);
    for r in results {
        embeddings.extend(r?.into_iter().map(|v| v as f32));
    }
    let targets = public.as_slice().iter().map(|&v| v as f32).collect();
    ShadowSet::from_records(reducer.method, n_points, public.cols(), embeddings, targets)
}
