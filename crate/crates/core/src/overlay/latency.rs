use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Milliseconds spanned by one unit of the synthetic unit square.
const SYNTHETIC_SCALE_MS: f64 = 200.0;

/// Square matrix of pairwise latencies in milliseconds. Rows need not be
/// symmetric; the diagonal is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl LatencyMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        let m = LatencyMatrix { size, entries };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.size {
            for j in 0..self.size {
                let x = self.get(i, j);
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::invalid(format!("entry ({i},{j}) = {x} is not a latency")));
                }
                if i == j && x != 0.0 {
                    return Err(Error::invalid(format!("diagonal entry ({i},{i}) is {x}")));
                }
            }
        }
        Ok(())
    }

    /// `m` points uniform in the unit square, Euclidean distances scaled to
    /// milliseconds.
    pub fn synthetic(m: usize, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("latency matrix needs m >= 2, got {m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<(f64, f64)> = (0..m).map(|_| (rng.gen(), rng.gen())).collect();
        let mut entries = Vec::with_capacity(m * m);
        for &(xi, yi) in &points {
            for &(xj, yj) in &points {
                entries.push((xi - xj).hypot(yi - yj) * SYNTHETIC_SCALE_MS);
            }
        }
        Ok(LatencyMatrix { size: m, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Text form: the size on the first line, then one row per line.
    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.size);
        for i in 0..self.size {
            let row = self.row(i);
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        // Rows may wrap across lines; only the token stream matters.
        let mut tokens = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .flat_map(|(line, l)| l.split_whitespace().map(move |t| (line, t)));
        let (line, first) = tokens.next().ok_or_else(|| Error::parse(1, "empty latency file"))?;
        let size: usize = first
            .parse()
            .map_err(|_| Error::parse(line, format!("bad matrix size `{first}`")))?;
        let mut rows = vec![Vec::with_capacity(size); size];
        for (i, row) in rows.iter_mut().enumerate() {
            for _ in 0..size {
                let (line, tok) = tokens
                    .next()
                    .ok_or_else(|| Error::parse(line, format!("matrix truncated in row {i}")))?;
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad latency `{tok}`")))?;
                row.push(x);
            }
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(Error::parse(line, format!("trailing token `{tok}`")));
        }
        Self::from_rows(rows)
    }
}

pub fn read_latency_matrix(path: impl AsRef<Path>) -> Result<LatencyMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LatencyMatrix::parse(&text)
}
