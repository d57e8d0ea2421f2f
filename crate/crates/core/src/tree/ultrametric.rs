use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Symmetric matrix of pairwise coalescence times with zero diagonal.
///
/// Entries equal to `censor_time` mean the pair had not merged when observation stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UltrametricMatrix {
    n: usize,
    tau: Vec<f64>,
    censor_time: f64,
}

impl UltrametricMatrix {
    /// Wrap a row-major `n × n` matrix after checking shape, symmetry and sign.
    ///
    /// The strong triangle inequality is checked by
    /// [`build_dendrogram`](super::build_dendrogram), which can name a witness.
    pub fn new(n: usize, tau: Vec<f64>, censor_time: f64) -> Result<Self> {
        if tau.len() != n * n {
            return invalid(format!("expected {} entries, got {}", n * n, tau.len()));
        }
        if !(censor_time >= 0.0) {
            return invalid("censor time must be >= 0");
        }
        for i in 0..n {
            if tau[i * n + i] != 0.0 {
                return invalid(format!("diagonal entry {i} is not zero"));
            }
            for j in 0..i {
                let (a, b) = (tau[i * n + j], tau[j * n + i]);
                if !(a.is_finite() && a >= 0.0) {
                    return invalid(format!("entry ({i}, {j}) = {a} is not a time"));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ"));
                }
                if a > censor_time * (1.0 + 1e-12) {
                    return invalid(format!("entry ({i}, {j}) = {a} exceeds the censor time"));
                }
            }
        }
        Ok(Self { n, tau, censor_time })
    }

    pub fn from_rows(rows: &[Vec<f64>], censor_time: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("matrix is not square");
        }
        Self::new(n, rows.concat(), censor_time)
    }

    pub(crate) fn from_parts_unchecked(n: usize, tau: Vec<f64>, censor_time: f64) -> Self {
        Self { n, tau, censor_time }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn censor_time(&self) -> f64 {
        self.censor_time
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    /// Largest `τ_ij - max(τ_ik, τ_kj)` over all triples; `O(n³)`.
    pub fn max_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    worst = worst.max(self.get(i, j) - self.get(i, k).max(self.get(k, j)));
                }
            }
        }
        worst
    }

    /// Lower triangle as CSV: a `censor,<time>` line, then row `i` holding
    /// `τ_i0 .. τ_ii`.
    pub fn write_lower_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["censor".to_string(), self.censor_time.to_string()])?;
        for i in 0..self.n {
            w.write_record((0..=i).map(|j| self.get(i, j).to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_lower_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = r.records();
        let head = match records.next() {
            Some(rec) => rec?,
            None => return invalid("empty matrix file"),
        };
        if head.get(0) != Some("censor") || head.len() != 2 {
            return invalid("first line must be `censor,<time>`");
        }
        let censor: f64 = head[1]
            .trim()
            .parse()
            .map_err(|_| crate::Error::InvalidArgument("bad censor time".into()))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in records {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| crate::Error::InvalidArgument("bad matrix entry".into()))?;
            if row.len() != rows.len() + 1 {
                return invalid(format!("row {} has {} entries", rows.len(), row.len()));
            }
            rows.push(row);
        }
        let n = rows.len();
        let mut tau = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                tau[i * n + j] = v;
                tau[j * n + i] = v;
            }
        }
        Self::new(n, tau, censor)
    }
}
