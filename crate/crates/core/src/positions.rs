use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Row-major `N x m` matrix holding one solution per thread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Positions {
    /// Every thread starts at `x0`.
    pub fn filled(n: usize, x0: &[f64]) -> Self {
        Positions {
            n,
            m: x0.len(),
            data: x0.repeat(n),
        }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Positions {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(Error::param("positions", "need at least one nonempty row"));
        }
        for row in rows {
            check_dim(m, row.len())?;
        }
        Ok(Positions {
            n: rows.len(),
            m,
            data: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column-wise average `x_bar`.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.m];
        for row in self.rows() {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }
}
