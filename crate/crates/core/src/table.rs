//! Square count and probability tables and the marginal, survival and
//! hazard quantities derived from them.
//!
//! Rows index the first (pre) classification `X`, columns the second (post)
//! classification `Y`. Cells are stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass tolerance for tables built from counts.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// User-supplied probability tables within this distance of unit mass are
/// renormalized; anything further off is rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// Observed r×r table of nonnegative counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountTable {
    r: usize,
    counts: Vec<u64>,
    n: u64,
}

impl CountTable {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let r = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != r) {
            return Err(Error::Shape(format!(
                "row {} has {} entries, expected {r}",
                i + 1,
                row.len()
            )));
        }
        Self::from_flat(r, rows.into_iter().flatten().collect())
    }

    /// Builds a table from `r*r` row-major counts.
    pub fn from_flat(r: usize, counts: Vec<u64>) -> Result<Self> {
        if r < 2 {
            return Err(Error::Shape(format!(
                "table must be at least 2x2, got {r}x{r}"
            )));
        }
        if counts.len() != r * r {
            return Err(Error::Shape(format!(
                "expected {} cells for a {r}x{r} table, got {}",
                r * r,
                counts.len()
            )));
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Shape("total count overflows u64".into()))?;
        if n == 0 {
            return Err(Error::ZeroTotal);
        }
        Ok(Self { r, counts, n })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Total sample size.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.r + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.r)
    }

    /// Swaps the roles of the row and column classifications.
    pub fn transpose(&self) -> Self {
        let r = self.r;
        let counts = (0..r * r).map(|k| self.get(k % r, k / r)).collect();
        Self {
            r,
            counts,
            n: self.n,
        }
    }

    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroTotal);
        }
        let counts = self
            .counts
            .iter()
            .map(|&c| c.checked_mul(k))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Shape("scaled count overflows u64".into()))?;
        Self::from_flat(self.r, counts)
    }

    pub fn to_probs(&self) -> ProbTable {
        from_counts(self)
    }
}

/// r×r joint probability table with unit total mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    r: usize,
    p: Vec<f64>,
}

impl ProbTable {
    /// Validates user-supplied probabilities. Mass within
    /// [`RENORMALIZE_TOLERANCE`] of one is rescaled to exactly one.
    pub fn new(r: usize, p: Vec<f64>) -> Result<Self> {
        if r < 2 {
            return Err(Error::Shape(format!(
                "table must be at least 2x2, got {r}x{r}"
            )));
        }
        if p.len() != r * r {
            return Err(Error::Shape(format!(
                "expected {} cells for a {r}x{r} table, got {}",
                r * r,
                p.len()
            )));
        }
        if let Some(k) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "cell ({}, {}) is {}",
                k / r + 1,
                k % r + 1,
                p[k]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidProbability(format!(
                "cells sum to {total}, not 1"
            )));
        }
        let p = if total == 1.0 {
            p
        } else {
            p.into_iter().map(|v| v / total).collect()
        };
        Ok(Self { r, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::Shape("probability table is not square".into()));
        }
        Self::new(r, rows.iter().flatten().copied().collect())
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Row-major cell probabilities.
    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.r + j]
    }

    pub fn transpose(&self) -> Self {
        let r = self.r;
        let p = (0..r * r).map(|k| self.get(k % r, k / r)).collect();
        Self { r, p }
    }
}

/// Maximum-likelihood cell probabilities `n_ij / n`.
pub fn from_counts(t: &CountTable) -> ProbTable {
    let n = t.n as f64;
    ProbTable {
        r: t.r,
        p: t.counts.iter().map(|&c| c as f64 / n).collect(),
    }
}

/// Row and column marginals with their cumulative and survival sequences.
///
/// `row_surv[i]` is `Pr(X >= i+1)` in one-based category terms, so
/// `row_surv[0] == 1` for a normalized table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPair {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub row_cum: Vec<f64>,
    pub col_cum: Vec<f64>,
    pub row_surv: Vec<f64>,
    pub col_surv: Vec<f64>,
}

impl MarginalPair {
    /// Builds the cumulative and survival sequences from (possibly
    /// unnormalized) marginal masses. Survival is a tail sum.
    pub fn from_sums(row: Vec<f64>, col: Vec<f64>) -> Self {
        let row_cum = prefix_sums(&row);
        let col_cum = prefix_sums(&col);
        let row_surv = tail_sums(&row);
        let col_surv = tail_sums(&col);
        Self {
            row,
            col,
            row_cum,
            col_cum,
            row_surv,
            col_surv,
        }
    }

    pub fn r(&self) -> usize {
        self.row.len()
    }
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn tail_sums(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut acc = 0.0;
    for (o, &x) in out.iter_mut().zip(v).rev() {
        acc += x;
        *o = acc;
    }
    out
}

/// Row and column sums of a row-major `r*r` cell vector.
pub(crate) fn marginal_sums(r: usize, cells: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut row = vec![0.0; r];
    let mut col = vec![0.0; r];
    for (k, &v) in cells.iter().enumerate() {
        row[k / r] += v;
        col[k % r] += v;
    }
    (row, col)
}

pub fn marginals(p: &ProbTable) -> MarginalPair {
    let (row, col) = marginal_sums(p.r, &p.p);
    MarginalPair::from_sums(row, col)
}

/// Discrete-time hazards of both margins, indexed by the first `r-1`
/// categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardPair {
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
    /// Positions where the row survival is zero; `omega_x` is 0 there.
    pub exhausted_x: Vec<bool>,
    pub exhausted_y: Vec<bool>,
}

impl HazardPair {
    pub fn len(&self) -> usize {
        self.omega_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_x.is_empty()
    }

    pub fn any_exhausted(&self) -> bool {
        self.exhausted_x.iter().chain(&self.exhausted_y).any(|&e| e)
    }
}

/// `omega_i = p_i / s_i` for each margin. Where `s_i` is zero the hazard is
/// 0/0; it is set to 0 and the index flagged.
pub fn hazards(m: &MarginalPair) -> HazardPair {
    let (omega_x, exhausted_x) = hazard_seq(&m.row, &m.row_surv);
    let (omega_y, exhausted_y) = hazard_seq(&m.col, &m.col_surv);
    HazardPair {
        omega_x,
        omega_y,
        exhausted_x,
        exhausted_y,
    }
}

fn hazard_seq(mass: &[f64], surv: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let k = mass.len().saturating_sub(1);
    mass[..k]
        .iter()
        .zip(&surv[..k])
        .map(|(&m, &s)| {
            if s > 0.0 {
                ((m / s).clamp(0.0, 1.0), false)
            } else {
                (0.0, true)
            }
        })
        .unzip()
}

/// Hazards straight from a table.
pub fn table_hazards(p: &ProbTable) -> HazardPair {
    hazards(&marginals(p))
}
