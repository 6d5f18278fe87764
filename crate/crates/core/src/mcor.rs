//! Marginal continuation odds ratio (MCOR) structure: a constant shift Δ
//! between the logits of the row and column hazards,
//! `logit(ωY_i) = logit(ωX_i) + Δ`.
//!
//! Under this structure every angle in Φ is the same, so Φ collapses to a
//! closed-form function of Δ, exported here as [`phi_of_delta`].

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ProbTable;

/// Row hazards plus a logit shift. The column hazards are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McorScenario {
    base_haz_x: Vec<f64>,
    delta: f64,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl McorScenario {
    pub fn new(base_haz_x: Vec<f64>, delta: f64) -> Result<Self> {
        if base_haz_x.is_empty() {
            return Err(Error::Domain(
                "scenario needs at least one hazard (two categories)".into(),
            ));
        }
        if let Some(w) = base_haz_x.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
            return Err(Error::Domain(format!(
                "base hazards must lie strictly in (0, 1), got {w}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::Domain(format!("delta must be finite, got {delta}")));
        }
        Ok(Self { base_haz_x, delta })
    }

    pub fn base_haz_x(&self) -> &[f64] {
        &self.base_haz_x
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of categories.
    pub fn r(&self) -> usize {
        self.base_haz_x.len() + 1
    }

    pub fn omega_y(&self) -> Vec<f64> {
        self.base_haz_x
            .iter()
            .map(|&w| expit(logit(w) + self.delta))
            .collect()
    }
}

/// Marginal distribution with the given hazards; the last category takes the
/// remaining survival.
fn distribution_from_hazards(omega: &[f64]) -> Vec<f64> {
    let mut s = 1.0;
    let mut out = Vec::with_capacity(omega.len() + 1);
    for &w in omega {
        out.push(s * w);
        s *= 1.0 - w;
    }
    out.push(s);
    out
}

/// Φ under MCOR:
/// `f(Δ) = (4/π) arccos(e^Δ / √(e^{2Δ} + 1)) − 1`.
///
/// Evaluated as `−(4/π) atan(tanh(Δ/2))`, which is the same function with no
/// overflow for large |Δ| and exact odd symmetry.
pub fn phi_of_delta(delta: f64) -> f64 {
    -(delta / 2.0).tanh().atan() / FRAC_PI_4
}

/// Inverse of [`phi_of_delta`].
pub fn delta_of_phi(phi: f64) -> Result<f64> {
    if phi.is_nan() || phi.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "phi must lie strictly inside (-1, 1), got {phi}"
        )));
    }
    Ok(-2.0 * (phi * FRAC_PI_4).tan().atanh())
}

/// Independence joint `p_ij = p_i· p_·j` of the two MCOR marginals.
pub fn scenario_table(s: &McorScenario) -> Result<ProbTable> {
    let omega_y = s.omega_y();
    if let Some(w) = omega_y.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
        return Err(Error::Domain(format!(
            "derived column hazard {w} leaves (0, 1); |delta| too large"
        )));
    }
    let row = distribution_from_hazards(&s.base_haz_x);
    let col = distribution_from_hazards(&omega_y);
    let cells = row
        .iter()
        .flat_map(|a| col.iter().map(move |b| a * b))
        .collect();
    ProbTable::new(s.r(), cells)
}

/// `(Δ, f(Δ))` on `delta_min, delta_min + step, …` up to `delta_max`.
///
/// Grid points are snapped to 1e-12 so that values such as 0 come out exact.
pub fn curve_grid(delta_min: f64, delta_max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta_min.is_finite() && delta_max.is_finite() && step.is_finite()) {
        return Err(Error::Domain("grid bounds and step must be finite".into()));
    }
    if step <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if delta_min >= delta_max {
        return Err(Error::Domain(format!(
            "empty grid: delta_min {delta_min} is not below delta_max {delta_max}"
        )));
    }
    let count = ((delta_max - delta_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let d = ((delta_min + k as f64 * step) * 1e12).round() / 1e12;
            (d, phi_of_delta(d))
        })
        .collect())
}
