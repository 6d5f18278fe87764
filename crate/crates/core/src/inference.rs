//! Plug-in estimation with delta-method Wald intervals, a finite-difference
//! gradient kept as a permanent cross-check, a multinomial bootstrap, and a
//! two-sample comparison.
//!
//! The measure is treated as a function of the row-major cell vector. Since
//! hazards are written as `ω_i = a_i / Σ_{m≥i} a_m` on the marginal masses,
//! the function is homogeneous of degree zero and can be differentiated on
//! unnormalized cells without projecting onto the simplex.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{discordance, w_partials, DiscordanceTerms, Measure};
use crate::normal::two_sided_z;
use crate::simulate::{replicate_rng, sample_cells};
use crate::table::{
    hazards, marginal_sums, CountTable, HazardPair, MarginalPair, ProbTable, MASS_TOLERANCE,
};

pub const MIN_BOOTSTRAP_REPLICATES: usize = 200;

/// Share of degenerate bootstrap replicates tolerated before giving up.
pub const MAX_DEGENERATE_SHARE: f64 = 0.01;

/// Row-major vector of the r² cell probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatProb {
    r: usize,
    p: Vec<f64>,
}

impl FlatProb {
    pub fn new(r: usize, p: Vec<f64>) -> Result<Self> {
        if r < 2 || p.len() != r * r {
            return Err(Error::Shape(format!(
                "expected {} cells for r = {r}, got {}",
                r * r,
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProbability(
                "negative or non-finite cell".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidProbability(format!("cells sum to {total}")));
        }
        Ok(Self { r, p })
    }

    pub fn from_table(t: &ProbTable) -> Self {
        Self {
            r: t.r(),
            p: t.cells().to_vec(),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// `diag(p) − p pᵀ`, stored dense.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    dim: usize,
    m: Vec<f64>,
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.m
            .chunks(self.dim)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// `gᵀ ξ g`.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        assert_eq!(g.len(), self.dim);
        self.m
            .chunks(self.dim)
            .zip(g)
            .map(|(row, gi)| gi * row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

pub fn multinomial_covariance(p: &FlatProb) -> CovarianceModel {
    let dim = p.p.len();
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i * dim + j] = -p.p[i] * p.p[j];
        }
        m[i * dim + i] += p.p[i];
    }
    CovarianceModel { dim, m }
}

struct Evaluated {
    marginals: MarginalPair,
    hazards: HazardPair,
    terms: DiscordanceTerms,
}

fn evaluate(r: usize, cells: &[f64]) -> Evaluated {
    let (row, col) = marginal_sums(r, cells);
    let marginals = MarginalPair::from_sums(row, col);
    let hazards = hazards(&marginals);
    let terms = discordance(&hazards);
    Evaluated {
        marginals,
        hazards,
        terms,
    }
}

/// Measure value on raw (possibly unnormalized) cells.
fn measure_at(r: usize, cells: &[f64], m: Measure) -> Result<f64> {
    m.evaluate(&evaluate(r, cells).terms)
}

fn check_differentiable(e: &Evaluated, m: Measure) -> Result<()> {
    let h = &e.hazards;
    let d = &e.terms;
    if d.total_mass <= 0.0 {
        return Err(Error::DegenerateMass);
    }
    for (i, (&ex, &ey)) in h.exhausted_x.iter().zip(&h.exhausted_y).enumerate() {
        if ex || ey {
            let which = if ex { "row" } else { "column" };
            return Err(Error::NonDifferentiable(format!(
                "{which} survival is zero at category {}",
                i + 1
            )));
        }
    }
    if let Some(i) = (0..d.len()).find(|&i| d.w1[i] == 0.0 && d.w2[i] == 0.0) {
        return Err(Error::NonDifferentiable(format!(
            "both discordance terms vanish at category {}",
            i + 1
        )));
    }
    match m {
        Measure::Phi => {
            if d.w1.iter().all(|&w| w == 0.0) || d.w2.iter().all(|&w| w == 0.0) {
                return Err(Error::NonDifferentiable(
                    "estimate sits on the boundary |phi| = 1".into(),
                ));
            }
        }
        Measure::Psi { .. } => {
            if let Some(i) = (0..d.len()).find(|&i| d.w1[i] == 0.0 || d.w2[i] == 0.0) {
                return Err(Error::NonDifferentiable(format!(
                    "one discordance term vanishes at category {}",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Chain rule from hazards back to one margin's masses:
/// `∂ω_k/∂a_m = [m = k]/S_k − a_k/S_k² · [m ≥ k]`.
fn margin_partials(mass: &[f64], surv: &[f64], d_omega: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    (0..mass.len())
        .map(|m| {
            let direct = match d_omega.get(m) {
                Some(g) => {
                    acc += g * mass[m] / (surv[m] * surv[m]);
                    g / surv[m]
                }
                None => 0.0,
            };
            direct - acc
        })
        .collect()
}

/// Analytic gradient of a measure with respect to the r² cells.
pub fn gradient(p: &FlatProb, m: Measure) -> Result<Vec<f64>> {
    m.validate()?;
    let r = p.r;
    let e = evaluate(r, &p.p);
    check_differentiable(&e, m)?;
    let (g1, g2) = w_partials(&e.terms, m);
    let h = &e.hazards;
    let mut d_wx = Vec::with_capacity(r - 1);
    let mut d_wy = Vec::with_capacity(r - 1);
    for i in 0..r - 1 {
        let (x, y) = (h.omega_x[i], h.omega_y[i]);
        d_wx.push(g1[i] * (1.0 - y) - g2[i] * y);
        d_wy.push(g2[i] * (1.0 - x) - g1[i] * x);
    }
    let da = margin_partials(&e.marginals.row, &e.marginals.row_surv, &d_wx);
    let db = margin_partials(&e.marginals.col, &e.marginals.col_surv, &d_wy);
    Ok((0..r * r).map(|k| da[k / r] + db[k % r]).collect())
}

pub fn grad_phi(p: &FlatProb) -> Result<Vec<f64>> {
    gradient(p, Measure::Phi)
}

/// Central differences `(f(p + h e_k) − f(p − h e_k)) / 2h` with no
/// renormalization.
pub fn gradient_fd(p: &FlatProb, m: Measure, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h < 1e-3) {
        return Err(Error::Domain(format!(
            "step must lie in (0, 1e-3), got {h}"
        )));
    }
    m.validate()?;
    let r = p.r;
    check_differentiable(&evaluate(r, &p.p), m)?;
    let mut cells = p.p.clone();
    (0..cells.len())
        .map(|k| {
            let orig = cells[k];
            cells[k] = orig + h;
            let up = measure_at(r, &cells, m)?;
            cells[k] = orig - h;
            let down = measure_at(r, &cells, m)?;
            cells[k] = orig;
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

pub fn grad_fd(p: &FlatProb, h: f64) -> Result<Vec<f64>> {
    gradient_fd(p, Measure::Phi, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    Delta,
    BootstrapPercentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfInterval {
    pub estimate: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
}

impl ConfInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub degenerate: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub measure: Measure,
    pub ci: ConfInterval,
    pub n: u64,
    /// Euclidean norm of the gradient at the estimate (delta method only).
    pub gradient_norm: Option<f64>,
    /// Interval reaches outside the measure's logical range; endpoints are
    /// left unclamped.
    pub out_of_range: bool,
    pub degenerate_flags: Vec<String>,
    pub bootstrap: Option<BootstrapSummary>,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "level must lie in (0, 1), got {level}"
        )))
    }
}

/// Notes on indices where the hazards or discordance terms are degenerate.
pub fn degeneracy_notes(p: &ProbTable) -> Vec<String> {
    let e = evaluate(p.r(), p.cells());
    let mut notes = Vec::new();
    let h = &e.hazards;
    for i in 0..h.len() {
        if h.exhausted_x[i] {
            notes.push(format!(
                "category {}: row survival exhausted, hazard set to 0",
                i + 1
            ));
        }
        if h.exhausted_y[i] {
            notes.push(format!(
                "category {}: column survival exhausted, hazard set to 0",
                i + 1
            ));
        }
        if e.terms.w1[i] == 0.0 && e.terms.w2[i] == 0.0 {
            notes.push(format!(
                "category {}: both discordance terms zero, term skipped",
                i + 1
            ));
        }
    }
    notes
}

/// Plug-in point estimate.
pub fn point_estimate(t: &CountTable, m: Measure) -> Result<f64> {
    m.validate()?;
    let p = t.to_probs();
    measure_at(p.r(), p.cells(), m)
}

fn out_of_range(m: Measure, lower: f64, upper: f64) -> bool {
    let (lo, hi) = m.range();
    lower < lo || upper > hi
}

/// `φ(p̂) ± z_{α/2} √(∇φᵀ ξ(p̂) ∇φ / n)`.
pub fn wald_ci(t: &CountTable, level: f64, m: Measure) -> Result<EstimateReport> {
    check_level(level)?;
    m.validate()?;
    let probs = t.to_probs();
    let p = FlatProb::from_table(&probs);
    let estimate = measure_at(p.r, &p.p, m)?;
    let g = gradient(&p, m)?;
    let var = multinomial_covariance(&p).quadratic_form(&g).max(0.0) / t.n() as f64;
    let se = var.sqrt();
    let z = two_sided_z(level);
    let (lower, upper) = (estimate - z * se, estimate + z * se);
    let mut degenerate_flags = degeneracy_notes(&probs);
    if se == 0.0 {
        degenerate_flags.push("standard error is zero".into());
    }
    Ok(EstimateReport {
        measure: m,
        ci: ConfInterval {
            estimate,
            se,
            lower,
            upper,
            level,
            method: CiMethod::Delta,
        },
        n: t.n(),
        gradient_norm: Some(g.iter().map(|v| v * v).sum::<f64>().sqrt()),
        out_of_range: out_of_range(m, lower, upper),
        degenerate_flags,
        bootstrap: None,
    })
}

/// Linear-interpolation quantile of sorted data.
fn sorted_quantile(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Nonparametric multinomial bootstrap with a percentile interval.
///
/// Replicate `b` draws from its own stream of the master seed, so the result
/// is independent of thread count.
pub fn bootstrap_ci(
    t: &CountTable,
    level: f64,
    replicates: usize,
    seed: u64,
    m: Measure,
) -> Result<EstimateReport> {
    check_level(level)?;
    m.validate()?;
    if replicates < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::Domain(format!(
            "need at least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates, got {replicates}"
        )));
    }
    let probs = t.to_probs();
    let r = t.r();
    let draws: Vec<Option<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b);
            let cells = sample_cells(probs.cells(), t.n(), &mut rng);
            let cells: Vec<f64> = cells.into_iter().map(|c| c as f64).collect();
            measure_at(r, &cells, m).ok()
        })
        .collect();
    let mut values: Vec<f64> = draws.into_iter().flatten().collect();
    let degenerate = replicates - values.len();
    if degenerate as f64 > MAX_DEGENERATE_SHARE * replicates as f64 {
        return Err(Error::TooManyDegenerateReplicates {
            degenerate,
            total: replicates,
        });
    }
    let estimate = measure_at(r, probs.cells(), m)?;
    values.sort_by(f64::total_cmp);
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let se = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let alpha = 1.0 - level;
    let lower = sorted_quantile(&values, alpha / 2.0);
    let upper = sorted_quantile(&values, 1.0 - alpha / 2.0);
    let mut degenerate_flags = degeneracy_notes(&probs);
    if degenerate > 0 {
        degenerate_flags.push(format!(
            "{degenerate} degenerate bootstrap replicates excluded"
        ));
    }
    Ok(EstimateReport {
        measure: m,
        ci: ConfInterval {
            estimate,
            se,
            lower,
            upper,
            level,
            method: CiMethod::BootstrapPercentile,
        },
        n: t.n(),
        gradient_norm: None,
        out_of_range: out_of_range(m, lower, upper),
        degenerate_flags,
        bootstrap: Some(BootstrapSummary {
            replicates,
            degenerate,
            seed,
        }),
    })
}

/// Difference `a − b` between two independent groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub measure: Measure,
    pub difference: ConfInterval,
    /// The interval excludes zero.
    pub significant: bool,
    /// Both standard errors are zero, so the interval is a single point.
    pub zero_width: bool,
}

pub fn compare_groups(
    a: &EstimateReport,
    b: &EstimateReport,
    level: f64,
) -> Result<GroupComparison> {
    check_level(level)?;
    for rep in [a, b] {
        if rep.ci.method != CiMethod::Delta {
            return Err(Error::MethodMismatch(
                "group comparison needs delta-method reports".into(),
            ));
        }
    }
    if a.measure != b.measure {
        return Err(Error::MethodMismatch(format!(
            "cannot compare {} with {}",
            a.measure, b.measure
        )));
    }
    let estimate = a.ci.estimate - b.ci.estimate;
    let se = a.ci.se.hypot(b.ci.se);
    let z = two_sided_z(level);
    let difference = ConfInterval {
        estimate,
        se,
        lower: estimate - z * se,
        upper: estimate + z * se,
        level,
        method: CiMethod::Delta,
    };
    Ok(GroupComparison {
        measure: a.measure,
        significant: !difference.contains(0.0),
        zero_width: se == 0.0,
        difference,
    })
}
