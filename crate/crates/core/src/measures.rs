//! Discordance terms and the two marginal-inhomogeneity measures built on
//! them: the directional measure Φ in [-1, 1] and the power-divergence
//! measure Ψ^(λ) in [0, 1].
//!
//! Both measures are functions of the hazard pair only, so every table with
//! the same marginals gives the same value.

use std::f64::consts::{FRAC_PI_4, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{table_hazards, HazardPair, ProbTable};

/// Below this |λ| the power divergence switches to its λ → 0 limit.
pub const LAMBDA_ZERO_THRESHOLD: f64 = 1e-8;

/// Which measure to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    Phi,
    Psi { lambda: f64 },
}

impl Measure {
    pub fn evaluate(&self, d: &DiscordanceTerms) -> Result<f64> {
        match *self {
            Measure::Phi => phi(d),
            Measure::Psi { lambda } => psi(d, lambda),
        }
    }

    /// Logical range of the measure.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Measure::Phi => (-1.0, 1.0),
            Measure::Psi { .. } => (0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Measure::Phi => Ok(()),
            Measure::Psi { lambda } => check_lambda(lambda),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measure::Phi => write!(f, "phi"),
            Measure::Psi { lambda } => write!(f, "psi({lambda})"),
        }
    }
}

/// Per-index `W1 = ωX(1-ωY)`, `W2 = ωY(1-ωX)` and their total mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscordanceTerms {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub total_mass: f64,
}

impl DiscordanceTerms {
    pub fn len(&self) -> usize {
        self.w1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w1.is_empty()
    }

    /// `(W1*, W2*)`, the terms divided by the total mass.
    pub fn normalized(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.checked_mass()?;
        Ok((
            self.w1.iter().map(|w| w / t).collect(),
            self.w2.iter().map(|w| w / t).collect(),
        ))
    }

    fn checked_mass(&self) -> Result<f64> {
        if self.total_mass > 0.0 {
            Ok(self.total_mass)
        } else {
            Err(Error::DegenerateMass)
        }
    }
}

pub fn discordance(h: &HazardPair) -> DiscordanceTerms {
    let (w1, w2): (Vec<f64>, Vec<f64>) = h
        .omega_x
        .iter()
        .zip(&h.omega_y)
        .map(|(&x, &y)| (x * (1.0 - y), y * (1.0 - x)))
        .unzip();
    let total_mass = w1.iter().zip(&w2).map(|(a, b)| a + b).sum();
    DiscordanceTerms { w1, w2, total_mass }
}

/// Per-index angle between `(W2, W1)` and the W2 axis, with the weights
/// `W1* + W2*` used by [`phi`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDecomposition {
    /// Radians in `[0, π/2]`; 0 where the index is undefined.
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
    /// False where `W1 + W2 = 0`.
    pub defined: Vec<bool>,
}

/// `θ = arccos(W2 / √(W1² + W2²))`, evaluated as `atan2(W1, W2)`.
///
/// θ = 0 when the column hazard alone drives the discordance, π/2 when the
/// row hazard does.
fn angle(w1: f64, w2: f64) -> f64 {
    w1.atan2(w2)
}

pub fn angle_decomposition(d: &DiscordanceTerms) -> Result<AngleDecomposition> {
    let t = d.checked_mass()?;
    let mut out = AngleDecomposition {
        theta: Vec::with_capacity(d.len()),
        weight: Vec::with_capacity(d.len()),
        defined: Vec::with_capacity(d.len()),
    };
    for (&a, &b) in d.w1.iter().zip(&d.w2) {
        let defined = a + b > 0.0;
        out.theta.push(if defined { angle(a, b) } else { 0.0 });
        out.weight.push((a + b) / t);
        out.defined.push(defined);
    }
    Ok(out)
}

/// Φ = (4/π) Σ (W1* + W2*)(θ − π/4).
///
/// Indices with `W1 = W2 = 0` carry zero weight and are skipped.
pub fn phi(d: &DiscordanceTerms) -> Result<f64> {
    let t = d.checked_mass()?;
    let s: f64 =
        d.w1.iter()
            .zip(&d.w2)
            .filter(|(a, b)| **a + **b > 0.0)
            .map(|(&a, &b)| (a + b) * (angle(a, b) - FRAC_PI_4))
            .sum();
    Ok((s / t / FRAC_PI_4).clamp(-1.0, 1.0))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > -1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda must exceed -1, got {lambda}"
        )))
    }
}

/// One index's contribution `x((x/q)^λ - 1)`, with `0·(0/q)^λ = 0`.
fn divergence_term(x: f64, q: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * ((x / q).powf(lambda) - 1.0)
    }
}

fn kl_term(x: f64, q: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / q).ln()
    }
}

/// Ψ^(λ) = I^(λ) · λ(λ+1) / (2^λ − 1), with the λ → 0 limit
/// `(1/ln 2) Σ [W1* ln(W1*/Q*) + W2* ln(W2*/Q*)]`.
pub fn psi(d: &DiscordanceTerms, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (x, y) = d.normalized()?;
    let terms = x.iter().zip(&y).filter(|(a, b)| **a + **b > 0.0);
    let v = if lambda.abs() < LAMBDA_ZERO_THRESHOLD {
        terms
            .map(|(&a, &b)| {
                let q = 0.5 * (a + b);
                kl_term(a, q) + kl_term(b, q)
            })
            .sum::<f64>()
            / LN_2
    } else {
        terms
            .map(|(&a, &b)| {
                let q = 0.5 * (a + b);
                divergence_term(a, q, lambda) + divergence_term(b, q, lambda)
            })
            .sum::<f64>()
            / (2f64.powf(lambda) - 1.0)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Evaluates a measure on a probability table.
pub fn measure_of_table(p: &ProbTable, m: Measure) -> Result<f64> {
    m.evaluate(&discordance(&table_hazards(p)))
}

/// Partial derivatives of a measure with respect to each `W1_i` and `W2_i`.
///
/// Both measures are `c · Σ k(W1_i/T, W2_i/T)` with `k` homogeneous of
/// degree one, so `∂/∂W1_j = (c/T)(k_x(j) − Σ k)`; likewise for `W2_j`.
/// Callers must have checked differentiability first.
pub(crate) fn w_partials(d: &DiscordanceTerms, m: Measure) -> (Vec<f64>, Vec<f64>) {
    let t = d.total_mass;
    let x: Vec<f64> = d.w1.iter().map(|w| w / t).collect();
    let y: Vec<f64> = d.w2.iter().map(|w| w / t).collect();
    let n = x.len();
    let mut kx = vec![0.0; n];
    let mut ky = vec![0.0; n];
    let mut ksum = 0.0;
    let c = match m {
        Measure::Phi => {
            for i in 0..n {
                let (a, b) = (x[i], y[i]);
                let r2 = a * a + b * b;
                let g = angle(a, b) - FRAC_PI_4;
                // d/da atan2(a, b) = b / r², d/db = -a / r²
                kx[i] = g + (a + b) * b / r2;
                ky[i] = g - (a + b) * a / r2;
                ksum += (a + b) * g;
            }
            1.0 / FRAC_PI_4
        }
        Measure::Psi { lambda } if lambda.abs() < LAMBDA_ZERO_THRESHOLD => {
            for i in 0..n {
                let (a, b) = (x[i], y[i]);
                let q = 0.5 * (a + b);
                kx[i] = (a / q).ln();
                ky[i] = (b / q).ln();
                ksum += kl_term(a, q) + kl_term(b, q);
            }
            1.0 / LN_2
        }
        Measure::Psi { lambda } => {
            for i in 0..n {
                let (a, b) = (x[i], y[i]);
                let q = 0.5 * (a + b);
                // k = (a^(λ+1) + b^(λ+1)) q^(-λ)
                let k = (a.powf(lambda + 1.0) + b.powf(lambda + 1.0)) * q.powf(-lambda);
                let half = 0.5 * lambda * k / q;
                kx[i] = (lambda + 1.0) * (a / q).powf(lambda) - half;
                ky[i] = (lambda + 1.0) * (b / q).powf(lambda) - half;
                ksum += k;
            }
            1.0 / (2f64.powf(lambda) - 1.0)
        }
    };
    let s = c / t;
    (
        kx.iter().map(|k| s * (k - ksum)).collect(),
        ky.iter().map(|k| s * (k - ksum)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::fixtures::{active, placebo};
    use crate::table::{from_counts, hazards, MarginalPair};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn left() -> ProbTable {
        ProbTable::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.4, 0.6, 0.0],
        ])
        .unwrap()
    }

    fn right() -> ProbTable {
        ProbTable::from_rows(&[
            vec![0.0, 0.0, 0.4],
            vec![0.0, 0.0, 0.6],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    fn terms(p: &ProbTable) -> DiscordanceTerms {
        discordance(&table_hazards(p))
    }

    /// Ψ straight from the published formula, λ(λ+1) factors included.
    fn psi_brute(w1: &[f64], w2: &[f64], lambda: f64) -> f64 {
        let h: f64 = w1.iter().sum::<f64>() + w2.iter().sum::<f64>();
        let mut i_w = 0.0;
        for k in 0..w1.len() {
            let a = w1[k] / h;
            let b = w2[k] / h;
            let q = (a + b) / 2.0;
            let part = |v: f64| {
                if v == 0.0 {
                    0.0
                } else {
                    v * ((v / q).powf(lambda) - 1.0)
                }
            };
            i_w += part(a) + part(b);
        }
        i_w /= lambda * (lambda + 1.0);
        lambda * (lambda + 1.0) / (2f64.powf(lambda) - 1.0) * i_w
    }

    #[test]
    fn active_discordance() {
        let d = terms(&from_counts(&active()));
        let w1 = [0.06694, 0.07098, 0.16861];
        let w2 = [0.30224, 0.50435, 0.34211];
        for i in 0..3 {
            assert_abs_diff_eq!(d.w1[i], w1[i], epsilon = 5e-5);
            assert_abs_diff_eq!(d.w2[i], w2[i], epsilon = 5e-5);
        }
        assert_abs_diff_eq!(d.total_mass, 1.4552, epsilon = 5e-5);
    }

    #[test]
    fn equal_hazards_give_equal_terms() {
        let m = MarginalPair::from_sums(vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]);
        let d = discordance(&hazards(&m));
        assert_eq!(d.w1, d.w2);
        assert_eq!(phi(&d).unwrap(), 0.0);
        for lambda in [-0.5, 0.0, 1.0, 2.0] {
            assert_eq!(psi(&d, lambda).unwrap(), 0.0);
        }
        let a = angle_decomposition(&d).unwrap();
        assert!(a.theta.iter().all(|&t| t == FRAC_PI_4));
    }

    #[test]
    fn extreme_tables() {
        let d = terms(&left());
        assert_eq!(d.w1, vec![0.0, 0.0]);
        assert_abs_diff_eq!(d.w2[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(d.w2[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi(&d).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi(&d, 1.0).unwrap(), 1.0, epsilon = 1e-12);

        let d = terms(&right());
        assert_abs_diff_eq!(phi(&d).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi(&d, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extreme_angles() {
        let a = angle_decomposition(&terms(&left())).unwrap();
        assert_eq!(a.theta, vec![0.0, 0.0]);
        assert_abs_diff_eq!(a.weight[0], 0.4 / 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(a.weight[1], 1.0 / 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(a.weight[0], 0.2857, epsilon = 1e-4);
        let a = angle_decomposition(&terms(&right())).unwrap();
        assert_eq!(a.theta, vec![FRAC_PI_2, FRAC_PI_2]);
    }

    #[test]
    fn active_angles() {
        let d = terms(&from_counts(&active()));
        let a = angle_decomposition(&d).unwrap();
        for (i, want) in [0.2178, 0.1397, 0.4578].into_iter().enumerate() {
            assert_abs_diff_eq!(a.theta[i], want, epsilon = 5e-4);
            let r = d.w1[i].hypot(d.w2[i]);
            assert_abs_diff_eq!(a.theta[i], (d.w2[i] / r).acos(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.weight.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn real_data_point_estimates() {
        let a = phi(&terms(&from_counts(&active()))).unwrap();
        assert_abs_diff_eq!(a, -0.655, epsilon = 5e-4);
        let b = phi(&terms(&from_counts(&placebo()))).unwrap();
        assert_abs_diff_eq!(b, -0.453, epsilon = 1e-3);
    }

    #[test]
    fn phi_matches_arccos_definition() {
        let d = terms(&from_counts(&placebo()));
        let direct: f64 = (0..d.len())
            .map(|i| {
                let (a, b) = (d.w1[i], d.w2[i]);
                let theta = (b / (a * a + b * b).sqrt()).acos();
                (a + b) / d.total_mass * (theta - PI / 4.0)
            })
            .sum::<f64>()
            * 4.0
            / PI;
        assert_abs_diff_eq!(phi(&d).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn psi_against_brute_force() {
        let d = terms(&from_counts(&active()));
        for lambda in [-0.5, 0.5, 1.0, 2.0, 3.0] {
            let v = psi(&d, lambda).unwrap();
            assert!(v > 0.0 && v < 1.0);
            assert_abs_diff_eq!(v, psi_brute(&d.w1, &d.w2, lambda), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            psi(&terms(&left()), 1.0).unwrap(),
            psi_brute(&[0.0, 0.0], &[0.4, 1.0], 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn psi_continuous_at_zero() {
        let d = terms(&from_counts(&placebo()));
        let at0 = psi(&d, 0.0).unwrap();
        // first-order convergence: the gap shrinks tenfold per decade of λ
        for sign in [1.0, -1.0] {
            let gap = |l: f64| psi(&d, sign * l).unwrap() - at0;
            let ratio = gap(1e-4) / gap(1e-5);
            assert!((9.5..10.5).contains(&ratio), "ratio {ratio}");
            assert!(gap(1e-4).abs() < 1e-5);
            assert!(gap(1e-7).abs() < 1e-8);
        }
        // symmetric average cancels the linear term
        let mid = 0.5 * (psi(&d, 1e-4).unwrap() + psi(&d, -1e-4).unwrap());
        assert_abs_diff_eq!(mid, at0, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_and_domain_errors() {
        let d = DiscordanceTerms {
            w1: vec![0.0, 0.0],
            w2: vec![0.0, 0.0],
            total_mass: 0.0,
        };
        assert_eq!(phi(&d), Err(Error::DegenerateMass));
        assert_eq!(psi(&d, 1.0), Err(Error::DegenerateMass));
        assert_eq!(angle_decomposition(&d), Err(Error::DegenerateMass));
        let d = terms(&from_counts(&active()));
        assert!(matches!(psi(&d, -1.0), Err(Error::Domain(_))));
        assert!(matches!(psi(&d, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_terms_are_skipped() {
        let d = DiscordanceTerms {
            w1: vec![0.0, 0.3],
            w2: vec![0.0, 0.1],
            total_mass: 0.4,
        };
        let a = angle_decomposition(&d).unwrap();
        assert_eq!(a.defined, vec![false, true]);
        let want = (0.3f64.atan2(0.1) - FRAC_PI_4) / FRAC_PI_4;
        assert_abs_diff_eq!(phi(&d).unwrap(), want, epsilon = 1e-15);
    }

    #[test]
    fn w_partials_match_differences() {
        let d = terms(&from_counts(&active()));
        for m in [
            Measure::Phi,
            Measure::Psi { lambda: 0.0 },
            Measure::Psi { lambda: 1.0 },
            Measure::Psi { lambda: -0.5 },
        ] {
            let (g1, g2) = w_partials(&d, m);
            let h = 1e-6;
            for i in 0..d.len() {
                for which in 0..2 {
                    let bump = |s: f64| {
                        let mut e = d.clone();
                        let w = if which == 0 { &mut e.w1 } else { &mut e.w2 };
                        w[i] += s;
                        e.total_mass += s;
                        m.evaluate(&e).unwrap()
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let an = if which == 0 { g1[i] } else { g2[i] };
                    assert_abs_diff_eq!(an, fd, epsilon = 1e-7);
                }
            }
        }
    }
}
