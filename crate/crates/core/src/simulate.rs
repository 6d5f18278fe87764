//! Multinomial sampling and Monte Carlo coverage studies of the Wald
//! interval for Φ under MCOR-structured populations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::wald_ci;
use crate::mcor::{phi_of_delta, scenario_table, McorScenario};
use crate::measures::Measure;
use crate::table::{CountTable, ProbTable};

pub const MIN_REPLICATES: usize = 100;
pub const MIN_SAMPLE_SIZE: u64 = 10;

/// Generator for replicate `index` of a run seeded with `seed`. Each
/// replicate owns a ChaCha stream, so results do not depend on scheduling.
pub(crate) fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One multinomial draw of size `n` over the cells of `p`, by sequential
/// binomial conditioning.
pub(crate) fn sample_cells<R: rand::Rng + ?Sized>(cells: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; cells.len()];
    let mut remaining = n;
    let mut mass: f64 = cells.iter().sum();
    let last = cells.len() - 1;
    for (k, &pk) in cells.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            out[k] = remaining;
            break;
        }
        if pk <= 0.0 {
            continue;
        }
        let prob = if mass > 0.0 {
            (pk / mass).min(1.0)
        } else {
            1.0
        };
        let x = Binomial::new(remaining, prob)
            .expect("binomial probability lies in [0, 1]")
            .sample(rng);
        out[k] = x;
        remaining -= x;
        mass -= pk;
    }
    out
}

/// Draws a table of total `n` from `p`. Deterministic for a given seed.
pub fn sample_table(p: &ProbTable, n: u64, seed: u64) -> Result<CountTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CountTable::from_flat(p.r(), sample_cells(p.cells(), n, &mut rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStudySpec {
    pub scenario: McorScenario,
    pub n: u64,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl CoverageStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidSpec(format!(
                "replicates must be at least {MIN_REPLICATES}, got {}",
                self.replicates
            )));
        }
        if self.n < MIN_SAMPLE_SIZE {
            return Err(Error::InvalidSpec(format!(
                "sample size must be at least {MIN_SAMPLE_SIZE}, got {}",
                self.n
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub delta: f64,
    pub n: u64,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub true_value: f64,
    /// Share of non-degenerate replicates whose interval holds `true_value`.
    pub coverage: f64,
    /// Monte Carlo standard error of `coverage`.
    pub mcse: f64,
    pub mean_width: f64,
    /// Replicates where the interval could not be formed; excluded from
    /// `coverage` and `mean_width`.
    pub degenerate_count: usize,
    /// Coupling used to build the joint table from the two marginals.
    pub joint: String,
}

enum Outcome {
    Interval { covered: bool, width: f64 },
    Degenerate,
}

pub fn coverage_study(spec: &CoverageStudySpec) -> Result<CoverageResult> {
    spec.validate()?;
    let p = scenario_table(&spec.scenario)?;
    let truth = phi_of_delta(spec.scenario.delta());

    let outcomes: Vec<Outcome> = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(spec.seed, b);
            let cells = sample_cells(p.cells(), spec.n, &mut rng);
            let t = CountTable::from_flat(p.r(), cells).expect("sample has total n >= 1");
            match wald_ci(&t, spec.level, Measure::Phi) {
                Ok(rep) => Outcome::Interval {
                    covered: rep.ci.lower <= truth && truth <= rep.ci.upper,
                    width: rep.ci.upper - rep.ci.lower,
                },
                Err(_) => Outcome::Degenerate,
            }
        })
        .collect();

    let mut covered = 0usize;
    let mut used = 0usize;
    let mut width_sum = 0.0;
    for o in &outcomes {
        if let Outcome::Interval { covered: c, width } = o {
            used += 1;
            covered += usize::from(*c);
            width_sum += width;
        }
    }
    let (coverage, mcse, mean_width) = if used > 0 {
        let c = covered as f64 / used as f64;
        (
            c,
            (c * (1.0 - c) / used as f64).sqrt(),
            width_sum / used as f64,
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(CoverageResult {
        delta: spec.scenario.delta(),
        n: spec.n,
        replicates: spec.replicates,
        level: spec.level,
        seed: spec.seed,
        true_value: truth,
        coverage,
        mcse,
        mean_width,
        degenerate_count: spec.replicates - used,
        joint: "independence".into(),
    })
}
