//! Command-line front end: `estimate`, `compare`, `curve` and `simulate`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 statistical degeneracy
//! (the measure or its interval is undefined for the data).

pub mod report;
pub mod table_file;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dtmh_core::{
    bootstrap_ci, compare_groups, coverage_study, curve_grid, point_estimate, wald_ci,
    CoverageResult, CoverageStudySpec, EstimateReport, McorScenario, Measure,
};

use report::{GroupEstimate, InputDigest, RunReport, Status};
use table_file::TableFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 2000;

#[derive(Debug, Parser)]
#[command(
    name = "dtmh",
    version,
    about = "Directional marginal-inhomogeneity measure for square ordinal tables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate phi or psi with a confidence interval for one table.
    Estimate(EstimateArgs),
    /// Compare two independent groups.
    Compare(CompareArgs),
    /// Write the phi-versus-delta link curve as CSV.
    Curve(CurveArgs),
    /// Monte Carlo coverage study of the Wald interval for phi.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// `phi`, `psi` or `psi:<lambda>`.
    #[arg(long, default_value = "phi")]
    pub measure: String,
    /// Lambda for psi when not given inline.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

impl MeasureArgs {
    fn resolve(&self) -> Result<Measure, Failure> {
        let (kind, inline) = match self.measure.split_once(':') {
            Some((k, v)) => (k, Some(v)),
            None => (self.measure.as_str(), None),
        };
        match kind {
            "phi" => {
                if inline.is_some() || self.lambda.is_some() {
                    return Err(Failure::input("phi takes no lambda"));
                }
                Ok(Measure::Phi)
            }
            "psi" => {
                let lambda = match (inline, self.lambda) {
                    (Some(v), None) => parse_num::<f64>(v, "lambda")?,
                    (None, Some(l)) => l,
                    (None, None) => 1.0,
                    (Some(_), Some(_)) => {
                        return Err(Failure::input("lambda given both inline and via --lambda"))
                    }
                };
                let m = Measure::Psi { lambda };
                m.validate().map_err(|e| Failure::input(e.to_string()))?;
                Ok(m)
            }
            other => Err(Failure::input(format!(
                "unknown measure '{other}' (expected phi or psi[:lambda])"
            ))),
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV count table.
    pub table: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// `delta`, `bootstrap` or `bootstrap:<replicates>`.
    #[arg(long, default_value = "delta")]
    pub ci: String,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub table_a: PathBuf,
    pub table_b: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub step: f64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key=value` file with any of: delta, base_hazards, n, replicates,
    /// level, seed. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One value or a comma-separated grid.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Comma-separated row hazards, each in (0, 1).
    #[arg(long)]
    pub base_hazards: Option<String>,
    /// Sample size per table; one value or a comma-separated grid.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// One CSV row per scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed run: exit code plus message for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn from_core(e: dtmh_core::Error) -> Self {
        Self {
            code: if e.is_statistical_degeneracy() {
                EXIT_DEGENERATE
            } else {
                EXIT_INPUT
            },
            message: e.to_string(),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::input(format!("invalid {what}: '{s}'")))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',').map(|v| parse_num(v, what)).collect()
}

/// Numbers in CSV output: shortest round-trip form, `-0` written as `0.0`.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else {
        format!("{v:?}")
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    if path == Path::new("-") {
        std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::input(format!("cannot write to standard output: {e}")))
    } else {
        fs::write(path, contents)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
    }
}

fn check_level(level: f64) -> Result<(), Failure> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Failure::input(format!(
            "--level must lie in (0, 1), got {level}"
        )))
    }
}

fn read_table(path: &Path) -> Result<(TableFile, InputDigest), Failure> {
    let (tf, bytes) = TableFile::read(path).map_err(|e| Failure::input(e.to_string()))?;
    let digest = InputDigest::new(&tf.path, &bytes, Some(tf.table.r()), Some(tf.table.n()));
    Ok((tf, digest))
}

enum CiChoice {
    Delta,
    Bootstrap(usize),
}

fn resolve_ci(ci: &str, replicates: Option<usize>) -> Result<CiChoice, Failure> {
    match ci.split_once(':') {
        None if ci == "delta" => {
            if replicates.is_some() {
                return Err(Failure::input(
                    "--replicates applies only to bootstrap intervals",
                ));
            }
            Ok(CiChoice::Delta)
        }
        None if ci == "bootstrap" => Ok(CiChoice::Bootstrap(
            replicates.unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES),
        )),
        Some(("bootstrap", b)) => {
            if replicates.is_some() {
                return Err(Failure::input(
                    "replicates given both inline and via --replicates",
                ));
            }
            Ok(CiChoice::Bootstrap(parse_num(b, "replicate count")?))
        }
        _ => Err(Failure::input(format!(
            "unknown interval '{ci}' (expected delta or bootstrap[:B])"
        ))),
    }
}

fn is_boundary(m: Measure, v: f64) -> bool {
    let (lo, hi) = m.range();
    (v - lo).abs() < 1e-12 || (v - hi).abs() < 1e-12
}

/// Outcome of a command: the report plus an exit code and the text meant
/// for standard output.
pub struct Completed {
    pub report: RunReport,
    pub code: i32,
    pub summary: String,
    pub json_path: Option<PathBuf>,
}

fn summarize_report(label: &str, rep: &EstimateReport) -> String {
    let ci = &rep.ci;
    let method = match ci.method {
        dtmh_core::CiMethod::Delta => "delta method".to_string(),
        dtmh_core::CiMethod::BootstrapPercentile => {
            let b = rep.bootstrap.as_ref().map_or(0, |b| b.replicates);
            format!("bootstrap percentile, {b} replicates")
        }
    };
    let mut s = format!(
        "{label}: {} = {:.3}, {:.0}% CI ({:.3}, {:.3}) [{method}], se {:.4}, n = {}\n",
        rep.measure,
        ci.estimate,
        ci.level * 100.0,
        ci.lower,
        ci.upper,
        ci.se,
        rep.n
    );
    if rep.out_of_range {
        s.push_str(
            "  note: interval extends outside the measure's range (endpoints not clamped)\n",
        );
    }
    for f in &rep.degenerate_flags {
        s.push_str(&format!("  note: {f}\n"));
    }
    s
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<Completed, Failure> {
    check_level(args.level)?;
    let measure = args.measure.resolve()?;
    let ci = resolve_ci(&args.ci, args.replicates)?;
    let (tf, digest) = read_table(&args.table)?;
    let label = tf.path.clone();

    let (ci_name, replicates) = match ci {
        CiChoice::Delta => ("delta".to_string(), None),
        CiChoice::Bootstrap(b) => ("bootstrap".to_string(), Some(b)),
    };
    let mut report = RunReport::new(
        "estimate",
        json!({
            "table": tf.path,
            "level": args.level,
            "measure": measure,
            "ci": ci_name,
            "replicates": replicates,
            "seed": args.seed,
        }),
    );
    report.inputs.push(digest);
    report.seeds.push(args.seed);

    let mut summary = format!(
        "table {} ({}x{}, n = {})\n",
        tf.path,
        tf.table.r(),
        tf.table.r(),
        tf.table.n()
    );
    let est = match point_estimate(&tf.table, measure) {
        Ok(v) => v,
        Err(e) => {
            let f = Failure::from_core(e);
            if f.code != EXIT_DEGENERATE {
                return Err(f);
            }
            report.status = Status::Degenerate;
            report.message = Some(f.message.clone());
            report.estimates.push(GroupEstimate {
                label,
                point_estimate: None,
                boundary: false,
                report: None,
            });
            summary.push_str(&format!(
                "{measure} is undefined for this table: {}\n",
                f.message
            ));
            return Ok(Completed {
                report,
                code: EXIT_DEGENERATE,
                summary,
                json_path: args.json.clone(),
            });
        }
    };
    let boundary = is_boundary(measure, est);

    let result = match ci {
        CiChoice::Delta => wald_ci(&tf.table, args.level, measure),
        CiChoice::Bootstrap(b) => bootstrap_ci(&tf.table, args.level, b, args.seed, measure),
    };
    let code = match result {
        Ok(rep) => {
            summary.push_str(&summarize_report("estimate", &rep));
            report.estimates.push(GroupEstimate {
                label,
                point_estimate: Some(est),
                boundary,
                report: Some(rep),
            });
            EXIT_OK
        }
        Err(e) => {
            let f = Failure::from_core(e);
            if f.code != EXIT_DEGENERATE {
                return Err(f);
            }
            summary.push_str(&format!("estimate: {measure} = {est:.3}"));
            if boundary {
                summary.push_str(" (boundary of the measure's range)");
            }
            summary.push('\n');
            summary.push_str(&format!("interval refused: {}\n", f.message));
            report.status = Status::Degenerate;
            report.message = Some(f.message);
            report.estimates.push(GroupEstimate {
                label,
                point_estimate: Some(est),
                boundary,
                report: None,
            });
            EXIT_DEGENERATE
        }
    };
    if measure == Measure::Phi {
        summary.push_str(&format!("orientation: {}\n", dtmh_core::ORIENTATION_NOTE));
    }
    Ok(Completed {
        report,
        code,
        summary,
        json_path: args.json.clone(),
    })
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Completed, Failure> {
    check_level(args.level)?;
    let measure = args.measure.resolve()?;
    let (ta, da) = read_table(&args.table_a)?;
    let (tb, db) = read_table(&args.table_b)?;
    let mut report = RunReport::new(
        "compare",
        json!({
            "table_a": ta.path,
            "table_b": tb.path,
            "level": args.level,
            "measure": measure,
            "samples": "independent",
        }),
    );
    report.inputs.extend([da, db]);

    let mut summary = String::from("groups treated as independent samples\n");
    let mut reps = Vec::new();
    for (tf, name) in [(&ta, "A"), (&tb, "B")] {
        let est = point_estimate(&tf.table, measure).ok();
        match wald_ci(&tf.table, args.level, measure) {
            Ok(rep) => {
                summary.push_str(&summarize_report(
                    &format!("group {name} ({})", tf.path),
                    &rep,
                ));
                report.estimates.push(GroupEstimate {
                    label: tf.path.clone(),
                    point_estimate: est,
                    boundary: est.is_some_and(|v| is_boundary(measure, v)),
                    report: Some(rep.clone()),
                });
                reps.push(rep);
            }
            Err(e) => {
                let f = Failure::from_core(e);
                if f.code != EXIT_DEGENERATE {
                    return Err(f);
                }
                let msg = format!("group {name} ({}): {}", tf.path, f.message);
                summary.push_str(&format!("{msg}\n"));
                report.status = Status::Degenerate;
                report.message = Some(msg);
                report.estimates.push(GroupEstimate {
                    label: tf.path.clone(),
                    point_estimate: est,
                    boundary: est.is_some_and(|v| is_boundary(measure, v)),
                    report: None,
                });
            }
        }
    }
    if reps.len() < 2 {
        return Ok(Completed {
            report,
            code: EXIT_DEGENERATE,
            summary,
            json_path: args.json.clone(),
        });
    }
    let cmp = compare_groups(&reps[0], &reps[1], args.level).map_err(Failure::from_core)?;
    let d = &cmp.difference;
    let overlap = reps[0].ci.lower <= reps[1].ci.upper && reps[1].ci.lower <= reps[0].ci.upper;
    summary.push_str(&format!(
        "group intervals overlap: {}\n",
        if overlap { "yes" } else { "no" }
    ));
    summary.push_str(&format!(
        "difference A - B = {:.3}, {:.0}% CI ({:.3}, {:.3}), se {:.4}\n",
        d.estimate,
        d.level * 100.0,
        d.lower,
        d.upper,
        d.se
    ));
    let alpha = 1.0 - args.level;
    summary.push_str(&format!(
        "{} at {}\n",
        if cmp.significant {
            "significant"
        } else {
            "not significant"
        },
        fmt_alpha(alpha)
    ));
    if cmp.zero_width {
        summary.push_str("  note: both standard errors are zero; interval has zero width\n");
    }
    report.comparison = Some(cmp);
    Ok(Completed {
        report,
        code: EXIT_OK,
        summary,
        json_path: args.json.clone(),
    })
}

fn fmt_alpha(alpha: f64) -> String {
    let s = format!("{alpha:.4}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

pub fn curve_csv(delta_min: f64, delta_max: f64, step: f64) -> Result<String, Failure> {
    let grid = curve_grid(delta_min, delta_max, step).map_err(Failure::from_core)?;
    let mut s = String::from("delta,phi\n");
    for (d, f) in grid {
        s.push_str(&format!("{},{}\n", fmt_num(d), fmt_num(f)));
    }
    Ok(s)
}

pub fn cmd_curve(args: &CurveArgs) -> Result<(), Failure> {
    let csv = curve_csv(args.delta_min, args.delta_max, args.step)
        .map_err(|f| Failure::input(f.message))?;
    match &args.out {
        Some(p) => write_output(p, &csv),
        None => write_output(Path::new("-"), &csv),
    }
}

/// Simulation settings after merging the config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub deltas: Vec<f64>,
    pub base_hazards: Vec<f64>,
    pub sizes: Vec<u64>,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        Self {
            deltas: vec![0.0],
            base_hazards: vec![0.3, 0.4, 0.5],
            sizes: vec![500],
            replicates: 2000,
            level: 0.95,
            seed: DEFAULT_SEED,
        }
    }
}

impl SimulationPlan {
    fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        match key {
            "delta" => self.deltas = parse_list(value, "delta")?,
            "base_hazards" => self.base_hazards = parse_list(value, "base hazard")?,
            "n" => self.sizes = parse_list(value, "sample size")?,
            "replicates" => self.replicates = parse_num(value, "replicates")?,
            "level" => self.level = parse_num(value, "level")?,
            "seed" => self.seed = parse_num(value, "seed")?,
            other => return Err(Failure::input(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<(), Failure> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Failure::input(format!("config line {}: expected key=value", i + 1))
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|f| Failure::input(format!("config line {}: {}", i + 1, f.message)))?;
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<CoverageStudySpec>, Failure> {
        let mut out = Vec::new();
        for &delta in &self.deltas {
            for &n in &self.sizes {
                let scenario = McorScenario::new(self.base_hazards.clone(), delta)
                    .map_err(|e| Failure::input(e.to_string()))?;
                let spec = CoverageStudySpec {
                    scenario,
                    n,
                    replicates: self.replicates,
                    level: self.level,
                    seed: self.seed,
                };
                spec.validate().map_err(|e| Failure::input(e.to_string()))?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}

pub fn coverage_csv(rows: &[CoverageResult]) -> String {
    let mut s = String::from(
        "delta,n,replicates,level,seed,true_value,coverage,mcse,mean_width,degenerate_count,joint\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_num(r.delta),
            r.n,
            r.replicates,
            fmt_num(r.level),
            r.seed,
            fmt_num(r.true_value),
            fmt_num(r.coverage),
            fmt_num(r.mcse),
            fmt_num(r.mean_width),
            r.degenerate_count,
            r.joint
        ));
    }
    s
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Completed, Failure> {
    let mut plan = SimulationPlan::default();
    let mut inputs = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        plan.apply_config(&text)?;
        inputs.push(InputDigest::new(
            &path.display().to_string(),
            text.as_bytes(),
            None,
            None,
        ));
    }
    if let Some(v) = &args.delta {
        plan.set("delta", v)?;
    }
    if let Some(v) = &args.base_hazards {
        plan.set("base_hazards", v)?;
    }
    if let Some(v) = &args.n {
        plan.set("n", v)?;
    }
    if let Some(v) = args.replicates {
        plan.replicates = v;
    }
    if let Some(v) = args.level {
        plan.level = v;
    }
    if let Some(v) = args.seed {
        plan.seed = v;
    }
    let specs = plan.specs()?;

    let mut report = RunReport::new(
        "simulate",
        json!({
            "delta": plan.deltas,
            "base_hazards": plan.base_hazards,
            "n": plan.sizes,
            "replicates": plan.replicates,
            "level": plan.level,
            "seed": plan.seed,
            "joint": "independence",
        }),
    );
    report.inputs = inputs;
    report.seeds.push(plan.seed);

    let mut summary = String::new();
    for spec in &specs {
        let res = coverage_study(spec).map_err(Failure::from_core)?;
        summary.push_str(&format!(
            "delta {:>6}  n {:>6}  true phi {:+.4}  coverage {:.4} (mcse {:.4})  mean width {:.4}  degenerate {}\n",
            fmt_num(res.delta),
            res.n,
            res.true_value + 0.0,
            res.coverage,
            res.mcse,
            res.mean_width,
            res.degenerate_count
        ));
        report.coverage.push(res);
    }
    if let Some(out) = &args.out {
        write_output(out, &coverage_csv(&report.coverage))?;
    }
    Ok(Completed {
        report,
        code: EXIT_OK,
        summary,
        json_path: args.json.clone(),
    })
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let done = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Curve(a) => {
            return match cmd_curve(a) {
                Ok(()) => EXIT_OK,
                Err(f) => {
                    eprintln!("error: {}", f.message);
                    f.code
                }
            }
        }
    };
    match done {
        Ok(c) => {
            let json_to_stdout = c.json_path.as_deref() == Some(Path::new("-"));
            if !json_to_stdout {
                print!("{}", c.summary);
            }
            if c.code == EXIT_DEGENERATE {
                if let Some(m) = &c.report.message {
                    eprintln!("error: {m}");
                }
            }
            if let Some(p) = &c.json_path {
                if let Err(f) = write_output(p, &c.report.to_json()) {
                    eprintln!("error: {}", f.message);
                    return f.code;
                }
            }
            c.code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
