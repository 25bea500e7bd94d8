//! Command-line driver: `gen-weights`, `fit`, `bootstrap`, `predict`, `select`.
//!
//! Every command that is given `--out DIR` writes one directory holding a
//! config echo (`config.json`) and its results in CSV and JSON. Nothing is
//! written unless the whole command succeeds.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    bc_percentile_interval, boundary_diagnostics, fd_histogram, percentile_interval, run_bootstrap, BootstrapOptions,
    BootstrapRun, PathologyReport, DEFAULT_B,
};
use crate::dist::{Family, ParamName};
use crate::error::{Error, Result};
use crate::fit::{fit_ml, profile_likelihood_interval, wald_interval, FitOptions, FitResult};
use crate::io;
use crate::likelihood::total_units;
use crate::prediction::{fleet_prediction, individual_prediction, PredictionCurve, DEFAULT_SIMS_PER_DRAW};
use crate::rng::StreamRng;
use crate::selection::{bootstrap_selection, build_candidates, DesignSpec, SelectOptions, SelectionBootstrap};
use crate::weights::{gen_weights, WeightScheme};

#[derive(Debug, Parser)]
#[command(name = "lifeboot", version, about = "Lifetime-data fitting with the fractional-random-weight bootstrap")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Draw one bootstrap weight vector.
    GenWeights(GenWeightsArgs),
    /// Maximum-likelihood fit with Wald (and optionally profile) intervals.
    Fit(FitArgs),
    /// Weighted bootstrap of an ML fit.
    Bootstrap(BootstrapArgs),
    /// Predict future failures from a saved bootstrap run.
    Predict(PredictArgs),
    /// Bootstrap selection proportions for response-surface terms.
    Select(SelectArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenWeightsArgs {
    #[arg(long, default_value = "dirichlet")]
    pub scheme: WeightScheme,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Replicate index (1-based) within the seed's stream family.
    #[arg(long, default_value_t = 1)]
    pub replicate: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub family: Family,
    /// Life-data CSV, or `rocket_motor` for the bundled data.
    #[arg(long)]
    pub data: PathBuf,
    /// One weight per data row.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Also compute profile-likelihood intervals.
    #[arg(long)]
    pub profile: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "dirichlet")]
    pub scheme: WeightScheme,
    #[arg(long = "B", default_value_t = DEFAULT_B)]
    pub b: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    pub levels: Vec<f64>,
    /// Weight every unit of a grouped record separately.
    #[arg(long)]
    pub unit_level: bool,
    /// Fail with exit code 4 when more than 5% of replicates are pathological.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    /// `run.json` from a bootstrap output directory, or the directory itself.
    #[arg(long)]
    pub run: PathBuf,
    /// CSV with columns unit_id, current_age.
    #[arg(long)]
    pub risk_set: PathBuf,
    /// Either one maximum horizon (split into --steps equal steps) or a
    /// comma-separated increasing grid.
    #[arg(long, value_delimiter = ',', required = true)]
    pub horizon: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_SIMS_PER_DRAW)]
    pub sims: usize,
    /// Defaults to the run's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Remaining-life interval for this unit (repeatable).
    #[arg(long = "unit")]
    pub units: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    /// CSV of factor settings, one column per factor.
    #[arg(long)]
    pub design: PathBuf,
    /// Single response column.
    #[arg(long)]
    pub response: PathBuf,
    /// CSV with columns name, low, high; observed ranges are used otherwise.
    #[arg(long)]
    pub ranges: Option<PathBuf>,
    #[arg(long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long)]
    pub seed: u64,
    /// Admit interactions and quadratics only after their main effects.
    #[arg(long)]
    pub heredity: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// f64 fields that may be infinite or NaN: JSON has no literal for these, so
/// they are written as the strings "inf", "-inf" and "nan".
mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One row of the fit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub param: ParamName,
    pub estimate: f64,
    pub se: Option<f64>,
    /// Wald bounds; absent when the information matrix is not positive definite.
    pub wald_lower: Option<f64>,
    #[serde(with = "opt_ext_f64")]
    pub wald_upper: Option<f64>,
    pub profile_lower: Option<f64>,
    pub profile_upper: Option<f64>,
    /// The profile never crossed the threshold on that side.
    pub profile_open: Option<bool>,
}

mod opt_ext_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "super::ext_f64")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(W).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_units: f64,
    pub level: f64,
    pub fit: FitResult,
    pub table: Vec<ParamRow>,
}

/// One row of the bootstrap interval table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub scheme: WeightScheme,
    pub level: f64,
    pub param: ParamName,
    pub estimate: f64,
    pub bc_lower: Option<f64>,
    pub bc_upper: Option<f64>,
    pub pct_lower: Option<f64>,
    pub pct_upper: Option<f64>,
    pub usable: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualRow {
    pub unit_id: String,
    pub current_age: f64,
    pub level: f64,
    /// Remaining-life bounds (time beyond the current age).
    pub lower: f64,
    pub upper: f64,
    pub draws_used: usize,
}

/// Files produced by one command, plus the human-readable summary.
struct Output {
    files: Vec<(String, Vec<u8>)>,
    text: String,
}

impl Output {
    fn new(cmd: &Command) -> Result<Self> {
        Ok(Self {
            files: vec![("config.json".into(), json(cmd)?)],
            text: String::new(),
        })
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Serde(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Serde(e.to_string()))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("level must lie in (0, 1), got {level}")))
    }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) => format!("{x:.prec$}"),
        None => "-".into(),
    }
}

fn gen_weights_cmd(a: &GenWeightsArgs, out: &mut Output) -> Result<()> {
    if a.replicate == 0 {
        return Err(Error::input("replicate index is 1-based"));
    }
    let mut rng = StreamRng::replicate(a.seed, a.replicate);
    let w = gen_weights(a.scheme, a.n, &mut rng, a.replicate)?;
    let mut s = String::new();
    for v in w.values() {
        writeln!(s, "{v}").unwrap();
    }
    out.add("weights.csv", format!("weight\n{s}").into_bytes());
    out.text = s;
    Ok(())
}

fn fit_cmd(a: &FitArgs, out: &mut Output) -> Result<()> {
    check_level(a.level)?;
    let data = io::parse_lifedata(&a.data)?;
    let weights = a.weights.as_deref().map(io::parse_column).transpose()?;
    let fit = fit_ml(a.family, &data, weights.as_deref(), &FitOptions::default())?;
    let mut table = vec![];
    for (k, &p) in a.family.param_names().iter().enumerate() {
        let wald = wald_interval(&fit, p, a.level).ok();
        let prof = if a.profile {
            Some(profile_likelihood_interval(a.family, &data, weights.as_deref(), &fit, p, a.level)?)
        } else {
            None
        };
        table.push(ParamRow {
            param: p,
            estimate: fit.params.values()[k],
            se: fit.se[k],
            wald_lower: wald.map(|w| w.0),
            wald_upper: wald.map(|w| w.1),
            profile_lower: prof.map(|p| p.lower),
            profile_upper: prof.map(|p| p.upper),
            profile_open: prof.map(|p| p.lower_open || p.upper_open),
        });
    }
    let n_units = match &weights {
        Some(w) => data.iter().zip(w).map(|(o, w)| w * o.count as f64).sum(),
        None => total_units(&data) as f64,
    };
    let report = FitReport {
        n_units,
        level: a.level,
        fit,
        table,
    };

    let t = &mut out.text;
    writeln!(
        t,
        "{} ML fit: units {}, loglik {:.4}, converged {}",
        a.family, report.n_units, report.fit.loglik, report.fit.converged
    )
    .unwrap();
    writeln!(t, "intervals at level {}", a.level).unwrap();
    write!(t, "{:<8}{:>12}{:>10}{:>12}{:>12}", "param", "estimate", "SE", "Wald lower", "Wald upper").unwrap();
    if a.profile {
        write!(t, "{:>12}{:>12}", "prof lower", "prof upper").unwrap();
    }
    t.push('\n');
    for r in &report.table {
        write!(
            t,
            "{:<8}{:>12.4}{:>10}{:>12}{:>12}",
            r.param.as_str(),
            r.estimate,
            fmt_opt(r.se, 4),
            fmt_opt(r.wald_lower, 4),
            fmt_opt(r.wald_upper, 4)
        )
        .unwrap();
        if a.profile {
            write!(t, "{:>12}{:>12}", fmt_opt(r.profile_lower, 4), fmt_opt(r.profile_upper, 4)).unwrap();
            if r.profile_open == Some(true) {
                t.push_str("  (open)");
            }
        }
        t.push('\n');
    }
    if !report.fit.boundary_hit.is_empty() {
        let names: Vec<&str> = report.fit.boundary_hit.iter().map(|p| p.as_str()).collect();
        writeln!(t, "warning: estimate on the parameter bound for {}", names.join(", ")).unwrap();
    }
    out.add("fit.json", json(&report)?);
    out.add("fit.csv", csv_rows(&report.table)?);
    Ok(())
}

/// BC and percentile intervals for every parameter and level.
pub fn interval_table(run: &BootstrapRun, levels: &[f64]) -> Result<Vec<IntervalRow>> {
    let mut rows = vec![];
    for &level in levels {
        check_level(level)?;
        for (k, &p) in run.param_names().iter().enumerate() {
            let draws = run.draws(p)?;
            let est = run.point_fit.params.values()[k];
            let bc = bc_percentile_interval(&draws, est, level);
            let pct = percentile_interval(&draws, level);
            let note = match (&bc, &pct) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            rows.push(IntervalRow {
                scheme: run.scheme,
                level,
                param: p,
                estimate: est,
                bc_lower: bc.as_ref().ok().map(|i| i.lower),
                bc_upper: bc.as_ref().ok().map(|i| i.upper),
                pct_lower: pct.as_ref().ok().map(|i| i.lower),
                pct_upper: pct.as_ref().ok().map(|i| i.upper),
                usable: run.usable_count(),
                note,
            });
        }
    }
    Ok(rows)
}

fn pathology_text(t: &mut String, r: &PathologyReport) {
    writeln!(
        t,
        "replicates {}: usable {}, at a bound {}, unconverged {}, degenerate weights {}, failed {}",
        r.b, r.usable, r.boundary_count, r.unconverged_count, r.degenerate_count, r.failed_count
    )
    .unwrap();
    for bc in &r.bounds {
        if bc.at_lower + bc.at_upper > 0 {
            writeln!(t, "  {} at lower bound {}, at upper bound {}", bc.param, bc.at_lower, bc.at_upper).unwrap();
        }
    }
}

fn bootstrap_cmd(a: &BootstrapArgs, out: &mut Output) -> Result<()> {
    if a.levels.is_empty() {
        return Err(Error::input("--levels is empty"));
    }
    for &l in &a.levels {
        check_level(l)?;
    }
    let data = io::parse_lifedata(&a.data)?;
    let opts = BootstrapOptions {
        unit_level: a.unit_level,
        strict: a.strict,
        ..Default::default()
    };
    let run = run_bootstrap(a.family, &data, a.scheme, a.b, a.seed, &opts)?;
    let report = boundary_diagnostics(&run);
    let rows = interval_table(&run, &a.levels)?;

    let t = &mut out.text;
    writeln!(t, "{} bootstrap, scheme {}, B = {}, seed {}", a.family, a.scheme, a.b, a.seed).unwrap();
    writeln!(
        t,
        "{:<12}{:>7}{:>8}{:>12}{:>12}{:>12}",
        "scheme", "level", "param", "estimate", "BC lower", "BC upper"
    )
    .unwrap();
    for r in &rows {
        write!(
            t,
            "{:<12}{:>7}{:>8}{:>12.4}{:>12}{:>12}",
            r.scheme.as_str(),
            r.level,
            r.param.as_str(),
            r.estimate,
            fmt_opt(r.bc_lower, 4),
            fmt_opt(r.bc_upper, 4)
        )
        .unwrap();
        if let Some(n) = &r.note {
            write!(t, "  ({n})").unwrap();
        }
        t.push('\n');
    }
    pathology_text(t, &report);

    out.add("run.json", json(&run)?);
    out.add("replicates.csv", run.to_csv().into_bytes());
    out.add("pathology.json", json(&report)?);
    out.add("intervals.json", json(&rows)?);
    out.add("intervals.csv", csv_rows(&rows)?);
    for &p in run.param_names() {
        if let Some(h) = fd_histogram(&run.draws(p)?) {
            let mut s = String::from("bin_lower,bin_upper,count\n");
            for (i, c) in h.counts.iter().enumerate() {
                writeln!(s, "{},{},{}", h.edges[i], h.edges[i + 1], c).unwrap();
            }
            out.add(&format!("histogram_{}.csv", p.as_str()), s.into_bytes());
        }
    }
    Ok(())
}

/// Reads a bootstrap run saved by the `bootstrap` command.
pub fn load_run(path: &Path) -> Result<BootstrapRun> {
    let file = if path.is_dir() { path.join("run.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", file.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", file.display())))
}

fn horizon_grid(h: &[f64], steps: usize) -> Result<Vec<f64>> {
    match h {
        [] => Err(Error::input("--horizon is empty")),
        [max] => {
            if !(*max > 0.0) || !max.is_finite() {
                return Err(Error::input(format!("horizon must be positive, got {max}")));
            }
            if steps == 0 {
                return Err(Error::input("--steps must be at least 1"));
            }
            Ok((0..=steps).map(|i| max * i as f64 / steps as f64).collect())
        }
        grid => Ok(grid.to_vec()),
    }
}

fn predict_cmd(a: &PredictArgs, out: &mut Output) -> Result<()> {
    let run = load_run(&a.run)?;
    let risk = io::parse_risk_set(&a.risk_set)?;
    let grid = horizon_grid(&a.horizon, a.steps)?;
    let seed = a.seed.unwrap_or(run.master_seed);
    let curve: PredictionCurve = fleet_prediction(&run, &risk, &grid, a.level, a.sims, seed)?;
    let mut individual = vec![];
    for id in &a.units {
        let unit = risk
            .iter()
            .find(|u| &u.unit_id == id)
            .ok_or_else(|| Error::input(format!("unit '{id}' is not in the risk set")))?;
        let r = individual_prediction(&run, unit, a.level)?;
        individual.push(IndividualRow {
            unit_id: id.clone(),
            current_age: unit.current_age,
            level: a.level,
            lower: r.lower,
            upper: r.upper,
            draws_used: r.draws_used,
        });
    }

    let t = &mut out.text;
    writeln!(
        t,
        "{} units at risk, {} usable draws, level {}",
        risk.len(),
        run.usable_count(),
        a.level
    )
    .unwrap();
    writeln!(t, "{:>10}{:>12}{:>10}{:>10}", "horizon", "expected", "lower", "upper").unwrap();
    for i in 0..grid.len() {
        writeln!(
            t,
            "{:>10}{:>12.3}{:>10}{:>10}",
            grid[i], curve.point[i], curve.lower[i], curve.upper[i]
        )
        .unwrap();
    }
    if !curve.containment_violations.is_empty() {
        writeln!(
            t,
            "warning: point prediction outside the bounds at {} horizon(s)",
            curve.containment_violations.len()
        )
        .unwrap();
    }
    for r in &individual {
        writeln!(
            t,
            "unit {} (age {}): remaining life {:.4} to {:.4}",
            r.unit_id, r.current_age, r.lower, r.upper
        )
        .unwrap();
    }
    out.add("prediction.json", json(&curve)?);
    out.add("prediction.csv", curve.to_csv().into_bytes());
    if !individual.is_empty() {
        out.add("individual.json", json(&individual)?);
        out.add("individual.csv", csv_rows(&individual)?);
    }
    Ok(())
}

fn select_cmd(a: &SelectArgs, out: &mut Output) -> Result<()> {
    let design = io::parse_table(&a.design)?;
    let y = io::parse_column(&a.response)?;
    if y.len() != design.rows.len() {
        return Err(Error::input(format!(
            "design has {} runs, response has {}",
            design.rows.len(),
            y.len()
        )));
    }
    let spec = match &a.ranges {
        Some(p) => {
            let factors = io::parse_factor_ranges(p)?;
            let names: Vec<&str> = factors.iter().map(|f| f.name.as_str()).collect();
            if names != design.names.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::input("factor ranges must list the design columns in order"));
            }
            DesignSpec::new(factors)?
        }
        None => DesignSpec::from_observed(&design.names, &design.rows)?,
    };
    let cands = build_candidates(&spec)?;
    let opts = SelectOptions {
        strong_heredity: a.heredity,
    };
    let sel: SelectionBootstrap = bootstrap_selection(&cands, &design.rows, &y, a.b, a.seed, &opts)?;

    let t = &mut out.text;
    let chosen: Vec<&str> = sel.point.selected.iter().map(|&j| sel.labels[j].as_str()).collect();
    writeln!(t, "point model: {}", if chosen.is_empty() { "(intercept only)".into() } else { chosen.join(" + ") })
        .unwrap();
    writeln!(t, "selection proportions over B = {} ({} failed):", sel.b, sel.failed.len()).unwrap();
    for p in &sel.proportions {
        writeln!(t, "  {:<16}{:>8.3}", p.term, p.proportion).unwrap();
    }
    out.add("selection.json", json(&sel)?);
    out.add("candidates.json", json(&cands)?);
    out.add("proportions.csv", sel.proportions_csv().into_bytes());
    out.add("coefficients.csv", sel.coefficients_csv().into_bytes());
    Ok(())
}

/// Runs one parsed command, writing its output directory (if any) and then
/// the summary to `stdout`.
pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<()> {
    let mut out = Output::new(cmd)?;
    let dir = match cmd {
        Command::GenWeights(a) => {
            gen_weights_cmd(a, &mut out)?;
            &a.out
        }
        Command::Fit(a) => {
            fit_cmd(a, &mut out)?;
            &a.out
        }
        Command::Bootstrap(a) => {
            bootstrap_cmd(a, &mut out)?;
            &a.out
        }
        Command::Predict(a) => {
            predict_cmd(a, &mut out)?;
            &a.out
        }
        Command::Select(a) => {
            select_cmd(a, &mut out)?;
            &a.out
        }
    };
    if let Some(dir) = dir {
        io::write_output_dir(dir, &out.files)?;
    }
    stdout.write_all(out.text.as_bytes())?;
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status; errors go to `stderr` as one line `CODE: message`.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "E_INPUT: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "{}: {msg}", e.code());
            e.exit_code()
        }
    }
}
