//! Command-line front end: scenario presets, configuration resolution,
//! figure-data CSV emission, and the simulation-versus-analysis validation
//! report.
//!
//! Every run resolves its configuration from flags, an optional flat
//! `key=value` config file, and defaults (in that precedence), echoes the
//! resolved values as its first output artifact, and writes all files
//! atomically with LF line endings and 12-significant-digit numbers.
//!
//! Exit codes: 0 success, 1 validation-suite failure, 2 configuration error,
//! 3 I/O error.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::accuracy::raudys_accuracy;
use crate::csma::SampleGrouping;
use crate::gmrf::CorrelationDecay;
use crate::simulate::{
    empirical_generalization_accuracy, end_to_end_sim, simulate_ctmc, total_variation, Horizon,
};
use crate::topology::{ActivityState, SensorLayout};
use crate::tradeoff::{lin_spaced, log_spaced, RateStar, Scenario};
use crate::{Error, Result};

// ============================================================================
// Command line surface
// ============================================================================

#[derive(Debug, Parser)]
#[command(
    name = "stl",
    about = "Battery-lifetime versus classification-accuracy analysis for \
             CSMA-coordinated sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate-sweep figure data: lifetime, occupancy, samples, accuracy.
    Sweep(RunArgs),
    /// Parametric lifetime-accuracy frontier over training fractions.
    Frontier(RunArgs),
    /// Lifetime maximization under an accuracy floor.
    Optimize(RunArgs),
    /// Simulation-versus-analysis validation suite on the canonical presets.
    Validate(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct RunArgs {
    /// Flat key=value file supplying defaults for any flag; flags win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Scenario preset: indep, chain3, or custom.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    /// Sensor count (indep scenario only).
    #[arg(long)]
    n: Option<usize>,
    /// Battery budget in units of transmission time.
    #[arg(long)]
    l: Option<f64>,
    /// Training fraction in [0, 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Measurement noise variance.
    #[arg(long = "sigma-sq", value_name = "VAR")]
    sigma_sq: Option<f64>,
    /// Adjacent-sensor correlation; shorthand for `--decay const:G`.
    #[arg(long)]
    g: Option<f64>,
    /// Correlation decay: `const:G` or `exp:SCALE`.
    #[arg(long, value_name = "SPEC")]
    decay: Option<String>,
    /// Log-spaced back-off rate grid `LO:HI:POINTS`.
    #[arg(long = "rate-grid", value_name = "LO:HI:POINTS")]
    rate_grid: Option<String>,
    /// Accuracy floor for optimize.
    #[arg(long)]
    beta: Option<f64>,
    /// Accuracy floor grid `LO:HI:STEP` for optimize.
    #[arg(long = "beta-grid", value_name = "LO:HI:STEP")]
    beta_grid: Option<String>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $STL_OUT, then ./out.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sensor-position CSV for the custom scenario (`id,x,y` per line).
    #[arg(long, value_name = "FILE")]
    layout: Option<PathBuf>,
    /// Monte Carlo training trials for validation.
    #[arg(long)]
    trials: Option<u64>,
    /// End-to-end replications for validation; defaults to 200 for the
    /// conflict-free preset and 500 for the chain preset.
    #[arg(long)]
    replications: Option<u64>,
    /// Event horizon for occupancy validation.
    #[arg(long)]
    events: Option<u64>,
    /// Largest finite rate considered before reporting unbounded.
    #[arg(long = "rate-cap", value_name = "RATE")]
    rate_cap: Option<f64>,
}

// ============================================================================
// Configuration resolution
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Preset {
    Indep,
    Chain3,
    Custom,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Indep => "indep",
            Preset::Chain3 => "chain3",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DecaySpec {
    Constant(f64),
    Exponential(f64),
}

#[derive(Debug, Clone, PartialEq)]
enum BetaSpec {
    Single(f64),
    Grid { lo: f64, hi: f64, step: f64 },
}

#[derive(Debug, Clone)]
struct Resolved {
    preset: Preset,
    n: usize,
    l: f64,
    alpha: f64,
    sigma_sq: f64,
    decay: DecaySpec,
    rate_lo: f64,
    rate_hi: f64,
    rate_points: usize,
    beta: BetaSpec,
    seed: u64,
    out: PathBuf,
    layout: Option<PathBuf>,
    trials: u64,
    /// `None` keeps the per-preset validation defaults.
    replications: Option<u64>,
    events: u64,
    rate_cap: f64,
    /// Loaded up front so the echoed `n` reflects the layout.
    layout_data: Option<SensorLayout>,
}

const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "n",
    "l",
    "alpha",
    "sigma-sq",
    "g",
    "decay",
    "rate-grid",
    "beta",
    "beta-grid",
    "seed",
    "out",
    "layout",
    "trials",
    "replications",
    "events",
    "rate-cap",
];

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "{}:{}: unknown key {key:?}",
                path.display(),
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn fetch<T: std::str::FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
            Error::Config(format!("config key {key}={raw:?}: {e}"))
        }),
    }
}

fn parse_triple(spec: &str, what: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "{what} {spec:?} must have the form A:B:C"
        )));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|e| {
            Error::Config(format!("{what} component {part:?}: {e}"))
        })?;
    }
    Ok((values[0], values[1], values[2]))
}

fn parse_rate_grid(spec: &str) -> Result<(f64, f64, usize)> {
    let (lo, hi, points) = parse_triple(spec, "rate grid")?;
    if points.fract() != 0.0 || !(2.0..=100_000.0).contains(&points) {
        return Err(Error::Config(format!(
            "rate grid point count {points} must be an integer in 2..=100000"
        )));
    }
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Config(format!(
            "rate grid bounds [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    Ok((lo, hi, points as usize))
}

fn parse_beta_grid(spec: &str) -> Result<(f64, f64, f64)> {
    let (lo, hi, step) = parse_triple(spec, "beta grid")?;
    if !(lo > 0.5 && hi < 1.0 && hi > lo && step > 0.0) {
        return Err(Error::Config(format!(
            "beta grid {spec:?} must satisfy 0.5 < lo < hi < 1 with a positive step"
        )));
    }
    Ok((lo, hi, step))
}

fn parse_decay(spec: &str) -> Result<DecaySpec> {
    let (kind, value) = spec.split_once(':').ok_or_else(|| {
        Error::Config(format!("decay {spec:?} must have the form const:G or exp:SCALE"))
    })?;
    let value: f64 = value.parse().map_err(|e| {
        Error::Config(format!("decay parameter {spec:?}: {e}"))
    })?;
    match kind {
        "const" => Ok(DecaySpec::Constant(value)),
        "exp" => Ok(DecaySpec::Exponential(value)),
        _ => Err(Error::Config(format!(
            "decay kind {kind:?} must be const or exp"
        ))),
    }
}

fn resolve(args: &RunArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };

    let preset = match args
        .scenario
        .clone()
        .or(file.get("scenario").cloned())
        .as_deref()
    {
        None | Some("indep") => Preset::Indep,
        Some("chain3") => Preset::Chain3,
        Some("custom") => Preset::Custom,
        Some(other) => {
            return Err(Error::Config(format!(
                "scenario {other:?} is not one of indep, chain3, custom"
            )))
        }
    };

    let n_flag = args.n.or(fetch(&file, "n")?);
    if n_flag.is_some() && preset == Preset::Chain3 {
        return Err(Error::Config("the chain3 scenario fixes n = 3".into()));
    }
    if n_flag.is_some() && preset == Preset::Custom {
        return Err(Error::Config(
            "the custom scenario takes its sensor count from the layout".into(),
        ));
    }
    if n_flag == Some(0) {
        return Err(Error::Config("n must be at least 1".into()));
    }

    let l = match args.l.or(fetch(&file, "l")?) {
        Some(l) => {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!(
                    "l = {l} must be positive and finite"
                )));
            }
            l
        }
        None => match preset {
            Preset::Chain3 => 10.0,
            _ => 100.0,
        },
    };

    let alpha = match args.alpha.or(fetch(&file, "alpha")?) {
        Some(a) => {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::Config(format!(
                    "alpha = {a} must lie in [0, 1)"
                )));
            }
            a
        }
        None => match preset {
            Preset::Chain3 => 0.4,
            _ => 0.2,
        },
    };

    let sigma_sq = match args.sigma_sq.or(fetch(&file, "sigma-sq")?) {
        Some(s) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "sigma-sq = {s} must be positive and finite"
                )));
            }
            s
        }
        None => 1.0,
    };

    let g_flag: Option<f64> = args.g.or(fetch(&file, "g")?);
    let decay_flag: Option<String> = args.decay.clone().or(file.get("decay").cloned());
    let decay = match (g_flag, decay_flag) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either g or decay, not both".into(),
            ))
        }
        (Some(g), None) => DecaySpec::Constant(g),
        (None, Some(spec)) => parse_decay(&spec)?,
        (None, None) => DecaySpec::Constant(0.25),
    };
    if preset == Preset::Indep && (g_flag.is_some() || args.decay.is_some() || file.contains_key("decay")) {
        return Err(Error::Config(
            "the indep scenario has uncorrelated measurements; g and decay do not apply"
                .into(),
        ));
    }

    let (rate_lo, rate_hi, rate_points) =
        match args.rate_grid.clone().or(file.get("rate-grid").cloned()) {
            Some(spec) => parse_rate_grid(&spec)?,
            None => (1e-2, 1e2, 200),
        };

    let beta_single: Option<f64> = args.beta.or(fetch(&file, "beta")?);
    let beta_grid_spec: Option<String> = args.beta_grid.clone().or(file.get("beta-grid").cloned());
    let beta = match (beta_single, beta_grid_spec) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either beta or beta-grid, not both".into(),
            ))
        }
        (Some(b), None) => {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!(
                    "beta = {b} must lie in (0, 1)"
                )));
            }
            BetaSpec::Single(b)
        }
        (None, Some(spec)) => {
            let (lo, hi, step) = parse_beta_grid(&spec)?;
            BetaSpec::Grid { lo, hi, step }
        }
        (None, None) => BetaSpec::Single(0.75),
    };

    let layout = args.layout.clone().or(file.get("layout").map(PathBuf::from));
    let layout_data = match preset {
        Preset::Custom => {
            let path = layout.as_ref().ok_or_else(|| {
                Error::Config("the custom scenario requires --layout FILE".into())
            })?;
            Some(SensorLayout::from_csv_path(path)?)
        }
        _ => {
            if layout.is_some() {
                return Err(Error::Config(format!(
                    "the {} scenario does not take a layout",
                    preset.name()
                )));
            }
            None
        }
    };
    let n = match preset {
        Preset::Indep => n_flag.unwrap_or(8),
        Preset::Chain3 => 3,
        Preset::Custom => layout_data.as_ref().expect("loaded above").points().len(),
    };

    let out = args
        .out
        .clone()
        .or(file.get("out").map(PathBuf::from))
        .or_else(|| std::env::var_os("STL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let trials = args.trials.or(fetch(&file, "trials")?).unwrap_or(10_000);
    let replications = args.replications.or(fetch(&file, "replications")?);
    let events = args.events.or(fetch(&file, "events")?).unwrap_or(1_000_000);
    if trials == 0 || events == 0 || replications == Some(0) {
        return Err(Error::Config(
            "trials, replications, and events must be positive".into(),
        ));
    }
    let rate_cap = match args.rate_cap.or(fetch(&file, "rate-cap")?) {
        Some(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!(
                    "rate-cap = {c} must be positive and finite"
                )));
            }
            c
        }
        None => 1e4,
    };

    Ok(Resolved {
        preset,
        n,
        l,
        alpha,
        sigma_sq,
        decay,
        rate_lo,
        rate_hi,
        rate_points,
        beta,
        seed: args.seed.or(fetch(&file, "seed")?).unwrap_or(1),
        out,
        layout,
        trials,
        replications,
        events,
        rate_cap,
        layout_data,
    })
}

impl Resolved {
    fn echo(&self, command: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={command}");
        let _ = writeln!(s, "scenario={}", self.preset.name());
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "l={}", fmt_sig12(self.l));
        let _ = writeln!(s, "alpha={}", fmt_sig12(self.alpha));
        let _ = writeln!(s, "sigma-sq={}", fmt_sig12(self.sigma_sq));
        let _ = match self.decay {
            DecaySpec::Constant(g) => writeln!(s, "decay=const:{}", fmt_sig12(g)),
            DecaySpec::Exponential(scale) => writeln!(s, "decay=exp:{}", fmt_sig12(scale)),
        };
        let _ = writeln!(
            s,
            "rate-grid={}:{}:{}",
            fmt_sig12(self.rate_lo),
            fmt_sig12(self.rate_hi),
            self.rate_points
        );
        let _ = match &self.beta {
            BetaSpec::Single(b) => writeln!(s, "beta={}", fmt_sig12(*b)),
            BetaSpec::Grid { lo, hi, step } => writeln!(
                s,
                "beta-grid={}:{}:{}",
                fmt_sig12(*lo),
                fmt_sig12(*hi),
                fmt_sig12(*step)
            ),
        };
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(
            s,
            "layout={}",
            self.layout
                .as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        );
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = match self.replications {
            Some(r) => writeln!(s, "replications={r}"),
            None => writeln!(s, "replications=auto"),
        };
        let _ = writeln!(s, "events={}", self.events);
        let _ = writeln!(s, "rate-cap={}", fmt_sig12(self.rate_cap));
        s
    }

    fn build_scenario(&self) -> Result<Scenario> {
        match self.preset {
            Preset::Indep => Scenario::independent(self.n, self.l, self.sigma_sq),
            Preset::Chain3 => {
                let g = match self.decay {
                    DecaySpec::Constant(g) => g,
                    DecaySpec::Exponential(_) => {
                        return Err(Error::Config(
                            "the chain3 scenario takes a constant correlation g".into(),
                        ))
                    }
                };
                Scenario::chain3(self.l, self.sigma_sq, g)
            }
            Preset::Custom => {
                let layout = self
                    .layout_data
                    .clone()
                    .expect("loaded during resolution");
                let decay = match self.decay {
                    DecaySpec::Constant(g) => CorrelationDecay::constant(g)?,
                    DecaySpec::Exponential(scale) => CorrelationDecay::exponential(scale)?,
                };
                Scenario::custom(layout, self.l, self.sigma_sq, &decay)
            }
        }
    }

    fn rate_grid(&self) -> Result<Vec<f64>> {
        log_spaced(self.rate_lo, self.rate_hi, self.rate_points)
    }
}

// ============================================================================
// Formatting and atomic output
// ============================================================================

/// Formats with 12 significant digits, trimming trailing zeros; infinities
/// and NaN become `inf`, `-inf`, `nan`.
pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponential format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, content).map_err(Error::Io)?;
    std::fs::rename(&tmp, path).map_err(Error::Io)?;
    Ok(())
}

struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    fn prepare(resolved: &Resolved, command: &str) -> Result<OutputDir> {
        std::fs::create_dir_all(&resolved.out).map_err(Error::Io)?;
        let dir = OutputDir {
            dir: resolved.out.clone(),
        };
        let echo = resolved.echo(command);
        dir.write("resolved_config.txt", &echo)?;
        print!("{echo}");
        Ok(dir)
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        atomic_write(&self.dir.join(name), content)
    }
}

fn csv_label(label: &str) -> String {
    label.replace(',', "+")
}

// ============================================================================
// Sweep
// ============================================================================

fn cmd_sweep(resolved: &Resolved) -> Result<i32> {
    let out = OutputDir::prepare(resolved, "sweep")?;
    let scenario = resolved.build_scenario()?;
    let table = scenario.sweep(&resolved.rate_grid()?, resolved.alpha)?;

    let mut fig_u = String::from("rate,U\n");
    let mut fig_kbar = String::from("rate,k_bar\n");
    let mut fig_a = String::from("rate,A,A_bayes\n");
    let mut fig_mbar = String::from("rate,m_bar");
    let mut fig_a_states = String::from("rate");
    for label in &table.class_labels {
        let _ = write!(fig_mbar, ",m_{}", csv_label(label));
        let _ = write!(fig_a_states, ",A_{}", csv_label(label));
    }
    fig_mbar.push('\n');
    fig_a_states.push('\n');

    for row in &table.rows {
        let rate = fmt_sig12(row.rate);
        let _ = writeln!(fig_u, "{rate},{}", fmt_sig12(row.u));
        let _ = writeln!(fig_kbar, "{rate},{}", fmt_sig12(row.k_bar));
        let _ = writeln!(
            fig_a,
            "{rate},{},{}",
            fmt_sig12(row.accuracy),
            fmt_sig12(row.bayes_accuracy)
        );
        let _ = write!(fig_mbar, "{rate},{}", fmt_sig12(row.m_bar));
        for &m in &row.class_samples {
            let _ = write!(fig_mbar, ",{}", fmt_sig12(m));
        }
        fig_mbar.push('\n');
        let _ = write!(fig_a_states, "{rate}");
        for &a in &row.class_accuracy {
            let _ = write!(fig_a_states, ",{}", fmt_sig12(a));
        }
        fig_a_states.push('\n');
    }

    out.write("fig_U.csv", &fig_u)?;
    out.write("fig_kbar.csv", &fig_kbar)?;
    out.write("fig_mbar.csv", &fig_mbar)?;
    out.write("fig_A.csv", &fig_a)?;
    out.write("fig_A_states.csv", &fig_a_states)?;
    println!(
        "sweep: {} rates -> fig_U.csv fig_kbar.csv fig_mbar.csv fig_A.csv fig_A_states.csv",
        table.rows.len()
    );
    Ok(0)
}

// ============================================================================
// Frontier
// ============================================================================

fn cmd_frontier(resolved: &Resolved) -> Result<i32> {
    let out = OutputDir::prepare(resolved, "frontier")?;
    let scenario = resolved.build_scenario()?;
    let alphas = lin_spaced(0.1, 0.9, 9)?;
    let rows = scenario.frontier(&resolved.rate_grid()?, &alphas)?;

    let mut csv = String::from("alpha,rate,U,A,A_bayes,envelope\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_sig12(row.alpha),
            fmt_sig12(row.rate),
            fmt_sig12(row.u),
            fmt_sig12(row.accuracy),
            fmt_sig12(row.bayes_accuracy),
            u8::from(row.envelope)
        );
    }
    out.write("frontier.csv", &csv)?;
    let on_envelope = rows.iter().filter(|r| r.envelope).count();
    println!(
        "frontier: {} rows ({} curves + reference), {} on the envelope -> frontier.csv",
        rows.len(),
        alphas.len(),
        on_envelope
    );
    Ok(0)
}

// ============================================================================
// Optimize
// ============================================================================

fn rate_star_cell(rate_star: &Option<RateStar>) -> String {
    match rate_star {
        Some(RateStar::Finite(rate)) => fmt_sig12(*rate),
        Some(RateStar::Unbounded) => "inf".into(),
        None => "nan".into(),
    }
}

fn cmd_optimize(resolved: &Resolved) -> Result<i32> {
    let out = OutputDir::prepare(resolved, "optimize")?;
    let scenario = resolved.build_scenario()?;
    let alphas = lin_spaced(0.01, 0.90, 90)?;
    let rates = resolved.rate_grid()?;

    let mut csv = String::from("beta,alpha_star,rate_star,U_star,feasible\n");
    let summary;
    match &resolved.beta {
        BetaSpec::Single(beta) => {
            let report = scenario.optimize(*beta, &alphas, &rates, resolved.rate_cap)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_sig12(report.beta),
                fmt_sig12(report.alpha_star),
                rate_star_cell(&report.rate_star),
                fmt_sig12(report.u_star),
                u8::from(report.feasible)
            );
            summary = if report.feasible {
                format!(
                    "optimize: beta={} alpha_star={} rate_star={} U_star={}",
                    fmt_sig12(report.beta),
                    fmt_sig12(report.alpha_star),
                    rate_star_cell(&report.rate_star),
                    fmt_sig12(report.u_star)
                )
            } else {
                format!("optimize: beta={} infeasible", fmt_sig12(report.beta))
            };
        }
        BetaSpec::Grid { lo, hi, step } => {
            let mut betas = Vec::new();
            let mut k = 0u32;
            loop {
                let b = lo + f64::from(k) * step;
                if b > hi + 1e-12 {
                    break;
                }
                betas.push(b.min(*hi));
                k += 1;
            }
            let scan = scenario.threshold_scan(&betas, &alphas, &rates, resolved.rate_cap)?;
            for report in &scan.reports {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    fmt_sig12(report.beta),
                    fmt_sig12(report.alpha_star),
                    rate_star_cell(&report.rate_star),
                    fmt_sig12(report.u_star),
                    u8::from(report.feasible)
                );
            }
            summary = match scan.transition {
                Some(beta) => format!(
                    "optimize: rate_star becomes unbounded near beta={}",
                    fmt_sig12(beta)
                ),
                None => format!(
                    "optimize: no finite-to-unbounded transition in [{}, {}]",
                    fmt_sig12(*lo),
                    fmt_sig12(*hi)
                ),
            };
        }
    }
    out.write("opt.csv", &csv)?;
    println!("{summary}");
    Ok(0)
}

// ============================================================================
// Validate
// ============================================================================

#[derive(Debug, Clone, Serialize)]
struct ValidationCheck {
    name: String,
    observed: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ValidationReport {
    seed: u64,
    trials: u64,
    events: u64,
    checks: Vec<ValidationCheck>,
    pass: bool,
}

fn check(name: &str, observed: f64, tolerance: f64) -> ValidationCheck {
    ValidationCheck {
        name: name.to_string(),
        observed,
        tolerance,
        pass: observed.is_finite() && observed <= tolerance,
    }
}

/// Largest relative disagreement between the sweep accuracy column and the
/// scenario's closed form over the probe rates.
fn dual_route_deviation(
    scenario: &Scenario,
    closed: impl Fn(f64) -> Result<f64>,
    alpha: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &rate in &[0.3, 1.0, 3.0] {
        let general = scenario.evaluate(rate, alpha)?.breakdown.total;
        let reference = closed(rate)?;
        worst = worst.max((general - reference).abs() / reference.abs());
    }
    Ok(worst)
}

/// Largest total-variation distance between simulated occupancy and the
/// stationary law over the probe rates, pooling three seeds per rate.
///
/// Pooling weights each run by its elapsed time, so the three trajectories
/// act as one long one. A single 10^6-event run over the 256 patterns of the
/// eight-node preset has a noise floor right at the 0.01 tolerance; the
/// pooled estimate sits a factor sqrt(3) below it.
fn occupancy_deviation(scenario: &Scenario, events: u64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &rate in &[0.3, 1.0, 3.0] {
        let backoff = scenario.backoff_for(rate)?;
        let point = scenario.evaluate(rate, scenario_alpha(scenario))?;
        let mut pooled = vec![0.0f64; scenario.states().len()];
        let mut elapsed = 0.0;
        for offset in 0..3 {
            let occupancy = simulate_ctmc(
                scenario.states(),
                scenario.conflict(),
                &backoff,
                Horizon::Events(events),
                seed + offset,
            )?;
            for (slot, &fraction) in pooled.iter_mut().zip(&occupancy.state_fraction) {
                *slot += fraction * occupancy.elapsed;
            }
            elapsed += occupancy.elapsed;
        }
        for slot in &mut pooled {
            *slot /= elapsed;
        }
        let tv = total_variation(&pooled, &point.analysis.pi)?;
        worst = worst.max(tv);
    }
    Ok(worst)
}

fn scenario_alpha(scenario: &Scenario) -> f64 {
    match scenario.grouping() {
        SampleGrouping::ByActiveCount => 0.2,
        SampleGrouping::PerState => 0.4,
    }
}

/// Mean end-to-end simulated accuracy over replicated runs against the
/// analytic stationary-weighted value at the same operating point.
fn end_to_end_deviation(
    scenario: &Scenario,
    rate: f64,
    alpha: f64,
    replications: u64,
    seed: u64,
) -> Result<f64> {
    let point = scenario.evaluate(rate, alpha)?;
    let backoff = scenario.backoff_for(rate)?;
    let mut sum = 0.0;
    for rep in 0..replications {
        let outcome = end_to_end_sim(
            &point.analysis,
            scenario.conflict(),
            &backoff,
            scenario.model(),
            scenario.grouping(),
            seed + rep,
        )?;
        sum += outcome.total_accuracy;
    }
    let mean = sum / replications as f64;
    Ok((mean - point.breakdown.total).abs())
}

fn cmd_validate(resolved: &Resolved) -> Result<i32> {
    let out = OutputDir::prepare(resolved, "validate")?;
    let seed = resolved.seed;
    let indep = Scenario::independent(8, 100.0, 1.0)?;
    let chain = Scenario::chain3(10.0, 1.0, 0.25)?;
    let mut checks = Vec::new();

    checks.push(check(
        "analytic_dual_route_indep",
        dual_route_deviation(
            &indep,
            |nu| crate::accuracy::indep_total_accuracy(8, nu, 0.2, 100.0, 1.0),
            0.2,
        )?,
        1e-12,
    ));
    checks.push(check(
        "analytic_dual_route_chain",
        dual_route_deviation(
            &chain,
            |eta| crate::accuracy::chain3_total_accuracy(eta, 0.4, 10.0, 1.0, 0.25),
            0.4,
        )?,
        1e-12,
    ));

    checks.push(check(
        "occupancy_indep",
        occupancy_deviation(&indep, resolved.events, seed)?,
        0.01,
    ));
    checks.push(check(
        "occupancy_chain",
        occupancy_deviation(&chain, resolved.events, seed + 100)?,
        0.01,
    ));

    let mut raudys_worst = 0.0f64;
    for (i, &(delta_sq, n_active, m)) in [(4.0, 4usize, 20usize), (8.0, 8, 24), (8.0, 8, 80), (2.0, 2, 10)]
        .iter()
        .enumerate()
    {
        let model = crate::gmrf::MeasurementModel::iid(n_active, 1.0)?;
        let state = ActivityState::from_mask((1u32 << n_active) - 1, n_active)?;
        let estimate = empirical_generalization_accuracy(
            &model,
            &state,
            m,
            resolved.trials,
            seed + 200 + i as u64,
        )?;
        let formula = raudys_accuracy(delta_sq, n_active, m as f64)?;
        raudys_worst = raudys_worst.max((estimate.mean - formula).abs());
    }
    checks.push(check("raudys_monte_carlo", raudys_worst, 0.02));

    let indep_reps = resolved.replications.unwrap_or(200);
    let chain_reps = resolved.replications.unwrap_or(500);
    checks.push(check(
        "end_to_end_indep",
        end_to_end_deviation(&indep, 1.0, 0.2, indep_reps, seed + 300)?,
        0.03,
    ));
    checks.push(check(
        "end_to_end_chain",
        end_to_end_deviation(&chain, 1.0, 0.4, chain_reps, seed + 300 + indep_reps)?,
        0.04,
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = ValidationReport {
        seed,
        trials: resolved.trials,
        events: resolved.events,
        checks,
        pass,
    };

    let mut json = serde_json::to_string_pretty(&report).map_err(|e| {
        Error::Io(std::io::Error::other(e))
    })?;
    json.push('\n');
    out.write("validation.json", &json)?;

    let mut text = String::new();
    for c in &report.checks {
        let _ = writeln!(
            text,
            "{} {}: observed {} (tolerance {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            fmt_sig12(c.observed),
            fmt_sig12(c.tolerance)
        );
    }
    let _ = writeln!(
        text,
        "{}: {} of {} checks passed",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len()
    );
    out.write("validation.txt", &text)?;
    print!("{text}");
    Ok(if report.pass { 0 } else { 1 })
}

// ============================================================================
// Entry point
// ============================================================================

fn dispatch(cli: &Cli) -> Result<i32> {
    let (args, runner): (&RunArgs, fn(&Resolved) -> Result<i32>) = match &cli.command {
        Command::Sweep(args) => (args, cmd_sweep),
        Command::Frontier(args) => (args, cmd_frontier),
        Command::Optimize(args) => (args, cmd_optimize),
        Command::Validate(args) => (args, cmd_validate),
    };
    let resolved = resolve(args)?;
    runner(&resolved)
}

/// Parses the command line and runs the selected command, returning the
/// process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io(_) => 3,
                _ => 2,
            }
        }
    }
}

// ============================================================================
// Tests
// ============================================================================
