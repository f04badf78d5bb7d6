//! Command-line front end.
//!
//! Exit codes are stable: `0` success (positive key rate where one is
//! computed), `2` non-positive key rate, `3` statistics that no attack can
//! produce, `1` anything else (bad flags, unreadable files, bracket errors).

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::attack::{depolarizing_attack, paper_attack, random_attack, true_s_ae, CollectiveAttack};
use crate::error::{Error, Result};
use crate::keyrate::{find_threshold, key_rate, ConstraintMode, KeyRateResult, OptimizerOptions, ThresholdOptions};
use crate::stats::{
    exact_statistics, scenario_statistics, simulate_protocol, ChannelStatistics, ProtocolConfig, ScenarioKind,
    StatisticsFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_KEY: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "LSQKD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lsqkd", version, about = "Limited-resource semi-quantum key distribution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Channel statistics of an attack, exact or sampled
    Stats(StatsArgs),
    /// Certified key rate for given statistics
    Keyrate(KeyrateArgs),
    /// Largest noise level with a positive key rate
    Threshold(ThresholdArgs),
    /// Key rate over a range of noise levels, as CSV
    Sweep(SweepArgs),
    /// Show why mismatched-measurement statistics are needed
    AttackDemo,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    /// Random restarts of the local search
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    /// Master seed of the restart points
    #[arg(long = "opt-seed", default_value_t = 0x5eed)]
    opt_seed: u64,
}

impl OptimizerArgs {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            seed: self.opt_seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// identity, paper, depolarizing:Q, random:DE:SEED, or an attack JSON file
    #[arg(long)]
    attack: String,
    /// Sample this many protocol iterations instead of computing exactly
    #[arg(long, value_name = "ITERATIONS")]
    mc: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability A prepares a Z-basis state
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Probability B measures and resends
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Fraction of raw-key iterations disclosed for testing
    #[arg(long, default_value_t = 0.0)]
    test_fraction: f64,
    /// Write the statistics JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KeyrateArgs {
    /// Statistics JSON file
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    stats: Option<PathBuf>,
    /// independent:Q or dependent:Q
    #[arg(long)]
    scenario: Option<ScenarioPoint>,
    /// full or error-events-only
    #[arg(long, default_value = "full")]
    mode: ConstraintMode,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Also write the result as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// independent or dependent
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 1e-4)]
    q_tol: f64,
    #[arg(long, default_value_t = 0.0)]
    qmin: f64,
    #[arg(long, default_value_t = 0.25)]
    qmax: f64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// independent or dependent
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 0.0)]
    qmin: f64,
    #[arg(long, default_value_t = 0.12)]
    qmax: f64,
    #[arg(long, default_value_t = 0.005)]
    step: f64,
    #[arg(long, default_value = "full")]
    mode: ConstraintMode,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// CSV destination; stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `kind:Q` on the command line.
#[derive(Clone, Copy, Debug)]
struct ScenarioPoint {
    kind: ScenarioKind,
    q: f64,
}

impl FromStr for ScenarioPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, q) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("scenario '{s}' should look like independent:0.05")))?;
        let q = q
            .parse()
            .map_err(|_| Error::Config(format!("noise level '{q}' is not a number")))?;
        Ok(Self { kind: kind.parse()?, q })
    }
}

/// Resolves a builtin attack name or loads an attack file.
pub fn parse_attack(spec: &str) -> Result<CollectiveAttack> {
    let parts: Vec<&str> = spec.split(':').collect();
    let number = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("'{s}' in attack '{spec}' is not a number")))
    };
    let integer = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| Error::Config(format!("'{s}' in attack '{spec}' is not an integer")))
    };
    match parts.as_slice() {
        ["identity"] => CollectiveAttack::identity(1),
        ["paper"] => Ok(paper_attack()),
        ["depolarizing", q] => depolarizing_attack(number(q)?),
        ["random", d, seed] => random_attack(integer(d)? as usize, integer(seed)?),
        _ => CollectiveAttack::load(spec),
    }
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Applies the thread count from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={value} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Keyrate(a) => cmd_keyrate(&a, out),
        Command::Threshold(a) => cmd_threshold(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::AttackDemo => cmd_attack_demo(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Infeasible { .. } | Error::InvalidStatistics { .. } => EXIT_INFEASIBLE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn key_code(r: &KeyRateResult) -> i32 {
    if r.key_rate > 0.0 {
        EXIT_OK
    } else {
        EXIT_NO_KEY
    }
}

fn cmd_stats(a: &StatsArgs, out: &mut dyn Write) -> Result<i32> {
    let attack = parse_attack(&a.attack)?;
    let (stats, raw_key) = match a.mc {
        None => (exact_statistics(&attack), None),
        Some(iterations) => {
            let cfg = ProtocolConfig {
                p: a.p,
                q: a.q,
                iterations,
                seed: a.seed,
                test_fraction: a.test_fraction,
            };
            let outcome = simulate_protocol(&attack, &cfg)?;
            let summary = outcome.raw_key_summary();
            (outcome.statistics, Some(summary))
        }
    };
    let json = serde_json::to_string_pretty(&StatisticsFile::from_stats(&stats, raw_key.clone()))?;
    match &a.out {
        None => writeln!(out, "{json}")?,
        Some(path) => {
            std::fs::write(path, json)?;
            writeln!(out, "Q_Z = {}  Q_X = {}", sig6(stats.q_z()), sig6(stats.q_x()))?;
            if let Some(k) = raw_key {
                writeln!(out, "raw key: {} bits, error rate {}", k.length, sig6(k.error_rate))?;
            }
            writeln!(out, "wrote {}", path.display())?;
        }
    }
    Ok(EXIT_OK)
}

fn write_key_rate(out: &mut dyn Write, r: &KeyRateResult) -> Result<()> {
    writeln!(out, "mode               {}", r.mode)?;
    writeln!(out, "S(A|E) bound       {}", sig6(r.s_ae_bound))?;
    writeln!(out, "H(A|B)             {}", sig6(r.h_a_b))?;
    writeln!(out, "key rate r         {}", sig6(r.key_rate))?;
    writeln!(out, "restarts agreeing  {}/{}", r.restarts_agreeing, r.restarts)?;
    writeln!(out, "max residual       {}", sig6(r.residuals.max()))?;
    Ok(())
}

fn cmd_keyrate(a: &KeyrateArgs, out: &mut dyn Write) -> Result<i32> {
    let stats = match (&a.stats, a.scenario) {
        (Some(path), _) => ChannelStatistics::load(path)?,
        (None, Some(p)) => scenario_statistics(p.q, p.kind)?,
        (None, None) => unreachable!("clap requires one input"),
    };
    let r = key_rate(&stats, a.mode, &a.optimizer.options())?;
    write_key_rate(out, &r)?;
    if let Some(path) = &a.out {
        std::fs::write(path, r.to_json_string()?)?;
    }
    if r.key_rate <= 0.0 {
        writeln!(out, "no positive key rate: abort")?;
    }
    Ok(key_code(&r))
}

fn cmd_threshold(a: &ThresholdArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = ThresholdOptions {
        q_lo: a.qmin,
        q_hi: a.qmax,
        q_tol: a.q_tol,
        optimizer: a.optimizer.options(),
        ..Default::default()
    };
    let report = find_threshold(a.scenario, &opts)?;
    writeln!(out, "scenario   {}", report.scenario)?;
    writeln!(out, "threshold  {}", sig6(report.threshold))?;
    writeln!(out, "bracket    [{}, {}]", sig6(report.bracket.0), sig6(report.bracket.1))?;
    writeln!(out, "probes     {}", report.probes.len())?;
    for p in &report.probes {
        writeln!(
            out,
            "  Q = {:<10} r = {:<12} agreeing {}",
            sig6(p.q),
            sig6(p.key_rate),
            p.restarts_agreeing
        )?;
    }
    Ok(EXIT_OK)
}

/// Evenly spaced noise levels from `qmin` to `qmax` inclusive.
fn sweep_grid(qmin: f64, qmax: f64, step: f64) -> Result<Vec<f64>> {
    if !(qmin < qmax) || !(step > 0.0) || qmin < 0.0 || qmax > 0.5 {
        return Err(Error::Config(format!(
            "invalid sweep range {qmin}..{qmax} step {step} (need 0 ≤ qmin < qmax ≤ 0.5, step > 0)"
        )));
    }
    let n = ((qmax - qmin) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (qmin + k as f64 * step).min(qmax)).collect())
}

pub const SWEEP_HEADER: &str = "Q,q_x,s_ae_bound,h_a_b,r,restarts_agreeing";

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = sweep_grid(a.qmin, a.qmax, a.step)?;
    let opts = a.optimizer.options();
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&q| -> Result<String> {
            let s = scenario_statistics(q, a.scenario)?;
            let r = key_rate(&s, a.mode, &opts)?;
            Ok(format!(
                "{},{},{},{},{},{}",
                q,
                s.q_x(),
                r.s_ae_bound,
                r.h_a_b,
                r.key_rate,
                r.restarts_agreeing
            ))
        })
        .collect::<Result<_>>()?;
    let csv = std::iter::once(SWEEP_HEADER.to_string())
        .chain(rows)
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    match &a.out {
        None => write!(out, "{csv}")?,
        Some(path) => {
            std::fs::write(path, csv)?;
            writeln!(out, "wrote {} rows to {}", grid.len(), path.display())?;
        }
    }
    Ok(EXIT_OK)
}

/// The four numbers of the attack demonstration.
#[derive(Clone, Debug)]
pub struct AttackDemo {
    pub true_s_ae: f64,
    pub q_z: f64,
    pub q_x: f64,
    pub full_mode_bound: f64,
    pub error_events_only_bound: f64,
}

pub fn attack_demo(opts: &OptimizerOptions) -> Result<AttackDemo> {
    let attack = paper_attack();
    let observed = exact_statistics(&attack);
    let noiseless = exact_statistics(&CollectiveAttack::identity(1)?);
    Ok(AttackDemo {
        true_s_ae: true_s_ae(&attack)?,
        q_z: observed.q_z(),
        q_x: observed.q_x(),
        full_mode_bound: key_rate(&observed, ConstraintMode::Full, opts)?.s_ae_bound,
        error_events_only_bound: key_rate(&noiseless, ConstraintMode::ErrorEventsOnly, opts)?.s_ae_bound,
    })
}

fn cmd_attack_demo(out: &mut dyn Write) -> Result<i32> {
    let d = attack_demo(&OptimizerOptions::default())?;
    writeln!(
        out,
        "(1) S(A|E) under the reflect-side attack: {}\n    Eve's ancilla holds a copy of every raw key bit.",
        sig6(d.true_s_ae)
    )?;
    writeln!(
        out,
        "(2) error rates it causes: Q_Z = {}, Q_X = {}\n    Error monitoring alone sees a perfect channel.",
        sig6(d.q_z),
        sig6(d.q_x)
    )?;
    writeln!(
        out,
        "(3) full-mode bound on its statistics: {}\n    Mismatched-measurement statistics expose it; the parties abort.",
        sig6(d.full_mode_bound)
    )?;
    writeln!(
        out,
        "(4) error-events-only bound on a noiseless channel: {}\n    Without mismatched statistics no key can ever be certified.",
        sig6(d.error_events_only_bound)
    )?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lsqkd").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0793632123), "0.0793632");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(-0.5), "-0.500000");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn attack_specs() {
        assert_eq!(parse_attack("identity").unwrap().ancilla_dim(), 1);
        assert_eq!(parse_attack("paper").unwrap().ancilla_dim(), 2);
        assert_eq!(parse_attack("depolarizing:0.05").unwrap().ancilla_dim(), 16);
        assert_eq!(parse_attack("random:3:9").unwrap().ancilla_dim(), 3);
        assert!(parse_attack("depolarizing:x").is_err());
        assert!(parse_attack("random:3").is_err());
        assert!(parse_attack("/nonexistent/attack.json").is_err());
    }

    #[test]
    fn scenario_points() {
        let p: ScenarioPoint = "dependent:0.11".parse().unwrap();
        assert_eq!(p.kind, ScenarioKind::Dependent);
        assert_eq!(p.q, 0.11);
        assert!("dependent".parse::<ScenarioPoint>().is_err());
        assert!("sideways:0.1".parse::<ScenarioPoint>().is_err());
    }

    #[test]
    fn sweep_grid_is_inclusive_and_monotone() {
        let g = sweep_grid(0.0, 0.12, 0.005).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(*g.last().unwrap(), 0.12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(sweep_grid(0.1, 0.0, 0.01).is_err());
        assert!(sweep_grid(0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&[]).0, EXIT_USAGE);
        assert_eq!(run_str(&["keyrate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["keyrate", "--scenario", "independent"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["stats", "--attack", "random:0:1"]).0, EXIT_USAGE);
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("attack-demo"));
    }

    #[test]
    fn keyrate_exit_codes() {
        let (code, out, _) = run_str(&["keyrate", "--scenario", "independent:0.05", "--restarts", "16"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, _, _) = run_str(&["keyrate", "--scenario", "independent:0.10", "--restarts", "16"]);
        assert_eq!(code, EXIT_NO_KEY);
    }
}
