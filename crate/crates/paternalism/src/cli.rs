//! Command-line front end: every library capability as a subcommand with
//! machine-readable output.
//!
//! Conventions shared by all subcommands:
//! - CSV output is comma-separated, LF-terminated, UTF-8, `.` decimal
//!   separator; lines starting with `#` are comments.
//! - Every CSV artifact begins with one provenance comment (tool version,
//!   resolved command, seed, config hash) and no timestamps, so repeated
//!   identical invocations produce identical bytes.
//! - Numeric output is full precision unless a `--digits` flag rounds a
//!   rendered table.
//! - Exit codes: 0 success, 1 domain/numeric/data error, 2 usage error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{domain_err, Result};
use crate::estimation::{posterior_table, write_posterior_table_csv, Knowledge, STANDARD_K_GRID};
use crate::mle::{fit, predict_classify, read_observations_csv, FitOptions, FitResult};
use crate::sim::{read_sim_config, run_experiment, write_rate_curve_csv, SimConfig};
use crate::stats::{pages_l, prop_test_yates, read_rank_panel_csv, ProportionSample};
use crate::welfare::{region_grid, OptionId, PopulationState};

/// Welfare, beliefs, estimation, and simulation for a model of
/// self-interested paternalism.
#[derive(Debug, Parser)]
#[command(name = "paternalism", version, propagate_version = true)]
pub struct Cli {
    /// Cap the worker threads used for internal parallelism.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summary table of the marginal posterior across an information grid.
    PosteriorTable(PosteriorTableArgs),
    /// Optimal-policy regions over the (phi, q) unit square as CSV (and
    /// optionally an SVG heat map).
    Regions(RegionsArgs),
    /// Maximum-likelihood fit of the self-interest weight from an
    /// intervention panel.
    Fit(FitArgs),
    /// Classify imposed options with a previously fitted model.
    Predict(PredictArgs),
    /// Run a seeded Monte Carlo experiment and export its panel.
    Simulate(SimulateArgs),
    /// Auxiliary test statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Args)]
struct PosteriorTableArgs {
    /// True loss probability of the lottery.
    #[arg(long)]
    p: f64,
    /// Reference probability for the error summaries (MAE/RMSE/KL/W1).
    #[arg(long = "ref")]
    ref_p: f64,
    /// Information grid: draw counts and/or `inf`, comma separated.
    #[arg(long = "k-grid", value_delimiter = ',', default_values_t = STANDARD_K_GRID)]
    k_grid: Vec<Knowledge>,
    /// Round rendered values to this many decimals (default: full precision).
    #[arg(long)]
    digits: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegionsArgs {
    /// Grid resolution per axis (both phi and q take this many points).
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Share mistakenly choosing Two among One-preferrers.
    #[arg(long = "eps-x", default_value_t = 0.0)]
    eps_x: f64,
    /// Share mistakenly choosing One among Two-preferrers.
    #[arg(long = "eps-y", default_value_t = 0.0)]
    eps_y: f64,
    /// Also render the region map as an SVG file.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Panel CSV with columns ca_id,ca_pref,pi,intervened,imposed.
    #[arg(long)]
    input: PathBuf,
    /// Starting value for the self-interest weight.
    #[arg(long = "phi-init", default_value_t = FitOptions::default().phi_init)]
    phi_init: f64,
    /// Starting value for the noise scale.
    #[arg(long = "sigma-init", default_value_t = FitOptions::default().sigma_init)]
    sigma_init: f64,
    /// Output JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Panel CSV with columns ca_id,ca_pref,pi,intervened,imposed.
    #[arg(long)]
    input: PathBuf,
    /// Fitted-model JSON as produced by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Probability cutoff for classifying the imposed option as One.
    #[arg(long, default_value_t = crate::mle::DEFAULT_CLASSIFY_THRESHOLD)]
    threshold: f64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment config JSON; omitted fields take defaults. Without this
    /// flag the default experiment runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for cas.csv, choosers.csv, and rates.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Two-proportion chi-square test with continuity correction.
    Prop(PropArgs),
    /// Rank trend test across ordered conditions.
    Pagel(PagelArgs),
}

#[derive(Debug, Args)]
struct PropArgs {
    /// First sample as successes/total, e.g. 43/54.
    #[arg(long, value_parser = parse_proportion)]
    a: ProportionSample,
    /// Second sample as successes/total, e.g. 12/23.
    #[arg(long, value_parser = parse_proportion)]
    b: ProportionSample,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PagelArgs {
    /// CSV matrix, one row per subject, one column per ordered condition.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_proportion(text: &str) -> std::result::Result<ProportionSample, String> {
    let (s, t) = text
        .split_once('/')
        .ok_or_else(|| format!("expected successes/total, got `{text}`"))?;
    let successes = u64::from_str(s.trim()).map_err(|e| format!("bad successes `{s}`: {e}"))?;
    let total = u64::from_str(t.trim()).map_err(|e| format!("bad total `{t}`: {e}"))?;
    ProportionSample::new(successes, total).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Provenance

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// One `#` comment line prepended to every CSV artifact: tool version, the
/// resolved command, the seed (`-` when the command is deterministic by
/// construction), and a hash of the resolved configuration. Deliberately no
/// timestamps: identical invocations must produce identical bytes.
fn provenance(cmd: &str, seed: Option<u64>, config_repr: &str) -> String {
    let seed_repr = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    format!(
        "# paternalism {} | cmd: {cmd} | seed: {seed_repr} | config: {:016x}",
        env!("CARGO_PKG_VERSION"),
        fnv1a64(config_repr.as_bytes()),
    )
}

fn with_output<F>(path: Option<&Path>, render: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p)?);
            render(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Dispatch

/// Parses `std::env::args` and runs the tool; the returned code is ready for
/// `main`. Usage errors print through clap and exit 2; execution errors
/// print one line on stderr and exit 1.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(domain_err!("--threads must be at least 1"));
        }
        // Ignore the error if a pool already exists (e.g. repeated calls in
        // tests); the cap is best-effort per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::PosteriorTable(args) => cmd_posterior_table(args),
        Command::Regions(args) => cmd_regions(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Stats(StatsCommand::Prop(args)) => cmd_stats_prop(args),
        Command::Stats(StatsCommand::Pagel(args)) => cmd_stats_pagel(args),
    }
}

fn cmd_posterior_table(args: PosteriorTableArgs) -> Result<()> {
    let rows = posterior_table(
        &args.k_grid,
        args.p,
        args.ref_p,
        crate::estimation::DEFAULT_QUAD_PANELS,
    )?;
    let grid = args
        .k_grid
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let cmd = format!(
        "posterior-table --p {} --ref {} --k-grid {grid}{}",
        args.p,
        args.ref_p,
        args.digits
            .map_or_else(String::new, |d| format!(" --digits {d}")),
    );
    with_output(args.out.as_deref(), |out| {
        writeln!(out, "{}", provenance(&cmd, None, &cmd))?;
        write_posterior_table_csv(&rows, args.digits, out)
    })
}

fn cmd_regions(args: RegionsArgs) -> Result<()> {
    let pop_template = if args.eps_x == 0.0 && args.eps_y == 0.0 {
        None
    } else {
        // Only the mistake rates matter for the template (the q axis sweeps
        // pi); pick a pi that makes the pair feasible so validation checks
        // eps_x + eps_y <= 1 and nothing else.
        let pi = (args.eps_x + (1.0 - args.eps_y)) / 2.0;
        Some(PopulationState::new(pi, args.eps_x, args.eps_y)?)
    };
    let grid = region_grid(args.steps, args.steps, pop_template)?;
    let cmd = format!(
        "regions --steps {} --eps-x {} --eps-y {}",
        args.steps, args.eps_x, args.eps_y
    );
    with_output(args.out.as_deref(), |mut out| {
        writeln!(out, "{}", provenance(&cmd, None, &cmd))?;
        grid.write_csv(&mut out)
    })?;
    if let Some(svg_path) = &args.svg {
        let mut svg = BufWriter::new(File::create(svg_path)?);
        grid.write_svg(&mut svg)?;
        svg.flush()?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let data = read_observations_csv(File::open(&args.input)?)?;
    let options = FitOptions {
        phi_init: args.phi_init,
        sigma_init: args.sigma_init,
        ..FitOptions::default()
    };
    let result = fit(&data, options)?;
    with_output(args.out.as_deref(), |out| result.write_json(out))
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let data = read_observations_csv(File::open(&args.input)?)?;
    let fitted = FitResult::read_json(File::open(&args.fit)?)?;
    let predictions = predict_classify(&data, &fitted, args.threshold)?;
    let cmd = format!(
        "predict --input {} --fit {} --threshold {}",
        args.input.display(),
        args.fit.display(),
        args.threshold
    );
    with_output(args.out.as_deref(), |out| {
        writeln!(out, "{}", provenance(&cmd, None, &cmd))?;
        writeln!(out, "row,p_impose_one,predicted,imposed")?;
        for (i, (rec, &pred_one)) in data.iter().zip(&predictions).enumerate() {
            let p_one = crate::mle::impose_probability(
                rec.ca_type,
                fitted.phi_hat,
                rec.pi_belief,
                fitted.sigma_hat,
            )?;
            writeln!(
                out,
                "{i},{p_one},{},{}",
                if pred_one {
                    OptionId::One.code()
                } else {
                    OptionId::Two.code()
                },
                if rec.imposed_one {
                    OptionId::One.code()
                } else {
                    OptionId::Two.code()
                },
            )?;
        }
        Ok(())
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => read_sim_config(File::open(path)?)?,
        None => SimConfig::default(),
    };
    let panel = run_experiment(&cfg)?;
    let rates = crate::sim::intervention_rate_curve(&panel)?;

    fs::create_dir_all(&args.out)?;
    let cfg_json = serde_json::to_string(&cfg)?;
    let line = |name: &str| provenance(&format!("simulate {name}"), Some(cfg.seed), &cfg_json);

    let mut cas = BufWriter::new(File::create(args.out.join("cas.csv"))?);
    writeln!(cas, "{}", line("cas.csv"))?;
    panel.write_cas_csv(None, &mut cas)?;
    cas.flush()?;

    let mut choosers = BufWriter::new(File::create(args.out.join("choosers.csv"))?);
    writeln!(choosers, "{}", line("choosers.csv"))?;
    panel.write_choosers_csv(&mut choosers)?;
    choosers.flush()?;

    let mut rates_out = BufWriter::new(File::create(args.out.join("rates.csv"))?);
    writeln!(rates_out, "{}", line("rates.csv"))?;
    write_rate_curve_csv(&rates, None, &mut rates_out)?;
    rates_out.flush()?;
    Ok(())
}

fn cmd_stats_prop(args: PropArgs) -> Result<()> {
    let result = prop_test_yates(args.a, args.b)?;
    let cmd = format!(
        "stats prop --a {}/{} --b {}/{}",
        args.a.successes, args.a.total, args.b.successes, args.b.total
    );
    with_output(args.out.as_deref(), |out| {
        writeln!(out, "{}", provenance(&cmd, None, &cmd))?;
        writeln!(out, "chi2,p,degenerate")?;
        writeln!(
            out,
            "{},{},{}",
            result.chi2,
            result.p,
            u8::from(result.degenerate)
        )?;
        Ok(())
    })
}

fn cmd_stats_pagel(args: PagelArgs) -> Result<()> {
    let panel = read_rank_panel_csv(File::open(&args.input)?)?;
    let result = pages_l(&panel)?;
    let cmd = format!("stats pagel --input {}", args.input.display());
    with_output(args.out.as_deref(), |out| {
        writeln!(out, "{}", provenance(&cmd, None, &cmd))?;
        writeln!(out, "l,z,chi2,p,tied")?;
        writeln!(
            out,
            "{},{},{},{},{}",
            result.l,
            result.z,
            result.chi2,
            result.p,
            u8::from(result.tied)
        )?;
        Ok(())
    })
}
