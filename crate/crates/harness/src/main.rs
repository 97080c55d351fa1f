use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pgss::analytics::{variance_track, zero_prob_table};
use pgss::simulate::SamplerChoice;
use pgss::ModelSpec;
use pgss_harness::config::{default_output_dir, parse_list, ConfigFile, OUTPUT_DIR_ENV};
use pgss_harness::diagnostics::{run_diagnostics, DiagnosticsSettings};
use pgss_harness::filter::{run_filter, ForecastSettings};
use pgss_harness::output::fmt_f64;
use pgss_harness::series::ObservedSeries;
use pgss_harness::{run_figure1, ExperimentConfig, HarnessError};

/// Gamma-Poisson state-space model for counts: filtering, forecasting,
/// predictive ensembles and zero-count diagnostics.
///
/// Exit codes: 0 success, 1 usage, 2 input data, 3 numeric, 4 diagnostic failure.
#[derive(Parser, Debug)]
#[command(name = "pgss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the predictive ensemble and write summary.csv,
    /// `histogram_t<T>.csv` and manifest.json.
    Figure1(Figure1Args),
    /// Filter an observed series and optionally forecast h steps ahead.
    Filter(FilterArgs),
    /// Run the zero-probability and tower diagnostics; exit 4 on any failure.
    Diagnostics(DiagnosticsArgs),
    /// Exact P[y_t = 0] for t = 1..T as CSV on stdout.
    Zeroprob(TableArgs),
    /// Exact predictive mean and variance for t = 1..T as CSV on stdout.
    Moments(TableArgs),
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Initial shape (default 6.5).
    #[arg(long)]
    a0: Option<f64>,
    /// Initial rate (default 1.2).
    #[arg(long)]
    b0: Option<f64>,
    /// Discount factor in (0, 1) (default 0.75).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// key = value file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; required here or as `seed` in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of horizons T (default 200).
    #[arg(long)]
    horizon: Option<usize>,
    /// Monte Carlo replicates N (default 50000).
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated quantile levels (default 0.1,0.5,0.9).
    #[arg(long)]
    quantiles: Option<String>,
    /// Comma-separated horizons for histogram files (default 50,200).
    #[arg(long)]
    histogram_horizons: Option<String>,
    /// `path` (latent-state paths) or `chain` (chained one-step predictives).
    #[arg(long)]
    sampler: Option<SamplerChoice>,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// CSV with a required `y` column and an optional `t` column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Forecast steps after the last observation.
    #[arg(long, short = 'H')]
    forecast: Option<usize>,
    /// Monte Carlo replicates for forecast quantiles (default 10000).
    #[arg(long)]
    replicates: Option<usize>,
    /// Seed for forecast simulation (default 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quantiles: Option<String>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnosticsArgs {
    /// Horizon for the monotonicity and lower-bound checks (default 200).
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated discount factors (default 0.3,0.5,0.75,0.9).
    #[arg(long)]
    gammas: Option<String>,
    /// Comma-separated initial shapes (default 0.5,1,6.5).
    #[arg(long)]
    a0s: Option<String>,
    #[arg(long)]
    gap_points: Option<usize>,
    #[arg(long)]
    tower_replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
}

fn list<T: std::str::FromStr>(flag: &str, raw: &Option<String>) -> Result<Option<Vec<T>>, HarnessError>
where
    T::Err: std::fmt::Display,
{
    raw.as_deref()
        .map(|r| parse_list(r).map_err(|m| HarnessError::Usage(format!("--{flag}: {m}"))))
        .transpose()
}

fn load(path: &Option<PathBuf>) -> Result<ConfigFile, HarnessError> {
    path.as_deref().map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn model(args: &ModelArgs, file: &ConfigFile) -> Result<ModelSpec, HarnessError> {
    let base = ExperimentConfig::reference(0);
    let a0 = args.a0.or(file.get("a0")?).unwrap_or(base.a0);
    let b0 = args.b0.or(file.get("b0")?).unwrap_or(base.b0);
    let gamma = args.gamma.or(file.get("gamma")?).unwrap_or(base.gamma);
    Ok(ModelSpec::new(a0, b0, gamma)?)
}

const FIGURE1_KEYS: &[&str] = &[
    "a0", "b0", "gamma", "seed", "horizon", "replicates", "quantiles", "histogram-horizons", "sampler", "output-dir",
    "threads",
];
const FILTER_KEYS: &[&str] = &["a0", "b0", "gamma", "forecast", "replicates", "seed", "quantiles", "output-dir"];

fn figure1(args: Figure1Args) -> anyhow::Result<()> {
    let file = load(&args.config)?;
    file.reject_unknown(FIGURE1_KEYS)?;
    let seed = args.seed.or(file.get("seed")?).ok_or_else(|| {
        HarnessError::Usage("figure1 needs --seed (or `seed` in the config file)".into())
    })?;
    let spec = model(&args.model, &file)?;
    let mut c = ExperimentConfig::reference(seed);
    c.a0 = spec.a0();
    c.b0 = spec.b0();
    c.gamma = spec.gamma();
    c.horizon = args.horizon.or(file.get("horizon")?).unwrap_or(c.horizon);
    c.replicates = args.replicates.or(file.get("replicates")?).unwrap_or(c.replicates);
    c.quantiles = list("quantiles", &args.quantiles)?
        .or(file.get_list("quantiles")?)
        .unwrap_or(c.quantiles);
    c.histogram_horizons = list("histogram-horizons", &args.histogram_horizons)?
        .or(file.get_list("histogram-horizons")?)
        .unwrap_or(c.histogram_horizons);
    c.sampler = args.sampler.or(file.get("sampler")?).unwrap_or(c.sampler);
    c.output_dir = args
        .output_dir
        .or(file.get("output-dir")?)
        .unwrap_or_else(default_output_dir);
    c.threads = args.threads.or(file.get("threads")?).unwrap_or(0);

    let (out, paths) = run_figure1(&c)?;
    let mut stdout = std::io::stdout().lock();
    for p in paths {
        writeln!(stdout, "{}", p.display())?;
    }
    writeln!(stdout, "# {} replicates x {} horizons in {:.2} s", c.replicates, c.horizon, out.wall_time_s)?;
    Ok(())
}

fn filter(args: FilterArgs) -> anyhow::Result<()> {
    let file = load(&args.config)?;
    file.reject_unknown(FILTER_KEYS)?;
    let spec = model(&args.model, &file)?;
    let series = ObservedSeries::read_path(&args.input)?;
    let mut settings = ForecastSettings::new(
        args.forecast.or(file.get("forecast")?).unwrap_or(0),
        args.seed.or(file.get("seed")?).unwrap_or(0),
    );
    settings.replicates = args.replicates.or(file.get("replicates")?).unwrap_or(settings.replicates);
    settings.quantiles = list("quantiles", &args.quantiles)?
        .or(file.get_list("quantiles")?)
        .unwrap_or(settings.quantiles);
    let dir = args
        .output_dir
        .or(file.get("output-dir")?)
        .unwrap_or_else(default_output_dir);
    let report = run_filter(&series, &spec, &settings)?;
    for p in report.bundle().write_to(&dir)? {
        println!("{}", p.display());
    }
    println!(
        "# posterior a = {}, b = {}, mean = {}",
        report.posterior.a,
        report.posterior.b,
        report.posterior.a / report.posterior.b
    );
    Ok(())
}

fn diagnostics(args: DiagnosticsArgs) -> anyhow::Result<()> {
    let mut s = DiagnosticsSettings::default();
    if let Some(h) = args.horizon {
        s.horizon = h;
        s.b_check_horizons.retain(|&t| t <= h);
        s.b_check_horizons.push(h);
        s.b_check_horizons.dedup();
    }
    if let Some(g) = list("gammas", &args.gammas)? {
        s.gammas = g;
    }
    if let Some(a) = list("a0s", &args.a0s)? {
        s.a0s = a;
    }
    s.gap_points = args.gap_points.unwrap_or(s.gap_points);
    s.tower_replicates = args.tower_replicates.unwrap_or(s.tower_replicates);
    s.seed = args.seed.unwrap_or(s.seed);
    let report = run_diagnostics(&s)?;
    let json = report.to_json()?;
    match &args.output {
        Some(p) => std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&json)?,
    }
    if !report.all_pass {
        return Err(HarnessError::Diagnostic(report.failures().join("; ")).into());
    }
    Ok(())
}

fn zeroprob(args: TableArgs) -> anyhow::Result<()> {
    let spec = model(&args.model, &ConfigFile::default())?;
    let table = zero_prob_table(&spec, args.horizon)?;
    let mut out = String::from("t,zero_prob,unit_zero_prob,b_prev\n");
    for t in 1..=args.horizon {
        out.push_str(&format!(
            "{t},{},{},{}\n",
            fmt_f64(table.zero_prob(t)),
            fmt_f64(table.unit(t)),
            fmt_f64(table.b_traj[t - 1])
        ));
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn moments(args: TableArgs) -> anyhow::Result<()> {
    let spec = model(&args.model, &ConfigFile::default())?;
    let m = variance_track(&spec, args.horizon)?;
    let mut out = String::from("t,mean,var_y,var_a\n");
    for t in 1..=args.horizon {
        out.push_str(&format!(
            "{t},{},{},{}\n",
            fmt_f64(m.mean_y[t - 1]),
            fmt_f64(m.var_y[t - 1]),
            fmt_f64(m.var_a[t - 1])
        ));
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(h) = err.downcast_ref::<HarnessError>() {
        return h.exit_code() as u8;
    }
    if let Some(p) = err.downcast_ref::<pgss::PgssError>() {
        return HarnessError::Model(p.clone()).exit_code() as u8;
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Figure1(a) => figure1(a),
        Command::Filter(a) => filter(a),
        Command::Diagnostics(a) => diagnostics(a),
        Command::Zeroprob(a) => zeroprob(a),
        Command::Moments(a) => moments(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pgss: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
