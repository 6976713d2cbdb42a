use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eqcorr::commands::{self, OutputSet};
use eqcorr::config::RunConfig;
use eqcorr::market_data::{write_prices, YearMonth};
use eqcorr::models::ModelSpec;
use eqcorr::synthetic::{generate, SyntheticSpec};
use eqcorr::{Error, Result};

#[derive(Parser)]
#[command(name = "eqcorr", version, about = "Equal-correlation portfolio optimization and backtesting")]
struct Cli {
    /// TOML key-value config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the solver's random starting points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Price CSV (`date` column then one column per ticker).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Ticker subset, one per line.
    #[arg(long)]
    universe: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the walk-forward backtest and write ledgers plus report.
    Backtest {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated models, e.g. `A1-SC,C1-USCC`.
        #[arg(long)]
        models: Option<String>,
        /// Inclusive year range `FIRST-LAST`.
        #[arg(long)]
        years: Option<String>,
        /// Stocks selected per month.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Tune one model's hyperparameters on one calendar year.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        #[arg(long)]
        year: i32,
    },
    /// Show the stocks selected for a month.
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// Holding month `YYYY-MM`.
        #[arg(long)]
        month: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Cross-sectional return statistics per date.
    Summary {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Equal-weight vs equal-correlation vs minimum-variance on 3 assets.
    Demo {
        /// Headerless CSV covariance matrix.
        #[arg(long)]
        cov: Option<PathBuf>,
    },
    /// Write the seeded synthetic price panel.
    Synth {
        #[arg(long, default_value = "synthetic_prices.csv")]
        file: String,
    },
}

fn parse_month(s: &str) -> Result<YearMonth> {
    let bad = || Error::Argument(format!("month {s:?} is not YYYY-MM"));
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    Ok(YearMonth::new(year, month))
}

fn parse_years(s: &str) -> Result<(i32, i32)> {
    let bad = || Error::Argument(format!("year range {s:?} is not FIRST-LAST"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn apply_data(cfg: &mut RunConfig, data: DataArgs) {
    if data.data.is_some() {
        cfg.data = data.data;
    }
    if data.universe.is_some() {
        cfg.universe = data.universe;
    }
}

fn write(out: &OutputSet, dir: &Path) -> Result<()> {
    for p in out.write_to(dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(j) = cli.jobs.or(cfg.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Backtest { data, models, years, k } => {
            apply_data(&mut cfg, data);
            if let Some(m) = models {
                cfg.models = m.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            }
            if let Some(y) = years {
                let (a, b) = parse_years(&y)?;
                cfg.first_year = Some(a);
                cfg.last_year = Some(b);
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            let specs = cfg.model_specs()?;
            let bt = cfg.backtest_config()?;
            let (returns, dropped) = commands::load_returns(&cfg)?;
            if !dropped.is_empty() {
                eprintln!("note: dropped tickers with gaps: {}", dropped.join(", "));
            }
            let (ledgers, out) = commands::backtest(&returns, &specs, &bt)?;
            for l in &ledgers {
                let fallbacks = l.records.iter().filter(|r| r.status.label() == "fallback").count();
                if fallbacks > 0 {
                    eprintln!("note: {} held the fallback portfolio in {fallbacks} month(s)", l.model);
                }
            }
            write(&out, &cfg.out)?;
            print!("{}", String::from_utf8_lossy(out.get("report.txt").unwrap_or_default()));
        }
        Command::Tune { data, model, year } => {
            apply_data(&mut cfg, data);
            let spec = ModelSpec::parse(&model)?.with_r_min(cfg.r_min);
            let bt = cfg.backtest_config()?;
            let (returns, _) = commands::load_returns(&cfg)?;
            let (outcome, out) = commands::tune(&returns, &spec, year, &bt)?;
            write(&out, &cfg.out)?;
            match outcome.lambda2 {
                Some(l2) => println!("{} {year}: lambda1 = {}, lambda2 = {l2}", spec.name(), outcome.lambda1),
                None => println!("{} {year}: lambda1 = {}", spec.name(), outcome.lambda1),
            }
        }
        Command::Select { data, month, k } => {
            apply_data(&mut cfg, data);
            if let Some(k) = k {
                cfg.k = k;
            }
            let bt = cfg.backtest_config()?;
            let (returns, _) = commands::load_returns(&cfg)?;
            let (tickers, out) = commands::select(&returns, parse_month(&month)?, &bt)?;
            write(&out, &cfg.out)?;
            println!("{}", tickers.join(" "));
        }
        Command::Summary { data } => {
            apply_data(&mut cfg, data);
            let (returns, _) = commands::load_returns(&cfg)?;
            write(&commands::summary(&returns)?, &cfg.out)?;
        }
        Command::Demo { cov } => {
            let cov = match cov {
                Some(p) => commands::read_covariance(&p)?,
                None => commands::demo_covariance(),
            };
            let (strategies, out) = commands::demo(&cov)?;
            write(&out, &cfg.out)?;
            for s in strategies {
                let fmt = |v: &nalgebra::DVector<f64>| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
                println!("{:<18} w = [{}]  corr = [{}]", s.name, fmt(&s.weights), fmt(&s.corr));
            }
        }
        Command::Synth { file } => {
            let spec = SyntheticSpec {
                seed: cli.seed.unwrap_or(SyntheticSpec::default().seed),
                ..SyntheticSpec::default()
            };
            let mut buf = Vec::new();
            write_prices(&generate(&spec)?, &mut buf)?;
            let mut out = OutputSet::default();
            out.add(file, buf);
            write(&out, &cfg.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
