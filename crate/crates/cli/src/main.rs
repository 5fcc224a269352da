use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use v2g_sfr::metrics::compare_strategies;
use v2g_sfr::scenario::load_config_with_base;
use v2g_sfr::{export, run, run_with_workers, sweep, Preset, RunRecord, ScenarioConfig, Strategy};

#[derive(Parser)]
#[command(name = "v2g-sfr", version, about = "Two-area frequency regulation with EV fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print its metrics.
    Run(RunArgs),
    /// Simulate one scenario per value of a config axis.
    Sweep(SweepArgs),
    /// Simulate paired strategies on the same seed and tabulate them.
    Compare(CompareArgs),
    /// Parse and check a scenario file without simulating.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; missing fields come from the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset, default_value = "paper")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for exported files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for per-station work (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Dotted config path, e.g. `policy.mu` or `policy.distribution`.
    #[arg(long)]
    axis: String,
    /// One value per run; repeat the flag for more.
    #[arg(long = "value", required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Strategies to run; the W/O V2G baseline is always included.
    #[arg(long = "strategy", value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_parser = parse_preset, default_value = "paper")]
    preset: Preset,
    /// Print the fully resolved configuration.
    #[arg(long)]
    print: bool,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: v2g_sfr::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: v2g_sfr::Error| e.to_string())
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn resolve(config: Option<&Path>, preset: Preset) -> CliResult<ScenarioConfig> {
    let base = ScenarioConfig::preset(preset);
    Ok(match config {
        Some(path) => load_config_with_base(path, &base)?,
        None => base,
    })
}

fn build(common: &Common, strategy: Option<Strategy>) -> CliResult<ScenarioConfig> {
    let mut cfg = resolve(common.config.as_deref(), common.preset)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(s) = strategy {
        cfg.strategy = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ScenarioConfig, workers: Option<usize>) -> CliResult<RunRecord> {
    Ok(match workers {
        Some(n) => run_with_workers(cfg, n)?,
        None => run(cfg)?,
    })
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let cfg = build(&args.common, args.strategy)?;
    let rec = execute(&cfg, args.common.workers)?;
    print!("{}", rec.summary.to_text());
    if let Some(dir) = &args.common.out {
        export(&rec, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let cfg = build(&args.common, args.strategy)?;
    let records = sweep(&cfg, &args.axis, &args.values)?;
    println!("{:<28}{:>14}{:>14}{:>16}", args.axis, "ACE rms MW", "df rms Hz", "SOC dev mean pu");
    for (i, (value, rec)) in records.iter().enumerate() {
        let s = &rec.summary;
        println!("{value:<28}{:>14.4}{:>14.6}{:>16.6}", s.ace.rms, s.freq.rms, s.soc_dev.fleet_mean());
        if let Some(dir) = &args.common.out {
            export(rec, &dir.join(format!("{i:02}_{}", slug(value))))?;
        }
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let cfg = build(&args.common, None)?;
    let mut strategies = vec![Strategy::WoV2g];
    let requested = if args.strategies.is_empty() { vec![Strategy::Cs1, Strategy::Cs2] } else { args.strategies };
    for s in requested {
        if !strategies.contains(&s) {
            strategies.push(s);
        }
    }
    let mut runs = Vec::new();
    for s in &strategies {
        let mut c = cfg.clone();
        c.strategy = *s;
        let rec = execute(&c, args.common.workers)?;
        if let Some(dir) = &args.common.out {
            export(&rec, &dir.join(slug(&s.label().to_ascii_lowercase())))?;
        }
        runs.push((s.label().to_string(), rec.summary));
    }
    let table = compare_strategies(&runs)?.render();
    print!("{table}");
    if let Some(dir) = &args.common.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.txt"), &table)?;
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> CliResult<()> {
    let cfg = resolve(Some(&args.config), args.preset)?;
    if args.print {
        print!("{}", cfg.to_toml_string()?);
    } else {
        println!(
            "{}: ok ({} stations, {} EVs, strategy {})",
            args.config.display(),
            cfg.fleet.n_stations(),
            cfg.fleet.n_stations() * cfg.fleet.evs_per_station(),
            cfg.strategy.label()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
