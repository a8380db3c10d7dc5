use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use afdm_core::sim::fer::read_fer_csv;
use afdm_core::sim::gain::{code_table, gain_csv, pep_instance_report};
use afdm_core::sim::report::{all_gaps, curve_svg, gaps_csv, group_series, series_csv};
use afdm_core::sim::{run_coding_gain, run_fer_to_csv, with_workers, GainSweep, SimConfig, WORKERS_ENV};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

/// AFDM simulation lab.
#[derive(Parser, Debug)]
#[command(name = "afdm", version, about)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frame error rate campaign over an E_b/N0 grid.
    Fer(FerArgs),
    /// Average coding gain sweep over (P, d_E2, l_max, alpha_max).
    CodingGain(GainArgs),
    /// Exact PEP, its bounds and the coding gain of one random instance.
    PepBound(PepArgs),
    /// Free distances of the registry codes.
    Codes,
    /// Series, dB gaps and a curve sheet from FER CSV files.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct FerArgs {
    /// key = value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override as key=value; repeatable, applied after the file.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Append-only CSV; existing points of the same configuration are skipped.
    #[arg(long, short)]
    out: PathBuf,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct GainArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Path counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    paths: Vec<usize>,
    /// Squared Euclidean distances, comma separated multiples of 4.
    #[arg(long, value_delimiter = ',', default_value = "4,8,12,16,20,24,28,32,36,40,44,48,52,56,60,64")]
    d_e2: Vec<usize>,
    /// l_max:alpha_max pairs, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1:1,2:2,3:3")]
    geometry: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PepArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    paths: usize,
    #[arg(long, default_value_t = 3)]
    l_max: usize,
    #[arg(long, default_value_t = 3)]
    alpha_max: usize,
    #[arg(long, default_value_t = 16)]
    d_e2: usize,
    /// 10·log10(1/N0).
    #[arg(long, default_value_t = 10.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// FER CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    target_fer: f64,
    /// Directory for series.csv, gaps.csv and curves.svg.
    #[arg(long, short)]
    out_dir: PathBuf,
    #[arg(long, default_value = "FER vs Eb/N0")]
    title: String,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.workers == Some(0) {
        bail!("--workers must be positive");
    }
    match cli.command {
        Command::Fer(args) => with_workers(cli.workers, || fer(args))?,
        Command::CodingGain(args) => with_workers(cli.workers, || coding_gain(args))?,
        Command::PepBound(args) => pep_bound(args),
        Command::Codes => codes(),
        Command::Report(args) => report(args),
    }
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<SimConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SimConfig::from_kv_text(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SimConfig::default(),
    };
    for kv in overrides {
        cfg.apply_override(kv).with_context(|| format!("override {kv:?}"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fer(args: FerArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    if args.dry_run {
        print!("{cfg}");
        println!("# fingerprint = {}", cfg.fingerprint());
        return Ok(());
    }
    info!("campaign {} ({})", cfg.series_label(), cfg.fingerprint());
    let records = run_fer_to_csv(&cfg, &args.out, |r| {
        info!(
            "{} Eb/N0 = {} dB: {} / {} frame errors, FER {:.3e} ({:.1} s)",
            r.series, r.snr_db, r.frame_errors, r.frames, r.fer, r.wall_seconds
        )
    })?;
    let mut out = std::io::stdout().lock();
    for r in &records {
        writeln!(out, "{},{},{},{},{:e}", r.series, r.snr_db, r.frames, r.frame_errors, r.fer)?;
    }
    Ok(())
}

fn parse_geometry(s: &str) -> Result<(usize, usize)> {
    let (l, a) = s.split_once(':').with_context(|| format!("geometry {s:?} is not l_max:alpha_max"))?;
    Ok((l.trim().parse()?, a.trim().parse()?))
}

fn coding_gain(args: GainArgs) -> Result<()> {
    let sweep = GainSweep {
        n: args.n,
        p_values: args.paths,
        d_e2_values: args.d_e2,
        geometries: args.geometry.iter().map(|g| parse_geometry(g)).collect::<Result<_>>()?,
        trials: args.trials,
        seed: args.seed,
    };
    sweep.validate()?;
    info!("{} cells x {} trials", sweep.cells(), sweep.trials);
    let csv = gain_csv(&run_coding_gain(&sweep)?);
    write_or_print(args.out.as_deref(), &csv)
}

fn pep_bound(args: PepArgs) -> Result<()> {
    let r = pep_instance_report(args.n, args.paths, args.l_max, args.alpha_max, args.d_e2, args.snr_db, args.seed)?;
    print!("{}", r.to_kv_text());
    println!("# channel\n{}", r.channel_record.trim_end());
    Ok(())
}

fn codes() -> Result<()> {
    println!("# schema=afdm-lab/codes/v1");
    println!("name,generators_octal,memory,d_free,d_min_E2");
    for r in code_table()? {
        println!("{},{},{},{},{}", r.name, r.generators, r.memory, r.d_free, r.d_min_e2);
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut records = Vec::new();
    for p in &args.inputs {
        let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        records.extend(read_fer_csv(f).with_context(|| format!("reading {}", p.display()))?);
    }
    let series = group_series(&records)?;
    let gaps = all_gaps(&series, args.target_fer);
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("series.csv"), series_csv(&series))?;
    fs::write(args.out_dir.join("gaps.csv"), gaps_csv(&gaps))?;
    fs::write(args.out_dir.join("curves.svg"), curve_svg(&series, &args.title))?;
    print!("{}", gaps_csv(&gaps));
    Ok(())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
