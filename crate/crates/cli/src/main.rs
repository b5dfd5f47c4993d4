//! Command-line front end: pattern design, bank verification, correlation
//! estimation from recorded samples, Monte-Carlo simulation, and NMSE
//! sweeps. Numeric outputs are plain CSV; banks use the ASCII exchange
//! format of the library.

use clap::{Args, Parser, Subcommand, ValueEnum};
use coset_spectrum::design::{self, DesignReport};
use coset_spectrum::estimator::{compress, estimate_group, GroupCorrelations, SensorBlockSeries};
use coset_spectrum::io;
use coset_spectrum::sim::{run_once, run_sweep, SimConfig, SweepGrid, SweepOutcome};
use coset_spectrum::system::{reconstruct, PowerSpectrum, SystemMatrix};
use coset_spectrum::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "coset-spectrum",
    version,
    about = "Coset sampling pattern design and compressive power spectrum estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a bank of coset patterns covering all circular distances
    Design(DesignArgs),
    /// Verify a bank file: Golomb property, overlap, coverage, bounds
    Verify(VerifyArgs),
    /// Estimate correlations and a spectrum from recorded Nyquist samples
    Estimate(EstimateArgs),
    /// Run the Monte-Carlo study at the configured operating point
    Simulate(SimulateArgs),
    /// Sweep NMSE over a grid of M, P, L values
    Sweep(SweepArgs),
    /// Check the bundled certified pattern table (or a bank file)
    Table2Check(Table2Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    M2,
    Greedy,
}

#[derive(Args)]
struct DesignArgs {
    /// Period (number of cosets)
    #[arg(long)]
    n: usize,
    /// Marks per pattern
    #[arg(long)]
    m: usize,
    /// Force an exact number of patterns instead of minimizing
    #[arg(long)]
    z: Option<usize>,
    #[arg(long, value_enum, default_value = "greedy")]
    strategy: Strategy,
    /// Write the bank file here (stdout otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Bank file to verify
    #[arg(long)]
    bank: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Bank file defining the sampling patterns
    #[arg(long)]
    bank: PathBuf,
    /// CSV file or directory of CSV files with sensor_id,sample_index,real,imag rows
    #[arg(long)]
    samples: PathBuf,
    /// Blocks per sensor (default: as many as the shortest stream allows)
    #[arg(long)]
    l: Option<usize>,
    /// Sensors per group (default: sensor count divided by pattern count)
    #[arg(long)]
    p: Option<usize>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Grid axes, e.g. `m=3,7,11` or `l=64,256`; repeatable
    #[arg(long)]
    grid: Vec<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    z: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct Table2Args {
    /// Check this bank file instead of the bundled table
    #[arg(long)]
    bank: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Err(code) = configure_threads_from_env() {
        return code;
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Table2Check(args) => cmd_table2_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ERR:{}: {e}", error_code(&e));
            ExitCode::from(1)
        }
    }
}

fn configure_threads_from_env() -> std::result::Result<(), ExitCode> {
    match std::env::var("COSET_SPECTRUM_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                coset_spectrum::configure_threads(t);
                Ok(())
            }
            _ => {
                eprintln!("ERR:CONFIG: COSET_SPECTRUM_THREADS must be a positive integer, got `{v}`");
                Err(ExitCode::from(1))
            }
        },
        Err(_) => Ok(()),
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "PARSE",
        Error::Io(_) => "IO",
        Error::InvalidConfig(_) => "CONFIG",
        Error::RankDeficient(_) => "COVERAGE",
        Error::DimensionMismatch(_) | Error::EmptyInput(_) => "DATA",
        _ => "INVALID",
    }
}

// ---- design / verify --------------------------------------------------

fn cmd_design(args: DesignArgs) -> Result<ExitCode> {
    let report = match (args.z, args.strategy) {
        (Some(z), _) => design::design_fixed_z(args.n, args.m, z)?,
        (None, Strategy::M2) => {
            if args.m != 2 {
                return Err(Error::InvalidConfig(format!(
                    "strategy m2 requires --m 2, got {}",
                    args.m
                )));
            }
            design::design_m2(args.n)?
        }
        (None, Strategy::Greedy) => design::design_greedy(args.n, args.m)?,
    };
    let text = io::format_bank(&report.bank);
    match &args.out {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    print!("{}", render_report(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let bank = io::parse_bank(&std::fs::read_to_string(&args.bank)?)?;
    let report = design::verify_bank(&bank)?;
    print!("{}", render_report(&report));
    if report.covered {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "ERR:COVERAGE: missing distances {}",
            join_usize(&report.missing)
        );
        Ok(ExitCode::from(1))
    }
}

fn render_report(report: &DesignReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "achieved_z={} lower_bound={}",
        report.achieved_z, report.lower_bound
    )
    .unwrap();
    let golomb = report.per_pattern_golomb.iter().filter(|&&g| g).count();
    writeln!(
        out,
        "golomb_patterns={golomb}/{}",
        report.per_pattern_golomb.len()
    )
    .unwrap();
    match report.non_overlapping {
        Some(v) => writeln!(out, "non_overlapping={v}").unwrap(),
        None => writeln!(out, "non_overlapping=n/a").unwrap(),
    }
    writeln!(out, "covered={}", report.covered).unwrap();
    if !report.missing.is_empty() {
        writeln!(out, "missing={}", join_usize(&report.missing)).unwrap();
    }
    out
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// ---- estimate ---------------------------------------------------------

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    let bank = io::parse_bank(&std::fs::read_to_string(&args.bank)?)?;
    let sensors = read_samples(&args.samples)?;
    if sensors.is_empty() {
        return Err(Error::EmptyInput("no sensor samples found"));
    }
    let z = bank.num_patterns();
    let p = match args.p {
        Some(p) if p > 0 => p,
        Some(_) => return Err(Error::InvalidConfig("--p must be positive".into())),
        None => {
            if sensors.len() % z != 0 {
                return Err(Error::InvalidConfig(format!(
                    "{} sensors do not divide into {z} groups; pass --p",
                    sensors.len()
                )));
            }
            sensors.len() / z
        }
    };
    if sensors.len() != z * p {
        return Err(Error::DimensionMismatch(format!(
            "expected {} sensors ({z} groups of {p}), found {}",
            z * p,
            sensors.len()
        )));
    }
    let n = bank.period_n();
    let shortest = sensors.values().map(Vec::len).min().unwrap();
    let blocks = match args.l {
        Some(l) => l,
        None => shortest / n,
    };

    // Sensor ids map to groups in sorted order: the first P ids form
    // group 0, the next P group 1, and so on.
    let streams: Vec<&Vec<num_complex::Complex64>> = sensors.values().collect();
    let mut groups: Vec<GroupCorrelations> = Vec::with_capacity(z);
    for (zi, pattern) in bank.patterns().iter().enumerate() {
        let mut series = Vec::with_capacity(p);
        for pi in 0..p {
            let stream = streams[zi * p + pi];
            if stream.len() < blocks * n {
                return Err(Error::DimensionMismatch(format!(
                    "sensor stream of {} samples cannot fill {blocks} blocks of {n}",
                    stream.len()
                )));
            }
            let sensor =
                SensorBlockSeries::new(zi, pi, n, blocks, stream[..blocks * n].to_vec())?;
            series.push(compress(&sensor, pattern)?);
        }
        groups.push(estimate_group(&series)?);
    }

    let system = SystemMatrix::build(&bank);
    let (rx, px) = reconstruct(&system, &groups)?;

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("group_correlations.csv"),
        format_group_correlations(&groups),
    )?;
    std::fs::write(
        args.out.join("autocorrelation.csv"),
        io::format_complex_csv("lag", rx.values()),
    )?;
    std::fs::write(
        args.out.join("spectrum.csv"),
        io::format_complex_csv("bin", px.values()),
    )?;
    println!(
        "estimated {} groups x {p} sensors, {blocks} blocks of {n}; wrote {}",
        z,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn read_samples(path: &Path) -> Result<BTreeMap<usize, Vec<num_complex::Complex64>>> {
    let mut merged = BTreeMap::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        for file in files {
            let part = io::parse_samples_csv(&std::fs::read_to_string(&file)?)?;
            for (sensor, mut samples) in part {
                merged
                    .entry(sensor)
                    .or_insert_with(Vec::new)
                    .append(&mut samples);
            }
        }
        Ok(merged)
    } else {
        io::parse_samples_csv(&std::fs::read_to_string(path)?)
    }
}

fn format_group_correlations(groups: &[GroupCorrelations]) -> String {
    let mut out = String::from("group,kind,index,real,imag\n");
    for (z, g) in groups.iter().enumerate() {
        for (i, v) in g.zero_lag().iter().enumerate() {
            writeln!(out, "{z},zero_lag,{i},{v},0").unwrap();
        }
        for (i, v) in g.plus_zero_lag().iter().enumerate() {
            writeln!(out, "{z},plus_zero_lag,{i},{},{}", v.re, v.im).unwrap();
        }
        for (i, v) in g.minus_lag_one().iter().enumerate() {
            writeln!(out, "{z},minus_lag_one,{i},{},{}", v.re, v.im).unwrap();
        }
    }
    out
}

// ---- simulate / sweep -------------------------------------------------

fn load_config(path: &Path, overrides: &Overrides) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg: SimConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if let Some(n) = overrides.n {
        cfg.n = n;
    }
    if let Some(m) = overrides.m {
        cfg.m = m;
    }
    if let Some(z) = overrides.z {
        cfg.z = z;
    }
    if let Some(p) = overrides.p {
        cfg.p = p;
    }
    if let Some(l) = overrides.l {
        cfg.l = l;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = overrides.runs {
        cfg.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_nmse_csv(out_dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    let mut csv = String::from("M,P,L,runs,nmse\n");
    for r in &outcome.results {
        writeln!(csv, "{},{},{},{},{}", r.m, r.p, r.l, r.runs, r.nmse).unwrap();
    }
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("nmse_results.csv"), csv)?;
    Ok(())
}

fn write_spectrum_csv(out_dir: &Path, name: &str, px: &PowerSpectrum) -> Result<()> {
    std::fs::write(out_dir.join(name), io::format_complex_csv("bin", px.values()))?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let outcome = run_sweep(&cfg, &SweepGrid::default())?;
    write_nmse_csv(&args.out, &outcome)?;
    // spectra of the first run, for plotting
    let bank = cfg.bank()?;
    let first = run_once(&cfg, &bank, 0)?;
    write_spectrum_csv(&args.out, "spectrum_run0_compressed.csv", &first.compressed)?;
    write_spectrum_csv(&args.out, "spectrum_run0_baseline.csv", &first.baseline)?;
    for r in &outcome.results {
        println!("M={} P={} L={} runs={} nmse={}", r.m, r.p, r.l, r.runs, r.nmse);
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_grid(specs: &[String]) -> Result<SweepGrid> {
    let mut grid = SweepGrid::default();
    for spec in specs {
        for part in spec.split_whitespace() {
            let (axis, values) = part.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("grid spec `{part}` is not axis=v1,v2,..."))
            })?;
            let parsed: Vec<usize> = values
                .split(',')
                .map(|v| {
                    v.trim().parse().map_err(|_| {
                        Error::InvalidConfig(format!("grid value `{v}` is not an integer"))
                    })
                })
                .collect::<Result<_>>()?;
            let slot = match axis.trim().to_ascii_lowercase().as_str() {
                "m" => &mut grid.m,
                "p" => &mut grid.p,
                "l" => &mut grid.l,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown grid axis `{other}` (expected m, p, or l)"
                    )))
                }
            };
            slot.extend(parsed);
        }
    }
    Ok(grid)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config, &args.overrides)?;
    let grid = parse_grid(&args.grid)?;
    let outcome = run_sweep(&cfg, &grid)?;
    for (m, reason) in &outcome.skipped {
        eprintln!("warning: skipped M={m}: {reason}");
    }
    write_nmse_csv(&args.out, &outcome)?;
    for r in &outcome.results {
        println!("M={} P={} L={} runs={} nmse={}", r.m, r.p, r.l, r.runs, r.nmse);
    }
    Ok(ExitCode::SUCCESS)
}

// ---- certified table check --------------------------------------------

fn cmd_table2_check(args: Table2Args) -> Result<ExitCode> {
    let banks = match &args.bank {
        Some(path) => io::parse_banks(&std::fs::read_to_string(path)?)?,
        None => io::parse_banks(design::table2_data())?,
    };
    for bank in &banks {
        let n = bank.period_n();
        let z = bank.num_patterns();
        let report = design::verify_bank(bank)?;
        let expected_z = (n - 1).div_ceil(6);
        let golomb_ok = report.per_pattern_golomb.iter().all(|&g| g);
        let overlap_ok = report.non_overlapping.unwrap_or(true);
        if !report.covered {
            eprintln!(
                "ERR:COVERAGE: N={n} Z={z}: missing distances {}",
                join_usize(&report.missing)
            );
            return Ok(ExitCode::from(1));
        }
        if !golomb_ok {
            let bad = report.per_pattern_golomb.iter().position(|&g| !g).unwrap();
            eprintln!("ERR:INVALID: N={n} Z={z}: pattern {bad} is not a circular Golomb ruler");
            return Ok(ExitCode::from(1));
        }
        if !overlap_ok {
            eprintln!("ERR:INVALID: N={n} Z={z}: patterns share nonzero distances");
            return Ok(ExitCode::from(1));
        }
        if z != expected_z {
            eprintln!("ERR:INVALID: N={n}: Z={z} but ceil((N-1)/6) = {expected_z}");
            return Ok(ExitCode::from(1));
        }
        println!("N={n} Z={z} ok");
    }
    println!("{} banks verified", banks.len());
    Ok(ExitCode::SUCCESS)
}
