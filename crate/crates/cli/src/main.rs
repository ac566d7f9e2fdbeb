//! `dpc`: bounds, verification suites, simulation and sweeps for the dirty
//! paper channel with slow fading dirt.

mod csv;
mod report;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpc_core::sim::{self, SchemeConfig, Slot};
use dpc_core::verify::{self, Suite, VerifyOptions};
use dpc_core::bounds_two::{optimal_precoded_fraction, TwoFadingInstance};
use dpc_core::{ChannelParams, FadingSet, StrongFadingVariant};

use crate::csv::{fmt_num, CsvWriter};
use crate::report::{Row, TwoCell, Units};
use crate::sweep::{Param, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "dpc", version, about = "Capacity bounds for the dirty paper channel with slow fading dirt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Report rates in nats instead of bits.
    #[arg(long, global = true)]
    nats: bool,

    /// Write output to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-value bounds and their gap.
    Bounds2 {
        #[arg(long)]
        power: f64,
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        a2: f64,
        /// Also report the two-codeword rate at this noise-codeword power fraction.
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Strong fading bounds for an arbitrary fading set.
    #[command(name = "boundsM", alias = "boundsm")]
    BoundsM {
        #[arg(long)]
        power: f64,
        /// Comma-separated, strictly increasing amplitudes.
        #[arg(long, value_delimiter = ',', required = true)]
        fading: Vec<f64>,
        /// Strong fading predicate: amplitude-sum or power-sum.
        #[arg(long, default_value = "amplitude-sum")]
        variant: String,
        /// Sort and drop repeated amplitudes instead of rejecting them.
        #[arg(long)]
        dedup: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo rate estimate of a transmission scheme.
    Simulate {
        #[arg(long)]
        power: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        fading: Vec<f64>,
        /// tin, costa-matched, costa-average, costa-timeshare or two-codeword.
        #[arg(long, default_value = "tin")]
        scheme: String,
        /// Precoding target for costa-matched.
        #[arg(long)]
        target: Option<f64>,
        /// Noise-codeword power fraction for two-codeword; defaults to the
        /// optimum on two-value sets.
        #[arg(long)]
        beta: Option<f64>,
        /// Slots for costa-timeshare as `target:fraction,...`.
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        dedup: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate bounds over a grid described in a sweep file.
    Sweep {
        /// Sweep specification file.
        spec: PathBuf,
        /// Strong fading predicate for fading-set sweeps.
        #[arg(long, default_value = "amplitude-sum")]
        variant: String,
        #[command(flatten)]
        output: Output,
    },
    /// Run an invariant suite, or `all`.
    Verify {
        suite: String,
        /// Points per grid axis.
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Largest fading set size for the chain suites.
        #[arg(long = "M", default_value_t = 4)]
        max_m: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Verify,
}

impl From<dpc_core::Error> for Failure {
    fn from(e: dpc_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_csv(output: &Output, header: Row, rows: &[Row]) -> CmdResult {
    let mut w = CsvWriter::new(sink(output.out.as_deref())?);
    w.row(&header)?;
    for r in rows {
        w.row(r)?;
    }
    w.flush()?;
    Ok(())
}

fn units(output: &Output) -> Units {
    if output.nats {
        Units::Nats
    } else {
        Units::Bits
    }
}

fn fading_set(values: Vec<f64>, dedup: bool) -> dpc_core::Result<FadingSet> {
    if dedup {
        FadingSet::new_dedup(values)
    } else {
        FadingSet::new(values)
    }
}

fn parse_variant(s: &str) -> Result<StrongFadingVariant, Failure> {
    s.parse().map_err(|e: dpc_core::Error| usage(e.to_string()))
}

fn all_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn cmd_bounds2(power: f64, a1: f64, a2: f64, beta: Option<f64>, output: &Output) -> CmdResult {
    let inst = TwoFadingInstance::new(power, a1, a2)?;
    let mut select = all_names(&report::BOUNDS2_DEFAULT);
    if beta.is_some() {
        select.push("inner2_rate".into());
    }
    let cell = TwoCell { inst, beta, gamma: None };
    let u = units(output);
    let rows = report::bounds2_rows(&cell, &select, u)?;
    write_csv(output, report::bounds2_header(u), &rows)
}

fn cmd_bounds_m(power: f64, fading: Vec<f64>, variant: &str, dedup: bool, output: &Output) -> CmdResult {
    let variant = parse_variant(variant)?;
    let params = ChannelParams::new(power, fading_set(fading, dedup)?)?;
    let u = units(output);
    let rows = report::boundsm_rows(&params, variant, &all_names(&report::BOUNDSM_DEFAULT), u)?;
    write_csv(output, report::boundsm_header(u), &rows)
}

fn parse_schedule(items: &[String]) -> Result<Vec<Slot>, Failure> {
    items
        .iter()
        .map(|item| {
            let (t, f) = item
                .split_once(':')
                .ok_or_else(|| usage(format!("schedule slot `{item}` is not `target:fraction`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("schedule slot `{item}` is not numeric")))
            };
            Ok(Slot {
                target: parse(t)?,
                fraction: parse(f)?,
            })
        })
        .collect()
}

fn scheme_config(
    name: &str,
    params: &ChannelParams,
    target: Option<f64>,
    beta: Option<f64>,
    schedule: &[String],
) -> Result<SchemeConfig, Failure> {
    Ok(match name {
        "tin" => SchemeConfig::Tin,
        "costa-matched" => {
            SchemeConfig::CostaMatched(target.ok_or_else(|| usage("costa-matched needs --target"))?)
        }
        "costa-average" => SchemeConfig::CostaAverage,
        "costa-timeshare" => SchemeConfig::CostaTimeShare(parse_schedule(schedule)?),
        "two-codeword" => {
            let beta = match beta {
                Some(b) => b,
                None => {
                    let inst = TwoFadingInstance::from_channel(params)
                        .map_err(|_| usage("two-codeword needs --beta unless the fading set has two values"))?;
                    1.0 - optimal_precoded_fraction(&inst)
                }
            };
            SchemeConfig::TwoCodeword(beta)
        }
        other => return Err(usage(format!("unknown scheme `{other}`"))),
    })
}

fn scheme_label(cfg: &SchemeConfig) -> String {
    match cfg {
        SchemeConfig::CostaMatched(a) => format!("costa-matched({})", fmt_num(*a)),
        SchemeConfig::TwoCodeword(b) => format!("two-codeword({})", fmt_num(*b)),
        SchemeConfig::CostaTimeShare(slots) if !slots.is_empty() => {
            let parts: Vec<String> = slots
                .iter()
                .map(|s| format!("{}:{}", fmt_num(s.target), fmt_num(s.fraction)))
                .collect();
            format!("costa-timeshare({})", parts.join(";"))
        }
        other => other.to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    power: f64,
    fading: Vec<f64>,
    scheme: &str,
    target: Option<f64>,
    beta: Option<f64>,
    schedule: &[String],
    samples: usize,
    seed: u64,
    dedup: bool,
    output: &Output,
) -> CmdResult {
    let params = ChannelParams::new(power, fading_set(fading, dedup)?)?;
    let cfg = scheme_config(scheme, &params, target, beta, schedule)?;
    let est = sim::simulate(&params, &cfg, samples, seed)?;
    let u = units(output);
    let label = scheme_label(&cfg);
    let tail = [est.samples.to_string(), est.seed.to_string()];
    let mut rows: Vec<Row> = est
        .per_receiver
        .iter()
        .zip(&est.stderr)
        .enumerate()
        .map(|(j, (r, se))| {
            let mut row = vec![label.clone(), (j + 1).to_string(), fmt_num(u.rate(*r)), fmt_num(u.rate(*se))];
            row.extend(tail.iter().cloned());
            row
        })
        .collect();
    let mut compound = vec![
        label,
        "compound".into(),
        fmt_num(u.rate(est.compound_rate)),
        fmt_num(u.rate(est.compound_stderr)),
    ];
    compound.extend(tail);
    rows.push(compound);
    write_csv(output, report::simulate_header(u), &rows)
}

#[cfg(feature = "parallel")]
fn map_cells<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

fn scalar(cell: &std::collections::BTreeMap<Param, f64>, p: Param) -> Result<f64, Failure> {
    cell.get(&p)
        .copied()
        .ok_or_else(|| usage(format!("sweep needs axis.{0} or fixed.{0}", p.name())))
}

fn check_select(select: &[String], allowed: &[&[&str]]) -> CmdResult {
    for s in select {
        if !allowed.iter().any(|set| set.contains(&s.as_str())) {
            return Err(usage(format!("unknown selection `{s}`")));
        }
    }
    Ok(())
}

fn cmd_sweep(spec_path: &Path, variant: &str, output: &Output) -> CmdResult {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec: SweepSpec = sweep::parse(&text).map_err(|e| usage(format!("{}: {e}", spec_path.display())))?;
    let u = units(output);
    let cells = spec.cells();
    let fading_mode = spec.mentions(Param::Fading) || spec.mentions(Param::M);

    let (header, per_cell) = if fading_mode {
        let variant = parse_variant(variant)?;
        for p in [Param::A1, Param::A2, Param::Beta, Param::Gamma] {
            if spec.mentions(p) {
                return Err(usage(format!("`{}` does not apply to a fading-set sweep", p.name())));
            }
        }
        if spec.mentions(Param::Fading) && spec.mentions(Param::M) {
            return Err(usage("give either fading or M, not both"));
        }
        let select = if spec.select.is_empty() {
            all_names(&report::BOUNDSM_DEFAULT)
        } else {
            spec.select.clone()
        };
        check_select(&select, &[&report::BOUNDSM_DEFAULT])?;
        let list = spec.fading_list().map(<[f64]>::to_vec);
        let rows = map_cells(&cells, |cell| -> Result<Vec<Row>, Failure> {
            let power = scalar(cell, Param::Power)?;
            let fading = match &list {
                Some(v) => FadingSet::new(v.clone())?,
                None => {
                    let m = scalar(cell, Param::M)?;
                    if m < 1.0 || m.fract() != 0.0 {
                        return Err(usage(format!("M must be a positive integer, got {m}")));
                    }
                    FadingSet::geometric_chain(power, m as usize)?
                }
            };
            let params = ChannelParams::new(power, fading)?;
            Ok(report::boundsm_rows(&params, variant, &select, u)?)
        });
        (report::boundsm_header(u), rows)
    } else {
        let select = if spec.select.is_empty() {
            all_names(&report::BOUNDS2_DEFAULT)
        } else {
            spec.select.clone()
        };
        check_select(&select, &[&report::BOUNDS2_DEFAULT, &report::BOUNDS2_EXTRA])?;
        let rows = map_cells(&cells, |cell| -> Result<Vec<Row>, Failure> {
            let inst = TwoFadingInstance::new(
                scalar(cell, Param::Power)?,
                scalar(cell, Param::A1)?,
                scalar(cell, Param::A2)?,
            )?;
            let two = TwoCell {
                inst,
                beta: cell.get(&Param::Beta).copied(),
                gamma: cell.get(&Param::Gamma).copied(),
            };
            Ok(report::bounds2_rows(&two, &select, u)?)
        });
        (report::bounds2_header(u), rows)
    };

    let mut w = CsvWriter::new(sink(output.out.as_deref())?);
    w.row(&header)?;
    for rows in per_cell {
        for r in rows? {
            w.row(&r)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_verify(suite: &str, opts: VerifyOptions, out: Option<&Path>) -> CmdResult {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse().map_err(|e: dpc_core::Error| usage(e.to_string()))?]
    };
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(usage("tolerance must be finite and >= 0"));
    }
    let mut w = sink(out)?;
    let mut all_passed = true;
    for s in suites {
        let report = verify::run_suite(s, &opts)?;
        for c in &report.checks {
            writeln!(
                w,
                "{} {}: {} (cases={}, worst_slack={})",
                if c.passed { "PASS" } else { "FAIL" },
                s,
                c.name,
                c.cases,
                fmt_num(c.worst_slack)
            )?;
            for d in &c.detail {
                writeln!(w, "    {d}")?;
            }
        }
        let passed = report.checks.iter().filter(|c| c.passed).count();
        writeln!(w, "{s}: {passed}/{} checks passed", report.checks.len())?;
        all_passed &= report.passed();
    }
    w.flush()?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

/// Honor `DPC_THREADS` by sizing the global worker pool.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("DPC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("DPC_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot size the thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Bounds2 { power, a1, a2, beta, output } => cmd_bounds2(power, a1, a2, beta, &output),
        Command::BoundsM {
            power,
            fading,
            variant,
            dedup,
            output,
        } => cmd_bounds_m(power, fading, &variant, dedup, &output),
        Command::Simulate {
            power,
            fading,
            scheme,
            target,
            beta,
            schedule,
            samples,
            seed,
            dedup,
            output,
        } => cmd_simulate(power, fading, &scheme, target, beta, &schedule, samples, seed, dedup, &output),
        Command::Sweep { spec, variant, output } => cmd_sweep(&spec, &variant, &output),
        Command::Verify {
            suite,
            grid,
            tolerance,
            max_m,
            seed,
            out,
        } => cmd_verify(
            &suite,
            VerifyOptions {
                grid,
                tolerance,
                max_m,
                seed,
            },
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("dpc: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("dpc: {msg}");
            ExitCode::from(2)
        }
    }
}
