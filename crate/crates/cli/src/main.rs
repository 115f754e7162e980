//! `mmdim`: build, check and measure stacked horseshoe systems.
//!
//! Exit codes: 0 success, 1 a check or verification failed, 2 bad usage,
//! bad input or an unmaterialized block.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use mmdim::constructions::{BuildOptions, Half, StackedSystem, System, DEFAULT_MAX_LEGS};
use mmdim::estimators::{
    cylinder_centers, greedy_separated, grid_seeds, log_slope, SeedSet, SeedTag,
};
use mmdim::exact::{format_rational, int, parse_rational, Rational};
use mmdim::horseshoe::validate_horseshoe;
use mmdim::logexpr::LogExpr;
use mmdim::map::Squared;
use mmdim::metric::Metric;
use mmdim::spec_file::{load_system, system_file, SystemSpecFile};
use mmdim::symbolic::{count_cylinders, extrapolate, rate_bound, rate_profile};

#[derive(Parser)]
#[command(name = "mmdim", version, about = "Exact horseshoes and their metric mean dimension")]
struct Cli {
    /// Decimal digits for logarithm evaluation.
    #[arg(long, global = true, default_value_t = 30)]
    precision: u32,
    /// Most cylinders (seeds) enumerated for one row.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: u64,
    /// Blocks with more legs are symbolic only (applies when building from a spec).
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_LEGS)]
    max_legs: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a system file from a JSON spec.
    Build {
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the horseshoe validator and placement checks.
    Validate { system: PathBuf },
    /// Symbolic profile as CSV.
    Profile {
        system: PathBuf,
        /// `K` or `A..B` (inclusive); defaults to `1..kMax`.
        #[arg(long, value_parser = parse_range)]
        k: Option<(u64, u64)>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Greedy separated-set counts as CSV.
    Estimate {
        system: PathBuf,
        #[arg(long, value_parser = parse_range, default_value = "1")]
        k: (u64, u64),
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        m: Vec<usize>,
        /// Separation scale as `p/q`; defaults to the block's `ε_k`.
        #[arg(long)]
        eps: Option<String>,
        /// `cylinder-centers` or `grid:N` (N points per axis over `E_k`).
        #[arg(long, default_value = "cylinder-centers")]
        seeds: String,
        #[arg(long, value_enum, default_value_t = MetricArg::Maxnorm)]
        metric: MetricArg,
        /// Half of a two-block system to sample.
        #[arg(long, value_enum, default_value_t = HalfArg::Upper)]
        half: HalfArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare extrapolated ratios with the analytic target.
    Verify {
        system: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long, value_parser = parse_range)]
        k: Option<(u64, u64)>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Maxnorm,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum HalfArg {
    Lower,
    Upper,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => (num(s)?, num(s)?),
    };
    if a == 0 || a > b {
        return Err(format!("expected K or A..B with 1 <= A <= B, got {s:?}"));
    }
    Ok((a, b))
}

/// A system from a system file, or built on the spot from a spec.
struct Input {
    system: System,
    /// File text, when it was a system file.
    text: Option<String>,
}

fn read_input(path: &Path, options: BuildOptions) -> Result<Input> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if v.get("format").is_some() {
        let loaded = load_system(&text).with_context(|| format!("loading {}", path.display()))?;
        Ok(Input {
            system: loaded.system,
            text: Some(text),
        })
    } else {
        let spec = SystemSpecFile::parse(&text)?;
        Ok(Input {
            system: spec.build(options)?,
            text: None,
        })
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

const HEADER: [&str; 11] = [
    "k",
    "eps_exact",
    "eps_float",
    "lower_rate",
    "upper_rate",
    "lower_ratio",
    "upper_ratio",
    "source",
    "m",
    "count",
    "status",
];

fn cmd_build(spec: &Path, out: &Option<PathBuf>, options: BuildOptions) -> Result<u8> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = SystemSpecFile::parse(&text)?;
    let (_, file) = system_file(&spec, options)?;
    output(out)?.write_all(file.as_bytes())?;
    Ok(0)
}

fn check_stacked(label: &str, s: &StackedSystem, lines: &mut Vec<(String, bool, String)>) {
    for b in s.blocks() {
        if let Some(h) = &b.horseshoe {
            let rep = validate_horseshoe(h);
            let detail = rep
                .failures()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect::<Vec<_>>()
                .join("; ");
            lines.push((format!("{label}block {} horseshoe", b.k()), rep.passed(), detail));
        }
    }
    lines.push((format!("{label}enlarged cubes disjoint"), s.enlargements_disjoint(), String::new()));
    lines.push((format!("{label}cubes inside [0,1]^n"), s.inside_unit_cube(), String::new()));
}

fn cmd_validate(path: &Path, options: BuildOptions) -> Result<u8> {
    let input = read_input(path, options)?;
    let mut lines = Vec::new();
    match &input.system {
        System::Identity { .. } => {}
        System::Stacked(s) => check_stacked("", s, &mut lines),
        System::TwoBlock(t) => {
            for (h, name) in [(Half::Lower, "lower"), (Half::Upper, "upper")] {
                if let System::Stacked(s) = t.half(h) {
                    check_stacked(&format!("{name} half, "), s, &mut lines);
                }
            }
        }
    }
    if let Some(text) = &input.text {
        let again = load_system(text)?.to_text();
        lines.push(("byte-identical round trip".into(), again == *text, String::new()));
    }
    let mut stdout = io::stdout().lock();
    let mut failed = false;
    for (name, ok, detail) in &lines {
        failed |= !ok;
        let verdict = if *ok { "PASS" } else { "FAIL" };
        if detail.is_empty() {
            writeln!(stdout, "{verdict} {name}")?;
        } else {
            writeln!(stdout, "{verdict} {name}: {detail}")?;
        }
    }
    writeln!(stdout, "{} checks, {} failed", lines.len(), lines.iter().filter(|l| !l.1).count())?;
    Ok(u8::from(failed))
}

fn default_range(system: &System, k: Option<(u64, u64)>) -> (u64, u64) {
    k.unwrap_or((1, system.k_max()))
}

fn cmd_profile(path: &Path, k: Option<(u64, u64)>, out: &Option<PathBuf>, cli: &Cli) -> Result<u8> {
    let input = read_input(path, options(cli))?;
    let (a, b) = default_range(&input.system, k);
    let profile = rate_profile(&input.system, a..=b, cli.precision);
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(HEADER)?;
    for row in &profile.rows {
        let status = if row.lower_rate > 0.0 { "ok" } else { "inactive" };
        w.write_record([
            row.k.to_string(),
            row.eps_exact.as_ref().map(format_rational).unwrap_or_default(),
            row.eps_float.clone(),
            row.lower_rate.to_string(),
            row.upper_rate.to_string(),
            row.lower_ratio_text.clone(),
            row.upper_ratio_text.clone(),
            "symbolic".into(),
            String::new(),
            String::new(),
            status.into(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

enum SeedKind {
    Centers,
    Grid(u64),
}

fn parse_seeds(s: &str) -> Result<SeedKind> {
    if s == "cylinder-centers" {
        return Ok(SeedKind::Centers);
    }
    if let Some(n) = s.strip_prefix("grid:") {
        let n: u64 = n.parse().with_context(|| format!("grid size in {s:?}"))?;
        if n == 0 {
            bail!("grid size must be positive");
        }
        return Ok(SeedKind::Grid(n));
    }
    bail!("unknown seed family {s:?}; expected cylinder-centers or grid:N")
}

struct EstimateArgs<'a> {
    ms: &'a [usize],
    eps: Option<Rational>,
    seeds: SeedKind,
    metric: Metric,
    half: Half,
    budget: u64,
}

struct NumericRow {
    eps: Option<Rational>,
    eps_float: String,
    rate: f64,
    lower_ratio: f64,
    upper_ratio: f64,
    counts: Vec<(usize, u64)>,
    status: &'static str,
}

impl NumericRow {
    fn empty(status: &'static str) -> Self {
        NumericRow {
            eps: None,
            eps_float: String::new(),
            rate: 0.0,
            lower_ratio: 0.0,
            upper_ratio: 0.0,
            counts: Vec::new(),
            status,
        }
    }
}

fn estimate_row(system: &System, k: u64, a: &EstimateArgs) -> Result<NumericRow> {
    // The stacked system holding block k, and the chart placing it in [0,1]^n.
    let (s, chart) = match system {
        System::Identity { .. } => return Ok(NumericRow::empty("unmaterialized")),
        System::Stacked(s) => (s, None),
        System::TwoBlock(t) => match t.half(a.half) {
            System::Stacked(s) => (s, Some(a.half)),
            _ => return Ok(NumericRow::empty("unmaterialized")),
        },
    };
    let sched = s.effective_schedule();
    if !sched.is_active(k) {
        return Ok(NumericRow::empty("inactive"));
    }
    if !s.is_materialized(k) {
        return Ok(NumericRow::empty("unmaterialized"));
    }
    let factor = if chart.is_some() { Rational::new(1.into(), 2.into()) } else { int(1) };
    let block_eps = sched.eps(k).expect("materialized blocks are rational") * &factor;
    let eps = a.eps.clone().unwrap_or_else(|| block_eps.clone());
    let seeds_for = |m: usize| -> Result<Option<SeedSet>> {
        let set = match a.seeds {
            SeedKind::Centers => {
                let need = count_cylinders(sched, k, s.n(), m);
                if need > a.budget.into() {
                    return Ok(None);
                }
                cylinder_centers(s, k, m, a.budget)?
            }
            SeedKind::Grid(per_axis) => {
                let need = (per_axis as u128).checked_pow(s.n() as u32);
                if need.is_none_or(|c| c > a.budget as u128) {
                    return Ok(None);
                }
                grid_seeds(&s.block(k).expect("materialized").placement.inner, per_axis)
            }
        };
        Ok(Some(match chart {
            None => set,
            Some(h) => SeedSet::from_points(set.points().map(|p| h.chart_inverse(p)), SeedTag::User),
        }))
    };
    let phi2 = Squared(system);
    let mut counts = Vec::new();
    for &m in a.ms {
        let Some(seeds) = seeds_for(m)? else {
            return Ok(NumericRow::empty("budget_exceeded"));
        };
        let res = greedy_separated(&phi2, &seeds, m, &eps, a.metric)?;
        counts.push((m, res.len() as u64));
    }
    let rate = match counts.as_slice() {
        [(m, c)] => (*c as f64).ln() / *m as f64,
        _ => log_slope(&counts)?,
    };
    let (lower_ratio, upper_ratio, eps_float) = if a.eps.is_some() {
        let l = LogExpr::ln_rational(&eps).to_f64().abs();
        (rate / l, rate / l, format!("{:.10e}", mmdim::exact::to_f64(&eps)))
    } else {
        let rb = rate_bound(sched, s.n(), k, &factor);
        let eps_f = mmdim::exact::to_f64(&block_eps);
        (
            rate / rb.lower_den.to_f64(),
            rate / rb.upper_den.to_f64(),
            format!("{eps_f:.10e}"),
        )
    };
    Ok(NumericRow {
        eps: Some(eps),
        eps_float,
        rate,
        lower_ratio,
        upper_ratio,
        counts,
        status: "ok",
    })
}

fn cmd_estimate(cli: &Cli) -> Result<u8> {
    let Command::Estimate {
        system,
        k,
        m,
        eps,
        seeds,
        metric,
        half,
        out,
    } = &cli.command
    else {
        unreachable!()
    };
    if m.is_empty() || m.contains(&0) {
        bail!("--m needs positive step counts");
    }
    let eps = eps
        .as_deref()
        .map(|t| parse_rational(t).map_err(|e| anyhow!("--eps: {e}")))
        .transpose()?;
    if eps.as_ref().is_some_and(|e| *e <= int(0)) {
        bail!("--eps must be positive");
    }
    let input = read_input(system, options(cli))?;
    let args = EstimateArgs {
        ms: m,
        eps,
        seeds: parse_seeds(seeds)?,
        metric: match metric {
            MetricArg::Maxnorm => Metric::MaxNorm,
            MetricArg::Euclidean => Metric::Euclidean,
        },
        half: match half {
            HalfArg::Lower => Half::Lower,
            HalfArg::Upper => Half::Upper,
        },
        budget: cli.budget,
    };
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(HEADER)?;
    let mut code = 0;
    for k in k.0..=k.1 {
        let row = estimate_row(&input.system, k, &args)?;
        if row.status == "unmaterialized" {
            eprintln!("error: block {k} is not materialized");
            code = 2;
        }
        let join = |f: fn(&(usize, u64)) -> String| {
            row.counts.iter().map(f).collect::<Vec<_>>().join(";")
        };
        let ms = if row.counts.is_empty() {
            m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
        } else {
            join(|c| c.0.to_string())
        };
        w.write_record([
            k.to_string(),
            row.eps.as_ref().map(format_rational).unwrap_or_default(),
            row.eps_float.clone(),
            row.rate.to_string(),
            row.rate.to_string(),
            row.lower_ratio.to_string(),
            row.upper_ratio.to_string(),
            "numeric".into(),
            ms,
            join(|c| c.1.to_string()),
            row.status.into(),
        ])?;
    }
    w.flush()?;
    Ok(code)
}

fn cmd_verify(path: &Path, tol: f64, k: Option<(u64, u64)>, cli: &Cli) -> Result<u8> {
    let input = read_input(path, options(cli))?;
    let (a, b) = default_range(&input.system, k);
    let profile = rate_profile(&input.system, a..=b, cli.precision);
    let fit = extrapolate(&profile)?;
    let (lo, hi) = input.system.target();
    let rows = [
        ("liminf", fit.liminf.c, fit.liminf.rms_residual, lo),
        ("limsup", fit.limsup.c, fit.limsup.rms_residual, hi),
    ];
    let mut out = io::stdout().lock();
    writeln!(out, "{:<8} {:>12} {:>10} {:>12} {:>10} {:>8}  result", "", "estimate", "target", "diff", "residual", "tol")?;
    let mut failed = false;
    for (name, est, rms, target) in rows {
        let t = mmdim::exact::to_f64(&target);
        let diff = (est - t).abs();
        let ok = diff <= tol;
        failed |= !ok;
        writeln!(
            out,
            "{name:<8} {est:>12.6} {:>10} {diff:>12.3e} {rms:>10.2e} {tol:>8}  {}",
            format_rational(&target),
            if ok { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(out, "fitted k = {}..{} ({} rows)", a, b, profile.rows.len())?;
    Ok(u8::from(failed))
}

fn options(cli: &Cli) -> BuildOptions {
    BuildOptions {
        max_legs: cli.max_legs,
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Build { spec, out } => cmd_build(spec, out, options(cli)),
        Command::Validate { system } => cmd_validate(system, options(cli)),
        Command::Profile { system, k, out } => cmd_profile(system, *k, out, cli),
        Command::Estimate { .. } => cmd_estimate(cli),
        Command::Verify { system, tol, k } => cmd_verify(system, *tol, *k, cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Ok(t) = std::env::var("MMDIM_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MMDIM_THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
