//! Command-line front end.
//!
//! Every subcommand writes CSV artifacts into `--out` (default `out`) plus a
//! `manifest.txt` holding the subcommand and its flags as `key=value` lines;
//! `coarse-quant manifest <file>` replays such a file. Exit status is 0 on
//! success, 1 on usage or domain errors and 2 when a verification record
//! fails.
//!
//! Seeds: signal `i` of a decay ensemble is drawn with seed `seed + i`; Monte
//! Carlo cell `c` of `ldp` uses seed `seed + c` (see
//! [`crate::deviations::verify_prop2`]).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::deviations::{self, UnitLaw};
use crate::entropy::{bound_curve, reference_upper_rate, theorem_alpha};
use crate::epsnet::{self, CountingInstance};
use crate::error::{domain, Error, Result};
use crate::kernels::{compute_t0, make_bspline_kernel, make_lowpass_kernel, Kernel};
use crate::numerics::{fmt_f64, write_atomic};
use crate::quantizers::Encoder;
use crate::reconstruction::{self, DecayConfig, FitModel};
use crate::signals::random_bandlimited;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "coarse-quant", version, about = "Coarse quantization experiments and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate bound alpha(mu) for one bit depth, with the reference rate.
    Bounds(BoundsArgs),
    /// Sup-error decay of an encoder over oversampling rates.
    Decay(DecayArgs),
    /// Exact binomial tails against Chernoff bounds, and Monte-Carlo tails.
    Ldp(LdpArgs),
    /// Exhaustive survivor count for the counting argument.
    Epsnet(EpsnetArgs),
    /// Padding margin T0 over a list of rates.
    T0(T0Args),
    /// Replays a key=value manifest file.
    Manifest { path: PathBuf },
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long = "K", default_value_t = 1)]
    bit_depth: u32,
    #[arg(long, default_value_t = 0.01)]
    mu_step: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct DecayArgs {
    /// pcm, sd1 or sd2.
    #[arg(long, default_value = "sd1")]
    encoder: String,
    #[arg(long = "K", default_value_t = 1)]
    bit_depth: u32,
    /// lowpass[:lambda0:radius], bspline[:order:scale], triangle[:scale] or exp.
    #[arg(long, default_value = "lowpass")]
    kernel: String,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    signals: usize,
    #[arg(long, default_value_t = 2)]
    terms: usize,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    band_guard: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    t1: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct LdpArgs {
    #[arg(long, default_value_t = 30)]
    nmax: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    p_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    a_step: f64,
    /// Monte-Carlo laws: uniform, beta:A:B, point:P, bernoulli:P or discrete:L.
    #[arg(long, value_delimiter = ',', default_value = "uniform,beta:2:2")]
    laws: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    mc_n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9")]
    mc_a: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EpsnetArgs {
    /// Symbol count for the averaging instance.
    #[arg(long = "M", default_value_t = 4)]
    symbols: usize,
    #[arg(long = "K", default_value_t = 1)]
    bit_depth: u32,
    /// Averaging instance (c_n = 1) with threshold `a`.
    #[arg(long)]
    toy_average: bool,
    /// Threshold of the averaging instance.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value = "bspline")]
    kernel: String,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Half width of I = [-a, a] for kernel-weighted instances.
    #[arg(long, default_value_t = 3.5)]
    half_width: f64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Rate constant used for T0.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct T0Args {
    #[arg(long, default_value = "exp")]
    kernel: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long = "K", default_value_t = 1)]
    bit_depth: u32,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    lambdas: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

/// Parses a kernel spec such as `lowpass:2:20`, `bspline:3:1` or `exp`.
pub fn parse_kernel(spec: &str) -> Result<Kernel> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize, default: f64| -> Result<f64> {
        match parts.get(i) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Domain(format!("bad number {s:?} in kernel spec {spec:?}"))),
        }
    };
    match parts[0] {
        "lowpass" if parts.len() <= 3 => make_lowpass_kernel(num(1, 2.0)?, num(2, 20.0)?),
        "bspline" if parts.len() <= 3 => {
            let order = num(1, 3.0)?;
            if order.fract() != 0.0 || order < 0.0 {
                return domain(format!("B-spline order {order} is not an integer"));
            }
            make_bspline_kernel(order as u32, num(2, 1.0)?)
        }
        "triangle" if parts.len() <= 2 => Kernel::triangle(num(1, 1.0)?),
        "exp" if parts.len() == 1 => Ok(Kernel::exponential()),
        _ => domain(format!("unknown kernel spec {spec:?}")),
    }
}

pub fn parse_encoder(spec: &str) -> Result<Encoder> {
    match spec {
        "pcm" => Ok(Encoder::Pcm),
        "sd1" => Ok(Encoder::SigmaDelta { order: 1 }),
        "sd2" => Ok(Encoder::SigmaDelta { order: 2 }),
        _ => domain(format!("unknown encoder {spec:?} (pcm, sd1, sd2)")),
    }
}

pub fn parse_law(spec: &str) -> Result<UnitLaw> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Domain(format!("bad law spec {spec:?}")))
    };
    match (parts[0], parts.len()) {
        ("uniform", 1) => Ok(UnitLaw::Uniform),
        ("point", 2) => Ok(UnitLaw::PointMass(num(1)?)),
        ("bernoulli", 2) => Ok(UnitLaw::Bernoulli(num(1)?)),
        ("beta", 3) => Ok(UnitLaw::Beta { alpha: num(1)?, beta: num(2)? }),
        ("discrete", 2) => {
            let l = num(1)?;
            if l.fract() != 0.0 || !(2.0..=1e6).contains(&l) {
                return domain(format!("bad level count in {spec:?}"));
            }
            Ok(UnitLaw::DiscreteUniform { levels: l as u32 })
        }
        _ => domain(format!("unknown law spec {spec:?}")),
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Verified,
    Failed,
}

struct Sink {
    dir: PathBuf,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf() })
    }

    fn put(&self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        write_atomic(&self.dir.join(name), &buf)?;
        Ok(())
    }
}

/// `key=value` lines for the flags in `args` (everything after the program
/// name), led by `subcommand=<name>` and `version=<tool version>`.
fn manifest_text(args: &[String]) -> String {
    let mut out = format!("subcommand={}\nversion={VERSION}\n", args[0]);
    let mut i = 1;
    while i < args.len() {
        let flag = args[i].trim_start_matches("--");
        if let Some((k, v)) = flag.split_once('=') {
            out.push_str(&format!("{k}={v}\n"));
            i += 1;
        } else if i + 1 < args.len() && !args[i + 1].starts_with("--") {
            out.push_str(&format!("{flag}={}\n", args[i + 1]));
            i += 2;
        } else {
            out.push_str(&format!("{flag}=true\n"));
            i += 1;
        }
    }
    out
}

/// Inverse of [`manifest_text`]: argument list for a manifest file.
fn manifest_args(text: &str) -> Result<Vec<String>> {
    let mut sub = None;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return domain(format!("manifest line {}: expected key=value", lineno + 1));
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "subcommand" => sub = Some(v.to_string()),
            "version" => {}
            _ if v == "true" => flags.push(format!("--{k}")),
            _ => flags.push(format!("--{k}={v}")),
        }
    }
    let Some(sub) = sub else {
        return domain("manifest has no subcommand= line");
    };
    if sub == "manifest" {
        return domain("a manifest cannot replay another manifest");
    }
    let mut args = vec![sub];
    args.extend(flags);
    Ok(args)
}

fn run_bounds(a: &BoundsArgs, sink: &Sink, log: &mut dyn Write) -> Result<Outcome> {
    if !(a.mu_step > 0.0 && a.mu_step <= 1.0) {
        return domain(format!("--mu-step {} must lie in (0, 1]", a.mu_step));
    }
    let steps = (1.0 / a.mu_step).round() as usize;
    if ((steps as f64) * a.mu_step - 1.0).abs() > 1e-9 {
        return domain(format!("--mu-step {} must divide 1", a.mu_step));
    }
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let curve = bound_curve(a.bit_depth, &grid)?;
    sink.put(&format!("bounds_K{}.csv", a.bit_depth), |b| curve.write_csv(b))?;
    let r = reference_upper_rate();
    let at_ceiling = theorem_alpha(r.amplitude_ceiling, a.bit_depth)?;
    sink.put("reference.csv", |b| {
        writeln!(b, "rate,amplitude_ceiling,bound_at_ceiling")?;
        writeln!(b, "{},{},{}", fmt_f64(r.rate), fmt_f64(r.amplitude_ceiling), fmt_f64(at_ceiling))?;
        Ok(())
    })?;
    writeln!(
        log,
        "bounds: K={} points={} alpha(0)={} alpha(1)={} reference={} (bound at mu={}: {})",
        a.bit_depth,
        curve.points.len(),
        fmt_f64(curve.points[0].alpha),
        fmt_f64(curve.points[steps].alpha),
        r.rate,
        r.amplitude_ceiling,
        fmt_f64(at_ceiling)
    )?;
    Ok(Outcome::Verified)
}

fn run_decay(a: &DecayArgs, sink: &Sink, log: &mut dyn Write) -> Result<Outcome> {
    let encoder = parse_encoder(&a.encoder)?;
    let kernel = parse_kernel(&a.kernel)?;
    if a.signals == 0 {
        return domain("--signals must be positive");
    }
    let ensemble = (0..a.signals as u64)
        .map(|i| random_bandlimited(a.seed.wrapping_add(i), a.terms, a.mu, a.band_guard))
        .collect::<Result<Vec<_>>>()?;
    let config = DecayConfig {
        bit_depth: a.bit_depth,
        t0: a.t0,
        t1: a.t1,
        grid_step: None,
        padding_alpha: None,
    };
    let curve = reconstruction::decay_experiment(&ensemble, encoder, &kernel, &a.lambdas, &config)?;
    sink.put("decay.csv", |b| curve.write_csv(b))?;
    for p in &curve.points {
        writeln!(log, "decay: lambda={} sup_error={}", fmt_f64(p.lambda), fmt_f64(p.sup_error))?;
    }
    if curve.points.len() >= 3 {
        let fits = [
            reconstruction::fit_rate(&curve, FitModel::Polynomial)?,
            reconstruction::fit_rate(&curve, FitModel::Exponential)?,
        ];
        sink.put("fits.csv", |b| reconstruction::write_fits_csv(&fits, b))?;
        for f in &fits {
            writeln!(log, "fit: {} rate={} residual={}", f.model, fmt_f64(f.rate), fmt_f64(f.residual))?;
        }
    }
    Ok(Outcome::Verified)
}

fn run_ldp(a: &LdpArgs, sink: &Sink, log: &mut dyn Write) -> Result<Outcome> {
    if !(a.a_step > 0.0 && a.a_step <= 1.0) {
        return domain(format!("--a-step {} must lie in (0, 1]", a.a_step));
    }
    let steps = (1.0 / a.a_step).round() as usize;
    let a_grid: Vec<f64> = (1..=steps).map(|i| (i as f64 * a.a_step).min(1.0)).collect();
    let prop1 = deviations::verify_prop1(a.nmax, &a.p_grid, &a_grid)?;
    sink.put("prop1.csv", |b| deviations::write_prop1_csv(&prop1, b))?;
    let bad1 = prop1.iter().filter(|r| !r.satisfied).count();
    writeln!(log, "ldp: exact tails rows={} unsatisfied={}", prop1.len(), bad1)?;

    let laws = a.laws.iter().map(|s| parse_law(s)).collect::<Result<Vec<_>>>()?;
    let prop2 = deviations::verify_prop2(&laws, &a.mc_n, &a.mc_a, a.trials, a.seed)?;
    sink.put("prop2.csv", |b| deviations::write_prop2_csv(&prop2, b))?;
    let bad2 = prop2.iter().filter(|r| !r.satisfied).count();
    writeln!(log, "ldp: monte-carlo rows={} unsatisfied={}", prop2.len(), bad2)?;
    Ok(if bad1 + bad2 == 0 { Outcome::Verified } else { Outcome::Failed })
}

fn run_epsnet(a: &EpsnetArgs, sink: &Sink, log: &mut dyn Write) -> Result<Outcome> {
    let instance = if a.toy_average {
        CountingInstance::averaging(a.symbols, a.bit_depth, a.a)?
    } else {
        let kernel = parse_kernel(&a.kernel)?;
        let margin = compute_t0(&kernel, a.alpha, a.bit_depth, a.lambda)?.max(0.0);
        CountingInstance::kernel_weighted(&kernel, a.bit_depth, a.lambda, a.half_width, margin, a.mu, a.delta)?
    };
    let report = epsnet::enumerate_survivors(&instance)?;
    sink.put("epsnet.csv", |b| epsnet::write_reports_csv(std::slice::from_ref(&report), b))?;
    writeln!(
        log,
        "epsnet: M={} K={} threshold={} survivors={} total={} bound={} bound_measured={} satisfied={}",
        report.symbols,
        report.bit_depth,
        fmt_f64(report.threshold),
        report.survivor_count,
        report.total,
        fmt_f64(report.bound_n),
        fmt_f64(report.bound_measured),
        report.satisfied
    )?;
    Ok(if report.satisfied { Outcome::Verified } else { Outcome::Failed })
}

fn run_t0(a: &T0Args, sink: &Sink, log: &mut dyn Write) -> Result<Outcome> {
    let kernel = parse_kernel(&a.kernel)?;
    let rows = a
        .lambdas
        .iter()
        .map(|&l| Ok((l, compute_t0(&kernel, a.alpha, a.bit_depth, l)?)))
        .collect::<Result<Vec<_>>>()?;
    sink.put("t0.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["lambda", "T0"])?;
        for (l, t) in &rows {
            w.write_record([fmt_f64(*l), fmt_f64(*t)])?;
        }
        w.flush()?;
        Ok(())
    })?;
    for (l, t) in &rows {
        writeln!(log, "t0: lambda={} T0={}", fmt_f64(*l), fmt_f64(*t))?;
    }
    Ok(Outcome::Verified)
}

fn dispatch(args: &[String], log: &mut dyn Write) -> std::result::Result<Outcome, RunError> {
    let mut argv = vec!["coarse-quant".to_string()];
    argv.extend(args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(RunError::Usage)?;
    let (common, run): (&Common, Box<dyn Fn(&Sink, &mut dyn Write) -> Result<Outcome>>) = match &cli.command {
        Command::Manifest { path } => {
            let text = fs::read_to_string(path).map_err(|e| RunError::Run(e.into()))?;
            let replay = manifest_args(&text).map_err(RunError::Run)?;
            return dispatch(&replay, log);
        }
        Command::Bounds(a) => (&a.common, Box::new(move |s, l| run_bounds(a, s, l))),
        Command::Decay(a) => (&a.common, Box::new(move |s, l| run_decay(a, s, l))),
        Command::Ldp(a) => (&a.common, Box::new(move |s, l| run_ldp(a, s, l))),
        Command::Epsnet(a) => (&a.common, Box::new(move |s, l| run_epsnet(a, s, l))),
        Command::T0(a) => (&a.common, Box::new(move |s, l| run_t0(a, s, l))),
    };
    let sink = Sink::new(&common.out).map_err(RunError::Run)?;
    let outcome = run(&sink, log).map_err(RunError::Run)?;
    let manifest = manifest_text(args);
    sink.put("manifest.txt", |b| {
        b.extend_from_slice(manifest.as_bytes());
        Ok(())
    })
    .map_err(RunError::Run)?;
    Ok(outcome)
}

enum RunError {
    Usage(clap::Error),
    Run(Error),
}

/// Runs the tool on `args` (including the program name) and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = match args
        .into_iter()
        .skip(1)
        .map(|a| a.into().into_string())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        Ok(a) => a,
        Err(_) => {
            eprintln!("error: arguments must be valid UTF-8");
            return 1;
        }
    };
    let stdout = std::io::stdout();
    let mut log = stdout.lock();
    match dispatch(&args, &mut log) {
        Ok(Outcome::Verified) => 0,
        Ok(Outcome::Failed) => {
            eprintln!("verification failed; see the report for unsatisfied rows");
            2
        }
        Err(RunError::Usage(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
        Err(RunError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
