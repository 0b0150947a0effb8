//! Command-line front end. Exit codes: 0 success, 1 check or runtime
//! failure, 2 usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codebook::{
    barcode_count, default_epsilon, generate_rce, generate_trc, greedy_pair_set,
    pairwise_max_distance, pairwise_min_distance, trc_band, trc_band_violation, Codebook, Ensemble,
    DEFAULT_TRC_ATTEMPTS,
};
use crate::decoders::DecoderKind;
use crate::error::Error;
use crate::exponents::{bound_curve, BoundCurve, BoundProfile, ChannelParam};
use crate::montecarlo::{estimate_exponent, run_cell, ExperimentConfig, TrialStats};
use crate::verify::{check_profiles, joint_oracle_equivalence, p_grid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const BOUNDS_HEADER: &str = "R,lb_rce_id,lb_rce_jd,lb_trc_id,lb_trc_jd,ub";
pub const SIMULATE_HEADER: &str =
    "n,m,realized_rate,p,ensemble,decoder,trials,errors,p_hat,ci_low,ci_high,exponent_hat";

#[derive(Debug, Parser)]
#[command(
    name = "beeid",
    version,
    about = "Bee-identification exponent bounds and decoder simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate all exponent bounds over a rate grid as CSV.
    Bounds(BoundsArgs),
    /// Monte Carlo estimate of the identification error probability.
    Simulate(SimulateArgs),
    /// Check the bound inequalities on a p grid and the joint decoder against brute force.
    Verify(VerifyArgs),
    /// Generate or inspect codebook files.
    #[command(subcommand)]
    Codebook(CodebookCommand),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// BSC crossover probability, 0 < p < 0.5.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub r_max: f64,
    /// Number of grid points, at least 2.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// CSV destination; standard output when omitted (constants then go to standard error).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    Rce,
    Trc,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Rce => Ensemble::Rce,
            EnsembleArg::Trc => Ensemble::Trc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Independent,
    Joint,
    Gmd,
    Bruteforce,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Independent => DecoderKind::Independent,
            DecoderArg::Joint => DecoderKind::Joint,
            DecoderArg::Gmd => DecoderKind::Gmd,
            DecoderArg::Bruteforce => DecoderKind::BruteForce,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Blocklengths, comma separated or repeated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Nominal rate R; each cell uses m = max(2, round(2^(nR))).
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Base seed; a random seed is drawn and reported on standard error when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = DecoderArg::Joint)]
    pub decoder: DecoderArg,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Rce)]
    pub ensemble: EnsembleArg,
    /// TRC slack; defaults to min(0.02, delta_GV(2R)/4).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// GMD erasure threshold; defaults to floor(n (p + delta_GV(2R)/2) / 2).
    #[arg(long)]
    pub threshold: Option<u32>,
    /// Reuse one codebook per cell instead of drawing one per trial.
    #[arg(long)]
    pub fixed_codebook: bool,
    /// Always transmit with the identity permutation (optimistic for the
    /// joint and gmd decoders when cost ties occur).
    #[arg(long)]
    pub fix_identity: bool,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Number of p values evenly spaced inside (0.001, 0.499).
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    /// Explicit p values, comma separated; replaces the grid.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Random instances for the joint-decoder oracle comparison.
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fault injection: add this to R1 before checking.
    #[arg(
        long,
        default_value_t = 0.0,
        hide = true,
        allow_negative_numbers = true
    )]
    pub r1_shift: f64,
}

#[derive(Debug, Subcommand)]
pub enum CodebookCommand {
    /// Write a random codebook in the text format.
    Generate(GenerateArgs),
    /// Print size, distance range and greedy pair set of a codebook file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Number of rows; derived from --rate when omitted.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Rce)]
    pub ensemble: EnsembleArg,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TRC_ATTEMPTS)]
    pub max_attempts: u64,
    /// Destination file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub file: PathBuf,
    /// TRC slack used for the band check; defaults to min(0.02, delta_GV(2R)/4).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// Formats a number with 10 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci[sci.find('e').expect("scientific") + 1..]
        .parse()
        .expect("exponent");
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn opt_number(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn bounds_csv_row(pt: &crate::exponents::BoundPoint) -> String {
    format!(
        "{},{},{},{},{},{}",
        format_number(pt.rate),
        format_number(pt.lb_rce_id),
        format_number(pt.lb_rce_jd),
        opt_number(pt.lb_trc_id),
        opt_number(pt.lb_trc_jd),
        format_number(pt.ub)
    )
}

pub fn write_bounds_csv(curve: &BoundCurve, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{BOUNDS_HEADER}")?;
    for pt in &curve.points {
        writeln!(out, "{}", bounds_csv_row(pt))?;
    }
    Ok(())
}

fn ensemble_name(e: Ensemble) -> &'static str {
    match e {
        Ensemble::Rce => "rce",
        Ensemble::Trc => "trc",
        Ensemble::Explicit => "explicit",
    }
}

pub fn simulate_csv_row(s: &TrialStats) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        s.n,
        s.m,
        format_number(s.realized_rate),
        format_number(s.p),
        ensemble_name(s.ensemble),
        s.decoder.name(),
        s.trials,
        s.errors,
        format_number(s.p_hat),
        format_number(s.ci_low),
        format_number(s.ci_high),
        opt_number(s.exponent_hat)
    )
}

fn profile_lines(pr: &BoundProfile) -> Vec<String> {
    vec![
        format!("p = {}", format_number(pr.p)),
        format!("alpha_p = {}", format_number(pr.alpha_p)),
        format!("R0 = {}", format_number(pr.r0)),
        format!("R1 = {}", format_number(pr.r1)),
        format!("R_cr = {}", format_number(pr.r_cr)),
        format!("R_TRC = {}", format_number(pr.r_trc)),
        format!("lambda_p = {}", format_number(pr.lambda_p)),
    ]
}

fn open_out<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(&a, stdout, stderr),
        Command::Verify(a) => cmd_verify(&a, stdout, stderr),
        Command::Codebook(CodebookCommand::Generate(a)) => {
            cmd_codebook_generate(&a, stdout, stderr)
        }
        Command::Codebook(CodebookCommand::Inspect(a)) => cmd_codebook_inspect(&a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CmdError::Failed(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

#[derive(Debug)]
enum CmdError {
    Usage(String),
    Failed(String),
}

impl From<io::Error> for CmdError {
    fn from(e: io::Error) -> Self {
        CmdError::Failed(e.to_string())
    }
}

fn usage(e: Error) -> CmdError {
    CmdError::Usage(e.to_string())
}

fn failed(e: Error) -> CmdError {
    CmdError::Failed(e.to_string())
}

fn resolve_seed(seed: Option<u64>, stderr: &mut dyn Write) -> io::Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None => {
            let s: u64 = rand::random();
            writeln!(stderr, "seed: {s}")?;
            Ok(s)
        }
    }
}

fn cmd_bounds(
    a: &BoundsArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CmdError> {
    let ch = ChannelParam::new(a.p).map_err(usage)?;
    let curve = bound_curve(ch, a.r_min, a.r_max, a.steps).map_err(usage)?;
    match &a.out {
        Some(_) => {
            let mut out = open_out(&a.out, stdout)?;
            write_bounds_csv(&curve, &mut out)?;
            out.flush()?;
            drop(out);
            for line in profile_lines(&curve.profile) {
                writeln!(stdout, "{line}")?;
            }
        }
        None => {
            write_bounds_csv(&curve, stdout)?;
            for line in profile_lines(&curve.profile) {
                writeln!(stderr, "{line}")?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(
    a: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CmdError> {
    let ch = ChannelParam::new(a.p).map_err(usage)?;
    let seed = resolve_seed(a.seed, stderr)?;
    let mut cfg = ExperimentConfig::new(a.n.clone(), a.rate, ch, a.trials, seed);
    cfg.ensemble = a.ensemble.into();
    cfg.decoder = a.decoder.into();
    cfg.epsilon = a.epsilon;
    cfg.gmd_threshold = a.threshold;
    cfg.fresh_codebook_per_trial = !a.fixed_codebook;
    cfg.fix_identity = a.fix_identity;
    cfg.validate().map_err(usage)?;
    if let Some(t) = a.threshold {
        if let Some(&n) = a.n.iter().find(|&&n| t as usize > n) {
            return Err(CmdError::Usage(format!("--threshold {t} exceeds n = {n}")));
        }
    }
    if let Some(eps) = a.epsilon {
        if cfg.ensemble == Ensemble::Trc {
            for &n in &a.n {
                let m = barcode_count(n, a.rate).map_err(usage)?;
                trc_band(n, (m as f64).log2() / n as f64, eps).map_err(usage)?;
            }
        }
    }

    let mut out = open_out(&a.out, stdout)?;
    writeln!(out, "{SIMULATE_HEADER}")?;
    let mut cells = Vec::with_capacity(a.n.len());
    for &n in &a.n {
        let stats = run_cell(&cfg, n).map_err(failed)?;
        writeln!(out, "{}", simulate_csv_row(&stats))?;
        out.flush()?;
        cells.push(stats);
    }
    drop(out);

    let mut ordered = cells.clone();
    ordered.sort_by_key(|c| c.n);
    if let Ok(fit) = estimate_exponent(&ordered) {
        let residuals: Vec<String> = fit.residuals.iter().map(|r| format_number(*r)).collect();
        writeln!(
            stderr,
            "exponent fit: slope = {} bits, intercept = {}, n = {:?}, residuals = [{}]",
            format_number(fit.slope),
            format_number(fit.intercept),
            fit.n_used,
            residuals.join(", ")
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(
    a: &VerifyArgs,
    stdout: &mut dyn Write,
    _stderr: &mut dyn Write,
) -> Result<i32, CmdError> {
    let ps = if a.p.is_empty() {
        if a.points == 0 {
            return Err(CmdError::Usage("--points must be >= 1".into()));
        }
        p_grid(a.points)
    } else {
        a.p.clone()
    };
    let mut profiles = Vec::with_capacity(ps.len());
    for &p in &ps {
        let mut pr = BoundProfile::new(ChannelParam::new(p).map_err(usage)?);
        pr.r1 += a.r1_shift;
        profiles.push(pr);
    }

    let mut all_ok = true;
    writeln!(
        stdout,
        "{:<6} {:<40} {:>8}  detail",
        "status", "check", "cases"
    )?;
    for r in check_profiles(&profiles) {
        all_ok &= r.passed();
        writeln!(
            stdout,
            "{:<6} {:<40} {:>8}  {}",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.evaluated,
            r.failure.as_deref().unwrap_or("")
        )?;
    }
    if a.instances > 0 {
        let o = joint_oracle_equivalence(a.instances, a.seed);
        all_ok &= o.passed();
        writeln!(
            stdout,
            "{:<6} {:<40} {:>8}  cost mismatches {}, permutation mismatches {} of {} unique",
            if o.passed() { "PASS" } else { "FAIL" },
            "joint assignment = brute force",
            o.instances,
            o.cost_mismatches,
            o.permutation_mismatches,
            o.unique_minimizers
        )?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_codebook_generate(
    a: &GenerateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CmdError> {
    let m = match (a.m, a.rate) {
        (Some(m), None) => m,
        (None, Some(r)) => barcode_count(a.n, r).map_err(usage)?,
        _ => return Err(CmdError::Usage("give exactly one of --m and --rate".into())),
    };
    let seed = resolve_seed(a.seed, stderr)?;
    let c = match a.ensemble {
        EnsembleArg::Rce => generate_rce(a.n, m, seed).map_err(usage)?,
        EnsembleArg::Trc => {
            let rate = (m.max(1) as f64).log2() / a.n.max(1) as f64;
            let eps = a.epsilon.unwrap_or_else(|| default_epsilon(rate.min(0.5)));
            match generate_trc(a.n, m, eps, seed, a.max_attempts) {
                Ok(c) => c,
                Err(e @ Error::AttemptsExhausted { .. }) => return Err(failed(e)),
                Err(e) => return Err(usage(e)),
            }
        }
    };
    let mut out = open_out(&a.out, stdout)?;
    out.write_all(c.to_text().as_bytes())?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_codebook_inspect(
    a: &InspectArgs,
    stdout: &mut dyn Write,
    _stderr: &mut dyn Write,
) -> Result<i32, CmdError> {
    let c = Codebook::load(&a.file)?.map_err(failed)?;
    writeln!(stdout, "m = {}", c.m())?;
    writeln!(stdout, "n = {}", c.n())?;
    writeln!(stdout, "rate = {}", format_number(c.rate()))?;
    if c.m() >= 2 {
        let (dmin, (i, j)) = pairwise_min_distance(&c).map_err(failed)?;
        let (dmax, (k, l)) = pairwise_max_distance(&c).map_err(failed)?;
        writeln!(stdout, "min_distance = {dmin} (rows {i}, {j})")?;
        writeln!(stdout, "max_distance = {dmax} (rows {k}, {l})")?;
    }
    if c.rate() < 0.5 {
        let eps = a.epsilon.unwrap_or_else(|| default_epsilon(c.rate()));
        match trc_band(c.n(), c.rate(), eps) {
            Ok((lo, hi)) => {
                let verdict = match trc_band_violation(&c, eps).map_err(failed)? {
                    None => "satisfied".to_string(),
                    Some((i, j, d)) => format!("violated by rows {i}, {j} at distance {d}"),
                };
                writeln!(
                    stdout,
                    "trc_band (epsilon = {}) = ({}, {}): {verdict}",
                    format_number(eps),
                    format_number(lo),
                    format_number(hi)
                )?;
            }
            Err(e) => writeln!(stdout, "trc_band: {e}")?,
        }
    }
    if c.m() >= 4 {
        let ps = greedy_pair_set(&c).map_err(failed)?;
        writeln!(
            stdout,
            "greedy_pairs = {} (disjoint: {})",
            ps.len(),
            if ps.is_disjoint() { "yes" } else { "no" }
        )?;
        for (&(i, j), d) in ps.pairs.iter().zip(&ps.source_distances) {
            writeln!(stdout, "  {i} {j} {d}")?;
        }
    }
    Ok(EXIT_OK)
}
