//! `d3ap` — command-line front end for the divisor-distribution toolkit.
//!
//! Subcommands map one-to-one onto the library's public surface:
//! tabulating hyper-Kloosterman sums, verifying the summation identities,
//! scanning divisor sums in progressions (single-modulus and averaged),
//! measuring bilinear/trilinear cancellation, checking exponent regions,
//! and running the cross-module selftest battery.
//!
//! Exit codes: 0 success, 1 a numeric check failed, 2 configuration or
//! usage error. Parameters come from flags, optionally backed by a
//! `key = value` file (`--config`); flags always win. Relative output
//! paths are placed under `$D3AP_OUT_DIR` when that variable is set.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use d3ap::cancellation;
use d3ap::config::Config;
use d3ap::csvout;
use d3ap::experiments::{averaged_scan, single_scan, ModulusSelect, ScanConfig};
use d3ap::ff::{Prime, Residue};
use d3ap::identities::{
    check_lemma_1060, check_phi_identity, check_poisson_progression, check_tempered_voronoi,
    write_identity_csv, AbcdPrecomputed, IdentityCheck, PoissonVerifier,
};
use d3ap::selftest::run_selftest;
use d3ap::trace::{kloosterman_all, sheaf_weight_function, KloostermanSpec, PeriodicFunction};
use d3ap::windows::{dyadic_piece, region_check, unit_window, ExponentProfile};

const OUT_DIR_ENV: &str = "D3AP_OUT_DIR";

/// Failure routed to an exit code: a numeric check that did not hold (1)
/// versus a configuration/usage problem (2).
enum Failure {
    Check(String),
    Config(String),
}

type CliResult<T> = Result<T, Failure>;

impl From<d3ap::Error> for Failure {
    fn from(e: d3ap::Error) -> Failure {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Config(format!("i/o: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "d3ap", version, about = "Divisor sums in arithmetic progressions: tables, identities, scans")]
struct Cli {
    /// Optional `key = value` settings file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Seed for randomized corpora.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Output CSV path; relative paths land under $D3AP_OUT_DIR if set.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate normalized hyper-Kloosterman sums over F_p.
    Kloosterman(KloostermanArgs),
    /// Run the summation-identity battery at one modulus.
    VerifyIdentities(VerifyArgs),
    /// Per-modulus divisor sums in progressions with exact error terms.
    DivisorScan(ScanArgs),
    /// Errors averaged over a window of prime moduli, both sign choices.
    AveragedScan(ScanArgs),
    /// One bilinear sum against a trace weight, with its envelopes.
    Bilinear(BilinearArgs),
    /// One trilinear sum plus the regrouped bilinear cross-check.
    Trilinear(TrilinearArgs),
    /// Classify an exponent profile against the two estimate regions.
    RegionCheck(RegionArgs),
    /// Cross-module invariant battery; deterministic CSV per seed.
    Selftest,
}

#[derive(Args)]
struct KloostermanArgs {
    /// Prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// Number of variables k in the sum (k >= 1).
    #[arg(long)]
    rank: Option<u32>,
    /// Multiplicative shift applied to the argument.
    #[arg(long)]
    shift: Option<i64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// Residual tolerance per identity.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    /// Table sizes, comma-separated, ascending.
    #[arg(long = "x", value_delimiter = ',')]
    xs: Option<Vec<u64>>,
    /// Moduli near x^theta (exclusive with --q-lo/--q-hi).
    #[arg(long)]
    theta: Option<f64>,
    /// Fixed modulus window: lowest prime.
    #[arg(long)]
    q_lo: Option<u64>,
    /// Fixed modulus window: highest prime (inclusive).
    #[arg(long)]
    q_hi: Option<u64>,
    /// Residue class (nonzero; sign allowed).
    #[arg(long)]
    a: Option<i64>,
    /// Exponent A in the comparison scale x / (log 2x)^A.
    #[arg(long)]
    big_a: Option<f64>,
    /// Partition sharpness B (>= 1).
    #[arg(long)]
    big_b: Option<f64>,
}

#[derive(Args)]
struct BilinearArgs {
    /// Prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// First variable scale.
    #[arg(long)]
    m1: Option<f64>,
    /// Second variable scale.
    #[arg(long)]
    m2: Option<f64>,
    /// Weight: kl2, kl3, or delta.
    #[arg(long)]
    weight: Option<String>,
    /// Shift/point for the weight.
    #[arg(long)]
    a: Option<i64>,
}

#[derive(Args)]
struct TrilinearArgs {
    /// Prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// Coefficient cutoffs.
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    n3: Option<u64>,
    /// Weight: kl2, kl3, or delta.
    #[arg(long)]
    weight: Option<String>,
    /// Shift/point for the weight.
    #[arg(long)]
    a: Option<i64>,
    /// Coefficient family: random (seeded unit phases) or ones.
    #[arg(long)]
    coeffs: Option<String>,
}

#[derive(Args)]
struct RegionArgs {
    /// Modulus exponent kappa (q = x^kappa).
    #[arg(long)]
    kappa: Option<f64>,
    /// Largest scale exponent mu3.
    #[arg(long)]
    mu3: Option<f64>,
    /// Smallest scale exponent (default (1 - mu3)/2).
    #[arg(long)]
    mu1: Option<f64>,
    /// Middle scale exponent (default (1 - mu3)/2).
    #[arg(long)]
    mu2: Option<f64>,
    /// Slack exponent eta.
    #[arg(long)]
    eta: Option<f64>,
    /// Partition sharpness B.
    #[arg(long)]
    big_b: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Settings file plus precedence logic (flag wins over file over default).
struct Settings {
    cfg: Config,
}

/// Keys honored for every subcommand.
const GLOBAL_KEYS: &[&str] = &["threads", "seed", "output"];

impl Settings {
    fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Settings> {
        let cfg = match path {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for key in cfg.keys() {
            if !allowed.contains(&key) && !GLOBAL_KEYS.contains(&key) {
                return Err(Failure::Config(format!("unknown settings key `{key}`")));
            }
        }
        Ok(Settings { cfg })
    }

    fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.cfg.get_parsed(key)?.unwrap_or(default)),
        }
    }

    fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.cfg.get_parsed(key)?),
        }
    }

    fn require<T>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.resolve_opt(flag, key)?
            .ok_or_else(|| Failure::Config(format!("missing required parameter --{key}")))
    }
}

/// Final output location: explicit choice or default name, then the
/// directory override for relative paths.
fn out_path(choice: Option<PathBuf>, default_name: &str) -> PathBuf {
    let path = choice.unwrap_or_else(|| PathBuf::from(default_name));
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path
}

fn create_out(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> CliResult<()> {
    let allowed: &[&str] = match &cli.cmd {
        Cmd::Kloosterman(_) => &["p", "rank", "shift"],
        Cmd::VerifyIdentities(_) => &["p", "tol"],
        Cmd::DivisorScan(_) | Cmd::AveragedScan(_) => {
            &["x", "theta", "q-lo", "q-hi", "a", "big-a", "big-b"]
        }
        Cmd::Bilinear(_) => &["p", "m1", "m2", "weight", "a"],
        Cmd::Trilinear(_) => &["p", "n1", "n2", "n3", "weight", "a", "coeffs"],
        Cmd::RegionCheck(_) => &["kappa", "mu1", "mu2", "mu3", "eta", "big-b"],
        Cmd::Selftest => &[],
    };
    let settings = Settings::load(cli.config.as_deref(), allowed)?;
    let threads = settings.resolve(cli.threads, "threads", 0usize)?;
    let seed = settings.resolve(cli.seed, "seed", 7u64)?;
    let output = settings.resolve_opt(cli.output, "output")?;

    // The selftest owns its pool (that is the point of the determinism
    // check); everything else shares one global pool sized here.
    if !matches!(cli.cmd, Cmd::Selftest) && threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }

    match cli.cmd {
        Cmd::Kloosterman(args) => cmd_kloosterman(args, &settings, output),
        Cmd::VerifyIdentities(args) => cmd_verify(args, &settings, output),
        Cmd::DivisorScan(args) => cmd_divisor_scan(args, &settings, output),
        Cmd::AveragedScan(args) => cmd_averaged_scan(args, &settings, output),
        Cmd::Bilinear(args) => cmd_bilinear(args, &settings, output),
        Cmd::Trilinear(args) => cmd_trilinear(args, &settings, output, seed),
        Cmd::RegionCheck(args) => cmd_region(args, &settings),
        Cmd::Selftest => cmd_selftest(seed, threads, output),
    }
}

fn parse_prime(value: u64) -> CliResult<Prime> {
    Prime::new(value).map_err(|e| Failure::Config(e.to_string()))
}

/// Trace weight selected on the command line.
fn make_weight(name: &str, a: i64, p: Prime) -> CliResult<PeriodicFunction> {
    match name {
        "kl2" => Ok(sheaf_weight_function(&KloostermanSpec::new(2, a)?, p)),
        "kl3" => Ok(sheaf_weight_function(&KloostermanSpec::new(3, a)?, p)),
        "delta" => {
            let r = Residue::new(p.reduce(a), p)?;
            if r.is_zero() {
                return Err(Failure::Config("delta weight needs a nonzero point".into()));
            }
            Ok(PeriodicFunction::delta(r))
        }
        other => Err(Failure::Config(format!(
            "unknown weight `{other}` (choose kl2, kl3, or delta)"
        ))),
    }
}

fn cmd_kloosterman(
    args: KloostermanArgs,
    settings: &Settings,
    output: Option<PathBuf>,
) -> CliResult<()> {
    let p = parse_prime(settings.require(args.p, "p")?)?;
    let rank = settings.resolve(args.rank, "rank", 2u32)?;
    let shift = settings.resolve(args.shift, "shift", 1i64)?;
    let spec = KloostermanSpec::new(rank, shift)?;
    let table = kloosterman_all(&spec, p);

    let path = out_path(output, "kloosterman.csv");
    let mut out = create_out(&path)?;
    writeln!(out, "a,re,im,abs")?;
    for a in 0..p.get() {
        let z = table.at_res(a);
        csvout::write_row(
            &mut out,
            &[
                a.to_string(),
                csvout::fmt_f64(z.re),
                csvout::fmt_f64(z.im),
                csvout::fmt_f64(z.norm()),
            ],
        )?;
    }
    out.flush()?;

    let worst = (1..p.get()).map(|a| table.at_res(a).norm()).fold(0.0, f64::max);
    println!(
        "kloosterman: p={} rank={rank} shift={shift}, {} values, max |Kl|={:.6} (bound {rank}) -> {}",
        p.get(),
        p.get(),
        worst,
        path.display()
    );
    if worst > rank as f64 {
        return Err(Failure::Check(format!(
            "square-root cancellation bound violated: max |Kl| = {worst} > {rank}"
        )));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs, settings: &Settings, output: Option<PathBuf>) -> CliResult<()> {
    let pv = settings.require(args.p, "p")?;
    let tol = settings.resolve(args.tol, "tol", 1e-8)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Config(format!("tolerance must be positive, got {tol}")));
    }
    let p = parse_prime(pv)?;
    if pv < 5 {
        return Err(Failure::Config("identity battery needs p >= 5".into()));
    }

    let mut checks: Vec<IdentityCheck> = Vec::new();
    let v3 = dyadic_piece(3);

    // complete-sum Poisson: point kernels and a rank-3 trace weight
    let verifier = PoissonVerifier::new(&v3, p, tol)?;
    let mut shifts = vec![1u64, 2, pv - 1];
    shifts.dedup();
    for &a in &shifts {
        let mut c = verifier.check(&PeriodicFunction::delta(Residue::new(a, p)?))?;
        c.params = format!("{};kernel=delta{a}", c.params);
        checks.push(c);
    }
    let mut c = verifier.check(&sheaf_weight_function(&KloostermanSpec::new(3, 1)?, p))?;
    c.params = format!("{};kernel=kl3", c.params);
    checks.push(c);
    checks.push(check_poisson_progression(&v3, p, 1, tol)?);

    // two-variable tempered transform
    let v2 = dyadic_piece(2);
    for a in [1, pv - 1] {
        let mut c = check_tempered_voronoi(
            &PeriodicFunction::delta(Residue::new(a, p)?),
            &v2,
            &v2,
            p,
            tol.max(1e-9),
        )?;
        c.params = format!("{};kernel=delta{a}", c.params);
        checks.push(c);
    }

    // combined three-variable formula, every unit point kernel
    let pre = AbcdPrecomputed::new([dyadic_piece(2), dyadic_piece(2), dyadic_piece(3)], p, 1e-8)?;
    for a in 1..pv {
        let report = pre.report_for(&PeriodicFunction::delta(Residue::new(a, p)?))?;
        checks.push(report.to_check(format!("p={pv};a={a}")));
    }

    // dual-transform point-kernel closed form, exhaustive (small p only)
    if pv <= 53 {
        let worst = check_lemma_1060(p)?;
        checks.push(IdentityCheck {
            name: "bessel-of-delta",
            params: format!("p={pv};exhaustive"),
            lhs: Complex64::new(worst, 0.0),
            rhs: Complex64::new(0.0, 0.0),
            tail_bound: 0.0,
        });
    }

    // exact totient factorization, rational arithmetic
    let phi_bad = (1u64..=1000)
        .filter(|&a| check_phi_identity(a) != num_rational::Ratio::from_integer(a))
        .count();
    checks.push(IdentityCheck {
        name: "phi-factorization",
        params: "a<=1000".into(),
        lhs: Complex64::new(phi_bad as f64, 0.0),
        rhs: Complex64::new(0.0, 0.0),
        tail_bound: 0.0,
    });

    let path = out_path(output, "identities.csv");
    let mut out = create_out(&path)?;
    write_identity_csv(&mut out, &checks)?;
    out.flush()?;

    let mut failed = 0usize;
    let mut worst = 0.0f64;
    for c in &checks {
        let bound = tol.max(1e-6 * c.lhs.norm());
        worst = worst.max(c.residual());
        if c.residual() > bound {
            failed += 1;
            eprintln!("FAIL {} [{}]: residual {:.3e} > {:.3e}", c.name, c.params, c.residual(), bound);
        }
    }
    println!(
        "verify-identities: p={pv}, {} checks, {} failed, worst residual {:.3e} -> {}",
        checks.len(),
        failed,
        worst,
        path.display()
    );
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} identity checks above tolerance")));
    }
    Ok(())
}

fn scan_config(args: ScanArgs, settings: &Settings, output: Option<PathBuf>, default_name: &str) -> CliResult<ScanConfig> {
    let xs = match args.xs {
        Some(v) => v,
        None => match settings.cfg.get("x") {
            Some(raw) => raw
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Config(format!("key `x`: {e}")))?,
            None => return Err(Failure::Config("missing required parameter --x".into())),
        },
    };
    let theta = settings.resolve_opt(args.theta, "theta")?;
    let q_lo = settings.resolve_opt(args.q_lo, "q-lo")?;
    let q_hi = settings.resolve_opt(args.q_hi, "q-hi")?;
    let moduli = match (theta, q_lo, q_hi) {
        (Some(t), None, None) => ModulusSelect::Theta(t),
        (None, Some(lo), Some(hi)) => ModulusSelect::Range(lo, hi),
        (None, None, None) => ModulusSelect::Theta(0.45),
        _ => {
            return Err(Failure::Config(
                "choose either --theta or both --q-lo and --q-hi".into(),
            ))
        }
    };
    let cfg = ScanConfig {
        xs,
        moduli,
        a: settings.resolve(args.a, "a", 1i64)?,
        big_a: settings.resolve(args.big_a, "big-a", 2.0f64)?,
        big_b: settings.resolve(args.big_b, "big-b", 2.0f64)?,
        output: Some(out_path(output, default_name)),
    };
    Ok(cfg)
}

fn cmd_divisor_scan(args: ScanArgs, settings: &Settings, output: Option<PathBuf>) -> CliResult<()> {
    let cfg = scan_config(args, settings, output, "divisor_scan.csv")?;
    let records = single_scan(&cfg)?;
    let path = cfg.output.as_ref().expect("set above");
    let worst = records.iter().map(|r| r.norm_delta.abs()).fold(0.0, f64::max);
    let cube = records
        .iter()
        .map(|r| (2.0 * r.x as f64).ln().powi(3))
        .fold(f64::INFINITY, f64::min);
    println!(
        "divisor-scan: {} records, max q|delta|/x = {:.4} (envelope {:.1}) -> {}",
        records.len(),
        worst,
        cube,
        path.display()
    );
    if worst > cube {
        return Err(Failure::Check(format!(
            "normalized error {worst:.4} above the coarse envelope {cube:.1}"
        )));
    }
    Ok(())
}

fn cmd_averaged_scan(args: ScanArgs, settings: &Settings, output: Option<PathBuf>) -> CliResult<()> {
    let cfg = scan_config(args, settings, output, "averaged_scan.csv")?;
    let reports = averaged_scan(&cfg)?;
    let path = cfg.output.as_ref().expect("set above");
    for r in &reports {
        let ratio = if r.scale > 0.0 { r.sum_abs_delta / r.scale } else { f64::NAN };
        println!(
            "averaged-scan: x={} Q={:.1} primes={} sum|delta|={:.4e} scale={:.4e} ratio={:.4}",
            r.x, r.q_nominal, r.prime_count, r.sum_abs_delta, r.scale, ratio
        );
    }
    println!("averaged-scan: {} rows -> {}", reports.len(), path.display());
    Ok(())
}

fn cmd_bilinear(args: BilinearArgs, settings: &Settings, output: Option<PathBuf>) -> CliResult<()> {
    let p = parse_prime(settings.require(args.p, "p")?)?;
    let default_m = (p.get() as f64).sqrt().round();
    let m1 = settings.resolve(args.m1, "m1", default_m)?;
    let m2 = settings.resolve(args.m2, "m2", default_m)?;
    let weight = settings.resolve(args.weight, "weight", "kl3".to_string())?;
    let a = settings.resolve(args.a, "a", 1i64)?;
    let k = make_weight(&weight, a, p)?;

    let v = unit_window();
    let report = cancellation::bilinear_sum(&k, &v, &v, m1, m2)?;
    let path = out_path(output, "bilinear.csv");
    let mut out = create_out(&path)?;
    writeln!(out, "{}", cancellation::BILINEAR_CSV_HEADER)?;
    csvout::write_row(&mut out, &report.csv_row())?;
    out.flush()?;
    println!(
        "bilinear: p={} weight={weight} M1={m1} M2={m2} |sum|={:.6e} trivial={:.6e} envelope={:.6e} -> {}",
        p.get(),
        report.value.norm(),
        report.trivial_bound,
        report.envelope,
        path.display()
    );
    Ok(())
}

fn cmd_trilinear(
    args: TrilinearArgs,
    settings: &Settings,
    output: Option<PathBuf>,
    seed: u64,
) -> CliResult<()> {
    let p = parse_prime(settings.require(args.p, "p")?)?;
    let n1 = settings.resolve(args.n1, "n1", 8u64)?;
    let n2 = settings.resolve(args.n2, "n2", 8u64)?;
    let n3 = settings.resolve(args.n3, "n3", 16u64)?;
    let weight = settings.resolve(args.weight, "weight", "kl3".to_string())?;
    let a = settings.resolve(args.a, "a", 1i64)?;
    let family = settings.resolve(args.coeffs, "coeffs", "random".to_string())?;
    let k = make_weight(&weight, a, p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: u64| -> CliResult<cancellation::SignedCoeffs> {
        match family.as_str() {
            "random" => Ok(cancellation::SignedCoeffs::from_fn(n, |_| {
                Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
            })),
            "ones" => Ok(cancellation::SignedCoeffs::ones(n)),
            other => Err(Failure::Config(format!(
                "unknown coefficient family `{other}` (choose random or ones)"
            ))),
        }
    };
    let (alpha, beta, gamma) = (make(n1)?, make(n2)?, make(n3)?);

    let report = cancellation::trilinear_sum(&k, &alpha, &beta, &gamma)?;
    let grouped = cancellation::trilinear_grouped(&k, &alpha, &beta, &gamma);
    let grouping_residual = (report.value - grouped).norm();

    let path = out_path(output, "trilinear.csv");
    let mut out = create_out(&path)?;
    writeln!(out, "{},grouping_residual", cancellation::TRILINEAR_CSV_HEADER)?;
    let mut row = report.csv_row();
    row.push(csvout::fmt_f64(grouping_residual));
    csvout::write_row(&mut out, &row)?;
    out.flush()?;
    println!(
        "trilinear: p={} weight={weight} N=({n1},{n2},{n3}) coeffs={family} |sum|={:.6e} envelope={:.6e} grouping residual={:.3e} -> {}",
        p.get(),
        report.value.norm(),
        report.envelope,
        grouping_residual,
        path.display()
    );
    if grouping_residual > 1e-10 {
        return Err(Failure::Check(format!(
            "regrouped bilinear form disagrees: residual {grouping_residual:.3e} > 1e-10"
        )));
    }
    Ok(())
}

fn cmd_region(args: RegionArgs, settings: &Settings) -> CliResult<()> {
    let kappa = settings.require(args.kappa, "kappa")?;
    let mu3 = settings.require(args.mu3, "mu3")?;
    let spread = (1.0 - mu3) / 2.0;
    let mu1 = settings.resolve(args.mu1, "mu1", spread)?;
    let mu2 = settings.resolve(args.mu2, "mu2", spread)?;
    let eta = settings.resolve(args.eta, "eta", 0.01f64)?;
    let big_b = settings.resolve(args.big_b, "big-b", 2.0f64)?;
    let profile = ExponentProfile::new(kappa, [mu1, mu2, mu3], eta, big_b)?;
    println!("{}", region_check(&profile));
    Ok(())
}

fn cmd_selftest(seed: u64, threads: usize, output: Option<PathBuf>) -> CliResult<()> {
    let report = run_selftest(seed, threads)
        .map_err(|e| Failure::Config(e.to_string()))?;
    match output {
        Some(path) => {
            let path = out_path(Some(path), "selftest.csv");
            let mut out = create_out(&path)?;
            out.write_all(report.csv.as_bytes())?;
            out.flush()?;
            println!(
                "selftest: seed={seed} threads={threads}, {} passed, {} failed -> {}",
                report.passed,
                report.failed,
                path.display()
            );
        }
        None => {
            // CSV on stdout for piping; summary stays on stderr
            print!("{}", report.csv);
            eprintln!(
                "selftest: seed={seed} threads={threads}, {} passed, {} failed",
                report.passed, report.failed
            );
        }
    }
    if report.failed > 0 {
        return Err(Failure::Check(format!("{} selftest checks failed", report.failed)));
    }
    Ok(())
}
