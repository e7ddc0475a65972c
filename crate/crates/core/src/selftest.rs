//! One-shot verification sweep across every module's invariants, emitting
//! a deterministic CSV report.
//!
//! Each check is a pure function of the seed, runs in its own slot, and
//! never shares accumulators with other checks, so the assembled report is
//! byte-identical whatever thread count executes the sweep. Parameters are
//! sized to keep the whole sweep at around a second.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csvout;
use crate::divisor;
use crate::ff::{self, Prime, Residue};
use crate::identities;
use crate::trace::{self, PeriodicFunction};
use crate::windows;
use crate::{Error, Result};

pub const SELFTEST_CSV_HEADER: &str = "suite,check,params,value,threshold,status";

/// One invariant's outcome: `value` is the measured quantity, `threshold`
/// the bound it must stay within (both meanings stated per check).
#[derive(Clone, Debug)]
pub struct SelftestRow {
    pub suite: &'static str,
    pub check: &'static str,
    pub params: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl SelftestRow {
    fn within(
        suite: &'static str,
        check: &'static str,
        params: String,
        value: f64,
        threshold: f64,
    ) -> SelftestRow {
        SelftestRow { suite, check, params, value, threshold, pass: value <= threshold }
    }

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.suite.to_string(),
            self.check.to_string(),
            self.params.clone(),
            csvout::fmt_f64(self.value),
            csvout::fmt_f64(self.threshold),
            if self.pass { "pass" } else { "fail" }.to_string(),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub rows: Vec<SelftestRow>,
    pub csv: String,
    pub passed: usize,
    pub failed: usize,
}

fn rng_for(seed: u64, slot: u64) -> ChaCha8Rng {
    // decorrelate slots so the schedule cannot matter
    ChaCha8Rng::seed_from_u64(seed ^ slot.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_kernel(p: Prime, rng: &mut ChaCha8Rng) -> PeriodicFunction {
    let values = (0..p.get())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PeriodicFunction::new(p, values).expect("length matches modulus")
}

fn prime(p: u64) -> Prime {
    Prime::new(p).expect("literal prime")
}

// ---- the check battery ------------------------------------------------

fn check_inverse_table(_: ChaCha8Rng) -> SelftestRow {
    let p = prime(97);
    let inv = ff::inverse_table(p);
    let bad = (1..97).filter(|&a| ff::mul_mod(a, inv[a as usize], 97) != 1).count();
    SelftestRow::within("ff", "inverse-table", "p=97".into(), bad as f64, 0.0)
}

fn check_euler_phi(_: ChaCha8Rng) -> SelftestRow {
    let bad = (1u64..=200)
        .filter(|&n| {
            let direct = (1..=n).filter(|&m| ff::gcd(m, n) == 1).count() as u64;
            ff::euler_phi(n) != direct
        })
        .count();
    SelftestRow::within("ff", "euler-phi-vs-direct", "n<=200".into(), bad as f64, 0.0)
}

fn check_fourier_involution(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(97);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let k = random_kernel(p, &mut rng);
        let khh = trace::fourier(&trace::fourier(&k));
        for n in 0..97i64 {
            worst = worst.max((khh.at(n) - k.at(-n)).norm());
        }
    }
    SelftestRow::within("trace", "fourier-involution", "p=97 kernels=3".into(), worst, 1e-12)
}

fn check_parseval(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(97);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let k = random_kernel(p, &mut rng);
        let kh = trace::fourier(&k);
        worst = worst.max((k.l2_norm_sq() - kh.l2_norm_sq()).abs());
    }
    SelftestRow::within("trace", "parseval", "p=97 kernels=3".into(), worst, 1e-10)
}

fn check_weil_bound(_: ChaCha8Rng) -> SelftestRow {
    let p = prime(101);
    let mut worst: f64 = 0.0;
    for rank in [2u32, 3] {
        let table = trace::kloosterman_table(rank, p);
        let max = (1..101).map(|a| table[a].norm()).fold(0.0, f64::max);
        // normalize so one threshold covers both ranks
        worst = worst.max(max / rank as f64);
    }
    SelftestRow::within("trace", "weil-bound", "p=101 rank=2 3".into(), worst, 1.0)
}

fn check_kloosterman_fft_vs_direct(_: ChaCha8Rng) -> SelftestRow {
    let p = prime(31);
    let mut worst: f64 = 0.0;
    for rank in [2u32, 3] {
        let spec = trace::KloostermanSpec::new(rank, 1).expect("valid spec");
        let fft = trace::kloosterman_all(&spec, p);
        for a in 1..31 {
            let direct = trace::kloosterman(&spec, Residue::new(a, p).expect("unit"));
            worst = worst.max((fft.at_res(a) - direct).norm());
        }
    }
    SelftestRow::within("trace", "fft-vs-direct", "p=31 rank=2 3".into(), worst, 1e-10)
}

fn check_partition_unity(_: ChaCha8Rng) -> SelftestRow {
    let pieces = windows::partition(2.0, 40).expect("valid ratio");
    let mut worst: f64 = 0.0;
    for &t in &windows::log_spaced(1.0, 1e6, 200) {
        let total: f64 = crate::kahan::kahan_sum(pieces.iter().map(|p| p.window.eval(t)));
        worst = worst.max((total - 1.0).abs());
    }
    SelftestRow::within("windows", "partition-unity", "delta=2 t<=1e6".into(), worst, 1e-12)
}

fn check_quadrature(_: ChaCha8Rng) -> SelftestRow {
    let v = windows::mother_bump().scaled(8.0).expect("positive scale");
    let mut worst: f64 = 0.0;
    for xi in [0.0, 0.17, 1.5] {
        let fast = windows::fourier_continuous(&v, xi);
        let slow = windows::fourier_continuous_oracle(&v, xi);
        worst = worst.max((fast - slow).norm());
    }
    SelftestRow::within("windows", "quadrature-agreement", "M=8 xi=0 0.17 1.5".into(), worst, 1e-9)
}

fn check_dual_tail(_: ChaCha8Rng) -> SelftestRow {
    // the certified pointwise envelope must majorize the actual transform
    // at every frequency where quadrature is still trustworthy
    let v = windows::dyadic_piece(3);
    let tail = windows::DualTail::new(&v);
    let mut worst: f64 = 0.0;
    for &xi in &windows::log_spaced(0.05, 40.0, 60) {
        let actual = windows::fourier_continuous(&v, xi).norm();
        worst = worst.max(actual / tail.pointwise_bound(xi));
    }
    SelftestRow::within("windows", "certified-envelope", "M=8 xi<=40".into(), worst, 1.0)
}

fn check_region_verdicts(_: ChaCha8Rng) -> SelftestRow {
    use windows::RegionVerdict::*;
    let cases = [
        (0.01, [0.3, 0.3, 0.4], Both),
        (0.5217, [0.2826, 0.2826, 0.4348], Neither),
        (0.5, [0.2, 0.25, 0.55], FirstEstimate),
        (0.54, [0.3, 0.33, 0.365], SecondEstimate),
    ];
    let mut bad = 0;
    for (kappa, mu, expect) in cases {
        let profile = windows::ExponentProfile::new(kappa, mu, 1e-4, 2.0).expect("valid profile");
        if windows::region_check(&profile) != expect {
            bad += 1;
        }
    }
    SelftestRow::within("windows", "region-verdicts", "4 pinned profiles".into(), bad as f64, 0.0)
}

fn check_poisson_random(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(7);
    let v = windows::partition_piece(2.0, 3).expect("valid ratio");
    let verifier = identities::PoissonVerifier::new(&v, p, 1e-8).expect("cache in budget");
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let k = random_kernel(p, &mut rng);
        let check = verifier.check(&k).expect("tail in budget");
        worst = worst.max(check.residual());
    }
    SelftestRow::within("identities", "poisson-random", "q=7 M=8 kernels=3".into(), worst, 1e-8)
}

fn check_poisson_delta_large(_: ChaCha8Rng) -> SelftestRow {
    let p = prime(101);
    let v = windows::dyadic_piece(6);
    let verifier = identities::PoissonVerifier::new(&v, p, 1e-8).expect("cache in budget");
    let k = PeriodicFunction::delta(Residue::new(1, p).expect("unit"));
    let check = verifier.check(&k).expect("tail in budget");
    SelftestRow::within("identities", "poisson-delta", "q=101 M=64".into(), check.residual(), 1e-8)
}

fn check_tempered(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(11);
    let a = Residue::new(rng.gen_range(1..11), p).expect("unit");
    let check = identities::check_tempered_voronoi(
        &PeriodicFunction::delta(a),
        &windows::dyadic_piece(2),
        &windows::dyadic_piece(2),
        p,
        1e-7,
    )
    .expect("tail in budget");
    SelftestRow::within(
        "identities",
        "tempered-voronoi",
        format!("p=11 a={} M=4", a.value()),
        check.residual(),
        1e-7,
    )
}

fn check_abcd(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(11);
    let v = [windows::dyadic_piece(2), windows::dyadic_piece(2), windows::dyadic_piece(3)];
    let pre = identities::AbcdPrecomputed::new(v, p, 1e-8).expect("cache in budget");
    let a = Residue::new(rng.gen_range(1..11), p).expect("unit");
    let report = pre.report_for(&PeriodicFunction::delta(a)).expect("vanishing center");
    let tol = (1e-6 * report.lhs.norm()).max(1e-8);
    SelftestRow::within(
        "identities",
        "combined-formula",
        format!("p=11 a={} scales=(4 4 8)", a.value()),
        report.residual,
        tol,
    )
}

fn check_abcd_linearity(_: ChaCha8Rng) -> SelftestRow {
    let p = prime(11);
    let v = [windows::dyadic_piece(2), windows::dyadic_piece(2), windows::dyadic_piece(3)];
    let pre = identities::AbcdPrecomputed::new(v, p, 1e-8).expect("cache in budget");
    let d3 = PeriodicFunction::delta(Residue::new(3, p).expect("unit"));
    let d7 = PeriodicFunction::delta(Residue::new(7, p).expect("unit"));
    let sum_kernel = d3.add(&d7).expect("same modulus");
    let r3 = pre.report_for(&d3).expect("vanishing center");
    let r7 = pre.report_for(&d7).expect("vanishing center");
    let rs = pre.report_for(&sum_kernel).expect("vanishing center");
    let dev = (rs.rhs() - r3.rhs() - r7.rhs()).norm();
    SelftestRow::within("identities", "kernel-linearity", "p=11 delta3+delta7".into(), dev, 1e-12)
}

fn check_lemma_1060(_: ChaCha8Rng) -> SelftestRow {
    let worst = identities::check_lemma_1060(prime(13)).expect("valid modulus");
    SelftestRow::within("identities", "bessel-of-delta", "p=13 exhaustive".into(), worst, 1e-10)
}

fn check_phi_identity(_: ChaCha8Rng) -> SelftestRow {
    let bad = (1u64..=200)
        .filter(|&a| identities::check_phi_identity(a) != num_rational::Ratio::from_integer(a))
        .count();
    SelftestRow::within("identities", "phi-factorization", "a<=200".into(), bad as f64, 0.0)
}

fn check_sieve_vs_brute(_: ChaCha8Rng) -> SelftestRow {
    fn brute(n: u64, k: u32) -> u64 {
        if k == 1 {
            return 1;
        }
        (1..=n).filter(|d| n % d == 0).map(|d| brute(n / d, k - 1)).sum()
    }
    let mut bad = 0;
    for k in [2u32, 3] {
        let t = divisor::sieve_dk(300, k).expect("valid arguments");
        bad += (1..=300).filter(|&n| t.get(n) != brute(n, k)).count();
    }
    SelftestRow::within("divisor", "sieve-vs-brute", "x=300 k=2 3".into(), bad as f64, 0.0)
}

fn check_hyperbola(_: ChaCha8Rng) -> SelftestRow {
    let x = 2000u64;
    let t = divisor::sieve_dk(x, 3).expect("valid arguments");
    let mut count = 0u64;
    for m1 in 1..=x {
        for m2 in 1..=x / m1 {
            count += x / (m1 * m2);
        }
    }
    let diff = divisor::total_sum(&t).abs_diff(count);
    SelftestRow::within("divisor", "hyperbola-count", "x=2000".into(), diff as f64, 0.0)
}

fn check_class_partition(_: ChaCha8Rng) -> SelftestRow {
    let t = divisor::sieve_dk(2000, 3).expect("valid arguments");
    let q = prime(7);
    let units: u64 = (1..7)
        .map(|a| divisor::progression_sum(&t, q, Residue::new(a, q).expect("unit")).expect("unit"))
        .sum();
    let diff = units.abs_diff(divisor::coprime_sum(&t, q));
    SelftestRow::within("divisor", "class-partition", "x=2000 q=7".into(), diff as f64, 0.0)
}

fn check_multiplicativity(mut rng: ChaCha8Rng) -> SelftestRow {
    let t = divisor::sieve_dk(10_000, 3).expect("valid arguments");
    let mut bad = 0;
    let mut done = 0;
    while done < 200 {
        let m = rng.gen_range(2u64..100);
        let n = rng.gen_range(2u64..100);
        if ff::gcd(m, n) != 1 {
            continue;
        }
        if t.get(m * n) != t.get(m) * t.get(n) {
            bad += 1;
        }
        done += 1;
    }
    SelftestRow::within("divisor", "multiplicativity", "200 coprime pairs".into(), bad as f64, 0.0)
}

fn check_block_decomposition(_: ChaCha8Rng) -> SelftestRow {
    let t = divisor::sieve_dk(500, 3).expect("valid arguments");
    let q = prime(7);
    let a = Residue::new(1, q).expect("unit");
    let r = divisor::decompose_lemma964(&t, q, a, 1.5).expect("valid arguments");
    SelftestRow::within(
        "divisor",
        "block-reassembly",
        "x=500 q=7 B=1.5 vs 4x envelope".into(),
        r.residual,
        4.0 * r.envelope,
    )
}

fn check_table_codec(_: ChaCha8Rng) -> SelftestRow {
    let t = divisor::sieve_dk(777, 3).expect("valid arguments");
    let back = divisor::decode_table(&divisor::encode_table(&t)).expect("own encoding");
    let bad = if back == t { 0.0 } else { 1.0 };
    SelftestRow::within("divisor", "cache-round-trip", "x=777".into(), bad, 0.0)
}

fn check_bilinear_trivial(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(31);
    let a = Residue::new(rng.gen_range(1..31), p).expect("unit");
    let k = PeriodicFunction::delta(a);
    let v = windows::unit_window();
    let r = crate::cancellation::bilinear_sum(&k, &v, &v, 16.0, 16.0).expect("valid windows");
    SelftestRow::within(
        "cancellation",
        "trivial-bound",
        format!("p=31 a={} M=16", a.value()),
        r.value.norm(),
        r.trivial_bound,
    )
}

fn check_grouping(mut rng: ChaCha8Rng) -> SelftestRow {
    let p = prime(31);
    let k = PeriodicFunction::delta(Residue::new(rng.gen_range(1..31), p).expect("unit"));
    let mut coeffs = |n: u64| {
        crate::cancellation::SignedCoeffs::from_fn(n, |_| {
            Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.28))
        })
    };
    let (a, b, c) = (coeffs(5), coeffs(5), coeffs(7));
    let direct = crate::cancellation::trilinear_sum(&k, &a, &b, &c).expect("bounded").value;
    let grouped = crate::cancellation::trilinear_grouped(&k, &a, &b, &c);
    SelftestRow::within(
        "cancellation",
        "grouping-identity",
        "p=31 caps=(5 5 7)".into(),
        (direct - grouped).norm(),
        1e-10,
    )
}

fn check_smoke_mean(_: ChaCha8Rng) -> SelftestRow {
    let mean = crate::cancellation::mean_cancellation(prime(101)).expect("valid windows");
    // sanity ceiling only; the cross-p trend is a soft check elsewhere
    SelftestRow::within("cancellation", "mean-cancellation", "p=101 M=10".into(), mean, 5.0)
}

fn check_averaged_triangle(_: ChaCha8Rng) -> SelftestRow {
    use crate::experiments::{averaged_scan, ModulusSelect, ScanConfig};
    let cfg = ScanConfig {
        xs: vec![2000],
        moduli: ModulusSelect::Theta(0.4),
        a: 1,
        big_a: 1.0,
        big_b: 2.0,
        output: None,
    };
    let r = &averaged_scan(&cfg).expect("valid config")[0];
    let excess = (r.sigma0 - r.sigma1).abs() - r.sum_abs_delta_smooth;
    SelftestRow::within("experiments", "signed-split-triangle", "x=2000".into(), excess, 1e-9)
}

fn check_averaged_reproducible(_: ChaCha8Rng) -> SelftestRow {
    use crate::experiments::{averaged_scan, ModulusSelect, ScanConfig};
    let cfg = ScanConfig {
        xs: vec![2000],
        moduli: ModulusSelect::Theta(0.4),
        a: 1,
        big_a: 1.0,
        big_b: 2.0,
        output: None,
    };
    let r1 = &averaged_scan(&cfg).expect("valid config")[0];
    let r2 = &averaged_scan(&cfg).expect("valid config")[0];
    let bad = [
        r1.sum_abs_delta.to_bits() != r2.sum_abs_delta.to_bits(),
        r1.sigma0.to_bits() != r2.sigma0.to_bits(),
        r1.sigma1.to_bits() != r2.sigma1.to_bits(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    SelftestRow::within("experiments", "bitwise-reproducible", "x=2000".into(), bad as f64, 0.0)
}

fn check_scan_norm_bound(_: ChaCha8Rng) -> SelftestRow {
    use crate::experiments::{single_scan, ModulusSelect, ScanConfig};
    let cfg = ScanConfig {
        xs: vec![2000],
        moduli: ModulusSelect::Theta(0.45),
        a: 1,
        big_a: 1.0,
        big_b: 2.0,
        output: None,
    };
    let records = single_scan(&cfg).expect("valid config");
    let worst = records.iter().map(|r| r.norm_delta.abs()).fold(0.0, f64::max);
    let cube = (2.0 * 2000f64).ln().powi(3);
    SelftestRow::within("experiments", "normalized-error-bound", "x=2000".into(), worst, cube)
}

fn check_config_round_trip(_: ChaCha8Rng) -> SelftestRow {
    let text = "# comment\nkey_a = 17\npath = /tmp/x.csv\n";
    let parsed = crate::config::Config::parse(text);
    let bad = match parsed {
        Ok(c) => {
            (c.get("key_a") != Some("17")) as u32 + (c.get("path") != Some("/tmp/x.csv")) as u32
        }
        Err(_) => 9,
    };
    SelftestRow::within("config", "parse-round-trip", "2 keys".into(), bad as f64, 0.0)
}

type Check = fn(ChaCha8Rng) -> SelftestRow;

const CHECKS: &[Check] = &[
    check_inverse_table,
    check_euler_phi,
    check_fourier_involution,
    check_parseval,
    check_weil_bound,
    check_kloosterman_fft_vs_direct,
    check_partition_unity,
    check_quadrature,
    check_dual_tail,
    check_region_verdicts,
    check_poisson_random,
    check_poisson_delta_large,
    check_tempered,
    check_abcd,
    check_abcd_linearity,
    check_lemma_1060,
    check_phi_identity,
    check_sieve_vs_brute,
    check_hyperbola,
    check_class_partition,
    check_multiplicativity,
    check_block_decomposition,
    check_table_codec,
    check_bilinear_trivial,
    check_grouping,
    check_smoke_mean,
    check_averaged_triangle,
    check_averaged_reproducible,
    check_scan_norm_bound,
    check_config_round_trip,
];

/// Run the full battery. `threads = 0` uses the ambient rayon pool; any
/// other value runs the sweep inside a dedicated pool of that size. The
/// CSV is byte-identical for a fixed seed regardless.
pub fn run_selftest(seed: u64, threads: usize) -> Result<SelftestReport> {
    let sweep = || -> Vec<SelftestRow> {
        use rayon::prelude::*;
        CHECKS
            .par_iter()
            .enumerate()
            .map(|(i, check)| check(rng_for(seed, i as u64)))
            .collect()
    };
    let rows = if threads == 0 {
        sweep()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(sweep)
    };

    let mut csv = String::from(SELFTEST_CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row().join(","));
        csv.push('\n');
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let failed = rows.len() - passed;
    Ok(SelftestReport { rows, csv, passed, failed })
}
