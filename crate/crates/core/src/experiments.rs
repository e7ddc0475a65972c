//! End-to-end empirical studies over real divisor tables: per-modulus
//! error scans, averaged scans over a dyadic modulus window with signed
//! main-term splits, and the averaged coprime-sum identity check.
//!
//! Everything here reduces in ascending modulus order with compensated
//! summation, so reports are bitwise reproducible whatever thread count
//! computed the per-modulus pieces.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csvout;
use crate::divisor::{
    coprime_sum, error_term, progression_sum, sieve_dk, write_scan_csv,
    ScanRecord,
};
use crate::ff::{divisor_count, euler_phi, gcd, primes_in, Prime, Residue};
use crate::kahan::{KahanComplex, KahanSum};
use crate::windows::{dyadic_piece, SmoothWindow};
use crate::{Error, Result};

/// Largest table the scan grid will build by default; beyond this the
/// build time and memory stop being desk-scale.
pub const MAX_SCAN_X: u64 = 10_000_000;

/// How the moduli of a scan are chosen for each x.
#[derive(Clone, Copy, Debug)]
pub enum ModulusSelect {
    /// All primes `q <= x^theta`.
    Theta(f64),
    /// All primes in the window `lo <= q <= hi`.
    Range(u64, u64),
}

/// Parameters shared by the scan drivers.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    /// Table sizes, ascending.
    pub xs: Vec<u64>,
    pub moduli: ModulusSelect,
    /// Fixed residue, nonzero; reduced modulo each q.
    pub a: i64,
    /// Log-power in the comparison scale x / log^A(2x).
    pub big_a: f64,
    /// Sharpness of the block decomposition behind the smooth sums.
    pub big_b: f64,
    pub output: Option<PathBuf>,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.xs.is_empty() {
            return Err(Error::invalid("no x values"));
        }
        if self.xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("x values must be strictly ascending"));
        }
        let x_min = self.xs[0];
        if *self.xs.last().expect("nonempty") > MAX_SCAN_X {
            return Err(Error::invalid(format!("x beyond the {MAX_SCAN_X} grid limit")));
        }
        if self.a == 0 {
            return Err(Error::invalid("residue a must be nonzero"));
        }
        match self.moduli {
            ModulusSelect::Theta(t) => {
                if !(t > 0.0 && t <= 0.99) {
                    return Err(Error::invalid(format!(
                        "modulus exponent {t} outside (0, 99/100]"
                    )));
                }
            }
            ModulusSelect::Range(lo, hi) => {
                if lo <= 1 || hi < lo || hi >= x_min {
                    return Err(Error::invalid(format!(
                        "modulus window [{lo}, {hi}] must sit inside (1, x)"
                    )));
                }
            }
        }
        if !(self.big_a.is_finite() && self.big_b >= 1.0) {
            return Err(Error::invalid("need finite A and B >= 1"));
        }
        Ok(())
    }

    /// The moduli scanned at table size x, ascending.
    fn primes_for(&self, x: u64) -> Vec<Prime> {
        match self.moduli {
            ModulusSelect::Theta(t) => {
                let hi = (x as f64).powf(t).floor() as u64;
                primes_in(2, hi + 1)
            }
            ModulusSelect::Range(lo, hi) => primes_in(lo, hi + 1),
        }
    }
}

/// Per-modulus error records over the whole (x, q) grid of the config,
/// ascending in x then q. Moduli dividing `a` are skipped (no unit class).
/// On the smallest modulus of each x the exact class identity
/// `sum over units a of (phi(q) S(x;q,a) - S*(x;q)) = 0` is enforced.
pub fn single_scan(cfg: &ScanConfig) -> Result<Vec<ScanRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &x in &cfg.xs {
        let table = sieve_dk(x, 3)?;
        let primes: Vec<Prime> =
            cfg.primes_for(x).into_iter().filter(|q| cfg.a.unsigned_abs() % q.get() != 0).collect();
        let batch: Vec<ScanRecord> = primes
            .par_iter()
            .map(|&q| error_term(&table, q, Residue::from_int(cfg.a, q)))
            .collect::<Result<_>>()?;
        if let Some(&q) = primes.first() {
            let star = coprime_sum(&table, q) as i128;
            let phi = euler_phi(q.get()) as i128;
            let mut total = 0i128;
            for u in 1..q.get() {
                let s = progression_sum(&table, q, Residue::new(u, q)?)? as i128;
                total += phi * s - star;
            }
            assert_eq!(total, 0, "class partition identity failed at q={}", q.get());
        }
        records.extend(batch);
    }
    if let Some(path) = &cfg.output {
        let mut file = std::fs::File::create(path)?;
        write_scan_csv(&mut file, &records)?;
    }
    Ok(records)
}

/// One averaged scan: errors summed over a prime window at one table size.
///
/// The sharp side follows the distribution theorem: `sum of |delta(x;q,a)|`
/// over the window's primes not dividing a. The signed split follows the
/// averaged-sum identity: with the balanced dyadic block `M = 2^l`,
/// `sigma0 = sum of c_q S(M; q, a)` and `sigma1 = sum of c_q S*(M;q)/phi(q)`
/// over the same primes, where `c_q` is the sign of the smooth error (so
/// `sigma0 - sigma1` recovers the smooth `sum |delta|`). Signs taken from
/// the sharp errors instead are reported alongside; which convention a
/// reader wants depends on which sum they are bounding.
#[derive(Clone, Copy, Debug)]
pub struct AveragedReport {
    /// Nominal window start.
    pub q_nominal: f64,
    pub x: u64,
    pub a: i64,
    pub prime_count: u64,
    /// `sum |delta(x;q,a)|`, sharp sums.
    pub sum_abs_delta: f64,
    /// `sum |delta_smooth(M;q,a)|` over the same primes.
    pub sum_abs_delta_smooth: f64,
    /// Signed splits with smooth-sign `c_q`.
    pub sigma0: f64,
    pub sigma1: f64,
    /// The same splits with sharp-sign `c_q`.
    pub sigma0_sharp: f64,
    pub sigma1_sharp: f64,
    /// Comparison scale `x / log^A(2x)`.
    pub scale: f64,
    /// The balanced dyadic exponent behind the smooth sums.
    pub block_exponent: u32,
}

pub const AVERAGED_CSV_HEADER: &str = "Q,x,a,sum_abs_delta,sigma0,sigma1,scale";

impl AveragedReport {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            csvout::fmt_f64(self.q_nominal),
            self.x.to_string(),
            self.a.to_string(),
            csvout::fmt_f64(self.sum_abs_delta),
            csvout::fmt_f64(self.sigma0),
            csvout::fmt_f64(self.sigma1),
            csvout::fmt_f64(self.scale),
        ]
    }
}

pub fn write_averaged_csv<W: std::io::Write>(
    out: &mut W,
    reports: &[AveragedReport],
) -> Result<()> {
    writeln!(out, "{AVERAGED_CSV_HEADER}")?;
    for r in reports {
        csvout::write_row(out, &r.csv_row())?;
    }
    Ok(())
}

/// Largest l with `2^(3l) <= x`: the balanced block scale.
pub fn balanced_block_exponent(x: u64) -> u32 {
    let mut ell = 0u32;
    while 1u128 << (3 * (ell + 1)) <= x as u128 {
        ell += 1;
    }
    ell
}

/// Integer weights of a window, tabulated once per scan.
fn window_weights(v: &SmoothWindow) -> Vec<(u64, f64)> {
    let (lo, hi) = v.support();
    let mut out = Vec::new();
    for m in (lo.floor() as i64 + 1).max(1)..=hi.ceil() as i64 {
        let w = v.eval(m as f64);
        if w != 0.0 {
            out.push((m as u64, w));
        }
    }
    out
}

/// Smooth block sums at one modulus: (progression sum for class a,
/// coprime sum), both plain doubles.
fn smooth_block_sums(
    weights: &[Vec<(u64, f64)>; 3],
    q: Prime,
    a: Residue,
) -> (f64, f64) {
    let qv = q.get();
    // class sums of the third coordinate
    let mut class = vec![KahanSum::new(); qv as usize];
    for &(m, w) in &weights[2] {
        class[(m % qv) as usize].add(w);
    }
    let class: Vec<f64> = class.into_iter().map(|k| k.value()).collect();
    let inv = crate::ff::inverse_table(q);

    let mut progression = KahanSum::new();
    for &(m1, w1) in &weights[0] {
        for &(m2, w2) in &weights[1] {
            let m12 = crate::ff::mul_mod(m1 % qv, m2 % qv, qv);
            if m12 == 0 {
                continue;
            }
            let target = crate::ff::mul_mod(a.value(), inv[m12 as usize], qv);
            progression.add(w1 * w2 * class[target as usize]);
        }
    }

    let single_coprime = |w: &[(u64, f64)]| {
        let mut acc = KahanSum::new();
        for &(m, wm) in w {
            if m % qv != 0 {
                acc.add(wm);
            }
        }
        acc.value()
    };
    let coprime: f64 = weights.iter().map(|w| single_coprime(w)).product();
    (progression.value(), coprime)
}

/// Averaged scans, one report per x. The modulus window is `(Q, 2Q]` when
/// the config selects by exponent (`Q = x^theta`), or the explicit window.
pub fn averaged_scan(cfg: &ScanConfig) -> Result<Vec<AveragedReport>> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for &x in &cfg.xs {
        let (q_nominal, lo, hi) = match cfg.moduli {
            ModulusSelect::Theta(t) => {
                let q = (x as f64).powf(t);
                (q, q.floor() as u64 + 1, (2.0 * q).floor() as u64)
            }
            ModulusSelect::Range(lo, hi) => (lo as f64, lo, hi),
        };
        let table = sieve_dk(x, 3)?;
        let ell = balanced_block_exponent(x);
        let weights = [
            window_weights(&dyadic_piece(ell)),
            window_weights(&dyadic_piece(ell)),
            window_weights(&dyadic_piece(ell)),
        ];
        let primes = primes_in(lo, hi + 1);

        struct PerModulus {
            abs_sharp: f64,
            abs_smooth: f64,
            sign_smooth: f64,
            sign_sharp: f64,
            s_smooth: f64,
            star_smooth: f64,
        }
        let rows: Vec<Option<PerModulus>> = primes
            .par_iter()
            .map(|&q| {
                let qv = q.get();
                if cfg.a.unsigned_abs() % qv == 0 {
                    // c_q = 0: the modulus contributes nothing anywhere
                    return Ok(None);
                }
                let a = Residue::from_int(cfg.a, q);
                let s = progression_sum(&table, q, a)? as i128;
                let star = coprime_sum(&table, q) as i128;
                let phi = euler_phi(qv) as i128;
                let numer = phi * s - star;
                let (s_smooth, star_smooth) = smooth_block_sums(&weights, q, a);
                let delta_smooth = s_smooth - star_smooth / (qv - 1) as f64;
                Ok(Some(PerModulus {
                    abs_sharp: numer.unsigned_abs() as f64 / phi as f64,
                    abs_smooth: delta_smooth.abs(),
                    sign_smooth: if delta_smooth > 0.0 {
                        1.0
                    } else if delta_smooth < 0.0 {
                        -1.0
                    } else {
                        0.0
                    },
                    sign_sharp: numer.signum() as f64,
                    s_smooth,
                    star_smooth: star_smooth / (qv - 1) as f64,
                }))
            })
            .collect::<Result<_>>()?;

        // ordered reduction, ascending q
        let mut abs_sharp = KahanSum::new();
        let mut abs_smooth = KahanSum::new();
        let mut sigma0 = KahanSum::new();
        let mut sigma1 = KahanSum::new();
        let mut sigma0_sharp = KahanSum::new();
        let mut sigma1_sharp = KahanSum::new();
        let mut count = 0u64;
        for row in rows.into_iter().flatten() {
            count += 1;
            abs_sharp.add(row.abs_sharp);
            abs_smooth.add(row.abs_smooth);
            sigma0.add(row.sign_smooth * row.s_smooth);
            sigma1.add(row.sign_smooth * row.star_smooth);
            sigma0_sharp.add(row.sign_sharp * row.s_smooth);
            sigma1_sharp.add(row.sign_sharp * row.star_smooth);
        }
        let log2x = (2.0 * x as f64).ln();
        reports.push(AveragedReport {
            q_nominal,
            x,
            a: cfg.a,
            prime_count: count,
            sum_abs_delta: abs_sharp.value(),
            sum_abs_delta_smooth: abs_smooth.value(),
            sigma0: sigma0.value(),
            sigma1: sigma1.value(),
            sigma0_sharp: sigma0_sharp.value(),
            sigma1_sharp: sigma1_sharp.value(),
            scale: x as f64 / log2x.powf(cfg.big_a),
            block_exponent: balanced_block_exponent(x),
        });
    }
    if let Some(path) = &cfg.output {
        let mut file = std::fs::File::create(path)?;
        write_averaged_csv(&mut file, &reports)?;
    }
    Ok(reports)
}

/// Outcome of the averaged coprime-sum check.
#[derive(Clone, Copy, Debug)]
pub struct WeightedAverageReport {
    /// `sum over q of sigma_q S*(V; q) / phi(q)`.
    pub lhs: Complex64,
    /// `Vhat1(0) Vhat2(0) Vhat3(0) * sum over q of sigma_q (phi(q)/q)^3 / phi(q)`.
    pub main: Complex64,
    pub deviation: f64,
    /// `M2 M3 max d(q)^3`, the stated driver of the error (log factors and
    /// the implied constant are not modeled).
    pub envelope: f64,
}

/// Coprime single sum for arbitrary modulus.
fn coprime_single_sum(v: &SmoothWindow, q: u64) -> f64 {
    let (lo, hi) = v.support();
    let mut acc = KahanSum::new();
    for m in (lo.floor() as i64 + 1).max(1)..=hi.ceil() as i64 {
        if gcd(m as u64, q) == 1 {
            acc.add(v.eval(m as f64));
        }
    }
    acc.value()
}

/// Weighted average of smooth coprime sums over consecutive moduli
/// `q = q_start, q_start+1, ...` (one weight each, `|sigma| <= 1`),
/// compared against the separated main term.
pub fn check_lemma_6_4(
    sigma: &[Complex64],
    v: &[SmoothWindow; 3],
    q_start: u64,
) -> Result<WeightedAverageReport> {
    if q_start == 0 {
        return Err(Error::invalid("moduli start at 1"));
    }
    if sigma.iter().any(|s| s.norm() > 1.0 + 1e-12) {
        return Err(Error::invalid("weights must satisfy |sigma| <= 1"));
    }
    let mut lhs = KahanComplex::new();
    let mut main_sum = KahanComplex::new();
    let mut max_d3 = 0f64;
    for (i, &s) in sigma.iter().enumerate() {
        let q = q_start + i as u64;
        if s == Complex64::new(0.0, 0.0) {
            continue;
        }
        let phi = euler_phi(q) as f64;
        let star: f64 = v.iter().map(|w| coprime_single_sum(w, q)).product();
        lhs.add(s * (star / phi));
        main_sum.add(s * (phi / q as f64).powi(3) / phi);
        max_d3 = max_d3.max((divisor_count(q) as f64).powi(3));
    }
    let vhat0: f64 = v.iter().map(|w| w.integral()).product();
    let main = main_sum.value() * vhat0;
    let lhs = lhs.value();
    Ok(WeightedAverageReport {
        lhs,
        main,
        deviation: (lhs - main).norm(),
        envelope: v[1].scale() * v[2].scale() * max_d3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windows::unit_window;

    fn cfg(xs: Vec<u64>, moduli: ModulusSelect, a: i64) -> ScanConfig {
        ScanConfig { xs, moduli, a, big_a: 1.0, big_b: 2.0, output: None }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(vec![], ModulusSelect::Theta(0.5), 1).validate().is_err());
        assert!(cfg(vec![100, 100], ModulusSelect::Theta(0.5), 1).validate().is_err());
        assert!(cfg(vec![100], ModulusSelect::Theta(0.995), 1).validate().is_err());
        assert!(cfg(vec![100], ModulusSelect::Theta(0.5), 0).validate().is_err());
        assert!(cfg(vec![100], ModulusSelect::Range(7, 200), 1).validate().is_err());
        assert!(cfg(vec![100], ModulusSelect::Range(7, 31), 1).validate().is_ok());
        assert!(cfg(vec![MAX_SCAN_X + 1], ModulusSelect::Theta(0.5), 1).validate().is_err());
    }

    #[test]
    fn single_record_scan() {
        let c = cfg(vec![10_000], ModulusSelect::Range(97, 97), 1);
        let records = single_scan(&c).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.q.get(), 97);
        // delta is exact up to the one division
        let table = sieve_dk(10_000, 3).unwrap();
        let s = progression_sum(&table, r.q, r.a).unwrap();
        assert_eq!(r.s, s);
        let star = coprime_sum(&table, r.q);
        let expected = (96 * s as i128 - star as i128) as f64 / 96.0;
        assert_eq!(r.delta.to_bits(), expected.to_bits());
    }

    #[test]
    fn unit_sweep_class_identity() {
        // the sampled in-scan assertion plus an explicit exact resum
        let c = cfg(vec![3_000], ModulusSelect::Range(97, 97), 1);
        single_scan(&c).unwrap();

        let table = sieve_dk(3_000, 3).unwrap();
        let q = Prime::new(97).unwrap();
        let star = coprime_sum(&table, q) as i128;
        let mut total = 0i128;
        for a in 1..97 {
            let s = progression_sum(&table, q, Residue::new(a, q).unwrap()).unwrap();
            total += 96 * s as i128 - star;
        }
        assert_eq!(total, 0);
    }

    #[test]
    fn scan_skips_moduli_dividing_a() {
        let c = cfg(vec![1_000], ModulusSelect::Range(5, 11), 7);
        let records = single_scan(&c).unwrap();
        let qs: Vec<u64> = records.iter().map(|r| r.q.get()).collect();
        assert_eq!(qs, vec![5, 11]);
    }

    #[test]
    fn records_are_periodic_in_a() {
        let table = sieve_dk(2_000, 3).unwrap();
        let q = Prime::new(31).unwrap();
        let r1 = error_term(&table, q, Residue::from_int(4, q)).unwrap();
        let r2 = error_term(&table, q, Residue::from_int(4 + 31, q)).unwrap();
        assert_eq!(r1.delta.to_bits(), r2.delta.to_bits());
        assert_eq!(r1.s, r2.s);
    }

    #[test]
    fn averaged_scan_empty_window() {
        // 24..28 holds no prime
        let c = cfg(vec![1_000], ModulusSelect::Range(24, 28), 1);
        let reports = averaged_scan(&c).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.prime_count, 0);
        assert_eq!(r.sum_abs_delta, 0.0);
        assert_eq!(r.sigma0, 0.0);
        assert_eq!(r.sigma1, 0.0);
        assert!(r.scale > 0.0);
    }

    #[test]
    fn averaged_scan_at_ten_thousand() {
        let c = cfg(vec![10_000], ModulusSelect::Theta(0.45), 1);
        let reports = averaged_scan(&c).unwrap();
        let r = &reports[0];
        assert!(r.prime_count > 0);
        assert!(r.sum_abs_delta > 0.0);
        assert!(r.scale > 0.0);
        // triangle inequality within the smooth family, both conventions
        assert!(r.sum_abs_delta_smooth >= (r.sigma0 - r.sigma1).abs() - 1e-9);
        assert!(r.sum_abs_delta_smooth >= (r.sigma0_sharp - r.sigma1_sharp).abs() - 1e-9);
        // smooth signs are chosen to make the split recover sum |delta|
        assert!(
            ((r.sigma0 - r.sigma1) - r.sum_abs_delta_smooth).abs() <= 1e-9,
            "{} vs {}",
            r.sigma0 - r.sigma1,
            r.sum_abs_delta_smooth
        );
    }

    #[test]
    fn averaged_scan_drops_moduli_dividing_a() {
        // a = 6: the primes 2 and 3 get c_q = 0 and contribute nothing
        let c = cfg(vec![5_000], ModulusSelect::Range(2, 60), 6);
        let reports = averaged_scan(&c).unwrap();
        let all = primes_in(2, 61).len() as u64;
        assert_eq!(reports[0].prime_count, all - 2);

        // same window, a coprime to everything: both extra primes count
        let c = cfg(vec![5_000], ModulusSelect::Range(2, 60), 1);
        let reports = averaged_scan(&c).unwrap();
        assert_eq!(reports[0].prime_count, all);
    }

    #[test]
    fn averaged_report_bitwise_reproducible() {
        let c = cfg(vec![2_000], ModulusSelect::Theta(0.4), 1);
        let r1 = averaged_scan(&c).unwrap();
        let r2 = averaged_scan(&c).unwrap();
        assert_eq!(r1[0].sum_abs_delta.to_bits(), r2[0].sum_abs_delta.to_bits());
        assert_eq!(r1[0].sigma0.to_bits(), r2[0].sigma0.to_bits());
        assert_eq!(r1[0].sigma1.to_bits(), r2[0].sigma1.to_bits());
    }

    #[test]
    fn balanced_block_exponents() {
        assert_eq!(balanced_block_exponent(8), 1);
        assert_eq!(balanced_block_exponent(1_000_000), 6);
        assert_eq!(balanced_block_exponent(10_000_000), 7);
    }

    #[test]
    fn averaged_identity_zero_weights() {
        let v = [unit_window(), unit_window(), unit_window()];
        let sigma = vec![Complex64::new(0.0, 0.0); 20];
        let r = check_lemma_6_4(&sigma, &v, 10).unwrap();
        assert_eq!(r.lhs, Complex64::new(0.0, 0.0));
        assert_eq!(r.main, Complex64::new(0.0, 0.0));
        assert_eq!(r.deviation, 0.0);
    }

    #[test]
    fn averaged_identity_single_modulus() {
        let m = 16.0;
        let v = [
            unit_window().scaled(m).unwrap(),
            unit_window().scaled(m).unwrap(),
            unit_window().scaled(m).unwrap(),
        ];
        let sigma = vec![Complex64::new(1.0, 0.0)];
        let q = 7u64;
        let r = check_lemma_6_4(&sigma, &v, q).unwrap();
        // oracle: direct triple sum over coprime triples, plain loops
        let mut star = 0.0;
        let range = || 1..=(2.0 * m).ceil() as i64;
        for m1 in range() {
            for m2 in range() {
                for m3 in range() {
                    if (m1 * m2 * m3) as u64 % q != 0 {
                        let w = v[0].eval(m1 as f64)
                            * v[1].eval(m2 as f64)
                            * v[2].eval(m3 as f64);
                        star += w;
                    }
                }
            }
        }
        let lhs_oracle = star / 6.0;
        assert!(
            (r.lhs.re - lhs_oracle).abs() <= 1e-9 * lhs_oracle.abs().max(1.0),
            "{} vs {lhs_oracle}",
            r.lhs.re
        );
        assert!(r.deviation < r.lhs.norm(), "main term must capture most of the sum");
    }

    #[test]
    fn averaged_identity_rejects_oversized_weights() {
        let v = [unit_window(), unit_window(), unit_window()];
        let sigma = vec![Complex64::new(1.5, 0.0)];
        assert!(check_lemma_6_4(&sigma, &v, 5).is_err());
    }

    #[test]
    fn averaged_identity_deviation_sublinear_in_first_scale() {
        let sigma: Vec<Complex64> =
            (0..10).map(|i| Complex64::from_polar(1.0, 0.37 * i as f64)).collect();
        let mut devs = Vec::new();
        for m1 in [16.0, 32.0, 64.0] {
            let v = [
                unit_window().scaled(m1).unwrap(),
                unit_window().scaled(8.0).unwrap(),
                unit_window().scaled(8.0).unwrap(),
            ];
            devs.push(check_lemma_6_4(&sigma, &v, 20).unwrap().deviation);
        }
        // quadrupling M1 must not quadruple the deviation
        assert!(
            devs[2] <= 4.0 * devs[0].max(1e-12),
            "deviation grew linearly: {devs:?}"
        );
    }

    #[test]
    fn averaged_csv_shape() {
        let c = cfg(vec![1_000], ModulusSelect::Range(7, 31), 1);
        let reports = averaged_scan(&c).unwrap();
        let mut buf = Vec::new();
        write_averaged_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(AVERAGED_CSV_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
    }

    #[test]
    fn scan_csv_written_to_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.csv");
        let mut c = cfg(vec![500], ModulusSelect::Range(7, 13), 1);
        c.output = Some(path.clone());
        single_scan(&c).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,q,a,S,main,delta,norm_delta\n"));
        assert_eq!(text.lines().count(), 1 + primes_in(7, 14).len());
    }

    #[test]
    fn normalized_errors_stay_bounded_small_grid() {
        // the full grid lives in the acceptance suite; spot the envelope here
        let c = cfg(vec![100_000], ModulusSelect::Theta(0.45), 1);
        let records = single_scan(&c).unwrap();
        let cube = (2.0 * 1e5f64).ln().powi(3);
        for r in records {
            assert!(
                r.norm_delta.abs() <= cube,
                "q delta / x = {} beyond log^3 = {cube}",
                r.norm_delta
            );
        }
    }
}
