//! Exact divisor-function tables and the arithmetic sums built on them:
//! progression sums, coprime and total sums, smooth triple sums, the
//! block-decomposition of a progression sum into smooth pieces, and the
//! normalized error terms that the scan experiments record.
//!
//! Tables are exact integer arithmetic throughout; floating point enters
//! only where a value is a ratio (main terms, normalized errors) or a
//! smoothly weighted sum.

use crate::csvout;
use crate::ff::{euler_phi, Prime, Residue};
use crate::identities::triple_sum_weighted;
use crate::kahan::KahanSum;
use crate::trace::PeriodicFunction;
use crate::windows::{partition_piece, SmoothWindow};
use crate::{Error, Result};

/// Largest table limit; a flat 32-bit table at this size is 4 GB, the
/// outer edge of desk-scale.
pub const MAX_TABLE_LIMIT: u64 = 1_000_000_000;

/// Exact values `d_k(1..=x)` as a flat 32-bit table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorTable {
    x: u64,
    k: u32,
    values: Vec<u32>,
}

impl DivisorTable {
    #[inline]
    pub fn limit(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    /// `d_k(n)`; n is 1-based and must be within the table.
    #[inline]
    pub fn get(&self, n: u64) -> u64 {
        self.values[(n - 1) as usize] as u64
    }

    #[inline]
    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Build `d_k` up to `x` by `k - 1` Dirichlet-convolution passes with the
/// all-ones sequence.
pub fn sieve_dk(x: u64, k: u32) -> Result<DivisorTable> {
    if x == 0 || x > MAX_TABLE_LIMIT {
        return Err(Error::invalid(format!("table limit {x} outside 1..=1e9")));
    }
    if !(2..=4).contains(&k) {
        return Err(Error::invalid(format!("divisor order k={k} outside 2..=4")));
    }
    let n = x as usize;
    let mut cur: Vec<u32> = vec![1; n];
    for _ in 1..k {
        let mut next: Vec<u32> = vec![0; n];
        for d in 1..=n {
            let vd = cur[d - 1];
            let mut m = d;
            while m <= n {
                next[m - 1] = next[m - 1].checked_add(vd).ok_or_else(|| {
                    Error::invalid(format!("d_k overflowed 32 bits at n={m}"))
                })?;
                m += d;
            }
        }
        cur = next;
    }
    Ok(DivisorTable { x, k, values: cur })
}

/// `S(x; q, a) = sum over n = a mod q, n <= x, of d_k(n)`, exact.
pub fn progression_sum(table: &DivisorTable, q: Prime, a: Residue) -> Result<u64> {
    if a.modulus().get() != q.get() {
        return Err(Error::invalid("residue modulus does not match q"));
    }
    if a.is_zero() {
        return Err(Error::invalid("progression class must be coprime to q"));
    }
    let mut sum = 0u64;
    let mut n = a.value();
    while n != 0 && n <= table.x {
        sum += table.get(n);
        n += q.get();
    }
    Ok(sum)
}

/// `S*(x; q) = sum over n <= x coprime to q of d_k(n)`, exact.
pub fn coprime_sum(table: &DivisorTable, q: Prime) -> u64 {
    total_sum(table) - multiples_sum(table, q)
}

/// `S(x) = sum over n <= x of d_k(n)`, exact.
pub fn total_sum(table: &DivisorTable) -> u64 {
    table.values.iter().map(|&v| v as u64).sum()
}

fn multiples_sum(table: &DivisorTable, q: Prime) -> u64 {
    let mut sum = 0u64;
    let mut n = q.get();
    while n <= table.x {
        sum += table.get(n);
        n += q.get();
    }
    sum
}

/// The smooth progression sum
/// `S(V; q, a) = sum over m1 m2 m3 = a mod q of V1(m1)V2(m2)V3(m3)`.
///
/// Evaluated through the same code path as the combined-formula left-hand
/// side (delta kernel at `a`), so the two agree bit for bit.
pub fn smooth_triple_sum(v: &[SmoothWindow; 3], q: Prime, a: Residue) -> Result<f64> {
    if a.modulus().get() != q.get() {
        return Err(Error::invalid("residue modulus does not match q"));
    }
    if a.is_zero() {
        return Err(Error::invalid("progression class must be coprime to q"));
    }
    Ok(triple_sum_weighted(v, &PeriodicFunction::delta(a)).re)
}

/// The unrestricted companion `S(V) = sum over all m of V1 V2 V3`, by the
/// direct triple loop in the same ascending order.
pub fn smooth_full_sum(v: &[SmoothWindow; 3]) -> f64 {
    let range = |w: &SmoothWindow| {
        let (lo, hi) = w.support();
        (lo.floor() as i64 + 1).max(1)..=hi.ceil() as i64
    };
    let mut acc = KahanSum::new();
    for m1 in range(&v[0]) {
        let w1 = v[0].eval(m1 as f64);
        if w1 == 0.0 {
            continue;
        }
        for m2 in range(&v[1]) {
            let w2 = v[1].eval(m2 as f64);
            if w2 == 0.0 {
                continue;
            }
            let w12 = w1 * w2;
            for m3 in range(&v[2]) {
                let w3 = v[2].eval(m3 as f64);
                if w3 != 0.0 {
                    acc.add(w12 * w3);
                }
            }
        }
    }
    acc.value()
}

/// Which congruence constraint a block decomposition sums over.
enum DecomposeClass {
    /// `m1 m2 m3 = a mod q`.
    Progression(u64),
    /// `(m1 m2 m3, q) = 1`.
    Coprime,
}

/// Outcome of reassembling a progression sum from smooth blocks.
#[derive(Clone, Copy, Debug)]
pub struct Lemma964Report {
    /// Sum of all smooth blocks with scale product at most x.
    pub reconstruction: f64,
    /// The exact progression sum it approximates.
    pub direct: f64,
    /// `|reconstruction - direct|`.
    pub residual: f64,
    /// Mass of the blocks in the top window `x log^(-B)(2x) .. x`.
    pub window_mass: f64,
    /// The block ratio `1 + log^(-B)(2x)`.
    pub delta: f64,
    /// The error scale `x log^(2-B)(2x) / q` the residual is judged by.
    pub envelope: f64,
}

/// Decompose `S(x; q, a)` into smooth blocks: a three-fold logarithmic
/// partition with ratio `delta = 1 + log^(-B)(2x)`, keeping the blocks
/// whose scale product `M1 M2 M3` stays at most `x`, evaluated exactly
/// over integer triples. The residual against the exact progression sum
/// is pure boundary truncation: blocks straddling `n = x`.
pub fn decompose_lemma964(
    table: &DivisorTable,
    q: Prime,
    a: Residue,
    big_b: f64,
) -> Result<Lemma964Report> {
    if a.modulus().get() != q.get() {
        return Err(Error::invalid("residue modulus does not match q"));
    }
    if a.is_zero() {
        return Err(Error::invalid("progression class must be coprime to q"));
    }
    if table.k != 3 {
        return Err(Error::invalid("block decomposition is defined for the triple table"));
    }
    let direct = progression_sum(table, q, a)? as f64;
    decompose_impl(table.x, q, DecomposeClass::Progression(a.value()), big_b, direct)
}

/// The coprime analog: reassemble `S*(x; q)` from the same blocks.
pub fn decompose_lemma964_coprime(
    table: &DivisorTable,
    q: Prime,
    big_b: f64,
) -> Result<Lemma964Report> {
    if table.k != 3 {
        return Err(Error::invalid("block decomposition is defined for the triple table"));
    }
    let direct = coprime_sum(table, q) as f64;
    decompose_impl(table.x, q, DecomposeClass::Coprime, big_b, direct)
}

fn decompose_impl(
    x: u64,
    q: Prime,
    class: DecomposeClass,
    big_b: f64,
    direct: f64,
) -> Result<Lemma964Report> {
    if !(big_b >= 1.0) {
        return Err(Error::invalid(format!("block sharpness B={big_b} must be >= 1")));
    }
    let xf = x as f64;
    let log2x = (2.0 * xf).ln();
    let delta = 1.0 + log2x.powf(-big_b);
    let ln_delta = delta.ln();
    // blocks (l1, l2, l3) kept iff M1 M2 M3 = delta^(l1+l2+l3) <= x
    let ell_cap = (xf.ln() / ln_delta).floor() as i64;
    // the top window: scale products in [x log^(-B)(2x), x]
    let ell_window = ((xf.ln() - big_b * log2x.ln()) / ln_delta).ceil() as i64;

    // a coordinate m sits inside at most three pieces: l with
    // delta^(l-1) < m < delta^(l+1)
    let pieces_at = |m: u64| -> Vec<(i64, f64)> {
        let u = (m as f64).ln() / ln_delta;
        let lo = (u - 1.0).floor() as i64;
        let hi = (u + 1.0).ceil() as i64;
        let mut out = Vec::with_capacity(3);
        for ell in lo.max(0)..=hi {
            let w = partition_piece(delta, ell as u32)
                .expect("delta > 1 by construction")
                .eval(m as f64);
            if w != 0.0 {
                out.push((ell, w));
            }
        }
        out
    };

    let qv = q.get();
    // products may exceed x by up to delta^3 before every block is cut
    let reach = (xf * delta.powi(3)).floor() as u64;
    let mut recon = KahanSum::new();
    let mut window = KahanSum::new();
    for m1 in 1..=reach {
        let p1 = pieces_at(m1);
        if p1.is_empty() {
            continue;
        }
        let lim2 = reach / m1;
        if lim2 == 0 {
            break;
        }
        for m2 in 1..=lim2 {
            let m12 = m1 * m2;
            if m12 % qv == 0 {
                // no unit class (and no coprime triple) survives q | m1 m2
                continue;
            }
            let p2 = pieces_at(m2);
            if p2.is_empty() {
                continue;
            }
            let lim3 = reach / m12;
            let (start, step) = match class {
                DecomposeClass::Progression(a) => {
                    // m3 = a * (m1 m2)^(-1) mod q, nonzero since a is a unit
                    let inv = crate::ff::mod_inverse(Residue::new(m12 % qv, q)?)?;
                    (crate::ff::mul_mod(a, inv.value(), qv), qv)
                }
                DecomposeClass::Coprime => (1, 1),
            };
            let mut m3 = start;
            while m3 <= lim3 {
                if matches!(class, DecomposeClass::Coprime) && m3 % qv == 0 {
                    m3 += step;
                    continue;
                }
                let p3 = pieces_at(m3);
                for &(l1, w1) in &p1 {
                    for &(l2, w2) in &p2 {
                        for &(l3, w3) in &p3 {
                            let total = l1 + l2 + l3;
                            if total > ell_cap {
                                continue;
                            }
                            let w = w1 * w2 * w3;
                            recon.add(w);
                            if total >= ell_window {
                                window.add(w);
                            }
                        }
                    }
                }
                m3 += step;
            }
        }
    }

    let reconstruction = recon.value();
    Ok(Lemma964Report {
        reconstruction,
        direct,
        residual: (reconstruction - direct).abs(),
        window_mass: window.value(),
        delta,
        envelope: xf * log2x.powf(2.0 - big_b) / qv as f64,
    })
}

/// One row of a progression-error scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanRecord {
    pub x: u64,
    pub q: Prime,
    pub a: Residue,
    /// Exact progression sum `S(x; q, a)`.
    pub s: u64,
    /// `S*(x; q) / phi(q)`.
    pub main: f64,
    /// `S(x; q, a) - S*(x; q) / phi(q)`.
    pub delta: f64,
    /// `q * delta / x`, the scale the error is judged on.
    pub norm_delta: f64,
}

pub const SCAN_CSV_HEADER: &str = "x,q,a,S,main,delta,norm_delta";

impl ScanRecord {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.x.to_string(),
            self.q.get().to_string(),
            self.a.value().to_string(),
            self.s.to_string(),
            csvout::fmt_f64(self.main),
            csvout::fmt_f64(self.delta),
            csvout::fmt_f64(self.norm_delta),
        ]
    }
}

pub fn write_scan_csv<W: std::io::Write>(out: &mut W, records: &[ScanRecord]) -> Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for r in records {
        csvout::write_row(out, &r.csv_row())?;
    }
    Ok(())
}

/// The progression error `delta = S(x;q,a) - S*(x;q)/phi(q)`, with the
/// integer parts exact: the only rounding is the final division.
pub fn error_term(table: &DivisorTable, q: Prime, a: Residue) -> Result<ScanRecord> {
    let s = progression_sum(table, q, a)?;
    let star = coprime_sum(table, q);
    let phi = euler_phi(q.get());
    // exact numerator phi * S - S*, then one rounding in the division
    let numer = phi as i128 * s as i128 - star as i128;
    let delta = numer as f64 / phi as f64;
    Ok(ScanRecord {
        x: table.x,
        q,
        a,
        s,
        main: star as f64 / phi as f64,
        delta,
        norm_delta: q.get() as f64 * delta / table.x as f64,
    })
}

// ---- binary cache ----------------------------------------------------

const TABLE_MAGIC: [u8; 4] = *b"D3TB";

/// Serialize a table: 16-byte header (magic, k, x) then little-endian
/// 32-bit values.
pub fn encode_table(table: &DivisorTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * table.values.len());
    out.extend_from_slice(&TABLE_MAGIC);
    out.extend_from_slice(&table.k.to_le_bytes());
    out.extend_from_slice(&table.x.to_le_bytes());
    for v in &table.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode and validate a binary table. All structural checks (magic, k,
/// limit, exact length) run before any allocation sized from the header;
/// the cheap value invariants `d_k(1) = 1`, `d_k(2) = k`, and positivity
/// are verified after.
pub fn decode_table(bytes: &[u8]) -> Result<DivisorTable> {
    let fail = |msg: &str| Error::TableFormat(msg.to_string());
    if bytes.len() < 16 {
        return Err(fail("shorter than the 16-byte header"));
    }
    if bytes[0..4] != TABLE_MAGIC {
        return Err(fail("bad magic"));
    }
    let k = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let x = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if !(2..=4).contains(&k) {
        return Err(fail("k outside 2..=4"));
    }
    if x == 0 || x > MAX_TABLE_LIMIT {
        return Err(fail("limit outside 1..=1e9"));
    }
    let body = &bytes[16..];
    if body.len() as u64 != 4 * x {
        return Err(fail("length does not match the declared limit"));
    }
    let values: Vec<u32> = body
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if values[0] != 1 {
        return Err(fail("d_k(1) must be 1"));
    }
    if x >= 2 && values[1] != k {
        return Err(fail("d_k(2) must equal k"));
    }
    if values.iter().any(|&v| v == 0) {
        return Err(fail("divisor counts must be positive"));
    }
    Ok(DivisorTable { x, k, values })
}

pub fn save_table(table: &DivisorTable, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, encode_table(table))?;
    Ok(())
}

pub fn load_table(path: &std::path::Path) -> Result<DivisorTable> {
    decode_table(&std::fs::read(path)?)
}
