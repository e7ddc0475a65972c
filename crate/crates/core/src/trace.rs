//! Complete-sum transforms of p-periodic functions.
//!
//! A [`PeriodicFunction`] is a complex-valued function on `Z/p`. This module
//! provides its unitary discrete Fourier transform, the multiplicative dual
//! transform built from inverses, hyper-Kloosterman sums of any rank (direct
//! nested-inversion evaluation and a bulk path through cyclic convolution
//! over the unit group), and the two-variable transform that couples a
//! function's spectrum to rank-2 Kloosterman sums.
//!
//! Sums are accumulated in ascending residue order with compensation; the
//! direct and convolution paths for Kloosterman values share no code, which
//! is what makes their agreement a meaningful check.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::ff::{self, Prime, Residue, RootsOfUnity};
use crate::kahan::KahanComplex;
use crate::{Error, Result};

/// A complex-valued function on `Z/p`, stored as its `p` values.
#[derive(Clone, Debug)]
pub struct PeriodicFunction {
    modulus: Prime,
    values: Vec<Complex64>,
}

impl PeriodicFunction {
    pub fn new(modulus: Prime, values: Vec<Complex64>) -> Result<PeriodicFunction> {
        if values.len() as u64 != modulus.get() {
            return Err(Error::invalid(format!(
                "periodic function needs {} values, got {}",
                modulus.get(),
                values.len()
            )));
        }
        Ok(PeriodicFunction { modulus, values })
    }

    /// The indicator of a single residue class.
    pub fn delta(a: Residue) -> PeriodicFunction {
        let mut values = vec![Complex64::new(0.0, 0.0); a.modulus().get() as usize];
        values[a.value() as usize] = Complex64::new(1.0, 0.0);
        PeriodicFunction { modulus: a.modulus(), values }
    }

    #[inline]
    pub fn modulus(&self) -> Prime {
        self.modulus
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at any signed integer, by reduction mod p.
    #[inline]
    pub fn at(&self, x: i64) -> Complex64 {
        self.values[self.modulus.reduce(x) as usize]
    }

    /// Value at a canonical residue.
    #[inline]
    pub fn at_res(&self, r: u64) -> Complex64 {
        self.values[r as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = crate::kahan::KahanSum::new();
        for z in &self.values {
            acc.add(z.norm_sqr());
        }
        acc.value()
    }

    /// Pointwise sum of two functions on the same modulus.
    pub fn add(&self, other: &PeriodicFunction) -> Result<PeriodicFunction> {
        if self.modulus != other.modulus {
            return Err(Error::invalid("modulus mismatch in pointwise sum"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(PeriodicFunction { modulus: self.modulus, values })
    }

    /// Dump as CSV with header `residue,re,im`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        use crate::csvout::fmt_f64;
        writeln!(w, "residue,re,im")?;
        for (r, z) in self.values.iter().enumerate() {
            writeln!(w, "{r},{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
        }
        Ok(())
    }
}

/// Unitary discrete Fourier transform:
/// `khat(n) = p^(-1/2) * sum_h K(h) e(hn/p)`.
///
/// Applying it twice reflects the argument: `fourier(fourier(K))(n) = K(-n)`.
pub fn fourier(k: &PeriodicFunction) -> PeriodicFunction {
    let p = k.modulus().get();
    let roots = RootsOfUnity::new(k.modulus());
    let norm = 1.0 / (p as f64).sqrt();
    let values = (0..p)
        .map(|n| {
            let mut acc = KahanComplex::new();
            for h in 0..p {
                acc.add(k.at_res(h) * roots.e_res(ff::mul_mod(h, n, p)));
            }
            acc.value() * norm
        })
        .collect();
    PeriodicFunction { modulus: k.modulus(), values }
}

/// Multiplicative dual transform.
///
/// For `p` not dividing `n`:
/// `kcheck(n) = p^(-1/2) * sum over invertible h of khat(h) e(n*inv(h)/p)`;
/// at `n = 0` the value is `K(0) - khat(0)/sqrt(p)`, which is what the
/// excluded `h = 0` term leaves behind.
pub fn voronoi(k: &PeriodicFunction) -> PeriodicFunction {
    let p = k.modulus().get();
    let khat = fourier(k);
    let roots = RootsOfUnity::new(k.modulus());
    let inv = ff::inverse_table(k.modulus());
    let norm = 1.0 / (p as f64).sqrt();
    let values = (0..p)
        .map(|n| {
            if n == 0 {
                return k.at_res(0) - khat.at_res(0) * norm;
            }
            let mut acc = KahanComplex::new();
            for h in 1..p {
                acc.add(khat.at_res(h) * roots.e_res(ff::mul_mod(n, inv[h as usize], p)));
            }
            acc.value() * norm
        })
        .collect();
    PeriodicFunction { modulus: k.modulus(), values }
}

/// Rank and index shift for a hyper-Kloosterman sum.
#[derive(Clone, Copy, Debug)]
pub struct KloostermanSpec {
    rank: u32,
    shift: i64,
}

impl KloostermanSpec {
    /// `rank >= 1`, `shift != 0`.
    pub fn new(rank: u32, shift: i64) -> Result<KloostermanSpec> {
        if rank == 0 {
            return Err(Error::invalid("kloosterman rank must be >= 1"));
        }
        if shift == 0 {
            return Err(Error::invalid("kloosterman shift must be nonzero"));
        }
        Ok(KloostermanSpec { rank, shift })
    }

    #[inline]
    pub fn rank(&self) -> u32 {
        self.rank
    }

    #[inline]
    pub fn shift(&self) -> i64 {
        self.shift
    }
}

/// Direct evaluation of the rank-k sum at `shift * a`:
///
/// `p^(-(k-1)/2) * sum over x_1..x_k with product = shift*a of e((x_1+...+x_k)/p)`.
///
/// The first `k-1` coordinates run over invertible residues in ascending
/// (lexicographic) order and the last is solved for, so the cost is
/// `(p-1)^(k-1)` terms. With `a = 0` the forced coordinate is 0 and the
/// remaining tuples of the defining sum cancel in closed form, so this is
/// still the literal value: rank 2 gives `-1/sqrt(p)`, rank 3 gives `1/p`.
pub fn kloosterman(spec: &KloostermanSpec, a: Residue) -> Complex64 {
    let p = a.modulus();
    let roots = RootsOfUnity::new(p);
    let inv = ff::inverse_table(p);
    kloosterman_direct(spec.rank, shifted(spec, a), p, &roots, &inv)
}

#[inline]
fn shifted(spec: &KloostermanSpec, a: Residue) -> u64 {
    let p = a.modulus().get();
    ff::mul_mod(a.modulus().reduce(spec.shift), a.value() % p, p)
}

fn kloosterman_direct(rank: u32, target: u64, p: Prime, roots: &RootsOfUnity, inv: &[u64]) -> Complex64 {
    let q = p.get();
    if rank == 1 {
        // single forced coordinate, unit normalization
        return roots.e_res(target);
    }
    let mut acc = KahanComplex::new();
    // depth-first over x_1..x_{k-1} in lexicographic order, carrying the
    // partial sum and product; the last coordinate is forced
    fn rec(
        depth: u32,
        rank: u32,
        sum: u64,
        prod: u64,
        target: u64,
        q: u64,
        roots: &RootsOfUnity,
        inv: &[u64],
        acc: &mut KahanComplex,
    ) {
        if depth == rank - 1 {
            // x_k = target * prod^(-1); zero exactly when target = 0
            let xk = ff::mul_mod(target, inv[prod as usize], q);
            acc.add(roots.e_res((sum + xk) % q));
            return;
        }
        for x in 1..q {
            rec(depth + 1, rank, (sum + x) % q, ff::mul_mod(prod, x, q), target, q, roots, inv, acc);
        }
    }
    rec(0, rank, 0, 1, target, q, roots, inv, &mut acc);
    acc.value() * (q as f64).powf(-((rank - 1) as f64) / 2.0)
}

/// All rank-k values at once, through the unit group's cyclic structure.
///
/// Indexing `F_p^*` by powers of a primitive root turns the k-fold
/// multiplicative convolution of `a -> e(a/p)` into a cyclic convolution of
/// length `p-1`, evaluated here by FFT (forward transform, k-th power,
/// inverse transform). Entry `a` equals the direct sum at `shift * a`; the
/// entry at 0 is filled with the literal degenerate value
/// `(-1)^(k-1) * p^(-(k-1)/2)`.
pub fn kloosterman_all(spec: &KloostermanSpec, p: Prime) -> PeriodicFunction {
    let q = p.get();
    let n = (q - 1) as usize;
    let roots = RootsOfUnity::new(p);
    let g = ff::primitive_root(p);

    // u[j] = e(g^j / p)
    let mut powers = vec![0u64; n];
    let mut x = 1u64;
    for j in 0..n {
        powers[j] = x;
        x = ff::mul_mod(x, g, q);
    }
    let mut buf: Vec<Complex64> = powers.iter().map(|&r| roots.e_res(r)).collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    fft.process(&mut buf);
    for z in buf.iter_mut() {
        *z = z.powu(spec.rank);
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    let norm = (q as f64).powf(-((spec.rank - 1) as f64) / 2.0);

    let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
    let sign = if spec.rank % 2 == 1 { 1.0 } else { -1.0 };
    values[0] = Complex64::new(sign * norm, 0.0);
    for j in 0..n {
        values[powers[j] as usize] = buf[j] * scale * norm;
    }

    // entry a must be the value at shift*a: permute by the shift
    let h = p.reduce(spec.shift);
    let shifted: Vec<Complex64> = (0..q).map(|a| values[ff::mul_mod(h, a, q) as usize]).collect();
    PeriodicFunction { modulus: p, values: shifted }
}

/// Rank-k table for internal consumers, choosing the evaluation path by
/// cost: direct when `p^(k-1) <= 10^6`, convolution otherwise. This keeps
/// the direct path exercised on every small case while sweeps stay fast.
pub fn kloosterman_table(rank: u32, p: Prime) -> Vec<Complex64> {
    let spec = KloostermanSpec::new(rank, 1).expect("rank >= 1, shift 1");
    let cost = (p.get() as f64).powi(rank as i32 - 1);
    if cost <= 1e6 {
        let roots = RootsOfUnity::new(p);
        let inv = ff::inverse_table(p);
        (0..p.get())
            .map(|a| kloosterman_direct(rank, a, p, &roots, &inv))
            .collect()
    } else {
        kloosterman_all(&spec, p).values().to_vec()
    }
}

/// Two-variable transform coupling a spectrum to rank-2 sums.
///
/// Precomputes the Fourier transform of `K`, the inverse table, and the
/// rank-2 Kloosterman table for one modulus so that repeated evaluations
/// cost `O(p)` each.
pub struct BesselTable {
    p: Prime,
    khat: PeriodicFunction,
    kl2: Vec<Complex64>,
    inv: Vec<u64>,
}

impl BesselTable {
    pub fn new(k: &PeriodicFunction) -> BesselTable {
        let p = k.modulus();
        BesselTable {
            p,
            khat: fourier(k),
            kl2: kloosterman_table(2, p),
            inv: ff::inverse_table(p),
        }
    }

    /// `p^(-1/2) * sum over invertible y of khat(n * inv(y)) * Kl2(x*y)`.
    pub fn eval(&self, x: u64, n: u64) -> Complex64 {
        let q = self.p.get();
        let mut acc = KahanComplex::new();
        for y in 1..q {
            let arg = ff::mul_mod(n % q, self.inv[y as usize], q);
            let kl = self.kl2[ff::mul_mod(x % q, y, q) as usize];
            acc.add(self.khat.at_res(arg) * kl);
        }
        acc.value() / (q as f64).sqrt()
    }
}

/// One-off evaluation of the two-variable transform at `(x, n)`.
pub fn bbessel(k: &PeriodicFunction, x: Residue, n: Residue) -> Complex64 {
    BesselTable::new(k).eval(x.value(), n.value())
}

/// The signed Kloosterman weight of rank k with index shift h:
/// `K(a) = (-1)^(k-1) * Kl_k(a*h; p)` for invertible `a`, and the fixed
/// center value `K(0) = (-1)^k * p^(-(k-1)/2)`.
///
/// Note the center is *not* the degenerate Kloosterman value: for odd rank
/// the two differ by sign (rank 3: center `-1/p`, degenerate sum `+1/p`).
pub fn sheaf_weight_function(spec: &KloostermanSpec, p: Prime) -> PeriodicFunction {
    let q = p.get();
    let base = kloosterman_table(spec.rank, p);
    let sign = if spec.rank % 2 == 1 { 1.0 } else { -1.0 };
    let h = p.reduce(spec.shift);
    let norm = (q as f64).powf(-((spec.rank - 1) as f64) / 2.0);
    let mut values: Vec<Complex64> = (0..q)
        .map(|a| sign * base[ff::mul_mod(a, h, q) as usize])
        .collect();
    values[0] = Complex64::new(-sign * norm, 0.0);
    PeriodicFunction { modulus: p, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prime(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn random_function(p: Prime, rng: &mut ChaCha8Rng) -> PeriodicFunction {
        let values = (0..p.get())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        PeriodicFunction::new(p, values).unwrap()
    }

    /// Literal defining sum over all k-tuples with the prescribed product;
    /// O(p^k), used only as an oracle here.
    fn kl_literal(rank: u32, target: u64, p: u64) -> Complex64 {
        let roots = RootsOfUnity::new(prime(p));
        let mut acc = KahanComplex::new();
        let mut tuple = vec![0u64; rank as usize];
        loop {
            let prod = tuple.iter().fold(1u64, |acc, &x| ff::mul_mod(acc, x, p));
            if prod == target % p {
                let sum = tuple.iter().fold(0u64, |acc, &x| (acc + x) % p);
                acc.add(roots.e_res(sum));
            }
            // odometer over the full cube
            let mut i = 0;
            loop {
                if i == tuple.len() {
                    return acc.value() * (p as f64).powf(-((rank - 1) as f64) / 2.0);
                }
                tuple[i] += 1;
                if tuple[i] < p {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn direct_matches_literal_definition_small() {
        for p in [3u64, 5, 7] {
            for rank in 1..=3u32 {
                let spec = KloostermanSpec::new(rank, 1).unwrap();
                for a in 0..p {
                    let got = kloosterman(&spec, Residue::new(a, prime(p)).unwrap());
                    let want = kl_literal(rank, a, p);
                    assert!((got - want).norm() < 1e-12, "rank {rank} p {p} a {a}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn frozen_values() {
        // rank 2, a=1, p=5: (2 + 2cos(4pi/5)) / sqrt(5)
        let spec = KloostermanSpec::new(2, 1).unwrap();
        let v = kloosterman(&spec, Residue::new(1, prime(5)).unwrap());
        assert!((v.re - 0.17082039324993692).abs() < 1e-14);
        assert!(v.im.abs() < 1e-14);
        // rank 3, a=1, p=2: single tuple (1,1,1), e(3/2)/2 = -1/2
        let spec3 = KloostermanSpec::new(3, 1).unwrap();
        let w = kloosterman(&spec3, Residue::new(1, prime(2)).unwrap());
        assert!((w.re + 0.5).abs() < 1e-14);
        assert!(w.im.abs() < 1e-14);
    }

    #[test]
    fn degenerate_values_at_zero() {
        for p in [5u64, 11, 23] {
            let pm = prime(p);
            let zero = Residue::new(0, pm).unwrap();
            let k2 = kloosterman(&KloostermanSpec::new(2, 1).unwrap(), zero);
            assert!((k2.re + 1.0 / (p as f64).sqrt()).abs() < 1e-13);
            assert!(k2.im.abs() < 1e-13);
            let k3 = kloosterman(&KloostermanSpec::new(3, 1).unwrap(), zero);
            assert!((k3.re - 1.0 / p as f64).abs() < 1e-13);
            assert!(k3.im.abs() < 1e-13);
        }
    }

    #[test]
    fn shift_relabels_the_argument() {
        let pm = prime(13);
        let plain = KloostermanSpec::new(2, 1).unwrap();
        let shifted = KloostermanSpec::new(2, 5).unwrap();
        for a in 0..13u64 {
            let lhs = kloosterman(&shifted, Residue::new(a, pm).unwrap());
            let rhs = kloosterman(&plain, Residue::new(5 * a % 13, pm).unwrap());
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn involution_reflects_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [7u64, 97] {
            let pm = prime(p);
            for _ in 0..5 {
                let k = random_function(pm, &mut rng);
                let kk = fourier(&fourier(&k));
                for n in 0..p as i64 {
                    assert!((kk.at(n) - k.at(-n)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [7u64, 97] {
            let pm = prime(p);
            for _ in 0..5 {
                let k = random_function(pm, &mut rng);
                let khat = fourier(&k);
                assert!((k.l2_norm_sq() - khat.l2_norm_sq()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_of_delta_is_a_phase() {
        let pm = prime(11);
        let khat = fourier(&PeriodicFunction::delta(Residue::new(3, pm).unwrap()));
        let norm = 1.0 / 11f64.sqrt();
        for n in 0..11i64 {
            let want = ff::additive_character(3 * n, pm) * norm;
            assert!((khat.at(n) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn dual_transform_of_delta_gives_rank2_values() {
        // for K = delta_a and p not dividing n, the dual transform is
        // Kl2(a*n)/sqrt(p); at n=0 it is K(0) - khat(0)/sqrt(p)
        for p in [5u64, 11, 23, 47] {
            let pm = prime(p);
            let kl2 = kloosterman_table(2, pm);
            for a in 1..p {
                let kc = voronoi(&PeriodicFunction::delta(Residue::new(a, pm).unwrap()));
                for n in 1..p {
                    let want = kl2[ff::mul_mod(a, n, p) as usize] / (p as f64).sqrt();
                    assert!((kc.at_res(n) - want).norm() < 1e-12, "p {p} a {a} n {n}");
                }
                let want0 = -1.0 / p as f64; // 0 - e(0)*p^(-1/2)/sqrt(p)
                assert!((kc.at_res(0).re - want0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dual_transform_hyperbola_form() {
        // p not dividing n: p^(-1/2) sum_{h1*h2 = n} khat(h1) e(h2/p)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pm = prime(23);
        let k = random_function(pm, &mut rng);
        let kc = voronoi(&k);
        let khat = fourier(&k);
        let roots = RootsOfUnity::new(pm);
        let inv = ff::inverse_table(pm);
        for n in 1..23u64 {
            let mut acc = KahanComplex::new();
            for h1 in 1..23u64 {
                let h2 = ff::mul_mod(n, inv[h1 as usize], 23);
                acc.add(khat.at_res(h1) * roots.e_res(h2));
            }
            let want = acc.value() / 23f64.sqrt();
            assert!((kc.at_res(n) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_path_matches_direct_small() {
        for p in [2u64, 3, 5, 11, 31] {
            let pm = prime(p);
            for rank in [2u32, 3] {
                let spec = KloostermanSpec::new(rank, 1).unwrap();
                let table = kloosterman_all(&spec, pm);
                for a in 0..p {
                    let want = kloosterman(&spec, Residue::new(a, pm).unwrap());
                    assert!(
                        (table.at_res(a) - want).norm() < 1e-10,
                        "rank {rank} p {p} a {a}"
                    );
                }
            }
        }
    }

    #[test]
    fn bessel_center_column() {
        // K = delta_a, x = 0: the transform collapses to p^(-3/2)
        for p in [5u64, 11] {
            let pm = prime(p);
            for a in 1..p {
                let k = PeriodicFunction::delta(Residue::new(a, pm).unwrap());
                let v = bbessel(&k, Residue::new(0, pm).unwrap(), Residue::new(1, pm).unwrap());
                let want = (p as f64).powf(-1.5);
                assert!((v.re - want).abs() < 1e-12, "p {p} a {a}");
                assert!(v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weight_function_signs_and_center() {
        let pm = prime(11);
        let spec2 = KloostermanSpec::new(2, 1).unwrap();
        let w2 = sheaf_weight_function(&spec2, pm);
        // rank 2: K(a) = -Kl2(a), K(0) = +p^(-1/2)
        assert!((w2.at_res(0).re - 1.0 / 11f64.sqrt()).abs() < 1e-14);
        let kl2 = kloosterman_table(2, pm);
        for a in 1..11u64 {
            assert!((w2.at_res(a) + kl2[a as usize]).norm() < 1e-13);
        }
        // rank 3: K(a) = +Kl3(a), K(0) = -1/p
        let spec3 = KloostermanSpec::new(3, 1).unwrap();
        let w3 = sheaf_weight_function(&spec3, pm);
        assert!((w3.at_res(0).re + 1.0 / 11.0).abs() < 1e-14);
        let kl3 = kloosterman_table(3, pm);
        for a in 1..11u64 {
            assert!((w3.at_res(a) - kl3[a as usize]).norm() < 1e-13);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(KloostermanSpec::new(0, 1).is_err());
        assert!(KloostermanSpec::new(2, 0).is_err());
        let pm = prime(7);
        assert!(PeriodicFunction::new(pm, vec![Complex64::new(1.0, 0.0); 6]).is_err());
    }
}
