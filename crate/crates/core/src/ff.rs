//! Prime moduli, residues, and additive characters.
//!
//! Primality is always certified (deterministic Miller-Rabin over the full
//! 64-bit range), so a [`Prime`] in hand is a proof. Modular products go
//! through 128-bit intermediates; nothing here wraps silently.

use num_complex::Complex64;

use crate::{Error, Result};

/// Multiply `a * b mod m` without overflow (128-bit intermediate).
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Compute `base^exp mod m` by binary exponentiation.
pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for every `n < 2^64`.
///
/// The witness set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} has no
/// 64-bit strong pseudoprime, so the answer is exact, not probabilistic.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A certified prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u64);

impl Prime {
    /// Certify `n` and wrap it. Composites (and 0, 1) are rejected.
    pub fn new(n: u64) -> Result<Prime> {
        if is_prime(n) {
            Ok(Prime(n))
        } else {
            Err(Error::NotPrime(n))
        }
    }

    /// Construct without re-running the certificate. Only for callers that
    /// already hold a proof (the segmented sieve below).
    fn new_unchecked(n: u64) -> Prime {
        debug_assert!(is_prime(n));
        Prime(n)
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Canonical representative of `x` mod p in `[0, p)`, for signed input.
    #[inline]
    pub fn reduce(self, x: i64) -> u64 {
        x.rem_euclid(self.0 as i64) as u64
    }
}

impl std::fmt::Display for Prime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A residue `value mod modulus`, kept in canonical range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Residue {
    value: u64,
    modulus: Prime,
}

impl Residue {
    pub fn new(value: u64, modulus: Prime) -> Result<Residue> {
        if value < modulus.get() {
            Ok(Residue { value, modulus })
        } else {
            Err(Error::ResidueRange { value, modulus: modulus.get() })
        }
    }

    /// Reduce an arbitrary signed integer into canonical range.
    pub fn from_int(x: i64, modulus: Prime) -> Residue {
        Residue { value: modulus.reduce(x), modulus }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.modulus
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn mul(self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue { value: mul_mod(self.value, other.value, self.modulus.get()), modulus: self.modulus }
    }
}

/// Inverse of `a` mod p via Fermat (a^(p-2)); rejects `a = 0`.
///
/// Tests check this against an extended-Euclid computation, which is kept
/// out of the library path on purpose so the two stay independent.
pub fn mod_inverse(a: Residue) -> Result<Residue> {
    let p = a.modulus().get();
    if a.is_zero() {
        return Err(Error::NotInvertible(format!("0 mod {p}")));
    }
    Ok(Residue { value: pow_mod(a.value(), p - 2, p), modulus: a.modulus() })
}

/// Table of `x -> inverse(x) mod p` for `x in [1, p)`, index 0 unused (=0).
pub fn inverse_table(p: Prime) -> Vec<u64> {
    let n = p.get();
    let mut inv = vec![0u64; n as usize];
    if n > 1 {
        inv[1] = 1;
        // inv[i] = -(n/i) * inv[n mod i], the standard linear-time recurrence.
        for i in 2..n {
            inv[i as usize] = mul_mod(n - n / i, inv[(n % i) as usize], n);
        }
    }
    inv
}

/// Precomputed table of the p-th roots of unity for one modulus.
///
/// Entry `r` is `exp(2*pi*i*r/p)`, each computed directly from `sin`/`cos`
/// of the reduced argument rather than by repeated multiplication, so the
/// phase error is uniform over the table and `e(x + p) == e(x)` bitwise.
#[derive(Clone, Debug)]
pub struct RootsOfUnity {
    modulus: Prime,
    table: Vec<Complex64>,
}

impl RootsOfUnity {
    pub fn new(modulus: Prime) -> RootsOfUnity {
        let p = modulus.get();
        let table = (0..p).map(|r| unit_phase(r, p)).collect();
        RootsOfUnity { modulus, table }
    }

    #[inline]
    pub fn modulus(&self) -> Prime {
        self.modulus
    }

    /// `e(x/p)` for any signed `x`.
    #[inline]
    pub fn e(&self, x: i64) -> Complex64 {
        self.table[self.modulus.reduce(x) as usize]
    }

    /// `e(r/p)` for a canonical residue (no reduction).
    #[inline]
    pub fn e_res(&self, r: u64) -> Complex64 {
        self.table[r as usize]
    }
}

// Deliberately never inlined: both the table constructor and the one-off
// character call must hit the same machine code, otherwise separate
// instantiations can round sin/cos a final ulp apart and break the
// bitwise-agreement contract below.
#[inline(never)]
fn unit_phase(r: u64, p: u64) -> Complex64 {
    let theta = 2.0 * std::f64::consts::PI * (r as f64) / (p as f64);
    Complex64::new(theta.cos(), theta.sin())
}

/// `e(x/p) = exp(2*pi*i*x/p)`, reducing `x` mod p first.
///
/// Same formula as the [`RootsOfUnity`] entries, so a one-off call and a
/// table lookup agree bitwise.
pub fn additive_character(x: i64, p: Prime) -> Complex64 {
    unit_phase(p.reduce(x), p.get())
}

/// Greatest common divisor (non-negative).
pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

/// Euler's totient by trial factorization; fine for the modulus sizes here.
pub fn euler_phi(mut n: u64) -> u64 {
    let mut phi = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            phi -= phi / d;
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        phi -= phi / n;
    }
    phi
}

/// Number of divisors by trial factorization.
pub fn divisor_count(mut n: u64) -> u64 {
    let mut count = 1u64;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0u64;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            count *= e + 1;
        }
        d += 1;
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// Smallest primitive root mod p.
pub fn primitive_root(p: Prime) -> u64 {
    let n = p.get();
    if n == 2 {
        return 1;
    }
    // Factor p-1, then test candidates g by checking g^((p-1)/q) != 1.
    let mut m = n - 1;
    let mut prime_factors = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            prime_factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        prime_factors.push(m);
    }
    'g: for g in 2..n {
        for &q in &prime_factors {
            if pow_mod(g, (n - 1) / q, n) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("every prime has a primitive root");
}

/// All primes in `[lo, hi)`, certified, ascending.
///
/// Uses a segmented sieve when the base sieve up to sqrt(hi) is cheap, and
/// falls back to per-candidate Miller-Rabin for ranges with huge endpoints.
/// Either way each returned value carries a genuine primality certificate.
pub fn primes_in(lo: u64, hi: u64) -> Vec<Prime> {
    if hi <= lo || hi <= 2 {
        return Vec::new();
    }
    let lo = lo.max(2);
    let root = hi.isqrt();
    // Past this point the base sieve itself would dominate; MR per odd
    // candidate is cheaper for narrow windows near large endpoints.
    if root > 4_000_000 {
        return (lo..hi).filter(|&n| is_prime(n)).map(Prime::new_unchecked).collect();
    }

    let base = small_primes(root + 1);
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in &base {
        let start = lo.div_ceil(p).max(2) * p;
        let mut m = start;
        while m < hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    (0..len)
        .filter(|&i| !composite[i] && lo + i as u64 >= 2)
        .map(|i| Prime::new_unchecked(lo + i as u64))
        .collect()
}

/// Plain sieve of Eratosthenes for `[2, limit)`.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit];
    let mut primes = Vec::new();
    for n in 2..limit {
        if !composite[n] {
            primes.push(n as u64);
            let mut m = n * n;
            while m < limit {
                composite[m] = true;
                m += n;
            }
        }
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Extended Euclid, used only as an oracle for `mod_inverse`.
    fn egcd_inverse(a: u64, p: u64) -> u64 {
        let (mut r0, mut r1) = (p as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        assert_eq!(r0, 1, "{a} not invertible mod {p}");
        t0.rem_euclid(p as i128) as u64
    }

    #[test]
    fn inverse_matches_euclid_and_is_exhaustive() {
        for p in small_primes(1000) {
            let pm = Prime::new(p).unwrap();
            for a in 1..p {
                let r = Residue::new(a, pm).unwrap();
                let inv = mod_inverse(r).unwrap();
                assert_eq!(mul_mod(a, inv.value(), p), 1);
                assert_eq!(inv.value(), egcd_inverse(a, p));
            }
        }
    }

    #[test]
    fn inverse_of_two_mod_five() {
        let p = Prime::new(5).unwrap();
        let inv = mod_inverse(Residue::new(2, p).unwrap()).unwrap();
        assert_eq!(inv.value(), 3);
    }

    #[test]
    fn zero_has_no_inverse() {
        let p = Prime::new(7).unwrap();
        assert!(mod_inverse(Residue::new(0, p).unwrap()).is_err());
    }

    #[test]
    fn inverse_table_matches_pointwise() {
        for p in [2u64, 3, 97, 499] {
            let pm = Prime::new(p).unwrap();
            let table = inverse_table(pm);
            for a in 1..p {
                assert_eq!(table[a as usize], mod_inverse(Residue::new(a, pm).unwrap()).unwrap().value());
            }
        }
    }

    #[test]
    fn character_basics() {
        let p = Prime::new(5).unwrap();
        let z = additive_character(1, p);
        assert!((z.re - 0.30901699437494745).abs() < 1e-15);
        assert!((z.im - 0.9510565162951535).abs() < 1e-15);
        // periodicity is bitwise because the argument is reduced first
        for x in -20..20 {
            let a = additive_character(x, p);
            let b = additive_character(x + 5, p);
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn character_product_is_one() {
        for p in [7u64, 97, 499] {
            let pm = Prime::new(p).unwrap();
            let table = RootsOfUnity::new(pm);
            for x in 0..p as i64 {
                let prod = table.e(x) * table.e(-x);
                assert!((prod.re - 1.0).abs() < 1e-14);
                assert!(prod.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn table_agrees_with_free_function() {
        let p = Prime::new(97).unwrap();
        let table = RootsOfUnity::new(p);
        for x in 0..97i64 {
            let a = table.e(x);
            let b = additive_character(x, p);
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn prime_certification() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(1_000_003).is_ok());
        assert!(Prime::new(0).is_err());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(1_000_001).is_err()); // 101 * 9901
        // large Mersenne prime and a strong-pseudoprime trap
        assert!(is_prime((1u64 << 61) - 1));
        assert!(!is_prime(3_215_031_751)); // pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn primes_in_window_above_one_million() {
        let ps = primes_in(1_000_000, 1_000_101);
        let values: Vec<u64> = ps.iter().map(|p| p.get()).collect();
        assert_eq!(values.len(), 6);
        assert_eq!(values[0], 1_000_003);
        // cross-check the sieve against Miller-Rabin, which shares no code
        let mr: Vec<u64> = (1_000_000..1_000_101).filter(|&n| is_prime(n)).collect();
        assert_eq!(values, mr);
    }

    #[test]
    fn primes_in_empty_and_small_ranges() {
        assert!(primes_in(10, 10).is_empty());
        assert!(primes_in(24, 28).is_empty());
        let tiny: Vec<u64> = primes_in(0, 11).iter().map(|p| p.get()).collect();
        assert_eq!(tiny, vec![2, 3, 5, 7]);
    }

    #[test]
    fn primitive_roots_generate() {
        for p in [3u64, 7, 97, 499] {
            let pm = Prime::new(p).unwrap();
            let g = primitive_root(pm);
            let mut seen = vec![false; p as usize];
            let mut x = 1u64;
            for _ in 0..p - 1 {
                x = mul_mod(x, g, p);
                seen[x as usize] = true;
            }
            assert!((1..p).all(|a| seen[a as usize]));
        }
    }

    #[test]
    fn phi_and_divisor_count() {
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(12), 4);
        assert_eq!(euler_phi(97), 96);
        assert_eq!(divisor_count(12), 6);
        assert_eq!(divisor_count(97), 2);
    }
}
