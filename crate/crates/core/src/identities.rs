//! Numerical verification of the exact summation identities: Poisson,
//! the tempered two-variable Voronoi formula, the combined three-variable
//! transformation S = A + B + C + D, the delta-kernel Bessel identity,
//! coprime smooth sums, and the exact phi-divisor identity.
//!
//! Every check computes both sides through disjoint code paths (direct
//! integer sums on one side, transforms plus truncated dual sums on the
//! other) so that a shared bug cannot cancel. Dual sums over Z are cut at
//! certified indices from [`crate::windows::DualTail`]; each check budgets
//! a small fraction of its tolerance to truncation so residuals measure
//! rounding, not tails.
//!
//! The kernel-independent parts of a check (window transforms on the dual
//! grid, single sums, residue-class aggregates) live in reusable verifier
//! structs, so sweeping a family of kernels against fixed windows costs
//! one precomputation plus cheap per-kernel work.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::csvout;
use crate::ff::{divisor_count, euler_phi, gcd, mul_mod, Prime, Residue, RootsOfUnity};
use crate::kahan::{KahanComplex, KahanSum};
use crate::trace::{fourier, kloosterman_table, voronoi, BesselTable, PeriodicFunction};
use crate::windows::{fourier_grid, DualTail, SmoothWindow};
use crate::{Error, Result};

/// Hard ceiling on any dual-sum cutoff; beyond this the window is too
/// rough (or the tolerance too tight) for the identity check to be
/// meaningful at f64 precision.
const MAX_DUAL_TERMS: u64 = 2_000_000;

/// Outcome of one identity check: both sides, plus the certified bound on
/// the truncated dual mass. The residual is |lhs - rhs|.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Semicolon-separated `key=value` parameters (comma-free).
    pub params: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub tail_bound: f64,
}

impl IdentityCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.name.to_string(),
            self.params.clone(),
            csvout::fmt_complex(self.lhs),
            csvout::fmt_complex(self.rhs),
            csvout::fmt_f64(self.residual()),
            csvout::fmt_f64(self.tail_bound),
        ]
    }
}

pub const IDENTITY_CSV_HEADER: &str = "identity,params,lhs,rhs,residual,tail_bound";

pub fn write_identity_csv<W: std::io::Write>(out: &mut W, checks: &[IdentityCheck]) -> Result<()> {
    writeln!(out, "{IDENTITY_CSV_HEADER}")?;
    for c in checks {
        csvout::write_row(out, &c.csv_row())?;
    }
    Ok(())
}

/// Integers strictly inside the support of `v`.
fn integer_range(v: &SmoothWindow) -> std::ops::RangeInclusive<i64> {
    let (lo, hi) = v.support();
    let start = (lo.floor() as i64 + 1).max(1);
    let end = hi.ceil() as i64;
    start..=end
}

/// `sum over m >= 1 of V(m)`, ascending compensated sum.
pub fn single_sum(v: &SmoothWindow) -> f64 {
    let mut acc = KahanSum::new();
    for m in integer_range(v) {
        let w = v.eval(m as f64);
        if w != 0.0 {
            acc.add(w);
        }
    }
    acc.value()
}

/// `sum over m >= 1 with m coprime to p of V(m)`.
pub fn single_sum_coprime(v: &SmoothWindow, p: Prime) -> f64 {
    let q = p.get();
    let mut acc = KahanSum::new();
    for m in integer_range(v) {
        if m as u64 % q == 0 {
            continue;
        }
        let w = v.eval(m as f64);
        if w != 0.0 {
            acc.add(w);
        }
    }
    acc.value()
}

/// The direct triple sum `sum of V1(m1)V2(m2)V3(m3) K(m1 m2 m3)`, in fixed
/// ascending order with compensated accumulation.
///
/// This is the single authoritative left-hand side of the combined
/// formula; the divisor module routes its smooth progression sums through
/// the same code path so the two agree bit for bit.
pub fn triple_sum_weighted(v: &[SmoothWindow; 3], k: &PeriodicFunction) -> Complex64 {
    let mut acc = KahanComplex::new();
    for m1 in integer_range(&v[0]) {
        let w1 = v[0].eval(m1 as f64);
        if w1 == 0.0 {
            continue;
        }
        for m2 in integer_range(&v[1]) {
            let w2 = v[1].eval(m2 as f64);
            if w2 == 0.0 {
                continue;
            }
            let w12 = w1 * w2;
            let m12 = m1 * m2;
            for m3 in integer_range(&v[2]) {
                let w3 = v[2].eval(m3 as f64);
                if w3 == 0.0 {
                    continue;
                }
                acc.add(k.at(m12 * m3) * (w12 * w3));
            }
        }
    }
    acc.value()
}

/// Cached transform values `Vhat(n/q)` for `|n| <= cut` (stored for
/// `n >= 0`; V is real so negative frequencies conjugate), plus the
/// certified bound on everything outside the cut.
struct DualCache {
    cut: i64,
    vals: Vec<Complex64>,
    tail: f64,
    /// Bound on `sum over all of Z of |Vhat(n/q)|` (partial sum + tail).
    abs_sum: f64,
}

impl DualCache {
    fn build(v: &SmoothWindow, q: f64, budget: f64) -> Result<DualCache> {
        let tr = DualTail::new(v).truncate(q, budget);
        if tr.index > MAX_DUAL_TERMS {
            return Err(Error::invalid(format!(
                "dual sum needs {} terms to certify tail {budget:.1e}; window too rough",
                tr.index
            )));
        }
        let vals = fourier_grid(v, q, tr.index);
        let mut abs = KahanSum::new();
        abs.add(vals[0].norm());
        for z in &vals[1..] {
            abs.add(2.0 * z.norm());
        }
        Ok(DualCache {
            cut: tr.index as i64,
            vals,
            tail: tr.tail_bound,
            abs_sum: abs.value() + tr.tail_bound,
        })
    }

    #[inline]
    fn at(&self, n: i64) -> Complex64 {
        if n >= 0 {
            self.vals[n as usize]
        } else {
            self.vals[(-n) as usize].conj()
        }
    }
}

/// Reusable state for Poisson checks at fixed window and modulus.
pub struct PoissonVerifier {
    q: Prime,
    v: SmoothWindow,
    cache: DualCache,
    tol: f64,
}

impl PoissonVerifier {
    pub fn new(v: &SmoothWindow, q: Prime, tol: f64) -> Result<PoissonVerifier> {
        let cache = DualCache::build(v, q.get() as f64, tol / 10.0)?;
        Ok(PoissonVerifier { q, v: v.clone(), cache, tol })
    }

    /// Check `sum over n >= 1 of K(n)V(n)
    ///        = q^(-1/2) sum over m of Khat(m) Vhat(m/q)`.
    pub fn check(&self, k: &PeriodicFunction) -> Result<IdentityCheck> {
        if k.modulus().get() != self.q.get() {
            return Err(Error::invalid("period of K does not match the verifier modulus"));
        }
        let qf = self.q.get() as f64;

        let mut lhs = KahanComplex::new();
        for n in integer_range(&self.v) {
            let w = self.v.eval(n as f64);
            if w != 0.0 {
                lhs.add(k.at(n) * w);
            }
        }

        let khat = fourier(k);
        let mut rhs = KahanComplex::new();
        for n in -self.cache.cut..=self.cache.cut {
            rhs.add(khat.at(n) * self.cache.at(n));
        }
        let tail_bound = khat.sup_norm() * self.cache.tail / qf.sqrt();
        if tail_bound > self.tol / 10.0 {
            return Err(Error::invalid(format!(
                "certified truncation tail {tail_bound:.3e} exceeds budget {:.3e}",
                self.tol / 10.0
            )));
        }

        Ok(IdentityCheck {
            name: "poisson",
            params: format!("q={};M={}", self.q.get(), self.v.scale()),
            lhs: lhs.value(),
            rhs: rhs.value() / qf.sqrt(),
            tail_bound,
        })
    }

    /// The progression form: `sum over n = a mod q of V(n)
    /// = (1/q) sum over m of e(am/q) Vhat(m/q)`.
    pub fn check_progression(&self, a: i64) -> IdentityCheck {
        let qv = self.q.get();
        let a_res = self.q.reduce(a);

        let mut lhs = KahanSum::new();
        for n in integer_range(&self.v) {
            if (n as u64) % qv != a_res {
                continue;
            }
            let w = self.v.eval(n as f64);
            if w != 0.0 {
                lhs.add(w);
            }
        }

        let roots = RootsOfUnity::new(self.q);
        let mut rhs = KahanComplex::new();
        for n in -self.cache.cut..=self.cache.cut {
            let phase = roots.e_res(mul_mod(a_res, self.q.reduce(n), qv));
            rhs.add(phase * self.cache.at(n));
        }

        IdentityCheck {
            name: "poisson-progression",
            params: format!("q={qv};a={a};M={}", self.v.scale()),
            lhs: Complex64::new(lhs.value(), 0.0),
            rhs: rhs.value() / qv as f64,
            tail_bound: self.cache.tail / qv as f64,
        }
    }
}

/// One-shot Poisson check (builds a throwaway verifier).
pub fn check_poisson(k: &PeriodicFunction, v: &SmoothWindow, tol: f64) -> Result<IdentityCheck> {
    PoissonVerifier::new(v, k.modulus(), tol)?.check(k)
}

/// One-shot progression-form check.
pub fn check_poisson_progression(
    v: &SmoothWindow,
    q: Prime,
    a: i64,
    tol: f64,
) -> Result<IdentityCheck> {
    Ok(PoissonVerifier::new(v, q, tol)?.check_progression(a))
}

/// Reusable state for the two-variable identity at fixed product window
/// `G(m, n) = V(m) W(n)` and modulus.
pub struct TemperedVerifier {
    p: Prime,
    v: SmoothWindow,
    w: SmoothWindow,
    c1: DualCache,
    c2: DualCache,
    sum_v: f64,
    sum_w: f64,
    tol: f64,
}

impl TemperedVerifier {
    pub fn new(v: &SmoothWindow, w: &SmoothWindow, p: Prime, tol: f64) -> Result<TemperedVerifier> {
        // the dual double sum amplifies per-cache tails by the partner's
        // total transform mass, so each cache gets a much smaller budget
        let qf = p.get() as f64;
        let c1 = DualCache::build(v, qf, tol * 1e-3)?;
        let c2 = DualCache::build(w, qf, tol * 1e-3)?;
        Ok(TemperedVerifier {
            p,
            v: v.clone(),
            w: w.clone(),
            c1,
            c2,
            sum_v: single_sum(v),
            sum_w: single_sum(w),
            tol,
        })
    }

    /// Check `sum K(mn)V(m)W(n) = Khat(0) p^(-1/2) sum V(m)W(n)
    ///        + p^(-1) sum over Z^2 of Kcheck(mn) Vhat(m/p) What(n/p)`.
    pub fn check(&self, k: &PeriodicFunction) -> Result<IdentityCheck> {
        let p = self.p;
        if k.modulus().get() != p.get() {
            return Err(Error::invalid("period of K does not match the verifier modulus"));
        }
        let qf = p.get() as f64;

        let mut lhs = KahanComplex::new();
        for m in integer_range(&self.v) {
            let wm = self.v.eval(m as f64);
            if wm == 0.0 {
                continue;
            }
            for n in integer_range(&self.w) {
                let wn = self.w.eval(n as f64);
                if wn != 0.0 {
                    lhs.add(k.at(m * n) * (wm * wn));
                }
            }
        }

        let khat0 = fourier(k).values()[0];
        let kcheck = voronoi(k);

        let main = khat0 / qf.sqrt() * (self.sum_v * self.sum_w);
        let mut dual = KahanComplex::new();
        for m in -self.c1.cut..=self.c1.cut {
            let vm = self.c1.at(m);
            for n in -self.c2.cut..=self.c2.cut {
                dual.add(kcheck.at(m * n) * (vm * self.c2.at(n)));
            }
        }
        let rhs = main + dual.value() / qf;

        let tail_bound = kcheck.sup_norm()
            * (self.c1.tail * self.c2.abs_sum + self.c1.abs_sum * self.c2.tail)
            / qf;
        if tail_bound > self.tol / 10.0 {
            return Err(Error::invalid(format!(
                "certified truncation tail {tail_bound:.3e} exceeds budget {:.3e}",
                self.tol / 10.0
            )));
        }

        Ok(IdentityCheck {
            name: "tempered-voronoi",
            params: format!("p={};M1={};M2={}", p.get(), self.v.scale(), self.w.scale()),
            lhs: lhs.value(),
            rhs,
            tail_bound,
        })
    }
}

/// One-shot form of the two-variable check.
pub fn check_tempered_voronoi(
    k: &PeriodicFunction,
    v: &SmoothWindow,
    w: &SmoothWindow,
    p: Prime,
    tol: f64,
) -> Result<IdentityCheck> {
    TemperedVerifier::new(v, w, p, tol)?.check(k)
}

/// Result of the combined three-variable transformation for one kernel.
#[derive(Clone, Debug)]
pub struct TripleSumReport {
    pub lhs: Complex64,
    pub term_a: Complex64,
    pub term_b: Complex64,
    pub term_c: Complex64,
    pub term_d: Complex64,
    /// `|lhs - (A + B + C + D)|`.
    pub residual: f64,
    /// Dual-sum cutoffs for the three windows.
    pub cutoffs: [u64; 3],
    /// Certified tail bounds matching the cutoffs.
    pub tail_bounds: [f64; 3],
}

impl TripleSumReport {
    pub fn rhs(&self) -> Complex64 {
        self.term_a + self.term_b + self.term_c + self.term_d
    }

    pub fn to_check(&self, params: String) -> IdentityCheck {
        IdentityCheck {
            name: "poisson-voronoi-combined",
            params,
            lhs: self.lhs,
            rhs: self.rhs(),
            tail_bound: self.tail_bounds.iter().sum(),
        }
    }
}

/// Kernel-independent state for the combined formula at fixed windows and
/// modulus: cached dual-grid transforms, single sums, and residue-class
/// aggregates of the `Vhat`. Build once, then evaluate
/// [`AbcdPrecomputed::report_for`] for many kernels.
pub struct AbcdPrecomputed {
    p: Prime,
    v: [SmoothWindow; 3],
    cutoffs: [u64; 3],
    tail_bounds: [f64; 3],
    /// Full and p-coprime integer single sums of each window.
    full: [f64; 3],
    coprime: [f64; 3],
    /// `Vhat_i(0)` and `sum over all n of Vhat_i(n/p)` for i = 1, 2.
    vhat0: [Complex64; 2],
    t_all: [Complex64; 2],
    /// `sum over n3 coprime to p of Vhat_3(n3/p)`.
    t3_coprime: Complex64,
    /// `w12[x] = sum over nonzero n1, n2 with n1 n2 = x mod p of
    /// Vhat_1(n1/p) Vhat_2(n2/p)`.
    w12: Vec<Complex64>,
    /// `w3[t] = sum over n3 = t mod p, n3 coprime to p, of Vhat_3(n3/p)`.
    w3: Vec<Complex64>,
}

impl AbcdPrecomputed {
    pub fn new(v: [SmoothWindow; 3], p: Prime, tol: f64) -> Result<AbcdPrecomputed> {
        let q = p.get();
        let qf = q as f64;
        // term D multiplies each window's dual tail by the other windows'
        // transform masses (order p each); budget accordingly
        let caches = [
            DualCache::build(&v[0], qf, tol * 1e-3)?,
            DualCache::build(&v[1], qf, tol * 1e-3)?,
            DualCache::build(&v[2], qf, tol * 1e-3)?,
        ];
        let cutoffs = [caches[0].cut as u64, caches[1].cut as u64, caches[2].cut as u64];
        let tail_bounds = [caches[0].tail, caches[1].tail, caches[2].tail];

        let full = [single_sum(&v[0]), single_sum(&v[1]), single_sum(&v[2])];
        let coprime = [
            single_sum_coprime(&v[0], p),
            single_sum_coprime(&v[1], p),
            single_sum_coprime(&v[2], p),
        ];

        let vhat0 = [caches[0].at(0), caches[1].at(0)];
        let mut t_all = [Complex64::default(); 2];
        for i in 0..2 {
            let mut acc = KahanComplex::new();
            for n in -caches[i].cut..=caches[i].cut {
                acc.add(caches[i].at(n));
            }
            t_all[i] = acc.value();
        }
        let mut t3 = KahanComplex::new();
        for n in -caches[2].cut..=caches[2].cut {
            if n != 0 && p.reduce(n) != 0 {
                t3.add(caches[2].at(n));
            }
        }

        // residue-class aggregation of the dual values: nonzero n for the
        // first two windows, n coprime to p for the third
        let class_sums = |cache: &DualCache, skip_multiples: bool| -> Vec<Complex64> {
            let mut slots = vec![KahanComplex::new(); q as usize];
            for n in -cache.cut..=cache.cut {
                if n == 0 {
                    continue;
                }
                let r = p.reduce(n);
                if skip_multiples && r == 0 {
                    continue;
                }
                slots[r as usize].add(cache.at(n));
            }
            slots.into_iter().map(|s| s.value()).collect()
        };
        let w1 = class_sums(&caches[0], false);
        let w2 = class_sums(&caches[1], false);
        let w3 = class_sums(&caches[2], true);

        // multiplicative convolution of the first two class tables
        let mut w12 = vec![KahanComplex::new(); q as usize];
        for s1 in 0..q {
            for s2 in 0..q {
                let x = mul_mod(s1, s2, q);
                w12[x as usize].add(w1[s1 as usize] * w2[s2 as usize]);
            }
        }
        let w12 = w12.into_iter().map(|s| s.value()).collect();

        Ok(AbcdPrecomputed {
            p,
            v,
            cutoffs,
            tail_bounds,
            full,
            coprime,
            vhat0,
            t_all,
            t3_coprime: t3.value(),
            w12,
            w3,
        })
    }

    pub fn windows(&self) -> &[SmoothWindow; 3] {
        &self.v
    }

    /// Evaluate all five quantities for a kernel vanishing at multiples
    /// of p.
    pub fn report_for(&self, k: &PeriodicFunction) -> Result<TripleSumReport> {
        let p = self.p;
        let q = p.get();
        let qf = q as f64;
        if k.modulus().get() != q {
            return Err(Error::invalid("period of K does not match p"));
        }
        if k.at(0) != Complex64::new(0.0, 0.0) {
            return Err(Error::invalid(
                "kernel must vanish at multiples of p for the combined formula",
            ));
        }

        let lhs = triple_sum_weighted(&self.v, k);

        let khat0 = fourier(k).values()[0];

        let term_a = khat0 / qf.sqrt() * (self.coprime[0] * self.coprime[1] * self.full[2]);
        let term_b = -khat0 / qf.powf(1.5) * (self.full[0] * self.full[1]) * self.t3_coprime;
        // the n1*n2 = 0 slice of the dual sum: there the two-variable
        // transform of K degenerates to the constant Khat(0)/p, leaving
        // only the window factors in the braces
        let brace = self.vhat0[0] * self.t_all[1] + self.vhat0[1] * self.t_all[0]
            - self.vhat0[0] * self.vhat0[1];
        let term_c = khat0 / qf.powf(2.5) * brace * self.t3_coprime;

        // D pairs the residue-class aggregates with the two-variable
        // transform of K on the (n1 n2, n3) classes
        let bessel = BesselTable::new(k);
        let mut d_acc = KahanComplex::new();
        for x in 0..q {
            let wx = self.w12[x as usize];
            if wx == Complex64::new(0.0, 0.0) {
                continue;
            }
            for t in 1..q {
                let wt = self.w3[t as usize];
                if wt == Complex64::new(0.0, 0.0) {
                    continue;
                }
                d_acc.add(wx * wt * bessel.eval(x, t));
            }
        }
        let term_d = d_acc.value() / qf.powf(1.5);

        let rhs = term_a + term_b + term_c + term_d;
        Ok(TripleSumReport {
            lhs,
            term_a,
            term_b,
            term_c,
            term_d,
            residual: (lhs - rhs).norm(),
            cutoffs: self.cutoffs,
            tail_bounds: self.tail_bounds,
        })
    }
}

/// One-shot form of the combined check.
pub fn compute_abcd(
    v: [SmoothWindow; 3],
    p: Prime,
    k: &PeriodicFunction,
    tol: f64,
) -> Result<TripleSumReport> {
    AbcdPrecomputed::new(v, p, tol)?.report_for(k)
}

/// Exhaustive check that the two-variable transform of a delta kernel is a
/// rank-3 Kloosterman value: `bbessel(delta_a)(x, n) = Kl3(anx; p)/sqrt(p)`
/// for all nonzero a, x, n. Returns the maximum deviation.
///
/// The left side goes through the Fourier + rank-2 route of
/// [`BesselTable`]; the right side is an independent rank-3 table.
pub fn check_lemma_1060(p: Prime) -> Result<f64> {
    let q = p.get();
    let kl3 = kloosterman_table(3, p);
    let scale = 1.0 / (q as f64).sqrt();
    let mut worst: f64 = 0.0;
    for a in 1..q {
        let table = BesselTable::new(&PeriodicFunction::delta(Residue::new(a, p)?));
        for x in 1..q {
            let ax = mul_mod(a, x, q);
            for n in 1..q {
                let direct = kl3[mul_mod(ax, n, q) as usize] * scale;
                worst = worst.max((table.eval(x, n) - direct).norm());
            }
        }
    }
    Ok(worst)
}

/// Left side, main term, and deviation of the coprime smooth sum
/// `sum over (m,q)=1 of V(um) = phi(q)/(qu) Vhat(0) + error`.
#[derive(Clone, Copy, Debug)]
pub struct CoprimeSumCheck {
    pub lhs: f64,
    pub main: f64,
    pub deviation: f64,
    /// Divisor count of q, the shape of the error envelope.
    pub dq: u64,
    /// `log(2 * support end)`, the log scale of the envelope.
    pub log_scale: f64,
}

pub fn check_coprime_sum(v: &SmoothWindow, u: u64, q: u64) -> Result<CoprimeSumCheck> {
    if u == 0 || q == 0 {
        return Err(Error::invalid("u and q must be positive"));
    }
    let (_, hi) = v.support();
    let mut lhs = KahanSum::new();
    let m_end = (hi / u as f64).ceil() as i64;
    for m in 1..=m_end.max(0) {
        if gcd(m as u64, q) != 1 {
            continue;
        }
        let w = v.eval((m as u64 * u) as f64);
        if w != 0.0 {
            lhs.add(w);
        }
    }
    let main = euler_phi(q) as f64 / (q as f64 * u as f64) * v.integral();
    let lhs = lhs.value();
    Ok(CoprimeSumCheck {
        lhs,
        main,
        deviation: (lhs - main).abs(),
        dq: divisor_count(q),
        log_scale: (2.0 * hi).max(1.0).ln(),
    })
}

/// Exact evaluation of `sum over a = d1 d2 d3 of phi(d2 d3) phi(d3) / (d2 d3)`
/// over ordered factorizations, in rational arithmetic. Equals `a`.
pub fn check_phi_identity(a: u64) -> Ratio<u64> {
    let mut total = Ratio::from_integer(0u64);
    for d1 in divisors(a) {
        let rest = a / d1;
        for d2 in divisors(rest) {
            let d3 = rest / d2;
            total += Ratio::new(euler_phi(d2 * d3) * euler_phi(d3), d2 * d3);
        }
    }
    total
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}
