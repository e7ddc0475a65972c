//! Smooth compactly supported windows, logarithmic partitions of unity,
//! continuous Fourier transforms, and certified dual-sum truncation.
//!
//! Everything is built from one smooth step `s(t) = o(t)/(o(t)+o(1-t))`
//! with `o(t) = exp(-1/t)`: plateau bumps for test windows, and the
//! telescoping pieces `b_l(x) = s(log_D x - (l-1)) - s(log_D x - l)` whose
//! sum over `l` is exactly 1 on `[1, D^l_max]`.
//!
//! Window evaluation exists in two forms: plain `f64` (hot paths) and
//! degree-6 Taylor jets (derivative L1-norms). The jet-based norms feed
//! integration-by-parts bounds `|Vhat(xi)| <= ||V^(v)||_1 / (2pi |xi|)^v`,
//! which is what certifies every truncated dual sum in the crate.

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::jet::{Jet, JET_LEN};
use crate::kahan::{KahanComplex, KahanSum};
use crate::{Error, Result};

/// Below this argument `exp(-1/t)` underflows to exactly 0.0, so the step
/// and all tracked derivatives are exactly flat.
const STEP_FLAT: f64 = 1e-3;

/// The smooth step: 0 for `t <= 0`, 1 for `t >= 1`, strictly increasing in
/// between, with `s(1/2) = 1/2` exactly.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// The same step in jet arithmetic; `w` may be any inner expansion.
fn step_jet(w: &Jet) -> Jet {
    let t = w.value();
    if t <= STEP_FLAT {
        return Jet::constant(0.0);
    }
    if t >= 1.0 - STEP_FLAT {
        return Jet::constant(1.0);
    }
    let a = w.recip().neg().exp();
    let b = Jet::constant(1.0).sub(w).recip().neg().exp();
    a.div(&a.add(&b))
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    /// `s(log_D x - (l-1)) - s(log_D x - l)`, support `[D^(l-1), D^(l+1)]`.
    LogPiece { delta: f64, ell: u32 },
    /// Rise over `[a,b]`, plateau on `[b,c]`, fall over `[c,d]`, all
    /// transitions taken in log coordinates. Requires `0 < a < b <= c < d`.
    Plateau { a: f64, b: f64, c: f64, d: f64 },
    /// Identically zero (empty support).
    Zero,
}

impl Shape {
    fn support(&self) -> (f64, f64) {
        match *self {
            Shape::LogPiece { delta, ell } => (delta.powi(ell as i32 - 1), delta.powi(ell as i32 + 1)),
            Shape::Plateau { a, d, .. } => (a, d),
            Shape::Zero => (1.0, 1.0),
        }
    }

    // Scalar evaluation mirrors `eval_jet` operation for operation
    // (multiply by reciprocal, never divide by the log) so that a value and
    // the constant term of a jet at the same point agree bitwise.
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Shape::LogPiece { delta, ell } => {
                let u = x.ln() * (1.0 / delta.ln());
                smooth_step(u - (ell as f64 - 1.0)) - smooth_step(u - ell as f64)
            }
            Shape::Plateau { a, b, c, d } => {
                let lx = x.ln();
                let rise = smooth_step((lx - a.ln()) * (1.0 / (b.ln() - a.ln())));
                let fall = smooth_step((lx - c.ln()) * (1.0 / (d.ln() - c.ln())));
                rise * (1.0 - fall)
            }
            Shape::Zero => 0.0,
        }
    }

    fn eval_jet(&self, x: &Jet) -> Jet {
        match *self {
            Shape::LogPiece { delta, ell } => {
                let u = x.ln().scale(1.0 / delta.ln());
                let hi = step_jet(&u.sub(&Jet::constant(ell as f64 - 1.0)));
                let lo = step_jet(&u.sub(&Jet::constant(ell as f64)));
                hi.sub(&lo)
            }
            Shape::Plateau { a, b, c, d } => {
                let lx = x.ln();
                let rise = step_jet(&lx.sub(&Jet::constant(a.ln())).scale(1.0 / (b.ln() - a.ln())));
                let fall = step_jet(&lx.sub(&Jet::constant(c.ln())).scale(1.0 / (d.ln() - c.ln())));
                rise.mul(&Jet::constant(1.0).sub(&fall))
            }
            Shape::Zero => Jet::constant(0.0),
        }
    }

    /// Reciprocal of the narrowest transition width in log coordinates;
    /// this is the natural derivative-scale constant of the window.
    fn derivative_scale(&self) -> f64 {
        let w = match *self {
            Shape::LogPiece { delta, .. } => delta.ln(),
            Shape::Plateau { a, b, c, d } => (b.ln() - a.ln()).min(d.ln() - c.ln()),
            Shape::Zero => return 1.0,
        };
        (1.0 / w).max(1.0)
    }
}

/// A smooth real window, compactly supported in `(0, inf)`.
#[derive(Clone, Debug)]
pub struct SmoothWindow {
    shape: Shape,
    /// Evaluation divides the argument by this, scaling the support.
    arg_scale: f64,
    support: (f64, f64),
    derivative_scale: f64,
    /// Nominal scale M of the window (partition pieces: `delta^ell`).
    scale: f64,
}

impl SmoothWindow {
    fn from_shape(shape: Shape, nominal: f64) -> SmoothWindow {
        let (lo, hi) = shape.support();
        SmoothWindow {
            shape,
            arg_scale: 1.0,
            support: (lo, hi),
            derivative_scale: shape.derivative_scale(),
            scale: nominal,
        }
    }

    /// Smooth plateau window: rises over `[a,b]`, is 1 on `[b,c]`, falls
    /// over `[c,d]`. Requires `0 < a < b <= c < d`.
    pub fn plateau(a: f64, b: f64, c: f64, d: f64) -> Result<SmoothWindow> {
        if !(0.0 < a && a < b && b <= c && c < d) {
            return Err(Error::invalid(format!("bad plateau corners ({a}, {b}, {c}, {d})")));
        }
        Ok(SmoothWindow::from_shape(Shape::Plateau { a, b, c, d }, (b * c).sqrt()))
    }

    #[inline]
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// The nominal scale M used by truncation formulas.
    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn derivative_scale(&self) -> f64 {
        self.derivative_scale
    }

    /// Evaluate; exactly 0 outside the support by construction.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.support;
        if t <= lo || t >= hi {
            return 0.0;
        }
        self.shape.eval(t / self.arg_scale)
    }

    /// Degree-6 Taylor expansion at `t` (value + 6 derivatives).
    pub fn eval_jet(&self, t: f64) -> Jet {
        let (lo, hi) = self.support;
        if t <= lo || t >= hi {
            return Jet::constant(0.0);
        }
        let x = Jet::variable(t).scale(1.0 / self.arg_scale);
        self.shape.eval_jet(&x)
    }

    /// The same window with its argument (and support) scaled by `m`.
    pub fn scaled(&self, m: f64) -> Result<SmoothWindow> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid(format!("bad window scale {m}")));
        }
        Ok(SmoothWindow {
            shape: self.shape,
            arg_scale: self.arg_scale * m,
            support: (self.support.0 * m, self.support.1 * m),
            derivative_scale: self.derivative_scale,
            scale: self.scale * m,
        })
    }

    /// `integral V = Vhat(0)`, real by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        fourier_continuous(self, 0.0).re
    }

    /// The identically-zero window (empty support, nominal scale 1); the
    /// degenerate element for trivial-case checks.
    pub fn zero() -> SmoothWindow {
        SmoothWindow::from_shape(Shape::Zero, 1.0)
    }
}

/// The fixed mother bump: 1 on `[1, 2]`, 0 outside `[1/2, 4]`.
pub fn mother_bump() -> SmoothWindow {
    SmoothWindow::plateau(0.5, 1.0, 2.0, 4.0).expect("fixed corners are valid")
}

/// A smooth window supported in `[1/2, 2]` (plateau on `[3/4, 3/2]`), the
/// shape used for scaled bilinear test windows.
pub fn unit_window() -> SmoothWindow {
    SmoothWindow::plateau(0.5, 0.75, 1.5, 2.0).expect("fixed corners are valid")
}

/// One piece of the logarithmic partition of unity.
#[derive(Clone, Debug)]
pub struct PartitionPiece {
    pub ell: u32,
    pub delta: f64,
    pub window: SmoothWindow,
}

/// The single piece `b_(ell, delta)`, supported in
/// `[delta^(ell-1), delta^(ell+1)]` with nominal scale `delta^ell`.
pub fn partition_piece(delta: f64, ell: u32) -> Result<SmoothWindow> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(Error::invalid(format!("partition needs delta > 1, got {delta}")));
    }
    Ok(SmoothWindow::from_shape(Shape::LogPiece { delta, ell }, delta.powi(ell as i32)))
}

/// Pieces `ell = 0..=ell_max`; their sum is exactly 1 on `[1, delta^ell_max]`.
pub fn partition(delta: f64, ell_max: u32) -> Result<Vec<PartitionPiece>> {
    (0..=ell_max)
        .map(|ell| {
            Ok(PartitionPiece { ell, delta, window: partition_piece(delta, ell)? })
        })
        .collect()
}

/// Dyadic piece `b_(ell, 2)`, supported in `[2^(ell-1), 2^(ell+1)]`.
pub fn dyadic_piece(ell: u32) -> SmoothWindow {
    partition_piece(2.0, ell).expect("2 > 1")
}

/// Number of quadrature nodes for the primary (trapezoid) rule.
const TRAPEZOID_NODES: usize = 1 << 12;

/// `e(-t*xi) = exp(-2 pi i t xi)`, with the argument reduced mod 1 before
/// the trig calls. The product `t*xi` is split exactly via fused
/// multiply-add, so the phase stays accurate to a few ulps even when
/// `t*xi` is of order 1e4 (large dual frequencies), where the naive
/// `(2*pi*t*xi).sin()` has already lost five digits of phase.
#[inline]
fn e_minus(t: f64, xi: f64) -> Complex64 {
    let prod = t * xi;
    let residue = t.mul_add(xi, -prod); // exact: t*xi = prod + residue
    let frac = prod.fract() + residue;
    let (s, c) = (-2.0 * std::f64::consts::PI * frac).sin_cos();
    Complex64::new(c, s)
}

/// Continuous Fourier transform `Vhat(xi) = integral V(t) e(-t xi) dt`,
/// by composite trapezoid over the support with 2^12 nodes.
///
/// The integrand is smooth and vanishes to all orders at the endpoints, so
/// the trapezoid rule converges super-algebraically; fixed nodes and an
/// ascending compensated sum keep the value deterministic.
pub fn fourier_continuous(v: &SmoothWindow, xi: f64) -> Complex64 {
    let (lo, hi) = v.support();
    let n = TRAPEZOID_NODES;
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = KahanComplex::new();
    for j in 0..n {
        let t = lo + h * j as f64;
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let val = v.eval(t);
        if val == 0.0 {
            continue;
        }
        acc.add(e_minus(t, xi) * (w * val));
    }
    acc.value() * h
}

/// The transform on the arithmetic grid `xi = n/q`, `n = 0..=n_max`
/// (negative frequencies follow by conjugation since V is real).
///
/// Same nodes, weights, and accumulation order as [`fourier_continuous`],
/// but the per-node phases advance by one complex rotation per grid step
/// instead of fresh trig calls, with an exact re-anchoring every 256 steps
/// to stop rounding drift. This is what makes wide certified dual sums
/// (tens of thousands of frequencies) affordable.
pub fn fourier_grid(v: &SmoothWindow, q: f64, n_max: u64) -> Vec<Complex64> {
    const RENORM_PERIOD: u64 = 256;
    let (lo, hi) = v.support();
    let n_nodes = TRAPEZOID_NODES;
    let h = (hi - lo) / (n_nodes - 1) as f64;

    // fixed node data: position, trapezoid-weighted window value
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(n_nodes);
    for j in 0..n_nodes {
        let t = lo + h * j as f64;
        let w = if j == 0 || j == n_nodes - 1 { 0.5 } else { 1.0 };
        let val = v.eval(t);
        if val != 0.0 {
            nodes.push((t, w * val));
        }
    }

    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut cur: Vec<Complex64> = nodes.iter().map(|&(_, c)| Complex64::new(c, 0.0)).collect();
    let rot: Vec<Complex64> = nodes.iter().map(|&(t, _)| e_minus(t, 1.0 / q)).collect();
    for n in 0..=n_max {
        if n > 0 && n % RENORM_PERIOD == 0 {
            let xi = n as f64 / q;
            for (z, &(t, c)) in cur.iter_mut().zip(&nodes) {
                *z = e_minus(t, xi) * c;
            }
        }
        let mut acc = KahanComplex::new();
        for z in &cur {
            acc.add(*z);
        }
        out.push(acc.value() * h);
        for (z, r) in cur.iter_mut().zip(&rot) {
            *z *= *r;
        }
    }
    out
}

/// Independent quadrature rule for the same transform: composite 256-node
/// Gauss-Legendre, with panels no wider than 8 so oscillation stays
/// resolved on long supports. Used as the oracle for the trapezoid path;
/// the two agree to 1e-9 on smooth windows.
pub fn fourier_continuous_oracle(v: &SmoothWindow, xi: f64) -> Complex64 {
    let (lo, hi) = v.support();
    let panels = ((hi - lo) / 8.0).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut acc = KahanComplex::new();
    for k in 0..panels {
        let a = lo + width * k as f64;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        for &(x, w) in gauss_legendre_256() {
            let t = mid + half * x;
            let val = v.eval(t);
            if val == 0.0 {
                continue;
            }
            acc.add(e_minus(t, xi) * (w * val * half));
        }
    }
    acc.value()
}

fn gauss_legendre_256() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| legendre_nodes(256))
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi-style initial guess, then Newton
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// L1 norms of the window's derivatives over its support
/// (`out[v] = integral |V^(v)|`, `v = 0..=6`), computed from Taylor jets on
/// a fixed trapezoid grid, inflated by a 5% quadrature-safety factor.
pub fn derivative_l1_norms(v: &SmoothWindow) -> [f64; JET_LEN] {
    let (lo, hi) = v.support();
    let n = TRAPEZOID_NODES;
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = [KahanSum::new(); JET_LEN];
    for j in 0..n {
        let t = lo + h * j as f64;
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let jet = v.eval_jet(t);
        for (nu, slot) in acc.iter_mut().enumerate() {
            slot.add(w * jet.derivative(nu).abs());
        }
    }
    let mut out = [0.0; JET_LEN];
    for nu in 0..JET_LEN {
        out[nu] = acc[nu].value() * h * 1.05;
    }
    out
}

/// Certified control of the dual sums `sum over n of Vhat(n/q)`.
///
/// Bounds come from integration by parts: `|Vhat(xi)| <= N_v / (2pi|xi|)^v`
/// with `N_v = ||V^(v)||_1`, minimized over the tracked orders.
#[derive(Clone, Debug)]
pub struct DualTail {
    norms: [f64; JET_LEN],
}

/// A truncation decision: keep `|n| <= index`, with the certified bound on
/// the mass left outside.
#[derive(Clone, Copy, Debug)]
pub struct Truncation {
    pub index: u64,
    pub tail_bound: f64,
}

impl DualTail {
    pub fn new(v: &SmoothWindow) -> DualTail {
        DualTail { norms: derivative_l1_norms(v) }
    }

    /// Pointwise bound on `|Vhat(xi)|`.
    pub fn pointwise_bound(&self, xi: f64) -> f64 {
        let mut best = self.norms[0];
        let z = 2.0 * std::f64::consts::PI * xi.abs();
        if z > 0.0 {
            for nu in 1..JET_LEN {
                best = best.min(self.norms[nu] / z.powi(nu as i32));
            }
        }
        best
    }

    /// Bound on `sum over |n| > index of |Vhat(n/q)|`.
    pub fn tail_bound(&self, q: f64, index: u64) -> f64 {
        if index == 0 {
            return f64::INFINITY;
        }
        let n = index as f64;
        let mut best = f64::INFINITY;
        for nu in 2..JET_LEN {
            // 2 * N_v * (q/2pi)^v * n^(1-v)/(v-1), integral comparison
            let b = 2.0 * self.norms[nu] * (q / (2.0 * std::f64::consts::PI)).powi(nu as i32)
                * n.powi(1 - nu as i32)
                / (nu as f64 - 1.0);
            best = best.min(b);
        }
        best
    }

    /// Smallest index whose certified tail bound is below `tol`.
    pub fn truncate(&self, q: f64, tol: f64) -> Truncation {
        if tol == f64::INFINITY {
            return Truncation { index: 0, tail_bound: 0.0 };
        }
        let mut best = u64::MAX;
        for nu in 2..JET_LEN {
            let a = 2.0 * self.norms[nu] * (q / (2.0 * std::f64::consts::PI)).powi(nu as i32)
                / (nu as f64 - 1.0);
            // solve a * n^(1-v) <= tol
            let n = (a / tol).powf(1.0 / (nu as f64 - 1.0)).ceil();
            let n = if n.is_finite() { (n as u64).max(1) } else { u64::MAX };
            best = best.min(n);
        }
        Truncation { index: best, tail_bound: self.tail_bound(q, best) }
    }
}

/// Default absolute tolerance per truncated dual sum (one order below the
/// identity-check tolerance).
pub const DUAL_SUM_TOL: f64 = 1e-9;

/// Dual-sum cutoff for a window of scale M against modulus q: the smallest
/// index with certified tail below `tol`, clamped to twice the formula cap
/// `ceil(q * x^eta / M)`. In the regimes the formula is built for, the
/// tolerance-driven index wins well before the cap.
pub fn truncation_index(v: &SmoothWindow, q: u64, x: f64, eta: f64, tol: f64) -> u64 {
    let by_tol = DualTail::new(v).truncate(q as f64, tol).index;
    let cap = (q as f64 * x.powf(eta) / v.scale()).ceil().max(1.0) as u64;
    by_tol.min(2 * cap)
}

/// Which of the two admissible-exponent conditions a profile satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionVerdict {
    FirstEstimate,
    SecondEstimate,
    Both,
    Neither,
}

impl std::fmt::Display for RegionVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegionVerdict::FirstEstimate => "FirstEstimate",
            RegionVerdict::SecondEstimate => "SecondEstimate",
            RegionVerdict::Both => "Both",
            RegionVerdict::Neither => "Neither",
        };
        f.write_str(s)
    }
}

/// Exponent data for a modulus/scale configuration: `q = x^kappa`,
/// `M_i = x^(mu_i)`, slack `eta`, and the partition sharpness B.
#[derive(Clone, Copy, Debug)]
pub struct ExponentProfile {
    pub kappa: f64,
    pub mu: [f64; 3],
    pub eta: f64,
    pub big_b: f64,
}

impl ExponentProfile {
    pub fn new(kappa: f64, mu: [f64; 3], eta: f64, big_b: f64) -> Result<ExponentProfile> {
        if !(0.01..=0.99).contains(&kappa) {
            return Err(Error::invalid(format!("kappa {kappa} outside [1/100, 99/100]")));
        }
        if !(mu[0] >= 0.0 && mu[0] <= mu[1] && mu[1] <= mu[2]) {
            return Err(Error::invalid(format!("mu {mu:?} must be sorted ascending and nonnegative")));
        }
        if mu[0] + mu[1] + mu[2] > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("mu {mu:?} must sum to at most 1")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("eta {eta} must be positive")));
        }
        if !(big_b >= 1.0) {
            return Err(Error::invalid(format!("B {big_b} must be >= 1")));
        }
        Ok(ExponentProfile { kappa, mu, eta, big_b })
    }
}

/// Test the profile against the two sufficient conditions:
///
/// * first:  `kappa <= 8/15 - 4 eta`  and  `mu3 >= 11/4 kappa - 1 + 14 eta`
/// * second: `kappa <= 4/7 - eta` and
///           `5/2 kappa - 1 + 12 eta <= mu3 <= 2 - 3 kappa - 12 eta`
pub fn region_check(profile: &ExponentProfile) -> RegionVerdict {
    let k = profile.kappa;
    let mu3 = profile.mu[2];
    let eta = profile.eta;
    let first = k <= 8.0 / 15.0 - 4.0 * eta && mu3 >= 11.0 / 4.0 * k - 1.0 + 14.0 * eta;
    let second = k <= 4.0 / 7.0 - eta
        && 5.0 / 2.0 * k - 1.0 + 12.0 * eta <= mu3
        && mu3 <= 2.0 - 3.0 * k - 12.0 * eta;
    match (first, second) {
        (true, true) => RegionVerdict::Both,
        (true, false) => RegionVerdict::FirstEstimate,
        (false, true) => RegionVerdict::SecondEstimate,
        (false, false) => RegionVerdict::Neither,
    }
}

/// `n` log-spaced samples covering `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_basics() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert_eq!(smooth_step(0.5), 0.5);
        // monotone on a grid
        let mut prev = 0.0;
        for i in 1..100 {
            let v = smooth_step(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn mother_bump_plateau_and_support() {
        let b = mother_bump();
        assert_eq!(b.eval(1.3), 1.0);
        assert_eq!(b.eval(2.0), 1.0);
        assert_eq!(b.eval(0.4), 0.0);
        assert_eq!(b.eval(4.0), 0.0);
        assert_eq!(b.eval(5.0), 0.0);
        assert!(b.eval(0.8) > 0.0 && b.eval(0.8) < 1.0);
    }

    #[test]
    fn partition_validation() {
        assert!(partition(1.0, 4).is_err());
        assert!(partition(0.5, 4).is_err());
        assert!(partition(2.0, 4).is_ok());
    }

    #[test]
    fn partition_sums_to_one_at_spot_values() {
        let pieces = partition(2.0, 12).unwrap();
        for &xi in &[1.0, 3.7, 100.0, 1000.0] {
            let sum: f64 = pieces.iter().map(|p| p.window.eval(xi)).sum();
            assert!((sum - 1.0).abs() <= 1e-12, "xi {xi}: {sum}");
        }
        // at 3.7 only the pieces with 2^(l-1) <= 3.7 <= 2^(l+1) contribute
        for p in &pieces {
            let v = p.window.eval(3.7);
            if p.ell == 1 || p.ell == 2 {
                assert!(v > 0.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn piece_support_is_exact() {
        for &(delta, ell) in &[(2.0, 3u32), (1.1, 7), (1.01, 40)] {
            let w = partition_piece(delta, ell).unwrap();
            let (lo, hi) = w.support();
            assert_eq!(w.eval(lo), 0.0);
            assert_eq!(w.eval(hi), 0.0);
            assert_eq!(w.eval(lo * 0.999), 0.0);
            assert_eq!(w.eval(hi * 1.001), 0.0);
            assert!(w.eval((lo * hi).sqrt()) > 0.0);
        }
    }

    #[test]
    fn quadrature_rules_agree() {
        let windows = [
            mother_bump(),
            unit_window(),
            dyadic_piece(3),
            partition_piece(1.1, 12).unwrap(),
            mother_bump().scaled(64.0).unwrap(),
        ];
        for v in &windows {
            for &xi in &[0.0, 0.03, 0.17, 0.5, 1.5] {
                let a = fourier_continuous(v, xi);
                let b = fourier_continuous_oracle(v, xi);
                assert!((a - b).norm() < 1e-9, "xi {xi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn grid_sweep_matches_single_evaluations() {
        // the rotating-phase sweep must track the direct trig path across
        // renormalization boundaries
        let v = dyadic_piece(4);
        let q = 101.0;
        let grid = fourier_grid(&v, q, 600);
        for &n in &[0u64, 1, 17, 255, 256, 257, 511, 512, 600] {
            let direct = fourier_continuous(&v, n as f64 / q);
            let err = (grid[n as usize] - direct).norm();
            assert!(err <= 1e-13, "n={n}: sweep off by {err}");
        }
    }

    #[test]
    fn zero_window_behaves() {
        let z = SmoothWindow::zero();
        assert_eq!(z.eval(1.0), 0.0);
        assert_eq!(z.eval(123.4), 0.0);
        assert_eq!(z.integral(), 0.0);
        assert_eq!(fourier_continuous(&z, 0.7).norm(), 0.0);
        let t = DualTail::new(&z).truncate(101.0, 1e-9);
        assert!(t.tail_bound <= 1e-9);
    }

    #[test]
    fn transform_at_zero_is_the_integral() {
        let v = mother_bump();
        let z = fourier_continuous(&v, 0.0);
        assert!(z.im.abs() < 1e-15);
        assert!((z.re - fourier_continuous_oracle(&v, 0.0).re).abs() < 1e-10);
        // plateau [1,2] with transitions: integral between plateau width and support width
        assert!(z.re > 1.0 && z.re < 3.5);
    }

    #[test]
    fn jets_match_finite_differences() {
        let v = dyadic_piece(4); // support [8, 32]
        for &t in &[9.0, 13.0, 17.0, 24.0, 30.0] {
            let jet = v.eval_jet(t);
            let h = 1e-5 * t;
            let d1 = (v.eval(t + h) - v.eval(t - h)) / (2.0 * h);
            let d2 = (v.eval(t + h) - 2.0 * v.eval(t) + v.eval(t - h)) / (h * h);
            assert!((jet.derivative(0) - v.eval(t)).abs() < 1e-15);
            assert!((jet.derivative(1) - d1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((jet.derivative(2) - d2).abs() < 1e-3 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn pointwise_decay_bound_holds() {
        let v = dyadic_piece(3); // support [4, 16]
        let tail = DualTail::new(&v);
        let (lo, hi) = v.support();
        let xi = 1000.0 / (hi - lo);
        let actual = fourier_continuous(&v, xi).norm();
        assert!(actual <= tail.pointwise_bound(xi), "{actual} vs {}", tail.pointwise_bound(xi));
        // and the bound is meaningful (not vacuous) at this frequency
        assert!(tail.pointwise_bound(xi) < 1e-3);
    }

    #[test]
    fn truncation_examples() {
        // infinite tolerance keeps nothing
        let v = dyadic_piece(6);
        assert_eq!(DualTail::new(&v).truncate(101.0, f64::INFINITY).index, 0);
        assert_eq!(truncation_index(&v, 101, 101.0 * 101.0, 0.05, f64::INFINITY), 0);

        // hard cap: q = M = 101 forces the index under 2*ceil(x^eta)
        let w = mother_bump().scaled(101.0 / w_scale()).unwrap();
        let x: f64 = 101.0 * 101.0;
        let cap = 2 * (x.powf(0.05).ceil() as u64);
        assert!(truncation_index(&w, 101, x, 0.05, DUAL_SUM_TOL) <= cap);

        // smooth window at large scale: a certified 1e-9 tail needs only
        // on the order of a hundred dual terms
        let big = mother_bump().scaled(512.0).unwrap();
        let t = DualTail::new(&big).truncate(101.0, DUAL_SUM_TOL);
        assert!(t.index >= 1 && t.index <= 200, "index {}", t.index);
        // certified: the reported tail bound really is below tolerance
        assert!(t.tail_bound <= DUAL_SUM_TOL);
    }

    fn w_scale() -> f64 {
        mother_bump().scale()
    }

    #[test]
    fn truncated_tail_is_really_below_the_bound() {
        // sum |Vhat(n/q)| beyond the index, numerically, against the bound
        let v = dyadic_piece(5); // support [16, 64]
        let q = 101.0;
        let tr = DualTail::new(&v).truncate(q, 1e-6);
        let mut tail = 0.0;
        for n in tr.index + 1..tr.index + 4000 {
            tail += fourier_continuous(&v, n as f64 / q).norm() * 2.0;
        }
        assert!(tail <= tr.tail_bound, "{tail} vs {}", tr.tail_bound);
    }

    #[test]
    fn profile_validation() {
        assert!(ExponentProfile::new(0.5, [0.2, 0.3, 0.4], 0.01, 2.0).is_ok());
        assert!(ExponentProfile::new(0.995, [0.2, 0.3, 0.4], 0.01, 2.0).is_err());
        assert!(ExponentProfile::new(0.5, [0.3, 0.2, 0.4], 0.01, 2.0).is_err());
        assert!(ExponentProfile::new(0.5, [0.4, 0.4, 0.4], 0.01, 2.0).is_err());
        assert!(ExponentProfile::new(0.5, [0.2, 0.3, 0.4], 0.0, 2.0).is_err());
        assert!(ExponentProfile::new(0.5, [0.2, 0.3, 0.4], 0.01, 0.5).is_err());
    }

    #[test]
    fn region_verdicts() {
        // the triple that falls in the gap between the two conditions
        let p = ExponentProfile::new(
            0.5 + 1.0 / 46.0,
            [13.0 / 46.0, 13.0 / 46.0, 10.0 / 23.0],
            1e-4,
            2.0,
        )
        .unwrap();
        assert_eq!(region_check(&p), RegionVerdict::Neither);

        // tiny kappa satisfies both
        let p = ExponentProfile::new(0.01, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-3, 2.0).unwrap();
        assert_eq!(region_check(&p), RegionVerdict::Both);

        // kappa exactly on the first condition's boundary as eta -> 0
        let kappa = 8.0 / 15.0;
        for eta in [1e-6, 1e-9] {
            let p = ExponentProfile::new(kappa, [0.2, 0.3, 1.0 / 3.0], eta, 2.0).unwrap();
            // mu3 = 1/3 < 11/4 * 8/15 - 1 = 7/15, so first fails on mu3 too;
            // second fails its lower bound by exactly 12*eta
            assert_eq!(region_check(&p), RegionVerdict::Neither);
        }
        // mu3 above the second condition's upper bound (2 - 3k - 12 eta =
        // 0.4988) but inside the first region: first alone
        let p = ExponentProfile::new(0.5, [0.2, 0.25, 0.55], 1e-4, 2.0).unwrap();
        assert_eq!(region_check(&p), RegionVerdict::FirstEstimate);
    }

    #[test]
    fn second_estimate_only_region() {
        // kappa in (8/15, 6/11): the first condition is dead, and the
        // second's mu3 window [0.3512, 0.3788] is still nonempty
        let p = ExponentProfile::new(0.54, [0.3, 0.33, 0.365], 1e-4, 2.0).unwrap();
        assert_eq!(region_check(&p), RegionVerdict::SecondEstimate);
    }
}
