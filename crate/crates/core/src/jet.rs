//! Truncated Taylor (jet) arithmetic of fixed degree.
//!
//! Window functions are built from exp, log, and rational operations, so
//! propagating a degree-6 Taylor expansion through the same expression tree
//! yields their derivatives to machine precision. That is what backs the
//! dual-sum truncation bounds: derivative L1-norms computed from jets, not
//! noisy high-order finite differences.

/// Number of Taylor coefficients carried (degree 6: value + 6 derivatives).
pub const JET_LEN: usize = 7;

/// Taylor coefficients `c[k] = f^(k)(x)/k!` at an expansion point.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub c: [f64; JET_LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet { c }
    }

    /// The identity function expanded at `x`.
    pub fn variable(x: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative (un-scaled): `c[k] * k!`.
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
        self.c[k] * FACT[k]
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            c[k] = self.c[k] + o.c[k];
        }
        Jet { c }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            c[k] = self.c[k] - o.c[k];
        }
        Jet { c }
    }

    pub fn neg(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            c[k] = -self.c[k];
        }
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            c[k] = self.c[k] * s;
        }
        Jet { c }
    }

    /// Cauchy product of Taylor coefficients.
    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..JET_LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }

    /// Reciprocal series; requires nonzero value at the expansion point.
    pub fn recip(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        let inv0 = 1.0 / self.c[0];
        c[0] = inv0;
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * c[k - j];
            }
            c[k] = -inv0 * acc;
        }
        Jet { c }
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// exp of the series, via b' = a' b.
    pub fn exp(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = self.c[0].exp();
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (j as f64) * self.c[j] * c[k - j];
            }
            c[k] = acc / k as f64;
        }
        Jet { c }
    }

    /// Natural log of the series; requires a positive value.
    pub fn ln(&self) -> Jet {
        let inv = self.recip();
        let mut c = [0.0; JET_LEN];
        c[0] = self.c[0].ln();
        // b' = a'/a, integrated coefficientwise.
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 0..k {
                acc += ((j + 1) as f64) * self.c[j + 1] * inv.c[k - 1 - j];
            }
            c[k] = acc / k as f64;
        }
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())), "{a} vs {b}");
    }

    #[test]
    fn exp_matches_itself() {
        // f(t)=exp(t): all derivatives equal exp(x).
        let j = Jet::variable(0.7).exp();
        for k in 0..JET_LEN {
            assert_close(j.derivative(k), 0.7f64.exp(), 1e-14);
        }
    }

    #[test]
    fn ln_derivatives() {
        // f(t)=ln t: f^(k)(x) = (-1)^(k-1) (k-1)!/x^k.
        let x = 1.9;
        let j = Jet::variable(x).ln();
        let mut fact = 1.0;
        for k in 1..JET_LEN {
            let expected = if k % 2 == 1 { fact / x.powi(k as i32) } else { -fact / x.powi(k as i32) };
            assert_close(j.derivative(k), expected, 1e-13);
            fact *= k as f64;
        }
    }

    #[test]
    fn recip_and_div_roundtrip() {
        let x = Jet::variable(0.37);
        let one = x.mul(&x.recip());
        assert_close(one.value(), 1.0, 1e-15);
        for k in 1..JET_LEN {
            assert!(one.c[k].abs() < 1e-12);
        }
    }

    #[test]
    fn composite_against_finite_differences() {
        // f(t) = exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))), the smooth step
        // used by the window module; compare low-order jets with central
        // differences.
        fn f(t: f64) -> f64 {
            let a = (-1.0 / t).exp();
            let b = (-1.0 / (1.0 - t)).exp();
            a / (a + b)
        }
        fn jet_f(t: f64) -> Jet {
            let tj = Jet::variable(t);
            let a = tj.recip().neg().exp();
            let b = Jet::constant(1.0).sub(&tj).recip().neg().exp();
            a.div(&a.add(&b))
        }
        for &t in &[0.21, 0.4, 0.55, 0.83] {
            let j = jet_f(t);
            let h = 1e-5;
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            assert_close(j.derivative(1), d1, 1e-8);
            assert_close(j.derivative(2), d2, 1e-5);
        }
    }
}
