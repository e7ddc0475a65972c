//! CSV output helpers: full-precision float formatting and row assembly.
//!
//! Every CSV the crate writes goes through these, so files are
//! byte-identical across runs and thread counts. Floats are printed with
//! 17 significant digits, which round-trips f64 exactly.

use num_complex::Complex64;
use std::io::Write;

/// Full-precision rendering of an f64 (`{:.16e}`), round-trip exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact complex rendering `re+imi` / `re-imi`, comma-free so it can sit
/// in a CSV field unquoted.
pub fn fmt_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:.16e}-{:.16e}i", z.re, -z.im)
    } else {
        format!("{:.16e}+{:.16e}i", z.re, z.im)
    }
}

/// Write one CSV row (LF line ending) from pre-rendered fields.
pub fn write_row<W: Write>(out: &mut W, fields: &[String]) -> std::io::Result<()> {
    writeln!(out, "{}", fields.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.0_f64.sqrt(), -1e-300, 6.02e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn complex_has_no_commas() {
        let s = fmt_complex(Complex64::new(-0.25, -1.5));
        assert!(!s.contains(','));
        assert!(s.ends_with('i'));
        assert!(s.contains('-'));
    }

    #[test]
    fn rows_use_lf() {
        let mut buf = Vec::new();
        write_row(&mut buf, &["a".into(), "b".into()]).unwrap();
        assert_eq!(buf, b"a,b\n");
    }
}
