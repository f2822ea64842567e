//! Text formatting and parsing of numbers shared by the file formats.

use crate::error::{Error, Result};

/// Significant digits used for every emitted number.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", strip_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// [`format_sig`] at [`SIG_DIGITS`].
pub fn fmt12(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a list of reals separated by commas, semicolons, newlines or
/// whitespace.
/// Blank lines and `#` comments are skipped.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            out.push(parse_real(tok)?);
        }
    }
    Ok(out)
}

pub fn parse_real(tok: &str) -> Result<f64> {
    let tok = tok.trim();
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{tok}`")))
}

/// Joins values with commas at 12 significant digits.
pub fn join_reals(values: &[f64]) -> String {
    join_reals_with(values, ",")
}

/// Joins values with `sep` at 12 significant digits.
pub fn join_reals_with(values: &[f64], sep: &str) -> String {
    values.iter().map(|&v| fmt12(v)).collect::<Vec<_>>().join(sep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.25), "-2.25");
        assert_eq!(fmt12(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(1234567.0), "1234567");
        assert_eq!(fmt12(1.5e-7), "1.5e-7");
        assert_eq!(fmt12(2.0e15), "2e15");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(f64::INFINITY), "inf");
    }

    #[test]
    fn parses_mixed_separators() {
        let v = parse_real_list("0.5, 0.25\n0.25\n# comment\n\n").unwrap();
        assert_eq!(v, vec![0.5, 0.25, 0.25]);
        assert!(parse_real_list("0.5,abc").is_err());
    }

    #[test]
    fn twelve_digit_round_trip() {
        for &x in &[0.1, 1.0 / 7.0, 123.456789012345, -9.87654321e-9, 3.0e20] {
            let back: f64 = fmt12(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} -> {back}");
        }
    }
}
