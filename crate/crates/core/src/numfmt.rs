//! Fixed-precision number rendering for report artifacts.
//!
//! Every float written to an output file goes through [`sig6`], which
//! mimics C's `%.6g`. Internal arithmetic stays at full precision.

/// Formats `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

/// Formats `x` with `digits` significant digits, `%g` style: trailing zeros
/// are trimmed and scientific notation is used outside `1e-4 <= |x| < 10^digits`.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Rounds to six significant digits, for values serialized as JSON numbers.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.5e}", x).parse().expect("round-trip of formatted float")
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (6.666666666, "6.66667"),
            (0.0098, "0.0098"),
            (0.00009876543, "9.87654e-5"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (-0.25, "-0.25"),
            (999999.5, "1e6"),
            (0.1 + 0.2, "0.3"),
        ];
        for (x, want) in cases {
            assert_eq!(sig6(x), want, "formatting {x}");
        }
    }

    #[test]
    fn round6_agrees_with_sig6() {
        for x in [0.123456789, 6.666666, 0.0098123, 1.0 / 3.0, 12345.6789] {
            assert_eq!(round6(x), sig6(x).parse::<f64>().unwrap());
        }
    }
}
