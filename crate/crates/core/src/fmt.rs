//! Number formatting shared by the file writers.

/// Formats `x` with 12 significant digits.
///
/// Values with a decimal exponent in `-5..=15` are printed in fixed notation,
/// others in scientific notation. Non-finite values print as `inf`, `-inf`
/// and `nan`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..=15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(100.0 / 210.0), "0.476190476190");
        assert_eq!(format_sig(0.0379), "0.0379000000000");
        assert_eq!(format_sig(1.0), "1.00000000000");
        assert_eq!(format_sig(-155.25), "-155.250000000");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.5e-20), "1.50000000000e-20");
        assert_eq!(format_sig(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for &x in &[1.0 / 3.0, 2.0 / 3.0, 0.999999999999999, 123456.789, 1e-4] {
            let back: f64 = format_sig(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }
}
