//! Fixed numeric formatting for all emitted files.
//!
//! Everything numeric is written through [`fmt_sig`] so that golden-file
//! comparisons are byte-exact across runs and platforms.

/// Formats with 9 significant digits in plain decimal notation.
///
/// The decimal count follows the magnitude, so `300000.0` becomes
/// `300000.000` and `0.005` becomes `0.00500000000`. Values at or above
/// 1e9 print with no fractional part.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
