//! Deterministic decimal formatting used by map exports and the CLI.

/// Formats `x` with `sig` significant digits.
///
/// Plain decimal notation is used when the exponent lies in [-4, sig);
/// outside that range the output switches to scientific notation. The result
/// depends only on the input bits, so repeated exports are byte-identical.
pub fn format_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1, "need at least one significant digit");
    if x == 0.0 {
        return format!("{:.*}", sig - 1, 0.0);
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= sig as i32 {
        format!("{:.*e}", sig - 1, x)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    }
}

/// Nine significant digits, the default precision for emitted numbers.
pub fn sig9(x: f64) -> String {
    format_sig(x, 9)
}
