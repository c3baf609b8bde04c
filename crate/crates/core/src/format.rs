//! Fixed float formatting for emitted files.

use std::sync::OnceLock;

/// Environment variable overriding the number of significant digits in output files.
pub const PRECISION_ENV: &str = "SQMANIP_PRECISION";
const DEFAULT_DIGITS: usize = 17;

fn digits() -> usize {
    static DIGITS: OnceLock<usize> = OnceLock::new();
    *DIGITS.get_or_init(|| {
        std::env::var(PRECISION_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|d| (1..=17).contains(d))
            .unwrap_or(DEFAULT_DIGITS)
    })
}

/// Scientific notation with a fixed number of significant digits.
pub fn num(x: f64) -> String {
    format!("{:.*e}", digits() - 1, x)
}
