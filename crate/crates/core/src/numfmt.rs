//! Shortest round-trip decimal formatting for CSV and report output.

/// Formats `v` with the fewest digits that parse back to the same value,
/// switching to exponent notation for very small or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || v.is_nan() || v.is_infinite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Comma-joins a row of numbers.
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}
