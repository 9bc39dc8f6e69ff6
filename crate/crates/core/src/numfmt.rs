//! Text encoding of floating-point values: 17 significant digits, which
//! round-trips every finite `f64`.

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // "inf", "-inf" and "NaN" all parse back with `str::parse::<f64>`.
        format!("{x}")
    }
}
