//! Number formatting shared by the CSV writers.

use std::fmt::Write as _;

/// Magnitudes below this are written as `DB_FLOOR`.
pub const DB_FLOOR: f64 = -240.0;

/// C-style `%.12e`: `-1.234567890123e-05`.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    // no negative zero
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn db(magnitude: f64) -> f64 {
    if magnitude <= 0.0 {
        return DB_FLOOR;
    }
    (20.0 * magnitude.log10()).max(DB_FLOOR)
}

/// Phase in degrees in `(-180, 180]`.
pub fn phase_deg(re: f64, im: f64) -> f64 {
    let p = im.atan2(re).to_degrees();
    if p <= -180.0 {
        p + 360.0
    } else {
        p
    }
}

/// `count` equispaced points on `[0, pi]`.
pub fn theta_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| std::f64::consts::PI * i as f64 / (count - 1) as f64)
        .collect()
}

/// CSV text with a header line and rows of numbers.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| sci(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
