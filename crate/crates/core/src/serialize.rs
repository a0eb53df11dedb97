//! Report serialization: JSON at 12 significant digits (the archival
//! format) and CSV summaries at 6.

use crate::error::Result;
use serde::Serialize;
use serde_json::Value;

/// Rounds to `digits` significant digits through the shortest decimal
/// representation, so emitted reports are stable across platforms.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Formats with `digits` significant digits (CSV cells).
pub fn format_sig(x: f64, digits: usize) -> String {
    let rounded = round_sig(x, digits);
    // Prefer plain notation when it stays compact.
    if rounded == 0.0 || (rounded.abs() >= 1e-4 && rounded.abs() < 1e12) {
        let s = format!("{rounded}");
        if s.len() <= digits + 6 {
            return s;
        }
    }
    format!("{:.*e}", digits.saturating_sub(1), rounded)
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("checked f64");
                if let Some(rounded) = serde_json::Number::from_f64(round_sig(x, digits)) {
                    *n = rounded;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_value(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_value(i, digits)),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to `digits` significant digits;
/// byte-identical across runs for identical inputs.
pub fn to_canonical_json<T: Serialize>(value: &T, digits: usize) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v, digits);
    Ok(serde_json::to_string_pretty(&v)?)
}
