//! JSON output with floats rounded to six significant digits, so golden
//! files do not depend on the last few bits of platform arithmetic.

use serde::Serialize;
use serde_json::{Number, Value};

/// Magnitudes below this are written as zero; they are rounding residue
/// (e.g. a coordinate that is analytically zero).
pub const ZERO_SNAP: f64 = 1e-12;

/// Rounds `x` to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if x.abs() < ZERO_SNAP {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// `x` rounded to six significant digits, printed in its shortest form.
pub fn fmt_sig6(x: f64) -> String {
    let r = sig6(x);
    if r == 0.0 {
        // avoid "-0"
        return "0".into();
    }
    format!("{r}")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(rounded) = n.as_f64().map(sig6).and_then(Number::from_f64) {
                *n = rounded;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes to a JSON value with every float rounded by [`sig6`].
pub fn to_value_sig6<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed JSON with every float rounded by [`sig6`].
pub fn to_string_sig6<T: Serialize>(value: &T) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&to_value_sig6(value)?)
}
