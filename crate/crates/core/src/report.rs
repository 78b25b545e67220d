//! Numeric formatting and JSON rendering for reports.

use serde::Serialize;
use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest decimal form of `x` at 12 significant digits, in exponent form
/// outside [1e−6, 1e15).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let r = round_sig(x);
        if r != 0.0 && !(1e-6..1e15).contains(&r.abs()) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// Pretty JSON with every float rounded to 12 significant digits and keys in
/// a stable order. Non-finite numbers become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).unwrap_or(Value::Null);
    serde_json::to_string_pretty(&round_value(v)).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(fmt_num(0.8366600265340756), "0.836660026534");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(-3.0), "-3");
        assert_eq!(fmt_num(1.23456789012345e-20), "1.23456789012e-20");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(round_sig(0.16000000000000003), 0.16);
    }

    #[test]
    fn json_rounds_nested_numbers() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            c: u64,
        }
        let s = to_json(&S {
            a: 0.1 + 0.2,
            b: vec![f64::NAN, 2.0 / 3.0],
            c: 7,
        });
        assert!(s.contains("\"a\": 0.3,"));
        assert!(s.contains("null"));
        assert!(s.contains("0.666666666667"));
        assert!(s.contains("\"c\": 7"));
    }
}
