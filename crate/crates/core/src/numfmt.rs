//! Decimal formatting helpers for CSV and JSON output.

/// Formats `x` with at most `digits` significant digits, like C's `%.*g`:
/// fixed notation for moderate magnitudes, scientific otherwise, trailing
/// zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().expect("round-trips")
}

/// Rounds every floating-point number inside a JSON value to `digits`
/// significant digits. Integers are left alone.
pub fn round_json(value: &mut serde_json::Value, digits: usize) {
    use serde_json::Value;
    match value {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().expect("checked f64");
            if let Some(rounded) = serde_json::Number::from_f64(round_sig(x, digits)) {
                *num = rounded;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| round_json(v, digits)),
        Value::Object(map) => map.values_mut().for_each(|v| round_json(v, digits)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.1, 12), "0.1");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(-0.25, 12), "-0.25");
        assert_eq!(format_sig(0.28 / 1.08, 12), "0.259259259259");
        assert_eq!(format_sig(0.62 / 1.08, 12), "0.574074074074");
        assert_eq!(format_sig(1e-7, 12), "1e-7");
        assert_eq!(format_sig(123456.0, 3), "1.23e5");
        assert_eq!(format_sig(0.0001234, 12), "0.0001234");
        assert_eq!(format_sig(0.0, 12), "0");
        // Rounding noise from grid arithmetic disappears.
        assert_eq!(format_sig(0.1 + 0.2, 12), "0.3");
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2, 15), 0.3);
        assert_eq!(round_sig(2.0 / 3.0, 3), 0.667);
        assert_eq!(round_sig(0.0, 15), 0.0);
    }

    #[test]
    fn rounds_nested_json() {
        let mut v = serde_json::json!({"a": [0.30000000000000004, 2], "b": {"c": 1.0}});
        round_json(&mut v, 15);
        assert_eq!(v.to_string(), r#"{"a":[0.3,2],"b":{"c":1.0}}"#);
    }
}
