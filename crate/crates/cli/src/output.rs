use std::fmt::Write as _;

use serde_json::Value;

/// Formats a real with 12 significant digits, dropping trailing zeros.
pub fn real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// One command result in all three projections.
pub struct Report {
    pub json: Value,
    pub table: String,
    pub csv: String,
}

impl Report {
    /// A report whose table and CSV are `key value` pairs.
    pub fn pairs(json: Value, pairs: &[(&str, String)]) -> Self {
        let mut table = String::new();
        let mut csv = String::from("name,value\n");
        for (k, v) in pairs {
            let _ = writeln!(table, "{k} {v}");
            let _ = writeln!(csv, "{k},{v}");
        }
        Report { json, table, csv }
    }
}
