use serde::Serialize;

use crate::Failure;

/// Eight decimals in groups of four, leading zero dropped: `.2809 1224`.
pub fn grouped(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{:.8}", v.abs());
    let (int, frac) = s.split_once('.').expect("fixed-point format has a point");
    let int = if int == "0" { "" } else { int };
    let sign = if v < 0.0 && s.bytes().any(|b| b.is_ascii_digit() && b != b'0') { "-" } else { "" };
    format!("{sign}{int}.{} {}", &frac[..4], &frac[4..])
}

pub fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(format!("JSON output: {e}")))?;
    println!("{text}");
    Ok(())
}
