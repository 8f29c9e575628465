//! Line-oriented `key=value` parsing shared by the plan and scenario config
//! file formats. Blank lines and `#` comments are skipped; inline comments
//! after the value are allowed.

use crate::error::{Error, Result};

pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Data(format!("line {}: expected key=value, got {:?}", lineno + 1, raw))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("{key}: not a number: {value:?}")))
}

pub(crate) fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Data(format!("{key}: not a nonnegative integer: {value:?}")))
}

pub(crate) fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect()
}

pub(crate) fn parse_u64_list(key: &str, value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|s| parse_u64(key, s.trim()))
        .collect()
}
