//! JSON Lines reading with line-numbered errors.

use serde::de::DeserializeOwned;

use crate::error::{Error, Result, RowError};

/// Parses every non-blank line; line numbers are 1-based.
pub fn parse_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(line).map_err(|e| {
            Error::Row(RowError {
                line: i + 1,
                id: None,
                message: format!("malformed line: {e}"),
            })
        })?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

/// One compact JSON object per line.
pub fn to_lines<T: serde::Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    out
}
