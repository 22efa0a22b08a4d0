//! Checkpoint files: a versioned, line-oriented text format that stores every
//! parameter tensor bit-exactly (f64 bits as 16 hex digits), so a reloaded
//! ensemble member reproduces its forecasts to the last bit.

use std::fs;
use std::path::Path;

use cesrnn_core::tape::{ParamStore, Tensor};

use crate::{io_err, CliError};

const MAGIC: &str = "cesrnn-checkpoint v1";

/// Serializes a parameter store. One line per tensor:
/// `name rows cols <hex> <hex> ...`, values row-major.
pub fn to_text(store: &ParamStore) -> String {
    let mut out = String::with_capacity(64 * store.scalar_count());
    out.push_str(MAGIC);
    out.push('\n');
    let ids: Vec<_> = store.ids().collect();
    out.push_str(&ids.len().to_string());
    out.push('\n');
    for id in ids {
        let t = store.get(id);
        out.push_str(store.name(id));
        out.push_str(&format!(" {} {}", t.rows, t.cols));
        for &v in &t.data {
            out.push_str(&format!(" {:016x}", v.to_bits()));
        }
        out.push('\n');
    }
    out
}

/// Parses checkpoint text back into a store, preserving tensor order.
pub fn from_text(text: &str, origin: &str) -> Result<ParamStore, CliError> {
    let bad = |line: usize, what: &str| {
        CliError::Format(format!("{origin} line {}: {what}", line + 1))
    };
    let mut lines = text.lines().enumerate();
    let (i, magic) = lines.next().ok_or_else(|| bad(0, "empty checkpoint"))?;
    if magic.trim_end() != MAGIC {
        return Err(bad(i, "not a recognized checkpoint header"));
    }
    let (i, count_line) = lines.next().ok_or_else(|| bad(1, "missing tensor count"))?;
    let count: usize = count_line
        .trim()
        .parse()
        .map_err(|_| bad(i, "tensor count is not an integer"))?;
    let mut store = ParamStore::default();
    let mut seen = 0usize;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let name = fields.next().ok_or_else(|| bad(i, "missing tensor name"))?;
        let rows: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(i, "bad row count"))?;
        let cols: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(i, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for field in fields {
            if field.len() != 16 {
                return Err(bad(i, "value is not 16 hex digits"));
            }
            let bits = u64::from_str_radix(field, 16)
                .map_err(|_| bad(i, "value is not 16 hex digits"))?;
            data.push(f64::from_bits(bits));
        }
        if data.len() != rows * cols {
            return Err(bad(
                i,
                &format!("tensor '{name}' declares {rows}x{cols} but carries {} values", data.len()),
            ));
        }
        if store.id(name).is_some() {
            return Err(bad(i, &format!("duplicate tensor '{name}'")));
        }
        store.add(name, Tensor { rows, cols, data });
        seen += 1;
    }
    if seen != count {
        return Err(CliError::Format(format!(
            "{origin}: header declares {count} tensors but {seen} follow"
        )));
    }
    Ok(store)
}

pub fn save(store: &ParamStore, path: &Path) -> Result<(), CliError> {
    fs::write(path, to_text(store)).map_err(|e| io_err("writing checkpoint", path, e))
}

pub fn load(path: &Path) -> Result<ParamStore, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err("reading checkpoint", path, e))?;
    from_text(&text, &path.display().to_string())
}
