//! `key=value` overrides on a config tree.

use crate::error::{Error, Result};

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parse `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Path segments of `a.b[2].c` or `a.b.2.c`.
fn segments(key: &str) -> Vec<String> {
    key.replace('[', ".").replace(']', "").split('.').filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Apply `key=value` to `table`, creating intermediate tables as needed.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| bad(spec, "override must look like key=value"))?;
    let key = key.trim();
    let path = segments(key);
    let (last, inner) = path.split_last().ok_or_else(|| bad(key, "empty key"))?;
    let mut node: &mut toml::Value = table
        .entry(inner.first().cloned().unwrap_or_else(|| last.clone()))
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if inner.is_empty() {
        *node = parse_value(value.trim());
        return Ok(());
    }
    for seg in inner[1..].iter().chain(std::iter::once(last)) {
        let is_last = std::ptr::eq(seg, last);
        node = match node {
            toml::Value::Table(t) => {
                if is_last {
                    t.insert(seg.clone(), parse_value(value.trim()));
                    return Ok(());
                }
                t.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| bad(key, format!("`{seg}` is not an array index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(i)
                    .ok_or_else(|| bad(key, format!("index {i} out of range for {len} entries")))?;
                if is_last {
                    *slot = parse_value(value.trim());
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(key, format!("`{seg}` is below a scalar"))),
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys() {
        let mut t: toml::Table = "a = 1\n[sim]\nn_paths = 10\n[[diagnostics]]\ncheck = \"x\"\n".parse().unwrap();
        apply_override(&mut t, "sim.n_paths=500").unwrap();
        apply_override(&mut t, "diagnostics[0].bins=8").unwrap();
        apply_override(&mut t, "drift.name=shear").unwrap();
        apply_override(&mut t, "a=[1, 2]").unwrap();
        apply_override(&mut t, "sim.dt=1e-3").unwrap();
        assert_eq!(t["sim"]["n_paths"].as_integer(), Some(500));
        assert_eq!(t["sim"]["dt"].as_float(), Some(1e-3));
        assert_eq!(t["diagnostics"][0]["bins"].as_integer(), Some(8));
        assert_eq!(t["drift"]["name"].as_str(), Some("shear"));
        assert_eq!(t["a"].as_array().unwrap().len(), 2);
        assert!(apply_override(&mut t, "diagnostics[3].bins=8").is_err());
        assert!(apply_override(&mut t, "sim.n_paths.x=1").is_err());
        assert!(apply_override(&mut t, "novalue").is_err());
    }
}
