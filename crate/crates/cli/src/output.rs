//! Line-delimited JSON records and flat text tables.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Records,
    Table,
}

/// Writes every float with 17 significant digits, enough to round-trip.
struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise);
    value.serialize(&mut ser).expect("serializing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// A record of the given kind, tagged with the schema version.
pub fn record(kind: &str, fields: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), SCHEMA_VERSION.into());
    m.insert("kind".into(), kind.into());
    if let Value::Object(f) = fields {
        m.extend(f);
    }
    Value::Object(m)
}

/// Row-major entries.
pub fn matrix_rows(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        let digits = (5 - e).max(0) as usize;
        format!("{x:.digits$}")
    } else {
        format!("{x:.5e}")
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Number(n) if n.is_f64() => out.push((prefix.to_string(), sig6(n.as_f64().unwrap_or(f64::NAN)))),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), "-".into())),
    }
}

/// One tab-separated block per record kind, in first-seen order. Columns are
/// the union of keys over the block; absent cells print as `-`.
pub fn render_table(records: &[Value]) -> String {
    let mut order: Vec<String> = Vec::new();
    let mut blocks: BTreeMap<String, Vec<Vec<(String, String)>>> = BTreeMap::new();
    for r in records {
        let kind = r.get("kind").and_then(Value::as_str).unwrap_or("record").to_string();
        let mut cells = Vec::new();
        flatten("", r, &mut cells);
        cells.retain(|(k, _)| k != "kind");
        if !blocks.contains_key(&kind) {
            order.push(kind.clone());
        }
        blocks.entry(kind).or_default().push(cells);
    }
    let mut out = String::new();
    for kind in order {
        let rows = &blocks[&kind];
        let mut header: Vec<&str> = Vec::new();
        for row in rows {
            for (k, _) in row {
                if !header.contains(&k.as_str()) {
                    header.push(k);
                }
            }
        }
        out.push_str(&format!("# {kind}\n{}\n", header.join("\t")));
        for row in rows {
            let cells: Vec<&str> =
                header.iter().map(|h| row.iter().find(|(k, _)| k == h).map_or("-", |(_, v)| v.as_str())).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
    }
    out
}

pub fn render(records: &[Value], format: Format) -> String {
    match format {
        Format::Records => records.iter().map(|r| to_json_line(r) + "\n").collect(),
        Format::Table => render_table(records),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let x: f64 = 0.1 + 0.2;
        let line = to_json_line(&json!({ "x": x, "n": 3 }));
        assert_eq!(line, "{\"n\":3,\"x\":3.0000000000000004e-1}");
        let back: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(back["x"].as_f64().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn six_digits() {
        assert_eq!(sig6(1.23456789), "1.23457");
        assert_eq!(sig6(-1234.5678), "-1234.57");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn table_blocks() {
        let r = vec![
            record("a", json!({ "y": [1.0, 2.0] })),
            record("b", json!({ "ok": true })),
            record("a", json!({ "y": [3.0, 4.0] })),
        ];
        let t = render_table(&r);
        assert_eq!(t, "# a\nschema_version\ty[0]\ty[1]\n1\t1.00000\t2.00000\n1\t3.00000\t4.00000\n# b\nok\tschema_version\ntrue\t1\n");
    }

    #[test]
    fn ragged_rows_share_columns() {
        let r = vec![record("a", json!({ "x": 1 })), record("a", json!({ "x": 2, "z": 0.5 }))];
        assert_eq!(render_table(&r), "# a\nschema_version\tx\tz\n1\t1\t-\n1\t2\t0.500000\n");
    }
}
