//! Algebra definition files.
//!
//! ```toml
//! name = "aff1"
//! dim = 2
//! # (i, j, k, value): [e_i, e_j] has e_k-coefficient `value`, 1-based
//! constants = [[1, 2, 2, 1.0]]
//!
//! [rep]
//! size = 2
//! e1 = [1.0, 0.0, 0.0, 0.0]   # row-major
//! e2 = [0.0, 1.0, 0.0, 0.0]
//! ```
//!
//! An entry `(i, j, k, v)` also sets `c_{ji}^k = -v` unless `(j, i, k)` is
//! listed explicitly. Floats are written in shortest round-trip form, so
//! `parse(&write(a))` reproduces every constant bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use toml::{Table, Value};

use super::{LieAlgebra, MatrixRep};
use crate::error::{Error, Result};

/// 1-based line and column of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..text.floor_char_boundary(offset)];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Formats a TOML parse error with its line and column.
pub fn describe_toml_error(text: &str, err: &toml::de::Error) -> (usize, usize, String) {
    let (line, col) = err.span().map_or((1, 1), |s| line_column(text, s.start));
    (line, col, err.message().to_string())
}

pub fn parse(text: &str) -> Result<LieAlgebra> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, col, msg) = describe_toml_error(text, &e);
        Error::AlgebraFile(format!("line {line}, column {col}: {msg}"))
    })?;
    from_table(&table, "")
}

fn key_path(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn float_array(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::AlgebraFile(format!("`{path}` must be an array of numbers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_f64(x).ok_or_else(|| Error::AlgebraFile(format!("`{path}[{i}]` must be a number"))))
        .collect()
}

fn positive_int(v: &Value, path: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i > 0 => Ok(*i as usize),
        _ => Err(Error::AlgebraFile(format!("`{path}` must be a positive integer"))),
    }
}

/// Reads an algebra from an already-parsed table. `prefix` is prepended to
/// key paths in error messages.
pub fn from_table(table: &Table, prefix: &str) -> Result<LieAlgebra> {
    for key in table.keys() {
        if !matches!(key.as_str(), "name" | "dim" | "constants" | "rep") {
            return Err(Error::AlgebraFile(format!("unknown key `{}`", key_path(prefix, key))));
        }
    }
    let name = match table.get("name") {
        None => "custom".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(Error::AlgebraFile(format!("`{}` must be a string", key_path(prefix, "name")))),
    };
    let dim_path = key_path(prefix, "dim");
    let dim = positive_int(
        table.get("dim").ok_or_else(|| Error::AlgebraFile(format!("missing key `{dim_path}`")))?,
        &dim_path,
    )?;
    if dim > 64 {
        return Err(Error::AlgebraFile(format!("`{dim_path}` = {dim} exceeds the supported maximum of 64")));
    }

    let cpath = key_path(prefix, "constants");
    let mut explicit: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    if let Some(v) = table.get("constants") {
        let arr = v.as_array().ok_or_else(|| Error::AlgebraFile(format!("`{cpath}` must be an array")))?;
        for (idx, entry) in arr.iter().enumerate() {
            let path = format!("{cpath}[{idx}]");
            let parts = entry
                .as_array()
                .filter(|a| a.len() == 4)
                .ok_or_else(|| Error::AlgebraFile(format!("`{path}` must be [i, j, k, value]")))?;
            let mut ijk = [0usize; 3];
            for (slot, p) in ijk.iter_mut().zip(&parts[..3]) {
                match p {
                    Value::Integer(i) if *i >= 1 && (*i as usize) <= dim => *slot = *i as usize - 1,
                    _ => return Err(Error::AlgebraFile(format!("`{path}`: indices must be integers in 1..={dim}"))),
                }
            }
            let value =
                as_f64(&parts[3]).ok_or_else(|| Error::AlgebraFile(format!("`{path}`: value must be a number")))?;
            if !value.is_finite() {
                return Err(Error::AlgebraFile(format!("`{path}`: value must be finite")));
            }
            if explicit.insert((ijk[0], ijk[1], ijk[2]), value).is_some() {
                return Err(Error::AlgebraFile(format!("`{path}`: duplicate entry")));
            }
        }
    }
    let mut c = vec![0.0; dim * dim * dim];
    for (&(i, j, k), &v) in &explicit {
        if !explicit.contains_key(&(j, i, k)) {
            c[(j * dim + i) * dim + k] = -v;
        }
    }
    for (&(i, j, k), &v) in &explicit {
        c[(i * dim + j) * dim + k] = v;
    }
    let alg = LieAlgebra::from_dense(name, dim, c)?;

    match table.get("rep") {
        None => Ok(alg),
        Some(Value::Table(rep)) => {
            let rpath = key_path(prefix, "rep");
            let rep = rep_from_table(rep, dim, &rpath)?;
            alg.with_rep(rep)
        }
        Some(_) => Err(Error::AlgebraFile(format!("`{}` must be a table", key_path(prefix, "rep")))),
    }
}

fn rep_from_table(rep: &Table, dim: usize, rpath: &str) -> Result<MatrixRep> {
    let mut size = None;
    let mut faithful = true;
    let mut images: Vec<Option<DMatrix<f64>>> = vec![None; dim];
    let mut pending = Vec::new();
    for (key, value) in rep {
        let path = key_path(rpath, key);
        match key.as_str() {
            "size" => size = Some(positive_int(value, &path)?),
            "faithful" => {
                faithful = value.as_bool().ok_or_else(|| Error::AlgebraFile(format!("`{path}` must be a boolean")))?
            }
            k => {
                let idx = k
                    .strip_prefix('e')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| (1..=dim).contains(&i) && k == format!("e{i}"))
                    .ok_or_else(|| Error::AlgebraFile(format!("unknown key `{path}`")))?;
                pending.push((idx - 1, float_array(value, &path)?, path));
            }
        }
    }
    let size_path = key_path(rpath, "size");
    let m = size.ok_or_else(|| Error::AlgebraFile(format!("missing key `{size_path}`")))?;
    if m > 256 {
        return Err(Error::AlgebraFile(format!("`{size_path}` = {m} exceeds the supported maximum of 256")));
    }
    for (idx, data, path) in pending {
        if data.len() != m * m {
            return Err(Error::AlgebraFile(format!("`{path}` has {} entries, expected {}", data.len(), m * m)));
        }
        images[idx] = Some(DMatrix::from_row_slice(m, m, &data));
    }
    let images = images
        .into_iter()
        .enumerate()
        .map(|(i, m)| m.ok_or_else(|| Error::AlgebraFile(format!("missing key `{rpath}.e{}`", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    MatrixRep::new(images, faithful).map_err(|e| Error::AlgebraFile(e.to_string()))
}

fn push_float(out: &mut String, x: f64) {
    // `{:?}` is the shortest representation that parses back to the same bits
    // and always carries a `.` or an exponent, which TOML requires for floats.
    if x.is_nan() {
        out.push_str("nan");
    } else if x.is_infinite() {
        out.push_str(if x > 0.0 { "inf" } else { "-inf" });
    } else {
        let _ = write!(out, "{x:?}");
    }
}

fn push_string(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn write(alg: &LieAlgebra) -> String {
    let n = alg.dim();
    let mut out = String::new();
    out.push_str("name = ");
    push_string(&mut out, alg.name());
    let _ = writeln!(out, "\ndim = {n}");
    out.push_str("constants = [");
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let a = alg.constant(i, j, k);
                if i == j {
                    if a.to_bits() != 0 {
                        entries.push((i, j, k, a));
                    }
                    continue;
                }
                let b = alg.constant(j, i, k);
                if a.to_bits() == 0 && b.to_bits() == 0 {
                    continue;
                }
                entries.push((i, j, k, a));
                // the reader fills the mirror with -a; spell it out otherwise
                if b.to_bits() != (-a).to_bits() {
                    entries.push((j, i, k, b));
                }
            }
        }
    }
    let mut first = true;
    for (i, j, k, v) in entries {
        out.push_str(if first { "\n" } else { ",\n" });
        first = false;
        let _ = write!(out, "  [{}, {}, {}, ", i + 1, j + 1, k + 1);
        push_float(&mut out, v);
        out.push(']');
    }
    out.push_str(if first { "]\n" } else { ",\n]\n" });

    if let Some(rep) = alg.rep() {
        let m = rep.size();
        let _ = writeln!(out, "\n[rep]\nsize = {m}");
        if !rep.is_faithful() {
            out.push_str("faithful = false\n");
        }
        for (i, img) in rep.basis_images().iter().enumerate() {
            let _ = write!(out, "e{} = [", i + 1);
            for r in 0..m {
                for c in 0..m {
                    if r + c > 0 {
                        out.push_str(", ");
                    }
                    push_float(&mut out, img[(r, c)]);
                }
            }
            out.push_str("]\n");
        }
    }
    out
}
