//! Plain-text embedding tables: a `<count> <dim>` header line, then one
//! `<id> <f1> ... <fd>` line per row, space separated. Floats are written in
//! shortest round-trip form, so save/load is exact.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_vectors(path: &Path, ids: &[String], dim: usize, data: &[f64]) -> Result<()> {
    assert_eq!(ids.len() * dim, data.len());
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", ids.len(), dim).map_err(io)?;
    for (id, row) in ids.iter().zip(data.chunks(dim.max(1))) {
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::Config(format!("id `{id}` cannot be written to a vector table")));
        }
        write!(w, "{id}").map_err(io)?;
        for v in row {
            write!(w, " {v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_vectors(path: &Path) -> Result<(Vec<String>, usize, Vec<f64>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&name, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let parsed: Vec<usize> = header.split(' ').filter_map(|s| s.parse().ok()).collect();
    let [count, dim] = parsed[..] else {
        return Err(Error::parse(&name, 1, "header must be `<count> <dim>`"));
    };

    let mut ids = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let id = fields.next().unwrap_or_default().to_string();
        let mut n = 0;
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(&name, line_no, format!("bad number `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(&name, line_no, "non-finite value"));
            }
            data.push(v);
            n += 1;
        }
        if n != dim {
            return Err(Error::parse(&name, line_no, format!("expected {dim} values, found {n}")));
        }
        ids.push(id);
    }
    if ids.len() != count {
        return Err(Error::parse(&name, 1, format!("header declares {count} rows, found {}", ids.len())));
    }
    Ok((ids, dim, data))
}
