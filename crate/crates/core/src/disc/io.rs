//! Disc dumps: CSV node tables and JSON solve reports.

use std::io::{BufRead, Write};

use super::{DiscError, DiscMap, SolveReport};

/// Writes `node_x,node_y,u_1,...,u_n`, one row per node (interior nodes
/// first, then boundary nodes).
pub fn write_csv<W: Write>(u: &DiscMap, mut out: W) -> Result<(), DiscError> {
    let n = u.dim();
    let header: Vec<String> = ["node_x".to_string(), "node_y".to_string()]
        .into_iter()
        .chain((1..=n).map(|k| format!("u_{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (node, [x, y]) in u.grid().nodes().iter().enumerate() {
        write!(out, "{x:.17e},{y:.17e}")?;
        for v in u.value(node) {
            write!(out, ",{v:.17e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the value columns of a CSV written by [`write_csv`]; returns the
/// rows as `(node_x, node_y, values)`.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<(f64, f64, Vec<f64>)>, DiscError> {
    let bad = |line: usize, msg: &str| {
        DiscError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("line {line}: {msg}"),
        ))
    };
    let mut rows = Vec::new();
    let mut width = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 3 || cols[0] != "node_x" || cols[1] != "node_y" {
                return Err(bad(1, "missing node_x,node_y header"));
            }
            width = Some(cols.len());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| bad(i + 1, &e.to_string()))?;
        if Some(vals.len()) != width {
            return Err(bad(i + 1, "wrong number of columns"));
        }
        rows.push((vals[0], vals[1], vals[2..].to_vec()));
    }
    Ok(rows)
}

pub fn report_json(report: &SolveReport) -> String {
    serde_json::to_string_pretty(report).expect("solve reports serialise")
}
