//! Run artifacts: the key:value summary, the solution CSV, and plot data.
//!
//! Everything written here is byte-deterministic for a fixed config and
//! seed: values are formatted with a fixed 17-significant-digit scheme,
//! node order follows the mesh, and no timing information lands in a file.

use crate::heisenberg::distance;
use crate::mesh::{Mesh, NodeRole};
use crate::operator::DiscreteField;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Fixed-width scientific format, 17 significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Summary::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.lines.push((key.into(), value.into()));
    }

    pub fn push_value(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, fmt_value(value));
    }

    pub fn push_flag(&mut self, key: impl Into<String>, ok: bool) {
        self.push(key, if ok { "PASS" } else { "FAIL" });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }

    pub fn any_fail(&self) -> bool {
        self.lines.iter().any(|(_, v)| v == "FAIL")
    }
}

fn csv_header(n: usize) -> String {
    let mut cols = vec!["node_id".to_string(), "role".to_string()];
    for k in 1..=n {
        cols.push(format!("x{k}"));
    }
    for k in 1..=n {
        cols.push(format!("y{k}"));
    }
    cols.push("t".into());
    cols.push("volume".into());
    cols.push("u".into());
    cols.join(",")
}

/// Solution CSV with one row per node:
/// `node_id,role,x…,y…,t,volume,u`.
pub fn write_solution_csv(path: &Path, u: &DiscreteField) -> io::Result<()> {
    let mesh = u.mesh();
    let n = mesh.spec().dim();
    let mut out = String::new();
    let _ = writeln!(out, "{}", csv_header(n));
    for (i, node) in mesh.nodes().iter().enumerate() {
        let role = match mesh.roles()[i] {
            NodeRole::Interior => "interior",
            NodeRole::Collar => "collar",
        };
        let mut cols = vec![i.to_string(), role.to_string()];
        cols.extend(node.x.iter().map(|v| fmt_value(*v)));
        cols.extend(node.y.iter().map(|v| fmt_value(*v)));
        cols.push(fmt_value(node.t));
        cols.push(fmt_value(mesh.volumes()[i]));
        cols.push(fmt_value(u.values()[i]));
        let _ = writeln!(out, "{}", cols.join(","));
    }
    std::fs::write(path, out)
}

/// Whitespace-delimited radial profile: Korányi distance from the domain
/// center against the solution value, interior nodes only, sorted by
/// distance then node id.
pub fn write_radial_profile(path: &Path, u: &DiscreteField) -> io::Result<()> {
    let mesh = u.mesh();
    let center = mesh.spec().center();
    let mut rows: Vec<(f64, usize)> = mesh
        .interior_indices()
        .iter()
        .map(|&i| {
            let d = distance(&mesh.nodes()[i], &center).expect("dimensions agree");
            (d, i)
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::new();
    for (d, i) in rows {
        let _ = writeln!(out, "{} {}", fmt_value(d), fmt_value(u.values()[i]));
    }
    std::fs::write(path, out)
}

/// Re-ingest a solution CSV as nodal values over `mesh`. The file must
/// describe exactly the same node set: ids, roles, coordinates, and
/// volumes are all checked. Returns interior values in interior order.
pub fn read_grid_values(path: &Path, mesh: &Mesh) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let n = mesh.spec().dim();
    let expected_cols = 2 + (2 * n + 1) + 2;
    let mut lines = text.lines();
    let header = lines.next().ok_or("grid file is empty")?;
    if header != csv_header(n) {
        return Err(format!(
            "grid header mismatch: expected '{}', got '{header}'",
            csv_header(n)
        ));
    }
    let mut values = vec![f64::NAN; mesh.node_count()];
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected_cols {
            return Err(format!(
                "grid row {}: expected {expected_cols} columns, got {}",
                lineno + 2,
                cols.len()
            ));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|e| format!("grid row {}: bad node id: {e}", lineno + 2))?;
        if id >= mesh.node_count() {
            return Err(format!(
                "grid row {}: node id {id} outside mesh with {} nodes",
                lineno + 2,
                mesh.node_count()
            ));
        }
        let role_ok = match mesh.roles()[id] {
            NodeRole::Interior => cols[1] == "interior",
            NodeRole::Collar => cols[1] == "collar",
        };
        if !role_ok {
            return Err(format!(
                "grid row {}: role mismatch at node {id}",
                lineno + 2
            ));
        }
        let node = &mesh.nodes()[id];
        let mut want = Vec::with_capacity(2 * n + 1);
        want.extend_from_slice(&node.x);
        want.extend_from_slice(&node.y);
        want.push(node.t);
        for (k, expect) in want.iter().enumerate() {
            let got: f64 = cols[2 + k]
                .parse()
                .map_err(|e| format!("grid row {}: bad coordinate: {e}", lineno + 2))?;
            if (got - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(format!(
                    "grid row {}: node {id} coordinate {k} is {got}, mesh has {expect}",
                    lineno + 2
                ));
            }
        }
        let value: f64 = cols[expected_cols - 1]
            .parse()
            .map_err(|e| format!("grid row {}: bad value: {e}", lineno + 2))?;
        if !values[id].is_nan() {
            return Err(format!("grid row {}: duplicate node id {id}", lineno + 2));
        }
        values[id] = value;
        rows += 1;
    }
    if rows != mesh.node_count() {
        return Err(format!(
            "grid file covers {rows} nodes, mesh has {}",
            mesh.node_count()
        ));
    }
    Ok(mesh.interior_indices().iter().map(|&i| values[i]).collect())
}
