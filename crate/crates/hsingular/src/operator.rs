//! Discrete nonlocal energy, seminorm, and fractional p-Laplace residual.
//!
//! The kernel graph carries one weight per unordered node pair,
//! `w_ij = vol_i vol_j |ξ_j^{-1} ∘ ξ_i|^{-(Q+sp)}`, a quadrature of the
//! singular pair measure. The principal value is realized by omitting the
//! diagonal, which is exact for the energy form. Assembly is dense over all
//! pairs; desk-scale node counts keep this tractable and avoid an
//! uncontrolled truncation bias.
//!
//! Ordered-pair convention: the energy sums over ordered pairs `(i, j)`,
//! `i ≠ j`, i.e. twice the sum over `i < j`.

use crate::heisenberg::{kernel, ModelParams};
use crate::mesh::Mesh;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("field does not belong to this graph's mesh")]
    MeshMismatch,
    #[error("field length {len} does not match node count {nodes}")]
    LengthMismatch { len: usize, nodes: usize },
    #[error("coincident nodes at indices {0} and {1}")]
    CoincidentNodes(usize, usize),
    #[error("dimension of mesh points ({mesh}) does not match N={params}")]
    DimensionMismatch { mesh: usize, params: usize },
    #[error("negative base {base} with fractional exponent {exponent}")]
    NegativeBase { base: f64, exponent: f64 },
}

/// Odd power `|t|^{p-2} t`, the p-Laplacian nonlinearity. `j_p(0) = 0` by
/// continuity for every `p > 1`.
#[inline]
pub fn j_p(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        t
    } else if p == 3.0 {
        t.abs() * t
    } else if p == 1.5 {
        t / t.abs().sqrt()
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// Compensated accumulator. Energy sums run over hundreds of thousands of
/// pair terms; plain summation noise would otherwise dominate the small
/// objective decrements the solver's line search must resolve.
#[derive(Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    #[inline]
    pub(crate) fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// `|t|^p` with the same fast paths as [`j_p`].
#[inline]
fn abs_pow(t: f64, p: f64) -> f64 {
    let a = t.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(p)
    }
}

/// Nodal values over a mesh. Fields representing members of the
/// zero-exterior class keep all collar values at exactly zero.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.node_count();
        DiscreteField {
            mesh,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() != mesh.node_count() {
            return Err(OperatorError::LengthMismatch {
                len: values.len(),
                nodes: mesh.node_count(),
            });
        }
        Ok(DiscreteField { mesh, values })
    }

    /// Build a zero-collar field from interior values listed in
    /// `mesh.interior_indices()` order.
    pub fn from_interior(mesh: Arc<Mesh>, interior: &[f64]) -> Result<Self, OperatorError> {
        if interior.len() != mesh.interior_count() {
            return Err(OperatorError::LengthMismatch {
                len: interior.len(),
                nodes: mesh.interior_count(),
            });
        }
        let mut values = vec![0.0; mesh.node_count()];
        for (k, &i) in mesh.interior_indices().iter().enumerate() {
            values[i] = interior[k];
        }
        Ok(DiscreteField { mesh, values })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mesh
            .interior_indices()
            .iter()
            .map(|&i| self.values[i])
            .collect()
    }

    pub fn collar_is_zero(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, v)| self.mesh.is_interior(i) || *v == 0.0)
    }

    pub fn min_interior(&self) -> f64 {
        self.mesh
            .interior_indices()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_interior(&self) -> f64 {
        self.mesh
            .interior_indices()
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup-norm of the difference over all nodes.
    pub fn sup_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric pairwise weights discretizing the singular pair measure.
#[derive(Debug, Clone)]
pub struct KernelGraph {
    mesh: Arc<Mesh>,
    params: ModelParams,
    /// Upper-triangle weights in row-major order: pair (i, j), i < j, sits at
    /// `row_offsets[i] + (j - i - 1)`.
    weights: Vec<f64>,
    row_offsets: Vec<usize>,
}

/// Assemble the all-pairs kernel graph for a mesh.
pub fn assemble(mesh: Arc<Mesh>, params: ModelParams) -> Result<KernelGraph, OperatorError> {
    let n = mesh.node_count();
    if n > 0 && mesh.nodes()[0].dim() != params.n() {
        return Err(OperatorError::DimensionMismatch {
            mesh: mesh.nodes()[0].dim(),
            params: params.n(),
        });
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut acc = 0usize;
    for i in 0..n {
        row_offsets.push(acc);
        acc += n - 1 - i;
    }
    row_offsets.push(acc);

    // rows are independent; writes go to disjoint index ranges so the
    // result does not depend on scheduling
    let nodes = mesh.nodes();
    let volumes = mesh.volumes();
    let mut weights = vec![0.0f64; acc];
    let rows: Vec<(usize, &mut [f64])> = {
        let mut rest = weights.as_mut_slice();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let (row, tail) = rest.split_at_mut(row_offsets[i + 1] - row_offsets[i]);
            rows.push((i, row));
            rest = tail;
        }
        rows
    };
    let failure = rows
        .into_par_iter()
        .map(|(i, row)| {
            for (k, slot) in row.iter_mut().enumerate() {
                let j = i + 1 + k;
                match kernel(&nodes[i], &nodes[j], &params) {
                    Ok(kv) => *slot = volumes[i] * volumes[j] * kv,
                    Err(_) => return Some((i, j)),
                }
            }
            None
        })
        .find_map_any(|x| x);
    if let Some((i, j)) = failure {
        return Err(OperatorError::CoincidentNodes(i, j));
    }
    Ok(KernelGraph {
        mesh,
        params,
        weights,
        row_offsets,
    })
}

impl KernelGraph {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn pair_count(&self) -> usize {
        self.weights.len()
    }

    /// Weight of the unordered pair {i, j}, i != j.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.weights[self.row_offsets[a] + (b - a - 1)]
    }

    /// Row sums `Σ_j w_ij` for every node.
    pub fn weight_row_sums(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut sums = vec![0.0f64; n];
        let mut idx = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[idx];
                idx += 1;
                sums[i] += w;
                sums[j] += w;
            }
        }
        sums
    }

    fn check_field(&self, u: &DiscreteField) -> Result<(), OperatorError> {
        if !Arc::ptr_eq(&self.mesh, &u.mesh) {
            return Err(OperatorError::MeshMismatch);
        }
        Ok(())
    }
}

/// Discrete p-energy `Σ_{i≠j} w_ij |u_i - u_j|^p` over ordered pairs.
/// The discrete seminorm `‖u‖` is its p-th root.
///
/// For zero-collar fields only the rows touching interior nodes are
/// scanned; the collar-collar pair block contributes nothing because the
/// mesh keeps interior nodes in the leading block.
pub fn energy_seminorm_p(graph: &KernelGraph, u: &DiscreteField) -> Result<f64, OperatorError> {
    graph.check_field(u)?;
    let p = graph.params.p();
    let v = &u.values;
    let n = v.len();
    let rows = if u.collar_is_zero() {
        graph.mesh.interior_count()
    } else {
        n
    };
    let mut sum = KahanSum::default();
    let mut idx = 0usize;
    for i in 0..rows {
        let ui = v[i];
        for &uj in v.iter().take(n).skip(i + 1) {
            sum.add(graph.weights[idx] * abs_pow(ui - uj, p));
            idx += 1;
        }
    }
    Ok(2.0 * sum.value())
}

/// Discrete seminorm `(energy)^{1/p}`.
pub fn seminorm(graph: &KernelGraph, u: &DiscreteField) -> Result<f64, OperatorError> {
    Ok(energy_seminorm_p(graph, u)?.powf(1.0 / graph.params.p()))
}

/// Nonlocal residual: gradient of `(1/p) * energy` at interior nodes,
/// zero at collar nodes.
pub fn residual(graph: &KernelGraph, u: &DiscreteField) -> Result<DiscreteField, OperatorError> {
    graph.check_field(u)?;
    let p = graph.params.p();
    let v = &u.values;
    let n = v.len();
    let mut r = vec![0.0f64; n];
    // every pair with an interior endpoint lives in the first
    // interior_count rows, and collar entries are reported as zero
    let rows = graph.mesh.interior_count();
    let mut idx = 0usize;
    for i in 0..rows {
        let ui = v[i];
        let mut ri = 0.0f64;
        for j in (i + 1)..n {
            let g = 2.0 * graph.weights[idx] * j_p(ui - v[j], p);
            idx += 1;
            ri += g;
            r[j] -= g;
        }
        r[i] += ri;
    }
    for slot in r.iter_mut().skip(rows) {
        *slot = 0.0;
    }
    Ok(DiscreteField {
        mesh: Arc::clone(&graph.mesh),
        values: r,
    })
}

/// Bilinear pairing `Σ_{i≠j} w_ij j_p(u_i - u_j)(v_i - v_j)`.
pub fn pairing(
    graph: &KernelGraph,
    u: &DiscreteField,
    v: &DiscreteField,
) -> Result<f64, OperatorError> {
    graph.check_field(u)?;
    graph.check_field(v)?;
    let p = graph.params.p();
    let uu = &u.values;
    let vv = &v.values;
    let n = uu.len();
    let rows = if u.collar_is_zero() || v.collar_is_zero() {
        graph.mesh.interior_count()
    } else {
        n
    };
    let mut sum = KahanSum::default();
    let mut idx = 0usize;
    for i in 0..rows {
        for j in (i + 1)..n {
            sum.add(graph.weights[idx] * j_p(uu[i] - uu[j], p) * (vv[i] - vv[j]));
            idx += 1;
        }
    }
    Ok(2.0 * sum.value())
}

/// Weighted interior integral `Σ_i weight_i |u_i|^q vol_i`, with the
/// convention `|u|^0 = 1` everywhere (including `u = 0`).
pub fn weighted_lq_integral(
    u: &DiscreteField,
    weight: &DiscreteField,
    q: f64,
) -> Result<f64, OperatorError> {
    if !Arc::ptr_eq(&u.mesh, &weight.mesh) {
        return Err(OperatorError::MeshMismatch);
    }
    let mesh = &u.mesh;
    let mut sum = 0.0f64;
    for &i in mesh.interior_indices() {
        let base = if q == 0.0 {
            1.0
        } else {
            u.values[i].abs().powf(q)
        };
        sum += weight.values[i] * base * mesh.volumes()[i];
    }
    Ok(sum)
}

/// Signed variant `Σ_i weight_i u_i^q vol_i`; rejects a negative base under
/// a fractional exponent.
pub fn weighted_signed_power_integral(
    u: &DiscreteField,
    weight: &DiscreteField,
    q: f64,
) -> Result<f64, OperatorError> {
    if !Arc::ptr_eq(&u.mesh, &weight.mesh) {
        return Err(OperatorError::MeshMismatch);
    }
    let fractional = q.fract() != 0.0;
    let mesh = &u.mesh;
    let mut sum = 0.0f64;
    for &i in mesh.interior_indices() {
        let ui = u.values[i];
        if ui < 0.0 && fractional {
            return Err(OperatorError::NegativeBase {
                base: ui,
                exponent: q,
            });
        }
        let base = if q == 1.0 { ui } else { ui.powf(q) };
        sum += weight.values[i] * base * mesh.volumes()[i];
    }
    Ok(sum)
}
