//! Monotone regularization scheme for the singular Dirichlet problem.
//!
//! Each regularization level `n` solves
//!
//! ```text
//! L_{s,p} u = f_n (u⁺ + 1/n)^{-δ(x)},   f_n = min(f, n),
//! ```
//!
//! by unconstrained minimization of the strictly convex objective
//! `I_n(u) = (1/p) ‖u‖^p − Σ_i f_n,i G_n(u_i) vol_i`, whose Euler-Lagrange
//! system is exactly the discrete equation above. Nonnegativity of the
//! minimizer is a structural fact, so no projection is applied; an interior
//! value below `-1e-10` is treated as a solver fault rather than clamped
//! silently.
//!
//! The outer loop walks a doubling schedule in `n` with warm starts. The
//! iterates increase pointwise and in the discrete seminorm, and both facts
//! are asserted level by level.

use crate::mesh::Mesh;
use crate::operator::{
    energy_seminorm_p, residual, seminorm, DiscreteField, KernelGraph, OperatorError,
};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Interior values below this are a solver fault; values in `[floor, 0)`
/// are rounded up to zero when the level solution is returned.
const NEGATIVITY_FAULT_FLOOR: f64 = -1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("invalid source field: {0}")]
    InvalidSource(String),
    #[error("invalid singular exponent field: {0}")]
    InvalidExponent(String),
    #[error("invalid solve configuration: {0}")]
    InvalidConfig(String),
    #[error("line search failed at level n={level}, iteration {iteration}")]
    LineSearchFailure { level: u64, iteration: usize },
    #[error("inner iteration budget exhausted at level n={level} (residual {residual:.3e})")]
    MaxInnerIterations { level: u64, residual: f64 },
    #[error("Newton step requires p = 2, got p = {0}")]
    NewtonRequiresQuadratic(f64),
    #[error("linear solve failed at level n={0}")]
    LinearSolveFailure(u64),
    #[error("negative interior value {min:.3e} at level n={level}")]
    NegativeIterate { level: u64, min: f64 },
    #[error("pointwise monotonicity violated at level n={level} (gap {gap:.3e})")]
    MonotonicityViolation { level: u64, gap: f64 },
    #[error("seminorm monotonicity violated at level n={level} (gap {gap:.3e})")]
    NormMonotonicityViolation { level: u64, gap: f64 },
}

/// Spatially varying singular exponent `δ(x) > 0` together with the
/// boundary-strip data `(ε, δ*)` it is checked against.
#[derive(Debug, Clone)]
pub struct SingularExponentField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    epsilon: f64,
    delta_star: f64,
    constant: Option<f64>,
}

impl SingularExponentField {
    pub fn from_interior_values(
        mesh: Arc<Mesh>,
        values: Vec<f64>,
        epsilon: f64,
        delta_star: f64,
    ) -> Result<Self, SolverError> {
        if values.len() != mesh.interior_count() {
            return Err(SolverError::InvalidExponent(format!(
                "{} values for {} interior nodes",
                values.len(),
                mesh.interior_count()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(SolverError::InvalidExponent(format!(
                "exponent values must be positive, got {bad}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(SolverError::InvalidExponent(format!(
                "strip width must be positive, got {epsilon}"
            )));
        }
        if !(delta_star >= 1.0) {
            return Err(SolverError::InvalidExponent(format!(
                "delta_star must be at least 1, got {delta_star}"
            )));
        }
        let first = values[0];
        let constant = values.iter().all(|v| *v == first).then_some(first);
        Ok(SingularExponentField {
            mesh,
            values,
            epsilon,
            delta_star,
            constant,
        })
    }

    pub fn constant(
        mesh: Arc<Mesh>,
        value: f64,
        epsilon: f64,
        delta_star: f64,
    ) -> Result<Self, SolverError> {
        let n = mesh.interior_count();
        Self::from_interior_values(mesh, vec![value; n], epsilon, delta_star)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Exponent at interior slot `k` (`mesh.interior_indices()` order).
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta_star(&self) -> f64 {
        self.delta_star
    }

    /// Exponent governing the a-priori norm case split: the constant value
    /// when the field is constant, `δ*` otherwise.
    pub fn case_exponent(&self) -> f64 {
        self.constant.unwrap_or(self.delta_star)
    }
}

/// Nonnegative source `f`, not identically zero, with its declared
/// integrability exponent `m`.
#[derive(Debug, Clone)]
pub struct SourceField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    m: f64,
}

impl SourceField {
    pub fn from_interior_values(
        mesh: Arc<Mesh>,
        values: Vec<f64>,
        m: f64,
    ) -> Result<Self, SolverError> {
        if values.len() != mesh.interior_count() {
            return Err(SolverError::InvalidSource(format!(
                "{} values for {} interior nodes",
                values.len(),
                mesh.interior_count()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(SolverError::InvalidSource(format!(
                "source values must be nonnegative, got {bad}"
            )));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(SolverError::InvalidSource(
                "source must not vanish identically".into(),
            ));
        }
        if !(m >= 1.0) {
            return Err(SolverError::InvalidSource(format!(
                "integrability exponent m must be at least 1, got {m}"
            )));
        }
        Ok(SourceField { mesh, values, m })
    }

    pub fn constant(mesh: Arc<Mesh>, value: f64, m: f64) -> Result<Self, SolverError> {
        let n = mesh.interior_count();
        Self::from_interior_values(mesh, vec![value; n], m)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Full-length field with zeros on the collar.
    pub fn to_field(&self) -> DiscreteField {
        DiscreteField::from_interior(Arc::clone(&self.mesh), &self.values)
            .expect("length fixed by construction")
    }
}

/// Pointwise truncation `f_n = min(f, n)`.
pub fn truncate_source(f: &SourceField, n: u64) -> SourceField {
    let cap = n as f64;
    SourceField {
        mesh: Arc::clone(&f.mesh),
        values: f.values.iter().map(|v| v.min(cap)).collect(),
        m: f.m,
    }
}

/// Primitive `G_n` of the regularized singular nonlinearity: its derivative
/// at `t > 0` is `(t + 1/n)^{-δ}`. For `δ = 1` the logarithmic branch is
/// used, normalized so that `G_n(0) = 0`.
pub fn regularized_primitive(t: f64, n: u64, delta: f64) -> f64 {
    let eps = 1.0 / n as f64;
    let tp = t.max(0.0);
    let tm = (-t).max(0.0);
    if delta == 1.0 {
        (tp + eps).ln() - eps.ln() - tm / eps
    } else {
        (tp + eps).powf(1.0 - delta) / (1.0 - delta) - eps.powf(-delta) * tm
    }
}

/// Regularized singular term `(t⁺ + 1/n)^{-δ}`, the derivative of
/// [`regularized_primitive`].
pub fn regularized_nonlinearity(t: f64, n: u64, delta: f64) -> f64 {
    (t.max(0.0) + 1.0 / n as f64).powf(-delta)
}

/// Objective of one regularization level:
/// `I_n(u) = (1/p) Σ w |Δu|^p − Σ f_n (G_n(u) − G_n(0)) vol`.
///
/// The primitive is shifted by its value at zero so that `I_n(0) = 0`; the
/// shift is constant in `u` and leaves gradient and minimizer untouched.
pub fn regularized_energy(
    graph: &KernelGraph,
    f_n: &SourceField,
    n: u64,
    delta: &SingularExponentField,
    u: &DiscreteField,
) -> Result<f64, SolverError> {
    let p = graph.params().p();
    let e = energy_seminorm_p(graph, u)? / p;
    let mesh = graph.mesh();
    let mut src = 0.0f64;
    for (k, &i) in mesh.interior_indices().iter().enumerate() {
        let d = delta.value(k);
        let g = regularized_primitive(u.values()[i], n, d) - regularized_primitive(0.0, n, d);
        src += f_n.value(k) * g * mesh.volumes()[i];
    }
    Ok(e - src)
}

/// Gradient of [`regularized_energy`]: the Euler-Lagrange defect
/// `R_i(u) − f_n,i (u_i⁺ + 1/n)^{-δ_i} vol_i` at interior nodes, zero on
/// the collar.
pub fn objective_gradient(
    graph: &KernelGraph,
    f_n: &SourceField,
    n: u64,
    delta: &SingularExponentField,
    u: &DiscreteField,
) -> Result<DiscreteField, SolverError> {
    let mut g = residual(graph, u)?;
    let mesh = graph.mesh();
    for (k, &i) in mesh.interior_indices().iter().enumerate() {
        let term = f_n.value(k) * regularized_nonlinearity(u.values()[i], n, delta.value(k));
        g.values_mut()[i] -= term * mesh.volumes()[i];
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Newton for p = 2, gradient descent otherwise.
    Auto,
    /// Armijo-backtracked descent along the negative gradient.
    Gradient,
    /// Damped Newton on the dense interior Hessian; requires p = 2.
    Newton,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Strictly increasing regularization levels.
    pub n_schedule: Vec<u64>,
    /// Sup-norm tolerance on the interior Euler-Lagrange defect.
    pub inner_tol: f64,
    /// Sup-norm tolerance between consecutive levels.
    pub outer_tol: f64,
    pub max_inner_iters: usize,
    pub armijo_c1: f64,
    pub armijo_backtrack: f64,
    pub armijo_init_step: f64,
    /// Allowed pointwise backslide between consecutive levels.
    pub monotonicity_slack: f64,
    /// Allowed seminorm backslide between consecutive levels.
    pub norm_slack: f64,
    pub method: SolveMethod,
    /// Keep every level's solution field in the report.
    pub keep_level_fields: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            n_schedule: doubling_schedule(64),
            inner_tol: 1e-8,
            outer_tol: 1e-6,
            max_inner_iters: 200_000,
            armijo_c1: 1e-4,
            armijo_backtrack: 0.5,
            armijo_init_step: 1.0,
            monotonicity_slack: 1e-8,
            norm_slack: 1e-10,
            method: SolveMethod::Auto,
            keep_level_fields: false,
        }
    }
}

impl SolveConfig {
    /// Defaults with the inner tolerance matched to the method that will
    /// run: 1e-8 for the p = 2 Newton path, 1e-6 for generic p.
    pub fn for_exponent(p: f64) -> Self {
        SolveConfig {
            inner_tol: if p == 2.0 { 1e-8 } else { 1e-6 },
            ..SolveConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.n_schedule.is_empty() {
            return Err(SolverError::InvalidConfig("empty schedule".into()));
        }
        if self.n_schedule[0] < 1 {
            return Err(SolverError::InvalidConfig("levels must be >= 1".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SolverError::InvalidConfig(
                "schedule must be strictly increasing".into(),
            ));
        }
        for (name, v) in [
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("monotonicity_slack", self.monotonicity_slack),
            ("norm_slack", self.norm_slack),
            ("armijo_init_step", self.armijo_init_step),
        ] {
            if !(v > 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "armijo_c1 must lie in (0,1), got {}",
                self.armijo_c1
            )));
        }
        if !(self.armijo_backtrack > 0.0 && self.armijo_backtrack < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "armijo_backtrack must lie in (0,1), got {}",
                self.armijo_backtrack
            )));
        }
        if self.max_inner_iters == 0 {
            return Err(SolverError::InvalidConfig(
                "max_inner_iters must be positive".into(),
            ));
        }
        Ok(())
    }

    fn resolve_method(&self, p: f64) -> Result<SolveMethod, SolverError> {
        match self.method {
            SolveMethod::Auto => Ok(if p == 2.0 {
                SolveMethod::Newton
            } else {
                SolveMethod::Gradient
            }),
            SolveMethod::Newton if p != 2.0 => Err(SolverError::NewtonRequiresQuadratic(p)),
            m => Ok(m),
        }
    }
}

/// Doubling levels `1, 2, 4, …` up to `max_n`, appending `max_n` itself
/// when it is not a power of two.
pub fn doubling_schedule(max_n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 1u64;
    while n <= max_n {
        out.push(n);
        if n > max_n / 2 {
            break;
        }
        n *= 2;
    }
    if *out.last().unwrap() < max_n {
        out.push(max_n);
    }
    out
}

#[derive(Debug, Clone)]
pub struct LevelStats {
    pub n: u64,
    pub iterations: usize,
    pub residual_sup: f64,
    /// Discrete seminorm `‖u_n‖`.
    pub norm: f64,
    pub min_interior: f64,
    /// Objective value `I_n(u_n)`.
    pub energy_value: f64,
    /// `‖u_n^{(δ+p−1)/p}‖` when the governing exponent exceeds one.
    pub transformed_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub levels: Vec<LevelStats>,
    pub converged: bool,
    /// Sup-norm gap between the last two computed levels.
    pub final_sup_delta: f64,
    pub wall_time: Duration,
    /// Per-level solutions, populated when `keep_level_fields` is set.
    pub level_fields: Vec<DiscreteField>,
}

struct LevelProblem<'a> {
    graph: &'a KernelGraph,
    f_n: SourceField,
    n: u64,
    delta: &'a SingularExponentField,
}

impl LevelProblem<'_> {
    fn energy(&self, u: &DiscreteField) -> Result<f64, SolverError> {
        regularized_energy(self.graph, &self.f_n, self.n, self.delta, u)
    }

    fn gradient(&self, u: &DiscreteField) -> Result<DiscreteField, SolverError> {
        objective_gradient(self.graph, &self.f_n, self.n, self.delta, u)
    }
}

fn sup_interior(mesh: &Mesh, v: &[f64]) -> f64 {
    mesh.interior_indices()
        .iter()
        .map(|&i| v[i].abs())
        .fold(0.0, f64::max)
}

/// Armijo backtracking from `step0` along `dir`; returns the accepted
/// iterate, its objective value, and the accepted step.
#[allow(clippy::too_many_arguments)]
fn armijo_search(
    problem: &LevelProblem,
    u: &DiscreteField,
    obj_u: f64,
    dir: &[f64],
    slope: f64,
    step0: f64,
    cfg: &SolveConfig,
    iteration: usize,
) -> Result<(DiscreteField, f64, f64), SolverError> {
    debug_assert!(slope < 0.0);
    let mesh = problem.graph.mesh();
    // near the minimum the predicted decrease drops below the resolution
    // of the objective; without this allowance the search would reject
    // sound steps on rounding noise and stall
    let fp_slack = 16.0 * f64::EPSILON * obj_u.abs();
    let mut step = step0;
    for _ in 0..220 {
        let mut trial = u.clone();
        for (k, &i) in mesh.interior_indices().iter().enumerate() {
            trial.values_mut()[i] += step * dir[k];
        }
        let obj_trial = problem.energy(&trial)?;
        if obj_trial <= obj_u + cfg.armijo_c1 * step * slope + fp_slack {
            return Ok((trial, obj_trial, step));
        }
        step *= cfg.armijo_backtrack;
    }
    Err(SolverError::LineSearchFailure {
        level: problem.n,
        iteration,
    })
}

fn solve_gradient(
    problem: &LevelProblem,
    init: DiscreteField,
    cfg: &SolveConfig,
) -> Result<(DiscreteField, usize, f64), SolverError> {
    let mesh = problem.graph.mesh();
    let interior = mesh.interior_indices();
    let mut u = init;
    let mut obj = problem.energy(&u)?;
    let mut g = problem.gradient(&u)?;
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None; // (u, g, last step)
    for iter in 0..cfg.max_inner_iters {
        let res = sup_interior(mesh, g.values());
        if res < cfg.inner_tol {
            return Ok((u, iter, res));
        }
        let gi: Vec<f64> = interior.iter().map(|&i| g.values()[i]).collect();
        let slope: f64 = -gi.iter().map(|v| v * v).sum::<f64>();
        // Barzilai-Borwein trial step, safeguarded by the Armijo test below
        let step0 = match &prev {
            Some((u_old, g_old, last)) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for (k, &i) in interior.iter().enumerate() {
                    let s = u.values()[i] - u_old[k];
                    let y = g.values()[i] - g_old[k];
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 {
                    (ss / sy).clamp(1e-12, 1e8)
                } else {
                    (last * 2.0).min(1e8)
                }
            }
            None => cfg.armijo_init_step,
        };
        let dir: Vec<f64> = gi.iter().map(|v| -v).collect();
        let (u_new, obj_new, step) =
            armijo_search(problem, &u, obj, &dir, slope, step0, cfg, iter)?;
        let g_new = problem.gradient(&u_new)?;
        prev = Some((interior.iter().map(|&i| u.values()[i]).collect(), gi, step));
        u = u_new;
        g = g_new;
        obj = obj_new;
    }
    let res = sup_interior(mesh, g.values());
    Err(SolverError::MaxInnerIterations {
        level: problem.n,
        residual: res,
    })
}

/// Constant part of the p = 2 interior Hessian: `2 Σ_j w_ij` on the
/// diagonal, `-2 w_ab` off it.
fn quadratic_hessian_base(graph: &KernelGraph) -> DMatrix<f64> {
    let m = graph.mesh().interior_count();
    let row_sums = graph.weight_row_sums();
    let mut h = DMatrix::zeros(m, m);
    for a in 0..m {
        h[(a, a)] = 2.0 * row_sums[a];
        for b in (a + 1)..m {
            let w = -2.0 * graph.weight(a, b);
            h[(a, b)] = w;
            h[(b, a)] = w;
        }
    }
    h
}

fn solve_newton(
    problem: &LevelProblem,
    init: DiscreteField,
    cfg: &SolveConfig,
    h_base: &DMatrix<f64>,
) -> Result<(DiscreteField, usize, f64), SolverError> {
    let mesh = problem.graph.mesh();
    let interior = mesh.interior_indices();
    let m = interior.len();
    let eps = 1.0 / problem.n as f64;
    let mut u = init;
    let mut obj = problem.energy(&u)?;
    let mut g = problem.gradient(&u)?;
    for iter in 0..cfg.max_inner_iters {
        let res = sup_interior(mesh, g.values());
        if res < cfg.inner_tol {
            return Ok((u, iter, res));
        }
        let mut h = h_base.clone();
        for (k, &i) in interior.iter().enumerate() {
            let d = problem.delta.value(k);
            let base = u.values()[i].max(0.0) + eps;
            h[(k, k)] += problem.f_n.value(k) * d * base.powf(-d - 1.0) * mesh.volumes()[i];
        }
        let rhs = DVector::from_iterator(m, interior.iter().map(|&i| -g.values()[i]));
        let dir = h
            .cholesky()
            .ok_or(SolverError::LinearSolveFailure(problem.n))?
            .solve(&rhs);
        let slope: f64 = interior
            .iter()
            .enumerate()
            .map(|(k, &i)| g.values()[i] * dir[k])
            .sum();
        if !(slope < 0.0) {
            return Err(SolverError::LinearSolveFailure(problem.n));
        }
        let (u_new, obj_new, _) =
            armijo_search(problem, &u, obj, dir.as_slice(), slope, 1.0, cfg, iter)?;
        g = problem.gradient(&u_new)?;
        u = u_new;
        obj = obj_new;
    }
    let res = sup_interior(mesh, g.values());
    Err(SolverError::MaxInnerIterations {
        level: problem.n,
        residual: res,
    })
}

/// Solve one regularization level by convex minimization.
///
/// The minimizer is unique, so the result is independent of `init` up to
/// the inner tolerance; warm starts only buy iterations.
pub fn solve_level(
    graph: &KernelGraph,
    f: &SourceField,
    n: u64,
    delta: &SingularExponentField,
    init: DiscreteField,
    cfg: &SolveConfig,
) -> Result<(DiscreteField, LevelStats), SolverError> {
    cfg.validate()?;
    if !init.collar_is_zero() {
        return Err(SolverError::InvalidConfig(
            "initial iterate must vanish on the collar".into(),
        ));
    }
    let method = cfg.resolve_method(graph.params().p())?;
    let problem = LevelProblem {
        graph,
        f_n: truncate_source(f, n),
        n,
        delta,
    };
    let (u, iterations, residual_sup) = match method {
        SolveMethod::Newton => {
            let h_base = quadratic_hessian_base(graph);
            solve_newton(&problem, init, cfg, &h_base)?
        }
        SolveMethod::Gradient => solve_gradient(&problem, init, cfg)?,
        SolveMethod::Auto => unreachable!("resolved above"),
    };
    finish_level(graph, &problem, u, iterations, residual_sup, delta)
}

fn finish_level(
    graph: &KernelGraph,
    problem: &LevelProblem,
    mut u: DiscreteField,
    iterations: usize,
    residual_sup: f64,
    delta: &SingularExponentField,
) -> Result<(DiscreteField, LevelStats), SolverError> {
    let raw_min = u.min_interior();
    if raw_min < NEGATIVITY_FAULT_FLOOR {
        return Err(SolverError::NegativeIterate {
            level: problem.n,
            min: raw_min,
        });
    }
    // round floating-point undershoots in [floor, 0) up to zero
    if raw_min < 0.0 {
        for v in u.values_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    let norm = seminorm(graph, &u)?;
    let energy_value = problem.energy(&u)?;
    let case_exp = delta.case_exponent();
    let transformed_norm = if case_exp > 1.0 {
        let p = graph.params().p();
        let alpha = (case_exp + p - 1.0) / p;
        let powered = DiscreteField::from_values(
            Arc::clone(graph.mesh()),
            u.values().iter().map(|v| v.max(0.0).powf(alpha)).collect(),
        )
        .map_err(SolverError::Operator)?;
        Some(seminorm(graph, &powered)?)
    } else {
        None
    };
    let stats = LevelStats {
        n: problem.n,
        iterations,
        residual_sup,
        norm,
        min_interior: raw_min,
        energy_value,
        transformed_norm,
    };
    Ok((u, stats))
}

/// Drive the regularization schedule with warm starts, asserting the
/// pointwise and seminorm monotonicity of the level solutions, and stop
/// once consecutive levels agree in sup-norm.
///
/// An exhausted schedule is not an error: the report comes back with
/// `converged = false` and the last level's field.
pub fn monotone_solve(
    graph: &KernelGraph,
    f: &SourceField,
    delta: &SingularExponentField,
    cfg: &SolveConfig,
) -> Result<(DiscreteField, SolveReport), SolverError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut u_prev = DiscreteField::zeros(Arc::clone(graph.mesh()));
    let mut norm_prev = 0.0f64;
    let mut levels = Vec::new();
    let mut level_fields = Vec::new();
    let mut converged = false;
    let mut final_sup_delta = f64::INFINITY;
    let h_base = if cfg.resolve_method(graph.params().p())? == SolveMethod::Newton {
        Some(quadratic_hessian_base(graph))
    } else {
        None
    };
    for (li, &n) in cfg.n_schedule.iter().enumerate() {
        let problem = LevelProblem {
            graph,
            f_n: truncate_source(f, n),
            n,
            delta,
        };
        let init = u_prev.clone();
        let (u, iterations, residual_sup) = match &h_base {
            Some(h) => solve_newton(&problem, init, cfg, h)?,
            None => solve_gradient(&problem, init, cfg)?,
        };
        let (u, stats) = finish_level(graph, &problem, u, iterations, residual_sup, delta)?;
        if li > 0 {
            let mut min_gap = f64::INFINITY;
            for (a, b) in u.values().iter().zip(u_prev.values()) {
                min_gap = min_gap.min(a - b);
            }
            if min_gap < -cfg.monotonicity_slack {
                return Err(SolverError::MonotonicityViolation {
                    level: n,
                    gap: min_gap,
                });
            }
            if norm_prev > stats.norm + cfg.norm_slack {
                return Err(SolverError::NormMonotonicityViolation {
                    level: n,
                    gap: norm_prev - stats.norm,
                });
            }
        }
        final_sup_delta = u.sup_diff(&u_prev);
        norm_prev = stats.norm;
        levels.push(stats);
        if cfg.keep_level_fields {
            level_fields.push(u.clone());
        }
        u_prev = u;
        let stop = if li == 0 {
            cfg.outer_tol.is_infinite()
        } else {
            final_sup_delta < cfg.outer_tol
        };
        if stop {
            converged = true;
            break;
        }
    }
    let report = SolveReport {
        levels,
        converged,
        final_sup_delta,
        wall_time: start.elapsed(),
        level_fields,
    };
    Ok((u_prev, report))
}

/// Slack of the variational inequality satisfied by the level-n minimizer,
///
/// ```text
/// ‖φ‖^p + p Σ (u_n − φ)(u_n + 1/n)^{-δ} f_n vol − ‖u_n‖^p >= 0,
/// ```
///
/// for arbitrary zero-collar `φ`; constant `δ` only.
pub fn minimizer_inequality_slack(
    graph: &KernelGraph,
    f: &SourceField,
    n: u64,
    delta: f64,
    u_n: &DiscreteField,
    phi: &DiscreteField,
) -> Result<f64, SolverError> {
    if !(delta > 0.0) {
        return Err(SolverError::InvalidExponent(format!(
            "constant exponent must be positive, got {delta}"
        )));
    }
    if !phi.collar_is_zero() {
        return Err(SolverError::InvalidConfig(
            "test field must vanish on the collar".into(),
        ));
    }
    let p = graph.params().p();
    let f_n = truncate_source(f, n);
    let mesh = graph.mesh();
    let mut coupling = 0.0f64;
    for (k, &i) in mesh.interior_indices().iter().enumerate() {
        let ui = u_n.values()[i];
        coupling += (ui - phi.values()[i])
            * regularized_nonlinearity(ui, n, delta)
            * f_n.value(k)
            * mesh.volumes()[i];
    }
    let e_phi = energy_seminorm_p(graph, phi)?;
    let e_u = energy_seminorm_p(graph, u_n)?;
    Ok(e_phi + p * coupling - e_u)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AprioriCase {
    /// `‖u_n‖` itself is the uniformly bounded quantity.
    PlainNorm,
    /// `‖u_n^exponent‖` is the uniformly bounded quantity.
    TransformedNorm { exponent: f64 },
}

#[derive(Debug, Clone)]
pub struct AprioriReport {
    pub case: AprioriCase,
    /// One value per completed level.
    pub values: Vec<f64>,
    /// All entries bounded by the final one within the slack.
    pub bounded: bool,
}

/// Select and check the per-level norm column that the uniform a-priori
/// bound applies to: the plain seminorm for exponents at most one, the
/// power-transformed seminorm `‖u_n^{(δ+p−1)/p}‖` above one.
pub fn apriori_norm_report(
    report: &SolveReport,
    delta: &SingularExponentField,
    p: f64,
    slack: f64,
) -> AprioriReport {
    let case_exp = delta.case_exponent();
    let (case, values): (AprioriCase, Vec<f64>) = if case_exp > 1.0 {
        let alpha = (case_exp + p - 1.0) / p;
        (
            AprioriCase::TransformedNorm { exponent: alpha },
            report
                .levels
                .iter()
                .map(|l| l.transformed_norm.unwrap_or(l.norm))
                .collect(),
        )
    } else {
        (
            AprioriCase::PlainNorm,
            report.levels.iter().map(|l| l.norm).collect(),
        )
    };
    let bounded = match values.last() {
        Some(last) => values.iter().all(|v| *v <= last * (1.0 + slack)),
        None => false,
    };
    AprioriReport {
        case,
        values,
        bounded,
    }
}
