//! Mode dispatch and artifact emission.
//!
//! Exit codes: 0 success, 1 solver non-convergence, 2 invariant violation,
//! 3 configuration error.

use crate::analysis::{
    self, predicted_integrability, required_m, sobolev_exponent, Integrability, RegularityCase,
};
use crate::cli::artifacts::{
    fmt_value, read_grid_values, write_radial_profile, write_solution_csv, Summary,
};
use crate::cli::checks;
use crate::cli::config::{FieldSpec, Mode, RunConfig};
use crate::extremal;
use crate::mesh::{build_mesh, Mesh};
use crate::operator::{assemble, DiscreteField, KernelGraph};
use crate::solver::{
    apriori_norm_report, monotone_solve, SingularExponentField, SolveReport, SolverError,
    SourceField,
};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::NonConvergence(_) => 1,
            RunError::Invariant(_) => 2,
            RunError::Config(_) | RunError::Io(_) => 3,
        }
    }
}

fn classify_solver_error(e: SolverError) -> RunError {
    match e {
        SolverError::LineSearchFailure { .. } | SolverError::MaxInnerIterations { .. } => {
            RunError::NonConvergence(e.to_string())
        }
        SolverError::MonotonicityViolation { .. }
        | SolverError::NormMonotonicityViolation { .. }
        | SolverError::NegativeIterate { .. } => RunError::Invariant(e.to_string()),
        other => RunError::Config(other.to_string()),
    }
}

/// Mesh, kernel graph, and coefficient fields of one configured instance.
pub struct Instance {
    pub mesh: Arc<Mesh>,
    pub graph: KernelGraph,
    pub f: SourceField,
    pub delta: SingularExponentField,
}

fn build_field_values(spec: &FieldSpec, mesh: &Arc<Mesh>) -> Result<Vec<f64>, RunError> {
    match spec {
        FieldSpec::Constant(v) => Ok(vec![*v; mesh.interior_count()]),
        FieldSpec::Radial { base, slope } => {
            let center = mesh.spec().center();
            Ok(mesh
                .interior_indices()
                .iter()
                .map(|&i| {
                    let rho = crate::heisenberg::distance(&mesh.nodes()[i], &center)
                        .expect("dimensions agree");
                    base + slope * rho
                })
                .collect())
        }
        FieldSpec::Grid(path) => read_grid_values(path, mesh).map_err(RunError::Config),
    }
}

pub fn build_instance(cfg: &RunConfig) -> Result<Instance, RunError> {
    let mesh = Arc::new(
        build_mesh(&cfg.domain, cfg.h, cfg.collar_width, cfg.max_nodes)
            .map_err(|e| RunError::Config(e.to_string()))?,
    );
    let graph =
        assemble(Arc::clone(&mesh), cfg.params).map_err(|e| RunError::Config(e.to_string()))?;
    let f_values = build_field_values(&cfg.source_spec, &mesh)?;
    let f = SourceField::from_interior_values(Arc::clone(&mesh), f_values, cfg.source_m)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let d_values = build_field_values(&cfg.delta_spec, &mesh)?;
    let delta = SingularExponentField::from_interior_values(
        Arc::clone(&mesh),
        d_values,
        cfg.delta_epsilon,
        cfg.delta_star,
    )
    .map_err(|e| RunError::Config(e.to_string()))?;
    Ok(Instance {
        mesh,
        graph,
        f,
        delta,
    })
}

fn push_config_echo(summary: &mut Summary, cfg: &RunConfig) {
    for (k, v) in cfg.effective_entries() {
        summary.push(format!("config.{k}"), v);
    }
}

fn push_mesh_block(summary: &mut Summary, mesh: &Mesh) {
    let n = mesh.node_count();
    summary.push("mesh.nodes", n.to_string());
    summary.push("mesh.interior_nodes", mesh.interior_count().to_string());
    summary.push("mesh.collar_nodes", mesh.collar_count().to_string());
    summary.push_value("mesh.cell_volume", mesh.volumes()[0]);
    summary.push_value("mesh.interior_volume", mesh.interior_volume());
    summary.push("mesh.pair_count", (n * (n - 1) / 2).to_string());
}

fn regularity_case(cfg: &RunConfig, delta: Option<&SingularExponentField>) -> RegularityCase {
    let constant = match (&cfg.delta_spec, delta) {
        (FieldSpec::Constant(v), _) => Some(*v),
        (_, Some(field)) => field.constant_value(),
        _ => None,
    };
    match constant {
        Some(v) if v < 1.0 => RegularityCase::ConstantSubUnit { delta: v },
        Some(v) if v > 1.0 => RegularityCase::ConstantSuperUnit { delta: v },
        Some(_) => RegularityCase::ConstantUnit,
        None => RegularityCase::VariableExponent {
            delta_star: cfg.delta_star,
        },
    }
}

fn push_prediction_block(summary: &mut Summary, cfg: &RunConfig, case: &RegularityCase) {
    let params = &cfg.params;
    summary.push_value("prediction.p_critical", sobolev_exponent(params));
    summary.push_value(
        "prediction.linf_threshold",
        params.q() / (params.s() * params.p()),
    );
    let label = match case {
        RegularityCase::VariableExponent { delta_star } => {
            format!("variable delta_star={delta_star}")
        }
        RegularityCase::ConstantSubUnit { delta } => format!("constant delta={delta} (sub-unit)"),
        RegularityCase::ConstantUnit => "constant delta=1".to_string(),
        RegularityCase::ConstantSuperUnit { delta } => {
            format!("constant delta={delta} (super-unit)")
        }
    };
    summary.push("prediction.case", label);
    match required_m(case, params) {
        Ok(m) => summary.push_value("prediction.required_m", m),
        Err(e) => summary.push("prediction.required_m", format!("not applicable: {e}")),
    }
    summary.push_value("prediction.source_m", cfg.source_m);
    match predicted_integrability(case, cfg.source_m, params) {
        Ok(pred) => {
            match pred.outcome {
                Integrability::LInfinity => summary.push("prediction.outcome", "L_infinity"),
                Integrability::Lt { t } => summary.push(
                    "prediction.outcome",
                    format!("L^t with t = {}", fmt_value(t)),
                ),
            }
            if let Some(g) = pred.gamma {
                summary.push_value("prediction.gamma", g);
            }
        }
        Err(e) => summary.push("prediction.outcome", format!("not applicable: {e}")),
    }
}

fn push_exponent_table(summary: &mut Summary, cfg: &RunConfig, case: &RegularityCase) {
    let params = &cfg.params;
    let hi = params.q() / (params.s() * params.p());
    let lo = match required_m(case, params) {
        Ok(m) => m.max(1.0),
        Err(_) => 1.0,
    };
    // sample the admissible interval; the sub-unit case admits its left
    // endpoint, the others are open there
    let closed_left = matches!(case, RegularityCase::ConstantSubUnit { .. })
        || matches!(case, RegularityCase::VariableExponent { .. });
    for k in 0..=5 {
        let m = if k == 0 && closed_left {
            lo
        } else {
            lo + (hi - lo) * k as f64 / 6.0
        };
        if m <= 1.0 {
            continue;
        }
        match predicted_integrability(case, m, params) {
            Ok(pred) => {
                if let Integrability::Lt { t } = pred.outcome {
                    summary.push(
                        format!("exponents.table.m{}", k),
                        format!("m = {} -> t = {}", fmt_value(m), fmt_value(t)),
                    );
                }
            }
            Err(_) => continue,
        }
    }
    summary.push(
        "exponents.table.linf",
        format!("m > {} -> L_infinity", fmt_value(hi)),
    );
}

fn push_level_table(summary: &mut Summary, report: &SolveReport) {
    for (idx, level) in report.levels.iter().enumerate() {
        let tag = format!("level.{:02}", idx + 1);
        summary.push(format!("{tag}.n"), level.n.to_string());
        summary.push(format!("{tag}.iterations"), level.iterations.to_string());
        summary.push_value(format!("{tag}.residual_sup"), level.residual_sup);
        summary.push_value(format!("{tag}.norm"), level.norm);
        summary.push_value(format!("{tag}.min_interior"), level.min_interior);
        summary.push_value(format!("{tag}.energy"), level.energy_value);
        if let Some(tn) = level.transformed_norm {
            summary.push_value(format!("{tag}.transformed_norm"), tn);
        }
    }
    summary.push("outer.converged", report.converged.to_string());
    summary.push_value("outer.final_sup_delta", report.final_sup_delta);
}

fn write_solution_artifacts(
    cfg: &RunConfig,
    out_dir: &Path,
    u: &DiscreteField,
) -> Result<(), RunError> {
    if cfg.write_solution_csv {
        write_solution_csv(&out_dir.join("solution.csv"), u)?;
    }
    if cfg.write_radial_profile {
        write_radial_profile(&out_dir.join("radial_profile.dat"), u)?;
    }
    Ok(())
}

/// Execute a mode on a parsed config, writing artifacts under `out_dir`.
/// Returns the process exit code.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> i32 {
    match run_inner(cfg, out_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(cfg: &RunConfig, out_dir: &Path) -> Result<i32, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let mut summary = Summary::new();
    push_config_echo(&mut summary, cfg);
    let code = match cfg.mode {
        Mode::MeshInfo => {
            let inst = build_instance(cfg)?;
            push_mesh_block(&mut summary, &inst.mesh);
            0
        }
        Mode::Exponents => {
            let case = regularity_case(cfg, None);
            push_prediction_block(&mut summary, cfg, &case);
            push_exponent_table(&mut summary, cfg, &case);
            0
        }
        Mode::Solve => {
            let inst = build_instance(cfg)?;
            push_mesh_block(&mut summary, &inst.mesh);
            let (u, report) = monotone_solve(&inst.graph, &inst.f, &inst.delta, &cfg.solve)
                .map_err(classify_solver_error)?;
            push_level_table(&mut summary, &report);
            summary.push_value("solution.min_interior", u.min_interior());
            summary.push_value("solution.max_interior", u.max_interior());
            if let Some(last) = report.levels.last() {
                summary.push_value("solution.norm", last.norm);
                // empirical embedding ratio ||u||_{L^p} / ||u||; a
                // diagnostic only, no claim about the continuum constant
                if last.norm > 0.0 {
                    let lp = analysis::lt_norm(&u, cfg.params.p());
                    summary.push_value("solution.embedding_ratio", lp / last.norm);
                }
            }
            let ap = apriori_norm_report(&report, &inst.delta, cfg.params.p(), 1e-8);
            summary.push_flag("apriori.bounded", ap.bounded);
            // the extremal-constant block applies whenever the exponent
            // is a sub-unit constant
            if let Some(d) = inst.delta.constant_value().filter(|d| *d > 0.0 && *d < 1.0) {
                if let Ok(res) = extremal::compute_extremal(&inst.graph, &inst.f, d, &u) {
                    summary.push_value("extremal.theta", res.theta);
                    summary.push_value("extremal.theta_norm_route", res.theta_norm_route);
                    summary.push_value("extremal.tau", res.tau);
                    summary.push_value("extremal.identity_rel_gap", res.identity_gap_rel);
                }
            }
            let case = regularity_case(cfg, Some(&inst.delta));
            push_prediction_block(&mut summary, cfg, &case);
            match analysis::boundary_exponent_bounded(
                &inst.delta,
                cfg.delta_epsilon,
                cfg.delta_star,
            ) {
                Ok(ok) => summary.push_flag("condition.boundary_exponent_bound", ok),
                Err(e) => summary.push(
                    "condition.boundary_exponent_bound",
                    format!("not applicable: {e}"),
                ),
            }
            write_solution_artifacts(cfg, out_dir, &u)?;
            if report.converged {
                0
            } else {
                1
            }
        }
        Mode::Extremal => {
            let inst = build_instance(cfg)?;
            push_mesh_block(&mut summary, &inst.mesh);
            let (u, report) = monotone_solve(&inst.graph, &inst.f, &inst.delta, &cfg.solve)
                .map_err(classify_solver_error)?;
            push_level_table(&mut summary, &report);
            write_solution_artifacts(cfg, out_dir, &u)?;
            let mut failed = false;
            match inst.delta.constant_value() {
                Some(d) if d > 0.0 && d < 1.0 => {
                    let res = extremal::compute_extremal(&inst.graph, &inst.f, d, &u)
                        .map_err(|e| RunError::Invariant(e.to_string()))?;
                    summary.push_value("extremal.theta", res.theta);
                    summary.push_value("extremal.theta_norm_route", res.theta_norm_route);
                    summary.push_value("extremal.tau", res.tau);
                    summary.push_value("extremal.identity_rel_gap", res.identity_gap_rel);
                    summary.push_value("extremal.constraint_value", res.constraint_value);
                    let p = cfg.params.p();
                    let identity_tol = if p == 2.0 { 1e-6 } else { 1e-4 };
                    let theta_gap = (res.theta - res.theta_norm_route).abs() / res.theta;
                    summary.push_flag("extremal.identity", res.identity_gap_rel < identity_tol);
                    summary.push_flag("extremal.theta_consistency", theta_gap < 1e-6);
                    summary.push_flag(
                        "extremal.constraint",
                        (res.constraint_value - 1.0).abs() < 1e-10,
                    );
                    let trials =
                        extremal::sobolev_trial_fields(&res.v_delta, 100, cfg.seed ^ 0x50b);
                    let worst = extremal::sobolev_inequality_slack(
                        &inst.graph,
                        &inst.f,
                        d,
                        res.theta_norm_route,
                        &trials,
                    )
                    .map_err(|e| RunError::Invariant(e.to_string()))?;
                    summary.push_value("extremal.sobolev_worst_slack", worst);
                    summary.push_flag("extremal.sobolev", worst >= -1e-10);
                    failed = summary.any_fail();
                    write_radial_profile(&out_dir.join("extremal_profile.dat"), &res.v_delta)?;
                }
                _ => {
                    summary.push(
                        "extremal.notice",
                        "skipped: extremal stage requires a constant exponent in (0,1)",
                    );
                }
            }
            if failed {
                2
            } else if report.converged {
                0
            } else {
                1
            }
        }
        Mode::Verify => {
            let inst = build_instance(cfg)?;
            push_mesh_block(&mut summary, &inst.mesh);
            checks::group_algebra(&mut summary, cfg.verify_samples, cfg.seed, cfg.params.n());
            checks::gradient_consistency(&mut summary, cfg.seed);
            checks::scalar_oracle(&mut summary);
            checks::lemma_suites(&mut summary, cfg.verify_samples, cfg.seed);
            checks::instance_battery(&mut summary, cfg, &inst);
            if summary.any_fail() {
                2
            } else {
                0
            }
        }
    };
    summary.write_to(&out_dir.join("summary.txt"))?;
    Ok(code)
}
