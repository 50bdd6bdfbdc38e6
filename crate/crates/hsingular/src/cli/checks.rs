//! The `verify` battery: every constructive fact the solver relies on,
//! exercised at desk scale with pinned tolerances and a config-driven
//! seed. Each check appends PASS/FAIL lines to the run summary.

use crate::analysis;
use crate::cli::artifacts::{fmt_value, Summary};
use crate::cli::run::Instance;
use crate::cli::RunConfig;
use crate::extremal;
use crate::heisenberg::{
    compose, dilate, distance, inverse, koranyi_norm, GroupPoint, ModelParams,
};
use crate::mesh::{build_mesh, DomainSpec};
use crate::operator::{assemble, energy_seminorm_p, residual, DiscreteField};
use crate::solver::{
    self, minimizer_inequality_slack, monotone_solve, solve_level, truncate_source,
    SingularExponentField, SolveConfig, SourceField,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> GroupPoint {
    GroupPoint {
        x: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        y: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        t: rng.gen_range(-4.0..4.0),
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn point_gap(a: &GroupPoint, b: &GroupPoint) -> f64 {
    let mut worst = rel_gap(a.t, b.t);
    for (u, v) in a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)) {
        worst = worst.max(rel_gap(*u, *v));
    }
    worst
}

/// Group axioms, norm homogeneity and symmetry, left invariance of the
/// distance, and a non-commutativity witness.
pub fn group_algebra(summary: &mut Summary, samples: usize, seed: u64, n: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11);
    let mut worst_assoc = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut worst_homog = 0.0f64;
    let mut worst_symm = 0.0f64;
    let mut worst_left = 0.0f64;
    for _ in 0..samples {
        let a = random_point(&mut rng, n);
        let b = random_point(&mut rng, n);
        let c = random_point(&mut rng, n);
        let ab_c = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let a_bc = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        worst_assoc = worst_assoc.max(point_gap(&ab_c, &a_bc));
        let e = compose(&inverse(&a), &a).unwrap();
        worst_identity = worst_identity.max(point_gap(&e, &GroupPoint::origin(n)));
        let lam = rng.gen_range(0.1..4.0);
        worst_homog = worst_homog.max(rel_gap(
            koranyi_norm(&dilate(lam, &a).unwrap()),
            lam * koranyi_norm(&a),
        ));
        worst_symm = worst_symm.max((koranyi_norm(&inverse(&a)) - koranyi_norm(&a)).abs());
        let g = random_point(&mut rng, n);
        worst_left = worst_left.max(rel_gap(
            distance(&compose(&g, &a).unwrap(), &compose(&g, &b).unwrap()).unwrap(),
            distance(&a, &b).unwrap(),
        ));
    }
    let x = GroupPoint::new(vec![1.0; n], vec![0.0; n], 0.0);
    let y = GroupPoint::new(vec![0.0; n], vec![1.0; n], 0.0);
    let witness = point_gap(&compose(&x, &y).unwrap(), &compose(&y, &x).unwrap()) > 0.0;
    let tol = 1e-12;
    summary.push("verify.group.worst_associativity", fmt_value(worst_assoc));
    summary.push("verify.group.worst_identity", fmt_value(worst_identity));
    summary.push("verify.group.worst_homogeneity", fmt_value(worst_homog));
    summary.push("verify.group.worst_symmetry", fmt_value(worst_symm));
    summary.push("verify.group.worst_left_invariance", fmt_value(worst_left));
    summary.push_flag(
        "verify.group_algebra",
        worst_assoc <= tol
            && worst_identity <= tol
            && worst_homog <= tol
            && worst_symm == 0.0
            && worst_left <= tol
            && witness,
    );
}

/// Residual against central finite differences of the scaled energy on a
/// small reference mesh, across the exponent grid.
pub fn gradient_consistency(summary: &mut Summary, seed: u64) {
    let spec = DomainSpec::CoordinateBox {
        bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    };
    let mesh = Arc::new(build_mesh(&spec, 0.8, 0.45, 10_000).expect("reference mesh"));
    summary.push("verify.gradient.nodes", mesh.node_count().to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9d);
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let graph = assemble(
            Arc::clone(&mesh),
            ModelParams::new(1, 0.5, p).expect("valid"),
        )
        .expect("assemble");
        for _ in 0..20 {
            let vals: Vec<f64> = (0..mesh.interior_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let u = DiscreteField::from_interior(Arc::clone(&mesh), &vals).expect("sized");
            let r = residual(&graph, &u).expect("residual");
            let step = 1e-5;
            let mut sup_err = 0.0f64;
            let mut sup_r = 0.0f64;
            for &i in mesh.interior_indices() {
                let mut up = u.clone();
                up.values_mut()[i] += step;
                let mut dn = u.clone();
                dn.values_mut()[i] -= step;
                let fd = (energy_seminorm_p(&graph, &up).unwrap()
                    - energy_seminorm_p(&graph, &dn).unwrap())
                    / (2.0 * step * p);
                sup_err = sup_err.max((fd - r.values()[i]).abs());
                sup_r = sup_r.max(r.values()[i].abs());
            }
            worst = worst.max(sup_err / sup_r);
        }
    }
    summary.push("verify.gradient.worst_rel_err", fmt_value(worst));
    summary.push_flag("verify.gradient_consistency", worst < 1e-6);
}

/// Single-interior-node instances against the bisection oracle.
pub fn scalar_oracle(summary: &mut Summary) {
    let spec = DomainSpec::CoordinateBox {
        bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    };
    let mesh = Arc::new(build_mesh(&spec, 1.0, 1.0, 10_000).expect("scalar mesh"));
    let graph = assemble(
        Arc::clone(&mesh),
        ModelParams::new(1, 0.5, 2.0).expect("valid"),
    )
    .expect("assemble");
    let i0 = mesh.interior_indices()[0];
    let w_sum: f64 = (0..mesh.node_count())
        .filter(|&j| j != i0)
        .map(|j| graph.weight(i0, j))
        .sum();
    let vol = mesh.volumes()[i0];
    let f = SourceField::constant(Arc::clone(&mesh), 1.0, 2.0).expect("source");
    let cfg = SolveConfig {
        inner_tol: 1e-13,
        ..SolveConfig::default()
    };
    let mut worst = 0.0f64;
    for delta_val in [0.5, 1.0, 2.0] {
        let delta =
            SingularExponentField::constant(Arc::clone(&mesh), delta_val, 0.25, delta_val.max(1.0))
                .expect("exponent");
        for n in [1u64, 4, 16] {
            let init = DiscreteField::zeros(Arc::clone(&mesh));
            match solve_level(&graph, &f, n, &delta, init, &cfg) {
                Ok((u, _)) => {
                    let expect = bisection_root(w_sum, vol, 2.0, n, delta_val);
                    worst = worst.max((u.values()[i0] - expect).abs());
                }
                Err(e) => {
                    summary.push("verify.scalar_oracle.error", e.to_string());
                    summary.push_flag("verify.scalar_oracle", false);
                    return;
                }
            }
        }
    }
    summary.push("verify.scalar_oracle.worst_abs_err", fmt_value(worst));
    summary.push_flag("verify.scalar_oracle", worst < 1e-10);
}

/// Positive root of `2W j_p(u) = vol (u + 1/n)^{-delta}` (unit source).
pub fn bisection_root(w_sum: f64, vol: f64, p: f64, n: u64, delta: f64) -> f64 {
    let phi = |u: f64| {
        2.0 * w_sum * crate::operator::j_p(u, p)
            - vol * solver::regularized_nonlinearity(u, n, delta)
    };
    let mut hi = 1.0f64;
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Randomized algebraic-inequality suites.
pub fn lemma_suites(summary: &mut Summary, samples: usize, seed: u64) {
    let report = analysis::lemma_suites(samples, seed);
    for (p, o) in &report.odd_power_monotonicity {
        summary.push(
            format!("verify.lemma.monotonicity.p{p}.constant"),
            fmt_value(o.worst_margin),
        );
        summary.push(
            format!("verify.lemma.monotonicity.p{p}.violations"),
            o.violations.to_string(),
        );
    }
    for ((p, q), o) in &report.primitive_holder {
        summary.push(
            format!("verify.lemma.primitive.p{p}.q{q}.violations"),
            o.violations.to_string(),
        );
    }
    for ((q, eps), o) in &report.power_gap {
        summary.push(
            format!("verify.lemma.power_gap.q{q}.eps{eps}.violations"),
            o.violations.to_string(),
        );
    }
    summary.push_flag("verify.lemma_suites", report.all_passed());
}

/// Full monotone run on the configured instance with the per-level checks,
/// the variational-inequality slack, and the extremal battery when the
/// exponent permits it.
pub fn instance_battery(summary: &mut Summary, cfg: &RunConfig, inst: &Instance) {
    let mut solve_cfg = cfg.solve.clone();
    solve_cfg.keep_level_fields = true;
    let (u, report) = match monotone_solve(&inst.graph, &inst.f, &inst.delta, &solve_cfg) {
        Ok(pair) => pair,
        Err(e) => {
            summary.push("verify.monotone.error", e.to_string());
            summary.push_flag("verify.monotone_scheme", false);
            return;
        }
    };
    let norms_ok = report
        .levels
        .windows(2)
        .all(|w| w[0].norm <= w[1].norm + solve_cfg.norm_slack);
    let positive = u.min_interior() > 0.0;
    summary.push("verify.monotone.levels", report.levels.len().to_string());
    summary.push(
        "verify.monotone.final_n",
        report.levels.last().map(|l| l.n).unwrap_or(0).to_string(),
    );
    summary.push_value("verify.monotone.min_interior", u.min_interior());
    summary.push_flag("verify.monotone_scheme", norms_ok && positive);
    summary.push_flag("verify.monotone.converged", report.converged);

    // a-priori bound column
    let ap = solver::apriori_norm_report(&report, &inst.delta, inst.graph.params().p(), 1e-8);
    summary.push_flag("verify.apriori_bounded", ap.bounded);

    // condition check: exponent bounded on the boundary strip
    match analysis::boundary_exponent_bounded(&inst.delta, cfg.delta_epsilon, cfg.delta_star) {
        Ok(ok) => summary.push_flag("verify.boundary_exponent_bound", ok),
        Err(e) => {
            summary.push("verify.boundary_exponent_bound.error", e.to_string());
            summary.push_flag("verify.boundary_exponent_bound", false);
        }
    }

    // variational inequality at every kept level, constant exponent only
    if let Some(delta_val) = inst.delta.constant_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9201);
        let mut worst = f64::INFINITY;
        for (level, field) in report.levels.iter().zip(&report.level_fields) {
            for _ in 0..20 {
                let vals: Vec<f64> = (0..inst.mesh.interior_count())
                    .map(|_| rng.gen_range(-0.5..1.5))
                    .collect();
                let phi =
                    DiscreteField::from_interior(Arc::clone(&inst.mesh), &vals).expect("sized");
                match minimizer_inequality_slack(
                    &inst.graph,
                    &inst.f,
                    level.n,
                    delta_val,
                    field,
                    &phi,
                ) {
                    Ok(s) => worst = worst.min(s),
                    Err(e) => {
                        summary.push("verify.minimizer_inequality.error", e.to_string());
                        worst = f64::NEG_INFINITY;
                    }
                }
            }
        }
        summary.push_value("verify.minimizer_inequality.worst_slack", worst);
        summary.push_flag("verify.minimizer_inequality", worst >= -1e-8);
    } else {
        summary.push("verify.minimizer_inequality", "SKIPPED (variable exponent)");
    }

    if let Some(last) = report.levels.last() {
        el_defect_check(summary, inst, &u, last.n, solve_cfg.inner_tol);
    }
    extremal_battery(summary, cfg, inst, &u);
    comparison_battery(summary, cfg, inst);
}

fn extremal_battery(summary: &mut Summary, cfg: &RunConfig, inst: &Instance, u: &DiscreteField) {
    let delta_val = match inst.delta.constant_value() {
        Some(v) if v > 0.0 && v < 1.0 => v,
        _ => {
            summary.push(
                "verify.extremal",
                "SKIPPED (requires a constant exponent in (0,1))",
            );
            return;
        }
    };
    let p = inst.graph.params().p();
    let res = match extremal::compute_extremal(&inst.graph, &inst.f, delta_val, u) {
        Ok(r) => r,
        Err(e) => {
            summary.push("verify.extremal.error", e.to_string());
            summary.push_flag("verify.extremal", false);
            return;
        }
    };
    let identity_tol = if p == 2.0 { 1e-6 } else { 1e-4 };
    summary.push_value("verify.extremal.identity_rel_gap", res.identity_gap_rel);
    summary.push_flag(
        "verify.extremal_identity",
        res.identity_gap_rel < identity_tol,
    );
    let theta_gap = (res.theta - res.theta_norm_route).abs() / res.theta;
    summary.push_value("verify.extremal.theta", res.theta);
    summary.push_value("verify.extremal.theta_norm_route", res.theta_norm_route);
    summary.push_flag("verify.extremal_theta_consistency", theta_gap < 1e-6);
    summary.push_value("verify.extremal.tau", res.tau);
    summary.push_flag(
        "verify.extremal_constraint",
        (res.constraint_value - 1.0).abs() < 1e-10,
    );

    let theta_check = res.theta_norm_route;
    let trials = extremal::sobolev_trial_fields(&res.v_delta, 100, cfg.seed ^ 0x50b);
    match extremal::sobolev_inequality_slack(&inst.graph, &inst.f, delta_val, theta_check, &trials)
    {
        Ok(worst) => {
            summary.push_value("verify.sobolev.worst_slack", worst);
            summary.push_flag("verify.sobolev_inequality", worst >= -1e-10);
        }
        Err(e) => {
            summary.push("verify.sobolev.error", e.to_string());
            summary.push_flag("verify.sobolev_inequality", false);
        }
    }
    // equality at the extremal and at a scaled copy
    let mut equality_ok = true;
    for lam in [1.0f64, 2.0] {
        let scaled = DiscreteField::from_values(
            Arc::clone(&inst.mesh),
            res.v_delta.values().iter().map(|v| lam * v).collect(),
        )
        .expect("sized");
        match extremal::sobolev_slack(&inst.graph, &inst.f, delta_val, theta_check, &scaled) {
            Ok(s) => {
                let rel = s.abs() / (lam.abs().powf(p) * theta_check);
                summary.push_value(format!("verify.sobolev.equality_rel.lambda{lam}"), rel);
                equality_ok &= rel < 1e-6;
            }
            Err(_) => equality_ok = false,
        }
    }
    summary.push_flag("verify.sobolev_equality", equality_ok);

    // simplicity verdicts
    let w3 = DiscreteField::from_values(
        Arc::clone(&inst.mesh),
        u.values().iter().map(|v| 3.0 * v).collect(),
    )
    .expect("sized");
    let wneg = DiscreteField::from_values(
        Arc::clone(&inst.mesh),
        u.values().iter().map(|v| -v).collect(),
    )
    .expect("sized");
    let mut bumped = u.clone();
    let mid = inst.mesh.interior_indices()[inst.mesh.interior_count() / 2];
    bumped.values_mut()[mid] *= 1.5;
    let verdict = |w: &DiscreteField| {
        extremal::check_simplicity(
            &inst.graph,
            &inst.f,
            delta_val,
            theta_check,
            u,
            w,
            1e-6,
            1e-6,
        )
    };
    let ok3 = matches!(
        verdict(&w3),
        Ok(extremal::SimplicityVerdict::Proportional { factor }) if (factor - 3.0).abs() < 1e-6
    );
    let okneg = matches!(
        verdict(&wneg),
        Ok(extremal::SimplicityVerdict::Proportional { factor }) if (factor + 1.0).abs() < 1e-6
    );
    let okbump = matches!(
        verdict(&bumped),
        Ok(extremal::SimplicityVerdict::NoEquality { .. })
    );
    summary.push_flag("verify.simplicity_scaled", ok3);
    summary.push_flag("verify.simplicity_sign_flip", okneg);
    summary.push_flag("verify.simplicity_perturbed_rejected", okbump);
}

fn comparison_battery(summary: &mut Summary, cfg: &RunConfig, inst: &Instance) {
    let mut solve_cfg = cfg.solve.clone();
    solve_cfg.n_schedule = solver::doubling_schedule(16);
    solve_cfg.outer_tol = f64::MIN_POSITIVE; // run the whole short schedule
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc0);
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for _ in 0..5 {
        let base: Vec<f64> = (0..inst.mesh.interior_count())
            .map(|_| rng.gen_range(0.2..1.0))
            .collect();
        let upper: Vec<f64> = base.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
        let f1 = SourceField::from_interior_values(Arc::clone(&inst.mesh), base, cfg.source_m)
            .expect("source");
        let f2 = SourceField::from_interior_values(Arc::clone(&inst.mesh), upper, cfg.source_m)
            .expect("source");
        let run = |f: &SourceField| monotone_solve(&inst.graph, f, &inst.delta, &solve_cfg);
        match (run(&f1), run(&f2)) {
            (Ok((u1, _)), Ok((u2, _))) => {
                match extremal::check_comparison(&u1, &u2, &f1, &f2, 1e-8) {
                    Ok(out) => {
                        worst = worst.max(out.max_violation);
                        ok &= out.ordered;
                    }
                    Err(e) => {
                        summary.push("verify.comparison.error", e.to_string());
                        ok = false;
                    }
                }
            }
            _ => {
                summary.push("verify.comparison.error", "solve failed".to_string());
                ok = false;
            }
        }
    }
    summary.push_value("verify.comparison.worst_violation", worst);
    summary.push_flag("verify.comparison_principle", ok);
}

/// Euler-Lagrange defect of the final field at the final level, as an
/// independent restatement of the inner stopping criterion.
fn el_defect_check(
    summary: &mut Summary,
    inst: &Instance,
    u: &DiscreteField,
    n: u64,
    inner_tol: f64,
) {
    let f_n = truncate_source(&inst.f, n);
    match solver::objective_gradient(&inst.graph, &f_n, n, &inst.delta, u) {
        Ok(g) => {
            let sup = inst
                .mesh
                .interior_indices()
                .iter()
                .map(|&i| g.values()[i].abs())
                .fold(0.0f64, f64::max);
            summary.push_value("verify.el_defect_sup", sup);
            summary.push_flag("verify.el_consistency", sup <= inner_tol * 1.01);
        }
        Err(e) => {
            summary.push("verify.el_defect.error", e.to_string());
            summary.push_flag("verify.el_consistency", false);
        }
    }
}
