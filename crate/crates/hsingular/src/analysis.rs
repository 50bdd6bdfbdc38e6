//! Exponent calculators for the integrability theory, empirical L^t
//! studies, and randomized suites for the supporting algebraic
//! inequalities.

use crate::operator::DiscreteField;
use crate::solver::SingularExponentField;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid regularity case: {0}")]
    InvalidCase(String),
    #[error("m = {m} outside the admissible interval [{lo}, {hi}) of this case")]
    OutsideInterval { m: f64, lo: f64, hi: f64 },
    #[error("study needs at least two refinements, got {0}")]
    NeedsRefinements(usize),
    #[error("refinement spacings must strictly decrease")]
    NotRefining,
}

/// Critical exponent `p_s* = Qp / (Q - sp)`; finite because the parameter
/// set enforces `sp < Q`.
pub fn sobolev_exponent(params: &crate::heisenberg::ModelParams) -> f64 {
    let q = params.q();
    q * params.p() / (q - params.s() * params.p())
}

/// Conjugate exponent `l' = l / (l - 1)`.
pub fn conjugate(l: f64) -> f64 {
    l / (l - 1.0)
}

/// Which integrability regime the singular exponent is in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularityCase {
    /// Variable `δ(x)` bounded by `δ* ≥ 1` near the boundary.
    VariableExponent { delta_star: f64 },
    /// Constant `δ ∈ (0, 1)`.
    ConstantSubUnit { delta: f64 },
    /// Constant `δ = 1`.
    ConstantUnit,
    /// Constant `δ > 1`.
    ConstantSuperUnit { delta: f64 },
}

impl RegularityCase {
    fn validate(&self) -> Result<(), AnalysisError> {
        match *self {
            RegularityCase::VariableExponent { delta_star } if !(delta_star >= 1.0) => Err(
                AnalysisError::InvalidCase(format!("delta_star must be >= 1, got {delta_star}")),
            ),
            RegularityCase::ConstantSubUnit { delta } if !(delta > 0.0 && delta < 1.0) => Err(
                AnalysisError::InvalidCase(format!("delta must lie in (0,1), got {delta}")),
            ),
            RegularityCase::ConstantSuperUnit { delta } if !(delta > 1.0) => Err(
                AnalysisError::InvalidCase(format!("delta must exceed 1, got {delta}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Source integrability `m` required by the existence theory for each case.
pub fn required_m(
    case: &RegularityCase,
    params: &crate::heisenberg::ModelParams,
) -> Result<f64, AnalysisError> {
    case.validate()?;
    let p = params.p();
    let ps = sobolev_exponent(params);
    Ok(match *case {
        RegularityCase::VariableExponent { delta_star } => {
            conjugate((delta_star + p - 1.0) * ps / (p * delta_star))
        }
        RegularityCase::ConstantSubUnit { delta } => conjugate(ps / (1.0 - delta)),
        RegularityCase::ConstantUnit | RegularityCase::ConstantSuperUnit { .. } => 1.0,
    })
}

/// Which dimension enters the variable-case exponent formula. The level-set
/// machinery on the group runs on the homogeneous dimension `Q`; the
/// topological variant is kept reproducible for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionConvention {
    Homogeneous,
    Topological,
}

/// Level-set exponent `γ = D(p-1)(m-1) / (m(D-sp) - D(m-1))` of the
/// variable case, with `D` picked by the convention.
pub fn variable_case_gamma(
    params: &crate::heisenberg::ModelParams,
    m: f64,
    convention: DimensionConvention,
) -> f64 {
    let d = match convention {
        DimensionConvention::Homogeneous => params.q(),
        DimensionConvention::Topological => (2 * params.n() + 1) as f64,
    };
    let p = params.p();
    d * (p - 1.0) * (m - 1.0) / (m * (d - params.s() * params.p()) - d * (m - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrability {
    LInfinity,
    Lt { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityPrediction {
    pub case: RegularityCase,
    pub m: f64,
    pub outcome: Integrability,
    /// Level-set exponent behind a finite prediction.
    pub gamma: Option<f64>,
}

/// Predicted integrability of the solution as a function of the source
/// integrability `m`.
///
/// `m > Q/(sp)` yields boundedness in every case; below that threshold
/// each case has its own admissible interval and level-set exponent. The
/// sub-unit constant case admits its left endpoint, where `γ = 1` and the
/// prediction collapses onto the critical exponent.
pub fn predicted_integrability(
    case: &RegularityCase,
    m: f64,
    params: &crate::heisenberg::ModelParams,
) -> Result<RegularityPrediction, AnalysisError> {
    case.validate()?;
    let p = params.p();
    let q = params.q();
    let sp = params.s() * p;
    let ps = sobolev_exponent(params);
    let linf_threshold = q / sp;
    if m > linf_threshold {
        return Ok(RegularityPrediction {
            case: *case,
            m,
            outcome: Integrability::LInfinity,
            gamma: None,
        });
    }
    let reject = |lo: f64| AnalysisError::OutsideInterval {
        m,
        lo,
        hi: linf_threshold,
    };
    let (gamma, t) = match *case {
        RegularityCase::VariableExponent { delta_star } => {
            let lo = q * (delta_star + p - 1.0) / (q * (p - 1.0) + delta_star * sp);
            if !(m >= lo && m < linf_threshold) {
                return Err(reject(lo));
            }
            let gamma = variable_case_gamma(params, m, DimensionConvention::Homogeneous);
            (gamma, conjugate(m) * gamma)
        }
        RegularityCase::ConstantSubUnit { delta } => {
            let lo = conjugate(ps / (1.0 - delta));
            if !(m >= lo && m < linf_threshold) {
                return Err(reject(lo));
            }
            let mp = conjugate(m);
            let gamma = (delta + p - 1.0) * mp / (p * mp - ps);
            (gamma, ps * gamma)
        }
        RegularityCase::ConstantUnit => {
            if !(m > 1.0 && m < linf_threshold) {
                return Err(reject(1.0));
            }
            let mp = conjugate(m);
            let gamma = p * mp / (p * mp - ps);
            (gamma, ps * gamma)
        }
        RegularityCase::ConstantSuperUnit { delta } => {
            if !(m > 1.0 && m < linf_threshold) {
                return Err(reject(1.0));
            }
            let mp = conjugate(m);
            let gamma = (delta + p - 1.0) * mp / (p * mp - ps);
            (gamma, ps * gamma)
        }
    };
    Ok(RegularityPrediction {
        case: *case,
        m,
        outcome: Integrability::Lt { t },
        gamma: Some(gamma),
    })
}

#[derive(Debug, Clone)]
pub struct TrendRecord {
    pub spacings: Vec<f64>,
    /// `L^t` norm (or interior maximum for the bounded case) per mesh.
    pub values: Vec<f64>,
    /// Last two values within five percent of each other.
    pub bounded: bool,
}

/// Discrete `L^t` norm over the interior.
pub fn lt_norm(u: &DiscreteField, t: f64) -> f64 {
    let mesh = u.mesh();
    let sum: f64 = mesh
        .interior_indices()
        .iter()
        .map(|&i| u.values()[i].abs().powf(t) * mesh.volumes()[i])
        .sum();
    sum.powf(1.0 / t)
}

/// Track the predicted norm across a refinement sequence and flag it
/// bounded when the last two values differ by under five percent.
pub fn empirical_lt_study(
    fields: &[DiscreteField],
    prediction: &RegularityPrediction,
) -> Result<TrendRecord, AnalysisError> {
    if fields.len() < 2 {
        return Err(AnalysisError::NeedsRefinements(fields.len()));
    }
    let spacings: Vec<f64> = fields.iter().map(|f| f.mesh().spacing()).collect();
    if spacings.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::NotRefining);
    }
    let values: Vec<f64> = fields
        .iter()
        .map(|u| match prediction.outcome {
            Integrability::LInfinity => u.max_interior().abs(),
            Integrability::Lt { t } => lt_norm(u, t),
        })
        .collect();
    let a = values[values.len() - 2];
    let b = values[values.len() - 1];
    let bounded = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE) < 0.05;
    Ok(TrendRecord {
        spacings,
        values,
        bounded,
    })
}

/// True when the exponent stays at or below `delta_star` on the boundary
/// strip of width `eps`; an empty strip passes vacuously.
pub fn boundary_exponent_bounded(
    delta: &SingularExponentField,
    eps: f64,
    delta_star: f64,
) -> Result<bool, crate::mesh::MeshError> {
    let mesh = delta.mesh();
    let strip = mesh.boundary_strip(eps)?;
    let mut slot_of = vec![usize::MAX; mesh.node_count()];
    for (k, &i) in mesh.interior_indices().iter().enumerate() {
        slot_of[i] = k;
    }
    Ok(strip.iter().all(|&i| delta.value(slot_of[i]) <= delta_star))
}

// ---------------------------------------------------------------------
// randomized inequality suites

#[derive(Debug, Clone, Copy)]
pub struct SuiteOutcome {
    pub samples: usize,
    pub violations: usize,
    /// Smallest observed margin; its meaning is per-suite (calibrated
    /// constant for the monotonicity suite, worst `lhs - rhs` otherwise).
    pub worst_margin: f64,
}

#[derive(Debug, Clone)]
pub struct LemmaSuiteReport {
    /// `(p, outcome)`; margin is the calibrated constant `C(p)`.
    pub odd_power_monotonicity: Vec<(f64, SuiteOutcome)>,
    /// `((p, q), outcome)` for the primitive inequality with `g(t) = t^q`.
    pub primitive_holder: Vec<((f64, f64), SuiteOutcome)>,
    /// `((q, eps), outcome)` for the power gap bound away from the origin.
    pub power_gap: Vec<((f64, f64), SuiteOutcome)>,
}

impl LemmaSuiteReport {
    pub fn all_passed(&self) -> bool {
        self.odd_power_monotonicity
            .iter()
            .all(|(_, o)| o.violations == 0)
            && self.primitive_holder.iter().all(|(_, o)| o.violations == 0)
            && self.power_gap.iter().all(|(_, o)| o.violations == 0)
    }
}

fn vector_j_p(x: &[f64], p: f64) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; x.len()];
    }
    let scale = norm.powf(p - 2.0);
    x.iter().map(|v| scale * v).collect()
}

/// Composite adaptive Simpson quadrature.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

const SUITE_BLOCK: usize = 4096;

fn run_blocks<F>(samples: usize, seed: u64, grid_tag: u64, body: F) -> SuiteOutcome
where
    F: Fn(&mut ChaCha8Rng, usize) -> (usize, f64) + Sync,
{
    let blocks = samples.div_ceil(SUITE_BLOCK);
    let partials: Vec<(usize, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ grid_tag.wrapping_mul(0x9e3779b97f4a7c15) ^ b as u64,
            );
            let count = SUITE_BLOCK.min(samples - b * SUITE_BLOCK);
            body(&mut rng, count)
        })
        .collect();
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for (v, w) in partials {
        violations += v;
        worst = worst.min(w);
    }
    SuiteOutcome {
        samples,
        violations,
        worst_margin: worst,
    }
}

/// Randomized verification of the three algebraic facts behind the
/// estimates: strong monotonicity of the odd power map, the primitive
/// inequality for increasing `g` (with the primitive integrated
/// numerically), and the power gap bound away from the origin.
pub fn lemma_suites(samples: usize, seed: u64) -> LemmaSuiteReport {
    let ps = [1.5f64, 2.0, 3.0];
    let qs = [1.5f64, 2.5];
    let epss = [0.1f64, 1.0];

    let odd_power_monotonicity = ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let outcome = run_blocks(samples, seed, 100 + pi as u64, |rng, count| {
                let mut violations = 0usize;
                let mut worst = f64::INFINITY;
                for s in 0..count {
                    let k = 1 + s % 3;
                    let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let y: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                    if nx + ny == 0.0 || d2 == 0.0 {
                        continue;
                    }
                    let jx = vector_j_p(&x, p);
                    let jy = vector_j_p(&y, p);
                    let lhs: f64 = jx
                        .iter()
                        .zip(&jy)
                        .zip(x.iter().zip(&y))
                        .map(|((a, b), (u, v))| (a - b) * (u - v))
                        .sum();
                    let ratio = lhs / ((nx + ny).powf(p - 2.0) * d2);
                    if !(ratio > 0.0) {
                        violations += 1;
                    }
                    worst = worst.min(ratio);
                }
                (violations, worst)
            });
            (p, outcome)
        })
        .collect();

    let mut primitive_holder = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        for (qi, &q) in qs.iter().enumerate() {
            let outcome = run_blocks(samples, seed, 200 + (pi * 8 + qi) as u64, |rng, count| {
                // g'(s)^{1/p} = q^{1/p} s^{(q-1)/p}
                let scale = q.powf(1.0 / p);
                let alpha = (q - 1.0) / p;
                let integrand = move |s: f64| scale * s.powf(alpha);
                let mut violations = 0usize;
                let mut worst = f64::INFINITY;
                for _ in 0..count {
                    let a: f64 = rng.gen_range(0.0..3.0);
                    let b: f64 = rng.gen_range(0.0..3.0);
                    let lhs = crate::operator::j_p(a - b, p) * (a.powf(q) - b.powf(q));
                    let dg = adaptive_simpson(&integrand, b, a, 1e-11);
                    let rhs = dg.abs().powf(p);
                    let margin = lhs - rhs;
                    if margin < -(1e-10 + 1e-9 * rhs.abs()) {
                        violations += 1;
                    }
                    worst = worst.min(margin);
                }
                (violations, worst)
            });
            primitive_holder.push(((p, q), outcome));
        }
    }

    let mut power_gap = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        for (ei, &eps) in epss.iter().enumerate() {
            let outcome = run_blocks(samples, seed, 300 + (qi * 8 + ei) as u64, |rng, count| {
                let mut violations = 0usize;
                let mut worst = f64::INFINITY;
                for _ in 0..count {
                    // a point of {x >= eps, y >= 0} or its mirror
                    let (x, y): (f64, f64) = if rng.gen_bool(0.5) {
                        (rng.gen_range(eps..eps + 3.0), rng.gen_range(0.0..eps + 3.0))
                    } else {
                        (rng.gen_range(0.0..eps + 3.0), rng.gen_range(eps..eps + 3.0))
                    };
                    let lhs = (x.powf(q) - y.powf(q)).abs();
                    let rhs = eps.powf(q - 1.0) * (x - y).abs();
                    let margin = lhs - rhs;
                    if margin < -1e-10 * rhs.max(1.0) {
                        violations += 1;
                    }
                    worst = worst.min(margin);
                }
                (violations, worst)
            });
            power_gap.push(((q, eps), outcome));
        }
    }

    LemmaSuiteReport {
        odd_power_monotonicity,
        primitive_holder,
        power_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::ModelParams;
    use crate::mesh::{build_mesh, DomainSpec};
    use std::sync::Arc;

    fn params() -> ModelParams {
        ModelParams::new(1, 0.5, 2.0).unwrap()
    }

    #[test]
    fn critical_exponent_values() {
        let p = params();
        assert!((sobolev_exponent(&p) - 8.0 / 3.0).abs() < 1e-15);
        // s -> 0 sends the critical exponent to p
        let near_zero = ModelParams::new(1, 1e-9, 2.0).unwrap();
        assert!((sobolev_exponent(&near_zero) - 2.0).abs() < 1e-8);
        // sp close to Q blows up
        let near_critical = ModelParams::new(1, 0.999, 3.99).unwrap();
        assert!(sobolev_exponent(&near_critical) > 1e2);
    }

    #[test]
    fn required_m_worked_values() {
        let p = params();
        let m = required_m(&RegularityCase::ConstantSubUnit { delta: 0.5 }, &p).unwrap();
        assert!((m - 16.0 / 13.0).abs() < 1e-14);
        assert_eq!(required_m(&RegularityCase::ConstantUnit, &p).unwrap(), 1.0);
        assert_eq!(
            required_m(&RegularityCase::ConstantSuperUnit { delta: 2.0 }, &p).unwrap(),
            1.0
        );
        // delta_star = 1, p = 2 collapses onto the conjugate critical
        // exponent
        let mv = required_m(&RegularityCase::VariableExponent { delta_star: 1.0 }, &p).unwrap();
        assert!((mv - conjugate(sobolev_exponent(&p))).abs() < 1e-14);
        assert!(required_m(&RegularityCase::ConstantSubUnit { delta: 1.5 }, &p).is_err());
        assert!(required_m(&RegularityCase::VariableExponent { delta_star: 0.5 }, &p).is_err());
    }

    #[test]
    fn prediction_worked_values() {
        let p = params();
        // delta = 1, m = 1.5: gamma = 1.8, t = 4.8
        let pred = predicted_integrability(&RegularityCase::ConstantUnit, 1.5, &p).unwrap();
        assert!((pred.gamma.unwrap() - 1.8).abs() < 1e-14);
        match pred.outcome {
            Integrability::Lt { t } => assert!((t - 4.8).abs() < 1e-13),
            _ => panic!("expected finite integrability"),
        }
        // the boundedness threshold sits at Q/(sp) = 4
        assert!(matches!(
            predicted_integrability(&RegularityCase::ConstantUnit, 5.0, &p)
                .unwrap()
                .outcome,
            Integrability::LInfinity
        ));
        assert!(matches!(
            predicted_integrability(&RegularityCase::ConstantUnit, 3.0, &p)
                .unwrap()
                .outcome,
            Integrability::Lt { .. }
        ));
        assert!(predicted_integrability(&RegularityCase::ConstantUnit, 4.0, &p).is_err());
    }

    #[test]
    fn sub_unit_endpoint_consistency() {
        // at m = (p_s*/(1-delta))' exactly, gamma = 1 and t = p_s*
        let p = params();
        let delta = 0.5;
        let m = required_m(&RegularityCase::ConstantSubUnit { delta }, &p).unwrap();
        let pred =
            predicted_integrability(&RegularityCase::ConstantSubUnit { delta }, m, &p).unwrap();
        assert!((pred.gamma.unwrap() - 1.0).abs() < 1e-12);
        match pred.outcome {
            Integrability::Lt { t } => {
                assert!((t - sobolev_exponent(&p)).abs() < 1e-12)
            }
            _ => panic!("expected finite integrability"),
        }
    }

    #[test]
    fn variable_lower_endpoint_gives_delta_star() {
        let p = params();
        for delta_star in [1.0, 2.0, 3.0] {
            let q = p.q();
            let sp = p.s() * p.p();
            let lo = q * (delta_star + p.p() - 1.0) / (q * (p.p() - 1.0) + delta_star * sp);
            let gamma = variable_case_gamma(&p, lo, DimensionConvention::Homogeneous);
            assert!(
                (gamma - delta_star).abs() < 1e-12,
                "delta_star={delta_star}: gamma={gamma}"
            );
            let pred =
                predicted_integrability(&RegularityCase::VariableExponent { delta_star }, lo, &p)
                    .unwrap();
            assert!((pred.gamma.unwrap() - delta_star).abs() < 1e-12);
        }
        // the printed topological variant stays available
        let g_top = variable_case_gamma(&p, 1.6, DimensionConvention::Topological);
        let g_hom = variable_case_gamma(&p, 1.6, DimensionConvention::Homogeneous);
        assert!(g_top != g_hom);
    }

    #[test]
    fn lt_norm_nesting() {
        let spec = DomainSpec::CoordinateBox {
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        };
        let mesh = Arc::new(build_mesh(&spec, 0.5, 0.5, 100_000).unwrap());
        // constant field: L^t norm is c |Omega_h|^{1/t}
        let c = 0.7;
        let vals = vec![c; mesh.interior_count()];
        let u = DiscreteField::from_interior(Arc::clone(&mesh), &vals).unwrap();
        let vol = mesh.interior_volume();
        for t in [1.0, 2.0, 4.8] {
            assert!((lt_norm(&u, t) - c * vol.powf(1.0 / t)).abs() < 1e-12);
        }
        // Hoelder nesting on the discrete measure
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..mesh.interior_count())
            .map(|_| rng.gen_range(0.0..2.0))
            .collect();
        let w = DiscreteField::from_interior(Arc::clone(&mesh), &vals).unwrap();
        let (t1, t2) = (2.0, 4.0);
        let lhs = lt_norm(&w, t2);
        let rhs = lt_norm(&w, t1) * vol.powf(1.0 / t2 - 1.0 / t1);
        assert!(lhs >= rhs - 1e-12);
    }

    #[test]
    fn empirical_study_contract() {
        let spec = DomainSpec::CoordinateBox {
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        };
        let coarse = Arc::new(build_mesh(&spec, 0.5, 0.5, 100_000).unwrap());
        let fine = Arc::new(build_mesh(&spec, 0.25, 0.5, 200_000).unwrap());
        let mk = |mesh: &Arc<crate::mesh::Mesh>, c: f64| {
            let vals = vec![c; mesh.interior_count()];
            DiscreteField::from_interior(Arc::clone(mesh), &vals).unwrap()
        };
        let pred = RegularityPrediction {
            case: RegularityCase::ConstantUnit,
            m: 5.0,
            outcome: Integrability::LInfinity,
            gamma: None,
        };
        let rec = empirical_lt_study(&[mk(&coarse, 1.0), mk(&fine, 1.02)], &pred).unwrap();
        assert!(rec.bounded);
        let rec2 = empirical_lt_study(&[mk(&coarse, 1.0), mk(&fine, 1.2)], &pred).unwrap();
        assert!(!rec2.bounded);
        assert!(matches!(
            empirical_lt_study(&[mk(&coarse, 1.0)], &pred),
            Err(AnalysisError::NeedsRefinements(1))
        ));
        assert!(matches!(
            empirical_lt_study(&[mk(&fine, 1.0), mk(&coarse, 1.0)], &pred),
            Err(AnalysisError::NotRefining)
        ));
    }

    #[test]
    fn boundary_exponent_bound_checks() {
        let spec = DomainSpec::CoordinateBox {
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        };
        let mesh = Arc::new(build_mesh(&spec, 0.25, 0.5, 200_000).unwrap());
        let flat = SingularExponentField::constant(Arc::clone(&mesh), 0.5, 0.3, 1.0).unwrap();
        assert!(boundary_exponent_bounded(&flat, 0.3, 1.0).unwrap());
        let big = SingularExponentField::constant(Arc::clone(&mesh), 2.0, 0.3, 1.5).unwrap();
        assert!(!boundary_exponent_bounded(&big, 0.3, 1.5).unwrap());
        // large delta only deep inside passes: the strip sees small values
        let vals: Vec<f64> = mesh
            .interior_indices()
            .iter()
            .map(|&i| {
                let d = mesh.spec().boundary_distance(&mesh.nodes()[i]);
                if d >= 0.5 {
                    3.0
                } else {
                    0.5
                }
            })
            .collect();
        let mixed =
            SingularExponentField::from_interior_values(Arc::clone(&mesh), vals, 0.3, 1.0).unwrap();
        assert!(boundary_exponent_bounded(&mixed, 0.3, 1.0).unwrap());
        assert!(!boundary_exponent_bounded(&mixed, 0.8, 1.0).unwrap());
    }

    #[test]
    fn quadrature_against_closed_form() {
        // integral of (q s^{q-1})^{1/p} has the closed form
        // q^{1/p} p/(q-1+p) t^{(q-1+p)/p}
        for (p, q) in [(1.5f64, 1.5f64), (2.0, 2.5), (3.0, 1.5)] {
            let integrand = |s: f64| (q * s.powf(q - 1.0)).powf(1.0 / p);
            for t in [0.3f64, 1.0, 2.7] {
                let exact = q.powf(1.0 / p) * p / (q - 1.0 + p) * t.powf((q - 1.0 + p) / p);
                let got = adaptive_simpson(&integrand, 0.0, t, 1e-12);
                assert!(
                    (got - exact).abs() < 1e-9 * exact.max(1.0),
                    "p={p} q={q} t={t}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn suites_pass_at_small_scale() {
        let report = lemma_suites(2000, 0);
        assert!(report.all_passed());
        // p = 2 monotonicity gap is an identity with constant one
        let (_, o2) = report
            .odd_power_monotonicity
            .iter()
            .find(|(p, _)| *p == 2.0)
            .unwrap();
        assert!((o2.worst_margin - 1.0).abs() < 1e-12);
        // calibrated constants are strictly positive in every case
        for (_, o) in &report.odd_power_monotonicity {
            assert!(o.worst_margin > 0.0);
        }
    }

    #[test]
    fn suite_edge_cases() {
        // power gap equality edge x = eps, y = 0
        for (q, eps) in [(1.5, 0.1), (2.5, 1.0), (3.0, 0.5)] {
            let lhs = (eps_pow(eps, q) - 0.0).abs();
            let rhs = eps_pow(eps, q - 1.0) * eps;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
        // primitive inequality degenerates to 0 = 0 at a = b
        let p = 2.0;
        let q = 1.5;
        let integrand = |s: f64| (q * s.powf(q - 1.0)).powf(1.0 / p);
        assert_eq!(adaptive_simpson(&integrand, 1.3, 1.3, 1e-12), 0.0);
        fn eps_pow(e: f64, q: f64) -> f64 {
            e.powf(q)
        }
    }

    #[test]
    fn suites_deterministic() {
        let a = lemma_suites(5000, 42);
        let b = lemma_suites(5000, 42);
        for ((_, x), (_, y)) in a
            .odd_power_monotonicity
            .iter()
            .zip(&b.odd_power_monotonicity)
        {
            assert_eq!(x.worst_margin.to_bits(), y.worst_margin.to_bits());
        }
        for ((_, x), (_, y)) in a.primitive_holder.iter().zip(&b.primitive_holder) {
            assert_eq!(x.worst_margin.to_bits(), y.worst_margin.to_bits());
        }
    }
}
