//! Heisenberg group arithmetic, the Korányi norm, and the singular kernel.
//!
//! Points of `H^N` live in exponential coordinates `(x, y, t)` with
//! `x, y ∈ R^N` and `t ∈ R`. The group law is
//!
//! ```text
//! (x, y, t) ∘ (x', y', t') = (x + x', y + y', t + t' + 2⟨y, x'⟩ − 2⟨x, y'⟩)
//! ```
//!
//! and the anisotropic dilations are `δ_λ(x, y, t) = (λx, λy, λ²t)`.
//! In these coordinates Haar measure equals Lebesgue measure on
//! `R^{2N+1}`, so mesh cell volumes need no metric correction.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("dimension mismatch: lhs has N={lhs}, rhs has N={rhs}")]
    DimensionMismatch { lhs: usize, rhs: usize },
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("kernel evaluated at coincident points (distance {0})")]
    CoincidentPoints(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("N must be at least 1")]
    ZeroDimension,
    #[error("s must lie in (0,1), got {0}")]
    InvalidS(f64),
    #[error("p must lie in (1,inf), got {0}")]
    InvalidP(f64),
    #[error("sp < Q violated ({sp} >= {q})")]
    SupercriticalOrder { sp: f64, q: f64 },
}

/// A point of `H^N` in exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Self {
        assert_eq!(x.len(), y.len(), "x and y must have equal length");
        GroupPoint { x, y, t }
    }

    /// The identity element (origin) of `H^N`.
    pub fn origin(n: usize) -> Self {
        GroupPoint {
            x: vec![0.0; n],
            y: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.iter().all(|v| v.is_finite())
            && self.y.iter().all(|v| v.is_finite())
    }
}

/// Problem-wide exponents: dimension `N`, homogeneous dimension `Q = 2N + 2`,
/// fractional order `s` and integrability `p`, subject to `sp < Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    q: u32,
    s: f64,
    p: f64,
}

impl ModelParams {
    pub fn new(n: usize, s: f64, p: f64) -> Result<Self, ParamsError> {
        if n == 0 {
            return Err(ParamsError::ZeroDimension);
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(ParamsError::InvalidS(s));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(ParamsError::InvalidP(p));
        }
        let q = (2 * n + 2) as u32;
        if s * p >= f64::from(q) {
            return Err(ParamsError::SupercriticalOrder {
                sp: s * p,
                q: f64::from(q),
            });
        }
        Ok(ModelParams { n, q, s, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2N + 2`.
    pub fn q(&self) -> f64 {
        f64::from(self.q)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Kernel decay exponent `Q + sp`.
    pub fn kernel_exponent(&self) -> f64 {
        self.q() + self.s * self.p
    }
}

fn check_dims(a: &GroupPoint, b: &GroupPoint) -> Result<(), GroupError> {
    if a.dim() != b.dim() {
        return Err(GroupError::DimensionMismatch {
            lhs: a.dim(),
            rhs: b.dim(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Group law `a ∘ b`.
pub fn compose(a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint, GroupError> {
    check_dims(a, b)?;
    let x = a.x.iter().zip(&b.x).map(|(u, v)| u + v).collect();
    let y = a.y.iter().zip(&b.y).map(|(u, v)| u + v).collect();
    let t = a.t + b.t + 2.0 * dot(&a.y, &b.x) - 2.0 * dot(&a.x, &b.y);
    Ok(GroupPoint { x, y, t })
}

/// Group inverse: componentwise negation.
pub fn inverse(a: &GroupPoint) -> GroupPoint {
    GroupPoint {
        x: a.x.iter().map(|v| -v).collect(),
        y: a.y.iter().map(|v| -v).collect(),
        t: -a.t,
    }
}

/// Anisotropic dilation `δ_λ(x, y, t) = (λx, λy, λ²t)`, `λ > 0`.
pub fn dilate(lambda: f64, a: &GroupPoint) -> Result<GroupPoint, GroupError> {
    if !(lambda > 0.0) {
        return Err(GroupError::NonPositiveDilation(lambda));
    }
    Ok(GroupPoint {
        x: a.x.iter().map(|v| lambda * v).collect(),
        y: a.y.iter().map(|v| lambda * v).collect(),
        t: lambda * lambda * a.t,
    })
}

/// Korányi norm `((|x|² + |y|²)² + t²)^{1/4}`.
pub fn koranyi_norm(a: &GroupPoint) -> f64 {
    let r2 = dot(&a.x, &a.x) + dot(&a.y, &a.y);
    (r2 * r2 + a.t * a.t).sqrt().sqrt()
}

/// Left-invariant pseudometric `d(a, b) = |b^{-1} ∘ a|` in the Korányi norm.
pub fn distance(a: &GroupPoint, b: &GroupPoint) -> Result<f64, GroupError> {
    Ok(koranyi_norm(&compose(&inverse(b), a)?))
}

/// Singular interaction kernel `d(a, b)^{-(Q + sp)}`.
///
/// Coincident points signal a mesh-construction bug and are rejected.
pub fn kernel(a: &GroupPoint, b: &GroupPoint, params: &ModelParams) -> Result<f64, GroupError> {
    let d = distance(a, b)?;
    if d <= 0.0 {
        return Err(GroupError::CoincidentPoints(d));
    }
    Ok(d.powf(-params.kernel_exponent()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn p1(x: f64, y: f64, t: f64) -> GroupPoint {
        GroupPoint::new(vec![x], vec![y], t)
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize) -> GroupPoint {
        GroupPoint {
            x: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            y: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            t: rng.gen_range(-4.0..4.0),
        }
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    fn points_close(a: &GroupPoint, b: &GroupPoint, tol: f64) -> bool {
        a.x.iter().zip(&b.x).all(|(u, v)| rel_close(*u, *v, tol))
            && a.y.iter().zip(&b.y).all(|(u, v)| rel_close(*u, *v, tol))
            && rel_close(a.t, b.t, tol)
    }

    #[test]
    fn compose_identity() {
        let e = GroupPoint::origin(1);
        let xi = p1(0.3, -0.7, 1.1);
        assert_eq!(compose(&e, &xi).unwrap(), xi);
        assert_eq!(compose(&xi, &e).unwrap(), xi);
    }

    #[test]
    fn compose_worked_value() {
        let a = p1(1.0, 0.0, 0.0);
        let b = p1(0.0, 1.0, 0.0);
        assert_eq!(compose(&a, &b).unwrap(), p1(1.0, 1.0, -2.0));
    }

    #[test]
    fn compose_with_negation_gives_origin() {
        let a = p1(1.0, 0.0, 0.0);
        let b = p1(-1.0, 0.0, 0.0);
        assert_eq!(compose(&a, &b).unwrap(), GroupPoint::origin(1));
    }

    #[test]
    fn noncommutativity_witness() {
        let a = p1(1.0, 0.0, 0.0);
        let b = p1(0.0, 1.0, 0.0);
        let ab = compose(&a, &b).unwrap();
        let ba = compose(&b, &a).unwrap();
        assert_ne!(ab, ba);
        assert_eq!(ba.t, 2.0);
    }

    #[test]
    fn compose_dimension_mismatch() {
        let a = GroupPoint::origin(1);
        let b = GroupPoint::origin(2);
        assert!(matches!(
            compose(&a, &b),
            Err(GroupError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(&GroupPoint::origin(1)), GroupPoint::origin(1));
        assert_eq!(inverse(&p1(1.0, 2.0, 3.0)), p1(-1.0, -2.0, -3.0));
    }

    #[test]
    fn dilate_examples() {
        let xi = p1(0.5, -1.5, 2.0);
        assert_eq!(dilate(1.0, &xi).unwrap(), xi);
        assert_eq!(dilate(2.0, &p1(1.0, 1.0, 1.0)).unwrap(), p1(2.0, 2.0, 4.0));
        assert!(matches!(
            dilate(0.0, &xi),
            Err(GroupError::NonPositiveDilation(_))
        ));
        assert!(matches!(
            dilate(-1.0, &xi),
            Err(GroupError::NonPositiveDilation(_))
        ));
    }

    #[test]
    fn koranyi_worked_values() {
        assert_eq!(koranyi_norm(&GroupPoint::origin(1)), 0.0);
        assert_eq!(koranyi_norm(&p1(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(koranyi_norm(&p1(0.0, 0.0, 1.0)), 1.0);
    }

    #[test]
    fn norm_symmetric_under_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let xi = random_point(&mut rng, 2);
            // negation leaves both squared terms unchanged, so this is exact
            assert_eq!(koranyi_norm(&inverse(&xi)), koranyi_norm(&xi));
        }
    }

    #[test]
    fn group_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let a = random_point(&mut rng, 1);
            let b = random_point(&mut rng, 1);
            let c = random_point(&mut rng, 1);
            let ab_c = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let a_bc = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            assert!(points_close(&ab_c, &a_bc, 1e-12), "{ab_c:?} vs {a_bc:?}");
            let e = compose(&inverse(&a), &a).unwrap();
            assert!(points_close(&e, &GroupPoint::origin(1), 1e-12));
        }
    }

    #[test]
    fn dilation_one_parameter_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let xi = random_point(&mut rng, 1);
            let l = rng.gen_range(0.1..3.0);
            let m = rng.gen_range(0.1..3.0);
            let lhs = dilate(l, &dilate(m, &xi).unwrap()).unwrap();
            let rhs = dilate(l * m, &xi).unwrap();
            assert!(points_close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn norm_homogeneous_under_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let xi = random_point(&mut rng, 1);
            let l = rng.gen_range(0.1..5.0);
            let lhs = koranyi_norm(&dilate(l, &xi).unwrap());
            let rhs = l * koranyi_norm(&xi);
            assert!(rel_close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn distance_left_invariant_and_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10_000 {
            let g = random_point(&mut rng, 1);
            let a = random_point(&mut rng, 1);
            let b = random_point(&mut rng, 1);
            let d = distance(&a, &b).unwrap();
            let d_shift = distance(&compose(&g, &a).unwrap(), &compose(&g, &b).unwrap()).unwrap();
            assert!(rel_close(d, d_shift, 1e-12), "{d} vs {d_shift}");
            let l = rng.gen_range(0.1..4.0);
            let d_dil = distance(&dilate(l, &a).unwrap(), &dilate(l, &b).unwrap()).unwrap();
            assert!(rel_close(d_dil, l * d, 1e-12), "{d_dil} vs {}", l * d);
        }
        let a = random_point(&mut rng, 1);
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn kernel_worked_values() {
        let params = ModelParams::new(1, 0.5, 2.0).unwrap();
        assert_eq!(params.kernel_exponent(), 5.0);
        // distance 1 -> kernel 1 regardless of the exponent
        let a = p1(1.0, 0.0, 0.0);
        let o = GroupPoint::origin(1);
        assert_eq!(kernel(&a, &o, &params).unwrap(), 1.0);
        // distance 2 -> 2^{-5}
        let b = p1(2.0, 0.0, 0.0);
        assert_eq!(kernel(&b, &o, &params).unwrap(), 0.03125);
        // symmetry
        let c = p1(0.3, -0.2, 0.9);
        let d = p1(-1.1, 0.4, 0.1);
        let kcd = kernel(&c, &d, &params).unwrap();
        let kdc = kernel(&d, &c, &params).unwrap();
        assert!(rel_close(kcd, kdc, 1e-12));
        // coincident points rejected
        assert!(matches!(
            kernel(&c, &c, &params),
            Err(GroupError::CoincidentPoints(_))
        ));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 0.5, 2.0).is_ok());
        assert!(matches!(
            ModelParams::new(0, 0.5, 2.0),
            Err(ParamsError::ZeroDimension)
        ));
        assert!(matches!(
            ModelParams::new(1, 1.2, 2.0),
            Err(ParamsError::InvalidS(_))
        ));
        assert!(matches!(
            ModelParams::new(1, 0.5, 1.0),
            Err(ParamsError::InvalidP(_))
        ));
        // sp = 4.5 >= Q = 4
        assert!(matches!(
            ModelParams::new(1, 0.9, 5.0),
            Err(ParamsError::SupercriticalOrder { .. })
        ));
        let p = ModelParams::new(2, 0.5, 3.0).unwrap();
        assert_eq!(p.q(), 6.0);
    }
}
