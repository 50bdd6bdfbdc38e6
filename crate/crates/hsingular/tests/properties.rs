//! Property tests for the algebra the solver leans on.

use hsingular::heisenberg::{compose, dilate, inverse, koranyi_norm, GroupPoint, ModelParams};
use hsingular::mesh::{build_mesh, DomainSpec};
use hsingular::operator::{assemble, energy_seminorm_p, j_p, DiscreteField};
use hsingular::solver::{regularized_nonlinearity, regularized_primitive};
use proptest::prelude::*;
use std::sync::Arc;

fn group_point() -> impl Strategy<Value = GroupPoint> {
    (-3.0f64..3.0, -3.0f64..3.0, -9.0f64..9.0)
        .prop_map(|(x, y, t)| GroupPoint::new(vec![x], vec![y], t))
}

proptest! {
    /// The odd power is odd and recovers `t` at p = 2.
    #[test]
    fn odd_power_symmetry(t in -10.0f64..10.0, p in 1.1f64..4.0) {
        prop_assert!((j_p(-t, p) + j_p(t, p)).abs() <= 1e-12 * j_p(t, p).abs());
        prop_assert_eq!(j_p(t, 2.0), t);
    }

    /// Norm homogeneity and inverse symmetry on random points.
    #[test]
    fn koranyi_norm_properties(xi in group_point(), lam in 0.05f64..10.0) {
        let scaled = koranyi_norm(&dilate(lam, &xi).unwrap());
        let expect = lam * koranyi_norm(&xi);
        prop_assert!((scaled - expect).abs() <= 1e-12 * expect.max(1.0));
        prop_assert_eq!(koranyi_norm(&inverse(&xi)), koranyi_norm(&xi));
    }

    /// Group composition against its inverse lands on the origin.
    #[test]
    fn composition_cancels(a in group_point(), b in group_point()) {
        let d = compose(&compose(&a, &b).unwrap(), &inverse(&b)).unwrap();
        prop_assert!((d.t - a.t).abs() <= 1e-10 * a.t.abs().max(1.0));
        prop_assert!((d.x[0] - a.x[0]).abs() <= 1e-12 * a.x[0].abs().max(1.0));
        prop_assert!((d.y[0] - a.y[0]).abs() <= 1e-12 * a.y[0].abs().max(1.0));
    }

    /// The regularized primitive's slope matches the regularized
    /// nonlinearity everywhere, including across the kink at zero.
    #[test]
    fn primitive_slope(t in -2.0f64..2.0, n in 1u64..64, delta in prop::sample::select(vec![0.25, 0.5, 1.0, 1.5, 2.0])) {
        let h = 1e-6;
        let fd = (regularized_primitive(t + h, n, delta) - regularized_primitive(t - h, n, delta)) / (2.0 * h);
        // central differences straddling the kink average the two slopes
        let expect = 0.5 * (regularized_nonlinearity(t + h, n, delta) + regularized_nonlinearity(t - h, n, delta));
        prop_assert!((fd - expect).abs() <= 1e-4 * expect.max(1.0), "fd {} vs {}", fd, expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// p-homogeneity of the discrete energy under field scaling.
    #[test]
    fn energy_scales_with_power_p(
        lam in -3.0f64..3.0,
        p in prop::sample::select(vec![1.5, 2.0, 3.0]),
        seed in 0u64..32,
    ) {
        let spec = DomainSpec::CoordinateBox {
            bounds: vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        };
        let mesh = Arc::new(build_mesh(&spec, 0.8, 0.45, 10_000).unwrap());
        let graph = assemble(Arc::clone(&mesh), ModelParams::new(1, 0.5, p).unwrap()).unwrap();
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..mesh.interior_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = DiscreteField::from_interior(Arc::clone(&mesh), &vals).unwrap();
        let scaled = DiscreteField::from_values(
            Arc::clone(&mesh),
            u.values().iter().map(|v| lam * v).collect(),
        ).unwrap();
        let e = energy_seminorm_p(&graph, &u).unwrap();
        let es = energy_seminorm_p(&graph, &scaled).unwrap();
        let expect = lam.abs().powf(p) * e;
        prop_assert!((es - expect).abs() <= 1e-11 * expect.max(1e-12));
    }
}
