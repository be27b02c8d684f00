use geoconvex::{Euclidean, Hyperbolic, HyperbolicPoint, Manifold, Spd, SpdPoint};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KAPPAS: [f64; 3] = [-0.25, -1.0, -4.0];

fn hyp_point(m: &Hyperbolic, spatial: &[f64]) -> HyperbolicPoint {
    m.point_from_spatial(DVector::from_column_slice(spatial))
        .unwrap()
}

fn coords_close(a: &HyperbolicPoint, b: &HyperbolicPoint, tol: f64) -> bool {
    let scale = 1.0 + a.coords().amax();
    (a.coords() - b.coords()).amax() <= tol * scale
}

fn spd_from(entries: &[f64], n: usize) -> SpdPoint {
    let g = DMatrix::from_column_slice(n, n, &entries[..n * n]);
    SpdPoint::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
}

fn sym(entries: &[f64], n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_column_slice(n, n, &entries[..n * n]);
    (&a + a.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn hyperbolic_log_exp_round_trip(
        k in 0usize..3,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let m = Hyperbolic::new(3, KAPPAS[k]).unwrap();
        let (x, y) = (hyp_point(&m, &x), hyp_point(&m, &y));
        let v = m.log_map(&x, &y).unwrap();
        let back = m.exp_map(&x, &v).unwrap();
        prop_assert!(coords_close(&back, &y, 1e-9));
        let d = m.distance(&x, &y).unwrap();
        prop_assert!((m.norm(&x, &v).unwrap() - d).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn hyperbolic_transport_is_isometry(
        k in 0usize..3,
        x in prop::collection::vec(-2.0f64..2.0, 3),
        y in prop::collection::vec(-2.0f64..2.0, 3),
        seed in any::<u64>(),
    ) {
        let m = Hyperbolic::new(3, KAPPAS[k]).unwrap();
        let (x, y) = (hyp_point(&m, &x), hyp_point(&m, &y));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = m.random_tangent(&x, &mut rng);
        let v = m.random_tangent(&x, &mut rng);
        let pu = m.parallel_transport(&x, &y, &u).unwrap();
        let pv = m.parallel_transport(&x, &y, &v).unwrap();
        let before = m.inner(&x, &u, &v).unwrap();
        let after = m.inner(&y, &pu, &pv).unwrap();
        let scale = m.norm(&x, &u).unwrap() * m.norm(&x, &v).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * (1.0 + scale));
        prop_assert!(m.orthogonality_residual(&pu) <= 1e-10);
    }

    #[test]
    fn euclidean_maps_are_exact(
        x in prop::collection::vec(-10.0f64..10.0, 4),
        y in prop::collection::vec(-10.0f64..10.0, 4),
    ) {
        let m = Euclidean::new(4);
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let v = m.log_map(&x, &y).unwrap();
        prop_assert_eq!(&v.components, &(&y - &x));
        let back = m.exp_map(&x, &v).unwrap();
        prop_assert!((back - &y).amax() <= 1e-14 * (1.0 + y.amax()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn spd_log_exp_round_trip_and_symmetry(
        a in prop::collection::vec(-1.5f64..1.5, 9),
        b in prop::collection::vec(-1.5f64..1.5, 9),
    ) {
        let m = Spd::new(3);
        let (x, y) = (spd_from(&a, 3), spd_from(&b, 3));
        let v = m.log_map(&x, &y).unwrap();
        prop_assert_eq!(&v.components, &v.components.transpose());
        let back = m.exp_map(&x, &v).unwrap();
        prop_assert_eq!(back.matrix(), &back.matrix().transpose());
        let err = (back.matrix() - y.matrix()).amax() / y.matrix().amax();
        prop_assert!(err <= 1e-9, "round trip error {err:e}");
        let d = m.distance(&x, &y).unwrap();
        prop_assert!((m.norm(&x, &v).unwrap() - d).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn spd_transport_is_isometry(
        a in prop::collection::vec(-1.5f64..1.5, 9),
        b in prop::collection::vec(-1.5f64..1.5, 9),
        u in prop::collection::vec(-1.0f64..1.0, 9),
        w in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let m = Spd::new(3);
        let (x, y) = (spd_from(&a, 3), spd_from(&b, 3));
        let u = m.tangent(&x, sym(&u, 3)).unwrap();
        let w = m.tangent(&x, sym(&w, 3)).unwrap();
        let pu = m.parallel_transport(&x, &y, &u).unwrap();
        let pw = m.parallel_transport(&x, &y, &w).unwrap();
        prop_assert_eq!(&pu.components, &pu.components.transpose());
        let before = m.inner(&x, &u, &w).unwrap();
        let after = m.inner(&y, &pu, &pw).unwrap();
        let scale = m.norm(&x, &u).unwrap() * m.norm(&x, &w).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * (1.0 + scale));
    }

    #[test]
    fn spd_distance_is_congruence_invariant(
        a in prop::collection::vec(-1.5f64..1.5, 9),
        b in prop::collection::vec(-1.5f64..1.5, 9),
        g in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let m = Spd::new(3);
        let (x, y) = (spd_from(&a, 3), spd_from(&b, 3));
        let g = DMatrix::from_column_slice(3, 3, &g) + DMatrix::identity(3, 3) * 2.0;
        let cx = SpdPoint::new(&g * x.matrix() * g.transpose()).unwrap();
        let cy = SpdPoint::new(&g * y.matrix() * g.transpose()).unwrap();
        let d = m.distance(&x, &y).unwrap();
        prop_assert!((m.distance(&cx, &cy).unwrap() - d).abs() <= 1e-8 * (1.0 + d));
    }
}

#[test]
fn hyperboloid_chains_do_not_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (c, &kappa) in KAPPAS.iter().cycle().take(1_000).enumerate() {
        let m = Hyperbolic::new(4, kappa).unwrap();
        let mut x = m.origin();
        for _ in 0..100 {
            let v = m.random_tangent(&x, &mut rng);
            let len = m.norm(&x, &v).unwrap();
            // Unit-length steps in units of the curvature radius keep the walk bounded.
            let step = m.scale(&v, 1.0 / (len * (-kappa).sqrt()));
            let next = m.exp_map(&x, &step).unwrap();
            let back = m.exp_map(&next, &m.log_map(&next, &x).unwrap()).unwrap();
            assert!(coords_close(&back, &x, 1e-10), "chain {c}");
            // Coordinates grow like e^(d/R), and so does the rounding in differences
            // of them; walks restart before that swamps the tolerance.
            x = if m.distance(&next, &m.origin()).unwrap() > 5.0 / (-kappa).sqrt() {
                m.origin()
            } else {
                next
            };
            assert!(m.constraint_residual(&x) <= 1e-12, "chain {c}");
        }
    }
}

#[test]
fn geodesic_distance_along_an_axis() {
    let m = Hyperbolic::new(2, -1.0).unwrap();
    let x = hyp_point(&m, &[1.0f64.sinh(), 0.0]);
    let d = m.distance(&m.origin(), &x).unwrap();
    assert!((d - 1.0).abs() < 1e-14);
}
