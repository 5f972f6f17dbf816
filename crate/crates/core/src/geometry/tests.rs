use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

const S2: Manifold = Manifold::Sphere { dim: 2 };
const H2: Manifold = Manifold::Hyperbolic { dim: 2 };
const R2: Manifold = Manifold::Euclidean { dim: 2 };
const SPD2: Manifold = Manifold::Spd { n: 2 };
const SPD3: Manifold = Manifold::Spd { n: 3 };

fn all_backends() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean { dim: 3 },
        Manifold::Sphere { dim: 3 },
        Manifold::Hyperbolic { dim: 3 },
        SPD3,
    ]
}

fn pt(m: Manifold, c: &[f64]) -> Point {
    m.point(c.to_vec()).unwrap()
}

fn assert_point_invariants(p: &Point) {
    let c = p.coords();
    match p.manifold() {
        Manifold::Euclidean { .. } => {}
        Manifold::Sphere { .. } => assert!((norm2(c) - 1.0).abs() <= 1e-12),
        Manifold::Hyperbolic { .. } => {
            let q = hyperbolic::minkowski(c, c);
            assert!((q + 1.0).abs() <= 1e-12 * c[0] * c[0], "minkowski form {q}");
            assert!(c[0] > 0.0);
        }
        Manifold::Spd { n } => {
            assert!(spd::asymmetry(n, c) <= 1e-12);
            spd::check_point(n, c).unwrap();
        }
    }
}

#[test]
fn dist_examples() {
    assert_abs_diff_eq!(S2.dist(&pt(S2, &[1., 0., 0.]), &pt(S2, &[0., 1., 0.])).unwrap(), FRAC_PI_2, epsilon = 1e-15);
    let y = pt(H2, &[1f64.cosh(), 1f64.sinh(), 0.0]);
    assert_abs_diff_eq!(H2.dist(&Point::origin(H2), &y).unwrap(), 1.0, epsilon = 1e-14);
    assert_eq!(R2.dist(&pt(R2, &[0., 0.]), &pt(R2, &[3., 4.])).unwrap(), 5.0);
}

#[test]
fn manifold_mismatch_is_reported() {
    let err = S2.dist(&Point::origin(S2), &Point::origin(H2)).unwrap_err();
    assert!(matches!(err, GeometryError::ManifoldMismatch(..)));
}

#[test]
fn exp_of_zero_is_identity() {
    for m in all_backends() {
        let x = random_point(&Ball::new(Point::origin(m), 0.8), 3);
        let y = m.exp(&x, &Tangent::zero(&x)).unwrap();
        for (a, b) in x.coords().iter().zip(y.coords()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }
}

#[test]
fn sphere_exp_reaches_antipode_at_pi() {
    let x = pt(S2, &[1., 0., 0.]);
    let v = S2.tangent(&x, vec![0., PI, 0.]).unwrap();
    let y = S2.exp(&x, &v).unwrap();
    assert_abs_diff_eq!(y.coords()[0], -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(y.coords()[1], 0.0, epsilon = 1e-15);
}

#[test]
fn spd_exp_at_identity_is_matrix_exponential() {
    // V = [[a, b], [b, a]] has eigenvectors (1,1), (1,-1); expm is closed-form.
    let (a, b) = (0.3, -0.2);
    let x = Point::origin(SPD2);
    let v = SPD2.tangent(&x, vec![a, b, b, a]).unwrap();
    let y = SPD2.exp(&x, &v).unwrap();
    let (p, q) = ((a + b).exp(), (a - b).exp());
    let expected = [(p + q) / 2.0, (p - q) / 2.0, (p - q) / 2.0, (p + q) / 2.0];
    for (got, want) in y.coords().iter().zip(expected) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
    }
}

#[test]
fn log_examples() {
    for m in all_backends() {
        let x = random_point(&Ball::new(Point::origin(m), 0.5), 11);
        assert!(m.norm(&m.log(&x, &x).unwrap()) < 1e-14);
    }
    let l = R2.log(&pt(R2, &[1., 1.]), &pt(R2, &[2., 3.])).unwrap();
    assert_eq!(l.coords(), &[1.0, 2.0]);

    let x = pt(S2, &[1., 0., 0.]);
    let y = pt(S2, &[0., 1., 0.]);
    let l = S2.log(&x, &y).unwrap();
    assert_abs_diff_eq!(l.coords()[0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(l.coords()[1], FRAC_PI_2, epsilon = 1e-15);
    assert_abs_diff_eq!(l.coords()[2], 0.0, epsilon = 1e-15);
    let back = S2.exp(&x, &l).unwrap();
    for (a, b) in back.coords().iter().zip(y.coords()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }
}

#[test]
fn sphere_log_rejects_antipodes() {
    let x = pt(S2, &[1., 0., 0.]);
    let err = S2.log(&x, &pt(S2, &[-1., 0., 0.])).unwrap_err();
    assert!(matches!(err, GeometryError::OutsideInjectivityRadius { .. }));
    // Just inside the margin is still fine.
    let v = S2.tangent(&x, vec![0., PI - 1e-5, 0.]).unwrap();
    let y = S2.exp(&x, &v).unwrap();
    assert_abs_diff_eq!(S2.norm(&S2.log(&x, &y).unwrap()), PI - 1e-5, epsilon = 1e-9);
}

#[test]
fn transport_examples() {
    for m in all_backends() {
        let x = random_point(&Ball::new(Point::origin(m), 0.7), 5);
        let v = random_tangent(&x, 1.0, 6);
        let w = m.parallel_transport(&x, &x, &v).unwrap();
        for (a, b) in v.coords().iter().zip(w.coords()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }
    let x = pt(R2, &[1., 2.]);
    let y = pt(R2, &[-4., 0.5]);
    let v = R2.tangent(&x, vec![0.3, -0.7]).unwrap();
    assert_eq!(R2.parallel_transport(&x, &y, &v).unwrap().coords(), v.coords());
}

/// Velocity of t -> exp(x, t u) at t = 1 by central differences.
fn geodesic_velocity_fd(m: Manifold, x: &Point, u: &Tangent) -> Vec<f64> {
    let h = 1e-6;
    let a = m.exp(x, &u.scale(1.0 + h)).unwrap();
    let b = m.exp(x, &u.scale(1.0 - h)).unwrap();
    a.coords().iter().zip(b.coords()).map(|(p, q)| (p - q) / (2.0 * h)).collect()
}

#[test]
fn transport_carries_geodesic_velocity() {
    for m in all_backends() {
        let x = random_point(&Ball::new(Point::origin(m), 0.6), 21);
        let y = random_point(&Ball::new(Point::origin(m), 0.6), 22);
        let u = m.log(&x, &y).unwrap();
        let transported = m.parallel_transport(&x, &y, &u).unwrap();
        let fd = geodesic_velocity_fd(m, &x, &u);
        for (a, b) in transported.coords().iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
        // and equals -log_y x
        let back = m.log(&y, &x).unwrap();
        for (a, b) in transported.coords().iter().zip(back.coords()) {
            assert_abs_diff_eq!(*a, -b, epsilon = 1e-10);
        }
    }
}

#[test]
fn inner_examples() {
    let x = pt(R2, &[0.5, 0.5]);
    let u = R2.tangent(&x, vec![1., 0.]).unwrap();
    let v = R2.tangent(&x, vec![0., 1.]).unwrap();
    assert_eq!(R2.inner(&x, &u, &v).unwrap(), 0.0);
    assert_eq!(R2.inner(&x, &u, &Tangent::zero(&x)).unwrap(), 0.0);

    let id = Point::origin(SPD2);
    let i = SPD2.tangent(&id, vec![1., 0., 0., 1.]).unwrap();
    assert_abs_diff_eq!(SPD2.inner(&id, &i, &i).unwrap(), 2.0, epsilon = 1e-15);

    // tr(X^{-1} I X^{-1} I) = sum 1/lambda^2 for X = diag(2, 4)
    let x = pt(SPD2, &[2., 0., 0., 4.]);
    let i = SPD2.tangent(&x, vec![1., 0., 0., 1.]).unwrap();
    assert_abs_diff_eq!(SPD2.inner(&x, &i, &i).unwrap(), 0.25 + 0.0625, epsilon = 1e-15);
}

#[test]
fn inner_rejects_foreign_base() {
    let x = pt(R2, &[0., 0.]);
    let y = pt(R2, &[1., 0.]);
    let u = Tangent::zero(&x);
    let v = Tangent::zero(&y);
    assert_eq!(R2.inner(&x, &u, &v).unwrap_err(), GeometryError::BaseMismatch);
}

#[test]
fn curvature_and_radii() {
    let ball = |m| Ball::new(Point::origin(m), 1.0);
    assert_eq!(R2.curvature_bounds(&ball(R2)), CurvatureBounds { kappa_lo: 0.0, kappa_hi: 0.0 });
    assert_eq!(H2.curvature_bounds(&ball(H2)), CurvatureBounds { kappa_lo: -1.0, kappa_hi: -1.0 });
    assert_eq!(S2.curvature_bounds(&ball(S2)), CurvatureBounds { kappa_lo: 1.0, kappa_hi: 1.0 });
    assert_eq!(SPD3.curvature_bounds(&ball(SPD3)), CurvatureBounds { kappa_lo: -0.5, kappa_hi: 0.0 });

    let o = Point::origin(H2);
    assert_eq!((H2.injectivity_radius(&o), H2.convexity_radius(&o)), (f64::INFINITY, f64::INFINITY));
    let o = Point::origin(R2);
    assert_eq!((R2.injectivity_radius(&o), R2.convexity_radius(&o)), (f64::INFINITY, f64::INFINITY));
    let o = Point::origin(S2);
    assert_eq!((S2.injectivity_radius(&o), S2.convexity_radius(&o)), (PI, FRAC_PI_2));
}

#[test]
fn sphere_convexity_radius_by_midpoint_sampling() {
    // Inside B(o, pi/2) the midpoint of any two points stays inside; just
    // beyond it, two points near the equator have their midpoint leave.
    let o = Point::origin(S2);
    let region = Ball::new(o.clone(), FRAC_PI_2 - 1e-3);
    for i in 0..2000 {
        let a = random_point(&region, 2 * i);
        let b = random_point(&region, 2 * i + 1);
        let mid = S2.exp(&a, &S2.log(&a, &b).unwrap().scale(0.5)).unwrap();
        assert!(S2.dist(&o, &mid).unwrap() <= FRAC_PI_2 - 1e-3 + 1e-12);
    }
    let r = FRAC_PI_2 + 0.1;
    let a = pt(S2, &[r.cos(), r.sin(), 0.0]);
    let b = pt(S2, &[r.cos(), -r.sin(), 0.0]);
    let mid = S2.exp(&a, &S2.log(&a, &b).unwrap().scale(0.5)).unwrap();
    assert!(S2.dist(&o, &mid).unwrap() > r);
}

#[test]
fn sampling_is_deterministic_and_stays_in_ball() {
    for m in all_backends() {
        let region = Ball::new(random_point(&Ball::new(Point::origin(m), 0.5), 1), 0.9);
        assert_eq!(random_point(&region, 42), random_point(&region, 42));
        let x = region.center.clone();
        assert!(random_tangent(&x, 0.0, 9).is_zero());
        for i in 0..2500 {
            let p = random_point(&region, i);
            assert!(m.dist(&region.center, &p).unwrap() <= region.radius + 1e-12);
        }
    }
}

#[test]
fn tangent_basis_is_orthonormal() {
    for m in all_backends() {
        let x = random_point(&Ball::new(Point::origin(m), 1.0), 77);
        let basis = m.tangent_basis(&x);
        assert_eq!(basis.len(), m.intrinsic_dim());
        for (i, a) in basis.iter().enumerate() {
            assert!(m.tangency_residual(&x, a.coords()) < 1e-12);
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m.inner(&x, a, b).unwrap(), want, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn point_validation() {
    assert!(S2.point(vec![1.0 + 1e-3, 0.0, 0.0]).is_err());
    assert!(H2.point(vec![1.0, 0.5, 0.0]).is_err());
    assert!(SPD2.point(vec![1.0, 2.0, 2.0, 1.0]).is_err());
    assert!(matches!(R2.point(vec![1.0]), Err(GeometryError::DimensionMismatch { expected: 2, got: 1 })));
    assert!(S2.tangent(&Point::origin(S2), vec![0.1, 1.0, 0.0]).is_err());
}

fn backend_strategy() -> impl Strategy<Value = Manifold> {
    prop_oneof![
        (1usize..5).prop_map(|dim| Manifold::Euclidean { dim }),
        (1usize..5).prop_map(|dim| Manifold::Sphere { dim }),
        (1usize..5).prop_map(|dim| Manifold::Hyperbolic { dim }),
        (1usize..4).prop_map(|n| Manifold::Spd { n }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exp_log_round_trip(m in backend_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let x = random_point(&Ball::new(Point::origin(m), 1.5), s1);
        let cap = 1f64.min(0.4 * m.injectivity_radius(&x));
        let v = random_tangent(&x, cap, s2);
        let y = m.exp(&x, &v).unwrap();
        assert_point_invariants(&y);
        let back = m.log(&x, &y).unwrap();
        let nv = m.norm(&v);
        let err = m.norm(&back.add(&v.scale(-1.0)).unwrap());
        prop_assert!(err <= 1e-9 * (1.0 + nv), "round trip error {err}");
        prop_assert!((m.dist(&x, &y).unwrap() - nv).abs() <= 1e-10);
    }

    #[test]
    fn transport_is_isometric(m in backend_strategy(), s in any::<u64>()) {
        let region = Ball::new(Point::origin(m), 1.0);
        let x = random_point(&region, s);
        let y = random_point(&region, s ^ 0x9e37);
        let v = random_tangent(&x, 2.0, s.wrapping_add(3));
        let w = m.parallel_transport(&x, &y, &v).unwrap();
        prop_assert!(m.tangency_residual(&y, w.coords()) <= 1e-12 * (1.0 + norm2(y.coords()) * norm2(w.coords())));
        prop_assert!((m.norm(&w) - m.norm(&v)).abs() <= 1e-10 * m.norm(&v).max(1e-300));
    }

    #[test]
    fn triangle_inequality(m in backend_strategy(), s in any::<u64>()) {
        let region = Ball::new(Point::origin(m), 1.2);
        let a = random_point(&region, s);
        let b = random_point(&region, s.wrapping_mul(31).wrapping_add(1));
        let c = random_point(&region, s.wrapping_mul(17).wrapping_add(2));
        let (ab, bc, ac) = (m.dist(&a, &b).unwrap(), m.dist(&b, &c).unwrap(), m.dist(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!((ab - m.dist(&b, &a).unwrap()).abs() <= 1e-12);
    }
}
