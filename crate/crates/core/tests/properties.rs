//! Property-based invariants over randomized shapes, domains, and rates.

use mamv_core::geometry::{ConvexDomain, Ellipsoid};
use mamv_core::linalg::{self, polar_spd, trace_inf, Matrix, SpdShape, SymMatrix, TraceInf};
use mamv_core::quadrature::QuadratureRule;
use mamv_core::report::fit_rate;
use proptest::prelude::*;

const PI: f64 = std::f64::consts::PI;

fn det_one_shape(theta: f64, t: f64) -> SpdShape {
    SpdShape::from_spectrum(&[t.exp(), (-t).exp()], &Matrix::rotation2(theta)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The symmetric polar factor undoes a trailing orthogonal factor.
    #[test]
    fn polar_factor_drops_rotations(
        theta in 0.0..PI,
        t in -1.5f64..1.5,
        q in 0.0..2.0 * PI,
        flip in proptest::bool::ANY,
    ) {
        let s = det_one_shape(theta, t);
        let mut rot = Matrix::rotation2(q);
        if flip {
            // reflection: still orthogonal
            let f = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
            rot = rot.mul(&f);
        }
        let a = s.matrix().to_matrix().mul(&rot);
        if flip {
            // determinant -1 inputs are rejected
            prop_assert!(polar_spd(&a).is_err());
        } else {
            let back = polar_spd(&a).unwrap();
            let err = back.matrix().add(&s.matrix().scaled(-1.0)).frobenius();
            prop_assert!(err < 1e-10);
        }
    }

    /// Any det-one conjugation dominates the closed-form trace infimum.
    #[test]
    fn trace_infimum_is_a_lower_bound(
        b1 in 0.01f64..10.0,
        b2 in 0.0f64..10.0,
        beta in 0.0..PI,
        theta in 0.0..PI,
        t in -2.5f64..2.5,
    ) {
        let b = {
            let frame = Matrix::rotation2(beta);
            let mut m = SymMatrix::zeros(2);
            for i in 0..2 {
                for j in i..2 {
                    let v = frame.get(i, 0) * b1 * frame.get(j, 0)
                        + frame.get(i, 1) * b2 * frame.get(j, 1);
                    m.set(i, j, v);
                }
            }
            m
        };
        let inf = match trace_inf(&b).unwrap() {
            TraceInf::Finite(v) => v,
            TraceInf::NegInfinity => unreachable!("b is positive semidefinite"),
        };
        let a = det_one_shape(theta, t);
        let am = a.matrix().to_matrix();
        let prod = am.transpose().mul(&b.to_matrix()).mul(&am);
        let value = prod.get(0, 0) + prod.get(1, 1);
        prop_assert!(value >= inf - 1e-10 * inf.abs().max(1.0));
    }

    /// Membership agrees with the parametric image of the unit ball.
    #[test]
    fn ellipsoid_membership_matches_parametrization(
        theta in 0.0..PI,
        t in -1.2f64..1.2,
        eps in 0.05f64..2.0,
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        px in -1.4f64..1.4,
        py in -1.4f64..1.4,
    ) {
        let e = Ellipsoid::new(vec![cx, cy], det_one_shape(theta, t), eps).unwrap();
        let point = e.point(&[px, py]);
        let inside_ball = (px * px + py * py).sqrt() <= 1.0;
        if inside_ball {
            prop_assert!(e.contains(&point));
        } else if (px * px + py * py).sqrt() > 1.0 + 1e-9 {
            prop_assert!(!e.contains(&point));
        }
    }

    /// Shrinking the scale never breaks containment.
    #[test]
    fn containment_is_monotone_in_scale(
        theta in 0.0..PI,
        t in -1.0f64..1.0,
        eps in 0.01f64..1.5,
        shrink in 0.1f64..1.0,
        cx in -0.9f64..0.9,
        cy in -0.9f64..0.9,
    ) {
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let shape = det_one_shape(theta, t);
        let big = Ellipsoid::new(vec![cx, cy], shape.clone(), eps).unwrap();
        if square.contains_ellipsoid(&big) {
            let small = Ellipsoid::new(vec![cx, cy], shape, eps * shrink).unwrap();
            prop_assert!(square.contains_ellipsoid(&small));
        }
    }

    /// The closed-form largest scale is the containment threshold.
    #[test]
    fn max_scale_is_sharp(
        theta in 0.0..PI,
        t in -1.0f64..1.0,
        cx in -0.7f64..0.7,
        cy in -0.7f64..0.7,
    ) {
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let shape = det_one_shape(theta, t);
        let cap = square.max_scale(&[cx, cy], &shape).unwrap();
        let inside = Ellipsoid::new(vec![cx, cy], shape.clone(), cap * (1.0 - 1e-9)).unwrap();
        prop_assert!(square.contains_ellipsoid(&inside));
        let outside = Ellipsoid::new(vec![cx, cy], shape, cap * (1.0 + 1e-6)).unwrap();
        prop_assert!(!square.contains_ellipsoid(&outside));
    }

    /// Log-log fitting recovers synthetic power laws and ignores amplitude.
    #[test]
    fn rate_fit_recovers_power_laws(
        slope in 0.5f64..5.0,
        amp in 0.1f64..50.0,
    ) {
        let entries: Vec<(f64, f64)> = [0.2f64, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e| (e, amp * e.powf(slope)))
            .collect();
        let fit = fit_rate(&entries, 1e-13);
        let got = fit.slope.unwrap();
        prop_assert!((got - slope).abs() < 1e-9);
    }

    /// Both trace identities hold for random symmetric quadratic forms.
    #[test]
    fn quadrature_trace_identities(
        m00 in -2.0f64..2.0,
        m01 in -2.0f64..2.0,
        m11 in -2.0f64..2.0,
        eps in 0.05f64..1.0,
    ) {
        let rule = QuadratureRule::new(2, 8, 32).unwrap();
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, m00);
        m.set(0, 1, m01);
        m.set(1, 1, m11);
        let x = [0.2, -0.1];
        let g = |p: &[f64]| {
            let d = linalg::sub(p, &x);
            m.quad_form(&d)
        };
        let solid = rule.ball_average(&g, &x, eps).unwrap();
        let want = eps * eps * m.trace() / 4.0;
        prop_assert!((solid - want).abs() <= 1e-10 * want.abs().max(eps * eps));
        let surf = rule.sphere_average(&g, &x, eps).unwrap();
        let want = eps * eps * m.trace() / 2.0;
        prop_assert!((surf - want).abs() <= 1e-10 * want.abs().max(eps * eps));
    }

    /// Geometric mean of the spectrum equals the determinant root.
    #[test]
    fn det_root_matches_product(
        l1 in 1e-6f64..1e6,
        l2 in 1e-6f64..1e6,
        l3 in 1e-6f64..1e6,
    ) {
        let root = linalg::det_root(&[l1, l2, l3]);
        let want = (l1 * l2 * l3).powf(1.0 / 3.0);
        prop_assert!((root - want).abs() <= 1e-12 * want);
    }
}
