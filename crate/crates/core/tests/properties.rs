use convendo::endo::Endo1D;
use convendo::expr::ConvexExpr;
use convendo::ext::ExtReal;
use convendo::gl::GlEndo;
use convendo::measure::LineMeasure;
use convendo::oned::monge_ampere;
use convendo::pwl::{PwlFunction, Tail};
use convendo::schema::{self, FnDesc, PwlDesc};
use proptest::prelude::*;

// Convex PWL from sorted breakpoints and increasing slopes.
fn pwl_strategy(finite: bool) -> impl Strategy<Value = PwlFunction> {
    (1usize..8, -2.0f64..2.0, any::<[bool; 2]>())
        .prop_flat_map(move |(m, v0, closed)| {
            (
                prop::collection::vec(0.05f64..1.0, m),
                prop::collection::vec(0.05f64..1.0, m + 1),
                -3.0f64..0.0,
                -3.0f64..0.0,
                Just(v0),
                Just(closed),
            )
        })
        .prop_map(move |(gaps, dslopes, x0, s0, v0, closed)| {
            let mut bp = vec![x0];
            for g in &gaps[1..] {
                bp.push(bp.last().unwrap() + g);
            }
            let mut slopes = vec![s0];
            for d in &dslopes[1..] {
                slopes.push(slopes.last().unwrap() + d);
            }
            let mut vals = vec![v0];
            for i in 1..bp.len() {
                vals.push(vals[i - 1] + slopes[i] * (bp[i] - bp[i - 1]));
            }
            let tail = |c: bool, s: f64| if c && !finite { Tail::Closed } else { Tail::Slope(s) };
            PwlFunction::new(bp, vals, tail(closed[0], slopes[0]), tail(closed[1], *slopes.last().unwrap())).unwrap()
        })
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(u), ExtReal::Finite(v)) => (u - v).abs() <= tol * (1.0 + u.abs().max(v.abs())),
        (ExtReal::PosInf, ExtReal::PosInf) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn sum_evaluates_pointwise(f in pwl_strategy(false), g in pwl_strategy(false), x in -5.0f64..5.0) {
        if let Ok(s) = f.add(&g) {
            prop_assert!(close(s.eval(x), f.eval(x) + g.eval(x), 1e-12));
        }
    }

    #[test]
    fn max_is_pointwise(f in pwl_strategy(true), g in pwl_strategy(true), x in -5.0f64..5.0) {
        let m = f.max(&g).unwrap();
        let want = f.eval_in_domain(x).max(g.eval_in_domain(x));
        prop_assert!(close(m.eval(x), ExtReal::Finite(want), 1e-12));
    }

    #[test]
    fn conjugate_is_involutive(f in pwl_strategy(false), x in -5.0f64..5.0) {
        prop_assert!(close(f.legendre().legendre().eval(x), f.eval(x), 1e-11));
    }

    #[test]
    fn fenchel_young(f in pwl_strategy(false), x in -5.0f64..5.0, y in -5.0f64..5.0) {
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (f.eval(x), f.legendre().eval(y)) {
            prop_assert!(a + b >= x * y - 1e-9 * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn moreau_envelope_is_below(f in pwl_strategy(false), x in -5.0f64..5.0, t in 0.01f64..2.0) {
        let e = f.moreau_envelope(t).eval(x);
        if let ExtReal::Finite(v) = f.eval(x) {
            prop_assert!(e <= v + 1e-12 * (1.0 + v.abs()));
        }
        prop_assert!(e.is_finite());
    }

    #[test]
    fn monge_ampere_mass_is_slope_range(f in pwl_strategy(true)) {
        let (Tail::Slope(l), Tail::Slope(r)) = (f.left_tail(), f.right_tail()) else { unreachable!() };
        let mass = monge_ampere(&f).unwrap().total_mass();
        prop_assert!((mass - (r - l)).abs() <= 1e-12 * (1.0 + r.abs() + l.abs()));
    }

    #[test]
    fn gl_operator_is_additive(
        f in pwl_strategy(true),
        g in pwl_strategy(true),
        c in -1.0f64..2.0,
        s in 0.25f64..2.0,
        w in 0.1f64..2.0,
        x in -2.0f64..2.0,
    ) {
        let e = GlEndo::new(c, LineMeasure::new(vec![(s, w), (-0.5 * s, w)]).unwrap(), 1).unwrap();
        let lhs = e.apply_1d(&f.add(&g).unwrap(), x).unwrap();
        let rhs = e.apply_1d(&f, x).unwrap() + e.apply_1d(&g, x).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn descriptors_round_trip(f in pwl_strategy(false), x in -5.0f64..5.0) {
        let text = serde_json::to_string(&FnDesc::Pwl(PwlDesc::from(&f))).unwrap();
        let back: FnDesc = schema::parse(&text).unwrap();
        let g = back.build().unwrap();
        prop_assert_eq!(g.as_convex().eval(&[x]), f.eval(x));
    }

    #[test]
    fn expression_scaling(f in pwl_strategy(true), lambda in 0.0f64..3.0, x in -5.0f64..5.0) {
        let e = ConvexExpr::scale(lambda, ConvexExpr::pwl1d(f.clone(), vec![1.0]));
        prop_assert!(close(e.eval(&[x]), f.eval(x).scale(lambda), 1e-12));
    }
}
