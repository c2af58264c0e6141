use proptest::prelude::*;

use wdvv::algebra::gcd::gcd;
use wdvv::algebra::{int, JetSpace, Polynomial, RationalFunction};
use wdvv::inversion::inversion_map;

/// Up to five terms in `vars` variables, exponents ≤ 2, small integer coefficients.
fn poly(vars: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..3, vars), -5i64..=5), 1..5)
        .prop_map(|terms| Polynomial::from_terms(terms.into_iter().map(|(m, c)| (m, int(c)))))
}

fn nonzero_poly(vars: usize) -> impl Strategy<Value = Polynomial> {
    poly(vars).prop_filter("nonzero", |p| !p.is_zero())
}

/// `p / (1 + Σ x_i^2)`, which has no real poles.
fn rational(vars: usize) -> impl Strategy<Value = RationalFunction> {
    poly(vars).prop_map(move |p| {
        let den = (0..vars).fold(Polynomial::one(), |acc, i| &acc + &Polynomial::var(i).pow(2));
        RationalFunction::new(p, den).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_partials_commute(f in rational(3), i in 0usize..3, j in 0usize..3) {
        prop_assert_eq!(f.derivative(i).derivative(j), f.derivative(j).derivative(i));
    }

    #[test]
    fn common_factor_cancels(a in nonzero_poly(3), b in nonzero_poly(3), c in nonzero_poly(3)) {
        let g = gcd(&(&a * &c), &(&b * &c));
        prop_assert!(g.div_exact(&c.monic()).is_some(), "gcd {} misses {}", g, c);
        let lhs = RationalFunction::new(&a * &c, &b * &c).unwrap();
        let rhs = RationalFunction::new(a, b).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inversion_substitution_round_trip(p in poly(3)) {
        let map = inversion_map(3).unwrap();
        let f = RationalFunction::from(p);
        let there = map.push_forward(&f).unwrap();
        prop_assert_eq!(map.pull_back(&there).unwrap(), f);
    }

    /// `∂/∂u_k ∘ D_x − D_x ∘ ∂/∂u_k = ∂/∂u_{k−1}`.
    #[test]
    fn total_derivative_commutation(p in poly(6), field in 0usize..2, order in 0usize..3) {
        let s = JetSpace::new(2);
        let f = RationalFunction::from(p);
        let v = s.index(field, order);
        let lhs = &s.total_derivative(&f).derivative(v) - &s.total_derivative(&f.derivative(v));
        let rhs = if order == 0 {
            RationalFunction::zero()
        } else {
            f.derivative(s.index(field, order - 1))
        };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivative_matches_finite_difference(
        f in rational(3),
        i in 0usize..3,
        x in prop::collection::vec(0.5f64..1.5, 3),
    ) {
        let h = 1e-5;
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += h;
        down[i] -= h;
        let fd = (f.eval_f64(&up).unwrap() - f.eval_f64(&down).unwrap()) / (2.0 * h);
        let exact = f.derivative(i).eval_f64(&x).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "fd {fd} vs {exact}");
    }
}
