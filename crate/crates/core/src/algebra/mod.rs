//! Exact symbolic algebra in the operational domain.
//!
//! Signals are rational functions of the operational variable `s` (with
//! `1/s` acting as integration), and detectors are linear differential
//! operators in `d/ds` with rational-function coefficients. Everything here
//! is exact: coefficients are arbitrary-precision rationals and no floating
//! point is involved.
//!
//! Operators render as text in the form `(1/s^2)*D^1 + 2*s*D^0`; see
//! `docs/operator-format.md` for the grammar.

mod operator;
mod poly;
mod rational;

pub use operator::{
    annihilator_of_span, conjugate_by_delay, to_integral_form, DiffOperator, OperatorPolynomial,
};
pub use poly::Polynomial;
pub(crate) use poly::fmt_terms;
pub use rational::RationalFunction;

use num_bigint::BigInt;

/// Exact scalar field.
pub type Q = num_rational::BigRational;

/// Binomial coefficient `C(n, k)` as an exact scalar.
pub fn binomial(n: usize, k: usize) -> Q {
    if k > n {
        return Q::from_integer(BigInt::from(0));
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Q::from_integer(acc)
}

/// Arithmetic on rational functions by operation name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn rf_arith(
    op: RfOp,
    a: &RationalFunction,
    b: &RationalFunction,
) -> crate::Result<RationalFunction> {
    Ok(match op {
        RfOp::Add => a + b,
        RfOp::Sub => a - b,
        RfOp::Mul => a * b,
        RfOp::Div => a.checked_div(b)?,
    })
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn scalar() -> impl Strategy<Value = Q> {
        (-5i64..=5, 1i64..=3).prop_map(|(n, d)| Q::new(n.into(), d.into()))
    }

    fn poly(max_deg: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(scalar(), 0..=max_deg + 1).prop_map(Polynomial::from_coeffs)
    }

    // denominators s^k (s + c)^e: the shapes detectors actually produce
    fn rf() -> impl Strategy<Value = RationalFunction> {
        (poly(2), 0usize..=2, prop::option::of(-2i64..=2)).prop_map(|(n, k, lin)| {
            let mut den = Polynomial::s_pow(k);
            if let Some(c) = lin {
                den = &den * &Polynomial::from_ints(&[c, 1]);
            }
            RationalFunction::new(n, den).expect("nonzero denominator")
        })
    }

    fn op() -> impl Strategy<Value = DiffOperator> {
        prop::collection::vec((0usize..=2, rf()), 0..=3).prop_map(DiffOperator::from_terms)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn composition_is_associative(p in op(), q in op(), r in op()) {
            prop_assert_eq!(p.compose(&q).compose(&r), p.compose(&q.compose(&r)));
        }

        #[test]
        fn composition_distributes(p in op(), q in op(), r in op()) {
            prop_assert_eq!(p.compose(&(&q + &r)), &p.compose(&q) + &p.compose(&r));
            prop_assert_eq!((&q + &r).compose(&p), &q.compose(&p) + &r.compose(&p));
        }

        #[test]
        fn action_is_compatible_with_composition(p in op(), q in op(), f in rf()) {
            prop_assert_eq!(p.compose(&q).apply(&f), p.apply(&q.apply(&f)));
        }

        #[test]
        fn commutator_with_d_is_derivative(rho in rf()) {
            let m = DiffOperator::from_rf(rho.clone());
            let comm = &DiffOperator::d().compose(&m) - &m.compose(&DiffOperator::d());
            prop_assert_eq!(comm, DiffOperator::from_rf(rho.derivative()));
        }

        #[test]
        fn canonical_equality_agrees_with_cross_multiplication(a in rf(), b in rf()) {
            let cross = a.numer() * b.denom() == b.numer() * a.denom();
            prop_assert_eq!(a == b, cross);
        }

        #[test]
        fn annihilator_kills_span(basis in prop::collection::vec(rf(), 1..=3),
                                  weights in prop::collection::vec(scalar(), 5)) {
            prop_assume!(basis.iter().any(|f| !f.is_zero()));
            let a = annihilator_of_span(&basis).unwrap();
            for f in &basis {
                prop_assert!(a.apply(f).is_zero());
            }
            let combo = basis.iter().zip(&weights)
                .fold(RationalFunction::zero(), |acc, (f, w)| &acc + &f.scale(w));
            prop_assert!(a.apply(&combo).is_zero());
            // any left rational multiple still annihilates
            let scaled = a.left_mul(&(&RationalFunction::s_pow(-2) + &RationalFunction::one()));
            for f in &basis {
                prop_assert!(scaled.apply(f).is_zero());
            }
        }

        #[test]
        fn conjugation_at_zero_returns_operator(p in op()) {
            prop_assert_eq!(conjugate_by_delay(&p).eval(&Q::from_integer(0.into())), p);
        }

        #[test]
        fn conjugation_passes_through_delay(p in op(), t in scalar()) {
            // conj is a ring map: conj(p∘q) = conj(p)∘conj(q), checked via
            // evaluation against (D + t)^a expansion at a numeric delay.
            let lhs = conjugate_by_delay(&p).eval(&t);
            let shift = &DiffOperator::d() + &DiffOperator::from_rf(RationalFunction::constant(t.clone()));
            let mut rhs = DiffOperator::zero();
            for (a, rho) in p.terms() {
                let pow = (0..a).fold(DiffOperator::identity(), |acc, _| acc.compose(&shift));
                rhs = &rhs + &pow.left_mul(rho);
            }
            prop_assert_eq!(lhs, rhs);
        }
    }
}
