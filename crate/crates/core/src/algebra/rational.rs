//! The differential field `Q(s)` with derivation `d/ds`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::Polynomial;
use super::Q;
use crate::error::{Error, Result};

/// Exact quotient of two polynomials in `s`.
///
/// Always held in canonical form: numerator and denominator coprime and the
/// denominator monic, so structural equality coincides with equality of
/// rational functions. Zero is stored as `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        // monomial denominators (everything built from 1/s) only share
        // powers of s with the numerator; skip the Euclidean gcd
        if let Some((c, k)) = den.as_monomial() {
            let v = num.s_valuation().unwrap_or(0).min(k);
            let inv = c.recip();
            let coeffs = num.coeffs()[v..].iter().map(|x| x * &inv).collect();
            return Self { num: Polynomial::from_coeffs(coeffs), den: Polynomial::s_pow(k - v) };
        }
        let g = num.gcd(&den);
        let (num, _) = num.div_rem(&g);
        let (den, _) = den.div_rem(&g);
        let lc = den.leading().expect("nonzero denominator").recip();
        Self { num: num.scale(&lc), den: den.scale(&lc) }
    }

    pub fn zero() -> Self {
        Self { num: Polynomial::zero(), den: Polynomial::one() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self { num: Polynomial::constant(c), den: Polynomial::one() }
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(Q::from_integer(c.into()))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self { num: p, den: Polynomial::one() }
    }

    /// `s^k` for any integer `k`; negative powers are iterated integrators.
    pub fn s_pow(k: i64) -> Self {
        Self::s_term(Q::one(), k)
    }

    /// `c * s^k` for any integer `k`.
    pub fn s_term(c: Q, k: i64) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mag = k.unsigned_abs() as usize;
        if k >= 0 {
            Self { num: Polynomial::monomial(c, mag), den: Polynomial::one() }
        } else {
            Self { num: Polynomial::constant(c), den: Polynomial::s_pow(mag) }
        }
    }

    pub fn numer(&self) -> &Polynomial {
        &self.num
    }

    pub fn denom(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// `deg num <= deg den`
    pub fn is_proper(&self) -> bool {
        self.num.degree().is_none_or(|n| Some(n) <= self.den.degree())
    }

    /// `deg num < deg den`
    pub fn is_strictly_proper(&self) -> bool {
        self.num.degree().is_none_or(|n| Some(n) < self.den.degree())
    }

    /// When the denominator is a pure power of `s`, the Laurent expansion
    /// `sum c_e s^e` as `(e, c_e)` pairs with ascending exponent.
    pub fn laurent_terms(&self) -> Option<Vec<(i64, Q)>> {
        let (unit, k) = self.den.as_monomial()?;
        debug_assert!(unit.is_one());
        Some(
            self.num
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (e as i64 - k as i64, c.clone()))
                .collect(),
        )
    }

    /// Member of `Q[1/s]`.
    pub fn is_finite_integral_form(&self) -> bool {
        self.laurent_terms().is_some_and(|t| t.iter().all(|(e, _)| *e <= 0))
    }

    /// Member of `(1/s) Q[1/s]`.
    pub fn is_strictly_finite_integral_form(&self) -> bool {
        self.laurent_terms().is_some_and(|t| t.iter().all(|(e, _)| *e <= -1))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(&self.num * &rhs.den, &self.den * &rhs.num))
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one().checked_div(self)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::canonical(self.num.scale(c), self.den.clone())
    }

    /// Quotient rule, `(p/q)' = (p'q - pq')/q^2`.
    pub fn derivative(&self) -> Self {
        if self.den.is_one() {
            return Self::from_poly(self.num.derivative());
        }
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        Self::canonical(num, &self.den * &self.den)
    }

    /// `k`-th derivative.
    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |f, _| f.derivative())
    }

    pub fn eval(&self, x: &Q) -> Result<Q> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval(x) / d)
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        Self::from_poly(p)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.den == rhs.den {
            return RationalFunction::canonical(&self.num + &rhs.num, self.den.clone());
        }
        RationalFunction::canonical(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalFunction::from_poly(&self.num * &rhs.num);
        }
        RationalFunction::canonical(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl Add for RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: RationalFunction) -> RationalFunction {
        &self + &rhs
    }
}

impl Sub for RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: RationalFunction) -> RationalFunction {
        &self - &rhs
    }
}

impl Mul for RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: RationalFunction) -> RationalFunction {
        &self * &rhs
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -&self
    }
}

fn single_term(p: &Polynomial) -> bool {
    p.as_monomial().is_some()
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        // c/s^k reads better than (c)/(s^k)
        if let Some((c, 0)) = self.num.as_monomial() {
            super::poly::fmt_scalar(&c, f)?;
        } else if single_term(&self.num) {
            write!(f, "{}", self.num)?;
        } else {
            write!(f, "({})", self.num)?;
        }
        f.write_str("/")?;
        if single_term(&self.den) {
            write!(f, "{}", self.den)
        } else {
            write!(f, "({})", self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Polynomial {
        Polynomial::from_ints(c)
    }

    fn rf(n: &[i64], d: &[i64]) -> RationalFunction {
        RationalFunction::new(p(n), p(d)).unwrap()
    }

    #[test]
    fn field_operation_examples() {
        let inv_s = RationalFunction::s_pow(-1);
        let s = RationalFunction::s_pow(1);
        assert_eq!(&inv_s * &s, RationalFunction::one());
        assert_eq!(&inv_s + &inv_s, rf(&[2], &[0, 1]));
        let q = RationalFunction::from_poly(p(&[1, 1]))
            .checked_div(&RationalFunction::from_poly(p(&[-1, 0, 1])))
            .unwrap();
        assert_eq!(q, rf(&[1], &[-1, 1]));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(
            RationalFunction::one().checked_div(&RationalFunction::zero()),
            Err(Error::DivisionByZero)
        ));
        assert!(RationalFunction::new(p(&[1]), Polynomial::zero()).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(RationalFunction::s_pow(-1).derivative(), rf(&[-1], &[0, 0, 1]));
        assert_eq!(RationalFunction::s_pow(3).derivative(), rf(&[0, 0, 3], &[1]));
        assert_eq!(rf(&[1], &[-1, 1]).derivative(), rf(&[-1], &[1, -2, 1]));
    }

    #[test]
    fn canonical_form_normalizes_denominator() {
        let a = rf(&[2, 2], &[4, 4, 0]);
        assert_eq!(a, RationalFunction::constant(Q::new(1.into(), 2.into())));
        assert!(a.denom().leading().unwrap().is_one());
    }

    #[test]
    fn integral_form_predicates() {
        assert!(RationalFunction::s_pow(-2).is_strictly_finite_integral_form());
        assert!(RationalFunction::one().is_finite_integral_form());
        assert!(!RationalFunction::one().is_strictly_finite_integral_form());
        assert!(!rf(&[1], &[1, 1]).is_finite_integral_form());
        assert!(rf(&[1], &[1, 1]).is_strictly_proper());
        assert!(!RationalFunction::s_pow(1).is_proper());
    }

    #[test]
    fn display() {
        assert_eq!(RationalFunction::s_pow(-2).to_string(), "1/s^2");
        assert_eq!(rf(&[1, 1], &[0, 0, 1]).to_string(), "(s + 1)/s^2");
        assert_eq!(rf(&[-2], &[0, 1]).to_string(), "-2/s");
    }
}
