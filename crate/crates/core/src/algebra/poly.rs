//! Dense univariate polynomials in the operational variable `s` with exact
//! rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Q;

/// Polynomial in `s` over the rationals, coefficients stored by ascending degree.
///
/// The coefficient vector never carries trailing zeros, so the zero
/// polynomial is the empty vector and its [`degree`](Self::degree) is `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Q>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c * s^k`
    pub fn monomial(c: Q, k: usize) -> Self {
        let mut coeffs = vec![Q::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    /// The indeterminate `s` raised to `k`.
    pub fn s_pow(k: usize) -> Self {
        Self::monomial(Q::one(), k)
    }

    pub fn from_coeffs(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Convenience constructor from integer coefficients, ascending degree.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Q::from_integer(BigInt::from(c))).collect())
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// Coefficient of `s^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Degree, with `None` standing for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Q> {
        self.coeffs.last()
    }

    /// Largest `k` such that `s^k` divides the polynomial (`None` for zero).
    pub fn s_valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// `Some((c, k))` when the polynomial is the single term `c * s^k`.
    pub fn as_monomial(&self) -> Option<(Q, usize)> {
        let k = self.s_valuation()?;
        (k + 1 == self.coeffs.len()).then(|| (self.coeffs[k].clone(), k))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Multiply by `s^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Q::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Divide by the leading coefficient. The zero polynomial stays zero.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(lc) => self.scale(&lc.recip()),
            None => Self::zero(),
        }
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Q::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("polynomial division by zero");
        let lc = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree().filter(|&nd| nd >= dd) else {
            return (Self::zero(), self.clone());
        };
        let mut quot = vec![Q::zero(); nd - dd + 1];
        for k in (dd..=nd).rev() {
            if rem[k].is_zero() {
                continue;
            }
            let factor = &rem[k] / &lc;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[k - dd + j] -= &factor * dc;
            }
            quot[k - dd] = factor;
        }
        (Self::from_coeffs(quot), Self::from_coeffs(rem))
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            // normalizing keeps remainder coefficients from swelling
            b = if r.is_zero() { r } else { r.monic() };
        }
        a.monic()
    }

    /// Monic least common multiple; zero if either argument is zero.
    pub fn lcm(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let g = self.gcd(other);
        let (q, _) = (self * other).div_rem(&g);
        q.monic()
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident, $t:ty) => {
        impl $tr for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add, Polynomial);
forward_owned!(Sub, sub, Polynomial);
forward_owned!(Mul, mul, Polynomial);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// Writes a rational scalar, parenthesised when it is a proper fraction.
pub(crate) fn fmt_scalar(c: &Q, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "({}/{})", c.numer(), c.denom())
    }
}

/// Formats `sum c_k var^k` in descending powers, e.g. `3*s^2 - s + (1/2)`.
pub(crate) fn fmt_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (&'a Q, String)>,
) -> fmt::Result {
    let mut first = true;
    for (c, var) in terms {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if first {
            if c.is_negative() {
                f.write_str("-")?;
            }
        } else {
            f.write_str(if c.is_negative() { " - " } else { " + " })?;
        }
        first = false;
        match (mag.is_one(), var.is_empty()) {
            (true, true) => f.write_str("1")?,
            (true, false) => f.write_str(&var)?,
            (false, true) => fmt_scalar(&mag, f)?,
            (false, false) => {
                fmt_scalar(&mag, f)?;
                write!(f, "*{var}")?;
            }
        }
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

pub(crate) fn power_name(var: &str, k: usize) -> String {
    match k {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{k}"),
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(
            f,
            self.coeffs.iter().enumerate().rev().map(|(k, c)| (c, power_name("s", k))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Polynomial {
        Polynomial::from_ints(c)
    }

    #[test]
    fn zero_has_no_degree() {
        assert_eq!(Polynomial::zero().degree(), None);
        assert_eq!(p(&[0, 0, 0]).degree(), None);
        assert_eq!(p(&[1, 2, 0]).degree(), Some(1));
    }

    #[test]
    fn division_and_gcd() {
        // (s^2 - 1) / (s + 1) = s - 1
        let (q, r) = p(&[-1, 0, 1]).div_rem(&p(&[1, 1]));
        assert_eq!(q, p(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(p(&[-1, 0, 1]).gcd(&p(&[2, 2])), p(&[1, 1]));
        assert_eq!(p(&[0, 0, 1]).lcm(&p(&[0, 1, 1])), p(&[0, 0, 1, 1]));
    }

    #[test]
    fn display() {
        assert_eq!(p(&[1, -1, 3]).to_string(), "3*s^2 - s + 1");
        assert_eq!(Polynomial::zero().to_string(), "0");
        assert_eq!(p(&[0, -2]).to_string(), "-2*s");
    }
}
