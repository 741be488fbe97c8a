//! Symbolic derivation of detector operators for local signal models.
//!
//! A model says what the signal looks like on one short window around a
//! change at `t`: `s^n X = x1 + x2 e^{-t s}`, with `x1` a polynomial trend of
//! degree at most `n1` (in the operational domain, `sum gamma_k / s^(k+1)`),
//! `x2` the post-change increment and `n` the change-point order (0 for a
//! jump in the signal itself, 1 for a jump in its slope, ...). The builders
//! produce `Omega(t) = sum_nu t^nu Omega_nu`, an operator polynomial in the
//! delay with `Omega(t) X = 0` for every signal of the model, in strictly
//! finite integral form.

use crate::algebra::{
    annihilator_of_span, conjugate_by_delay, to_integral_form, DiffOperator, OperatorPolynomial,
    Polynomial, RationalFunction, Q,
};
use crate::error::{Error, Result};
use crate::noise::NoiseRng;

/// Default bound on every integer in a [`ModelSpec`].
pub const DEFAULT_MAX_PARAM: usize = 8;

/// Post-change increment model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum X2Kind {
    /// `gamma / s^(n2+1)`: a jump of order `n2` with unknown amplitude.
    Monomial { n2: usize },
    /// Known rational function `a/b`.
    Rational { a: Polynomial, b: Polynomial },
    /// `sum_{k<=n2} gamma_k / s^(k+1)` with unknown coefficients.
    Polynomial { n2: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub n1: usize,
    pub x2: X2Kind,
    pub order: usize,
    /// Extra `1/s` smoothing integrals beyond the minimal depth.
    pub extra_depth: usize,
}

impl ModelSpec {
    /// Piecewise constant signal, jump in the level.
    pub fn step() -> Self {
        Self::monomial(0, 0, 0)
    }

    pub fn monomial(n1: usize, n2: usize, order: usize) -> Self {
        Self { n1, x2: X2Kind::Monomial { n2 }, order, extra_depth: 0 }
    }

    pub fn polynomial(n1: usize, n2: usize, order: usize) -> Self {
        Self { n1, x2: X2Kind::Polynomial { n2 }, order, extra_depth: 0 }
    }

    pub fn rational(n1: usize, a: Polynomial, b: Polynomial, order: usize) -> Self {
        Self { n1, x2: X2Kind::Rational { a, b }, order, extra_depth: 0 }
    }

    pub fn with_extra_depth(mut self, extra: usize) -> Self {
        self.extra_depth = extra;
        self
    }

    pub fn validate(&self, max: usize) -> Result<()> {
        let too_big = |name: &str, v: usize| -> Result<()> {
            if v > max {
                return Err(Error::InvalidModel(format!("{name} = {v} exceeds the bound {max}")));
            }
            Ok(())
        };
        too_big("n1", self.n1)?;
        too_big("order", self.order)?;
        too_big("extra_depth", self.extra_depth)?;
        match &self.x2 {
            X2Kind::Monomial { n2 } | X2Kind::Polynomial { n2 } => too_big("n2", *n2)?,
            X2Kind::Rational { a, b } => {
                if a.is_zero() {
                    return Err(Error::InvalidModel("rational x2 with a = 0".into()));
                }
                if b.is_zero() {
                    return Err(Error::InvalidModel("rational x2 with b = 0".into()));
                }
                if !a.gcd(b).is_one() {
                    return Err(Error::InvalidModel(format!("a = {a} and b = {b} are not coprime")));
                }
                too_big("deg a", a.degree().unwrap_or(0))?;
                too_big("deg b", b.degree().unwrap_or(0))?;
            }
        }
        Ok(())
    }

    /// Degree of the time-domain polynomial trends the detector ignores.
    pub fn trend_degree(&self) -> usize {
        self.n1 + self.order
    }

    /// Pre-change basis in the `s^n X` domain: `1/s^(k+1)`, `k <= n1`.
    fn x1_basis(&self) -> Vec<RationalFunction> {
        (0..=self.n1).map(|k| RationalFunction::s_pow(-(k as i64) - 1)).collect()
    }

    fn x2_basis(&self) -> Result<Vec<RationalFunction>> {
        Ok(match &self.x2 {
            X2Kind::Monomial { n2 } => vec![RationalFunction::s_pow(-(*n2 as i64) - 1)],
            X2Kind::Polynomial { n2 } => {
                (0..=*n2).map(|k| RationalFunction::s_pow(-(k as i64) - 1)).collect()
            }
            X2Kind::Rational { a, b } => vec![RationalFunction::new(a.clone(), b.clone())?],
        })
    }

    /// Pre-change trend basis of the observed signal `X` itself.
    pub fn signal_trend_basis(&self) -> Vec<RationalFunction> {
        let shift = RationalFunction::s_pow(-(self.order as i64));
        self.x1_basis().iter().map(|f| f * &shift).collect()
    }

    /// Post-change increment basis of the observed signal `X` (to be
    /// multiplied by the delay `e^{-t s}`).
    pub fn signal_jump_basis(&self) -> Result<Vec<RationalFunction>> {
        let shift = RationalFunction::s_pow(-(self.order as i64));
        Ok(self.x2_basis()?.iter().map(|f| f * &shift).collect())
    }
}

/// `Omega(t)` in strictly finite integral form, with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorOperator {
    pub omega: OperatorPolynomial,
    /// Total number of leading `1/s` factors (minimal depth plus extra).
    pub depth: usize,
    pub model: ModelSpec,
    pub max_deriv: usize,
}

impl DetectorOperator {
    pub fn degree(&self) -> usize {
        self.omega.degree().unwrap_or(0)
    }
}

/// Clears every non-`s` factor from the coefficient denominators by a left
/// polynomial multiple, which keeps all annihilation properties.
fn clear_foreign_denominators(p: &OperatorPolynomial) -> OperatorPolynomial {
    let m = p
        .coeffs()
        .iter()
        .flat_map(|op| op.terms().map(|(_, r)| r.denom().clone()).collect::<Vec<_>>())
        .fold(Polynomial::one(), |acc, d| acc.lcm(&d));
    let v = m.s_valuation().unwrap_or(0);
    let (foreign, _) = m.div_rem(&Polynomial::s_pow(v));
    if foreign.degree() == Some(0) {
        return p.clone();
    }
    p.left_mul(&RationalFunction::from_poly(foreign))
}

fn finish(omega: OperatorPolynomial, model: &ModelSpec) -> Result<DetectorOperator> {
    let omega = clear_foreign_denominators(&omega);
    let (depth, omega) = to_integral_form(&omega)?;
    let omega = omega.left_mul(&RationalFunction::s_pow(-(model.extra_depth as i64)));
    let max_deriv = omega.max_order().unwrap_or(0);
    Ok(DetectorOperator { omega, depth: depth + model.extra_depth, model: model.clone(), max_deriv })
}

fn delay_factor() -> OperatorPolynomial {
    // d/ds + t
    OperatorPolynomial::from_coeffs(vec![DiffOperator::d(), DiffOperator::identity()])
}

/// Degree-one detector for a monomial or known rational increment:
/// `Omega(t) = pi1 ∘ (d/ds + t) ∘ P ∘ s^n` where `P x2` is constant and
/// `pi1` annihilates `P x1` together with its derivative.
pub fn build_detector_linear(model: &ModelSpec) -> Result<DetectorOperator> {
    model.validate(DEFAULT_MAX_PARAM)?;
    let p = match &model.x2 {
        X2Kind::Monomial { n2 } => RationalFunction::s_pow(*n2 as i64 + 1),
        X2Kind::Rational { a, b } => {
            RationalFunction::from_poly(b.clone()).checked_div(&RationalFunction::from_poly(a.clone()))?
        }
        X2Kind::Polynomial { .. } => {
            return Err(Error::InvalidModel(
                "linear builder needs a monomial or rational increment".into(),
            ))
        }
    };
    let mut images = Vec::new();
    for g in model.x1_basis() {
        let pg = &p * &g;
        images.push(pg.derivative());
        images.push(pg);
    }
    let pi1 = annihilator_of_span(&images)?;
    let tail = DiffOperator::from_rf(&p * &RationalFunction::s_pow(model.order as i64));
    let omega = OperatorPolynomial::from_operator(pi1)
        .compose(&delay_factor())
        .compose(&OperatorPolynomial::from_operator(tail));
    let det = finish(omega, model)?;
    debug_assert_eq!(det.degree(), 1);
    Ok(det)
}

/// Detector for an increment with unknown polynomial coefficients.
///
/// The increment is removed first: with `w2` annihilating the `x2` basis,
/// `conj(w2) = w2[d/ds -> d/ds + t]` kills `x2 e^{-t s}`. Then `pi`
/// annihilates every `t`-coefficient of `conj(w2) x1`, so
/// `Omega(t) = pi ∘ conj(w2) ∘ s^n` has degree `n2 + 1` in `t`.
pub fn build_detector_general(model: &ModelSpec) -> Result<DetectorOperator> {
    model.validate(DEFAULT_MAX_PARAM)?;
    if !matches!(model.x2, X2Kind::Polynomial { .. }) {
        return Err(Error::InvalidModel(
            "general builder needs a polynomial increment with unknown coefficients".into(),
        ));
    }
    let w2 = annihilator_of_span(&model.x2_basis()?)?;
    let conj = conjugate_by_delay(&w2);
    let images: Vec<RationalFunction> =
        model.x1_basis().iter().flat_map(|g| conj.apply(g)).collect();
    let pi = annihilator_of_span(&images)?;
    let omega = OperatorPolynomial::from_operator(pi).compose(&conj).compose(
        &OperatorPolynomial::from_operator(DiffOperator::from_rf(RationalFunction::s_pow(
            model.order as i64,
        ))),
    );
    finish(omega, model)
}

/// Picks the builder matching the increment kind.
pub fn build_detector(model: &ModelSpec) -> Result<DetectorOperator> {
    match model.x2 {
        X2Kind::Polynomial { .. } => build_detector_general(model),
        _ => build_detector_linear(model),
    }
}

/// Which family a residual was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    /// Pre-change trend, must vanish for every delay value.
    Trend,
    /// Delayed increment `x2 e^{-t s}`, must vanish at the matching delay.
    DelayedJump,
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub delay: Q,
    pub kind: ResidualKind,
    pub basis: RationalFunction,
    pub value: RationalFunction,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: usize,
    /// Nonzero residuals; empty when the detector is exact.
    pub failures: Vec<Residual>,
}

impl VerifyReport {
    pub fn is_exact(&self) -> bool {
        self.failures.is_empty()
    }

    /// The residual with the largest numerator degree, or zero.
    pub fn max_residual(&self) -> RationalFunction {
        self.failures
            .iter()
            .max_by_key(|r| r.value.numer().degree())
            .map(|r| r.value.clone())
            .unwrap_or_else(RationalFunction::zero)
    }
}

/// Three pseudo-random nonzero rational delays from a fixed seed.
fn sample_delays() -> Vec<Q> {
    let mut rng = NoiseRng::new(0x5eed_de1a);
    (0..3)
        .map(|_| {
            let num = (rng.next_u64() % 41) as i64 - 20;
            let den = (rng.next_u64() % 9) as i64 + 1;
            let num = if num == 0 { 7 } else { num };
            Q::new(num.into(), den.into())
        })
        .collect()
}

/// Evaluates `Omega(t)` on the trend family and on the delayed increment at
/// three delay values, collecting every nonzero residual.
pub fn check_detector(d: &DetectorOperator) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let trend = d.model.signal_trend_basis();
    let jump = d.model.signal_jump_basis()?;
    for t in sample_delays() {
        let op = d.omega.eval(&t);
        for f in &trend {
            report.checks += 1;
            let value = op.apply(f);
            if !value.is_zero() {
                report.failures.push(Residual {
                    delay: t.clone(),
                    kind: ResidualKind::Trend,
                    basis: f.clone(),
                    value,
                });
            }
        }
        // op (f e^{-t s}) = e^{-t s} * op[d/ds -> d/ds - t] (f)
        let shifted = conjugate_by_delay(&op).eval(&-t.clone());
        for f in &jump {
            report.checks += 1;
            let value = shifted.apply(f);
            if !value.is_zero() {
                report.failures.push(Residual {
                    delay: t.clone(),
                    kind: ResidualKind::DelayedJump,
                    basis: f.clone(),
                    value,
                });
            }
        }
    }
    Ok(report)
}

/// [`check_detector`], failing loudly on any nonzero residual.
pub fn verify_detector(d: &DetectorOperator) -> Result<VerifyReport> {
    let report = check_detector(d)?;
    if let Some(r) = report.failures.first() {
        return Err(Error::VerificationFailed(format!(
            "{} nonzero residual(s); first: {:?} basis {} at t = {} gives {}",
            report.failures.len(),
            r.kind,
            r.basis,
            r.delay,
            r.value
        )));
    }
    Ok(report)
}

/// True when every coefficient is `c * s^{-m}` with `m >= 1`.
pub fn is_strictly_integral(p: &OperatorPolynomial) -> bool {
    p.coeffs()
        .iter()
        .all(|op| op.terms().all(|(_, r)| r.is_strictly_finite_integral_form()))
}
