//! Time-domain kernels for strictly integral detector operators.
//!
//! On a window `[0, T]`, the operational rules send `1/s^m` to `m`-fold
//! integration and `(d/ds)^a` to multiplication by `(-t)^a`. By Cauchy's
//! repeated-integration formula, a term `c * s^{-m} (d/ds)^a` applied to the
//! signal and read at the window end is
//!
//! ```text
//! c / (m-1)! * ∫_0^T (T - tau)^(m-1) (-tau)^a x(tau) dtau
//! ```
//!
//! so every power of the delay gets one polynomial kernel `K(T, tau)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::algebra::{binomial, Q};
use crate::builder::{DetectorOperator, ModelSpec};
use crate::error::{Error, Result};

/// Bivariate polynomial in the window length `T` and the integration
/// variable `tau`, keyed by `(power of T, power of tau)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WindowPoly {
    terms: BTreeMap<(usize, usize), Q>,
}

impl WindowPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((usize, usize), Q)>) -> Self {
        let mut p = Self::zero();
        for (k, c) in terms {
            p.add_term(k.0, k.1, c);
        }
        p
    }

    pub fn add_term(&mut self, t_pow: usize, tau_pow: usize, c: Q) {
        let e = self.terms.entry((t_pow, tau_pow)).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(t_pow, tau_pow));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), &Q)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn coeff(&self, t_pow: usize, tau_pow: usize) -> Q {
        self.terms.get(&(t_pow, tau_pow)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn tau_degree(&self) -> usize {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    /// `∫_0^T K(T, tau) tau^k dtau`, a polynomial in `T` alone (keyed with
    /// `tau` power 0).
    pub fn moment(&self, k: usize) -> WindowPoly {
        Self::from_terms(self.terms().map(|((a, b), c)| {
            let n = b + k + 1;
            ((a + n, 0), c / Q::from_integer(BigInt::from(n)))
        }))
    }

    pub fn eval(&self, t: f64, tau: f64) -> f64 {
        // group by tau power: coefficient polynomials in T, then Horner in tau
        let deg = self.tau_degree();
        let mut by_tau = vec![0.0; deg + 1];
        for ((a, b), c) in self.terms() {
            by_tau[b] += c.to_f64().unwrap_or(f64::NAN) * t.powi(a as i32);
        }
        by_tau.iter().rev().fold(0.0, |acc, c| acc * tau + c)
    }

    pub fn eval_exact(&self, t: &Q, tau: &Q) -> Q {
        self.terms().fold(Q::zero(), |acc, ((a, b), c)| {
            acc + c * pow_q(t, a) * pow_q(tau, b)
        })
    }
}

fn pow_q(x: &Q, k: usize) -> Q {
    (0..k).fold(Q::one(), |acc, _| acc * x)
}

impl fmt::Display for WindowPoly {
    /// Descending total degree, then descending power of `T`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|k| std::cmp::Reverse((k.0 + k.1, k.0)));
        let names: Vec<String> = keys
            .iter()
            .map(|&(a, b)| {
                let parts: Vec<String> =
                    [(a, "T"), (b, "tau")].iter().filter(|(k, _)| *k > 0).map(|&(k, v)| {
                        if k == 1 { v.to_string() } else { format!("{v}^{k}") }
                    }).collect();
                parts.join("*")
            })
            .collect();
        crate::algebra::fmt_terms(f, keys.iter().zip(names).map(|(k, n)| (&self.terms[k], n)))
    }
}

/// One kernel per power of the delay.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicKernel {
    kernels: Vec<WindowPoly>,
    pub model: ModelSpec,
}

impl SymbolicKernel {
    pub fn kernels(&self) -> &[WindowPoly] {
        &self.kernels
    }

    pub fn degree(&self) -> usize {
        self.kernels.len().saturating_sub(1)
    }
}

fn factorial(n: usize) -> Q {
    Q::from_integer((1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k)))
}

/// Per-term Cauchy kernels summed into one polynomial per power of the delay.
pub fn kernelize(d: &DetectorOperator) -> Result<SymbolicKernel> {
    let mut kernels = Vec::with_capacity(d.omega.coeffs().len());
    for (nu, op) in d.omega.coeffs().iter().enumerate() {
        let mut k = WindowPoly::zero();
        for (alpha, rho) in op.terms() {
            let laurent = rho.laurent_terms().ok_or_else(|| Error::NotStrictlyIntegral {
                term: format!("t^{nu}: ({rho})*D^{alpha}"),
            })?;
            for (e, c) in laurent {
                if e >= 0 {
                    return Err(Error::NotStrictlyIntegral {
                        term: format!("t^{nu}: ({rho})*D^{alpha}"),
                    });
                }
                let m = (-e) as usize;
                let base = c / factorial(m - 1);
                // (T - tau)^(m-1) (-tau)^alpha
                for j in 0..m {
                    let sign = if (j + alpha) % 2 == 0 { Q::one() } else { -Q::one() };
                    k.add_term(m - 1 - j, j + alpha, &base * binomial(m - 1, j) * sign);
                }
            }
        }
        kernels.push(k);
    }
    Ok(SymbolicKernel { kernels, model: d.model.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Trapezoid,
    Simpson,
}

impl Quadrature {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trapezoid => "trapezoid",
            Self::Simpson => "simpson",
        }
    }
}

impl FromStr for Quadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(Self::Trapezoid),
            "simpson" => Ok(Self::Simpson),
            other => Err(Error::InvalidDiscretization(format!("unknown quadrature `{other}`"))),
        }
    }
}

/// Composite rule weights over `n` equispaced nodes, already scaled by `h`.
pub fn quadrature_weights(n: usize, h: f64, rule: Quadrature) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidDiscretization("need at least two nodes".into()));
    }
    match rule {
        Quadrature::Trapezoid => {
            let mut q = vec![h; n];
            q[0] = 0.5 * h;
            q[n - 1] = 0.5 * h;
            Ok(q)
        }
        Quadrature::Simpson => {
            if n.is_multiple_of(2) {
                return Err(Error::InvalidDiscretization(format!(
                    "simpson needs an odd number of nodes, got {n}"
                )));
            }
            Ok((0..n)
                .map(|i| {
                    let w = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * h / 3.0
                })
                .collect())
        }
    }
}

/// Minimum window length accepted by [`discretize`].
pub const MIN_WINDOW: usize = 8;

/// Sampled kernels, ready to slide over data. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDetector {
    weights: Vec<Vec<f64>>,
    window: usize,
    h: f64,
    quadrature: Quadrature,
    model: ModelSpec,
    trend_projection: Option<usize>,
}

impl DiscreteDetector {
    /// `weights()[nu][i]` multiplies sample `i` of the window for delay power `nu`.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sample_period(&self) -> f64 {
        self.h
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// Degree in the delay.
    pub fn degree(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    /// Window length `T = (W - 1) h`.
    pub fn span(&self) -> f64 {
        (self.window - 1) as f64 * self.h
    }

    /// The window middle `T/2`, where the delay is evaluated.
    pub fn t_mid(&self) -> f64 {
        0.5 * self.span()
    }

    /// Degree of the trend projection applied, if any.
    pub fn trend_projection(&self) -> Option<usize> {
        self.trend_projection
    }

    /// Removes from every weight vector its component along sampled
    /// polynomials of degree `<= degree`, so that the discrete sums annihilate
    /// those trends to rounding error instead of to quadrature error. The
    /// correction has the size of the quadrature error.
    pub fn project_out_trends(mut self, degree: usize) -> Self {
        let w = self.window;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for j in 0..=degree.min(w - 1) {
            let mut v: Vec<f64> =
                (0..w).map(|i| (2.0 * i as f64 / (w - 1) as f64 - 1.0).powi(j as i32)).collect();
            // two Gram–Schmidt passes
            for _ in 0..2 {
                for b in &basis {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        for wv in &mut self.weights {
            for _ in 0..2 {
                for b in &basis {
                    let dot: f64 = wv.iter().zip(b).map(|(x, y)| x * y).sum();
                    wv.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                }
            }
        }
        self.trend_projection = Some(degree);
        self
    }
}

/// `weights[nu][i] = q_i * K_nu(T, i h)` with `T = (W - 1) h`.
pub fn discretize(k: &SymbolicKernel, window: usize, h: f64, rule: Quadrature) -> Result<DiscreteDetector> {
    if window < MIN_WINDOW {
        return Err(Error::InvalidDiscretization(format!(
            "window of {window} samples is below the minimum of {MIN_WINDOW}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidDiscretization(format!("sample period {h} must be positive")));
    }
    let q = quadrature_weights(window, h, rule)?;
    let span = (window - 1) as f64 * h;
    let weights = k
        .kernels()
        .iter()
        .map(|kern| (0..window).map(|i| q[i] * kern.eval(span, i as f64 * h)).collect())
        .collect();
    Ok(DiscreteDetector {
        weights,
        window,
        h,
        quadrature: rule,
        model: k.model.clone(),
        trend_projection: None,
    })
}

/// Differential-testing reference for the kernel path.
///
/// Computes each term `c s^{-m} (d/ds)^a` by literal repeated integration
/// instead of the closed-form Cauchy kernel. Integration order is swapped:
/// the unit function is integrated `m - 1` times backwards from the window
/// end, each pass exactly on every cell as a piecewise polynomial, and the
/// result weights `(-tau)^a x(tau)` under the same outer quadrature. Returns
/// one value per power of the delay.
pub fn oracle_iterated_integration(
    d: &DetectorOperator,
    samples: &[f64],
    h: f64,
    rule: Quadrature,
) -> Result<Vec<f64>> {
    let w = samples.len();
    let q = quadrature_weights(w, h, rule)?;
    let tau: Vec<f64> = (0..w).map(|i| i as f64 * h).collect();
    let mut cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut out = Vec::with_capacity(d.omega.coeffs().len());
    for (nu, op) in d.omega.coeffs().iter().enumerate() {
        let mut acc = 0.0;
        for (alpha, rho) in op.terms() {
            let laurent = rho.laurent_terms().ok_or_else(|| Error::NotStrictlyIntegral {
                term: format!("t^{nu}: ({rho})*D^{alpha}"),
            })?;
            for (e, c) in laurent {
                if e >= 0 {
                    return Err(Error::NotStrictlyIntegral {
                        term: format!("t^{nu}: ({rho})*D^{alpha}"),
                    });
                }
                let m = (-e) as usize;
                let j = cache.entry(m - 1).or_insert_with(|| backward_iterated_unit(m - 1, w, h));
                let c = c.to_f64().unwrap_or(f64::NAN);
                let term: f64 = (0..w)
                    .map(|i| q[i] * j[i] * (-tau[i]).powi(alpha as i32) * samples[i])
                    .sum();
                acc += c * term;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Nodal values of `J_k(tau) = ∫_tau^T J_{k-1}`, `J_0 = 1`, computed pass by
/// pass with each cell carried as a local polynomial in `sigma = tau - tau_i`.
fn backward_iterated_unit(k: usize, w: usize, h: f64) -> Vec<f64> {
    let cells = w - 1;
    let mut local: Vec<Vec<f64>> = vec![vec![1.0]; cells];
    for _ in 0..k {
        let mut next = vec![Vec::new(); cells];
        let mut right = 0.0; // J_k at the right node of the current cell
        for i in (0..cells).rev() {
            // antiderivative A(sigma) of the previous pass, A(0) = 0
            let prev = &local[i];
            let mut anti = vec![0.0; prev.len() + 1];
            for (p, c) in prev.iter().enumerate() {
                anti[p + 1] = c / (p + 1) as f64;
            }
            let a_h = anti.iter().rev().fold(0.0, |acc, c| acc * h + c);
            // J(tau_i + sigma) = right + A(h) - A(sigma)
            let mut poly: Vec<f64> = anti.iter().map(|c| -c).collect();
            poly[0] = right + a_h;
            right = poly[0];
            next[i] = poly;
        }
        local = next;
    }
    let mut nodal: Vec<f64> = local.iter().map(|p| p[0]).collect();
    // value at the window end is the empty integral
    nodal.push(if k == 0 { 1.0 } else { 0.0 });
    nodal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_detector_linear;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn step_kernel() -> SymbolicKernel {
        kernelize(&build_detector_linear(&ModelSpec::step()).unwrap()).unwrap()
    }

    #[test]
    fn single_term_kernels() {
        use crate::algebra::{DiffOperator, OperatorPolynomial, RationalFunction};
        let mk = |op: DiffOperator| DetectorOperator {
            omega: OperatorPolynomial::from_operator(op),
            depth: 0,
            model: ModelSpec::step(),
            max_deriv: 0,
        };
        let k = kernelize(&mk(DiffOperator::from_rf(RationalFunction::s_pow(-2)))).unwrap();
        assert_eq!(k.kernels()[0], WindowPoly::from_terms([((1, 0), q(1)), ((0, 1), q(-1))]));
        let k = kernelize(&mk(DiffOperator::term(RationalFunction::s_pow(-1), 2))).unwrap();
        assert_eq!(k.kernels()[0], WindowPoly::from_terms([((0, 2), q(1))]));
        let bad = mk(DiffOperator::from_rf(RationalFunction::one()));
        assert!(matches!(kernelize(&bad), Err(Error::NotStrictlyIntegral { .. })));
    }

    #[test]
    fn step_detector_kernels() {
        let k = step_kernel();
        // oracle: sum of tau^2, 2(T - tau)(-tau), (-tau), (T - tau) expanded by hand
        assert_eq!(k.kernels()[0], WindowPoly::from_terms([((0, 2), q(3)), ((1, 1), q(-2))]));
        assert_eq!(k.kernels()[1], WindowPoly::from_terms([((1, 0), q(1)), ((0, 1), q(-2))]));
        assert_eq!(k.kernels()[0].to_string(), "-2*T*tau + 3*tau^2");
        assert_eq!(k.kernels()[1].to_string(), "T - 2*tau");
    }

    #[test]
    fn step_kernels_integrate_to_zero() {
        for kern in step_kernel().kernels() {
            assert!(kern.moment(0).is_zero());
        }
    }

    #[test]
    fn trapezoid_and_simpson_weights() {
        let h = 0.1;
        let t = quadrature_weights(5, h, Quadrature::Trapezoid).unwrap();
        let expected = [0.05, 0.1, 0.1, 0.1, 0.05];
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = quadrature_weights(5, 3.0, Quadrature::Simpson).unwrap();
        assert_eq!(s, vec![1.0, 4.0, 2.0, 4.0, 1.0]);
        assert!(quadrature_weights(6, h, Quadrature::Simpson).is_err());
    }

    #[test]
    fn discretize_validates() {
        let k = step_kernel();
        assert!(discretize(&k, 7, 0.01, Quadrature::Trapezoid).is_err());
        assert!(discretize(&k, 64, 0.0, Quadrature::Trapezoid).is_err());
        assert!(discretize(&k, 64, 0.01, Quadrature::Simpson).is_err());
        assert!(discretize(&k, 65, 0.01, Quadrature::Simpson).is_ok());
    }

    #[test]
    fn constant_residual_is_second_order() {
        // T fixed at 1, W grows: residual of sum_i w_i * 1 against the exact 0
        let k = step_kernel();
        let residual = |w: usize| {
            let d = discretize(&k, w, 1.0 / (w - 1) as f64, Quadrature::Trapezoid).unwrap();
            d.weights()[0].iter().sum::<f64>()
        };
        let r: Vec<f64> = [33, 65, 129].iter().map(|&w| residual(w)).collect();
        for pair in r.windows(2) {
            let order = (pair[0] / pair[1]).abs().log2();
            assert!((order - 2.0).abs() < 0.05, "{order}");
        }
        // trapezoid minus exact is h^2/12 [K'(T) - K'(0)] = h^2 T / 2
        let h = 1.0 / 64.0;
        assert!((r[1] - h * h / 2.0).abs() < 1e-14, "{}", r[1]);
    }

    #[test]
    fn trend_projection_annihilates_polynomials() {
        let k = step_kernel();
        let d = discretize(&k, 64, 0.01, Quadrature::Trapezoid).unwrap().project_out_trends(0);
        for w in d.weights() {
            assert!(w.iter().sum::<f64>().abs() < 1e-15);
        }
        let raw = discretize(&k, 64, 0.01, Quadrature::Trapezoid).unwrap();
        let diff: f64 = raw.weights()[0]
            .iter()
            .zip(&d.weights()[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-5);
    }

    #[test]
    fn backward_unit_integrals_match_cauchy() {
        let (w, h) = (20, 0.05);
        let t = (w - 1) as f64 * h;
        for k in 0..6 {
            let j = backward_iterated_unit(k, w, h);
            let fact: f64 = (1..=k).map(|x| x as f64).product();
            for (i, v) in j.iter().enumerate() {
                let exact = (t - i as f64 * h).powi(k as i32) / fact;
                assert!((v - exact).abs() < 1e-13, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn oracle_matches_kernel_on_a_step() {
        let det = build_detector_linear(&ModelSpec::step()).unwrap();
        let disc = discretize(&kernelize(&det).unwrap(), 64, 0.01, Quadrature::Trapezoid).unwrap();
        let x: Vec<f64> = (0..64).map(|i| if i < 40 { 0.3 } else { 1.3 }).collect();
        let oracle = oracle_iterated_integration(&det, &x, 0.01, Quadrature::Trapezoid).unwrap();
        for (w, o) in disc.weights().iter().zip(&oracle) {
            let kern: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((kern - o).abs() <= 1e-10 * o.abs().max(1e-300), "{kern} {o}");
        }
        let zero = oracle_iterated_integration(&det, &[0.0; 64], 0.01, Quadrature::Trapezoid).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exact_evaluation_agrees_with_float() {
        let k = step_kernel();
        let exact = k.kernels()[0].eval_exact(&q(2), &Q::new(1.into(), 2.into()));
        assert_eq!(exact, Q::new((-5).into(), 4.into()));
        assert!((k.kernels()[0].eval(2.0, 0.5) + 1.25).abs() < 1e-15);
    }
}
