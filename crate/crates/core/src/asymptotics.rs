//! Closed-form large-degree predictions and the Laplace-method pieces behind them.
//!
//! The truncated exponential sums `a_K(x) = sum_{j<=K} x^j / j!` are linked to
//! the upper incomplete gamma function, `Gamma(K+1, x) = K! e^{-x} a_K(x)`.
//! For `x = n t` with `t < K/n` the sum is `~ e^{nt}`; past the endpoint
//! (`t > kappa = K/n`) it is governed by its last terms and admits the
//! Watson-lemma expansion
//!
//! ```text
//! a_K = (nt)^K / K! * ( y'(0) + y''(0)/n + y'''(0)/n^2 + O(n^-3) )
//! y'(0)   = -t / (kappa - t)
//! y''(0)  =  kappa t / (kappa - t)^3
//! y'''(0) =  kappa t (2 (kappa - t) - 3 kappa) / (kappa - t)^5
//! ```
//!
//! `y'''(0)` follows from `(g''' g' - 3 g''^2) / g'^5` with
//! `g(y) = kappa ln y - y`. The commonly quoted form
//! `t (2 (kappa - t) - 3 kappa^2) / (kappa - t)^5` drops a factor of `kappa`
//! in the first product and stalls the remainder at `O(n^-2)`; it is kept as
//! [`CoefficientForm::Printed`] for comparison.
//!
//! The expansions of `b_K` and `c_K` are obtained from the `a` expansion at
//! shifted indices. The commonly quoted closed form for `c_K` has a `1/n`
//! coefficient that differs from this by `t (1 - kappa) / (t - kappa)^3`; it
//! is reproduced verbatim by [`endpoint_expansion_value_printed`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, VarianceProfile};
use crate::error::{Error, Result};
use crate::series::scaled_power_sums;

/// Minimum `|t - kappa|` accepted by the endpoint expansion.
pub const POLE_GUARD: f64 = 1e-3;

/// `ln k!` by direct summation.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `ln a_k(x)` for the exponential (Weyl) weights.
fn ln_exp_partial_sum(k: usize, x: f64) -> Result<f64> {
    let profile = VarianceProfile::new(EnsembleKind::Weyl, k)?;
    Ok(scaled_power_sums(&profile, k, x)?.ln_a())
}

/// `ln Gamma(k, t)` for integer `k >= 1`, via `Gamma(k, t) = (k-1)! e^{-t} a_{k-1}(t)`.
pub fn upper_incomplete_gamma_integer(k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("incomplete gamma order must be >= 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("incomplete gamma argument {t} must be positive")));
    }
    Ok(ln_factorial(k - 1) - t + ln_exp_partial_sum(k - 1, t)?)
}

/// `a_{alpha n - k}(n t) / e^{n t}`, which tends to 1 for `t < alpha`.
///
/// `alpha n` is rounded to the nearest integer before the offset is applied.
pub fn interior_limit_check(alpha: f64, k_offset: i64, n: usize, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    if !(t > 0.0 && t < alpha) {
        return Err(Error::InvalidArgument(format!(
            "interior regime needs 0 < t < alpha (t = {t}, alpha = {alpha})"
        )));
    }
    let index = (alpha * n as f64).round() as i64 - k_offset;
    if index < 1 {
        return Err(Error::InvalidArgument(format!("alpha n - k = {index} is not a positive integer")));
    }
    let x = n as f64 * t;
    Ok((ln_exp_partial_sum(index as usize, x)? - x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientForm {
    /// Coefficients re-derived from `g(y) = kappa ln y - y`.
    Corrected,
    /// Coefficients exactly as commonly printed for this expansion.
    Printed,
}

/// Watson-lemma coefficients of the endpoint expansion at `(kappa, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEndpointExpansion {
    pub kappa: f64,
    pub t: f64,
    pub order: usize,
    /// `[y'(0), y''(0), y'''(0)]`
    pub coefficients: [f64; 3],
    pub form: CoefficientForm,
}

impl LaplaceEndpointExpansion {
    pub fn new(kappa: f64, t: f64, order: usize, form: CoefficientForm) -> Result<Self> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!("expansion order {order} exceeds 2")));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidArgument(format!("kappa = {kappa} outside (0, 1]")));
        }
        let gap = t - kappa;
        if gap.abs() <= POLE_GUARD {
            return Err(Error::ExpansionPole { gap: gap.abs(), guard: POLE_GUARD });
        }
        if gap < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "endpoint regime needs t > kappa (t = {t}, kappa = {kappa})"
            )));
        }
        let d = kappa - t;
        let y1 = -t / d;
        let y2 = kappa * t / d.powi(3);
        let y3 = match form {
            CoefficientForm::Corrected => kappa * t * (2.0 * d - 3.0 * kappa) / d.powi(5),
            CoefficientForm::Printed => t * (2.0 * d - 3.0 * kappa * kappa) / d.powi(5),
        };
        Ok(Self { kappa, t, order, coefficients: [y1, y2, y3], form })
    }

    /// `sum_{i <= order} y^{(i+1)}(0) / n^i`
    pub fn bracket(&self, n: f64) -> f64 {
        self.coefficients
            .iter()
            .take(self.order + 1)
            .enumerate()
            .map(|(i, y)| y / n.powi(i as i32))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumKind {
    A,
    B,
    C,
}

/// A real number as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: f64,
    /// `kappa` actually used (`round(kappa n) / n`).
    pub kappa: f64,
}

impl LogValue {
    fn from_parts(ln_prefactor: f64, bracket: f64, kappa: f64) -> Self {
        Self { ln_abs: ln_prefactor + bracket.abs().ln(), sign: bracket.signum(), kappa }
    }

    /// `|self / reference - 1|` for a positive reference given as a log.
    pub fn relative_error(&self, ln_reference: f64) -> f64 {
        (self.sign * (self.ln_abs - ln_reference).exp() - 1.0).abs()
    }
}

fn endpoint_index(kappa: f64, n: usize) -> Result<usize> {
    let index = (kappa * n as f64).round();
    if index < 1.0 {
        return Err(Error::InvalidArgument(format!("kappa n = {} rounds below 1", kappa * n as f64)));
    }
    Ok(index as usize)
}

/// `ln((nt)^K / K!)`
fn ln_leading_term(index: usize, x: f64) -> f64 {
    index as f64 * x.ln() - ln_factorial(index)
}

fn ln_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Endpoint (`t > kappa`) expansion of `a_K`, `b_K` or `c_K` at `x = n t`, `K = round(kappa n)`.
///
/// `b_K = x a_{K-1}` and `c_K = x^2 a_{K-2} + x a_{K-1}` are expanded through
/// the `a` expansion at the shifted indices.
pub fn endpoint_expansion_value(
    kind: SumKind,
    kappa: f64,
    n: usize,
    t: f64,
    order: usize,
) -> Result<LogValue> {
    let index = endpoint_index(kappa, n)?;
    let nf = n as f64;
    let x = nf * t;
    let a_at = |k: usize| -> Result<f64> {
        let e = LaplaceEndpointExpansion::new(k as f64 / nf, t, order, CoefficientForm::Corrected)?;
        Ok(ln_leading_term(k, x) + e.bracket(nf).ln())
    };
    let kappa_used = index as f64 / nf;
    // guard the caller's kappa as well
    LaplaceEndpointExpansion::new(kappa_used, t, order, CoefficientForm::Corrected)?;
    let ln = match kind {
        SumKind::A => a_at(index)?,
        SumKind::B => x.ln() + a_at(index - 1)?,
        SumKind::C => {
            if index < 2 {
                return Err(Error::InvalidArgument("c expansion needs kappa n >= 2".into()));
            }
            ln_add(2.0 * x.ln() + a_at(index - 2)?, x.ln() + a_at(index - 1)?)
        }
    };
    Ok(LogValue { ln_abs: ln, sign: 1.0, kappa: kappa_used })
}

/// The same expansions with the brackets in their commonly printed form.
pub fn endpoint_expansion_value_printed(
    kind: SumKind,
    kappa: f64,
    n: usize,
    t: f64,
    order: usize,
) -> Result<LogValue> {
    let index = endpoint_index(kappa, n)?;
    let nf = n as f64;
    let k = index as f64 / nf;
    let e = LaplaceEndpointExpansion::new(k, t, order, CoefficientForm::Printed)?;
    let x = nf * t;
    let d = t - k;
    let shared_tail = [0.0, -k * t / d.powi(3), -t * (2.0 * k - 3.0 * k * k - 2.0 * t) / d.powi(5)];
    let truncated = |c: [f64; 3]| -> f64 {
        c.iter().take(order + 1).enumerate().map(|(i, v)| v / nf.powi(i as i32)).sum()
    };
    let (extra_powers, bracket) = match kind {
        SumKind::A => (0.0, e.bracket(nf)),
        SumKind::B => (1.0, truncated([k / d, shared_tail[1], shared_tail[2]])),
        SumKind::C => (
            2.0,
            truncated([
                k * k / (t * d),
                ((k - 1.0) * t * t - 2.0 * t * k * k + k * k * k) / (t * d.powi(3)),
                ((2.0 - k) * t * t + (5.0 * k * k - 2.0 * k) * t - k * k * k) / d.powi(5),
            ]),
        ),
    };
    Ok(LogValue::from_parts(ln_leading_term(index, x) + extra_powers * x.ln(), bracket, k))
}

/// Direct scaled summation of `a_K`, `b_K` or `c_K` (natural log) at `x`.
pub fn direct_sum_ln(kind: SumKind, index: usize, x: f64) -> Result<f64> {
    let profile = VarianceProfile::new(EnsembleKind::Weyl, index)?;
    let s = scaled_power_sums(&profile, index, x)?;
    Ok(match kind {
        SumKind::A => s.ln_a(),
        SumKind::B => s.ln_b(),
        SumKind::C => s.ln_c(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MFixed,
    MProportional,
    MEqualsN,
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "m-fixed" => Ok(Regime::MFixed),
            "m-proportional" => Ok(Regime::MProportional),
            "m-equals-n" => Ok(Regime::MEqualsN),
            _ => Err(Error::InvalidArgument(format!("unknown regime `{s}`"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::MFixed => "m-fixed",
            Regime::MProportional => "m-proportional",
            Regime::MEqualsN => "m-equals-n",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    Theorem,
    Conjecture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub regime: Regime,
    pub mode: PredictionMode,
    pub value: f64,
    pub formula_id: String,
}

/// Leading-order `E N(C)` for the declared regime.
///
/// A single `(n, m)` pair cannot tell "m fixed" from "m proportional to n",
/// so the caller names the regime.
pub fn predict_expected_zeros(
    kind: EnsembleKind,
    n: usize,
    m: usize,
    regime: Regime,
    mode: PredictionMode,
) -> Result<AsymptoticPrediction> {
    if m > n || n == 0 {
        return Err(Error::InvalidArgument(format!("need 0 <= m <= n and n >= 1 (n = {n}, m = {m})")));
    }
    if regime == Regime::MEqualsN && m != n {
        return Err(Error::InvalidArgument(format!("regime m-equals-n with m = {m} != n = {n}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let third = mf.powf(1.5) / 3.0;
    let (value, formula_id) = match (kind, mode, regime) {
        (EnsembleKind::Weyl, PredictionMode::Theorem, Regime::MFixed) => (nf, "weyl:n"),
        (EnsembleKind::Weyl, PredictionMode::Theorem, _) => (third, "weyl:m^(3/2)/3"),
        (EnsembleKind::Weyl, PredictionMode::Conjecture, _) => (third + nf, "weyl-conjecture:m^(3/2)/3+n"),
        (EnsembleKind::Kostlan, PredictionMode::Theorem, Regime::MEqualsN) => {
            (PI / 4.0 * nf.powf(1.5), "kostlan:pi/4*n^(3/2)")
        }
        (EnsembleKind::Kostlan, PredictionMode::Theorem, _) => (nf, "kostlan:n"),
        (EnsembleKind::Naive, PredictionMode::Theorem, Regime::MFixed) => (nf, "naive:n"),
        (EnsembleKind::Naive, _, _) => {
            return Err(Error::Unsupported(
                "naive ensemble: only c1 n log n <= E N <= c2 n log n is known for m = n, with \
                 unspecified constants"
                    .into(),
            ))
        }
        (k, PredictionMode::Conjecture, _) => {
            return Err(Error::Unsupported(format!("conjecture mode is defined for weyl only, not {k}")))
        }
        (k, _, _) => {
            return Err(Error::Unsupported(format!(
                "no closed-form constant for {k} in regime {regime}"
            )))
        }
    };
    if value <= 0.0 {
        return Err(Error::InvalidArgument("prediction vanishes for m = 0 in this regime".into()));
    }
    Ok(AsymptoticPrediction { kind, n, m, regime, mode, value, formula_id: formula_id.to_string() })
}
