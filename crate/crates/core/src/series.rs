//! Scaled evaluation of the truncated weighted power sums
//!
//! ```text
//! a_k = sum_{j<=k} alpha_j x^j,  b_k = sum j alpha_j x^j,  c_k = sum j^2 alpha_j x^j
//! ```
//!
//! and of the Kac–Rice covariance combinations built from them.
//!
//! Terms are generated by the ratio recurrence `t_{j+1} = t_j * x * alpha_{j+1}/alpha_j`
//! and the accumulators are rescaled by exact powers of two whenever a term
//! leaves `[0, 2^64]`, so `a_k ~ e^x` never overflows. Alongside the raw sums
//! the weighted central moment `s_k = sum alpha_j x^j (j - b_k/a_k)^2` is
//! accumulated with a weighted Welford update; every downstream difference of
//! the form `a c - b^2` is rewritten in terms of `s_k` so no subtraction of
//! nearly equal products ever happens.

use serde::{Deserialize, Serialize};

use crate::ensembles::VarianceProfile;
use crate::error::{Error, Result};

const RESCALE_BITS: i32 = 64;
const RESCALE_LIMIT: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[inline]
fn pow2(e: i64) -> f64 {
    // e stays well inside the normal exponent range for all callers
    f64::powi(2.0, e as i32)
}

/// Truncated power sums at one squared radius, stored as mantissas sharing
/// the factor `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledSeries {
    base_log: f64,
    exp2: i64,
    /// Mantissa of `a_k`, normalized into `[1, 2)`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Mantissa of the central moment `c_k - b_k^2 / a_k`, accumulated without cancellation.
    pub central: f64,
    pub k: usize,
    pub x: f64,
}

impl ScaledSeries {
    /// Natural log of the common factor.
    pub fn log_scale(&self) -> f64 {
        self.base_log + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// `self.log_scale() - other.log_scale()` without the rounding of two large logs.
    pub fn log_scale_diff(&self, other: &ScaledSeries) -> f64 {
        (self.base_log - other.base_log) + (self.exp2 - other.exp2) as f64 * std::f64::consts::LN_2
    }

    /// Weighted mean index `b_k / a_k`.
    pub fn mean(&self) -> f64 {
        self.b / self.a
    }

    pub fn ln_a(&self) -> f64 {
        self.a.ln() + self.log_scale()
    }

    pub fn ln_b(&self) -> f64 {
        self.b.ln() + self.log_scale()
    }

    pub fn ln_c(&self) -> f64 {
        self.c.ln() + self.log_scale()
    }

    /// Unscaled values `(a_k, b_k, c_k)`; overflow to infinity for large `x`.
    pub fn values(&self) -> (f64, f64, f64) {
        let s = self.log_scale().exp();
        (self.a * s, self.b * s, self.c * s)
    }
}

/// Evaluates `a_k, b_k, c_k` (and the central moment) of `profile` at squared radius `x`.
pub fn scaled_power_sums(profile: &VarianceProfile, k: usize, x: f64) -> Result<ScaledSeries> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidRadius(x));
    }
    if k > profile.degree() {
        return Err(Error::InvalidArgument(format!(
            "truncation index {k} exceeds profile degree {}",
            profile.degree()
        )));
    }

    let mut exp2: i64 = 0;
    let mut term = 1.0f64;
    let mut weight = 1.0f64;
    let mut mean = 0.0f64;
    let mut central = 0.0f64;
    let mut b = 0.0f64;
    let mut c = 0.0f64;

    if x > 0.0 {
        for j in 1..=k {
            term *= x * profile.ratio(j - 1);
            while term > RESCALE_LIMIT {
                let f = pow2(-(RESCALE_BITS as i64));
                term *= f;
                weight *= f;
                central *= f;
                b *= f;
                c *= f;
                exp2 += RESCALE_BITS as i64;
            }
            if term == 0.0 {
                // monotone decay below the subnormal range: the rest is negligible
                break;
            }
            let jf = j as f64;
            let updated = weight + term;
            let delta = jf - mean;
            mean += delta * term / updated;
            central += term * delta * (jf - mean);
            weight = updated;
            b += jf * term;
            c += jf * jf * term;
        }
    }

    // normalize a into [1, 2)
    let e = weight.log2().floor() as i64;
    if e != 0 {
        let f = pow2(-e);
        weight *= f;
        central *= f;
        b *= f;
        c *= f;
        exp2 += e;
    }

    Ok(ScaledSeries {
        base_log: profile.log_variance(0),
        exp2,
        a: weight,
        b,
        c,
        central: central.max(0.0),
        k,
        x,
    })
}

/// Kac–Rice covariance combinations on one shared scale.
///
/// With `L = log_scale`, the true values are `r3 * e^L` and `r1, r2, r12 * e^{2L}`;
/// `numerator` (`r1^2 + r2^2 - 2 r12^2`) and `discriminant`
/// (`(r1 + r2)^2 - 4 r12^2`) carry `e^{4L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RTerms {
    pub log_scale: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r12: f64,
    pub numerator: f64,
    pub discriminant: f64,
}

impl RTerms {
    /// Combines the analytic-part series (index `n`) and anti-analytic-part series (index `m`).
    pub fn from_series(p: &ScaledSeries, q: &ScaledSeries) -> Self {
        let d = q.log_scale_diff(p);
        let (log_scale, rho_p, rho_q) =
            if d <= 0.0 { (p.log_scale(), 1.0, d.exp()) } else { (q.log_scale(), (-d).exp(), 1.0) };

        let (an, bn, cn, sn) = (p.a * rho_p, p.b * rho_p, p.c * rho_p, p.central * rho_p);
        let (am, bm, cm, sm) = (q.a * rho_q, q.b * rho_q, q.c * rho_q, q.central * rho_q);
        let gap = p.mean() - q.mean();

        let r3 = an + am;
        let r12 = bn * bm;
        // r3 c_n - b_n^2 = a_n s_n + a_m c_n, both terms nonnegative
        let r1 = an * sn + am * cn;
        let r2 = am * sm + an * cm;
        // r1 r2 - r12^2 = r3 (a_n c_m s_n + a_m c_n s_m)
        let cross = an * cm * sn + am * cn * sm;
        let diff = r1 - r2;
        let numerator = diff * diff + 2.0 * r3 * cross;
        // (r1 + r2)^2 - 4 r12^2 = (r1 + r2 + 2 r12)(r1 + r2 - 2 r12)
        let minus = r3 * (sn + sm) + an * am * gap * gap;
        let discriminant = (r1 + r2 + 2.0 * r12) * minus;

        Self { log_scale, r1, r2, r3, r12, numerator, discriminant }
    }
}

/// Evaluates the r-terms of the pair `(profile_p, n)`, `(profile_q, m)` at `x = |z|^2`.
pub fn r_terms(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    x: f64,
) -> Result<RTerms> {
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} must not exceed n = {n}")));
    }
    let p = scaled_power_sums(profile_p, n, x)?;
    let q = scaled_power_sums(profile_q, m, x)?;
    Ok(RTerms::from_series(&p, &q))
}
