//! Gaussian coefficient ensembles and coefficient sampling.
//!
//! A profile stores the natural logarithms of its variances: Weyl variances
//! `1/j!` underflow `f64` long before the degrees the asymptotic checks use,
//! so the linear-scale values are only materialized on request.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree accepted for binomial (Kostlan-type) profiles.
pub const MAX_KOSTLAN_DEGREE: usize = 1000;

/// Binomials up to this degree are computed in exact integer arithmetic.
const EXACT_BINOMIAL_DEGREE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// `E|a_j|^2 = 1/j!`
    Weyl,
    /// `E|a_j|^2 = C(degree, j)`
    Kostlan,
    /// i.i.d. unit-variance coefficients.
    Naive,
    /// Anti-analytic part with `E|b_j|^2 = C(j, j) = 1`, analytic part Kostlan.
    TruncatedLiteral,
    /// Anti-analytic part with `E|b_j|^2 = C(n, j)` for `j <= m`, analytic part Kostlan.
    TruncatedKostlan,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 5] = [
        EnsembleKind::Weyl,
        EnsembleKind::Kostlan,
        EnsembleKind::Naive,
        EnsembleKind::TruncatedLiteral,
        EnsembleKind::TruncatedKostlan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Weyl => "weyl",
            EnsembleKind::Kostlan => "kostlan",
            EnsembleKind::Naive => "naive",
            EnsembleKind::TruncatedLiteral => "truncated-literal",
            EnsembleKind::TruncatedKostlan => "truncated-kostlan",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "weyl" => Ok(EnsembleKind::Weyl),
            "kostlan" => Ok(EnsembleKind::Kostlan),
            "naive" => Ok(EnsembleKind::Naive),
            "truncated-literal" => Ok(EnsembleKind::TruncatedLiteral),
            "truncated-kostlan" => Ok(EnsembleKind::TruncatedKostlan),
            _ => Err(Error::UnknownKind(s.to_string())),
        }
    }
}

/// Coefficient variances `alpha_0..alpha_degree` of one Gaussian polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    kind: EnsembleKind,
    degree: usize,
    /// Degree that parameterizes the binomials (differs from `degree` only
    /// for truncated Kostlan profiles).
    ambient: usize,
    log_variances: Vec<f64>,
}

impl VarianceProfile {
    /// Builds the profile of `kind` at `degree`.
    ///
    /// For `TruncatedKostlan` the ambient degree is taken equal to `degree`;
    /// use [`VarianceProfile::truncated_kostlan`] to set it explicitly.
    pub fn new(kind: EnsembleKind, degree: usize) -> Result<Self> {
        match kind {
            EnsembleKind::TruncatedKostlan => Self::truncated_kostlan(degree, degree),
            EnsembleKind::Kostlan => Self::binomial(kind, degree, degree),
            EnsembleKind::Weyl => {
                let mut log_variances = Vec::with_capacity(degree + 1);
                let mut log_fact = 0.0;
                for j in 0..=degree {
                    if j > 0 {
                        log_fact += (j as f64).ln();
                    }
                    log_variances.push(-log_fact);
                }
                Ok(Self { kind, degree, ambient: degree, log_variances })
            }
            EnsembleKind::Naive | EnsembleKind::TruncatedLiteral => Ok(Self {
                kind,
                degree,
                ambient: degree,
                log_variances: vec![0.0; degree + 1],
            }),
        }
    }

    /// `C(ambient, j)` for `j = 0..=degree`.
    pub fn truncated_kostlan(degree: usize, ambient: usize) -> Result<Self> {
        if degree > ambient {
            return Err(Error::InvalidArgument(format!(
                "truncation degree {degree} exceeds ambient degree {ambient}"
            )));
        }
        Self::binomial(EnsembleKind::TruncatedKostlan, degree, ambient)
    }

    fn binomial(kind: EnsembleKind, degree: usize, ambient: usize) -> Result<Self> {
        if ambient > MAX_KOSTLAN_DEGREE {
            return Err(Error::DegreeOverflow { degree: ambient, max: MAX_KOSTLAN_DEGREE });
        }
        let log_variances = if ambient <= EXACT_BINOMIAL_DEGREE {
            exact_binomial_row(ambient as u64)
                .into_iter()
                .take(degree + 1)
                .map(|c| (c as f64).ln())
                .collect()
        } else {
            let mut out = Vec::with_capacity(degree + 1);
            let mut acc = 0.0;
            for j in 0..=degree {
                if j > 0 {
                    acc += ((ambient - j + 1) as f64).ln() - (j as f64).ln();
                }
                out.push(acc);
            }
            out
        };
        Ok(Self { kind, degree, ambient, log_variances })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn log_variances(&self) -> &[f64] {
        &self.log_variances
    }

    pub fn log_variance(&self, j: usize) -> f64 {
        self.log_variances[j]
    }

    /// Linear-scale variance; underflows to zero for Weyl beyond `j ~ 170`.
    pub fn variance(&self, j: usize) -> f64 {
        self.log_variances[j].exp()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.log_variances.iter().map(|l| l.exp()).collect()
    }

    /// `alpha_{j+1} / alpha_j`, supplied in closed form per kind.
    #[inline]
    pub fn ratio(&self, j: usize) -> f64 {
        match self.kind {
            EnsembleKind::Weyl => 1.0 / (j + 1) as f64,
            EnsembleKind::Kostlan | EnsembleKind::TruncatedKostlan => {
                (self.ambient - j) as f64 / (j + 1) as f64
            }
            EnsembleKind::Naive | EnsembleKind::TruncatedLiteral => 1.0,
        }
    }

    /// The same profile with every variance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {factor} must be positive")));
        }
        let shift = factor.ln();
        let mut out = self.clone();
        out.log_variances.iter_mut().for_each(|l| *l += shift);
        Ok(out)
    }
}

/// Exact row `C(n, 0..=n)`; valid for `n <= 60` without overflow.
fn exact_binomial_row(n: u64) -> Vec<u64> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c: u128 = 1;
    row.push(1);
    for j in 0..n {
        c = c * (n - j) as u128 / (j + 1) as u128;
        row.push(c as u64);
    }
    row
}

/// Variance profiles `(p, q)` of the harmonic polynomial model `kind` with
/// analytic degree `n` and anti-analytic degree `m`.
pub fn ensemble_pair(
    kind: EnsembleKind,
    n: usize,
    m: usize,
) -> Result<(VarianceProfile, VarianceProfile)> {
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} must not exceed n = {n}")));
    }
    Ok(match kind {
        EnsembleKind::Weyl | EnsembleKind::Naive | EnsembleKind::Kostlan => {
            (VarianceProfile::new(kind, n)?, VarianceProfile::new(kind, m)?)
        }
        EnsembleKind::TruncatedLiteral => (
            VarianceProfile::new(EnsembleKind::Kostlan, n)?,
            VarianceProfile::new(EnsembleKind::TruncatedLiteral, m)?,
        ),
        EnsembleKind::TruncatedKostlan => (
            VarianceProfile::new(EnsembleKind::Kostlan, n)?,
            VarianceProfile::truncated_kostlan(m, n)?,
        ),
    })
}

/// `H(z) = sum a_j z^j + sum b_j conj(z)^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPolynomial {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl HarmonicPolynomial {
    pub fn new(a: Vec<Complex64>, b: Vec<Complex64>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument("coefficient vectors must be nonempty".into()));
        }
        if b.len() > a.len() {
            return Err(Error::InvalidArgument(format!(
                "anti-analytic degree {} exceeds analytic degree {}",
                b.len() - 1,
                a.len() - 1
            )));
        }
        if a.iter().chain(b.iter()).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        if a[a.len() - 1] == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("leading coefficient a_n is zero".into()));
        }
        if b.len() > 1 && b[b.len() - 1] == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("leading coefficient b_m is zero".into()));
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len() - 1
    }

    pub fn m(&self) -> usize {
        self.b.len() - 1
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn max_coefficient(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws circularly-symmetric complex Gaussians with `E|a_j|^2 = alpha_j`.
pub fn sample_coefficients(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    seed: u64,
) -> Result<HarmonicPolynomial> {
    if profile_q.degree() > profile_p.degree() {
        return Err(Error::InvalidArgument(format!(
            "q degree {} exceeds p degree {}",
            profile_q.degree(),
            profile_p.degree()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |profile: &VarianceProfile| -> Vec<Complex64> {
        profile
            .log_variances()
            .iter()
            .map(|&lv| {
                let sd = (0.5 * (lv - std::f64::consts::LN_2)).exp();
                loop {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let c = Complex64::new(sd * re, sd * im);
                    if c.re != 0.0 || c.im != 0.0 {
                        break c;
                    }
                }
            })
            .collect()
    };
    let a = draw(profile_p);
    let b = draw(profile_q);
    HarmonicPolynomial::new(a, b)
}
