//! Expected zero counts over radially symmetric regions.
//!
//! The Kac–Rice integral is reduced to the radial integral of the scaled
//! integrand `f(t)` with `|z|^2 = n t` and integrated by globally adaptive
//! 15-point Gauss–Kronrod panels. Panels are seeded at the breakpoints
//! `t = m/n` and `t = 1`, where the integrand changes regime. The first panel
//! starting at the origin uses `t = u^2`; the unbounded tail `[T, inf)` uses
//! `t = T / s^2`, which maps the `t^{-3/2}` and `t^{-2}` decays seen in these
//! ensembles to bounded integrands on `(0, 1]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::VarianceProfile;
use crate::error::{Error, Result};
use crate::intensity::first_intensity;

/// Start of the mapped tail for whole-plane integrals.
pub const TAIL_START: f64 = 2.0;

/// Evaluation budget (integrand calls) for one region.
pub const DEFAULT_MAX_EVALUATIONS: usize = 600_000;

// 15-point Kronrod abscissae (positive half) and weights, with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    segment: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // largest error first; ties broken by position for a fixed refinement order
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
            .then_with(|| other.segment.cmp(&self.segment))
    }
}

/// One Gauss–Kronrod 7/15 panel: `(integral, error estimate)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    resasc *= half.abs();
    resabs *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Outcome of a globally adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Integrates a set of finite segments, each with its own integrand, to a
/// common relative tolerance by always bisecting the panel with the largest
/// error estimate.
fn integrate_segments(
    segments: &[(f64, f64, &dyn Fn(f64) -> f64)],
    rel_tol: f64,
    abs_tol: f64,
    max_evaluations: usize,
) -> AdaptiveResult {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut value = 0.0;
    let mut error = 0.0;
    for (segment, &(lo, hi, f)) in segments.iter().enumerate() {
        if hi <= lo {
            continue;
        }
        let (v, e) = gk15(&f, lo, hi);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Panel { lo, hi, value: v, error: e, segment });
    }
    let tolerance = |v: f64| abs_tol.max(rel_tol * v.abs());
    let mut converged = true;
    while error > tolerance(value) {
        if evaluations + 30 > max_evaluations {
            converged = false;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // interval exhausted at machine resolution
            heap.push(Panel { error: 0.0, ..worst });
            error -= worst.error;
            if heap.iter().all(|p| p.error == 0.0) {
                converged = error <= tolerance(value);
                break;
            }
            continue;
        }
        let f = segments[worst.segment].2;
        let (v1, e1) = gk15(&f, worst.lo, mid);
        let (v2, e2) = gk15(&f, mid, worst.hi);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: v1, error: e1, segment: worst.segment });
        heap.push(Panel { lo: mid, hi: worst.hi, value: v2, error: e2, segment: worst.segment });
    }
    // resum in a fixed order to shed the running-update drift
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.segment.cmp(&b.segment).then(a.lo.total_cmp(&b.lo)));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    AdaptiveResult { value, abs_error: error, evaluations, converged }
}

/// Adaptive Gauss–Kronrod integral of `f` over the finite interval `[lo, hi]`.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_evaluations: usize,
) -> AdaptiveResult {
    let (lo, hi, sign) = if lo <= hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let r = integrate_segments(&[(lo, hi, &f)], rel_tol, 0.0, max_evaluations);
    AdaptiveResult { value: sign * r.value, ..r }
}

/// Radially symmetric integration domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Plane,
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Region {
    pub fn disc(radius: f64) -> Result<Self> {
        let r = Region::Disc { radius };
        r.validate()?;
        Ok(r)
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        let r = Region::Annulus { inner, outer };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Plane => Ok(()),
            Region::Disc { radius } if radius > 0.0 && radius.is_finite() => Ok(()),
            Region::Annulus { inner, outer }
                if inner >= 0.0 && inner < outer && outer.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidRegion(self.to_string())),
        }
    }

    /// Bounds in `t = |z|^2 / n`; the plane's upper bound is infinite.
    fn t_bounds(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match *self {
            Region::Plane => (0.0, f64::INFINITY),
            Region::Disc { radius } => (0.0, radius * radius / nf),
            Region::Annulus { inner, outer } => (inner * inner / nf, outer * outer / nf),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Plane => write!(f, "plane"),
            Region::Disc { radius } => write!(f, "disc:{radius}"),
            Region::Annulus { inner, outer } => write!(f, "annulus:{inner},{outer}"),
        }
    }
}

impl FromStr for Region {
    type Err = Error;

    /// `plane`, `disc:R` or `annulus:R1,R2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRegion(s.to_string());
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let region = match s.split_once(':') {
            None if s.trim() == "plane" => Region::Plane,
            Some(("disc", r)) => Region::Disc { radius: num(r)? },
            Some(("annulus", rs)) => {
                let (a, b) = rs.split_once(',').ok_or_else(bad)?;
                Region::Annulus { inner: num(a)?, outer: num(b)? }
            }
            _ => return Err(bad()),
        };
        region.validate()?;
        Ok(region)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// Expected number of zeros in the region.
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    /// Where the mapped tail begins (plane only).
    pub truncation_point: Option<f64>,
    pub converged: bool,
}

/// Expected number of zeros of `H_{n,m}` in `region`.
pub fn expected_zeros(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    region: Region,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    expected_zeros_with_budget(profile_p, profile_q, n, m, region, rel_tol, DEFAULT_MAX_EVALUATIONS)
}

pub fn expected_zeros_with_budget(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    region: Region,
    rel_tol: f64,
    max_evaluations: usize,
) -> Result<QuadratureResult> {
    if !(1e-12..=1e-2).contains(&rel_tol) {
        return Err(Error::InvalidArgument(format!("rel_tol {rel_tol:e} outside [1e-12, 1e-2]")));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} must not exceed n = {n}")));
    }
    if n > profile_p.degree() || m > profile_q.degree() {
        return Err(Error::InvalidArgument("degree exceeds its variance profile".into()));
    }
    region.validate()?;
    if n == 0 {
        // H is constant
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
            truncation_point: matches!(region, Region::Plane).then_some(TAIL_START),
            converged: true,
        });
    }

    let nf = n as f64;
    // t > 0 always holds at Kronrod nodes
    let f = |t: f64| nf * first_intensity(profile_p, profile_q, n, m, nf * t).unwrap_or(f64::NAN);
    let f_sqrt = |u: f64| 2.0 * u * f(u * u);
    let f_tail = |s: f64| 2.0 * TAIL_START / (s * s * s) * f(TAIL_START / (s * s));

    let (t_lo, t_hi) = region.t_bounds(n);
    let finite_hi = t_hi.min(TAIL_START);
    let mut cuts = vec![t_lo];
    for b in [m as f64 / nf, 1.0] {
        if b > t_lo && b < finite_hi {
            cuts.push(b);
        }
    }
    cuts.push(finite_hi);
    cuts.dedup();

    let mut segments: Vec<(f64, f64, &dyn Fn(f64) -> f64)> = Vec::new();
    if t_lo < finite_hi {
        for w in cuts.windows(2) {
            if w[0] == 0.0 {
                segments.push((0.0, w[1].sqrt(), &f_sqrt));
            } else {
                segments.push((w[0], w[1], &f));
            }
        }
    }
    let truncation_point = if t_hi.is_infinite() {
        segments.push((0.0, 1.0, &f_tail));
        Some(TAIL_START)
    } else {
        if t_hi > TAIL_START {
            let s_hi = (TAIL_START / t_lo.max(TAIL_START)).sqrt();
            segments.push(((TAIL_START / t_hi).sqrt(), s_hi, &f_tail));
        }
        None
    };

    let r = integrate_segments(&segments, rel_tol, 1e-300, max_evaluations);
    if !r.value.is_finite() {
        return Err(Error::InvalidArgument("integrand evaluation failed".into()));
    }
    Ok(QuadratureResult {
        value: r.value.max(0.0),
        abs_error_estimate: r.abs_error,
        evaluations: r.evaluations,
        truncation_point,
        converged: r.converged,
    })
}

/// Expected zeros in the discs of the given ascending radii, accumulated from
/// annular increments so the sequence is nondecreasing.
pub fn expected_zeros_cumulative(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    radii: &[f64],
    rel_tol: f64,
) -> Result<Vec<QuadratureResult>> {
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be positive and strictly ascending".into()));
    }
    let mut out: Vec<QuadratureResult> = Vec::with_capacity(radii.len());
    let mut inner = 0.0;
    for &r in radii {
        let region = if inner == 0.0 { Region::disc(r)? } else { Region::annulus(inner, r)? };
        let piece = expected_zeros(profile_p, profile_q, n, m, region, rel_tol)?;
        let acc = match out.last() {
            Some(prev) => QuadratureResult {
                value: prev.value + piece.value,
                abs_error_estimate: prev.abs_error_estimate + piece.abs_error_estimate,
                evaluations: prev.evaluations + piece.evaluations,
                truncation_point: None,
                converged: prev.converged && piece.converged,
            },
            None => piece,
        };
        out.push(acc);
        inner = r;
    }
    Ok(out)
}
