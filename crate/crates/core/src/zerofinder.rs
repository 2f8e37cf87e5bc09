//! All zeros of a fixed harmonic polynomial `p(z) + conj(q(z))`.
//!
//! Writing `w = conj(z)`, a zero is a solution of the pair
//!
//! ```text
//! F(z, w) = p(z) + qc(w) = 0,    G(z, w) = q(z) + pc(w) = 0
//! ```
//!
//! where `pc`, `qc` carry conjugated coefficients. Eliminating `w` gives a
//! univariate resultant in `z` whose roots contain every zero. The resultant
//! is sampled on the unit circle, interpolated by a discrete Fourier
//! transform, and its roots are taken as Newton starting points for `H`
//! itself. Spurious roots (common solutions with `w != conj(z)`) either fall
//! onto genuine zeros or fail to converge and are dropped.
//!
//! The zero count is checked against the argument principle: with `P` the
//! sense-preserving and `R` the sense-reversing zeros, `P - R = n` when the
//! analytic part dominates at infinity. A failed check triggers a polar grid of
//! extra starting points before the instance is flagged.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::HarmonicPolynomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroFinderOptions {
    pub max_newton_iterations: usize,
    /// Relative step size at which Newton stops.
    pub step_tolerance: f64,
    /// Accepted `|H| / sum |c_j| |z|^j` at a converged point.
    pub residual_tolerance: f64,
    /// Zeros closer than `dedup_tolerance * (1 + |z|)` are merged.
    pub dedup_tolerance: f64,
    /// `|J| <= degeneracy_tolerance * (|p'|^2 + |q'|^2)` marks a critical zero.
    pub degeneracy_tolerance: f64,
    /// Polar grid used when the resultant candidates miss zeros.
    pub grid_radii: usize,
    pub grid_angles: usize,
}

impl Default for ZeroFinderOptions {
    fn default() -> Self {
        Self {
            max_newton_iterations: 80,
            step_tolerance: 1e-14,
            residual_tolerance: 1e-10,
            dedup_tolerance: 1e-7,
            degeneracy_tolerance: 1e-8,
            grid_radii: 40,
            grid_angles: 48,
        }
    }
}

/// `H(z)` with its Wirtinger derivatives `dH/dz = p'(z)` and `dH/dzbar = conj(q'(z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicValue {
    pub value: Complex64,
    pub dz: Complex64,
    pub dzbar: Complex64,
}

impl HarmonicValue {
    /// Jacobian determinant of `H` as a map of the plane, `|p'|^2 - |q'|^2`.
    pub fn jacobian(&self) -> f64 {
        self.dz.norm_sqr() - self.dzbar.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub z: Complex64,
    /// `+1` sense-preserving, `-1` sense-reversing.
    pub orientation: i8,
    pub jacobian: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub n: usize,
    pub m: usize,
    pub sense_preserving: usize,
    pub sense_reversing: usize,
    pub flagged: bool,
    pub reason: Option<String>,
    /// Largest `|z|` any zero can have.
    pub radius_bound: f64,
}

impl ZeroSet {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }
}

fn horner(coefficients: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut derivative = Complex64::new(0.0, 0.0);
    for c in coefficients.iter().rev() {
        derivative = derivative * z + value;
        value = value * z + c;
    }
    (value, derivative)
}

fn evaluate_parts(a: &[Complex64], b: &[Complex64], z: Complex64) -> HarmonicValue {
    let (p, dp) = horner(a, z);
    let (q, dq) = horner(b, z);
    HarmonicValue { value: p + q.conj(), dz: dp, dzbar: dq.conj() }
}

pub fn evaluate(h: &HarmonicPolynomial, z: Complex64) -> HarmonicValue {
    evaluate_parts(h.a(), h.b(), z)
}

/// Radius outside which `H` has no zeros.
///
/// For `|z| >= 1`, `||a_n| - |b_n|| |z|^n` (with `b_n = 0` when `m < n`)
/// dominates `sum_{j<n} (|a_j| + |b_j|) |z|^j`.
pub fn zero_radius_bound(h: &HarmonicPolynomial) -> Result<f64> {
    let n = h.n();
    let lead_b = if h.m() == n { h.b()[n].norm() } else { 0.0 };
    let lead = (h.a()[n].norm() - lead_b).abs();
    if lead <= f64::EPSILON * h.max_coefficient() {
        return Err(Error::InvalidArgument("|a_n| = |b_n|: the zero set need not be bounded".into()));
    }
    let rest: f64 = (0..n)
        .map(|j| h.a()[j].norm() + h.b().get(j).map_or(0.0, |c| c.norm()))
        .sum();
    Ok((rest / lead).max(1.0))
}

/// Roots of `sum c_j z^j` from the companion matrix.
fn polynomial_roots(coefficients: &[Complex64]) -> Vec<Complex64> {
    let scale = coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let threshold = 1e-14 * scale;
    let Some(top) = coefficients.iter().rposition(|c| c.norm() > threshold) else {
        return Vec::new();
    };
    let low = coefficients.iter().position(|c| c.norm() > threshold).unwrap_or(0);
    let mut roots = vec![Complex64::new(0.0, 0.0); low.min(1)];
    let trimmed = &coefficients[low..=top];
    let degree = trimmed.len() - 1;
    if degree == 0 {
        return roots;
    }
    let lead = trimmed[degree];
    let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -trimmed[i] / lead;
    }
    if let Some(eigenvalues) = nalgebra::linalg::Schur::new(companion).eigenvalues() {
        roots.extend(eigenvalues.iter().copied().filter(|r| r.re.is_finite() && r.im.is_finite()));
    }
    roots
}

/// Coefficients (in `z`) of `Res_w(F, G)`, recovered from samples on the unit circle.
fn resultant_coefficients(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() - 1;
    let m = b.len() - 1;
    let size = n + m;
    let samples = n * n + m * m + 1;
    let values: Vec<Complex64> = (0..samples)
        .map(|k| {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / samples as f64);
            let (p, _) = horner(a, z);
            let (q, _) = horner(b, z);
            // F in w: coefficients qc_j, with p(z) added to the constant term
            let f: Vec<Complex64> =
                (0..=m).map(|j| if j == 0 { p + b[0].conj() } else { b[j].conj() }).collect();
            let g: Vec<Complex64> =
                (0..=n).map(|j| if j == 0 { q + a[0].conj() } else { a[j].conj() }).collect();
            let mut sylvester = DMatrix::<Complex64>::zeros(size, size);
            for row in 0..n {
                for (j, c) in f.iter().rev().enumerate() {
                    sylvester[(row, row + j)] = *c;
                }
            }
            for row in 0..m {
                for (j, c) in g.iter().rev().enumerate() {
                    sylvester[(n + row, row + j)] = *c;
                }
            }
            sylvester.determinant()
        })
        .collect();
    (0..samples)
        .map(|j| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let angle = -std::f64::consts::TAU * ((j * k) % samples) as f64 / samples as f64;
                    v * Complex64::from_polar(1.0, angle)
                })
                .sum();
            sum / samples as f64
        })
        .collect()
}

struct Scaled {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    rho: f64,
}

/// Substitutes `z = rho u` and normalizes the largest coefficient to 1.
fn rescale(h: &HarmonicPolynomial) -> Scaled {
    let n = h.n();
    let (a0, an) = (h.a()[0].norm(), h.a()[n].norm());
    let rho = if n > 0 && a0 > 0.0 { (a0 / an).powf(1.0 / n as f64) } else { 1.0 };
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
    let scale_part = |c: &[Complex64]| -> Vec<Complex64> {
        c.iter().enumerate().map(|(j, v)| v * rho.powi(j as i32)).collect()
    };
    let mut a = scale_part(h.a());
    let mut b = scale_part(h.b());
    let max = a.iter().chain(b.iter()).map(|c| c.norm()).fold(0.0, f64::max);
    a.iter_mut().chain(b.iter_mut()).for_each(|c| *c /= max);
    Scaled { a, b, rho }
}

fn magnitude_scale(a: &[Complex64], b: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let sum = |c: &[Complex64]| -> f64 { c.iter().rev().fold(0.0, |acc, v| acc * r + v.norm()) };
    sum(a) + sum(b)
}

/// Damped Newton for `H(u) = 0` treating `H` as a map of the real plane.
fn newton(a: &[Complex64], b: &[Complex64], start: Complex64, opts: &ZeroFinderOptions) -> Option<Complex64> {
    let mut u = start;
    let mut h = evaluate_parts(a, b, u);
    for _ in 0..opts.max_newton_iterations {
        let det = h.jacobian();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step = (h.dzbar * h.value.conj() - h.dz.conj() * h.value) / det;
        let mut lambda = 1.0;
        let mut next = u + step;
        let mut hn = evaluate_parts(a, b, next);
        while hn.value.norm() >= h.value.norm() && lambda > 1e-4 {
            lambda *= 0.5;
            next = u + step * lambda;
            hn = evaluate_parts(a, b, next);
        }
        let moved = (next - u).norm();
        u = next;
        h = hn;
        if !(u.re.is_finite() && u.im.is_finite()) {
            return None;
        }
        if moved <= opts.step_tolerance * (1.0 + u.norm()) || h.value.norm() == 0.0 {
            break;
        }
    }
    (h.value.norm() <= opts.residual_tolerance * magnitude_scale(a, b, u)).then_some(u)
}

fn merge(found: &mut Vec<Complex64>, u: Complex64, tol: f64) {
    if !found.iter().any(|v| (v - u).norm() <= tol * (1.0 + u.norm())) {
        found.push(u);
    }
}

/// Finds every zero of `h`, flagging instances where the count or an orientation cannot be trusted.
pub fn find_zeros(h: &HarmonicPolynomial, opts: &ZeroFinderOptions) -> Result<ZeroSet> {
    let (n, m) = (h.n(), h.m());
    if n == 0 {
        return Err(Error::InvalidArgument("constant harmonic polynomial".into()));
    }
    let radius_bound = zero_radius_bound(h)?;
    let s = rescale(h);

    let candidates = if m == 0 {
        let mut shifted = s.a.clone();
        shifted[0] += s.b[0].conj();
        polynomial_roots(&shifted)
    } else {
        let mut c = polynomial_roots(&resultant_coefficients(&s.a, &s.b));
        c.push(Complex64::new(0.0, 0.0));
        c
    };
    let mut found = Vec::new();
    for start in candidates {
        if let Some(u) = newton(&s.a, &s.b, start, opts) {
            merge(&mut found, u, opts.dedup_tolerance);
        }
    }

    let expected_index: i64 = if m < n || h.a()[n].norm() > h.b()[n].norm() { n as i64 } else { -(n as i64) };
    let index_of = |zs: &[Complex64]| -> i64 {
        zs.iter().map(|u| if evaluate_parts(&s.a, &s.b, *u).jacobian() > 0.0 { 1 } else { -1 }).sum()
    };
    if index_of(&found) != expected_index && m > 0 {
        // geometric radii: zeros spread over several orders of magnitude when |a_n| ~ |b_n|
        let outer = radius_bound / s.rho;
        let inner = outer * 1e-4;
        for i in 0..opts.grid_radii {
            let r = inner * (outer / inner).powf(i as f64 / (opts.grid_radii - 1) as f64);
            for k in 0..opts.grid_angles {
                let theta = std::f64::consts::TAU * (k as f64 + 0.5 * (i % 2) as f64) / opts.grid_angles as f64;
                if let Some(u) = newton(&s.a, &s.b, Complex64::from_polar(r, theta), opts) {
                    merge(&mut found, u, opts.dedup_tolerance);
                }
            }
        }
    }

    let mut zeros = Vec::with_capacity(found.len());
    let mut degenerate = false;
    for u in &found {
        let z = u * s.rho;
        let hv = evaluate(h, z);
        let jacobian = hv.jacobian();
        if jacobian.abs() <= opts.degeneracy_tolerance * (hv.dz.norm_sqr() + hv.dzbar.norm_sqr()) {
            degenerate = true;
        }
        zeros.push(Zero {
            z,
            orientation: if jacobian > 0.0 { 1 } else { -1 },
            jacobian,
            residual: hv.value.norm(),
        });
    }
    zeros.sort_by(|x, y| x.z.norm().total_cmp(&y.z.norm()).then(x.z.arg().total_cmp(&y.z.arg())));
    let sense_preserving = zeros.iter().filter(|z| z.orientation > 0).count();
    let sense_reversing = zeros.len() - sense_preserving;
    let index = sense_preserving as i64 - sense_reversing as i64;

    let reason = if degenerate {
        Some("zero with vanishing Jacobian".to_string())
    } else if index != expected_index {
        Some(format!("orientation index {index} differs from {expected_index}"))
    } else if zeros.len() > n * n || zeros.len() < n {
        Some(format!("{} zeros outside [n, n^2] = [{n}, {}]", zeros.len(), n * n))
    } else if zeros.iter().any(|z| z.z.norm() > radius_bound * (1.0 + 1e-9)) {
        Some("zero outside the radius bound".to_string())
    } else {
        None
    };
    Ok(ZeroSet {
        zeros,
        n,
        m,
        sense_preserving,
        sense_reversing,
        flagged: reason.is_some(),
        reason,
        radius_bound,
    })
}
