//! First intensity of the zero set and its radial / planar samplings.
//!
//! `I(z)` integrates to `pi * E[N(T)]`, so the expected number of zeros per
//! unit area is `I / pi`. Both columns are reported.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, VarianceProfile};
use crate::error::{Error, Result};
use crate::series::{r_terms, scaled_power_sums};

/// Below this squared radius the leading-order limit replaces the ratio.
const ORIGIN_CUTOFF: f64 = 1e-100;

fn check_degrees(p: &VarianceProfile, q: &VarianceProfile, n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} must not exceed n = {n}")));
    }
    if n > p.degree() || m > q.degree() {
        return Err(Error::InvalidArgument("degree exceeds its variance profile".into()));
    }
    Ok(())
}

/// `lim_{x -> 0} I = (alpha_1^2 + beta_1^2) / ((alpha_0 + beta_0)(alpha_1 + beta_1))`.
fn origin_limit(p: &VarianceProfile, q: &VarianceProfile, n: usize, m: usize) -> f64 {
    let first = |prof: &VarianceProfile, deg: usize| if deg >= 1 { prof.variance(1) } else { 0.0 };
    let (a0, b0) = (p.variance(0), q.variance(0));
    let (a1, b1) = (first(p, n), first(q, m));
    if a1 + b1 == 0.0 {
        return 0.0;
    }
    (a1 * a1 + b1 * b1) / ((a0 + b0) * (a1 + b1))
}

/// Kac–Rice first intensity `I_{n,m}` at squared radius `x = |z|^2`.
pub fn first_intensity(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    x: f64,
) -> Result<f64> {
    check_degrees(profile_p, profile_q, n, m)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidRadius(x));
    }
    if x < ORIGIN_CUTOFF {
        return Ok(origin_limit(profile_p, profile_q, n, m));
    }
    let r = r_terms(profile_p, profile_q, n, m, x)?;
    if r.numerator <= 0.0 {
        return Ok(0.0);
    }
    let disc = r.discriminant.max(0.0);
    Ok(r.numerator / (x * r.r3 * r.r3 * disc.sqrt()))
}

/// `r1 / (x r3^2)`: the intensity when the anti-analytic part is a constant.
pub fn analytic_intensity(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    x: f64,
) -> Result<f64> {
    check_degrees(profile_p, profile_q, n, 0)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidRadius(x));
    }
    if x < ORIGIN_CUTOFF {
        return Ok(origin_limit(profile_p, profile_q, n, 0));
    }
    let r = r_terms(profile_p, profile_q, n, 0, x)?;
    Ok(r.r1 / (x * r.r3 * r.r3))
}

/// `sqrt(a c (a c - b^2)) / (2 x a^2)`: the intensity when `p` and `q` share
/// one profile and degree.
pub fn equal_part_intensity(profile: &VarianceProfile, n: usize, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidRadius(x));
    }
    if x < ORIGIN_CUTOFF {
        return Ok(origin_limit(profile, profile, n, n));
    }
    let s = scaled_power_sums(profile, n, x)?;
    // a c - b^2 = a * central
    Ok((s.c * s.central).sqrt() / (2.0 * x * s.a))
}

/// Radial integrand after `|z|^2 = n t`; `E N(C) = int_0^inf f(t) dt`.
pub fn scaled_integrand(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("scaled radius t = {t} must be positive")));
    }
    Ok(n as f64 * first_intensity(profile_p, profile_q, n, m, n as f64 * t)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialIntensityProfile {
    pub n: usize,
    pub m: usize,
    pub kind_p: EnsembleKind,
    pub kind_q: EnsembleKind,
    pub radii: Vec<f64>,
    pub intensity: Vec<f64>,
    /// `intensity / pi`: expected zeros per unit area.
    pub density: Vec<f64>,
}

impl RadialIntensityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,intensity,density\n");
        for ((r, i), d) in self.radii.iter().zip(&self.intensity).zip(&self.density) {
            let _ = writeln!(out, "{r},{i},{d}");
        }
        out
    }

    /// Pointwise `self - other` on identical radii (e.g. `I_{n,m} - I_{n,0}`).
    pub fn difference(&self, other: &RadialIntensityProfile) -> Result<RadialIntensityProfile> {
        if self.radii != other.radii {
            return Err(Error::InvalidArgument("profiles sampled on different radii".into()));
        }
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        Ok(RadialIntensityProfile {
            intensity: sub(&self.intensity, &other.intensity),
            density: sub(&self.density, &other.density),
            ..self.clone()
        })
    }

    /// Linear interpolation of the density at radius `r` (clamped to the sampled range).
    pub fn density_at(&self, r: f64) -> f64 {
        let last = self.radii.len() - 1;
        if r <= self.radii[0] {
            return self.density[0];
        }
        if r >= self.radii[last] {
            return self.density[last];
        }
        let step = self.radii[1] - self.radii[0];
        let i = (((r - self.radii[0]) / step).floor() as usize).min(last - 1);
        let w = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        self.density[i] * (1.0 - w) + self.density[i + 1] * w
    }
}

/// Samples `I` at `points` uniformly spaced radii in `[0, r_max]`.
pub fn radial_profile(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    r_max: f64,
    points: usize,
) -> Result<RadialIntensityProfile> {
    if !(r_max > 0.0 && r_max.is_finite()) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "radial profile needs r_max > 0 and at least 2 points (got {r_max}, {points})"
        )));
    }
    check_degrees(profile_p, profile_q, n, m)?;
    let radii: Vec<f64> =
        (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
    let intensity = radii
        .par_iter()
        .map(|r| first_intensity(profile_p, profile_q, n, m, r * r))
        .collect::<Result<Vec<_>>>()?;
    let density = intensity.iter().map(|i| i / PI).collect();
    Ok(RadialIntensityProfile {
        n,
        m,
        kind_p: profile_p.kind(),
        kind_q: profile_q.kind(),
        radii,
        intensity,
        density,
    })
}

/// Density over the square `[-extent, extent]^2`, node-centered and row-major
/// (`values[row * resolution + col]`, row indexing `y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub extent: f64,
    pub resolution: usize,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,density\n");
        for (row, y) in self.coords.iter().enumerate() {
            for (col, x) in self.coords.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{}", self.at(row, col));
            }
        }
        out
    }

    pub fn difference(&self, other: &DensityGrid) -> Result<DensityGrid> {
        if self.coords != other.coords {
            return Err(Error::InvalidArgument("grids sampled on different nodes".into()));
        }
        Ok(DensityGrid {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }
}

/// Planar density grid, interpolated from a fine radial profile.
pub fn density_grid(
    profile_p: &VarianceProfile,
    profile_q: &VarianceProfile,
    n: usize,
    m: usize,
    extent: f64,
    resolution: usize,
) -> Result<DensityGrid> {
    if resolution < 2 || !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid needs extent > 0 and resolution >= 2 (got {extent}, {resolution})"
        )));
    }
    let radial = radial_profile(
        profile_p,
        profile_q,
        n,
        m,
        extent * std::f64::consts::SQRT_2,
        8 * resolution + 1,
    )?;
    let coords: Vec<f64> = (0..resolution)
        .map(|i| -extent + 2.0 * extent * i as f64 / (resolution - 1) as f64)
        .collect();
    let values = coords
        .par_iter()
        .flat_map_iter(|y| coords.iter().map(|x| radial.density_at(x.hypot(*y))).collect::<Vec<_>>())
        .collect();
    Ok(DensityGrid { extent, resolution, coords, values })
}
