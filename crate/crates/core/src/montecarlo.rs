//! Sampled zero counts for small degrees.
//!
//! Trial `i` draws its coefficients from `derive_seed(seed, i)`, so the
//! estimate does not depend on the number of worker threads. A trial whose
//! zero set is flagged is redrawn from `derive_seed(trial_seed, attempt)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{derive_seed, ensemble_pair, sample_coefficients, EnsembleKind};
use crate::error::{Error, Result};
use crate::zerofinder::{find_zeros, ZeroFinderOptions};

/// Largest analytic degree accepted for sampling.
pub const MAX_SAMPLED_DEGREE: usize = 10;

/// Redraws allowed per trial before the trial itself counts as failed.
const MAX_REDRAWS: u64 = 16;

/// Fraction of trials that may need a redraw.
pub const RESAMPLE_BUDGET: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    /// zero count -> number of trials
    pub histogram: BTreeMap<usize, usize>,
    /// Trials that needed at least one redraw.
    pub resampled: usize,
}

struct Trial {
    count: usize,
    redrawn: bool,
}

fn run_trial(kind: EnsembleKind, n: usize, m: usize, seed: u64, trial: u64) -> Result<Option<Trial>> {
    let (p, q) = ensemble_pair(kind, n, m)?;
    let opts = ZeroFinderOptions::default();
    let trial_seed = derive_seed(seed, trial);
    for attempt in 0..=MAX_REDRAWS {
        let s = if attempt == 0 { trial_seed } else { derive_seed(trial_seed, attempt) };
        let h = sample_coefficients(&p, &q, s)?;
        match find_zeros(&h, &opts) {
            Ok(set) if !set.flagged => return Ok(Some(Trial { count: set.count(), redrawn: attempt > 0 })),
            _ => continue,
        }
    }
    Ok(None)
}

pub fn monte_carlo_expectation(
    kind: EnsembleKind,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 || n > MAX_SAMPLED_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "sampled degree must be in 1..={MAX_SAMPLED_DEGREE}, got {n}"
        )));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} must not exceed n = {n}")));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed".into()));
    }
    let outcomes: Vec<Option<Trial>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(kind, n, m, seed, i))
        .collect::<Result<_>>()?;

    let failed = outcomes.iter().filter(|t| t.is_none()).count();
    let resampled = outcomes.iter().filter(|t| t.as_ref().map_or(true, |t| t.redrawn)).count();
    if failed > 0 || resampled as f64 > RESAMPLE_BUDGET * trials as f64 {
        return Err(Error::ResampleBudget { flagged: resampled, trials });
    }
    let counts: Vec<f64> = outcomes.iter().flatten().map(|t| t.count as f64).collect();
    let k = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / k;
    let variance = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let mut histogram = BTreeMap::new();
    for t in outcomes.iter().flatten() {
        *histogram.entry(t.count).or_insert(0) += 1;
    }
    Ok(MonteCarloEstimate {
        kind,
        n,
        m,
        trials,
        seed,
        mean,
        stderr: (variance / k).sqrt(),
        histogram,
        resampled,
    })
}
