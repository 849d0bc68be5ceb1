//! Activation statistics over a sample set and the diversity functional.
//!
//! Each sample's sparse code marks a base as active when its coefficient
//! magnitude clears a relative threshold; co-activation frequencies summarize
//! the joint behaviour of base pairs, and the diversity of a base set is the
//! normalized sum of pairwise total-variation distances between the bases'
//! co-activation rows.
//!
//! The working model: a corpus mixes contributions from relatively
//! independent constituents, so a good base set is one whose members show
//! distinct co-activation profiles over the corpus. Co-activation is
//! summarized as a scalar probability per base pair; base indices carry no
//! geometry, which makes the discrete (0/1) ground metric, and hence total
//! variation, the natural transport distance between profile rows. Rows of
//! never-activated bases normalize to uniform so the metric stays defined;
//! their storage cost is accounted elsewhere.

use serde::{Deserialize, Serialize};

use crate::coding::{encode, CodingConfig};
use crate::error::{Error, Result};
use crate::signal::{BaseSet, SampleSet};

/// Default relative activation threshold: separates dominant coefficients
/// from incidental ones.
pub const DEFAULT_TAU: f64 = 0.1;

/// Per-sample activation matrix plus co-activation probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationProfile {
    /// Row per sample, column per base: did the coefficient clear tau?
    activations: Vec<Vec<bool>>,
    /// Symmetric co-activation matrix; the diagonal holds marginals.
    coact: Vec<Vec<f64>>,
    tau: f64,
}

impl ActivationProfile {
    pub fn activations(&self) -> &[Vec<bool>] {
        &self.activations
    }

    pub fn coact(&self) -> &[Vec<f64>] {
        &self.coact
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_bases(&self) -> usize {
        self.coact.len()
    }

    pub fn n_samples(&self) -> usize {
        self.activations.len()
    }

    /// Co-activation matrix as CSV: a header row of base indices, then
    /// one row per base with its co-activation probabilities.
    pub fn to_csv(&self) -> String {
        let n = self.n_bases();
        let mut out = String::from("base");
        for j in 0..n {
            out.push_str(&format!(",p_{j}"));
        }
        out.push('\n');
        for (i, row) in self.coact.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Build a profile directly from a boolean activation matrix. Used by
    /// tests and by callers that already hold activations.
    pub fn from_activations(activations: Vec<Vec<bool>>, tau: f64) -> Result<Self> {
        let n = activations.len();
        if n == 0 {
            return Err(Error::EmptySampleSet);
        }
        let n_bases = activations[0].len();
        if activations.iter().any(|row| row.len() != n_bases) {
            return Err(Error::DimensionMismatch {
                expected: n_bases,
                got: 0,
            });
        }
        let mut coact = vec![vec![0.0f64; n_bases]; n_bases];
        for row in &activations {
            for i in 0..n_bases {
                if row[i] {
                    for j in 0..n_bases {
                        if row[j] {
                            coact[i][j] += 1.0;
                        }
                    }
                }
            }
        }
        for row in &mut coact {
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
        Ok(Self {
            activations,
            coact,
            tau,
        })
    }
}

/// Marks base j active for a sample when |c_j| > tau * max_j' |c_j'|; a
/// zero code activates nothing.
pub fn activations_for_code(code: &crate::signal::Coefficients, tau: f64) -> Vec<bool> {
    let n = code.len();
    let max = code.max_abs();
    let mut row = vec![false; n];
    if max > 0.0 {
        for (&j, &c) in code.entries() {
            if c.abs() > tau * max {
                row[j] = true;
            }
        }
    }
    row
}

/// Encode every sample and accumulate activation and co-activation
/// statistics at relative threshold `tau`.
pub fn activation_profile(
    set: &SampleSet,
    bases: &BaseSet,
    cfg: &CodingConfig,
    tau: f64,
) -> Result<ActivationProfile> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "tau must be in (0, 1], got {tau}"
        )));
    }
    let mut activations = Vec::with_capacity(set.len());
    for sample in set.samples() {
        let code = encode(sample, bases, cfg)?;
        activations.push(activations_for_code(&code, tau));
    }
    ActivationProfile::from_activations(activations, tau)
}

/// Total-variation distance between the normalized co-activation rows of
/// bases `i` and `j`. Rows that sum to zero normalize to uniform. Equals
/// the 1-Wasserstein distance under the discrete 0/1 ground metric.
pub fn structural_distance(profile: &ActivationProfile, i: usize, j: usize) -> Result<f64> {
    let n = profile.n_bases();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    if i == j {
        return Err(Error::InvalidConfig(
            "structural distance needs two distinct bases".into(),
        ));
    }
    let qi = normalize_row(&profile.coact()[i]);
    let qj = normalize_row(&profile.coact()[j]);
    // Summing the sorted term list keeps the value exactly invariant under
    // base permutations (floating-point addition is order sensitive).
    let mut terms: Vec<f64> = qi.iter().zip(&qj).map(|(a, b)| (a - b).abs()).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(0.5 * terms.iter().sum::<f64>())
}

fn normalize_row(row: &[f64]) -> Vec<f64> {
    // The total is accumulated over the sorted entries so that permuting
    // the base axis cannot move the result by an ulp.
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        vec![1.0 / row.len() as f64; row.len()]
    } else {
        row.iter().map(|v| v / total).collect()
    }
}

/// Distribution diversity of the base set behind `profile`: the sum of
/// pairwise structural distances over N_K * (N_K - 1). With at most one
/// base the quantity is undefined.
pub fn diversity(profile: &ActivationProfile) -> Result<f64> {
    let n = profile.n_bases();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "diversity needs at least two bases".into(),
        ));
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            distances.push(structural_distance(profile, i, j)?);
        }
    }
    distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = distances.iter().sum();
    Ok(sum / (n * (n - 1)) as f64)
}
