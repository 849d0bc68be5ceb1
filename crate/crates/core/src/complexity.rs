//! Bit-accounting for base sets and coefficient codes: storage volume,
//! representation complexity, and the weighted objective the outer
//! optimization minimizes.

use serde::{Deserialize, Serialize};

use crate::coding::{encode, CodingConfig};
use crate::error::{Error, Result};
use crate::signal::{BaseSet, SampleSet, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityConfig {
    /// Bits per stored base entry (midrise quantization over [-1, 1]).
    pub quant_bits: u32,
    /// Bits per stored coefficient value.
    pub coeff_bits: u32,
    /// Trade-off weight between storage volume and average representation
    /// complexity.
    pub lambda: f64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            quant_bits: 16,
            coeff_bits: 16,
            lambda: 1.0,
        }
    }
}

impl ComplexityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quant_bits == 0 || self.coeff_bits == 0 {
            return Err(Error::InvalidConfig("bit widths must be >= 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig(
                "lambda must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Bits needed to store every base: N_K * d * quant_bits.
pub fn storage_volume(bases: &BaseSet, cfg: &ComplexityConfig) -> f64 {
    (bases.len() as f64) * (bases.dim() as f64) * (cfg.quant_bits as f64)
}

/// Bits per coefficient slot: an index into the base set plus the value.
pub fn bits_per_nonzero(n_bases: usize, cfg: &ComplexityConfig) -> f64 {
    let index_bits = if n_bases <= 1 {
        0.0
    } else {
        (n_bases as f64).log2().ceil()
    };
    index_bits + cfg.coeff_bits as f64
}

/// Bits needed to record the sparse code of `x`: nnz * (ceil(log2 N_K) +
/// coeff_bits). A zero signal costs nothing.
pub fn representation_complexity(
    x: &Signal,
    bases: &BaseSet,
    coding: &CodingConfig,
    cfg: &ComplexityConfig,
) -> Result<f64> {
    let code = encode(x, bases, coding)?;
    Ok(code.nnz() as f64 * bits_per_nonzero(bases.len(), cfg))
}

/// The two addends of the outer objective, reported separately and
/// combined: total = storage + lambda * avg_representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub storage_bits: f64,
    pub avg_representation_bits: f64,
    pub lambda: f64,
    pub total: f64,
}

/// Evaluate the outer objective of the decomposition problem on a sample
/// set: v(K) + lambda * mean representation complexity.
pub fn objective(
    set: &SampleSet,
    bases: &BaseSet,
    coding: &CodingConfig,
    cfg: &ComplexityConfig,
) -> Result<ObjectiveValue> {
    cfg.validate()?;
    let storage = storage_volume(bases, cfg);
    let mut sum = 0.0;
    for sample in set.samples() {
        sum += representation_complexity(sample, bases, coding, cfg)?;
    }
    let avg = sum / set.len() as f64;
    Ok(ObjectiveValue {
        storage_bits: storage,
        avg_representation_bits: avg,
        lambda: cfg.lambda,
        total: storage + cfg.lambda * avg,
    })
}
