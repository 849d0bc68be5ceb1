//! Sparse coefficient solving and reconstruction against a base set.
//!
//! `encode` is a greedy residual-projection (orthogonal-matching-pursuit
//! style) selector followed by an exact least-squares fit on the selected
//! support. Ties in atom selection break toward the lowest base index and
//! the stopping threshold is relative to the signal norm, which makes the
//! coder deterministic and scale-equivariant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::signal::{dot, norm2, BaseSet, Coefficients, SampleSet, Signal};

/// Correlations below `RELATIVE_STOP * ||x||` end atom selection early.
const RELATIVE_STOP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingConfig {
    /// Maximum number of nonzero coefficients. Clamped to the base count
    /// at solve time, so the default acts as min(8, N_K).
    pub sparsity: usize,
    /// Nonnegative regularizer for the dense least-squares fallback used
    /// when the support Gram matrix is not positive definite.
    pub ridge: f64,
}

impl Default for CodingConfig {
    fn default() -> Self {
        Self {
            sparsity: 8,
            ridge: 0.0,
        }
    }
}

impl CodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::InvalidConfig("sparsity must be >= 1".into()));
        }
        if !self.ridge.is_finite() || self.ridge < 0.0 {
            return Err(Error::InvalidConfig("ridge must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn effective_sparsity(&self, n_bases: usize) -> usize {
        self.sparsity.min(n_bases).max(1)
    }
}

/// Linear combination of the bases weighted by the coefficients. The
/// residual term is never materialized; only its norm travels with the
/// coefficients.
pub fn reconstruct(coeffs: &Coefficients, bases: &BaseSet) -> Result<Signal> {
    if coeffs.len() != bases.len() {
        return Err(Error::DimensionMismatch {
            expected: bases.len(),
            got: coeffs.len(),
        });
    }
    let d = bases.dim();
    let mut values = vec![0.0f64; d];
    for (&idx, &c) in coeffs.entries() {
        let atom = bases.base(idx)?.vector();
        for (out, &a) in values.iter_mut().zip(atom) {
            *out += c * a;
        }
    }
    Signal::new(values, vec![d], "reconstruction")
}

/// Sparse-code `x` against `bases`: greedy atom selection on residual
/// correlations, exact least squares on the chosen support.
pub fn encode(x: &Signal, bases: &BaseSet, cfg: &CodingConfig) -> Result<Coefficients> {
    cfg.validate()?;
    if x.len() != bases.dim() {
        return Err(Error::DimensionMismatch {
            expected: bases.dim(),
            got: x.len(),
        });
    }
    let x_norm = x.norm();
    if x_norm == 0.0 {
        return Ok(Coefficients::zeros(bases.len(), 0.0));
    }
    let stop = RELATIVE_STOP * x_norm;
    let max_atoms = cfg.effective_sparsity(bases.len());

    let mut support: Vec<usize> = Vec::with_capacity(max_atoms);
    let mut residual: Vec<f64> = x.values().to_vec();
    let mut coeffs: Vec<f64> = Vec::new();

    while support.len() < max_atoms {
        // Bases are unit norm, so the raw dot product is the normalized
        // correlation. Strict > keeps ties on the lowest index.
        let mut best: Option<(usize, f64)> = None;
        for (j, base) in bases.bases().iter().enumerate() {
            if support.contains(&j) {
                continue;
            }
            let corr = dot(&residual, base.vector()).abs();
            match best {
                Some((_, b)) if corr <= b => {}
                _ if corr > 0.0 => best = Some((j, corr)),
                _ => {}
            }
        }
        let (j, corr) = match best {
            Some(pair) => pair,
            None => break,
        };
        if corr <= stop {
            break;
        }
        support.push(j);
        coeffs = least_squares_on_support(x.values(), bases, &support, cfg.ridge)?;
        residual = compute_residual(x.values(), bases, &support, &coeffs);
        if norm2(&residual) <= stop {
            break;
        }
    }

    let residual_norm = norm2(&residual);
    let mut entries = BTreeMap::new();
    for (&j, &c) in support.iter().zip(&coeffs) {
        if c != 0.0 {
            entries.insert(j, c);
        }
    }
    Coefficients::new(entries, bases.len(), residual_norm)
}

fn least_squares_on_support(
    x: &[f64],
    bases: &BaseSet,
    support: &[usize],
    ridge: f64,
) -> Result<Vec<f64>> {
    let m = support.len();
    let mut gram = vec![0.0f64; m * m];
    let mut rhs = vec![0.0f64; m];
    for (a, &ja) in support.iter().enumerate() {
        let va = bases.base(ja)?.vector();
        rhs[a] = dot(x, va);
        for (b, &jb) in support.iter().enumerate() {
            gram[a * m + b] = dot(va, bases.base(jb)?.vector());
        }
    }
    solve_spd(&gram, &rhs, ridge)
        .ok_or_else(|| Error::InvalidConfig("least-squares system could not be solved".into()))
}

fn compute_residual(x: &[f64], bases: &BaseSet, support: &[usize], coeffs: &[f64]) -> Vec<f64> {
    let mut r = x.to_vec();
    for (&j, &c) in support.iter().zip(coeffs) {
        let atom = bases.bases()[j].vector();
        for (out, &a) in r.iter_mut().zip(atom) {
            *out -= c * a;
        }
    }
    r
}

/// Mean squared reconstruction error of the best found sparse code:
/// (1/d) * ||x - reconstruct(encode(x))||^2.
pub fn cognitive_error(x: &Signal, bases: &BaseSet, cfg: &CodingConfig) -> Result<f64> {
    let coeffs = encode(x, bases, cfg)?;
    let r = coeffs.residual_norm();
    Ok(r * r / x.len() as f64)
}

/// Average cognitive error over a sample set, summed in sample order.
pub fn avg_cognitive_error(set: &SampleSet, bases: &BaseSet, cfg: &CodingConfig) -> Result<f64> {
    let mut total = 0.0;
    for sample in set.samples() {
        total += cognitive_error(sample, bases, cfg)?;
    }
    Ok(total / set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_signal, normalize_base};
    use std::collections::BTreeMap;

    fn orthonormal_pair() -> BaseSet {
        BaseSet::new(
            vec![
                normalize_base(&[1.0, 0.0]).unwrap(),
                normalize_base(&[0.0, 1.0]).unwrap(),
            ],
            16,
        )
        .unwrap()
    }

    #[test]
    fn reconstruct_unit_coefficient_is_the_base() {
        let bases = orthonormal_pair();
        let mut entries = BTreeMap::new();
        entries.insert(0usize, 1.0);
        let c = Coefficients::new(entries, 2, 0.0).unwrap();
        let s = reconstruct(&c, &bases).unwrap();
        assert_eq!(s.values(), bases.base(0).unwrap().vector());
    }

    #[test]
    fn reconstruct_zero_coefficients_is_zero() {
        let bases = orthonormal_pair();
        let c = Coefficients::zeros(2, 0.0);
        let s = reconstruct(&c, &bases).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0]);
    }

    #[test]
    fn reconstruct_is_linear_entrywise() {
        let bases = orthonormal_pair();
        let mut entries = BTreeMap::new();
        entries.insert(0usize, 2.0);
        entries.insert(1usize, -1.0);
        let c = Coefficients::new(entries, 2, 0.0).unwrap();
        let s = reconstruct(&c, &bases).unwrap();
        assert_eq!(s.values(), &[2.0, -1.0]);
    }

    #[test]
    fn encode_exact_atom() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![1.0, 0.0], vec![2], "t").unwrap();
        let c = encode(&x, &bases, &CodingConfig::default()).unwrap();
        assert_eq!(c.nnz(), 1);
        assert!((c.get(0) - 1.0).abs() < 1e-12);
        assert_eq!(c.residual_norm(), 0.0);
    }

    #[test]
    fn encode_orthonormal_projection() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![0.3, -0.7], vec![2], "t").unwrap();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let c = encode(&x, &bases, &cfg).unwrap();
        assert!((c.get(0) - 0.3).abs() < 1e-12);
        assert!((c.get(1) + 0.7).abs() < 1e-12);
        assert!(c.residual_norm() < 1e-12);
    }

    #[test]
    fn encode_zero_signal_gives_zero_coefficients() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![0.0, 0.0], vec![2], "t").unwrap();
        let c = encode(&x, &bases, &CodingConfig::default()).unwrap();
        assert_eq!(c.nnz(), 0);
        assert_eq!(c.residual_norm(), 0.0);
    }

    #[test]
    fn cognitive_error_in_span_is_zero() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![2.0, 3.0], vec![2], "t").unwrap();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        assert!(cognitive_error(&x, &bases, &cfg).unwrap() < 1e-12);
    }

    #[test]
    fn cognitive_error_orthogonal_is_energy_over_d() {
        let bases = BaseSet::new(vec![normalize_base(&[1.0, 0.0, 0.0]).unwrap()], 16).unwrap();
        let x = make_signal(vec![0.0, 3.0, 4.0], vec![3], "t").unwrap();
        let e = cognitive_error(&x, &bases, &CodingConfig::default()).unwrap();
        assert!((e - 25.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn avg_error_of_the_bases_themselves_is_zero() {
        let bases = orthonormal_pair();
        let s1 = make_signal(bases.base(0).unwrap().vector().to_vec(), vec![2], "t").unwrap();
        let s2 = make_signal(bases.base(1).unwrap().vector().to_vec(), vec![2], "t").unwrap();
        let set = SampleSet::new(vec![s1, s2], 0).unwrap();
        let e = avg_cognitive_error(&set, &bases, &CodingConfig::default()).unwrap();
        assert!(e < 1e-24);
    }

    #[test]
    fn avg_error_single_sample_equals_pointwise() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![0.2, 0.9], vec![2], "t").unwrap();
        let cfg = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let set = SampleSet::new(vec![x.clone()], 0).unwrap();
        assert_eq!(
            avg_cognitive_error(&set, &bases, &cfg).unwrap(),
            cognitive_error(&x, &bases, &cfg).unwrap()
        );
    }

    #[test]
    fn encode_dimension_mismatch() {
        let bases = orthonormal_pair();
        let x = make_signal(vec![1.0, 0.0, 0.0], vec![3], "t").unwrap();
        assert!(matches!(
            encode(&x, &bases, &CodingConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
