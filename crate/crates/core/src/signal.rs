//! Domain types shared by every module: signals, sample sets, semantic
//! bases, sparse coefficients and the symbol codebook.
//!
//! All types are immutable values after construction. The only mutable
//! store is [`Codebook`], which expects a single writer.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the unit-norm invariant on semantic bases.
pub const UNIT_NORM_TOL: f64 = 1e-9;

static NEXT_SIGNAL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_SIGNAL_ID.fetch_add(1, Ordering::Relaxed)
}

/// A discretized characteristic function flattened to a fixed-length real
/// vector, plus the grid it was sampled on and a free-form modality tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
    grid: Vec<usize>,
    modality: String,
    id: u64,
}

impl Signal {
    /// Builds a signal, validating that the values are finite and that the
    /// grid axis lengths multiply to the value count.
    pub fn new(values: Vec<f64>, grid: Vec<usize>, modality: impl Into<String>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let cells: usize = grid.iter().product();
        if cells != values.len() {
            return Err(Error::GridMismatch {
                grid,
                cells,
                len: values.len(),
            });
        }
        Ok(Self {
            values,
            grid,
            modality: modality.into(),
            id: fresh_id(),
        })
    }

    /// Builds a signal with a caller-chosen id. Corpus readers use the row
    /// index so that pipelines replay identically.
    pub fn with_id(
        values: Vec<f64>,
        grid: Vec<usize>,
        modality: impl Into<String>,
        id: u64,
    ) -> Result<Self> {
        let mut s = Self::new(values, grid, modality)?;
        s.id = id;
        Ok(s)
    }

    /// Same values and modality on a different grid descriptor.
    pub fn with_grid(&self, grid: Vec<usize>) -> Result<Self> {
        Self::new(self.values.clone(), grid, self.modality.clone())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn modality(&self) -> &str {
        &self.modality
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    /// Largest absolute entrywise difference; errors if the grids differ.
    pub fn max_abs_diff(&self, other: &Signal) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                grid: other.grid.clone(),
                cells: other.grid.iter().product(),
                len: self.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Build a [`Signal`] with a fresh id, rejecting grid/length mismatches.
pub fn make_signal(
    values: Vec<f64>,
    grid: Vec<usize>,
    modality: impl Into<String>,
) -> Result<Signal> {
    Signal::new(values, grid, modality)
}

/// An ordered list of signals sharing one grid and modality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Signal>,
    seed: u64,
}

impl SampleSet {
    pub fn new(samples: Vec<Signal>, seed: u64) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptySampleSet)?;
        let d = first.len();
        let grid = first.grid().to_vec();
        let modality = first.modality().to_string();
        for (i, s) in samples.iter().enumerate() {
            if s.len() != d || s.grid() != grid || s.modality() != modality {
                return Err(Error::InhomogeneousSamples {
                    index: i,
                    expected: d,
                    got: s.len(),
                });
            }
        }
        Ok(Self { samples, seed })
    }

    pub fn samples(&self) -> &[Signal] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Dimension shared by every sample.
    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn grid(&self) -> &[usize] {
        self.samples[0].grid()
    }

    pub fn modality(&self) -> &str {
        self.samples[0].modality()
    }
}

/// A unit-norm decomposition atom with an optional virtual-scene name and
/// a hierarchy order (1 = first order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticBase {
    vector: Vec<f64>,
    name: Option<String>,
    order: u32,
}

impl SemanticBase {
    /// Wraps an already-normalized vector; rejects vectors whose L2 norm
    /// deviates from 1 by more than [`UNIT_NORM_TOL`].
    pub fn from_unit(vector: Vec<f64>) -> Result<Self> {
        if let Some(pos) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let deviation = (norm2(&vector) - 1.0).abs();
        if deviation > UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm { deviation });
        }
        Ok(Self {
            vector,
            name: None,
            order: 1,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order.max(1);
        self
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }

    /// Content identity derived from the exact bit patterns of the vector.
    /// Names and orders are labels, not identity.
    pub fn fingerprint(&self) -> String {
        let mut h = DefaultHasher::new();
        for v in &self.vector {
            v.to_bits().hash(&mut h);
        }
        format!("{:016x}", h.finish())
    }

    /// Entrywise midrise quantization over [-1, 1].
    pub fn quantized(&self, bits: u32) -> Vec<u32> {
        self.vector
            .iter()
            .map(|&v| quantize_entry(v, bits))
            .collect()
    }
}

/// Normalize an arbitrary vector into a first-order [`SemanticBase`].
/// Direction is preserved; zero vectors are rejected.
pub fn normalize_base(vector: &[f64]) -> Result<SemanticBase> {
    if let Some(pos) = vector.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let n = norm2(vector);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let unit: Vec<f64> = vector.iter().map(|v| v / n).collect();
    SemanticBase::from_unit(unit)
}

/// Midrise quantization of one entry to `bits` bits over [-1, 1].
/// Out-of-range entries clamp to the boundary cells.
pub fn quantize_entry(v: f64, bits: u32) -> u32 {
    let levels = 1u64 << bits.min(31);
    let step = 2.0 / levels as f64;
    let cell = ((v + 1.0) / step).floor();
    cell.clamp(0.0, (levels - 1) as f64) as u32
}

/// The ordered base set optimized by the decomposition solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseSet {
    bases: Vec<SemanticBase>,
    quant_bits: u32,
}

impl BaseSet {
    /// Validates: nonempty, one shared dimension, unit norms, and no two
    /// bases equal after quantization to `quant_bits`.
    pub fn new(bases: Vec<SemanticBase>, quant_bits: u32) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::EmptyBaseSet);
        }
        let d = bases[0].len();
        for b in bases.iter() {
            if b.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.len(),
                });
            }
            let deviation = (norm2(b.vector()) - 1.0).abs();
            if deviation > UNIT_NORM_TOL {
                return Err(Error::NotUnitNorm { deviation });
            }
        }
        let codes: Vec<Vec<u32>> = bases.iter().map(|b| b.quantized(quant_bits)).collect();
        for i in 0..codes.len() {
            for j in (i + 1)..codes.len() {
                if codes[i] == codes[j] {
                    return Err(Error::DuplicateBase {
                        first: i,
                        second: j,
                        bits: quant_bits,
                    });
                }
            }
        }
        Ok(Self { bases, quant_bits })
    }

    pub fn bases(&self) -> &[SemanticBase] {
        &self.bases
    }

    pub fn base(&self, index: usize) -> Result<&SemanticBase> {
        self.bases.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.bases.len(),
        })
    }

    pub fn quant_bits(&self) -> u32 {
        self.quant_bits
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bases[0].len()
    }

    /// Quantized entries of all bases flattened in order; the lexicographic
    /// key used for deterministic tie-breaking.
    pub fn quantized_key(&self) -> Vec<u32> {
        self.bases
            .iter()
            .flat_map(|b| b.quantized(self.quant_bits))
            .collect()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = DefaultHasher::new();
        for b in &self.bases {
            b.fingerprint().hash(&mut h);
        }
        self.quant_bits.hash(&mut h);
        format!("{:016x}", h.finish())
    }
}

/// Sparse coefficient vector over a base set, plus the norm of the
/// unexplained residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    entries: BTreeMap<usize, f64>,
    len: usize,
    residual_norm: f64,
}

impl Coefficients {
    pub fn new(entries: BTreeMap<usize, f64>, len: usize, residual_norm: f64) -> Result<Self> {
        if !residual_norm.is_finite() || residual_norm < 0.0 {
            return Err(Error::NonFinite(0));
        }
        if let Some((&index, _)) = entries.iter().find(|(&i, _)| i >= len) {
            return Err(Error::IndexOutOfRange { index, len });
        }
        if entries.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(0));
        }
        Ok(Self {
            entries,
            len,
            residual_norm,
        })
    }

    /// All-zero coefficients over `len` bases.
    pub fn zeros(len: usize, residual_norm: f64) -> Self {
        Self {
            entries: BTreeMap::new(),
            len,
            residual_norm,
        }
    }

    pub fn entries(&self) -> &BTreeMap<usize, f64> {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    /// Number of base slots (N_K), not the number of nonzeros.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Dense copy, zeros included.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len];
        for (&i, &v) in &self.entries {
            dense[i] = v;
        }
        dense
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// A naming link between a virtual-scene label and the semantic base that
/// carries its real-scene attribute, scoped to one domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticSymbol {
    pub name: String,
    pub base_ref: String,
    pub domain: String,
}

/// Symbol table mapping (domain, name) -> base fingerprint. Within a
/// domain a name resolves to exactly one base; several names may share a
/// base. Bindings must be serialized by a single writer.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Codebook {
    domains: BTreeMap<String, BTreeMap<String, String>>,
}

impl Codebook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, domain: &str, name: &str) -> Option<&str> {
        self.domains
            .get(domain)
            .and_then(|m| m.get(name))
            .map(String::as_str)
    }

    /// All names bound to `base_ref` within `domain`.
    pub fn names_for(&self, domain: &str, base_ref: &str) -> Vec<&str> {
        self.domains
            .get(domain)
            .map(|m| {
                m.iter()
                    .filter(|(_, r)| r.as_str() == base_ref)
                    .map(|(n, _)| n.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.domains.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

/// Bind `name` to `base` within `domain`. Rebinding the same name to the
/// same base is an idempotent success; rebinding to a different base is a
/// uniqueness error (no two "Zhongshan Roads" in one city).
pub fn bind_symbol(
    name: &str,
    base: &SemanticBase,
    domain: &str,
    codebook: &mut Codebook,
) -> Result<SemanticSymbol> {
    if name.is_empty() {
        return Err(Error::InvalidConfig("symbol name must be nonempty".into()));
    }
    let base_ref = base.fingerprint();
    let entry = codebook
        .domains
        .entry(domain.to_string())
        .or_default()
        .entry(name.to_string());
    use std::collections::btree_map::Entry;
    match entry {
        Entry::Occupied(existing) => {
            if existing.get() != &base_ref {
                return Err(Error::SymbolConflict {
                    name: name.to_string(),
                    domain: domain.to_string(),
                });
            }
        }
        Entry::Vacant(slot) => {
            slot.insert(base_ref.clone());
        }
    }
    Ok(SemanticSymbol {
        name: name.to_string(),
        base_ref,
        domain: domain.to_string(),
    })
}

pub(crate) fn norm2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
