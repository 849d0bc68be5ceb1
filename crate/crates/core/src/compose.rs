//! Semantic composition and knowledge discovery: build new signals from
//! explicit coefficient specs, check them against a data-driven stand-in
//! for the environment, and journal the ones that are both verified and
//! new.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::coding::{encode, reconstruct, CodingConfig};
use crate::error::{Error, Result};
use crate::signal::{BaseSet, Coefficients, SampleSet, Signal};

/// How candidate compositions are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidatorMode {
    /// Every nonzero coefficient must lie inside the range observed for
    /// its base over the training corpus.
    CoefficientRange,
    /// The composed signal must lie inside the training bounding box.
    SignalBounds,
    /// An externally supplied predicate decides.
    External,
}

/// External check plugged into a validator.
pub type ExternalPredicate = Arc<dyn Fn(&Signal, &Coefficients) -> bool + Send + Sync>;

/// Environment stand-in built from a declared training sample set.
#[derive(Clone)]
pub struct Validator {
    mode: ValidatorMode,
    /// Observed [min, max] per base over the training codes.
    coeff_ranges: Vec<(f64, f64)>,
    signal_lo: Vec<f64>,
    signal_hi: Vec<f64>,
    /// Minimum L2 distance to any training sample for a composition to
    /// count as new.
    theta: f64,
    training_fingerprint: u64,
    base_fingerprint: String,
    external: Option<ExternalPredicate>,
}

impl std::fmt::Debug for Validator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Validator")
            .field("mode", &self.mode)
            .field("theta", &self.theta)
            .field("bases", &self.coeff_ranges.len())
            .finish()
    }
}

impl Validator {
    /// Derive coefficient ranges, the signal bounding box and the default
    /// novelty threshold (median nearest-neighbour distance) from the
    /// training corpus.
    pub fn from_training(
        training: &SampleSet,
        bases: &BaseSet,
        coding: &CodingConfig,
        mode: ValidatorMode,
        theta: Option<f64>,
    ) -> Result<Self> {
        let d = training.dim();
        if d != bases.dim() {
            return Err(Error::DimensionMismatch {
                expected: bases.dim(),
                got: d,
            });
        }
        let mut coeff_ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); bases.len()];
        let mut signal_lo = vec![f64::INFINITY; d];
        let mut signal_hi = vec![f64::NEG_INFINITY; d];
        for sample in training.samples() {
            let code = encode(sample, bases, coding)?;
            for (&j, &c) in code.entries() {
                let r = &mut coeff_ranges[j];
                r.0 = r.0.min(c);
                r.1 = r.1.max(c);
            }
            for (m, &v) in sample.values().iter().enumerate() {
                signal_lo[m] = signal_lo[m].min(v);
                signal_hi[m] = signal_hi[m].max(v);
            }
        }
        let theta = match theta {
            Some(t) if t >= 0.0 => t,
            Some(_) => {
                return Err(Error::InvalidConfig(
                    "novelty threshold must be >= 0".into(),
                ))
            }
            None => median_nn_distance(training),
        };
        Ok(Self {
            mode,
            coeff_ranges,
            signal_lo,
            signal_hi,
            theta,
            training_fingerprint: training_fingerprint(training),
            base_fingerprint: bases.fingerprint(),
            external: None,
        })
    }

    pub fn with_external(mut self, predicate: ExternalPredicate) -> Self {
        self.external = Some(predicate);
        self
    }

    pub fn mode(&self) -> ValidatorMode {
        self.mode
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coeff_ranges(&self) -> &[(f64, f64)] {
        &self.coeff_ranges
    }

    /// Identity used in knowledge-record provenance.
    pub fn id(&self) -> String {
        format!(
            "{:?}:{:016x}:{}",
            self.mode, self.training_fingerprint, self.base_fingerprint
        )
    }
}

fn training_fingerprint(training: &SampleSet) -> u64 {
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};
    let mut h = DefaultHasher::new();
    for s in training.samples() {
        for v in s.values() {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Median of the nearest-neighbour L2 distances inside the corpus; zero
/// for a single-sample corpus.
fn median_nn_distance(set: &SampleSet) -> f64 {
    let n = set.len();
    if n < 2 {
        return 0.0;
    }
    let mut nn: Vec<f64> = Vec::with_capacity(n);
    for (i, a) in set.samples().iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, b) in set.samples().iter().enumerate() {
            if i == j {
                continue;
            }
            let d2: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            best = best.min(d2.sqrt());
        }
        nn.push(best);
    }
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = nn.len() / 2;
    if nn.len() % 2 == 1 {
        nn[mid]
    } else {
        0.5 * (nn[mid - 1] + nn[mid])
    }
}

/// Generate a signal from an explicit coefficient spec. The creation
/// entry point; identical to reconstruction.
pub fn compose(coeff_spec: &Coefficients, bases: &BaseSet) -> Result<Signal> {
    reconstruct(coeff_spec, bases)
}

/// Check a composed candidate: `verified` per the validator mode,
/// `novel` iff its distance to every training sample exceeds theta.
pub fn verify(
    candidate: &Signal,
    coeffs: &Coefficients,
    validator: &Validator,
    training: &SampleSet,
) -> Result<(bool, bool)> {
    if training_fingerprint(training) != validator.training_fingerprint {
        return Err(Error::ValidatorMismatch);
    }
    if candidate.len() != validator.signal_lo.len() {
        return Err(Error::DimensionMismatch {
            expected: validator.signal_lo.len(),
            got: candidate.len(),
        });
    }
    let verified = match validator.mode {
        ValidatorMode::CoefficientRange => {
            if coeffs.len() != validator.coeff_ranges.len() {
                return Err(Error::ValidatorMismatch);
            }
            coeffs.entries().iter().all(|(&j, &c)| {
                let (lo, hi) = validator.coeff_ranges[j];
                lo <= hi && c >= lo && c <= hi
            })
        }
        ValidatorMode::SignalBounds => candidate
            .values()
            .iter()
            .enumerate()
            .all(|(m, &v)| v >= validator.signal_lo[m] && v <= validator.signal_hi[m]),
        ValidatorMode::External => match &validator.external {
            Some(pred) => pred(candidate, coeffs),
            None => {
                return Err(Error::InvalidConfig(
                    "external validator mode without a predicate".into(),
                ))
            }
        },
    };
    let min_dist = training
        .samples()
        .iter()
        .map(|s| {
            s.values()
                .iter()
                .zip(candidate.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    let novel = min_dist > validator.theta;
    Ok((verified, novel))
}

/// A verified-and-novel composition, journaled as discovered knowledge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnowledgeRecord {
    pub coefficients: Coefficients,
    pub signal: Signal,
    pub verified: bool,
    pub novel: bool,
    pub timestamp_unix: u64,
    pub base_set_id: String,
    pub validator_id: String,
}

/// Append-only knowledge journal with replay deduplication on a quantized
/// coefficient key.
#[derive(Debug, Default)]
pub struct KnowledgeLog {
    records: Vec<KnowledgeRecord>,
    seen: std::collections::BTreeSet<Vec<(usize, i64)>>,
}

/// Coefficient values quantized to this resolution form the dedup key.
const DEDUP_QUANTUM: f64 = 1e-6;

fn coefficient_key(coeffs: &Coefficients) -> Vec<(usize, i64)> {
    coeffs
        .entries()
        .iter()
        .map(|(&j, &c)| (j, (c / DEDUP_QUANTUM).round() as i64))
        .collect()
}

impl KnowledgeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[KnowledgeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rebuild a log (including its dedup index) from stored records.
    pub fn from_records(records: Vec<KnowledgeRecord>) -> Self {
        let seen = records
            .iter()
            .map(|r| coefficient_key(&r.coefficients))
            .collect();
        Self { records, seen }
    }
}

/// Compose, verify, and journal. Returns the new record when the
/// candidate is verified, novel, and not a replay of an earlier discovery;
/// otherwise nothing is recorded.
pub fn discover(
    coeff_spec: &Coefficients,
    bases: &BaseSet,
    validator: &Validator,
    training: &SampleSet,
    log: &mut KnowledgeLog,
) -> Result<Option<KnowledgeRecord>> {
    let candidate = compose(coeff_spec, bases)?;
    let (verified, novel) = verify(&candidate, coeff_spec, validator, training)?;
    if !(verified && novel) {
        return Ok(None);
    }
    let key = coefficient_key(coeff_spec);
    if !log.seen.insert(key) {
        return Ok(None);
    }
    let record = KnowledgeRecord {
        coefficients: coeff_spec.clone(),
        signal: candidate,
        verified,
        novel,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        base_set_id: bases.fingerprint(),
        validator_id: validator.id(),
    };
    log.records.push(record.clone());
    Ok(Some(record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_signal, normalize_base};
    use std::collections::BTreeMap;

    fn bases() -> BaseSet {
        BaseSet::new(
            vec![
                normalize_base(&[1.0, 0.0]).unwrap(),
                normalize_base(&[0.0, 1.0]).unwrap(),
            ],
            16,
        )
        .unwrap()
    }

    fn training() -> SampleSet {
        SampleSet::new(
            vec![
                make_signal(vec![1.0, 0.0], vec![2], "t").unwrap(),
                make_signal(vec![0.0, 1.0], vec![2], "t").unwrap(),
                make_signal(vec![0.8, 0.2], vec![2], "t").unwrap(),
                make_signal(vec![0.2, 0.8], vec![2], "t").unwrap(),
            ],
            3,
        )
        .unwrap()
    }

    fn coeffs(entries: &[(usize, f64)]) -> Coefficients {
        let map: BTreeMap<usize, f64> = entries.iter().copied().collect();
        Coefficients::new(map, 2, 0.0).unwrap()
    }

    #[test]
    fn compose_round_trips_training_code() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        for sample in t.samples() {
            let code = encode(sample, &b, &cfg).unwrap();
            let rebuilt = compose(&code, &b).unwrap();
            let err: f64 = rebuilt
                .values()
                .iter()
                .zip(sample.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= code.residual_norm() + 1e-12);
        }
    }

    #[test]
    fn compose_zero_spec_is_zero_signal() {
        let b = bases();
        let z = compose(&Coefficients::zeros(2, 0.0), &b).unwrap();
        assert_eq!(z.values(), &[0.0, 0.0]);
    }

    #[test]
    fn training_sample_is_verified_but_not_novel() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let v =
            Validator::from_training(&t, &b, &cfg, ValidatorMode::CoefficientRange, None).unwrap();
        let code = encode(&t.samples()[0], &b, &cfg).unwrap();
        let candidate = compose(&code, &b).unwrap();
        let (verified, novel) = verify(&candidate, &code, &v, &t).unwrap();
        assert!(verified);
        assert!(!novel);
    }

    #[test]
    fn out_of_range_coefficient_fails_verification() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let v =
            Validator::from_training(&t, &b, &cfg, ValidatorMode::CoefficientRange, None).unwrap();
        let wild = coeffs(&[(0, 10.0)]);
        let candidate = compose(&wild, &b).unwrap();
        let (verified, _) = verify(&candidate, &wild, &v, &t).unwrap();
        assert!(!verified);
    }

    #[test]
    fn midpoint_is_verified_and_novel_with_small_theta() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let v = Validator::from_training(&t, &b, &cfg, ValidatorMode::CoefficientRange, Some(0.05))
            .unwrap();
        // Midpoint of the codes of samples 2 and 3.
        let mid = coeffs(&[(0, 0.5), (1, 0.5)]);
        let candidate = compose(&mid, &b).unwrap();
        let (verified, novel) = verify(&candidate, &mid, &v, &t).unwrap();
        assert!(verified);
        assert!(novel);
    }

    #[test]
    fn discover_skips_replays_and_non_novel() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let v = Validator::from_training(&t, &b, &cfg, ValidatorMode::CoefficientRange, Some(0.05))
            .unwrap();
        let mut log = KnowledgeLog::new();

        // Training replay: not novel, nothing recorded.
        let code = encode(&t.samples()[2], &b, &cfg).unwrap();
        assert!(discover(&code, &b, &v, &t, &mut log).unwrap().is_none());

        // Out-of-range spec: not verified.
        let wild = coeffs(&[(0, 10.0)]);
        assert!(discover(&wild, &b, &v, &t, &mut log).unwrap().is_none());

        // Fresh midpoint: recorded once, replay deduplicated.
        let mid = coeffs(&[(0, 0.5), (1, 0.5)]);
        assert!(discover(&mid, &b, &v, &t, &mut log).unwrap().is_some());
        assert!(discover(&mid, &b, &v, &t, &mut log).unwrap().is_none());
        assert_eq!(log.len(), 1);
        assert!(log.records().iter().all(|r| r.verified && r.novel));
    }

    #[test]
    fn verify_rejects_foreign_training_set() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig::default();
        let v = Validator::from_training(&t, &b, &cfg, ValidatorMode::SignalBounds, None).unwrap();
        let other =
            SampleSet::new(vec![make_signal(vec![9.0, 9.0], vec![2], "t").unwrap()], 0).unwrap();
        let c = coeffs(&[(0, 1.0)]);
        let candidate = compose(&c, &b).unwrap();
        assert!(matches!(
            verify(&candidate, &c, &v, &other),
            Err(Error::ValidatorMismatch)
        ));
    }

    #[test]
    fn signal_bounds_mode() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let v =
            Validator::from_training(&t, &b, &cfg, ValidatorMode::SignalBounds, Some(0.0)).unwrap();
        let inside = coeffs(&[(0, 0.4), (1, 0.4)]);
        let candidate = compose(&inside, &b).unwrap();
        assert!(verify(&candidate, &inside, &v, &t).unwrap().0);
        let outside = coeffs(&[(0, 5.0)]);
        let candidate = compose(&outside, &b).unwrap();
        assert!(!verify(&candidate, &outside, &v, &t).unwrap().0);
    }

    #[test]
    fn external_mode_uses_predicate() {
        let b = bases();
        let t = training();
        let cfg = CodingConfig::default();
        let v = Validator::from_training(&t, &b, &cfg, ValidatorMode::External, Some(0.0))
            .unwrap()
            .with_external(Arc::new(|s: &Signal, _: &Coefficients| {
                s.values().iter().all(|v| *v >= 0.0)
            }));
        let pos = coeffs(&[(0, 1.0)]);
        let candidate = compose(&pos, &b).unwrap();
        assert!(verify(&candidate, &pos, &v, &t).unwrap().0);
        let neg = coeffs(&[(0, -1.0)]);
        let candidate = compose(&neg, &b).unwrap();
        assert!(!verify(&candidate, &neg, &v, &t).unwrap().0);
    }
}
