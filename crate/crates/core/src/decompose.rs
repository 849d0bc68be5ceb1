//! Bi-level semantic decomposition: fit candidate base sets by alternating
//! optimization, keep the candidates that meet the average cognitive error
//! budget, restrict to the diversity-optimal band, and return the candidate
//! with the smallest storage-plus-representation objective. A brute-force
//! oracle enumerates quantized base sets exactly on guarded tiny instances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{avg_cognitive_error, encode, CodingConfig};
use crate::complexity::{
    bits_per_nonzero, objective, storage_volume, ComplexityConfig, ObjectiveValue,
};
use crate::error::{Error, Result};
use crate::signal::{dot, norm2, BaseSet, SampleSet, SemanticBase};
use crate::statistics::{activation_profile, activations_for_code, diversity, ActivationProfile};

/// Quantization width used for base sets produced by `fit_candidate`
/// before the solver re-tags them with the complexity config's width.
pub const FIT_QUANT_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Maximum tolerable average decomposition error.
    pub epsilon: f64,
    /// Candidate base counts [N_min, N_max], inclusive.
    pub n_range: (usize, usize),
    /// Independent fits per candidate base count.
    pub restarts: usize,
    /// Relative diversity tolerance defining the argmax band: candidates
    /// with diversity >= (1 - delta_d) * best stay in the running.
    pub delta_d: f64,
    /// Cap on alternating-optimization sweeps per fit.
    pub max_iters: usize,
    /// Root seed; every candidate fit derives its own stream from it.
    pub seed: u64,
    /// Relative activation threshold used when profiling candidates for
    /// the diversity criterion.
    pub tau: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_range: (2, 8),
            restarts: 8,
            delta_d: 0.01,
            max_iters: 50,
            seed: 0,
            tau: crate::statistics::DEFAULT_TAU,
        }
    }
}

impl DecomposeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(
                "epsilon must be finite and > 0".into(),
            ));
        }
        if self.n_range.0 < 2 {
            return Err(Error::InvalidConfig("n_range minimum must be >= 2".into()));
        }
        if self.n_range.1 < self.n_range.0 {
            return Err(Error::InvalidConfig("n_range must be nonempty".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.delta_d) {
            return Err(Error::InvalidConfig("delta_d must lie in [0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig("tau must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Diagnostics for one evaluated candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub n_k: usize,
    pub restart: usize,
    pub avg_error: f64,
    pub diversity: f64,
    pub objective: ObjectiveValue,
    pub feasible: bool,
    pub base_set: BaseSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeResult {
    pub base_set: BaseSet,
    pub diversity: f64,
    pub avg_error: f64,
    pub objective: ObjectiveValue,
    pub feasible: bool,
    /// Index into `trace` of the returned candidate.
    pub selected: usize,
    pub trace: Vec<CandidateTrace>,
}

fn mix_seed(seed: u64, n_k: usize, restart: usize) -> u64 {
    let mut z = seed
        ^ (n_k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (restart as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fit one candidate base set of size `n_k` by alternating optimization:
/// k-means++ initialization over the normalized samples, then repeated
/// sparse coding and per-atom least-squares updates until the coefficient
/// supports stabilize or `max_iters` is reached. Deterministic given the
/// seed in `cfg`.
pub fn fit_candidate(
    set: &SampleSet,
    n_k: usize,
    cfg: &DecomposeConfig,
    coding: &CodingConfig,
) -> Result<BaseSet> {
    coding.validate()?;
    if n_k == 0 {
        return Err(Error::InvalidConfig("candidate size must be >= 1".into()));
    }
    if n_k > set.len() {
        return Err(Error::TooFewSamples {
            requested: n_k,
            available: set.len(),
        });
    }
    let d = set.dim();
    let normalized: Vec<Vec<f64>> = set
        .samples()
        .iter()
        .filter(|s| s.norm() > 0.0)
        .map(|s| {
            let n = s.norm();
            s.values().iter().map(|v| v / n).collect()
        })
        .collect();
    if normalized.len() < n_k {
        return Err(Error::TooFewSamples {
            requested: n_k,
            available: normalized.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut atoms = kmeanspp_init(&normalized, n_k, &mut rng);

    let max_sample_norm = set
        .samples()
        .iter()
        .map(|s| s.norm())
        .fold(0.0f64, f64::max);
    let dead_floor = 1e-12 * max_sample_norm.max(1.0);

    let mut prev_supports: Option<Vec<Vec<usize>>> = None;
    for _ in 0..cfg.max_iters {
        dedup_atoms(&mut atoms, FIT_QUANT_BITS);
        let bases = atoms_to_base_set(&atoms, FIT_QUANT_BITS)?;
        let codes: Vec<_> = set
            .samples()
            .iter()
            .map(|s| encode(s, &bases, coding))
            .collect::<Result<_>>()?;
        let supports: Vec<Vec<usize>> = codes
            .iter()
            .map(|c| c.entries().keys().copied().collect())
            .collect();
        if prev_supports.as_ref() == Some(&supports) {
            break;
        }
        prev_supports = Some(supports);

        // Gauss-Seidel atom updates against the latest codes.
        for j in 0..n_k {
            let members: Vec<usize> = codes
                .iter()
                .enumerate()
                .filter(|(_, c)| c.get(j) != 0.0)
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                // Revive a dead atom with the worst-represented sample.
                if let Some((_, r)) = max_residual(set, &atoms, &codes, dead_floor) {
                    let n = norm2(&r);
                    atoms[j] = r.iter().map(|v| v / n).collect();
                }
                continue;
            }
            let mut dir = vec![0.0f64; d];
            for &i in &members {
                let x = set.samples()[i].values();
                let code = &codes[i];
                let own = code.get(j);
                // Residual with atom j's contribution added back.
                for (m, out) in dir.iter_mut().enumerate() {
                    let mut r = x[m];
                    for (&a, &c) in code.entries() {
                        r -= c * atoms[a][m];
                    }
                    *out += own * (r + own * atoms[j][m]);
                }
            }
            let n = norm2(&dir);
            if n > dead_floor {
                for (v, out) in dir.iter().zip(atoms[j].iter_mut()) {
                    *out = v / n;
                }
            }
        }
    }

    dedup_atoms(&mut atoms, FIT_QUANT_BITS);
    atoms_to_base_set(&atoms, FIT_QUANT_BITS)
}

fn kmeanspp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..points.len());
    centers.push(points[first].clone());
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 1e-24 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // Fewer distinct directions than centers; cycle by index and
            // let the final dedup pass separate the copies.
            centers.len() % points.len()
        };
        centers.push(points[pick].clone());
    }
    centers
}

fn max_residual(
    set: &SampleSet,
    atoms: &[Vec<f64>],
    codes: &[crate::signal::Coefficients],
    floor: f64,
) -> Option<(usize, Vec<f64>)> {
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for (i, sample) in set.samples().iter().enumerate() {
        let mut r = sample.values().to_vec();
        for (&a, &c) in codes[i].entries() {
            for (out, &v) in r.iter_mut().zip(&atoms[a]) {
                *out -= c * v;
            }
        }
        let n = norm2(&r);
        match &best {
            Some((_, bn, _)) if n <= *bn => {}
            _ if n > floor => best = Some((i, n, r)),
            _ => {}
        }
    }
    best.map(|(i, _, r)| (i, r))
}

/// Shift colliding atoms by quantization-cell-sized steps along canonical
/// axes until the whole set is distinct after quantization.
fn dedup_atoms(atoms: &mut [Vec<f64>], bits: u32) {
    let d = atoms[0].len();
    let step = 2.0 / (1u64 << bits.min(31)) as f64;
    for j in 0..atoms.len() {
        let mut attempt = 0usize;
        while atoms[..j]
            .iter()
            .any(|earlier| quantize_vec(earlier, bits) == quantize_vec(&atoms[j], bits))
        {
            attempt += 1;
            if attempt > 64 * d {
                break;
            }
            let axis = (j + attempt) % d;
            atoms[j][axis] += attempt as f64 * step;
            let n = norm2(&atoms[j]);
            if n > 0.0 {
                for v in atoms[j].iter_mut() {
                    *v /= n;
                }
            }
        }
    }
}

fn quantize_vec(v: &[f64], bits: u32) -> Vec<u32> {
    v.iter()
        .map(|&x| crate::signal::quantize_entry(x, bits))
        .collect()
}

fn atoms_to_base_set(atoms: &[Vec<f64>], bits: u32) -> Result<BaseSet> {
    let bases = atoms
        .iter()
        .map(|v| {
            let n = norm2(v);
            if n == 0.0 {
                return Err(Error::ZeroVector);
            }
            SemanticBase::from_unit(v.iter().map(|x| x / n).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    BaseSet::new(bases, bits)
}

/// A candidate scored on every axis the selection rule needs.
struct Scored {
    trace: CandidateTrace,
}

/// Deterministic selection shared by the solver and the oracle: feasible
/// candidates first, restricted to the diversity band, then minimum
/// objective; ties break toward fewer bases, then the lexicographically
/// smallest quantized entries. With no feasible candidate the best-error
/// one is returned flagged infeasible.
fn select(traces: &[CandidateTrace], delta_d: f64) -> Option<(usize, bool)> {
    if traces.is_empty() {
        return None;
    }
    if traces.iter().any(|t| t.feasible) {
        let best_div = traces
            .iter()
            .filter(|t| t.feasible)
            .map(|t| t.diversity)
            .fold(f64::NEG_INFINITY, f64::max);
        let band = (1.0 - delta_d) * best_div;
        let mut best: Option<usize> = None;
        for (i, t) in traces.iter().enumerate() {
            if !t.feasible || t.diversity < band {
                continue;
            }
            best = Some(match best {
                None => i,
                Some(b) if objective_key(&traces[b]) > objective_key(t) => i,
                Some(b) => b,
            });
        }
        best.map(|i| (i, true))
    } else {
        let mut best = 0usize;
        for i in 1..traces.len() {
            if error_key(&traces[i]) < error_key(&traces[best]) {
                best = i;
            }
        }
        Some((best, false))
    }
}

type SelectionKey = (f64, usize, Vec<u32>);

fn objective_key(t: &CandidateTrace) -> SelectionKey {
    (t.objective.total, t.n_k, t.base_set.quantized_key())
}

fn error_key(t: &CandidateTrace) -> SelectionKey {
    (t.avg_error, t.n_k, t.base_set.quantized_key())
}

fn score_candidate(
    set: &SampleSet,
    bases: BaseSet,
    n_k: usize,
    restart: usize,
    cfg: &DecomposeConfig,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
) -> Result<Scored> {
    let avg_error = avg_cognitive_error(set, &bases, coding)?;
    let profile = activation_profile(set, &bases, coding, cfg.tau)?;
    let div = diversity(&profile)?;
    let obj = objective(set, &bases, coding, comp)?;
    Ok(Scored {
        trace: CandidateTrace {
            n_k,
            restart,
            avg_error,
            diversity: div,
            objective: obj,
            feasible: avg_error <= cfg.epsilon,
            base_set: bases,
        },
    })
}

/// Solve the bi-level decomposition problem over the sample set. Candidate
/// fits run in parallel; the final selection is a deterministic fold over
/// the candidates ordered by (N_K, restart), so results are independent of
/// thread count.
pub fn solve(
    set: &SampleSet,
    cfg: &DecomposeConfig,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
) -> Result<DecomposeResult> {
    cfg.validate()?;
    coding.validate()?;
    comp.validate()?;

    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for n_k in cfg.n_range.0..=cfg.n_range.1 {
        if n_k > set.len() {
            log::debug!("skipping N_K={n_k}: only {} samples", set.len());
            continue;
        }
        for restart in 0..cfg.restarts {
            jobs.push((n_k, restart));
        }
    }
    if jobs.is_empty() {
        return Err(Error::InvalidConfig(
            "no candidate size in n_range fits the sample count".into(),
        ));
    }

    let scored: Vec<Option<Scored>> = jobs
        .par_iter()
        .map(|&(n_k, restart)| {
            let mut fit_cfg = cfg.clone();
            fit_cfg.seed = mix_seed(cfg.seed, n_k, restart);
            let fitted = match fit_candidate(set, n_k, &fit_cfg, coding) {
                Ok(b) => b,
                Err(e) => {
                    log::debug!("fit N_K={n_k} restart={restart} failed: {e}");
                    return None;
                }
            };
            // Re-tag with the storage quantization width; candidates whose
            // bases collide at that width cannot be stored and are dropped.
            let retagged = match BaseSet::new(fitted.bases().to_vec(), comp.quant_bits) {
                Ok(b) => b,
                Err(e) => {
                    log::debug!("candidate N_K={n_k} restart={restart} rejected: {e}");
                    return None;
                }
            };
            score_candidate(set, retagged, n_k, restart, cfg, coding, comp)
                .map_err(|e| log::debug!("scoring N_K={n_k} restart={restart} failed: {e}"))
                .ok()
        })
        .collect();

    let scored: Vec<Scored> = scored.into_iter().flatten().collect();
    finish_result(scored, cfg.delta_d)
}

fn finish_result(scored: Vec<Scored>, delta_d: f64) -> Result<DecomposeResult> {
    let trace: Vec<CandidateTrace> = scored.into_iter().map(|s| s.trace).collect();
    let (selected, feasible) = select(&trace, delta_d)
        .ok_or_else(|| Error::InvalidConfig("every candidate fit failed".into()))?;
    let chosen = &trace[selected];
    Ok(DecomposeResult {
        base_set: chosen.base_set.clone(),
        diversity: chosen.diversity,
        avg_error: chosen.avg_error,
        objective: chosen.objective,
        feasible,
        selected,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Hard guards for the brute-force oracle.
const ORACLE_MAX_DIM: usize = 4;
const ORACLE_MAX_BASES: usize = 3;
const ORACLE_MAX_LEVELS: usize = 5;
const ORACLE_MAX_SETS: u128 = 2_000_000;

/// Exhaustively enumerate base sets whose entries lie on the quantization
/// grid `levels` (normalized and deduplicated), evaluate feasibility,
/// diversity and the objective exactly, and return the literal optimum
/// under the same selection rule as [`solve`]. Rejects instances beyond
/// the complexity guard.
pub fn oracle_decompose(
    set: &SampleSet,
    cfg: &DecomposeConfig,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
    levels: &[f64],
) -> Result<DecomposeResult> {
    cfg.validate()?;
    coding.validate()?;
    comp.validate()?;
    let d = set.dim();
    if d > ORACLE_MAX_DIM {
        return Err(Error::OracleGuard(format!(
            "dimension {d} exceeds the guard ({ORACLE_MAX_DIM})"
        )));
    }
    if cfg.n_range.1 > ORACLE_MAX_BASES {
        return Err(Error::OracleGuard(format!(
            "N_K up to {} exceeds the guard ({ORACLE_MAX_BASES})",
            cfg.n_range.1
        )));
    }
    if levels.len() > ORACLE_MAX_LEVELS || levels.is_empty() {
        return Err(Error::OracleGuard(format!(
            "{} quantization levels exceed the guard ({ORACLE_MAX_LEVELS})",
            levels.len()
        )));
    }

    let vectors = grid_unit_vectors(levels, d, comp.quant_bits);
    let mut total_sets: u128 = 0;
    for n_k in cfg.n_range.0..=cfg.n_range.1 {
        total_sets += n_choose_k(vectors.len() as u128, n_k as u128);
    }
    if total_sets > ORACLE_MAX_SETS {
        return Err(Error::OracleGuard(format!(
            "{total_sets} candidate sets exceed the enumeration cap ({ORACLE_MAX_SETS})"
        )));
    }

    let mut scored: Vec<Scored> = Vec::new();
    for n_k in cfg.n_range.0..=cfg.n_range.1 {
        let mut index = 0usize;
        for combo in Combinations::new(vectors.len(), n_k) {
            let atoms: Vec<Vec<f64>> = combo.iter().map(|&i| vectors[i].clone()).collect();
            let bases = match atoms_to_base_set(&atoms, comp.quant_bits) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let eval = exact_evaluate(set, &bases, coding, comp, cfg.tau)?;
            scored.push(Scored {
                trace: CandidateTrace {
                    n_k,
                    restart: index,
                    avg_error: eval.avg_error,
                    diversity: eval.diversity,
                    objective: eval.objective,
                    feasible: eval.avg_error <= cfg.epsilon,
                    base_set: bases,
                },
            });
            index += 1;
        }
    }
    finish_result(scored, cfg.delta_d)
}

fn n_choose_k(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All normalized, deduplicated vectors with entries drawn from `levels`,
/// sorted by their quantized entries for a deterministic enumeration order.
fn grid_unit_vectors(levels: &[f64], d: usize, bits: u32) -> Vec<Vec<f64>> {
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut seen: std::collections::BTreeSet<Vec<u64>> = std::collections::BTreeSet::new();
    let n_levels = levels.len();
    let total = (n_levels as u128).pow(d as u32);
    let mut odo = vec![0usize; d];
    for _ in 0..total {
        let raw: Vec<f64> = odo.iter().map(|&i| levels[i]).collect();
        // advance odometer
        for slot in odo.iter_mut() {
            *slot += 1;
            if *slot < n_levels {
                break;
            }
            *slot = 0;
        }
        let n = norm2(&raw);
        if n == 0.0 {
            continue;
        }
        let unit: Vec<f64> = raw.iter().map(|v| v / n).collect();
        let key: Vec<u64> = unit.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            vectors.push(unit);
        }
    }
    vectors.sort_by_key(|v| quantize_vec(v, bits));
    vectors
}

struct Combinations {
    n: usize,
    indices: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            indices: (0..k).collect(),
            done: k > n || k == 0,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.indices.clone();
        let k = self.indices.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.indices[i] < self.n - (k - i) {
                self.indices[i] += 1;
                for j in (i + 1)..k {
                    self.indices[j] = self.indices[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

struct ExactEval {
    avg_error: f64,
    diversity: f64,
    objective: ObjectiveValue,
}

/// Exact evaluation of a candidate set: per-sample error is the true
/// minimum over every support of size <= s (closed-form least squares per
/// support, solved by Gauss-Jordan elimination independent of the greedy
/// coder's path), and activations come from the optimal codes.
fn exact_evaluate(
    set: &SampleSet,
    bases: &BaseSet,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
    tau: f64,
) -> Result<ExactEval> {
    let s = coding.effective_sparsity(bases.len());
    let supports = enumerate_supports(bases.len(), s);
    let mut total_err = 0.0;
    let mut total_bits = 0.0;
    let mut activations: Vec<Vec<bool>> = Vec::with_capacity(set.len());
    for sample in set.samples() {
        let (code, err) = best_support_fit(sample.values(), bases, &supports, coding.ridge);
        total_err += err / sample.len() as f64;
        total_bits += code.nnz() as f64 * bits_per_nonzero(bases.len(), comp);
        activations.push(activations_for_code(&code, tau));
    }
    let n = set.len() as f64;
    let profile = ActivationProfile::from_activations(activations, tau)?;
    let div = diversity(&profile)?;
    let storage = storage_volume(bases, comp);
    let avg_bits = total_bits / n;
    Ok(ExactEval {
        avg_error: total_err / n,
        diversity: div,
        objective: ObjectiveValue {
            storage_bits: storage,
            avg_representation_bits: avg_bits,
            lambda: comp.lambda,
            total: storage + comp.lambda * avg_bits,
        },
    })
}

/// Supports ordered by (size, lexicographic), so equal-error ties resolve
/// toward fewer atoms and lower indices.
fn enumerate_supports(n: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for size in 1..=s.min(n) {
        out.extend(Combinations::new(n, size));
    }
    out
}

fn best_support_fit(
    x: &[f64],
    bases: &BaseSet,
    supports: &[Vec<usize>],
    ridge: f64,
) -> (crate::signal::Coefficients, f64) {
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let mut best_err = energy;
    let mut best: (Vec<usize>, Vec<f64>) = (vec![], vec![]);
    for support in supports {
        if support.is_empty() {
            continue;
        }
        if let Some(coeffs) = gauss_jordan_ls(x, bases, support, ridge) {
            let mut r = x.to_vec();
            for (&j, &c) in support.iter().zip(&coeffs) {
                for (out, &v) in r.iter_mut().zip(bases.bases()[j].vector()) {
                    *out -= c * v;
                }
            }
            let err: f64 = r.iter().map(|v| v * v).sum();
            if err < best_err {
                best_err = err;
                best = (support.clone(), coeffs);
            }
        }
    }
    let mut entries = std::collections::BTreeMap::new();
    for (&j, &c) in best.0.iter().zip(&best.1) {
        if c != 0.0 {
            entries.insert(j, c);
        }
    }
    let code = crate::signal::Coefficients::new(entries, bases.len(), best_err.max(0.0).sqrt())
        .expect("valid oracle code");
    (code, best_err.max(0.0))
}

/// Normal-equations least squares solved by Gauss-Jordan elimination with
/// partial pivoting. Kept separate from the coder's Cholesky so the oracle
/// exercises an independent numeric path.
fn gauss_jordan_ls(x: &[f64], bases: &BaseSet, support: &[usize], ridge: f64) -> Option<Vec<f64>> {
    let m = support.len();
    let mut a = vec![0.0f64; m * (m + 1)];
    for (r, &jr) in support.iter().enumerate() {
        let vr = bases.bases()[jr].vector();
        for (c, &jc) in support.iter().enumerate() {
            a[r * (m + 1) + c] = dot(vr, bases.bases()[jc].vector());
            if r == c {
                a[r * (m + 1) + c] += ridge;
            }
        }
        a[r * (m + 1) + m] = dot(vr, x);
    }
    for col in 0..m {
        let mut pivot = col;
        for r in (col + 1)..m {
            if a[r * (m + 1) + col].abs() > a[pivot * (m + 1) + col].abs() {
                pivot = r;
            }
        }
        if a[pivot * (m + 1) + col].abs() < 1e-14 {
            return None;
        }
        if pivot != col {
            for c in 0..=m {
                a.swap(pivot * (m + 1) + c, col * (m + 1) + c);
            }
        }
        let diag = a[col * (m + 1) + col];
        for c in 0..=m {
            a[col * (m + 1) + c] /= diag;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let factor = a[r * (m + 1) + col];
            if factor != 0.0 {
                for c in 0..=m {
                    a[r * (m + 1) + c] -= factor * a[col * (m + 1) + c];
                }
            }
        }
    }
    Some((0..m).map(|r| a[r * (m + 1) + m]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::make_signal;

    fn sample_set(vectors: Vec<Vec<f64>>) -> SampleSet {
        let d = vectors[0].len();
        let signals = vectors
            .into_iter()
            .map(|v| make_signal(v, vec![d], "t").unwrap())
            .collect();
        SampleSet::new(signals, 7).unwrap()
    }

    fn base_cfg() -> DecomposeConfig {
        DecomposeConfig {
            epsilon: 1e-9,
            n_range: (2, 2),
            restarts: 4,
            delta_d: 0.01,
            max_iters: 30,
            seed: 11,
            tau: 0.1,
        }
    }

    #[test]
    fn fit_recovers_two_orthogonal_atoms() {
        let set = sample_set(vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, -3.0, 0.0],
            vec![1.5, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let cfg = base_cfg();
        let coding = CodingConfig {
            sparsity: 2,
            ridge: 0.0,
        };
        let bases = fit_candidate(&set, 2, &cfg, &coding).unwrap();
        let err = avg_cognitive_error(&set, &bases, &coding).unwrap();
        assert!(err <= 1e-9, "avg error {err}");
    }

    #[test]
    fn fit_single_base_on_rank_one_corpus() {
        let set = sample_set(vec![vec![3.0, 4.0], vec![1.5, 2.0], vec![6.0, 8.0]]);
        let cfg = base_cfg();
        let bases = fit_candidate(&set, 1, &cfg, &CodingConfig::default()).unwrap();
        let v = bases.base(0).unwrap().vector();
        assert!((v[0].abs() - 0.6).abs() < 1e-9);
        assert!((v[1].abs() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_more_bases_than_samples() {
        let set = sample_set(vec![vec![1.0, 0.0]]);
        let cfg = base_cfg();
        assert!(matches!(
            fit_candidate(&set, 2, &cfg, &CodingConfig::default()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn solve_is_deterministic() {
        let set = sample_set(vec![
            vec![1.0, 0.0, 0.2],
            vec![0.0, 1.0, 0.0],
            vec![0.9, 0.1, 0.0],
            vec![0.0, 0.8, 0.1],
        ]);
        let cfg = DecomposeConfig {
            epsilon: 0.5,
            ..base_cfg()
        };
        let coding = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let comp = ComplexityConfig::default();
        let a = solve(&set, &cfg, &coding, &comp).unwrap();
        let b = solve(&set, &cfg, &coding, &comp).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn solve_single_feasible_candidate_with_zero_band() {
        let set = sample_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let cfg = DecomposeConfig {
            epsilon: 1e-6,
            delta_d: 0.0,
            restarts: 1,
            ..base_cfg()
        };
        let coding = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let res = solve(&set, &cfg, &coding, &ComplexityConfig::default()).unwrap();
        assert!(res.feasible);
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.selected, 0);
    }

    #[test]
    fn infeasible_epsilon_reports_best_error() {
        let set = sample_set(vec![
            vec![1.0, 0.3, 0.1],
            vec![0.2, 1.0, 0.4],
            vec![0.5, 0.5, 1.0],
        ]);
        let cfg = DecomposeConfig {
            epsilon: 1e-30,
            n_range: (2, 2),
            ..base_cfg()
        };
        let coding = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let res = solve(&set, &cfg, &coding, &ComplexityConfig::default()).unwrap();
        assert!(!res.feasible);
        assert!(res.avg_error > 1e-30);
    }

    #[test]
    fn oracle_guard_rejects_large_dims() {
        let set = sample_set(vec![vec![1.0; 5], vec![0.5; 5]]);
        let cfg = base_cfg();
        let err = oracle_decompose(
            &set,
            &cfg,
            &CodingConfig::default(),
            &ComplexityConfig::default(),
            &[-1.0, 0.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::OracleGuard(_)));
    }

    #[test]
    fn oracle_is_reproducible() {
        let set = sample_set(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]);
        let cfg = DecomposeConfig {
            epsilon: 0.3,
            ..base_cfg()
        };
        let coding = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let comp = ComplexityConfig::default();
        let a = oracle_decompose(&set, &cfg, &coding, &comp, &[-1.0, 0.0, 1.0]).unwrap();
        let b = oracle_decompose(&set, &cfg, &coding, &comp, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            serde_json::to_string(&a.base_set).unwrap(),
            serde_json::to_string(&b.base_set).unwrap()
        );
        assert_eq!(a.objective.total, b.objective.total);
    }

    #[test]
    fn oracle_infeasible_path() {
        let set = sample_set(vec![vec![0.3, 0.7], vec![0.9, 0.1], vec![0.5, 0.5]]);
        let cfg = DecomposeConfig {
            epsilon: 1e-30,
            ..base_cfg()
        };
        let coding = CodingConfig {
            sparsity: 1,
            ridge: 0.0,
        };
        let res = oracle_decompose(
            &set,
            &cfg,
            &coding,
            &ComplexityConfig::default(),
            &[-1.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(!res.feasible);
    }

    #[test]
    fn selection_respects_the_band_then_objective() {
        // Hand-built traces: candidate 0 feasible, low diversity, cheap;
        // candidate 1 feasible, max diversity, expensive. Tight band must
        // pick candidate 1; a wide band picks the cheaper candidate 0.
        let atom = |v: &[f64]| crate::signal::normalize_base(v).unwrap();
        let bs1 = BaseSet::new(vec![atom(&[1.0, 0.0]), atom(&[0.0, 1.0])], 16).unwrap();
        let bs2 = BaseSet::new(
            vec![
                atom(&[1.0, 0.0]),
                atom(&[
                    std::f64::consts::FRAC_1_SQRT_2,
                    std::f64::consts::FRAC_1_SQRT_2,
                ]),
            ],
            16,
        )
        .unwrap();
        let mk = |div: f64, total: f64, bs: &BaseSet| CandidateTrace {
            n_k: 2,
            restart: 0,
            avg_error: 0.0,
            diversity: div,
            objective: ObjectiveValue {
                storage_bits: total,
                avg_representation_bits: 0.0,
                lambda: 1.0,
                total,
            },
            feasible: true,
            base_set: bs.clone(),
        };
        let traces = vec![mk(0.1, 10.0, &bs1), mk(0.5, 20.0, &bs2)];
        let (idx, feasible) = select(&traces, 0.01).unwrap();
        assert!(feasible);
        assert_eq!(idx, 1);
        let (idx, _) = select(&traces, 0.9).unwrap();
        assert_eq!(idx, 0);
    }
}
