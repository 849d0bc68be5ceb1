//! Report schemas for the CLI outputs. Every report embeds the full run
//! configuration, the PRNG name and the seed so a run can be replayed from
//! its artifacts alone.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::complexity::ObjectiveValue;
use crate::compose::KnowledgeRecord;
use crate::decompose::DecomposeResult;
use crate::error::Result;
use crate::hierarchy::{DecisionRecord, HierarchyBuild, HierarchyNode};
use crate::io::config::{RunConfig, PRNG_NAME};
use crate::io::corpus::CorpusHeader;
use crate::signal::{BaseSet, SemanticBase};

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// One evaluated candidate, as persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateReport {
    pub n_k: usize,
    pub restart: usize,
    pub avg_error: f64,
    pub diversity: f64,
    pub objective: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub run_config: RunConfig,
    pub prng: String,
    pub seed: u64,
    pub corpus: CorpusHeader,
    pub selected: usize,
    pub n_k: usize,
    pub feasible: bool,
    pub avg_error: f64,
    pub diversity: f64,
    pub objective: ObjectiveValue,
    pub candidates: Vec<CandidateReport>,
    pub generated_unix: u64,
}

impl DecomposeReport {
    pub fn new(cfg: &RunConfig, corpus: &CorpusHeader, result: &DecomposeResult) -> Self {
        Self {
            run_config: cfg.clone(),
            prng: PRNG_NAME.to_string(),
            seed: cfg.seed,
            corpus: corpus.clone(),
            selected: result.selected,
            n_k: result.base_set.len(),
            feasible: result.feasible,
            avg_error: result.avg_error,
            diversity: result.diversity,
            objective: result.objective,
            candidates: result
                .trace
                .iter()
                .map(|t| CandidateReport {
                    n_k: t.n_k,
                    restart: t.restart,
                    avg_error: t.avg_error,
                    diversity: t.diversity,
                    objective: t.objective.total,
                    feasible: t.feasible,
                })
                .collect(),
            generated_unix: now_unix(),
        }
    }
}

/// Persisted base set: full-precision vectors plus labels. Standalone
/// bases.json files carry the run configuration; embedded copies (inside
/// hierarchy reports) leave it out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasesFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<RunConfig>,
    pub prng: String,
    pub seed: u64,
    pub quant_bits: u32,
    pub bases: Vec<BaseEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseEntry {
    pub vector: Vec<f64>,
    pub name: Option<String>,
    pub order: u32,
}

impl BasesFile {
    pub fn from_base_set(set: &BaseSet, seed: u64) -> Self {
        Self {
            run_config: None,
            prng: PRNG_NAME.to_string(),
            seed,
            quant_bits: set.quant_bits(),
            bases: set
                .bases()
                .iter()
                .map(|b| BaseEntry {
                    vector: b.vector().to_vec(),
                    name: b.name().map(str::to_string),
                    order: b.order(),
                })
                .collect(),
        }
    }

    pub fn with_config(mut self, cfg: &RunConfig) -> Self {
        self.run_config = Some(cfg.clone());
        self
    }

    pub fn to_base_set(&self) -> Result<BaseSet> {
        let bases = self
            .bases
            .iter()
            .map(|e| {
                let mut b = SemanticBase::from_unit(e.vector.clone())?.with_order(e.order);
                if let Some(name) = &e.name {
                    b = b.with_name(name.clone());
                }
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        BaseSet::new(bases, self.quant_bits)
    }
}

/// Tree node as exported: order, base identity, label and the accept flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeReport {
    pub order: u32,
    pub base_ref: String,
    pub name: Option<String>,
    pub accepted: bool,
    pub subsample_ids: Vec<u64>,
    pub children: Vec<NodeReport>,
}

fn node_report(node: &HierarchyNode) -> NodeReport {
    NodeReport {
        order: node.base.order(),
        base_ref: node.base.fingerprint(),
        name: node.base.name().map(str::to_string),
        accepted: node.accepted,
        subsample_ids: node.subsample_ids.clone(),
        children: node.children.iter().map(node_report).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub run_config: RunConfig,
    pub prng: String,
    pub seed: u64,
    pub depth: u32,
    pub leaf_count: usize,
    pub nodes: Vec<NodeReport>,
    pub decisions: Vec<DecisionRecord>,
    /// Leaf-set objective after the first-order solve and after every
    /// accepted decomposition.
    pub objective_log: Vec<f64>,
    pub leaf_bases: BasesFile,
    pub generated_unix: u64,
}

impl HierarchyReport {
    pub fn new(cfg: &RunConfig, build: &HierarchyBuild) -> Self {
        Self {
            run_config: cfg.clone(),
            prng: PRNG_NAME.to_string(),
            seed: cfg.seed,
            depth: build.tree.depth(),
            leaf_count: build.tree.leaf_set().len(),
            nodes: build.tree.roots.iter().map(node_report).collect(),
            decisions: build.decisions.clone(),
            objective_log: build.objective_log.clone(),
            leaf_bases: BasesFile::from_base_set(build.tree.leaf_set(), cfg.seed),
            generated_unix: now_unix(),
        }
    }
}

/// Aggregate view of a run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryReport {
    pub prng: String,
    pub seed: u64,
    pub run_config: RunConfig,
    pub avg_error: Option<f64>,
    pub diversity: Option<f64>,
    pub objective: Option<f64>,
    pub feasible: Option<bool>,
    pub hierarchy_depth: Option<u32>,
    pub knowledge_records: usize,
    pub generated_unix: u64,
}

impl SummaryReport {
    pub fn assemble(
        cfg: &RunConfig,
        decompose: Option<&DecomposeReport>,
        hierarchy: Option<&HierarchyReport>,
        knowledge_records: usize,
    ) -> Self {
        Self {
            prng: PRNG_NAME.to_string(),
            seed: cfg.seed,
            run_config: cfg.clone(),
            avg_error: decompose.map(|d| d.avg_error),
            diversity: decompose.map(|d| d.diversity),
            objective: decompose.map(|d| d.objective.total),
            feasible: decompose.map(|d| d.feasible),
            hierarchy_depth: hierarchy.map(|h| h.depth),
            knowledge_records,
            generated_unix: now_unix(),
        }
    }
}

/// Append records to a line-delimited JSON journal; each line is a
/// self-contained record.
pub fn write_journal(path: &Path, records: &[KnowledgeRecord]) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn read_journal(path: &Path) -> Result<Vec<KnowledgeRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    let text = serde_json::to_string_pretty(value)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
