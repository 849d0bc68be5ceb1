//! Iterated decomposition into higher-order bases. A leaf base is
//! decomposed over the subsample of signals that activate it alone; the
//! replacement is kept only when the storage-plus-representation objective
//! of the working leaf set strictly improves on the full corpus. Child
//! bases that coincide (after quantization) with bases already in the leaf
//! set merge with them, which is where replacements earn their keep.

use serde::{Deserialize, Serialize};

use crate::coding::CodingConfig;
use crate::complexity::{objective, ComplexityConfig};
use crate::decompose::{solve, DecomposeConfig, DecomposeResult};
use crate::error::{Error, Result};
use crate::signal::{BaseSet, Coefficients, SampleSet, SemanticBase, Signal};
use crate::statistics::activations_for_code;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Sole-dominance threshold for subsampling: a sample matches a base
    /// when that base is its only activation at tau = rho.
    pub rho: f64,
    /// Minimum subsample size before a node decomposition is attempted.
    pub min_subsample: usize,
    /// Hard stop on hierarchy order.
    pub depth_cap: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            rho: 0.9,
            min_subsample: 8,
            depth_cap: 4,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig("rho must lie in (0, 1]".into()));
        }
        if self.min_subsample == 0 {
            return Err(Error::InvalidConfig("min_subsample must be >= 1".into()));
        }
        if self.depth_cap == 0 {
            return Err(Error::InvalidConfig("depth_cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub base: SemanticBase,
    pub children: Vec<HierarchyNode>,
    /// Ids of the samples that matched only this base when it was
    /// decomposed (empty until then).
    pub subsample_ids: Vec<u64>,
    pub accepted: bool,
}

impl HierarchyNode {
    fn leaf(base: SemanticBase) -> Self {
        Self {
            base,
            children: Vec::new(),
            subsample_ids: Vec::new(),
            accepted: false,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyTree {
    pub roots: Vec<HierarchyNode>,
    leaf_set: BaseSet,
    depth_cap: usize,
}

impl HierarchyTree {
    /// Working base set: the tree's leaf bases in depth-first order,
    /// deduplicated by quantized equality (merged children keep the first
    /// occurrence).
    pub fn leaf_set(&self) -> &BaseSet {
        &self.leaf_set
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    /// Highest order present in the tree.
    pub fn depth(&self) -> u32 {
        fn walk(node: &HierarchyNode) -> u32 {
            node.children
                .iter()
                .map(walk)
                .max()
                .unwrap_or(node.base.order())
        }
        self.roots.iter().map(walk).max().unwrap_or(0)
    }

    fn node(&self, path: &[usize]) -> Result<&HierarchyNode> {
        let (&first, rest) = path.split_first().ok_or(Error::NotALeaf { path: vec![] })?;
        let mut node = self.roots.get(first).ok_or(Error::IndexOutOfRange {
            index: first,
            len: self.roots.len(),
        })?;
        for &idx in rest {
            node = node.children.get(idx).ok_or(Error::IndexOutOfRange {
                index: idx,
                len: node.children.len(),
            })?;
        }
        Ok(node)
    }

    fn node_mut(&mut self, path: &[usize]) -> Result<&mut HierarchyNode> {
        let (&first, rest) = path.split_first().ok_or(Error::NotALeaf { path: vec![] })?;
        let mut node = self.roots.get_mut(first).ok_or(Error::IndexOutOfRange {
            index: first,
            len: 0,
        })?;
        for &idx in rest {
            node = node
                .children
                .get_mut(idx)
                .ok_or(Error::IndexOutOfRange { index: idx, len: 0 })?;
        }
        Ok(node)
    }

    fn leaf_bases(&self) -> Vec<SemanticBase> {
        fn walk(node: &HierarchyNode, out: &mut Vec<SemanticBase>) {
            if node.is_leaf() {
                out.push(node.base.clone());
            } else {
                for c in &node.children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        for r in &self.roots {
            walk(r, &mut out);
        }
        out
    }

    /// Structural audit: the stored working set must equal the
    /// deduplicated leaf bases of the tree.
    pub fn leaf_set_is_consistent(&self) -> bool {
        match dedup_base_set(self.leaf_bases(), self.leaf_set.quant_bits()) {
            Ok(rebuilt) => {
                rebuilt.len() == self.leaf_set.len()
                    && rebuilt.quantized_key() == self.leaf_set.quantized_key()
            }
            Err(_) => false,
        }
    }
}

fn dedup_base_set(bases: Vec<SemanticBase>, bits: u32) -> Result<BaseSet> {
    let mut kept: Vec<SemanticBase> = Vec::new();
    let mut keys: Vec<Vec<u32>> = Vec::new();
    for b in bases {
        let key = b.quantized(bits);
        if !keys.contains(&key) {
            keys.push(key);
            kept.push(b);
        }
    }
    BaseSet::new(kept, bits)
}

/// Samples whose encoding activates base `index` and no other base, under
/// the activation rule at tau = rho. Returns `None` when nothing matches:
/// an empty match is a legitimate outcome but a sample set must hold at
/// least one signal.
pub fn subsample_for_base(
    set: &SampleSet,
    bases: &BaseSet,
    index: usize,
    coding: &CodingConfig,
    rho: f64,
) -> Result<Option<SampleSet>> {
    if index >= bases.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: bases.len(),
        });
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidConfig("rho must lie in (0, 1]".into()));
    }
    let mut matched = Vec::new();
    for sample in set.samples() {
        let code = crate::coding::encode(sample, bases, coding)?;
        let row = activations_for_code(&code, rho);
        let sole = row[index] && row.iter().enumerate().all(|(j, &a)| j == index || !a);
        if sole {
            matched.push(sample.clone());
        }
    }
    if matched.is_empty() {
        Ok(None)
    } else {
        Ok(Some(SampleSet::new(matched, set.seed())?))
    }
}

/// Outcome of one attempted node decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub path: Vec<usize>,
    pub subsample_len: usize,
    pub before_objective: f64,
    pub after_objective: Option<f64>,
    pub accepted: bool,
    pub reason: Option<String>,
}

fn mix_path_seed(seed: u64, path: &[usize]) -> u64 {
    let mut z = seed;
    for &p in path {
        z ^= (p as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Attempt to decompose the leaf at `path`: solve over its sole-activation
/// subsample, splice the children into the working leaf set (merging
/// quantized duplicates), and accept only a strict objective improvement
/// on the full corpus. The tree mutates only on acceptance; before/after
/// objectives are always reported.
pub fn try_decompose_node(
    tree: &mut HierarchyTree,
    path: &[usize],
    set: &SampleSet,
    decomp: &DecomposeConfig,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
    hier: &HierarchyConfig,
) -> Result<DecisionRecord> {
    hier.validate()?;
    let node = tree.node(path)?;
    if !node.is_leaf() {
        return Err(Error::NotALeaf {
            path: path.to_vec(),
        });
    }
    let parent_order = node.base.order();
    let node_key = node.base.quantized(tree.leaf_set.quant_bits());

    let before = objective(set, tree.leaf_set(), coding, comp)?;
    let mut record = DecisionRecord {
        path: path.to_vec(),
        subsample_len: 0,
        before_objective: before.total,
        after_objective: None,
        accepted: false,
        reason: None,
    };

    // Locate this base inside the (deduplicated) working set.
    let leaf_index = tree
        .leaf_set
        .bases()
        .iter()
        .position(|b| b.quantized(tree.leaf_set.quant_bits()) == node_key)
        .ok_or_else(|| Error::InvalidConfig("leaf base missing from working set".into()))?;

    let subsample = match subsample_for_base(set, tree.leaf_set(), leaf_index, coding, hier.rho)? {
        Some(s) => s,
        None => {
            record.reason = Some("subsample empty".into());
            return Ok(record);
        }
    };
    record.subsample_len = subsample.len();
    if subsample.len() < hier.min_subsample {
        record.reason = Some(format!(
            "subsample too small ({} < {})",
            subsample.len(),
            hier.min_subsample
        ));
        return Ok(record);
    }

    let mut child_cfg = decomp.clone();
    child_cfg.seed = mix_path_seed(decomp.seed, path);
    let child_result = solve(&subsample, &child_cfg, coding, comp)?;
    if !child_result.feasible {
        record.reason = Some("child decomposition infeasible on subsample".into());
        return Ok(record);
    }

    let children: Vec<SemanticBase> = child_result
        .base_set
        .bases()
        .iter()
        .map(|b| b.clone().with_order(parent_order + 1))
        .collect();

    // Candidate working set: leaves in tree order with this node's base
    // replaced by its children, then deduplicated.
    let mut replaced = Vec::new();
    collect_with_replacement(&tree.roots, path, &[], &children, &mut replaced);
    let candidate = match dedup_base_set(replaced, tree.leaf_set.quant_bits()) {
        Ok(c) => c,
        Err(e) => {
            record.reason = Some(format!("replacement set invalid: {e}"));
            return Ok(record);
        }
    };

    let after = objective(set, &candidate, coding, comp)?;
    record.after_objective = Some(after.total);
    if after.total < before.total {
        record.accepted = true;
        let subsample_ids: Vec<u64> = subsample.samples().iter().map(Signal::id).collect();
        let node = tree.node_mut(path)?;
        node.children = children.into_iter().map(HierarchyNode::leaf).collect();
        node.subsample_ids = subsample_ids;
        node.accepted = true;
        tree.leaf_set = candidate;
        debug_assert!(tree.leaf_set_is_consistent());
    } else {
        record.reason = Some("objective did not improve".into());
    }
    Ok(record)
}

fn collect_with_replacement(
    nodes: &[HierarchyNode],
    target: &[usize],
    prefix: &[usize],
    children: &[SemanticBase],
    out: &mut Vec<SemanticBase>,
) {
    for (i, node) in nodes.iter().enumerate() {
        let mut path = prefix.to_vec();
        path.push(i);
        if node.is_leaf() {
            if path == target {
                out.extend(children.iter().cloned());
            } else {
                out.push(node.base.clone());
            }
        } else {
            collect_with_replacement(&node.children, target, &path, children, out);
        }
    }
}

/// Full hierarchy build: first-order roots from the bi-level solver, then
/// breadth-first decomposition attempts over the leaves in deterministic
/// order until nothing accepts or the depth cap is reached.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyBuild {
    pub tree: HierarchyTree,
    pub first_order: DecomposeResult,
    pub decisions: Vec<DecisionRecord>,
    /// Leaf-set objective after the initial solve and after every
    /// accepted decomposition; strictly decreasing by construction.
    pub objective_log: Vec<f64>,
}

pub fn build_hierarchy(
    set: &SampleSet,
    decomp: &DecomposeConfig,
    coding: &CodingConfig,
    comp: &ComplexityConfig,
    hier: &HierarchyConfig,
) -> Result<HierarchyBuild> {
    hier.validate()?;
    let first_order = solve(set, decomp, coding, comp)?;
    let roots: Vec<HierarchyNode> = first_order
        .base_set
        .bases()
        .iter()
        .map(|b| HierarchyNode::leaf(b.clone().with_order(1)))
        .collect();
    let leaf_set = dedup_base_set(
        roots.iter().map(|n| n.base.clone()).collect(),
        comp.quant_bits,
    )?;
    let mut tree = HierarchyTree {
        roots,
        leaf_set,
        depth_cap: hier.depth_cap,
    };

    let initial = objective(set, tree.leaf_set(), coding, comp)?;
    let mut objective_log = vec![initial.total];
    let mut decisions = Vec::new();

    let mut queue: std::collections::VecDeque<Vec<usize>> =
        (0..tree.roots.len()).map(|i| vec![i]).collect();
    while let Some(path) = queue.pop_front() {
        let node = tree.node(&path)?;
        if !node.is_leaf() {
            continue;
        }
        if node.base.order() as usize >= hier.depth_cap {
            continue;
        }
        let record = try_decompose_node(&mut tree, &path, set, decomp, coding, comp, hier)?;
        let accepted = record.accepted;
        if accepted {
            objective_log.push(record.after_objective.expect("accepted records carry it"));
            let n_children = tree.node(&path)?.children.len();
            for c in 0..n_children {
                let mut child_path = path.clone();
                child_path.push(c);
                queue.push_back(child_path);
            }
        }
        decisions.push(record);
    }

    Ok(HierarchyBuild {
        tree,
        first_order,
        decisions,
        objective_log,
    })
}

/// Encode a signal against the tree's working leaf set. Contract identical
/// to [`crate::coding::encode`].
pub fn hierarchy_encode(
    x: &Signal,
    tree: &HierarchyTree,
    coding: &CodingConfig,
) -> Result<Coefficients> {
    crate::coding::encode(x, tree.leaf_set(), coding)
}
