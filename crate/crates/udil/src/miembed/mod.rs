//! Task-relevant embedding discovery from demonstrations alone.
//!
//! Pipeline: assemble expert transitions and an equally sized pseudo-random
//! transition set, estimate the mutual information between each state
//! dimension's transition pair and the expert/random label with a kNN
//! estimator, sort dimensions by score, and keep the prefix up to the elbow
//! of the cumulative curve. The selected dimensions define a projection of
//! the expert state.

mod estimator;
mod selection;

pub use estimator::{estimate_dim_mi, DEFAULT_K_NEIGHBORS};
pub use selection::{
    cumulative_mi_curve, find_elbow, select_embedding, CumulativeCurve, Elbow,
};

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajstore::{
    extract_transitions, label_transitions, DemoSet, LabeledTransition, StateVector, Transition,
    TransitionLabel,
};

/// Frameskip used when assembling transitions for MI estimation.
pub const DEFAULT_FRAMESKIP: usize = 15;

/// Per-dimension mutual information scores (nats, clamped at 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    /// (dimension index, MI in nats), one entry per state dimension.
    pub per_dim_mi: Vec<(usize, f64)>,
    pub sample_count: usize,
    pub k_neighbors: usize,
}

/// The task-relevant embedding: an ordered set of retained dimensions plus
/// the evidence that selected them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    /// Retained dimension indices, descending MI order.
    pub selected_dims: Vec<usize>,
    pub elbow_index: usize,
    /// Set when the cumulative curve was constant and the elbow fell back
    /// to index 0.
    pub degenerate: bool,
    pub source_report: MiReport,
}

impl EmbeddingSpec {
    /// Identity embedding over `dim` dimensions (the "no reduction"
    /// ablation).
    pub fn identity(dim: usize) -> Self {
        EmbeddingSpec {
            selected_dims: (0..dim).collect(),
            elbow_index: dim.saturating_sub(1),
            degenerate: false,
            source_report: MiReport {
                per_dim_mi: (0..dim).map(|d| (d, 0.0)).collect(),
                sample_count: 0,
                k_neighbors: 0,
            },
        }
    }

    /// Embedding with explicitly chosen dimensions (ablation override).
    pub fn from_dims(selected_dims: Vec<usize>) -> Result<Self> {
        if selected_dims.is_empty() {
            return Err(Error::validation("embedding needs at least one dimension"));
        }
        let mut seen = std::collections::HashSet::new();
        for &d in &selected_dims {
            if !seen.insert(d) {
                return Err(Error::validation(format!("duplicate dimension {d}")));
            }
        }
        let per_dim_mi = selected_dims.iter().map(|&d| (d, 0.0)).collect();
        Ok(EmbeddingSpec {
            elbow_index: selected_dims.len() - 1,
            degenerate: false,
            source_report: MiReport {
                per_dim_mi,
                sample_count: 0,
                k_neighbors: 0,
            },
            selected_dims,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.selected_dims.len()
    }

    /// Projects a state onto the selected dimensions, in listed order.
    pub fn project(&self, s: &StateVector) -> Result<StateVector> {
        apply_embedding(self, s)
    }

    /// Projects both endpoints of a transition.
    pub fn project_pair(&self, t: &Transition) -> Result<(StateVector, StateVector)> {
        Ok((self.project(&t.from)?, self.project(&t.to)?))
    }
}

/// Generates `count` pseudo-random transitions: both endpoints drawn
/// independently and uniformly (with replacement) from the multiset of all
/// individual states in the demos.
pub fn generate_pseudo_random_transitions(
    demos: &DemoSet,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<LabeledTransition>> {
    if count == 0 {
        return Err(Error::config("count must be >= 1"));
    }
    let states: Vec<&StateVector> = demos.states().collect();
    if states.is_empty() {
        return Err(Error::validation("demo set has no states"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.gen_range(0..states.len());
        let j = rng.gen_range(0..states.len());
        out.push(LabeledTransition {
            transition: Transition {
                from: states[i].clone(),
                to: states[j].clone(),
            },
            label: TransitionLabel::PseudoRandom,
        });
    }
    Ok(out)
}

/// Builds the per-dimension MI report: expert transitions at `frameskip`,
/// an equally sized pseudo-random set, kNN MI per dimension on the pooled
/// labeled samples.
pub fn build_mi_report(
    demos: &DemoSet,
    frameskip: usize,
    k_neighbors: usize,
    rng_seed: u64,
) -> Result<MiReport> {
    let expert = extract_transitions(demos, frameskip)?;
    let n_expert = expert.len();
    let mut samples = label_transitions(expert, TransitionLabel::Expert);
    samples.extend(generate_pseudo_random_transitions(demos, n_expert, rng_seed)?);

    let mut per_dim_mi = Vec::with_capacity(demos.dim());
    for dim in 0..demos.dim() {
        let mi = estimate_dim_mi(&samples, dim, k_neighbors)?;
        per_dim_mi.push((dim, mi));
    }
    Ok(MiReport {
        per_dim_mi,
        sample_count: samples.len(),
        k_neighbors,
    })
}

/// Projection of `s` onto the spec's selected dimensions, in listed order.
pub fn apply_embedding(spec: &EmbeddingSpec, s: &StateVector) -> Result<StateVector> {
    let needed = spec.selected_dims.iter().copied().max().unwrap_or(0) + 1;
    if s.dim() < needed {
        return Err(Error::dim(needed, s.dim(), "embedding input"));
    }
    StateVector::new(spec.selected_dims.iter().map(|&d| s[d]).collect())
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    version: u32,
    selected_dims: Vec<usize>,
    elbow_index: usize,
    per_dim_mi: Vec<(usize, f64)>,
    frameskip: usize,
    k_neighbors: usize,
    rng_seed: u64,
}

/// Provenance stored alongside an embedding spec on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingMeta {
    pub frameskip: usize,
    pub rng_seed: u64,
}

/// Writes the embedding spec as a single JSON object.
pub fn write_embedding_spec(
    path: impl AsRef<Path>,
    spec: &EmbeddingSpec,
    meta: EmbeddingMeta,
) -> Result<()> {
    let file = EmbeddingFile {
        version: 1,
        selected_dims: spec.selected_dims.clone(),
        elbow_index: spec.elbow_index,
        per_dim_mi: spec.source_report.per_dim_mi.clone(),
        frameskip: meta.frameskip,
        k_neighbors: spec.source_report.k_neighbors,
        rng_seed: meta.rng_seed,
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::validation(e.to_string()))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Reads an embedding spec. The report's `sample_count` is not part of the
/// file format and comes back as 0.
pub fn read_embedding_spec(path: impl AsRef<Path>) -> Result<(EmbeddingSpec, EmbeddingMeta)> {
    let text = std::fs::read_to_string(path)?;
    let file: EmbeddingFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(0, format!("bad embedding: {e}")))?;
    if file.version != 1 {
        return Err(Error::parse(0, format!("unsupported version {}", file.version)));
    }
    if file.selected_dims.is_empty() {
        return Err(Error::validation("embedding file selects no dimensions"));
    }
    let report = MiReport {
        per_dim_mi: file.per_dim_mi,
        sample_count: 0,
        k_neighbors: file.k_neighbors,
    };
    // degenerate flag is recomputed from the stored scores when possible
    let degenerate = if report.per_dim_mi.len() >= 3 {
        cumulative_mi_curve(&report)
            .ok()
            .and_then(|c| find_elbow(&c).ok())
            .map(|e| e.degenerate)
            .unwrap_or(false)
    } else {
        false
    };
    Ok((
        EmbeddingSpec {
            selected_dims: file.selected_dims,
            elbow_index: file.elbow_index,
            degenerate,
            source_report: report,
        },
        EmbeddingMeta {
            frameskip: file.frameskip,
            rng_seed: file.rng_seed,
        },
    ))
}
