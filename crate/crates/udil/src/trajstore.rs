//! Demonstration data model and file I/O.
//!
//! Demonstrations are state-only: a trajectory is a sequence of state
//! vectors, a demo set is a collection of trajectories from one domain.
//! The on-disk format is UTF-8 JSON Lines: line 1 is a header object
//! (`version`, `domain_name`, `dim`, `generator_seed`), each following line
//! is one trajectory as an array of arrays of numbers. States are stored as
//! decimal text; `read_demo_set(write_demo_set(d)) == d` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observed state: an ordered list of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    /// Validates finiteness and non-emptiness.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("state vector must be non-empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "state vector contains non-finite value {v}"
            )));
        }
        Ok(StateVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for StateVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// A state-only trajectory; all states share one dimension, length >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::validation(format!(
                "trajectory needs at least 2 states, got {}",
                states.len()
            )));
        }
        let dim = states[0].dim();
        for (i, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::dim(dim, s.dim(), format!("state {i} of trajectory")));
            }
        }
        Ok(Trajectory { states })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: length >= 2
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory is non-empty")
    }
}

/// A set of expert trajectories plus domain metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub domain_name: String,
    pub generator_seed: i64,
    dim: usize,
    trajectories: Vec<Trajectory>,
}

impl DemoSet {
    pub fn new(
        domain_name: impl Into<String>,
        generator_seed: i64,
        trajectories: Vec<Trajectory>,
    ) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::validation("demo set must contain trajectories"));
        }
        let dim = trajectories[0].dim();
        for (i, t) in trajectories.iter().enumerate() {
            if t.dim() != dim {
                return Err(Error::dim(dim, t.dim(), format!("trajectory {i}")));
            }
        }
        Ok(DemoSet {
            domain_name: domain_name.into(),
            generator_seed,
            dim,
            trajectories,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn n_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    /// Total number of individual states across all trajectories.
    pub fn n_states(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }

    /// Iterator over every individual state, trajectory order.
    pub fn states(&self) -> impl Iterator<Item = &StateVector> {
        self.trajectories.iter().flat_map(|t| t.states().iter())
    }
}

/// An ordered state pair (s, s').
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: StateVector,
    pub to: StateVector,
}

impl Transition {
    pub fn new(from: StateVector, to: StateVector) -> Result<Self> {
        if from.dim() != to.dim() {
            return Err(Error::dim(from.dim(), to.dim(), "transition endpoints"));
        }
        Ok(Transition { from, to })
    }
}

/// Origin of a transition in the mutual-information construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionLabel {
    Expert,
    PseudoRandom,
}

/// A transition tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTransition {
    pub transition: Transition,
    pub label: TransitionLabel,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    domain_name: String,
    dim: usize,
    generator_seed: i64,
}

const FORMAT_VERSION: u32 = 1;

/// Writes a demo set in the JSONL format described in the module docs.
pub fn write_demo_set(path: impl AsRef<Path>, demos: &DemoSet) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let header = Header {
        version: FORMAT_VERSION,
        domain_name: demos.domain_name.clone(),
        dim: demos.dim,
        generator_seed: demos.generator_seed,
    };
    let header_json =
        serde_json::to_string(&header).map_err(|e| Error::validation(e.to_string()))?;
    writeln!(w, "{header_json}")?;
    for traj in &demos.trajectories {
        let line =
            serde_json::to_string(traj.states()).map_err(|e| Error::validation(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a demo set, reporting the 1-based line number on malformed input.
pub fn read_demo_set(path: impl AsRef<Path>) -> Result<DemoSet> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file, expected header"))?;
    let header_line = header_line?;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| Error::parse(1, format!("bad header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::parse(
            1,
            format!("unsupported version {}", header.version),
        ));
    }

    let mut trajectories = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.is_empty() {
            // Tolerate one trailing newline; lines() already strips it, so
            // an empty string only appears on explicit blank lines.
            continue;
        }
        let raw: Vec<Vec<f64>> = serde_json::from_str(&line)
            .map_err(|e| Error::parse(lineno, format!("bad trajectory: {e}")))?;
        let mut states = Vec::with_capacity(raw.len());
        for vals in raw {
            if vals.len() != header.dim {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "state of length {} does not match header dim {}",
                        vals.len(),
                        header.dim
                    ),
                ));
            }
            states.push(
                StateVector::new(vals).map_err(|e| Error::parse(lineno, format!("{e}")))?,
            );
        }
        trajectories
            .push(Trajectory::new(states).map_err(|e| Error::parse(lineno, format!("{e}")))?);
    }

    if trajectories.is_empty() {
        return Err(Error::parse(1, "file contains a header but no trajectories"));
    }
    DemoSet::new(header.domain_name, header.generator_seed, trajectories)
}

/// Extracts all frameskipped transitions (s_t, s_{t+k}), sliding window with
/// stride 1, concatenated in trajectory order. Each trajectory of length n
/// contributes exactly n - k pairs.
pub fn extract_transitions(demos: &DemoSet, frameskip: usize) -> Result<Vec<Transition>> {
    if frameskip == 0 {
        return Err(Error::config("frameskip must be >= 1"));
    }
    for (i, traj) in demos.trajectories.iter().enumerate() {
        if traj.len() <= frameskip {
            return Err(Error::validation(format!(
                "trajectory {i} has length {} <= frameskip {frameskip}",
                traj.len()
            )));
        }
    }
    let mut out = Vec::new();
    for traj in &demos.trajectories {
        let states = traj.states();
        for t in 0..states.len() - frameskip {
            out.push(Transition {
                from: states[t].clone(),
                to: states[t + frameskip].clone(),
            });
        }
    }
    Ok(out)
}

/// Tags every transition with the same label.
pub fn label_transitions(
    transitions: Vec<Transition>,
    label: TransitionLabel,
) -> Vec<LabeledTransition> {
    transitions
        .into_iter()
        .map(|transition| LabeledTransition { transition, label })
        .collect()
}
