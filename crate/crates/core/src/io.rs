//! Instance and plan file formats.
//!
//! Both are JSON documents. Beam indices in files are 1-based and
//! neighbour lists may be one-directional (each edge listed once, under its
//! lower-numbered beam); loading symmetrizes them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{validate_instance, CycleConfig, Instance, Pattern, Plan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleFile {
    #[serde(default = "default_sf")]
    pub sf_ms: f64,
    #[serde(default = "default_slots")]
    pub slots: u32,
    #[serde(default = "default_sf")]
    pub min_granularity_ms: f64,
    #[serde(default)]
    pub switching_ms: f64,
}

fn default_sf() -> f64 {
    CycleConfig::DEFAULT_SF_MS
}

fn default_slots() -> u32 {
    CycleConfig::DEFAULT_SLOTS
}

impl Default for CycleFile {
    fn default() -> Self {
        CycleConfig::default().into()
    }
}

impl From<CycleConfig> for CycleFile {
    fn from(c: CycleConfig) -> Self {
        Self {
            sf_ms: c.sf_duration_ms,
            slots: c.slots_per_cycle,
            min_granularity_ms: c.min_granularity_ms,
            switching_ms: c.switching_time_ms,
        }
    }
}

impl TryFrom<CycleFile> for CycleConfig {
    type Error = ModelError;

    fn try_from(c: CycleFile) -> Result<Self, ModelError> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(ModelError::Field {
                    field,
                    message: format!("must be positive, got {v}"),
                })
            }
        };
        if !(c.switching_ms.is_finite() && c.switching_ms >= 0.0) {
            return Err(ModelError::Field {
                field: "cycle.switching_ms",
                message: format!("must be non-negative, got {}", c.switching_ms),
            });
        }
        if c.slots == 0 {
            return Err(ModelError::Field {
                field: "cycle.slots",
                message: "must be positive".into(),
            });
        }
        Ok(CycleConfig {
            sf_duration_ms: positive("cycle.sf_ms", c.sf_ms)?,
            slots_per_cycle: c.slots,
            min_granularity_ms: positive("cycle.min_granularity_ms", c.min_granularity_ms)?,
            switching_time_ms: c.switching_ms,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n_beams: usize,
    pub demands: Vec<u64>,
    #[serde(default)]
    pub neighbours: Vec<Vec<usize>>,
    #[serde(default)]
    pub cycle: CycleFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let n = self.n_beams;
        if self.demands.len() != n {
            return Err(ModelError::Field {
                field: "demands",
                message: format!("expected {n} entries, found {}", self.demands.len()),
            });
        }
        if self.neighbours.len() > n {
            return Err(ModelError::Field {
                field: "neighbours",
                message: format!("{} lists for {n} beams", self.neighbours.len()),
            });
        }
        let mut adjacency = vec![BTreeSet::new(); n];
        for (b, list) in self.neighbours.iter().enumerate() {
            for &other in list {
                if other == 0 || other > n {
                    return Err(ModelError::Field {
                        field: "neighbours",
                        message: format!("list {} names beam {other}, expected 1..={n}", b + 1),
                    });
                }
                adjacency[b].insert(other - 1);
                adjacency[other - 1].insert(b);
            }
        }
        let inst = Instance {
            n_beams: n,
            demands: self.demands,
            adjacency,
            cycle: self.cycle.try_into()?,
            metadata: self.metadata,
        };
        let report = validate_instance(&inst);
        if report.is_ok() {
            Ok(inst)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let mut neighbours: Vec<Vec<usize>> = inst
            .adjacency
            .iter()
            .enumerate()
            .map(|(b, nb)| nb.iter().filter(|&&o| o > b).map(|&o| o + 1).collect())
            .collect();
        while neighbours.last().is_some_and(Vec::is_empty) {
            neighbours.pop();
        }
        Self {
            n_beams: inst.n_beams,
            demands: inst.demands.clone(),
            neighbours,
            cycle: inst.cycle.into(),
            metadata: inst.metadata.clone(),
        }
    }
}

pub fn load_instance(bytes: &[u8]) -> Result<Instance, ModelError> {
    let file: InstanceFile = serde_json::from_slice(bytes)?;
    file.into_instance()
}

pub fn save_instance(inst: &Instance) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&InstanceFile::from_instance(inst))
        .expect("instance serialization is infallible");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    pub beams: Vec<usize>,
    pub weight: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub patterns: Vec<PatternFile>,
    #[serde(default)]
    pub cycle: CycleFile,
}

impl PlanFile {
    pub fn from_plan(plan: &Plan) -> Self {
        Self {
            patterns: plan
                .patterns
                .iter()
                .map(|p| PatternFile {
                    beams: p.beams().iter().map(|b| b + 1).collect(),
                    weight: p.weight(),
                })
                .collect(),
            cycle: plan.cycle.into(),
        }
    }

    pub fn into_plan(self) -> Result<Plan, ModelError> {
        let mut patterns = Vec::with_capacity(self.patterns.len());
        for p in self.patterns {
            if p.beams.contains(&0) {
                return Err(ModelError::Field {
                    field: "patterns.beams",
                    message: "beam indices are 1-based".into(),
                });
            }
            patterns.push(Pattern::new(p.beams.into_iter().map(|b| b - 1), p.weight)?);
        }
        Ok(Plan::new(patterns, self.cycle.try_into()?))
    }
}

pub fn load_plan(bytes: &[u8]) -> Result<Plan, ModelError> {
    let file: PlanFile = serde_json::from_slice(bytes)?;
    file.into_plan()
}

pub fn save_plan(plan: &Plan) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&PlanFile::from_plan(plan))
        .expect("plan serialization is infallible");
    out.push(b'\n');
    out
}
